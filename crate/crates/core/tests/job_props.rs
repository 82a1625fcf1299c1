use proptest::prelude::*;
use serde_json::{json, Value};

use crossfield::export::{canonical_json_value, fmt_g};
use crossfield::job::{run_job, JobRequest, JobStatus};

#[test]
fn fmt_g_matches_printf_vectors() {
    let cases = [
        (0.1, "0.1"),
        (1e-5, "1e-05"),
        (123456789012345.0, "1.23456789012e+14"),
        (100000.0, "100000"),
        (0.0001, "0.0001"),
        (1.0 / 3.0, "0.333333333333"),
        (2.0 / 3.0, "0.666666666667"),
        (-2.5, "-2.5"),
        (1e12, "1e+12"),
        (999999999999.5, "1e+12"),
        (1e-300, "1e-300"),
        (1234.56789012345, "1234.56789012"),
        (-0.00012345678901234, "-0.000123456789012"),
        (0.0, "0"),
    ];
    for (x, s) in cases {
        assert_eq!(fmt_g(x), s, "{x:e}");
    }
}

#[test]
fn canonical_json_sorts_nested_keys() {
    let v = json!({"b": [{"z": 1, "a": 2.5}], "a": {"y": true, "x": null}});
    assert_eq!(canonical_json_value(&v), r#"{"a":{"x":null,"y":true},"b":[{"a":2.5,"z":1}]}"#);
}

#[test]
fn request_id_ignores_key_order_and_whitespace() {
    let a = r#"{"op":"check","mesh":{"preset":"disk:1","h":0.2},"holes":[{"center":[0,0],"radius":0.1,"degree":4}]}"#;
    let b = r#"{ "holes": [ {"degree": 4, "radius": 0.1, "center": [0, 0]} ],
                 "mesh": {"h": 0.2, "preset": "disk:1"}, "op": "check" }"#;
    let ra: JobRequest = serde_json::from_str(a).unwrap();
    let rb: JobRequest = serde_json::from_str(b).unwrap();
    assert_eq!(ra.id().unwrap(), rb.id().unwrap());
    let rc: JobRequest = serde_json::from_str(&a.replace("0.1,", "0.11,")).unwrap();
    assert_ne!(ra.id().unwrap(), rc.id().unwrap());
}

#[test]
fn field_svg_draws_four_strokes_per_site() {
    let req: JobRequest = serde_json::from_value(json!({
        "op": "solve",
        "mesh": {"preset": "disk:1", "h": 0.2},
        "holes": [{"center": [0.3, 0.0], "radius": 0.12, "degree": 2}, {"center": [-0.3, 0.0], "radius": 0.12, "degree": 2}],
        "space": "CR",
        "outputs": {"field": true, "svg": true}
    }))
    .unwrap();
    let r = run_job(&req).unwrap();
    assert_eq!(r.status, JobStatus::Ok);
    let svg = r.svg.clone().unwrap();
    let crosses = svg.split("<g id=\"crosses\"").nth(1).unwrap().split("</g>").next().unwrap();
    let sites = r.body["field"]["values"].as_array().unwrap();
    let drawn = sites
        .iter()
        .filter(|u| u[0].as_f64().unwrap().hypot(u[1].as_f64().unwrap()) > 1e-12)
        .count();
    assert!(drawn > 0);
    assert_eq!(crosses.matches("<line ").count(), 4 * drawn);
    let again = run_job(&req).unwrap();
    assert_eq!(again.canonical(), r.canonical());
    assert_eq!(again.svg.unwrap(), svg);
}

fn json_leaf() -> impl Strategy<Value = Value> {
    prop_oneof![
        Just(Value::Null),
        any::<bool>().prop_map(Value::Bool),
        any::<i32>().prop_map(|i| json!(i)),
        "[a-z]{0,6}".prop_map(Value::String),
    ]
}

fn json_tree() -> impl Strategy<Value = Value> {
    json_leaf().prop_recursive(3, 32, 5, |inner| {
        prop_oneof![
            proptest::collection::vec(inner.clone(), 0..5).prop_map(Value::Array),
            proptest::collection::btree_map("[a-z]{1,4}", inner, 0..5)
                .prop_map(|m| Value::Object(m.into_iter().collect())),
        ]
    })
}

proptest! {
    #[test]
    fn fmt_g_roundtrips_to_twelve_digits(x in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL) {
        let s = fmt_g(x);
        let back: f64 = s.parse().unwrap();
        prop_assert!((back - x).abs() <= 5e-12 * x.abs(), "{x:e} -> {s}");
        let digits = s.split(['e', 'E']).next().unwrap().chars().filter(|c| c.is_ascii_digit()).collect::<String>();
        prop_assert!(digits.trim_start_matches('0').len() <= 12, "{s}");
    }

    #[test]
    fn canonical_json_matches_sorted_compact_output(v in json_tree()) {
        // serde_json's default map is a BTreeMap, so its compact output is already key-sorted
        let s = canonical_json_value(&v);
        prop_assert_eq!(&s, &serde_json::to_string(&v).unwrap());
        let back: Value = serde_json::from_str(&s).unwrap();
        prop_assert_eq!(back, v);
    }
}
