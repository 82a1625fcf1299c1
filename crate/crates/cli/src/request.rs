//! Request documents shared by the command line and the HTTP service.

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use crossfield::job::JobRequest;

use crate::error::{AppError, FieldError, Result};

/// Operation names and the HTTP paths that accept them.
pub const OPERATIONS: [(&str, &str); 6] = [
    ("solve", "/api/solve"),
    ("energy_holes", "/api/energy/holes"),
    ("energy_renorm", "/api/energy/renorm"),
    ("corners", "/api/corners"),
    ("check", "/api/check"),
    ("hfield", "/api/hfield"),
];

fn typed<T: DeserializeOwned>(map: Map<String, Value>) -> Result<T> {
    serde_path_to_error::deserialize(Value::Object(map)).map_err(|e| {
        let field = e.path().to_string();
        let field = if field == "." { String::new() } else { field };
        AppError::Schema(vec![FieldError { field, message: e.inner().to_string() }])
    })
}

/// Turns a JSON config document into a typed request for `op`.
pub fn parse_request(op: &str, body: Value) -> Result<JobRequest> {
    let Value::Object(mut map) = body else {
        return Err(AppError::field("", "expected a JSON object"));
    };
    if let Some(given) = map.remove("op") {
        if given.as_str() != Some(op) {
            return Err(AppError::field("op", format!("expected \"{op}\" for this operation")));
        }
    }
    let req = match op {
        "solve" => JobRequest::Solve(typed(map)?),
        "check" => JobRequest::Check(typed(map)?),
        "energy_holes" => JobRequest::EnergyHoles(typed(map)?),
        "energy_renorm" => JobRequest::EnergyRenorm(typed(map)?),
        "corners" => JobRequest::Corners(typed(map)?),
        "hfield" => JobRequest::Hfield(typed(map)?),
        other => return Err(AppError::field("op", format!("unknown operation \"{other}\""))),
    };
    req.mesh().validate().map_err(|e| AppError::field("mesh", e.to_string().trim_start_matches("invalid input: ")))?;
    Ok(req)
}

pub fn parse_json(bytes: &[u8]) -> Result<Value> {
    serde_json::from_slice(bytes).map_err(|e| AppError::field("", format!("malformed JSON: {e}")))
}
