"""Smoke test for the pycrossfield extension module."""

import json
import math

import pycrossfield as cf

FOUR = [(0.6, 0.0, 0.1, 1), (-0.6, 0.0, 0.1, 1), (0.0, 0.6, 0.1, 1), (0.0, -0.6, 0.1, 1)]


def test_check_verdicts():
    ok = cf.check("disk:1", FOUR, h=0.1)
    assert ok.ok and ok.status == "ok"
    ledger = ok.result()
    assert (ledger["verdict"], ledger["u_target"], ledger["placed"]) == ("pass", 4, 4)
    bad = cf.check("disk:1", [(0.0, 0.0, 0.1, 3)])
    assert bad.status == "check_failed"
    assert bad.result()["deficit"] == 1


def test_solve_four_holes():
    out = cf.solve("disk:1", FOUR, h=0.08, svg=True)
    r = out.result()
    assert r["report"]["converged"]
    assert all(round(d["degree"]) == 1 for d in r["hole_degrees"])
    assert out.svg.startswith("<svg")
    try:
        cf.solve("disk:1", [(0.0, 0.0, 0.1, 3)], h=0.1)
    except cf.InfeasibleError as e:
        assert isinstance(e, cf.CrossfieldError) and isinstance(e, ValueError)
    else:
        raise AssertionError("infeasible solve accepted")


def test_corners_and_tables():
    c = cf.corners("polygon:square").result()
    assert [k["chosen_k"] for k in c["corners"]] == [0.25] * 4
    assert c["energy"] == 0
    assert 0.25 in cf.classify_corner(math.pi / 2)
    assert cf.classify_corner(math.pi, "scarce") == [0.0]
    assert abs(cf.core_energy([1, 1, 1, 1], 0.1) - 4 * math.pi * math.log(10)) < 1e-9


def test_run_job_matches_helpers():
    doc = {"op": "check", "mesh": {"preset": "disk:1", "h": 0.1},
           "holes": [{"center": [x, y], "radius": r, "degree": d} for x, y, r, d in FOUR]}
    assert cf.run_job(json.dumps(doc)).json == cf.check("disk:1", FOUR, h=0.1).json
    try:
        cf.run_job(json.dumps({"op": "hfield", "mesh": {"preset": "disk:1"}, "sources": [{"point": [0, 0], "k": 3}]}))
    except cf.IncompatibleError:
        pass
    else:
        raise AssertionError("incompatible sources accepted")
    assert cf.fmt_g(1 / 3) == "0.333333333333"


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            fn()
            print(f"ok {name}")
