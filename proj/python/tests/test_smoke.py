import numpy as np
import pytest

import hdsf


def test_low_battery_below_band_is_blocked():
    r = hdsf.run(10.0, 20.0)
    assert not r["satisfied"]
    assert r["witness_time"] == 0.0
    assert "Status: BLOCKED - Critical battery but altitude out of deployment range" in r["report"]
    assert set(r["trace"]) >= {"t", "mode", "battery", "altitude", "deployed_flag"}


def test_patched_deploys():
    r = hdsf.run(10.0, 20.0, variant="patched")
    assert r["satisfied"]
    assert r["trace"]["deployed_flag"][-1] == 1.0


def test_fuzz(tmp_path):
    assert hdsf.fuzz(runs=100, seed=3, variant="patched")["violating_runs"] == 0
    a = hdsf.fuzz(runs=100, seed=3, out_dir=str(tmp_path / "a"))
    b = hdsf.fuzz(runs=100, seed=3, out_dir=str(tmp_path / "b"))
    assert a == b
    assert a["unique_violations"] > 0
    for name in ("summary.json", "violations.jsonl", "margins.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_conformance():
    agreed, compared = hdsf.conformance(configs=10, seed=1)
    assert agreed == compared == 10


def test_evaluate():
    sig = {"x": [0.0, 1.0, 2.0, 3.0]}
    assert hdsf.evaluate("F[0,2] x >= 2", sig, 1.0)["satisfied"]
    assert not hdsf.evaluate("G x <= 1", sig, 1.0)["satisfied"]
    assert hdsf.evaluate("G x <= $c", sig, 1.0, {"c": 3.0})["satisfied"]


def test_condense_two_by_two():
    k = np.array([[4.0, 1.0], [1.0, 3.0]])
    f = np.array([1.0, 2.0])
    kt, ft, u = hdsf.condense(k, f, [0])
    assert kt[0, 0] == pytest.approx(11.0 / 3.0)
    assert ft[0] == pytest.approx(1.0 / 3.0)
    assert u == pytest.approx([1.0 / 11.0, 7.0 / 11.0])


def test_errors_raise():
    with pytest.raises(hdsf.Error):
        hdsf.run(10.0, 20.0, variant="fixed")
    with pytest.raises(hdsf.Error):
        hdsf.run(10.0, 20.0, min_deploy_alt=90.0)
