import json
import math

import numpy as np
import pytest

import dynreg


def test_alpha_schedule():
    assert dynreg.alpha_schedule(0.1) == pytest.approx(0.9)
    assert dynreg.alpha_schedule(1.0) == 1.0
    with pytest.raises(ValueError):
        dynreg.alpha_schedule(0.0)


def test_speed_rescale_endpoints():
    assert dynreg.speed_rescale(0.0) == 0.0
    assert dynreg.speed_rescale(1.0) == 1.0
    t = 0.3
    assert dynreg.speed_rescale(t) == pytest.approx(t + t * t - t**3)


def test_verify_lemmas_passes():
    suites = dynreg.verify_lemmas(seed=3, instances=10)
    assert suites
    assert all(s["pass"] for s in suites)


def test_eit_currents_conserve_charge():
    cur = dynreg.eit_currents(rings=3, electrodes=8)
    assert cur.shape == (8, 8)
    scale = np.abs(cur).max()
    assert np.abs(cur.sum(axis=0)).max() <= 1e-10 * scale
    assert np.abs(cur - cur.T).max() <= 1e-8 * scale


def test_small_run():
    cfg = {"frames": 10, "noise": [0.1, 0.01], "run_batch": False, "seed": 2,
           "linear": {"grid": 8}, "scenario": {"total_frames": 11, "ramp_frames": 6}}
    r = dynreg.run_experiment(json.dumps(cfg))
    assert len(r["levels"]) == 2
    for lv in r["levels"]:
        assert len(lv["cum_err"]) == 11
        assert all(math.isfinite(v) for v in lv["cum_err"])


def test_bad_config_raises():
    with pytest.raises(ValueError):
        dynreg.run_experiment('{"frame": 3}')
