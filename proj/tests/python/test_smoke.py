import copy
import json
import math
import os
import subprocess
from pathlib import Path

import numpy as np
import pytest

import bhct

SMALL = {
    "schema": "bhct-experiment/1",
    "scene": {
        "metal": [
            {"type": "disk", "center": [-2.0, 0.0], "radius": 1.0},
            {"type": "disk", "center": [2.0, 0.0], "radius": 1.0},
        ],
        "tissue": [{"type": "gaussian", "amplitude": 0.5, "sigma": 0.5, "center": [0.0, 1.5]}],
    },
    "grid": {"n_s": 256, "n_phi": 180, "s_max": 4.0, "n_x": 128, "fov": 8.0},
    "nonlinearity": {"type": "polynomial", "coeffs": [0.1, -0.02]},
    "noise": {"sigma": 0.001, "seed": 5},
    "analyze": {"profile_half_width": 0.15},
}


def two_disks(tissue=True):
    metal = [bhct.ConvexBody.disk([-2.0, 0.0], 1.0), bhct.ConvexBody.disk([2.0, 0.0], 1.0)]
    bumps = [bhct.GaussianBump(0.5, 0.5, [0.0, 1.5])] if tissue else []
    return bhct.Scene(metal, bumps)


def test_selftest_passes():
    ok, table = bhct.selftest(256)
    assert ok, table


def test_multinomial_row_sums():
    for j in range(1, 6):
        assert sum(bhct.multinomial(m, j - m) for m in range(j + 1)) == 2**j


def test_streak_prediction_for_two_disks():
    scene = two_disks()
    lines = bhct.predict_streaks(scene)
    assert len(lines) == 4
    assert sorted(line.kind for line in lines) == ["inner", "inner", "outer", "outer"]
    assert bhct.crossing_count(scene) == 8


def test_physical_taylor_coefficients():
    ae = 0.3
    coeffs = bhct.taylor_of_physical(ae, 4)
    assert coeffs[0] == pytest.approx(-ae * ae / 6.0, rel=1e-12)
    assert coeffs[2] == pytest.approx(ae**4 / 180.0, rel=1e-12)
    assert bhct.eval_nonlinearity(bhct.Physical(ae), 0.5) == pytest.approx(-((ae * 0.5) ** 2) / 6.0, rel=0.01)


def test_synthesis_and_reconstruction():
    grid = bhct.SinogramGrid(4.0, 256, 90)
    f = bhct.Polynomial([0.1, -0.02])
    res = bhct.synthesize(two_disks(), f, grid)
    p, rf, rchi = res.p.values, res.rf.values, res.rchi.values
    assert p.shape == (90, 256)
    np.testing.assert_allclose(p, rf + 0.1 * rchi**2 - 0.02 * rchi**3, atol=1e-12)
    np.testing.assert_array_equal(res.p_ma().values, bhct.synthesize(two_disks(False), f, grid).p_ma().values)
    image = bhct.fbp(res.p, bhct.ImageGrid(8.0, 64))
    assert image.values.shape == (64, 64)
    assert np.isfinite(image.values).all()
    noisy = bhct.add_noise(res.p, 0.01, 7)
    np.testing.assert_array_equal(noisy.values, bhct.add_noise(res.p, 0.01, 7).values)
    assert 0.008 < np.std(noisy.values - p) < 0.012


def test_identify_recovers_coefficients():
    grid = bhct.SinogramGrid(4.0, 1024, 720)
    res = bhct.synthesize(two_disks(), bhct.Polynomial([0.1, -0.02]), grid)
    report = bhct.identify(res.p, two_disks(), method="regression", j_max=3)
    assert report["coeffs"]["2"] == pytest.approx(0.1, rel=0.05)
    assert report["coeffs"]["3"] == pytest.approx(-0.02, rel=0.05)
    assert report["method"] == "regression"


def test_config_normalization_and_errors():
    norm = bhct.normalize_config(SMALL)
    assert bhct.normalize_config(norm) == norm
    bad = copy.deepcopy(SMALL)
    bad["grid"]["n_s"] = -3
    with pytest.raises(bhct.ConfigError, match="grid.n_s"):
        bhct.normalize_config(bad)
    with pytest.raises(bhct.GeometryError):
        bhct.ConvexBody.disk([0.0, 0.0], -1.0)


CLI = os.environ.get("BHCT_CLI")
CONFIGS = os.environ.get("BHCT_CONFIGS")
needs_cli = pytest.mark.skipif(not CLI or not CONFIGS, reason="BHCT_CLI and BHCT_CONFIGS are not set")


def run_cli(*args):
    return subprocess.run([CLI, *map(str, args), "--quiet"], capture_output=True, text=True)


def write_config(path, cfg):
    path.write_text(json.dumps(cfg))
    return path


@needs_cli
def test_cli_exit_codes(tmp_path):
    bad = copy.deepcopy(SMALL)
    bad["grid"]["unknown"] = 1
    assert run_cli("simulate", "--config", write_config(tmp_path / "a.json", bad), "--out", tmp_path / "a").returncode == 2
    assert run_cli("simulate", "--config", tmp_path / "missing.json", "--out", tmp_path / "b").returncode == 2

    overlap = copy.deepcopy(SMALL)
    overlap["scene"]["metal"][1]["center"] = [-1.0, 0.0]
    assert run_cli("simulate", "--config", write_config(tmp_path / "c.json", overlap), "--out", tmp_path / "c").returncode == 3

    single = copy.deepcopy(SMALL)
    single["scene"]["metal"].pop()
    proc = run_cli("identify", "--config", write_config(tmp_path / "d.json", single), "--out", tmp_path / "d")
    assert proc.returncode == 4
    assert json.loads((tmp_path / "d" / "identify.json").read_text())["error"]["type"] == "NoCrossings"


@needs_cli
def test_cli_runs_are_bitwise_reproducible(tmp_path):
    cfg = write_config(tmp_path / "cfg.json", SMALL)
    outs = [tmp_path / "r1", tmp_path / "r2"]
    for out in outs:
        assert run_cli("simulate", "--config", cfg, "--out", out).returncode == 0
        assert run_cli("identify", "--config", cfg, "--out", out, "--method", "regression").returncode == 0
        assert run_cli("predict", "--config", cfg, "--out", out, "--image", out / "f_CT.f64").returncode == 0
        assert run_cli("analyze", "--config", cfg, "--out", out, "--image", out / "f_CT.f64").returncode == 0
    files = sorted(p.name for p in outs[0].iterdir())
    assert "P.png" in files and "identify.json" in files
    for name in files:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), name
    raw = np.fromfile(outs[0] / "P.f64", dtype="<f8")
    side = json.loads((outs[0] / "P.json").read_text())
    assert raw.size == math.prod(side["dims"])
    assert (outs[0] / "P.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


@needs_cli
def test_cli_shipped_configs_parse():
    for cfg in sorted(Path(CONFIGS).glob("*.json")):
        assert bhct.normalize_config(json.loads(cfg.read_text()))["schema"] == "bhct-experiment/1"
