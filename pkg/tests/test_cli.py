"""Command-line pipeline: config handling, exit codes, file products."""

import json
import math

import numpy as np
import pytest

from cstomo import scenario
from cstomo.cli import RunConfig, main, run_config_from_json
from cstomo.csi_core import Variant
from cstomo.errors import ConfigurationError

TINY = {
    "source_angles_deg": [0.0, 120.0, 240.0],
    "receiver_relative_angles_deg": [90.0, 180.0, 270.0],
    "radius_m": 1.2,
    "frequencies_hz": [2e8, 3e8],
    "snr_db": None,
    "seed": 3,
    "variant": "cc",
    "max_iterations": 3,
    "synthesis_dx_m": 0.05,
    "inversion_dx_m": 0.1,
    "grid_halfwidth_m": 1.6,
    "imaging_halfwidth_m": 0.9,
    "phantom": {"case": "austria", "d_eps": 0.5, "d_sigma": 0.002},
}


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """One full phantom -> simulate -> invert x2 -> landscape pass."""
    root = tmp_path_factory.mktemp("cli")
    cfg = root / "tiny.json"
    cfg.write_text(json.dumps(TINY))
    data = root / "sim" / "measurements.csv"
    assert main(["phantom", "--config", str(cfg), "--out", str(root / "ph")]) == 0
    assert main(["simulate", "--config", str(cfg), "--out", str(root / "sim")]) == 0
    assert main(["invert", "--config", str(cfg), "--data", str(data),
                 "--out", str(root / "cc")]) == 0
    assert main(["invert", "--config", str(cfg), "--data", str(data),
                 "--out", str(root / "mr"), "--variant", "plain"]) == 0
    assert main(["landscape", "--config", str(cfg), "--data", str(data),
                 "--cc", str(root / "cc" / "state.npz"),
                 "--mr", str(root / "mr" / "state.npz"),
                 "--samples", "7", "--out", str(root / "land")]) == 0
    return root, cfg, data


def test_config_defaults_from_empty_document():
    rc = run_config_from_json("{}")
    assert rc.variant is Variant.CC
    assert rc.max_iterations == 2048
    assert math.isinf(rc.snr_db)
    assert rc.phantom_case == "austria"
    assert rc.measurement.num_sources == 12
    assert rc.measurement.num_frequencies == 5


def test_config_json_roundtrip():
    rc = RunConfig(measurement=scenario.default_config(), snr_db=30.0,
                   seed=11, variant=Variant.PLAIN, max_iterations=64)
    back = run_config_from_json(rc.to_json())
    assert back.snr_db == 30.0
    assert back.seed == 11
    assert back.variant is Variant.PLAIN
    assert back.max_iterations == 64
    np.testing.assert_array_equal(back.measurement.source_angles_deg,
                                  rc.measurement.source_angles_deg)
    np.testing.assert_array_equal(back.measurement.frequencies_hz,
                                  rc.measurement.frequencies_hz)
    # infinity must serialize as null, not the string "Infinity"
    doc = json.loads(RunConfig(measurement=scenario.default_config()).to_json())
    assert doc["snr_db"] is None


def test_config_errors_are_aggregated():
    bad = {"variant": "bogus", "threads": 0, "max_iterations": -4,
           "phantom": {"case": "donut", "d_eps": -1.0}, "wat": 1}
    with pytest.raises(ConfigurationError) as info:
        run_config_from_json(json.dumps(bad))
    text = str(info.value)
    for fragment in ("bogus", "threads", "max_iterations", "donut",
                     "d_eps", "wat"):
        assert fragment in text


def test_config_rejects_grid_inversions():
    with pytest.raises(ConfigurationError, match="finer"):
        run_config_from_json(json.dumps(
            {"synthesis_dx_m": 0.1, "inversion_dx_m": 0.05}))
    with pytest.raises(ConfigurationError, match="imaging"):
        run_config_from_json(json.dumps(
            {"imaging_halfwidth_m": 4.0, "grid_halfwidth_m": 3.0}))


def test_config_rejects_non_json():
    with pytest.raises(ConfigurationError, match="JSON"):
        run_config_from_json("{not json")
    with pytest.raises(ConfigurationError, match="object"):
        run_config_from_json("[1, 2]")


def test_materialized_config_is_copied(pipeline):
    root, _, _ = pipeline
    for sub in ("ph", "sim", "cc", "mr", "land"):
        doc = json.loads((root / sub / "config.json").read_text())
        assert doc["grid_halfwidth_m"] == TINY["grid_halfwidth_m"]
        assert doc["snr_db"] is None
        # defaults the input file never mentioned are materialized
        assert doc["threads"] == 1
    # the variant override must be reflected in the copied config
    assert json.loads((root / "mr" / "config.json").read_text())["variant"] == "plain"


def test_invert_products(pipeline):
    root, _, _ = pipeline
    out = root / "cc"
    for name in ("log.csv", "state.npz", "contrast_eps.csv", "contrast_eps.pgm",
                 "contrast_eps.pgm.minmax", "contrast_sigma.csv",
                 "contrast_sigma.pgm", "contrast_sigma.pgm.minmax"):
        assert (out / name).exists()
    lines = (out / "log.csv").read_text().splitlines()
    assert lines[0] == "iteration,cost_half,cost_full,err,alpha_mean,beta"
    assert len(lines) == 1 + TINY["max_iterations"]
    with np.load(out / "state.npz") as archive:
        assert str(archive["variant"]) == "cc"
        assert int(archive["iteration"]) == TINY["max_iterations"]
        assert archive["j"].shape == archive["e_tot"].shape
        assert archive["j"].shape[:2] == (3, 2)


def test_invert_is_deterministic(pipeline):
    root, cfg, data = pipeline
    assert main(["invert", "--config", str(cfg), "--data", str(data),
                 "--out", str(root / "cc2"), "--seed", "7"]) == 0
    assert main(["invert", "--config", str(cfg), "--data", str(data),
                 "--out", str(root / "cc3"), "--seed", "7"]) == 0
    a = (root / "cc2" / "log.csv").read_bytes()
    b = (root / "cc3" / "log.csv").read_bytes()
    assert a == b
    assert (root / "cc2" / "contrast_eps.pgm").read_bytes() == \
        (root / "cc3" / "contrast_eps.pgm").read_bytes()


def test_landscape_product(pipeline):
    root, _, _ = pipeline
    lines = (root / "land" / "landscape.csv").read_text().splitlines()
    assert lines[0].startswith("beta1,")
    assert len(lines) == 8
    rows = np.genfromtxt(root / "land" / "landscape.csv", delimiter=",",
                         skip_header=1)
    assert rows.shape == (7, 8)
    betas = np.linspace(-1.5, 1.5, 7)
    np.testing.assert_allclose(rows[:, 0], betas, atol=1e-12)
    # (0, 0) mixes to the zero contrast, which cannot be costed
    assert np.isnan(rows[3, 1 + 3])
    assert np.isfinite(rows[0, 1])


def test_simulate_zero_contrast(tmp_path):
    cfg = tmp_path / "none.json"
    doc = dict(TINY)
    doc["phantom"] = {"case": "none"}
    cfg.write_text(json.dumps(doc))
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    config = run_config_from_json(cfg.read_text()).measurement
    ms = scenario.load_measurements_csv(tmp_path / "measurements.csv", config)
    assert np.linalg.norm(ms.scattered) <= 1e-10 * np.linalg.norm(ms.incident)


def test_collision_requires_overwrite(pipeline, capsys):
    root, cfg, _ = pipeline
    assert main(["phantom", "--config", str(cfg), "--out", str(root / "ph")]) == 4
    assert "overwrite" in capsys.readouterr().err
    assert main(["phantom", "--config", str(cfg), "--out", str(root / "ph"),
                 "--overwrite"]) == 0


def test_bad_config_exits_2(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{"variant": "bogus"}')
    assert main(["phantom", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "config error" in capsys.readouterr().err


def test_missing_data_exits_4(tmp_path, capsys):
    assert main(["invert", "--data", str(tmp_path / "nope.csv"),
                 "--out", str(tmp_path / "o")]) == 4
    assert "i/o error" in capsys.readouterr().err


def test_landscape_without_phantom_needs_act(pipeline, tmp_path):
    root, _, data = pipeline
    doc = dict(TINY)
    doc["phantom"] = {"case": "none"}
    cfg = tmp_path / "none.json"
    cfg.write_text(json.dumps(doc))
    assert main(["landscape", "--config", str(cfg), "--data", str(data),
                 "--cc", str(root / "cc" / "state.npz"),
                 "--mr", str(root / "mr" / "state.npz"),
                 "--samples", "3", "--out", str(tmp_path / "o")]) == 2


def test_validate_passes(capsys):
    assert main(["validate"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 3
    assert "FAIL" not in out
