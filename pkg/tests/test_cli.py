import json
import warnings

import pytest

import svehdr as sv
from svehdr import io as svio
from svehdr.cli import main

from conftest import EOL, GAIN

T_MIN = EOL * 0.08 / GAIN
T_MAX = EOL / 0.09 * 0.98 / GAIN

COMMON = ["--gain", str(GAIN), "--seed", "7"]


def run(argv):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return main(argv)


@pytest.fixture(scope="module")
def pipeline_dir(tmp_path_factory):
    """simulate -> calibrate -> reconstruct, shared by the checks below."""
    root = tmp_path_factory.mktemp("cli")
    sim = root / "sim"
    assert run(["simulate", "--flatfield", "--exposures", "20",
                "--t-min", str(T_MIN), "--t-max", str(T_MAX),
                "--knee-margin", "0.15", "--width", "256", "--height", "256",
                "--out", str(sim)] + COMMON) == 0
    assert run(["simulate", "--chart", "--exposures", "1",
                "--t-min", str(0.9 * EOL / GAIN), "--t-max", "1.0",
                "--width", "512", "--height", "192",
                "--out", str(sim / "chart_base")] + COMMON) == 0
    assert run(["simulate", "--chart", "--exposures", "1",
                "--t-min", str(0.9 * EOL / GAIN * 5.5), "--t-max", "1.0",
                "--width", "512", "--height", "192",
                "--out", str(sim / "chart_over")] + COMMON) == 0
    cal = root / "cal"
    assert run(["calibrate", "--manifest", str(sim / "manifest.csv"),
                "--out", str(cal)] + COMMON) == 0
    rec = root / "rec"
    assert run(["reconstruct", "--frame", str(sim / "chart_over" / "chart_000.pgm"),
                "--profile", str(cal / "profile.json"),
                "--out", str(rec), "--preview"] + COMMON) == 0
    ref = root / "ref"
    assert run(["reconstruct", "--frame", str(sim / "chart_base" / "chart_000.pgm"),
                "--profile", str(cal / "profile.json"),
                "--out", str(ref)] + COMMON) == 0
    return root


class TestPipeline:
    def test_artifacts_exist(self, pipeline_dir):
        assert (pipeline_dir / "sim" / "manifest.csv").exists()
        assert (pipeline_dir / "cal" / "profile.json").exists()
        assert (pipeline_dir / "cal" / "radiometric.csv").exists()
        assert (pipeline_dir / "rec" / "linear_hdr.sveh").exists()
        assert (pipeline_dir / "rec" / "sve_values.pgm").exists()
        assert (pipeline_dir / "rec" / "preview.pgm").exists()
        assert (pipeline_dir / "rec" / "effective_config.json").exists()

    def test_profile_loads_and_is_sane(self, pipeline_dir):
        profile = svio.read_profile(pipeline_dir / "cal" / "profile.json")
        assert profile.eol == EOL
        assert profile.linear.a == pytest.approx(GAIN, rel=1e-3)

    def test_reconstruction_tracks_reference(self, pipeline_dir):
        over = svio.read_hdr(pipeline_dir / "rec" / "linear_hdr.sveh")
        base = svio.read_hdr(pipeline_dir / "ref" / "linear_hdr.sveh")
        assert sv.nrms(over, base, scale=5.5) < 0.01

    def test_non_saturated_reconstruction_is_all_main(self, pipeline_dir):
        merged = svio.read_raw16(pipeline_dir / "ref" / "sve_values.pgm",
                                 bit_depth=16)
        assert int(merged.samples.max()) < EOL  # every pixel kept its main value

    def test_evaluate_reference_against_itself(self, pipeline_dir):
        out = pipeline_dir / "eval"
        code = run(["evaluate",
                    "--reconstructed", str(pipeline_dir / "ref" / "linear_hdr.sveh"),
                    "--reference", str(pipeline_dir / "ref" / "linear_hdr.sveh"),
                    "--sve", str(pipeline_dir / "ref" / "sve_values.pgm"),
                    "--regions", str(pipeline_dir / "sim" / "chart_base" / "regions.json"),
                    "--scale", "1.0", "--exposure", "0.5",
                    "--out", str(out)] + COMMON)
        assert code == 0
        rows = (out / "metrics.csv").read_text().splitlines()
        assert rows[0] == svio.EVALUATION_HEADER
        assert rows[1].split(",")[2] == "0.0"   # nrms column

    def test_evaluate_missing_regions_exits_2(self, pipeline_dir):
        code = run(["evaluate",
                    "--reconstructed", str(pipeline_dir / "ref" / "linear_hdr.sveh"),
                    "--reference", str(pipeline_dir / "ref" / "linear_hdr.sveh"),
                    "--sve", str(pipeline_dir / "ref" / "sve_values.pgm"),
                    "--regions", str(pipeline_dir / "nope.json"),
                    "--scale", "1.0"])
        assert code == 2


class TestExitCodes:
    def test_simulate_without_target_is_usage_error(self, tmp_path):
        assert run(["simulate", "--out", str(tmp_path)]) == 2

    def test_missing_manifest_is_usage_error(self, tmp_path):
        assert run(["calibrate", "--manifest", str(tmp_path / "gone.csv"),
                    "--out", str(tmp_path)]) == 2

    def test_two_frame_manifest_is_calibration_insufficiency(self, tmp_path):
        sim = tmp_path / "sim"
        assert run(["simulate", "--flatfield", "--exposures", "20",
                    "--t-min", str(T_MIN), "--t-max", str(T_MAX),
                    "--width", "64", "--height", "64",
                    "--out", str(sim)] + COMMON) == 0
        lines = (sim / "manifest.csv").read_text().splitlines()
        (sim / "manifest.csv").write_text("\n".join(lines[:3]) + "\n")
        assert run(["calibrate", "--manifest", str(sim / "manifest.csv"),
                    "--out", str(tmp_path / "cal")] + COMMON) == 4

    def test_corrupt_frame_is_io_error(self, tmp_path):
        sim = tmp_path / "sim"
        assert run(["simulate", "--flatfield", "--exposures", "20",
                    "--t-min", str(T_MIN), "--t-max", str(T_MAX),
                    "--width", "64", "--height", "64",
                    "--out", str(sim)] + COMMON) == 0
        (sim / "ff_003.pgm").write_bytes(b"not a graymap")
        assert run(["calibrate", "--manifest", str(sim / "manifest.csv"),
                    "--out", str(tmp_path / "cal")] + COMMON) == 3

    def test_wrong_eol_is_profile_mismatch(self, pipeline_dir, tmp_path):
        code = run(["reconstruct",
                    "--frame", str(pipeline_dir / "sim" / "chart_base" / "chart_000.pgm"),
                    "--profile", str(pipeline_dir / "cal" / "profile.json"),
                    "--eol", "3000", "--out", str(tmp_path)])
        assert code == 5

    def test_unknown_config_key_is_usage_error(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"not_a_key": 1}))
        assert run(["simulate", "--flatfield", "--config", str(cfg),
                    "--out", str(tmp_path)]) == 2


class TestConfigPrecedence:
    def test_flags_override_config_file(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"eol": 1234, "gain": 5.0}))
        out = tmp_path / "out"
        assert run(["simulate", "--flatfield", "--exposures", "8",
                    "--t-min", "0.01", "--t-max", "1.5",
                    "--width", "16", "--height", "16",
                    "--config", str(cfg), "--eol", "2222",
                    "--out", str(out)]) == 0
        effective = json.loads((out / "effective_config.json").read_text())
        assert effective["eol"] == 2222       # flag wins
        assert effective["gain"] == 5.0       # config file beats default

    def test_env_out_root(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SVEHDR_OUT_ROOT", str(tmp_path))
        assert run(["simulate", "--flatfield", "--exposures", "8",
                    "--t-min", "0.01", "--t-max", "1.5",
                    "--width", "16", "--height", "16"]) == 0
        assert (tmp_path / "svehdr_out" / "manifest.csv").exists()
