import numpy as np
import pytest

import svehdr as sv
from svehdr import io as svio
from svehdr.errors import (ConfigError, FormatError, HeaderError,
                           ProfileInvariantError, SampleRangeError,
                           SchemaError, TruncatedError, VersionError)


def random_frame(rng, bit_depth=12):
    h, w = 2 * int(rng.integers(1, 9)), 2 * int(rng.integers(1, 9))
    samples = rng.integers(0, (1 << bit_depth), size=(h, w))
    return sv.RawFrame(samples.astype(np.uint16), bit_depth=bit_depth)


class TestRaw16:
    def test_round_trip(self, tmp_path, red_roles):
        rng = np.random.default_rng(0)
        path = tmp_path / "frame.pgm"
        for bits in (12, 16):
            frame = random_frame(rng, bits)
            svio.write_raw16(frame, path)
            back = svio.read_raw16(path, bit_depth=bits)
            assert np.array_equal(back.samples, frame.samples)
            # byte-exact on re-write
            first = path.read_bytes()
            svio.write_raw16(back, path)
            assert path.read_bytes() == first

    def test_unsupported_maxval(self, tmp_path):
        p = tmp_path / "x.pgm"
        p.write_bytes(b"P5\n2 2\n255\n" + bytes(4))
        with pytest.raises(HeaderError, match="maxval"):
            svio.read_raw16(p)

    def test_truncated_payload(self, tmp_path):
        p = tmp_path / "x.pgm"
        p.write_bytes(b"P5\n2 2\n65535\n" + bytes(7))
        with pytest.raises(TruncatedError):
            svio.read_raw16(p)

    def test_trailing_bytes(self, tmp_path):
        p = tmp_path / "x.pgm"
        p.write_bytes(b"P5\n2 2\n65535\n" + bytes(9))
        with pytest.raises(FormatError):
            svio.read_raw16(p)

    def test_sample_overflow_vs_bit_depth(self, tmp_path):
        p = tmp_path / "x.pgm"
        samples = np.array([[5000, 0], [0, 0]], dtype=np.uint16)
        svio.write_raw16(sv.RawFrame(samples, bit_depth=16), p)
        with pytest.raises(SampleRangeError):
            svio.read_raw16(p, bit_depth=12)
        assert svio.read_raw16(p, bit_depth=16).samples[0, 0] == 5000

    def test_garbage_headers(self, tmp_path):
        p = tmp_path / "x.pgm"
        for blob in (b"", b"P6\n2 2\n65535\n" + bytes(8),
                     b"P5\n-2 2\n65535\n", b"P5\nx y\n65535\n",
                     b"P5\n3 2\n65535\n" + bytes(12)):
            p.write_bytes(blob)
            with pytest.raises(FormatError):
                svio.read_raw16(p)


class TestProfile:
    def test_round_trip_field_by_field(self, tmp_path, red_profile):
        p = tmp_path / "profile.json"
        svio.write_profile(red_profile, p)
        back = svio.read_profile(p)
        assert back.eol == red_profile.eol
        assert back.roles == red_profile.roles
        assert back.linear.a == red_profile.linear.a
        assert back.linear.b == red_profile.linear.b
        assert np.array_equal(back.poly.coeffs, red_profile.poly.coeffs)
        assert back.poly.t_domain == red_profile.poly.t_domain
        assert np.array_equal(back.alpha_samples, red_profile.alpha_samples)
        assert len(back.alpha_of_value.tiers) == len(red_profile.alpha_of_value.tiers)
        for tp_a, tp_b in zip(back.alpha_of_value.tiers,
                              red_profile.alpha_of_value.tiers):
            assert tp_a.tier == tp_b.tier
            assert np.array_equal(tp_a.coeffs, tp_b.coeffs)
            assert tp_a.v_domain == tp_b.v_domain
        # a second write is byte-identical
        q = tmp_path / "again.json"
        svio.write_profile(back, q)
        assert q.read_bytes() == p.read_bytes()

    def test_transmittance_ordering_enforced_on_load(self, tmp_path, red_profile):
        p = tmp_path / "profile.json"
        svio.write_profile(red_profile, p)
        doc = p.read_text().replace('"e2": 0.2', '"e2": 1.5')
        p.write_text(doc)
        with pytest.raises(ProfileInvariantError):
            svio.read_profile(p)

    def test_version_mismatch(self, tmp_path, red_profile):
        p = tmp_path / "profile.json"
        svio.write_profile(red_profile, p)
        p.write_text(p.read_text().replace('"version": 1', '"version": 99'))
        with pytest.raises(VersionError):
            svio.read_profile(p)

    def test_missing_and_unknown_keys(self, tmp_path, red_profile):
        import json
        p = tmp_path / "profile.json"
        svio.write_profile(red_profile, p)
        doc = json.loads(p.read_text())
        del doc["linear"]
        p.write_text(json.dumps(doc))
        with pytest.raises(SchemaError, match="missing"):
            svio.read_profile(p)
        svio.write_profile(red_profile, p)
        doc = json.loads(p.read_text())
        doc["extra_key"] = 1
        p.write_text(json.dumps(doc))
        with pytest.raises(SchemaError, match="unknown"):
            svio.read_profile(p)

    def test_not_json(self, tmp_path):
        p = tmp_path / "profile.json"
        p.write_bytes(b"\xff\xfe garbage")
        with pytest.raises(SchemaError):
            svio.read_profile(p)


class TestHdrContainer:
    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(1)
        p = tmp_path / "img.sveh"
        values = rng.uniform(0, 40000, (6, 10)).astype(np.float32).astype(np.float64)
        valid = rng.random((6, 10)) > 0.3
        values[~valid] = 0.0
        img = sv.LinearHdrImage(values=values, valid=valid)
        svio.write_hdr(img, p)
        back = svio.read_hdr(p)
        assert np.array_equal(back.values, img.values)
        assert np.array_equal(back.valid, img.valid)
        first = p.read_bytes()
        svio.write_hdr(back, p)
        assert p.read_bytes() == first

    def test_nan_rejected_on_write(self, tmp_path):
        values = np.array([[np.nan, 0.0]])
        img = sv.LinearHdrImage(values=values, valid=np.array([[False, True]]))
        with pytest.raises(ConfigError):
            svio.write_hdr(img, tmp_path / "x.sveh")

    def test_zero_dim_rejected(self, tmp_path):
        img = sv.LinearHdrImage(values=np.zeros((0, 0)),
                                valid=np.zeros((0, 0), dtype=bool))
        with pytest.raises(ConfigError):
            svio.write_hdr(img, tmp_path / "x.sveh")

    def test_bad_magic_version_truncation(self, tmp_path):
        p = tmp_path / "x.sveh"
        p.write_bytes(b"NOPE" + bytes(20))
        with pytest.raises(HeaderError):
            svio.read_hdr(p)
        p.write_bytes(b"SVEH\x07" + bytes(8))
        with pytest.raises(VersionError):
            svio.read_hdr(p)
        p.write_bytes(b"SVEH\x01" + np.uint32(2).tobytes() + np.uint32(2).tobytes()
                      + bytes(3))
        with pytest.raises(TruncatedError):
            svio.read_hdr(p)
        p.write_bytes(b"SV")
        with pytest.raises(TruncatedError):
            svio.read_hdr(p)


class TestManifest:
    def test_round_trip(self, tmp_path):
        for name in ("a.pgm", "b.pgm", "c.pgm"):
            (tmp_path / name).write_bytes(b"")
        manifest = svio.ExposureManifest(((0.1, "a.pgm"), (0.5, "b.pgm"),
                                          (2.0, "c.pgm")))
        p = tmp_path / "manifest.csv"
        svio.write_manifest(manifest, p)
        back = svio.read_manifest(p)
        assert back.entries == manifest.entries

    def test_missing_file_rejected(self, tmp_path):
        p = tmp_path / "manifest.csv"
        p.write_text("exposure_s,path\n0.1,gone.pgm\n")
        with pytest.raises(FormatError):
            svio.read_manifest(p)

    def test_unsorted_rejected(self, tmp_path):
        (tmp_path / "a.pgm").write_bytes(b"")
        p = tmp_path / "manifest.csv"
        p.write_text("exposure_s,path\n1.0,a.pgm\n0.5,a.pgm\n")
        with pytest.raises(SchemaError):
            svio.read_manifest(p)

    def test_bad_header(self, tmp_path):
        p = tmp_path / "manifest.csv"
        p.write_text("time,file\n")
        with pytest.raises(SchemaError):
            svio.read_manifest(p)


class TestCsvExports:
    def test_radiometric_csv(self, tmp_path):
        rf = sv.RadiometricFunction(np.array([0.5, 1.0]), np.array([100.0, 200.5]))
        p = tmp_path / "rf.csv"
        svio.write_radiometric_csv(rf, p)
        assert p.read_text() == "T_seconds,mean_sve\n0.5,100.0\n1.0,200.5\n"

    def test_evaluation_csv(self, tmp_path):
        report = sv.HalftoneReport(region_means=tuple([100.0] * 8),
                                   ratios=tuple([1.0] * 8),
                                   regions=tuple([(0, 0, 1, 1)] * 8),
                                   white_index=0)
        record = sv.EvaluationRecord(
            exposure_s=0.25, dynamic_range_db=70.0, nrms=0.01,
            usage=sv.UsageFractions(0.5, 0.3, 0.2, 0.0), halftone=report)
        p = tmp_path / "metrics.csv"
        svio.append_evaluation_csv(record, p)
        svio.append_evaluation_csv(record, p)
        lines = p.read_text().splitlines()
        assert lines[0] == svio.EVALUATION_HEADER
        assert len(lines) == 3
        assert lines[1].startswith("0.25,70.0,0.01,0.5,0.3,0.2,0.0,")


class TestFuzz:
    def test_readers_raise_structured_errors_only(self, tmp_path):
        rng = np.random.default_rng(99)
        p = tmp_path / "fuzz.bin"
        readers = (svio.read_raw16, svio.read_hdr, svio.read_profile,
                   svio.read_manifest)
        for _ in range(500):
            n = int(rng.integers(0, 400))
            blob = rng.integers(0, 256, size=n, dtype=np.uint8).tobytes()
            p.write_bytes(blob)
            for reader in readers:
                try:
                    reader(p)
                except FormatError:
                    pass
