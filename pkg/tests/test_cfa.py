import numpy as np
import pytest

import svehdr as sv
from svehdr.errors import ConfigError, UnknownIlluminantError


def frame(arr, **kw):
    return sv.RawFrame(np.asarray(arr, dtype=np.uint16), **kw)


class TestRolesTable:
    def test_red_row(self):
        r = sv.roles_for_wavelength(625)
        assert (r.main, r.extra1, r.extra2) == ("R", "G", "B")
        assert (r.e1, r.e2, r.e3) == (1.00, 0.20, 0.09)

    def test_green_row(self):
        r = sv.roles_for_wavelength(520)
        assert (r.main, r.extra1, r.extra2) == ("G", "B", "R")
        assert (r.e1, r.e2, r.e3) == (1.00, 0.33, 0.15)

    def test_blue_row(self):
        r = sv.roles_for_wavelength(470)
        assert (r.main, r.extra1, r.extra2) == ("B", "G", "R")
        assert (r.e1, r.e2, r.e3) == (1.00, 0.45, 0.08)

    def test_nearest_match_within_tolerance(self):
        assert sv.roles_for_wavelength(640).main == "R"
        assert sv.roles_for_wavelength(500).main == "G"

    def test_unknown_illuminant(self):
        with pytest.raises(UnknownIlluminantError):
            sv.roles_for_wavelength(900)

    def test_empty_table(self):
        with pytest.raises(ConfigError):
            sv.roles_for_wavelength(625, table=())

    def test_transmittance_ordering_enforced(self):
        with pytest.raises(ConfigError):
            sv.PixelRoles(600, "R", "G", "B", 1.0, 0.09, 0.20)
        with pytest.raises(ConfigError):
            sv.PixelRoles(600, "R", "G", "B", 0.9, 0.2, 0.1)
        with pytest.raises(ConfigError):
            sv.PixelRoles(600, "R", "G", "G", 1.0, 0.2, 0.1)


class TestLayoutAndFrame:
    def test_default_layout_is_rggb(self):
        assert sv.RGGB.sites("R") == [(0, 0)]
        assert sv.RGGB.sites("G") == [(0, 1), (1, 0)]
        assert sv.RGGB.sites("B") == [(1, 1)]

    def test_invalid_layout(self):
        with pytest.raises(ConfigError):
            sv.CfaLayout((("R", "R"), ("G", "B")))

    def test_odd_dims_rejected(self):
        with pytest.raises(ConfigError):
            frame(np.zeros((3, 4)))

    def test_overflow_rejected(self):
        with pytest.raises(ConfigError):
            frame([[5000, 0], [0, 0]], bit_depth=12)
        frame([[5000, 0], [0, 0]], bit_depth=16)  # fine at 16 bits

    def test_bad_exposure_rejected(self):
        with pytest.raises(ConfigError):
            frame([[0, 0], [0, 0]], exposure_time=0.0)


class TestDecompose:
    def test_single_quad(self, red_roles):
        f = frame([[100, 200], [202, 50]])
        planes = sv.decompose(f, sv.RGGB, red_roles)
        assert planes.main.tolist() == [[100]]
        assert planes.extra1.tolist() == [[201]]
        assert planes.extra2.tolist() == [[50]]

    def test_all_zero(self, red_roles):
        planes = sv.decompose(frame(np.zeros((2, 2))), sv.RGGB, red_roles)
        assert planes.main.tolist() == [[0]]
        assert planes.extra1.tolist() == [[0]]
        assert planes.extra2.tolist() == [[0]]

    def test_constant_channels_blue_roles(self):
        mosaic = np.zeros((4, 4), dtype=np.uint16)
        mosaic[0::2, 0::2] = 10   # R
        mosaic[0::2, 1::2] = 20   # G
        mosaic[1::2, 0::2] = 20   # G
        mosaic[1::2, 1::2] = 30   # B
        planes = sv.decompose(frame(mosaic), sv.RGGB, sv.roles_for_wavelength(470))
        assert np.all(planes.main == 30)
        assert np.all(planes.extra1 == 20)
        assert np.all(planes.extra2 == 10)

    def test_green_policies(self, red_roles):
        f = frame([[0, 200], [203, 0]])
        first = sv.decompose(f, sv.RGGB, red_roles, "first")
        second = sv.decompose(f, sv.RGGB, red_roles, "second")
        average = sv.decompose(f, sv.RGGB, red_roles, "average")
        assert first.extra1.tolist() == [[200]]
        assert second.extra1.tolist() == [[203]]
        assert average.extra1.tolist() == [[202]]  # 201.5 rounds up

    def test_bad_policy(self, red_roles):
        with pytest.raises(ConfigError):
            sv.decompose(frame(np.zeros((2, 2))), sv.RGGB, red_roles, "mean")

    def test_output_dims_are_half(self, red_roles):
        rng = np.random.default_rng(0)
        for h, w in ((2, 2), (6, 4), (10, 16)):
            f = frame(rng.integers(0, 4096, size=(h, w)))
            planes = sv.decompose(f, sv.RGGB, red_roles)
            assert planes.shape == (h // 2, w // 2)

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(1)
        f = frame(rng.integers(0, 4096, size=(8, 8)))
        red = sv.decompose(f, sv.RGGB, sv.roles_for_wavelength(625))
        blue = sv.decompose(f, sv.RGGB, sv.roles_for_wavelength(470))
        assert np.array_equal(red.main, blue.extra2)
        assert np.array_equal(red.extra1, blue.extra1)
        assert np.array_equal(red.extra2, blue.main)


class TestRoundTrip:
    def test_interleave_reproduces_read_sites(self, red_roles):
        rng = np.random.default_rng(2)
        for _ in range(50):
            h, w = 2 * rng.integers(1, 9), 2 * rng.integers(1, 9)
            f = frame(rng.integers(0, 4096, size=(h, w)))
            planes = sv.decompose(f, sv.RGGB, red_roles, green_policy="first")
            back = sv.interleave(planes, sv.RGGB, red_roles)
            for channel in ("R", "B"):
                (r, c), = sv.RGGB.sites(channel)
                assert np.array_equal(back.samples[r::2, c::2],
                                      f.samples[r::2, c::2])
            r, c = sv.RGGB.sites("G")[0]  # the site the "first" policy read
            assert np.array_equal(back.samples[r::2, c::2], f.samples[r::2, c::2])
