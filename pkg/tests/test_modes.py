import math

import numpy as np
import pytest
from scipy import integrate, special

from oamqkd.exceptions import GridTooCoarse
from oamqkd.modes import (
    BeamGeometry,
    ModeFamily,
    ModeLabel,
    SpatialGrid,
    beam_params,
    default_geometry,
    eval_mode,
    hermite_poly,
    laguerre_poly,
    mode_field,
    overlap,
    reference_grid,
)

GEOM = default_geometry()


def hg(n, m):
    return ModeLabel(ModeFamily.HG, n, m)


def lg(n, m):
    return ModeLabel(ModeFamily.LG, n, m)


# ---------------------------------------------------------------- polynomials


def test_hermite_trivial_orders():
    assert hermite_poly(0, 1.7) == 1.0
    assert hermite_poly(1, 0.5) == 1.0


def test_hermite_expansion_value():
    # 16 x^4 - 48 x^2 + 12 at x = 1
    assert hermite_poly(4, 1.0) == pytest.approx(-20.0, abs=1e-12)


@pytest.mark.parametrize("n", range(13))
def test_hermite_matches_scipy(n, rng):
    x = rng.uniform(-4.0, 4.0, size=50)
    np.testing.assert_allclose(hermite_poly(n, x), special.eval_hermite(n, x), rtol=1e-10)


def test_laguerre_trivial_orders():
    assert laguerre_poly(0, 3, 2.5) == 1.0
    assert laguerre_poly(1, 0, 2.0) == pytest.approx(-1.0, abs=1e-15)


def test_laguerre_expansion_value():
    # x^2/2 - 3x + 3 at x = 1
    assert laguerre_poly(2, 1, 1.0) == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("p,alpha", [(0, 0), (1, 2), (3, 1), (5, 4), (8, 0), (12, 3)])
def test_laguerre_matches_scipy(p, alpha, rng):
    x = rng.uniform(0.0, 12.0, size=50)
    np.testing.assert_allclose(
        laguerre_poly(p, alpha, x), special.eval_genlaguerre(p, alpha, x), rtol=1e-9
    )


def test_negative_orders_rejected():
    with pytest.raises(ValueError):
        hermite_poly(-1, 0.0)
    with pytest.raises(ValueError):
        laguerre_poly(-1, 0, 0.0)
    with pytest.raises(ValueError):
        laguerre_poly(1, -1, 0.0)


# ------------------------------------------------------------- beam geometry


def test_beam_params_at_waist():
    w, curvature, psi = beam_params(GEOM, 0.0)
    assert psi == 0.0
    assert curvature == 0.0
    assert w == pytest.approx(math.sqrt(2.0 * GEOM.rayleigh_range / GEOM.wavenumber))


def test_beam_params_at_rayleigh_range():
    assert beam_params(GEOM, GEOM.rayleigh_range).psi == pytest.approx(math.pi / 4)


def test_beam_params_far_field():
    psi = beam_params(GEOM, 1e6 * GEOM.rayleigh_range).psi
    assert abs(psi - math.pi / 2) < 1e-5


def test_geometry_validation():
    with pytest.raises(ValueError):
        BeamGeometry(wavenumber=-1.0, rayleigh_range=1.0)
    with pytest.raises(ValueError):
        BeamGeometry(wavenumber=1.0, rayleigh_range=0.0)


def test_mode_label_properties():
    label = lg(5, 2)
    assert label.order == 7
    assert label.oam == 3
    assert label.oam_magnitude == 3
    assert lg(1, 4).oam == -3
    with pytest.raises(ValueError):
        ModeLabel(ModeFamily.HG, -1, 0)


# ------------------------------------------------------------ mode functions


def test_hg00_is_azimuthally_symmetric_gaussian(rng):
    w = beam_params(GEOM, 0.0).w
    r = 0.7 * w
    angles = rng.uniform(0.0, 2 * math.pi, size=16)
    vals = np.array([eval_mode(hg(0, 0), GEOM, r * math.cos(a), r * math.sin(a), 0.0) for a in angles])
    np.testing.assert_allclose(vals, vals[0], rtol=1e-12)
    # gaussian profile: u(r)/u(0) = exp(-r^2/w^2)
    ratio = eval_mode(hg(0, 0), GEOM, r, 0.0, 0.0) / eval_mode(hg(0, 0), GEOM, 0.0, 0.0, 0.0)
    assert ratio == pytest.approx(math.exp(-(r / w) ** 2), rel=1e-12)


@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_lg_nn_has_no_azimuthal_dependence(n, rng):
    w = beam_params(GEOM, 0.5).w
    for r in (0.4 * w, 1.1 * w):
        angles = rng.uniform(0.0, 2 * math.pi, size=12)
        vals = np.array(
            [eval_mode(lg(n, n), GEOM, r * math.cos(a), r * math.sin(a), 0.5) for a in angles]
        )
        np.testing.assert_allclose(np.abs(vals), np.abs(vals[0]), rtol=1e-12)
        np.testing.assert_allclose(np.angle(vals), np.angle(vals[0]), atol=1e-12)


def test_lg21_azimuthal_phase():
    w = beam_params(GEOM, 0.0).w
    r = 0.9 * w
    for phi in (0.3, 1.1, 2.9, -0.7):
        at_phi = eval_mode(lg(2, 1), GEOM, r * math.cos(phi), r * math.sin(phi), 0.0)
        at_zero = eval_mode(lg(2, 1), GEOM, r, 0.0, 0.0)
        assert at_phi / at_zero == pytest.approx(np.exp(-1j * phi), abs=1e-12)


@pytest.mark.parametrize("n,m", [(0, 2), (3, 1), (2, 2), (4, 0)])
def test_lg_azimuthal_phase_general(n, m, rng):
    z = 0.8
    w = beam_params(GEOM, z).w
    r = rng.uniform(0.3, 1.5, size=8) * w
    phi = rng.uniform(-math.pi, math.pi, size=8)
    u_phi = eval_mode(lg(n, m), GEOM, r * np.cos(phi), r * np.sin(phi), z)
    u_zero = eval_mode(lg(n, m), GEOM, r, np.zeros_like(r), z)
    mask = np.abs(u_zero) > 1e-6
    np.testing.assert_allclose(
        (u_phi / u_zero)[mask], np.exp(-1j * (n - m) * phi)[mask], atol=1e-6
    )


@pytest.mark.parametrize("label", [hg(2, 1), hg(0, 0), lg(1, 1), lg(3, 0)])
def test_gouy_factorization(label, rng):
    # peeling the Gouy phase, the curvature phase, and (for LG) the
    # z-independent azimuthal winding must leave a real envelope at every z:
    # no other propagation phase exists
    pts = rng.uniform(-1.0, 1.0, size=(6, 2)) * beam_params(GEOM, 0.0).w
    x, y = pts[:, 0], pts[:, 1]
    for z in (0.0, 0.3, 1.0, 4.0):
        w, curvature, psi = beam_params(GEOM, z)
        u = eval_mode(label, GEOM, x, y, z)
        peeled = u * np.exp(
            1j * ((label.order + 1) * psi + 0.5 * GEOM.wavenumber * curvature * (x**2 + y**2))
        )
        if label.family is ModeFamily.LG:
            peeled = peeled * np.exp(1j * label.oam * np.arctan2(y, x))
        np.testing.assert_allclose(peeled.imag, 0.0, atol=1e-9 * np.abs(peeled).max())


# ------------------------------------------------------------------ overlaps


def test_overlap_normalization_hg00():
    grid = reference_grid(GEOM, 0.0, samples_per_axis=256)
    val = overlap(hg(0, 0), hg(0, 0), GEOM, 0.0, grid)
    assert abs(val - 1.0) < 1e-4


def test_overlap_orthogonality_hg11_hg00():
    grid = reference_grid(GEOM, 0.0, samples_per_axis=256)
    val = overlap(hg(1, 1), hg(0, 0), GEOM, 0.0, grid)
    assert abs(val) < 1e-4


@pytest.mark.parametrize("n", [0, 2])
@pytest.mark.parametrize("phi0", [0.4, 1.9, -2.5])
def test_overlap_rotated_lg_nn_invariant(n, phi0):
    grid = reference_grid(GEOM, 0.0, samples_per_axis=256)
    val = overlap(lg(n, n), lg(n, n), GEOM, 0.0, grid, rotate_a=phi0)
    assert abs(val - 1.0) < 1e-4


def test_lg_self_overlap_scipy_radial_oracle():
    # independent 1-D quadrature: at z=0 the LG(2,1) radial profile obeys
    # 2*pi * int |u(r)|^2 r dr = 1
    w = beam_params(GEOM, 0.0).w

    def radial_density(r):
        u = eval_mode(lg(2, 1), GEOM, r, 0.0, 0.0)
        return 2.0 * math.pi * abs(u) ** 2 * r

    val, err = integrate.quad(radial_density, 0.0, 8.0 * w)
    assert err < 1e-9
    assert val == pytest.approx(1.0, abs=1e-8)


def test_overlap_grid_too_coarse_signal():
    tight = SpatialGrid(half_width=0.4 * beam_params(GEOM, 0.0).w, samples_per_axis=16)
    with pytest.raises(GridTooCoarse):
        overlap(hg(3, 3), hg(0, 0), GEOM, 0.0, tight)


def test_overlap_deterministic():
    grid = reference_grid(GEOM, 0.0, samples_per_axis=128)
    a = overlap(hg(1, 0), hg(1, 0), GEOM, 0.0, grid)
    b = overlap(hg(1, 0), hg(1, 0), GEOM, 0.0, grid)
    assert a == b


def test_mode_field_matches_eval_mode():
    grid = SpatialGrid(half_width=3 * beam_params(GEOM, 0.0).w, samples_per_axis=32)
    xx, yy = grid.mesh()
    np.testing.assert_array_equal(
        mode_field(lg(2, 2), GEOM, grid, 0.0), eval_mode(lg(2, 2), GEOM, xx, yy, 0.0)
    )


def test_grid_geometry():
    grid = SpatialGrid(half_width=1.0, samples_per_axis=4)
    np.testing.assert_allclose(grid.axis(), [-0.75, -0.25, 0.25, 0.75])
    assert grid.cell_area == pytest.approx(0.25)
    with pytest.raises(ValueError):
        SpatialGrid(half_width=1.0, samples_per_axis=1)
