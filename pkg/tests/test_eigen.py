import numpy as np
import pytest

from geoperiods import eigen
from geoperiods.eigen import (AccuracyLossError, NoEigenvalueError,
                              evaluate, laplace_residual, pullback,
                              sphere_harmonic, torus_mode)
from geoperiods.quad import integrate_periodic

RNG = np.random.default_rng(13)


# ------------------------------------------------------------------ sphere

def test_sphere_constant_mode():
    y00 = sphere_harmonic(0, 0)
    pts = np.stack([RNG.uniform(0.1, np.pi - 0.1, 8),
                    RNG.uniform(0, 2 * np.pi, 8)], axis=-1)
    assert np.max(np.abs(evaluate(y00, pts) - 1 / np.sqrt(4 * np.pi))) < 1e-14
    assert y00.mu == 0.0


def test_sphere_rejects_bad_order():
    with pytest.raises(ValueError):
        sphere_harmonic(3, 4)


def sphere_norm_sq(phi, n_theta=200, n_phi=256):
    gx, gw = np.polynomial.legendre.leggauss(n_theta)
    theta = np.arccos(gx)
    phis = 2 * np.pi * np.arange(n_phi) / n_phi
    tt, pp = np.meshgrid(theta, phis, indexing="ij")
    vals = evaluate(phi, np.stack([tt.ravel(), pp.ravel()], axis=-1))
    vals = vals.reshape(tt.shape)
    return float(np.sum(gw[:, None] * vals ** 2) * 2 * np.pi / n_phi)


@pytest.mark.parametrize("n,m", [(1, 1), (5, 3), (20, 20), (40, 0)])
def test_sphere_unit_norm(n, m):
    assert sphere_norm_sq(sphere_harmonic(n, m)) == pytest.approx(1.0, abs=1e-9)


def test_sphere_equator_y11_norm():
    # restriction-norm of Y(1,1) over the full equator equals 3/4
    y11 = sphere_harmonic(1, 1)
    res = integrate_periodic(lambda th: evaluate(
        y11, np.stack([np.full_like(th, np.pi / 2), 2 * np.pi * th],
                      axis=-1)) ** 2)
    assert abs(2 * np.pi * res.value.real - 0.75) < 1e-12


def test_sphere_equator_closed_form():
    # int |Y(n,n)|^2 over the equator: (2n+1)/2 * (2n-1)!!/(2n)!!
    n = 6
    ratio = 1.0
    for k in range(1, n + 1):
        ratio *= (2 * k - 1) / (2 * k)
    expect = (2 * n + 1) / 2.0 * ratio
    ynn = sphere_harmonic(n, n)
    res = integrate_periodic(lambda th: evaluate(
        ynn, np.stack([np.full_like(th, np.pi / 2), 2 * np.pi * th],
                      axis=-1)) ** 2)
    assert abs(2 * np.pi * res.value.real - expect) < 1e-10


def test_sphere_highest_weight_quarter_power():
    """p(Y(n,n)) tracks c mu^{1/4}: fit c on degrees 10..40, then the
    degree-50 value lands within 5%."""
    def p_eq(n):
        phi = sphere_harmonic(n, n)
        res = integrate_periodic(lambda th: evaluate(
            phi, np.stack([np.full_like(th, np.pi / 2), 2 * np.pi * th],
                          axis=-1)) ** 2)
        return 2 * np.pi * res.value.real

    cs = [p_eq(n) / (n * (n + 1)) ** 0.25 for n in range(10, 41, 5)]
    c_fit = np.mean(cs)
    p50 = p_eq(50)
    assert abs(p50 - c_fit * (50 * 51) ** 0.25) < 0.05 * p50


def test_sphere_laplace_residual():
    pts = np.stack([RNG.uniform(0.4, np.pi - 0.4, 10),
                    RNG.uniform(0, 2 * np.pi, 10)], axis=-1)
    assert laplace_residual(sphere_harmonic(7, 4), pts) < 1e-4
    assert laplace_residual(sphere_harmonic(50, 50), pts) < 1e-4


# ------------------------------------------------------------------- torus

def test_torus_closed_forms():
    t10 = torus_mode((1, 0))
    pts = np.array([[0.25, 0.7], [0.1, 0.2]])
    assert abs(evaluate(t10, pts)[0]) < 1e-14          # cosine zero
    assert t10.mu == pytest.approx(4 * np.pi ** 2)
    t00 = torus_mode((0, 0))
    assert np.all(evaluate(t00, pts) == 1.0)


def test_torus_unit_norm_and_laplace():
    t34 = torus_mode((3, 4))
    xs = np.arange(64) / 64.0
    xx, yy = np.meshgrid(xs, xs)
    vals = evaluate(t34, np.stack([xx.ravel(), yy.ravel()], axis=-1))
    assert abs(np.mean(vals ** 2) - 1.0) < 1e-12
    pts = RNG.uniform(0, 1, (10, 2))
    assert laplace_residual(t34, pts) < 1e-4


# ----------------------------------------------------------------- modular

def test_pullback_fundamental_domain():
    for _ in range(50):
        z = complex(RNG.uniform(-3, 3), RNG.uniform(0.05, 2.0))
        w = pullback(z)
        assert abs(w.real) <= 0.5 + 1e-12
        assert abs(w) >= 1.0 - 1e-12
        assert w.imag >= np.sqrt(3) / 2 - 1e-9


def test_first_form_eigenvalue_window(first_form):
    assert 9.5336 <= first_form.R <= 9.5338
    assert first_form.r_stability < 1e-6
    assert first_form.residual < 1e-8
    assert first_form.height_agreement < 1e-6


def test_first_form_is_odd(first_form):
    # the lowest cusp form carries the sine expansion; the cosine search
    # over the same bracket finds nothing
    assert first_form.parity == "odd"


def test_automorphy(first_eigenfunction):
    phi = first_eigenfunction
    vals = []
    for _ in range(50):
        z = complex(RNG.uniform(-0.45, 0.45), RNG.uniform(0.9, 1.9))
        vals.append(max(abs(evaluate(phi, z) - evaluate(phi, z + 1)),
                        abs(evaluate(phi, z) - evaluate(phi, -1 / z))))
    scale = max(abs(evaluate(phi, complex(x, 1.1)))
                for x in np.linspace(-0.4, 0.4, 17))
    assert max(vals) < 1e-6 * scale


def test_modular_laplace_residual(first_eigenfunction):
    pts = [complex(RNG.uniform(-0.45, 0.45), RNG.uniform(0.9, 1.7))
           for _ in range(20)]
    assert laplace_residual(first_eigenfunction, pts) < 1e-4


def test_modular_unit_norm(first_form):
    # independent, finer fundamental-domain grid than the normalizer's
    pts, wts = eigen._fundamental_domain_grid(nx=96, ny=72, y_cut=5.0)
    vals = first_form.value(pts)
    assert abs(np.sum(wts * np.abs(vals) ** 2) - 1.0) < 1e-3


def test_modular_series_tail(first_form):
    # last retained coefficient contributes < 1e-9 of the peak at y >= 0.8
    from geoperiods.specfun import bessel_k_imag
    n = first_form.M0
    tail = abs(first_form.coefficients[-1]) \
        * bessel_k_imag(first_form.R, 2 * np.pi * n * 0.8) * np.sqrt(0.8) \
        * first_form.l2_scale
    scale = max(abs(first_form.value(complex(x, 1.0)))
                for x in np.linspace(-0.4, 0.4, 9))
    assert tail < 1e-9 * scale


def test_modular_coefficient_stability(first_form):
    """Coefficients a_n (n <= 10) stable under deeper truncation and a 5%
    sampling-height change."""
    R = first_form.R
    base = eigen._solve_at(R, eigen._Collocation(0.40, 40), 14,
                           first_form.parity)[0]
    deeper = eigen._solve_at(R, eigen._Collocation(0.40, 48), 22,
                             first_form.parity)[0]
    shifted = eigen._solve_at(R, eigen._Collocation(0.38, 40), 14,
                              first_form.parity)[0]
    assert np.max(np.abs(base[:10] - deeper[:10])) < 1e-6
    assert np.max(np.abs(base[:10] - shifted[:10])) < 1e-6


def test_modular_cache_roundtrip(tmp_path, first_form):
    path = tmp_path / "form.json"
    eigen.save_form(first_form, path)
    loaded = eigen.load_form(path)
    assert loaded.R == first_form.R
    assert loaded.parity == first_form.parity
    z = 0.17 + 1.23j
    assert loaded.value(z) == pytest.approx(first_form.value(z), rel=1e-12)


def test_modular_accuracy_floor_guard(first_form):
    with pytest.raises(AccuracyLossError):
        first_form.value(0.3 + 1.2j, floor=2.0)


def test_no_eigenvalue_bracket():
    with pytest.raises(NoEigenvalueError):
        eigen.hejhal_solve((5.0, 5.5), parity="even")


def test_solver_input_validation():
    with pytest.raises(ValueError):
        eigen.hejhal_solve((10.0, 9.0))
    with pytest.raises(ValueError):
        eigen.hejhal_solve((9.0, 12.0))
    with pytest.raises(ValueError):
        eigen.hejhal_solve((9.0, 9.5), y0=0.9)
    with pytest.raises(ValueError):
        eigen.hejhal_solve((9.0, 9.5), parity="mixed")
