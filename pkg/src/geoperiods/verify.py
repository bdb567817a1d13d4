"""The acceptance checks, as callables shared by pytest and the CLI.

Each check returns a CheckResult with a pass flag, timing against its
budget, and a detail string.  Checks that need solved cusp forms take a
cache directory; with ``solve_missing=False`` they are skipped (not
failed) when the cache is absent.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import eigen, quad
from .hypgeom import GroupElement, circle_orbit, geodesic_orbit_from_matrix
from .modelrep import (C1_NORM_SLOPE, SpectralParam, check_regime_envelopes,
                       circle_edge_constant, density_b, density_c,
                       fit_regime_constants, k_fixed_vector, model_functional,
                       test_vector, vector_norm_sq)
from .specfun import table_integral
from .periods import (RestrictionProfile, SphereEquator, TorusGeodesic,
                      check_average_bound, extract_coefficients,
                      fit_restriction_exponent, periods as fourier_periods,
                      restrict)

__all__ = ["CheckResult", "ALL_CHECKS", "run_checks", "default_cache_dir",
           "acceptance_forms", "ACCEPTANCE_GEODESIC", "ACCEPTANCE_CIRCLE"]

# fixed curves for the averaged-bound run.  The geodesic must be long (so
# the measurable coefficient band covers the whole T sweep) AND low-lying
# (its axis tops out near y = 1.6, where cusp forms still have mass; axes
# that climb toward the cusp make every period exponentially small).  The
# element is the word A^4 B^4 in [[2,1],[1,1]] and its transpose: trace
# 1766, length ~14.95.  The circle radius 1.6 plays the same role.
ACCEPTANCE_GEODESIC = ((883.0, 1428.0), (546.0, 883.0))
ACCEPTANCE_CIRCLE = (0.2 + 1.1j, 1.6)
ACCEPTANCE_BRACKETS = ((9.0, 10.0), (12.0, 12.7), (13.5, 14.2))


@dataclass
class CheckResult:
    name: str
    passed: bool
    skipped: bool = False
    elapsed: float = 0.0
    budget: float = np.inf
    details: str = ""
    extras: dict = field(default_factory=dict)

    def line(self) -> str:
        if self.skipped:
            status = "SKIP"
        else:
            status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.name} ({self.elapsed:.1f}s / "
                f"budget {self.budget:.0f}s) {self.details}")


def _finish(name, budget, t0, passed, details, skipped=False, **extras):
    elapsed = time.time() - t0
    ok = passed and elapsed <= budget
    if passed and elapsed > budget:
        details += f"; OVER BUDGET ({elapsed:.1f}s > {budget:.0f}s)"
    return CheckResult(name=name, passed=ok, skipped=skipped, elapsed=elapsed,
                       budget=budget, details=details, extras=extras)


def default_cache_dir():
    return os.environ.get(eigen.CACHE_ENV_VAR,
                          os.path.join(os.getcwd(), "form_cache"))


def acceptance_forms(cache_dir, solve_missing=True, brackets=ACCEPTANCE_BRACKETS):
    """Load (or solve and cache) the cusp forms used by the acceptance runs."""
    forms = []
    for bracket in brackets:
        found = None
        for parity in ("even", "odd"):
            path = eigen.cache_path(cache_dir, bracket, parity, 22)
            if os.path.exists(path):
                found = eigen.load_form(path)
                break
        if found is None:
            if not solve_missing:
                return None
            found = eigen.hejhal_solve(bracket, parity="auto")
            eigen.save_form(found, eigen.cache_path(
                cache_dir, bracket, found.parity, found.M0))
        forms.append(found)
    return forms


# --------------------------------------------------------------- check 1

def check_gamma_formula(rel_tol=1e-6, floor=3e-8, budget=120.0):
    """Closed Gamma form of the geodesic density against direct singular
    quadrature of the functional on the rotation-invariant vector.

    Entries whose closed-form magnitude sits below ``floor`` cannot be
    checked relatively in double precision (the quadrature's attainable
    absolute accuracy is ~1e-14 of the integrand scale); those entries
    are required to quadrature out below 1e-7 in absolute value instead.
    """
    t0 = time.time()
    worst_rel = 0.0
    worst_at = None
    floor_bad = 0
    n_rel = n_floor = 0
    for lam_abs in (10.0, 20.0, 40.0, 80.0):
        par = SpectralParam(lam=1j * lam_abs)
        e0 = k_fixed_vector(par)
        for q in (0.5, 1.0 / np.log(2.0), 2.0):
            table = density_b(par, q, (0, 200))
            step = table.meta["lattice_step"]
            for n in range(0, 201):
                closed = table.entry(n)
                if abs(closed) >= floor:
                    d = model_functional(par, 1j * step * n, e0)
                    rel = abs(closed - d) / abs(closed)
                    n_rel += 1
                    if rel > worst_rel:
                        worst_rel, worst_at = rel, (lam_abs, q, n)
                else:
                    # below the double-precision floor: a light absolute pass
                    d = model_functional(par, 1j * step * n, e0,
                                         floor=1e-9, pts_per_cycle=6.0,
                                         refine=False)
                    n_floor += 1
                    if abs(d) > 1e-7:
                        floor_bad += 1
    passed = worst_rel <= rel_tol and floor_bad == 0
    details = (f"{n_rel} entries checked at rel {rel_tol:g} "
               f"(worst {worst_rel:.2e} at {worst_at}), {n_floor} below the "
               f"double-precision floor checked absolutely"
               + ("" if floor_bad == 0 else f", {floor_bad} floor violations"))
    return _finish("gamma-formula-vs-quadrature", budget, t0, passed, details,
                   worst_rel=worst_rel)


# --------------------------------------------------------------- check 2

def _table_integral_quadrature(s, t):
    """Independent oracle: int_R |x|^s (1+x^2)^t dx by adaptive panels."""
    def f01(x):
        return np.exp(s * np.log(x) + t * np.log1p(x * x))

    def finf(u):
        # x = 1/u on [1, inf): integrand u^{-s-2-2t} (1+u^2)^t
        return np.exp((-s - 2.0 - 2.0 * t) * np.log(u) + t * np.log1p(u * u))

    r1 = quad.integrate_adaptive(f01, 0.0, 1.0,
                                 singular_exponent_at=(0.0, s.real),
                                 rel_tol=1e-11)
    r2 = quad.integrate_adaptive(finf, 0.0, 1.0,
                                 singular_exponent_at=(0.0, (-s - 2 - 2 * t).real),
                                 rel_tol=1e-11)
    return 2.0 * (r1.value + r2.value)


def check_table_integral(n_samples=100, seed=20260810, rel_tol=1e-8,
                         budget=30.0):
    t0 = time.time()
    exact = table_integral(0.0, -1.0)
    worst = abs(exact - np.pi) / np.pi
    rng = np.random.default_rng(seed)
    checked = 1
    worst_at = ("s=0,t=-1", worst)
    for _ in range(n_samples):
        s = complex(rng.uniform(-0.9, 2.0), rng.uniform(-5.0, 5.0))
        t = complex(rng.uniform(-4.0, -(s.real + 1.0) / 2.0 - 0.25),
                    rng.uniform(-5.0, 5.0))
        closed = table_integral(s, t)
        ref = _table_integral_quadrature(s, t)
        rel = abs(closed - ref) / abs(ref)
        checked += 1
        if rel > worst:
            worst, worst_at = rel, (f"s={s:.3f},t={t:.3f}", rel)
    details = f"{checked} pairs, worst rel {worst:.2e} at {worst_at[0]}"
    return _finish("table-integral-identity", budget, t0, worst <= rel_tol,
                   details, worst_rel=worst)


# --------------------------------------------------------------- check 3

def check_geodesic_envelopes(slack=2.0, budget=60.0):
    """Bulk 1/|lam|, transition 1/sqrt|lam|, tail e^{-sigma/10} envelope
    constants fitted at |lam| = 80 must cover |lam| = 160 within 2x."""
    t0 = time.time()
    worst = -np.inf
    details = []
    for q in (0.5, 1.0 / np.log(2.0), 2.0):
        n_max = max(400, int(2.2 * 160.0 / (2.0 * np.pi * q)) + 50)
        fit = fit_regime_constants(
            density_b(SpectralParam(lam=80j), q, (-n_max, n_max)))
        chk = check_regime_envelopes(
            density_b(SpectralParam(lam=160j), q, (-n_max, n_max)), fit,
            slack=slack)
        w = max(chk["worst_log_excess"].values())
        worst = max(worst, w)
        details.append(f"q={q:.3g}: slack used {np.exp(w):.2f}x")
    passed = worst <= np.log(slack)
    return _finish("geodesic-three-regime-envelopes", budget, t0, passed,
                   "; ".join(details), worst_log_excess=worst)


# --------------------------------------------------------------- check 4

def check_circle_regimes(budget=300.0):
    """Circle density: bulk |c|^2 slope -1 +- 0.1 in |lam|, transition
    plateau slope -2/3 +- 0.15, and >= 1e3 drop per octave past the edge."""
    t0 = time.time()
    g = GroupElement([[2.0, 0.0], [0.0, 0.5]])
    c_edge = circle_edge_constant(g)
    lams = (40.0, 80.0, 160.0, 320.0)
    bulk_med, trans_max, drops = [], [], []
    for lam_abs in lams:
        n_edge = c_edge * lam_abs / (2.0 * np.pi)
        n_max = int(np.ceil(2.6 * n_edge)) + 8
        table = density_c(SpectralParam(lam=1j * lam_abs), g, (0, n_max))
        a2 = np.abs(table.entries) ** 2
        nb = int(0.8 * n_edge)
        bulk_med.append(np.median(a2[2:nb:2]))
        lo, hi = int(0.9 * n_edge), int(np.ceil(1.1 * n_edge))
        trans_max.append(np.max(a2[lo:hi + 1]))
        n0 = int(np.ceil(1.1 * n_edge)) + 2
        n0 += n0 % 2
        drops.append(a2[n0] / max(a2[2 * n0], 1e-300))
    s_bulk = float(np.polyfit(np.log(lams), np.log(bulk_med), 1)[0])
    s_trans = float(np.polyfit(np.log(lams), np.log(trans_max), 1)[0])
    min_drop = min(drops)
    passed = (abs(s_bulk + 1.0) <= 0.1 and abs(s_trans + 2.0 / 3.0) <= 0.15
              and min_drop >= 1e3)
    details = (f"bulk slope {s_bulk:.3f} (want -1+-0.1), transition slope "
               f"{s_trans:.3f} (want -0.667+-0.15), min octave drop "
               f"{min_drop:.1e} (want >= 1e3)")
    return _finish("circle-regime-exponents", budget, t0, passed, details,
                   bulk_slope=s_bulk, transition_slope=s_trans)


# --------------------------------------------------------------- check 5

def check_sphere_sharpness(budget=60.0):
    t0 = time.time()
    equator = SphereEquator()
    pairs = []
    for n in range(10, 201):
        phi = eigen.sphere_harmonic(n, n)
        prof = restrict(phi, equator, grid=1024)
        pairs.append((phi.mu, prof.norm_restriction()))
    slope, const, resid = fit_restriction_exponent(pairs)
    passed = abs(slope - 0.25) <= 0.02
    details = (f"log p vs log mu slope {slope:.4f} (want 0.25+-0.02), "
               f"constant {const:.3g}, max log-misfit {resid:.2e}")
    return _finish("sphere-equator-sharpness", budget, t0, passed, details,
                   slope=slope)


# --------------------------------------------------------------- check 6

def check_plancherel(cache_dir=None, solve_missing=True, tol=1e-6,
                     budget=120.0):
    t0 = time.time()
    profiles = [
        ("torus(3,4)", restrict(eigen.torus_mode((3, 4)), TorusGeodesic())),
        ("sphere Y(20,13)", restrict(eigen.sphere_harmonic(20, 13),
                                     SphereEquator())),
    ]
    skipped_modular = False
    cache_dir = cache_dir or default_cache_dir()
    forms = acceptance_forms(cache_dir, solve_missing,
                             brackets=ACCEPTANCE_BRACKETS[:1])
    if forms is None:
        skipped_modular = True
    else:
        phi = eigen.as_eigenfunction(forms[0])
        geo = geodesic_orbit_from_matrix(GroupElement(ACCEPTANCE_GEODESIC))
        circ = circle_orbit(*ACCEPTANCE_CIRCLE)
        profiles.append(("modular geodesic", restrict(phi, geo, grid=2048,
                                                      exact=True)))
        profiles.append(("modular circle", restrict(phi, circ, grid=2048,
                                                    exact=True)))
    worst = 0.0
    rows = []
    for label, prof in profiles:
        table = fourier_periods(prof, (-prof.grid // 4, prof.grid // 4))
        defect = table.plancherel_defect()
        worst = max(worst, defect)
        rows.append(f"{label}: defect {defect:.2e}")
    details = "; ".join(rows) + ("; modular part skipped (no cache)"
                                 if skipped_modular else "")
    return _finish("plancherel-identity", budget, t0, worst <= tol, details,
                   worst_defect=worst)


# --------------------------------------------------------------- check 7

def check_planted_roundtrip(n_plants=100, seed=20260810, tol=1e-8,
                            budget=60.0):
    t0 = time.time()
    rng = np.random.default_rng(seed)
    par = SpectralParam(lam=60j)
    densities = [
        ("geodesic", density_b(par, 1.0 / np.log(2.0), (-40, 40))),
        ("circle", density_c(par, GroupElement([[2.0, 0.0], [0.0, 0.5]]),
                             (-40, 40))),
    ]
    worst = 0.0
    count = 0
    for kind, dens in densities:
        # plant on the well-conditioned band: dividing out a density entry
        # of relative size eps_d amplifies sampling roundoff by 1/eps_d
        usable = [int(n) for n in dens.n_values
                  if abs(dens.entry(int(n))) >= 1e-4 * dens.max_abs()]
        grid = 1024
        theta = np.arange(grid) / grid
        for _ in range(n_plants // 2):
            planted = {}
            samples = np.zeros(grid, dtype=complex)
            for n in usable:
                a = complex(rng.uniform(0.5, 2.0) * np.cos(rng.uniform(0, 2 * np.pi)),
                            rng.uniform(0.5, 2.0) * np.sin(rng.uniform(0, 2 * np.pi)))
                planted[n] = a
                samples += a * dens.entry(n) * np.exp(2j * np.pi * n * theta)
            prof = RestrictionProfile.from_samples(samples, length=1.7,
                                                   curve_id=f"planted-{kind}")
            table = fourier_periods(prof, (-40, 40))
            extract_coefficients(table, dens)
            count += 1
            for n, a in planted.items():
                if n in table.a:
                    worst = max(worst, abs(table.a[n] - a))
    details = (f"{count} plants over both density kinds, worst coefficient "
               f"error {worst:.2e}")
    return _finish("planted-coefficient-roundtrip", budget, t0, worst <= tol,
                   details, worst_err=worst)


# --------------------------------------------------------------- check 8

def check_maass_self_consistency(cache_dir=None, solve_missing=True,
                                 budget=300.0, seed=20260810):
    t0 = time.time()
    cache_dir = cache_dir or default_cache_dir()
    forms = acceptance_forms(cache_dir, solve_missing,
                             brackets=ACCEPTANCE_BRACKETS[:1])
    if forms is None:
        return _finish("maass-solver-self-consistency", budget, t0, True,
                       "no cached forms and solving disabled", skipped=True)
    form = forms[0]
    phi = eigen.as_eigenfunction(form)
    rng = np.random.default_rng(seed)
    pts = [complex(rng.uniform(-0.45, 0.45), rng.uniform(0.9, 2.0))
           for _ in range(20)]
    lap = eigen.laplace_residual(phi, pts)
    vals = np.array([eigen.evaluate(phi, z) for z in pts])
    scale = float(np.max(np.abs(vals)))
    auto = max(abs(eigen.evaluate(phi, z) - eigen.evaluate(phi, -1.0 / z))
               for z in pts)
    in_window = 9.5336 <= form.R <= 9.5338
    checks = {
        "R in [9.5336, 9.5338]": in_window,
        "R stability (M0+8) < 1e-6": form.r_stability < 1e-6,
        "system residual < 1e-8": form.residual < 1e-8,
        "laplace residual < 1e-4": lap < 1e-4,
        "automorphy < 1e-6 * max": auto < 1e-6 * scale,
    }
    passed = all(checks.values())
    details = (f"R={form.R:.9f} ({form.parity}); "
               + "; ".join(f"{k}: {'ok' if v else 'VIOLATED'}"
                           for k, v in checks.items())
               + f"; laplace {lap:.1e}, automorphy {auto / scale:.1e}")
    return _finish("maass-solver-self-consistency", budget, t0, passed,
                   details, R=form.R, parity=form.parity)


# --------------------------------------------------------------- check 9

def _maass_period_tables(forms, t_max=64):
    geo = geodesic_orbit_from_matrix(GroupElement(ACCEPTANCE_GEODESIC))
    circ = circle_orbit(*ACCEPTANCE_CIRCLE)
    n_range = (-int(1.3 * t_max), int(1.3 * t_max))
    geo_tables, circ_tables = [], []
    for form in forms:
        phi = eigen.as_eigenfunction(form)
        par = SpectralParam.from_r(form.R)
        prof_g = restrict(phi, geo, grid=2048, exact=True)
        tb_g = fourier_periods(prof_g, n_range)
        extract_coefficients(tb_g, density_b(par, geo.q, n_range),
                             threshold=1e-10)
        geo_tables.append(tb_g)
        prof_c = restrict(phi, circ, grid=2048, exact=True)
        tb_c = fourier_periods(prof_c, n_range)
        extract_coefficients(tb_c, density_c(par, circ.g, n_range),
                             threshold=1e-10)
        circ_tables.append(tb_c)
    return geo_tables, circ_tables


def check_average_bound_maass(cache_dir=None, solve_missing=True,
                              budget=900.0, t_grid=(8, 16, 32, 64),
                              variation_limit=3.0):
    t0 = time.time()
    cache_dir = cache_dir or default_cache_dir()
    forms = acceptance_forms(cache_dir, solve_missing)
    if forms is None:
        return _finish("average-bound-boundedness", budget, t0, True,
                       "no cached forms and solving disabled", skipped=True)
    geo_tables, circ_tables = _maass_period_tables(forms, t_max=max(t_grid))
    rep_g = check_average_bound(geo_tables, t_grid)
    rep_c = check_average_bound(circ_tables, t_grid)

    var_ok = (rep_g.variation_t <= variation_limit
              and rep_g.variation_forms <= variation_limit
              and rep_c.variation_t <= variation_limit
              and rep_c.variation_forms <= variation_limit)
    # restriction-norm power laws with single fitted constants
    mus = [tb.mu for tb in geo_tables]
    p_geo = [tb.length * tb.mean_square for tb in geo_tables]
    p_cir = [tb.length * tb.mean_square for tb in circ_tables]
    c_geo = max(p / m ** 0.25 for p, m in zip(p_geo, mus))
    c_cir = max(p / m ** (1.0 / 6.0) for p, m in zip(p_cir, mus))
    p0s = []
    for tb in geo_tables + circ_tables:
        i0 = list(tb.n_values).index(0)
        p0s.append(abs(tb.p[i0]))
    c_unif = max(p0s)
    const_ok = all(np.isfinite([c_geo, c_cir, c_unif]))
    passed = var_ok and const_ok and rep_g.passed and rep_c.passed
    details = (f"geodesic ratio variation: T-axis {rep_g.variation_t:.2f}x, "
               f"forms {rep_g.variation_forms:.2f}x; circle: "
               f"T-axis {rep_c.variation_t:.2f}x, forms "
               f"{rep_c.variation_forms:.2f}x (limit {variation_limit}x); "
               f"fitted constants: p<=C mu^(1/4) C={c_geo:.3g}, "
               f"p<=C mu^(1/6) C={c_cir:.3g}, |p0|<=C'' C''={c_unif:.3g}")
    return _finish("average-bound-boundedness", budget, t0, passed, details,
                   geodesic=rep_g, circle=rep_c)


# --------------------------------------------------------------- check 10

def check_test_vector_constants(budget=120.0, t_values=(10.0, 50.0, 100.0)):
    t0 = time.time()
    norm_bad = 0.0
    c2_at = {}
    for T in t_values:
        par = SpectralParam(lam=1j * min(T, 40.0))
        vt = test_vector(T, par)
        ns = vector_norm_sq(vt)
        norm_bad = max(norm_bad, abs(ns - C1_NORM_SLOPE * T) / (C1_NORM_SLOPE * T))
        # functional lower bound over the covered frequency box
        best = np.inf
        for lam_abs in np.linspace(0.0, min(T, 40.0), 6):
            parl = SpectralParam(lam=1j * lam_abs)
            vtl = test_vector(T, parl)
            for sig in np.linspace(0.0, T, 11):
                d = model_functional(parl, 1j * sig, vtl)
                best = min(best, abs(d) ** 2)
        c2_at[T] = best
    c2 = 0.995 * c2_at[t_values[0]]
    lower_ok = all(v >= c2 for v in c2_at.values())
    passed = norm_bad <= 1e-10 and lower_ok
    details = (f"norm slope misfit {norm_bad:.2e} (want <= 1e-10); "
               f"c2 fixed at {c2:.4f} from T={t_values[0]:g}; box minima "
               + ", ".join(f"T={t:g}: {v:.4f}" for t, v in c2_at.items()))
    return _finish("test-vector-constants", budget, t0, passed, details,
                   c2=c2)


# ---------------------------------------------------------------------------

ALL_CHECKS = [
    ("gamma-formula-vs-quadrature", check_gamma_formula, False),
    ("table-integral-identity", check_table_integral, False),
    ("geodesic-three-regime-envelopes", check_geodesic_envelopes, False),
    ("circle-regime-exponents", check_circle_regimes, False),
    ("sphere-equator-sharpness", check_sphere_sharpness, False),
    ("plancherel-identity", check_plancherel, True),
    ("planted-coefficient-roundtrip", check_planted_roundtrip, False),
    ("maass-solver-self-consistency", check_maass_self_consistency, True),
    ("average-bound-boundedness", check_average_bound_maass, True),
    ("test-vector-constants", check_test_vector_constants, False),
]


def run_checks(names=None, cache_dir=None, solve_missing=True, overrides=None):
    """Run the acceptance suite (or a named subset); yields CheckResults."""
    overrides = overrides or {}
    for name, fn, needs_cache in ALL_CHECKS:
        if names and name not in names:
            continue
        kwargs = dict(overrides.get(name, {}))
        if needs_cache:
            kwargs.setdefault("cache_dir", cache_dir)
            kwargs.setdefault("solve_missing", solve_missing)
        try:
            yield fn(**kwargs)
        except Exception as exc:  # an acceptance check must never crash the runner
            yield CheckResult(name=name, passed=False, elapsed=0.0,
                              details=f"crashed: {type(exc).__name__}: {exc}")
