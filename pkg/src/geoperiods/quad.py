"""Quadrature engines.

Three workhorses: adaptive Gauss-Kronrod on (possibly infinite) intervals
with declared algebraic endpoint/interior singularities, a doubling
trapezoid rule for smooth periodic integrands on [0, 1), and a composite
oscillatory integrator whose node density follows the phase derivative.
``analyze_phase`` classifies stationary points of a phase function; it is
used only to *tag* oscillatory regimes, never to compute integrals.

Integrands must accept numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "QuadratureResult",
    "ConvergenceError",
    "ResolutionError",
    "integrate_adaptive",
    "integrate_periodic",
    "periodic_fourier",
    "oscillatory_integral",
    "PhaseReport",
    "analyze_phase",
]


class ConvergenceError(Exception):
    """Raised when an integrator exhausts its budget; carries the best value."""

    def __init__(self, message, best=None, error_estimate=None):
        super().__init__(message)
        self.best = best
        self.error_estimate = error_estimate


class ResolutionError(Exception):
    pass


@dataclass(frozen=True)
class QuadratureResult:
    value: complex
    error_estimate: float
    evaluations: int

    @property
    def real(self):
        return self.value.real


# --- Gauss-Kronrod 7-15 nodes/weights (standard pair on [-1, 1]) ----------

_XGK = np.array([
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.0,
])
_WGK = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728,
])
_WG = np.array([
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469,
])

_GK_X = np.concatenate([-_XGK[:-1], _XGK[::-1]])          # 15 nodes ascending
_GK_WK = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GK_WG = np.zeros(15)
_GK_WG[1:15:2] = np.concatenate([_WG[:-1], _WG[::-1]])     # gauss subset


def _gk_panel(f, a, b):
    """15-point Kronrod value, embedded 7-point Gauss error estimate."""
    h = 0.5 * (b - a)
    m = 0.5 * (a + b)
    x = m + h * _GK_X
    y = np.asarray(f(x), dtype=complex)
    vk = h * np.sum(_GK_WK * y)
    vg = h * np.sum(_GK_WG * y)
    return vk, abs(vk - vg), 15


def integrate_adaptive(f, a, b, singular_exponent_at=None,
                       rel_tol=1e-10, abs_tol=1e-14, budget=200_000):
    """Adaptive Gauss-Kronrod integration of ``f`` on [a, b].

    ``singular_exponent_at = (point, alpha)`` declares an algebraic
    singularity ``|x - point|^alpha`` (alpha > -1) that is removed by the
    substitution x = point +- u^{1/(1+alpha)} before subdividing.  The
    endpoints may be ``+-inf`` (mapped rationally).  Returns a
    QuadratureResult; raises ConvergenceError carrying the best estimate
    when the evaluation budget runs out.
    """
    pieces = _split_for_singularity(f, a, b, singular_exponent_at)
    total = 0.0 + 0.0j
    err = 0.0
    neval = 0
    for g, lo, hi in pieces:
        v, e, n = _adaptive_core(g, lo, hi, rel_tol, abs_tol,
                                 budget - neval)
        total += v
        err += e
        neval += n
    return QuadratureResult(value=total, error_estimate=err, evaluations=neval)


def _split_for_singularity(f, a, b, spec):
    if spec is None:
        return list(_map_infinite(f, a, b))
    point, alpha = spec
    if alpha <= -1.0:
        raise ValueError(f"singular exponent {alpha:g} <= -1 is not integrable")
    if not (a <= point <= b):
        raise ValueError("declared singularity lies outside the interval")
    out = []
    p = 1.0 / (1.0 + alpha)

    def right_piece(g, lo_len):
        # int_point^{point+len} f = int_0^{len^{1/p}} f(point+u^p) p u^{p-1} du
        def h(u, g=g):
            x = point + u ** p
            return g(x) * p * u ** (p - 1.0)
        return h, 0.0, lo_len ** (1.0 / p)

    if point > a:
        def fneg(x):
            return f(point - (x - point)) if False else f(x)
        # mirror the left side onto a right-sided transform
        def gleft(u):
            x = point - u ** p
            return f(x) * p * u ** (p - 1.0)
        out.append((gleft, 0.0, (point - a) ** (1.0 / p)))
    if point < b:
        if np.isinf(b):
            # split at point+1; transform [point, point+1], map the rest
            out.append(right_piece(f, 1.0))
            out.extend(_map_infinite(f, point + 1.0, b))
        else:
            out.append(right_piece(f, b - point))
    return out


def _map_infinite(f, a, b):
    """Map infinite endpoints to finite intervals (rational substitution)."""
    if np.isinf(a) and np.isinf(b):
        # x = u/(1-u^2), u in (-1, 1)
        def g(u):
            d = 1.0 - u * u
            return f(u / d) * (1.0 + u * u) / (d * d)
        yield g, -1.0 + 1e-14, 1.0 - 1e-14
    elif np.isinf(b):
        # x = a + u/(1-u), u in [0, 1)
        def g(u):
            d = 1.0 - u
            return f(a + u / d) / (d * d)
        yield g, 0.0, 1.0 - 1e-14
    elif np.isinf(a):
        def g(u):
            d = 1.0 - u
            return f(b - u / d) / (d * d)
        yield g, 0.0, 1.0 - 1e-14
    else:
        yield f, float(a), float(b)


def _adaptive_core(f, a, b, rel_tol, abs_tol, budget):
    v, e, n = _gk_panel(f, a, b)
    stack = [(a, b, v, e)]
    total_v, total_e, neval = v, e, n
    while True:
        tol = max(abs_tol, rel_tol * abs(total_v))
        if total_e <= tol or not stack:
            break
        if neval >= budget:
            raise ConvergenceError(
                f"integrate_adaptive: budget {budget} exhausted "
                f"(error estimate {total_e:.2e})",
                best=total_v, error_estimate=total_e)
        stack.sort(key=lambda t: t[3])
        lo, hi, pv, pe = stack.pop()
        mid = 0.5 * (lo + hi)
        v1, e1, n1 = _gk_panel(f, lo, mid)
        v2, e2, n2 = _gk_panel(f, mid, hi)
        total_v += v1 + v2 - pv
        total_e += e1 + e2 - pe
        neval += n1 + n2
        stack.append((lo, mid, v1, e1))
        stack.append((mid, hi, v2, e2))
    return total_v, total_e, neval


# ---------------------------------------------------------------------------


def integrate_periodic(f, rel_tol=1e-12, abs_tol=1e-14, n_start=64,
                       max_doublings=16):
    """Trapezoid rule with doubling for a smooth 1-periodic integrand on [0,1).

    Spectrally accurate; the reported error estimate is the last doubling
    change.  Raises ConvergenceError if the doubling limit is reached.
    """
    n = n_start
    prev = None
    neval = 0
    for _ in range(max_doublings):
        theta = np.arange(n) / n
        vals = np.asarray(f(theta), dtype=complex)
        cur = np.mean(vals)
        neval += n
        if prev is not None:
            change = abs(cur - prev)
            if change <= max(abs_tol, rel_tol * abs(cur)):
                return QuadratureResult(value=cur,
                                        error_estimate=change + 1e-16 * abs(cur),
                                        evaluations=neval)
        prev = cur
        n *= 2
    raise ConvergenceError(
        f"integrate_periodic: no convergence after {max_doublings} doublings",
        best=prev, error_estimate=abs(cur - prev) if prev is not None else None)


def periodic_fourier(f, n_max, rel_tol=1e-11, n_start=None, max_doublings=12):
    """Fourier coefficients ``int_0^1 f(theta) e^{-2 pi i n theta} dtheta``
    for |n| <= n_max, by FFT with doubling-based error control.

    Returns (coefficients indexed n = -n_max..n_max, error_estimate, evals).
    """
    n = n_start or max(256, 1 << int(np.ceil(np.log2(8 * max(n_max, 1)))))
    prev = None
    neval = 0
    for _ in range(max_doublings):
        theta = np.arange(n) / n
        vals = np.asarray(f(theta), dtype=complex)
        c = np.fft.fft(vals) / n
        idx = np.concatenate([np.arange(-n_max, 0) + n, np.arange(0, n_max + 1)])
        cur = c[idx]
        cur = np.roll(cur, 0)
        neval += n
        if prev is not None:
            change = float(np.max(np.abs(cur - prev)))
            scale = float(np.max(np.abs(cur))) + 1e-300
            if change <= rel_tol * scale + 1e-15:
                ordered = np.empty(2 * n_max + 1, dtype=complex)
                ordered[:] = cur
                return ordered, change, neval
        prev = cur
        n *= 2
    raise ConvergenceError(
        "periodic_fourier: spectrum did not settle", best=prev)


# ---------------------------------------------------------------------------

_gl32 = np.polynomial.legendre.leggauss(32)


def oscillatory_integral(amplitude_phase, a, b, freq_max, pts_per_cycle=8.0,
                         refine=True):
    """``int_a^b A(u) e^{i phi(u)} du`` by composite 32-point Gauss panels.

    ``amplitude_phase(u) -> (A, phi)`` evaluates amplitude and phase on an
    array; ``freq_max`` bounds |phi'|/(2 pi) so panels resolve the fastest
    oscillation.  One refinement pass (x1.5 panels) supplies the error
    estimate.
    """
    x32, w32 = _gl32

    def run(scale):
        npan = int(max(4, np.ceil((b - a) * max(freq_max, 0.25)
                                  * pts_per_cycle * scale / 32.0)))
        edges = np.linspace(a, b, npan + 1)
        h = 0.5 * np.diff(edges)
        m = 0.5 * (edges[1:] + edges[:-1])
        u = (m[:, None] + h[:, None] * x32[None, :]).ravel()
        amp, ph = amplitude_phase(u)
        f = (np.asarray(amp, dtype=complex)
             * np.exp(1j * np.asarray(ph))).reshape(npan, 32)
        return np.sum(h * (f @ w32)), npan * 32

    v1, n1 = run(1.0)
    if not refine:
        return QuadratureResult(value=v1, error_estimate=np.nan, evaluations=n1)
    v2, n2 = run(1.5)
    return QuadratureResult(value=v2, error_estimate=abs(v2 - v1),
                            evaluations=n1 + n2)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PhaseReport:
    """Critical points of a phase: (location, phase'', degeneracy order)."""

    critical_points: list = field(default_factory=list)
    regime: str = "no-critical-point"   # or nondegenerate / cubic-degenerate


_FD_STEP = 1e-5


def analyze_phase(phase, domain, derivative=None, second_derivative=None,
                  grid=4096, degenerate_tol=1e-6, max_points=64):
    """Locate and classify zeros of phase' on ``domain = (a, b)``.

    Derivatives default to central differences at step 1e-5.  A critical
    point with |phase''| below ``degenerate_tol`` (times the phase-scale)
    is inspected at third order and reported with degeneracy order 3.
    """
    a, b = domain

    if derivative is None:
        def derivative(x):
            return (phase(x + _FD_STEP) - phase(x - _FD_STEP)) / (2 * _FD_STEP)
    if second_derivative is None:
        def second_derivative(x):
            return ((phase(x + _FD_STEP) - 2.0 * phase(x)
                     + phase(x - _FD_STEP)) / _FD_STEP ** 2)

    xs = np.linspace(a, b, grid)
    ds = np.asarray(derivative(xs), dtype=float)
    flips = np.where(np.sign(ds[:-1]) * np.sign(ds[1:]) < 0)[0]
    exact = np.where(ds == 0.0)[0]
    # zero-touching critical points (phase' dips to zero without a sign
    # change, the even-order degenerate case): local minima of |phase'|
    # reaching ~zero relative to the phase scale
    absd = np.abs(ds)
    scale0 = max(float(np.max(absd)), 1.0)
    touch = 1 + np.where((absd[1:-1] <= absd[:-2]) & (absd[1:-1] <= absd[2:])
                         & (absd[1:-1] < 1e-5 * scale0) & (absd[1:-1] > 0))[0]
    if len(flips) + len(exact) + len(touch) > max_points:
        raise ResolutionError(
            f"analyze_phase: more than {max_points} critical points resolved")

    crits = []
    seen = []
    for i in flips:
        lo, hi = xs[i], xs[i + 1]
        dlo = ds[i]
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if hi - lo < 1e-8:
                break
            dm = float(derivative(mid))
            if np.sign(dm) == np.sign(dlo):
                lo, dlo = mid, dm
            else:
                hi = mid
        crits.append(0.5 * (lo + hi))
    for i in exact:
        crits.append(float(xs[i]))
    for i in touch:
        lo, hi = xs[i - 1], xs[i + 1]
        for _ in range(80):                 # ternary search on |phase'|
            if hi - lo < 1e-9:
                break
            m1 = lo + (hi - lo) / 3.0
            m2 = hi - (hi - lo) / 3.0
            if abs(float(derivative(m1))) <= abs(float(derivative(m2))):
                hi = m2
            else:
                lo = m1
        crits.append(0.5 * (lo + hi))

    phase_scale = max(float(np.max(np.abs(ds))), 1.0)
    points = []
    for c in sorted(crits):
        if seen and abs(c - seen[-1]) < 1e-7 * (b - a):
            continue
        seen.append(c)
        d2 = float(second_derivative(c))
        if abs(d2) > degenerate_tol * phase_scale:
            points.append((c, d2, 2))
        else:
            points.append((c, d2, 3))

    if not points:
        regime = "no-critical-point"
    elif any(p[2] == 3 for p in points):
        regime = "cubic-degenerate"
    else:
        regime = "nondegenerate"
    return PhaseReport(critical_points=points, regime=regime)
