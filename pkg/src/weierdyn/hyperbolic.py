"""Expansion data along a critical orbit, the adapted metric, holomorphic
motion tracking, the transversality function x, and distortion ratios.

Everything here works on a HyperbolicSample: the first M+1 points of the
critical orbit of a parameter lambda0 whose orbit stays chordal distance
delta away from the critical points and from infinity.  On such a sample
the spherical derivative of some iterate f^N is uniformly at least
a_tilde = 2, which is the quantitative form of expansion used by all
downstream estimates:

  * adapted_metric averages the spherical derivatives of f^0..f^(N-1); in
    that metric a single application of f expands by at least
    1 + (a_tilde - 1) / (N * C1) with C1 the metric's maximum.
  * track_motion follows a point of the sample to a nearby parameter by
    pulling a far-ahead reference point backward through Newton solves of
    f_lambda(w) = w_next, each pullback required to stay inside the
    shadowing ball around the reference orbit.  Expansion of f_lambda0
    makes the pullback a contraction, so the chain converges geometrically
    in the horizon length.
  * x_function is e_lambda - h_lambda(e_lambda0), the transversality
    quantity: zero at lambda0, not identically zero nearby, and its
    vanishing order K is read off as a winding number.
  * distortion_report compares flat derivative products along critical
    orbits of parameter pairs, and the parameter-vs-space derivative ratio
    xi_n' / ((f^n)'(e) * x'), both of which stay near 1 at small radius.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional

from .lattice import (
    Lattice,
    LatticeKind,
    ToleranceConfig,
    crit_sph_dist,
    make_lattice,
    sph_deriv,
    sph_dist,
    sph_dist_to_inf,
    wp,
    wp_pair,
)
from .lattice import PoleHit as PoleError
from .dynamics import escape_scale

__all__ = [
    "HyperbolicSample",
    "MotionFrame",
    "ExpansionReport",
    "DistortionReport",
    "SeparationViolated",
    "NoExpansion",
    "ShadowLost",
    "PoleOnOrbit",
    "InsufficientSampling",
    "NearZero",
    "DegenerateRadius",
    "A_TILDE",
    "N_EXP_MAX",
    "DEFAULT_N_STEPS",
    "build_sample",
    "adapted_metric",
    "track_motion",
    "x_function",
    "order_K",
    "winding_number",
    "fit_expansion",
    "distortion_report",
]

A_TILDE = 2.0
N_EXP_MAX = 64
# per-pair orbit deviation budget in distortion_report, per unit radius.
# Tying the budget to r keeps each pair's comparison depth the same when r
# is halved (the pair directions are deterministic), so the reported max
# scales with r instead of sitting at a fixed ceiling with quantization
# noise.  delta/4 still caps it for large r where shadowing would break.
DISTORTION_BUDGET = 1000.0
# extra orbit length kept beyond M so every sample point has N_EXP_MAX
# derivative factors and track_motion has reference points ahead of it
EXTENSION = 64
DEFAULT_N_STEPS = 48


class SeparationViolated(RuntimeError):
    """The critical orbit entered the delta-neighborhood of the critical
    points ("crit") or of infinity ("infinity")."""

    def __init__(self, step: int, kind: str):
        super().__init__(f"separation violated at step {step} ({kind})")
        self.step = step
        self.kind = kind


class NoExpansion(RuntimeError):
    """No iterate up to N_EXP_MAX expands uniformly on the sample."""


class ShadowLost(RuntimeError):
    """A Newton pullback failed or left the shadowing ball."""

    def __init__(self, step: int):
        super().__init__(f"shadowing lost at pullback step {step}")
        self.step = step


class PoleOnOrbit(ArithmeticError):
    """The orbit below an adapted-metric evaluation hit a pole."""

    def __init__(self, step: int):
        super().__init__(f"orbit hit a pole at step {step}")
        self.step = step


class InsufficientSampling(RuntimeError):
    """Winding increments too large to resolve; raise n_samples."""


class NearZero(RuntimeError):
    """|x| on the circle is too close to 0 to trust its argument."""


class DegenerateRadius(RuntimeError):
    """No distortion pair kept its orbits close for at least 3 steps."""


@dataclass(frozen=True)
class HyperbolicSample:
    kind: LatticeKind
    lambda0: complex
    points: tuple[complex, ...]
    delta: float
    min_crit_dist: float
    min_inf_dist: float
    N_exp: int
    a_tilde: float
    # orbit continuation used for derivative products and shadowing
    # references; ext_points[i] = f^i(e), ext_factors[i] = spherical factor
    # of the step i -> i+1
    ext_points: tuple[complex, ...]
    ext_factors: tuple[float, ...]
    # last continuation index that still keeps the sample's separation; the
    # inverse branch is only well defined inside delta-balls, so pullback
    # chains never reach past this point
    ext_usable: int


@dataclass(frozen=True)
class MotionFrame:
    z0: complex
    lam: complex
    h_value: complex
    conj_residual: float
    steps_used: int


@dataclass(frozen=True)
class ExpansionReport:
    C: float
    a: float
    n_range: int
    per_step_min: tuple[float, ...]


@dataclass(frozen=True)
class DistortionReport:
    max_ratio: float
    corollary_ratio: float
    pairs_used: int


def build_sample(
    kind: LatticeKind, lambda0: complex, M: int, delta: float, cfg: ToleranceConfig
) -> HyperbolicSample:
    """Record the critical orbit of lambda0 with its separation and expansion
    certificates.

    The orbit is continued EXTENSION steps past M so that derivative products
    of length up to N_EXP_MAX start at every sample point; the continuation
    is allowed to die early, the sample itself is not.
    """
    if M < 0:
        raise ValueError("M must be nonnegative")
    lat = make_lattice(kind, lambda0, cfg)
    esc = escape_scale(lat, cfg)
    e = lat.crit_values[0]
    ext_points = [e]
    ext_factors: list[float] = []
    z = e
    died: Optional[int] = None
    for s in range(M + EXTENSION):
        if abs(z) > esc:
            died = s
            break
        try:
            val, dval = wp_pair(z, lat, cfg)
        except PoleError:
            died = s
            break
        ext_factors.append(sph_deriv(dval, z, val))
        z = val
        ext_points.append(z)
    if died is not None and died <= M:
        raise SeparationViolated(step=died, kind="infinity")

    points = tuple(ext_points[: M + 1])
    for s, p in enumerate(points):
        if sph_dist_to_inf(p) < delta:
            raise SeparationViolated(step=s, kind="infinity")
        if crit_sph_dist(p, lat) < delta:
            raise SeparationViolated(step=s, kind="crit")
    min_crit = min(crit_sph_dist(p, lat) for p in points)
    min_inf = min(sph_dist_to_inf(p) for p in points)

    ext_usable = M
    for s in range(M + 1, len(ext_points)):
        p = ext_points[s]
        if sph_dist_to_inf(p) < delta or crit_sph_dist(p, lat) < delta:
            break
        ext_usable = s

    # cumulative log derivative products; factors are positive here since a
    # zero factor would mean a sample point is exactly critical, which the
    # separation test above has excluded for delta > 0
    logs = [0.0]
    for f in ext_factors:
        logs.append(logs[-1] + (math.log(f) if f > 0 else -math.inf))
    n_avail = len(ext_factors) - M
    N_exp = None
    for N in range(1, min(N_EXP_MAX, max(n_avail, 0)) + 1):
        worst = min(logs[i + N] - logs[i] for i in range(M + 1))
        if worst >= math.log(A_TILDE):
            N_exp = N
            break
    if N_exp is None:
        raise NoExpansion(f"no uniform expansion up to N = {N_EXP_MAX}")

    return HyperbolicSample(
        kind=kind,
        lambda0=complex(lambda0),
        points=points,
        delta=delta,
        min_crit_dist=min_crit,
        min_inf_dist=min_inf,
        N_exp=N_exp,
        a_tilde=A_TILDE,
        ext_points=tuple(ext_points),
        ext_factors=tuple(ext_factors),
        ext_usable=ext_usable,
    )


def adapted_metric(z: complex, lat: Lattice, N: int, cfg: ToleranceConfig) -> float:
    """d(z) = (1/N) * sum of spherical |(f^n)'(z)| for n = 0..N-1.

    The n = 0 term is 1.  In this metric one application of f expands by at
    least 1 + (a_tilde - 1)/(N * max d) on an expanding sample.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    total = 1.0
    prod = 1.0
    z_cur = complex(z)
    for n in range(1, N):
        try:
            val, dval = wp_pair(z_cur, lat, cfg)
        except PoleError:
            raise PoleOnOrbit(step=n - 1) from None
        prod *= sph_deriv(dval, z_cur, val)
        total += prod
        z_cur = val
    return total / N


def _pullback_chain(
    sample: HyperbolicSample,
    lam: complex,
    anchor: int,
    n_steps: int,
    cfg: ToleranceConfig,
) -> tuple[complex, int]:
    """Backward Newton shadowing of the reference orbit starting at anchor.

    Returns (h_value approximating h_lambda(points[anchor]), horizon used).
    """
    refs = sample.ext_points
    horizon = min(n_steps, sample.ext_usable - anchor)
    if horizon < 1:
        raise ValueError("no reference orbit beyond the anchor point")
    lat = make_lattice(sample.kind, lam, cfg)
    eps = sample.delta / 2.0
    w = refs[anchor + horizon]
    for k in range(horizon - 1, -1, -1):
        target = w
        ref = refs[anchor + k]
        w = ref
        for _ in range(40):
            try:
                val, dval = wp_pair(w, lat, cfg)
            except PoleError:
                raise ShadowLost(step=k) from None
            g = val - target
            if abs(g) < cfg.newton_tol:
                break
            if dval == 0:
                raise ShadowLost(step=k)
            w = w - g / dval
        else:
            raise ShadowLost(step=k)
        if sph_dist(w, ref) > eps:
            raise ShadowLost(step=k)
    return w, horizon


def track_motion(
    sample: HyperbolicSample,
    z0: complex,
    lam: complex,
    n_steps: int,
    cfg: ToleranceConfig,
) -> MotionFrame:
    """h_lambda(z0) for z0 a sample point, by backward pullback shadowing.

    The conjugacy residual |h(f_lambda0(z0)) - f_lambda(h(z0))| is computed
    from a second, independent pullback chain anchored one step downstream;
    it is NaN when no such chain exists.
    """
    anchor = None
    for i, p in enumerate(sample.points):
        if p == z0 or abs(p - z0) <= cfg.eval_tol * max(1.0, abs(p)):
            anchor = i
            break
    if anchor is None:
        raise ValueError("z0 is not a sample point")
    h_value, used = _pullback_chain(sample, lam, anchor, n_steps, cfg)

    conj = math.nan
    if anchor + 2 <= sample.ext_usable:
        try:
            h_next, _ = _pullback_chain(sample, lam, anchor + 1, n_steps, cfg)
            lat = make_lattice(sample.kind, lam, cfg)
            conj = abs(h_next - wp(h_value, lat, cfg))
        except (ShadowLost, PoleError, ValueError):
            conj = math.nan
    return MotionFrame(
        z0=complex(z0), lam=complex(lam), h_value=h_value, conj_residual=conj, steps_used=used
    )


def x_function(sample: HyperbolicSample, lam: complex, cfg: ToleranceConfig) -> complex:
    """x(lambda) = e_lambda - h_lambda(e_lambda0); zero exactly at lambda0."""
    frame = track_motion(sample, sample.points[0], lam, DEFAULT_N_STEPS, cfg)
    lat = make_lattice(sample.kind, lam, cfg)
    return lat.crit_values[0] - frame.h_value


def winding_number(values: list[complex]) -> int:
    """Winding of a sampled closed loop about 0 by summed argument increments.

    Raises InsufficientSampling when consecutive samples turn by a quarter
    circle or more, or when the total fails to close up to an integer.
    """
    n = len(values)
    total = 0.0
    for i in range(n):
        a = values[i]
        b = values[(i + 1) % n]
        ratio = b / a
        inc = math.atan2(ratio.imag, ratio.real)
        if abs(inc) >= math.pi / 2.0:
            raise InsufficientSampling(f"argument increment {inc:.3f} at sample {i}")
        total += inc
    w = total / (2.0 * math.pi)
    if abs(w - round(w)) > 0.1:
        raise InsufficientSampling(f"winding sum {w:.4f} is not near an integer")
    return int(round(w))


def order_K(sample: HyperbolicSample, rho: float, n_samples: int, cfg: ToleranceConfig) -> int:
    """Vanishing order of x at lambda0: the winding number of x around the
    circle |lambda - lambda0| = rho."""
    if n_samples < 4:
        raise ValueError("n_samples must be at least 4")
    vals = []
    for i in range(n_samples):
        t = 2.0 * math.pi * i / n_samples
        lam = sample.lambda0 + rho * complex(math.cos(t), math.sin(t))
        vals.append(x_function(sample, lam, cfg))
    if min(abs(v) for v in vals) <= 10.0 * cfg.eval_tol:
        raise NearZero("|x| on the circle is within noise of zero")
    return winding_number(vals)


def fit_expansion(sample: HyperbolicSample, n_range: int) -> ExpansionReport:
    """Lower-envelope expansion constants: per_step_min[k] >= C * a^k, a > 1.

    per_step_min[k] is the minimum over sample points of the spherical
    |(f^k)'|; the pair (C, a) comes from the steepest supporting edge of the
    lower convex hull of (k, log per_step_min[k]).
    """
    if n_range < 1:
        raise ValueError("n_range must be at least 1")
    if len(sample.ext_factors) < len(sample.points) - 1 + n_range:
        raise ValueError("sample orbit too short for the requested range")
    M = len(sample.points) - 1
    logs = [0.0]
    for f in sample.ext_factors:
        logs.append(logs[-1] + (math.log(f) if f > 0 else -math.inf))
    mins = []
    for k in range(n_range + 1):
        mins.append(min(logs[i + k] - logs[i] for i in range(M + 1)))
    if any(math.isinf(v) for v in mins):
        raise NoExpansion("a sample point runs through a critical point")

    # lower convex hull of (k, mins[k]), left to right
    hull: list[tuple[float, float]] = []
    for k, y in enumerate(mins):
        pt = (float(k), y)
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (y2 - y1) * (pt[0] - x1) >= (pt[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(pt)
    (x1, y1), (x2, y2) = hull[-2], hull[-1]
    slope = (y2 - y1) / (x2 - x1)
    if not slope > 0.0:
        raise NoExpansion("no supporting line with a > 1")
    intercept = min(y - slope * k for k, y in enumerate(mins))
    # back the intercept off one part in 1e9 so the recorded inequality
    # survives roundoff in exp/log round trips
    C = math.exp(intercept) * (1.0 - 1e-9)
    a = math.exp(slope)
    return ExpansionReport(
        C=C, a=a, n_range=n_range, per_step_min=tuple(math.exp(v) for v in mins)
    )


def _param_orbit(
    kind: LatticeKind, lam: complex, n_max: int, cfg: ToleranceConfig
) -> tuple[list[complex], list[complex]]:
    """Critical orbit of lam with flat derivatives, stopping early at poles."""
    lat = make_lattice(kind, lam, cfg)
    esc = escape_scale(lat, cfg)
    pts = [lat.crit_values[0]]
    ders: list[complex] = []
    z = pts[0]
    for _ in range(n_max):
        if abs(z) > esc:
            break
        try:
            val, dval = wp_pair(z, lat, cfg)
        except PoleError:
            break
        ders.append(dval)
        z = val
        pts.append(z)
    return pts, ders


def _close_horizon(
    sample: HyperbolicSample, pts: list[complex], delta_p: float
) -> int:
    """Largest n with the orbit within delta_p of the reference at all k <= n."""
    n = 0
    limit = min(len(pts), len(sample.points))
    for k in range(limit):
        if sph_dist(pts[k], sample.points[k]) >= delta_p:
            break
        n = k
    return n


def distortion_report(
    sample: HyperbolicSample, r: float, n_pairs: int, cfg: ToleranceConfig
) -> DistortionReport:
    """Main distortion ratio over parameter pairs in B(lambda0, r).

    For each deterministic pair (a, b) the comparison length n is the largest
    step both critical orbits stay within delta/4 of the reference orbit; the
    ratio is |product of f_a' along a's orbit / product of f_b' along b's - 1|
    accumulated as a product of per-step quotients.  Also evaluates the
    parameter-derivative ratio |xi_n'/((f^n)'(e) * x') - 1| at lambda0 + r/2
    with central differences of step r/100.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be at least 1")
    if r <= 0:
        raise ValueError("r must be positive")
    delta_p = min(sample.delta / 4.0, r * DISTORTION_BUDGET)
    M = len(sample.points) - 1

    max_ratio = 0.0
    pairs_used = 0
    for i in range(n_pairs):
        t = 2.0 * math.pi * i / n_pairs
        a = sample.lambda0 + r * complex(math.cos(t), math.sin(t))
        t2 = t + math.pi / n_pairs
        b = sample.lambda0 + 0.5 * r * complex(math.cos(t2), math.sin(t2))
        pts_a, ders_a = _param_orbit(sample.kind, a, M, cfg)
        pts_b, ders_b = _param_orbit(sample.kind, b, M, cfg)
        n = min(_close_horizon(sample, pts_a, delta_p), _close_horizon(sample, pts_b, delta_p))
        n = min(n, len(ders_a), len(ders_b))
        if n < 3:
            continue
        prod = 1.0 + 0j
        for k in range(n):
            prod *= ders_a[k] / ders_b[k]
        max_ratio = max(max_ratio, abs(prod - 1.0))
        pairs_used += 1
    if pairs_used == 0:
        raise DegenerateRadius("no pair kept its orbits close for 3 steps")

    lam_e = sample.lambda0 + 0.5 * r
    h = r / 100.0
    pts_e, ders_e = _param_orbit(sample.kind, lam_e, M, cfg)
    n_e = min(_close_horizon(sample, pts_e, delta_p), len(ders_e))
    corollary = math.nan
    if n_e >= 1:
        pts_p, _ = _param_orbit(sample.kind, lam_e + h, n_e, cfg)
        pts_m, _ = _param_orbit(sample.kind, lam_e - h, n_e, cfg)
        if len(pts_p) > n_e and len(pts_m) > n_e:
            xi_prime = (pts_p[n_e] - pts_m[n_e]) / (2.0 * h)
            x_prime = (
                x_function(sample, lam_e + h, cfg) - x_function(sample, lam_e - h, cfg)
            ) / (2.0 * h)
            deriv = 1.0 + 0j
            for k in range(n_e):
                deriv *= ders_e[k]
            denom = deriv * x_prime
            if denom != 0:
                corollary = abs(xi_prime / denom - 1.0)
    return DistortionReport(
        max_ratio=max_ratio, corollary_ratio=corollary, pairs_used=pairs_used
    )
