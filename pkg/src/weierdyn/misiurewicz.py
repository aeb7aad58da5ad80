"""Prepole parameters, orbit separation checks, and density experiments.

A parameter lambda* is a prepole parameter of order n for the chosen family
when the n-th iterate of the critical value lands exactly on a pole:

    g(lambda) = f^n_lambda(e_lambda) - p_{j,k}(lambda) = 0,
    p_{j,k}(lambda) = j*lambda + k*tau*lambda,

with tau the family's generator ratio.  g is holomorphic in lambda away from
premature pole hits, so roots are isolated and can be located by a seeded
Newton iteration and certified by the argument principle on small circles.

misiurewicz_check tests the separation condition behind the Misiurewicz
property at finite resolution (delta, M): the first M orbit points of every
non-pole critical value must stay chordal distance delta away from the
critical points (half-period translates) and from infinity, and must not be
captured by a pole outright.  density_scan measures the fraction of
parameters failing that check in shrinking balls, the observable analogue of
the density statement the prepole construction feeds.

covering_steps estimates how many iterations a small disc needs before its
image covers the delta-neighborhood U_delta of the singular set, using a
forward-image cell dilation bound; it is a desk-scale demonstration, not a
rigorous covering proof.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from . import rng
from .dynamics import BudgetExhausted, EscapedSphericalBall, escape_scale, iterate
from .lattice import (
    Lattice,
    LatticeKind,
    ToleranceConfig,
    ZeroParameter,
    _kind_data,
    crit_sph_dist,
    make_lattice,
    pole_euclid_dist,
    sph_dist_to_inf,
    wp,
    wp_array,
    wp_pair,
    wp_prime,
)
from .lattice import PoleHit as PoleError

__all__ = [
    "PrepoleRoot",
    "CheckReport",
    "Violation",
    "ViolationKind",
    "DensityRow",
    "PrematurePole",
    "DiscTouchesU",
    "pole_location",
    "prepole_residual",
    "find_prepole_params",
    "misiurewicz_check",
    "density_scan",
    "covering_steps",
]

# grid minima of |g| above this are noise, not root candidates
SEED_THRESHOLD = 10.0


class PrematurePole(ArithmeticError):
    """The critical orbit hit a pole before the requested iterate."""

    def __init__(self, step: int):
        super().__init__(f"orbit hit a pole at step {step}")
        self.step = step


class DiscTouchesU(ValueError):
    """The starting disc intersects the delta-neighborhood it must cover."""


class ViolationKind(Enum):
    NEAR_CRITICAL = "NearCritical"
    NEAR_INFINITY = "NearInfinity"
    POLE_HIT = "PoleHit"


@dataclass(frozen=True)
class Violation:
    step: int
    kind: ViolationKind


@dataclass(frozen=True)
class CheckReport:
    passed: bool
    iterations: int
    first_violation: Optional[Violation]


@dataclass(frozen=True)
class PrepoleRoot:
    lambda_star: complex
    n: int
    j: int
    k: int
    residual: float
    isolation_radius: float


@dataclass(frozen=True)
class DensityRow:
    radius: float
    n_samples: int
    fail_fraction: float
    seed: int


def pole_location(kind: LatticeKind, lam: complex, j: int, k: int) -> complex:
    """The pole p_{j,k} = j*lambda + k*tau*lambda of the family member."""
    tau = _kind_data(kind).tau
    return j * lam + k * tau * lam


def _crit_value(kind: LatticeKind, lam: complex, cfg: ToleranceConfig) -> complex:
    return make_lattice(kind, lam, cfg).crit_values[0]


def _orbit_value(kind: LatticeKind, lam: complex, n: int, cfg: ToleranceConfig) -> complex:
    """f^n_lambda(e_lambda), raising PrematurePole on early capture."""
    lat = make_lattice(kind, lam, cfg)
    z = lat.crit_values[0]
    for step in range(n):
        try:
            z = wp(z, lat, cfg)
        except PoleError:
            raise PrematurePole(step) from None
    return z


def prepole_residual(
    kind: LatticeKind, lam: complex, n: int, j: int, k: int, cfg: ToleranceConfig
) -> complex:
    """g(lambda) = f^n_lambda(e_lambda) - p_{j,k}(lambda)."""
    return _orbit_value(kind, lam, n, cfg) - pole_location(kind, lam, j, k)


# ---------------------------------------------------------------------------
# root finding


def _g_array(
    kind: LatticeKind,
    n: int,
    j: int,
    k: int,
    lam: np.ndarray,
    cfg: ToleranceConfig,
) -> np.ndarray:
    """g over an array of parameters, vectorized through the normalized lattice.

    f_lambda(z) = lambda^-2 * wp_norm(z / lambda), so the whole array is
    advanced with one wp_array call per step.  Entries whose orbit dies early
    (pole capture, lambda = 0) come back as NaN.
    """
    latn = make_lattice(kind, 1.0 + 0j, cfg)
    e1n = latn.crit_values[0]
    lam = np.asarray(lam, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        lam2 = lam * lam
        alive = np.isfinite(lam) & (lam != 0)
        w = np.where(alive, e1n / np.where(alive, lam2, 1.0), 0.0)
        for _ in range(n):
            vals, poles = wp_array(np.where(alive, w / np.where(alive, lam, 1.0), 2.0 + 2.0j), latn, cfg)
            alive &= ~poles
            w = np.where(alive, vals / lam2, w)
        tau = _kind_data(kind).tau
        g = w - (j + k * tau) * lam
        g = np.where(alive, g, complex(np.nan, np.nan))
    return g


def _grid_abs_g(
    kind: LatticeKind,
    n: int,
    j: int,
    k: int,
    lam: np.ndarray,
    cfg: ToleranceConfig,
) -> np.ndarray:
    """|g| on a lambda grid; grid points whose orbit dies early get inf."""
    g = _g_array(kind, n, j, k, lam, cfg)
    return np.where(np.isnan(g), np.inf, np.abs(g))


def _local_minima(absg: np.ndarray) -> list[tuple[int, int]]:
    """8-neighbor local minima below the seed threshold.

    Ties count as minima (symmetric grids straddle the real axis with equal
    rows); duplicate seeds collapse in the dedup pass after polishing.
    """
    rows, cols = absg.shape
    inner = absg[1:-1, 1:-1]
    mask = inner < SEED_THRESHOLD
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if dr == 0 and dc == 0:
                continue
            mask &= inner <= absg[1 + dr : rows - 1 + dr, 1 + dc : cols - 1 + dc]
    return [(int(r) + 1, int(c) + 1) for r, c in zip(*np.nonzero(mask))]


def _polish_batch(
    kind: LatticeKind,
    n: int,
    j: int,
    k: int,
    seeds: Sequence[complex],
    fd_step: float,
    cfg: ToleranceConfig,
) -> list[complex]:
    """Newton on g for every seed in lockstep, central FD derivative.

    A seed retires once its residual clears newton_tol; it dies when the
    derivative degenerates or its orbit hits a pole (NaN from the array
    evaluator is absorbing).  Unconverged seeds after 60 rounds are dropped.
    """
    lam = np.asarray(seeds, dtype=complex)
    active = np.ones(lam.shape, dtype=bool)
    done = np.zeros(lam.shape, dtype=bool)
    for _ in range(60):
        if not active.any():
            break
        g0 = _g_array(kind, n, j, k, lam, cfg)
        absg = np.abs(g0)
        finite = np.isfinite(absg)
        newly = active & finite & (absg < cfg.newton_tol)
        done |= newly
        active &= finite & ~newly
        if not active.any():
            break
        gp = (
            _g_array(kind, n, j, k, lam + fd_step, cfg)
            - _g_array(kind, n, j, k, lam - fd_step, cfg)
        ) / (2.0 * fd_step)
        active &= np.isfinite(gp) & (gp != 0)
        lam = lam - np.where(active, g0 / np.where(active, gp, 1.0), 0.0)
    return [complex(z) for z, ok in zip(lam, done) if ok]


def _winding_count(
    kind: LatticeKind,
    n: int,
    j: int,
    k: int,
    center: complex,
    radius: float,
    cfg: ToleranceConfig,
) -> Optional[int]:
    """Roots of g inside the circle by the argument principle; None when the
    circle cannot be resolved (undersampled or orbit death on the contour)."""
    n_pts = 64
    while n_pts <= 1024:
        t = 2.0 * math.pi * np.arange(n_pts) / n_pts
        vals = _g_array(kind, n, j, k, center + radius * np.exp(1j * t), cfg)
        if np.any(np.isnan(vals)) or np.any(vals == 0):
            return None
        inc = np.angle(np.roll(vals, -1) / vals)
        if float(np.max(np.abs(inc))) < math.pi / 2.0:
            w = float(inc.sum()) / (2.0 * math.pi)
            if abs(w - round(w)) > 0.25:
                return None
            return int(round(w))
        n_pts *= 2
    return None


def _nearest_dists(pts: Sequence[complex]) -> list[float]:
    """Nearest-neighbor distance per point via a sorted real-axis sweep."""
    order = sorted(range(len(pts)), key=lambda i: (pts[i].real, pts[i].imag))
    out = [math.inf] * len(pts)
    for pos, i in enumerate(order):
        best = out[i]
        for nxt in order[pos + 1 :]:
            dre = pts[nxt].real - pts[i].real
            if dre >= best:
                break
            d = abs(pts[nxt] - pts[i])
            if d < best:
                best = d
            if d < out[nxt]:
                out[nxt] = d
        out[i] = best
    return out


def _certify_roots(
    kind: LatticeKind,
    n: int,
    j: int,
    k: int,
    roots: Sequence[complex],
    cfg: ToleranceConfig,
) -> dict[int, float]:
    """Certified isolation radius per root index, batched across contours.

    Each root starts just inside its nearest-neighbor distance (capped at a
    quarter of |root| so the circle stays clear of lambda = 0) and follows
    the _winding_count decision tree: an unresolved contour escalates its
    sampling up to 1024 points, any other failure halves the radius and
    resets the sampling, and a winding count of one certifies.  Roots that
    reach the radius floor uncertified are dropped.  All pending contours of
    a round share one array evaluation.
    """
    floor = max(10.0 * cfg.newton_tol, 1e-10)
    nn = _nearest_dists(roots)
    state = {}
    for i, z in enumerate(roots):
        r0 = max(min(0.25 * abs(z), 0.75 * nn[i]), floor)
        state[i] = (r0, 64)
    out: dict[int, float] = {}
    while state:
        idx = sorted(state)
        chunks = []
        for i in idx:
            r, m = state[i]
            t = 2.0 * math.pi * np.arange(m) / m
            chunks.append(roots[i] + r * np.exp(1j * t))
        vals = _g_array(kind, n, j, k, np.concatenate(chunks), cfg)
        pos = 0
        for i in idx:
            r, m = state[i]
            v = vals[pos : pos + m]
            pos += m
            escalate = False
            if not (np.any(np.isnan(v)) or np.any(v == 0)):
                inc = np.angle(np.roll(v, -1) / v)
                if float(np.max(np.abs(inc))) >= math.pi / 2.0:
                    escalate = True
                else:
                    w = float(inc.sum()) / (2.0 * math.pi)
                    if abs(w - round(w)) <= 0.25 and int(round(w)) == 1:
                        out[i] = r
                        del state[i]
                        continue
            if escalate and m < 1024:
                state[i] = (r, m * 2)
                continue
            r *= 0.5
            if r < floor:
                del state[i]
            else:
                state[i] = (r, 64)
    return out


def find_prepole_params(
    kind: LatticeKind,
    n: int,
    j: int,
    k: int,
    region: tuple[float, float, float, float],
    grid: int,
    cfg: ToleranceConfig,
) -> list[PrepoleRoot]:
    """All certified roots of the (n, j, k) prepole equation in a rectangle.

    region is (re_min, re_max, im_min, im_max) and must exclude lambda = 0.
    Grid points that are strict local minima of |g| under a coarse threshold
    seed a Newton polish; converged roots are deduplicated and kept only when
    an argument-principle circle around them counts exactly one root.
    """
    re_min, re_max, im_min, im_max = region
    if grid < 8:
        raise ValueError("grid must be at least 8")
    res = np.linspace(re_min, re_max, grid)
    ims = np.linspace(im_min, im_max, grid)
    lam_grid = res[None, :] + 1j * ims[:, None]
    absg = _grid_abs_g(kind, n, j, k, lam_grid, cfg)
    diameter = math.hypot(re_max - re_min, im_max - im_min)
    fd_step = 1e-7 * diameter

    seeds = [complex(lam_grid[r, c]) for r, c in _local_minima(absg)]
    polished = [
        z
        for z in _polish_batch(kind, n, j, k, seeds, fd_step, cfg)
        if re_min <= z.real <= re_max and im_min <= z.imag <= im_max
    ]

    polished.sort(key=lambda z: (z.real, z.imag))
    dedup: list[complex] = []
    dup_tol = 10.0 * cfg.newton_tol
    for z in polished:
        dup = False
        for q in reversed(dedup):
            if z.real - q.real > dup_tol:
                break
            if abs(z - q) <= dup_tol:
                dup = True
                break
        if not dup:
            dedup.append(z)

    kept: list[tuple[complex, float]] = []
    for z in dedup:
        try:
            res_val = abs(prepole_residual(kind, z, n, j, k, cfg))
        except PrematurePole:
            continue
        if res_val < cfg.newton_tol:
            kept.append((z, res_val))

    radii = _certify_roots(kind, n, j, k, [z for z, _ in kept], cfg)
    return [
        PrepoleRoot(
            lambda_star=z, n=n, j=j, k=k, residual=res_val, isolation_radius=radii[i]
        )
        for i, (z, res_val) in enumerate(kept)
        if i in radii
    ]


# ---------------------------------------------------------------------------
# separation check and density experiment


def _orbit_first_violation(
    kind: LatticeKind, lam: complex, delta: float, M: int, cfg: ToleranceConfig
) -> Optional[Violation]:
    """First violation along the non-pole critical orbits.

    Pole capture is a violation at any step including 0; proximity checks
    apply to iterates only (step >= 1).  A value chordally close to infinity
    is also chordally close to far-out critical translates, so the infinity
    label takes precedence; exact capture outranks both.
    """
    lat = make_lattice(kind, lam, cfg)
    crits = lat.crit_values if kind is LatticeKind.TRIANGULAR else (lat.crit_values[0],)
    best: Optional[Violation] = None
    for e in crits:
        trace = iterate(lat, e, M, cfg)
        pole_step = (
            trace.outcome.step
            if not isinstance(trace.outcome, (BudgetExhausted, EscapedSphericalBall))
            else None
        )
        for s in range(0, len(trace.points)):
            if best is not None and s > best.step:
                break
            v: Optional[Violation] = None
            if pole_step == s:
                v = Violation(step=s, kind=ViolationKind.POLE_HIT)
            elif s >= 1:
                z = trace.points[s]
                if sph_dist_to_inf(z) < delta:
                    v = Violation(step=s, kind=ViolationKind.NEAR_INFINITY)
                elif crit_sph_dist(z, lat) < delta:
                    v = Violation(step=s, kind=ViolationKind.NEAR_CRITICAL)
            if v is not None:
                if best is None or v.step < best.step:
                    best = v
                break
    return best


def misiurewicz_check(
    kind: LatticeKind, lam: complex, delta: float, M: int, cfg: ToleranceConfig
) -> CheckReport:
    """Separation check at resolution (delta, M) along the critical orbits.

    Passes when the first M iterates of every non-pole critical value keep
    chordal distance at least delta from the critical points and from
    infinity and never land on a pole outright.
    """
    if M < 1:
        raise ValueError("M must be at least 1")
    violation = _orbit_first_violation(kind, lam, delta, M, cfg)
    if violation is None:
        return CheckReport(passed=True, iterations=M, first_violation=None)
    return CheckReport(
        passed=False, iterations=violation.step + 1, first_violation=violation
    )


def density_scan(
    kind: LatticeKind,
    lambda0: complex,
    radii: Sequence[float],
    n_samples: int,
    delta: float,
    M: int,
    seed: int,
    cfg: Optional[ToleranceConfig] = None,
) -> list[DensityRow]:
    """Fraction of parameters failing the separation check in shrinking balls.

    Sample i of radius index ri is lambda0 + r * unit_disc_point(seed, ri, i),
    a counter-based substream, so rows are reproducible independently of
    evaluation order.  Parameters that fall on lambda = 0 count as failures
    (the family is undefined there).
    """
    if cfg is None:
        cfg = ToleranceConfig()
    rows = []
    for ri, r in enumerate(radii):
        fails = 0
        for i in range(n_samples):
            lam = lambda0 + r * rng.unit_disc_point(seed, ri, i)
            try:
                report = misiurewicz_check(kind, lam, delta, M, cfg)
            except ZeroParameter:
                fails += 1
                continue
            if not report.passed:
                fails += 1
        rows.append(
            DensityRow(
                radius=float(r),
                n_samples=n_samples,
                fail_fraction=fails / n_samples,
                seed=seed,
            )
        )
    return rows


# ---------------------------------------------------------------------------
# covering count


def covering_steps(
    lat: Lattice,
    center: complex,
    d: float,
    delta: float,
    maxN: int,
    grid: int,
    cfg: Optional[ToleranceConfig] = None,
) -> Optional[int]:
    """Least m <= maxN such that the m-th image of the disc B(center, d)
    covers the delta-neighborhood of the singular set, or None.

    The disc is discretized into grid cells carried forward as balls whose
    radii are dilated by the flat derivative along the center orbit.  A cell
    ball that swallows a pole is promoted to a neighborhood of infinity, and
    a neighborhood of infinity contains complete fundamental cells, whose
    image is the whole sphere.  Coverage is tested against a discretization
    of U_delta in one fundamental cell (critical-point balls), the chordal
    circle bounding the ball at infinity, and infinity itself.
    """
    if cfg is None:
        cfg = ToleranceConfig()
    if grid < 64:
        raise ValueError("grid must be at least 64")
    if d <= 0:
        raise ValueError("disc radius must be positive")

    # cell balls tiling the disc
    h = 2.0 * d / grid
    rho0 = h * math.sqrt(0.5)
    centers = []
    for iy in range(grid):
        for ix in range(grid):
            w = center + complex(
                -d + (ix + 0.5) * h,
                -d + (iy + 0.5) * h,
            )
            if abs(w - center) <= d:
                centers.append(w)

    # precondition: the disc avoids U_delta (tested on the discretization)
    for w in centers:
        if sph_dist_to_inf(w) < delta or crit_sph_dist(w, lat) < delta:
            raise DiscTouchesU("disc discretization meets the delta-neighborhood")

    # targets: critical-point balls inside one fundamental cell, the chordal
    # boundary circle of the ball at infinity, and infinity itself
    targets: list[complex] = []
    if delta > 0:
        for iy in range(grid):
            for ix in range(grid):
                z = (ix / grid) * lat.gen1 + (iy / grid) * lat.gen2
                if crit_sph_dist(z, lat) <= delta:
                    targets.append(z)
        targets.extend(lat.half_periods)
        if delta < 2.0:
            ring_r = math.sqrt(max(4.0 / (delta * delta) - 1.0, 0.0))
            for i in range(64):
                t = 2.0 * math.pi * i / 64.0
                targets.append(ring_r * complex(math.cos(t), math.sin(t)))
    target_arr = np.array(targets, dtype=complex) if targets else None

    bound_part = 10.0 * max(abs(v) for v in lat.crit_values) + 1.0
    esc = escape_scale(lat, cfg)

    # states: 0 = ball (w, rho), 1 = neighborhood of infinity (r_ch), 2 = all,
    # 3 = lost (dropped from the union)
    state = [(0, w, rho0) for w in centers]

    for m in range(1, maxN + 1):
        new_state = []
        for st in state:
            tag = st[0]
            if tag == 2 or tag == 3:
                new_state.append(st)
                continue
            if tag == 1:
                new_state.append((2,))
                continue
            _, w, rho = st
            pd = pole_euclid_dist(w, lat)
            if pd < rho:
                s = max(rho - pd, cfg.pole_eps)
                big = 1.0 / (s * s) + bound_part
                r_ch = 2.0 / math.sqrt(1.0 + big * big)
                new_state.append((1, r_ch))
                continue
            if abs(w) > esc:
                new_state.append((3,))
                continue
            try:
                val, dval = wp_pair(w, lat, cfg)
            except PoleError:
                s = max(rho, cfg.pole_eps)
                big = 1.0 / (s * s) + bound_part
                r_ch = 2.0 / math.sqrt(1.0 + big * big)
                new_state.append((1, r_ch))
                continue
            new_state.append((0, val, rho * abs(dval)))
        state = new_state

        has_all = any(st[0] == 2 for st in state)
        inf_radius = max((st[1] for st in state if st[0] == 1), default=0.0)
        inf_covered = has_all or inf_radius > 0.0
        if not inf_covered:
            continue
        if has_all or target_arr is None:
            fin_covered = True
        else:
            ws = np.array([st[1] for st in state if st[0] == 0], dtype=complex)
            rhos = np.array([st[2] for st in state if st[0] == 0], dtype=float)
            covered = np.zeros(len(target_arr), dtype=bool)
            if inf_radius > 0.0:
                t_inf = 2.0 / np.sqrt(1.0 + np.abs(target_arr) ** 2)
                covered |= t_inf < inf_radius
            if len(ws):
                dist = np.abs(target_arr[:, None] - ws[None, :])
                covered |= np.any(dist <= rhos[None, :], axis=1)
            fin_covered = bool(np.all(covered))
        if fin_covered:
            return m
    return None
