"""Orbit dynamics of f = wp on a fixed lattice.

Iteration traces, attracting-cycle detection with Newton refinement, and
classification of a parameter by the fate of its critical orbits.

The triangular family carries a rotational symmetry: with zeta = e^(2*pi*i/3),
f^n(e2) = zeta * f^n(e1) and f^n(e3) = zeta^2 * f^n(e1), and the derivative of
f takes the same value along the three orbits (zeta^3 = 1 cancels the cubic
scaling of wp').  A triangular parameter therefore has either one
rotation-invariant attracting cycle or three rotated copies sharing one
multiplier.  The square family is simpler: e2 = -e1 lands on e1's orbit after
one step because f is even, and e3 = 0 is itself a pole, so only e1 needs
iterating and the cycle count is always one.

Escape to infinity is a pole phenomenon here: wp is periodic, so an orbit
value can only be enormous because the previous point sat close to a lattice
point.  The iterate loop refuses points beyond the scale that pole_eps
permits and reports them as EscapedSphericalBall rather than overflowing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .lattice import (
    Lattice,
    LatticeKind,
    ToleranceConfig,
    make_lattice,
    sph_deriv,
    sph_dist,
    wp_pair,
)
from .lattice import PoleHit as PoleError

__all__ = [
    "BudgetExhausted",
    "PoleHit",
    "EscapedSphericalBall",
    "OrbitTrace",
    "Cycle",
    "AttractingCycles",
    "AllCriticalPrepole",
    "Indeterminate",
    "NewtonDivergence",
    "DEFAULT_BUDGET",
    "DEFAULT_MAX_PERIOD",
    "CYCLE_DETECTION_TOL",
    "escape_scale",
    "iterate",
    "find_cycle",
    "classify",
]

DEFAULT_BUDGET = 2000
DEFAULT_MAX_PERIOD = 64
CYCLE_DETECTION_TOL = 1e-6
# |multiplier| must clear 1 by this much before a cycle counts as attracting;
# parabolic and rotation-domain parameters stay Indeterminate.
ATTRACTING_MARGIN = 1e-8


@dataclass(frozen=True)
class BudgetExhausted:
    pass


@dataclass(frozen=True)
class PoleHit:
    """points[step] lies within pole_eps of the lattice point m*gen1 + n*gen2."""

    step: int
    m: int
    n: int


@dataclass(frozen=True)
class EscapedSphericalBall:
    """points[step] exceeded the modulus any non-refused evaluation can produce."""

    step: int


Outcome = Union[BudgetExhausted, PoleHit, EscapedSphericalBall]


@dataclass(frozen=True)
class OrbitTrace:
    start: complex
    points: tuple[complex, ...]
    sph_derivs: tuple[float, ...]
    outcome: Outcome


@dataclass(frozen=True)
class Cycle:
    period: int
    point: complex
    multiplier: complex


@dataclass(frozen=True)
class AttractingCycles:
    count: int
    cycle: Cycle


@dataclass(frozen=True)
class AllCriticalPrepole:
    steps: tuple[int, ...]


@dataclass(frozen=True)
class Indeterminate:
    iterations_used: int


Verdict = Union[AttractingCycles, AllCriticalPrepole, Indeterminate]


class NewtonDivergence(RuntimeError):
    """Cycle refinement failed to converge."""


def escape_scale(lat: Lattice, cfg: ToleranceConfig) -> float:
    """Largest modulus wp can emit: 1/(pole_eps*|lambda|)^2 up to the series
    correction.  Anything bigger marks the orbit as numerically at infinity."""
    return 1.0 / (cfg.pole_eps * abs(lat.lam)) ** 2


def iterate(lat: Lattice, z0: complex, max_iter: int, cfg: ToleranceConfig) -> OrbitTrace:
    """Forward orbit of z0 under wp, at most max_iter applications.

    points[0] = z0; sph_derivs[k] is the spherical derivative factor of the
    step points[k] -> points[k+1].  Stops early at a pole hit or once a point
    exceeds the escape scale; those outcomes are encoded, never thrown.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    esc = escape_scale(lat, cfg)
    z = complex(z0)
    points = [z]
    derivs: list[float] = []
    outcome: Outcome = BudgetExhausted()
    for step in range(max_iter):
        if abs(z) > esc:
            outcome = EscapedSphericalBall(step=step)
            break
        try:
            val, dval = wp_pair(z, lat, cfg)
        except PoleError as hit:
            outcome = PoleHit(step=step, m=hit.m, n=hit.n)
            break
        derivs.append(sph_deriv(dval, z, val))
        z = val
        points.append(z)
    else:
        if abs(z) > esc:
            outcome = EscapedSphericalBall(step=len(points) - 1)
    return OrbitTrace(
        start=complex(z0),
        points=tuple(points),
        sph_derivs=tuple(derivs),
        outcome=outcome,
    )


def _orbit_step(w: complex, p: int, lat: Lattice, cfg: ToleranceConfig) -> tuple[complex, complex]:
    """f^p(w) and its derivative by the chain rule (flat, not spherical)."""
    val = w
    deriv = 1.0 + 0j
    for _ in range(p):
        v, dv = wp_pair(val, lat, cfg)
        deriv *= dv
        val = v
    return val, deriv


def _newton_refine(w: complex, p: int, lat: Lattice, cfg: ToleranceConfig) -> tuple[complex, complex]:
    """Polish a periodic-point candidate by Newton on f^p(w) - w."""
    for _ in range(50):
        try:
            val, deriv = _orbit_step(w, p, lat, cfg)
        except PoleError:
            raise NewtonDivergence("cycle refinement stepped onto a pole") from None
        g = val - w
        if abs(g) < cfg.newton_tol:
            return w, deriv
        dg = deriv - 1.0
        if dg == 0:
            raise NewtonDivergence("singular derivative in cycle refinement")
        w = w - g / dg
    raise NewtonDivergence("cycle refinement did not converge in 50 steps")


def _proper_divisors(p: int) -> list[int]:
    return [d for d in range(1, p) if p % d == 0]


def find_cycle(
    trace: OrbitTrace,
    lat: Lattice,
    tol: float,
    max_period: int,
    cfg: Optional[ToleranceConfig] = None,
) -> Optional[Cycle]:
    """Detect a periodic cycle in the tail of a completed orbit.

    Scans periods 1..max_period for the smallest near-return at the last
    point, refines it by Newton, and reduces the period to the smallest
    divisor that still closes up.  Returns None for traces that ended in a
    pole hit or escape, or when no near-return exists.  Raises
    NewtonDivergence when polishing fails; callers treat that as no cycle.
    """
    if cfg is None:
        cfg = ToleranceConfig()
    if not isinstance(trace.outcome, BudgetExhausted):
        return None
    pts = trace.points
    for p in range(1, max_period + 1):
        if len(pts) < p + 1:
            break
        if abs(pts[-1] - pts[-1 - p]) >= tol:
            continue
        w, mult = _newton_refine(pts[-1], p, lat, cfg)
        for d in _proper_divisors(p):
            try:
                val, dmult = _orbit_step(w, d, lat, cfg)
            except PoleError:
                continue
            if abs(val - w) < cfg.newton_tol:
                return Cycle(period=d, point=w, multiplier=dmult)
        return Cycle(period=p, point=w, multiplier=mult)
    return None


def _cycle_point_set(c: Cycle, lat: Lattice, cfg: ToleranceConfig) -> list[complex]:
    pts = [c.point]
    w = c.point
    for _ in range(c.period - 1):
        w, _ = wp_pair(w, lat, cfg)
        pts.append(w)
    return pts


def _min_sph_dist(a: list[complex], b: list[complex]) -> float:
    return min(sph_dist(x, y) for x in a for y in b)


def classify(kind: LatticeKind, lam: complex, budget: int, cfg: ToleranceConfig) -> Verdict:
    """Classify a parameter by the fate of its critical orbits.

    All critical orbits converging to attracting cycles gives
    AttractingCycles with the count of distinct cycles (1 or 3 in the
    triangular family, always 1 in the square family, where only e1 needs
    iterating).  All critical orbits landing on poles gives
    AllCriticalPrepole with the hit steps; the square family reports
    (s, s, 0) since e2 = -e1 shares the orbit and e3 = 0 is the pole itself.
    Everything else, including parabolic and rotation-domain behavior and
    exhausted budgets, is Indeterminate.
    """
    lat = make_lattice(kind, lam, cfg)
    if kind is LatticeKind.TRIANGULAR:
        crit = list(lat.crit_values)
    else:
        crit = [lat.crit_values[0]]
    traces = [iterate(lat, e, budget, cfg) for e in crit]

    if all(isinstance(t.outcome, PoleHit) for t in traces):
        if kind is LatticeKind.TRIANGULAR:
            steps = tuple(t.outcome.step for t in traces)
        else:
            s = traces[0].outcome.step
            steps = (s, s, 0)
        return AllCriticalPrepole(steps=steps)

    if not all(isinstance(t.outcome, BudgetExhausted) for t in traces):
        return Indeterminate(iterations_used=budget)

    cycles: list[Cycle] = []
    for t in traces:
        try:
            c = find_cycle(t, lat, CYCLE_DETECTION_TOL, DEFAULT_MAX_PERIOD, cfg=cfg)
        except NewtonDivergence:
            c = None
        if c is None or abs(c.multiplier) >= 1.0 - ATTRACTING_MARGIN:
            return Indeterminate(iterations_used=budget)
        cycles.append(c)

    point_sets = [_cycle_point_set(c, lat, cfg) for c in cycles]
    separation = 10.0 * cfg.newton_tol
    distinct: list[list[complex]] = []
    for ps in point_sets:
        if all(_min_sph_dist(ps, q) > separation for q in distinct):
            distinct.append(ps)
    count = len(distinct)
    if kind is LatticeKind.TRIANGULAR and count not in (1, 3):
        return Indeterminate(iterations_used=budget)
    return AttractingCycles(count=count, cycle=cycles[0])
