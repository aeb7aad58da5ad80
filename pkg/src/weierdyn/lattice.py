"""Weierstrass elliptic functions on triangular and square lattices.

Two one-parameter families of lattices are supported, indexed by a nonzero
complex scale lambda:

    triangular   [lambda, e^(2*pi*i/3) * lambda]
    square       [lambda, i * lambda]

Both are invariant under multiplication by their root of unity, which forces
g2 = 0 (triangular) and g3 = 0 (square).  The Weierstrass function

    wp(z) = 1/z^2 + sum over nonzero lattice points w of (1/(z-w)^2 - 1/w^2)

is evaluated by reducing z to the fundamental cell, re-centering on the
nearest lattice translate, and summing the Laurent expansion

    wp(z) = 1/z^2 + sum_{k>=1} c_k z^(2k),   c_1 = g2/20,  c_2 = g3/28,
    c_k = 3/((2k+3)(k-2)) * sum_{m=1}^{k-2} c_m c_{k-1-m}   (k >= 3),

whose coefficients are the Eisenstein numbers of the defining series
(c_k = (2k+1) * sum w^(-2k-2)).  After re-centering, |z| is at most the
covering radius of the lattice (|z|^2 <= |lambda|^2 / 3 triangular,
<= |lambda|^2 / 2 square), so the series converges geometrically and the
truncation length is chosen from that explicit tail bound.  The literal
truncated lattice sum converges far too slowly for the tolerances used
here (its tail decays only like 1/radius); it is kept as `wp_direct_sum`
for cross-checking.

Everything is computed on the normalized lattice [1, tau] and rescaled with
the homogeneity laws wp(cz; cL) = c^-2 wp(z; L), g2(cL) = c^-4 g2(L),
g3(cL) = c^-6 g3(L), so the per-kind constants are computed once and cached.

Spherical (chordal) metric of diameter 2 on the Riemann sphere:

    sph_dist(z, w)   = 2 |z - w| / sqrt((1 + |z|^2)(1 + |w|^2))
    sph_deriv(f', z, fz) = |f'| (1 + |z|^2) / (1 + |fz|^2)

Any complex number with a non-finite component is treated as the point at
infinity.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

__all__ = [
    "LatticeKind",
    "ToleranceConfig",
    "Lattice",
    "ZeroParameter",
    "PoleHit",
    "make_lattice",
    "reduce",
    "wp",
    "wp_prime",
    "wp_pair",
    "wp_array",
    "wp_direct_sum",
    "eisenstein_direct_sum",
    "sph_dist",
    "sph_deriv",
    "is_infinite",
]


class LatticeKind(Enum):
    TRIANGULAR = "triangular"
    SQUARE = "square"


# e^(2*pi*i/3) and i: the rotations fixing each lattice family.
ROT_TRIANGULAR = complex(-0.5, math.sqrt(3.0) / 2.0)
ROT_SQUARE = 1j


class ZeroParameter(ValueError):
    """The lattice scale must be a nonzero finite complex number."""


class PoleHit(ArithmeticError):
    """Evaluation refused: the point is within pole_eps of the lattice point
    m*gen1 + n*gen2."""

    def __init__(self, m: int, n: int):
        super().__init__(f"point within pole_eps of lattice point ({m}, {n})")
        self.m = m
        self.n = n


@dataclass(frozen=True)
class ToleranceConfig:
    """Numerical knobs shared across the package.

    eval_tol           absolute truncation target for wp on the normalized
                       lattice (the actual-lattice error rescales by
                       |lambda|^-2)
    pole_eps           evaluation refusal radius around lattice points, in
                       normalized units (Euclidean distance of z/lambda to
                       the nearest lattice point of [1, tau])
    newton_tol         residual threshold for Newton refinements
    max_lattice_radius index cutoff for the direct-sum oracles
    """

    eval_tol: float = 1e-12
    pole_eps: float = 1e-6
    newton_tol: float = 1e-9
    max_lattice_radius: int = 300

    def __post_init__(self):
        if not (self.eval_tol > 0 and self.pole_eps > 0 and self.newton_tol > 0):
            raise ValueError("tolerances must be positive")
        if not self.eval_tol < self.pole_eps:
            raise ValueError("eval_tol must be smaller than pole_eps")
        if self.max_lattice_radius <= 0:
            raise ValueError("max_lattice_radius must be positive")


@dataclass(frozen=True)
class Lattice:
    """A concrete lattice with cached invariants and critical data.

    half_periods are (gen1/2, gen2/2, (gen1+gen2)/2); crit_values are the
    wp-images of the half periods in the same order, so crit_values[0] is
    the distinguished critical value e1 = wp(gen1/2).
    """

    kind: LatticeKind
    lam: complex
    gen1: complex
    gen2: complex
    g2: complex
    g3: complex
    half_periods: tuple[complex, complex, complex]
    crit_values: tuple[complex, complex, complex]
    n_terms: int


# ---------------------------------------------------------------------------
# per-kind normalized data


@dataclass(frozen=True)
class _KindData:
    tau: complex
    inv_im_tau: float
    g2: complex
    g3: complex
    coeffs: tuple[complex, ...]   # c_k for k = 1..len
    dcoeffs: tuple[complex, ...]  # 2k * c_k
    max_ratio_sq: float           # worst |z|^2 after re-centering, lattice [1, tau]


_ZETA4 = math.pi ** 4 / 90.0
_ZETA6 = math.pi ** 6 / 945.0


def _row_sum_invariants(tau: complex) -> tuple[complex, complex]:
    """Eisenstein sums G4 and G6 for the lattice [1, tau].

    Rows with fixed second index are summed in closed form,

        sum_m (m+w)^-4 = pi^4 (3 - 2 s^2) / (3 s^4),      s = sin(pi w),
        sum_m (m+w)^-6 = pi^6 (1/s^6 - 1/s^4 + 2/(15 s^2)),

    and the row totals decay like exp(-4*pi*Im(tau)*n), so a short loop
    reaches machine precision.
    """
    g4 = 2.0 * _ZETA4 + 0j
    g6 = 2.0 * _ZETA6 + 0j
    pi4 = math.pi ** 4
    pi6 = math.pi ** 6
    for n in range(1, 64):
        s = cmath.sin(math.pi * n * tau)
        s2 = s * s
        s4 = s2 * s2
        s6 = s4 * s2
        r4 = pi4 * (3.0 - 2.0 * s2) / (3.0 * s4)
        r6 = pi6 * (1.0 / s6 - 1.0 / s4 + 2.0 / (15.0 * s2))
        g4 += 2.0 * r4
        g6 += 2.0 * r6
        if abs(r4) < 1e-18 and abs(r6) < 1e-18:
            break
    return g4, g6


def _series_coeffs(g2: complex, g3: complex, count: int) -> list[complex]:
    """Laurent coefficients c_k of wp - 1/z^2 via the classical recursion."""
    c = [0j] * (count + 1)  # c[0] unused
    c[1] = g2 / 20.0
    c[2] = g3 / 28.0
    for k in range(3, count + 1):
        acc = 0j
        for m in range(1, k - 1):
            acc += c[m] * c[k - 1 - m]
        c[k] = 3.0 * acc / ((2 * k + 3) * (k - 2))
    return c[1:]


@lru_cache(maxsize=None)
def _kind_data(kind: LatticeKind) -> _KindData:
    tau = ROT_TRIANGULAR if kind is LatticeKind.TRIANGULAR else ROT_SQUARE
    g4, g6 = _row_sum_invariants(tau)
    g2 = 60.0 * g4
    g3 = 140.0 * g6
    coeffs = tuple(_series_coeffs(g2, g3, 90))
    dcoeffs = tuple(2.0 * (k + 1) * c for k, c in enumerate(coeffs))
    max_ratio_sq = 1.0 / 3.0 if kind is LatticeKind.TRIANGULAR else 0.5
    return _KindData(
        tau=tau,
        inv_im_tau=1.0 / tau.imag,
        g2=g2,
        g3=g3,
        coeffs=coeffs,
        dcoeffs=dcoeffs,
        max_ratio_sq=max_ratio_sq,
    )


def _terms_for_tol(kd: _KindData, eval_tol: float) -> int:
    # |c_k z^(2k)| <= (2k+1) * S(2k+2) * q^(2k) with S bounded by a handful of
    # nearest lattice points; keep terms until the geometric tail bound drops
    # two decades below eval_tol.
    q2 = kd.max_ratio_sq
    target = eval_tol * 1e-2
    bound = 8.0
    for k in range(1, len(kd.coeffs) + 1):
        bound = (2 * k + 3) * 8.0 * q2 ** k / (1.0 - q2)
        if bound < target:
            return max(k, 8)
    return len(kd.coeffs)


def make_lattice(kind: LatticeKind, lam: complex, cfg: ToleranceConfig) -> Lattice:
    """Build a lattice for the given family and scale.

    Raises ZeroParameter for lam = 0 (or a non-finite lam).
    """
    lam = complex(lam)
    if lam == 0 or not (math.isfinite(lam.real) and math.isfinite(lam.imag)):
        raise ZeroParameter("lattice scale must be nonzero and finite")
    kd = _kind_data(kind)
    gen1 = lam
    gen2 = kd.tau * lam
    lam2 = lam * lam
    lam4 = lam2 * lam2
    g2 = kd.g2 / lam4
    g3 = kd.g3 / (lam4 * lam2)
    n_terms = _terms_for_tol(kd, cfg.eval_tol)
    half = (gen1 / 2.0, gen2 / 2.0, (gen1 + gen2) / 2.0)
    lat = Lattice(
        kind=kind,
        lam=lam,
        gen1=gen1,
        gen2=gen2,
        g2=g2,
        g3=g3,
        half_periods=half,
        crit_values=(0j, 0j, 0j),
        n_terms=n_terms,
    )
    crit = tuple(wp(h, lat, cfg) for h in half)
    object.__setattr__(lat, "crit_values", crit)
    return lat


# ---------------------------------------------------------------------------
# reduction and evaluation

# translate offsets tried when re-centering on the nearest lattice point;
# the nearest neighbor of any point of the coordinate box lies within these.
_NEIGHBOR_OFFSETS = [(dm, dn) for dm in (-1, 0, 1) for dn in (-1, 0, 1)]


def _reduce_coords(u: complex, kd: _KindData) -> tuple[float, float, int, int]:
    # u = a + b*tau with a, b real
    b = u.imag * kd.inv_im_tau
    a = u.real - b * kd.tau.real
    m = math.floor(a + 0.5)
    n = math.floor(b + 0.5)
    return a - m, b - n, m, n


def _recenter(a0: float, b0: float, kd: _KindData) -> tuple[complex, int, int]:
    # nearest lattice translate of the box representative, Euclidean norm
    tau = kd.tau
    best = None
    best_d = math.inf
    for dm, dn in _NEIGHBOR_OFFSETS:
        aa = a0 - dm
        bb = b0 - dn
        re = aa + bb * tau.real
        im = bb * tau.imag
        d = re * re + im * im
        if d < best_d:
            best_d = d
            best = (complex(re, im), dm, dn)
    return best


def reduce(z: complex, lat: Lattice) -> tuple[complex, int, int]:
    """Reduce z modulo the lattice: z = z_red + m*gen1 + n*gen2 with the
    generator coordinates of z_red in [-1/2, 1/2)."""
    kd = _kind_data(lat.kind)
    u = complex(z) / lat.lam
    a0, b0, m, n = _reduce_coords(u, kd)
    z_red = z - (m * lat.gen1 + n * lat.gen2)
    return z_red, m, n


def _norm_point(z: complex, lat: Lattice, cfg: ToleranceConfig) -> tuple[complex, int, int]:
    """Normalized re-centered representative u0 = z/lam - (m + n*tau) with
    |u0| minimal; raises PoleHit when |u0| < pole_eps."""
    kd = _kind_data(lat.kind)
    u = complex(z) / lat.lam
    a0, b0, m, n = _reduce_coords(u, kd)
    u0, dm, dn = _recenter(a0, b0, kd)
    if abs(u0) < cfg.pole_eps:
        raise PoleHit(m + dm, n + dn)
    return u0, m + dm, n + dn


def wp(z: complex, lat: Lattice, cfg: ToleranceConfig) -> complex:
    """Evaluate the Weierstrass function of the lattice at z."""
    kd = _kind_data(lat.kind)
    u0, _, _ = _norm_point(z, lat, cfg)
    u2 = u0 * u0
    acc = 0j
    coeffs = kd.coeffs
    for k in range(lat.n_terms - 1, -1, -1):
        acc = acc * u2 + coeffs[k]
    val = 1.0 / u2 + acc * u2
    return val / (lat.lam * lat.lam)


def wp_prime(z: complex, lat: Lattice, cfg: ToleranceConfig) -> complex:
    """Evaluate the derivative of the Weierstrass function at z."""
    kd = _kind_data(lat.kind)
    u0, _, _ = _norm_point(z, lat, cfg)
    u2 = u0 * u0
    acc = 0j
    dcoeffs = kd.dcoeffs
    for k in range(lat.n_terms - 1, -1, -1):
        acc = acc * u2 + dcoeffs[k]
    val = -2.0 / (u2 * u0) + acc * u0
    return val / (lat.lam * lat.lam * lat.lam)


def wp_pair(z: complex, lat: Lattice, cfg: ToleranceConfig) -> tuple[complex, complex]:
    """wp and wp_prime together, sharing the reduction."""
    kd = _kind_data(lat.kind)
    u0, _, _ = _norm_point(z, lat, cfg)
    u2 = u0 * u0
    acc = 0j
    dacc = 0j
    coeffs = kd.coeffs
    dcoeffs = kd.dcoeffs
    for k in range(lat.n_terms - 1, -1, -1):
        acc = acc * u2 + coeffs[k]
        dacc = dacc * u2 + dcoeffs[k]
    lam2 = lat.lam * lat.lam
    val = (1.0 / u2 + acc * u2) / lam2
    dval = (-2.0 / (u2 * u0) + dacc * u0) / (lam2 * lat.lam)
    return val, dval


def wp_array(z: np.ndarray, lat: Lattice, cfg: ToleranceConfig) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized wp.  Returns (values, pole_mask); entries within pole_eps
    of a lattice point are flagged in the mask and set to nan instead of
    raising."""
    kd = _kind_data(lat.kind)
    u = np.asarray(z, dtype=complex) / lat.lam
    b = u.imag * kd.inv_im_tau
    a = u.real - b * kd.tau.real
    a0 = a - np.floor(a + 0.5)
    b0 = b - np.floor(b + 0.5)
    # stack the nine candidate translates, pick the nearest
    best = None
    best_d = None
    for dm, dn in _NEIGHBOR_OFFSETS:
        re = (a0 - dm) + (b0 - dn) * kd.tau.real
        im = (b0 - dn) * kd.tau.imag
        d = re * re + im * im
        cand = re + 1j * im
        if best is None:
            best = cand
            best_d = d
        else:
            take = d < best_d
            best = np.where(take, cand, best)
            best_d = np.where(take, d, best_d)
    pole = np.abs(best) < cfg.pole_eps
    u0 = np.where(pole, 1.0 + 0j, best)
    u2 = u0 * u0
    acc = np.zeros_like(u2)
    coeffs = kd.coeffs
    for k in range(lat.n_terms - 1, -1, -1):
        acc = acc * u2 + coeffs[k]
    val = (1.0 / u2 + acc * u2) / (lat.lam * lat.lam)
    val = np.where(pole, np.nan + 1j * np.nan, val)
    return val, pole


# ---------------------------------------------------------------------------
# direct-sum oracles

_DISK_FACTOR = {LatticeKind.TRIANGULAR: math.sqrt(3.0) / 2.0, LatticeKind.SQUARE: 1.0}


def _disk_points(kind: LatticeKind, radius: int) -> np.ndarray:
    """Nonzero lattice points of [1, tau] inside the disk |w| <= factor*radius.

    A disk is invariant under the lattice rotation, so symmetric cancellation
    in the truncated sums is exact up to roundoff; an index box is not.
    """
    kd = _kind_data(kind)
    idx = np.arange(-radius, radius + 1)
    m, n = np.meshgrid(idx, idx, indexing="ij")
    w = m + n * kd.tau
    r = abs(w)
    cutoff = _DISK_FACTOR[kind] * radius
    mask = (r > 0) & (r <= cutoff)
    return w[mask]


def eisenstein_direct_sum(kind: LatticeKind, power: int, radius: int) -> complex:
    """Literal truncated Eisenstein sum over the disk of index radius."""
    w = _disk_points(kind, radius)
    terms = w ** (-power)
    return complex(np.sum(terms))


def wp_direct_sum(z: complex, lat: Lattice, radius: int) -> complex:
    """Literal truncated lattice sum for wp, the defining series itself.

    Slowly convergent (the tail decays like radius^-2 after symmetric
    pairing); used only as a cross-check oracle.
    """
    kd = _kind_data(lat.kind)
    u = complex(z) / lat.lam
    a0, b0, _, _ = _reduce_coords(u, kd)
    u0, _, _ = _recenter(a0, b0, kd)
    w = _disk_points(lat.kind, radius)
    terms = 1.0 / ((u0 - w) ** 2) - 1.0 / (w ** 2)
    total = 1.0 / (u0 * u0) + complex(np.sum(terms))
    return total / (lat.lam * lat.lam)


# ---------------------------------------------------------------------------
# spherical metric


def is_infinite(z: complex) -> bool:
    """True when z represents the point at infinity (non-finite component)."""
    return not (math.isfinite(z.real) and math.isfinite(z.imag))


def sph_dist(z: complex, w: complex) -> float:
    """Chordal distance on the Riemann sphere of diameter 2."""
    z = complex(z)
    w = complex(w)
    zi = is_infinite(z)
    wi = is_infinite(w)
    if zi and wi:
        return 0.0
    if zi or wi:
        f = w if zi else z
        return 2.0 / math.sqrt(1.0 + abs(f) ** 2)
    return 2.0 * abs(z - w) / (math.sqrt(1.0 + abs(z) ** 2) * math.sqrt(1.0 + abs(w) ** 2))


def sph_deriv(fprime: complex, z: complex, fz: complex) -> float:
    """Spherical derivative factor |f'| (1+|z|^2) / (1+|fz|^2); fz finite."""
    return abs(fprime) * (1.0 + abs(z) ** 2) / (1.0 + abs(fz) ** 2)


def sph_dist_to_inf(z: complex) -> float:
    """Chordal distance from z to the point at infinity."""
    if is_infinite(z):
        return 0.0
    return 2.0 / math.sqrt(1.0 + abs(z) ** 2)


def pole_euclid_dist(z: complex, lat: Lattice) -> float:
    """Euclidean distance from z to the nearest lattice point."""
    kd = _kind_data(lat.kind)
    u = complex(z) / lat.lam
    a0, b0, _, _ = _reduce_coords(u, kd)
    u0, _, _ = _recenter(a0, b0, kd)
    return abs(u0) * abs(lat.lam)


def crit_sph_dist(z: complex, lat: Lattice) -> float:
    """Chordal distance from z to the critical-point set of wp, the three
    half-periods and all their lattice translates.

    The set accumulates at infinity on the sphere, so the distance from the
    point at infinity is 0.
    """
    if is_infinite(z):
        return 0.0
    kd = _kind_data(lat.kind)
    best = math.inf
    for c in lat.half_periods:
        u = (complex(z) - c) / lat.lam
        a0, b0, _, _ = _reduce_coords(u, kd)
        u0, _, _ = _recenter(a0, b0, kd)
        nearest = z - u0 * lat.lam
        d = sph_dist(z, nearest)
        if d < best:
            best = d
    return best
