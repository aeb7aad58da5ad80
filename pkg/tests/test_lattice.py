import cmath
import math

import numpy as np
import pytest

from conftest import E1_SQUARE_NORM, E1_TRI_NORM
from weierdyn.lattice import (
    LatticeKind,
    PoleHit,
    ZeroParameter,
    crit_sph_dist,
    eisenstein_direct_sum,
    is_infinite,
    make_lattice,
    reduce,
    sph_deriv,
    sph_dist,
    sph_dist_to_inf,
    wp,
    wp_array,
    wp_direct_sum,
    wp_pair,
    wp_prime,
)

ZETA = cmath.exp(2j * math.pi / 3)


def _interior_points(lat, count, seed):
    """Cell points with both coordinates in [0.15, 0.85], clear of poles."""
    gen = np.random.default_rng(seed)
    pts = []
    while len(pts) < count:
        a, b = gen.uniform(0.15, 0.85, size=2)
        pts.append(a * lat.gen1 + b * lat.gen2)
    return pts


def test_make_lattice_generators(cfg):
    tri = make_lattice(LatticeKind.TRIANGULAR, 1.0 + 0j, cfg)
    assert tri.gen1 == 1.0 + 0j
    assert abs(tri.gen2 - ZETA) < 1e-15
    sq = make_lattice(LatticeKind.SQUARE, 2j, cfg)
    assert abs(sq.gen2 - (-2.0)) < 1e-15


def test_make_lattice_rejects_zero(cfg):
    with pytest.raises(ZeroParameter):
        make_lattice(LatticeKind.SQUARE, 0j, cfg)
    with pytest.raises(ZeroParameter):
        make_lattice(LatticeKind.TRIANGULAR, complex("inf"), cfg)


def test_reduce_roundtrip(cfg, square2):
    gen = np.random.default_rng(41)
    for _ in range(100):
        z = complex(gen.uniform(-9, 9), gen.uniform(-9, 9))
        u, m, n = reduce(z, square2)
        back = u + m * square2.gen1 + n * square2.gen2
        assert abs(back - z) < 1e-12 * max(1.0, abs(z))


def test_reduce_prefers_small_representative(cfg, square2):
    # 0.6*gen1 re-centers to the equivalent -0.4*gen1
    u, m, n = reduce(0.6 * square2.gen1, square2)
    assert abs(u - (-0.4) * square2.gen1) < 1e-12
    assert (m, n) == (1, 0)


def test_wp_critical_value_against_direct_sum(cfg):
    for kind, norm in (
        (LatticeKind.SQUARE, E1_SQUARE_NORM),
        (LatticeKind.TRIANGULAR, E1_TRI_NORM),
    ):
        lat = make_lattice(kind, 1.0 + 0j, cfg)
        e1 = wp(lat.gen1 / 2.0, lat, cfg)
        assert abs(e1 - norm) < 1e-10
        direct = wp_direct_sum(lat.gen1 / 2.0, lat, 300)
        assert abs(e1 - direct) < 1e-5


def test_eisenstein_row_sums_match_disk_sums(cfg, square2, tri1):
    # direct disk sums converge slowly for g2; tolerances follow the
    # measured radius-300 accuracy per kind
    g2_direct = eisenstein_direct_sum(LatticeKind.SQUARE, 4, 300) * 60.0
    g2_norm = square2.g2 * (2.0 + 0j) ** 4
    assert abs(g2_direct - g2_norm) / abs(g2_norm) < 1e-6
    g3_direct = eisenstein_direct_sum(LatticeKind.TRIANGULAR, 6, 300) * 140.0
    g3_norm = tri1.g3
    assert abs(g3_direct - g3_norm) / abs(g3_norm) < 1e-11


def test_wp_is_even_and_wp_prime_is_odd(cfg, square2):
    for z in _interior_points(square2, 50, 7):
        assert abs(wp(z, square2, cfg) - wp(-z, square2, cfg)) < 1e-9
        assert abs(wp_prime(z, square2, cfg) + wp_prime(-z, square2, cfg)) < 1e-9


def test_wp_periodicity(cfg, tri1):
    for z in _interior_points(tri1, 30, 11):
        base = wp(z, tri1, cfg)
        assert abs(wp(z + tri1.gen1, tri1, cfg) - base) < 1e-10
        assert abs(wp(z + 3 * tri1.gen2, tri1, cfg) - base) < 1e-10


def test_wp_prime_vanishes_at_half_periods(cfg, square2, tri1):
    for lat in (square2, tri1):
        for h in lat.half_periods:
            assert abs(wp_prime(h, lat, cfg)) < 1e-9


def test_wp_pole_principal_part(cfg, square2):
    # wp(z) - 1/z^2 stays bounded near the origin pole
    for z in (1e-3 + 0j, 1e-3j, 7e-4 - 7e-4j):
        v = wp(z, square2, cfg)
        assert abs(v - 1.0 / (z * z)) < 1e-3


def test_wp_raises_at_lattice_points(cfg, square2):
    with pytest.raises(PoleHit) as info:
        wp(square2.gen1, square2, cfg)
    assert (info.value.m, info.value.n) == (1, 0)
    with pytest.raises(PoleHit):
        wp_pair(0j, square2, cfg)


def test_differential_equation(cfg):
    gen = np.random.default_rng(13)
    for kind in LatticeKind:
        for _ in range(60):
            lam = complex(gen.uniform(0.5, 2.5), gen.uniform(0.2, 2.0))
            lat = make_lattice(kind, lam, cfg)
            a, b = gen.uniform(0.15, 0.85, size=2)
            z = a * lat.gen1 + b * lat.gen2
            p, dp = wp_pair(z, lat, cfg)
            lhs = dp * dp
            rhs = 4.0 * p**3 - lat.g2 * p - lat.g3
            assert abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1.0) < 1e-8


def test_homogeneity(cfg):
    c = 1.7 - 0.9j
    for kind in LatticeKind:
        lat1 = make_lattice(kind, 1.0 + 0j, cfg)
        lat2 = make_lattice(kind, c, cfg)
        for z in _interior_points(lat1, 20, 17):
            a = wp(z, lat1, cfg)
            b = wp(c * z, lat2, cfg)
            assert abs(b - a / (c * c)) < 1e-10 * max(1.0, abs(a))


def test_kind_invariants(cfg):
    for lam in (1.0 + 0j, 2.3 + 0j, 0.7 - 1.1j):
        tri = make_lattice(LatticeKind.TRIANGULAR, lam, cfg)
        assert abs(tri.g2) < 1e-10
        sq = make_lattice(LatticeKind.SQUARE, lam, cfg)
        assert abs(sq.g3) < 1e-10


def test_crit_value_symmetry(cfg):
    tri = make_lattice(LatticeKind.TRIANGULAR, 1.8 + 1.44j, cfg)
    e1, e2, e3 = tri.crit_values
    assert abs(e2 / e1 - ZETA) < 1e-10
    assert abs(e3 / e1 - ZETA * ZETA) < 1e-10
    sq = make_lattice(LatticeKind.SQUARE, 1.7 - 0.4j, cfg)
    f1, f2, f3 = sq.crit_values
    assert abs(f2 + f1) < 1e-10 * abs(f1)
    assert abs(f3) < 1e-10


def test_wp_array_matches_scalar(cfg, square2):
    pts = np.array(_interior_points(square2, 40, 23) + [square2.gen1, 0j])
    vals, poles = wp_array(pts, square2, cfg)
    assert poles[-2] and poles[-1]
    for i in range(40):
        assert not poles[i]
        assert abs(vals[i] - wp(complex(pts[i]), square2, cfg)) < 1e-9


def test_sph_dist_closed_forms():
    inf = complex("inf")
    assert sph_dist(0j, inf) == 2.0
    assert sph_dist(1 + 1j, 1 + 1j) == 0.0
    assert abs(sph_dist(1 + 0j, -1 + 0j) - 2.0) < 1e-15
    assert is_infinite(inf) and not is_infinite(1e300 + 0j)
    assert abs(sph_dist_to_inf(0j) - 2.0) < 1e-15


def test_sph_deriv_basics():
    # euclidean derivative 1 at the origin fixed point has spherical factor 1
    assert sph_deriv(1.0 + 0j, 0j, 0j) == 1.0
    assert sph_deriv(0j, 1 + 1j, 2 - 1j) == 0.0


def test_sph_deriv_chain_rule_matches_finite_difference(cfg, square2):
    # composite three-step factor vs a central difference of f(f(f(z))),
    # converted to the chordal scale; step 1e-6 keeps truncation ~1e-9
    gen = np.random.default_rng(314)
    kept = 0
    for _ in range(200):
        if kept >= 8:
            break
        z = complex(gen.uniform(-1.0, 1.0), gen.uniform(-1.0, 1.0)) * 2.0
        try:
            pts = [z]
            fac = 1.0
            tame = True
            for _ in range(3):
                p, dp = wp_pair(pts[-1], square2, cfg)
                fac *= sph_deriv(dp, pts[-1], p)
                pts.append(p)
                if abs(p) > 4.0 or abs(dp) > 60.0:
                    tame = False
                    break
            if not tame:
                continue

            def f3(w):
                for _ in range(3):
                    w = wp(w, square2, cfg)
                return w

            h = 1e-6
            d = (f3(z + h) - f3(z - h)) / (2.0 * h)
        except PoleHit:
            continue
        fd = abs(d) * (1.0 + abs(z) ** 2) / (1.0 + abs(pts[-1]) ** 2)
        assert abs(fac - fd) < 1e-7 * max(fd, 1.0)
        kept += 1
    assert kept == 8


def test_crit_sph_dist_is_zero_at_critical_points(cfg, square2):
    for h in square2.half_periods:
        assert crit_sph_dist(h, square2) < 1e-12
    # translates by full periods count as critical points too
    assert crit_sph_dist(square2.half_periods[0] + square2.gen1, square2) < 1e-9
