
import pytest

from conftest import CANDIDATE, PREPOLE_SQ, PREPOLE_TRI
from weierdyn import rng
from weierdyn.dynamics import AllCriticalPrepole, classify
from weierdyn.lattice import LatticeKind, make_lattice
from weierdyn.misiurewicz import (
    DiscTouchesU,
    ViolationKind,
    _winding_count,
    covering_steps,
    density_scan,
    find_prepole_params,
    misiurewicz_check,
    pole_location,
    prepole_residual,
)


def test_splitmix_streams_are_deterministic():
    a = rng.SplitMix(1, 2, 3)
    assert a.uniform() == 0.4849690070744087
    assert a.uniform() == 0.2061471874853088
    # distinct keys give distinct streams, same keys replay
    assert rng.SplitMix(1, 2, 3).uniform() == 0.4849690070744087
    assert rng.SplitMix(1, 2, 4).uniform() != 0.4849690070744087


def test_unit_disc_point_stays_in_disc():
    for i in range(200):
        p = rng.unit_disc_point(9, 0, i)
        assert abs(p) <= 1.0
    assert rng.unit_disc_point(9, 0, 0) == rng.unit_disc_point(9, 0, 0)


def test_pole_location_linear_in_lambda():
    assert pole_location(LatticeKind.SQUARE, 2.0 + 1.0j, 1, 0) == 2.0 + 1.0j
    tau = pole_location(LatticeKind.SQUARE, 1.0 + 0j, 0, 1)
    assert abs(tau - 1j) < 1e-15


def test_prepole_residual_small_at_pinned_roots(cfg):
    r_sq = prepole_residual(LatticeKind.SQUARE, PREPOLE_SQ, 1, 1, 0, cfg)
    assert abs(r_sq) < 1e-9
    r_tri = prepole_residual(LatticeKind.TRIANGULAR, PREPOLE_TRI, 1, 1, 0, cfg)
    assert abs(r_tri) < 1e-9


def test_find_prepole_params_locates_pinned_root(cfg):
    roots = find_prepole_params(
        LatticeKind.SQUARE, 1, 1, 0, (0.45, 0.7, 0.6, 0.85), 64, cfg
    )
    assert len(roots) >= 1
    match = [r for r in roots if abs(r.lambda_star - PREPOLE_SQ) < 1e-9]
    assert len(match) == 1
    root = match[0]
    assert root.residual < cfg.newton_tol
    assert root.isolation_radius > 0
    # the reported circle really does count exactly one root
    count = _winding_count(
        LatticeKind.SQUARE, 1, 1, 0, root.lambda_star, root.isolation_radius, cfg
    )
    assert count == 1


def test_find_prepole_order_zero_closed_form(cfg):
    # n = 0 means e_lambda = j*lambda itself: e1_norm / lambda^2 = lambda,
    # so the real root is the cube root of e1_norm
    lat = make_lattice(LatticeKind.SQUARE, 1.0 + 0j, cfg)
    expected = lat.crit_values[0].real ** (1.0 / 3.0)
    roots = find_prepole_params(
        LatticeKind.SQUARE, 0, 1, 0, (1.5, 2.2, -0.2, 0.4), 64, cfg
    )
    match = [r for r in roots if abs(r.lambda_star - expected) < 1e-8]
    assert len(match) == 1


def test_find_prepole_params_rejects_coarse_grid(cfg):
    with pytest.raises(ValueError):
        find_prepole_params(LatticeKind.SQUARE, 1, 1, 0, (0.5, 1.0, 0.5, 1.0), 4, cfg)


def test_triangular_roots_hit_poles_simultaneously(cfg):
    roots = find_prepole_params(
        LatticeKind.TRIANGULAR, 1, 1, 0, (0.52, 0.56, 0.09, 0.13), 64, cfg
    )
    match = [r for r in roots if abs(r.lambda_star - PREPOLE_TRI) < 1e-9]
    assert len(match) == 1
    # rotation symmetry forces all three orbits onto poles at the same step
    for r in roots[:20]:
        v = classify(LatticeKind.TRIANGULAR, r.lambda_star, 64, cfg)
        assert isinstance(v, AllCriticalPrepole)
        assert len(set(v.steps)) == 1


def test_check_rejects_zero_window():
    with pytest.raises(ValueError):
        misiurewicz_check(LatticeKind.SQUARE, 2.0 + 0j, 0.05, 0, None)


def test_check_passes_at_candidate_within_window(cfg):
    rep = misiurewicz_check(LatticeKind.SQUARE, CANDIDATE, 0.05, 16, cfg)
    assert rep.passed
    assert rep.iterations == 16
    assert rep.first_violation is None


def test_check_fails_at_candidate_past_window(cfg):
    # the orbit runs close to a critical point at step 28, so any window
    # reaching that far reports the near pass
    rep = misiurewicz_check(LatticeKind.SQUARE, CANDIDATE, 0.05, 48, cfg)
    assert not rep.passed
    assert rep.iterations == 29
    assert rep.first_violation.step == 28
    assert rep.first_violation.kind is ViolationKind.NEAR_CRITICAL
    # failures are monotone in the resolution parameters
    wider = misiurewicz_check(LatticeKind.SQUARE, CANDIDATE, 0.06, 60, cfg)
    assert not wider.passed


def test_check_reports_pole_capture(cfg):
    rep = misiurewicz_check(LatticeKind.SQUARE, PREPOLE_SQ, 0.05, 16, cfg)
    assert not rep.passed
    assert rep.iterations == 2
    assert rep.first_violation.step == 1
    assert rep.first_violation.kind is ViolationKind.POLE_HIT


def test_density_scan_is_reproducible(cfg):
    radii = (1e-3, 1e-4)
    rows1 = density_scan(LatticeKind.SQUARE, PREPOLE_SQ, radii, 200, 0.05, 200, 20260816, cfg)
    rows2 = density_scan(LatticeKind.SQUARE, PREPOLE_SQ, radii, 200, 0.05, 200, 20260816, cfg)
    assert rows1 == rows2
    for row in rows1:
        assert row.n_samples == 200
        assert row.seed == 20260816
        assert 0.0 <= row.fail_fraction <= 1.0
    # near a prepole parameter every sampled neighbor fails the check
    assert [r.fail_fraction for r in rows1] == [1.0, 1.0]


def test_density_scan_seed_changes_stream(cfg):
    a = density_scan(LatticeKind.SQUARE, 2.0 + 0j, (0.5,), 64, 0.05, 6, 1, cfg)
    b = density_scan(LatticeKind.SQUARE, 2.0 + 0j, (0.5,), 64, 0.05, 6, 2, cfg)
    assert a[0].seed != b[0].seed
    assert 0.0 <= a[0].fail_fraction <= 1.0


def test_covering_steps_pinned_values(cfg, square2):
    # a ball that needs two steps to swallow the delta-neighborhood
    assert covering_steps(square2, 0j, 0.6, 0.05, 12, 64, cfg) == 2
    # the full fundamental cell contains critical points, so only delta = 0
    # keeps the disjointness precondition satisfiable; one step suffices
    center = (square2.gen1 + square2.gen2) / 2.0
    d = abs(square2.gen1 + square2.gen2) / 2.0 * 1.05
    assert covering_steps(square2, center, d, 0.0, 12, 64, cfg) == 1


def test_covering_steps_budget_exhaustion(cfg, square2):
    assert covering_steps(square2, 0j, 0.6, 0.05, 0, 64, cfg) is None


def test_covering_steps_monotone_in_radius(cfg, square2):
    center = 0.45 + 0.3j
    got = [
        covering_steps(square2, center, d, 0.05, 12, 64, cfg)
        for d in (0.02, 0.1, 0.5)
    ]
    assert got == [4, 2, 2]
    assert got[0] >= got[1] >= got[2]


def test_covering_steps_rejects_disc_touching_singular_set(cfg, square2):
    with pytest.raises(DiscTouchesU):
        covering_steps(square2, square2.half_periods[0], 0.1, 0.05, 12, 64, cfg)


def test_covering_steps_validates_inputs(cfg, square2):
    with pytest.raises(ValueError):
        covering_steps(square2, 0j, 0.5, 0.05, 12, 32, cfg)
    with pytest.raises(ValueError):
        covering_steps(square2, 0j, -1.0, 0.05, 12, 64, cfg)
