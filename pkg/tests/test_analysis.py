"""Sweep grids, oracle/regret machinery and the derived table statistics."""

import itertools
import math

import numpy as np
import pytest

from morphoplast.analysis import (
    GRID_NAMES,
    adaptation_premium,
    build_grid,
    collect_delta_matrix,
    dose_response,
    harm_rate,
    hebbian_split,
    oracle_and_regret,
    quintile_preference,
    split_half_validation,
    unsolved_fraction,
    weight_change_ratio,
)
from morphoplast.evaluation import EvalResult


def make_result(network_id, eta, lam, rewards, seeds=None, dw=None):
    seeds = tuple(seeds or range(42, 42 + len(rewards)))
    return EvalResult(
        network_id=network_id,
        env="cartpole",
        mode="plastic",
        eta=eta,
        lam=lam,
        seeds=seeds,
        rewards=tuple(float(r) for r in rewards),
        solved_steps=(-1,) * len(rewards),
        weight_ratios=(1.0,) * len(rewards),
        mean_abs_dw=0.0,
        degenerate=False,
        non_functional=False,
        dw_pre=dw[0] if dw else None,
        dw_post=dw[1] if dw else None,
    )


# --- grids --------------------------------------------------------------------

def test_grid_sizes():
    assert len(build_grid("primary75")) == 75
    assert len(build_grid("extended248")) == 248
    assert len(build_grid("coarse22")) == 22
    assert len(build_grid("micro248_acrobot")) == 248


def test_unknown_grid_rejected():
    with pytest.raises(ValueError, match="grid"):
        build_grid("fine9000")


@pytest.mark.parametrize("name", ["primary75", "extended248", "micro248_acrobot"])
def test_eta_levels_negation_closed_with_zero(name):
    etas = {p.eta for p in build_grid(name).points}
    assert 0.0 in etas
    assert etas == {-e for e in etas}


def test_extended_grid_ranges():
    grid = build_grid("extended248")
    etas = sorted({p.eta for p in grid.points})
    lams = sorted({p.decay for p in grid.points})
    assert len(etas) == 31 and len(lams) == 8
    assert max(abs(e) for e in etas) == 0.5
    assert max(lams) == 0.1


def test_coarse_grid_is_anti_hebbian_only():
    grid = build_grid("coarse22")
    assert all(p.eta < 0 for p in grid.points)
    assert {p.decay for p in grid.points} == {1e-3, 1e-2}


# --- oracle and regret -----------------------------------------------------------

def two_point_grid():
    """The primary75 grid restricted shape is overkill for hand fixtures, so
    fixtures use the real grid but touch only as many columns as needed."""
    return build_grid("coarse22")


def test_regret_half_fixture():
    # Two networks, complementary optima of equal size: the best fixed point
    # captures half the oracle mean.
    grid = two_point_grid()
    deltas = np.zeros((2, len(grid)))
    deltas[0, 0] = 10.0
    deltas[1, 1] = 10.0
    result = oracle_and_regret(deltas, grid)
    assert np.mean(result.oracle_deltas) == 10.0
    assert result.best_fixed_mean == 5.0
    assert result.regret == pytest.approx(0.5)


def test_single_network_regret_zero():
    grid = two_point_grid()
    deltas = np.zeros((1, len(grid)))
    deltas[0, 3] = 7.0
    result = oracle_and_regret(deltas, grid)
    assert result.regret == 0.0
    assert result.oracle_indices == (3,)


def test_homogeneous_population_regret_zero():
    grid = two_point_grid()
    deltas = np.zeros((4, len(grid)))
    deltas[:, 5] = 3.0
    assert oracle_and_regret(deltas, grid).regret == 0.0


def test_non_positive_oracle_mean_is_undefined():
    grid = two_point_grid()
    deltas = -np.ones((3, len(grid)))
    assert math.isnan(oracle_and_regret(deltas, grid).regret)


def test_oracle_matches_brute_force_enumeration():
    """Exact equality against an independent exhaustive search (<=10x20)."""
    grid = build_grid("coarse22")
    rng = np.random.default_rng(7)
    deltas = rng.normal(0.0, 20.0, size=(10, len(grid)))
    result = oracle_and_regret(deltas, grid)

    # Brute force: scan every (network, point); ties by (|eta|, lambda, eta).
    def rank(j):
        p = grid.points[j]
        return (abs(p.eta), p.decay, p.eta, j)

    for i in range(deltas.shape[0]):
        best = max(range(len(grid)), key=lambda j: (deltas[i, j], [-r for r in rank(j)[:3]]))
        candidates = [j for j in range(len(grid)) if deltas[i, j] == deltas[i, best]]
        expect = min(candidates, key=rank)
        assert result.oracle_indices[i] == expect
        assert result.oracle_deltas[i] == deltas[i, expect]

    fixed_means = deltas.mean(axis=0)
    best_mean = fixed_means.max()
    candidates = [j for j in range(len(grid)) if fixed_means[j] == best_mean]
    assert result.best_fixed_index == min(candidates, key=rank)
    expected_regret = 1.0 - max(0.0, best_mean) / np.mean(result.oracle_deltas)
    assert result.regret == pytest.approx(min(1.0, max(0.0, expected_regret)))


def test_oracle_tie_breaks_to_least_invasive():
    grid = build_grid("primary75")
    deltas = np.full((1, len(grid)), 5.0)  # every point ties
    result = oracle_and_regret(deltas, grid)
    chosen = grid.points[result.oracle_indices[0]]
    assert chosen.eta == 0.0 and chosen.decay == 0.0


def test_oracle_rejects_wrong_width():
    with pytest.raises(ValueError, match="delta matrix"):
        oracle_and_regret(np.zeros((2, 3)), build_grid("coarse22"))


# --- record assembly ---------------------------------------------------------------

def test_collect_delta_matrix_round_trip():
    grid = build_grid("coarse22")
    baselines = {}
    records = []
    rng = np.random.default_rng(1)
    for nid in ("net_b", "net_a"):
        base_rewards = rng.integers(5, 400, size=4).astype(float)
        baselines[nid] = make_result(nid, 0.0, 0.0, base_rewards)
        for p in grid.points:
            records.append(make_result(nid, p.eta, p.decay, base_rewards + rng.normal(0, 5, 4)))
    ids, deltas, per_episode = collect_delta_matrix(baselines, records, grid)
    assert ids == ("net_a", "net_b")  # sorted
    assert deltas.shape == (2, 22)
    assert per_episode.shape == (2, 22, 4)
    np.testing.assert_allclose(deltas, per_episode.mean(axis=2), atol=1e-12)


def test_collect_delta_matrix_reports_gaps():
    grid = build_grid("coarse22")
    baselines = {"n1": make_result("n1", 0.0, 0.0, [10.0, 20.0])}
    records = [make_result("n1", p.eta, p.decay, [11.0, 21.0]) for p in grid.points[:-1]]
    with pytest.raises(ValueError, match="missing"):
        collect_delta_matrix(baselines, records, grid)


def test_collect_delta_matrix_rejects_seed_mismatch():
    grid = build_grid("coarse22")
    baselines = {"n1": make_result("n1", 0.0, 0.0, [10.0, 20.0], seeds=(1, 2))}
    records = [
        make_result("n1", p.eta, p.decay, [11.0, 21.0], seeds=(3, 4)) for p in grid.points
    ]
    with pytest.raises(ValueError, match="seed"):
        collect_delta_matrix(baselines, records, grid)


# --- split-half ------------------------------------------------------------------

def test_split_half_noiseless_retains_everything():
    grid = build_grid("coarse22")
    rng = np.random.default_rng(2)
    point_effects = rng.uniform(1.0, 10.0, size=(5, len(grid)))
    tensor = np.repeat(point_effects[:, :, None], 6, axis=2)  # odd == even
    assert split_half_validation(tensor, grid) == pytest.approx(1.0)


def test_split_half_pure_noise_retains_nothing():
    grid = build_grid("coarse22")
    rng = np.random.default_rng(3)
    retained = []
    for _ in range(40):
        tensor = rng.normal(0.0, 1.0, size=(6, len(grid), 10))
        r = split_half_validation(tensor, grid)
        if not math.isnan(r):
            retained.append(r)
    assert abs(np.mean(retained)) < 0.25


def test_split_half_needs_two_episodes():
    grid = build_grid("coarse22")
    with pytest.raises(ValueError, match="two episodes"):
        split_half_validation(np.zeros((2, len(grid), 1)), grid)


# --- scalar table statistics --------------------------------------------------------

def test_harm_rate_counting():
    assert harm_rate([-1.0, 2.0, -3.0]) == pytest.approx(2.0 / 3.0)
    assert harm_rate([1.0, 2.0]) == 0.0
    with pytest.raises(ValueError):
        harm_rate([])


def test_adaptation_premium_subtracts_at_ns_oracle():
    grid = build_grid("coarse22")
    ns = np.zeros((1, len(grid)))
    st = np.zeros((1, len(grid)))
    ns[0, 4] = 10.0
    st[0, 4] = 4.0
    st[0, 5] = 9.0  # static optimum elsewhere must not matter
    np.testing.assert_allclose(adaptation_premium(ns, st, grid), [6.0])


def test_weight_change_ratio():
    r = make_result("n", -0.01, 0.0, [1.0], dw=((1.0, 1.0), (1.13, 1.13)))
    assert weight_change_ratio(r) == pytest.approx(1.13)
    constant = make_result("n", -0.01, 0.0, [1.0], dw=((0.5, 0.5), (0.5, 0.5)))
    assert weight_change_ratio(constant) == pytest.approx(1.0)
    off_on = make_result("n", -0.01, 0.0, [1.0], dw=((0.0, 0.0), (0.4, 0.4)))
    assert math.isnan(weight_change_ratio(off_on))
    with pytest.raises(ValueError, match="telemetry"):
        weight_change_ratio(make_result("n", 0.0, 0.0, [1.0]))


def test_hebbian_split_balanced_on_symmetric_grid():
    grid = build_grid("primary75")
    deltas = np.arange(2 * len(grid), dtype=float).reshape(2, -1)
    anti, hebb = hebbian_split(deltas, grid)
    assert anti.size == hebb.size  # negation-closed levels, zero excluded
    n_zero_lam = sum(1 for p in grid.points if p.eta == 0.0)
    assert anti.size == (len(grid) - n_zero_lam) * 2 / 2


def test_quintile_preference_fixture():
    # 10 networks; the two with the smallest |dw| prefer Hebbian rules.
    dw = np.arange(10, dtype=float)
    etas = np.array([0.1, 0.2] + [-0.1] * 8)
    fractions = quintile_preference(dw, etas)
    assert fractions[0] == 0.0
    assert fractions[1:] == (1.0, 1.0, 1.0, 1.0)


def test_quintile_preference_uniform():
    dw = np.linspace(0, 1, 25)
    etas = -np.ones(25)
    assert quintile_preference(dw, etas) == (1.0,) * 5


def test_unsolved_fraction_curves():
    assert unsolved_fraction([-1, -1], (100, 300)) == (1.0, 1.0)
    assert unsolved_fraction([1, 1, 1], (1, 250, 500)) == (0.0, 0.0, 0.0)
    assert unsolved_fraction([100, -1, 300, None], (99, 100, 299, 500)) == (
        1.0, 0.75, 0.75, 0.5,
    )


# --- dose response ---------------------------------------------------------------

def test_dose_response_proportional_to_duration():
    data = {100: [40.0, 40.0], 200: [30.0], 300: [20.0], 400: [10.0]}
    response = dose_response(data, horizon=500)
    assert response.switch_steps == (100, 200, 300, 400)
    assert response.mean_oracle_deltas == (40.0, 30.0, 20.0, 10.0)
    assert response.spearman == pytest.approx(1.0)
    assert not response.tied


def test_dose_response_constant_flags_ties():
    response = dose_response({100: [5.0], 300: [5.0]}, horizon=500)
    assert response.spearman == 0.0
    assert response.tied


def test_dose_response_needs_two_switches():
    with pytest.raises(ValueError, match="switch"):
        dose_response({200: [1.0]})
