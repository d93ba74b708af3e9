"""
Tests for the CMDP language: models, streams, rollouts, Monte Carlo evaluation,
the brute-force oracle and the model file format.
"""

import numpy as np
import pytest

from cmdp.brute_force import PolicyIndexer, brute_force_solve
from cmdp.generators import ACTION_A, ACTION_B, branch_model, random_episodic_cmdp, toy_model
from cmdp.io import dumps_model, loads_model, read_model, write_model
from cmdp.model import DeterministicPolicy, ExplicitCmdp, Step, require_valid, validate_model
from cmdp.rng import RngStream
from cmdp.simulate import mc_evaluate, sample_trajectory
from utils.errors import (EnumerationTooLargeError, InfeasibleProblemError, ModelValidationError,
                          PolicyUndefinedError, ScenarioParseError)


def _two_state(reward_end=0.0, row=None):
    return ExplicitCmdp(
        state_count=2,
        action_sets=[[0], [0]],
        transition={(0, 0): row or {1: 1.0}, (1, 0): {1: 1.0}},
        reward={(0, 0): 1.0, (1, 0): reward_end},
        constraint_cost={(0, 0): 0.0, (1, 0): 0.0},
        absorbing=[False, True],
        initial_state=0,
        horizon_T=1,
    )


# ===== RNG =====

def test_identical_streams_draw_identically():
    a, b = RngStream(99, 4), RngStream(99, 4)
    assert [a.random() for _ in range(20)] == [b.random() for _ in range(20)]


def test_distinct_stream_ids_differ():
    a, b = RngStream(99, 4), RngStream(99, 5)
    assert [a.random() for _ in range(5)] != [b.random() for _ in range(5)]


def test_spawn_does_not_consume_parent_draws():
    parent, twin = RngStream(7), RngStream(7)
    parent.spawn(3).random()
    assert parent.random() == twin.random()
    assert parent.spawn(3).random() == twin.spawn(3).random()


def test_seed_must_be_u64():
    with pytest.raises(ValueError):
        RngStream(-1)
    with pytest.raises(ValueError):
        RngStream(2 ** 64)


# ===== MODEL VALIDATION =====

def test_toy_model_is_valid(toy):
    assert validate_model(toy) == []
    assert require_valid(toy) is toy


def test_absorbing_reward_is_reported():
    report = validate_model(_two_state(reward_end=1.0))
    assert any("absorbing-zero-reward" in line for line in report)


def test_substochastic_row_is_reported():
    report = validate_model(_two_state(row={1: 0.9}))
    assert any("row-stochastic" in line for line in report)
    with pytest.raises(ModelValidationError):
        require_valid(_two_state(row={1: 0.9}))


def test_transient_cycle_is_reported():
    model = ExplicitCmdp(
        state_count=3,
        action_sets=[[0, 1], [0], [0]],
        transition={(0, 0): {1: 1.0}, (0, 1): {2: 1.0}, (1, 0): {0: 1.0}, (2, 0): {2: 1.0}},
        reward={(0, 0): 0.0, (0, 1): 0.0, (1, 0): 0.0, (2, 0): 0.0},
        constraint_cost={(0, 0): 0.0, (0, 1): 0.0, (1, 0): 0.0, (2, 0): 0.0},
        absorbing=[False, False, True],
        initial_state=0,
        horizon_T=3,
    )
    assert any("reachability" in line for line in validate_model(model))


def test_horizon_too_short_is_reported(chain):
    short = ExplicitCmdp(
        state_count=chain.state_count,
        action_sets=chain.action_sets,
        transition={pair: dict(row) for pair, row in chain.transition.items()},
        reward=dict(chain.reward),
        constraint_cost=dict(chain.constraint_cost_table),
        absorbing=chain.absorbing,
        initial_state=0,
        horizon_T=2,
    )
    assert any("reachability" in line for line in validate_model(short))


def test_xi_weights_follow_the_time_counter(chain):
    assert list(chain.xi_weights) == [3.0, 2.0, 1.0, 0.0]
    assert chain.beta == pytest.approx(2 / 3)


def test_xi_weights_without_stages_use_longest_path():
    model = branch_model()
    unstaged = ExplicitCmdp(
        state_count=model.state_count,
        action_sets=model.action_sets,
        transition={pair: dict(row) for pair, row in model.transition.items()},
        reward=dict(model.reward),
        constraint_cost=dict(model.constraint_cost_table),
        absorbing=model.absorbing,
        initial_state=0,
        horizon_T=2,
    )
    assert list(unstaged.xi_weights) == list(model.xi_weights) == [2.0, 1.0, 1.0, 0.0]


# ===== TRAJECTORIES =====

def test_toy_trajectory_action_a(toy, rng):
    trajectory = sample_trajectory(toy, DeterministicPolicy({0: ACTION_A}), rng)
    assert trajectory.steps == (Step(0, ACTION_A, 1.0, -1.0),)
    assert trajectory.terminal_state == 1


def test_toy_trajectory_action_b(toy, rng):
    trajectory = sample_trajectory(toy, DeterministicPolicy({0: ACTION_B}), rng)
    assert trajectory.steps == (Step(0, ACTION_B, 5.0, 1.0),)


def test_undefined_policy_raises(toy, rng):
    with pytest.raises(PolicyUndefinedError):
        sample_trajectory(toy, DeterministicPolicy({}), rng)


def test_branch_trajectory_is_reproducible():
    model = branch_model()
    policy = DeterministicPolicy({0: 0, 1: 0, 2: 0})
    first = sample_trajectory(model, policy, RngStream(2024, 9))
    second = sample_trajectory(model, policy, RngStream(2024, 9))
    assert first == second
    assert len(first) == 2
    assert first.steps[1].state in (1, 2)
    assert first.total_reward == (0.0 if first.steps[1].state == 1 else 2.0)


def test_branch_trajectories_match_the_frozen_run(golden):
    frozen = golden("branch_trajectories")
    model = branch_model(**frozen["model"])
    policy = DeterministicPolicy({0: 0, 1: 0, 2: 0})
    rng = RngStream(frozen["seed"], frozen["stream_id"])
    rollouts = [sample_trajectory(model, policy, rng) for _ in range(frozen["rollouts"])]
    assert [t.steps[1].state for t in rollouts] == frozen["branch_states"]
    assert [t.total_reward for t in rollouts] == frozen["total_rewards"]
    assert all(t.terminal_state == 3 for t in rollouts)


def test_trajectories_stay_within_horizon():
    model = random_episodic_cmdp(RngStream(5), n_states=12, horizon=5)
    policy = DeterministicPolicy({s: model.action_sets[s][0] for s in model.transient_states()})
    for trial in range(2000):
        trajectory = sample_trajectory(model, policy, RngStream(5, trial))
        assert len(trajectory) <= model.horizon_T
        assert model.is_absorbing(trajectory.terminal_state)


# ===== MONTE CARLO =====

def test_mc_evaluate_toy_is_exact(toy, rng):
    result = mc_evaluate(toy, DeterministicPolicy({0: ACTION_A}), 10, rng)
    reward, constraint, records = result
    assert (reward, constraint) == (1.0, -1.0)
    assert len(records) == 10
    assert result.reward_se == 0.0

    result = mc_evaluate(toy, DeterministicPolicy({0: ACTION_B}), 10, rng)
    assert (result.mean_total_reward, result.mean_total_constraint) == (5.0, 1.0)


def test_mc_evaluate_branch_mean():
    model = branch_model(p_left=0.5, left_reward=0.0, right_reward=2.0)
    result = mc_evaluate(model, DeterministicPolicy({0: 0, 1: 0, 2: 0}), 20000, RngStream(31))
    assert result.mean_total_reward == pytest.approx(1.0, abs=0.05)


def test_mc_standard_error_shrinks_with_the_square_root_of_trials():
    model = branch_model(p_left=0.5, left_reward=0.0, right_reward=2.0)
    policy = DeterministicPolicy({0: 0, 1: 0, 2: 0})
    small = mc_evaluate(model, policy, 2000, RngStream(31))
    large = mc_evaluate(model, policy, 8000, RngStream(31))
    assert small.reward_se == pytest.approx(1.0 / np.sqrt(2000), rel=0.05)
    assert large.reward_se / small.reward_se == pytest.approx(0.5, abs=0.05)


def test_mc_evaluate_is_worker_independent():
    model = branch_model()
    policy = DeterministicPolicy({0: 0, 1: 0, 2: 0})
    serial = mc_evaluate(model, policy, 40, RngStream(8), workers=1)
    parallel = mc_evaluate(model, policy, 40, RngStream(8), workers=2)
    assert serial.records == parallel.records


def test_mc_evaluate_rejects_zero_trials(toy, rng):
    with pytest.raises(ValueError):
        mc_evaluate(toy, DeterministicPolicy({0: ACTION_A}), 0, rng)


# ===== BRUTE FORCE =====

def test_brute_force_toy():
    result = brute_force_solve(toy_model())
    assert result.feasibility_value == 0.0
    assert result.feasible
    assert len(result.feasible_policy_set) == 1
    assert DeterministicPolicy({0: ACTION_A}) in result.feasible_policy_set
    assert result.optimal_value == 1.0
    assert result.optimal_policy == DeterministicPolicy({0: ACTION_A})
    assert result.refined_value == 1.0


def test_brute_force_infeasible_toy():
    with pytest.raises(InfeasibleProblemError) as excinfo:
        brute_force_solve(toy_model(d_a=1.0))
    assert excinfo.value.magnitude == 1.0

    result = brute_force_solve(toy_model(d_a=1.0), raise_on_infeasible=False)
    assert result.feasibility_value == 1.0
    assert result.optimal_value is None


def test_brute_force_zero_cost_toy():
    result = brute_force_solve(toy_model(d_a=0.0, d_b=0.0))
    assert len(result.feasible_policy_set) == 2
    assert result.optimal_value == 5.0


def test_brute_force_reports_refined_optimum():
    # x0 -> A; at A, action 0 has E[sum D] = -1 and R = 10, action 1 has -2 and R = 0
    model = ExplicitCmdp(
        state_count=3,
        action_sets=[[0], [0, 1], [0]],
        transition={(0, 0): {1: 1.0}, (1, 0): {2: 1.0}, (1, 1): {2: 1.0}, (2, 0): {2: 1.0}},
        reward={(0, 0): 0.0, (1, 0): 10.0, (1, 1): 0.0, (2, 0): 0.0},
        constraint_cost={(0, 0): 0.0, (1, 0): -1.0, (1, 1): -2.0, (2, 0): 0.0},
        absorbing=[False, False, True],
        initial_state=0,
        horizon_T=2,
        stages=[0, 1, 2],
    )
    result = brute_force_solve(model)
    assert result.optimal_value == 10.0
    assert result.refined_value == 0.0


def test_brute_force_evaluates_each_block_once(monkeypatch):
    import cmdp.brute_force as brute_force
    from oracle.two_phase_dp import value_iteration_FS
    from utils.constants import Limits

    calls = []
    evaluate = brute_force._evaluate_block
    monkeypatch.setattr(Limits, "BRUTE_FORCE_BLOCK", 7)
    monkeypatch.setattr(brute_force, "_evaluate_block", lambda *args: calls.append(1) or evaluate(*args))
    model = random_episodic_cmdp(RngStream(3), n_states=10, max_actions=3)
    result = brute_force.brute_force_solve(model, raise_on_infeasible=False)
    assert len(calls) == -(-result.policy_count // 7)

    v_star = value_iteration_FS(model).table
    for s in model.transient_states():
        assert result.min_constraint_cost[s] == pytest.approx(v_star[s], abs=1e-8)


def test_brute_force_is_invariant_under_relabeling():
    for seed in range(5):
        model = random_episodic_cmdp(RngStream(seed), n_states=10, max_actions=3)
        permutation = RngStream(seed, 1).generator.permutation(model.state_count)
        original = brute_force_solve(model, raise_on_infeasible=False)
        relabeled = brute_force_solve(model.relabeled(permutation), raise_on_infeasible=False)
        assert relabeled.feasibility_value == pytest.approx(original.feasibility_value, abs=1e-12)
        if original.optimal_value is not None:
            assert relabeled.optimal_value == pytest.approx(original.optimal_value, abs=1e-12)


def test_brute_force_enumeration_bound(toy):
    with pytest.raises(EnumerationTooLargeError):
        brute_force_solve(toy, limit=1)


def test_policy_indexer_numbers_every_policy_once():
    model = random_episodic_cmdp(RngStream(17), n_states=8, max_actions=3)
    indexer = PolicyIndexer(model)
    seen = {indexer.policy(i) for i in range(indexer.count)}
    assert len(seen) == indexer.count == model.policy_count()
    assert all(indexer.index_of(indexer.policy(i)) == i for i in range(indexer.count))


# ===== GENERATORS =====

def test_random_models_are_valid_and_capped():
    for seed in range(20):
        model = random_episodic_cmdp(RngStream(seed), n_states=12, max_actions=4, max_policies=10 ** 4)
        assert validate_model(model) == []
        assert model.policy_count() <= 10 ** 4
        assert 3 <= model.horizon_T <= 6


# ===== FILE FORMAT =====

def test_model_file_preserves_the_model(tmp_path):
    model = random_episodic_cmdp(RngStream(23), n_states=9)
    path = write_model(model, tmp_path / "model.cmdp")
    loaded = read_model(path)
    assert loaded.state_count == model.state_count
    assert loaded.action_sets == model.action_sets
    assert loaded.stages == model.stages
    assert dict(loaded.reward) == dict(model.reward)
    assert {k: dict(v) for k, v in loaded.transition.items()} == {k: dict(v) for k, v in model.transition.items()}
    assert dumps_model(loaded) == dumps_model(model)


@pytest.mark.parametrize("text", [
    "state_count 2\n",
    "# explicit-cmdp v1\nstate_count 2\nhorizon_T 1\ninitial_state 0\nabsorbing 0 1\npair 0 0 reward x\n",
    "# explicit-cmdp v1\nbogus 1\n",
])
def test_malformed_model_files_raise(text):
    with pytest.raises(ScenarioParseError):
        loads_model(text)


def test_missing_model_file_raises(tmp_path):
    with pytest.raises(ScenarioParseError):
        read_model(tmp_path / "absent.cmdp")


def test_models_pickle_for_worker_processes():
    import pickle

    model = random_episodic_cmdp(RngStream(2))
    clone = pickle.loads(pickle.dumps(model))
    assert dumps_model(clone) == dumps_model(model)
    policy = DeterministicPolicy({0: 1})
    assert pickle.loads(pickle.dumps(policy)) == policy
    assert np.array_equal(clone.xi_weights, model.xi_weights)
