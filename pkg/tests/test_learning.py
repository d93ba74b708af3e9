"""
Tests for two-timescale two-phase Q-learning
"""

import math

import numpy as np
import pytest

from baselines.q_learning import train_vanilla_q
from cmdp.generators import ACTION_A, ACTION_B, random_episodic_cmdp, toy_model
from cmdp.model import ExplicitCmdp
from cmdp.rng import RngStream
from cmdp.simulate import mc_evaluate
from config.settings import settings
from learning.config import LearnerConfig
from learning.learning_log import COLUMNS, Checkpoint, LearningLog
from learning.qpair import LazyQPair, LazyTable
from learning.reference import OracleReference
from learning.schedule import StepSchedule, step_sizes
from learning.two_phase import (_Backup, extract_learned_policy, greedy_action, noisy_feasible_set,
                                revenue_actions, select_action, sync_sweep, train_async, train_sync)
from oracle.operators import bellman_F
from oracle.tables import QTable
from oracle.two_phase_dp import compute_Q_star
from rideshare.environment import VehicleSharingModel
from utils.errors import InfeasibleProblemError, NotEnumerableError
from utils.validators import ValidationError

SEND = (1, 0)
STAY = (0, 0)


def _config(**overrides):
    options = dict(max_episodes=50, eval_every=10, eval_trials=0)
    options.update(overrides)
    return LearnerConfig(**options)


def _qpair(entries):
    """LazyQPair holding exactly the given (state, action) -> (q, h) values"""
    qpair = LazyQPair()
    for (state, action), (q, h) in entries.items():
        qpair.update(state, action, q, h, StepSchedule())
    return qpair


# ===== STEP SIZES =====

def test_first_update_takes_the_full_step():
    assert step_sizes(0, StepSchedule()) == (1.0, 1.0)


def test_step_sizes_follow_the_power_laws():
    zeta1, zeta2 = step_sizes(3, StepSchedule())
    assert zeta1 == pytest.approx(4 ** -0.85)
    assert zeta2 == pytest.approx(4 ** -0.55)


def test_step_sizes_decrease_and_separate_timescales():
    schedule = StepSchedule()
    previous = step_sizes(0, schedule)
    for n in range(1, 500):
        zeta1, zeta2 = step_sizes(n, schedule)
        assert zeta1 < previous[0] and zeta2 < previous[1]
        assert zeta1 < zeta2
        previous = (zeta1, zeta2)
    assert step_sizes(10 ** 6, schedule)[0] / step_sizes(10 ** 6, schedule)[1] < 0.02


@pytest.mark.parametrize("fast, slow", [(0.9, 0.8), (0.5, 0.85), (0.55, 1.2), (0.7, 0.7)])
def test_invalid_exponents_are_rejected(fast, slow):
    with pytest.raises(ValidationError):
        StepSchedule(exponent_fast=fast, exponent_slow=slow)


def test_learner_config_validation():
    with pytest.raises(ValidationError):
        LearnerConfig(exploration_epsilon=1.5)
    with pytest.raises(ValidationError):
        LearnerConfig(max_episodes=0)
    assert LearnerConfig.eps_for_threshold(0.25) == pytest.approx(0.0625)
    assert LearnerConfig().schedule.sample_batch_N == 10


# ===== TABLES =====

def test_lazy_tables_default_to_zero():
    qpair = LazyQPair()
    assert qpair.q("x", "u") == 0.0 and qpair.h("x", "u") == 0.0
    assert qpair.visits("x", "u") == 0
    assert len(qpair) == 0


def test_qpair_update_uses_both_step_sizes():
    qpair = _qpair({(0, 0): (2.0, 4.0)})
    qpair.update(0, 0, 0.0, 0.0, StepSchedule())
    zeta1, zeta2 = step_sizes(1, StepSchedule())
    assert qpair.q(0, 0) == pytest.approx(2.0 * (1 - zeta2))
    assert qpair.h(0, 0) == pytest.approx(4.0 * (1 - zeta1))
    assert qpair.visits(0, 0) == 2


def test_snapshot_is_independent():
    qpair = _qpair({(0, 0): (1.0, 1.0)})
    frozen = qpair.snapshot()
    qpair.update(0, 0, 9.0, 9.0, StepSchedule())
    assert frozen.q(0, 0) == 1.0
    assert frozen.visits(0, 0) == 1


def test_table_dumps_sorted_records():
    qpair = _qpair({((1, 2), 1): (0.5, 3.0), ((1, 2), 0): (-1.0, 1.0)})
    lines = qpair.dumps().splitlines()
    assert lines[0] == "# table snapshot"
    assert lines[1] == "pair state (1,2) action 0 q -1 h 1 visits 1"
    assert lines[2] == "pair state (1,2) action 1 q 0.5 h 3 visits 1"

    table = LazyTable()
    table.update("s", "u", 2.0, 1.0)
    assert table.dumps().splitlines()[1] == "pair state 's' action 'u' value 2 visits 1"


# ===== ACTION SELECTION =====

def test_noisy_feasible_set_keeps_near_minimal_nonpositive_actions():
    qpair = _qpair({(0, 0): (-1.0, 1.0), (0, 1): (-0.98, 9.0), (0, 2): (0.5, 20.0)})
    config = LearnerConfig(eps_feas_learn=0.05)
    assert noisy_feasible_set(qpair, 0, [0, 1, 2], config) == [0, 1]
    assert greedy_action(qpair, 0, [0, 1, 2], config) == 1


def test_revenue_actions_fall_back_to_near_argmin():
    qpair = _qpair({(0, 0): (0.5, 1.0), (0, 1): (0.52, 9.0), (0, 2): (1.0, 20.0)})
    config = LearnerConfig(eps_feas_learn=0.05)
    assert noisy_feasible_set(qpair, 0, [0, 1, 2], config) == []
    assert revenue_actions(qpair, 0, [0, 1, 2], config) == [0, 1]
    assert greedy_action(qpair, 0, [0, 1, 2], config) == 1


def test_shrinking_tolerance_tightens_with_visits():
    qpair = _qpair({(0, 0): (-1.0, 0.0), (0, 1): (-0.97, 0.0)})
    for _ in range(15):
        qpair.update(0, 1, -0.97, 0.0, StepSchedule())
    config = LearnerConfig(eps_feas_learn=0.05, shrink_eps=True)
    assert noisy_feasible_set(qpair, 0, [0, 1], config) == [0]


def test_select_action_explores_only_admissible_actions():
    qpair = _qpair({(0, 0): (-1.0, 1.0), (0, 1): (1.0, 5.0)})
    greedy = LearnerConfig(exploration_epsilon=0.0)
    explore = LearnerConfig(exploration_epsilon=1.0)
    rng = RngStream(3)
    assert {select_action(qpair, 0, [0, 1], greedy, rng) for _ in range(50)} == {0}
    assert {select_action(qpair, 0, [0, 1], explore, rng) for _ in range(200)} == {0, 1}


# ===== SYNCHRONOUS TRAINING =====

def test_sync_sweep_is_exact_on_the_toy(toy, rng):
    qpair = sync_sweep(toy, LazyQPair(), _config(), rng)
    assert (qpair.q(0, ACTION_A), qpair.q(0, ACTION_B)) == (-1.0, 1.0)
    assert (qpair.h(0, ACTION_A), qpair.h(0, ACTION_B)) == (1.0, 5.0)
    policy = extract_learned_policy(qpair, toy, _config())
    assert policy.action_of(0) == ACTION_A


def test_sync_sweep_reads_tables_from_sweep_start(chain, rng):
    qpair = sync_sweep(chain, LazyQPair(), _config(), rng)
    # first sweep only sees the zero continuation
    assert [qpair.q(s, 0) for s in range(3)] == [1.0, -2.0, 0.5]


def _two_state_model():
    return ExplicitCmdp(
        state_count=3,
        action_sets=[[0, 1], [0, 1], [0]],
        transition={(0, 0): {1: 0.5, 2: 0.5}, (0, 1): {1: 0.25, 2: 0.75},
                    (1, 0): {2: 1.0}, (1, 1): {2: 1.0}, (2, 0): {2: 1.0}},
        reward={(0, 0): 1.0, (0, 1): 3.0, (1, 0): 2.0, (1, 1): 5.0, (2, 0): 0.0},
        constraint_cost={(0, 0): 0.5, (0, 1): -0.25, (1, 0): -1.0, (1, 1): 0.5, (2, 0): 0.0},
        absorbing=[False, False, True],
        initial_state=0,
        horizon_T=2,
        stages=[0, 1, 2],
    )


def _assert_tables(qpair, rows):
    for row in rows:
        state, action = row["state"], row["action"]
        assert qpair.q(state, action) == pytest.approx(row["q"], rel=1e-12, abs=1e-15)
        assert qpair.h(state, action) == pytest.approx(row["h"], rel=1e-12, abs=1e-15)
        assert qpair.visits(state, action) == row["visits"]


def test_sync_sweeps_match_the_frozen_run(golden):
    frozen = golden("two_state_sweeps")
    model = _two_state_model()
    rng = RngStream(frozen["seed"], frozen["stream_id"])
    config = _config(eps_feas_learn=0.05)
    qpair = sync_sweep(model, LazyQPair(), config, rng)
    _assert_tables(qpair, frozen["after_first_sweep"])
    qpair = sync_sweep(model, qpair, config, rng)
    _assert_tables(qpair, frozen["after_second_sweep"])
    assert len(qpair) == 4


def test_sync_needs_enumerable_models(micro, rng):
    with pytest.raises(NotEnumerableError):
        sync_sweep(VehicleSharingModel(micro), LazyQPair(), _config(), rng)


def test_sync_pair_limit(toy, rng, monkeypatch):
    monkeypatch.setattr(settings, "SYNC_PAIR_LIMIT", 1)
    with pytest.raises(NotEnumerableError):
        sync_sweep(toy, LazyQPair(), _config(), rng)


@pytest.mark.slow
def test_sync_training_converges_on_the_chain(chain):
    reference = OracleReference.two_phase(chain)
    qpair, log = train_sync(chain, _config(max_episodes=300, eval_every=100, eval_trials=20),
                            RngStream(11), reference)
    assert len(log) == 3
    assert log.last.xi_norm_q_error < 1e-3
    assert log.last.xi_norm_h_error < 1e-2
    assert log.last.mc_mean_reward == pytest.approx(4.0)


# ===== ASYNCHRONOUS TRAINING =====

def test_async_training_on_the_toy():
    toy = toy_model()
    qpair, log = train_async(toy, _config(max_episodes=200, eval_every=50, eval_trials=10), RngStream(5))
    assert qpair.q(0, ACTION_A) == -1.0
    assert qpair.h(0, ACTION_A) == 1.0
    assert log.episode_lengths == [1] * 200
    assert [c.episode for c in log] == [50, 100, 150, 200]
    assert [c.update_count for c in log] == [50, 100, 150, 200]
    assert all(c.mc_mean_reward == 1.0 and c.mc_mean_constraint == -1.0 for c in log)

    policy = extract_learned_policy(qpair, toy, _config())
    assert policy.action_of(0) == ACTION_A


def test_async_training_is_reproducible():
    toy = toy_model(d_a=0.0, d_b=0.0)
    first, _ = train_async(toy, _config(max_episodes=40), RngStream(9))
    second, _ = train_async(toy, _config(max_episodes=40), RngStream(9))
    assert first.dumps() == second.dumps()


def test_async_prefers_revenue_when_both_actions_are_feasible():
    toy = toy_model(d_a=0.0, d_b=0.0)
    qpair, _ = train_async(toy, _config(max_episodes=200, exploration_epsilon=0.3), RngStream(4))
    assert extract_learned_policy(qpair, toy, _config()).action_of(0) == ACTION_B


@pytest.mark.slow
def test_async_training_on_the_micro_scenario(micro):
    model = VehicleSharingModel(micro)
    qpair, _ = train_async(model, _config(max_episodes=400, exploration_epsilon=0.2), RngStream(21))
    policy = extract_learned_policy(qpair, model, _config())
    x0 = (0, ((1, 0),), (0, 1, 0, 0))
    assert qpair.q(x0, SEND) == pytest.approx(0.0, abs=1e-2)
    assert qpair.q(x0, STAY) == pytest.approx(0.5, abs=1e-2)
    assert policy.action_of(x0) == SEND

    result = mc_evaluate(model, policy, 50, RngStream(2))
    assert result.mean_total_reward == 10.0
    assert result.mean_total_constraint == pytest.approx(0.0, abs=1e-12)


# ===== SAMPLED BACKUPS AND CONVERGENCE ON RANDOM MODELS =====

def _learnable_models(count=5, gap=0.1):
    """Feasible 20-state models whose best and second-best Q* differ by at least ``gap`` everywhere"""
    models = []
    for seed in range(200):
        model = random_episodic_cmdp(RngStream(seed), n_states=20, max_actions=3)
        q_star = compute_Q_star(model)
        if q_star.min_per_state()[model.initial_state()] > -0.1:
            continue
        rows = [sorted(q_star.row(s).values()) for s in model.transient_states()]
        if all(len(row) == 1 or row[1] - row[0] >= gap for row in rows):
            models.append(model)
            if len(models) == count:
                break
    assert len(models) == count
    return models


@pytest.fixture(scope="module")
def learnable_models():
    return _learnable_models()


def _uniform_reach(model):
    """Probability of visiting each state when every action is drawn uniformly"""
    reach = np.zeros(model.state_count)
    reach[model.initial_state()] = 1.0
    for s in sorted(model.transient_states(), key=model.stage):
        actions = model.admissible_actions(s)
        for a in actions:
            for nxt, p in model.transition[(s, a)].items():
                reach[nxt] += reach[s] * p / len(actions)
    return reach


def _xi_error(model, exact, lookup, states):
    return max(abs(lookup(s, a) - exact.get(s, a)) / model.xi_weights[s]
               for s in states for a in model.admissible_actions(s))


def test_sampled_targets_are_unbiased():
    model = random_episodic_cmdp(RngStream(8), n_states=20, max_actions=3)
    gen = RngStream(1).generator
    q_values = gen.uniform(-1.0, 1.0, size=len(model.pairs))
    h_values = gen.uniform(0.0, 10.0, size=len(model.pairs))
    tables = _qpair({pair: (q, h) for pair, q, h in zip(model.pairs, q_values, h_values)
                     if not model.is_absorbing(pair[0])})
    backup = _Backup(model, tables, _config())
    state, action = next(pair for pair in model.pairs
                         if not model.is_absorbing(pair[0]) and len(model.transition[pair]) > 1)

    rng = RngStream(2)
    draws = np.array([backup.targets(state, action, rng)[:2] for _ in range(4000)])
    exact_q = bellman_F(model, QTable(model, q_values)).get(state, action)
    # F_R over the revenue actions of the current Q
    exact_h = model.expected_reward(state, action) + math.fsum(
        p * backup.continuation(nxt)[1] for nxt, p in model.transition[(state, action)].items())

    for column, exact in enumerate((exact_q, exact_h)):
        se = draws[:, column].std(ddof=1) / math.sqrt(len(draws))
        assert se > 0
        assert abs(draws[:, column].mean() - exact) <= 3 * se


@pytest.mark.slow
@pytest.mark.parametrize("index", range(5))
def test_sync_training_converges_on_random_models(learnable_models, index):
    model = learnable_models[index]
    reference = OracleReference.two_phase(model)
    pairs = sum(len(model.admissible_actions(s)) for s in model.transient_states())
    sweeps = 200_000 // pairs
    _, log = train_sync(model, _config(max_episodes=sweeps, eval_every=sweeps), RngStream(index), reference)
    assert log.last.update_count <= 200_000
    assert log.last.xi_norm_q_error < 0.05
    assert log.last.xi_norm_h_error < 0.05


@pytest.mark.slow
@pytest.mark.parametrize("index", range(5))
def test_async_training_converges_on_random_models(learnable_models, index):
    model = learnable_models[index]
    reference = OracleReference.two_phase(model)
    episodes = 1_000_000 // model.horizon_T
    config = _config(max_episodes=episodes, eval_every=episodes, exploration_epsilon=1.0)
    qpair, log = train_async(model, config, RngStream(index))
    assert log.last.update_count <= 1_000_000

    # states reached in at least one episode out of fifty under uniform exploration
    reach = _uniform_reach(model)
    frequent = [s for s in model.transient_states() if reach[s] >= 0.02]
    assert model.initial_state() in frequent
    assert _xi_error(model, reference.q_star, qpair.q, frequent) < 0.1
    assert _xi_error(model, reference.h_star, qpair.h, frequent) < 0.1

    policy = extract_learned_policy(qpair, model, config)
    result = mc_evaluate(model, policy, 1000, RngStream(index, 1))
    assert result.mean_total_constraint <= 2 * result.constraint_se


@pytest.mark.slow
def test_vanilla_q_learning_matches_unconstrained_value_iteration(learnable_models):
    model = learnable_models[0]
    reference = OracleReference.unconstrained(model)
    episodes = 500_000 // model.horizon_T
    config = _config(max_episodes=episodes, eval_every=episodes, exploration_epsilon=1.0)
    result = train_vanilla_q(model, config, RngStream(3))
    reach = _uniform_reach(model)
    frequent = [s for s in model.transient_states() if reach[s] >= 0.02]
    assert _xi_error(model, reference.h_star, result.h_table.get, frequent) < 0.1


# ===== CHECKPOINT LOGS =====

def test_learning_log_frame_columns():
    log = LearningLog()
    log.append(Checkpoint(10, 1, 0.5, 0.25, 3.0, -1.0, None))
    frame = log.to_frame()
    assert list(frame.columns) == COLUMNS
    assert frame.loc[0, "update_count"] == 10
    assert frame.loc[0, "xi_norm_h_error"] == 0.25

    with_lambda = LearningLog(with_multiplier=True)
    with_lambda.append(Checkpoint(1, 1, multiplier=0.75))
    assert list(with_lambda.to_frame().columns) == COLUMNS + ["lambda"]
    assert with_lambda.to_frame().loc[0, "lambda"] == 0.75


def test_learning_log_csv(tmp_path):
    log = LearningLog()
    log.append(Checkpoint(4, 2, mc_mean_reward=1.5))
    path = log.to_csv(tmp_path / "curves" / "log.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(COLUMNS)
    assert lines[1] == "4,2,,,1.5,,"


def test_oracle_reference_errors(toy):
    reference = OracleReference.two_phase(toy)
    exact = _qpair({(0, ACTION_A): (-1.0, 1.0), (0, ACTION_B): (1.0, 5.0)})
    assert reference.errors(exact) == (0.0, 0.0)
    assert reference.h_error(LazyQPair().h) == 5.0

    unconstrained = OracleReference.unconstrained(toy)
    assert unconstrained.q_error(exact.q) is None
    assert unconstrained.h_error(exact.h) == 0.0


def test_oracle_reference_rejects_infeasible_models(infeasible_toy):
    with pytest.raises(InfeasibleProblemError):
        OracleReference.two_phase(infeasible_toy)
