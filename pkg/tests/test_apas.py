import numpy as np
import pytest
from sklearn.base import clone

from decrho import (Apas, ApasConfig, ConvertedModel, NegativeEntropy, PlannerParams, brute_force_pair,
                    coupled_tag, decoupled_chains, evaluate_exact, propagate, run_apas, run_apas_no_adaptation,
                    sample_simplex, single_tiger)
from decrho.planner import plan_with_history

FAST = PlannerParams(improvement_iterations=8)


def _config(**kw):
    kw.setdefault("planner", FAST)
    return ApasConfig(**kw)


def test_single_iteration_is_sample_then_plan():
    model = coupled_tag(2)
    f = NegativeEntropy()
    config = _config(K=3, outer_iterations=1, seed=11)
    policy, report = run_apas(model, f, config)
    gamma_seq, plan_seq, _ = np.random.SeedSequence(11).spawn(3)
    points = sample_simplex(model.n_states, 3, np.random.default_rng(gamma_seq))
    np.testing.assert_array_equal(report.iterations[0].gamma_points, points)
    converted = ConvertedModel(model, report.best_gamma)
    expected, value, _ = plan_with_history(converted, FAST, np.random.default_rng(plan_seq.spawn(1)[0]))
    assert policy == expected
    assert report.iterations[0].planner_value == value
    assert report.best_value == evaluate_exact(model, policy, reward=f)


def test_single_iteration_matches_the_ablation():
    model = coupled_tag(2)
    config = _config(outer_iterations=1, seed=3)
    a_policy, a_report = run_apas(model, None, config)
    b_policy, b_report = run_apas_no_adaptation(model, None, config)
    assert a_policy == b_policy
    assert a_report.best_value == b_report.best_value


@pytest.mark.parametrize("runner", [run_apas, run_apas_no_adaptation])
def test_best_values_never_decrease(runner):
    _, report = runner(coupled_tag(2), None, _config(outer_iterations=6, seed=4))
    best = report.best_values
    assert all(b >= a for a, b in zip(best, best[1:]))
    assert best[-1] == report.best_value
    assert max(r.value for r in report.iterations) == report.best_value


def test_every_iteration_records_k_tangent_points():
    f = NegativeEntropy()
    model = coupled_tag(2)
    _, report = run_apas_no_adaptation(model, f, _config(K=4, outer_iterations=4, seed=5))
    seen = []
    for rec in report.iterations:
        assert rec.gamma_points.shape == (4, model.n_states)
        np.testing.assert_allclose(rec.gamma_points.sum(axis=1), 1.0)
        np.testing.assert_allclose(rec.gamma_vectors, [f.tangent(b) for b in rec.gamma_points])
        seen.append(rec.gamma_points.tobytes())
    assert len(set(seen)) == len(seen)


def test_adapted_points_are_estimates_under_the_best_policy():
    model = coupled_tag(2)
    first, _ = run_apas(model, None, _config(outer_iterations=1, seed=6))
    _, report = run_apas(model, None, _config(outer_iterations=2, seed=6))
    sigma = propagate(model, first.decision_rules(model.horizon))[-1]
    estimates = [row / row.sum() for row in sigma.entries.values()]
    for point in report.iterations[1].gamma_points:
        assert min(np.abs(point - e).max() for e in estimates) < 1e-12


def test_same_seed_same_report():
    model = coupled_tag(2)
    _, a = run_apas(model, None, _config(outer_iterations=3, seed=7))
    _, b = run_apas(model, None, _config(outer_iterations=3, seed=7))
    assert a.best_values == b.best_values
    for x, y in zip(a.iterations, b.iterations):
        np.testing.assert_array_equal(x.gamma_points, y.gamma_points)


def test_single_agent_planner_value_equals_centralized_value():
    _, report = run_apas(single_tiger(2), None, _config(outer_iterations=3, seed=8))
    for rec in report.iterations:
        assert rec.planner_value == pytest.approx(rec.rho_value, abs=1e-12)


def test_retaining_the_best_set_grows_the_alpha_set():
    _, report = run_apas(coupled_tag(2), None, _config(K=2, outer_iterations=2, seed=9, retain_best_gamma=True))
    assert [len(r.gamma_points) for r in report.iterations] == [2, 4]


def test_rho_final_mode_reports_the_centralized_value():
    _, report = run_apas(coupled_tag(2), None, _config(outer_iterations=2, seed=10, final_mode="rho"))
    assert all(r.value == r.rho_value for r in report.iterations)


def test_config_validation():
    with pytest.raises(ValueError):
        ApasConfig(K=0)
    with pytest.raises(ValueError):
        ApasConfig(outer_iterations=0)
    with pytest.raises(ValueError):
        ApasConfig(final_mode="plus")


@pytest.mark.xfail(strict=True, reason="relies on a zero decentralization gap on decoupled chains, which fails "
                                       "for two or more alpha vectors; see the decisions ledger")
def test_decoupled_chains_value_within_tangent_slack():
    model = decoupled_chains(2)
    f = NegativeEntropy()
    for seed in range(5):
        _, report = run_apas(model, f, ApasConfig(K=3, seed=seed))
        res = brute_force_pair(model, report.best_gamma)
        slack = evaluate_exact(model, res.rho_policy, reward=f) - res.rho_value
        assert abs(report.best_value - res.rho_value) <= slack + 1e-9


def test_estimator_interface():
    model = coupled_tag(2)
    est = Apas(outer_iterations=2, n_iter=5, random_state=0)
    assert clone(est).get_params() == est.get_params()
    est.fit(model)
    assert est.score() == pytest.approx(est.value_)
    assert est.predict([(1, ())])[0] == est.policy_.agents[1].action(())
    assert est.predict([(0, (0, 1))])[0] == est.policy_.prediction_rule.action(0, (0, 1))
    ablation = clone(est).set_params(adapt=False).fit(model)
    assert len(ablation.report_.iterations) == 2
