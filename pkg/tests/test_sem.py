import numpy as np
import pytest

from causalpaths import (
    CorrelationMatrix,
    InfeasibleStandardization,
    NotPSD,
    SingularPredictors,
    UnknownNode,
    adjustment_sets,
    attach_weights,
    bidirected,
    build_graph,
    correlation_decomposition,
    directed,
    do_surgery,
    expected_regression,
    implied_correlations,
    parse_dag,
    predict_intervention,
    regress,
    total_effect,
)
from causalpaths.errors import NoValidSet
from tests.helpers import fixture_text, random_model

FIG4_COEF = {directed("X", "Z"): 0.2, directed("X", "Y"): 0.35, directed("Z", "Y"): 0.65}


def fig4_model():
    g = build_graph(["X", "Y", "Z"], list(FIG4_COEF))
    return attach_weights(g, FIG4_COEF)


def load_model(name):
    g, coef = parse_dag(fixture_text(name))
    return attach_weights(g, coef)


# --------------------------------------------------------------------------
# attach_weights
# --------------------------------------------------------------------------


def test_error_variances_solved_for_unit_variance():
    m = fig4_model()
    # hand algebra: Var(Z) = 0.2^2 + w = 1; Var(Y) = b'Rb + w = 1
    assert m.error_var["X"] == pytest.approx(1.0, abs=1e-12)
    assert m.error_var["Z"] == pytest.approx(0.96, abs=1e-12)
    assert m.error_var["Y"] == pytest.approx(0.364, abs=1e-12)
    sigma = m.covariance()
    assert np.allclose(np.diag(sigma), 1.0, atol=1e-9)


def test_overlarge_coefficient_is_infeasible():
    g = build_graph(["X", "Y"], [directed("X", "Y")])
    with pytest.raises(InfeasibleStandardization):
        attach_weights(g, {directed("X", "Y"): 1.5})


def test_missing_and_unknown_coefficients_rejected():
    g = build_graph(["X", "Y"], [directed("X", "Y")])
    with pytest.raises(ValueError):
        attach_weights(g, {})
    with pytest.raises(ValueError):
        attach_weights(g, {directed("X", "Y"): 0.5, directed("Y", "X"): 0.1})


def test_crosslag_fixture_is_valid():
    m = load_model("self_efficacy_crosslag.dag")
    assert m.error_var["P2"] == pytest.approx(1 - (0.071**2 + 0.56**2 + 2 * 0.071 * 0.56 * 0.316), abs=1e-12)


def test_bidirected_error_covariance_must_be_psd():
    g = build_graph(
        ["A", "B", "C"],
        [bidirected("A", "B"), bidirected("A", "C"), bidirected("B", "C")],
    )
    with pytest.raises(NotPSD):
        attach_weights(
            g,
            {bidirected("A", "B"): 0.9, bidirected("A", "C"): 0.9, bidirected("B", "C"): -0.9},
        )


# --------------------------------------------------------------------------
# implied correlations
# --------------------------------------------------------------------------


def test_implied_correlations_match_known_values():
    for method in ("matrix", "tracing"):
        R = implied_correlations(fig4_model(), method)
        assert R.r("X", "Y") == pytest.approx(0.48, abs=1e-12)
        assert R.r("Z", "Y") == pytest.approx(0.72, abs=1e-12)
        assert R.r("X", "Z") == pytest.approx(0.20, abs=1e-12)


def test_edgeless_model_implies_identity():
    g = build_graph(["A", "B", "C"], [])
    m = attach_weights(g, {})
    for method in ("matrix", "tracing"):
        assert np.array_equal(implied_correlations(m, method).values, np.eye(3))


def test_table_one_reproduced_by_first_orientation_weights():
    g = build_graph(["A", "B", "C"], [directed("A", "B"), directed("A", "C"), directed("B", "C")])
    m = attach_weights(
        g,
        {directed("A", "B"): 0.5, directed("A", "C"): -0.2666666666666667, directed("B", "C"): 0.9333333333333333},
    )
    R = implied_correlations(m)
    assert R.r("A", "B") == pytest.approx(0.5, abs=1e-9)
    assert R.r("A", "C") == pytest.approx(0.2, abs=1e-9)
    assert R.r("B", "C") == pytest.approx(0.8, abs=1e-9)


def test_tracing_equals_matrix_on_random_models():
    rng = np.random.default_rng(4242)
    for _ in range(80):
        m = random_model(rng, int(rng.integers(2, 8)), p=0.4, max_bidirected=2)
        a = implied_correlations(m, "matrix").values
        b = implied_correlations(m, "tracing").values
        assert np.max(np.abs(a - b)) < 1e-10


def test_walsh_implied_correlations():
    m = load_model("lab_attitudes.dag")
    R = implied_correlations(m)
    assert R.r("Major", "Post") == pytest.approx(0.115 + 0.574 * 0.505, abs=1e-12)
    assert R.r("Instruction", "Post") == pytest.approx(0.505 + 0.574 * 0.115, abs=1e-12)
    assert R.r("Pre", "Major") == pytest.approx(0.0, abs=1e-12)
    assert R.r("URM", "Post") == pytest.approx(0.0, abs=1e-12)


# --------------------------------------------------------------------------
# regression
# --------------------------------------------------------------------------


def test_regress_single_predictor_equals_correlation():
    R = implied_correlations(fig4_model())
    result = regress(R, "Y", ["X"])
    assert result.coefficients["X"] == pytest.approx(0.48, abs=1e-12)
    assert result.r_squared == pytest.approx(0.2304, abs=1e-12)


def test_regress_two_predictor_closed_form():
    # two-predictor normal equations reduce to the textbook closed form
    rng = np.random.default_rng(11)
    for _ in range(50):
        m = random_model(rng, 3, p=0.9)
        R = implied_correlations(m)
        a, b, c = R.names
        r_ab, r_ac, r_bc = R.r(a, b), R.r(a, c), R.r(b, c)
        if abs(1 - r_ab**2) < 1e-6:
            continue
        result = regress(R, c, [a, b])
        expected_a = (r_ac - r_ab * r_bc) / (1 - r_ab**2)
        expected_b = (r_bc - r_ab * r_ac) / (1 - r_ab**2)
        assert result.coefficients[a] == pytest.approx(expected_a, abs=1e-12)
        assert result.coefficients[b] == pytest.approx(expected_b, abs=1e-12)


def test_regress_collider_adjustment_closed_form():
    g = build_graph(["X", "Z", "Y"], [directed("X", "Y"), directed("Z", "Y")])
    m = attach_weights(g, {directed("X", "Y"): 0.6, directed("Z", "Y"): 0.4})
    R = implied_correlations(m)
    result = regress(R, "Z", ["X", "Y"])
    r_xy, r_zy = R.r("X", "Y"), R.r("Z", "Y")
    assert R.r("X", "Z") == pytest.approx(0.0, abs=1e-15)
    assert result.coefficients["X"] == pytest.approx(-r_xy * r_zy / (1 - r_xy**2), abs=1e-12)


def test_regress_uncorrelated_predictor_gives_zero():
    R = CorrelationMatrix(["U", "V"], np.eye(2))
    result = regress(R, "V", ["U"])
    assert result.coefficients["U"] == 0.0
    assert result.r_squared == 0.0


def test_regress_no_predictors():
    R = implied_correlations(fig4_model())
    result = regress(R, "Y", [])
    assert result.coefficients == {} and result.r_squared == 0.0


def test_regress_validation():
    R = implied_correlations(fig4_model())
    with pytest.raises(ValueError):
        regress(R, "Y", ["X", "X"])
    with pytest.raises(ValueError):
        regress(R, "Y", ["Y"])
    with pytest.raises(UnknownNode):
        regress(R, "Y", ["Q"])
    singular = CorrelationMatrix(["A", "B", "C"], [[1, 1, 0], [1, 1, 0], [0, 0, 1]])
    with pytest.raises(SingularPredictors):
        regress(singular, "C", ["A", "B"])


def test_r_squared_identity():
    rng = np.random.default_rng(5150)
    for _ in range(25):
        m = random_model(rng, 5, p=0.5)
        R = implied_correlations(m)
        outcome = m.graph.nodes[-1]
        predictors = [n for n in m.graph.nodes[:-1]][: int(rng.integers(1, 4))]
        result = regress(R, outcome, predictors)
        expected = sum(result.coefficients[p] * R.r(outcome, p) for p in predictors)
        assert result.r_squared == pytest.approx(expected, abs=1e-12)


# --------------------------------------------------------------------------
# expected regressions (the omitted-variable configurations)
# --------------------------------------------------------------------------


def test_expected_regressions_fig4():
    m = fig4_model()
    yx = expected_regression(m, "Y", ["X"])
    assert yx.coefficients["X"] == pytest.approx(0.48, abs=1e-12)
    yxz = expected_regression(m, "Y", ["X", "Z"])
    assert yxz.coefficients["X"] == pytest.approx(0.35, abs=1e-12)
    assert yxz.coefficients["Z"] == pytest.approx(0.65, abs=1e-12)
    zxy = expected_regression(m, "Z", ["X", "Y"])
    assert zxy.coefficients["X"] == pytest.approx(-0.1456 / 0.7696, abs=1e-12)
    assert zxy.coefficients["Y"] == pytest.approx(0.624 / 0.7696, abs=1e-12)


def test_expected_regressions_walsh():
    m = load_model("lab_attitudes.dag")
    omitted = expected_regression(m, "Post", ["Major", "Pre"])
    assert omitted.coefficients["Major"] == pytest.approx(0.115 + 0.574 * 0.505, abs=1e-12)
    saturated = expected_regression(m, "Post", ["Major", "Instruction", "Pre"])
    assert saturated.coefficients["Major"] == pytest.approx(0.115, abs=1e-12)
    assert saturated.coefficients["Instruction"] == pytest.approx(0.505, abs=1e-12)
    assert saturated.coefficients["Pre"] == pytest.approx(0.56, abs=1e-12)
    uncontrolled = expected_regression(m, "Post", ["Instruction", "Pre"])
    assert uncontrolled.coefficients["Instruction"] == pytest.approx(0.505 + 0.574 * 0.115, abs=1e-12)


# --------------------------------------------------------------------------
# effects
# --------------------------------------------------------------------------


def test_total_effect_fig4():
    report = total_effect(fig4_model(), "X", "Y")
    assert report.total == pytest.approx(0.48, abs=1e-12)
    assert report.direct == pytest.approx(0.35, abs=1e-12)
    assert report.indirect == pytest.approx(0.13, abs=1e-12)
    assert len(report.per_path) == 2
    assert all(c.kind == "causal" for c in report.per_path)


def test_total_effect_on_non_descendant_is_zero():
    report = total_effect(fig4_model(), "Y", "X")
    assert report.total == 0.0
    assert report.per_path == ()


def test_total_effect_with_fixed_mediator():
    g = build_graph(["A", "B", "C"], [directed("A", "B"), directed("A", "C"), directed("B", "C")])
    m = attach_weights(
        g,
        {directed("A", "B"): 0.5, directed("A", "C"): -0.2666666666666667, directed("B", "C"): 0.9333333333333333},
    )
    assert total_effect(m, "A", "C").total == pytest.approx(0.2, abs=1e-9)
    assert total_effect(m, "A", "C", {"B"}).total == pytest.approx(-0.2666666666666667, abs=1e-12)


def test_total_effect_validation():
    m = fig4_model()
    with pytest.raises(ValueError):
        total_effect(m, "X", "X")
    with pytest.raises(ValueError):
        total_effect(m, "X", "Y", {"Y"})
    with pytest.raises(UnknownNode):
        total_effect(m, "X", "Y", {"Q"})


def test_adjustment_theorem_on_random_models():
    # regressing outcome on exposure plus any valid backdoor set recovers
    # the total effect exactly in the linear standardized model
    rng = np.random.default_rng(909)
    checked = 0
    while checked < 60:
        m = random_model(rng, int(rng.integers(3, 7)), p=0.5)
        g = m.graph
        exposure, outcome = [g.nodes[i] for i in rng.choice(len(g.nodes), size=2, replace=False)]
        try:
            report = adjustment_sets(g, exposure, outcome)
        except NoValidSet:
            continue
        want = total_effect(m, exposure, outcome).total
        for s in report.valid_sets:
            got = expected_regression(m, outcome, [exposure] + sorted(s)).coefficients[exposure]
            assert got == pytest.approx(want, abs=1e-9)
        checked += 1


def test_adjusting_mediator_or_collider_breaks_the_effect():
    m = fig4_model()
    biased = expected_regression(m, "Y", ["X", "Z"]).coefficients["X"]
    assert abs(biased - total_effect(m, "X", "Y").total) > 0.05
    collided = expected_regression(m, "Z", ["X", "Y"]).coefficients["X"]
    assert abs(collided - total_effect(m, "X", "Z").total) > 0.05


# --------------------------------------------------------------------------
# correlation decomposition
# --------------------------------------------------------------------------


def test_decomposition_crosslag():
    m = load_model("self_efficacy_crosslag.dag")
    report = correlation_decomposition(m, "SE1", "P2")
    assert report.total == pytest.approx(0.071 + 0.316 * 0.56, abs=1e-12)
    assert report.causal_part == pytest.approx(0.071, abs=1e-12)
    assert report.noncausal_part == pytest.approx(0.316 * 0.56, abs=1e-12)
    kinds = {c.path.describe(): c.kind for c in report.per_path}
    assert kinds == {"SE1 -> P2": "causal", "SE1 <-> P1 -> P2": "non-causal"}


def test_decomposition_fig4():
    report = correlation_decomposition(fig4_model(), "Z", "Y")
    assert report.causal_part == pytest.approx(0.65, abs=1e-12)
    assert report.noncausal_part == pytest.approx(0.07, abs=1e-12)
    assert report.total == pytest.approx(0.72, abs=1e-12)


def test_decomposition_disconnected():
    g = build_graph(["A", "B", "C"], [directed("A", "B")])
    m = attach_weights(g, {directed("A", "B"): 0.5})
    report = correlation_decomposition(m, "A", "C")
    assert report.per_path == () and report.total == 0.0


def test_decomposition_sums_to_implied_correlation():
    rng = np.random.default_rng(616)
    for _ in range(40):
        m = random_model(rng, 6, p=0.45, max_bidirected=2)
        R = implied_correlations(m)
        names = m.graph.nodes
        u, v = [names[i] for i in rng.choice(len(names), size=2, replace=False)]
        report = correlation_decomposition(m, u, v)
        assert report.total == pytest.approx(R.r(u, v), abs=1e-10)


# --------------------------------------------------------------------------
# surgery and intervention
# --------------------------------------------------------------------------


def test_surgery_removes_incoming_and_restandardizes():
    m = fig4_model()
    s = do_surgery(m, "Z")
    assert directed("X", "Z") not in s.graph.edges
    assert directed("Z", "Y") in s.graph.edges
    assert s.error_var["Z"] == pytest.approx(1.0, abs=1e-12)
    assert total_effect(s, "X", "Y").total == pytest.approx(0.35, abs=1e-12)


def test_surgery_on_exogenous_unconfounded_node_changes_nothing():
    m = fig4_model()
    s = do_surgery(m, "X")
    assert s.graph == m.graph
    assert s.coef == m.coef


def test_surgery_idempotent_and_preserves_outgoing_effects():
    rng = np.random.default_rng(808)
    for _ in range(25):
        m = random_model(rng, 5, p=0.5, max_bidirected=1)
        target = m.graph.nodes[int(rng.integers(0, 5))]
        once = do_surgery(m, target)
        twice = do_surgery(once, target)
        assert once.graph == twice.graph and once.coef == twice.coef
        for other in m.graph.nodes:
            if other == target:
                continue
            assert total_effect(once, target, other).total == pytest.approx(
                total_effect(m, target, other).total, abs=1e-12
            )


def test_randomization_breaks_confounding():
    m = load_model("randomized_confounders.dag")
    d = 0.4
    ab = 0.3 * 0.35 + 0.25 * 0.3 + 0.2 * 0.25
    before = expected_regression(m, "Y", ["X"])
    assert before.coefficients["X"] == pytest.approx(d + ab, abs=1e-12)
    randomized = do_surgery(m, "X")
    after_plain = expected_regression(randomized, "Y", ["X"])
    after_adjusted = expected_regression(randomized, "Y", ["X", "C1", "C2", "C3"])
    assert after_plain.coefficients["X"] == pytest.approx(d, abs=1e-12)
    assert after_adjusted.coefficients["X"] == pytest.approx(d, abs=1e-12)


def test_predict_intervention_motivation_model4():
    m = load_model("motivation_model4.dag")
    report = predict_intervention(m, "PR", 1.0)
    assert report.changes["Identity"] == pytest.approx(
        0.59 + 0.47 * 0.23 + 0.67 * (0.13 + 0.26 * 0.23), abs=1e-12
    )
    assert report.changes["SE"] == pytest.approx(0.67, abs=1e-12)
    # interest shifts through both its direct input and the SE route
    assert report.changes["INT"] == pytest.approx(0.47 + 0.67 * 0.26, abs=1e-12)
    assert report.changes["PR"] == 1.0
    assert report.removed_edges == ()


def test_predict_intervention_common_effect_models():
    for name in ("motivation_model1.dag", "motivation_model2.dag", "motivation_model3.dag"):
        m = load_model(name)
        report = predict_intervention(m, "PR", 1.0)
        assert report.changes["Identity"] == pytest.approx(0.59, abs=1e-12), name
        assert report.changes["SE"] == 0.0
        assert report.changes["INT"] == 0.0
        assert len(report.removed_edges) >= 2


def test_predict_intervention_zero_delta():
    m = fig4_model()
    report = predict_intervention(m, "X", 0.0)
    assert set(report.changes.values()) == {0.0}


def test_fixture_infeasibility_guard():
    # every shipped weighted fixture must standardize cleanly
    for name in (
        "xyz_mediation.dag",
        "randomized_confounders.dag",
        "scholarship_collider.dag",
        "lab_attitudes.dag",
        "self_efficacy_crosslag.dag",
        "motivation_model1.dag",
        "motivation_model2.dag",
        "motivation_model3.dag",
        "motivation_model4.dag",
    ):
        load_model(name)
