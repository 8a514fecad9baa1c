"""Ontological models: validation, the orthodox and shared-reality
constructions, and the certified minimum violation."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import ketlab.ontology
from ketlab import (
    PREPARATION_IDS,
    CertificationError,
    LambdaSpace,
    OntologicalModel,
    PreconditionError,
    born_consistency_gap,
    born_probabilities,
    build_shared_reality_model,
    monte_carlo_onto,
    orthodox_model,
    overlap,
    paired_shared_reality_model,
    pbr_min_violation,
    pbr_scenario,
    predict,
    qubit_scenario,
)

# q**2 / 4, pinned for the values the acceptance run sweeps
EXPECTED_MIN_VIOLATION = {
    0.0: 0.0,
    0.25: 0.015625,
    0.5: 0.0625,
    0.75: 0.140625,
    1.0: 0.25,
}


def test_lambda_space_rejects_empty_and_duplicate_labels():
    with pytest.raises(PreconditionError):
        LambdaSpace(())
    with pytest.raises(PreconditionError):
        LambdaSpace(("a", "b", "a"))
    assert LambdaSpace(("a", "b")).size == 2


def test_model_rejects_malformed_distributions():
    space = LambdaSpace(("a", "b"))
    with pytest.raises(PreconditionError):
        OntologicalModel(space, {"p": [0.7, 0.7]}, {})
    with pytest.raises(PreconditionError):
        OntologicalModel(space, {"p": [1.2, -0.2]}, {})
    with pytest.raises(PreconditionError):
        OntologicalModel(space, {"p": [1.0, 0.0, 0.0]}, {})


def test_model_rejects_malformed_response_tables():
    space = LambdaSpace(("a", "b"))
    prep = {"p": [0.5, 0.5]}
    with pytest.raises(PreconditionError):
        OntologicalModel(space, prep, {"m": [[0.5, 0.5]]})  # one row for two lambdas
    with pytest.raises(PreconditionError):
        OntologicalModel(space, prep, {"m": [[0.5, 0.4], [0.5, 0.5]]})
    with pytest.raises(PreconditionError):
        OntologicalModel(space, prep, {"m": [0.5, 0.5]})  # not a table


def test_model_json_round_trip():
    model = OntologicalModel(
        LambdaSpace(("a", "b")),
        {"p": [0.25, 0.75]},
        {"m": [[1.0, 0.0], [0.25, 0.75]]},
    )
    again = OntologicalModel.from_json_dict(model.to_json_dict())
    assert again.lambda_space.labels == ("a", "b")
    np.testing.assert_allclose(predict(again, "p", "m"), predict(model, "p", "m"))
    with pytest.raises(PreconditionError):
        OntologicalModel.from_json_dict({"lambda": ["a"]})


def test_predict_rejects_unknown_ids():
    model = orthodox_model(qubit_scenario())
    with pytest.raises(PreconditionError):
        predict(model, "nope", "z")
    with pytest.raises(PreconditionError):
        predict(model, "0", "nope")


@pytest.mark.parametrize("scenario_factory", [qubit_scenario, pbr_scenario])
def test_orthodox_model_reproduces_born_exactly(scenario_factory):
    scenario = scenario_factory()
    model = orthodox_model(scenario)
    for prep_id, state in scenario.preparations.items():
        for meas_id, basis in scenario.measurements.items():
            np.testing.assert_allclose(
                predict(model, prep_id, meas_id),
                born_probabilities(state, basis),
                atol=1e-12,
            )


def test_orthodox_preparations_never_share_reality():
    model = orthodox_model(qubit_scenario())
    ids = list(model.preparations)
    for i, first in enumerate(ids):
        for second in ids[i + 1:]:
            report = overlap(model, first, second)
            assert report.variational_overlap == 0.0
            assert not report.shares_reality


def test_born_consistency_gap_is_zero_for_orthodox():
    scenario = pbr_scenario()
    model = orthodox_model(scenario)
    assert born_consistency_gap(model, scenario, PREPARATION_IDS, "xi") < 1e-15


def test_born_consistency_gap_flags_a_flat_response_model():
    scenario = pbr_scenario()
    flat = paired_shared_reality_model(0.5, xi_responses=np.full((9, 4), 0.25))
    assert born_consistency_gap(flat, scenario, PREPARATION_IDS, "xi") > 0.1


# ---------------------------------------------------------------------------
# the shared-reality family


@given(q=st.floats(min_value=0.0, max_value=1.0))
def test_shared_reality_overlap_equals_q(q):
    model = build_shared_reality_model(q)
    report = overlap(model, "0", "+")
    assert report.variational_overlap == pytest.approx(q, abs=1e-12)
    assert report.shares_reality == (q >= 1e-12)


def test_shared_reality_rejects_weight_outside_unit_interval():
    with pytest.raises(PreconditionError):
        build_shared_reality_model(-0.1)
    with pytest.raises(PreconditionError):
        build_shared_reality_model(1.1)


def test_paired_model_obeys_preparation_independence():
    q = 0.6
    single = build_shared_reality_model(q)
    paired = paired_shared_reality_model(q)
    assert len(paired.lambda_space.labels) == 9
    assert paired.lambda_space.labels[0] == "shared|shared"
    marginals = {"0": single.preparations["0"], "+": single.preparations["+"]}
    for pid in PREPARATION_IDS:
        np.testing.assert_allclose(
            paired.preparations[pid],
            np.kron(marginals[pid[0]], marginals[pid[1]]),
            atol=1e-15,
        )


def test_paired_model_structure_pins_the_bound():
    """Cross-check the q^2/4 shape by hand: every preparation puts weight
    q^2 on the fully shared lambda pair, and every other pair is invisible
    to at least one preparation, whose forbidden outcome is then a free
    dump for that row's response mass."""
    q = 0.3
    paired = paired_shared_reality_model(q)
    weights = np.stack([paired.preparations[p] for p in PREPARATION_IDS])
    shared_col = paired.lambda_space.labels.index("shared|shared")
    np.testing.assert_allclose(weights[:, shared_col], q * q, atol=1e-15)
    for col in range(9):
        if col == shared_col:
            continue
        assert weights[:, col].min() < 1e-15


# ---------------------------------------------------------------------------
# the certified bound


@pytest.mark.parametrize("q,expected", sorted(EXPECTED_MIN_VIOLATION.items()))
def test_min_violation_is_a_quarter_q_squared(q, expected):
    bound = pbr_min_violation(q)
    assert bound.upper_bound == pytest.approx(expected, abs=1e-9)
    assert bound.lower_bound == pytest.approx(expected, abs=1e-9)
    assert bound.lower_bound <= bound.upper_bound + 1e-15
    assert bound.duality_gap <= 1e-6


@given(q=st.floats(min_value=0.0, max_value=1.0))
def test_min_violation_certifies_at_arbitrary_q(q):
    bound = pbr_min_violation(q)
    assert bound.upper_bound == pytest.approx(q * q / 4.0, abs=1e-9)
    assert bound.duality_gap <= 1e-6


def test_min_violation_witness_achieves_the_bound():
    bound = pbr_min_violation(0.75)
    model = paired_shared_reality_model(0.75, xi_responses=bound.witnessing_responses)
    forbidden = dict(zip(bound.preparation_ids, bound.forbidden_outcomes))
    worst = max(
        predict(model, pid, "xi")[forbidden[pid]] for pid in bound.preparation_ids
    )
    assert worst == pytest.approx(bound.upper_bound, abs=1e-12)
    assert worst >= 0.75**2 / 4.0 - 1e-12


def test_min_violation_aggregations_are_consistent():
    bound = pbr_min_violation(1.0)
    assert bound.forbidden_mean == pytest.approx(bound.forbidden_sum / 4.0, abs=1e-15)
    assert bound.upper_bound >= bound.forbidden_mean - 1e-15


def test_min_violation_json_payload():
    payload = pbr_min_violation(0.5).to_json_dict()
    assert payload["q"] == 0.5
    assert payload["violation_lower_bound"] == pytest.approx(0.0625, abs=1e-9)
    assert payload["upper_bound"] == pytest.approx(0.0625, abs=1e-9)
    assert payload["preparations"] == list(PREPARATION_IDS)
    assert sorted(payload["forbidden_outcomes"]) == [0, 1, 2, 3]
    assert len(payload["witnessing_responses"]) == 9
    for row in payload["witnessing_responses"].values():
        assert sum(row) == pytest.approx(1.0, abs=1e-9)


def test_min_violation_rejects_bad_inputs():
    with pytest.raises(PreconditionError):
        pbr_min_violation(-0.5)
    with pytest.raises(PreconditionError):
        pbr_min_violation(0.5, resolution=0)


def test_min_violation_survives_lp_failure_at_good_resolution(monkeypatch):
    def broken(*args, **kwargs):
        raise RuntimeError("solver unavailable")

    monkeypatch.setattr(ketlab.ontology, "linprog", broken)
    bound = pbr_min_violation(0.5, resolution=8)
    assert bound.upper_bound == pytest.approx(0.0625, abs=1e-9)
    assert bound.duality_gap <= 1e-6


def test_min_violation_reports_indeterminate_instead_of_guessing(monkeypatch):
    """With the solver gone AND a grid too coarse to split the shared row
    evenly, the upper and lower bounds cannot meet; that must surface as an
    explicit certification failure."""
    def broken(*args, **kwargs):
        raise RuntimeError("solver unavailable")

    monkeypatch.setattr(ketlab.ontology, "linprog", broken)
    with pytest.raises(CertificationError):
        pbr_min_violation(1.0, resolution=1)


def test_lp_alone_certifies_a_coarse_grid():
    # resolution 1 cannot split the shared row, but the refinement step can
    bound = pbr_min_violation(1.0, resolution=1)
    assert bound.upper_bound == pytest.approx(0.25, abs=1e-9)
    assert bound.duality_gap <= 1e-6


# ---------------------------------------------------------------------------
# scenario bookkeeping and sampling


def test_qubit_scenario_forbidden_outcomes():
    scenario = qubit_scenario()
    assert scenario.forbidden == {
        "0": (("z", 0),),
        "1": (("z", 1),),
        "+": (("x", 0),),
        "-": (("x", 1),),
    }


def test_pbr_scenario_forbidden_matches_basis():
    scenario = pbr_scenario()
    assert scenario.forbidden == {
        "00": (("xi", 0),),
        "0+": (("xi", 1),),
        "+0": (("xi", 2),),
        "++": (("xi", 3),),
    }


def test_monte_carlo_matches_born_for_orthodox():
    scenario = qubit_scenario()
    model = orthodox_model(scenario)
    trials = 20000
    report = monte_carlo_onto(model, scenario, trials, seed=4)
    assert report.max_forbidden_frequency == 0.0
    for prep_id, state in scenario.preparations.items():
        for meas_id, basis in scenario.measurements.items():
            born = born_probabilities(state, basis)
            for k, p in enumerate(born):
                sigma = math.sqrt(trials * p * (1.0 - p))
                got = report.counts[prep_id][meas_id][k]
                assert abs(got - trials * p) <= max(5.0 * sigma, 1.0)


def test_monte_carlo_detects_the_unavoidable_violation():
    q = 1.0
    bound = pbr_min_violation(q)
    model = paired_shared_reality_model(q, xi_responses=bound.witnessing_responses)
    report = monte_carlo_onto(model, pbr_scenario(), 20000, seed=6)
    # every preparation is forced onto the shared pair, whose row spreads
    # mass 1/4 onto each forbidden outcome
    assert report.max_forbidden_frequency == pytest.approx(0.25, abs=0.016)


def test_monte_carlo_is_reproducible():
    scenario = qubit_scenario()
    model = orthodox_model(scenario)
    a = monte_carlo_onto(model, scenario, 500, seed=11)
    b = monte_carlo_onto(model, scenario, 500, seed=11)
    for prep_id in scenario.preparations:
        for meas_id in scenario.measurements:
            np.testing.assert_array_equal(
                a.counts[prep_id][meas_id], b.counts[prep_id][meas_id]
            )


def test_monte_carlo_rejects_models_missing_scenario_ids():
    scenario = qubit_scenario()
    bare = build_shared_reality_model(0.5)  # lacks "1", "-", and every response
    with pytest.raises(PreconditionError):
        monte_carlo_onto(bare, scenario, 10)


def test_monte_carlo_zero_trials_yields_no_frequency():
    scenario = qubit_scenario()
    model = orthodox_model(scenario)
    report = monte_carlo_onto(model, scenario, 0)
    assert report.max_forbidden_frequency is None
    assert all(
        int(report.counts[p][m].sum()) == 0
        for p in scenario.preparations for m in scenario.measurements
    )
    with pytest.raises(PreconditionError):
        monte_carlo_onto(model, scenario, -1)


def test_monte_carlo_json_payload():
    scenario = qubit_scenario()
    model = orthodox_model(scenario)
    payload = monte_carlo_onto(model, scenario, 100, seed=2).to_json_dict()
    assert payload["trials"] == 100
    assert payload["seed"] == 2
    assert payload["max_forbidden_frequency"] == 0.0
    assert set(payload["counts"]) == {"0", "1", "+", "-"}
    assert sum(payload["counts"]["0"]["z"]) == 100
