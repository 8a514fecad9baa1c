"""The four-outcome antidistinguishing measurement, EPR steering, and the
overlap-preservation check."""

import math

import numpy as np
import pytest

from ketlab import (
    PbrCounts,
    PreconditionError,
    epr_steering,
    equal_up_to_phase,
    haar_random_unitary,
    ket_minus,
    ket_one,
    ket_plus,
    ket_zero,
    overlap_preservation_check,
    pbr_basis,
    pbr_experiment,
    preparation_states,
    strong_measure,
    substream,
)

KET0 = np.array([1.0, 0.0])
KETP = np.array([1.0, 1.0]) / math.sqrt(2.0)


def raw_preparations():
    """The four product preparations built from scratch with numpy only."""
    single = {"0": KET0, "+": KETP}
    return {a + b: np.kron(single[a], single[b]) for a in "0+" for b in "0+"}


@pytest.fixture(scope="module")
def basis():
    return pbr_basis()


def test_basis_is_orthonormal_and_complete(basis):
    mat = np.column_stack([s.amplitudes for s in basis.states])
    np.testing.assert_allclose(mat.conj().T @ mat, np.eye(4), atol=1e-12)
    np.testing.assert_allclose(mat @ mat.conj().T, np.eye(4), atol=1e-12)


def test_forbidden_map_pairs_each_preparation_with_its_own_outcome(basis):
    assert basis.forbidden_map == {"00": 0, "0+": 1, "+0": 2, "++": 3}


def test_each_preparation_is_orthogonal_to_its_forbidden_state(basis):
    for prep_id, prep in raw_preparations().items():
        xi = basis.states[basis.forbidden_map[prep_id]]
        assert abs(np.vdot(xi.amplitudes, prep)) < 1e-12


def test_born_weights_for_00_preparation(basis):
    # independent of the package: raw overlaps of |00> with the four states
    prep = raw_preparations()["00"]
    probs = [abs(np.vdot(xi.amplitudes, prep)) ** 2 for xi in basis.states]
    np.testing.assert_allclose(probs, [0.0, 0.25, 0.25, 0.5], atol=1e-12)


def test_basis_constructor_rejects_degenerate_state_list(basis):
    from ketlab.pbr import PbrBasis

    doubled = (basis.states[0], basis.states[0], basis.states[2], basis.states[3])
    with pytest.raises(PreconditionError):
        PbrBasis(states=doubled, forbidden_map=basis.forbidden_map)


def test_preparation_states_match_raw_construction():
    raw = raw_preparations()
    for prep_id, state in preparation_states().items():
        np.testing.assert_allclose(state.amplitudes, raw[prep_id], atol=1e-15)


# ---------------------------------------------------------------------------
# the sampled experiment


def test_experiment_never_fires_a_forbidden_outcome(basis):
    result = pbr_experiment(20000, seed=5)
    for prep_id in ("00", "0+", "+0", "++"):
        assert result.counts[prep_id][basis.forbidden_map[prep_id]] == 0


def test_experiment_frequencies_match_born_weights(basis):
    trials = 20000
    result = pbr_experiment(trials, seed=5)
    raw = raw_preparations()
    for prep_id, prep in raw.items():
        born = np.array([abs(np.vdot(xi.amplitudes, prep)) ** 2 for xi in basis.states])
        for k in range(4):
            p = 0.25 * born[k]
            sigma = math.sqrt(trials * p * (1.0 - p)) if p > 0 else 0.0
            assert abs(result.counts[prep_id][k] - trials * p) <= max(5.0 * sigma, 1.0)


def test_experiment_is_reproducible_and_seed_sensitive():
    a = pbr_experiment(2000, seed=9)
    b = pbr_experiment(2000, seed=9)
    c = pbr_experiment(2000, seed=10)
    assert a.counts == b.counts
    assert a.counts != c.counts


def test_experiment_point_mass_weights_fill_one_row():
    result = pbr_experiment(500, mixture_weights=(0.0, 1.0, 0.0, 0.0), seed=2)
    totals = result.row_totals()
    assert totals == {"00": 0, "0+": 500, "+0": 0, "++": 0}


def test_experiment_replays_trial_by_trial_through_strong_measure(basis):
    """The experiment's cached-weight sampling must stay bit-identical to
    drawing each trial explicitly: one uniform picks the preparation, then
    the same generator drives strong_measure on the chosen state."""
    trials = 200
    result = pbr_experiment(trials, seed=3)
    preps = preparation_states()
    ids = ("00", "0+", "+0", "++")
    cdf = np.cumsum([0.25, 0.25, 0.25, 0.25])
    replay = {p: [0, 0, 0, 0] for p in ids}
    for t in range(trials):
        rng = substream(3, t)
        which = int(np.searchsorted(cdf, rng.random() * float(cdf[-1]), side="right"))
        prep_id = ids[min(which, 3)]
        sample = strong_measure(preps[prep_id], basis.measurement, rng)
        replay[prep_id][sample.outcome_index] += 1
    assert replay == result.counts


def test_experiment_rejects_bad_mixture_weights():
    with pytest.raises(PreconditionError):
        pbr_experiment(10, mixture_weights=(0.5, 0.5, 0.5, -0.5))
    with pytest.raises(PreconditionError):
        pbr_experiment(10, mixture_weights=(0.3, 0.3, 0.3, 0.3))
    with pytest.raises(PreconditionError):
        pbr_experiment(10, mixture_weights=(1.0, 0.0, 0.0))
    with pytest.raises(PreconditionError):
        pbr_experiment(-1)


def test_counts_table_rejects_forbidden_hits(basis):
    rows = {"00": [1, 10, 10, 20], "0+": [10, 0, 10, 20],
            "+0": [10, 10, 0, 20], "++": [10, 10, 20, 0]}
    with pytest.raises(PreconditionError):
        PbrCounts(counts=rows, trials=161, seed=0, forbidden_map=basis.forbidden_map)


def test_counts_table_rejects_negative_and_mismatched_totals(basis):
    good = {"00": [0, 10, 10, 20], "0+": [10, 0, 10, 20],
            "+0": [10, 10, 0, 20], "++": [10, 10, 20, 0]}
    PbrCounts(counts=good, trials=160, seed=0, forbidden_map=basis.forbidden_map)
    with pytest.raises(PreconditionError):
        PbrCounts(counts=good, trials=161, seed=0, forbidden_map=basis.forbidden_map)
    bad = dict(good)
    bad["00"] = [0, -1, 11, 20]
    with pytest.raises(PreconditionError):
        PbrCounts(counts=bad, trials=160, seed=0, forbidden_map=basis.forbidden_map)
    with pytest.raises(PreconditionError):
        PbrCounts(counts={"00": [0, 10, 10, 20]}, trials=40, seed=0,
                  forbidden_map=basis.forbidden_map)


def test_counts_json_payload(basis):
    result = pbr_experiment(100, seed=1)
    payload = result.to_json_dict()
    assert payload["trials"] == 100
    assert payload["seed"] == 1
    assert payload["preparations"] == ["00", "0+", "+0", "++"]
    assert payload["forbidden_outcome"] == {"00": 0, "0+": 1, "+0": 2, "++": 3}
    assert sum(sum(row) for row in payload["counts"].values()) == 100


# ---------------------------------------------------------------------------
# steering


def test_steering_z_outcomes_steer_bob_into_the_z_basis():
    seen = set()
    for seed in range(40):
        sample = epr_steering("z", seed)
        seen.add(sample.alice_outcome)
        target = ket_zero() if sample.alice_outcome == 1.0 else ket_one()
        assert equal_up_to_phase(sample.bob_conditional, target)
        assert sample.bob_marginal_check < 1e-12
    assert seen == {1.0, -1.0}


def test_steering_x_outcomes_steer_bob_into_the_x_basis():
    seen = set()
    for seed in range(40):
        sample = epr_steering("x", seed)
        seen.add(sample.alice_outcome)
        target = ket_minus() if sample.alice_outcome == 1.0 else ket_plus()
        assert equal_up_to_phase(sample.bob_conditional, target)
        assert sample.bob_marginal_check < 1e-12
    assert seen == {1.0, -1.0}


def test_steering_outcomes_are_unbiased():
    ups = sum(epr_steering("z", seed).alice_outcome == 1.0 for seed in range(400))
    # 5 sigma around 200 at sd = 10
    assert 150 <= ups <= 250


def test_steering_rejects_unknown_basis():
    with pytest.raises(PreconditionError):
        epr_steering("y", 0)


# ---------------------------------------------------------------------------
# unitarity preserves overlaps


def test_overlap_preserved_by_haar_unitaries():
    ready = ket_zero()
    for k in range(25):
        u = haar_random_unitary(4, substream(99, k))
        before, after = overlap_preservation_check(u, ket_zero(), ket_plus(), ready)
        assert before == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-12)
        assert abs(before - after) < 1e-10


def test_overlap_check_rejects_non_unitary_matrix():
    with pytest.raises(PreconditionError):
        overlap_preservation_check(0.5 * np.eye(4), ket_zero(), ket_plus(), ket_zero())


def test_overlap_check_rejects_wrong_shape():
    with pytest.raises(PreconditionError):
        overlap_preservation_check(np.eye(2), ket_zero(), ket_plus(), ket_zero())


def test_overlap_check_rejects_mismatched_system_states():
    from ketlab import StateVector

    three = StateVector(3, np.array([1.0, 0.0, 0.0], dtype=complex))
    with pytest.raises(PreconditionError):
        overlap_preservation_check(np.eye(6), ket_zero(), three, ket_zero())
