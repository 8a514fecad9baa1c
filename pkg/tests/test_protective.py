"""Protective measurement: adiabatic-style expectation readout by repeated
weak coupling plus projection back onto the protected state."""

import math

import numpy as np
import pytest

from ketlab import (
    HermitianOperator,
    NotPureError,
    PreconditionError,
    TomographySet,
    WraparoundError,
    default_grid,
    equal_up_to_phase,
    expectation,
    haar_random_state,
    ket_one,
    ket_plus,
    ket_zero,
    pauli_operators,
    protection_leak,
    protective_measure,
    protective_tomography,
    qubit_state,
    random_observable,
    reconstruct_state,
    sigma_x,
    sigma_y,
    sigma_z,
    substream,
)


@pytest.fixture
def tilted_state():
    return qubit_state(math.pi / 6.0, 0.0)


def test_eigenstate_run_is_exact():
    run = protective_measure(ket_zero(), sigma_z(), n=50, g=0.01)
    assert run.inferred_expectation == pytest.approx(1.0, abs=1e-12)
    assert run.survival_probability == pytest.approx(1.0, abs=1e-12)
    assert run.aborted_at_step is None


def test_superposition_readout_matches_expectation(tilted_state):
    run = protective_measure(tilted_state, sigma_z())
    target = expectation(sigma_z(), tilted_state)
    assert run.inferred_expectation == pytest.approx(target, abs=2e-3)
    assert 0.99 <= run.survival_probability < 1.0


def test_survival_deficit_follows_variance_rate(tilted_state):
    # per cycle the protection sheds ~ g^2 Var(A) / (4 width^2) of the norm
    run = protective_measure(tilted_state, sigma_z(), n=400, g=5e-3, width=1.0)
    variance = 1.0 - expectation(sigma_z(), tilted_state) ** 2
    predicted_deficit = 400 * (5e-3) ** 2 * variance / 4.0
    assert 1.0 - run.survival_probability == pytest.approx(predicted_deficit, rel=0.05)


def test_bias_shrinks_quadratically_at_fixed_total_coupling(tilted_state):
    target = expectation(sigma_z(), tilted_state)
    coarse = abs(
        protective_measure(tilted_state, sigma_z(), n=400, g=5e-3).inferred_expectation
        - target
    )
    fine = abs(
        protective_measure(tilted_state, sigma_z(), n=800, g=2.5e-3).inferred_expectation
        - target
    )
    # halving g at fixed n*g should cut the bias by ~4
    assert 3.0 < coarse / fine < 5.0


def test_per_step_log_tracks_survival_and_shift(tilted_state):
    run = protective_measure(tilted_state, sigma_z(), n=20, g=5e-3)
    log = run.per_step_log
    assert len(log) == 20
    assert [s.step for s in log] == list(range(1, 21))
    survivals = [s.survival for s in log]
    assert all(a >= b - 1e-15 for a, b in zip(survivals, survivals[1:]))
    target_shift = 20 * 5e-3 * expectation(sigma_z(), tilted_state)
    assert log[-1].pointer_mean == pytest.approx(target_shift, abs=1e-4)
    assert run.pointer_mean_shift == log[-1].pointer_mean


def test_zero_steps_yields_no_inference(tilted_state):
    run = protective_measure(tilted_state, sigma_z(), n=0)
    assert run.inferred_expectation is None
    assert run.survival_probability == 1.0
    assert run.per_step_log == ()


def test_rejects_bad_mode_and_negative_steps(tilted_state):
    with pytest.raises(PreconditionError):
        protective_measure(tilted_state, sigma_z(), mode="averaged")
    with pytest.raises(PreconditionError):
        protective_measure(tilted_state, sigma_z(), n=-1)


def test_accumulated_shift_wraparound_is_rejected(tilted_state):
    # 400 cycles at g = 0.1 want a shift of 40 on a grid of extent 40
    with pytest.raises(WraparoundError):
        protective_measure(tilted_state, sigma_z(), n=400, g=0.1)


def test_sampled_runs_are_reproducible(tilted_state):
    a = protective_measure(tilted_state, sigma_z(), mode="sampled", seed=11)
    b = protective_measure(tilted_state, sigma_z(), mode="sampled", seed=11)
    assert a.aborted_at_step == b.aborted_at_step
    assert a.survival_probability == b.survival_probability
    assert a.inferred_expectation == b.inferred_expectation


def test_sampled_eigenstate_never_aborts():
    for seed in range(20):
        run = protective_measure(ket_zero(), sigma_z(), n=100, g=0.01,
                                 mode="sampled", seed=seed)
        assert run.aborted_at_step is None
        assert run.inferred_expectation == pytest.approx(1.0, abs=1e-10)


def test_sampled_aborts_appear_at_the_expected_rate():
    """At n=100, g=0.05 on |+>-like input the chain survives with p ~ 0.94,
    so of 60 seeds a handful should abort partway."""
    aborted = []
    for seed in range(60):
        run = protective_measure(qubit_state(math.pi / 4.0, 0.0), sigma_z(),
                                 n=100, g=0.05, mode="sampled", seed=seed)
        if run.aborted_at_step is not None:
            aborted.append(run)
    assert 1 <= len(aborted) <= 20
    for run in aborted:
        assert 1 <= run.aborted_at_step <= 100
        assert len(run.per_step_log) == run.aborted_at_step - 1


def test_run_result_round_trips_to_json(tilted_state):
    run = protective_measure(tilted_state, sigma_z(), n=5)
    payload = run.to_json_dict()
    assert payload["steps"] == 5
    assert payload["mode"] == "deterministic"
    assert len(payload["per_step_log"]) == 5
    assert payload["per_step_log"][0]["step"] == 1


# ---------------------------------------------------------------------------
# protecting the wrong state


def test_leak_survival_is_overlap_squared():
    result = protection_leak(ket_plus(), ket_zero(), sigma_z())
    assert result.survival == pytest.approx(0.5, abs=1e-3)
    assert equal_up_to_phase(result.surviving_state, ket_zero())


def test_leak_survivor_carries_protected_expectations():
    result = protection_leak(ket_plus(), ket_zero(), sigma_z())
    follow_up = protective_measure(result.surviving_state, sigma_z())
    assert follow_up.inferred_expectation == pytest.approx(1.0, abs=2e-3)


def test_leak_between_orthogonal_states_is_empty():
    result = protection_leak(ket_zero(), ket_one(), sigma_x())
    assert result.survival == 0.0
    assert result.surviving_state is None


def test_leak_rejects_dimension_mismatch():
    with pytest.raises(PreconditionError):
        protection_leak(ket_zero(), ket_plus(), HermitianOperator(3, np.eye(3)))


# ---------------------------------------------------------------------------
# tomography


def test_tomography_set_accepts_pauli_triple():
    ops = pauli_operators()
    data = TomographySet(ops, (0.0, 0.0, 1.0))
    assert len(data.operators) == 3


def test_tomography_set_rejects_incomplete_operators():
    with pytest.raises(PreconditionError):
        TomographySet((sigma_z(),), (1.0,))


def test_tomography_set_rejects_length_mismatch():
    with pytest.raises(PreconditionError):
        TomographySet(pauli_operators(), (0.0, 0.0))


def test_reconstruct_state_from_exact_expectations(rng):
    psi = haar_random_state(2, rng)
    data = TomographySet(
        pauli_operators(),
        tuple(expectation(op, psi) for op in pauli_operators()),
    )
    rebuilt = reconstruct_state(data)
    assert abs(np.vdot(rebuilt.amplitudes, psi.amplitudes)) == pytest.approx(1.0, abs=1e-10)


def test_reconstruct_state_rejects_mixed_expectations():
    # all-zero Bloch vector is the maximally mixed state
    with pytest.raises(NotPureError):
        reconstruct_state(TomographySet(pauli_operators(), (0.0, 0.0, 0.0)))


def test_protective_tomography_recovers_the_state():
    psi = qubit_state(0.7, 1.9)
    rebuilt, chain_survival = protective_tomography(psi, pauli_operators())
    fidelity = abs(np.vdot(rebuilt.amplitudes, psi.amplitudes)) ** 2
    assert fidelity >= 1.0 - 1e-4
    assert 0.97 <= chain_survival <= 1.0


def test_protective_tomography_needs_nonzero_coupling():
    with pytest.raises(PreconditionError):
        protective_tomography(ket_plus(), pauli_operators(), n=0)
