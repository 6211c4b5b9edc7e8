import math

import numpy as np
import pytest

from macrodistinct import bounds, config
from macrodistinct.decoherence import DephasingSpec
from macrodistinct.loss import LossDilation
from macrodistinct.qcore import (
    ChannelDilation,
    SpaceLayout,
    StateError,
    StateVector,
    helstrom_povm,
    identity_povm,
    random_density,
    random_unitary,
    trace_distance,
)
from macrodistinct.states import StateFamilySpec, make_components, make_superposition

DELTAS = np.geomspace(0.01, 10, 16)


def cnot():
    U = np.zeros((4, 4))
    for m in range(2):
        for e in range(2):
            U[2 * m + (e ^ m), 2 * m + e] = 1
    return U


def qubits():
    lay = SpaceLayout.single(2)
    return StateVector(lay, [1, 0]), StateVector(lay, [0, 1])


def test_report_satisfied_threshold():
    with config.tolerances(slack=1e-8):
        assert bounds.BoundReport.compare("x", "l", 1.0 + 0.9e-8, "r", 1.0).satisfied
        assert not bounds.BoundReport.compare("x", "l", 1.0 + 1.1e-8, "r", 1.0).satisfied
    rec = bounds.BoundReport.compare("x", "l", 0.2, "r", 0.5, delta=1.0).as_record()
    assert rec["slack"] == pytest.approx(0.3) and rec["delta"] == 1.0


def test_u_parameterization_roundtrip():
    for u in (0.0, 0.5, 2.0, 10.0):
        assert bounds.u_for_probability(bounds.probability_for_u(u)) == pytest.approx(u)
    assert bounds.rhs_from_probability(bounds.probability_for_u(2.0)) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        bounds.u_for_probability(1.0)


# which-path


def test_which_path_identity_channel_tight():
    A, D = qubits()
    wp = bounds.which_path_analysis(A, D, ChannelDilation(np.eye(4), 2, 2))
    (rep,) = bounds.which_path_bound(wp.env_A, wp.env_D, wp.negativity)
    assert rep.satisfied and rep.rhs_value == pytest.approx(1.0) and abs(rep.slack) < 1e-12


def test_which_path_full_leak_forces_zero_negativity():
    A, D = qubits()
    wp = bounds.which_path_analysis(A, D, ChannelDilation(cnot(), 2, 2))
    assert wp.negativity == 0.0
    assert trace_distance(wp.env_A, wp.env_D) == pytest.approx(1.0)
    reports = bounds.which_path_bound(wp.env_A, wp.env_D, wp.negativity, helstrom_povm(wp.env_A, wp.env_D))
    assert all(r.satisfied for r in reports) and len(reports) == 2


def test_which_path_random_dilations(rng):
    for _ in range(100):
        dil = ChannelDilation.random(4, 4, rng)
        U = random_unitary(4, rng)
        lay = SpaceLayout.single(4)
        A, D = StateVector(lay, U[:, 0]), StateVector(lay, U[:, 1])
        wp = bounds.which_path_analysis(A, D, dil)
        for rep in bounds.which_path_bound(wp.env_A, wp.env_D, wp.negativity, helstrom_povm(wp.env_A, wp.env_D)):
            assert rep.slack >= -1e-8


def test_chain_identity_povm():
    A, D = qubits()
    wp = bounds.which_path_analysis(A, D, ChannelDilation(np.eye(4), 2, 2))
    F, Dm, reports = bounds.povm_fidelity_chain(identity_povm(wp.env_A.layout), wp.env_A, wp.env_D, wp.negativity)
    assert F == pytest.approx(1.0) and Dm == 0.0
    assert all(r.satisfied for r in reports)


def test_chain_helstrom_matches_operator_distance(rng):
    A, D = qubits()
    wp = bounds.which_path_analysis(A, D, ChannelDilation.random(2, 3, rng))
    _, Dm, reports = bounds.povm_fidelity_chain(helstrom_povm(wp.env_A, wp.env_D), wp.env_A, wp.env_D, wp.negativity)
    assert abs(Dm - trace_distance(wp.env_A, wp.env_D)) < 1e-9
    assert all(r.satisfied for r in reports)


def test_chain_disjoint_supports_give_zero_fidelity_and_ppt():
    A, D = qubits()
    wp = bounds.which_path_analysis(A, D, ChannelDilation(cnot(), 2, 2))
    F, Dm, _ = bounds.povm_fidelity_chain(helstrom_povm(wp.env_A, wp.env_D), wp.env_A, wp.env_D, wp.negativity)
    from macrodistinct.qcore import partial_transpose

    assert F == 0.0 and Dm == pytest.approx(1.0)
    assert np.linalg.eigvalsh(partial_transpose(wp.final_state, "Q"))[0] >= -1e-9


# fragility under dephasing


def test_noise_fragility_tight_at_zero():
    A, D, X = make_components(StateFamilySpec("fock-superposition", N=4))
    rep = bounds.noise_fragility_check(A, D, X, 0.0)
    assert rep.lhs_value == pytest.approx(0.5, abs=1e-12) and rep.rhs_value == 0.5
    assert rep.satisfied and abs(rep.slack) < 0.05


def test_noise_fragility_ghz8_closed_forms():
    A, D, X = make_components(StateFamilySpec("ghz", n=8))
    rep = bounds.noise_fragility_check(A, D, X, 1.0)
    # e^{-32}/2 lies below the zero-eigenvalue threshold, so it reads as 0
    assert abs(rep.lhs_value - 6.33208277454708786156045207797e-15) < config.current().zero_eigenvalue
    # P at sigma = 1 for point masses at +-4
    from scipy.special import erf

    P = 0.5 * (1 + erf(4 / math.sqrt(2)))
    assert rep.rhs_value == pytest.approx(math.sqrt(P * (1 - P)), rel=1e-6)
    assert rep.satisfied and rep.slack > 1e-6


def test_noise_fragility_cat_sweep_and_monotone_lhs():
    A, D, X = make_components(StateFamilySpec("coherent-cat", alpha=2.0))
    reports = [bounds.noise_fragility_check(A, D, X, d) for d in DELTAS]
    assert min(r.slack for r in reports) >= -1e-8
    lhs = [r.lhs_value for r in reports]
    assert np.all(np.diff(lhs) <= 1e-9)


# fragility under loss


def test_loss_fragility_endpoints():
    A, D, _ = make_components(StateFamilySpec("coherent-cat", alpha=2.0))
    one = bounds.loss_fragility_check(A, D, "beamsplitter", 1.0)
    zero = bounds.loss_fragility_check(A, D, "beamsplitter", 0.0)
    assert one.rhs_value == pytest.approx(0.5) and abs(one.slack) < 0.05 and one.satisfied
    assert zero.lhs_value == pytest.approx(0.0, abs=1e-12) and zero.satisfied


def test_loss_fragility_cat_095():
    A, D, _ = make_components(StateFamilySpec("coherent-cat", alpha=2.0))
    rep = bounds.loss_fragility_check(A, D, "beamsplitter", 0.95)
    # (1/2) sqrt(1 - D^2) with D = sqrt(1 - exp(-4 * 0.05 * 4))
    assert rep.rhs_value == pytest.approx(0.5 * math.exp(-0.4), abs=1e-8)
    assert rep.context["environment_distance"] == pytest.approx(math.sqrt(1 - math.exp(-0.8)), abs=1e-8)
    assert rep.slack >= -1e-8


def test_loss_fragility_qubit_swap_sweep():
    A, D, _ = make_components(StateFamilySpec("ghz", n=3))
    reps = [bounds.loss_fragility_check(A, D, "qubit-swap", e) for e in np.linspace(0, 1, 11)]
    assert all(r.satisfied for r in reps)
    assert min(abs(r.slack) for r in reps) < 0.05


# certifiability


def test_certifiability_identity_orthogonal():
    A, D, _ = make_components(StateFamilySpec("fock-superposition", N=2))
    dist, rep = bounds.certifiability_distance(A, D)
    assert dist == pytest.approx(0.5, abs=1e-12) and rep.satisfied


def test_certifiability_full_dephasing_disjoint():
    A, D, X = make_components(StateFamilySpec("fock-superposition", N=4))
    dist, rep = bounds.certifiability_distance(A, D, DephasingSpec(X, 20.0))
    assert dist < 1e-12 and rep.satisfied


def test_certifiability_cat_sweep():
    A, D, X = make_components(StateFamilySpec("coherent-cat", alpha=2.0))
    dists = []
    for d in DELTAS:
        dist, rep = bounds.certifiability_distance(A, D, DephasingSpec(X, d))
        assert rep.slack >= -1e-8
        dists.append(dist)
    assert np.all(np.diff(dists) <= 1e-9)
    assert dists[-1] <= abs(A.inner(D)) + 1e-6


def test_certifiability_other_channels(rng):
    A, D, _ = make_components(StateFamilySpec("ghz", n=2))
    _, rep = bounds.certifiability_distance(A, D, LossDilation("qubit-swap", 0.3))
    assert rep.satisfied
    _, rep = bounds.certifiability_distance(A, D, ChannelDilation.random(4, 3, rng))
    assert rep.satisfied
    with pytest.raises(TypeError):
        bounds.certifiability_distance(A, D, object())


# control precision


def test_control_precision_identity(rng):
    A, D, X = make_components(StateFamilySpec("coherent-cat", alpha=1.0))
    rho = make_superposition(A, D).density()
    f = lambda x: x ** 2
    lhs, rhs, err = bounds.control_precision_equivalence(rho, X, 0.4, np.eye(X.dim), f)
    assert lhs == pytest.approx(rho.expectation(X.function(f)), abs=1e-12)
    assert err < 1e-12


@pytest.mark.parametrize("delta", [0.1, 0.3])
def test_control_precision_nonlinear_kerr(delta):
    spec = StateFamilySpec("coherent-cat", alpha=1.5, cutoff=24)
    A, D, X = make_components(spec)
    U = np.diag(np.exp(0.3j * np.arange(24.0) ** 2))
    lhs, rhs, err = bounds.control_precision_equivalence(make_superposition(A, D).density(), X, delta, U, lambda x: x)
    assert err < 1e-6


def test_control_precision_random(rng):
    from macrodistinct.distinctness import Observable

    worst = 0.0
    for _ in range(20):
        g = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        h = g + g.conj().T
        X = Observable(h * 4 / np.ptp(np.linalg.eigvalsh(h)))
        rho = random_density(SpaceLayout.single(6), rng)
        _, _, err = bounds.control_precision_equivalence(rho, X, 0.7, random_unitary(6, rng), lambda x: x ** 2)
        worst = max(worst, err)
    assert worst < 1e-6


def test_control_precision_rejects_non_unitary():
    A, D, X = make_components(StateFamilySpec("ghz", n=1))
    with pytest.raises(StateError):
        bounds.control_precision_equivalence(A.density(), X, 0.1, np.ones((2, 2)), lambda x: x)
