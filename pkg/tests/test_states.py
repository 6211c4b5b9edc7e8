import math

import numpy as np
import pytest

from macrodistinct.distinctness import ideal_distribution
from macrodistinct.qcore import SpaceLayout, StateError, StateVector, negativity
from macrodistinct.states import (
    StateFamilySpec,
    coherent_state,
    default_cat_cutoff,
    make_components,
    make_entangled,
    make_mixture,
    make_superposition,
    number_operator,
)


def test_fock_components_orthogonal():
    A, D, X = make_components(StateFamilySpec("fock-superposition", N=4))
    assert A.inner(D) == 0
    assert np.argmax(np.abs(D.amplitudes)) == 4
    np.testing.assert_allclose(X.spectrum, np.arange(A.layout.total))


def test_ghz_components():
    A, D, X = make_components(StateFamilySpec("ghz", n=3))
    assert A.amplitudes[0] == 1 and D.amplitudes[7] == 1
    assert X.spectrum[0] == -1.5 and X.spectrum[-1] == 1.5


@pytest.mark.parametrize("n", [1, 3, 6])
def test_ghz_statistics_are_point_masses(n):
    A, D, X = make_components(StateFamilySpec("ghz", n=n))
    pa, pd = ideal_distribution(A, X), ideal_distribution(D, X)
    assert pa.weights[-1] == 1 and pa.support[-1] == n / 2
    assert pd.weights[0] == 1 and pd.support[0] == -n / 2


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0, 3.0])
def test_cat_overlap_closed_form(alpha):
    A, D, _ = make_components(StateFamilySpec("coherent-cat", alpha=alpha))
    assert abs(abs(A.inner(D)) - math.exp(-2 * alpha ** 2)) < 1e-8


def test_cat_overlap_alpha2_frozen():
    A, D, _ = make_components(StateFamilySpec("coherent-cat", alpha=2.0))
    assert abs(abs(A.inner(D)) - 0.000335462627902511838821389125780735) < 1e-9


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0, 3.0])
def test_default_cutoff_norm_deficit(alpha):
    from macrodistinct.states import coherent_amplitudes

    amps = coherent_amplitudes(alpha, default_cat_cutoff(alpha))
    assert 1 - np.vdot(amps, amps).real < 1e-8


def test_coherent_number_statistics_poisson():
    a = coherent_state(2.0)
    n = a.layout.total
    poisson = np.array([math.exp(-4) * 4 ** k / math.factorial(k) for k in range(n)])
    np.testing.assert_allclose(ideal_distribution(a, number_operator(n)).weights, poisson, atol=1e-8)


def test_cutoff_too_small():
    with pytest.raises(StateError):
        coherent_state(3.0, cutoff=10)
    with pytest.raises(StateError):
        make_components(StateFamilySpec("fock-superposition", N=5, cutoff=5))


def test_family_spec_validation():
    with pytest.raises(ValueError):
        StateFamilySpec("squeezed")
    with pytest.raises(ValueError):
        StateFamilySpec("coherent-cat", alpha=-1)
    with pytest.raises(ValueError):
        StateFamilySpec("ghz", n=0)


def test_entangled_orthogonal_pair():
    A, D, _ = make_components(StateFamilySpec("fock-superposition", N=3))
    z = make_entangled(A, D)
    assert abs(np.linalg.norm(z.amplitudes) - 1) < 1e-14
    assert z.layout.labels == ("M", "Q")
    assert abs(negativity(z, "Q") - 0.5) < 1e-12


def test_entangled_norm_independent_of_overlap():
    # the qubit branches are orthogonal, so the norm factor is sqrt(2) for any <A|D>
    A, D, _ = make_components(StateFamilySpec("coherent-cat", alpha=1.0))
    z = make_entangled(A, D)
    up = z.amplitudes.reshape(-1, 2)[:, 0]
    np.testing.assert_allclose(up * math.sqrt(2), A.amplitudes, atol=1e-15)


def test_entangled_negativity_with_overlap():
    A, D, _ = make_components(StateFamilySpec("coherent-cat", alpha=1.0))
    c = math.exp(-2.0)
    assert abs(negativity(make_entangled(A, D), "Q") - 0.5 * math.sqrt(1 - c * c)) < 1e-9


def test_entangled_rejects_phase_copy():
    A = coherent_state(1.0)
    D = StateVector(A.layout, np.exp(0.7j) * A.amplitudes)
    with pytest.raises(StateError):
        make_entangled(A, D)


def test_superposition_and_mixture():
    lay = SpaceLayout.single(2)
    A, D = StateVector(lay, [1, 0]), StateVector(lay, [0, 1])
    np.testing.assert_allclose(make_superposition(A, D).amplitudes, np.ones(2) / math.sqrt(2))
    np.testing.assert_allclose(make_mixture(A, D).matrix, np.eye(2) / 2)
    with pytest.raises(StateError):
        make_superposition(A, StateVector(lay, [-1, 0]))
