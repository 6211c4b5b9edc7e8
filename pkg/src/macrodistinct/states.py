"""Pairs of easily distinguishable components and their natural observables.

Three families are provided:

* ``coherent-cat``: ``|alpha>`` and ``|-alpha>`` in a truncated Fock space,
  distinguished by the position quadrature ``x = (a + a^dag)/sqrt(2)``
  (vacuum variance 1/2, so ``<x> = sqrt(2) Re(alpha)``);
* ``fock-superposition``: ``|0>`` and ``|N>``, distinguished by energy (the
  number operator);
* ``ghz``: ``|0...0>`` and ``|1...1>`` on ``n`` qubits, distinguished by
  ``S_z = (1/2) sum_k sigma_z^(k)``.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy.special import gammaln

from . import config
from .distinctness import Observable
from .qcore import SpaceLayout, StateError, StateVector, make_density

FAMILIES = ("coherent-cat", "fock-superposition", "ghz")


def default_cat_cutoff(alpha: float) -> int:
    a = abs(alpha)
    return int(math.ceil(a * a + 6 * a + 10))


def default_fock_cutoff(N: int) -> int:
    # keeps level N out of the top 10% of levels, which loss calculations reject
    return N + 2 + int(math.ceil(0.15 * (N + 1)))


def coherent_amplitudes(alpha: complex, cutoff: int) -> np.ndarray:
    """Untruncated-normalization amplitudes ``e^{-|a|^2/2} a^n / sqrt(n!)`` for ``n < cutoff``."""
    n = np.arange(cutoff)
    if alpha == 0:
        amps = np.zeros(cutoff, complex)
        amps[0] = 1.0
        return amps
    log_mag = -0.5 * abs(alpha) ** 2 + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    return np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))


def coherent_state(alpha: complex, cutoff: int | None = None, label: str = "M") -> StateVector:
    """Truncated coherent state, renormalized after truncation."""
    if cutoff is None:
        cutoff = default_cat_cutoff(abs(alpha))
    amps = coherent_amplitudes(alpha, cutoff)
    deficit = 1.0 - float(np.vdot(amps, amps).real)
    if deficit > config.current().truncation_tail:
        raise StateError(f"cutoff {cutoff} too small for |alpha|={abs(alpha)} (norm deficit {deficit:.2e})")
    return StateVector.from_unnormalized(SpaceLayout.single(cutoff, label), amps)


def fock_state(n: int, cutoff: int, label: str = "M") -> StateVector:
    if not 0 <= n < cutoff:
        raise StateError(f"Fock level {n} outside cutoff {cutoff}")
    amps = np.zeros(cutoff, complex)
    amps[n] = 1.0
    return StateVector(SpaceLayout.single(cutoff, label), amps)


def annihilation(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), 1).astype(complex)


def number_operator(cutoff: int, label: str = "M") -> Observable:
    return Observable(np.diag(np.arange(cutoff, dtype=float)), label)


def x_quadrature(cutoff: int, label: str = "M") -> Observable:
    a = annihilation(cutoff)
    return Observable((a + a.conj().T) / math.sqrt(2.0), label)


def sz_operator(n_qubits: int, label: str = "M") -> Observable:
    idx = np.arange(2 ** n_qubits)
    ones = np.array([bin(i).count("1") for i in idx])
    return Observable(np.diag(0.5 * (n_qubits - 2 * ones)), label)


def basis_state(index: int, dim: int, label: str = "M") -> StateVector:
    amps = np.zeros(dim, complex)
    amps[index] = 1.0
    return StateVector(SpaceLayout.single(dim, label), amps)


@dataclasses.dataclass(frozen=True)
class StateFamilySpec:
    family: str
    alpha: float = 2.0
    N: int = 4
    n: int = 4
    cutoff: int | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown state family {self.family!r}; choose from {FAMILIES}")
        if self.family == "coherent-cat" and not self.alpha > 0:
            raise ValueError("cat amplitude alpha must be positive")
        if self.family == "fock-superposition" and self.N < 1:
            raise ValueError("Fock level N must be at least 1")
        if self.family == "ghz" and self.n < 1:
            raise ValueError("GHZ qubit count must be at least 1")

    def resolved_cutoff(self) -> int | None:
        if self.family == "ghz":
            return None
        if self.cutoff is not None:
            return self.cutoff
        if self.family == "coherent-cat":
            return default_cat_cutoff(self.alpha)
        return default_fock_cutoff(self.N)


def natural_observable(spec: StateFamilySpec) -> Observable:
    if spec.family == "coherent-cat":
        return x_quadrature(spec.resolved_cutoff())
    if spec.family == "fock-superposition":
        return number_operator(spec.resolved_cutoff())
    return sz_operator(spec.n)


def make_components(spec: StateFamilySpec):
    """Return ``(A, D, X)``: the two components and their distinguishing observable."""
    cutoff = spec.resolved_cutoff()
    if spec.family == "coherent-cat":
        A = coherent_state(spec.alpha, cutoff)
        D = coherent_state(-spec.alpha, cutoff)
    elif spec.family == "fock-superposition":
        if cutoff <= spec.N:
            raise StateError(f"cutoff {cutoff} too small for Fock level {spec.N}")
        A = fock_state(0, cutoff)
        D = fock_state(spec.N, cutoff)
    else:
        dim = 2 ** spec.n
        A = basis_state(0, dim)
        D = basis_state(dim - 1, dim)
    return A, D, natural_observable(spec)


def make_entangled(A: StateVector, D: StateVector, qubit_label: str = "Q") -> StateVector:
    """``(|A>|up> + |D>|down>) / sqrt(2)`` on ``M (x) Q``.

    The qubit branches are orthogonal, so the norm does not depend on
    ``<A|D>``.
    """
    if A.layout != D.layout:
        raise StateError("components must live on the same space")
    overlap = A.inner(D)
    if abs(overlap) > 1.0 - 1e-9:
        raise StateError("components coincide up to a phase; the superposition is degenerate")
    up = np.array([1.0, 0.0])
    down = np.array([0.0, 1.0])
    amps = np.kron(A.amplitudes, up) + np.kron(D.amplitudes, down)
    layout = A.layout.concat(SpaceLayout.single(2, qubit_label))
    return StateVector(layout, amps / math.sqrt(2.0))


def make_superposition(A: StateVector, D: StateVector) -> StateVector:
    """Normalized ``|A> + |D>``."""
    overlap = A.inner(D)
    if abs(1.0 + overlap) < 1e-9:
        raise StateError("|A> + |D> vanishes")
    return StateVector.from_unnormalized(A.layout, A.amplitudes + D.amplitudes)


def make_mixture(A: StateVector, D: StateVector):
    """Equal mixture ``(|A><A| + |D><D|) / 2``."""
    m = np.outer(A.amplitudes, A.amplitudes.conj()) + np.outer(D.amplitudes, D.amplitudes.conj())
    return make_density(A.layout, 0.5 * m)
