"""Dense linear algebra on composite finite-dimensional spaces.

States carry a :class:`SpaceLayout` naming each tensor factor, so partial
traces, partial transposes and local operators are addressed by label
("M", "Q", "E", ...) rather than by axis number.

The Hermitian eigendecomposition is the only spectral primitive used here:
trace norms of Hermitian differences, matrix square roots of PSD operators
and fidelities are all derived from ``numpy.linalg.eigh``.
"""

from __future__ import annotations

import dataclasses
from typing import Iterable, Sequence, Union

import numpy as np
from scipy.stats import unitary_group

from . import config


class LayoutError(ValueError):
    """Raised for unknown, colliding or mismatched subsystem labels."""


class StateError(ValueError):
    """Raised when an array does not describe a valid state or POVM."""


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=complex)
    arr.flags.writeable = False
    return arr


@dataclasses.dataclass(frozen=True)
class SpaceLayout:
    """Ordered tensor factors of a Hilbert space."""

    dims: tuple
    labels: tuple

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        labels = tuple(str(s) for s in self.labels)
        if len(dims) != len(labels):
            raise LayoutError(f"{len(dims)} dims but {len(labels)} labels")
        if any(d < 1 for d in dims):
            raise LayoutError(f"subsystem dimensions must be positive: {dims}")
        if len(set(labels)) != len(labels):
            raise LayoutError(f"duplicate subsystem labels: {labels}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def single(cls, dim: int, label: str = "M") -> "SpaceLayout":
        return cls((dim,), (label,))

    @property
    def total(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64))

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LayoutError(f"unknown subsystem {label!r}; have {self.labels}") from None

    def dim(self, label: str) -> int:
        return self.dims[self.index(label)]

    def concat(self, other: "SpaceLayout") -> "SpaceLayout":
        clash = set(self.labels) & set(other.labels)
        if clash:
            raise LayoutError(f"label collision: {sorted(clash)}")
        return SpaceLayout(self.dims + other.dims, self.labels + other.labels)

    def replace(self, label: str, labels: Sequence[str], dims: Sequence[int]) -> "SpaceLayout":
        """Substitute one factor by a block of factors, in place."""
        k = self.index(label)
        return SpaceLayout(
            self.dims[:k] + tuple(dims) + self.dims[k + 1:],
            self.labels[:k] + tuple(labels) + self.labels[k + 1:],
        )

    def subset(self, keep: Iterable[str]) -> "SpaceLayout":
        keep = set(keep)
        idx = [i for i, s in enumerate(self.labels) if s in keep]
        return SpaceLayout([self.dims[i] for i in idx], [self.labels[i] for i in idx])


def _check_dim(layout: SpaceLayout) -> None:
    cap = config.current().max_dim
    if layout.total > cap:
        raise LayoutError(f"total dimension {layout.total} exceeds configured cap {cap}")


@dataclasses.dataclass(frozen=True)
class StateVector:
    layout: SpaceLayout
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(np.ravel(self.amplitudes))
        _check_dim(self.layout)
        if amps.shape != (self.layout.total,):
            raise StateError(f"expected {self.layout.total} amplitudes, got {amps.shape}")
        err = abs(np.vdot(amps, amps).real - 1.0)
        if err > config.current().norm:
            raise StateError(f"state vector not normalized (|norm^2 - 1| = {err:.3e})")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_unnormalized(cls, layout: SpaceLayout, amplitudes) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex).ravel()
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise StateError("zero vector cannot be normalized")
        return cls(layout, amps / norm)

    def density(self) -> "DensityOperator":
        a = self.amplitudes
        return DensityOperator(self.layout, np.outer(a, a.conj()))

    def inner(self, other: "StateVector") -> complex:
        """Return <self|other>."""
        if self.layout.dims != other.layout.dims:
            raise LayoutError("inner product between different layouts")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def relabel(self, layout: SpaceLayout) -> "StateVector":
        if layout.total != self.layout.total:
            raise LayoutError("relabel must preserve the total dimension")
        return StateVector(layout, self.amplitudes)


@dataclasses.dataclass(frozen=True)
class DensityOperator:
    layout: SpaceLayout
    matrix: np.ndarray

    def __post_init__(self):
        m = _frozen(self.matrix)
        _check_dim(self.layout)
        d = self.layout.total
        if m.shape != (d, d):
            raise StateError(f"expected a {d}x{d} matrix, got {m.shape}")
        tol = config.current()
        herm = np.max(np.abs(m - m.conj().T)) if d else 0.0
        if herm > tol.hermitian:
            raise StateError(f"density matrix not Hermitian (max deviation {herm:.3e})")
        tr = np.trace(m)
        if abs(tr - 1.0) > tol.trace:
            raise StateError(f"density matrix trace is {tr.real:.15g}, not 1")
        lam_min = np.linalg.eigvalsh(m)[0]
        if lam_min < -tol.psd:
            raise StateError(f"density matrix not PSD (min eigenvalue {lam_min:.3e})")
        object.__setattr__(self, "matrix", m)

    def density(self) -> "DensityOperator":
        return self

    def relabel(self, layout: SpaceLayout) -> "DensityOperator":
        if layout.total != self.layout.total:
            raise LayoutError("relabel must preserve the total dimension")
        return DensityOperator(layout, self.matrix)

    def expectation(self, operator: np.ndarray) -> float:
        return float(np.real(np.trace(operator @ self.matrix)))


State = Union[StateVector, DensityOperator]


def as_density(state: State) -> DensityOperator:
    if isinstance(state, (StateVector, DensityOperator)):
        return state.density()
    raise TypeError(f"expected StateVector or DensityOperator, got {type(state).__name__}")


def hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def make_density(layout: SpaceLayout, matrix: np.ndarray) -> DensityOperator:
    """Build a density operator from a numerically computed matrix.

    Rounding noise in the anti-Hermitian part is removed first; all other
    invariants are still checked.
    """
    return DensityOperator(layout, hermitize(np.asarray(matrix, dtype=complex)))


# ---------------------------------------------------------------------------
# local operations on tensor factors


def _apply_on_axis(tensor: np.ndarray, op: np.ndarray, axis: int) -> np.ndarray:
    out = np.tensordot(op, tensor, axes=([1], [axis]))
    return np.moveaxis(out, 0, axis)


def conjugate_factor(layout: SpaceLayout, matrix: np.ndarray, label: str, op: np.ndarray, labels=None, dims=None):
    """Raw ``op rho op^dag`` on one factor of a square matrix laid out as ``layout``."""
    k = layout.index(label)
    op = np.asarray(op, dtype=complex)
    if op.shape[1] != layout.dims[k]:
        raise LayoutError(f"operator acts on dim {op.shape[1]}, factor {label!r} has {layout.dims[k]}")
    if labels is None:
        labels, dims = (label,), (op.shape[0],)
    if int(np.prod(dims)) != op.shape[0]:
        raise LayoutError("replacement dims do not match the operator output dimension")
    new_layout = layout.replace(label, labels, dims)
    n = len(layout.dims)
    t = np.asarray(matrix).reshape(layout.dims + layout.dims)
    t = _apply_on_axis(t, op, k)
    t = _apply_on_axis(t, op.conj(), k + n)
    d = new_layout.total
    return new_layout, t.reshape(d, d)


def apply_operator(state: State, label: str, op: np.ndarray, labels=None, dims=None):
    """Apply ``op`` to one factor: ``|psi> -> op|psi>`` or ``rho -> op rho op^dag``.

    ``op`` may change the factor's dimension, in which case the factor is
    replaced by ``labels``/``dims`` (default: same label, new dimension).
    Returns ``(layout, array)`` unwrapped; callers construct the state once
    the physics guarantees validity.
    """
    if isinstance(state, StateVector):
        layout = state.layout
        k = layout.index(label)
        op = np.asarray(op, dtype=complex)
        if op.shape[1] != layout.dims[k]:
            raise LayoutError(f"operator acts on dim {op.shape[1]}, factor {label!r} has {layout.dims[k]}")
        if labels is None:
            labels, dims = (label,), (op.shape[0],)
        new_layout = layout.replace(label, labels, dims)
        t = _apply_on_axis(state.amplitudes.reshape(layout.dims), op, k)
        return new_layout, t.reshape(-1)
    return conjugate_factor(state.layout, state.matrix, label, op, labels, dims)


def apply_kraus(state: State, label: str, kraus: Sequence[np.ndarray], labels=None, dims=None) -> DensityOperator:
    """Apply the channel ``rho -> sum_k K rho K^dag`` on one factor."""
    rho = as_density(state)
    total = None
    layout = None
    for K in kraus:
        layout, m = apply_operator(rho, label, K, labels, dims)
        total = m if total is None else total + m
    return make_density(layout, total)


def tensor(a: State, b: State) -> State:
    """Kronecker product with concatenated layout."""
    layout = a.layout.concat(b.layout)
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return StateVector(layout, np.kron(a.amplitudes, b.amplitudes))
    return make_density(layout, np.kron(as_density(a).matrix, as_density(b).matrix))


def _keep_indices(layout: SpaceLayout, keep) -> list:
    if isinstance(keep, str):
        keep = [keep]
    keep = list(keep)
    for label in keep:
        layout.index(label)
    return [i for i, s in enumerate(layout.labels) if s in keep]


def partial_trace(state: State, keep) -> DensityOperator:
    """Reduced state on the factors named in ``keep`` (layout order preserved)."""
    rho = as_density(state)
    layout = rho.layout
    idx = _keep_indices(layout, keep)
    n = len(layout.dims)
    t = rho.matrix.reshape(layout.dims + layout.dims)
    left = list(range(n))
    right = [i + n if i in idx else i for i in range(n)]
    out = idx + [i + n for i in idx]
    reduced = np.einsum(t, left + right, out)
    sub = SpaceLayout([layout.dims[i] for i in idx], [layout.labels[i] for i in idx])
    return make_density(sub, reduced.reshape(sub.total, sub.total))


def partial_transpose(state: State, on: str) -> np.ndarray:
    """Partial transpose on factor ``on``; returns the raw Hermitian matrix."""
    rho = as_density(state)
    layout = rho.layout
    k = layout.index(on)
    n = len(layout.dims)
    t = rho.matrix.reshape(layout.dims + layout.dims)
    t = np.swapaxes(t, k, k + n)
    d = layout.total
    return np.ascontiguousarray(t.reshape(d, d))


def negativity(state: State, bipartition: str) -> float:
    """Absolute sum of the negative eigenvalues of the partial transpose."""
    lam = np.linalg.eigvalsh(hermitize(partial_transpose(state, bipartition)))
    zero = config.current().zero_eigenvalue
    return max(0.0, float(-lam[lam < -zero].sum()))


def trace_norm_hermitian(h: np.ndarray) -> float:
    return float(np.abs(np.linalg.eigvalsh(hermitize(h))).sum())


def _same_layout(a: DensityOperator, b: DensityOperator) -> None:
    if a.layout != b.layout:
        raise LayoutError(f"layout mismatch: {a.layout} vs {b.layout}")


def trace_distance(rho: State, sigma: State) -> float:
    """Half the trace norm of ``rho - sigma``."""
    rho, sigma = as_density(rho), as_density(sigma)
    _same_layout(rho, sigma)
    return min(1.0, 0.5 * trace_norm_hermitian(rho.matrix - sigma.matrix))


def sqrt_psd(m: np.ndarray) -> np.ndarray:
    lam, vec = np.linalg.eigh(hermitize(m))
    lam = np.sqrt(np.clip(lam, 0.0, None))
    return (vec * lam) @ vec.conj().T


def fidelity(rho: State, sigma: State) -> float:
    """Uhlmann (root) fidelity ``|| sqrt(rho) sqrt(sigma) ||_1``."""
    rho, sigma = as_density(rho), as_density(sigma)
    _same_layout(rho, sigma)
    s = sqrt_psd(rho.matrix)
    lam = np.linalg.eigvalsh(hermitize(s @ sigma.matrix @ s))
    return float(min(1.0, np.sqrt(np.clip(lam, 0.0, None)).sum()))


def classical_fidelity(p, q) -> float:
    """Bhattacharyya coefficient ``sum_m sqrt(p_m q_m)``."""
    p = np.asarray(getattr(p, "weights", p), dtype=float)
    q = np.asarray(getattr(q, "weights", q), dtype=float)
    if p.shape != q.shape:
        raise LayoutError(f"outcome sets differ: {p.shape} vs {q.shape}")
    return float(np.sqrt(np.clip(p, 0.0, None) * np.clip(q, 0.0, None)).sum())


@dataclasses.dataclass(frozen=True)
class PovmElementSet:
    """POVM effects acting on the space described by ``layout``."""

    layout: SpaceLayout
    elements: tuple

    def __post_init__(self):
        d = self.layout.total
        elements = tuple(_frozen(e) for e in self.elements)
        if not elements:
            raise StateError("a POVM needs at least one element")
        tol = config.current().povm
        for e in elements:
            if e.shape != (d, d):
                raise StateError(f"POVM element shape {e.shape}, expected {(d, d)}")
            if np.max(np.abs(e - e.conj().T)) > tol:
                raise StateError("POVM element not Hermitian")
            if np.linalg.eigvalsh(hermitize(e))[0] < -tol:
                raise StateError("POVM element not PSD")
        completeness = np.max(np.abs(sum(elements) - np.eye(d)))
        if completeness > tol:
            raise StateError(f"POVM elements do not sum to identity (deviation {completeness:.3e})")
        object.__setattr__(self, "elements", elements)

    def __len__(self):
        return len(self.elements)

    def probabilities(self, state: State) -> np.ndarray:
        rho = as_density(state)
        if rho.layout.total != self.layout.total:
            raise LayoutError("POVM and state act on different spaces")
        p = np.array([np.real(np.trace(e @ rho.matrix)) for e in self.elements])
        return np.clip(p, 0.0, None)


def helstrom_povm(rho: State, sigma: State) -> PovmElementSet:
    """Projectors onto the nonnegative and negative eigenspaces of ``rho - sigma``."""
    rho, sigma = as_density(rho), as_density(sigma)
    _same_layout(rho, sigma)
    lam, vec = np.linalg.eigh(hermitize(rho.matrix - sigma.matrix))
    pos = vec[:, lam >= 0]
    neg = vec[:, lam < 0]
    return PovmElementSet(rho.layout, (pos @ pos.conj().T, neg @ neg.conj().T))


def identity_povm(layout: SpaceLayout) -> PovmElementSet:
    return PovmElementSet(layout, (np.eye(layout.total),))


# ---------------------------------------------------------------------------
# random objects


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary."""
    if dim == 1:
        return np.exp(2j * np.pi * rng.random()) * np.ones((1, 1))
    return unitary_group.rvs(dim, random_state=rng)


def random_state_vector(layout: SpaceLayout, rng: np.random.Generator) -> StateVector:
    z = rng.normal(size=layout.total) + 1j * rng.normal(size=layout.total)
    return StateVector.from_unnormalized(layout, z)


def random_density(layout: SpaceLayout, rng: np.random.Generator, rank: int | None = None) -> DensityOperator:
    """Ginibre-distributed mixed state of the given rank (full rank by default)."""
    d = layout.total
    k = d if rank is None else rank
    g = rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k))
    m = g @ g.conj().T
    return make_density(layout, m / np.trace(m).real)


def random_rank1_povm(layout: SpaceLayout, n_outcomes: int, rng: np.random.Generator) -> PovmElementSet:
    """Rank-one POVM from ``n_outcomes >= dim`` random vectors, whitened to sum to identity."""
    d = layout.total
    if n_outcomes < d:
        raise ValueError("a rank-one POVM needs at least as many outcomes as the dimension")
    v = rng.normal(size=(d, n_outcomes)) + 1j * rng.normal(size=(d, n_outcomes))
    g = v @ v.conj().T
    lam, w = np.linalg.eigh(g)
    w_inv_sqrt = (w / np.sqrt(lam)) @ w.conj().T
    u = w_inv_sqrt @ v
    return PovmElementSet(layout, tuple(np.outer(u[:, m], u[:, m].conj()) for m in range(n_outcomes)))


# ---------------------------------------------------------------------------
# system-environment dilations


@dataclasses.dataclass(frozen=True)
class ChannelDilation:
    """Channel on factor ``system_label`` given by a joint unitary and an environment start state.

    ``unitary`` acts on system (x) environment in that order; the environment
    starts in ``env_state`` (basis vector 0 unless given).
    """

    unitary: np.ndarray
    system_dim: int
    env_dim: int
    env_state: np.ndarray | None = None
    system_label: str = "M"
    env_label: str = "E"

    def __post_init__(self):
        u = _frozen(self.unitary)
        d = self.system_dim * self.env_dim
        if u.shape != (d, d):
            raise StateError(f"dilation unitary has shape {u.shape}, expected {(d, d)}")
        if np.max(np.abs(u.conj().T @ u - np.eye(d))) > config.current().unitary:
            raise StateError("dilation operator is not unitary")
        object.__setattr__(self, "unitary", u)
        env = np.zeros(self.env_dim, complex) if self.env_state is None else np.asarray(self.env_state, complex)
        if self.env_state is None:
            env[0] = 1.0
        object.__setattr__(self, "env_state", _frozen(env))

    @classmethod
    def random(cls, system_dim: int, env_dim: int, rng: np.random.Generator, **kw) -> "ChannelDilation":
        return cls(random_unitary(system_dim * env_dim, rng), system_dim, env_dim, **kw)

    @property
    def isometry(self) -> np.ndarray:
        """``U (1 (x) |0_E>)`` as a ``(dS*dE, dS)`` matrix."""
        dS, dE = self.system_dim, self.env_dim
        return self.unitary.reshape(dS * dE, dS, dE) @ self.env_state

    def apply(self, state: State) -> State:
        """Joint system-environment state; the environment factor follows the system factor."""
        layout, out = apply_operator(
            state, self.system_label, self.isometry,
            (self.system_label, self.env_label), (self.system_dim, self.env_dim),
        )
        if isinstance(state, StateVector):
            return StateVector.from_unnormalized(layout, out)
        return make_density(layout, out)

    def system_output(self, state: State) -> DensityOperator:
        joint = self.apply(state)
        return partial_trace(joint, [s for s in joint.layout.labels if s != self.env_label])

    def environment_output(self, state: State) -> DensityOperator:
        return partial_trace(self.apply(state), [self.env_label])
