"""Gaussian dephasing generated by an observable, and its pointer dilation.

The channel averages ``e^{i lam X} rho e^{-i lam X}`` over a zero-mean normal
``lam`` of standard deviation ``delta``. In the eigenbasis of ``X`` this
multiplies the coherence between eigenvalues ``x_i`` and ``x_j`` by the
Gaussian characteristic function ``exp(-delta^2 (x_i - x_j)^2 / 2)``.

The same channel arises when a one-dimensional pointer is translated by
``X`` and then discarded. :class:`PointerDilation` discretizes that pointer
on a uniform grid so the equivalence, and the identification of the pointer
readout with a coarse-grained ``X`` measurement of noise ``1/delta``, can be
checked numerically.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Union

import numpy as np

from .distinctness import GridError, Observable, OutcomeDistribution
from .loss import LossDilation, apply_loss
from .qcore import (
    ChannelDilation,
    DensityOperator,
    State,
    StateVector,
    as_density,
    conjugate_factor,
    make_density,
    partial_trace,
)
from .states import make_entangled


@dataclasses.dataclass(frozen=True, eq=False)
class DephasingSpec:
    observable: Observable
    delta: float

    def __post_init__(self):
        if not self.delta >= 0:
            raise ValueError(f"dephasing strength must be >= 0, got {self.delta}")


def _in_eigenbasis(rho: DensityOperator, X: Observable, weight: np.ndarray) -> DensityOperator:
    """Multiply ``rho``'s X-eigenbasis entries on factor ``X.label`` by ``weight[i, j]``."""
    V = X.eigenvectors
    layout, m = conjugate_factor(rho.layout, rho.matrix, X.label, V.conj().T)
    n = len(layout.dims)
    k = layout.index(X.label)
    shape = [1] * (2 * n)
    shape[k] = shape[k + n] = X.dim
    t = m.reshape(layout.dims + layout.dims) * weight.reshape(shape)
    layout, back = conjugate_factor(layout, t.reshape(m.shape), X.label, V)
    return make_density(layout, back)


def dephase(state: State, spec: DephasingSpec) -> DensityOperator:
    """Apply the Gaussian dephasing channel generated by ``spec.observable``."""
    rho = as_density(state)
    if spec.delta == 0:
        return rho
    X = spec.observable
    rho.layout.index(X.label)
    x = X.eigenvalue_per_vector()
    factor = np.exp(-0.5 * spec.delta ** 2 * (x[:, None] - x[None, :]) ** 2)
    return _in_eigenbasis(rho, X, factor)


@dataclasses.dataclass(frozen=True, eq=False)
class PointerDilation:
    """Discretized pointer that weakly measures ``observable``.

    ``amplitudes`` holds ``psi(q)`` on the uniform grid ``positions``,
    normalized so that ``sum |psi|^2 * spacing = 1``.
    """

    observable: Observable
    delta: float
    positions: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("a pointer dilation needs delta > 0")
        q = np.asarray(self.positions, dtype=float)
        psi = np.asarray(self.amplitudes, dtype=complex)
        if q.shape != psi.shape or q.ndim != 1:
            raise GridError("positions and amplitudes must be 1-d arrays of equal length")
        h = q[1] - q[0]
        if not np.allclose(np.diff(q), h, rtol=1e-9, atol=0):
            raise GridError("pointer grid must be uniform")
        if h > 1.0 / (8.0 * self.delta) * (1 + 1e-12):
            raise GridError(f"pointer spacing {h:.4g} exceeds 1/(8 delta)")
        X = self.observable
        margin = 6.0 / self.delta
        if q[0] > X.spectrum[0] - margin or q[-1] < X.spectrum[-1] + margin:
            raise GridError("pointer grid must extend 6/delta beyond the spectrum on both sides")
        norm = float(np.sum(np.abs(psi) ** 2) * h)
        if abs(norm - 1.0) > 1e-10:
            raise GridError(f"pointer state not normalized ({norm:.12g})")
        object.__setattr__(self, "positions", q)
        object.__setattr__(self, "amplitudes", psi)

    @classmethod
    def gaussian(cls, observable: Observable, delta: float, spacing: float | None = None, margin: float = 8.0):
        """Pointer with Gaussian momentum weights of standard deviation ``delta``.

        A quadratic momentum phase (chirp) widens the position density to
        standard deviation ``1/delta`` without changing ``|psi~(p)|^2``:
        with ``psi~(p) ~ exp(-p^2/(4 delta^2) + i beta p^2)`` the position
        variance is ``1/(4 delta^2) + 4 beta^2 delta^2``, which equals
        ``1/delta^2`` for ``beta = sqrt(3)/(4 delta^2)``.
        """
        if spacing is None:
            spacing = 1.0 / (8.0 * delta)
        lo = observable.spectrum[0] - margin / delta
        hi = observable.spectrum[-1] + margin / delta
        n = int(math.ceil((hi - lo) / spacing)) + 1
        q = lo + spacing * np.arange(n)
        beta = math.sqrt(3.0) / (4.0 * delta ** 2)
        a = 1.0 / (4.0 * delta ** 2) - 1j * beta
        psi = np.exp(-q ** 2 / (4.0 * a))
        psi /= math.sqrt(np.sum(np.abs(psi) ** 2) * spacing)
        return cls(observable, delta, q, psi)

    @property
    def spacing(self) -> float:
        return float(self.positions[1] - self.positions[0])

    def _momenta(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.positions.size, self.spacing)

    def shifted(self, x: np.ndarray) -> np.ndarray:
        """Columns ``psi(q - x_i)``: the pointer translated by each value in ``x``."""
        p = self._momenta()
        spec = np.fft.fft(self.amplitudes)
        return np.fft.ifft(spec[:, None] * np.exp(-1j * np.outer(p, x)), axis=0)

    def momentum_density(self):
        """``(p, |psi~(p)|^2)`` sorted by momentum."""
        p = self._momenta()
        h = self.spacing
        phase = np.exp(-1j * p * self.positions[0])
        tilde = h / math.sqrt(2 * math.pi) * np.fft.fft(self.amplitudes) * phase
        order = np.argsort(p)
        return p[order], np.abs(tilde[order]) ** 2


def pointer_dilation_apply(state: State, dilation: PointerDilation):
    """Couple ``state`` to the pointer, then trace the pointer out or read its position.

    Returns ``(rho_out, readout)``. The system output follows from the Gram
    matrix of the translated pointer states; the readout is the density of
    pointer positions on the dilation grid.
    """
    rho = as_density(state)
    X = dilation.observable
    x = X.eigenvalue_per_vector()
    phi = dilation.shifted(x)
    h = dilation.spacing
    gram = (phi.T @ phi.conj()) * h  # gram[i, j] = <phi_j | phi_i>
    rho_out = _in_eigenbasis(rho, X, gram)
    sub = rho if len(rho.layout.labels) == 1 else partial_trace(rho, [X.label])
    V = X.eigenvectors
    pops = np.real(np.sum(V.conj() * (sub.matrix @ V), axis=0))
    density = np.abs(phi) ** 2 @ np.clip(pops, 0.0, None)
    readout = OutcomeDistribution("gridded", dilation.positions, density)
    return rho_out, readout


Channel = Union[DephasingSpec, PointerDilation, LossDilation, ChannelDilation]


def apply_channel(state: State, channel: Channel) -> DensityOperator:
    """Apply any supported channel to its designated factor, discarding the environment."""
    if isinstance(channel, DephasingSpec):
        return dephase(state, channel)
    if isinstance(channel, PointerDilation):
        return pointer_dilation_apply(state, channel)[0]
    if isinstance(channel, LossDilation):
        return apply_loss(state, channel, keep_joint=False).system
    if isinstance(channel, ChannelDilation):
        return channel.system_output(state)
    raise TypeError(f"unsupported channel type {type(channel).__name__}")


def channel_on_entangled(A: StateVector, D: StateVector, channel: Channel) -> DensityOperator:
    """Final state on ``M (x) Q`` after ``channel`` acts on ``M`` of ``|A>|up> + |D>|down>``."""
    return apply_channel(make_entangled(A, D), channel)
