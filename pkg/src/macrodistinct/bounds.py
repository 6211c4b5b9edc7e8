"""Inequalities linking surviving entanglement to environmental which-path information.

Every check returns :class:`BoundReport` objects comparing a left-hand side
that should not exceed a right-hand side. For the entangled state
``(|A>|up> + |D>|down>)/sqrt(2)`` passed through a channel on ``M``:

* which-path: ``2 N <= F(p^A, p^D) <= sqrt(1 - D(p^A, p^D)^2)`` for any
  environment POVM, and ``2 N <= sqrt(1 - D(rho_E^A, rho_E^D)^2)``;
* fragility under dephasing: ``N <= sqrt(P (1 - P))`` with ``P`` the
  guessing probability of a coarse-grained ``X`` measurement at
  ``sigma = 1/delta``;
* fragility under loss: the same with ``P`` the loss guessing probability
  at efficiency ``1 - eta``;
* certifiability: the distance between the channel outputs of the
  superposition and of the mixture obeys the same right-hand side.

``N`` is the negativity across the ``M|Q`` cut.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable, NamedTuple, Optional

import numpy as np
from numpy.polynomial.hermite import hermgauss

from . import config
from .decoherence import Channel, DephasingSpec, PointerDilation, apply_channel, dephase
from .distinctness import Observable, noisy_guessing_probability
from .loss import LossDilation, apply_loss, loss_guessing_probability
from .qcore import (
    ChannelDilation,
    DensityOperator,
    PovmElementSet,
    StateError,
    StateVector,
    classical_fidelity,
    conjugate_factor,
    make_density,
    negativity,
    partial_trace,
    trace_distance,
)
from .states import make_entangled, make_mixture, make_superposition


@dataclasses.dataclass(frozen=True)
class BoundReport:
    """One inequality ``lhs <= rhs``; ``slack = rhs - lhs``."""

    bound: str
    lhs_name: str
    lhs_value: float
    rhs_name: str
    rhs_value: float
    slack: float
    satisfied: bool
    context: dict = dataclasses.field(default_factory=dict)

    @classmethod
    def compare(cls, bound: str, lhs_name: str, lhs: float, rhs_name: str, rhs: float, **context):
        slack = float(rhs) - float(lhs)
        ok = bool(slack >= -config.current().slack)
        return cls(bound, lhs_name, float(lhs), rhs_name, float(rhs), slack, ok, dict(context))

    def as_record(self) -> dict:
        rec = dict(self.context)
        rec.update(
            bound=self.bound,
            lhs_name=self.lhs_name,
            lhs=self.lhs_value,
            rhs_name=self.rhs_name,
            rhs=self.rhs_value,
            slack=self.slack,
            satisfied=self.satisfied,
        )
        return rec


def rhs_from_probability(P: float) -> float:
    """``sqrt(P (1 - P))``, i.e. half of ``sqrt(1 - D^2)`` for ``P = (1 + D)/2``."""
    return math.sqrt(max(P * (1.0 - P), 0.0))


def rhs_from_distance(D: float) -> float:
    return 0.5 * math.sqrt(max(1.0 - D * D, 0.0))


def probability_for_u(u: float) -> float:
    """Guessing probability ``u^2 / (u^2 + 4)`` associated with a parameter ``u >= 0``."""
    return u * u / (u * u + 4.0)


def u_for_probability(P: float) -> float:
    """Inverse of :func:`probability_for_u` on ``[0, 1)``."""
    if not 0.0 <= P < 1.0:
        raise ValueError("u is finite only for P in [0, 1)")
    return 2.0 * math.sqrt(P / (1.0 - P))


# ---------------------------------------------------------------------------
# which-path chain


def which_path_bound(
    rho_E_A: DensityOperator,
    rho_E_D: DensityOperator,
    negativity_value: float,
    povm: Optional[PovmElementSet] = None,
) -> list:
    """``2N <= sqrt(1 - D_E^2)``; with a POVM also ``2N <= sqrt(1 - D_povm^2)``."""
    two_n = 2.0 * negativity_value
    d_op = trace_distance(rho_E_A, rho_E_D)
    reports = [
        BoundReport.compare(
            "which-path", "2N", two_n, "sqrt(1-D_E^2)", math.sqrt(max(1.0 - d_op ** 2, 0.0)),
            environment_distance=d_op,
        )
    ]
    if povm is not None:
        d_cl = 0.5 * float(np.abs(povm.probabilities(rho_E_A) - povm.probabilities(rho_E_D)).sum())
        reports.append(
            BoundReport.compare(
                "which-path-povm", "2N", two_n, "sqrt(1-D_m^2)", math.sqrt(max(1.0 - d_cl ** 2, 0.0)),
                povm_distance=d_cl, povm_size=len(povm),
            )
        )
    return reports


def _chain_reports(F: float, D: float, negativity_value: float, **context) -> list:
    return [
        BoundReport.compare("chain-negativity-fidelity", "2N", 2.0 * negativity_value, "F_m", F, **context),
        BoundReport.compare(
            "chain-fidelity-distance", "F_m", F, "sqrt(1-D_m^2)", math.sqrt(max(1.0 - D * D, 0.0)), **context
        ),
    ]


def povm_fidelity_chain(
    povm: PovmElementSet,
    rho_E_A: DensityOperator,
    rho_E_D: DensityOperator,
    negativity_value: float,
):
    """Classical fidelity and distance of the POVM statistics, with the chain ``2N <= F <= sqrt(1-D^2)``.

    Returns ``(F, D, reports)``.
    """
    pA = povm.probabilities(rho_E_A)
    pD = povm.probabilities(rho_E_D)
    F = classical_fidelity(pA, pD)
    D = 0.5 * float(np.abs(pA - pD).sum())
    return F, D, _chain_reports(F, D, negativity_value, povm_size=len(povm))


class WhichPathAnalysis(NamedTuple):
    final_state: DensityOperator
    negativity: float
    env_A: DensityOperator
    env_D: DensityOperator


def which_path_analysis(A: StateVector, D: StateVector, dilation: ChannelDilation) -> WhichPathAnalysis:
    """Final ``M (x) Q`` state after ``dilation`` and the environment states it leaves for ``A`` and ``D``."""
    final = dilation.system_output(make_entangled(A, D))
    return WhichPathAnalysis(
        final,
        negativity(final, "Q"),
        dilation.environment_output(A),
        dilation.environment_output(D),
    )


# ---------------------------------------------------------------------------
# fragility


def _noise_probability(A, D, X: Observable, delta: float) -> float:
    sigma = math.inf if delta == 0 else 1.0 / delta
    return noisy_guessing_probability(A, D, X, sigma)


def noise_fragility_check(A: StateVector, D: StateVector, X: Observable, delta: float) -> BoundReport:
    """Negativity after dephasing of strength ``delta`` against the ``sigma = 1/delta`` guessing probability."""
    final = dephase(make_entangled(A, D), DephasingSpec(X, delta))
    lhs = negativity(final, "Q")
    P = _noise_probability(A, D, X, delta)
    sigma = math.inf if delta == 0 else 1.0 / delta
    return BoundReport.compare(
        "noise-fragility", "negativity", lhs, "sqrt(P(1-P))", rhs_from_probability(P),
        delta=float(delta), sigma=sigma, guessing_probability=P,
    )


def loss_fragility_check(A: StateVector, D: StateVector, family: str, eta: float) -> BoundReport:
    """Negativity after loss ``eta`` against the guessing probability at efficiency ``1 - eta``.

    The context also carries the trace distance between the environment
    outputs, which by the symmetry of the dilation equals the system-side
    distance at ``1 - eta``.
    """
    dil = LossDilation(family, eta)
    final = apply_loss(make_entangled(A, D), dil, keep_joint=False).system
    lhs = negativity(final, "Q")
    P = loss_guessing_probability(A, D, family, 1.0 - eta)
    env_A = apply_loss(A, dil, keep_joint=False).environment
    env_D = apply_loss(D, dil, keep_joint=False).environment
    return BoundReport.compare(
        "loss-fragility", "negativity", lhs, "sqrt(P(1-P))", rhs_from_probability(P),
        eta=float(eta), family=family, guessing_probability=P,
        environment_distance=trace_distance(env_A, env_D),
    )


# ---------------------------------------------------------------------------
# certifiability


def _channel_rhs(A: StateVector, D: StateVector, channel) -> tuple:
    """Right-hand side shared with the matching fragility bound, plus a context entry."""
    if channel is None:
        return 0.5, {"channel": "identity"}
    if isinstance(channel, (DephasingSpec, PointerDilation)):
        P = _noise_probability(A, D, channel.observable, channel.delta)
        return rhs_from_probability(P), {"channel": "dephasing", "delta": float(channel.delta), "guessing_probability": P}
    if isinstance(channel, LossDilation):
        P = loss_guessing_probability(A, D, channel.family, 1.0 - channel.eta)
        return rhs_from_probability(P), {"channel": channel.family, "eta": float(channel.eta), "guessing_probability": P}
    if isinstance(channel, ChannelDilation):
        d_env = trace_distance(channel.environment_output(A), channel.environment_output(D))
        return rhs_from_distance(d_env), {"channel": "dilation", "environment_distance": d_env}
    raise TypeError(f"unsupported channel type {type(channel).__name__}")


def certifiability_distance(A: StateVector, D: StateVector, channel: Optional[Channel] = None):
    """Distance between the channel outputs of ``|A> + |D>`` and of the equal mixture.

    ``channel=None`` is the identity. Returns ``(distance, report)``.
    """
    sup = make_superposition(A, D)
    mix = make_mixture(A, D)
    if channel is None:
        out_s, out_m = sup.density(), mix
    else:
        out_s, out_m = apply_channel(sup, channel), apply_channel(mix, channel)
    dist = trace_distance(out_s, out_m)
    rhs, ctx = _channel_rhs(A, D, channel)
    return dist, BoundReport.compare("certifiability", "D(S,M)", dist, "sqrt(P(1-P))", rhs, **ctx)


# ---------------------------------------------------------------------------
# control precision


def _factor_expectation(rho: DensityOperator, label: str, op: np.ndarray) -> float:
    sub = rho if len(rho.layout.labels) == 1 else partial_trace(rho, [label])
    return float(np.real(np.trace(op @ sub.matrix)))


def control_precision_equivalence(
    rho: DensityOperator,
    X: Observable,
    delta: float,
    U: np.ndarray,
    f: Callable[[np.ndarray], np.ndarray],
    order: Optional[int] = None,
):
    """Compare a controlled measurement after dephasing with an average over imprecise controls.

    ``lhs = tr[U^dag f(X) U . dephase(rho)]`` and ``rhs`` is the Gauss-Hermite
    average over ``lam ~ N(0, delta^2)`` of ``tr[f(X) U_lam rho U_lam^dag]``
    with ``U_lam = e^{-i lam X} U e^{i lam X}``. Returns ``(lhs, rhs, |lhs - rhs|)``.
    """
    U = np.asarray(U, dtype=complex)
    if U.shape != (X.dim, X.dim):
        raise StateError(f"control unitary has shape {U.shape}, expected {(X.dim, X.dim)}")
    if np.max(np.abs(U.conj().T @ U - np.eye(X.dim))) > config.current().unitary:
        raise StateError("control operator is not unitary")
    order = order or config.current().quadrature_order
    fX = X.function(f)

    deph = dephase(rho, DephasingSpec(X, delta))
    layout, m = conjugate_factor(deph.layout, deph.matrix, X.label, U)
    lhs = _factor_expectation(make_density(layout, m), X.label, fX)

    V = X.eigenvectors
    x = X.eigenvalue_per_vector()
    t, w = hermgauss(order)
    lams = math.sqrt(2.0) * delta * t
    rhs = 0.0
    for lam, wk in zip(lams, w / math.sqrt(math.pi)):
        rot = (V * np.exp(-1j * lam * x)) @ V.conj().T
        U_lam = rot @ U @ rot.conj().T
        layout, m = conjugate_factor(rho.layout, rho.matrix, X.label, U_lam)
        rhs += wk * _factor_expectation(make_density(layout, m), X.label, fX)
    return lhs, rhs, abs(lhs - rhs)
