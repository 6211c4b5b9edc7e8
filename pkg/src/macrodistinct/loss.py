"""Limited-sensitivity measurements modelled as loss channels.

Two dilations of a loss channel with efficiency ``eta`` are provided, both
with the environment starting in its ground state.

``beamsplitter``
    A single bosonic mode mixed with a vacuum mode, ``cos(theta) = sqrt(eta)``,
    with the real phase convention ``a^dag -> sqrt(eta) a^dag + sqrt(1-eta) b^dag``.
    Photon number is conserved, so on a Fock space truncated at ``cutoff``
    both output modes fit in the same truncation and the map is exact.
    A coherent state ``|alpha>`` splits into ``|sqrt(eta) alpha>|sqrt(1-eta) alpha>``.

``qubit-swap``
    Each qubit of a register independently meets a flag qubit prepared in
    ``sqrt(eta)|0> + sqrt(1-eta)|1>`` and a fresh environment qubit ``|0>``;
    a controlled swap exchanges system and environment qubit when the flag
    is set. The system sees ``eta * rho + (1 - eta) |0><0|`` per qubit;
    the environment qubit register, read with the flags discarded, sees the
    same channel at ``1 - eta``.

In both families the symmetric environment output is the register labelled
``E`` (the lost mode, or the environment qubits), which has the same
dimension and basis as the system factor.
"""

from __future__ import annotations

import dataclasses
import math
from typing import NamedTuple, Optional

import numpy as np
from scipy.special import comb

from . import config
from .qcore import (
    DensityOperator,
    LayoutError,
    State,
    StateVector,
    apply_kraus,
    apply_operator,
    as_density,
    make_density,
    partial_trace,
    trace_distance,
)

LOSS_FAMILIES = ("beamsplitter", "qubit-swap")


class TruncationError(ValueError):
    """Raised when a Fock-space input reaches into the top of its truncation."""


@dataclasses.dataclass(frozen=True)
class LossDilation:
    family: str
    eta: float
    label: str = "M"
    env_label: str = "E"
    flag_label: str = "F"

    def __post_init__(self):
        if self.family not in LOSS_FAMILIES:
            raise ValueError(f"unknown loss family {self.family!r}; choose from {LOSS_FAMILIES}")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"efficiency must lie in [0, 1], got {self.eta}")

    def sites(self, dim: int) -> tuple:
        """Per-site dimensions of a system factor of total dimension ``dim``."""
        if self.family == "beamsplitter":
            return (dim,)
        n = int(round(math.log2(dim))) if dim > 1 else 0
        if 2 ** n != dim or n == 0:
            raise LayoutError(f"qubit-swap loss needs a qubit register, got dimension {dim}")
        return (2,) * n

    def env_site_dims(self, site_dim: int) -> tuple:
        """Environment factors attached to one site: ``(E,)`` or ``(F, E)``."""
        return (site_dim,) if self.family == "beamsplitter" else (2, 2)

    def site_isometry(self, site_dim: int) -> np.ndarray:
        """Tensor ``V[out, env, in]`` of the dilation on one site (env flattened)."""
        if self.family == "beamsplitter":
            return _beamsplitter_isometry(self.eta, site_dim)
        return _qubit_swap_isometry(self.eta)


def _beamsplitter_isometry(eta: float, cutoff: int) -> np.ndarray:
    V = np.zeros((cutoff, cutoff, cutoff))
    for n in range(cutoff):
        k = np.arange(n + 1)
        V[k, n - k, n] = np.sqrt(comb(n, k)) * eta ** (k / 2) * (1.0 - eta) ** ((n - k) / 2)
    return V.astype(complex)


def _controlled_swap() -> np.ndarray:
    """CSWAP on (system, flag, env) qubits; swaps system and env when the flag is 1."""
    U = np.zeros((8, 8))
    for m in range(2):
        for f in range(2):
            for e in range(2):
                src = 4 * m + 2 * f + e
                dst = 4 * e + 2 * f + m if f else src
                U[dst, src] = 1.0
    return U


def _qubit_swap_isometry(eta: float) -> np.ndarray:
    flag = np.array([math.sqrt(eta), math.sqrt(1.0 - eta)])
    env0 = np.array([1.0, 0.0])
    prep = np.kron(np.kron(np.eye(2), flag[:, None]), env0[:, None])
    V = _controlled_swap() @ prep
    return V.reshape(2, 4, 2).astype(complex)


class LossOutput(NamedTuple):
    system: DensityOperator
    environment: DensityOperator
    joint: Optional[DensityOperator]


def _site_labels(label: str, n: int) -> list:
    return [label] if n == 1 else [f"{label}{k}" for k in range(n)]


def _check_truncation(rho_m: DensityOperator) -> None:
    d = rho_m.layout.total
    top = int(math.ceil(0.1 * d))
    tail = float(np.real(np.diag(rho_m.matrix))[d - top:].sum())
    if tail > config.current().truncation_tail:
        raise TruncationError(
            f"input population {tail:.2e} in the top {top} of {d} Fock levels; raise the cutoff"
        )


def _apply_per_site(rho: DensityOperator, label: str, site_dims, kraus, out_label=None) -> DensityOperator:
    """Apply the same site-local Kraus family on every site of factor ``label``."""
    out_label = out_label or label
    n = len(site_dims)
    if n == 1:
        return apply_kraus(rho, label, kraus, (out_label,), (kraus[0].shape[0],))
    names = _site_labels(label, n)
    work = rho.relabel(rho.layout.replace(label, names, site_dims))
    for name in names:
        work = apply_kraus(work, name, kraus)
    return work.relabel(rho.layout.replace(label, (out_label,), (rho.layout.dim(label),)))


def apply_loss(state: State, dilation: LossDilation, keep_joint: bool = True) -> LossOutput:
    """Send factor ``dilation.label`` of ``state`` through the loss dilation.

    Returns the system output (all factors, lossy factor transformed), the
    symmetric environment register ``E`` and, when ``keep_joint`` is set,
    the joint state of system, flags and environment.
    """
    rho = as_density(state)
    label = dilation.label
    d = rho.layout.dim(label)
    site_dims = dilation.sites(d)
    rho_m = partial_trace(rho, [label]) if len(rho.layout.labels) > 1 else rho
    if dilation.family == "beamsplitter":
        _check_truncation(rho_m)
    s = site_dims[0]
    V = dilation.site_isometry(s)
    d_env = V.shape[1]

    system_kraus = [V[:, e, :] for e in range(d_env)]
    if dilation.family == "beamsplitter":
        env_kraus = [V[k, :, :] for k in range(s)]
    else:
        # qubit-swap: complementary map onto the environment qubit, flag traced out
        W = V.reshape(2, 2, 2, 2)  # out, flag, env, in
        env_kraus = [W[m, f] for m in range(2) for f in range(2)]

    system = _apply_per_site(rho, label, site_dims, system_kraus)
    environment = _apply_per_site(rho_m, label, site_dims, env_kraus, out_label=dilation.env_label)
    joint = _joint(state, dilation, site_dims, V) if keep_joint else None
    return LossOutput(system, environment, joint)


def _joint(state: State, dilation: LossDilation, site_dims, V) -> DensityOperator:
    label = dilation.label
    n = len(site_dims)
    names = _site_labels(label, n)
    work = state
    if n > 1:
        work = state.relabel(state.layout.replace(label, names, site_dims))
    s = site_dims[0]
    env_dims = dilation.env_site_dims(s)
    iso = V.reshape(s * V.shape[1], s)
    for k, name in enumerate(names):
        suffix = "" if n == 1 else str(k)
        if dilation.family == "beamsplitter":
            out_labels = (name, dilation.env_label + suffix)
        else:
            out_labels = (name, dilation.flag_label + suffix, dilation.env_label + suffix)
        layout, arr = apply_operator(work, name, iso, out_labels, (s,) + env_dims)
        if isinstance(work, StateVector):
            work = StateVector.from_unnormalized(layout, arr)
        else:
            work = make_density(layout, arr)
    return as_density(work)


def loss_guessing_probability(A: State, D: State, family: str, eta: float) -> float:
    """``(1 + D(L_eta(A), L_eta(D))) / 2`` with the operator trace distance."""
    dil = LossDilation(family, eta)
    ra = apply_loss(A, dil, keep_joint=False).system
    rd = apply_loss(D, dil, keep_joint=False).system
    return 0.5 * (1.0 + trace_distance(ra, rd))


@dataclasses.dataclass(frozen=True)
class SensitivityResult:
    """Smallest efficiency reaching the target guessing probability.

    ``status`` is ``"ok"`` or ``"unreachable"``; ``monotone`` records whether
    the guessing probability was nondecreasing on the validation grid.
    """

    eta: float
    status: str
    target: float
    probability_at_eta: float
    monotone: bool
    lower: float = math.nan


def min_sensitivity(A: State, D: State, family: str, P_g: float) -> SensitivityResult:
    """Smallest efficiency ``eta`` with loss guessing probability at least ``P_g``."""
    tol = config.current()

    def P(eta):
        return loss_guessing_probability(A, D, family, eta)

    grid = np.linspace(0.0, 1.0, tol.monotonicity_grid)
    values = np.array([P(e) for e in grid])
    monotone = bool(np.all(np.diff(values) >= -1e-9))
    if values[-1] < P_g:
        return SensitivityResult(math.nan, "unreachable", P_g, float(values[-1]), monotone)
    k = int(np.argmax(values >= P_g))
    if k == 0:
        return SensitivityResult(0.0, "ok", P_g, float(values[0]), monotone, 0.0)
    lo, hi, p_hi = grid[k - 1], grid[k], values[k]
    for _ in range(200):
        if hi - lo <= tol.bisection_rtol * hi:
            break
        mid = 0.5 * (lo + hi)
        p_mid = P(mid)
        if p_mid >= P_g:
            hi, p_hi = mid, p_mid
        else:
            lo = mid
    return SensitivityResult(float(hi), "ok", P_g, float(p_hi), monotone, float(lo))
