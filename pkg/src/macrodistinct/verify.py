"""Randomized invariant suites.

Each trial draws its randomness from ``default_rng([seed, suite_index, trial])``
so any failing trial can be replayed alone from its reproduction token
``"<suite>:<seed>:<trial>"`` with :func:`run_trial`.

A trial returns named checks as ``(name, slack)`` pairs: ``slack >= 0``
passes. Inequalities report ``rhs - lhs`` (with the bound tolerance already
folded in by shifting), equalities report ``tolerance - error``.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable, Optional

import numpy as np

from . import bounds, config
from .decoherence import DephasingSpec, PointerDilation, dephase, pointer_dilation_apply
from .distinctness import NoiseKernel, Observable, coarse_distribution, noisy_guessing_probability
from .loss import LossDilation, apply_loss
from .qcore import (
    ChannelDilation,
    PovmElementSet,
    SpaceLayout,
    StateVector,
    classical_fidelity,
    fidelity,
    helstrom_povm,
    identity_povm,
    make_density,
    negativity,
    partial_transpose,
    random_density,
    random_rank1_povm,
    random_state_vector,
    random_unitary,
    tensor,
    trace_distance,
)

DEFAULT_SEED = 20140101
FAULTS = ("fidelity-sign",)


def _bound(report: bounds.BoundReport):
    return report.bound, report.slack + config.current().slack


def _equal(name: str, error: float, tol: float):
    return name, tol - float(error)


def _orthonormal_pair(dim: int, rng, label: str = "M"):
    U = random_unitary(dim, rng)
    layout = SpaceLayout.single(dim, label)
    return StateVector(layout, U[:, 0]), StateVector(layout, U[:, 1])


def _random_observable(dim: int, rng, spread: float = 4.0) -> Observable:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = g + g.conj().T
    lam = np.linalg.eigvalsh(h)
    return Observable(h * (spread / (lam[-1] - lam[0])))


# ---------------------------------------------------------------------------
# suites


def _which_path(rng, fault):
    dM, dE = int(rng.integers(2, 5)), int(rng.integers(2, 5))
    A, D = _orthonormal_pair(dM, rng)
    dil = ChannelDilation.random(dM, dE, rng)
    wp = bounds.which_path_analysis(A, D, dil)
    env = wp.env_A.layout
    povms = {
        "helstrom": helstrom_povm(wp.env_A, wp.env_D),
        "rank1": random_rank1_povm(env, dE + int(rng.integers(0, 3)), rng),
        "identity": identity_povm(env),
    }
    checks = [_bound(bounds.which_path_bound(wp.env_A, wp.env_D, wp.negativity)[0])]
    for name, povm in povms.items():
        F, Dm, reports = bounds.povm_fidelity_chain(povm, wp.env_A, wp.env_D, wp.negativity)
        if fault == "fidelity-sign":
            reports = bounds._chain_reports(-F, Dm, wp.negativity)
        checks += [(f"{r.bound}[{name}]", _bound(r)[1]) for r in reports]
        checks.append((f"which-path-povm[{name}]", _bound(bounds.which_path_bound(wp.env_A, wp.env_D, wp.negativity, povm)[1])[1]))
    F, Dm, _ = bounds.povm_fidelity_chain(povms["helstrom"], wp.env_A, wp.env_D, wp.negativity)
    checks.append(_equal("helstrom-attains-distance", abs(Dm - trace_distance(wp.env_A, wp.env_D)), 1e-9))
    return checks


def _fidelity_distance(rng, fault):
    d = int(rng.integers(2, 17))
    layout = SpaceLayout.single(d)
    rank = int(rng.integers(1, d + 1))
    rho, sigma = random_density(layout, rng, rank), random_density(layout, rng)
    F, D = fidelity(rho, sigma), trace_distance(rho, sigma)
    p, q = rng.dirichlet(np.ones(d)), rng.dirichlet(np.ones(d))
    Fc, Dc = classical_fidelity(p, q), 0.5 * float(np.abs(p - q).sum())
    return [
        ("quantum-fidelity-distance", math.sqrt(max(1 - D * D, 0)) - F + 1e-10),
        ("classical-fidelity-distance", math.sqrt(max(1 - Dc * Dc, 0)) - Fc + 1e-10),
    ]


def _helstrom(rng, fault):
    d = int(rng.integers(2, 9))
    layout = SpaceLayout.single(d)
    rho, sigma = random_density(layout, rng), random_density(layout, rng)
    D = trace_distance(rho, sigma)
    hp = helstrom_povm(rho, sigma)
    Dh = 0.5 * float(np.abs(hp.probabilities(rho) - hp.probabilities(sigma)).sum())
    rp = random_rank1_povm(layout, d + int(rng.integers(0, 4)), rng)
    Dr = 0.5 * float(np.abs(rp.probabilities(rho) - rp.probabilities(sigma)).sum())
    return [_equal("helstrom-equality", abs(Dh - D), 1e-9), ("povm-below-operator", D + 1e-9 - Dr)]


def _negativity(rng, fault):
    dims = [(2, 2), (2, 3), (3, 2), (3, 3)][int(rng.integers(0, 4))]
    layout = SpaceLayout(dims, ("M", "Q"))
    r1 = random_density(layout, rng, int(rng.integers(1, 3)))
    r2 = random_density(layout, rng, int(rng.integers(1, 3)))
    n1, n2 = negativity(r1, "Q"), negativity(r2, "Q")
    checks = []
    worst = math.inf
    for lam in np.linspace(0, 1, 11):
        mix = make_density(layout, lam * r1.matrix + (1 - lam) * r2.matrix)
        worst = min(worst, lam * n1 + (1 - lam) * n2 - negativity(mix, "Q") + 1e-10)
    checks.append(("negativity-convex", worst))
    anc = random_density(SpaceLayout.single(int(rng.integers(2, 4)), "E"), rng)
    checks.append(("negativity-ancilla", n1 - negativity(tensor(r1, anc), "Q") + 1e-10))
    pt = partial_transpose(r1, "Q")
    lam_pt = np.linalg.eigvalsh(pt)
    checks.append(_equal("negativity-trace-norm", abs(n1 - 0.5 * (np.abs(lam_pt).sum() - 1)), 1e-10))
    return checks


def _dephasing(rng, fault):
    d = int(rng.integers(2, 9))
    X = _random_observable(d, rng)
    rho = random_density(SpaceLayout.single(d), rng)
    d1, d2 = rng.uniform(0, 2, size=2)
    out = dephase(rho, DephasingSpec(X, d1))
    both = dephase(out, DephasingSpec(X, d2))
    direct = dephase(rho, DephasingSpec(X, math.hypot(d1, d2)))
    fX = X.function(lambda x: x ** 3 - x)
    return [
        ("dephase-valid", 1.0),  # construction already validated the output
        _equal("dephase-composition", np.abs(both.matrix - direct.matrix).max(), 1e-9),
        _equal("dephase-commutes", abs(out.expectation(fX) - rho.expectation(fX)), 1e-10),
    ]


def _pointer(rng, fault):
    d = int(rng.integers(2, 9))
    X = _random_observable(d, rng)
    delta = float(np.exp(rng.uniform(np.log(0.2), np.log(5.0))))
    rho = random_density(SpaceLayout.single(d), rng)
    dil = PointerDilation.gaussian(X, delta)
    out, readout = pointer_dilation_apply(rho, dil)
    ref = dephase(rho, DephasingSpec(X, delta))
    coarse = coarse_distribution(rho, X, NoiseKernel(1.0 / delta), dil.positions)
    return [
        _equal("pointer-equivalence", np.abs(out.matrix - ref.matrix).max(), 1e-6),
        _equal("pointer-readout", np.abs(readout.weights - coarse.weights).max(), 1e-6),
    ]


def _loss_pair(family: str, rng):
    """Two random inputs on a common space; Fock inputs avoid the top tenth of the truncation."""
    if family == "qubit-swap":
        layout = SpaceLayout.single(2 ** int(rng.integers(1, 4)))
        return [random_density(layout, rng, int(rng.integers(1, 3))) for _ in range(2)]
    cutoff = int(rng.integers(6, 13))
    low = cutoff - int(math.ceil(0.1 * cutoff))
    layout = SpaceLayout.single(cutoff)
    pair = []
    for _ in range(2):
        z = np.zeros(cutoff, complex)
        z[:low] = rng.normal(size=low) + 1j * rng.normal(size=low)
        pair.append(StateVector.from_unnormalized(layout, z).density())
    return pair


def _loss(rng, fault):
    checks = []
    for family in ("beamsplitter", "qubit-swap"):
        a, b = _loss_pair(family, rng)
        eta = float(rng.uniform(0, 1 - 1e-4))

        def out(state, e):
            return apply_loss(state, LossDilation(family, e), keep_joint=False)

        at_a, at_b = out(a, eta), out(b, eta)
        mirror_a, mirror_b = out(a, 1.0 - eta).system, out(b, 1.0 - eta).system
        step = trace_distance(at_a.system, out(a, eta + 1e-4).system)
        sym = abs(trace_distance(at_a.environment, at_b.environment) - trace_distance(mirror_a, mirror_b))
        traces = max(abs(np.trace(at_a.system.matrix) - 1), abs(np.trace(at_a.environment.matrix) - 1))
        checks += [
            _equal(f"axiom-i[{family}]", np.abs(out(a, 1.0).system.matrix - a.matrix).max(), 1e-10),
            _equal(f"axiom-ii[{family}]", np.abs(out(a, 0.0).system.matrix - out(b, 0.0).system.matrix).max(), 1e-10),
            _equal(f"axiom-iii[{family}]", np.abs(at_a.environment.matrix - mirror_a.matrix).max(), 1e-10),
            (f"axiom-iv[{family}]", 1e-2 - step),
            _equal(f"distance-symmetry[{family}]", sym, 1e-9),
            _equal(f"trace[{family}]", traces, 1e-10),
        ]
    return checks


def _control(rng, fault):
    d = 6
    X = _random_observable(d, rng)
    rho = random_density(SpaceLayout.single(d), rng)
    U = random_unitary(d, rng)
    delta = float(rng.uniform(0.05, 1.0))
    _, _, err = bounds.control_precision_equivalence(rho, X, delta, U, lambda x: x + 0.5 * x ** 2)
    return [_equal("control-precision", err, 1e-6)]


def _coarse_monotone(rng, fault):
    d = int(rng.integers(2, 7))
    X = _random_observable(d, rng)
    layout = SpaceLayout.single(d)
    A, D = random_state_vector(layout, rng), random_state_vector(layout, rng)
    s1, s2 = np.sort(rng.uniform(0.05, 3.0, size=2))
    p1 = noisy_guessing_probability(A, D, X, s1)
    p2 = noisy_guessing_probability(A, D, X, s2)
    return [("coarse-monotone", p1 - p2 + 1e-8)]


def _separability(rng, fault):
    dM = int(rng.integers(2, 5))
    dE = 2 * int(rng.integers(1, 3))
    half = dE // 2
    A, D = _orthonormal_pair(dM, rng)
    # A and D are sent to states whose environments live in orthogonal halves of E
    phi = np.zeros((2, dM, dE), complex)
    phi[0, :, :half] = rng.normal(size=(dM, half)) + 1j * rng.normal(size=(dM, half))
    phi[1, :, half:] = rng.normal(size=(dM, half)) + 1j * rng.normal(size=(dM, half))
    d = dM * dE
    out_basis = np.linalg.qr(np.column_stack([phi[0].ravel(), phi[1].ravel(), rng.normal(size=(d, d - 2))]))[0]
    in_basis = np.linalg.qr(np.column_stack([A.amplitudes, D.amplitudes, rng.normal(size=(dM, dM - 2))]))[0]
    U = np.zeros((d, d), complex)
    start = np.arange(dM) * dE  # columns acting on |m>|0_E>
    U[:, start] = out_basis[:, :dM] @ in_basis.conj().T
    U[:, np.setdiff1d(np.arange(d), start)] = out_basis[:, dM:]
    wp = bounds.which_path_analysis(A, D, ChannelDilation(U, dM, dE))
    P = np.diag([1.0] * half + [0.0] * half)
    povm = PovmElementSet(wp.env_A.layout, (P, np.eye(dE) - P))
    F, _, _ = bounds.povm_fidelity_chain(povm, wp.env_A, wp.env_D, wp.negativity)
    lam_min = float(np.linalg.eigvalsh(partial_transpose(wp.final_state, "Q"))[0])
    return [_equal("disjoint-fidelity-zero", F, 1e-12), ("fidelity-zero-ppt", lam_min + 1e-9)]


def _fragility(rng, fault):
    d = int(rng.integers(2, 7))
    X = _random_observable(d, rng)
    A, D = _orthonormal_pair(d, rng)
    delta = float(np.exp(rng.uniform(np.log(0.05), np.log(5.0))))
    checks = [
        _bound(bounds.noise_fragility_check(A, D, X, delta)),
        _bound(bounds.certifiability_distance(A, D, DephasingSpec(X, delta))[1]),
    ]
    n = int(rng.integers(1, 3))
    A2, D2 = _orthonormal_pair(2 ** n, rng)
    eta = float(rng.uniform(0, 1))
    checks.append(_bound(bounds.loss_fragility_check(A2, D2, "qubit-swap", eta)))
    checks.append(_bound(bounds.certifiability_distance(A2, D2, LossDilation("qubit-swap", eta))[1]))
    dil = ChannelDilation.random(d, int(rng.integers(2, 5)), rng)
    checks.append(_bound(bounds.certifiability_distance(A, D, dil)[1]))
    return checks


SUITES: dict = {
    "which-path": _which_path,
    "fidelity-distance": _fidelity_distance,
    "helstrom": _helstrom,
    "negativity": _negativity,
    "dephasing": _dephasing,
    "pointer": _pointer,
    "loss-axioms": _loss,
    "control-precision": _control,
    "coarse-monotone": _coarse_monotone,
    "separability": _separability,
    "fragility": _fragility,
}


@dataclasses.dataclass(frozen=True)
class SuiteSummary:
    suite: str
    trials: int
    passed: int
    min_slack: float
    max_abs_slack: float
    failures: tuple

    @property
    def ok(self) -> bool:
        return self.passed == self.trials


def _rng(seed: int, suite: str, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, list(SUITES).index(suite), trial])


def run_trial(suite: str, seed: int, trial: int, fault: Optional[str] = None) -> list:
    """Replay one trial; returns its ``(check, slack)`` list."""
    if suite not in SUITES:
        raise KeyError(f"unknown suite {suite!r}")
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}")
    return SUITES[suite](_rng(seed, suite, trial), fault)


def token(suite: str, seed: int, trial: int) -> str:
    return f"{suite}:{seed}:{trial}"


def parse_token(tok: str):
    suite, seed, trial = tok.rsplit(":", 2)
    return suite, int(seed), int(trial)


def run_suite(suite: str, seed: int = DEFAULT_SEED, trials: int = 100, fault: Optional[str] = None) -> SuiteSummary:
    passed, slacks, failures = 0, [], []
    for t in range(trials):
        checks = run_trial(suite, seed, t, fault)
        worst = min(s for _, s in checks)
        slacks.append(worst)
        if worst >= 0:
            passed += 1
        else:
            bad = [name for name, s in checks if s < 0]
            failures.append((token(suite, seed, t), tuple(bad)))
    return SuiteSummary(
        suite, trials, passed,
        float(min(slacks)) if slacks else math.nan,
        float(max(abs(s) for s in slacks)) if slacks else math.nan,
        tuple(failures),
    )


def run_all(seed: int = DEFAULT_SEED, trials: int = 100, fault: Optional[str] = None,
            suites=None, progress: Optional[Callable[[SuiteSummary], None]] = None) -> list:
    out = []
    for name in suites or SUITES:
        summary = run_suite(name, seed, trials, fault)
        if progress:
            progress(summary)
        out.append(summary)
    return out
