"""Numerical tolerances shared by every module.

All thresholds live in a single frozen record. Callers that need looser or
tighter checks (truncation studies, for instance) override them for a block
of code with :func:`tolerances`::

    with tolerances(slack=1e-6):
        report = noise_fragility_check(A, D, X, 0.5)

The override is stored in a context variable, so concurrent workers each see
their own settings.
"""

from __future__ import annotations

import contextlib
import contextvars
import dataclasses
from typing import Iterator


@dataclasses.dataclass(frozen=True)
class Tolerances:
    norm: float = 1e-12
    hermitian: float = 1e-12
    trace: float = 1e-12
    psd: float = 1e-10
    povm: float = 1e-10
    zero_eigenvalue: float = 1e-12
    degeneracy: float = 1e-9
    reconstruction: float = 1e-9
    distribution_norm: float = 1e-8
    slack: float = 1e-8
    unitary: float = 1e-10
    truncation_tail: float = 1e-8
    max_dim: int = 4096
    max_grid_points: int = 2_000_000
    bisection_rtol: float = 1e-6
    bisection_cap: int = 40
    monotonicity_grid: int = 64
    quadrature_order: int = 64


DEFAULT_TOLERANCES = Tolerances()

_current: contextvars.ContextVar[Tolerances] = contextvars.ContextVar(
    "macrodistinct_tolerances", default=DEFAULT_TOLERANCES
)


def current() -> Tolerances:
    """Return the tolerance record in effect for the calling context."""
    return _current.get()


@contextlib.contextmanager
def tolerances(**overrides) -> Iterator[Tolerances]:
    """Temporarily replace selected tolerance fields."""
    tol = dataclasses.replace(_current.get(), **overrides)
    token = _current.set(tol)
    try:
        yield tol
    finally:
        _current.reset(token)
