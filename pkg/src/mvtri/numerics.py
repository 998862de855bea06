"""Numeric primitives: polynomials and their real roots, null-space solves,
and a small Levenberg-Marquardt driver with finite-difference Jacobians."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from . import _backend, _pykernels
from .errors import DegenerateAllZero, NonFiniteResidual


@dataclass(frozen=True)
class Polynomial:
    """Real polynomial with coefficients in ascending degree order.

    Trailing coefficients below 1e-13 relative to the largest magnitude are
    trimmed at construction, so the leading coefficient of a nonzero
    polynomial is meaningful.  Degrees above 8 are rejected.
    """

    coefficients: tuple

    def __post_init__(self):
        c = [float(v) for v in self.coefficients]
        if not c:
            raise ValueError("coefficient list must not be empty")
        biggest = max(abs(v) for v in c)
        if biggest > 0.0:
            tol = _pykernels.TRIM_TOL * biggest
            while len(c) > 1 and abs(c[-1]) < tol:
                c.pop()
        else:
            c = [0.0]
        if len(c) - 1 > 8:
            raise ValueError("degree above 8 is unsupported")
        object.__setattr__(self, "coefficients", tuple(c))

    @property
    def degree(self):
        return len(self.coefficients) - 1

    @property
    def is_zero(self):
        return max(abs(v) for v in self.coefficients) == 0.0

    def __call__(self, t):
        return _pykernels.polyval(np.asarray(self.coefficients), t)

    def derivative(self):
        c = self.coefficients
        if len(c) == 1:
            return Polynomial((0.0,))
        return Polynomial(tuple(k * c[k] for k in range(1, len(c))))


def real_roots(p):
    """All real roots of the polynomial, ascending, duplicates collapsed.

    Roots are companion-matrix eigenvalues with one Newton polish step;
    near-real eigenvalues (|Im| <= 1e-8*(1+|Re|)) count as real, and any
    candidate whose polished residual exceeds 1e-8*max|coefficient| is
    dropped as spurious.
    """
    poly = p if isinstance(p, Polynomial) else Polynomial(tuple(np.asarray(p, dtype=float)))
    if poly.is_zero:
        raise DegenerateAllZero("all coefficients are zero")
    if poly.degree < 1:
        raise ValueError("degree must be at least 1")
    return _backend.kernels.poly_real_roots(np.asarray(poly.coefficients), True)


def smallest_singular_vector(A):
    """Unit vector v minimizing ||A v||.

    Ties between equal singular values resolve to whatever the
    decomposition produces; the sign is fixed so the largest-magnitude
    component is positive.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 2:
        raise ValueError("need a 2-D matrix with at least 2 columns")
    return _pykernels.smallest_singular_vector(A)


class Termination(Enum):
    GRADIENT_SMALL = "gradient_small"
    STEP_SMALL = "step_small"
    MAX_ITERATIONS = "max_iterations"


_TERMINATION_BY_CODE = {
    _pykernels.LM_GRADIENT_SMALL: Termination.GRADIENT_SMALL,
    _pykernels.LM_STEP_SMALL: Termination.STEP_SMALL,
    _pykernels.LM_MAX_ITERATIONS: Termination.MAX_ITERATIONS,
}


@dataclass(frozen=True)
class LMProblem:
    """Residual function r(x) with m = n_residuals >= n = n_parameters."""

    residual: Callable
    n_parameters: int
    n_residuals: int

    def __post_init__(self):
        if self.n_parameters < 1 or self.n_residuals < self.n_parameters:
            raise ValueError("need n_residuals >= n_parameters >= 1")


@dataclass(frozen=True)
class LMSettings:
    max_iterations: int = 100
    gradient_tolerance: float = 1e-10
    step_tolerance: float = 1e-12
    initial_damping: float = 1e-3

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if min(self.gradient_tolerance, self.step_tolerance, self.initial_damping) <= 0:
            raise ValueError("tolerances and damping must be positive")


@dataclass(frozen=True, eq=False)
class LMOutcome:
    solution: np.ndarray
    final_cost: float
    iterations: int
    termination: Termination


def lm_minimize(problem, x0, settings=None):
    """Minimize ||r(x)||^2 from x0; returns the best parameters seen.

    Damped Gauss-Newton steps with forward-difference Jacobians; only
    strict cost decreases are accepted.  The gradient test runs before
    stepping, so a zero-residual start costs at most one iteration.
    """
    s = settings if settings is not None else LMSettings()
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (problem.n_parameters,):
        raise ValueError("x0 has the wrong length")
    x, cost, iterations, code = _pykernels.lm_core(
        problem.residual, x0, s.max_iterations, s.gradient_tolerance,
        s.step_tolerance, s.initial_damping)
    return LMOutcome(x, cost, iterations, _TERMINATION_BY_CODE[code])


def finite_difference_jacobian(problem, x):
    """Forward-difference Jacobian with step 1e-7*(1+|x_i|) per parameter."""
    x = np.asarray(x, dtype=float)
    r0 = np.asarray(problem.residual(x), dtype=float)
    if not np.all(np.isfinite(r0)):
        raise NonFiniteResidual("residual is not finite at x")
    J = _pykernels._forward_jacobian(problem.residual, x, r0)
    if J is None:
        raise NonFiniteResidual("residual is not finite at a probe point")
    return J
