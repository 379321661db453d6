"""Matrix-analytic kernel: index, eigenprojection at 0, matrix exponential.

The eigenprojection of a square matrix A at eigenvalue 0 is the unique
idempotent Z whose range is the null space of A^nu and whose null space is
the range of A^nu, where nu is the index of A (the smallest k with
rank A^{k+1} = rank A^k).  For a digraph Laplacian, nu = 1 and Z carries the
asymptotic state of the averaging dynamics.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .digraph import validate_laplacian

__all__ = [
    "NumericalDegeneracyError",
    "IndexResult",
    "Eigenprojection",
    "matrix_index",
    "eigenprojection",
    "eigenprojection_resolvent",
    "matrix_exponential",
    "laplacian_exp_limit",
    "require_absorbing_pair",
    "exp_regularization_identity_residual",
    "power_monomial_identity_residual",
    "DEFAULT_TAU_SCHEDULE",
]

# Conditioning of I + tau L degrades beyond 1e8; documented trade-off.
DEFAULT_TAU_SCHEDULE = tuple(10.0**k for k in range(9))


class NumericalDegeneracyError(RuntimeError):
    """Raised when null/range bases are too ill-conditioned to assemble."""


@dataclass(frozen=True)
class IndexResult:
    """Index nu of a matrix plus the rank sequence of A^0, ..., A^{nu+1}."""

    nu: int
    rank_sequence: tuple[int, ...]


@dataclass(frozen=True)
class Eigenprojection:
    """Eigenprojection at eigenvalue 0 with numerical diagnostics.

    ``residuals`` holds the idempotency residual ||Z^2 - Z||_max, the
    commutation residual max(||Z A^nu||, ||A^nu Z||) scaled by the magnitude
    of A^nu, and the condition number of the assembled basis.
    """

    matrix: np.ndarray
    method: str
    residuals: dict[str, float]
    converged: bool = True
    differences: tuple[float, ...] = field(default=())


def _require_square(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix must be square, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise ValueError("matrix contains non-finite entries")
    return m


def _numeric_rank(singular_values: np.ndarray, n: int) -> int:
    if singular_values.size == 0:
        return 0
    tol = n * np.finfo(float).eps * singular_values[0]
    return int(np.count_nonzero(singular_values > tol))


def _max_abs(m: np.ndarray) -> float:
    return float(np.abs(m).max()) if m.size else 0.0


def matrix_index(m: np.ndarray) -> IndexResult:
    """Smallest k with rank A^{k+1} = rank A^k (rank of A^0 = I is n).

    Ranks are counted from singular values with tolerance
    ``n * eps * sigma_max`` per power.
    """
    m = _require_square(m)
    n = m.shape[0]
    ranks = [n]
    power = np.eye(n)
    for k in range(n + 1):
        power = power @ m
        ranks.append(_numeric_rank(np.linalg.svd(power, compute_uv=False), n))
        if ranks[-1] == ranks[-2]:
            return IndexResult(nu=k, rank_sequence=tuple(ranks))
    # Ranks strictly decrease until stabilization, so this is unreachable.
    raise AssertionError("rank sequence failed to stabilize")


def _projection_residuals(z: np.ndarray, a_nu: np.ndarray) -> dict[str, float]:
    idem = _max_abs(z @ z - z)
    scale = max(1.0, _max_abs(a_nu))
    commute = max(_max_abs(z @ a_nu), _max_abs(a_nu @ z)) / scale
    return {"idempotency": idem, "commutation": commute}


def eigenprojection(m: np.ndarray) -> Eigenprojection:
    """Eigenprojection of ``m`` at eigenvalue 0, assembled algebraically.

    Takes orthonormal bases U of the null space and V of the range of A^nu,
    stacks W = [U V], and extracts the oblique projector onto span(U) along
    span(V) as W diag(I, 0) W^{-1}.
    """
    m = _require_square(m)
    n = m.shape[0]
    nu = matrix_index(m).nu
    a_nu = np.linalg.matrix_power(m, nu)
    u_full, s, vh = np.linalg.svd(a_nu)
    r = _numeric_rank(s, n)
    null_basis = vh[r:].T  # (n, n - r)
    range_basis = u_full[:, :r]  # (n, r)
    w = np.hstack([null_basis, range_basis])
    cond = np.linalg.cond(w)
    if not np.isfinite(cond) or cond > 1.0 / (n * np.finfo(float).eps):
        raise NumericalDegeneracyError(
            f"null/range basis assembly is numerically singular (cond = {cond:.3e})"
        )
    selected = np.hstack([null_basis, np.zeros((n, r))])
    z = np.linalg.solve(w.T, selected.T).T
    residuals = _projection_residuals(z, a_nu)
    residuals["basis_condition"] = float(cond)
    return Eigenprojection(matrix=z, method="algebraic", residuals=residuals)


def eigenprojection_resolvent(
    L: np.ndarray, tau_schedule: tuple[float, ...] = DEFAULT_TAU_SCHEDULE
) -> Eigenprojection:
    """Resolvent-limit eigenprojection of a Laplacian: (I + tau L)^{-1} at
    the largest tau of the schedule, with convergence diagnostics.

    Flags non-convergence when the last successive difference along the
    schedule exceeds 1e-6.
    """
    L = validate_laplacian(L)
    schedule = [float(t) for t in tau_schedule]
    if not schedule:
        raise ValueError("tau schedule must be nonempty")
    if any(t <= 0 for t in schedule) or any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("tau schedule must be positive and strictly increasing")
    n = L.shape[0]
    eye = np.eye(n)
    previous = None
    differences = []
    current = eye
    for tau in schedule:
        try:
            current = np.linalg.solve(eye + tau * L, eye)
        except np.linalg.LinAlgError as exc:  # pragma: no cover
            raise RuntimeError(f"internal inversion error for I + tau L: {exc}") from exc
        if previous is not None:
            differences.append(_max_abs(current - previous))
        previous = current
    converged = not differences or differences[-1] <= 1e-6
    residuals = _projection_residuals(current, L)
    residuals["last_difference"] = differences[-1] if differences else 0.0
    return Eigenprojection(
        matrix=current,
        method="resolvent-limit",
        residuals=residuals,
        converged=converged,
        differences=tuple(differences),
    )


def matrix_exponential(m: np.ndarray, t: float) -> np.ndarray:
    """e^{m t} by scaling-and-squaring with a Pade core (scipy backend)."""
    m = _require_square(m)
    t = float(t)
    if not np.isfinite(t):
        raise ValueError(f"t must be finite, got {t!r}")
    with np.errstate(over="ignore", invalid="ignore"):
        result = scipy.linalg.expm(m * t)
    if not np.isfinite(result).all():
        raise OverflowError(
            f"matrix exponential overflowed (||m t||_max = {_max_abs(m * t):.3e})"
        )
    return result


def laplacian_exp_limit(
    L: np.ndarray, tol: float = 1e-10, max_doublings: int = 60
) -> tuple[np.ndarray, float]:
    """Limit of e^{-L t}: double t until successive values differ by < tol.

    For a Laplacian this limit exists and equals the eigenprojection of L.
    Returns the settled matrix and the final t.
    """
    L = validate_laplacian(L)
    t = 1.0
    previous = matrix_exponential(L, -t)
    best_diff = np.inf
    best_state, best_t = previous, t
    for _ in range(max_doublings):
        t *= 2.0
        current = matrix_exponential(L, -t)
        diff = _max_abs(current - previous)
        if diff < tol:
            return current, t
        if diff < best_diff:
            best_diff, best_state, best_t = diff, current, t
        elif diff > 100.0 * best_diff and best_diff < 1e-6:
            # Rounding noise in e^{-Lt} grows with t and eventually swamps
            # the settled matrix; the limit was reached at best_t.
            return best_state, best_t
        previous = current
    raise RuntimeError(f"e^(-L t) did not settle within {max_doublings} doublings")


def require_absorbing_pair(A: np.ndarray, C: np.ndarray, tol: float = 1e-10) -> None:
    """Check the identities AC = A and C^2 = C that the closed forms rely on.

    Raises with the offending residual when either fails beyond
    ``tol * max(1, |A|, |C|)``.
    """
    A = _require_square(A)
    C = _require_square(C)
    if A.shape != C.shape:
        raise ValueError(f"A and C must have equal shapes, got {A.shape} and {C.shape}")
    scale = max(1.0, _max_abs(A), _max_abs(C))
    res_ac = _max_abs(A @ C - A)
    if res_ac > tol * scale:
        raise ValueError(f"AC - A residual {res_ac:.3e} exceeds tolerance {tol * scale:.3e}")
    res_cc = _max_abs(C @ C - C)
    if res_cc > tol * scale:
        raise ValueError(f"C^2 - C residual {res_cc:.3e} exceeds tolerance {tol * scale:.3e}")


def exp_regularization_identity_residual(
    A: np.ndarray, C: np.ndarray, delta: float, t: float
) -> float:
    """Residual of the exponential splitting identity behind the hub and
    background closed forms:

        e^{-(A + d C) t} = I + (A + d C)(A + d I)^{-1} (e^{-(A + d I) t} - I)

    valid whenever AC = A and C^2 = C (checked) and A + d I is invertible.
    """
    A = _require_square(A)
    C = _require_square(C)
    delta = float(delta)
    t = float(t)
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta!r}")
    if t <= 0:
        raise ValueError(f"t must be positive, got {t!r}")
    require_absorbing_pair(A, C)
    n = A.shape[0]
    eye = np.eye(n)
    shifted = A + delta * eye
    lhs = matrix_exponential(A + delta * C, -t)
    try:
        inner = np.linalg.solve(shifted, matrix_exponential(shifted, -t) - eye)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"A + delta I is singular: {exc}") from exc
    rhs = eye + (A + delta * C) @ inner
    return _max_abs(lhs - rhs)


def power_monomial_identity_residual(
    A: np.ndarray, C: np.ndarray, delta: float, m: int
) -> float:
    """Residual of (A + d C)^m = (A + d C)(A + d I)^{m-1} for AC = A, C^2 = C."""
    A = _require_square(A)
    C = _require_square(C)
    delta = float(delta)
    if not isinstance(m, int) or m < 1:
        raise ValueError(f"m must be a positive integer, got {m!r}")
    require_absorbing_pair(A, C)
    n = A.shape[0]
    regularized = A + delta * C
    shifted = A + delta * np.eye(n)
    lhs = np.linalg.matrix_power(regularized, m)
    rhs = regularized @ np.linalg.matrix_power(shifted, m - 1)
    return _max_abs(lhs - rhs)
