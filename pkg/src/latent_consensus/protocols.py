"""Trajectory simulation and limit-consensus evaluation.

Continuous averaging dynamics x'(t) = -L x(t) are integrated exactly through
the matrix exponential; discrete pooling x[k+1] = P x[k] by repeated
multiplication.  ``latent_consensus`` evaluates, for every regularization
family, the closed-form weight vector and the consensus value it assigns to
an initial state.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import regularize
from .digraph import from_dependency_matrix, has_spanning_in_tree, validate_laplacian
from .regularize import (
    BackgroundAugmentation,
    DiscreteRegularization,
    HubAugmentation,
    RegularizationSpec,
    require_row_stochastic,
)
from .spectra import eigenprojection, matrix_exponential

__all__ = [
    "Trajectory",
    "ConsensusReport",
    "simulate_continuous",
    "continuous_limit",
    "simulate_discrete",
    "simulate_to_limit",
    "power_limit",
    "latent_consensus",
    "consensus_cross_check",
    "symmetric_hub_consistency",
]


@dataclass(frozen=True)
class Trajectory:
    """Sampled states of a protocol: one row of ``states`` per time point."""

    times: np.ndarray
    states: np.ndarray

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        states = np.asarray(self.states, dtype=float)
        if times.ndim != 1 or times.size == 0:
            raise ValueError("times must be a nonempty 1-d array")
        if (np.diff(times) <= 0).any():
            raise ValueError("times must be strictly increasing")
        if states.ndim != 2 or states.shape[0] != times.size:
            raise ValueError(
                f"states must have one row per time point, got {states.shape} "
                f"for {times.size} times"
            )
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self) -> str:
        """CSV with header t,x1,...,xn at full double precision."""
        dim = self.states.shape[1]
        lines = ["t," + ",".join(f"x{i + 1}" for i in range(dim))]
        for t, row in zip(self.times, self.states):
            lines.append(",".join(format(x, ".17g") for x in (t, *row)))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ConsensusReport:
    """Weights over agents (plus hub when present), the consensus value they
    assign to the initial state, and named diagnostics."""

    method: str
    weights: np.ndarray
    value: float | None
    diagnostics: dict[str, float] = field(default_factory=dict)
    delta_used: float | None = None

    def __post_init__(self) -> None:
        weights = np.asarray(self.weights, dtype=float)
        if weights.ndim != 1:
            raise ValueError("weights must be a vector")
        if abs(weights.sum() - 1.0) > 1e-10:
            raise ValueError(f"weights must sum to 1, got {weights.sum()!r}")
        object.__setattr__(self, "weights", weights)

    def to_json(self) -> str:
        return json.dumps(
            {
                "method": self.method,
                "weights": [float(w) for w in self.weights],
                "value": self.value,
                "diagnostics": {k: v for k, v in self.diagnostics.items()},
                "delta_used": self.delta_used,
            }
        )


def simulate_continuous(L: np.ndarray, x0: np.ndarray, times) -> Trajectory:
    """Exact trajectory of x'(t) = -L x(t): states[k] = e^{-L t_k} x0."""
    L = validate_laplacian(L)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (L.shape[0],):
        raise ValueError(f"x0 must have length {L.shape[0]}, got shape {x0.shape}")
    times = np.asarray(times, dtype=float)
    states = np.vstack([matrix_exponential(L, -t) @ x0 for t in times])
    return Trajectory(times=times, states=states)


def continuous_limit(L: np.ndarray, x0: np.ndarray) -> np.ndarray:
    """Asymptotic state of x'(t) = -L x(t): the eigenprojection of L times x0."""
    L = validate_laplacian(L)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (L.shape[0],):
        raise ValueError(f"x0 must have length {L.shape[0]}, got shape {x0.shape}")
    return eigenprojection(L).matrix @ x0


def simulate_discrete(P: np.ndarray, x0: np.ndarray, k_max: int) -> Trajectory:
    """Iterates x[k+1] = P x[k] for k = 0..k_max; convergence is not assumed
    (P may have several eigenvalues of modulus 1)."""
    P = require_row_stochastic(P)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (P.shape[0],):
        raise ValueError(f"x0 must have length {P.shape[0]}, got shape {x0.shape}")
    if k_max < 0:
        raise ValueError(f"k_max must be nonnegative, got {k_max}")
    states = np.empty((k_max + 1, x0.size))
    states[0] = x0
    for k in range(k_max):
        states[k + 1] = P @ states[k]
    return Trajectory(times=np.arange(k_max + 1, dtype=float), states=states)


def simulate_to_limit(
    L: np.ndarray, x0: np.ndarray, tol: float = 1e-10, max_doublings: int = 60
) -> tuple[np.ndarray, float]:
    """Settle x'(t) = -L x(t) by doubling t until successive states differ
    by less than ``tol``; returns (final state, final t).

    The spectral gap is unknown a priori, hence the doubling search.
    """
    L = validate_laplacian(L)
    x0 = np.asarray(x0, dtype=float)
    t = 1.0
    previous = matrix_exponential(L, -t) @ x0
    best_diff = math.inf
    best_state, best_t = previous, t
    for _ in range(max_doublings):
        t *= 2.0
        current = matrix_exponential(L, -t) @ x0
        diff = float(np.abs(current - previous).max())
        if diff < tol:
            return current, t
        if diff < best_diff:
            best_diff, best_state, best_t = diff, current, t
        elif diff > 100.0 * best_diff and best_diff < 1e-6:
            # Rounding noise in e^{-Lt} grows with t and eventually swamps
            # the settled state; the limit was reached at best_t.
            return best_state, best_t
        previous = current
    raise RuntimeError(f"trajectory did not settle within {max_doublings} doublings")


def power_limit(M: np.ndarray, tol: float = 1e-13, max_squarings: int = 60) -> np.ndarray:
    """Limit of M^k for a convergent stochastic matrix, by repeated squaring.

    Each iterate is renormalized to unit row sums, which suppresses the
    rounding drift of the unit eigenvalue under repeated squaring.
    """
    M = require_row_stochastic(M)
    current = M
    for _ in range(max_squarings):
        squared = current @ current
        squared /= squared.sum(axis=1, keepdims=True)
        if np.abs(squared - current).max() < tol:
            # Squaring alone cannot distinguish a limit from a periodic
            # orbit (a period-2 chain has M^(2^k) = I for all k); the true
            # limit Z must additionally satisfy M Z = Z.
            if np.abs(M @ squared - squared).max() > max(1e-10, 100.0 * tol):
                raise RuntimeError(
                    "powers of M did not settle: the squaring fixed point is "
                    "not M-invariant (periodic chain)"
                )
            return squared
        current = squared
    raise RuntimeError(f"powers of M did not settle within {max_squarings} squarings")


def _uniform(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


# Schedule v(delta) = sqrt(delta) * vtilde keeps delta/s = sqrt(delta) -> 0,
# which is what makes the hub subordinate.
def _subordinate_v(delta: float, vtilde: np.ndarray) -> np.ndarray:
    return math.sqrt(delta) * vtilde


def latent_consensus(
    system: np.ndarray,
    spec: RegularizationSpec,
    x0: np.ndarray,
    *,
    simulate: bool = False,
) -> ConsensusReport:
    """Consensus weights and value for one regularization method.

    Continuous methods (hub-symmetric, hub-subordinate, background) take a
    Laplacian ``system``; discrete methods (degroot-hub, pagerank) take a
    row-stochastic one.  Hub methods expect ``x0`` of length n+1 with the
    hub state last.  ``delta = None`` selects the vanishing-delta limit.
    With ``simulate=True`` the report gains a residual comparing the closed
    form against a settled trajectory (run at delta = 1e-3 for limit specs,
    so that residual includes the O(delta) regularization gap).
    """
    x0 = np.asarray(x0, dtype=float)
    method = spec.method
    diagnostics: dict[str, float] = {}

    if method in regularize.CONTINUOUS_METHODS:
        L = validate_laplacian(system)
        n = L.shape[0]
        expected = n + 1 if method in ("hub-symmetric", "hub-subordinate") else n
        if x0.shape != (expected,):
            raise ValueError(
                f"{method} needs an initial state of length {expected} "
                f"(hub state last for hub methods), got shape {x0.shape}"
            )
        if method == "hub-symmetric":
            if spec.delta is None:
                weights = regularize.symmetric_hub_limit(L)[0]
            else:
                weights = regularize.hub_eigenprojection(
                    HubAugmentation(L, spec.delta, spec.delta * np.ones(n))
                )[0]
        elif method == "hub-subordinate":
            vtilde = spec.vtilde if spec.vtilde is not None else _uniform(n)
            if spec.delta is None:
                weights = regularize.subordinate_hub_limit(L, vtilde)[0]
            else:
                weights = regularize.hub_eigenprojection(
                    HubAugmentation(L, spec.delta, _subordinate_v(spec.delta, vtilde))
                )[0]
        else:  # background
            v = spec.v if spec.v is not None else _uniform(n)
            if spec.delta is None:
                weights = regularize.background_limit(L, v)[0]
            else:
                weights = regularize.background_eigenprojection(
                    BackgroundAugmentation(L, spec.delta, v)
                )[0]
    elif method in regularize.DISCRETE_METHODS:
        P = require_row_stochastic(system)
        n = P.shape[0]
        v = spec.v if spec.v is not None else _uniform(n)
        expected = n + 1 if method == "degroot-hub" else n
        if x0.shape != (expected,):
            raise ValueError(
                f"{method} needs an initial state of length {expected}, got shape {x0.shape}"
            )
        if method == "degroot-hub":
            if spec.delta is None:
                weights = regularize.degroot_hub_limit(P, v)[0]
            else:
                weights = regularize.degroot_hub_eigenprojection(
                    DiscreteRegularization(P, spec.delta, v)
                )[0]
        else:  # pagerank
            if spec.delta is None:
                weights = regularize.pagerank_limit(P, v)[0]
            else:
                weights = regularize.pagerank_power_limit(
                    DiscreteRegularization(P, spec.delta, v)
                )[0]
    else:  # pragma: no cover - RegularizationSpec already rejects this
        raise ValueError(f"unknown method {method!r}")

    value = float(weights @ x0)
    diagnostics["weight_sum_error"] = float(abs(weights.sum() - 1.0))
    if simulate:
        diagnostics.update(_simulation_residual(system, spec, x0, value))
    return ConsensusReport(
        method=method,
        weights=weights,
        value=value,
        diagnostics=diagnostics,
        delta_used=spec.delta,
    )


def _simulation_residual(
    system: np.ndarray, spec: RegularizationSpec, x0: np.ndarray, value: float
) -> dict[str, float]:
    """Settle the assembled regularized system and compare against ``value``.

    Limit specs are simulated at delta = 1e-3: small enough to approximate
    the limit, large enough to keep the slow merge mode clear of the
    rounding floor of the matrix exponential.  Their residual therefore
    includes the O(delta) regularization gap.
    """
    delta = spec.delta if spec.delta is not None else 1e-3
    method = spec.method
    out: dict[str, float] = {"simulation_delta": delta}
    if method in regularize.CONTINUOUS_METHODS:
        L = validate_laplacian(system)
        n = L.shape[0]
        if method == "hub-symmetric":
            assembled = regularize.hub_augment(HubAugmentation(L, delta, delta * np.ones(n)))
        elif method == "hub-subordinate":
            vtilde = spec.vtilde if spec.vtilde is not None else _uniform(n)
            assembled = regularize.hub_augment(
                HubAugmentation(L, delta, _subordinate_v(delta, vtilde))
            )
        else:
            v = spec.v if spec.v is not None else _uniform(n)
            assembled = regularize.background_laplacian(BackgroundAugmentation(L, delta, v))
        final, t = simulate_to_limit(assembled, x0)
        out["simulation_time"] = t
    else:
        P = require_row_stochastic(system)
        v = spec.v if spec.v is not None else _uniform(P.shape[0])
        d = DiscreteRegularization(P, delta, v)
        if method == "degroot-hub":
            assembled = regularize.degroot_hub_matrix(d)
        else:
            assembled = regularize.pagerank_matrix(d)
        final = power_limit(assembled) @ x0
    out["simulation_residual"] = float(np.abs(final - value).max())
    return out


def consensus_cross_check(
    L: np.ndarray, x0: np.ndarray, delta_schedule
) -> dict[str, object]:
    """Latent consensus via the subordinate hub, background links, and (when
    I - L is row-stochastic) PageRank damping, along a decreasing delta
    schedule; reports the max pairwise deviation of the agent weights at
    each delta and in the limit.

    The discrete leg is disabled, not fatal, when some diagonal entry of L
    exceeds 1 (I - L would have a negative diagonal).
    """
    L = validate_laplacian(L)
    n = L.shape[0]
    schedule = [float(d) for d in delta_schedule]
    if not schedule or any(d <= 0 for d in schedule):
        raise ValueError("delta schedule must be nonempty and positive")
    if any(b >= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("delta schedule must be strictly decreasing")
    u = _uniform(n)
    discrete_enabled = bool(np.diag(L).max() <= 1.0)
    P = np.eye(n) - L if discrete_enabled else None

    def agent_weights(delta: float) -> dict[str, np.ndarray]:
        legs = {
            "hub-subordinate": regularize.hub_eigenprojection(
                HubAugmentation(L, delta, _subordinate_v(delta, u))
            )[0][:n],
            "background": regularize.background_eigenprojection(
                BackgroundAugmentation(L, delta, u)
            )[0],
        }
        if discrete_enabled and delta <= 1.0:
            legs["pagerank"] = regularize.pagerank_power_limit(
                DiscreteRegularization(P, delta, u)
            )[0]
        return legs

    def limit_weights() -> dict[str, np.ndarray]:
        legs = {
            "hub-subordinate": regularize.subordinate_hub_limit(L, u)[0][:n],
            "background": regularize.background_limit(L, u)[0],
        }
        if discrete_enabled:
            legs["pagerank"] = regularize.pagerank_limit(P, u)[0]
        return legs

    def max_pairwise(legs: dict[str, np.ndarray]) -> float:
        names = sorted(legs)
        dev = 0.0
        for a in range(len(names)):
            for b in range(a + 1, len(names)):
                dev = max(dev, float(np.abs(legs[names[a]] - legs[names[b]]).max()))
        return dev

    per_delta = {delta: max_pairwise(agent_weights(delta)) for delta in schedule}
    limits = limit_weights()
    return {
        "discrete_leg_enabled": discrete_enabled,
        "deviation_per_delta": per_delta,
        "limit_deviation": max_pairwise(limits),
        "limit_weights": limits,
        "limit_values": {name: float(w @ x0) for name, w in limits.items()},
    }


def symmetric_hub_consistency(L: np.ndarray, y0: np.ndarray) -> dict[str, float]:
    """For a digraph that already reaches consensus on its own, check when
    attaching a symmetric hub preserves the consensus value.

    The ordinary consensus and the vanishing-delta symmetric-hub consensus
    coincide exactly when the hub's initial state equals the agents' Jbar-
    weighted mean (1/n) sum_{i,j} Jbar_ij y_j.  Both consensus values and
    both sides of that equality are returned.
    """
    L = validate_laplacian(L)
    n = L.shape[0]
    y0 = np.asarray(y0, dtype=float)
    if y0.shape != (n + 1,):
        raise ValueError(f"y0 must have length {n + 1} (hub state last), got shape {y0.shape}")
    graph = from_dependency_matrix(-L)
    if not has_spanning_in_tree(graph):
        raise ValueError(
            "dependency digraph has no spanning in-tree, so ordinary consensus "
            "does not exist and the comparison is void"
        )
    x0 = y0[:n]
    jbar = eigenprojection(L).matrix
    limit_vector = jbar @ x0
    ordinary = float(limit_vector.mean())
    column_sums = jbar.sum(axis=0)
    hub_weights = regularize.symmetric_hub_limit(L)[0]
    hub_value = float(hub_weights @ y0)
    agreement_state = float(column_sums @ x0 / n)
    return {
        "ordinary_consensus": ordinary,
        "hub_limit_consensus": hub_value,
        "hub_state": float(y0[-1]),
        "hub_state_for_agreement": agreement_state,
        "consensus_gap": abs(hub_value - ordinary),
    }
