"""Regularization families and their closed-form eigenprojections.

Four ways to restore consensus when the dependency digraph lacks a spanning
in-tree: a dummy hub with symmetric links, a hub subordinate to the agents,
uniform background links between agents, and discrete analogues (a hub added
to an opinion-pooling matrix, and PageRank-type damping).  Each family has a
rank-1 closed-form eigenprojection, exact in the link strength delta, which
is the primary output; eigenprojections of the assembled matrices exist only
as cross-checks.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .digraph import validate_laplacian
from .spectra import eigenprojection, require_absorbing_pair

__all__ = [
    "HubAugmentation",
    "BackgroundAugmentation",
    "DiscreteRegularization",
    "RegularizationSpec",
    "METHODS",
    "CONTINUOUS_METHODS",
    "DISCRETE_METHODS",
    "hub_augment",
    "hub_eigenprojection",
    "symmetric_hub_limit",
    "subordinate_hub_limit",
    "background_laplacian",
    "background_eigenprojection",
    "background_limit",
    "degroot_hub_matrix",
    "degroot_hub_eigenprojection",
    "degroot_hub_limit",
    "pagerank_matrix",
    "pagerank_power_limit",
    "pagerank_limit",
    "laplacian_pair_identity_residual",
    "require_row_stochastic",
    "require_distribution",
    "parse_regularization_spec",
    "serialize_regularization_spec",
]

METHODS = ("hub-symmetric", "hub-subordinate", "background", "degroot-hub", "pagerank")
CONTINUOUS_METHODS = ("hub-symmetric", "hub-subordinate", "background")
DISCRETE_METHODS = ("degroot-hub", "pagerank")


def require_distribution(v: np.ndarray, label: str = "v") -> np.ndarray:
    """Validate a probability vector: nonnegative entries summing to 1."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError(f"{label} must be a nonempty vector")
    if not np.isfinite(v).all() or (v < 0).any():
        raise ValueError(f"{label} must have finite nonnegative entries")
    if abs(v.sum() - 1.0) > 1e-12:
        raise ValueError(f"{label} must sum to 1, got {v.sum()!r}")
    return v


def require_row_stochastic(p: np.ndarray) -> np.ndarray:
    """Validate a row-stochastic matrix (row sums 1 within 1e-12, entries >= 0)."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise ValueError(f"stochastic matrix must be square, got shape {p.shape}")
    if not np.isfinite(p).all():
        raise ValueError("stochastic matrix contains non-finite entries")
    if (p < -1e-12).any():
        bad = np.argwhere(p < -1e-12)[0]
        raise ValueError(f"entry ({bad[0] + 1},{bad[1] + 1}) = {p[bad[0], bad[1]]} is negative")
    sums = p.sum(axis=1)
    if (np.abs(sums - 1.0) > 1e-12).any():
        i = int(np.argmax(np.abs(sums - 1.0)))
        raise ValueError(f"row {i + 1} sums to {sums[i]}, expected 1")
    return p


def _stochastic_resolvent_row(a: np.ndarray, v: np.ndarray) -> np.ndarray:
    """v^T A^{-1} for a matrix A with unit row sums, by a single linear solve.

    Since A 1 = 1 exactly, the result must sum to sum(v); the computed row is
    rescaled onto that constraint, which the solve loses when A is badly
    conditioned (small delta).
    """
    y = np.linalg.solve(a.T, v)
    target = v.sum()
    total = y.sum()
    # Only correct small conditioning drift; a grossly wrong solve should
    # surface downstream, not be rescaled into plausibility.
    if target > 0 and abs(total - target) <= 0.1 * max(1.0, target):
        y *= target / total
    return y


def _resolvent_row(L: np.ndarray, delta: float, v: np.ndarray) -> np.ndarray:
    """v^T (I + L/delta)^{-1} computed by a single linear solve."""
    n = L.shape[0]
    return _stochastic_resolvent_row(np.eye(n) + L / delta, v)


def _rank_one(row: np.ndarray, rows: int) -> np.ndarray:
    # Tiling guarantees bitwise-identical rows.
    return np.tile(row, (rows, 1))


@dataclass(frozen=True)
class HubAugmentation:
    """A dummy (n+1)-st agent: influences every agent with strength ``delta``
    and depends on agent i with strength ``v[i]``."""

    base: np.ndarray
    delta: float
    v: np.ndarray

    def __post_init__(self) -> None:
        base = validate_laplacian(self.base)
        delta = float(self.delta)
        if not math.isfinite(delta) or delta <= 0:
            raise ValueError(f"delta must be positive, got {self.delta!r}")
        v = np.asarray(self.v, dtype=float)
        if v.shape != (base.shape[0],):
            raise ValueError(f"v must have length {base.shape[0]}, got shape {v.shape}")
        if not np.isfinite(v).all() or (v < 0).any():
            raise ValueError("v must have finite nonnegative entries")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "v", v)

    @property
    def n(self) -> int:
        return self.base.shape[0]

    @property
    def s(self) -> float:
        """Total strength of the agents' influence on the hub."""
        return float(self.v.sum())

    @property
    def is_symmetric(self) -> bool:
        """True when every agent->hub strength equals the hub->agent strength."""
        return bool(np.all(self.v == self.delta))


def hub_augment(h: HubAugmentation) -> np.ndarray:
    """Laplacian of the hub-augmented system, assembled blockwise:
    [[L + delta I, -delta 1], [-v^T, s]]."""
    n = h.n
    out = np.zeros((n + 1, n + 1))
    out[:n, :n] = h.base + h.delta * np.eye(n)
    out[:n, n] = -h.delta
    out[n, :n] = -h.v
    out[n, n] = h.s
    return validate_laplacian(out)


def hub_eigenprojection(h: HubAugmentation) -> np.ndarray:
    """Closed-form eigenprojection of the hub-augmented Laplacian.

    Rank 1 with every row equal to (1/(s+delta)) [v^T (I + L/delta)^{-1}, delta].
    When the hub links are symmetric (v = delta 1) the row is assembled as
    (1/(n+1)) [1^T (I + L/delta)^{-1}, 1], making the hub weight exactly
    1/(n+1) irrespective of delta.
    """
    n = h.n
    if h.is_symmetric:
        agent_part = _resolvent_row(h.base, h.delta, np.ones(n))
        row = np.append(agent_part, 1.0) / (n + 1)
    else:
        agent_part = _resolvent_row(h.base, h.delta, h.v)
        row = np.append(agent_part, h.delta) / (h.s + h.delta)
    return _rank_one(row, n + 1)


def symmetric_hub_limit(L: np.ndarray) -> np.ndarray:
    """Vanishing-delta limit of the symmetric-hub eigenprojection.

    Every row equals (1/(n+1)) [column sums of the eigenprojection of L, 1]:
    the hub keeps weight 1/(n+1) even as its links evaporate.
    """
    L = validate_laplacian(L)
    n = L.shape[0]
    jbar = eigenprojection(L).matrix
    row = np.append(jbar.sum(axis=0), 1.0) / (n + 1)
    return _rank_one(row, n + 1)


def subordinate_hub_limit(L: np.ndarray, vtilde: np.ndarray) -> np.ndarray:
    """Vanishing-delta limit when the hub is subordinate to the agents
    (its influence vanishes faster than theirs: delta/s -> 0).

    Every row equals [vtilde^T Jbar, 0]; the hub's initial state carries no
    weight, which is what makes the consensus latent.
    """
    L = validate_laplacian(L)
    vtilde = require_distribution(vtilde, "vtilde")
    if vtilde.shape != (L.shape[0],):
        raise ValueError(f"vtilde must have length {L.shape[0]}, got shape {vtilde.shape}")
    jbar = eigenprojection(L).matrix
    row = np.append(vtilde @ jbar, 0.0)
    return _rank_one(row, L.shape[0] + 1)


@dataclass(frozen=True)
class BackgroundAugmentation:
    """Complete background links: agent i influences every other agent with
    strength ``delta * v[i]``, v a distribution over agents."""

    base: np.ndarray
    delta: float
    v: np.ndarray

    def __post_init__(self) -> None:
        base = validate_laplacian(self.base)
        delta = float(self.delta)
        if not math.isfinite(delta) or delta <= 0:
            raise ValueError(f"delta must be positive, got {self.delta!r}")
        v = require_distribution(self.v)
        if v.shape != (base.shape[0],):
            raise ValueError(f"v must have length {base.shape[0]}, got shape {v.shape}")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "v", v)

    @property
    def n(self) -> int:
        return self.base.shape[0]


def background_laplacian(b: BackgroundAugmentation) -> np.ndarray:
    """L + delta (I - 1 v^T); with uniform v this adds the complete digraph
    with arc weights delta/n."""
    n = b.n
    return validate_laplacian(b.base + b.delta * (np.eye(n) - np.outer(np.ones(n), b.v)))


def background_eigenprojection(b: BackgroundAugmentation) -> np.ndarray:
    """Closed-form eigenprojection of the background-augmented Laplacian:
    rank 1 with every row equal to v^T (I + L/delta)^{-1}."""
    row = _resolvent_row(b.base, b.delta, b.v)
    return _rank_one(row, b.n)


def background_limit(L: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Vanishing-delta limit of the background eigenprojection: rows v^T Jbar."""
    L = validate_laplacian(L)
    v = require_distribution(v)
    if v.shape != (L.shape[0],):
        raise ValueError(f"v must have length {L.shape[0]}, got shape {v.shape}")
    jbar = eigenprojection(L).matrix
    return _rank_one(v @ jbar, L.shape[0])


@dataclass(frozen=True)
class DiscreteRegularization:
    """Regularization data for iterative pooling: a row-stochastic P,
    damping delta in (0, 1], and a distribution v over agents."""

    P: np.ndarray
    delta: float
    v: np.ndarray

    def __post_init__(self) -> None:
        p = require_row_stochastic(self.P)
        delta = float(self.delta)
        if not (0.0 < delta <= 1.0):
            raise ValueError(f"delta must lie in (0, 1], got {self.delta!r}")
        v = require_distribution(self.v)
        if v.shape != (p.shape[0],):
            raise ValueError(f"v must have length {p.shape[0]}, got shape {v.shape}")
        object.__setattr__(self, "P", p)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "v", v)

    @property
    def n(self) -> int:
        return self.P.shape[0]

    @property
    def gamma(self) -> float:
        return 1.0 / self.delta - 1.0


def _require_positive_v(v: np.ndarray) -> None:
    # Regularity of the augmented chain needs every agent to reach the hub.
    if (v <= 0).any():
        i = int(np.argmin(v))
        raise ValueError(
            f"v[{i + 1}] = {v[i]} is not strictly positive; a zero entry breaks "
            f"the regularity of the hub-augmented pooling matrix"
        )


def degroot_hub_matrix(d: DiscreteRegularization) -> np.ndarray:
    """Hub-augmented pooling matrix [[(1-delta) P, delta 1], [v^T, 0]].

    Row-stochastic of order n+1 and regular when v > 0 componentwise, so its
    powers converge.
    """
    _require_positive_v(d.v)
    n = d.n
    q = np.zeros((n + 1, n + 1))
    q[:n, :n] = (1.0 - d.delta) * d.P
    q[:n, n] = d.delta
    q[n, :n] = d.v
    return q


def degroot_hub_eigenprojection(d: DiscreteRegularization) -> np.ndarray:
    """Limit of the powers of the hub-augmented pooling matrix.

    Rank 1 of order n+1; every row equals
    (1/(1+delta)) [v^T (I + gamma (I - P))^{-1}, delta] with gamma = 1/delta - 1.
    """
    _require_positive_v(d.v)
    n = d.n
    eye = np.eye(n)
    agent_part = _stochastic_resolvent_row(eye + d.gamma * (eye - d.P), d.v)
    row = np.append(agent_part, d.delta) / (1.0 + d.delta)
    return _rank_one(row, n + 1)


def degroot_hub_limit(P: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Vanishing-delta limit of the hub-augmented pooling process:
    rows [v^T (I - P)^eigenprojection, 0]."""
    P = require_row_stochastic(P)
    v = require_distribution(v)
    if v.shape != (P.shape[0],):
        raise ValueError(f"v must have length {P.shape[0]}, got shape {v.shape}")
    _require_positive_v(v)
    jbar = eigenprojection(np.eye(P.shape[0]) - P).matrix
    row = np.append(v @ jbar, 0.0)
    return _rank_one(row, P.shape[0] + 1)


def pagerank_matrix(d: DiscreteRegularization) -> np.ndarray:
    """Damped pooling matrix (1-delta) P + delta 1 v^T."""
    return (1.0 - d.delta) * d.P + d.delta * np.outer(np.ones(d.n), d.v)


def pagerank_power_limit(d: DiscreteRegularization) -> np.ndarray:
    """Limit of the powers of the damped matrix: rank 1 with every row equal
    to the stationary distribution v^T (I + gamma (I - P))^{-1}."""
    eye = np.eye(d.n)
    row = _stochastic_resolvent_row(eye + d.gamma * (eye - d.P), d.v)
    return _rank_one(row, d.n)


def pagerank_limit(P: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Vanishing-delta limit of the damped pooling process: rows
    v^T (I - P)^eigenprojection."""
    P = require_row_stochastic(P)
    v = require_distribution(v)
    if v.shape != (P.shape[0],):
        raise ValueError(f"v must have length {P.shape[0]}, got shape {v.shape}")
    jbar = eigenprojection(np.eye(P.shape[0]) - P).matrix
    return _rank_one(v @ jbar, P.shape[0])


def laplacian_pair_identity_residual(A: np.ndarray, C: np.ndarray, delta: float) -> float:
    """Residual of the closed-form identity
    (A + delta C)^eigenprojection = (I - C)(I + A/delta)^{-1}
    for Laplacian A, C with AC = A and C^2 = C (checked)."""
    A = validate_laplacian(A)
    C = validate_laplacian(C)
    delta = float(delta)
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta!r}")
    require_absorbing_pair(A, C)
    n = A.shape[0]
    eye = np.eye(n)
    lhs = eigenprojection(A + delta * C).matrix
    rhs = np.linalg.solve((eye + A / delta).T, (eye - C).T).T
    return float(np.abs(lhs - rhs).max())


@dataclass(frozen=True)
class RegularizationSpec:
    """Which regularization to apply: method name, link strength delta
    (None means the vanishing-delta limit), and influence vector."""

    method: str
    delta: float | None = None
    v: np.ndarray | None = None
    vtilde: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.delta is not None:
            delta = float(self.delta)
            if not math.isfinite(delta) or delta <= 0:
                raise ValueError(f"delta must be positive or null, got {self.delta!r}")
            if self.method in DISCRETE_METHODS and delta > 1.0:
                raise ValueError(f"delta must lie in (0, 1] for {self.method}, got {delta}")
            object.__setattr__(self, "delta", delta)
        if self.method == "hub-symmetric":
            if self.v is not None or self.vtilde is not None:
                raise ValueError("hub-symmetric fixes v = delta 1; leave v and vtilde null")
        elif self.method == "hub-subordinate":
            if self.v is not None:
                raise ValueError("hub-subordinate takes vtilde, not v")
            if self.vtilde is not None:
                object.__setattr__(self, "vtilde", require_distribution(self.vtilde, "vtilde"))
        else:
            if self.vtilde is not None:
                raise ValueError(f"{self.method} takes v, not vtilde")
            if self.v is not None:
                object.__setattr__(self, "v", require_distribution(self.v))


def parse_regularization_spec(text: str) -> RegularizationSpec:
    """Parse the regularization-spec JSON:
    {"method": ..., "delta": number|null, "v": [...]|null, "vtilde": [...]|null}."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed spec JSON: {exc}") from exc
    if not isinstance(data, dict) or "method" not in data:
        raise ValueError("spec JSON must be an object with a 'method' key")
    extra = set(data) - {"method", "delta", "v", "vtilde"}
    if extra:
        raise ValueError(f"unknown spec keys: {sorted(extra)}")
    v = data.get("v")
    vtilde = data.get("vtilde")
    return RegularizationSpec(
        method=data["method"],
        delta=data.get("delta"),
        v=None if v is None else np.asarray(v, dtype=float),
        vtilde=None if vtilde is None else np.asarray(vtilde, dtype=float),
    )


def serialize_regularization_spec(spec: RegularizationSpec) -> str:
    return json.dumps(
        {
            "method": spec.method,
            "delta": spec.delta,
            "v": None if spec.v is None else [float(x) for x in spec.v],
            "vtilde": None if spec.vtilde is None else [float(x) for x in spec.vtilde],
        }
    )
