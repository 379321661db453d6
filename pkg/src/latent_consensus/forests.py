"""Brute-force enumeration of spanning in-forests.

An in-forest is a cycle-free arc subset with out-degree at most one at every
vertex; each of its trees has a single sink (root).  The weight of a forest
is the product of its arc weights (1 for the empty forest).  Enumerating the
maximum in-forests gives a combinatorial oracle for the Laplacian
eigenprojection: the matrix of normalized maximum in-forest weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .digraph import WeightedDigraph

__all__ = [
    "DEFAULT_ENUMERATION_CAP",
    "EnumerationCapError",
    "ForestSummary",
    "enumerate_in_forests",
    "max_forest_matrix",
    "parametric_forest_matrix",
]

# Enumeration is super-exponential in n; the oracle only needs small graphs.
DEFAULT_ENUMERATION_CAP = 8


class EnumerationCapError(ValueError):
    """Raised when a graph is too large for exhaustive forest enumeration."""


@dataclass(frozen=True)
class ForestSummary:
    """Aggregate weights of the maximum in-forests of a digraph.

    ``f`` is the total weight of all maximum in-forests and ``f_ks[k, s]``
    the total weight of those in which vertex k+1 lies in the tree rooted at
    vertex s+1.  Every vertex belongs to exactly one tree per forest, so each
    row of ``f_ks`` sums to ``f``.
    """

    n: int
    max_arcs: int
    f: float
    f_ks: np.ndarray


def enumerate_in_forests(g: WeightedDigraph, cap: int = DEFAULT_ENUMERATION_CAP) -> ForestSummary:
    """Exhaustively enumerate the maximum in-forests of ``g``.

    Iterates over all assignments vertex -> (chosen out-arc or none), pruning
    assignments that close a cycle, and aggregates the weights of the
    forests with the greatest arc count.
    """
    n = g.n
    if n > cap:
        raise EnumerationCapError(
            f"forest enumeration requires n <= {cap}, got n = {n}; "
            f"pass a larger cap to override"
        )
    out_arcs = g.out_arcs()

    # choice[v]: -2 unassigned, -1 no out-arc, >= 0 chosen target.
    choice = [-2] * n
    best = {"max_arcs": 0, "f": 0.0, "f_ks": np.zeros((n, n))}

    def record(count: int, weight: float) -> None:
        if count > best["max_arcs"]:
            best["max_arcs"] = count
            best["f"] = 0.0
            best["f_ks"] = np.zeros((n, n))
        if count == best["max_arcs"]:
            best["f"] += weight
            f_ks = best["f_ks"]
            for k in range(n):
                cur = k
                while choice[cur] >= 0:
                    cur = choice[cur]
                f_ks[k, cur] += weight

    def creates_cycle(v: int, j: int) -> bool:
        cur = j
        while True:
            if cur == v:
                return True
            nxt = choice[cur]
            if nxt < 0:
                return False
            cur = nxt

    def extend(v: int, count: int, weight: float) -> None:
        if v == n:
            record(count, weight)
            return
        choice[v] = -1
        extend(v + 1, count, weight)
        for j, w in out_arcs[v]:
            if not creates_cycle(v, j):
                choice[v] = j
                extend(v + 1, count + 1, weight * w)
        choice[v] = -2

    extend(0, 0, 1.0)
    return ForestSummary(n=n, max_arcs=best["max_arcs"], f=best["f"], f_ks=best["f_ks"])


def max_forest_matrix(g: WeightedDigraph, cap: int = DEFAULT_ENUMERATION_CAP) -> np.ndarray:
    """Normalized matrix of maximum in-forests, f_ks / f.

    Row-stochastic with entries in [0, 1]; equals the eigenprojection of the
    graph Laplacian at eigenvalue 0.
    """
    summary = enumerate_in_forests(g, cap=cap)
    return summary.f_ks / summary.f


def parametric_forest_matrix(L: np.ndarray, tau: float) -> np.ndarray:
    """Resolvent-type forest matrix (I + tau L)^{-1} for a Laplacian L.

    By the matrix forest theorem its entries are normalized tau-weighted
    in-forest sums, so the result is row-stochastic with entries in [0, 1]
    and converges to the maximum in-forest matrix as tau grows.
    """
    from .digraph import validate_laplacian

    L = validate_laplacian(L)
    tau = float(tau)
    if not np.isfinite(tau) or tau <= 0:
        raise ValueError(f"tau must be a positive real, got {tau!r}")
    n = L.shape[0]
    try:
        return np.linalg.solve(np.eye(n) + tau * L, np.eye(n))
    except np.linalg.LinAlgError as exc:  # pragma: no cover - impossible for Laplacians
        raise RuntimeError(f"internal inversion error for I + tau L: {exc}") from exc
