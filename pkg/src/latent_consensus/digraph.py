"""Weighted dependency digraphs: JSON I/O, Laplacian construction, reachability.

An arc (i, j, w) records that agent i depends on agent j with strength w > 0.
Vertex indices are 1-based, matching the on-disk JSON format
``{"n": <int>, "arcs": [[from, to, weight], ...]}``.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass

import numpy as np

__all__ = [
    "GraphFormatError",
    "NotLaplacianError",
    "WeightedDigraph",
    "parse_digraph",
    "serialize_digraph",
    "from_dependency_matrix",
    "random_digraph",
    "laplacian",
    "validate_laplacian",
    "has_spanning_in_tree",
]


class GraphFormatError(ValueError):
    """Raised when serialized graph data violates the graph JSON schema."""


class NotLaplacianError(ValueError):
    """Raised when a matrix fails the Laplacian class conditions."""


@dataclass(frozen=True)
class WeightedDigraph:
    """Immutable weighted digraph with positive arc weights, no self-loops.

    Arcs are normalized to a canonical (from, to) sort order at construction,
    so two graphs with the same arc set compare equal.
    """

    n: int
    arcs: tuple[tuple[int, int, float], ...]

    def __post_init__(self) -> None:
        if not isinstance(self.n, int) or self.n < 1:
            raise GraphFormatError(f"vertex count must be a positive integer, got {self.n!r}")
        seen: set[tuple[int, int]] = set()
        normalized = []
        for arc in self.arcs:
            if len(arc) != 3:
                raise GraphFormatError(f"arc must be (from, to, weight), got {arc!r}")
            i, j, w = arc
            if not isinstance(i, int) or not isinstance(j, int):
                raise GraphFormatError(f"arc endpoints must be integers, got {arc!r}")
            if not (1 <= i <= self.n) or not (1 <= j <= self.n):
                raise GraphFormatError(f"arc ({i},{j}) has a vertex index outside 1..{self.n}")
            if i == j:
                raise GraphFormatError(f"self-loop ({i},{i}) is not allowed")
            w = float(w)
            if not np.isfinite(w) or w <= 0.0:
                raise GraphFormatError(f"arc ({i},{j}) must have a finite positive weight, got {w!r}")
            if (i, j) in seen:
                raise GraphFormatError(f"duplicate arc ({i},{j})")
            seen.add((i, j))
            normalized.append((i, j, w))
        normalized.sort(key=lambda a: (a[0], a[1]))
        object.__setattr__(self, "arcs", tuple(normalized))

    def dependency_matrix(self) -> np.ndarray:
        """Dense matrix A with A[i-1, j-1] = weight of arc (i, j)."""
        a = np.zeros((self.n, self.n))
        for i, j, w in self.arcs:
            a[i - 1, j - 1] = w
        return a

    def out_arcs(self) -> list[list[tuple[int, float]]]:
        """Per-vertex list of (target, weight), 0-based."""
        out: list[list[tuple[int, float]]] = [[] for _ in range(self.n)]
        for i, j, w in self.arcs:
            out[i - 1].append((j - 1, w))
        return out


def parse_digraph(text: str) -> WeightedDigraph:
    """Parse the graph JSON format into a :class:`WeightedDigraph`.

    Rejects malformed JSON, unknown keys, non-positive weights, out-of-range
    or duplicate arcs, and self-loops.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"malformed graph JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise GraphFormatError("graph JSON must be an object with keys 'n' and 'arcs'")
    extra = set(data) - {"n", "arcs"}
    if extra:
        raise GraphFormatError(f"unknown graph keys: {sorted(extra)}")
    if "n" not in data or "arcs" not in data:
        raise GraphFormatError("graph JSON must contain both 'n' and 'arcs'")
    n = data["n"]
    if isinstance(n, bool) or not isinstance(n, int):
        raise GraphFormatError(f"'n' must be an integer, got {n!r}")
    arcs_raw = data["arcs"]
    if not isinstance(arcs_raw, list):
        raise GraphFormatError("'arcs' must be a list of [from, to, weight] triples")
    arcs = []
    for entry in arcs_raw:
        if not isinstance(entry, list) or len(entry) != 3:
            raise GraphFormatError(f"arc entry {entry!r} is not a [from, to, weight] triple")
        i, j, w = entry
        if isinstance(i, bool) or isinstance(j, bool) or not isinstance(i, int) or not isinstance(j, int):
            raise GraphFormatError(f"arc endpoints must be integers, got {entry!r}")
        if not isinstance(w, (int, float)):
            raise GraphFormatError(f"arc weight must be a number, got {entry!r}")
        arcs.append((i, j, float(w)))
    return WeightedDigraph(n=n, arcs=tuple(arcs))


def serialize_digraph(g: WeightedDigraph) -> str:
    """Canonical JSON for a graph; arcs sorted by (from, to).

    ``parse_digraph(serialize_digraph(g)) == g`` for every valid graph.
    """
    arcs = [[i, j, w] for i, j, w in g.arcs]
    return json.dumps({"n": g.n, "arcs": arcs})


def from_dependency_matrix(a: np.ndarray) -> WeightedDigraph:
    """Build a graph from a dependency matrix, ignoring the diagonal.

    Strictly positive off-diagonal entries become arcs; zeros are absent
    arcs.  Negative off-diagonal entries are rejected since they cannot be
    influence strengths.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise GraphFormatError(f"dependency matrix must be square, got shape {a.shape}")
    n = a.shape[0]
    arcs = []
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            w = a[i, j]
            if w < 0:
                raise GraphFormatError(
                    f"dependency matrix entry ({i + 1},{j + 1}) = {w} is negative"
                )
            if w > 0:
                arcs.append((i + 1, j + 1, float(w)))
    return WeightedDigraph(n=n, arcs=tuple(arcs))


def random_digraph(n: int, seed: int, p: float = 0.4) -> WeightedDigraph:
    """Seeded Erdos-Renyi-style digraph: each ordered pair (i, j), i != j,
    gets an arc with probability ``p`` and weight uniform in (0, 2]."""
    rng = np.random.default_rng(seed)
    arcs = []
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i == j:
                continue
            if rng.random() < p:
                arcs.append((i, j, float(2.0 * (1.0 - rng.random()))))
    return WeightedDigraph(n=n, arcs=tuple(arcs))


def laplacian(g: WeightedDigraph) -> np.ndarray:
    """Laplacian L = diag(A 1) - A of the dependency digraph.

    Row i has diagonal entry sum_j a_ij and off-diagonal entries -a_ij, so
    every row sums to zero and off-diagonal entries are nonpositive.
    """
    a = g.dependency_matrix()
    return np.diag(a.sum(axis=1)) - a


def validate_laplacian(m: np.ndarray) -> np.ndarray:
    """Check the Laplacian class conditions and return the matrix as float64.

    Conditions: square, finite, nonpositive off-diagonal entries, and zero
    row sums within ``1e-12 * n * max|entry|``.  The first violated row or
    entry is reported.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotLaplacianError(f"matrix must be square, got shape {m.shape}")
    if not np.isfinite(m).all():
        bad = np.argwhere(~np.isfinite(m))[0]
        raise NotLaplacianError(f"entry ({bad[0] + 1},{bad[1] + 1}) is not finite")
    n = m.shape[0]
    scale = float(np.abs(m).max()) if m.size else 0.0
    off_tol = 1e-12 * scale
    for i in range(n):
        for j in range(n):
            if i != j and m[i, j] > off_tol:
                raise NotLaplacianError(
                    f"off-diagonal entry ({i + 1},{j + 1}) = {m[i, j]} is positive"
                )
    row_tol = 1e-12 * n * scale
    sums = m.sum(axis=1)
    for i in range(n):
        if abs(sums[i]) > row_tol:
            raise NotLaplacianError(f"row {i + 1} sums to {sums[i]}, expected 0")
    return m.copy()


def has_spanning_in_tree(g: WeightedDigraph) -> bool:
    """True iff some vertex is reachable, along arc direction, from every vertex."""
    reverse: list[list[int]] = [[] for _ in range(g.n)]
    for i, j, _ in g.arcs:
        reverse[j - 1].append(i - 1)
    for root in range(g.n):
        seen = [False] * g.n
        seen[root] = True
        queue = deque([root])
        count = 1
        while queue:
            u = queue.popleft()
            for v in reverse[u]:
                if not seen[v]:
                    seen[v] = True
                    count += 1
                    queue.append(v)
        if count == g.n:
            return True
    return False
