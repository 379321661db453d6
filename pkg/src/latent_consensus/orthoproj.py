"""Latent consensus by orthogonal projection of the initial state.

Instead of perturbing the link structure, project the initial state
orthogonally onto the consensus subspace T = { x : Jbar x is a constant
vector } (the states from which the unregularized protocol already reaches
consensus), then take the ordinary limit.  The resulting weights are the
rows of Jbar S, where S is the orthogonal projector onto T.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .digraph import validate_laplacian
from .protocols import ConsensusReport
from .spectra import eigenprojection

__all__ = [
    "ConsensusSubspace",
    "consensus_subspace",
    "orthogonal_projector",
    "orthoproj_consensus",
]

# Whether Jbar S has identical rows for every Laplacian is asserted as a
# runtime diagnostic, not assumed.
ROW_AGREEMENT_TOL = 1e-10


@dataclass(frozen=True)
class ConsensusSubspace:
    """Orthonormal basis (columns) of the consensus subspace of a system."""

    basis: np.ndarray

    def __post_init__(self) -> None:
        basis = np.asarray(self.basis, dtype=float)
        if basis.ndim != 2:
            raise ValueError("basis must be a 2-d array of column vectors")
        gram = basis.T @ basis
        if np.abs(gram - np.eye(basis.shape[1])).max() > 1e-12:
            raise ValueError("basis columns must be orthonormal")
        object.__setattr__(self, "basis", basis)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


def consensus_subspace(jbar: np.ndarray) -> ConsensusSubspace:
    """Consensus subspace T = { x : Jbar x lies in span(1) }.

    Computed as the null space of (I - averaging) Jbar, the operator mapping
    x to the deviation of Jbar x from its component mean.  The all-ones
    vector always belongs to T since Jbar is row-stochastic.
    """
    jbar = np.asarray(jbar, dtype=float)
    if jbar.ndim != 2 or jbar.shape[0] != jbar.shape[1]:
        raise ValueError(f"matrix must be square, got shape {jbar.shape}")
    n = jbar.shape[0]
    if np.abs(jbar @ jbar - jbar).max() > 1e-8:
        raise ValueError("matrix is not idempotent; expected an eigenprojection")
    if np.abs(jbar.sum(axis=1) - 1.0).max() > 1e-10:
        raise ValueError("matrix is not row-stochastic; expected an eigenprojection")
    deviation = jbar - np.full((n, n), 1.0 / n) @ jbar
    _, s, vh = np.linalg.svd(deviation)
    # Directions whose image under the projection is constant within
    # ROW_AGREEMENT_TOL belong to the subspace by definition, so that is the
    # absolute rank floor; it also absorbs the error a weakly connected
    # system (tiny spectral gap) leaves in a numerically computed jbar.
    tol = max(ROW_AGREEMENT_TOL, n * np.finfo(float).eps * (s[0] if s.size else 0.0))
    rank = int(np.count_nonzero(s > tol))
    basis = vh[rank:].T
    subspace = ConsensusSubspace(basis=basis)
    ones = np.ones(n)
    if np.abs(basis @ (basis.T @ ones) - ones).max() > 1e-10:
        raise RuntimeError("consensus subspace lost the all-ones vector")
    return subspace


def orthogonal_projector(T: ConsensusSubspace) -> np.ndarray:
    """Orthogonal projector S = B B^T onto the subspace; symmetric idempotent."""
    s = T.basis @ T.basis.T
    return (s + s.T) / 2.0


def orthoproj_consensus(L: np.ndarray, x0: np.ndarray) -> ConsensusReport:
    """Consensus weights Jbar S for the orthogonal-projection method.

    The rows of Jbar S are expected to agree; their spread is reported as
    the ``row_agreement`` diagnostic, and the consensus value is withheld
    if they do not.  Weights sum to 1 but may be negative.
    """
    L = validate_laplacian(L)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (L.shape[0],):
        raise ValueError(f"x0 must have length {L.shape[0]}, got shape {x0.shape}")
    jbar = eigenprojection(L).matrix
    subspace = consensus_subspace(jbar)
    s = orthogonal_projector(subspace)
    limit = jbar @ s
    weights = limit.mean(axis=0)
    row_agreement = float(np.abs(limit - weights).max())
    diagnostics = {
        "row_agreement": row_agreement,
        "projector_idempotency": float(np.abs(s @ s - s).max()),
        "subspace_dim": float(subspace.dim),
    }
    value = float(weights @ x0) if row_agreement <= ROW_AGREEMENT_TOL else None
    return ConsensusReport(
        method="orthoproj",
        weights=weights,
        value=value,
        diagnostics=diagnostics,
        delta_used=None,
    )
