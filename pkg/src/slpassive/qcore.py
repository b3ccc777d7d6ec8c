"""Dense complex linear algebra: eigendecomposition, Kronecker products,
partial traces and Schmidt decompositions.

Matrices are plain ``numpy`` complex arrays; energies are dimensionless
(hbar = k_B = 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .errors import DimensionMismatch, NonHermitian, NonSquare, NotNormalized

HERMITIAN_TOL = 1e-12
SCHMIDT_ZERO = 1e-9
DEGENERACY_RTOL = 1e-9

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)


def allclose(a, b, atol: float) -> bool:
    """Entrywise comparison with an explicit absolute tolerance only."""
    a = np.asarray(a)
    b = np.asarray(b)
    return a.shape == b.shape and bool(np.all(np.abs(a - b) <= atol))


def fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so that its largest-magnitude entry is real positive."""
    vectors = np.array(vectors, copy=True)
    idx = np.argmax(np.abs(vectors), axis=0)
    pivots = vectors[idx, np.arange(vectors.shape[1])]
    vectors /= pivots / np.abs(pivots)
    return vectors


@dataclass(frozen=True)
class HermitianOperator:
    """A Hermitian matrix together with its ascending spectral decomposition."""

    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def projector(self, k: int) -> np.ndarray:
        v = self.eigenvectors[:, k]
        return np.outer(v, v.conj())

    def mixture(self, populations) -> np.ndarray:
        """Density matrix sum_k p_k |E_k><E_k|."""
        p = np.asarray(populations, dtype=float)
        u = self.eigenvectors
        return (u * p) @ u.conj().T

    def clusters(self, rtol: float = DEGENERACY_RTOL) -> list[list[int]]:
        """Group indices of eigenvalues that coincide within rtol * max|E|."""
        e = self.eigenvalues
        scale = rtol * max(1.0, float(np.max(np.abs(e))))
        groups = [[0]]
        for k in range(1, len(e)):
            if e[k] - e[groups[-1][-1]] <= scale:
                groups[-1].append(k)
            else:
                groups.append([k])
        return groups


def eig_hermitian(m) -> HermitianOperator:
    m = np.asarray(m)
    m = m.astype(complex if np.iscomplexobj(m) else float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NonSquare(f"expected a square matrix, got shape {m.shape}")
    asym = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
    if asym > HERMITIAN_TOL:
        raise NonHermitian(asym)
    m = 0.5 * (m + m.conj().T)
    w, v = np.linalg.eigh(m)
    m.setflags(write=False)
    v = fix_phases(v)
    w.setflags(write=False)
    v.setflags(write=False)
    return HermitianOperator(matrix=m, eigenvalues=w, eigenvectors=v)


def kron(*factors) -> np.ndarray:
    """Kronecker product of any number of factors, left to right."""
    return reduce(np.kron, [np.asarray(f, dtype=complex) for f in factors])


def partial_trace(m, dims: tuple[int, int], keep: int = 0) -> np.ndarray:
    """Trace out one factor of a bipartite operator; ``keep`` is 0 or 1."""
    m = np.asarray(m)
    dc, dr = dims
    if m.shape != (dc * dr, dc * dr):
        raise DimensionMismatch(f"operator shape {m.shape} does not match dims {dims}")
    t = m.reshape(dc, dr, dc, dr)
    if keep == 0:
        return np.einsum("arbr->ab", t)
    if keep == 1:
        return np.einsum("rarb->ab", t)
    raise ValueError("keep must be 0 or 1")


@dataclass(frozen=True)
class SchmidtForm:
    coefficients: np.ndarray
    left: np.ndarray
    right: np.ndarray

    @property
    def rank(self) -> int:
        return int(np.sum(self.coefficients > SCHMIDT_ZERO))

    def reconstruct(self) -> np.ndarray:
        return np.einsum("s,is,js->ij", np.sqrt(self.coefficients), self.left, self.right).ravel()


def schmidt(state, dims: tuple[int, int]) -> SchmidtForm:
    """Schmidt decomposition via SVD of the reshaped amplitude matrix.

    ``coefficients`` are the squared singular values q_s (they sum to 1);
    ``left[:, s]`` and ``right[:, s]`` are |c_s> and |r_s>.
    """
    psi = np.asarray(state, dtype=complex).ravel()
    dc, dr = dims
    if psi.size != dc * dr:
        raise DimensionMismatch(f"state of size {psi.size} does not match dims {dims}")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-10:
        raise NotNormalized(f"state norm {norm!r} differs from 1")
    u, s, vh = np.linalg.svd(psi.reshape(dc, dr), full_matrices=False)
    return SchmidtForm(coefficients=s**2, left=u, right=vh.T)


def ground_state_classify(h: HermitianOperator, dims: tuple[int, int], level: int = 0) -> dict:
    """Check the two threshold hypotheses for eigenstate ``level`` (0 = ground).

    Returns nondegenerate / fully_entangled flags, the gap to the nearest
    level, and the Schmidt coefficients of that eigenvector.
    """
    if dims[0] * dims[1] != h.dim:
        raise DimensionMismatch(f"dims {dims} do not factor dimension {h.dim}")
    e = h.eigenvalues
    neighbours = [j for j in (level - 1, level + 1) if 0 <= j < h.dim]
    gap = min(abs(e[j] - e[level]) for j in neighbours) if neighbours else np.inf
    nondegenerate = bool(gap > DEGENERACY_RTOL * max(1.0, abs(e[level])))
    form = schmidt(h.eigenvectors[:, level], dims)
    fully = form.rank == min(dims)
    return {
        "nondegenerate": nondegenerate,
        "fully_entangled": bool(fully),
        "gap": float(gap),
        "schmidt": form.coefficients.tolist(),
    }
