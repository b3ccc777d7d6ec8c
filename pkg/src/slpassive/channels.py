"""Kraus channels acting on the first tensor factor of a bipartite system."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NotIsometry

COMPLETENESS_TOL = 1e-10


@dataclass(frozen=True)
class KrausSet:
    """Kraus operators stacked as an array of shape (n_k, d_c, d_c)."""

    ops: np.ndarray

    def __post_init__(self):
        ops = np.array(self.ops, dtype=complex)
        if ops.ndim == 2:
            ops = ops[None]
        if ops.ndim != 3 or ops.shape[1] != ops.shape[2]:
            raise DimensionMismatch(f"Kraus stack must be (n_k, d, d), got {ops.shape}")
        ops.setflags(write=False)
        object.__setattr__(self, "ops", ops)

    @property
    def dim(self) -> int:
        return self.ops.shape[1]

    @property
    def count(self) -> int:
        return self.ops.shape[0]

    # qubit element vectors: K_mu = [[s, t], [u, v]]
    @property
    def s(self) -> np.ndarray:
        return self.ops[:, 0, 0]

    @property
    def t(self) -> np.ndarray:
        return self.ops[:, 0, 1]

    @property
    def u(self) -> np.ndarray:
        return self.ops[:, 1, 0]

    @property
    def v(self) -> np.ndarray:
        return self.ops[:, 1, 1]

    def to_json(self) -> list:
        return [[[[float(z.real), float(z.imag)] for z in row] for row in k] for k in self.ops]

    @classmethod
    def from_json(cls, data) -> "KrausSet":
        arr = np.asarray(data, dtype=float)
        return cls(arr[..., 0] + 1j * arr[..., 1])


def completeness_violation(ks: KrausSet) -> float:
    gram = np.einsum("mji,mjk->ik", ks.ops.conj(), ks.ops)
    return float(np.max(np.abs(gram - np.eye(ks.dim))))


def validate(ks: KrausSet) -> dict:
    """Diagnostic report: completeness violation, validity, triviality.

    A channel is trivial when every Kraus operator is a multiple of the
    identity; such channels cannot change the energy of any state.
    """
    violation = completeness_violation(ks)
    d = ks.dim
    diag = np.trace(ks.ops, axis1=1, axis2=2) / d
    off = ks.ops - diag[:, None, None] * np.eye(d)
    trivial = bool(np.max(np.abs(off)) <= COMPLETENESS_TOL)
    report = {"violation": violation, "valid": violation <= COMPLETENESS_TOL, "trivial": trivial}
    if d == 2:
        s, t, u, v = ks.s, ks.t, ks.u, ks.v
        report["element_violation"] = float(
            max(
                abs(np.vdot(s, s) + np.vdot(u, u) - 1),
                abs(np.vdot(t, t) + np.vdot(v, v) - 1),
                abs(np.vdot(s, t) + np.vdot(u, v)),
            )
        )
    return report


def apply_local(ks: KrausSet, rho, dims: tuple[int, int]) -> np.ndarray:
    """sum_mu (K_mu (x) I) rho (K_mu (x) I)^dagger without forming Kronecker products."""
    rho = np.asarray(rho)
    dc, dr = dims
    if ks.dim != dc or rho.shape != (dc * dr, dc * dr):
        raise DimensionMismatch(f"channel dim {ks.dim} / state {rho.shape} vs dims {dims}")
    t = rho.reshape(dc, dr, dc, dr)
    out = np.einsum("mab,bscr,mdc->asdr", ks.ops, t, ks.ops.conj(), optimize=True)
    return out.reshape(dc * dr, dc * dr)


def to_stiefel(ks: KrausSet) -> np.ndarray:
    """Column-stack of the Kraus operators, shape (n_k * d_c, d_c)."""
    return ks.ops.reshape(ks.count * ks.dim, ks.dim).copy()


def from_stiefel(v, check: bool = True) -> KrausSet:
    v = np.asarray(v, dtype=complex)
    rows, d = v.shape
    if rows % d:
        raise DimensionMismatch(f"stack of shape {v.shape} is not a whole number of blocks")
    if check:
        err = float(np.max(np.abs(v.conj().T @ v - np.eye(d))))
        if err > COMPLETENESS_TOL:
            raise NotIsometry(f"V^H V deviates from identity by {err:.3e}")
    return KrausSet(v.reshape(rows // d, d, d))


def qr_isometry(a: np.ndarray) -> np.ndarray:
    """Q factor of a (batched) thin QR with the R diagonal made positive."""
    q, r = np.linalg.qr(a)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    ph = np.where(np.abs(d) > 0, d / np.where(np.abs(d) > 0, np.abs(d), 1), 1)
    return q * ph.conj()[..., None, :]


def random_stiefel(dc: int, nk: int, rng: np.random.Generator, batch: int | None = None) -> np.ndarray:
    shape = (nk * dc, dc) if batch is None else (batch, nk * dc, dc)
    g = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return qr_isometry(g)


def random_channel(dc: int, nk: int, seed: int) -> KrausSet:
    """Seeded random channel from the QR of a complex Gaussian stack."""
    if not 1 <= nk <= dc * dc:
        raise ValueError(f"need 1 <= n_k <= {dc * dc}, got {nk}")
    rng = np.random.default_rng(seed)
    return from_stiefel(random_stiefel(dc, nk, rng), check=False)


def unitary_y(phi: float) -> KrausSet:
    """Single Kraus operator exp(-i phi sigma^y)."""
    c, s = np.cos(phi), np.sin(phi)
    return KrausSet(np.array([[[c, -s], [s, c]]], dtype=complex))


def identity_channel(dc: int = 2) -> KrausSet:
    return KrausSet(np.eye(dc, dtype=complex)[None])


def reset_channel() -> KrausSet:
    """Qubit reset to |0>: Kraus operators |0><0| and |0><1|."""
    return KrausSet(np.array([[[1, 0], [0, 0]], [[0, 1], [0, 0]]], dtype=complex))
