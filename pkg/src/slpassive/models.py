"""Hamiltonians and states for the spin systems studied here.

Basis convention: sigma^z |0> = +|0>, tensor order particle 1 (x) particle 2
(x) ..., and the distinguished subsystem is particle 1.  Temperatures are in
energy units and ``math.inf`` stands for infinite temperature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import qcore
from .errors import BadParameter, BadTemperature, CoherenceTooLarge, TooLarge

MAX_CHAIN = 12

_X = np.array([[0.0, 1.0], [1.0, 0.0]])
_Z = np.array([[1.0, 0.0], [0.0, -1.0]])
_I = np.eye(2)


@dataclass(frozen=True)
class SystemModel:
    """A Hamiltonian with a designated subsystem factor.

    ``labels`` is only set for two-spin pairs: the ascending-order indices of
    the eigenstates with energies (-m, -kappa, kappa, m), in that order.
    These coincide with (0, 1, 2, 3) unless kappa exceeds m.
    """

    kind: str
    params: dict
    hamiltonian: qcore.HermitianOperator = field(repr=False)
    dims: tuple[int, int]
    labels: tuple[int, ...] | None = None

    @property
    def dim(self) -> int:
        return self.hamiltonian.dim

    @property
    def energies(self) -> np.ndarray:
        return self.hamiltonian.eigenvalues

    @property
    def is_pair(self) -> bool:
        return self.labels is not None

    def classify(self, level: int = 0) -> dict:
        return qcore.ground_state_classify(self.hamiltonian, self.dims, level)

    def negated(self) -> "SystemModel":
        """Same system with H -> -H (ground and top states swap roles)."""
        return SystemModel(
            kind=self.kind,
            params={**self.params, "negated": not self.params.get("negated", False)},
            hamiltonian=qcore.eig_hermitian(-self.hamiltonian.matrix),
            dims=self.dims,
        )

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "params": dict(self.params),
            "dim": self.dim,
            "energies": [float(e) for e in self.energies],
        }


def _pair_matrix(kappa: float, gamma: float) -> np.ndarray:
    xx = np.kron(qcore.PAULI_X, qcore.PAULI_X)
    yy = np.kron(qcore.PAULI_Y, qcore.PAULI_Y)
    z1 = np.kron(qcore.PAULI_Z, qcore.IDENTITY_2)
    z2 = np.kron(qcore.IDENTITY_2, qcore.PAULI_Z)
    h = kappa * ((1 + gamma) / 2 * xx + (1 - gamma) / 2 * yy) + z1 + z2
    return h.real


def pair_m(kappa: float, gamma: float = 1.0) -> float:
    return math.sqrt(gamma * gamma * kappa * kappa + 4.0)


def _match_labels(energies: np.ndarray, targets) -> tuple[int, ...]:
    free = list(range(len(energies)))
    out = []
    for t in targets:
        j = min(free, key=lambda i: abs(energies[i] - t))
        free.remove(j)
        out.append(j)
    return tuple(out)


def build_pair(kappa: float, gamma: float = 1.0) -> SystemModel:
    """Two spins with anisotropic XY coupling in a transverse field."""
    if not kappa > 0:
        raise BadParameter(f"kappa must be positive, got {kappa!r}")
    if not 0.0 <= gamma <= 1.0:
        raise BadParameter(f"gamma must lie in [0, 1], got {gamma!r}")
    h = qcore.eig_hermitian(_pair_matrix(kappa, gamma))
    m = pair_m(kappa, gamma)
    labels = _match_labels(h.eigenvalues, (-m, -kappa, kappa, m))
    return SystemModel("pair", {"kappa": kappa, "gamma": gamma}, h, (2, 2), labels)


def build_xxx() -> SystemModel:
    xx = np.kron(qcore.PAULI_X, qcore.PAULI_X)
    yy = np.kron(qcore.PAULI_Y, qcore.PAULI_Y)
    zz = np.kron(qcore.PAULI_Z, qcore.PAULI_Z)
    return SystemModel("xxx", {}, qcore.eig_hermitian((xx + yy + zz).real), (2, 2))


def chain_matrix(n: int, kappa: float) -> np.ndarray:
    """kappa * sum_i X_i X_{i+1} + sum_i Z_i on a ring of n spins (n >= 3)."""
    dim = 2**n
    # bit (n-1-i) of the basis index is the state of particle i
    idx = np.arange(dim)
    bits = (idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    h = np.zeros((dim, dim))
    h[idx, idx] = np.sum(1 - 2 * bits, axis=1)
    for i in range(n):
        j = (i + 1) % n
        flipped = idx ^ (1 << (n - 1 - i)) ^ (1 << (n - 1 - j))
        h[flipped, idx] += kappa
    return h


def build_chain(n: int, kappa: float) -> SystemModel:
    """Closed transverse-field chain; n = 2 falls back to the single-bond pair."""
    if n < 2:
        raise BadParameter(f"chain needs n >= 2, got {n}")
    if n > MAX_CHAIN:
        raise TooLarge(f"chain length {n} exceeds the dense limit {MAX_CHAIN}")
    if not kappa > 0:
        raise BadParameter(f"kappa must be positive, got {kappa!r}")
    if n == 2:
        pair = build_pair(kappa, 1.0)
        return SystemModel("chain", {"n": 2, "kappa": kappa}, pair.hamiltonian, (2, 2), pair.labels)
    h = qcore.eig_hermitian(chain_matrix(n, kappa))
    return SystemModel("chain", {"n": n, "kappa": kappa}, h, (2, 2 ** (n - 1)))


def build_custom(energies, eigenbasis, dims: tuple[int, int]) -> SystemModel:
    """Hamiltonian sum_k E_k |v_k><v_k| from a user spectrum and unitary basis."""
    e = np.asarray(energies, dtype=float)
    u = np.asarray(eigenbasis, dtype=complex)
    if u.shape != (e.size, e.size) or dims[0] * dims[1] != e.size:
        raise BadParameter("energies, eigenbasis and dims are inconsistent")
    if not qcore.allclose(u.conj().T @ u, np.eye(e.size), 1e-10):
        raise BadParameter("eigenbasis is not unitary")
    h = qcore.eig_hermitian((u * e) @ u.conj().T)
    return SystemModel("custom", {"energies": e.tolist()}, h, tuple(dims))


@dataclass(frozen=True)
class Eigenmixture:
    """Populations over the ascending eigenbasis of ``model``."""

    model: SystemModel = field(repr=False)
    populations: np.ndarray

    @property
    def density(self) -> np.ndarray:
        return self.model.hamiltonian.mixture(self.populations)

    @property
    def deltas(self) -> tuple[float, float]:
        """(delta0, delta1): population differences of the (-m, m) and
        (-kappa, kappa) eigenstate pairs.  Pair systems only."""
        if not self.model.is_pair:
            raise BadParameter("deltas are defined for two-spin pair models only")
        a, b, c, d = self.model.labels
        p = self.populations
        return float(p[a] - p[d]), float(p[b] - p[c])


def eigenmixture(model: SystemModel, populations) -> Eigenmixture:
    p = np.asarray(populations, dtype=float)
    if p.shape != (model.dim,):
        raise BadParameter(f"expected {model.dim} populations, got shape {p.shape}")
    if np.any(p < -1e-15) or abs(p.sum() - 1.0) > 1e-12:
        raise BadParameter("populations must be nonnegative and sum to 1")
    p = np.clip(p, 0.0, None)
    p.setflags(write=False)
    return Eigenmixture(model, p)


def from_deltas(model: SystemModel, delta0: float, delta1: float) -> Eigenmixture:
    """Pair eigenmixture with the given differences, supported on at most two
    levels (p_k = max(delta, 0) style split, rest shared evenly)."""
    if abs(delta0) + abs(delta1) > 1.0 + 1e-12:
        raise BadParameter("(delta0, delta1) lies outside the probability diamond")
    slack = max(0.0, 1.0 - abs(delta0) - abs(delta1)) / 4.0
    a, b, c, d = model.labels
    p = np.full(4, slack)
    p[a] += max(delta0, 0.0)
    p[d] += max(-delta0, 0.0)
    p[b] += max(delta1, 0.0)
    p[c] += max(-delta1, 0.0)
    return eigenmixture(model, p / p.sum())


def gibbs_populations(energies, temperature: float) -> np.ndarray:
    e = np.asarray(energies, dtype=float)
    if not temperature > 0:
        raise BadTemperature(f"temperature must be positive, got {temperature!r}")
    if math.isinf(temperature):
        return np.full(e.size, 1.0 / e.size)
    w = np.exp(-(e - e.min()) / temperature)
    return w / w.sum()


def pair_gibbs_deltas(kappa: float, gamma: float, temperature: float) -> tuple[float, float]:
    """delta0 = 2 sinh(m/T)/Z and delta1 = 2 sinh(kappa/T)/Z, evaluated with
    the largest exponent factored out."""
    if math.isinf(temperature):
        return 0.0, 0.0
    if not temperature > 0:
        raise BadTemperature(f"temperature must be positive, got {temperature!r}")
    m = pair_m(kappa, gamma)
    top = max(m, kappa)
    ex = lambda x: math.exp((x - top) / temperature)  # noqa: E731
    z = ex(m) + ex(-m) + ex(kappa) + ex(-kappa)
    return (ex(m) - ex(-m)) / z, (ex(kappa) - ex(-kappa)) / z


def gibbs(model: SystemModel, temperature: float) -> Eigenmixture:
    state = eigenmixture(model, gibbs_populations(model.energies, temperature))
    if model.is_pair:
        kappa = model.params["kappa"]
        gamma = model.params.get("gamma", 1.0)
        closed = pair_gibbs_deltas(kappa, gamma, temperature)
        generic = state.deltas
        if max(abs(closed[0] - generic[0]), abs(closed[1] - generic[1])) > 1e-12:
            raise AssertionError(f"Gibbs deltas disagree: {closed} vs {generic}")
    return state


@dataclass(frozen=True)
class CoherentState:
    """Eigenmixture plus a real coherence r between |E_0> and |E_2>."""

    base: Eigenmixture
    r: float

    @property
    def density(self) -> np.ndarray:
        u = self.base.model.hamiltonian.eigenvectors
        coh = np.outer(u[:, 2], u[:, 0].conj())
        return self.base.density + self.r * (coh + coh.conj().T)


def coherent_perturb(base: Eigenmixture, r: float) -> CoherentState:
    p = base.populations
    bound = math.sqrt(p[0] * p[2])
    if abs(r) > bound + 1e-12:
        raise CoherenceTooLarge(f"|r| = {abs(r)} exceeds sqrt(p0 p2) = {bound}")
    state = CoherentState(base, float(r))
    lowest = np.linalg.eigvalsh(state.density)[0]
    if lowest < -1e-12:
        raise CoherenceTooLarge(f"perturbed state is not positive (min eigenvalue {lowest})")
    return state
