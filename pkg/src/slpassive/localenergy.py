"""Extracted energy, local energy and passivity thresholds.

The energy left in the system after a local channel is a Hermitian form in
the vectorized Kraus operators, so every quantity here reduces either to a
closed formula in a few coefficients (two-spin pairs and rings) or to a
maximization over the isometry manifold of stacked Kraus operators (the
brute-force oracle).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import channels as ch
from . import models
from .errors import BranchSingularity, IndexOutOfRange, NotApplicable
from .parallel import pmap
from .results import SweepResult

PASSIVE_TOL = 1e-8
T_FLOOR = 1e-12
T_CEIL = 1e6
# Local energy of a Gibbs state vanishes with its excited population, so
# passivity is judged relative to that population, with an absolute
# rounding floor.  Below EXCITED_FLOOR the test cannot resolve anything.
OMEGA_RTOL = 1e-12
ORACLE_RTOL = 1e-7
ROUNDING_FLOOR = 1e-15
EXCITED_FLOOR = 1e-6
STALL_GTOL = 1e-6
FLAT_STEPS = 25


# ---------------------------------------------------------------------------
# extracted energy


def delta_e(model: models.SystemModel, rho, ks: ch.KrausSet) -> float:
    """Tr[H rho] - Tr[H (G x I)(rho)]."""
    h = model.hamiltonian.matrix
    rho = np.asarray(rho)
    after = ch.apply_local(ks, rho, model.dims)
    return float(np.real(np.vdot(h, rho) - np.vdot(h, after)))


def delta_e_k(model: models.SystemModel, k: int, ks: ch.KrausSet) -> float:
    """Energy lost from eigenstate k, as a sum of transition weights to the
    other eigenstates times the energy differences."""
    if not 0 <= k < model.dim:
        raise IndexOutOfRange(f"eigenstate index {k} outside 0..{model.dim - 1}")
    dc, dr = model.dims
    u = model.hamiltonian.eigenvectors
    e = model.energies
    psi = u[:, k].reshape(dc, dr)
    moved = np.einsum("mab,br->mar", ks.ops, psi).reshape(ks.count, -1)
    amps = moved @ u.conj()
    weight = np.sum(np.abs(amps) ** 2, axis=0)
    diff = e[k] - e
    diff[k] = 0.0
    return float(np.dot(diff, weight))


def energy_form(model: models.SystemModel, rho) -> tuple[float, np.ndarray]:
    """(c0, W) with Tr[H (G x I)(rho)] = sum_mu k_mu^H W k_mu.

    k_mu is K_mu flattened row-major, so W is (d_c^2, d_c^2).
    """
    dc, dr = model.dims
    h4 = np.asarray(model.hamiltonian.matrix).reshape(dc, dr, dc, dr)
    r4 = np.asarray(rho).reshape(dc, dr, dc, dr)
    w = np.einsum("crAs,bsdr->cdAb", h4, r4, optimize=True).reshape(dc * dc, dc * dc)
    w = 0.5 * (w + w.conj().T)
    c0 = float(np.real(np.vdot(model.hamiltonian.matrix, rho)))
    return c0, w


# qubit element order in the flattened Kraus vector: s, t, u, v
_S, _T, _U, _V = 0, 1, 2, 3


def _pattern_basis():
    """Hermitian forms spanning the pair energy pattern and the forms that
    are constant on all channels (I (x) X)."""
    def sym(i, j):
        m = np.zeros((4, 4), dtype=complex)
        m[i, j] = m[j, i] = -0.5
        return m

    base = np.diag([0.0, 1.0, -1.0, 0.0]).astype(complex)
    eta = np.diag([0.0, 1.0, 1.0, 0.0]).astype(complex)
    xi = sym(_S, _V)
    mu = sym(_U, _T)
    x = []
    for blk in (
        np.array([[1, 0], [0, 0]]),
        np.array([[0, 0], [0, 1]]),
        np.array([[0, 1], [1, 0]]),
        np.array([[0, -1j], [1j, 0]]),
    ):
        x.append(np.kron(np.eye(2), blk).astype(complex))
    return base, eta, xi, mu, x


@dataclass(frozen=True)
class BilinearEnergyForm:
    """Energy after a local channel as c0 - delta_e = sum_mu k^H W k.

    For qubit subsystems the form is also fitted to
        dE = (1-eta) u'u - (1+eta) t't + xi Re(s'v) + mu Re(u't) - xi
    (vectors summed over Kraus index).  ``residual`` is the fit error with mu
    free, ``residual_tied`` with mu forced equal to xi.
    """

    c0: float
    w: np.ndarray = field(repr=False)
    eta: float | None = None
    xi: float | None = None
    mu: float | None = None
    residual: float | None = None
    eta_tied: float | None = None
    xi_tied: float | None = None
    residual_tied: float | None = None

    def delta_e(self, ks: ch.KrausSet) -> float:
        k = ks.ops.reshape(ks.count, -1)
        return float(self.c0 - np.real(np.einsum("mi,ij,mj->", k.conj(), self.w, k)))


def fit_pair_pattern(c0: float, w: np.ndarray, tied: bool) -> tuple[np.ndarray, float]:
    """Least-squares fit of W onto the pair pattern; returns (params, residual).

    params = (eta, xi, mu) or (eta, xi) when ``tied``.
    """
    base, e_eta, e_xi, e_mu, xs = _pattern_basis()
    cols = [e_eta, e_xi + e_mu] if tied else [e_eta, e_xi, e_mu]
    cols = cols + xs
    n = len(cols)
    a = np.array([np.concatenate([c.real.ravel(), c.imag.ravel()]) for c in cols]).T
    b = np.concatenate([(w - base).real.ravel(), (w - base).imag.ravel()])
    # constants: Tr X must equal c0 + xi
    extra = np.zeros(n)
    extra[1] = -1.0
    for j, x in enumerate(xs):
        extra[n - len(xs) + j] = np.real(np.trace(x)) / 2
    a = np.vstack([a, extra])
    b = np.append(b, c0)
    sol, *_ = np.linalg.lstsq(a, b, rcond=None)
    residual = float(np.max(np.abs(a @ sol - b)))
    k = 2 if tied else 3
    return sol[:k], residual


def bilinear_form(model: models.SystemModel, state) -> BilinearEnergyForm:
    """Energy form for a state (Eigenmixture or density matrix)."""
    rho = state.density if hasattr(state, "density") else np.asarray(state)
    c0, w = energy_form(model, rho)
    if model.dims[0] != 2:
        return BilinearEnergyForm(c0, w)
    (eta, xi, mu), res = fit_pair_pattern(c0, w, tied=False)
    (eta_t, xi_t), res_t = fit_pair_pattern(c0, w, tied=True)
    return BilinearEnergyForm(c0, w, eta, xi, mu, res, eta_t, xi_t, res_t)


def pair_coefficients(kappa: float, gamma: float, delta0: float, delta1: float) -> tuple[float, float, float]:
    """Analytic (eta, xi, mu) of a pair eigenmixture."""
    m = models.pair_m(kappa, gamma)
    eta = 2 * delta0 / m
    xi = gamma**2 * kappa**2 * delta0 / m + kappa * delta1
    mu = gamma * kappa**2 * delta0 / m + gamma * kappa * delta1
    return eta, xi, mu


# ---------------------------------------------------------------------------
# closed forms


def omega_branch(eta: float, xi: float) -> str:
    return "interior" if abs(eta * xi) < 1 - eta * eta else "boundary"


def omega_closed(eta: float, xi: float) -> float:
    """Local energy of a pair particle in terms of (eta, xi)."""
    if abs(eta * xi) < 1 - eta * eta:
        if abs(eta) >= 1:
            raise BranchSingularity(f"interior branch requested with |eta| = {abs(eta)}")
        val = math.sqrt((1 - eta * eta + xi * xi) / (1 - eta * eta)) - xi - eta
    else:
        val = abs(xi) + abs(eta) - xi - eta
    return max(val, 0.0)


def _omega_terms(eta, xi, mu):
    return 1 - eta, 1 + eta, abs(xi), abs(mu), xi


def omega_ab(eta, xi, mu, alpha, beta):
    a, b, x, y, c = _omega_terms(eta, xi, mu)
    sa, sb = np.sin(alpha), np.sin(beta)
    return a * sa**2 - b * sb**2 + x * np.cos(alpha) * np.cos(beta) + y * sa * sb - c


def _omega_grad_hess(eta, xi, mu, z):
    a, b, x, y, _ = _omega_terms(eta, xi, mu)
    al, be = z
    sa, ca, sb, cb = math.sin(al), math.cos(al), math.sin(be), math.cos(be)
    g = np.array([
        a * math.sin(2 * al) - x * sa * cb + y * ca * sb,
        -b * math.sin(2 * be) - x * ca * sb + y * sa * cb,
    ])
    cross = x * sa * sb + y * ca * cb
    diag = x * ca * cb + y * sa * sb
    hess = np.array([
        [2 * a * math.cos(2 * al) - diag, cross],
        [cross, -2 * b * math.cos(2 * be) - diag],
    ])
    return g, hess


def _omega_starts(eta, xi, mu, ang, vals, top=4, step=1e-3):
    """Polish starts: the best local maxima of the grid, plus each
    quarter-turn corner (all are stationary) nudged along every direction
    of positive curvature.

    Near level crossings the positive region can be a sliver hugging a
    corner that no reasonable grid resolves; the Hessian sees it exactly.
    omega is invariant under shifting both angles by pi, so only corners
    with alpha in {0, pi/2} are needed.
    """
    peak = np.ones(vals.shape, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di or dj:
                peak &= vals >= np.roll(np.roll(vals, di, 0), dj, 1)
    cand = np.flatnonzero(peak)
    cand = cand[np.argsort(vals.ravel()[cand])[::-1][:top]]
    starts = [np.array([ang[i], ang[j]]) for i, j in zip(*np.unravel_index(cand, vals.shape))]
    for al in (0.0, 0.5 * np.pi):
        for be in 0.5 * np.pi * np.arange(4):
            z = np.array([al, be])
            lam, vec = np.linalg.eigh(_omega_grad_hess(eta, xi, mu, z)[1])
            for k in np.flatnonzero(lam > 0):
                d = vec[:, k] * max(step, math.sqrt(lam[k]) * 0.1)
                starts += [z + d, z - d]
    return starts


def omega_aniso(eta: float, xi: float, mu: float, grid: int = 513, gtol: float = 1e-10) -> float:
    """Global max of omega(alpha, beta) by dense grid plus trust-region
    polish from several starts, clamped at zero."""
    ang = np.linspace(0.0, 2 * np.pi, grid, endpoint=False)
    vals = omega_ab(eta, xi, mu, ang[:, None], ang[None, :])
    best = float(vals.max())
    for z0 in _omega_starts(eta, xi, mu, ang, vals):
        res = optimize.minimize(
            lambda z: -float(omega_ab(eta, xi, mu, z[0], z[1])),
            z0,
            jac=lambda z: -_omega_grad_hess(eta, xi, mu, z)[0],
            hess=lambda z: -_omega_grad_hess(eta, xi, mu, z)[1],
            method="trust-exact",
            options={"gtol": gtol, "maxiter": 200},
        )
        best = max(best, -float(res.fun))
    return max(best, 0.0)


# ---------------------------------------------------------------------------
# brute-force oracle over the isometry manifold


@dataclass(frozen=True)
class OracleResult:
    best_delta_e: float
    best_channel: ch.KrausSet = field(repr=False)
    restarts: int
    iterations: int
    converged: bool
    per_restart: tuple = field(default=(), repr=False)


def _oracle_batch(c0, w, v, max_iter, gtol, armijo=1e-4, step0=0.5):
    """Riemannian gradient ascent with QR retraction, run on a batch of
    starting isometries at once.

    The first trial step is ``step0``; later trial steps are alternating
    Barzilai-Borwein estimates, always followed by Armijo backtracking
    (halving), so every accepted step increases the objective.
    Returns (values, V, iterations, converged).
    """
    nb, rows, d = v.shape
    nk = rows // d
    wt = w.T

    def value(vv):
        k = vv.reshape(vv.shape[0], nk, d * d)
        return c0 - np.real(np.sum(k.conj() * (k @ wt), axis=(1, 2)))

    def rgrad(vv):
        k = vv.reshape(vv.shape[0], nk, d * d)
        g = (-2.0 * (k @ wt)).reshape(vv.shape)
        vg = np.swapaxes(vv.conj(), 1, 2) @ g
        return g - vv @ (0.5 * (vg + np.conj(np.swapaxes(vg, 1, 2))))

    f = value(v)
    grad = rgrad(v)
    step = np.full(nb, step0)
    active = np.ones(nb, dtype=bool)
    stalled_any = np.zeros(nb, dtype=bool)
    flat = np.zeros(nb, dtype=int)
    its = 0
    for its in range(1, max_iter + 1):
        gn2 = np.sum(np.abs(grad) ** 2, axis=(1, 2))
        active &= np.sqrt(gn2) > gtol
        if not active.any():
            its -= 1
            break
        idx = np.flatnonzero(active)
        t = step[idx].copy()
        pending = np.ones(idx.size, dtype=bool)
        new_v = v[idx].copy()
        new_f = f[idx].copy()
        for _ in range(60):
            j = np.flatnonzero(pending)
            if j.size == 0:
                break
            trial = ch.qr_isometry(v[idx[j]] + t[j, None, None] * grad[idx[j]])
            tf = value(trial)
            ok = tf >= f[idx[j]] + armijo * t[j] * gn2[idx[j]]
            new_v[j[ok]] = trial[ok]
            new_f[j[ok]] = tf[ok]
            pending[j[ok]] = False
            t[j[~ok]] *= 0.5
        if np.any(new_f < f[idx] - 1e-13):
            raise AssertionError("oracle ascent is not monotone")
        # failed line searches, or accepted steps that stop raising the value
        # beyond rounding, sit at a numerical stationary point
        gain = new_f - f[idx] > 4 * np.finfo(float).eps * np.maximum(1.0, np.abs(f[idx]))
        flat[idx] = np.where(gain, 0, flat[idx] + 1)
        stalled = idx[pending | (flat[idx] >= FLAT_STEPS)]
        active[stalled] = False
        stalled_any[stalled] = True
        mv = ~pending & (flat[idx] < FLAT_STEPS)
        moved = idx[mv]
        s_ = new_v[mv] - v[moved]
        new_grad = rgrad(new_v[mv])
        y_ = new_grad - grad[moved]
        ss = np.sum(np.abs(s_) ** 2, axis=(1, 2))
        sy = np.abs(np.real(np.sum(s_.conj() * y_, axis=(1, 2))))
        yy = np.sum(np.abs(y_) ** 2, axis=(1, 2))
        with np.errstate(divide="ignore", invalid="ignore"):
            bb = ss / sy if its % 2 else sy / yy
        bb = np.where(np.isfinite(bb) & (bb > 0), bb, step0)
        step[moved] = np.clip(bb, 1e-6, 1e6)
        v[moved] = new_v[mv]
        f[moved] = new_f[mv]
        grad[moved] = new_grad
    gnorm = np.sqrt(np.sum(np.abs(grad) ** 2, axis=(1, 2)))
    # a stall means no step changes the value beyond rounding: a numerical
    # stationary point when the gradient is already small
    conv = (gnorm <= gtol) | (stalled_any & (gnorm <= STALL_GTOL))
    return f, v, its, conv


def oracle_maximize(
    model: models.SystemModel,
    state,
    n_k: int | None = None,
    restarts: int = 16,
    seed: int = 0,
    max_iter: int = 10_000,
    gtol: float = 1e-9,
) -> OracleResult:
    """Best extracted energy over random-restart ascents on the channel manifold.

    Restart i starts from ``random_channel(d_c, n_k, seed + i)``.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    rho = state.density if hasattr(state, "density") else np.asarray(state)
    dc = model.dims[0]
    nk = n_k or dc * dc
    c0, w = energy_form(model, rho)
    v0 = np.stack([ch.to_stiefel(ch.random_channel(dc, nk, seed + i)) for i in range(restarts)])
    vals, v, its, conv = _oracle_batch(c0, w, v0, max_iter, gtol)
    best = int(np.argmax(vals))
    ks = ch.from_stiefel(v[best], check=False)
    direct = delta_e(model, rho, ks)
    if abs(direct - vals[best]) > 1e-10:
        raise AssertionError(f"form and direct energies disagree: {vals[best]} vs {direct}")
    return OracleResult(
        best_delta_e=float(direct),
        best_channel=ks,
        restarts=restarts,
        iterations=int(its),
        converged=bool(conv[best]),
        per_restart=tuple(float(x) for x in vals),
    )


# ---------------------------------------------------------------------------
# thresholds


def delta_star(kappa: float) -> float:
    """delta0 coordinate of the corner where eta*xi = 1 - eta^2 meets the
    diamond edge delta1 = delta0 - 1 (kappa > 0, gamma = 1)."""
    m = models.pair_m(kappa)
    a = kappa * kappa + kappa * m + 2
    return (kappa * m + math.sqrt((kappa * m) ** 2 + 2 * a * m * m)) / (2 * a)


def delta_star_printed(kappa: float) -> float:
    """The corner expression as typeset, without the overall factor m."""
    m = models.pair_m(kappa)
    return (kappa + math.sqrt(3 * m * m + 2 * kappa * m - 8)) / (2 * (m * m + kappa * m - 2))


def threshold_pair(kappa: float) -> dict:
    if not kappa > 0:
        raise models.BadParameter(f"kappa must be positive, got {kappa!r}")
    d = delta_star(kappa)
    d_printed = delta_star_printed(kappa)
    return {
        "delta_star": d,
        "p_star": (1 + d) / 2,
        "delta_star_printed": d_printed,
        "p_star_printed": (1 + d_printed) / 2,
    }


def _max_single_level(model, p0, levels, restarts, seed, max_iter):
    u = model.hamiltonian
    best = -np.inf
    for k in levels:
        pops = np.zeros(model.dim)
        pops[0] = p0
        pops[k] += 1 - p0
        res = oracle_maximize(model, u.mixture(pops), restarts=restarts, seed=seed, max_iter=max_iter)
        best = max(best, res.best_delta_e)
    return best


def threshold_general(
    model: models.SystemModel,
    k_worst: int | None = None,
    tol: float = PASSIVE_TOL,
    p_tol: float = 1e-4,
    restarts: int = 8,
    seed: int = 0,
    max_iter: int = 10_000,
) -> float:
    """Least ground-state population p* above which every eigenmixture is SL passive.

    For each probe p0 the worst state puts 1 - p0 on a single excited level;
    p0 is then bisected on whether any such state yields energy above ``tol``.
    """
    info = model.classify(0)
    if not (info["nondegenerate"] and info["fully_entangled"]):
        raise NotApplicable(
            f"ground state must be nondegenerate and fully entangled (got {info['nondegenerate']}, "
            f"{info['fully_entangled']})"
        )
    levels = [k_worst] if k_worst is not None else list(range(1, model.dim))
    probe = lambda p: _max_single_level(model, p, levels, restarts, seed, max_iter) > tol  # noqa: E731
    lo, hi = 1.0 / model.dim, 1.0
    if not probe(lo):
        return lo
    while hi - lo > p_tol:
        mid = 0.5 * (lo + hi)
        if probe(mid):
            lo = mid
        else:
            hi = mid
    return hi


def charging_threshold(model: models.SystemModel, **kwargs) -> float:
    """Least top-state population q* above which no local channel adds energy."""
    info = model.classify(model.dim - 1)
    if not (info["nondegenerate"] and info["fully_entangled"]):
        raise NotApplicable("top eigenstate must be nondegenerate and fully entangled")
    return threshold_general(model.negated(), **kwargs)


# ---------------------------------------------------------------------------
# critical temperatures


@dataclass(frozen=True)
class CriticalTemperature:
    t_star: float
    bracket: tuple[float, float]
    method: str
    certified: bool = False
    note: str = ""


def _chain_coefficients(model, temperature):
    form = bilinear_form(model, models.gibbs(model, temperature))
    return form.eta_tied, form.xi_tied, form.residual_tied


def closed_condition(model: models.SystemModel, temperature: float) -> float:
    """eta*xi - (1 - eta^2) for the Gibbs state; positive means SL passive
    (eta, xi >= 0 along the Gibbs path)."""
    if model.kind == "pair" and model.params.get("gamma", 1.0) == 1.0:
        d0, d1 = models.pair_gibbs_deltas(model.params["kappa"], 1.0, temperature)
        eta, xi, _ = pair_coefficients(model.params["kappa"], 1.0, d0, d1)
    else:
        eta, xi, _ = _chain_coefficients(model, temperature)
    return abs(eta * xi) - (1 - eta * eta)


def omega_gibbs(model: models.SystemModel, temperature: float, method: str, **oracle_kw) -> float:
    if method == "closed-condition":
        if model.kind == "pair":
            d0, d1 = models.pair_gibbs_deltas(model.params["kappa"], 1.0, temperature)
            eta, xi, _ = pair_coefficients(model.params["kappa"], 1.0, d0, d1)
        else:
            eta, xi, _ = _chain_coefficients(model, temperature)
        return omega_closed(eta, xi)
    if method == "omega-maximizer":
        kappa, gamma = model.params["kappa"], model.params.get("gamma", 1.0)
        d0, d1 = models.pair_gibbs_deltas(kappa, gamma, temperature)
        return omega_aniso(*pair_coefficients(kappa, gamma, d0, d1))
    if method == "oracle":
        return oracle_maximize(model, models.gibbs(model, temperature), **oracle_kw).best_delta_e
    raise ValueError(f"unknown method {method!r}")


def default_method(model: models.SystemModel) -> str:
    if model.kind == "chain" or (model.kind == "pair" and model.params.get("gamma", 1.0) == 1.0):
        return "closed-condition"
    if model.kind == "pair":
        return "omega-maximizer"
    return "oracle"


def xxx_sign_certificate(populations_by_label) -> bool:
    """All three XXX energy-form coefficients are nonnegative, which forces
    dE <= 0 for every qubit channel.  Populations are ordered (singlet,
    triplet-0, |00>, |11>)."""
    p0, p1, p2, p3 = populations_by_label
    return p0 + p1 - 2 * p2 >= 0 and p0 + p1 - 2 * p3 >= 0 and p0 - p1 >= 0


def excited_population(model: models.SystemModel, temperature: float) -> float:
    """1 - p_0 of the Gibbs state, summed from the excited weights so it
    keeps full relative precision when tiny."""
    if math.isinf(temperature):
        return 1.0 - 1.0 / model.dim
    e = model.energies
    w = np.exp(-(e - e[0]) / temperature)
    return float(w[1:].sum() / w.sum())


def passivity_test(model: models.SystemModel, method: str, **oracle_kw):
    """Predicate T -> bool deciding SL passivity of the Gibbs state."""
    if method == "closed-condition":
        return lambda t: closed_condition(model, t) >= 0
    rtol = OMEGA_RTOL if method == "omega-maximizer" else ORACLE_RTOL
    floor = ROUNDING_FLOOR if method == "omega-maximizer" else 1e3 * ROUNDING_FLOOR

    def passive(t):
        scale = excited_population(model, t)
        return omega_gibbs(model, t, method, **oracle_kw) <= rtol * scale + floor

    return passive


def critical_temperature(
    model: models.SystemModel,
    method: str | None = None,
    tol_t: float = 1e-6,
    **oracle_kw,
) -> CriticalTemperature:
    """Largest T with every Gibbs state at temperature <= T SL passive.

    T* = 0 means the Gibbs state is already active at the lowest
    temperature the test resolves: where the excited population drops to
    ``EXCITED_FLOOR`` (numerical methods) or at ``T_FLOOR``.
    """
    method = method or default_method(model)
    ground = model.classify(0)
    if not (ground["nondegenerate"] and ground["fully_entangled"]):
        return CriticalTemperature(0.0, (0.0, 0.0), method,
                                   note="ground state degenerate or not fully entangled")
    passive = passivity_test(model, method, **oracle_kw)

    lo, hi = 1e-3, 1e3
    # never probe below the resolution floor: a tiny excited population
    # makes any state look passive
    while method != "closed-condition" and excited_population(model, lo) < EXCITED_FLOOR:
        lo *= 2
    while not passive(lo):
        if lo <= T_FLOOR or (method != "closed-condition"
                             and excited_population(model, lo / 2) < EXCITED_FLOOR):
            return CriticalTemperature(0.0, (0.0, float(lo)), method,
                                       note="not passive down to the resolution floor")
        lo /= 2
    while passive(hi):
        if hi >= T_CEIL:
            certified = False
            if model.kind == "xxx":
                certified = _certify_xxx(model)
            return CriticalTemperature(math.inf, (hi, math.inf), method, certified,
                                       note="passive up to the temperature ceiling")
        hi *= 10
    # search a log grid for the first failure, then bisect in log T
    grid = np.geomspace(lo, hi, 25)
    flags = [passive(t) for t in grid]
    first_bad = flags.index(False)
    lo, hi = grid[first_bad - 1], grid[first_bad]
    while hi - lo > tol_t * hi:
        mid = math.sqrt(lo * hi)
        if passive(mid):
            lo = mid
        else:
            hi = mid
    return CriticalTemperature(0.5 * (lo + hi), (float(lo), float(hi)), method)


def _certify_xxx(model) -> bool:
    temps = [0.1, 1.0, 10.0, 100.0, 1e4, T_CEIL, math.inf]
    for t in temps:
        p = models.gibbs_populations(model.energies, t)
        # ascending order is singlet then the degenerate triplet
        if not xxx_sign_certificate([p[0], p[1], p[2], p[3]]):
            return False
    return True


def _chain_row(args):
    n, kappa = args
    model = models.build_chain(n, kappa)
    ct = critical_temperature(model, "closed-condition")
    eta, xi, res = _chain_coefficients(model, ct.t_star) if 0 < ct.t_star < math.inf else (np.nan,) * 3
    eta, xi, res = float(eta), float(xi), float(res)
    if res > 1e-9:
        raise AssertionError(f"chain n={n} kappa={kappa}: pattern residual {res:.2e}")
    return (n, kappa, ct.t_star, eta, xi, res)


def chain_critical_curve(ns, kappas, workers: int | None = None) -> SweepResult:
    """T*(kappa) for closed chains of each length in ``ns``."""
    tasks = [(int(n), float(k)) for n in ns for k in kappas]
    rows = pmap(_chain_row, tasks, workers)
    return SweepResult(
        ["n", "kappa", "t_star", "eta", "xi", "fit_residual"],
        rows,
        {"method": "closed-condition", "tol_t": 1e-6},
    )


def pair_t_star(kappa: float, gamma: float) -> float:
    return critical_temperature(models.build_pair(kappa, gamma)).t_star


def _pair_row(args):
    gamma, kappa = args
    ct = critical_temperature(models.build_pair(kappa, gamma))
    return (gamma, kappa, ct.t_star, ct.method)


def pair_critical_curve(gammas, kappas, workers: int | None = None) -> SweepResult:
    """T*(kappa) for pairs at each anisotropy in ``gammas``."""
    tasks = [(float(g), float(k)) for g in gammas for k in kappas]
    rows = pmap(_pair_row, tasks, workers)
    return SweepResult(["gamma", "kappa", "t_star", "method"], rows, {"tol_t": 1e-6})


def degeneracy_kappa(gamma: float) -> float:
    """Coupling at which the two lowest pair levels cross (inf for gamma = 1)."""
    return math.inf if gamma >= 1 else 2 / math.sqrt(1 - gamma * gamma)


def locate_zero_edge(t_of_kappa, kappas, t_stars, threshold: float = 1e-4, kappa_tol: float = 1e-5):
    """Upper edge of the set where T*(kappa) <= threshold.

    Starts from a sampled curve.  If no sample is below threshold, the dip
    is hunted for next to the smallest sample: bisection keeps whichever half
    continues to descend, since T* can collapse to zero over an interval far
    narrower than the grid step and jump back up right after it.  Returns
    (kappa, t_star) or None when no sub-threshold coupling is found.
    """
    kappas = list(kappas)
    t_stars = list(t_stars)
    below = [i for i, t in enumerate(t_stars) if t <= threshold]
    if below:
        k = below[0]
        while k + 1 < len(kappas) and t_stars[k + 1] <= threshold:
            k += 1
        if k + 1 == len(kappas):
            return kappas[k], t_stars[k]
        return _edge_bisect(t_of_kappa, kappas[k], t_stars[k], kappas[k + 1], threshold, kappa_tol)
    i = int(np.argmin(t_stars))
    for j in (i + 1, i - 1):
        if not 0 <= j < len(kappas):
            continue
        found = _dip_search(t_of_kappa, kappas[i], t_stars[i], kappas[j], threshold, kappa_tol)
        if found is not None:
            k_in, t_in, k_out = found
            if k_out < k_in:  # the dip rises again to the left; its edge is k_in
                return k_in, t_in
            return _edge_bisect(t_of_kappa, k_in, t_in, k_out, threshold, kappa_tol)
    return None


def _dip_search(t_of_kappa, k_lo, t_lo, k_hi, threshold, kappa_tol):
    while abs(k_hi - k_lo) > kappa_tol:
        mid = 0.5 * (k_lo + k_hi)
        t = t_of_kappa(mid)
        if t <= threshold:
            return mid, t, k_hi
        if t < t_lo:
            k_lo, t_lo = mid, t
        else:
            k_hi = mid
    return None


def _edge_bisect(t_of_kappa, k_in, t_in, k_out, threshold, kappa_tol):
    while abs(k_out - k_in) > kappa_tol:
        mid = 0.5 * (k_in + k_out)
        t = t_of_kappa(mid)
        if t <= threshold:
            k_in, t_in = mid, t
        else:
            k_out = mid
    return k_in, t_in


def zero_temperature_inset(curve: SweepResult, threshold: float = 1e-4, kappa_tol: float = 1e-5) -> SweepResult:
    """Per gamma: the coupling where T* collapses below ``threshold``,
    next to the level-crossing coupling 2/sqrt(1 - gamma^2)."""
    rows = []
    gammas = sorted(set(curve.column("gamma")))
    for g in gammas:
        pts = sorted((k, t) for gg, k, t, _ in curve.rows if gg == g)
        ks, ts = zip(*pts)
        found = locate_zero_edge(lambda k, g=g: pair_t_star(k, g), ks, ts, threshold, kappa_tol)
        k_found, t_found = found if found is not None else (math.nan, math.nan)
        rows.append((g, k_found, t_found, degeneracy_kappa(g)))
    return SweepResult(
        ["gamma", "kappa_zero", "t_star_at_kappa_zero", "kappa_degenerate"],
        rows,
        {"threshold": threshold, "kappa_tol": kappa_tol},
    )


# ---------------------------------------------------------------------------
# coherence


def coherence_amplitude(kappa: float) -> float:
    m = models.pair_m(kappa)
    return (2 / kappa) * math.sqrt((m - 2) / m) * (2 + (m + kappa) * (kappa + 1))


def coherence_delta_e_printed(kappa: float, base: models.Eigenmixture, r: float, phi: float) -> float:
    """The rotation-channel expression as typeset; kept for comparison only."""
    m = models.pair_m(kappa)
    eta, xi, _ = pair_coefficients(kappa, 1.0, *base.deltas)
    a = coherence_amplitude(kappa)
    return 2 * math.sin(phi) ** 2 / (m * kappa) * (r * a / math.tan(phi) - eta - 2 * xi)


def coherence_closed(kappa: float, base: models.Eigenmixture, r: float, phi: float) -> float:
    """dE of the coherent pair state under exp(-i phi sigma^y):
    sin^2(phi) [r A cot(phi) - 2 eta - 2 xi], written with sin(2 phi) so
    phi = 0 is regular."""
    eta, xi, _ = pair_coefficients(kappa, 1.0, *base.deltas)
    a = coherence_amplitude(kappa)
    return 0.5 * r * a * math.sin(2 * phi) - 2 * math.sin(phi) ** 2 * (eta + xi)


def coherence_delta_e(kappa: float, base: models.Eigenmixture, r: float, phi: float) -> float:
    state = models.coherent_perturb(base, r)
    closed = coherence_closed(kappa, base, r, phi)
    direct = delta_e(base.model, state.density, ch.unitary_y(phi))
    if abs(closed - direct) > 1e-9:
        raise AssertionError(f"coherence closed form {closed} disagrees with direct {direct}")
    return closed


def coherence_witness(kappa: float, base: models.Eigenmixture, r: float) -> dict:
    """Rotation angle range with positive extraction: cot(phi) > 2(eta+xi)/(rA)."""
    eta, xi, _ = pair_coefficients(kappa, 1.0, *base.deltas)
    a = coherence_amplitude(kappa)
    if r == 0:
        return {"phi_max": 0.0, "phi_best": 0.0, "delta_e_best": 0.0}
    phi_max = math.atan2(r * a, 2 * (eta + xi))
    res = optimize.minimize_scalar(
        lambda p: -coherence_closed(kappa, base, r, p),
        bounds=sorted((0.0, phi_max)),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return {"phi_max": phi_max, "phi_best": float(res.x), "delta_e_best": float(-res.fun)}
