"""Static SVG figures drawn from parsed sweep CSV files.

Every function takes a :class:`SweepResult` read back from CSV text, so the
figures never see numbers that are not in the emitted table.
"""

from __future__ import annotations

import matplotlib
from matplotlib.figure import Figure
import numpy as np

from .results import SweepResult

matplotlib.rcParams["svg.hashsalt"] = "slpassive"
SVG_META = {"Date": None}


def _save(fig: Figure, path) -> None:
    fig.savefig(path, format="svg", metadata=SVG_META)


def _floats(result: SweepResult, name: str) -> np.ndarray:
    return np.array([float(v) for v in result.column(name)])


def omega_grid(result: SweepResult, path) -> None:
    """Local energy over the (delta0, delta1) diamond with the zero set and
    the Gibbs path overlaid."""
    i = np.array(result.column("i"), dtype=int)
    j = np.array(result.column("j"), dtype=int)
    n = int(i.max()) + 1
    omega = np.full((n, n), np.nan)
    ok = np.array(result.column("masked")) == 0
    omega[i[ok], j[ok]] = _floats(result, "omega")[ok]
    axis = np.linspace(-1, 1, n)

    fig = Figure(figsize=(5.2, 4.4))
    ax = fig.add_subplot()
    cs = ax.contourf(axis, axis, omega.T, levels=24, cmap="Greys")
    fig.colorbar(cs, ax=ax, label=r"$\Omega^\circ$")
    ax.contour(axis, axis, omega.T, levels=[1e-9], colors="tab:red", linewidths=1.2)
    path_pts = result.metadata.get("gibbs_path")
    if path_pts:
        pts = np.array(path_pts, dtype=float)
        ax.plot(pts[:, 1], pts[:, 2], color="tab:blue", lw=1.2, label="Gibbs states")
        ax.legend(loc="lower left", fontsize=8)
    ax.plot([1, 0, -1, 0, 1], [0, 1, 0, -1, 0], color="k", lw=0.6)
    ax.set_xlabel(r"$\delta_0$")
    ax.set_ylabel(r"$\delta_1$")
    ax.set_aspect("equal")
    ax.set_title(rf"$\kappa$ = {result.metadata.get('kappa')}")
    _save(fig, path)


def critical_curve(result: SweepResult, path) -> None:
    """T*(kappa), one line per gamma (pairs) or per N (chains)."""
    key = "gamma" if "gamma" in result.columns else "n"
    groups = sorted(set(result.column(key)))
    kappa = _floats(result, "kappa")
    t_star = _floats(result, "t_star")
    family = np.array(result.column(key))

    fig = Figure(figsize=(5.6, 4.0))
    ax = fig.add_subplot()
    for g in groups:
        sel = family == g
        label = rf"$\gamma$ = {g}" if key == "gamma" else f"N = {g}"
        ax.plot(kappa[sel], t_star[sel], marker=".", ms=3, lw=1, label=label)
    ax.set_xlabel(r"$\kappa$")
    ax.set_ylabel(r"$T_*$")
    ax.legend(fontsize=8)

    inset = result.metadata.get("inset")
    if inset:
        sub = ax.inset_axes([0.62, 0.1, 0.33, 0.33])
        rows = [r for r in inset if r[1] not in ("nan", None)]
        if rows:
            g = np.array([float(r[0]) for r in rows])
            sub.plot(g, [float(r[1]) for r in rows], "o", ms=3, label="numerical")
            curve = np.linspace(0, min(0.95, g.max() if g.size else 0.9), 100)
            sub.plot(curve, 2 / np.sqrt(1 - curve**2), lw=0.8, label="level crossing")
        sub.set_xlabel(r"$\gamma$", fontsize=7)
        sub.set_ylabel(r"$\kappa$ at $T_*=0$", fontsize=7)
        sub.tick_params(labelsize=6)
    _save(fig, path)


def coherence(result: SweepResult, path) -> None:
    phi = _floats(result, "phi")
    fig = Figure(figsize=(5.2, 3.8))
    ax = fig.add_subplot()
    for name, style in (("delta_e_direct", "-"), ("delta_e_closed", "--"), ("delta_e_typeset", ":")):
        if name in result.columns:
            ax.plot(phi, _floats(result, name), style, label=name.removeprefix("delta_e_"))
    ax.axhline(0.0, color="k", lw=0.5)
    ax.set_xlabel(r"rotation angle $\phi$")
    ax.set_ylabel(r"$\Delta E$")
    ax.legend(fontsize=8)
    _save(fig, path)


def oracle_compare(result: SweepResult, path) -> None:
    ref = _floats(result, "reference")
    orc = _floats(result, "oracle")
    fig = Figure(figsize=(4.4, 4.2))
    ax = fig.add_subplot()
    ax.plot(ref, orc, ".", ms=3)
    top = max(float(np.nanmax(ref)), float(np.nanmax(orc)), 1e-12)
    ax.plot([0, top], [0, top], "k", lw=0.5)
    ax.set_xlabel("closed form / 2-D maximizer")
    ax.set_ylabel("oracle")
    _save(fig, path)


FIGURES = {
    "omega-grid": omega_grid,
    "critical-temp": critical_curve,
    "coherence": coherence,
    "oracle-compare": oracle_compare,
}
