"""Command-line front end: ``slpassive <command> [options]``.

Exit codes: 0 success, 1 verification failure, 2 bad configuration,
3 disagreement between independent methods.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, acceptance, models, plots
from . import channels as ch
from . import localenergy as le
from .errors import SLPassiveError
from .parallel import pmap
from .results import SweepResult, config_hash, format_value

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_DISAGREE = 0, 1, 2, 3
AGREE_TOL = 1e-6


class BadConfig(Exception):
    pass


class Disagreement(Exception):
    pass


def parse_values(text: str, kind=float) -> list:
    """'a:b:step' (inclusive range) or a comma list."""
    if ":" in text:
        a, b, step = (float(x) for x in text.split(":"))
        if step <= 0 or b < a:
            raise BadConfig(f"bad range {text!r}")
        n = int(math.floor((b - a) / step + 1e-9)) + 1
        return [kind(round(a + i * step, 12)) for i in range(n)]
    return [kind(x) for x in text.split(",") if x.strip()]


def _nested(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (list, tuple)):
        return [_nested(v) for v in x]
    if isinstance(x, dict):
        return {k: _nested(v) for k, v in x.items()}
    return format_value(x)


def _config(args) -> dict:
    skip = {"func", "out", "format"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _stamp(result: SweepResult, args) -> SweepResult:
    cfg = _config(args)
    meta = {"command": args.command, "config": cfg, "config_hash": config_hash(cfg), "seed": args.seed}
    meta.update(_nested(result.metadata))
    return SweepResult(result.columns, result.rows, meta)


def emit(result: SweepResult, args) -> None:
    result = _stamp(result, args)
    if args.format == "svg":
        if args.command not in plots.FIGURES:
            raise BadConfig(f"no figure for command {args.command!r}")
        if not args.out:
            raise BadConfig("--format svg needs --out")
        out = Path(args.out)
        text = result.to_csv()
        out.with_suffix(".csv").write_text(text)
        plots.FIGURES[args.command](SweepResult.from_csv(text), out)
        return
    text = result.to_csv() if args.format == "csv" else result.to_json() + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def build_model(args) -> models.SystemModel:
    if args.model == "pair":
        return models.build_pair(args.kappa, args.gamma)
    if args.model == "xxx":
        return models.build_xxx()
    if args.model == "chain":
        return models.build_chain(args.n, args.kappa)
    raise BadConfig(f"unknown model {args.model!r}")


# ---------------------------------------------------------------------------
# commands


def cmd_spectrum(args) -> int:
    model = build_model(args)
    e = model.energies
    names = {}
    if model.is_pair:
        names = dict(zip(model.labels, ("-m", "-kappa", "kappa", "m")))
    rows = []
    for k in range(model.dim):
        info = model.classify(k)
        rows.append((k, float(e[k]), names.get(k, ""), info["nondegenerate"], info["fully_entangled"], info["gap"]))
    emit(SweepResult(["level", "energy", "label", "nondegenerate", "fully_entangled", "gap"], rows), args)
    return EXIT_OK


def cmd_omega_grid(args) -> int:
    if args.gamma != 1.0:
        raise BadConfig("omega-grid covers the gamma = 1 pair only")
    if args.resolution < 3:
        raise BadConfig("resolution must be at least 3")
    axis = np.linspace(-1.0, 1.0, args.resolution)
    rows = []
    for i, d0 in enumerate(axis):
        for j, d1 in enumerate(axis):
            if abs(d0) + abs(d1) > 1.0 + 1e-12:
                rows.append((i, j, float(d0), float(d1), math.nan, "", 1))
                continue
            eta, xi, _ = le.pair_coefficients(args.kappa, 1.0, d0, d1)
            rows.append((i, j, float(d0), float(d1), le.omega_closed(eta, xi), le.omega_branch(eta, xi), 0))
    path = [(t, *models.pair_gibbs_deltas(args.kappa, 1.0, t)) for t in np.geomspace(0.02, 100, 80)]
    meta = {"kappa": args.kappa, "gibbs_path": [list(p) for p in path],
            "p_star": le.threshold_pair(args.kappa)["p_star"]}
    emit(SweepResult(["i", "j", "delta0", "delta1", "omega", "branch", "masked"], rows, meta), args)
    return EXIT_OK


def cmd_critical_temp(args) -> int:
    kappas = parse_values(args.kappa_range)
    if args.family == "pair":
        gammas = parse_values(args.gammas)
        if any(not 0 <= g <= 1 for g in gammas):
            raise BadConfig("gamma values must lie in [0, 1]")
        curve = le.pair_critical_curve(gammas, kappas)
        meta = dict(curve.metadata)
        if not args.no_inset:
            inset = le.zero_temperature_inset(curve, threshold=args.zero_threshold)
            meta["inset_columns"] = inset.columns
            meta["inset"] = [list(r) for r in inset.rows]
        result = SweepResult(curve.columns, curve.rows, meta)
    elif args.family == "chain":
        ns = parse_values(args.ns, int)
        result = le.chain_critical_curve(ns, kappas)
    else:
        ct = le.critical_temperature(models.build_xxx())
        result = SweepResult(["model", "t_star", "method", "certified"],
                             [("xxx", ct.t_star, ct.method, ct.certified)], {"note": ct.note})
    emit(result, args)
    return EXIT_OK


def _state(args, model):
    """(density, eigenmixture or None, description)."""
    if args.temperature is not None:
        if args.r:
            raise BadConfig("--r applies to --populations states only")
        st = models.gibbs(model, args.temperature)
        return st.density, st, f"gibbs T={args.temperature}"
    if args.populations is None:
        raise BadConfig("give --populations or --temperature")
    base = models.eigenmixture(model, parse_values(args.populations))
    if args.r:
        if not (model.is_pair and model.params["gamma"] == 1.0):
            raise BadConfig("coherent states are defined for gamma = 1 pairs")
        return models.coherent_perturb(base, args.r).density, None, f"coherent r={args.r}"
    return base.density, base, "eigenmixture"


def cmd_local_energy(args) -> int:
    model = build_model(args)
    rho, mix, desc = _state(args, model)
    values = {}
    if mix is not None and model.is_pair:
        eta, xi, mu = le.pair_coefficients(model.params["kappa"], model.params["gamma"], *mix.deltas)
        if model.params["gamma"] == 1.0:
            values["closed"] = le.omega_closed(eta, xi)
        values["omega-maximizer"] = le.omega_aniso(eta, xi, mu)
    elif mix is not None and model.kind == "chain":
        form = le.bilinear_form(model, mix)
        if form.residual_tied <= 1e-9:
            values["closed"] = le.omega_closed(form.eta_tied, form.xi_tied)
    res = le.oracle_maximize(model, rho, restarts=args.restarts, seed=args.seed)
    values["oracle"] = res.best_delta_e
    spread = max(values.values()) - min(values.values())
    report = {
        "model": model.to_json(),
        "state": desc,
        "omega": values,
        "sl_passive": all(v <= le.PASSIVE_TOL for v in values.values()),
        "passive": bool(mix is not None and np.all(np.diff(mix.populations) <= 1e-15)),
        "oracle_converged": res.converged,
        "methods_agree": spread <= AGREE_TOL,
    }
    if args.r:
        kappa = model.params["kappa"]
        base = models.eigenmixture(model, parse_values(args.populations))
        report["witness"] = le.coherence_witness(kappa, base, args.r)
    cfg = _config(args)
    report["metadata"] = {"tool": "slpassive", "version": __version__, "command": args.command,
                          "config": cfg, "config_hash": config_hash(cfg), "seed": args.seed}
    doc = json.dumps(_nested(report), indent=1, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(doc)
    if args.format == "json" and not args.out:
        sys.stdout.write(doc)
    else:
        for name, v in values.items():
            print(f"omega [{name}]: {v:.12g}")
        print(f"SL-passive: {str(report['sl_passive']).lower()}")
        print(f"passive: {str(report['passive']).lower()}")
        if "witness" in report:
            w = report["witness"]
            print(f"witness: phi={w['phi_best']:.6f} gives dE={w['delta_e_best']:.6g} (positive for phi < {w['phi_max']:.6f})")
    if spread > AGREE_TOL:
        raise Disagreement(f"methods disagree by {spread:.3e}: {values}")
    return EXIT_OK


def cmd_threshold(args) -> int:
    model = build_model(args)
    rows = []
    if model.is_pair and model.params["gamma"] == 1.0:
        for key, value in le.threshold_pair(args.kappa).items():
            rows.append((key, value))
    if args.general:
        rows.append(("p_star_general", le.threshold_general(model, restarts=args.restarts, seed=args.seed)))
    if args.charging:
        rows.append(("q_star", le.charging_threshold(model, restarts=args.restarts, seed=args.seed)))
    if not rows:
        raise BadConfig("nothing to compute: use --general or --charging for this model")
    emit(SweepResult(["quantity", "value"], rows), args)
    return EXIT_OK


def cmd_coherence(args) -> int:
    model = models.build_pair(args.kappa, 1.0)
    base = models.eigenmixture(model, parse_values(args.populations))
    phis = parse_values(args.phi)
    rows = []
    for phi in phis:
        state = models.coherent_perturb(base, args.r)
        direct = le.delta_e(model, state.density, ch.unitary_y(phi))
        closed = le.coherence_closed(args.kappa, base, args.r, phi)
        typeset = le.coherence_delta_e_printed(args.kappa, base, args.r, phi) if phi else 0.0
        if abs(closed - direct) > 1e-9:
            raise Disagreement(f"closed {closed} vs direct {direct} at phi={phi}")
        rows.append((phi, closed, direct, typeset))
    meta = {"witness": le.coherence_witness(args.kappa, base, args.r)}
    emit(SweepResult(["phi", "delta_e_closed", "delta_e_direct", "delta_e_typeset"], rows, meta), args)
    return EXIT_OK


def _compare_point(task):
    kappa, gamma, d0, d1, restarts, seed = task
    model = models.build_pair(kappa, gamma)
    eta, xi, mu = le.pair_coefficients(kappa, gamma, d0, d1)
    ref = le.omega_closed(eta, xi) if gamma == 1.0 else le.omega_aniso(eta, xi, mu)
    res = le.oracle_maximize(model, models.from_deltas(model, d0, d1), restarts=restarts, seed=seed)
    return ref, res.best_delta_e, res.converged


def cmd_oracle_compare(args) -> int:
    if args.resolution < 3:
        raise BadConfig("resolution must be at least 3")
    models.build_pair(args.kappa, args.gamma)  # validates parameters
    axis = np.linspace(-1.0, 1.0, args.resolution)
    grid = [(i, j, float(a), float(b)) for i, a in enumerate(axis) for j, b in enumerate(axis)]
    inside = [g for g in grid if abs(g[2]) + abs(g[3]) <= 1.0 + 1e-12]
    out = pmap(_compare_point, [(args.kappa, args.gamma, g[2], g[3], args.restarts, args.seed) for g in inside])
    found = dict(zip([(g[0], g[1]) for g in inside], out))
    rows = []
    worst = 0.0
    for i, j, d0, d1 in grid:
        if (i, j) in found:
            ref, orc, conv = found[(i, j)]
            worst = max(worst, abs(ref - orc))
            rows.append((i, j, d0, d1, ref, orc, abs(ref - orc), conv, 0))
        else:
            rows.append((i, j, d0, d1, math.nan, math.nan, math.nan, False, 1))
    cols = ["i", "j", "delta0", "delta1", "reference", "oracle", "abs_diff", "converged", "masked"]
    emit(SweepResult(cols, rows, {"max_abs_diff": worst, "tolerance": AGREE_TOL}), args)
    if worst > AGREE_TOL:
        raise Disagreement(f"oracle and reference differ by up to {worst:.3e}")
    return EXIT_OK


def cmd_verify(args) -> int:
    keys = parse_values(args.only, str) if args.only else list(acceptance.CHECKS)
    unknown = [k for k in keys if k not in acceptance.CHECKS]
    if unknown:
        raise BadConfig(f"unknown checks {unknown}")
    if args.list:
        for k in keys:
            doc = (acceptance.CHECKS[k].__doc__ or acceptance.CHECKS[k].__name__).strip()
            print(f"{k}  {doc}")
        return EXIT_OK
    failed = 0
    for key in keys:
        check = acceptance.CHECKS[key](tol_scale=args.tol_scale, seed=args.seed)
        print(check.line(), flush=True)
        failed += not check.passed
    print(f"{len(keys) - failed}/{len(keys)} checks passed")
    return EXIT_VERIFY if failed else EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _model_args(p, kappa=2.0):
    p.add_argument("--model", choices=["pair", "xxx", "chain"], default="pair")
    p.add_argument("--kappa", type=float, default=kappa)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--n", type=int, default=2, help="chain length")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output file (stdout when omitted)")
    common.add_argument("--format", choices=["csv", "json", "svg"], default="csv")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--restarts", type=int, help="oracle restarts (16; 64 for oracle-compare)")

    parser = argparse.ArgumentParser(prog="slpassive", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"slpassive {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", parents=[common], help="energies and ground-state checks")
    _model_args(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("omega-grid", parents=[common], help="local energy over the delta diamond")
    p.add_argument("--kappa", type=float, default=2.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--resolution", type=int, default=41)
    p.set_defaults(func=cmd_omega_grid)

    p = sub.add_parser("critical-temp", parents=[common], help="T*(kappa) sweeps")
    p.add_argument("--family", choices=["pair", "chain", "xxx"], default="pair")
    p.add_argument("--kappa", dest="kappa_range", default="1:3:0.1", help="a:b:step or a,b,c")
    p.add_argument("--gamma", dest="gammas", default="0,0.5,1")
    p.add_argument("--n", dest="ns", default="2,3,4,5,6")
    p.add_argument("--zero-threshold", type=float, default=1e-4)
    p.add_argument("--no-inset", action="store_true")
    p.set_defaults(func=cmd_critical_temp)

    p = sub.add_parser("local-energy", parents=[common], help="local energy of one state by every method")
    _model_args(p)
    p.add_argument("--populations", help="comma-separated eigenstate populations, ascending energy")
    p.add_argument("--temperature", type=float, help="Gibbs state temperature ('inf' allowed)")
    p.add_argument("--r", type=float, default=0.0, help="coherence between levels 0 and 2")
    p.set_defaults(func=cmd_local_energy)

    p = sub.add_parser("threshold", parents=[common], help="threshold populations p* and q*")
    _model_args(p)
    p.add_argument("--general", action="store_true", help="also run the oracle bisection for p*")
    p.add_argument("--charging", action="store_true", help="also compute the charging threshold q*")
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("coherence", parents=[common], help="dE of a coherently perturbed pair state")
    p.add_argument("--kappa", type=float, default=2.0)
    p.add_argument("--populations", default="0.95,0,0.05,0")
    p.add_argument("--r", type=float, default=0.1)
    p.add_argument("--phi", default="0:0.5:0.005", help="a:b:step or a,b,c")
    p.set_defaults(func=cmd_coherence)

    p = sub.add_parser("oracle-compare", parents=[common], help="oracle vs closed form on the diamond")
    p.add_argument("--kappa", type=float, default=2.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--resolution", type=int, default=11)
    p.set_defaults(func=cmd_oracle_compare)

    p = sub.add_parser("verify", parents=[common], help="run the acceptance checks")
    p.add_argument("--list", action="store_true", help="list checks without running them")
    p.add_argument("--only", help="comma-separated check keys, e.g. C1,C5")
    p.add_argument("--tol-scale", type=float, default=1.0,
                   help="multiply every tolerance; a negative value forces failures")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.restarts is None:
        args.restarts = 64 if args.command == "oracle-compare" else 16
    if args.restarts < 1:
        print("error: --restarts must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (BadConfig, SLPassiveError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (Disagreement, AssertionError) as exc:
        print(f"method disagreement: {exc}", file=sys.stderr)
        return EXIT_DISAGREE
