"""Command-line front end.

Every command writes plot-ready data (CSV or JSON) and echoes its fully
resolved configuration into the output header. Floats are printed with
17 significant digits.
"""

from __future__ import annotations

import argparse
import ast
import csv
import io
import json
import logging
import math
import operator
import sys

import numpy as np

from . import exact_collective as ec
from . import gaussian_model as gm
from .internal_dynamics import enhancement_grid, internal_squeezing_grid, zeta_sq_analytic
from .physical_layer import FRAMES, AtomLightParams, reduction_report
from .protocol import REPORT_FIELDS, SWEEPABLE, ScenarioConfig, run_scenario, sweep
from .selfcheck import FAULTS, run_selfcheck
from .spin_algebra import make_spin_space

log = logging.getLogger("twist_echo")

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}


def parse_number(text) -> float:
    """Float from text such as ``'0.3'``, ``'pi/2'`` or ``'3*pi/4'``."""
    if isinstance(text, (int, float)):
        return float(text)

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
            return -ev(node.operand)
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        raise ValueError(f"cannot parse number {text!r}")

    try:
        return ev(ast.parse(str(text).strip(), mode="eval"))
    except SyntaxError:
        raise ValueError(f"cannot parse number {text!r}") from None


def parse_grid(text: str) -> np.ndarray:
    """``start:stop:steps`` (inclusive) into a linspace."""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise ValueError(f"grid must look like start:stop:steps, got {text!r}")
    start, stop = parse_number(parts[0]), parse_number(parts[1])
    try:
        steps = int(parts[2])
    except ValueError:
        raise ValueError(f"grid step count must be an integer, got {parts[2]!r}") from None
    if steps < 1:
        raise ValueError("grid needs at least one point")
    return np.linspace(start, stop, steps)


def parse_f_list(text) -> list:
    if isinstance(text, (int, float)):
        return [make_spin_space(text).f]
    if isinstance(text, list):
        return [make_spin_space(v).f for v in text]
    return [make_spin_space(tok).f for tok in str(text).split(",") if tok.strip()]


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    return format(float(value), ".16e")


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    return value


def render(command, config, columns, rows, fmt) -> str:
    config = _jsonable(config)
    if fmt == "json":
        payload = {"command": command, "config": config, "columns": columns,
                   "rows": [[_jsonable(r.get(c)) for c in columns] for r in rows]}
        return json.dumps(payload, indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    buf.write(f"# twist-echo {command}\n")
    buf.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def emit(text, out_path):
    if out_path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def load_config(path) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("config file must hold a JSON object")
    return data


def merged(args, keys) -> dict:
    """Config-file values overridden by any CLI flag that was given."""
    cfg = load_config(args.config)
    unknown = set(cfg) - set(keys) - {"seed"}
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    for key in keys:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


# -- commands ---------------------------------------------------------------


def cmd_enhancement(args):
    cfg = merged(args, ["f", "chi_t_grid"])
    f_values = parse_f_list(cfg.get("f", "1/2,1,3/2,2,5/2,3,7/2,4,9/2,5"))
    grid_text = cfg.get("chi_t_grid", "0:pi:201")
    chis = parse_grid(grid_text)
    rows = []
    for f in f_values:
        analytic, numeric = enhancement_grid(f, chis)
        for c, a, n in zip(chis, analytic, numeric):
            rows.append({"f": f, "chi_t": c, "zeta_sq_analytic": a, "zeta_sq_numeric": n})
    resolved = {"f": f_values, "chi_t_grid": grid_text}
    return resolved, ["f", "chi_t", "zeta_sq_analytic", "zeta_sq_numeric"], rows


def _noise_from(cfg):
    keys = {k: cfg[k] for k in ("epsilon", "beta", "alpha0") if cfg.get(k) is not None}
    return gm.NoiseConfig(**keys) if keys else None


def cmd_squeeze(args):
    cfg = merged(args, ["scheme", "f", "kappa", "chi_t_grid", "epsilon", "beta", "alpha0"])
    scheme = cfg.get("scheme", "echo")
    f = make_spin_space(cfg.get("f", "2")).f
    grid_text = cfg.get("chi_t_grid", "0:pi:201")
    chis = parse_grid(grid_text)
    noise = _noise_from(cfg)
    kappa = cfg.get("kappa")
    if kappa is None and noise is not None and noise.alpha0 is not None:
        kappa = noise.kappa_from_od()
    if kappa is None:
        raise ValueError("squeeze needs --kappa (or --alpha0 with --beta)")
    kappa = parse_number(kappa)
    plain = float(gm.xi_squared(1.0, kappa))
    rows = []
    if scheme == "echo":
        zeta = np.atleast_1d(zeta_sq_analytic(f, chis))
        xi = gm.noisy_xi(zeta, kappa, noise) if noise is not None else gm.xi_squared(zeta, kappa)
        columns = ["chi_t", "zeta_sq", "xi_sq", "xi_plain_sq"]
        for c, z, x in zip(chis, zeta, xi):
            rows.append({"chi_t": c, "zeta_sq": z, "xi_sq": x, "xi_plain_sq": plain})
    elif scheme == "cooperative":
        if noise is not None:
            raise ValueError("the noise model covers the echo and plain_qnd schemes")
        xi_oat = internal_squeezing_grid(f, chis)
        # chi_t = 0 gives xi_oat = 1 up to rounding
        xi_oat = np.clip(xi_oat, 1e-300, 1.0)
        xi_s = gm.cooperative_xi(xi_oat, kappa)
        columns = ["chi_t", "xi_oat_sq", "xi_s_sq", "xi_plain_sq"]
        for c, o, s in zip(chis, xi_oat, xi_s):
            rows.append({"chi_t": c, "xi_oat_sq": o, "xi_s_sq": s, "xi_plain_sq": plain})
    elif scheme == "plain_qnd":
        xi = gm.noisy_xi(1.0, kappa, noise) if noise is not None else plain
        columns = ["chi_t", "xi_sq", "xi_plain_sq"]
        for c in chis:
            rows.append({"chi_t": c, "xi_sq": xi, "xi_plain_sq": plain})
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    resolved = {"scheme": scheme, "f": f, "kappa": kappa, "chi_t_grid": grid_text,
                "noise": None if noise is None else noise.__dict__}
    return resolved, columns, rows


def _scenario_from(args, default_engine=None) -> ScenarioConfig:
    keys = ["scheme", "engine", "f", "n_atoms", "chi_t", "kappa", "alpha_tilde", "axis",
            "x_m", "n_max", "epsilon", "beta", "alpha0", "feedback_gain", "seed",
            "noise", "T", "sample_outcome"]
    cfg = merged(args, keys)
    if getattr(args, "sample_outcome", False):
        cfg["sample_outcome"] = True
    if default_engine is not None:
        cfg.setdefault("engine", default_engine)
    for key in ("chi_t", "kappa", "alpha_tilde", "x_m", "feedback_gain"):
        if isinstance(cfg.get(key), str):
            cfg[key] = parse_number(cfg[key])
    return ScenarioConfig.from_dict(cfg)


def _report_row(report, extra=None) -> dict:
    row = dict(report.values())
    row.update(extra or {})
    for k in ("xi_w_sq_before_rf", "outcome_density", "x_m"):
        if k in report.extras:
            row[k] = report.extras[k]
    if "kappa" in report.provenance:
        row["kappa"] = report.provenance["kappa"]
    if "alpha_tilde" in report.provenance:
        row["alpha_tilde"] = report.provenance["alpha_tilde"]
    return row


def cmd_exact(args):
    scenario = _scenario_from(args, default_engine="exact")
    report = run_scenario(scenario)
    columns = ["kappa", "alpha_tilde", "x_m", "outcome_density", *REPORT_FIELDS, "xi_w_sq_before_rf"]
    if args.snapshot:
        if scenario.engine == "gaussian":
            raise ValueError("--snapshot needs the exact engine")
        alpha = scenario.resolved_alpha_tilde()
        chi_t = 0.0 if scenario.scheme == "plain_qnd" else scenario.chi_t
        qcfg = ec.QndConfig(alpha, scenario.n_atoms, scenario.f, axis=scenario.axis,
                            n_max=scenario.n_max, x_m=report.extras["x_m"])
        with open(args.snapshot, "w", encoding="utf-8") as fh:
            fh.write(ec.run_echo_protocol(qcfg, chi_t).to_json(indent=1))
    return scenario.to_dict(), [c for c in columns], [_report_row(report)]


def cmd_sweep(args):
    scenario = _scenario_from(args)
    if args.param not in SWEEPABLE:
        raise ValueError(f"--param must be one of {SWEEPABLE}")
    if args.values is not None:
        values = [parse_number(v) for v in args.values.split(",") if v.strip()]
    elif args.grid is not None:
        values = list(parse_grid(args.grid))
    else:
        raise ValueError("sweep needs --values or --grid")
    reports = sweep(scenario, args.param, values, workers=args.workers)
    rows = [_report_row(r, {args.param: v}) for r, v in zip(reports, values)]
    columns = [args.param, *REPORT_FIELDS]
    if scenario.engine != "gaussian":
        columns.append("xi_w_sq_before_rf")
    resolved = {"scenario": scenario.to_dict(), "param": args.param, "values": values}
    return resolved, columns, rows


def cmd_reduce(args):
    cfg = merged(args, ["f", "g_coupling", "detuning", "a0", "a1", "a2", "stokes", "phi", "frame"])
    stokes = cfg.get("stokes", "0.5,0,0")
    if isinstance(stokes, str):
        stokes = [parse_number(s) for s in stokes.split(",")]
    params = AtomLightParams(
        g_coupling=parse_number(cfg.get("g_coupling", 1.0)),
        detuning=parse_number(cfg.get("detuning", 1.0)),
        a0=parse_number(cfg.get("a0", 1.0)),
        a1=parse_number(cfg.get("a1", 0.0)),
        a2=parse_number(cfg.get("a2", 1.0)),
        stokes=tuple(stokes),
        phi=parse_number(cfg.get("phi", 1.0)),
        frame=cfg.get("frame", "oat"),
    )
    space = make_spin_space(cfg.get("f", "2"))
    rep = reduction_report(params, space)
    resolved = {"f": space.f, **rep.params, "frame": rep.frame_name, "residual": rep.residual,
                "twist_axis": rep.twist_axis.tolist()}
    rows = [{"operator": c["operator"], "coefficient": c["coefficient"]} for c in rep.to_dict()["coefficients"]]
    rows.append({"operator": "residual", "coefficient": rep.residual})
    return resolved, ["operator", "coefficient"], rows


def cmd_selfcheck(args):
    results = run_selfcheck(args.inject_fault)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"[{status}] {r.name}: {r.detail} ({r.seconds:.2f} s)")
    failed = [r.name for r in results if not r.passed]
    print(f"selfcheck: {len(results) - len(failed)}/{len(results)} passed")
    return 1 if failed else 0


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its values")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--seed", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="twist-echo", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enhancement", parents=[common], help="enhancement factor zeta^2 vs chi_t")
    p.add_argument("--f", help="comma list, e.g. 1/2,2,7/2")
    p.add_argument("--chi-t-grid", dest="chi_t_grid", help="start:stop:steps, e.g. 0:pi:201")

    p = sub.add_parser("squeeze", parents=[common], help="Gaussian squeezing vs chi_t")
    p.add_argument("--scheme", choices=("echo", "cooperative", "plain_qnd"))
    p.add_argument("--f")
    p.add_argument("--kappa", type=parse_number)
    p.add_argument("--chi-t-grid", dest="chi_t_grid")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--alpha0", type=float)

    def scenario_flags(p):
        p.add_argument("--scheme", choices=("echo", "cooperative", "plain_qnd"))
        p.add_argument("--engine", choices=("exact", "gaussian", "both"))
        p.add_argument("--f")
        p.add_argument("--n-atoms", dest="n_atoms", type=int)
        p.add_argument("--chi-t", dest="chi_t", type=parse_number)
        p.add_argument("--kappa", type=parse_number)
        p.add_argument("--alpha-tilde", dest="alpha_tilde", type=parse_number)
        p.add_argument("--axis", choices=("x", "y"))
        p.add_argument("--x-m", dest="x_m", type=parse_number)
        p.add_argument("--n-max", dest="n_max", type=int)
        p.add_argument("--feedback-gain", dest="feedback_gain", type=parse_number)
        p.add_argument("--epsilon", type=float)
        p.add_argument("--beta", type=float)
        p.add_argument("--alpha0", type=float)

    p = sub.add_parser("exact", parents=[common], help="single exact-engine protocol run")
    scenario_flags(p)
    p.add_argument("--sample-outcome", action="store_true", help="draw x_m from the homodyne density")
    p.add_argument("--snapshot", help="write the final atomic state as JSON")

    p = sub.add_parser("sweep", parents=[common], help="sweep one scenario parameter")
    scenario_flags(p)
    p.add_argument("--sample-outcome", action="store_true")
    p.add_argument("--param", required=True, choices=SWEEPABLE)
    p.add_argument("--values", help="comma list of values")
    p.add_argument("--grid", help="start:stop:steps")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("reduce-hamiltonian", parents=[common], help="decompose the atom-light Hamiltonian")
    p.add_argument("--f")
    p.add_argument("--g", dest="g_coupling", type=parse_number)
    p.add_argument("--detuning", type=parse_number)
    p.add_argument("--a0", type=parse_number)
    p.add_argument("--a1", type=parse_number)
    p.add_argument("--a2", type=parse_number)
    p.add_argument("--stokes", help="sx,sy,sz")
    p.add_argument("--phi", type=parse_number)
    p.add_argument("--frame", choices=sorted(FRAMES))

    p = sub.add_parser("selfcheck", help="run the invariant suite")
    p.add_argument("--inject-fault", dest="inject_fault", choices=FAULTS)
    p.add_argument("-v", "--verbose", action="store_true")
    return parser


COMMANDS = {
    "enhancement": cmd_enhancement,
    "squeeze": cmd_squeeze,
    "exact": cmd_exact,
    "sweep": cmd_sweep,
    "reduce-hamiltonian": cmd_reduce,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if args.command == "selfcheck":
        return cmd_selfcheck(args)
    try:
        config, columns, rows = COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        parser.exit(2, f"twist-echo {args.command}: error: {exc}\n")
    if args.seed is not None:
        config = {**config, "seed": args.seed}
    emit(render(args.command, config, columns, rows, args.format), args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
