"""Command-line entry point.

Every subcommand resolves a run configuration from defaults, an optional JSON
file and flag overrides, and writes it back in the output header together
with its hash, the master seed and the package version.
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional, Sequence

from . import __version__
from .compiler import verify_cluster_state
from .dem import build_dem
from .experiments.fitting import FitResult, fit_scaling, fit_threshold
from .experiments.runner import (
    RunConfig, clean_circuit, find_pstar, ne_for, parse_ne_rule, read_csv, rows_to_csv, run_config,
)
from .experiments.tables import DEFAULT_TARGETS, format_table, requisite_table
from .lattice import build_rhg
from .noise import NoiseSpec, attach_noise

COMMANDS = ("compile", "verify", "sample", "threshold", "scaling", "tables", "dem")


class CliError(Exception):
    pass


def _floats(s: str) -> List[float]:
    return [float(x) for x in s.split(",") if x]


def _ints(s: str) -> List[int]:
    return [int(x) for x in s.split(",") if x]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="emitarray", description="Emitter-array cluster-state experiments.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--out", help="output file (default: stdout)")
        sp.add_argument("--shots", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int)
        sp.add_argument("--protocol", choices=("S1", "S2", "M1", "M2"))
        sp.add_argument("--L", type=_ints, help="comma-separated even sizes")
        sp.add_argument("--ne", help="emitter count k or rule L/m")
        sp.add_argument("--p", type=_floats)
        sp.add_argument("--pe-ratio", type=_floats)
        sp.add_argument("--eta-z", type=_floats)
        sp.add_argument("--eta-loss", type=_floats)
        sp.add_argument("--loss-mode", choices=("flat_L2_over_ne", "residence"))
        sp.add_argument("--observable-mode", choices=("x", "any"))
        if name in ("threshold", "scaling"):
            sp.add_argument("--input", help="existing CSV (threshold) or JSON point list (scaling) to fit")
        if name == "scaling":
            sp.add_argument("--form", choices=("sqrt", "linear"), help="default: sqrt for constant n_e, else linear")
        if name == "tables":
            sp.add_argument("--fits", nargs="+", required=True, help="fit JSON files written by 'scaling'")
            sp.add_argument("--targets", type=_floats, default=list(DEFAULT_TARGETS))
    return ap


def resolve_config(args) -> RunConfig:
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise CliError(f"cannot read config {args.config}: {e}")
        if not isinstance(data, dict):
            raise CliError("config must be a JSON object")
    overrides = {
        "shots": args.shots, "seed": args.seed, "workers": args.workers, "protocol": args.protocol,
        "L": args.L, "n_e": args.ne, "p": args.p, "pe_ratio": args.pe_ratio, "eta_z": args.eta_z,
        "eta_loss": args.eta_loss, "loss_mode": args.loss_mode, "observable_mode": args.observable_mode,
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    if args.shots is not None and args.shots <= 0:
        raise CliError("shots must be positive")
    try:
        return RunConfig.from_dict(data)
    except (TypeError, ValueError) as e:
        raise CliError(f"invalid config: {e}")


def header_lines(cfg: RunConfig, command: str) -> List[str]:
    return [
        f"emitarray {__version__} {command}",
        f"config_hash {cfg.config_hash()} seed {cfg.seed}",
        "config " + json.dumps({k: v for k, v in cfg.to_dict().items() if k != "workers"}, sort_keys=True),
    ]


def _json_report(cfg: RunConfig, command: str, body: dict) -> str:
    out = {
        "version": __version__, "command": command, "config_hash": cfg.config_hash(), "seed": cfg.seed,
        "config": {k: v for k, v in cfg.to_dict().items() if k != "workers"},
    }
    out.update(body)
    return json.dumps(out, indent=2, sort_keys=True) + "\n"


def _single_noise(cfg: RunConfig) -> NoiseSpec:
    specs = cfg.noise_specs()
    if len(specs) != 1:
        raise CliError("this command needs a single noise setting")
    return specs[0]


def _noisy_circuit(cfg: RunConfig):
    L = cfg.L[0]
    n_e = ne_for(cfg.n_e, L)
    c = clean_circuit(cfg.protocol, L, n_e, cfg.measure, cfg.allow_interruption)
    return attach_noise(c, _single_noise(cfg), L, n_e)


def cmd_compile(cfg: RunConfig, args) -> str:
    c = _noisy_circuit(cfg)
    return "".join(f"# {h}\n" for h in header_lines(cfg, "compile")) + c.to_text()


def cmd_dem(cfg: RunConfig, args) -> str:
    dem = build_dem(_noisy_circuit(cfg))
    return "".join(f"# {h}\n" for h in header_lines(cfg, "dem")) + dem.to_text()


def cmd_verify(cfg: RunConfig, args) -> str:
    lines = [f"# {h}" for h in header_lines(cfg, "verify")]
    failed = []
    for L in cfg.L:
        n_e = ne_for(cfg.n_e, L)
        c = clean_circuit(cfg.protocol, L, n_e, cfg.measure, cfg.allow_interruption)
        rep = verify_cluster_state(c, build_rhg(L))
        lines.append(f"{cfg.protocol} L={L} n_e={n_e} checked={rep.checked} {'ok' if rep.ok else 'FAIL ' + rep.message}")
        if not rep.ok:
            failed.append(f"{cfg.protocol} L={L}: {rep.message}")
    text = "\n".join(lines) + "\n"
    if failed:
        raise CliError("verification failed: " + "; ".join(failed), text)
    return text


def cmd_sample(cfg: RunConfig, args) -> str:
    return rows_to_csv(run_config(cfg), header_lines(cfg, "sample"))


def cmd_threshold(cfg: RunConfig, args) -> str:
    if args.input:
        with open(args.input) as fh:
            rows = read_csv(fh.read())
    else:
        rows = run_config(cfg)
    try:
        fit = fit_threshold([r["p"] for r in rows], [r["d"] for r in rows], [r["p_logical"] for r in rows])
    except ValueError as e:
        raise CliError(f"threshold fit rejected: {e}")
    return _json_report(cfg, "threshold", {"fit": json.loads(fit.to_json()), "points": rows})


def cmd_scaling(cfg: RunConfig, args) -> str:
    kind, k = parse_ne_rule(cfg.n_e)
    form = args.form or ("sqrt" if kind == "const" else "linear")
    factor = float(k)
    if args.input:
        with open(args.input) as fh:
            points = json.load(fh)["points"]
    else:
        if len(cfg.p) != 1 or len(cfg.pe_ratio) != 1 or len(cfg.eta_loss) != 1:
            raise CliError("scaling sweeps eta_z only; give single p, pe_ratio and eta_loss")
        points = []
        for eta in cfg.eta_z:
            spec = NoiseSpec(cfg.p[0], cfg.pe_ratio[0], eta, cfg.eta_loss[0], cfg.loss_mode,
                             cfg.loss_constant, cfg.readout_gate)
            res = find_pstar(cfg.protocol, cfg.n_e, spec, cfg.L, cfg.shots, cfg.seed, cfg.observable_mode,
                             cfg.budgets(), cfg.target_rel_width, cfg.weights)
            points.append(dict(eta=eta, **res.to_dict()))
    usable = [pt for pt in points if 0 < pt["pstar"] < 1]
    try:
        fit = fit_scaling([pt["eta"] for pt in usable], [pt["pstar"] for pt in usable], form, factor)
    except ValueError as e:
        raise CliError(f"scaling fit rejected: {e}")
    fit.meta = {"protocol": cfg.protocol, "n_e": str(cfg.n_e)}
    return _json_report(cfg, "scaling", {"fit": json.loads(fit.to_json()), "points": points})


def cmd_tables(cfg: RunConfig, args) -> str:
    fits = {}
    for path in args.fits:
        with open(path) as fh:
            d = json.load(fh)
        fit = FitResult.from_dict(d.get("fit", d))
        if fit.kind != "scaling":
            raise CliError(f"{path} is not a scaling fit")
        label = f"{fit.meta.get('protocol', '')} n_e={fit.meta.get('n_e', fit.factor)}".strip()
        fits[label] = fit
    rows = requisite_table(fits, args.targets)
    return "".join(f"# {h}\n" for h in header_lines(cfg, "tables")) + format_table(rows, list(fits))


HANDLERS = {
    "compile": cmd_compile, "verify": cmd_verify, "sample": cmd_sample, "threshold": cmd_threshold,
    "scaling": cmd_scaling, "tables": cmd_tables, "dem": cmd_dem,
}


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        text = HANDLERS[args.command](cfg, args)
    except CliError as e:
        if len(e.args) > 1:
            _emit(e.args[1], args.out)
        print(f"error: {e.args[0]}", file=sys.stderr)
        return 1
    except (ValueError, KeyError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    _emit(text, args.out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
