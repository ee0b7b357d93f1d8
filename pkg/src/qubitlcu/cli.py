"""Command-line entry point: ``qubitlcu {sweep,surface,profiles,compile,capacity}``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import experiments as ex
from .channels import ChannelSpecError
from .linalg import RejectedInputError
from .qasm import QasmParseError

EXIT_CONFIG = 2


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _sweep(args) -> None:
    if args.preset and args.config:
        raise ex.ConfigError("--preset and --config are mutually exclusive")
    if args.preset:
        if args.preset not in ex.PRESETS:
            raise ex.ConfigError(f"--preset: unknown preset {args.preset!r}; expected one of {sorted(ex.PRESETS)}")
        raw = ex.PRESETS[args.preset]().to_json()
    elif args.config:
        raw = ex.load_json_file(args.config)
    else:
        raise ex.ConfigError("sweep needs --config PATH or --preset NAME")
    for key, val in (("shots", args.shots), ("seed", args.seed), ("grid", args.grid)):
        if val is not None:
            raw[key] = val
    cfg = ex.sweep_config_from_json(raw)
    _emit(ex.run_sweep(cfg, threads=args.threads), args.out)


def _surface(args) -> None:
    raw = ex.load_json_file(args.config) if args.config else {}
    if args.family:
        raw["family"] = args.family
    if raw.get("kind", "surface") != "surface":
        raise ex.ConfigError("kind: expected 'surface'")
    unknown = sorted(set(raw) - {"kind", "family", "axis1", "axis2", "fixed_params", "grid", "points", "seed"})
    if unknown:
        raise ex.ConfigError(f"{unknown[0]}: unknown field")
    fam = raw.get("family")
    if fam is None:
        raise ex.ConfigError("family: missing (use --family or a config file)")
    points = args.points if args.points is not None else raw.get("points")
    if points is not None:
        points = ex._int(points, "points")
    d1, d2 = ex.default_surface_axes(fam, points)
    a1 = ex.Axis.from_json(raw["axis1"], "axis1") if "axis1" in raw else d1
    a2 = ex.Axis.from_json(raw["axis2"], "axis2") if "axis2" in raw else d2
    try:
        fixed = ex.channels.normalize_params(raw.get("fixed_params", {}), "fixed_params")
    except ChannelSpecError as exc:
        raise ex.ConfigError(str(exc)) from None
    grid = args.grid if args.grid is not None else ex._int(raw.get("grid", 21), "grid")
    _emit(ex.capacity_surface(fam, a1, a2, fixed, grid_n=grid, threads=args.threads), args.out)


def _profiles(args) -> None:
    tables = ex.capacity_profiles(grid_n=args.grid or 21, threads=args.threads)
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        for name, text in tables.items():
            (outdir / f"{name}.csv").write_text(text, encoding="utf-8")
    else:
        sys.stdout.write("\n".join(tables.values()))


def _compile(args) -> None:
    spec = args.spec or args.config
    if not spec:
        raise ex.ConfigError("compile needs a channel spec (positional or --config)")
    text, counts = ex.compile_channel(spec, args.out)
    report = f"single_qubit_gates: {counts['single_qubit']}\ncnot_gates: {counts['cnot']}\n"
    if args.out:
        sys.stdout.write(report)
    else:
        sys.stdout.write(text)
        sys.stderr.write(report)


def _capacity(args) -> None:
    spec = args.spec or args.config
    if not spec:
        raise ex.ConfigError("capacity needs a channel spec (positional or --config)")
    _emit(ex.capacity_report(ex.load_json_file(spec), grid_n=args.grid or 21), args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qubitlcu", description="Qubit channel simulation via LCU circuits.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, grid_help="Bloch-ball grid points per axis for the capacity optimizer"):
        p.add_argument("--config", help="JSON config or channel spec")
        p.add_argument("--out", help="output path (default: standard output)")
        p.add_argument("--grid", type=int, help=grid_help)
        p.add_argument("--threads", type=int, default=1, help="worker processes")
        return p

    p = common(sub.add_parser("sweep", help="parameter sweep of channel metrics"))
    p.add_argument("--preset", help=f"built-in sweep: {', '.join(ex.PRESETS)}")
    p.add_argument("--shots", type=int, help="shots per measured axis (0 = exact only)")
    p.add_argument("--seed", type=int, help="seed for sampled columns")
    p.set_defaults(func=_sweep)

    p = common(sub.add_parser("surface", help="capacity over a two-parameter grid"))
    p.add_argument("--family", choices=sorted(ex.SURFACES))
    p.add_argument("--points", type=int, help="points per surface axis (overrides the family default)")
    p.add_argument("--seed", type=int, help="accepted for interface symmetry; surfaces are exact")
    p.set_defaults(func=_surface)

    p = common(sub.add_parser("profiles", help="the three capacity profiles; --out names a directory"))
    p.set_defaults(func=_profiles)

    for name, func, helptext in (
        ("compile", _compile, "compile a channel spec to OpenQASM 2.0"),
        ("capacity", _capacity, "one-shot capacity of a channel spec"),
    ):
        p = common(sub.add_parser(name, help=helptext))
        p.add_argument("spec", nargs="?", help="JSON channel spec")
        p.set_defaults(func=func)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("qubitlcu: error: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        args.func(args)
    except (ex.ConfigError, ChannelSpecError, QasmParseError, RejectedInputError) as exc:
        print(f"qubitlcu: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
