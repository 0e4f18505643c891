"""Command-line front end.

    gaptooth relax --m 10 --seed 3 --out_dir out/
    gaptooth dambreak --config runs/shallow.cfg --times 0,2.4,4,6.6

Every subcommand accepts ``--config FILE`` holding ``key=value`` lines;
flags given on the command line win over the file.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import sys
from fractions import Fraction
from pathlib import Path

from .consistency import EXPECTED, ConsistencyError, run_convergence
from .coupling import CouplingError, CouplingOrder
from .grid import LatticeError, Topology
from .harness import (
    BETWEEN_PATCHES,
    FULL_DOMAIN,
    GAP_TOOTH,
    IN_PATCH,
    DamBreakConfig,
    NumericalFailure,
    run_dambreak,
    run_periodic_relaxation,
    run_spectrum,
    snapshot_filename,
    timing_comparison,
    write_run_metadata,
)
from .integrator import RK45, TRAPEZOIDAL, IntegrationError, IntegratorConfig
from .models import DepthError
from .solver import BoundaryCondition, BoundaryError, GhostClosure
from .spectrum import EigenError, SpectrumError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


class ConfigError(ValueError):
    pass


def _real(text: str) -> float:
    """Accept decimals and fractions such as ``1/6``."""
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"not a number: {text!r}") from None


def _times(text: str) -> tuple[float, ...]:
    return tuple(_real(t) for t in text.split(",") if t.strip())


def _choice(options):
    def parse(text: str) -> str:
        if text not in options:
            raise ValueError(f"{text!r} is not one of {', '.join(options)}")
        return text

    return parse


def _bc(text: str) -> str:
    BoundaryCondition.parse(text)
    return text


CONFIG_KEYS = {
    "L": _real,
    "m": int,
    "n": int,
    "r": _real,
    "tan_theta": _real,
    "coupling_order": _choice([o.value for o in CouplingOrder]),
    "topology": _choice([t.value for t in Topology]),
    "ghost_closure": _choice([g.value for g in GhostClosure]),
    "bc_left": _bc,
    "bc_right": _bc,
    "downstream_depth": _real,
    "dam_smoothing": _real,
    "placement": _choice([IN_PATCH, BETWEEN_PATCHES]),
    "rel_tol": _real,
    "abs_tol": _real,
    "seed": int,
    "times": _times,
    "out_dir": Path,
}


def read_config(path: Path) -> dict[str, str]:
    """Raw ``key=value`` pairs; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config file {path}: {err}") from err
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value.strip()
    return out


def resolve(args: argparse.Namespace) -> dict:
    """Merge the config file with command-line flags and convert values."""
    raw = read_config(args.config) if args.config else {}
    for key in CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            raw[key] = flag
    out = {}
    for key, value in raw.items():
        try:
            out[key] = CONFIG_KEYS[key](value) if isinstance(value, str) else value
        except (ValueError, BoundaryError) as err:
            raise ConfigError(f"bad value for {key}: {err}") from err
    return out


def _integrator(cfg: dict, method: str | None) -> IntegratorConfig:
    base = IntegratorConfig()
    return IntegratorConfig(
        method=method or base.method,
        rel_tol=cfg.get("rel_tol", base.rel_tol),
        abs_tol=cfg.get("abs_tol", base.abs_tol),
    )


def _require_topology(cfg: dict, wanted: Topology, command: str) -> None:
    got = cfg.get("topology")
    if got is not None and Topology(got) is not wanted:
        raise ConfigError(f"{command} runs on a {wanted.value} domain, config asks for {got}")


def _out_dir(cfg: dict) -> Path:
    return Path(cfg.get("out_dir", "out"))


def cmd_relax(args, cfg) -> int:
    _require_topology(cfg, Topology.PERIODIC, "relax")
    kw = {k: cfg[k] for k in ("m", "n", "r", "tan_theta", "seed", "L") if k in cfg}
    res = run_periodic_relaxation(
        **kw,
        times=cfg.get("times", (0.0, 2.0, 4.0)),
        order=cfg.get("coupling_order", "cubic"),
        ghost=cfg.get("ghost_closure", GhostClosure.COPY_INNER.value),
        integrator=_integrator(cfg, args.method),
    )
    out = _out_dir(cfg)
    for snap in res.snapshots():
        snap.write(out / snapshot_filename("relax", snap.time))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "roughness", "amplitude", "crest"])
    for row in zip(res.times, res.roughness, res.amplitude, res.crest):
        w.writerow([f"{v:.17g}" for v in row])
    (out / "relax_summary.csv").write_text(buf.getvalue())
    tr = res.trajectory
    write_run_metadata(out / "relax_run.json", {"steps": tr.steps, "rejected": tr.rejected, "evaluations": tr.evaluations})
    for t, rough, amp in zip(res.times, res.roughness, res.amplitude):
        print(f"t={t:g} roughness={rough:.4g} amplitude={amp:.4g}")
    return EXIT_OK


def cmd_spectrum(args, cfg) -> int:
    _require_topology(cfg, Topology.PERIODIC, "spectrum")
    kw = {k: cfg[k] for k in ("m", "n", "r", "tan_theta", "L") if k in cfg}
    _, rep = run_spectrum(
        **kw,
        order=cfg.get("coupling_order", "cubic"),
        ghost=cfg.get("ghost_closure", GhostClosure.COPY_INNER.value),
        backend=args.backend,
        workers=args.workers,
    )
    out = _out_dir(cfg)
    out.mkdir(parents=True, exist_ok=True)
    (out / "spectrum.csv").write_text(rep.to_csv())
    print(f"eigenvalues={rep.eigenvalues.size} zero={rep.zero_modes} slow={rep.slow_set.size} fast={rep.fast_set.size}")
    print(f"slow real={', '.join(f'{v:.5g}' for v in rep.real_modes())}")
    print(f"slow pairs={', '.join(f'{v:.4g}' for v in rep.complex_pairs())}")
    print(f"gap_ratio={rep.gap_ratio:.4g}")
    return EXIT_OK


def dam_break_config(cfg: dict, method: str | None) -> DamBreakConfig:
    _require_topology(cfg, Topology.BOUNDED, "dambreak")
    fields = {
        "L": "L", "m": "m", "n": "n", "r": "r", "tan_theta": "tan_theta",
        "coupling_order": "order", "ghost_closure": "ghost", "bc_left": "bc_left", "bc_right": "bc_right",
        "downstream_depth": "downstream_depth", "dam_smoothing": "dam_smoothing", "placement": "placement",
        "times": "times",
    }
    kw = {dst: cfg[src] for src, dst in fields.items() if src in cfg}
    try:
        return DamBreakConfig(**kw, integrator=_integrator(cfg, method))
    except ValueError as err:
        raise ConfigError(str(err)) from err


def _dam_break(args, cfg, mode: str, prefix: str) -> int:
    dcfg = dam_break_config(cfg, args.method)
    res = run_dambreak(dcfg, mode)
    out = _out_dir(cfg)
    for snap in res.snapshots:
        snap.write(out / snapshot_filename(prefix, snap.time))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "area", "bore"])
    for t, a, b in zip(dcfg.times, res.areas, res.bores):
        w.writerow([f"{t:.17g}", f"{a:.17g}", f"{b:.17g}"])
    (out / f"{prefix}_area.csv").write_text(buf.getvalue())
    write_run_metadata(out / f"{prefix}_run.json", res.run_info())
    for t, a, b in zip(dcfg.times, res.areas, res.bores):
        print(f"t={t:g} area={a:.6g} bore={b:.5g}")
    print(f"area change {100 * res.area_loss:.3g}%  wall {res.wall_seconds:.3g}s")
    return EXIT_OK


def cmd_dambreak(args, cfg) -> int:
    return _dam_break(args, cfg, GAP_TOOTH, "dambreak")


def cmd_reference(args, cfg) -> int:
    return _dam_break(args, cfg, FULL_DOMAIN, "reference")


def cmd_consistency(args, cfg) -> int:
    out = _out_dir(cfg)
    out.mkdir(parents=True, exist_ok=True)
    chunks = []
    for system, order in EXPECTED:
        rep = run_convergence(system, order)
        chunks.append(rep.to_csv() if not chunks else rep.to_csv().split("\n", 1)[1])
        ok = "pass" if rep.passed else "FAIL"
        print(f"{system:10s} {order:8s} slope={rep.slope:.3f} expected={rep.expected:g} {ok}")
    (out / "consistency.csv").write_text("".join(chunks))
    return EXIT_OK


def cmd_timing(args, cfg) -> int:
    dcfg = dam_break_config(cfg, args.method)
    res = timing_comparison(dcfg, repeats=args.repeats)
    info = dataclasses.asdict(res) | {"ratio": res.ratio, "method": dcfg.integrator.method, "m": dcfg.m}
    write_run_metadata(_out_dir(cfg) / "timing.json", info)
    print(f"gap-tooth {res.gap_tooth_seconds:.3f}s  full domain {res.full_domain_seconds:.3f}s  ratio {res.ratio:.3g}")
    return EXIT_OK


COMMANDS = {
    "relax": (cmd_relax, "periodic relaxation of a macroscale wave with micro noise"),
    "spectrum": (cmd_spectrum, "Jacobian spectrum about the uniform equilibrium"),
    "dambreak": (cmd_dambreak, "gap-tooth dam break"),
    "reference": (cmd_reference, "full-domain dam break at the same micro step"),
    "consistency": (cmd_consistency, "measured consistency orders of the coupling"),
    "timing": (cmd_timing, "wall time of gap-tooth against full-domain dam break"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key=value file; flags override it")
    for key in CONFIG_KEYS:
        flags = [f"--{key}"]
        if "_" in key:
            flags.append(f"--{key.replace('_', '-')}")
        common.add_argument(*flags, dest=key, default=None, metavar=key.upper())
    common.add_argument("--method", choices=[RK45, TRAPEZOIDAL], default=None)

    parser = argparse.ArgumentParser(prog="gaptooth", description="Gap-tooth wave simulations.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        if name == "spectrum":
            p.add_argument("--backend", choices=["qr", "numpy"], default="qr")
            p.add_argument("--workers", type=int, default=1)
        if name == "timing":
            p.add_argument("--repeats", type=int, default=1)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = resolve(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    handler = COMMANDS[args.command][0]
    try:
        return handler(args, cfg)
    except (ConfigError, LatticeError, CouplingError, BoundaryError, ConsistencyError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, IntegrationError, DepthError, EigenError, SpectrumError, FloatingPointError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
