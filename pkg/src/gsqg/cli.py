"""Command-line entry point: ``gsqg {construct,simulate,sweep,verify,norms}``.

Exit status is 0 when every verdict passes, 1 when a verdict fails and 2 on a
configuration or runtime error (including runs stopped by a resolution guard).
"""
from __future__ import annotations

import argparse
import logging
import sys
import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

from .config import Config, ConfigError, default_config, dump_echo, parse_config
from .experiments import run_experiment, run_verification_suite
from .pseudo import UnderResolvedError, default_grid, evaluate_pseudosolution, make_pseudo_params, source_term
from .radial import RadialProfile, construct_f1, construct_f2, make_seed_bump, write_profile
from .solver import BlowUpError, ResolutionWarning, SolverConfig, integrate
from .spectral import SobolevSpec, read_checkpoint, sobolev_norm

__all__ = ["CliCommand", "main", "dispatch", "build_parser"]

log = logging.getLogger("gsqg")

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2
SUBCOMMANDS = ("construct", "simulate", "sweep", "verify", "norms")


@dataclass
class CliCommand:
    subcommand: str
    config: Optional[Path] = None
    output: Path = Path("gsqg-out")
    seed: int = 0
    verbosity: int = 0
    checkpoint: Optional[Path] = None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gsqg", description="Generalized SQG norm-inflation laboratory.")
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name, help_ in (
        ("construct", "build f1 and f2 and write the radial profiles"),
        ("simulate", "integrate a configured initial datum and write diagnostics"),
        ("sweep", "run one experiment and write its table and verdicts"),
        ("verify", "run the verification battery"),
        ("norms", "print Sobolev norms of a checkpoint"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("-c", "--config", type=Path, help="INI-style configuration file")
        p.add_argument("-o", "--output", type=Path, default=Path("gsqg-out"), help="output directory")
        p.add_argument("--seed", type=int, default=0, help="seed for random test fields")
        p.add_argument("-v", "--verbose", action="count", default=0)
        if name == "norms":
            p.add_argument("checkpoint", nargs="?", type=Path, help="checkpoint file (overrides [norms] checkpoint)")
    return ap


def _load(cmd: CliCommand) -> Config:
    cfg = default_config() if cmd.config is None else parse_config(cmd.config)
    print(dump_echo(cfg), end="")
    return cfg


def _writable(out: Path) -> Path:
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"output directory {out} is not writable: {exc.strerror}") from None
    return out


def _seed(cfg: Config) -> RadialProfile:
    c = cfg["construct"]
    return make_seed_bump(c["seed_a0"], c["seed_a1"])


def _cmd_construct(cmd: CliCommand, cfg: Config) -> int:
    out = _writable(cmd.output)
    c = cfg["construct"]
    f1c = construct_f1(cfg.beta, cfg.gamma, c["c"], c["K"], delta_target=c["delta_target"], seed=_seed(cfg))
    f2 = construct_f2(f1c, c["c"])
    params = {"gamma": cfg.gamma, "beta": cfg.beta, "c": c["c"], "K": c["K"]}
    write_profile(out / "f1.txt", f1c.f1, params)
    write_profile(out / "f2.txt", f2, params)
    print(f"r_cK = {f1c.r_cK:.6g}")
    print(f"lambda1 = {f1c.lambda1:.6g}, lambda2 = {f1c.lambda2:.6g}")
    print(f"||f1||_H^beta = {f1c.hbeta_norm:.6g} (budget {c['c']:g})")
    print(f"|d_r omega|(r_cK) = {f1c.steepness:.6g} (target {c['K'] / (2 * f1c.a1):.6g})")
    print(f"wrote {out / 'f1.txt'} and {out / 'f2.txt'}")
    return EXIT_OK


def _cmd_simulate(cmd: CliCommand, cfg: Config) -> int:
    out = _writable(cmd.output)
    s = cfg["simulate"]
    forcing = None
    if s["initial"].startswith("checkpoint:"):
        theta0, gamma, _ = read_checkpoint(s["initial"].split(":", 1)[1])
        if gamma != cfg.gamma:
            log.warning("checkpoint gamma %g differs from model.gamma %g; using model.gamma", gamma, cfg.gamma)
    else:
        c = cfg["construct"]
        p = make_pseudo_params(cfg.gamma, cfg.beta, s["N"], c["c"], c["K"], seed=_seed(cfg),
                               delta_target=c["delta_target"])
        if s["initial"] == "radial":
            p = replace(p, f2=p.f2.scaled(0.0))
        grid = default_grid(p, s["n"], s["box_factor"])
        theta0 = evaluate_pseudosolution(p, 0.0, grid)
        if s["forcing"] == "manufactured":
            forcing = lambda t: source_term(p, t, grid, "manufactured")  # noqa: E731
    conf = SolverConfig(
        s["t_end"], cfl=s["cfl"], checkpoint_every=s["checkpoint_every"], forcing=forcing,
        checkpoint_dir=str(out / "checkpoints"), csv_path=str(out / "diagnostics.csv"),
    )
    specs = [SobolevSpec(x) for x in s["norms"]]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ResolutionWarning)
        _, diag = integrate(theta0, conf, cfg.gamma, specs)
    print(",".join(diag.columns))
    print(",".join(f"{v:.10g}" for v in diag.row(-1)))
    print(f"steps {diag.steps}; relative L2 drift {diag.relative_drift('l2'):.3g}")
    if diag.under_resolved:
        print(f"error: {diag.events[0]}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


def _report(result) -> int:
    print(result.summary())
    if result.invalid:
        for v in result.verdicts:
            if not v.valid:
                print(f"error: criterion {v.criterion} invalid: {v.note}", file=sys.stderr)
        for note in result.notes:
            print(f"error: {note}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK if result.passed else EXIT_FAIL


def _cmd_sweep(cmd: CliCommand, cfg: Config) -> int:
    out = _writable(cmd.output)
    sc = cfg.sweep_config(seed=cmd.seed, output=out)
    result = run_experiment(sc)
    print(f"wrote results to {out}")
    return _report(result)


def _cmd_verify(cmd: CliCommand, cfg: Config) -> int:
    out = _writable(cmd.output)
    sc = replace(cfg.sweep_config(seed=cmd.seed), experiment="verify")
    result = run_verification_suite(sc)
    result.write(out, figures=False)
    return _report(result)


def _cmd_norms(cmd: CliCommand, cfg: Config) -> int:
    n = cfg["norms"]
    path = cmd.checkpoint or (Path(n["checkpoint"]) if n["checkpoint"] else None)
    if path is None:
        raise ConfigError("norms: no checkpoint given (argument or [norms] checkpoint)")
    field, gamma, t = read_checkpoint(path)
    print(f"# checkpoint {path}: n = {field.grid.n}, L = {field.grid.L:g}, gamma = {gamma:g}, t = {t:g}")
    for s in n["s"]:
        print(f"{s:g} {sobolev_norm(field, s, n['homogeneous']):.17g}")
    return EXIT_OK


_HANDLERS = {
    "construct": _cmd_construct,
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "verify": _cmd_verify,
    "norms": _cmd_norms,
}


def dispatch(cmd: CliCommand) -> int:
    if cmd.subcommand not in _HANDLERS:
        print(f"error: unknown subcommand {cmd.subcommand!r}", file=sys.stderr)
        return EXIT_ERROR
    try:
        cfg = _load(cmd)
        return _HANDLERS[cmd.subcommand](cmd, cfg)
    except (ConfigError, UnderResolvedError, BlowUpError, OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    cmd = CliCommand(args.subcommand, args.config, args.output, args.seed, args.verbose,
                     getattr(args, "checkpoint", None))
    return dispatch(cmd)


if __name__ == "__main__":
    sys.exit(main())
