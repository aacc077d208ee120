"""Sectioned key-value configuration for the command-line tool.

Files use INI syntax with one section per module::

    [model]
    gamma = 0.5
    beta = 2.2

    [sweep]
    experiment = source_scaling
    Ns = 8, 16, 32, 64, 128

Every key has a type and a default.  Unknown sections or keys are rejected,
and parse errors carry the offending line number.
"""
from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from .experiments import EXPERIMENTS, SweepConfig
from .pseudo import admissible_beta

__all__ = ["ConfigError", "Config", "parse_config", "parse_config_text", "SCHEMA"]


class ConfigError(ValueError):
    """Malformed or inadmissible configuration."""


def _floats(s: str) -> tuple:
    return tuple(float(x) for x in s.replace(",", " ").split())


def _opt_floats(s: str):
    return None if s.strip().lower() in ("", "none") else _floats(s)


def _ints(s: str) -> tuple:
    return tuple(int(x) for x in s.replace(",", " ").split())


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _opt_int(s: str):
    return None if s.strip().lower() in ("", "none", "auto") else int(s)


def _str(s: str) -> str:
    return s.strip()


def _show(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ", ".join(repr(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


_D = SweepConfig()

# section -> key -> (parser, default)
SCHEMA: dict[str, dict[str, tuple[Callable[[str], Any], Any]]] = {
    "model": {
        "gamma": (float, 0.5),
        "beta": (float, 2.2),
    },
    "construct": {
        "c": (float, 0.1),
        "K": (float, 5.0),
        "delta_target": (float, 0.5),
        "seed_a0": (float, 0.1),
        "seed_a1": (float, 0.45),
    },
    "simulate": {
        "initial": (_str, "pseudo"),
        "N": (int, 16),
        "n": (_opt_int, None),
        "box_factor": (float, 4.0),
        "t_end": (float, 0.05),
        "cfl": (float, 0.5),
        "checkpoint_every": (int, 10),
        "norms": (_floats, (2.2,)),
        "forcing": (_str, "none"),
    },
    "sweep": {
        "experiment": (_str, "verify"),
        "gammas": (_opt_floats, None),
        "betas": (_opt_floats, None),
        "Ns": (_ints, _D.Ns),
        "c": (float, _D.c),
        "K": (float, _D.K),
        "Ks": (_floats, _D.Ks),
        "M": (float, _D.M),
        "c0": (float, _D.c0),
        "t_star": (float, _D.t_star),
        "T": (float, _D.T),
        "n": (_opt_int, None),
        "n_per_N": (int, _D.n_per_N),
        "min_n": (int, _D.min_n),
        "box_factor": (float, _D.box_factor),
        "cfl": (float, _D.cfl),
        "record_every": (int, _D.record_every),
        "separations": (_floats, _D.separations),
        "patch_n": (int, _D.patch_n),
        "patch_sigma": (float, _D.patch_sigma),
        "log_correction": (_bool, _D.log_correction),
        "delta_target": (float, _D.delta_target),
        "zero_inputs": (_bool, _D.zero_inputs),
        "cross_validate": (_bool, _D.cross_validate),
        "error_control": (_bool, _D.error_control),
        "workers": (int, _D.workers),
        "figures": (_bool, _D.figures),
    },
    "norms": {
        "checkpoint": (_str, ""),
        "s": (_floats, (0.0, 1.0, 2.0)),
        "homogeneous": (_bool, False),
    },
}


@dataclass
class Config:
    """Typed configuration; ``sections[name][key]`` holds parsed values."""

    sections: dict = field(default_factory=dict)
    source: str = "<defaults>"

    def __getitem__(self, section: str) -> dict:
        return self.sections[section]

    @property
    def gamma(self) -> float:
        return self.sections["model"]["gamma"]

    @property
    def beta(self) -> float:
        return self.sections["model"]["beta"]

    def sweep_config(self, seed: int = 0, output=None) -> SweepConfig:
        s = dict(self.sections["sweep"])
        s["gammas"] = s["gammas"] or (self.gamma,)
        s["betas"] = s["betas"] or (self.beta,)
        return SweepConfig(seed=seed, output=None if output is None else str(output), **s)

    def echo(self) -> str:
        """Effective configuration in the input syntax; replaying it reproduces the run."""
        out = []
        for sec, keys in SCHEMA.items():
            out.append(f"[{sec}]")
            for key in keys:
                out.append(f"{key} = {_show(self.sections[sec][key])}")
            out.append("")
        return "\n".join(out)


def _key_lines(text: str) -> dict:
    """Map ``(section, key)`` to its line number for error messages."""
    where, sec = {}, None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            sec = s[1:-1].strip()
        elif sec and s and s[0] not in "#;" and ("=" in s or ":" in s):
            key = s.split("=", 1)[0].split(":", 1)[0].strip()
            where[(sec, key)] = i
    return where


def parse_config_text(text: str, source: str = "<string>") -> Config:
    cp = configparser.ConfigParser(interpolation=None, strict=True)
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"{source}:{exc.lineno}: key outside any section") from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"{source}:{exc.lineno}: duplicate key {exc.option!r} in [{exc.section}]") from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"{source}:{exc.lineno}: duplicate section [{exc.section}]") from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"{source}:{lineno}: cannot parse {line.strip()!r}") from None

    lines = _key_lines(text)
    sections = {sec: {k: d for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()}
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"{source}: unknown section [{sec}]")
        for key, raw in cp.items(sec):
            line = lines.get((sec, key), "?")
            if key not in SCHEMA[sec]:
                raise ConfigError(f"{source}:{line}: unknown key {key!r} in [{sec}]")
            conv = SCHEMA[sec][key][0]
            try:
                sections[sec][key] = conv(raw)
            except ValueError as exc:
                raise ConfigError(f"{source}:{line}: bad value for {sec}.{key}: {exc}") from None
    cfg = Config(sections, source)
    _validate(cfg)
    return cfg


def parse_config(path) -> Config:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config_text(text, str(path))


def _validate(cfg: Config):
    m = cfg["model"]
    if not -1 < m["gamma"] < 1:
        raise ConfigError(f"model.gamma = {m['gamma']} outside (-1, 1)")
    try:
        admissible_beta(m["beta"], m["gamma"])
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from None
    c = cfg["construct"]
    if not 0 < c["c"] < 1:
        raise ConfigError("construct.c must lie in (0, 1)")
    if not c["K"] > 1:
        raise ConfigError("construct.K must exceed 1")
    if not 0 < c["seed_a0"] < c["seed_a1"] < 0.5:
        raise ConfigError("construct: need 0 < seed_a0 < seed_a1 < 1/2")
    s = cfg["simulate"]
    if s["initial"] not in ("pseudo", "radial") and not s["initial"].startswith("checkpoint:"):
        raise ConfigError("simulate.initial must be 'pseudo', 'radial' or 'checkpoint:<path>'")
    if s["forcing"] not in ("none", "manufactured"):
        raise ConfigError("simulate.forcing must be 'none' or 'manufactured'")
    if s["forcing"] == "manufactured" and s["initial"] != "pseudo":
        raise ConfigError("simulate.forcing = manufactured needs initial = pseudo")
    if not 0 < s["cfl"] <= 1 or not s["t_end"] > 0 or s["N"] < 1 or s["checkpoint_every"] < 1:
        raise ConfigError("simulate: need 0 < cfl <= 1, t_end > 0, N >= 1, checkpoint_every >= 1")
    if cfg["sweep"]["experiment"] not in EXPERIMENTS:
        raise ConfigError(f"sweep.experiment must be one of {sorted(EXPERIMENTS)}")
    try:
        cfg.sweep_config()
    except ValueError as exc:
        raise ConfigError(f"sweep: {exc}") from None


def default_config() -> Config:
    return parse_config_text("", "<defaults>")


def dump_echo(cfg: Config) -> str:
    buf = io.StringIO()
    buf.write(f"# effective configuration ({cfg.source})\n")
    buf.write(cfg.echo())
    return buf.getvalue()
