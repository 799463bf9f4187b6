"""Run configuration: INI files with a [run] section, an optional [integrator]
section, and one optional section per experiment holding its parameters."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .dynamics import IntegratorSettings
from .errors import ConfigError
from .experiments import EXPERIMENTS, parse_ks

DEFAULT_KS = (8, 16, 32, 64, 128)
MAX_K = 512
RUN_KEYS = {"ks", "output_dir", "seed", "l_cap", "emit_plots", "experiments"}
INTEGRATOR_KEYS = {"method", "tol", "max_steps", "initial_steps"}


@dataclass
class RunConfig:
    ks: tuple = DEFAULT_KS
    experiments: tuple = EXPERIMENTS
    params: dict = field(default_factory=dict)
    output_dir: Path = Path("fineq-out")
    seed: int = 20240917
    l_cap: int = 64
    emit_plots: bool = True
    integrator: IntegratorSettings = field(default_factory=IntegratorSettings)

    def __post_init__(self):
        ks = tuple(int(k) for k in self.ks)
        if not ks or any(b <= a for a, b in zip(ks, ks[1:])):
            raise ConfigError("ks must be non-empty and strictly increasing")
        if ks[0] < 1 or ks[-1] > MAX_K:
            raise ConfigError(f"ks must lie in [1, {MAX_K}]")
        self.ks = ks
        if self.l_cap < 4:
            raise ConfigError("l_cap must be at least 4")
        self.output_dir = Path(self.output_dir)
        self.experiments = tuple(self.experiments)
        unknown = [e for e in self.experiments if e not in EXPERIMENTS]
        if unknown:
            raise ConfigError(f"unknown experiment(s): {', '.join(unknown)}")

    def validate(self):
        """Resolve every function and path name; raises ConfigError."""
        from .experiments import plan_suite

        plan_suite(self)
        return self


def _parser() -> configparser.ConfigParser:
    # no interpolation: '%' has no meaning here and values may contain it
    return configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))


def loads(text: str, source: str = "<string>") -> RunConfig:
    cp = _parser()
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    return _from_parser(cp, source)


def load(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return loads(text, str(path))


def _from_parser(cp: configparser.ConfigParser, source: str) -> RunConfig:
    if not cp.has_section("run"):
        raise ConfigError(f"{source}: missing [run] section")
    run = cp["run"]
    extra = set(run) - RUN_KEYS
    if extra:
        raise ConfigError(f"{source}: unknown [run] key(s): {', '.join(sorted(extra))}")
    try:
        kw = {
            "ks": parse_ks(run.get("ks", ", ".join(map(str, DEFAULT_KS))), where="[run] ks"),
            "output_dir": Path(run.get("output_dir", "fineq-out")),
            "seed": run.getint("seed", 20240917),
            "l_cap": run.getint("l_cap", 64),
            "emit_plots": run.getboolean("emit_plots", True),
        }
    except ValueError as exc:
        raise ConfigError(f"{source}: [run] {exc}") from None
    if "experiments" in run:
        kw["experiments"] = tuple(e.strip() for e in run["experiments"].replace("\n", ",").split(",") if e.strip())
    if cp.has_section("integrator"):
        sec = cp["integrator"]
        extra = set(sec) - INTEGRATOR_KEYS
        if extra:
            raise ConfigError(f"{source}: unknown [integrator] key(s): {', '.join(sorted(extra))}")
        method = sec.get("method", "magnus4")
        if method not in ("magnus4", "midpoint"):
            raise ConfigError(f"{source}: integrator method must be magnus4 or midpoint")
        try:
            kw["integrator"] = IntegratorSettings(
                method=method,
                tol=sec.getfloat("tol", 1e-10),
                initial_steps=sec.getint("initial_steps", 8),
                max_steps=sec.getint("max_steps", 1 << 20),
            )
        except ValueError as exc:
            raise ConfigError(f"{source}: [integrator] {exc}") from None
    params = {}
    for name in cp.sections():
        if name in ("run", "integrator"):
            continue
        if name not in EXPERIMENTS:
            raise ConfigError(f"{source}: section [{name}] is not a known experiment")
        params[name] = dict(cp[name])
    kw["params"] = params
    return RunConfig(**kw)


def default_config_text() -> str:
    return resources.files("fineq").joinpath("data/default.cfg").read_text()


def default_config() -> RunConfig:
    return loads(default_config_text(), "default.cfg")
