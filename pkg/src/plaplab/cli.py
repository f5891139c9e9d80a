"""Command-line entry point: config parsing, experiment dispatch, artifacts.

Configs are flat INI-style sections mapped onto the experiment config
dataclasses; every key must resolve to a known field (unknown keys fail
fast), and flag overrides ``--set [section.]key=value`` are applied last.
The full effective config is embedded in every report, so a run can be
reproduced from its own artifacts.

Exit status: 0 when every verdict in the report passes (for the slanted
experiment the nonexistence indicator holding *is* the pass condition),
1 on a failed verdict or solver breakdown, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from dataclasses import dataclass, fields
from datetime import datetime
from pathlib import Path

from ._operators import SolverError
from .experiments import EXPERIMENTS

__all__ = ["RunConfig", "parse_config", "dispatch", "main", "ConfigError"]

ENV_OUT = "PLAPLAB_OUT"

# sections are organizational; each key maps onto a flat config field
_KEY_ALIASES = {
    ("ladder", "ks"): "k_ladder",
    ("probes", "xs"): "probes",
}
_RUN_KEYS = {"experiment", "seed", "out"}
_SECTIONS = {"run", "grid", "medium", "solve", "ladder", "probes", "thresholds"}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    experiment: str
    settings: dict
    config: object
    seed: int = 12345
    out_dir: str | None = None


def _parse_scalar(text: str):
    t = text.strip()
    if t.lower() in ("true", "false"):
        return t.lower() == "true"
    try:
        return int(t)
    except ValueError:
        pass
    try:
        return float(t)
    except ValueError:
        pass
    return t


def _parse_value(text: str):
    if not text.strip():
        return ()
    if "," in text:
        return tuple(_parse_scalar(part) for part in text.split(",") if part.strip())
    return _parse_scalar(text)


def _coerce(value, default):
    """Nudge a parsed value toward the type of the field default."""
    if isinstance(default, tuple) and not isinstance(value, tuple):
        value = (value,)
    if isinstance(default, tuple):
        return tuple(float(v) if isinstance(v, int) and any(isinstance(d, float) for d in default)
                     else v for v in value)
    if isinstance(default, float) and isinstance(value, int):
        return float(value)
    return value


def _resolve_key(experiment: str, section: str, key: str, field_names: set) -> str:
    name = _KEY_ALIASES.get((section, key), key)
    if name not in field_names:
        raise ConfigError(f"unknown key [{section}] {key} for experiment {experiment!r}")
    return name


def parse_config(experiment: str, config_path: str | None = None,
                 sets: list[str] | None = None, out_dir: str | None = None) -> RunConfig:
    """Build a validated RunConfig from an optional INI file plus overrides."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {sorted(EXPERIMENTS)}")
    cfg_cls, _ = EXPERIMENTS[experiment]
    defaults = cfg_cls()
    field_names = {f.name for f in fields(cfg_cls)}

    settings: dict = {}
    seed = 12345
    out = out_dir

    if config_path is not None:
        path = Path(config_path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        parser = configparser.ConfigParser()
        parser.read(path)
        for section in parser.sections():
            if section not in _SECTIONS and section != experiment:
                raise ConfigError(f"unknown config section [{section}]")
            for key, raw in parser.items(section):
                if section == "run":
                    if key not in _RUN_KEYS:
                        raise ConfigError(f"unknown key [run] {key}")
                    if key == "experiment" and raw.strip() != experiment:
                        raise ConfigError(
                            f"config file is for experiment {raw.strip()!r}, not {experiment!r}")
                    if key == "seed":
                        seed = int(raw)
                        if "seed" in field_names:
                            settings["seed"] = seed
                    if key == "out" and out is None:
                        out = raw.strip()
                    continue
                name = _resolve_key(experiment, section, key, field_names)
                settings[name] = _coerce(_parse_value(raw), getattr(defaults, name))

    for assignment in sets or []:
        if "=" not in assignment:
            raise ConfigError(f"--set expects key=value, got {assignment!r}")
        key, raw = assignment.split("=", 1)
        section, _, bare = key.strip().rpartition(".")
        name = _resolve_key(experiment, section or experiment, bare, field_names)
        settings[name] = _coerce(_parse_value(raw), getattr(defaults, name))

    if "p" in settings and not settings["p"] > 2:
        raise ConfigError(f"requires p > 2 (slow diffusion); got p = {settings['p']}")
    if "dt" in settings and not settings["dt"] > 0:
        raise ConfigError("dt must be positive")
    try:
        config = cfg_cls(**settings)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return RunConfig(experiment=experiment, settings=settings, config=config,
                     seed=seed, out_dir=out)


def dispatch(rc: RunConfig) -> int:
    """Run the named experiment, write artifacts, map verdicts to exit status."""
    out_root = rc.out_dir or os.environ.get(ENV_OUT) or "runs"
    _, runner = EXPERIMENTS[rc.experiment]
    try:
        report = runner(rc.config, out_dir=out_root)
    except (SolverError, ValueError) as exc:
        err_dir = Path(out_root) / rc.experiment
        err_dir.mkdir(parents=True, exist_ok=True)
        stamp = datetime.now().strftime("%Y%m%d-%H%M%S-%f")
        doc = {"experiment": rc.experiment, "error": str(exc),
               "type": type(exc).__name__, "settings": {k: _stringify(v) for k, v in rc.settings.items()}}
        (err_dir / f"error-{stamp}.json").write_text(json.dumps(doc, sort_keys=True), encoding="utf-8")
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for name, verdict in report.verdicts.items():
        mark = "PASS" if verdict["pass"] else "FAIL"
        print(f"{mark} {rc.experiment}/{name}: {verdict['metric']} = "
              f"{verdict['value']:.6g} {verdict['op']} {verdict['threshold']:.6g}")
    if report.artifacts:
        print(f"artifacts: {Path(report.artifacts[-1]).parent}")
    return 0 if report.passed else 1


def _stringify(v):
    return list(v) if isinstance(v, tuple) else v


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plaplab",
        description="Experiments for the slow-diffusion evolutionary p-Laplace equation")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        cmd = sub.add_parser(name, help=f"run the {name} experiment")
        cmd.add_argument("--config", default=None, help="INI config file")
        cmd.add_argument("--set", dest="sets", action="append", default=[],
                         metavar="KEY=VALUE", help="override a config key (repeatable)")
        cmd.add_argument("--out", default=None,
                         help=f"output root (default ${ENV_OUT} or ./runs)")
    args = parser.parse_args(argv)
    try:
        rc = parse_config(args.experiment, args.config, args.sets, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return dispatch(rc)


if __name__ == "__main__":
    sys.exit(main())
