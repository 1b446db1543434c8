"""Command-line driver: ``cayley-splitting <experiment> --config FILE [--key value ...] --out DIR``.

Exit codes: 0 success, 2 configuration error, 3 NaN in the results.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

from . import __version__
from .experiments import DEFAULTS, EXPERIMENTS, STOCHASTIC, ExperimentResult, resolved_params, run_experiment

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


class ConfigError(ValueError):
    pass


def read_config(path: str | os.PathLike) -> dict[str, str]:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (x.strip() for x in line.split("=", 1))
        out[key] = value
    return out


def _coerce(key: str, text: str, default):
    try:
        if isinstance(default, bool):
            if text.lower() not in ("true", "false", "1", "0"):
                raise ValueError(text)
            return text.lower() in ("true", "1")
        if isinstance(default, int) and not isinstance(default, bool):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, list):
            return [float(x) for x in text.split(",") if x.strip()]
        if default is None:  # seed
            return int(text)
        return text
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {text!r}") from exc


# Keys that a power-law rule may replace: dt directly or dt = ds^exponent.
_RULE_KEYS = {"dt_exponent", "dt_exponents"}


def resolve_params(experiment: str, raw: dict[str, str]) -> dict:
    """Type-check raw strings against the experiment's defaults."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    defaults = DEFAULTS[experiment]
    raw = dict(raw)
    if "dt" in raw and _RULE_KEYS & raw.keys():
        raise ConfigError("give either dt or a dt exponent rule, not both")
    if "dt" in raw and _RULE_KEYS & defaults.keys():
        raise ConfigError(f"{experiment} ties dt to ds through a dt exponent; set that instead")
    params = {}
    for key, text in raw.items():
        if key not in defaults:
            raise ConfigError(f"unknown parameter {key!r} for {experiment}")
        params[key] = _coerce(key, text, defaults.get(key, 0))
    env_seed = os.environ.get("CAYLEY_SEED")
    if env_seed is not None:
        params["seed"] = _coerce("CAYLEY_SEED", env_seed, None)
    if experiment in STOCHASTIC and params.get("seed") is None:
        raise ConfigError(f"{experiment} is stochastic: a seed is required (seed=... or CAYLEY_SEED)")
    if params.get("seed") is None:
        params["seed"] = 0
    if int(params.get("workers", 1)) < 1:
        raise ConfigError("workers must be >= 1")
    return params


def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def _has_nan(result: ExperimentResult) -> bool:
    for table in result.tables.values():
        for row in table.rows:
            for v in row:
                if not isinstance(v, str) and isinstance(v, float) and math.isnan(v):
                    return True
    return False


def write_outputs(result: ExperimentResult, out: Path, manifest: dict) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, table in result.tables.items():
        path = out / f"{name}.csv"
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(table.columns)
            for row in table.rows:
                w.writerow([_fmt(v) for v in row])
        written.append(path)
    manifest = {**manifest, "outputs": [p.name for p in written], "summary": _jsonable(result.summary)}
    mpath = out / "manifest.json"
    mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written.append(mpath)
    return written


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "item"):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def _split_overrides(extra: list[str]) -> dict[str, str]:
    out, i = {}, 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        key = tok[2:].replace("-", "_")
        if "=" in key:
            key, val = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(extra):
                raise ConfigError(f"missing value for {tok}")
            val = extra[i + 1]
            i += 2
        out[key] = val
    return out


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="cayley-splitting",
        description="Run a named Cayley-splitting experiment and write CSV tables plus a manifest.",
        epilog="experiments: " + ", ".join(EXPERIMENTS),
    )
    parser.add_argument("experiment")
    parser.add_argument("--config", help="flat key=value file; flags override it")
    parser.add_argument("--out", required=True, help="output directory")
    args, extra = parser.parse_known_args(argv)
    try:
        raw = read_config(args.config) if args.config else {}
        raw.update(_split_overrides(extra))
        params = resolve_params(args.experiment, raw)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = run_experiment(args.experiment, params)
    except (ValueError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    full = resolved_params(args.experiment, params)
    manifest = {"experiment": args.experiment, "parameters": _jsonable(full), "seed": params["seed"],
                "code_version": __version__}
    write_outputs(result, Path(args.out), manifest)
    if _has_nan(result):
        print("numeric failure: NaN in results", file=sys.stderr)
        return EXIT_NUMERIC
    print(json.dumps(_jsonable(result.summary), sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
