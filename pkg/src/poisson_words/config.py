"""Flat ``key = value`` configuration files.

Grammar, one entry per line::

    # comment (also allowed after a value)
    p = 0.6
    k = 20, 24            # single value or comma list
    c = 0
    lambda = 1
    seeds = 10            # N means seeds 1..N; also "3..7" or "[1, 5, 9]"

Keys may be written with ``-`` or ``_``. Unknown or repeated keys are errors
that name the line.
"""

from __future__ import annotations

from pathlib import Path

from .errors import ConfigError

KEYS = {
    "experiment": str,
    "p": float,
    "k": "int_list",
    "a": float,
    "delta": float,
    "c": float,
    "lambda": float,
    "n_k": int,
    "N": int,
    "seeds": "seeds",
    "trials": int,
    "n_max": int,
    "threads": int,
    "memory_budget_mb": int,
    "tolerance": float,
    "mode": str,
    "out": str,
    "json": str,
}


def parse_int_list(text: str) -> list[int]:
    text = text.strip().strip("[]")
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"expected integers, got {text!r}") from None


def parse_seeds(text: str) -> list[int]:
    """``N`` -> 1..N, ``a..b`` -> a..b inclusive, ``[..]`` or comma list -> explicit."""
    raw = text.strip()
    body = raw.strip("[]").strip()
    try:
        if ".." in body:
            lo, hi = (int(x) for x in body.split(".."))
            seeds = list(range(lo, hi + 1))
        elif raw.startswith("[") or "," in body:
            seeds = [int(x) for x in body.split(",") if x.strip()]
        else:
            seeds = list(range(1, int(body) + 1))
    except ValueError:
        raise ConfigError(f"cannot parse seeds {text!r}") from None
    if not seeds:
        raise ConfigError(f"seed list {text!r} is empty")
    if any(not 0 <= s < 2**64 for s in seeds):
        raise ConfigError("seeds must be 64-bit unsigned integers")
    return seeds


def convert(key: str, value: str):
    kind = KEYS[key]
    if kind == "int_list":
        return parse_int_list(value)
    if kind == "seeds":
        return parse_seeds(value)
    try:
        return kind(value)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {value!r} as {kind.__name__}") from None


def canonical_key(key: str) -> str:
    key = key.strip().replace("-", "_")
    return "N" if key in ("N", "N_k") else key


def parse_config_text(text: str, source: str = "<config>") -> dict:
    out: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}, line {lineno}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        key = canonical_key(key)
        if key not in KEYS:
            raise ConfigError(f"{source}, line {lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"{source}, line {lineno}: key {key!r} given twice")
        try:
            out[key] = convert(key, value.strip())
        except ConfigError as exc:
            raise ConfigError(f"{source}, line {lineno}: {exc}") from None
    return out


def parse_config_file(path: str | Path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} not found")
    return parse_config_text(path.read_text(), str(path))
