"""Run configuration: unit-suffixed ``key = value unit`` files and CSV result tables.

Frequencies are cyclic (Hz) and rates are plain inverse seconds written with
Hz-family suffixes; modules convert to angular units where their equations
need them.  The ``gamma`` suffix expresses a frequency or rate as a multiple
of the subcommand's reference decay rate, and ``1/gamma`` a time in units of
its inverse.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import SimulationError

RELATIVE_RATE = "gamma"
RELATIVE_TIME = "1/gamma"

_SCALED = {
    "frequency": {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9, "THz": 1e12},
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9, "ps": 1e-12},
    "length": {"m": 1.0, "mm": 1e-3, "um": 1e-6, "nm": 1e-9},
    "temperature": {"K": 1.0, "mK": 1e-3, "uK": 1e-6},
    "speed": {"m/s": 1.0},
    "angle": {"rad": 1.0, "deg": math.pi / 180, "pi": math.pi},
}

# accepted units per key kind; "rate" shares the Hz family with "frequency"
KIND_UNITS = {
    "frequency": set(_SCALED["frequency"]) | {RELATIVE_RATE},
    "rate": set(_SCALED["frequency"]) | {RELATIVE_RATE},
    "time": set(_SCALED["time"]) | {RELATIVE_TIME},
    "length": set(_SCALED["length"]),
    "temperature": set(_SCALED["temperature"]) | {RELATIVE_RATE},
    "speed": set(_SCALED["speed"]),
    "angle": set(_SCALED["angle"]),
    "number": {""},
    "count": {""},
}

_NUMBER = r"[-+]?(?:inf|(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)"
_UNIT = r"1/gamma|[A-Za-z/]*"
_VALUE_RE = re.compile(rf"^\s*({_NUMBER})\s*({_UNIT})\s*$")
_SWEEP_RE = re.compile(rf"^\s*([A-Za-z_]\w*)\s*:\s*({_NUMBER})\s*\.\.\s*({_NUMBER})\s*({_UNIT})\s*,"
                       r"\s*(\d+)\s*samples?\s*$")


class ConfigError(SimulationError, ValueError):
    """One or more configuration problems; ``problems`` lists every one of them."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class Quantity:
    value: float | str
    unit: str = ""

    @property
    def relative(self) -> bool:
        return self.unit in (RELATIVE_RATE, RELATIVE_TIME)

    def si(self) -> float:
        """Value in base SI units (Hz, s, m, K, m/s, rad); relative units pass through."""
        if isinstance(self.value, str):
            raise TypeError("choice values have no SI form")
        for table in _SCALED.values():
            if self.unit in table:
                return self.value * table[self.unit]
        return float(self.value)

    def text(self) -> str:
        if isinstance(self.value, str):
            return self.value
        v = self.value
        body = str(int(v)) if isinstance(v, int) else repr(float(v))
        return f"{body} {self.unit}".rstrip()


@dataclass(frozen=True)
class Key:
    name: str
    kind: str
    default: Quantity | None = None
    doc: str = ""
    choices: tuple[str, ...] = ()
    required: bool = False
    aliases: tuple[str, ...] = ()

    def parse(self, raw: str) -> Quantity:
        raw = raw.strip()
        if self.kind == "choice":
            if raw not in self.choices:
                raise ValueError(f"{self.name} must be one of {', '.join(self.choices)}, got {raw!r}")
            return Quantity(raw)
        m = _VALUE_RE.match(raw)
        if not m:
            raise ValueError(f"malformed number {raw!r} for {self.name}")
        number, unit = m.groups()
        if unit not in KIND_UNITS[self.kind]:
            if unit == "":
                raise ValueError(f"{self.name} needs a unit ({self.kind})")
            raise ValueError(f"unknown unit {unit!r} for {self.name} ({self.kind})")
        if self.kind == "count":
            if not re.fullmatch(r"[-+]?\d+", number):
                raise ValueError(f"{self.name} must be an integer, got {number!r}")
            return Quantity(int(number))
        return Quantity(float(number), unit)


@dataclass(frozen=True)
class SweepSpec:
    param: str
    start: float
    stop: float
    unit: str
    samples: int

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.samples)

    def quantities(self) -> list[Quantity]:
        return [Quantity(float(v), self.unit) for v in self.values()]

    def text(self) -> str:
        return f"{self.param}: {self.start!r} .. {self.stop!r} {self.unit}, {self.samples} samples".replace("  ", " ")


@dataclass(frozen=True)
class Schema:
    keys: tuple[Key, ...]
    description: str
    default_sweep: SweepSpec | None = None
    sweepable: bool = True

    def key(self, name: str) -> Key | None:
        for k in self.keys:
            if name == k.name or name in k.aliases:
                return k
        return None


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    params: dict[str, Quantity]
    sweep: SweepSpec | None = None
    output: str | None = field(default=None, compare=False)
    seed: int = 0

    def text(self) -> str:
        """Config-file form of this run; ``parse_config(cfg.text())`` reproduces the parameters."""
        lines = [f"[{self.subcommand}]"]
        lines += [f"{name} = {q.text()}" for name, q in self.params.items()]
        if self.sweep is not None:
            lines += ["[sweep]", self.sweep.text()]
        return "\n".join(lines) + "\n"


def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def parse_config(text: str, schemas: dict[str, Schema], subcommand: str | None = None,
                 overrides: list[str] = (), seed: int = 0, output: str | None = None) -> RunConfig:
    """Parse and validate a config, collecting every problem before raising :class:`ConfigError`.

    ``subcommand`` must match the file's ``[header]`` when both are present.
    ``overrides`` are ``KEY=VALUEunit`` strings applied after the file.
    """
    problems: list[str] = []
    raw: dict[str, tuple[str, str]] = {}
    sweep_line: tuple[int, str] | None = None
    header = None
    section = None
    for lineno, line in enumerate(text.splitlines(), 1):
        body = _strip(line)
        if not body:
            continue
        m = re.fullmatch(r"\[([\w-]+)\]", body)
        if m:
            name = m.group(1)
            if name == "sweep":
                section = "sweep"
            elif header is None:
                header = section = name
            else:
                problems.append(f"line {lineno}: second subcommand header [{name}]")
            continue
        if section is None:
            problems.append(f"line {lineno}: entry before any [subcommand] header")
            continue
        if section == "sweep":
            if sweep_line is not None:
                problems.append(f"line {lineno}: only one sweep parameter is supported")
            sweep_line = (lineno, body)
            continue
        if "=" not in body:
            problems.append(f"line {lineno}: expected 'key = value unit', got {body!r}")
            continue
        key, value = (s.strip() for s in body.split("=", 1))
        raw[key] = (f"line {lineno}", value)

    name = subcommand or header
    if subcommand and header and subcommand != header:
        problems.append(f"config is for [{header}] but subcommand {subcommand} was requested")
    if name is None:
        raise ConfigError(problems + ["no subcommand given"])
    if name not in schemas:
        raise ConfigError(problems + [f"unknown subcommand {name!r}"])
    schema = schemas[name]

    for item in overrides:
        if "=" not in item:
            problems.append(f"override {item!r}: expected KEY=VALUEunit")
            continue
        key, value = item.split("=", 1)
        raw[key.strip()] = (f"override {item!r}", value)

    params: dict[str, Quantity] = {}
    for key, (where, value) in raw.items():
        spec = schema.key(key)
        if spec is None:
            problems.append(f"{where}: unknown key {key!r} for {name}")
            continue
        try:
            params[spec.name] = spec.parse(value)
        except ValueError as exc:
            problems.append(f"{where}: {exc}")

    missing = [k.name for k in schema.keys if k.required and k.name not in params]
    if missing:
        problems.append(f"missing required keys for {name}: {', '.join(missing)}")

    sweep = schema.default_sweep
    if sweep_line is not None:
        lineno, body = sweep_line
        m = _SWEEP_RE.match(body)
        if not m:
            problems.append(f"line {lineno}: expected 'param: lo .. hi unit, N samples', got {body!r}")
        else:
            param, lo, hi, unit, n = m.groups()
            spec = schema.key(param)
            if schema.default_sweep is not None:
                # commands with a built-in sweep only accept that parameter, as a frequency
                fixed = schema.default_sweep.param
                spec = Key(fixed, "frequency") if param == fixed else None
            if not schema.sweepable:
                problems.append(f"line {lineno}: {name} does not take a sweep")
            elif spec is None or spec.kind in ("choice", "count"):
                problems.append(f"line {lineno}: cannot sweep {param!r}")
            elif unit not in KIND_UNITS[spec.kind]:
                problems.append(f"line {lineno}: unknown unit {unit!r} for {param}")
            elif int(n) < 1:
                problems.append(f"line {lineno}: sweep needs at least one sample")
            else:
                sweep = SweepSpec(spec.name, float(lo), float(hi), unit, int(n))
    if problems:
        raise ConfigError(problems)

    resolved = {k.name: params.get(k.name, k.default) for k in schema.keys}
    resolved = {k: v for k, v in resolved.items() if v is not None}
    return RunConfig(name, resolved, sweep, output, seed)


@dataclass
class ResultTable:
    columns: tuple[str, ...]
    rows: np.ndarray
    summary: dict[str, float | str] = field(default_factory=dict)
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        self.rows = np.atleast_2d(np.asarray(self.rows, dtype=float))
        if self.rows.size and self.rows.shape[1] != len(self.columns):
            raise ValueError("every row must match the column count")


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    return repr(float(x))


def emit_csv(table: ResultTable, config: RunConfig, description: str, version: str) -> str:
    """CSV text with ``#`` metadata: protocol, version, seed, the full config and a summary."""
    lines = [f"# protocol: {description}", f"# version: {version}", f"# seed: {config.seed}"]
    lines += [f"# config: {line}" for line in config.text().splitlines()]
    lines += [f"# summary: {k} = {_fmt(v)}" for k, v in table.summary.items()]
    lines += [f"# note: {n}" for n in table.notes]
    lines.append(",".join(table.columns))
    lines += [",".join(_fmt(x) for x in row) for row in table.rows if row.size]
    return "\n".join(lines) + "\n"


def config_from_csv(text: str, schemas: dict[str, Schema]) -> RunConfig:
    """Rebuild the run configuration recorded in a CSV produced by :func:`emit_csv`."""
    cfg_lines, seed = [], 0
    for line in text.splitlines():
        if line.startswith("# config: "):
            cfg_lines.append(line[len("# config: "):])
        elif line.startswith("# seed: "):
            seed = int(line[len("# seed: "):])
    return parse_config("\n".join(cfg_lines), schemas, seed=seed)


def read_csv(text: str) -> tuple[tuple[str, ...], np.ndarray, dict[str, str]]:
    """Columns, data and summary entries of an emitted table."""
    summary = {}
    body = []
    for line in text.splitlines():
        if line.startswith("# summary: "):
            k, v = line[len("# summary: "):].split(" = ", 1)
            summary[k] = v
        elif line and not line.startswith("#"):
            body.append(line)
    columns = tuple(body[0].split(","))
    data = np.array([[float(x) for x in row.split(",")] for row in body[1:]]).reshape(-1, len(columns))
    return columns, data, summary
