"""INI configuration loading for the command-line workflows.

One file describes one workflow: a ``[benchmark]`` section with ``[cell.*]``
subsections, a ``[compare]`` section with ``[method.*]`` subsections, or a
single ``[simulate]``/``[estimate]`` section.  Unknown sections and keys are
rejected so typos fail loudly instead of silently using defaults.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path

from intensor.errors import ConfigError
from intensor.harness import BenchmarkPlan, CellSpec, CompareMethod

_BOOL = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def _read_ini(path: str | Path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with Path(path).open(encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return parser


class _Section:
    """One INI section with typed, checked-off key access."""

    def __init__(self, name: str, raw: dict[str, str], path):
        self.name = name
        self.raw = dict(raw)
        self.path = path
        self.seen: set[str] = set()

    def _fetch(self, key: str, default):
        self.seen.add(key)
        if key not in self.raw:
            if default is _REQUIRED:
                raise ConfigError(f"{self.path}: [{self.name}] is missing required key {key!r}")
            return None
        return self.raw[key].strip()

    def text(self, key: str, default=None):
        val = self._fetch(key, default)
        return default if val is None else val

    def integer(self, key: str, default=None):
        val = self._fetch(key, default)
        if val is None:
            return default
        try:
            return int(val)
        except ValueError:
            raise ConfigError(f"{self.path}: [{self.name}] {key} = {val!r} is not an integer") from None

    def real(self, key: str, default=None):
        val = self._fetch(key, default)
        if val is None:
            return default
        try:
            return float(val)
        except ValueError:
            raise ConfigError(f"{self.path}: [{self.name}] {key} = {val!r} is not a number") from None

    def flag(self, key: str, default=None):
        val = self._fetch(key, default)
        if val is None:
            return default
        try:
            return _BOOL[val.lower()]
        except KeyError:
            raise ConfigError(f"{self.path}: [{self.name}] {key} = {val!r} is not a boolean") from None

    def names(self, key: str, default=None):
        val = self._fetch(key, default)
        if val is None:
            return default
        return tuple(part.strip() for part in val.split(",") if part.strip())

    def int_tuple(self, key: str, default=None):
        val = self._fetch(key, default)
        if val is None:
            return default
        try:
            return tuple(int(part) for part in val.split(","))
        except ValueError:
            raise ConfigError(
                f"{self.path}: [{self.name}] {key} = {val!r} is not a comma list of integers"
            ) from None

    def gamma(self, key: str, default=None):
        val = self._fetch(key, default)
        if val is None:
            return default
        if val in ("theory", "auto"):
            return val
        try:
            parts = tuple(float(p) for p in val.split(","))
        except ValueError:
            raise ConfigError(
                f"{self.path}: [{self.name}] {key} = {val!r} must be a number, a comma "
                f"list of numbers, 'theory', or 'auto'"
            ) from None
        return parts[0] if len(parts) == 1 else parts

    def finish(self):
        extra = set(self.raw) - self.seen
        if extra:
            raise ConfigError(
                f"{self.path}: [{self.name}] has unknown key(s) {sorted(extra)}"
            )


_REQUIRED = object()


def _sections(parser: configparser.ConfigParser, path) -> dict[str, _Section]:
    return {name: _Section(name, parser[name], path) for name in parser.sections()}


def _cell_from(sec: _Section) -> CellSpec:
    try:
        cell = CellSpec(
            scenario=sec.integer("scenario", _REQUIRED),
            dim=sec.integer("dim", _REQUIRED),
            n=sec.integer("n", _REQUIRED),
            s=sec.integer("s", _REQUIRED),
            m=sec.integer("m", _REQUIRED),
            amplitude=sec.real("amplitude", 1.0),
            methods=sec.names("methods", ("matrix_svt", "kie")),
            gamma=sec.gamma("gamma", "theory"),
            gamma_scale=sec.real("gamma_scale", 1.0),
            ranks=sec.int_tuple("ranks", None),
            tau=sec.real("tau", 2.0),
            sample_split=sec.flag("sample_split", False),
            block_dims=sec.int_tuple("block_dims", None),
            label=sec.name.split(".", 1)[1],
        )
    except ValueError as exc:
        raise ConfigError(f"{sec.path}: [{sec.name}]: {exc}") from exc
    sec.finish()
    return cell


def load_benchmark_plan(path: str | Path) -> BenchmarkPlan:
    """Parse a ``[benchmark]`` + ``[cell.*]`` file into a runnable plan."""
    parser = _read_ini(path)
    secs = _sections(parser, path)
    if "benchmark" not in secs:
        raise ConfigError(f"{path}: missing [benchmark] section")
    top = secs.pop("benchmark")
    cells = []
    for name in list(secs):
        if name.startswith("cell."):
            cells.append(_cell_from(secs.pop(name)))
        else:
            raise ConfigError(f"{path}: unexpected section [{name}]")
    if not cells:
        raise ConfigError(f"{path}: no [cell.*] sections")
    try:
        plan = BenchmarkPlan(
            cells=tuple(cells),
            replications=top.integer("replications", 20),
            seed=top.integer("seed", 0),
            grid_g=top.integer("grid_points", None),
            threads=top.integer("threads", 1),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: [benchmark]: {exc}") from exc
    top.finish()
    return plan


@dataclass(frozen=True)
class CompareSettings:
    """Parsed real-data comparison workflow."""

    data: str
    methods: tuple[CompareMethod, ...]
    split_fraction: float = 0.75
    repeats: int = 30
    seed: int = 0
    grid_g: int | None = None


def load_compare_settings(path: str | Path) -> CompareSettings:
    """Parse a ``[compare]`` + ``[method.*]`` file."""
    parser = _read_ini(path)
    secs = _sections(parser, path)
    if "compare" not in secs:
        raise ConfigError(f"{path}: missing [compare] section")
    top = secs.pop("compare")
    methods = []
    for name in list(secs):
        if not name.startswith("method."):
            raise ConfigError(f"{path}: unexpected section [{name}]")
        sec = secs.pop(name)
        label = name.split(".", 1)[1]
        try:
            methods.append(
                CompareMethod(
                    name=label,
                    kind=sec.text("kind", label),
                    s=sec.integer("s", 2),
                    m=sec.integer("m", 6),
                    gamma=sec.gamma("gamma", "auto"),
                    ranks=sec.int_tuple("ranks", None),
                    tau=sec.real("tau", 2.0),
                )
            )
        except ValueError as exc:
            raise ConfigError(f"{path}: [{name}]: {exc}") from exc
        sec.finish()
    if len(methods) < 2:
        raise ConfigError(f"{path}: need at least two [method.*] sections")
    data = top.text("data", _REQUIRED)
    settings = CompareSettings(
        data=str((Path(path).parent / data).resolve()),
        methods=tuple(methods),
        split_fraction=top.real("split_fraction", 0.75),
        repeats=top.integer("repeats", 30),
        seed=top.integer("seed", 0),
        grid_g=top.integer("grid_points", None),
    )
    top.finish()
    if not 0.0 < settings.split_fraction < 1.0:
        raise ConfigError(f"{path}: split_fraction must lie strictly between 0 and 1")
    if settings.repeats < 1:
        raise ConfigError(f"{path}: repeats must be positive")
    return settings


@dataclass(frozen=True)
class SimulateSettings:
    """Parsed pattern-generation workflow."""

    process: str  # "scenario" or "neyman_scott"
    scenario: int | None
    dim: int
    n: int
    amplitude: float = 1.0
    seed: int = 0
    grid_res: int | None = None
    parent_rate: float = 20.0
    offspring_mean: float = 5.0
    kernel_sd: float = 0.05


def load_simulate_settings(path: str | Path) -> SimulateSettings:
    parser = _read_ini(path)
    secs = _sections(parser, path)
    if set(secs) != {"simulate"}:
        raise ConfigError(f"{path}: expected exactly one [simulate] section")
    sec = secs["simulate"]
    process = sec.text("process", "scenario")
    if process not in ("scenario", "neyman_scott"):
        raise ConfigError(f"{path}: unknown process {process!r}")
    scenario = sec.integer("scenario", None if process == "neyman_scott" else _REQUIRED)
    settings = SimulateSettings(
        process=process,
        scenario=scenario,
        dim=sec.integer("dim", _REQUIRED),
        n=sec.integer("n", _REQUIRED),
        amplitude=sec.real("amplitude", 1.0),
        seed=sec.integer("seed", 0),
        grid_res=sec.integer("grid_res", None),
        parent_rate=sec.real("parent_rate", 20.0),
        offspring_mean=sec.real("offspring_mean", 5.0),
        kernel_sd=sec.real("kernel_sd", 0.05),
    )
    sec.finish()
    if settings.process == "scenario" and settings.scenario not in (1, 2, 3, 4):
        raise ConfigError(f"{path}: scenario must be 1-4")
    if settings.dim < 1 or settings.n < 1:
        raise ConfigError(f"{path}: dim and n must be positive")
    return settings


@dataclass(frozen=True)
class EstimateSettings:
    """Parsed single-fit workflow."""

    patterns: str
    method: str
    s: int
    m: int
    gamma: object = "theory"
    gamma_scale: float = 1.0
    ranks: tuple[int, ...] | None = None
    tau: float = 2.0
    sample_split: bool = False
    block_dims: tuple[int, ...] | None = None
    seed: int = 0
    grid_g: int | None = None
    scenario: int | None = None
    amplitude: float = 1.0
    clip_negative: bool = False


def load_estimate_settings(path: str | Path) -> EstimateSettings:
    parser = _read_ini(path)
    secs = _sections(parser, path)
    if set(secs) != {"estimate"}:
        raise ConfigError(f"{path}: expected exactly one [estimate] section")
    sec = secs["estimate"]
    patterns = sec.text("patterns", _REQUIRED)
    settings = EstimateSettings(
        patterns=str((Path(path).parent / patterns).resolve()),
        method=sec.text("method", "matrix_svt"),
        s=sec.integer("s", 2),
        m=sec.integer("m", 6),
        gamma=sec.gamma("gamma", "theory"),
        gamma_scale=sec.real("gamma_scale", 1.0),
        ranks=sec.int_tuple("ranks", None),
        tau=sec.real("tau", 2.0),
        sample_split=sec.flag("sample_split", False),
        block_dims=sec.int_tuple("block_dims", None),
        seed=sec.integer("seed", 0),
        grid_g=sec.integer("grid_points", None),
        scenario=sec.integer("scenario", None),
        amplitude=sec.real("amplitude", 1.0),
        clip_negative=sec.flag("clip_negative", False),
    )
    sec.finish()
    if settings.method not in ("raw", "matrix_svt", "tensor", "kie"):
        raise ConfigError(f"{path}: unknown method {settings.method!r}")
    if settings.s < 1 or settings.m < 1:
        raise ConfigError(f"{path}: s and m must be positive")
    return settings
