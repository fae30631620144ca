"""Experiment configuration: INI-style files, one experiment per file.

Each config file has exactly one section whose name is the experiment kind
(kernel, scaling, remainder, randomwave, loopset).  Unknown keys are a
hard error; every parameter is validated before any computation starts.
Frequency budgets are enforced here as well so oversized requests fail
fast with a budget status rather than a validation status.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Union

from .models import (
    MAX_FREQUENCY,
    BudgetError,
    Model,
    SphereModel,
    SpectralWindow,
    TorusModel,
)
from .loopset import SurfaceSpec


class ConfigError(Exception):
    """Invalid or incomplete experiment configuration."""


_MODEL_NAMES = ("torus2", "torus3", "sphere2")


def parse_model(name: str) -> Model:
    if name == "torus2":
        return TorusModel(n=2)
    if name == "torus3":
        return TorusModel(n=3)
    if name == "sphere2":
        return SphereModel()
    raise ConfigError(f"model must be one of {_MODEL_NAMES}, got {name!r}")


def parse_multi_index(text: str, dim: int) -> tuple[int, ...]:
    """Colon-separated multi-index, e.g. '1:0' for d/du_1 in dimension 2."""
    parts = text.split(":")
    if len(parts) != dim:
        raise ConfigError(f"multi-index {text!r} needs {dim} entries")
    try:
        entries = tuple(int(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"bad multi-index {text!r}: {exc}") from None
    if any(e < 0 for e in entries):
        raise ConfigError(f"multi-index entries must be >= 0, got {text!r}")
    return entries


def format_multi_index(entries) -> str:
    return ":".join(str(int(e)) for e in entries)


def _parse_floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(p) for p in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad float list {text!r}: {exc}") from None


def _check_budget(value: float, what: str) -> None:
    if value > MAX_FREQUENCY:
        raise BudgetError(
            f"{what}={value:g} exceeds the frequency budget {MAX_FREQUENCY:g}"
        )


def _check_probe(model: Model, radius: float) -> None:
    if not (0.0 < radius < model.injectivity_radius):
        raise ConfigError(
            f"probe_radius must lie in (0, {model.injectivity_radius:g})"
        )


def _check_x0(model: Model, x0: tuple[float, ...]) -> None:
    # sphere points live in ambient R^3; torus points in [0, 2pi)^n
    expected = 3 if isinstance(model, SphereModel) else model.dim
    if len(x0) != expected:
        raise ConfigError(f"x0 needs {expected} coordinates")
    if isinstance(model, SphereModel):
        if abs(math.sqrt(sum(c * c for c in x0)) - 1.0) > 1e-9:
            raise ConfigError("sphere x0 must be a unit vector")


@dataclass(frozen=True)
class KernelConfig:
    model: Model
    window: SpectralWindow
    x0: tuple[float, ...]
    alpha: tuple[int, ...]
    beta: tuple[int, ...]
    probe_radius: float
    points_per_axis: int
    seed: int = 0

    def validate(self) -> None:
        _check_x0(self.model, self.x0)
        _check_probe(self.model, self.probe_radius)
        if self.points_per_axis < 1:
            raise ConfigError("points_per_axis must be >= 1")
        if sum(self.alpha) > 4 or sum(self.beta) > 4:
            raise ConfigError("derivative orders above 4 are unsupported")
        _check_budget(self.window.hi, "window_hi")


@dataclass(frozen=True)
class ScalingConfig:
    model: Model
    x0: tuple[float, ...]
    lambdas: tuple[float, ...]
    delta: float
    max_j: int
    max_k: int
    probe_radius: float
    points_per_axis: int
    seed: int = 0

    def validate(self) -> None:
        _check_x0(self.model, self.x0)
        _check_probe(self.model, self.probe_radius)
        if not all(b > a for a, b in zip(self.lambdas, self.lambdas[1:])):
            raise ConfigError("lambdas must be strictly increasing")
        if not self.lambdas or self.lambdas[0] <= 0:
            raise ConfigError("lambdas must be positive")
        if self.delta <= 0:
            raise ConfigError("delta must be > 0")
        if not (0 <= self.max_j <= 2 and 0 <= self.max_k <= 2):
            raise ConfigError("derivative orders j, k must lie in [0, 2]")
        if self.points_per_axis < 1:
            raise ConfigError("points_per_axis must be >= 1")
        _check_budget(max(self.lambdas) + self.delta, "lambda_max+delta")


@dataclass(frozen=True)
class RemainderConfig:
    model: Model
    x0: tuple[float, ...]
    lambdas: tuple[float, ...]
    alpha: tuple[int, ...]
    beta: tuple[int, ...]
    probe_radius: float
    points_per_axis: int
    seed: int = 0

    def validate(self) -> None:
        _check_x0(self.model, self.x0)
        _check_probe(self.model, self.probe_radius)
        if len(self.lambdas) < 4:
            raise ConfigError("need at least 4 lambdas for an exponent fit")
        if not all(b > a for a, b in zip(self.lambdas, self.lambdas[1:])):
            raise ConfigError("lambdas must be strictly increasing")
        if self.lambdas[0] <= 0:
            raise ConfigError("lambdas must be positive")
        if self.points_per_axis < 1:
            raise ConfigError("points_per_axis must be >= 1")
        if sum(self.alpha) + sum(self.beta) > 4:
            raise ConfigError("total derivative order above 4 is unsupported")
        _check_budget(max(self.lambdas), "lambda_max")


@dataclass(frozen=True)
class RandomwaveConfig:
    model: Model
    window: SpectralWindow
    x0: tuple[float, ...]
    samples: int
    probe_radius: float
    points_per_axis: int
    seed: int = 0
    dump_samples: bool = False

    def validate(self) -> None:
        _check_x0(self.model, self.x0)
        _check_probe(self.model, self.probe_radius)
        if self.samples < 2:
            raise ConfigError("samples must be >= 2")
        if self.points_per_axis < 1:
            raise ConfigError("points_per_axis must be >= 1")
        _check_budget(self.window.hi, "window_hi")


@dataclass(frozen=True)
class LoopsetConfig:
    surface: SurfaceSpec
    x0: tuple[float, float]
    n_directions: int
    t_max: float
    tol: float
    t_min: float = 0.1
    step: float = 1e-3
    seed: int = 0

    def validate(self) -> None:
        if self.n_directions < 1:
            raise ConfigError("n_directions must be >= 1")
        if self.tol <= 0:
            raise ConfigError("tol must be > 0")
        if not (0 < self.step <= 1e-3):
            raise ConfigError("step must lie in (0, 1e-3]")
        if self.t_max <= self.t_min:
            raise ConfigError("t_max must exceed t_min")
        if len(self.x0) != 2:
            raise ConfigError("x0 needs 2 coordinates")


ExperimentConfig = Union[KernelConfig, ScalingConfig, RemainderConfig,
                         RandomwaveConfig, LoopsetConfig]

EXPERIMENT_KINDS = ("kernel", "scaling", "remainder", "randomwave", "loopset")


def _section_items(path: Path, kind: str) -> dict[str, str]:
    parser = configparser.ConfigParser()
    try:
        read = parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    if not read:
        raise ConfigError(f"config file {path} not found or unreadable")
    sections = parser.sections()
    if sections != [kind]:
        raise ConfigError(
            f"config must contain exactly one [{kind}] section, got {sections}"
        )
    return dict(parser.items(kind))


class _KeyReader:
    """Pulls typed values out of a section and tracks leftovers."""

    def __init__(self, items: dict[str, str]):
        self._items = dict(items)

    def take(self, key: str, default: str | None = None) -> str:
        if key in self._items:
            return self._items.pop(key)
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default

    def take_float(self, key: str, default: str | None = None) -> float:
        raw = self.take(key, default)
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"key {key!r} must be a float, got {raw!r}") from None

    def take_int(self, key: str, default: str | None = None) -> int:
        raw = self.take(key, default)
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"key {key!r} must be an int, got {raw!r}") from None

    def take_bool(self, key: str, default: str) -> bool:
        raw = self.take(key, default).strip().lower()
        if raw in ("1", "true", "yes", "on"):
            return True
        if raw in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"key {key!r} must be a boolean, got {raw!r}")

    def finish(self) -> None:
        if self._items:
            raise ConfigError(f"unknown keys: {sorted(self._items)}")


def _window_from(reader: _KeyReader) -> SpectralWindow:
    lo = reader.take_float("window_lo")
    hi = reader.take_float("window_hi")
    try:
        return SpectralWindow(lo=lo, hi=hi)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path, kind: str,
                seed_override: int | None = None) -> ExperimentConfig:
    """Parse, validate, and freeze one experiment configuration."""
    if kind not in EXPERIMENT_KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}")
    items = _section_items(Path(path), kind)
    if seed_override is not None:
        items["seed"] = str(seed_override)
    reader = _KeyReader(items)

    if kind == "loopset":
        surf_kind = reader.take("surface")
        c = reader.take_float("c", "1.0")
        try:
            surface = SurfaceSpec(kind=surf_kind, c=c)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        config = LoopsetConfig(
            surface=surface,
            x0=tuple(_parse_floats(reader.take("x0"))),  # type: ignore[arg-type]
            n_directions=reader.take_int("n_directions"),
            t_max=reader.take_float("t_max"),
            tol=reader.take_float("tol"),
            t_min=reader.take_float("t_min", "0.1"),
            step=reader.take_float("step", "1e-3"),
            seed=reader.take_int("seed", "0"),
        )
        reader.finish()
        config.validate()
        return config

    model = parse_model(reader.take("model"))
    x0 = _parse_floats(reader.take("x0"))

    if kind == "kernel":
        config = KernelConfig(
            model=model,
            window=_window_from(reader),
            x0=x0,
            alpha=parse_multi_index(reader.take("alpha", format_multi_index(
                [0] * model.dim)), model.dim),
            beta=parse_multi_index(reader.take("beta", format_multi_index(
                [0] * model.dim)), model.dim),
            probe_radius=reader.take_float("probe_radius", "0.5"),
            points_per_axis=reader.take_int("points_per_axis", "5"),
            seed=reader.take_int("seed", "0"),
        )
    elif kind == "scaling":
        config = ScalingConfig(
            model=model,
            x0=x0,
            lambdas=_parse_floats(reader.take("lambdas")),
            delta=reader.take_float("delta", "1.0"),
            max_j=reader.take_int("max_j", "1"),
            max_k=reader.take_int("max_k", "1"),
            probe_radius=reader.take_float("probe_radius", "2.0"),
            points_per_axis=reader.take_int("points_per_axis", "9"),
            seed=reader.take_int("seed", "0"),
        )
    elif kind == "remainder":
        config = RemainderConfig(
            model=model,
            x0=x0,
            lambdas=_parse_floats(reader.take("lambdas")),
            alpha=parse_multi_index(reader.take("alpha", format_multi_index(
                [0] * model.dim)), model.dim),
            beta=parse_multi_index(reader.take("beta", format_multi_index(
                [0] * model.dim)), model.dim),
            probe_radius=reader.take_float("probe_radius", "0.1"),
            points_per_axis=reader.take_int("points_per_axis", "5"),
            seed=reader.take_int("seed", "0"),
        )
    else:
        config = RandomwaveConfig(
            model=model,
            window=_window_from(reader),
            x0=x0,
            samples=reader.take_int("samples"),
            probe_radius=reader.take_float("probe_radius", "0.5"),
            points_per_axis=reader.take_int("points_per_axis", "5"),
            seed=reader.take_int("seed", "0"),
            dump_samples=reader.take_bool("dump_samples", "false"),
        )
    reader.finish()
    config.validate()
    return config


def config_as_text(kind: str, config: ExperimentConfig) -> str:
    """Render a config back to INI text (manifest round-trips through this)."""
    lines = [f"[{kind}]"]
    for field in fields(config):
        value = getattr(config, field.name)
        if field.name == "model":
            lines.append(f"model = {value.model_id}")
        elif field.name == "surface":
            lines.append(f"surface = {value.kind}")
            lines.append(f"c = {value.c!r}")
        elif field.name == "window":
            lines.append(f"window_lo = {value.lo!r}")
            lines.append(f"window_hi = {value.hi!r}")
        elif field.name in ("alpha", "beta"):
            lines.append(f"{field.name} = {format_multi_index(value)}")
        elif isinstance(value, tuple):
            lines.append(f"{field.name} = {','.join(repr(float(v)) for v in value)}")
        elif isinstance(value, bool):
            lines.append(f"{field.name} = {'true' if value else 'false'}")
        elif isinstance(value, float):
            lines.append(f"{field.name} = {value!r}")
        else:
            lines.append(f"{field.name} = {value}")
    return "\n".join(lines) + "\n"
