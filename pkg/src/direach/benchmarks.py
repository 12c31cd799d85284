"""The benchmark systems, noise scaling and the volume score."""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .interval import IntervalBox
from .reach import volume_score
from .system import InputAffineSystem, SystemDefinition, centered_normalization, load, loads

NAMES = ("HS", "CR", "LV", "JE", "PI", "J21", "LA", "RA", "J16", "DC")
VARIANTS = {"LA-lorenz": "LA_lorenz"}
NOISE_FACTORS = (Fraction(1, 4), Fraction(1, 2), Fraction(1), Fraction(2), Fraction(4))


@dataclass(frozen=True)
class BenchmarkConfig:
    definition: SystemDefinition
    noise_scale: Fraction = Fraction(1)

    @property
    def name(self) -> str:
        return self.definition.name

    @property
    def system(self) -> InputAffineSystem:
        return centered_normalization(self.definition.with_noise_scale(self.noise_scale))

    @property
    def initial(self) -> IntervalBox:
        return self.definition.initial_box()

    @property
    def h(self) -> Fraction:
        return self.definition.step

    @property
    def horizon(self) -> Fraction:
        return self.definition.horizon

    @property
    def steps(self) -> int:
        return self.definition.num_steps

    def with_horizon(self, horizon) -> "BenchmarkConfig":
        """Horizon rounded down to a whole number of steps."""
        h = self.definition.step
        steps = int(Fraction(horizon) / h)
        return replace(self, definition=self.definition.with_horizon(steps * h))

    def with_initial(self, initial) -> "BenchmarkConfig":
        return replace(self, definition=self.definition.with_initial(initial))


def systems_dir() -> Path:
    return Path(str(resources.files("direach") / "systems"))


def definition_text(name: str) -> str:
    stem = VARIANTS.get(name, name)
    return (systems_dir() / f"{stem}.sys").read_text()


def get(name: str) -> BenchmarkConfig:
    """A catalogue entry by alias, or a definition file path."""
    if name in NAMES or name in VARIANTS:
        return BenchmarkConfig(loads(definition_text(name), source=f"{name}.sys"))
    key = name.upper()
    if key in NAMES:
        return get(key)
    p = Path(name)
    if p.exists():
        return BenchmarkConfig(load(p))
    raise KeyError(f"unknown system '{name}' (catalogue: {', '.join(NAMES)})")


def catalog() -> list[BenchmarkConfig]:
    return [get(n) for n in NAMES]


def scale_noise(config: BenchmarkConfig, factor) -> BenchmarkConfig:
    f = Fraction(factor)
    if f <= 0:
        raise ValueError("noise factor must be positive")
    return replace(config, noise_scale=config.noise_scale * f)


__all__ = ["BenchmarkConfig", "NAMES", "NOISE_FACTORS", "catalog", "get", "scale_noise", "volume_score"]
