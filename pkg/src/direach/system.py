"""Input-affine systems and their text definition format.

A definition file is a list of ``key = value`` lines; ``#`` starts a comment::

    name = J16
    state = x, y, z
    drift.x = y
    drift.y = z
    drift.z = -y + x^2
    input.u.g = 0, 0, 1
    input.u.center = -3/100
    input.u.radius = 1/1000
    initial.x = [0, 0]
    step = 1/16
    horizon = 10

Numbers are read exactly as rationals, so writing a definition back out
reproduces every constant bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Sequence

from . import expr as ex
from .exceptions import DimensionError, ParseError
from .expr import Expr
from .interval import Interval, IntervalBox


@dataclass(frozen=True)
class InputChannel:
    name: str
    g: tuple[Expr, ...]
    center: Fraction
    radius: Fraction


@dataclass(frozen=True)
class SystemDefinition:
    """A system as written: inputs carry a center and a radius."""

    name: str
    state: tuple[str, ...]
    drift: tuple[Expr, ...]
    inputs: tuple[InputChannel, ...]
    initial: tuple[tuple[Fraction, Fraction], ...]
    step: Fraction
    horizon: Fraction
    description: str = ""

    def __post_init__(self):
        n = len(self.state)
        if len(self.drift) != n:
            raise DimensionError(f"{self.name}: drift has {len(self.drift)} entries for {n} states")
        for ch in self.inputs:
            if len(ch.g) != n:
                raise DimensionError(f"{self.name}: input {ch.name} has {len(ch.g)} entries for {n} states")
            if ch.radius <= 0:
                raise ValueError(f"{self.name}: input {ch.name} needs a positive radius")
        if len(self.initial) != n:
            raise DimensionError(f"{self.name}: initial set has {len(self.initial)} entries for {n} states")
        for lo, hi in self.initial:
            if lo > hi:
                raise ValueError(f"{self.name}: empty initial interval [{lo}, {hi}]")

    @property
    def n(self) -> int:
        return len(self.state)

    @property
    def m(self) -> int:
        return len(self.inputs)

    @property
    def num_steps(self) -> int:
        q = self.horizon / self.step
        if q.denominator != 1:
            raise ValueError(f"{self.name}: horizon {self.horizon} is not a multiple of step {self.step}")
        return int(q)

    def initial_box(self) -> IntervalBox:
        out = []
        for lo, hi in self.initial:
            out.append(Interval(Interval.from_fraction(lo).lo, Interval.from_fraction(hi).hi))
        return IntervalBox(out)

    def with_noise_scale(self, factor) -> "SystemDefinition":
        f = Fraction(factor)
        if f <= 0:
            raise ValueError("noise factor must be positive")
        return replace(self, inputs=tuple(replace(ch, radius=ch.radius * f) for ch in self.inputs))

    def with_initial(self, initial: Sequence) -> "SystemDefinition":
        pairs = []
        for item in initial:
            if isinstance(item, (tuple, list)):
                pairs.append((Fraction(item[0]), Fraction(item[1])))
            else:
                pairs.append((Fraction(item), Fraction(item)))
        return replace(self, initial=tuple(pairs))

    def with_horizon(self, horizon) -> "SystemDefinition":
        return replace(self, horizon=Fraction(horizon))


@dataclass(frozen=True)
class InputAffineSystem:
    """``x' = f(x) + sum_i g_i(x) v_i`` with ``v_i`` in ``[-V_i, V_i]``."""

    name: str
    state_names: tuple[str, ...]
    drift: tuple[Expr, ...]
    input_maps: tuple[tuple[Expr, ...], ...]
    input_radii: tuple[Fraction, ...]
    input_names: tuple[str, ...] = ()

    def __post_init__(self):
        n = len(self.drift)
        if len(self.state_names) != n:
            raise DimensionError("state names and drift differ in length")
        if len(self.input_maps) != len(self.input_radii):
            raise DimensionError("each input needs exactly one radius")
        for g in self.input_maps:
            if len(g) != n:
                raise DimensionError("input map has the wrong dimension")
        for V in self.input_radii:
            if V <= 0:
                raise ValueError("input radii must be positive")
        for e in list(self.drift) + [x for g in self.input_maps for x in g]:
            if ex.max_var_index(e) >= n:
                raise DimensionError("expression references a variable beyond the state dimension")
        if not self.input_names:
            object.__setattr__(self, "input_names", tuple(f"v{i}" for i in range(len(self.input_radii))))

    @property
    def n(self) -> int:
        return len(self.drift)

    @property
    def m(self) -> int:
        return len(self.input_radii)

    @cached_property
    def radii_upper(self) -> tuple[float, ...]:
        return tuple(Interval.from_fraction(V).hi for V in self.input_radii)

    @cached_property
    def drift_jacobian(self):
        return ex.symbolic_jacobian(self.drift, self.n)

    @cached_property
    def drift_hessian(self):
        return ex.symbolic_hessian_norm_exprs(self.drift, self.n)

    @cached_property
    def input_jacobians(self):
        return tuple(ex.symbolic_jacobian(g, self.n) for g in self.input_maps)

    @cached_property
    def input_hessians(self):
        return tuple(ex.symbolic_hessian_norm_exprs(g, self.n) for g in self.input_maps)

    @cached_property
    def additive(self) -> bool:
        """True when every input map has a symbolically zero Jacobian."""
        return all(d.is_zero() for J in self.input_jacobians for row in J for d in row)

    @cached_property
    def numpy_rhs(self):
        """Vectorised ``(f(x), [g_i(x)])`` for the sampling oracle."""
        f = ex.compile_numpy(self.drift, self.n)
        gs = [ex.compile_numpy(g, self.n) for g in self.input_maps]
        return f, gs

    def with_noise_scale(self, factor) -> "InputAffineSystem":
        f = Fraction(factor)
        return replace(self, input_radii=tuple(V * f for V in self.input_radii))


def centered_normalization(defn: SystemDefinition) -> InputAffineSystem:
    """Fold input centers into the drift so every input ranges over ``[-V, V]``."""
    drift = list(defn.drift)
    for ch in defn.inputs:
        if ch.center:
            c = ex.const(ch.center)
            drift = [ex.add(d, ex.mul(c, gi)) for d, gi in zip(drift, ch.g)]
    return InputAffineSystem(
        name=defn.name,
        state_names=defn.state,
        drift=tuple(drift),
        input_maps=tuple(ch.g for ch in defn.inputs),
        input_radii=tuple(ch.radius for ch in defn.inputs),
        input_names=tuple(ch.name for ch in defn.inputs),
    )


# -- file format ---------------------------------------------------------------

def _fmt_q(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _parse_q(text: str, line: int, col: int, source: str) -> Fraction:
    e = ex.parse(text, [], line, col, source)
    if not e.is_const:
        raise ParseError(f"expected a rational number, got '{text.strip()}'", line, col, source)
    return e.payload


def dumps(defn: SystemDefinition) -> str:
    names = list(defn.state)
    lines = [f"name = {defn.name}"]
    if defn.description:
        lines.append(f"description = {defn.description}")
    lines.append("state = " + ", ".join(names))
    for nm, f in zip(names, defn.drift):
        lines.append(f"drift.{nm} = {ex.to_string(f, names)}")
    for ch in defn.inputs:
        lines.append(f"input.{ch.name}.g = " + ", ".join(ex.to_string(g, names) for g in ch.g))
        lines.append(f"input.{ch.name}.center = {_fmt_q(ch.center)}")
        lines.append(f"input.{ch.name}.radius = {_fmt_q(ch.radius)}")
    for nm, (lo, hi) in zip(names, defn.initial):
        lines.append(f"initial.{nm} = [{_fmt_q(lo)}, {_fmt_q(hi)}]")
    lines.append(f"step = {_fmt_q(defn.step)}")
    lines.append(f"horizon = {_fmt_q(defn.horizon)}")
    return "\n".join(lines) + "\n"


def loads(text: str, source: str = "<string>") -> SystemDefinition:
    entries: dict[str, tuple[str, int, int]] = {}
    order: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        if "=" not in line:
            raise ParseError("expected 'key = value'", lineno, 1, source)
        key, value = line.split("=", 1)
        key = key.strip()
        if key in entries:
            raise ParseError(f"duplicate key '{key}'", lineno, 1, source)
        col = line.index("=") + 2
        entries[key] = (value, lineno, col)
        order.append(key)

    def need(key: str) -> tuple[str, int, int]:
        if key not in entries:
            raise ParseError(f"missing required key '{key}'", 0, 0, source)
        return entries[key]

    name = need("name")[0].strip()
    description = entries.get("description", ("", 0, 0))[0].strip()
    state_text, sl, sc = need("state")
    state = tuple(s.strip() for s in state_text.split(","))
    for s in state:
        if not s.isidentifier() or s in ex.FUNCTIONS:
            raise ParseError(f"invalid state name '{s}'", sl, sc, source)
    if len(set(state)) != len(state):
        raise ParseError("duplicate state names", sl, sc, source)

    drift = []
    for s in state:
        text_, ln, col = need(f"drift.{s}")
        drift.append(ex.parse(text_, state, ln, col, source))

    input_names: list[str] = []
    for key in order:
        if key.startswith("input."):
            parts = key.split(".")
            if len(parts) != 3 or parts[2] not in ("g", "center", "radius"):
                ln = entries[key][1]
                raise ParseError(f"unknown input key '{key}'", ln, 1, source)
            if parts[1] not in input_names:
                input_names.append(parts[1])
    inputs = []
    for nm in input_names:
        gtext, ln, col = need(f"input.{nm}.g")
        pieces = ex.split_top_level(gtext)
        if len(pieces) != len(state):
            raise ParseError(f"input {nm} needs {len(state)} components, got {len(pieces)}", ln, col, source)
        g = tuple(ex.parse(p, state, ln, col + off, source) for p, off in pieces)
        ctext, cl, cc = entries.get(f"input.{nm}.center", ("0", 0, 0))
        rtext, rl, rc = need(f"input.{nm}.radius")
        inputs.append(InputChannel(nm, g, _parse_q(ctext, cl, cc, source), _parse_q(rtext, rl, rc, source)))

    initial = []
    for s in state:
        itext, ln, col = entries.get(f"initial.{s}", ("0", 0, 0))
        body = itext.strip()
        if body.startswith("["):
            if not body.endswith("]"):
                raise ParseError("unterminated interval", ln, col, source)
            pieces = ex.split_top_level(body[1:-1])
            if len(pieces) != 2:
                raise ParseError("interval needs exactly two bounds", ln, col, source)
            lo = _parse_q(pieces[0][0], ln, col, source)
            hi = _parse_q(pieces[1][0], ln, col, source)
        else:
            lo = hi = _parse_q(body, ln, col, source)
        initial.append((lo, hi))

    step_t = need("step")
    horizon_t = need("horizon")
    known = {"name", "description", "state", "step", "horizon"}
    for key in order:
        if key in known or key.startswith(("drift.", "input.", "initial.")):
            if key.startswith("drift.") and key[6:] not in state:
                raise ParseError(f"drift for unknown state '{key[6:]}'", entries[key][1], 1, source)
            if key.startswith("initial.") and key[8:] not in state:
                raise ParseError(f"initial value for unknown state '{key[8:]}'", entries[key][1], 1, source)
            continue
        raise ParseError(f"unknown key '{key}'", entries[key][1], 1, source)
    return SystemDefinition(
        name=name,
        state=state,
        drift=tuple(drift),
        inputs=tuple(inputs),
        initial=tuple(initial),
        step=_parse_q(*step_t, source),
        horizon=_parse_q(*horizon_t, source),
        description=description,
    )


def load(path) -> SystemDefinition:
    p = Path(path)
    return loads(p.read_text(), source=str(p))


def dump(defn: SystemDefinition, path) -> None:
    Path(path).write_text(dumps(defn))
