"""Monte-Carlo ground truth: sampled inputs, tightly integrated trajectories, containment checks.

Nothing here is validated.  The trajectories are plain floating point at a
tight tolerance and only ever serve as counterexample candidates.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp

from . import expr as ex
from .exceptions import IntegrationFailed
from .system import InputAffineSystem, SystemDefinition

DEFAULT_REFINEMENT = 10
DEFAULT_TOLERANCE = 1e-12
# (-V, +V, uniform) shares of every sub-interval draw
DEFAULT_MIXTURE = (0.25, 0.25, 0.5)


@dataclass
class SampledTrajectory:
    index: int
    inputs: np.ndarray  # (m, steps * refinement), values of v_i on each sub-interval
    states: np.ndarray  # (steps + 1, n), the state at t_0 .. t_K


@dataclass
class _Model:
    n: int
    radii: tuple[float, ...]
    centers: tuple[float, ...]
    f: object
    gs: list


def _float_inside(q: Fraction) -> float:
    """Largest float not exceeding ``q`` in magnitude."""
    x = float(q)
    if abs(Fraction(x)) > abs(q):
        x = math.nextafter(x, 0.0)
    return x


def _model(system: SystemDefinition | InputAffineSystem) -> _Model:
    # the written form is preferred: it keeps the oracle clear of the centring step
    if isinstance(system, SystemDefinition):
        n = system.n
        return _Model(
            n,
            tuple(_float_inside(ch.radius) for ch in system.inputs),
            tuple(float(ch.center) for ch in system.inputs),
            ex.compile_numpy(system.drift, n),
            [ex.compile_numpy(ch.g, n) for ch in system.inputs],
        )
    n = system.n
    f, gs = system.numpy_rhs
    return _Model(n, tuple(_float_inside(V) for V in system.input_radii), (0.0,) * system.m, f, gs)


def draw_inputs(
    radii: Sequence[float],
    slots: int,
    rng: np.random.Generator,
    mixture: tuple[float, float, float] = DEFAULT_MIXTURE,
) -> np.ndarray:
    """``(m, slots)`` piecewise-constant input values within ``[-V_i, V_i]``."""
    m = len(radii)
    V = np.asarray(radii, dtype=float).reshape(m, 1)
    choice = rng.choice(3, size=(m, slots), p=np.asarray(mixture) / sum(mixture))
    uni = rng.uniform(-1.0, 1.0, size=(m, slots))
    unit = np.where(choice == 0, -1.0, np.where(choice == 1, 1.0, uni))
    return unit * V


def sample_trajectories(
    system: SystemDefinition | InputAffineSystem,
    x0: Sequence[float],
    h: float,
    T: float,
    count: int,
    refinement: int = DEFAULT_REFINEMENT,
    seed: int = 0,
    tolerance: float = DEFAULT_TOLERANCE,
    mixture: tuple[float, float, float] = DEFAULT_MIXTURE,
) -> list[SampledTrajectory]:
    """``count`` trajectories from the point ``x0``, sampled at ``t_k = k h`` up to ``T``.

    Trajectory ``i`` draws its inputs from the ``i``-th child of ``seed``,
    so a draw does not depend on how many others are requested.
    All trajectories are integrated together as one stacked system.
    """
    if refinement < 1:
        raise ValueError("refinement must be at least 1")
    if count < 0:
        raise ValueError("count must be non-negative")
    model = _model(system)
    n, m = model.n, len(model.radii)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (n,):
        raise ValueError(f"initial point has shape {x0.shape}, expected ({n},)")
    steps = int(round(T / h))
    if steps < 0 or abs(steps * h - T) > 1e-9 * max(1.0, abs(T)):
        raise ValueError("horizon must be a whole number of steps")
    if count == 0:
        return []
    slots = steps * refinement
    children = np.random.SeedSequence(seed).spawn(count)
    inputs = np.stack([draw_inputs(model.radii, slots, np.random.default_rng(c), mixture) for c in children])
    # inputs: (count, m, slots)
    centers = np.asarray(model.centers, dtype=float).reshape(m, 1)
    states = np.empty((steps + 1, count, n))
    states[0] = x0
    y = np.tile(x0, (count, 1)).T.copy()  # (n, count)
    dt = h / refinement

    for s in range(slots):
        u = inputs[:, :, s].T + centers if m else None  # (m, count)

        def rhs(_t, flat, u=u):
            x = flat.reshape(n, count)
            dx = model.f(x)
            for i, g in enumerate(model.gs):
                dx = dx + g(x) * u[i]
            return dx.ravel()

        t0 = s * dt
        sol = solve_ivp(rhs, (t0, t0 + dt), y.ravel(), method="DOP853",
                        rtol=tolerance, atol=tolerance)
        if sol.status != 0 or not np.all(np.isfinite(sol.y[:, -1])):
            raise IntegrationFailed(
                f"oracle integration failed on sub-interval {s} at tolerance {tolerance:g}: {sol.message}"
            )
        y = sol.y[:, -1].reshape(n, count)
        if (s + 1) % refinement == 0:
            states[(s + 1) // refinement] = y.T
    return [SampledTrajectory(i, inputs[i], states[:, i, :].copy()) for i in range(count)]


@dataclass(frozen=True)
class Violation:
    trajectory: int
    step: int
    time: float
    component: int
    value: float
    lo: float
    hi: float
    margin: float  # distance outside the box, positive


@dataclass
class ContainmentReport:
    checked: int = 0
    violations: list[Violation] = field(default_factory=list)
    # smallest distance from a sample to its box boundary over all checks
    min_clearance: float = math.inf

    @property
    def ok(self) -> bool:
        return not self.violations


def check_containment(
    trajectories: Sequence[SampledTrajectory],
    records: Sequence,
    slack: float = 1e-9,
) -> ContainmentReport:
    """Test every sample ``x_j(t_k)`` against the bounding box of record ``k``.

    ``slack`` absorbs the oracle's own integration error: a sample counts
    as outside only when it clears the box by more than ``slack * (1 + |x|)``.
    """
    report = ContainmentReport()
    if not trajectories:
        return report
    K = min(len(records), min(len(tr.states) for tr in trajectories))
    for k in range(K):
        rec = records[k]
        lo = np.array([c.lo for c in rec.box])
        hi = np.array([c.hi for c in rec.box])
        pts = np.stack([tr.states[k] for tr in trajectories])  # (N, n)
        if pts.shape[1] != len(lo):
            raise ValueError("trajectory and record dimensions differ")
        below = lo - pts
        above = pts - hi
        out = np.maximum(below, above)
        tol = slack * (1.0 + np.abs(pts))
        report.checked += pts.size
        report.min_clearance = min(report.min_clearance, float(np.min(-out)) + 0.0)
        for j, c in zip(*np.nonzero(out > tol)):
            tr = trajectories[j]
            report.violations.append(Violation(
                tr.index, k, float(rec.time), int(c), float(pts[j, c]),
                float(lo[c]), float(hi[c]), float(out[j, c]),
            ))
    return report


VIOLATION_FIELDS = ("trajectory", "t_k", "component", "value", "lo", "hi", "margin")


def write_violations_csv(report: ContainmentReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(VIOLATION_FIELDS)
        for v in report.violations:
            w.writerow([v.trajectory, f"{v.time:.17g}", v.component, f"{v.value:.17g}",
                        f"{v.lo:.17g}", f"{v.hi:.17g}", f"{v.margin:.17g}"])
