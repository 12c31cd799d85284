"""The evolution loop: flow, inflate by the analytic error, extract, simplify."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .bounds import compute_bounds
from .exceptions import ReachError, StepFailure, StepTooLarge, Timeout
from .flow import compute_bounding_box, flow_composed, flow_taylor_model
from .inputs import KINDS, ApproximationKind, realize_inputs
from .interval import IntervalBox
from .local_error import generic_error, single_step_error
from .system import InputAffineSystem
from .taylor import TaylorModelVector, extract_error_parameters, simplify_parameters

DEFAULT_SWEEP_THRESHOLD = 1e-8
DEFAULT_NS = 12
DEFAULT_BETA = 6


@dataclass(frozen=True)
class SimplificationPolicy:
    """Every ``period`` steps keep ``retention`` times the parameters added since the last pass.

    ``period=None`` or ``retention=None`` disables simplification.
    """

    period: int | None = DEFAULT_NS
    retention: float | None = DEFAULT_BETA

    def __post_init__(self):
        if self.period is not None and self.period < 1:
            raise ValueError("simplification period must be at least 1")
        if self.retention is not None and self.retention < 1:
            raise ValueError("retention factor must be at least 1")

    @property
    def enabled(self) -> bool:
        return self.period is not None and self.retention is not None and math.isfinite(self.retention)

    @classmethod
    def disabled(cls) -> "SimplificationPolicy":
        return cls(None, None)

    @classmethod
    def parse(cls, text: str) -> "SimplificationPolicy":
        """``"N:B"``; either side may be ``inf`` or ``none`` to disable."""
        if text.strip().lower() in ("none", "off", "inf"):
            return cls.disabled()
        try:
            n_text, b_text = text.split(":")
        except ValueError:
            raise ValueError(f"expected N:B, got '{text}'") from None

        def part(s: str, conv):
            s = s.strip().lower()
            return None if s in ("inf", "none", "") else conv(s)

        return cls(part(n_text, int), part(b_text, float))

    def __str__(self) -> str:
        n = "inf" if self.period is None else str(self.period)
        b = "inf" if self.retention is None or not math.isfinite(self.retention) else f"{self.retention:g}"
        return f"{n}:{b}"


@dataclass
class ReachStepRecord:
    time: float
    set: TaylorModelVector
    analytic_error: float
    kind_used: ApproximationKind | None
    num_params: int
    wall_time: float
    box: IntervalBox = None
    simplified: bool = False

    def __post_init__(self):
        if self.box is None:
            self.box = self.set.bound()
        if self.num_params != self.set.num_params:
            raise ValueError("record parameter count disagrees with its set")
        if self.analytic_error < 0:
            raise ValueError("analytic error must be non-negative")


def volume_score(box: IntervalBox) -> float:
    """``(prod widths)^(-1/n)``; a zero width gives ``inf``."""
    widths = box.widths()
    if any(w <= 0.0 for w in widths):
        return math.inf
    n = len(widths)
    return math.exp(-sum(math.log(w) for w in widths) / n)


@dataclass
class StepResult:
    set: TaylorModelVector
    epsilon: float
    kind: ApproximationKind
    added_params: int


def evolve_step(
    X: TaylorModelVector,
    system: InputAffineSystem,
    kind: ApproximationKind,
    h: float,
    direct: bool = False,
) -> StepResult:
    """Advance the set by one step of size ``h`` with the given input family."""
    n, m = system.n, system.m
    p = X.num_params
    thr = X.sweep_threshold
    ell = kind.params_per_input
    cert = compute_bounding_box(system, X.bound(), h, kind.formula_r)
    nb = compute_bounds(system, cert.box, kind.formula_r)
    try:
        eps = single_step_error(system, kind, cert.box, h, bounds=nb)
    except StepTooLarge:
        eps = generic_error(nb, h)
    if direct:
        P = p + ell * m + 1
        realization = realize_inputs(kind, system.input_radii, h, P, p, P - 1, thr)
        Y = flow_taylor_model(system, X.embed(P), realization, h, cert)
    else:
        Y = flow_composed(system, X, kind, h, cert)
    Y = Y.inflate([eps] * n)
    Y = extract_error_parameters(Y)
    return StepResult(Y, eps, kind, ell * m + n)


def simplify(R: TaylorModelVector, policy: SimplificationPolicy, added: int) -> TaylorModelVector:
    if not policy.enabled:
        return R
    keep = int(policy.retention * added)
    return simplify_parameters(R, keep)


class SelectorState:
    """Static, tight or loose choice of the input family at each step."""

    def __init__(self, mode: str = "static", kind: ApproximationKind | None = None,
                 kinds: Sequence[ApproximationKind] = KINDS):
        if mode not in ("static", "tight", "loose"):
            raise ValueError(f"unknown selection mode '{mode}'")
        if mode == "static" and kind is None:
            raise ValueError("static selection needs a kind")
        self.mode = mode
        self.kind = kind
        self.kinds = tuple(kinds)
        self.k = {kd.tag: 1 for kd in self.kinds}
        self.next_check = {kd.tag: 0 for kd in self.kinds}

    def due(self, step: int) -> list[ApproximationKind]:
        if self.mode == "static":
            return [self.kind]
        if self.mode == "tight":
            return list(self.kinds)
        return [kd for kd in self.kinds if self.next_check[kd.tag] <= step]

    def update(self, step: int, evaluated: Sequence[ApproximationKind], best: ApproximationKind) -> None:
        if self.mode != "loose":
            return
        for kd in evaluated:
            if kd is best:
                self.k[kd.tag] = 1
                self.next_check[kd.tag] = step + 1
            else:
                self.k[kd.tag] *= 2
                self.next_check[kd.tag] = step + self.k[kd.tag]


def select_approximation(
    state: SelectorState,
    step: int,
    evaluate: Callable[[ApproximationKind], object],
    score: Callable[[object], float],
) -> tuple[ApproximationKind, object, SelectorState]:
    """Evaluate the due kinds and keep the best scoring one (ties: catalogue order)."""
    due = state.due(step)
    best_kind, best_result, best_score = None, None, -math.inf
    failures = []
    evaluated = []
    for kd in due:
        try:
            res = evaluate(kd)
        except StepFailure as exc:
            failures.append(exc)
            continue
        evaluated.append(kd)
        sc = score(res)
        if best_kind is None or sc > best_score:
            best_kind, best_result, best_score = kd, res, sc
    if best_kind is None:
        raise failures[-1] if failures else StepFailure("no approximation could be evaluated")
    state.update(step, due, best_kind)
    return best_kind, best_result, state


@dataclass
class EvolveConfig:
    h: float
    steps: int
    selector: str = "static"
    kind: ApproximationKind | None = None
    policy: SimplificationPolicy = field(default_factory=SimplificationPolicy)
    sweep_threshold: float = DEFAULT_SWEEP_THRESHOLD
    deadline: float | None = None
    allow_halving: bool = False
    min_halvings: int = 6
    progress: Callable[[ReachStepRecord], None] | None = None


class EvolutionAborted(ReachError):
    def __init__(self, message: str, records: list, cause: Exception | None = None):
        super().__init__(message)
        self.records = records
        self.cause = cause


def _adaptive_step(X, system, kind, h, allow, depth, max_depth, deadline):
    try:
        return evolve_step(X, system, kind, h)
    except StepFailure:
        if not allow or depth >= max_depth:
            raise
    first = _adaptive_step(X, system, kind, h / 2, allow, depth + 1, max_depth, deadline)
    if deadline is not None and time.monotonic() > deadline:
        raise Timeout("deadline reached during step halving")
    second = _adaptive_step(first.set, system, kind, h / 2, allow, depth + 1, max_depth, deadline)
    return StepResult(second.set, max(first.epsilon, second.epsilon), kind,
                      first.added_params + second.added_params)


def evolve(system: InputAffineSystem, X0: IntervalBox | TaylorModelVector, config: EvolveConfig) -> list[ReachStepRecord]:
    """Run ``config.steps`` steps; record 0 is the initial set."""
    if isinstance(X0, TaylorModelVector):
        X = X0
    else:
        X = TaylorModelVector.from_box(X0, config.sweep_threshold)
    if len(X) != system.n:
        raise ValueError(f"initial set has dimension {len(X)}, system has {system.n}")
    records = [ReachStepRecord(0.0, X, 0.0, None, X.num_params, 0.0)]
    selector = SelectorState(config.selector, config.kind)
    added = 0
    h = config.h
    for k in range(config.steps):
        if config.deadline is not None and time.monotonic() > config.deadline:
            raise EvolutionAborted(f"timeout before step {k + 1}", records, Timeout("deadline reached"))
        t0 = time.perf_counter()
        Xk = X

        def run(kind: ApproximationKind) -> StepResult:
            return _adaptive_step(Xk, system, kind, h, config.allow_halving, 0,
                                  config.min_halvings, config.deadline)

        try:
            kind, res, selector = select_approximation(
                selector, k, run, lambda r: volume_score(r.set.bound()))
        except (StepFailure, ArithmeticError) as exc:
            raise EvolutionAborted(f"step {k + 1} failed: {exc}", records, exc) from exc
        except Timeout as exc:
            raise EvolutionAborted(f"timeout in step {k + 1}", records, exc) from exc
        X = res.set
        added += res.added_params
        simplified = False
        if config.policy.enabled and (k + 1) % config.policy.period == 0:
            X = simplify(X, config.policy, added)
            added = 0
            simplified = True
        rec = ReachStepRecord((k + 1) * h, X, res.epsilon, kind, X.num_params,
                              time.perf_counter() - t0, simplified=simplified)
        records.append(rec)
        if config.progress is not None:
            config.progress(rec)
    return records


def kind_mix(records: Sequence[ReachStepRecord]) -> str:
    """Share of steps per kind, e.g. ``A93P7`` (catalogue order, zero shares omitted)."""
    used = [r.kind_used for r in records if r.kind_used is not None]
    if not used:
        return ""
    total = len(used)
    parts = []
    for kd in KINDS:
        c = sum(1 for u in used if u is kd)
        if c:
            parts.append(f"{kd.letter}{round(100 * c / total)}")
    return "".join(parts)
