"""Command-line driver: single runs, table sweeps and Monte-Carlo validation."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import itertools
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

from . import benchmarks as bm
from .exceptions import ParseError, ReachError, Timeout
from .inputs import KINDS, kind_by_name
from .interval import Interval, IntervalBox
from .reach import (
    DEFAULT_SWEEP_THRESHOLD,
    EvolutionAborted,
    EvolveConfig,
    SimplificationPolicy,
    kind_mix,
    volume_score,
)
from .reach import evolve as run_evolve

DEFAULT_TIMEOUT = 8 * 3600.0
NOISE_SWEEP = ("1/4", "1/2", "1", "2", "4")
BETA_SWEEP = ("1", "3", "6", "12", "18", "24", "inf")
NS_SWEEP = ("1", "N/32", "N/16", "N/8", "N/4", "N/2", "inf")

SUMMARY_FIELDS = (
    "system", "kind", "select", "noise", "sweep_threshold", "simplify", "steps",
    "score", "t_x", "mix", "status",
)


def fmt(x: float) -> str:
    return f"{x:.17g}"


def fmt_score(x: float) -> str:
    return "inf" if math.isinf(x) else f"{x:.4g}"


@dataclasses.dataclass(frozen=True)
class Cell:
    """One run's settings; enough to reproduce it exactly."""

    system: str
    kind: str = "affine"
    select: str = "static"
    noise: str = "1"
    sweep_threshold: float = DEFAULT_SWEEP_THRESHOLD
    simplify: str = "12:6"
    horizon: str | None = None
    timeout: float = DEFAULT_TIMEOUT

    @property
    def label(self) -> str:
        mode = self.kind if self.select == "static" else self.select
        noise = self.noise.replace("/", "_")
        return f"{self.system}_{mode}_n{noise}_s{str(self.simplify).replace(':', '-')}"

    def config(self) -> bm.BenchmarkConfig:
        cfg = bm.get(self.system)
        if self.horizon is not None:
            cfg = cfg.with_horizon(Fraction(self.horizon))
        if Fraction(self.noise) != 1:
            cfg = bm.scale_noise(cfg, Fraction(self.noise))
        return cfg


@dataclasses.dataclass
class RunReport:
    cell: Cell
    score: float
    t_x: float
    steps: int
    mix: str
    status: str
    records: list = dataclasses.field(default_factory=list, repr=False)
    message: str = ""

    def summary_row(self) -> dict:
        c = self.cell
        return {
            "system": c.system, "kind": c.kind if c.select == "static" else "", "select": c.select,
            "noise": c.noise, "sweep_threshold": f"{c.sweep_threshold:g}", "simplify": c.simplify,
            "steps": self.steps,
            "score": fmt_score(self.score) if self.status == "ok" else self.status,
            "t_x": f"{self.t_x:.3g}", "mix": self.mix, "status": self.status,
        }


def _resolve_simplify(text: str, total_steps: int) -> SimplificationPolicy:
    """``N:B`` where N may also be ``N/<d>``, a fraction of the evolution steps."""
    n_text, _, b_text = str(text).partition(":")
    n_text = n_text.strip()
    if n_text.upper().startswith("N/"):
        n_text = str(max(1, total_steps // int(n_text[2:])))
    return SimplificationPolicy.parse(f"{n_text}:{b_text or 'inf'}")


def execute(cell: Cell, keep_records: bool = False, progress=None) -> RunReport:
    cfg = cell.config()
    policy = _resolve_simplify(cell.simplify, cfg.steps)
    kind = kind_by_name(cell.kind) if cell.select == "static" else None
    deadline = time.monotonic() + cell.timeout if cell.timeout else None
    econf = EvolveConfig(
        h=float(cfg.h), steps=cfg.steps, selector=cell.select, kind=kind, policy=policy,
        sweep_threshold=cell.sweep_threshold, deadline=deadline, progress=progress,
    )
    t0 = time.perf_counter()
    try:
        records = run_evolve(cfg.system, cfg.initial, econf)
        status, message = "ok", ""
    except EvolutionAborted as exc:
        records = exc.records
        status = "T.O." if isinstance(exc.cause, Timeout) else "N/A"
        message = str(exc)
    t_x = time.perf_counter() - t0
    score = volume_score(records[-1].box) if status == "ok" else math.nan
    return RunReport(cell, score, t_x, len(records) - 1, kind_mix(records), status,
                     records if keep_records else [], message)


# -- outputs -----------------------------------------------------------------------

def write_steps_csv(records, state_names, path) -> None:
    header = ["step", "t_k"]
    for s in state_names:
        header += [f"{s}_lo", f"{s}_hi"]
    header += ["epsilon", "params", "kind", "simplified"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for k, rec in enumerate(records):
            row = [k, fmt(rec.time)]
            for c in rec.box:
                row += [fmt(c.lo), fmt(c.hi)]
            row += [fmt(rec.analytic_error), rec.num_params,
                    rec.kind_used.tag if rec.kind_used else "", int(rec.simplified)]
            w.writerow(row)


def write_summary_csv(reports, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_FIELDS)
        w.writeheader()
        for r in reports:
            w.writerow(r.summary_row())


def svg_boxes(boxes, i: int, j: int, labels=("x", "y"), size: int = 480) -> str:
    """Step boxes projected on coordinates ``(i, j)``, later steps drawn on top."""
    xs = [b[i] for b in boxes]
    ys = [b[j] for b in boxes]
    x0, x1 = min(c.lo for c in xs), max(c.hi for c in xs)
    y0, y1 = min(c.lo for c in ys), max(c.hi for c in ys)
    span = max(x1 - x0, y1 - y0, 1e-300)
    pad = 40
    scale = (size - 2 * pad) / span

    def px(v):
        return pad + (v - x0) * scale

    def py(v):
        return size - pad - (v - y0) * scale

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
           f'viewBox="0 0 {size} {size}">',
           f'<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>']
    for bx, by in zip(xs, ys):
        w = max((bx.hi - bx.lo) * scale, 0.5)
        h = max((by.hi - by.lo) * scale, 0.5)
        out.append(f'<rect x="{px(bx.lo):.3f}" y="{py(by.hi):.3f}" width="{w:.3f}" height="{h:.3f}" '
                   'fill="#d9e4f2" stroke="#1f3b63" stroke-width="0.4"/>')
    out.append(f'<text x="{size / 2}" y="{size - 10}" text-anchor="middle" font-size="12">{labels[0]}</text>')
    out.append(f'<text x="12" y="{size / 2}" font-size="12">{labels[1]}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# -- subcommands ---------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kind", default="affine", choices=[k.tag for k in KINDS])
    p.add_argument("--select", default="static", choices=["static", "tight", "loose"])
    p.add_argument("--sweep-threshold", type=float, default=DEFAULT_SWEEP_THRESHOLD)
    p.add_argument("--simplify", default="12:6", help="N:B, N may be N/<d>; 'inf' disables")
    p.add_argument("--noise-factor", default="1")
    p.add_argument("--horizon", default=None, help="override the final time (rounded down to whole steps)")
    p.add_argument("--seed", type=int, default=42, help="trajectory sampling seed (validate)")
    p.add_argument("--out", default="out")
    p.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT, help="seconds per run")


def _cell(args, system: str, **over) -> Cell:
    base = dict(system=system, kind=args.kind, select=args.select, noise=str(args.noise_factor),
                sweep_threshold=args.sweep_threshold, simplify=args.simplify,
                horizon=args.horizon, timeout=args.timeout)
    base.update(over)
    return Cell(**base)


def _print_report(r: RunReport) -> None:
    score = fmt_score(r.score) if r.status == "ok" else r.status
    print(f"{r.cell.system:<10} {r.cell.label:<40} score={score:<10} t_x={r.t_x:.3g}s "
          f"steps={r.steps} mix={r.mix}" + (f"  ({r.message})" if r.message else ""))


def cmd_run(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cell = _cell(args, args.system)
    cfg = cell.config()
    report = execute(cell, keep_records=True)
    steps_path = out / f"{cell.label}_steps.csv"
    write_steps_csv(report.records, cfg.system.state_names, steps_path)
    i, j = args.projection
    n = cfg.system.n
    if not (0 <= i < n and 0 <= j < n):
        raise ValueError(f"projection ({i}, {j}) outside dimension {n}")
    names = cfg.system.state_names
    svg_path = out / f"{cell.label}.svg"
    svg_path.write_text(svg_boxes([r.box for r in report.records], i, j, (names[i], names[j])))
    write_summary_csv([report], out / f"{cell.label}_summary.csv")
    _print_report(report)
    print(f"steps csv: {steps_path}\nplot: {svg_path}")
    print(f"settings: sweep_threshold={cell.sweep_threshold:g} simplify={cell.simplify} "
          f"noise={cell.noise} seed={args.seed}")
    return 0 if report.status == "ok" else 2


def _run_cells(cells, jobs: int):
    if jobs <= 1:
        for c in cells:
            r = execute(c)
            _print_report(r)
            yield r
        return
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for r in pool.map(execute, cells):
            _print_report(r)
            yield r


def _sort_key(r: RunReport):
    c = r.cell
    order = bm.NAMES.index(c.system) if c.system in bm.NAMES else len(bm.NAMES)
    return (order, c.system, c.select, c.kind, Fraction(c.noise), c.simplify)


def _bench(args, cells, name: str) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    reports = sorted(_run_cells(cells, args.jobs), key=_sort_key)
    path = out / f"{name}.csv"
    write_summary_csv(reports, path)
    print(f"table: {path}")
    return 0


def _systems(args) -> list[str]:
    return args.systems.split(",") if args.systems else list(bm.NAMES)


def cmd_bench(args) -> int:
    kinds = args.kinds.split(",") if args.kinds else [args.kind]
    modes = args.modes.split(",") if args.modes else [args.select]
    noises = args.noise_factors.split(",") if args.noise_factors else [args.noise_factor]
    policies = args.policies.split(",") if args.policies else [args.simplify]
    cells = []
    for system, mode, noise, pol in itertools.product(_systems(args), modes, noises, policies):
        for kind in (kinds if mode == "static" else [args.kind]):
            cells.append(_cell(args, system, kind=kind, select=mode, noise=noise, simplify=pol))
    return _bench(args, cells, args.name)


def cmd_sweep_noise(args) -> int:
    cells = [_cell(args, s, noise=f) for s in _systems(args) for f in args.factors.split(",")]
    return _bench(args, cells, "noise_sweep")


def cmd_sweep_beta(args) -> int:
    n_text = args.simplify.partition(":")[0]
    cells = [_cell(args, s, simplify=f"{n_text}:{b}") for s in _systems(args) for b in args.betas.split(",")]
    return _bench(args, cells, "beta_sweep")


def cmd_sweep_ns(args) -> int:
    b_text = args.simplify.partition(":")[2] or "6"
    cells = [_cell(args, s, simplify=f"{n}:{b_text}") for s in _systems(args) for n in args.periods.split(",")]
    return _bench(args, cells, "ns_sweep")


def _shift_records(records):
    """Negative control: move every box off itself along the first axis."""
    out = []
    for rec in records:
        c0 = rec.box[0]
        d = (c0.hi - c0.lo) + 2.0 * rec.analytic_error
        d = d + abs(d) * 1e-6
        box = IntervalBox([Interval(c0.lo + d, c0.hi + d)] + list(rec.box[1:]))
        out.append(dataclasses.replace(rec, box=box))
    return out


def cmd_validate(args) -> int:
    from .oracle import check_containment, sample_trajectories, write_violations_csv

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cell = _cell(args, args.system)
    cfg = cell.config()
    report = execute(cell, keep_records=True)
    records = report.records
    x0 = [c.mid for c in cfg.initial]
    if any(c.lo != c.hi for c in cfg.initial):
        print("note: initial set is a box; trajectories start from its midpoint")
    steps = len(records) - 1
    trajs = sample_trajectories(cfg.definition.with_noise_scale(Fraction(cell.noise)), x0, float(cfg.h),
                                steps * float(cfg.h), args.count, args.refinement, args.seed)
    if args.negative_control:
        records = _shift_records(records)
    rep = check_containment(trajs, records)
    path = out / f"{cell.label}_violations.csv"
    write_violations_csv(rep, path)
    _print_report(report)
    print(f"trajectories={args.count} seed={args.seed} checked={rep.checked} "
          f"violations={len(rep.violations)} report: {path}")
    if report.status != "ok":
        return 2
    return 0 if rep.ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="direach", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="one evolution with per-step CSV and SVG")
    p.add_argument("system", help="catalogue name or definition file")
    p.add_argument("--projection", type=lambda s: tuple(int(v) for v in s.split(",")), default=(0, 1))
    _add_common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="cross-product of settings over the catalogue")
    _add_common(p)
    p.add_argument("--systems", default=None, help="comma-separated, default all")
    p.add_argument("--kinds", default=None, help="comma-separated kinds for static selection")
    p.add_argument("--modes", default=None, help="comma-separated selection modes")
    p.add_argument("--noise-factors", default=None)
    p.add_argument("--policies", default=None, help="comma-separated N:B policies")
    p.add_argument("--name", default="bench")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_bench)

    for name, func, opt, default, text in (
        ("sweep-noise", cmd_sweep_noise, "--factors", NOISE_SWEEP, "noise factors"),
        ("sweep-beta", cmd_sweep_beta, "--betas", BETA_SWEEP, "retention factors"),
        ("sweep-ns", cmd_sweep_ns, "--periods", NS_SWEEP, "simplification periods"),
    ):
        p = sub.add_parser(name, help=f"sweep over {text}")
        _add_common(p)
        p.set_defaults(select="loose")
        p.add_argument("--systems", default=None)
        p.add_argument(opt, default=",".join(default))
        p.add_argument("--jobs", type=int, default=1)
        p.set_defaults(func=func)

    p = sub.add_parser("validate", help="check a run against sampled trajectories")
    p.add_argument("system")
    _add_common(p)
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--refinement", type=int, default=10)
    p.add_argument("--negative-control", action="store_true",
                   help="shift every box off itself; the check must then fail")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ReachError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
