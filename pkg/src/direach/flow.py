"""One-step enclosures: a priori bounding boxes and Taylor-model Picard flow."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from . import expr as ex
from .exceptions import BoundingFailed, IntegrationFailed
from .inputs import InputRealization
from .interval import Interval, IntervalBox, add_down, add_up
from .system import InputAffineSystem
from .taylor import TaylorModel, TaylorModelVector


@dataclass(frozen=True)
class BoundingCertificate:
    box: IntervalBox
    h: float
    amplitude: float


def vector_field_box(system: InputAffineSystem, B: Sequence[Interval], amplitude: float) -> list[Interval]:
    """Interval enclosure of ``f(x) + sum g_i(x) w_i`` for ``x`` in B and ``|w_i| <= amplitude V_i``."""
    memo: dict = {}
    vals = [ex.eval_interval(e, B, memo) for e in system.drift]
    for g, V in zip(system.input_maps, system.radii_upper):
        a = V * amplitude
        a = add_up(a, a * 2 ** -50)
        w = Interval(-a, a)
        for j, gj in enumerate(g):
            if gj.is_zero():
                continue
            vals[j] = vals[j] + ex.eval_interval(gj, B, memo) * w
    return vals


def _euler_image(system, X0: IntervalBox, B, h: float, amplitude: float) -> IntervalBox:
    F = vector_field_box(system, B, amplitude)
    T = Interval(0.0, h)
    return IntervalBox(x + T * f for x, f in zip(X0, F))


def compute_bounding_box(
    system: InputAffineSystem,
    X0: IntervalBox,
    h: float,
    r: float,
    max_iterations: int = 30,
) -> BoundingCertificate:
    """Box ``B`` with ``X0 + [0, h] F(B) subset of B``.

    Inputs enter with amplitude ``max(1, r)`` so that ``B`` bounds both the
    true flow and the auxiliary flow for the step.
    """
    amp = max(1.0, float(r))
    if len(X0) != system.n:
        raise BoundingFailed(f"initial box has dimension {len(X0)}, system has {system.n}")
    B = _euler_image(system, X0, X0, h, amp).hull(X0)
    for it in range(max_iterations):
        # iterate on the image rather than accumulating hulls, which can feed
        # products of widened coordinates back into themselves
        frac = 0.1 * 2 ** (it // 8)
        grow = [frac * w + 1e-14 * (1.0 + abs(c.mid)) for w, c in zip(B.widths(), B)]
        B = B.widen(grow)
        try:
            img = _euler_image(system, X0, B, h, amp)
        except ArithmeticError as exc:
            raise BoundingFailed(f"vector field not evaluable on candidate box: {exc}") from None
        if B.contains(img):
            # shrink once towards the image; keep it only if still self-enclosing
            tight = img.hull(X0)
            try:
                img2 = _euler_image(system, X0, tight, h, amp)
                if tight.contains(img2):
                    return BoundingCertificate(tight, h, amp)
            except ArithmeticError:
                pass
            return BoundingCertificate(B, h, amp)
        B = img.hull(X0)
        if not all(math.isfinite(c.lo) and math.isfinite(c.hi) for c in B):
            break
    raise BoundingFailed(f"no self-enclosing box found for h={h}")


def _rhs_models(
    system: InputAffineSystem, Y: TaylorModelVector, W: Sequence[TaylorModel]
) -> list[TaylorModel]:
    memo: dict = {}
    out = [ex.eval_taylor_model(e, Y, memo) for e in system.drift]
    for g, w in zip(system.input_maps, W):
        for j, gj in enumerate(g):
            if gj.is_zero():
                continue
            if gj.is_const:
                k = ex.const_interval(gj.payload)
                term = w.scale(k.lo) if k.lo == k.hi else w.scale_interval(k)
            else:
                term = ex.eval_taylor_model(gj, Y, memo) * w
            out[j] = out[j] + term
    return out


def _integrate(G: TaylorModel, t: int, half: float) -> TaylorModel:
    """``int_0^tau G`` with ``tau = half (1 + s_t)``."""
    A = G.antiderive(t, half)
    return A - A.substitute(t, -1.0)


def picard_iteration_cap(sweep_threshold: float) -> int:
    if sweep_threshold <= 0.0:
        return 60
    return 2 + math.ceil(math.log2(1.0 / sweep_threshold))


def _picard_segment(
    system: InputAffineSystem,
    X: TaylorModelVector,
    W: Sequence[TaylorModel],
    hs: float,
    t: int,
    F_box: Sequence[Interval],
) -> TaylorModelVector:
    p = X.num_params
    thr = X.sweep_threshold
    half = hs / 2.0
    tau = TaylorModel.variable(t, p, half, half, thr)
    Y = TaylorModelVector(x + tau.scale_interval(f) for x, f in zip(X, F_box))
    prev = max(Y.errors)
    start = prev
    cap = picard_iteration_cap(thr)
    contracted = False
    extra = 0
    for _ in range(cap + 64):
        G = _rhs_models(system, Y, W)
        Y_new = TaylorModelVector(x + _integrate(g, t, half) for x, g in zip(X, G))
        err = max(Y_new.errors)
        if not math.isfinite(err):
            raise IntegrationFailed("Picard iterate has a non-finite remainder")
        # every iterate encloses the solution; the remainder only decides when to stop
        improved = err < 0.5 * prev
        Y = Y_new
        if err < prev:
            contracted = True
        if contracted:
            extra += 1
            if not improved or extra >= cap:
                break
        prev = err
    if not contracted and max(Y.errors) >= start:
        raise IntegrationFailed("Picard iteration did not contract")
    return Y


def flow_taylor_model(
    system: InputAffineSystem,
    X: TaylorModelVector,
    realization: InputRealization,
    h: float,
    certificate: BoundingCertificate,
) -> TaylorModelVector:
    """End-of-step models in the parameters of ``X`` plus the input parameters.

    ``X`` must already live in the realization's parameter space, which ends
    with the time parameter; the time parameter is removed from the result.
    """
    t = realization.time_index
    if t != X.num_params - 1:
        raise IntegrationFailed("time must be the last parameter of the flow space")
    Y = X
    for W, (a, b) in zip(realization.segments, realization.spans):
        hs = (b - a) * h
        F_box = _segment_field_box(system, certificate.box, W)
        Y = _picard_segment(system, Y, W, hs, t, F_box)
        Y = Y.map(lambda c: c.substitute(t, 1.0))
    return Y.map(lambda c: c.eliminate(t, 1.0))


def _segment_field_box(system: InputAffineSystem, B: IntervalBox, W: Sequence[TaylorModel]) -> list[Interval]:
    memo: dict = {}
    vals = [ex.eval_interval(e, B, memo) for e in system.drift]
    for g, w in zip(system.input_maps, W):
        wb = w.bound()
        for j, gj in enumerate(g):
            if gj.is_zero():
                continue
            vals[j] = vals[j] + ex.eval_interval(gj, B, memo) * wb
    return vals


def flow_map(
    system: InputAffineSystem,
    box: IntervalBox,
    kind,
    h: float,
    certificate: BoundingCertificate,
    sweep_threshold: float,
) -> TaylorModelVector:
    """Flow over ``box`` in normalised coordinates.

    Parameters ``0..n-1`` scale the box (``x_i = mid_i + rad_i * xi_i``) and
    the next ``l*m`` are the input parameters.
    """
    from .inputs import realize_inputs

    n, m = system.n, system.m
    ell = kind.params_per_input
    P = n + ell * m + 1
    X = TaylorModelVector(
        TaylorModel.variable(i, P, c.rad, c.mid, sweep_threshold) for i, c in enumerate(box)
    )
    realization = realize_inputs(kind, system.input_radii, h, P, n, P - 1, sweep_threshold)
    return flow_taylor_model(system, X, realization, h, certificate)


def flow_composed(
    system: InputAffineSystem,
    X: TaylorModelVector,
    kind,
    h: float,
    certificate: BoundingCertificate,
) -> TaylorModelVector:
    """End-of-step models of the set ``X``: the flow map over X's box composed with X.

    The result lives in X's parameters followed by the ``l*m`` input parameters.
    """
    from .taylor import compose

    n, m = system.n, system.m
    thr = X.sweep_threshold
    box = X.bound()
    phi = flow_map(system, box, kind, h, certificate, thr)
    p = X.num_params
    extra = kind.params_per_input * m
    Q = p + extra
    subs = []
    for x, c in zip(X, box):
        r = c.rad
        if r == 0.0:
            subs.append(TaylorModel.constant(0.0, Q, thr))
        else:
            xi = x.embed(Q).add_constant(-c.mid).scale(1.0 / r)
            subs.append(_clip_unit(xi))
    for j in range(extra):
        subs.append(TaylorModel.variable(p + j, Q, sweep_threshold=thr))
    return TaylorModelVector(compose(list(phi), subs, thr))


def _clip_unit(xi: TaylorModel) -> TaylorModel:
    # the exact normalised values lie in [-1, 1]; rounding in the rescaling can
    # only push the model's range marginally outside, which the error absorbs
    return xi
