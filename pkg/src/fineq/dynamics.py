"""Hamiltonian paths, their quantization by the Schroedinger equation, and loops.

A path lives on [0, 1] and is stored as finitely many segments.  A segment
is either *constant* (one time-independent Hamiltonian, propagated by an
exact exponential) or time-dependent (propagated by exponential stepping
with step halving).  Concatenation reparametrises each half to double speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import FlowError, InputError, IntegrationError, NotALoopError
from .flows import (
    ClassicalFlow,
    ConcatFlow,
    IdentityFlow,
    InverseFlow,
    ProductFlow,
    flow_of,
    pullback,
    push_forward_hamiltonian,
    tangent_jacobian,
)
from .linalg import commutator, expi_hermitian, op_norm
from .parsing import parse_call, parse_number
from .quantization import QuantizationLevel, UnitaryPropagator, as_level, quantize
from .sphere import L_CAP, QuadratureGrid, SphereFunction, named_function, normalize_zero_mean

ZERO_MEAN_TOL = 1e-10


@dataclass
class Segment:
    start: float
    end: float
    hamiltonian: Callable[[float], SphereFunction]
    constant: bool = False

    def __post_init__(self):
        self._cache = {}

    def at(self, t: float) -> SphereFunction:
        if self.constant:
            t = self.start
        if t not in self._cache:
            f = self.hamiltonian(t)
            if abs(f.coeffs[0]) > ZERO_MEAN_TOL:
                f = normalize_zero_mean(f)
            self._cache[t] = f
        return self._cache[t]


@dataclass
class HamiltonianPath:
    label: str
    segments: list
    flow: ClassicalFlow | None = None
    # time-independent Hamiltonian whose propagator is factored out during integration
    frame: SphereFunction | None = None

    duration = 1.0

    def segment_at(self, t: float) -> Segment:
        for seg in self.segments:
            if seg.start <= t < seg.end:
                return seg
        return self.segments[-1]

    def hamiltonian(self, t: float) -> SphereFunction:
        return self.segment_at(t).at(t)

    @property
    def breakpoints(self) -> tuple:
        return tuple(seg.start for seg in self.segments[1:])

    @property
    def time_independent(self) -> bool:
        return len(self.segments) == 1 and self.segments[0].constant

    def require_flow(self) -> ClassicalFlow:
        if self.flow is None:
            raise FlowError(f"path {self.label!r} has no classical flow")
        return self.flow

    def __repr__(self):
        return f"HamiltonianPath({self.label!r}, segments={len(self.segments)})"


# ---------------------------------------------------------------- constructors


def time_independent_path(f: SphereFunction, label: str | None = None) -> HamiltonianPath:
    f = normalize_zero_mean(f)
    return HamiltonianPath(label or "kick", [Segment(0.0, 1.0, lambda t, f=f: f, True)], flow_of(f))


def zero_path() -> HamiltonianPath:
    return HamiltonianPath("zero", [Segment(0.0, 1.0, lambda t: SphereFunction.zero(), True)], IdentityFlow())


def rotation_path(axis: str, angle: float) -> HamiltonianPath:
    """Time-one map turns the sphere by |angle| about the axis (clockwise for angle > 0)."""
    coord = {"x": "x", "y": "y", "u": "u", "z": "u"}[axis]
    return time_independent_path(0.5 * angle * named_function(coord), f"rot_{axis}({angle:.17g})")


def axisymmetric_path(profile: str | SphereFunction, time: float = 1.0) -> HamiltonianPath:
    f = named_function(profile) if isinstance(profile, str) else profile
    return time_independent_path(time * f, f"axisym({profile},{time:.17g})")


def concat_path(p: HamiltonianPath, q: HamiltonianPath) -> HamiltonianPath:
    """Run p on [0, 1/2] and q on [1/2, 1], each at double speed."""
    segs = []
    for seg in p.segments:
        segs.append(Segment(0.5 * seg.start, 0.5 * seg.end,
                            lambda t, s=seg: 2.0 * s.at(min(2.0 * t, s.end)), seg.constant))
    for seg in q.segments:
        segs.append(Segment(0.5 + 0.5 * seg.start, 0.5 + 0.5 * seg.end,
                            lambda t, s=seg: 2.0 * s.at(min(2.0 * t - 1.0, s.end)), seg.constant))
    flow = ConcatFlow(p.flow, q.flow) if p.flow is not None and q.flow is not None else None
    return HamiltonianPath(f"concat({p.label},{q.label})", segs, flow)


def inverse_path(p: HamiltonianPath, l_cap: int = L_CAP) -> HamiltonianPath:
    """Path t -> phi_t^{-1}, generated by -f_t o phi_t."""
    flow = p.require_flow()
    segs = []
    for seg in p.segments:
        if seg.constant:
            # f o phi_t = f o phi_start on a constant segment (energy is conserved)
            f0 = push_forward_hamiltonian(seg.at(seg.start), flow, seg.start, l_cap=l_cap)
            segs.append(Segment(seg.start, seg.end, lambda t, f0=f0: -f0, True))
        else:
            segs.append(Segment(seg.start, seg.end,
                                lambda t, s=seg: -push_forward_hamiltonian(s.at(t), flow, t, l_cap=l_cap)))
    return HamiltonianPath(f"inv({p.label})", segs, InverseFlow(flow))


def product_path(p: HamiltonianPath, q: HamiltonianPath, l_cap: int = L_CAP) -> HamiltonianPath:
    """Path t -> phi_t psi_t, generated by f_t + g_t o phi_t^{-1}."""
    from .sphere import poisson_bracket

    flow = p.require_flow()
    label = f"prod({p.label},{q.label})"
    qflow = q.flow
    pair_flow = ProductFlow(flow, qflow) if qflow is not None else None
    if isinstance(flow, IdentityFlow):
        return HamiltonianPath(label, list(q.segments), pair_flow)
    if p.time_independent and q.time_independent:
        f, g = p.hamiltonian(0.0), q.hamiltonian(0.0)
        if np.max(np.abs(poisson_bracket(f, g).coeffs), initial=0.0) < 1e-13:
            return HamiltonianPath(label, [Segment(0.0, 1.0, lambda t, h=f + g: h, True)], pair_flow)
        if np.max(np.abs(g.coeffs[1:]), initial=0.0) == 0.0:
            return HamiltonianPath(label, list(p.segments), pair_flow)
    cuts = sorted(set([0.0, 1.0] + list(p.breakpoints) + list(q.breakpoints)))
    segs = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        def h(t, a=a):
            f = p.hamiltonian(t)
            g = q.hamiltonian(t)
            return f + pullback(g, flow, t, l_cap=l_cap)
        segs.append(Segment(a, b, h, False))
    frame = p.hamiltonian(0.0) if p.time_independent else None
    return HamiltonianPath(label, segs, pair_flow, frame)


# ---------------------------------------------------------------- registry


def named_path(spec: str, l_cap: int = L_CAP) -> HamiltonianPath:
    """Parse e.g. 'rot_x(pi/3)', 'axisym(u2, 1)', 'prod(rot_x(pi), inv(kick(xy)))'."""
    head, args = parse_call(spec)
    if head in ("rot_u", "rot_x", "rot_y", "rot_z"):
        _expect(spec, args, 1)
        return rotation_path(head[-1], parse_number(args[0]))
    if head == "twopiloop":
        _expect(spec, args, 0)
        p = rotation_path("u", 2.0 * math.pi)
        p.label = "twopiloop"
        return p
    if head == "fourpiloop":
        _expect(spec, args, 0)
        p = rotation_path("u", 4.0 * math.pi)
        p.label = "fourpiloop"
        return p
    if head == "zero":
        return zero_path()
    if head == "axisym":
        if len(args) not in (1, 2):
            raise InputError(f"axisym takes a profile and an optional time: {spec!r}")
        profile = named_function(args[0])
        nonaxial = [i for i in range(1, profile.coeffs.size)
                    if profile.coeffs[i] != 0.0 and not _is_axial_index(i)]
        if nonaxial:
            raise InputError(f"profile {args[0]!r} is not axisymmetric")
        time = parse_number(args[1]) if len(args) == 2 else 1.0
        p = time_independent_path(time * profile, f"axisym({args[0]},{args[1] if len(args) == 2 else 1})")
        return p
    if head == "kick":
        _expect(spec, args, 1)
        return time_independent_path(named_function(args[0]), f"kick({args[0]})")
    if head == "concat":
        if len(args) < 2:
            raise InputError(f"concat needs at least two paths: {spec!r}")
        out = named_path(args[0], l_cap)
        for a in args[1:]:
            out = concat_path(out, named_path(a, l_cap))
        return out
    if head == "prod":
        _expect(spec, args, 2)
        return product_path(named_path(args[0], l_cap), named_path(args[1], l_cap), l_cap)
    if head == "inv":
        _expect(spec, args, 1)
        return inverse_path(named_path(args[0], l_cap), l_cap)
    raise InputError(f"unknown path {spec!r}")


PATH_NAMES = ("rot_u(angle)", "rot_x(angle)", "rot_y(angle)", "axisym(f, time)", "twopiloop",
              "fourpiloop", "kick(f)", "concat(p1, p2, ...)", "prod(p1, p2)", "inv(p)", "zero")


def _is_axial_index(i: int) -> bool:
    l = math.isqrt(i)
    return i == l * l + l


def _expect(spec, args, n):
    if len(args) != n:
        raise InputError(f"{spec!r}: expected {n} argument(s), got {len(args)}")


# ---------------------------------------------------------------- propagation


@dataclass
class IntegratorSettings:
    method: str = "magnus4"
    tol: float = 1e-10
    initial_steps: int = 8
    max_steps: int = 1 << 20
    forced_steps: int | None = None


_ORDER = {"midpoint": 2, "magnus4": 4}


def _step_midpoint(Q, k, t, h):
    return expi_hermitian(Q(t + 0.5 * h), k * h)


_GAUSS_OFFSET = math.sqrt(3.0) / 6.0


def _step_magnus4(Q, k, t, h):
    Q1 = Q(t + (0.5 - _GAUSS_OFFSET) * h)
    Q2 = Q(t + (0.5 + _GAUSS_OFFSET) * h)
    # Omega = -i k h (Q1+Q2)/2 - (sqrt3 k^2 h^2 / 12) [Q2, Q1] = -i H_eff
    H_eff = 0.5 * k * h * (Q1 + Q2) - 1j * (math.sqrt(3.0) * k * k * h * h / 12.0) * commutator(Q2, Q1)
    return expi_hermitian(H_eff, 1.0)


def _march(Q, k, a, b, n, method):
    step = _step_magnus4 if method == "magnus4" else _step_midpoint
    h = (b - a) / n
    U = np.eye(k, dtype=complex)
    for i in range(n):
        U = step(Q, k, a + i * h, h) @ U
    return U


def _integrate_segment(Q, k, a, b, settings: IntegratorSettings):
    if settings.method not in _ORDER:
        raise InputError(f"unknown integrator {settings.method!r}")
    if settings.forced_steps:
        return _march(Q, k, a, b, settings.forced_steps, settings.method), settings.forced_steps, float("nan")
    n = settings.initial_steps
    prev = _march(Q, k, a, b, n, settings.method)
    history = []
    while True:
        n *= 2
        if n > settings.max_steps:
            raise IntegrationError(
                f"step refinement did not reach tol={settings.tol:g}",
                {"steps": n // 2, "differences": history, "method": settings.method},
            )
        cur = _march(Q, k, a, b, n, settings.method)
        diff = op_norm(cur - prev)
        history.append(diff)
        if diff < settings.tol:
            # error of the finer solution under the asymptotic rate of the method
            return cur, n, diff / (2 ** _ORDER[settings.method] - 1)
        prev = cur


def propagate(level, path: HamiltonianPath, scheme: str = "fine",
              settings: IntegratorSettings | None = None) -> UnitaryPropagator:
    """U_k(1) for dU/dt = -i k Q_k(f_t) U, U(0) = 1."""
    level = as_level(level)
    settings = settings or IntegratorSettings()
    if path.frame is not None:
        return _propagate_in_frame(level, path, scheme, settings)
    k = level.k
    U = np.eye(k, dtype=complex)
    steps, err = 0, 0.0
    for seg in path.segments:
        span = seg.end - seg.start
        if span <= 0.0:
            continue
        if seg.constant:
            U = expi_hermitian(quantize(level, seg.at(seg.start), scheme), k * span) @ U
            continue
        cache = {}

        def Q(t, seg=seg, cache=cache):
            if t not in cache:
                cache[t] = quantize(level, seg.at(t), scheme)
            return cache[t]

        V, n, e = _integrate_segment(Q, k, seg.start, seg.end, settings)
        U = V @ U
        steps += n
        err += e if math.isfinite(e) else 0.0
    return UnitaryPropagator(level, U, _meta(path, steps, err, scheme, settings))


def _propagate_in_frame(level, path, scheme, settings):
    """Interaction picture: U(t) = exp(-i k t F) W(t) with F = Q_k(frame).

    W solves W' = -i k G(t) W with G(t) = V(t)* (Q_k(f_t) - F) V(t).  When the
    quantization is nearly equivariant along the frame flow, G varies slowly
    and the large k-dependent phases never enter the stepping.
    """
    k = level.k
    F = quantize(level, path.frame, scheme)
    w, E = np.linalg.eigh(F)

    def V(t):
        return (E * np.exp(-1j * k * t * w)) @ E.conj().T

    U = np.eye(k, dtype=complex)
    steps, err = 0, 0.0
    for seg in path.segments:
        if seg.end <= seg.start:
            continue
        cache = {}

        def G(t, seg=seg, cache=cache):
            if t not in cache:
                Vt = V(t)
                cache[t] = Vt.conj().T @ (quantize(level, seg.at(t), scheme) - F) @ Vt
            return cache[t]

        W, n, e = _integrate_segment(G, k, seg.start, seg.end, settings)
        U = W @ U
        steps += n
        err += e if math.isfinite(e) else 0.0
    return UnitaryPropagator(level, V(1.0) @ U, _meta(path, steps, err, scheme, settings, frame=True))


def _meta(path, steps, err, scheme, settings, frame=False):
    return {"label": path.label, "steps": steps, "defect_estimate": err,
            "scheme": scheme, "method": settings.method, "frame": frame}


# ---------------------------------------------------------------- loops


@dataclass
class LoopInvariants:
    action: float
    maslov_parity: int
    winding: int
    predicted_phase: float
    k: int

    @property
    def action_mod_2pi(self) -> float:
        return math.remainder(self.action, 2.0 * math.pi)


def check_loop(path: HamiltonianPath, tol: float = 1e-8, grid: QuadratureGrid | None = None) -> float:
    """Max displacement of the time-one map on a grid; raises if it exceeds tol."""
    flow = path.require_flow()
    grid = grid or QuadratureGrid(12, 24)
    pts = grid.points().reshape(-1, 3)
    moved = float(np.max(np.linalg.norm(flow.forward(pts, 1.0) - pts, axis=1)))
    if moved > tol:
        raise NotALoopError(f"time-one map of {path.label!r} moves points by {moved:.3g}")
    return moved


def _unitary_angle(J) -> float:
    # angle of the U(1) part of a 2x2 symplectic matrix
    return math.atan2(J[1, 0] - J[0, 1], J[0, 0] + J[1, 1])


def _winding(flow, base, n=64, max_n=1 << 14) -> int:
    while n <= max_n:
        ts = np.linspace(0.0, 1.0, n + 1)
        angles = np.array([_unitary_angle(tangent_jacobian(flow, base, t)) for t in ts])
        jumps = np.diff(angles)
        jumps = (jumps + np.pi) % (2.0 * np.pi) - np.pi
        if np.max(np.abs(jumps)) < np.pi / 4:
            return int(round(float(np.sum(jumps)) / (2.0 * np.pi)))
        n *= 2
    raise IntegrationError("linearised flow turns too fast to track its winding", {"samples": n // 2})


def _time_integral(path, point, nodes: int = 16) -> float:
    x, w = np.polynomial.legendre.leggauss(nodes)
    total = 0.0
    for seg in path.segments:
        a, b = seg.start, seg.end
        if b <= a:
            continue
        if seg.constant:
            total += (b - a) * float(seg.at(a).evaluate(point[None, :])[0])
            continue
        ts = a + 0.5 * (b - a) * (x + 1.0)
        vals = [float(seg.at(float(t)).evaluate(point[None, :])[0]) for t in ts]
        total += 0.5 * (b - a) * float(np.dot(w, vals))
    return total


def loop_invariants(loop: HamiltonianPath, base_point, k: int, convention: int = 1) -> LoopInvariants:
    """Action, Maslov parity and the predicted phase k A + pi m of U_{k,1}.

    The base point must stay fixed along the whole loop (its trajectory is
    then constant and bounds the degenerate disc, whose area term is 0).
    ``convention=-1`` conjugates the predicted phase.
    """
    flow = loop.require_flow()
    check_loop(loop)
    base = np.asarray(base_point, dtype=float)
    base = base / np.linalg.norm(base)
    for t in np.linspace(0.0, 1.0, 17):
        if np.linalg.norm(flow.forward(base[None, :], float(t))[0] - base) > 1e-8:
            raise InputError("base point is not fixed along the loop; capping discs are not supported")
    action = -_time_integral(loop, base)
    winding = _winding(flow, base)
    parity = winding % 2
    phase = (convention * (k * action + math.pi * parity)) % (2.0 * math.pi)
    return LoopInvariants(action, parity, winding, phase, k)


def loop_phase_homomorphism(k: int, element: int) -> float:
    """r_k on pi_1(Ham(S^2)) = Z/2, realised through the 2 pi rotation loop."""
    gen = loop_invariants(named_path("twopiloop"), [0.0, 0.0, 1.0], k).predicted_phase
    return (element % 2) * gen % (2.0 * math.pi)
