"""Classical Hamiltonian flows on the sphere and pull-backs along them.

Every flow maps arrays of unit vectors of shape (..., 3).  ``forward(p, t)``
is phi_t and ``backward(p, t)`` is phi_t^{-1}.  Orientation follows
``sphere``: the flow of a linear Hamiltonian f = <a, r> is the rotation
about a by angle -2|a|t.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import IntegrationError
from .sphere import (
    L_CAP,
    QuadratureGrid,
    SphereFunction,
    analyze,
    index,
    tail_bounds,
)

_LINEAR_SCALE = math.sqrt(3.0 / (4.0 * math.pi))


def rotation_matrix(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if n == 0.0:
        return np.eye(3)
    k = axis / n
    K = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    return np.eye(3) + math.sin(angle) * K + (1.0 - math.cos(angle)) * (K @ K)


def _renormalize(p):
    return p / np.linalg.norm(p, axis=-1, keepdims=True)


class ClassicalFlow:
    exact = True
    kind = "abstract"

    def forward(self, points, t: float) -> np.ndarray:
        raise NotImplementedError

    def backward(self, points, t: float) -> np.ndarray:
        raise NotImplementedError


class IdentityFlow(ClassicalFlow):
    kind = "identity"

    def forward(self, points, t):
        return np.array(points, dtype=float)

    def backward(self, points, t):
        return np.array(points, dtype=float)


class RotationFlow(ClassicalFlow):
    """Rigid rotation about ``axis`` at angular velocity ``rate`` (right-hand rule)."""

    kind = "rotation"

    def __init__(self, axis, rate: float):
        self.axis = np.asarray(axis, dtype=float)
        self.rate = float(rate)

    @classmethod
    def of_linear(cls, a) -> "RotationFlow":
        """Flow of the Hamiltonian f(r) = <a, r>."""
        a = np.asarray(a, dtype=float)
        n = np.linalg.norm(a)
        if n == 0.0:
            return cls([0.0, 0.0, 1.0], 0.0)
        return cls(a / n, -2.0 * n)

    def matrix(self, t: float) -> np.ndarray:
        return rotation_matrix(self.axis, self.rate * t)

    def forward(self, points, t):
        return np.asarray(points, dtype=float) @ self.matrix(t).T

    def backward(self, points, t):
        return np.asarray(points, dtype=float) @ self.matrix(-t).T


class AxisymmetricFlow(ClassicalFlow):
    """Flow of f = F(u): each parallel turns about the u-axis at rate -2 F'(u)."""

    kind = "axisymmetric"

    def __init__(self, profile: SphereFunction):
        L = profile.l_max
        legendre = np.array(
            [profile.coeffs[index(l, 0)] * math.sqrt((2 * l + 1) / (4 * math.pi)) for l in range(L + 1)]
        )
        self.profile = profile
        self._dF = np.polynomial.legendre.legder(legendre) if L > 0 else np.zeros(1)

    def rate(self, u) -> np.ndarray:
        return -2.0 * np.polynomial.legendre.legval(u, self._dF)

    def _turn(self, points, t):
        p = np.asarray(points, dtype=float)
        ang = self.rate(p[..., 2]) * t
        c, s = np.cos(ang), np.sin(ang)
        out = np.empty_like(p)
        out[..., 0] = c * p[..., 0] - s * p[..., 1]
        out[..., 1] = s * p[..., 0] + c * p[..., 1]
        out[..., 2] = p[..., 2]
        return out

    def forward(self, points, t):
        return self._turn(points, t)

    def backward(self, points, t):
        return self._turn(points, -t)


class NumericFlow(ClassicalFlow):
    """RK4 on embedding coordinates with renormalisation to the sphere.

    ``hamiltonian`` maps t to a SphereFunction.  The step count starts at
    64 per unit time and doubles until the pointwise change is below tol.
    """

    exact = False
    kind = "numeric"

    def __init__(self, hamiltonian, breakpoints=(), tol: float = 1e-10, max_steps: int = 1 << 16):
        self.hamiltonian = hamiltonian
        self.breakpoints = tuple(sorted(breakpoints))
        self.tol = tol
        self.max_steps = max_steps
        self.last_steps = 0

    def _field(self, p, t):
        return self.hamiltonian(t).hamiltonian_vector_field(p)

    def _integrate(self, p, t0, t1, n):
        h = (t1 - t0) / n
        t = t0
        for _ in range(n):
            k1 = self._field(p, t)
            k2 = self._field(_renormalize(p + 0.5 * h * k1), t + 0.5 * h)
            k3 = self._field(_renormalize(p + 0.5 * h * k2), t + 0.5 * h)
            k4 = self._field(_renormalize(p + h * k3), t + h)
            p = _renormalize(p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
            t += h
        return p

    def _piecewise(self, p, t0, t1):
        lo, hi = min(t0, t1), max(t0, t1)
        cuts = [b for b in self.breakpoints if lo < b < hi]
        knots = [t0] + (cuts if t1 > t0 else cuts[::-1]) + [t1]
        for a, b in zip(knots[:-1], knots[1:]):
            p = self._converged(p, a, b)
        return p

    def _converged(self, p, t0, t1):
        span = abs(t1 - t0)
        if span == 0.0:
            return p
        n = 64 * max(1, math.ceil(span))
        prev = self._integrate(p, t0, t1, n)
        while True:
            n *= 2
            if n > self.max_steps:
                raise IntegrationError(
                    "classical flow did not converge",
                    {"steps": n // 2, "tol": self.tol},
                )
            cur = self._integrate(p, t0, t1, n)
            change = float(np.max(np.abs(cur - prev), initial=0.0))
            if change < self.tol:
                self.last_steps = n
                return cur
            prev = cur

    def forward(self, points, t):
        p = _renormalize(np.array(points, dtype=float))
        return self._piecewise(p, 0.0, t)

    def backward(self, points, t):
        p = _renormalize(np.array(points, dtype=float))
        return self._piecewise(p, t, 0.0)


class ConcatFlow(ClassicalFlow):
    """First ``first`` at double speed on [0, 1/2], then ``second`` on [1/2, 1]."""

    kind = "concat"

    def __init__(self, first: ClassicalFlow, second: ClassicalFlow):
        self.first, self.second = first, second
        self.exact = first.exact and second.exact

    def forward(self, points, t):
        if t <= 0.5:
            return self.first.forward(points, 2.0 * t)
        return self.second.forward(self.first.forward(points, 1.0), 2.0 * t - 1.0)

    def backward(self, points, t):
        if t <= 0.5:
            return self.first.backward(points, 2.0 * t)
        return self.first.backward(self.second.backward(points, 2.0 * t - 1.0), 1.0)


class ProductFlow(ClassicalFlow):
    """theta_t = phi_t o psi_t."""

    kind = "product"

    def __init__(self, phi: ClassicalFlow, psi: ClassicalFlow):
        self.phi, self.psi = phi, psi
        self.exact = phi.exact and psi.exact

    def forward(self, points, t):
        return self.phi.forward(self.psi.forward(points, t), t)

    def backward(self, points, t):
        return self.psi.backward(self.phi.backward(points, t), t)


class InverseFlow(ClassicalFlow):
    """t -> phi_t^{-1}."""

    kind = "inverse"

    def __init__(self, flow: ClassicalFlow):
        self.flow = flow
        self.exact = flow.exact

    def forward(self, points, t):
        return self.flow.backward(points, t)

    def backward(self, points, t):
        return self.flow.forward(points, t)


def linear_part(f: SphereFunction) -> np.ndarray:
    """a with f - mean = <a, r> when f has band limit 1."""
    c = f.coeffs
    if f.l_max < 1:
        return np.zeros(3)
    return _LINEAR_SCALE * np.array([c[index(1, 1)], c[index(1, -1)], c[index(1, 0)]])


def flow_of(f: SphereFunction, tol: float = 1e-14) -> ClassicalFlow:
    """Exact flow of a time-independent Hamiltonian when one is available."""
    c = f.coeffs
    if f.l_max == 0 or np.all(np.abs(c[1:]) <= tol):
        return IdentityFlow()
    if np.all(np.abs(c[4:]) <= tol):
        return RotationFlow.of_linear(linear_part(f))
    non_axial = np.ones(c.size, dtype=bool)
    for l in range(f.l_max + 1):
        non_axial[index(l, 0)] = False
    if np.all(np.abs(c[non_axial]) <= tol):
        return AxisymmetricFlow(f)
    return NumericFlow(lambda t: f)


# ---------------------------------------------------------------- pull-backs


def compose(g: SphereFunction, point_map, l_cap: int = L_CAP, tol: float = 1e-13):
    """Harmonic coefficients of g o point_map, re-analysed up to degree l_cap.

    The result is trimmed to the smallest band limit whose discarded tail
    has sup-norm bound <= tol.  Returns the function and an error estimate
    in sup norm: the discarded tail plus the size of the top four degrees,
    which stays large when l_cap does not resolve the composition.
    """
    grid = QuadratureGrid.for_band(l_cap)
    pts = grid.points()
    vals = g.evaluate(point_map(pts.reshape(-1, 3))).reshape(grid.n_u, grid.n_phi)
    full = SphereFunction(analyze(vals, grid, l_cap))
    bounds = tail_bounds(full.coeffs)
    trimmed = full.trimmed(tol)
    discarded = float(bounds[trimmed.l_max + 1])
    unresolved = float(bounds[max(l_cap - 3, 0)])
    err = discarded + (unresolved if trimmed.l_max > l_cap - 4 else 0.0)
    return SphereFunction(trimmed.coeffs, truncation_error=err), err


def pullback(g: SphereFunction, flow: ClassicalFlow, t: float, l_cap: int = L_CAP,
             tol: float = 1e-13) -> SphereFunction:
    """g o phi_t^{-1}; the sup-norm truncation estimate is kept on the result."""
    if isinstance(flow, IdentityFlow) or t == 0.0:
        return g
    if isinstance(flow, RotationFlow) and g.l_max <= l_cap:
        # rotations preserve every degree, so the band limit is kept
        h, _ = compose(g, lambda p: flow.backward(p, t), l_cap=max(g.l_max, 1), tol=0.0)
        return SphereFunction(h.coeffs.copy())
    h, _ = compose(g, lambda p: flow.backward(p, t), l_cap=l_cap, tol=tol)
    return h


def push_forward_hamiltonian(g: SphereFunction, flow: ClassicalFlow, t: float,
                             l_cap: int = L_CAP, tol: float = 1e-13) -> SphereFunction:
    """g o phi_t."""
    if isinstance(flow, IdentityFlow) or t == 0.0:
        return g
    if isinstance(flow, RotationFlow):
        h, _ = compose(g, lambda p: flow.forward(p, t), l_cap=max(g.l_max, 1), tol=0.0)
        return SphereFunction(h.coeffs.copy())
    h, _ = compose(g, lambda p: flow.forward(p, t), l_cap=l_cap, tol=tol)
    return h


def tangent_jacobian(flow: ClassicalFlow, point, t: float, eps: float = 1e-6):
    """2x2 derivative of phi_t at a point fixed by phi_t, in an orthonormal tangent frame."""
    p = np.asarray(point, dtype=float)
    p = p / np.linalg.norm(p)
    helper = np.array([1.0, 0.0, 0.0]) if abs(p[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(p, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(p, e1)
    frame = np.stack([e1, e2])
    probes = []
    for e in frame:
        plus = _renormalize(p + eps * e)
        minus = _renormalize(p - eps * e)
        probes.extend([plus, minus])
    mapped = flow.forward(np.array(probes), t)
    J = np.empty((2, 2))
    for j in range(2):
        d = (mapped[2 * j] - mapped[2 * j + 1]) / (2.0 * eps)
        J[:, j] = frame @ d
    return J
