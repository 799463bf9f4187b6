"""Classical phase space: the sphere CP^1 with total symplectic area 2*pi.

Coordinates.  Affine chart z = r e^{i phi}; embedding (x, y, u) with
u = cos(theta) = (1 - r^2)/(1 + r^2), so z = 0 is the north pole u = 1.
In (phi, u) the form omega = i dz^dzbar / (1+|z|^2)^2 reads

    omega = 1/2 dphi ^ du,

half the standard area form.  With i_{sgrad f} omega = -df this gives

    sgrad f = -2 f_u d/dphi + 2 f_phi d/du,
    {f, g}  = 2 (f_phi g_u - f_u g_phi),

so that {x, y} = 2u, {y, u} = 2x, {u, x} = 2y, and the flow of c*u turns
every point about the u-axis by angle -2*c*t (clockwise seen from the north
pole).  Every other module inherits this orientation.

Functions are stored as coefficients of orthonormal real spherical
harmonics (orthonormal for the standard area form, total area 4*pi):

    Y_{l,0}  = P_l^0(u)
    Y_{l,q}  = sqrt(2) P_l^q(u) cos(q phi)      q > 0
    Y_{l,-q} = sqrt(2) P_l^q(u) sin(q phi)      q > 0

with P_l^q the fully normalised associated Legendre functions without the
Condon-Shortley phase.  Coefficient (l, q) lives at index l*l + l + q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import InputError, ResolutionError

TOTAL_AREA = 2.0 * np.pi
L_CAP = 64

# sup over the sphere of |Y_{l,q}| is at most sqrt((2l+1)/(4 pi))


def n_coeffs(l_max: int) -> int:
    return (l_max + 1) ** 2


def index(l: int, q: int) -> int:
    return l * l + l + q


def degree_of(n: int) -> int:
    l_max = math.isqrt(n) - 1
    if n_coeffs(l_max) != n:
        raise InputError(f"{n} is not a valid coefficient count")
    return l_max


@lru_cache(maxsize=None)
def _degrees(l_max: int) -> np.ndarray:
    return np.repeat(np.arange(l_max + 1), 2 * np.arange(l_max + 1) + 1)


def embedding(u, phi):
    s = np.sqrt(np.clip(1.0 - u * u, 0.0, None))
    return np.stack([s * np.cos(phi), s * np.sin(phi), u], axis=-1)


def spherical(points):
    """(u, phi) of unit vectors given as an (..., 3) array."""
    points = np.asarray(points, dtype=float)
    u = np.clip(points[..., 2], -1.0, 1.0)
    phi = np.arctan2(points[..., 1], points[..., 0])
    return u, phi


def affine(points):
    """Affine coordinate z of points away from the south pole."""
    u, phi = spherical(points)
    r = np.sqrt((1.0 - u) / (1.0 + u))
    return r * np.exp(1j * phi)


# ---------------------------------------------------------------- Legendre


def _sectoral_constants(l_max: int) -> np.ndarray:
    """c_m with P_m^m = c_m s^m."""
    c = np.empty(l_max + 1)
    c[0] = 1.0 / math.sqrt(4.0 * math.pi)
    for m in range(1, l_max + 1):
        c[m] = c[m - 1] * math.sqrt((2 * m + 1) / (2 * m))
    return c


def _recurrence(l: int, m: int) -> tuple[float, float]:
    a = math.sqrt((4 * l * l - 1) / (l * l - m * m))
    b = math.sqrt(((l - 1) ** 2 - m * m) / (4 * (l - 1) ** 2 - 1))
    return a, b


def _d_coeff(l: int, m: int) -> float:
    # s^2 dP_l^m/du = _d_coeff * P_{l-1}^m - l u P_l^m
    return math.sqrt((2 * l + 1) * (l * l - m * m) / (2 * l - 1))


def legendre_table(l_max: int, u) -> np.ndarray:
    """P[l, m, :] = normalised P_l^m(u) for 0 <= m <= l <= l_max (zero above)."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    s = np.sqrt(np.clip(1.0 - u * u, 0.0, None))
    P = np.zeros((l_max + 1, l_max + 1, u.size))
    cm = _sectoral_constants(l_max)
    for m in range(l_max + 1):
        P[m, m] = cm[m] * s**m
        if m + 1 <= l_max:
            P[m + 1, m] = math.sqrt(2 * m + 3) * u * P[m, m]
        for l in range(m + 2, l_max + 1):
            a, b = _recurrence(l, m)
            P[l, m] = a * (u * P[l - 1, m] - b * P[l - 2, m])
    return P


def _mode_sums(coeffs: np.ndarray, l_max: int, u: np.ndarray, derivatives: bool = False):
    """Per-azimuthal-mode sums of a coefficient vector at the abscissae u.

    Returns A, B of shape (l_max+1, len(u)) with
        f(u, phi) = sum_m A[m] cos(m phi) + B[m] sin(m phi).
    With derivatives=True also returns (AQ, BQ) and (AD, BD), the same sums
    taken over P_l^m / s and s dP_l^m/du respectively; both are bounded at
    the poles, so no division by s happens anywhere.
    """
    u = np.asarray(u, dtype=float)
    s = np.sqrt(np.clip(1.0 - u * u, 0.0, None))
    L = l_max
    A = np.zeros((L + 1, u.size))
    B = np.zeros((L + 1, u.size))
    if derivatives:
        AQ, BQ, AD, BD = (np.zeros((L + 1, u.size)) for _ in range(4))
    cm = _sectoral_constants(L)
    root2 = math.sqrt(2.0)

    # m = 0: plain Legendre polynomials
    p_prev, p_cur = None, np.full(u.size, cm[0])
    for l in range(0, L + 1):
        if l == 1:
            p_prev, p_cur = p_cur, math.sqrt(3.0) * u * p_cur
        elif l >= 2:
            a, b = _recurrence(l, 0)
            p_prev, p_cur = p_cur, a * (u * p_cur - b * p_prev)
        A[0] += coeffs[index(l, 0)] * p_cur

    for m in range(1, L + 1):
        # Q_l^m = P_l^m / s, started from c_m s^(m-1)
        q_prev = np.zeros(u.size)
        q_cur = cm[m] * s ** (m - 1)
        for l in range(m, L + 1):
            if l == m + 1:
                q_prev, q_cur = q_cur, math.sqrt(2 * m + 3) * u * q_cur
            elif l >= m + 2:
                a, b = _recurrence(l, m)
                q_prev, q_cur = q_cur, a * (u * q_cur - b * q_prev)
            cc = root2 * coeffs[index(l, m)]
            cs = root2 * coeffs[index(l, -m)]
            p = s * q_cur
            A[m] += cc * p
            B[m] += cs * p
            if derivatives:
                AQ[m] += cc * q_cur
                BQ[m] += cs * q_cur
                d = -l * u * q_cur
                if l > m:
                    d = d + _d_coeff(l, m) * q_prev
                AD[m] += cc * d
                BD[m] += cs * d
                if m == 1:
                    # s dP_l^0/du = sqrt(l(l+1)) P_l^1
                    AD[0] += coeffs[index(l, 0)] * math.sqrt(l * (l + 1)) * p
    if derivatives:
        return A, B, (AQ, BQ), (AD, BD)
    return A, B


def _combine(A, B, phi):
    m = np.arange(A.shape[0])[:, None]
    return np.sum(A * np.cos(m * phi) + B * np.sin(m * phi), axis=0)


# ---------------------------------------------------------------- grids


@dataclass(frozen=True)
class QuadratureGrid:
    """Gauss-Legendre nodes in u times equispaced nodes in phi.

    Integrates exactly every product whose degree in u is at most
    2*n_u - 1 and whose azimuthal modes are below n_phi.
    """

    n_u: int
    n_phi: int

    def __post_init__(self):
        if self.n_u < 1 or self.n_phi < 1:
            raise InputError("grid sizes must be positive")

    @classmethod
    def for_band(cls, l_max: int) -> "QuadratureGrid":
        """Smallest grid on which analysis of band-limit-l_max data is exact."""
        return cls(l_max + 1, 2 * l_max + 2)

    def resolves(self, total_degree: int) -> bool:
        return 2 * self.n_u - 1 >= total_degree and self.n_phi > total_degree

    @property
    def nodes(self):
        return _gauss(self.n_u)

    @property
    def u(self) -> np.ndarray:
        return self.nodes[0]

    @property
    def weights(self) -> np.ndarray:
        return self.nodes[1]

    @property
    def phi(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_phi) / self.n_phi

    def points(self) -> np.ndarray:
        """Embedding coordinates, shape (n_u, n_phi, 3)."""
        uu, pp = np.meshgrid(self.u, self.phi, indexing="ij")
        return embedding(uu, pp)

    def integrate(self, samples) -> float:
        """Quadrature of integral(f omega) from grid samples of f."""
        samples = np.asarray(samples)
        row = samples.sum(axis=1) * (2.0 * np.pi / self.n_phi)
        return 0.5 * float(np.dot(self.weights, row))


@lru_cache(maxsize=64)
def _gauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=32)
def _grid_table(n_u: int, l_max: int) -> np.ndarray:
    table = legendre_table(l_max, _gauss(n_u)[0])
    table.setflags(write=False)
    return table


def synthesize(coeffs: np.ndarray, grid: QuadratureGrid) -> np.ndarray:
    """Samples of the harmonic series on the grid, shape (n_u, n_phi)."""
    L = degree_of(coeffs.size)
    if grid.n_phi <= 2 * L:
        raise ResolutionError(f"n_phi={grid.n_phi} cannot hold azimuthal mode {L}")
    P = _grid_table(grid.n_u, L)
    n_modes = grid.n_phi // 2 + 1
    spec = np.zeros((grid.n_u, n_modes), dtype=complex)
    for m in range(0, L + 1):
        ls = np.arange(m, L + 1)
        if m == 0:
            a = coeffs[ls * ls + ls] @ P[m:, 0]
            spec[:, 0] = a
            continue
        w = math.sqrt(2.0)
        a = (w * coeffs[ls * ls + ls + m]) @ P[m:, m]
        b = (w * coeffs[ls * ls + ls - m]) @ P[m:, m]
        # a cos + b sin = Re((a - i b) e^{i m phi})
        spec[:, m] = 0.5 * (a - 1j * b)
    return np.fft.irfft(spec * grid.n_phi, n=grid.n_phi, axis=1)


def analyze(samples: np.ndarray, grid: QuadratureGrid, l_max: int) -> np.ndarray:
    """Real harmonic coefficients up to l_max from grid samples."""
    samples = np.asarray(samples, dtype=float)
    if samples.shape != (grid.n_u, grid.n_phi):
        raise InputError(f"samples shape {samples.shape} does not match grid")
    if grid.n_phi <= 2 * l_max:
        raise ResolutionError(f"n_phi={grid.n_phi} too small for band limit {l_max}")
    F = np.fft.rfft(samples, axis=1) * (2.0 * np.pi / grid.n_phi)
    P = _grid_table(grid.n_u, l_max)
    w = grid.weights
    out = np.zeros(n_coeffs(l_max))
    for m in range(l_max + 1):
        ls = np.arange(m, l_max + 1)
        proj = P[m:, m] * w  # (n_l, n_u)
        if m == 0:
            out[ls * ls + ls] = proj @ F[:, 0].real
        else:
            scale = math.sqrt(2.0)
            out[ls * ls + ls + m] = scale * (proj @ F[:, m].real)
            out[ls * ls + ls - m] = -scale * (proj @ F[:, m].imag)
    return out


# ---------------------------------------------------------------- functions


@dataclass(frozen=True, eq=False)
class SphereFunction:
    """Real band-limited function on the sphere."""

    coeffs: np.ndarray
    truncation_error: float = field(default=0.0, compare=False)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        degree_of(c.size)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def l_max(self) -> int:
        return degree_of(self.coeffs.size)

    # construction

    @classmethod
    def zero(cls, l_max: int = 0) -> "SphereFunction":
        return cls(np.zeros(n_coeffs(l_max)))

    @classmethod
    def constant(cls, value: float) -> "SphereFunction":
        return cls(np.array([value * math.sqrt(4.0 * math.pi)]))

    @classmethod
    def harmonic(cls, l: int, q: int, scale: float = 1.0) -> "SphereFunction":
        if abs(q) > l:
            raise InputError(f"|q| must not exceed l, got l={l}, q={q}")
        c = np.zeros(n_coeffs(l))
        c[index(l, q)] = scale
        return cls(c)

    @classmethod
    def from_samples(cls, samples, grid: QuadratureGrid, l_max: int) -> "SphereFunction":
        return cls(analyze(samples, grid, l_max))

    @classmethod
    def from_callable(cls, fn, l_max: int, grid: QuadratureGrid | None = None) -> "SphereFunction":
        """Analyse fn(x, y, u) assuming its band limit does not exceed l_max."""
        grid = grid or QuadratureGrid.for_band(l_max)
        pts = grid.points()
        vals = np.asarray(fn(pts[..., 0], pts[..., 1], pts[..., 2]), dtype=float)
        vals = np.broadcast_to(vals, pts.shape[:2])
        return cls(analyze(vals, grid, l_max))

    # evaluation

    def samples(self, grid: QuadratureGrid) -> np.ndarray:
        key = (grid.n_u, grid.n_phi)
        if key not in self._cache:
            if grid.n_phi <= 2 * self.l_max:
                raise ResolutionError(f"grid {key} cannot sample band limit {self.l_max}")
            vals = synthesize(self.coeffs, grid)
            vals.setflags(write=False)
            self._cache[key] = vals
        return self._cache[key]

    def evaluate(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        shape = points.shape[:-1]
        u, phi = spherical(points.reshape(-1, 3))
        A, B = _mode_sums(self.coeffs, self.l_max, u)
        return _combine(A, B, phi).reshape(shape)

    def __call__(self, points):
        return self.evaluate(points)

    def derivative_fields(self, points):
        """(f, f_phi / s, s f_u) at the given points; all smooth on the sphere."""
        points = np.asarray(points, dtype=float)
        shape = points.shape[:-1]
        u, phi = spherical(points.reshape(-1, 3))
        A, B, (AQ, BQ), (AD, BD) = _mode_sums(self.coeffs, self.l_max, u, derivatives=True)
        m = np.arange(A.shape[0])[:, None]
        cos, sin = np.cos(m * phi), np.sin(m * phi)
        f = np.sum(A * cos + B * sin, axis=0)
        f_phi_over_s = np.sum(m * (BQ * cos - AQ * sin), axis=0)
        s_f_u = np.sum(AD * cos + BD * sin, axis=0)
        return f.reshape(shape), f_phi_over_s.reshape(shape), s_f_u.reshape(shape)

    def hamiltonian_vector_field(self, points) -> np.ndarray:
        """sgrad f in embedding coordinates."""
        points = np.asarray(points, dtype=float)
        u, phi = spherical(points)
        s = np.sqrt(np.clip(1.0 - u * u, 0.0, None))
        _, fphi, fu = self.derivative_fields(points)
        e_phi = np.stack([-np.sin(phi), np.cos(phi), np.zeros_like(phi)], axis=-1)
        s_d_du = np.stack([-u * np.cos(phi), -u * np.sin(phi), s], axis=-1)
        return -2.0 * fu[..., None] * e_phi + 2.0 * fphi[..., None] * s_d_du

    # algebra

    def padded(self, l_max: int) -> "SphereFunction":
        if l_max < self.l_max:
            raise InputError("use truncated() to lower the band limit")
        if l_max == self.l_max:
            return self
        c = np.zeros(n_coeffs(l_max))
        c[: self.coeffs.size] = self.coeffs
        return SphereFunction(c)

    def truncated(self, l_max: int) -> "SphereFunction":
        return SphereFunction(self.coeffs[: n_coeffs(min(l_max, self.l_max))].copy())

    def trimmed(self, tol: float = 0.0) -> "SphereFunction":
        """Drop the top degrees whose combined sup-norm bound is <= tol."""
        bound = tail_bounds(self.coeffs)
        keep = int(np.argmax(bound <= tol)) if np.any(bound <= tol) else self.l_max + 1
        return self.truncated(max(keep - 1, 0))

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = SphereFunction.constant(float(other))
        if not isinstance(other, SphereFunction):
            return NotImplemented
        L = max(self.l_max, other.l_max)
        return SphereFunction(self.padded(L).coeffs + other.padded(L).coeffs)

    __radd__ = __add__

    def __neg__(self):
        return SphereFunction(-self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, SphereFunction):
            return product(self, other)
        if isinstance(other, (int, float, np.floating)):
            return SphereFunction(float(other) * self.coeffs)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * (1.0 / float(other))

    def allclose(self, other, atol=1e-12) -> bool:
        L = max(self.l_max, other.l_max)
        return bool(np.allclose(self.padded(L).coeffs, other.padded(L).coeffs, rtol=0, atol=atol))

    def coefficient_distance(self, other) -> float:
        L = max(self.l_max, other.l_max)
        return float(np.max(np.abs(self.padded(L).coeffs - other.padded(L).coeffs), initial=0.0))

    def sup_bound(self) -> float:
        """Upper bound on max |f| from the coefficients."""
        return float(tail_bounds(self.coeffs)[0])

    def sup_norm(self) -> float:
        """max |f| over the sphere: dense sampling polished by local search."""
        from scipy.optimize import minimize

        grid = QuadratureGrid(4 * self.l_max + 16, 8 * self.l_max + 32)
        vals = np.abs(self.samples(grid))
        best = float(vals.max())
        flat = np.argsort(vals, axis=None)[::-1][:8]

        def neg(x):
            pt = embedding(np.clip(x[0], -1.0, 1.0), x[1])
            return -abs(float(self.evaluate(pt[None, :])[0]))

        for idx in flat:
            i, j = np.unravel_index(idx, vals.shape)
            res = minimize(neg, [grid.u[i], grid.phi[j]], method="Nelder-Mead",
                           options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 2000})
            best = max(best, -float(res.fun))
        # the poles are not grid nodes
        poles = np.abs(self.evaluate(np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]])))
        return max(best, float(poles.max()))


def tail_bounds(coeffs: np.ndarray) -> np.ndarray:
    """tail[l] bounds sup |sum over degrees >= l| by the triangle inequality."""
    L = degree_of(coeffs.size)
    per_degree = np.zeros(L + 2)
    degs = _degrees(L)
    np.add.at(per_degree, degs, np.abs(coeffs) * np.sqrt((2 * degs + 1) / (4 * np.pi)))
    return np.cumsum(per_degree[::-1])[::-1]


# ---------------------------------------------------------------- operations


def integrate(f: SphereFunction, grid: QuadratureGrid | None = None) -> float:
    """integral of f against omega (total mass 2*pi), by quadrature."""
    grid = grid or QuadratureGrid.for_band(f.l_max)
    if not grid.resolves(f.l_max):
        raise ResolutionError(f"grid ({grid.n_u}, {grid.n_phi}) does not resolve degree {f.l_max}")
    return grid.integrate(f.samples(grid))


def mean_value(f: SphereFunction) -> float:
    # integral of Y_00 against omega is sqrt(pi); omega has mass 2 pi
    return float(f.coeffs[0]) * math.sqrt(math.pi) / TOTAL_AREA


def normalize_zero_mean(f: SphereFunction) -> SphereFunction:
    c = f.coeffs.copy()
    c[0] = 0.0
    return SphereFunction(c)


def laplacian(f: SphereFunction) -> SphereFunction:
    """Holomorphic Laplacian (1+|z|^2)^2 d_z d_zbar; eigenvalue -l(l+1) on degree l."""
    degs = _degrees(f.l_max)
    return SphereFunction(-(degs * (degs + 1)) * f.coeffs)


def product(f: SphereFunction, g: SphereFunction) -> SphereFunction:
    L = f.l_max + g.l_max
    grid = QuadratureGrid.for_band(L)
    return SphereFunction.from_samples(f.samples(grid) * g.samples(grid), grid, L)


def poisson_bracket(f: SphereFunction, g: SphereFunction) -> SphereFunction:
    """{f, g} = 2 (f_phi g_u - f_u g_phi), exact up to degree l_f + l_g."""
    L = f.l_max + g.l_max
    grid = QuadratureGrid.for_band(L)
    pts = grid.points().reshape(-1, 3)
    _, fphi, fu = f.derivative_fields(pts)
    _, gphi, gu = g.derivative_fields(pts)
    vals = 2.0 * (fphi * gu - fu * gphi)
    return SphereFunction.from_samples(vals.reshape(grid.n_u, grid.n_phi), grid, L)


# ---------------------------------------------------------------- registry

_BASE_FUNCTIONS = {
    "0": (lambda x, y, u: 0.0 * u, 0),
    "1": (lambda x, y, u: 1.0 + 0.0 * u, 0),
    "u": (lambda x, y, u: u, 1),
    "z": (lambda x, y, u: u, 1),
    "x": (lambda x, y, u: x, 1),
    "y": (lambda x, y, u: y, 1),
    "u2": (lambda x, y, u: u * u - 1.0 / 3.0, 2),
    "xy": (lambda x, y, u: x * y, 2),
    "xz": (lambda x, y, u: x * u, 2),
    "yz": (lambda x, y, u: y * u, 2),
    "x2y2": (lambda x, y, u: x * x - y * y, 2),
}


@lru_cache(maxsize=None)
def _base_function(name: str) -> SphereFunction:
    if name in _BASE_FUNCTIONS:
        fn, L = _BASE_FUNCTIONS[name]
        return SphereFunction.from_callable(fn, L)
    if name.startswith("Y") and "m" in name:
        # Y3m2 -> Y_{3,-2}, Y2p1 or Y21 -> Y_{2,1}
        body = name[1:]
        if "m" in body:
            l_str, q_str = body.split("m", 1)
            return SphereFunction.harmonic(int(l_str), -int(q_str))
    if name.startswith("Y") and "p" in name:
        l_str, q_str = name[1:].split("p", 1)
        return SphereFunction.harmonic(int(l_str), int(q_str))
    raise InputError(f"unknown function name {name!r}")


FUNCTION_NAMES = tuple(_BASE_FUNCTIONS) + ("Y<l>m<q>", "Y<l>p<q>", "lincomb(c*name, ...)")


def named_function(spec: str) -> SphereFunction:
    """Resolve a registry name such as 'u2', 'Y3m2' or 'lincomb(0.5*u, 2*xy)'."""
    from .parsing import parse_call, parse_number

    spec = spec.strip()
    head, args = parse_call(spec)
    if head == "lincomb":
        total = SphereFunction.zero()
        for term in args:
            if "*" in term:
                coef, _, name = term.rpartition("*")
                total = total + parse_number(coef) * named_function(name)
            else:
                total = total + named_function(term)
        return total
    if args:
        raise InputError(f"unknown function constructor {head!r}")
    try:
        return _base_function(head)
    except ValueError as exc:
        raise InputError(f"unknown function name {spec!r}") from exc
