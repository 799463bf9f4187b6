"""Berezin-Toeplitz operators on holomorphic sections of O(k-1) over CP^1.

H_k has the orthonormal monomial basis e_j = c_j z^j, j = 0..m with m = k-1
and c_j^2 = (m+1) binom(m, j) / (2 pi), for the metric |s|^2 (1+|z|^2)^{-m}
integrated against omega.  Operators are dense complex k x k arrays in this
basis, entry (i, j) = <A e_j, e_i>.

Matrix elements reduce to one-dimensional integrals.  With t = |z|^2/(1+|z|^2)
(so u = 1 - 2t) and f = sum_q f_q(u) e^{i q phi},

    <T(f) e_j, e_i> = 2 pi c_i c_j int_0^1 t^{(i+j)/2} (1-t)^{m-(i+j)/2} f_{i-j}(1-2t) dt,

and the integrand is a polynomial in t of degree m + l_max, so Gauss-Legendre
with ceil((m + l_max)/2) + 2 nodes is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .errors import InputError, ResolutionError
from .linalg import op_norm
from .sphere import SphereFunction, _mode_sums, laplacian, poisson_bracket

SCHEMES = ("toeplitz", "fine")


@dataclass(frozen=True)
class QuantizationLevel:
    k: int

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise InputError(f"k must be a positive integer, got {self.k!r}")

    @property
    def m(self) -> int:
        return self.k - 1

    @property
    def dim(self) -> int:
        return self.m + 1

    @property
    def hbar(self) -> float:
        return 1.0 / self.k


def as_level(level) -> QuantizationLevel:
    return level if isinstance(level, QuantizationLevel) else QuantizationLevel(int(level))


def hilbert_dim(k: int) -> int:
    return as_level(k).dim


@lru_cache(maxsize=128)
def _section_table(m: int, n_t: int):
    """B[j, n] = sqrt(2 pi w_n) c_j t_n^{j/2} (1-t_n)^{(m-j)/2} and nodes u_n = 1 - 2 t_n.

    Then <T(f) e_j, e_i> = sum_n B[i, n] B[j, n] f_{i-j}(u_n).  Built in log
    space; the binomial factors overflow long before k = 512.
    """
    x, w = np.polynomial.legendre.leggauss(n_t)
    t = 0.5 * (x + 1.0)
    w = 0.5 * w
    j = np.arange(m + 1)[:, None]
    log_binom = gammaln(m + 1) - gammaln(j + 1) - gammaln(m - j + 1)
    logB = 0.5 * (math.log(m + 1) + log_binom + j * np.log(t) + (m - j) * np.log1p(-t) + np.log(w))
    B = np.exp(logB)
    u = 1.0 - 2.0 * t
    B.setflags(write=False)
    u.setflags(write=False)
    return B, u


def nodes_needed(k: int, l_max: int) -> int:
    return math.ceil((k - 1 + l_max) / 2) + 2


def toeplitz(level, f: SphereFunction, n_t: int | None = None) -> np.ndarray:
    """Matrix of T_k(f) in the monomial basis."""
    level = as_level(level)
    m, L = level.m, f.l_max
    need = nodes_needed(level.k, L)
    if n_t is None:
        n_t = need
    elif 2 * n_t - 1 < m + L:
        raise ResolutionError(f"{n_t} radial nodes cannot integrate degree {m + L} exactly")
    B, u = _section_table(m, n_t)
    A, S = _mode_sums(f.coeffs, L, u)
    k = level.k
    out = np.zeros((k, k), dtype=complex)
    rows = np.arange(k)
    for q in range(0, min(L, m) + 1):
        fq = A[0] if q == 0 else 0.5 * (A[q] - 1j * S[q])
        # i - j = q: rows q..m against columns 0..m-q
        vals = np.einsum("in,in,n->i", B[q:], B[: k - q], fq)
        out[rows[q:], rows[: k - q]] = vals
        if q:
            out[rows[: k - q], rows[q:]] = np.conj(vals)
    return out


def op_fine(level, f: SphereFunction, n_t: int | None = None) -> np.ndarray:
    """Op_k(f) = T_k(f - Delta f / 2k)."""
    level = as_level(level)
    return toeplitz(level, f - laplacian(f) / (2.0 * level.k), n_t=n_t)


def quantize(level, f: SphereFunction, scheme: str = "fine") -> np.ndarray:
    if scheme == "fine":
        return op_fine(level, f)
    if scheme == "toeplitz":
        return toeplitz(level, f)
    raise InputError(f"unknown quantization scheme {scheme!r}; expected one of {SCHEMES}")


def gram_matrix(level, n_u: int | None = None, n_phi: int | None = None) -> np.ndarray:
    """Gram matrix of the monomial basis by direct 2D quadrature on the sphere.

    Independent of the radial reduction used by ``toeplitz``: sections are
    evaluated in the affine chart on a (u, phi) product grid and integrated
    against omega = du dphi / 2.
    """
    level = as_level(level)
    m = level.m
    n_u = n_u or (m // 2 + 2)
    n_phi = n_phi or (2 * m + 2)
    x, w = np.polynomial.legendre.leggauss(n_u)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    j = np.arange(m + 1)
    # |z|^2 = (1-u)/(1+u); |e_j|^2 h = c_j^2 t^j (1-t)^{m-j} with t = (1-u)/2
    t = 0.5 * (1.0 - x)
    log_binom = gammaln(m + 1) - gammaln(j + 1) - gammaln(m - j + 1)
    log_mod = 0.5 * (
        math.log(m + 1) - math.log(2.0 * math.pi) + log_binom[:, None]
        + j[:, None] * np.log(t)[None, :] + (m - j)[:, None] * np.log1p(-t)[None, :]
    )
    mod = np.exp(log_mod)  # (m+1, n_u)
    phase = np.exp(1j * np.outer(j, phi))  # (m+1, n_phi)
    # G_ij = sum_{a,b} (w_a/2)(2 pi/n_phi) conj(s_i) s_j at node (a, b)
    sec = mod[:, :, None] * phase[:, None, :]
    wts = (0.5 * w)[:, None] * (2.0 * np.pi / n_phi)
    return np.einsum("iab,jab,ab->ij", np.conj(sec), sec, np.broadcast_to(wts, (n_u, n_phi)))


def bracket_defect(level, f: SphereFunction, g: SphereFunction, fine: bool = True,
                   bracket: SphereFunction | None = None) -> float:
    """|| [Q f, Q g] - (hbar / i) Q({f, g}) ||_op."""
    level = as_level(level)
    scheme = "fine" if fine else "toeplitz"
    Qf, Qg = quantize(level, f, scheme), quantize(level, g, scheme)
    fg = bracket if bracket is not None else poisson_bracket(f, g)
    lhs = Qf @ Qg - Qg @ Qf
    rhs = (level.hbar / 1j) * quantize(level, fg, scheme)
    return op_norm(lhs - rhs)


@dataclass
class UnitaryPropagator:
    """Time-one Schroedinger propagator with provenance."""

    level: QuantizationLevel
    matrix: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return self.level.k

    def unitarity_defect(self) -> float:
        d = self.matrix.shape[0]
        return op_norm(self.matrix.conj().T @ self.matrix - np.eye(d))

    def __matmul__(self, other: "UnitaryPropagator") -> "UnitaryPropagator":
        if other.level != self.level:
            raise InputError("propagators live at different levels")
        return UnitaryPropagator(self.level, self.matrix @ other.matrix,
                                 {"label": f"{self.meta.get('label', '?')}*{other.meta.get('label', '?')}"})
