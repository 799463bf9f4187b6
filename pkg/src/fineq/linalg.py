"""Norms and phase-quotient distances on dense matrices."""

from __future__ import annotations

import math

import numpy as np

from .errors import InputError

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _is_hermitian(A: np.ndarray) -> bool:
    return A.shape[0] == A.shape[1] and np.array_equal(A, A.conj().T)


def singular_values(A) -> np.ndarray:
    A = np.asarray(A)
    if _is_hermitian(A):
        return np.sort(np.abs(np.linalg.eigvalsh(A)))[::-1]
    return np.linalg.svd(A, compute_uv=False)


def op_norm(A) -> float:
    A = np.asarray(A)
    if A.size == 0:
        return 0.0
    return float(singular_values(A)[0])


def schatten_norm(A, p) -> float:
    """(sum sigma_i^p)^(1/p); p = inf is the operator norm."""
    p = float(p)
    if not p >= 1.0:
        raise InputError(f"Schatten exponent must be >= 1, got {p}")
    sv = singular_values(A)
    if sv.size == 0:
        return 0.0
    top = sv[0]
    if math.isinf(p):
        return float(top)
    if top == 0.0:
        return 0.0
    return float(top * np.sum((sv / top) ** p) ** (1.0 / p))


def trace(A) -> complex:
    return complex(np.trace(np.asarray(A)))


def commutator(A, B) -> np.ndarray:
    return A @ B - B @ A


def hermitian_part(A) -> np.ndarray:
    return 0.5 * (A + A.conj().T)


def expi_hermitian(H, scale: float) -> np.ndarray:
    """exp(-i * scale * H) for Hermitian H via eigendecomposition."""
    w, V = np.linalg.eigh(hermitian_part(H))
    return (V * np.exp(-1j * scale * w)) @ V.conj().T


def golden_section(fn, a: float, b: float, tol: float = 1e-10, max_iter: int = 200):
    """Minimise a unimodal fn on [a, b]; returns (x, fn(x))."""
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(max_iter):
        if abs(b - a) <= tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = fn(d)
    x = 0.5 * (a + b)
    return x, fn(x)


def projective_distance(U, V, p=math.inf, n_coarse: int = 256, tol: float = 1e-10) -> float:
    """inf over theta of ||U - e^{i theta} V||_p.

    Coarse scan of theta on n_coarse points, then golden-section refinement
    in the bracket around the best coarse point.
    """
    U = np.asarray(getattr(U, "matrix", U))
    V = np.asarray(getattr(V, "matrix", V))
    if U.shape != V.shape:
        raise InputError("operators act on different spaces")

    def dist(theta):
        return schatten_norm(U - np.exp(1j * theta) * V, p)

    thetas = 2.0 * np.pi * np.arange(n_coarse) / n_coarse
    vals = np.array([dist(th) for th in thetas])
    i = int(np.argmin(vals))
    step = 2.0 * np.pi / n_coarse
    _, best = golden_section(dist, thetas[i] - step, thetas[i] + step, tol=tol)
    return float(min(best, vals[i]))


def projective_distance_2(U, V) -> float:
    """Closed form for p = 2: the optimal phase is arg tr(V* U)."""
    U = np.asarray(getattr(U, "matrix", U))
    V = np.asarray(getattr(V, "matrix", V))
    theta = np.angle(np.trace(V.conj().T @ U))
    return schatten_norm(U - np.exp(1j * theta) * V, 2)
