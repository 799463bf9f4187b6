"""Condition (C) for integral cohomology data.

The symplectic class and the first Chern class are given by their values on a
basis of H_2(M, Z)/torsion.  Condition (C) asks that c1 be even on every
integral class on which [omega] vanishes.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm
from numbers import Integral, Rational

from .errors import InputError


def _as_fraction(value) -> Fraction:
    if isinstance(value, bool):
        raise InputError(f"omega entries must be rationals, got {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, Integral):
        return Fraction(int(value))
    if isinstance(value, Rational):
        return Fraction(value.numerator, value.denominator)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"cannot parse rational {value!r}") from exc
    # floats included: parity questions are meaningless after rounding
    raise InputError(f"omega entries must be exact rationals, got {type(value).__name__}")


def _as_int(value) -> int:
    if isinstance(value, bool) or not isinstance(value, (Integral, str)):
        raise InputError(f"c1 entries must be integers, got {value!r}")
    try:
        return int(value)
    except ValueError as exc:
        raise InputError(f"cannot parse integer {value!r}") from exc


@dataclass(frozen=True)
class CohomologyData:
    basis_rank: int
    omega: tuple
    c1: tuple

    def __post_init__(self):
        if not isinstance(self.basis_rank, Integral) or self.basis_rank < 0:
            raise InputError("basis_rank must be a non-negative integer")
        omega = tuple(_as_fraction(v) for v in self.omega)
        c1 = tuple(_as_int(v) for v in self.c1)
        if len(omega) != self.basis_rank or len(c1) != self.basis_rank:
            raise InputError(
                f"length mismatch: basis_rank={self.basis_rank}, "
                f"len(omega)={len(omega)}, len(c1)={len(c1)}"
            )
        if self.basis_rank > 0 and all(w == 0 for w in omega):
            raise InputError("omega must not vanish on the whole lattice")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "c1", c1)

    @classmethod
    def from_vectors(cls, omega, c1) -> "CohomologyData":
        omega = list(omega)
        return cls(len(omega), tuple(omega), tuple(c1))


def _primitive_integer_row(omega) -> list[int]:
    den = lcm(*(w.denominator for w in omega))
    row = [int(w * den) for w in omega]
    g = 0
    for a in row:
        g = gcd(g, a)
    return [a // g for a in row]


def _ext_gcd(a: int, b: int) -> tuple[int, int, int]:
    """Return (g, p, q) with p*a + q*b = g = gcd(a, b) >= 0."""
    old_r, r = a, b
    old_p, p = 1, 0
    old_q, q = 0, 1
    while r:
        quot = old_r // r
        old_r, r = r, old_r - quot * r
        old_p, p = p, old_p - quot * p
        old_q, q = q, old_q - quot * q
    if old_r < 0:
        old_r, old_p, old_q = -old_r, -old_p, -old_q
    return old_r, old_p, old_q


def kernel_basis(row) -> list[tuple[int, ...]]:
    """Integer basis of {v in Z^n : <row, v> = 0}.

    Column-style Hermite reduction: a unimodular U is accumulated with
    row @ U = (g, 0, ..., 0); columns 1..n-1 of U then span the kernel.
    """
    a = [int(x) for x in row]
    n = len(a)
    if n == 0:
        return []
    U = [[int(i == j) for j in range(n)] for i in range(n)]
    for j in range(1, n):
        if a[j] == 0:
            continue
        g, p, q = _ext_gcd(a[0], a[j])
        s, t = a[0] // g, a[j] // g
        # [[p, -t], [q, s]] has determinant p*s + q*t = 1
        for i in range(n):
            c0, cj = U[i][0], U[i][j]
            U[i][0] = p * c0 + q * cj
            U[i][j] = -t * c0 + s * cj
        a[0], a[j] = g, 0
    if a[0] == 0:
        # zero row: the whole lattice is the kernel
        return [tuple(int(i == j) for i in range(n)) for j in range(n)]
    return [tuple(U[i][j] for i in range(n)) for j in range(1, n)]


def odd_witness(data: CohomologyData):
    """A kernel basis vector on which c1 is odd, or None."""
    if data.basis_rank == 0:
        return None
    for v in kernel_basis(_primitive_integer_row(data.omega)):
        if sum(c * x for c, x in zip(data.c1, v)) % 2:
            return v
    return None


def check_condition_c(data: CohomologyData) -> bool:
    """True iff c1 takes even values on Ker([omega]) in H_2(M, Z)/torsion.

    Parity of c1 is additive, so testing a generating set of the kernel
    lattice is enough.
    """
    return odd_witness(data) is None
