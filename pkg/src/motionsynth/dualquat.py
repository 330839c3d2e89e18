"""Quaternions, dual quaternions and polynomials over the dual quaternions.

A dual quaternion ``x0 + x1 i + x2 j + x3 k + eps (y0 + y1 i + y2 j + y3 k)``
is stored as the 8-vector ``(x0, x1, x2, x3, y0, y1, y2, y3)``. Quaternions
are 4-vectors ``(w, x, y, z)``.

Polynomial coefficients are ordered highest degree first:
``P(t) = c0 t^n + c1 t^(n-1) + ... + cn``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from motionsynth.errors import NotInvertible, NotRealNorm

_CONJ = np.array([1.0, -1.0, -1.0, -1.0, 1.0, -1.0, -1.0, -1.0])

# default relative tolerance for treating a primal part as zero
TAU_INV = 1e-12


# ---------------------------------------------------------------------------
# plain quaternion kernels on (..., 4) arrays
# ---------------------------------------------------------------------------

def qmul(a, b) -> np.ndarray:
    """Hamilton product of quaternion arrays, broadcasting over leading axes."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    w1, x1, y1, z1 = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    w2, x2, y2, z2 = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ],
        axis=-1,
    )


def qconj(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def left_matrix(q) -> np.ndarray:
    """Matrix L with ``qmul(q, r) == L @ r``."""
    w, x, y, z = np.asarray(q, dtype=float)
    return np.array([[w, -x, -y, -z], [x, w, -z, y], [y, z, w, -x], [z, -y, x, w]])


def right_matrix(q) -> np.ndarray:
    """Matrix R with ``qmul(r, q) == R @ r``."""
    w, x, y, z = np.asarray(q, dtype=float)
    return np.array([[w, -x, -y, -z], [x, w, z, -y], [y, -z, w, x], [z, y, -x, w]])


def dq_left_matrix(q) -> np.ndarray:
    """8x8 matrix of ``x -> q * x``."""
    q = np.asarray(q, dtype=float)
    L, Ld = left_matrix(q[:4]), left_matrix(q[4:])
    return np.block([[L, np.zeros((4, 4))], [Ld, L]])


def dq_right_matrix(q) -> np.ndarray:
    """8x8 matrix of ``x -> x * q``."""
    q = np.asarray(q, dtype=float)
    R, Rd = right_matrix(q[:4]), right_matrix(q[4:])
    return np.block([[R, np.zeros((4, 4))], [Rd, R]])


def _dq_mul_flat(a, b) -> np.ndarray:
    return np.array(dq_product_terms(a.tolist(), b.tolist()))


def dq_product_terms(a, b) -> list:
    """The eight components of ``a * b`` for sequences of scalars of any numeric type."""
    a0, a1, a2, a3, a4, a5, a6, a7 = a
    b0, b1, b2, b3, b4, b5, b6, b7 = b
    return [
        a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
        a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
        a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
        a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        a0 * b4 - a1 * b5 - a2 * b6 - a3 * b7 + a4 * b0 - a5 * b1 - a6 * b2 - a7 * b3,
        a0 * b5 + a1 * b4 + a2 * b7 - a3 * b6 + a4 * b1 + a5 * b0 + a6 * b3 - a7 * b2,
        a0 * b6 - a1 * b7 + a2 * b4 + a3 * b5 + a4 * b2 - a5 * b3 + a6 * b0 + a7 * b1,
        a0 * b7 + a1 * b6 - a2 * b5 + a3 * b4 + a4 * b3 + a5 * b2 - a6 * b1 + a7 * b0,
    ]


def dq_mul_arrays(a, b) -> np.ndarray:
    """Dual quaternion product on (..., 8) arrays."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape == (8,) and b.shape == (8,):
        return _dq_mul_flat(a, b)
    primal = qmul(a[..., :4], b[..., :4])
    dual = qmul(a[..., :4], b[..., 4:]) + qmul(a[..., 4:], b[..., :4])
    return np.concatenate([primal, dual], axis=-1)


class DualNumber(NamedTuple):
    """``real + eps * eps_part`` with eps**2 = 0."""

    real: float
    eps: float

    def __mul__(self, other):
        if isinstance(other, DualNumber):
            return DualNumber(self.real * other.real, self.real * other.eps + self.eps * other.real)
        return NotImplemented


@dataclass(frozen=True, eq=False)
class DualQuaternion:
    """Element of the dual quaternions. Immutable; ``coeffs`` is read-only."""

    coeffs: np.ndarray

    def __init__(self, coeffs: Iterable[float] = (1.0, 0, 0, 0, 0, 0, 0, 0)):
        c = np.array(coeffs, dtype=float).reshape(8)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_parts(cls, primal, dual=(0.0, 0.0, 0.0, 0.0)) -> DualQuaternion:
        return cls(np.concatenate([np.asarray(primal, float), np.asarray(dual, float)]))

    @classmethod
    def real(cls, value: float) -> DualQuaternion:
        return cls((value, 0, 0, 0, 0, 0, 0, 0))

    @classmethod
    def zero(cls) -> DualQuaternion:
        return cls(np.zeros(8))

    @property
    def primal(self) -> np.ndarray:
        return self.coeffs[:4]

    @property
    def dual(self) -> np.ndarray:
        return self.coeffs[4:]

    def __mul__(self, other):
        if isinstance(other, DualQuaternion):
            return dq_mul(self, other)
        if np.isscalar(other):
            return DualQuaternion(self.coeffs * float(other))
        return NotImplemented

    def __rmul__(self, other):
        if np.isscalar(other):
            return DualQuaternion(self.coeffs * float(other))
        return NotImplemented

    def __add__(self, other):
        if isinstance(other, DualQuaternion):
            return DualQuaternion(self.coeffs + other.coeffs)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, DualQuaternion):
            return DualQuaternion(self.coeffs - other.coeffs)
        return NotImplemented

    def __neg__(self):
        return DualQuaternion(-self.coeffs)

    def __truediv__(self, scalar: float):
        return DualQuaternion(self.coeffs / float(scalar))

    def __eq__(self, other):
        if not isinstance(other, DualQuaternion):
            return NotImplemented
        return bool(np.array_equal(self.coeffs, other.coeffs))

    def __hash__(self):
        return hash(self.coeffs.tobytes())

    def __repr__(self):
        x = ", ".join(f"{v:.6g}" for v in self.primal)
        y = ", ".join(f"{v:.6g}" for v in self.dual)
        return f"DualQuaternion([{x}] + eps[{y}])"

    def conj(self) -> DualQuaternion:
        return dq_conj(self)

    def norm(self) -> DualNumber:
        return dq_norm(self)

    def inverse(self) -> DualQuaternion:
        return dq_inverse(self)

    def allclose(self, other: DualQuaternion, rtol: float = 1e-10, atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.coeffs, other.coeffs, rtol=rtol, atol=atol))

    def study_residual(self) -> float:
        """``|<primal, dual>|`` relative to ``|primal| * (|primal| + |dual|)``."""
        p, d = self.primal, self.dual
        pn = np.linalg.norm(p)
        scale = pn * (pn + np.linalg.norm(d))
        return float(abs(p @ d) / scale) if scale > 0 else 0.0

    def normalized(self) -> DualQuaternion:
        """Projective representative with unit primal part and ``x0 >= 0``."""
        n = np.linalg.norm(self.primal)
        if n == 0.0:
            raise NotInvertible("cannot normalize a dual quaternion with zero primal part")
        c = self.coeffs / n
        k = int(np.argmax(np.abs(c[:4])))
        if c[0] < 0 or (c[0] == 0 and c[k] < 0):
            c = -c
        return DualQuaternion(c)


def dq_mul(a: DualQuaternion, b: DualQuaternion) -> DualQuaternion:
    return DualQuaternion(dq_mul_arrays(a.coeffs, b.coeffs))


def dq_conj(q: DualQuaternion) -> DualQuaternion:
    """Quaternion conjugate: negate the vector parts of primal and dual."""
    return DualQuaternion(q.coeffs * _CONJ)


def dq_norm(q: DualQuaternion) -> DualNumber:
    """``q * conj(q)`` as a dual number (primal norm squared, 2 <primal, dual>)."""
    p, d = q.primal, q.dual
    return DualNumber(float(p @ p), float(2.0 * (p @ d)))


def dq_inverse(q: DualQuaternion, tau: float = TAU_INV) -> DualQuaternion:
    p, d = q.primal, q.dual
    n2 = float(p @ p)
    if n2 <= tau * float(q.coeffs @ q.coeffs):
        raise NotInvertible(f"primal part of {q!r} is numerically zero")
    pinv = qconj(p) / n2
    return DualQuaternion.from_parts(pinv, -qmul(qmul(pinv, d), pinv))


def projective_distance(a: DualQuaternion, b: DualQuaternion) -> float:
    """Distance between normalized representatives of ``a`` and ``b``.

    Both are scaled to unit primal norm and sign-aligned; the difference is
    measured relative to ``max(1, |b|)``.
    """
    an = a.coeffs / np.linalg.norm(a.primal)
    bn = b.coeffs / np.linalg.norm(b.primal)
    if an[:4] @ bn[:4] < 0:
        bn = -bn
    return float(np.linalg.norm(an - bn) / max(1.0, np.linalg.norm(bn)))


# ---------------------------------------------------------------------------
# polynomials
# ---------------------------------------------------------------------------

class DQPolynomial:
    """Polynomial with dual quaternion coefficients, highest degree first.

    ``coeffs`` has shape ``(n + 1, 8)``. Leading zero coefficients are
    stripped on construction (the zero polynomial keeps a single zero row).
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        if isinstance(coeffs, DQPolynomial):
            c = coeffs.coeffs.copy()
        else:
            rows = [q.coeffs if isinstance(q, DualQuaternion) else q for q in coeffs]
            c = np.array(rows, dtype=float).reshape(-1, 8)
        if c.shape[0] == 0:
            c = np.zeros((1, 8))
        k = 0
        while k < c.shape[0] - 1 and not np.any(c[k]):
            k += 1
        c = c[k:]
        c.setflags(write=False)
        self.coeffs = c

    @classmethod
    def linear(cls, h: DualQuaternion, scale: float = 1.0) -> DQPolynomial:
        """``(t - h) / scale``."""
        one = np.zeros(8)
        one[0] = 1.0
        return cls(np.stack([one, -h.coeffs]) / scale)

    @classmethod
    def constant(cls, q: DualQuaternion) -> DQPolynomial:
        return cls([q.coeffs])

    @property
    def degree(self) -> int:
        return self.coeffs.shape[0] - 1

    def __len__(self):
        return self.coeffs.shape[0]

    def __getitem__(self, k: int) -> DualQuaternion:
        return DualQuaternion(self.coeffs[k])

    def __mul__(self, other):
        if isinstance(other, DQPolynomial):
            return dqpoly_mul(self, other)
        if np.isscalar(other):
            return DQPolynomial(self.coeffs * float(other))
        return NotImplemented

    __rmul__ = __mul__

    def __add__(self, other):
        if not isinstance(other, DQPolynomial):
            return NotImplemented
        n = max(len(self), len(other))
        a = np.zeros((n, 8))
        a[n - len(self):] += self.coeffs
        a[n - len(other):] += other.coeffs
        return DQPolynomial(a)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __call__(self, t: float) -> DualQuaternion:
        return dqpoly_eval(self, t)

    def __repr__(self):
        return f"DQPolynomial(degree={self.degree})"

    def conj(self) -> DQPolynomial:
        return DQPolynomial(self.coeffs * _CONJ)

    def scale(self) -> float:
        return float(np.max(np.abs(self.coeffs)))

    def primal_poly(self) -> np.ndarray:
        """(4, n+1) array of real coefficient rows for the primal components."""
        return self.coeffs[:, :4].T.copy()

    def dual_poly(self) -> np.ndarray:
        return self.coeffs[:, 4:].T.copy()

    def derivative(self) -> DQPolynomial:
        n = self.degree
        if n == 0:
            return DQPolynomial(np.zeros((1, 8)))
        powers = np.arange(n, 0, -1, dtype=float)[:, None]
        return DQPolynomial(self.coeffs[:-1] * powers)

    def allclose(self, other: DQPolynomial, rtol: float = 1e-10) -> bool:
        if self.degree != other.degree:
            return False
        s = max(self.scale(), other.scale(), 1e-300)
        return bool(np.max(np.abs(self.coeffs - other.coeffs)) <= rtol * s)


def dqpoly_mul(P: DQPolynomial, Q: DQPolynomial) -> DQPolynomial:
    """Product with coefficient order preserved (P on the left)."""
    out = np.zeros((len(P) + len(Q) - 1, 8))
    for i, a in enumerate(P.coeffs):
        out[i:i + len(Q)] += dq_mul_arrays(a, Q.coeffs)
    return DQPolynomial(out)


def dqpoly_eval(P: DQPolynomial, t: float) -> DualQuaternion:
    """Horner evaluation at a real parameter."""
    acc = np.zeros(8)
    for c in P.coeffs:
        acc = acc * t + c
    return DualQuaternion(acc)


def dqpoly_eval_right(P: DQPolynomial, h: DualQuaternion) -> DualQuaternion:
    """Right substitution ``sum c_k h^(n-k)`` (indeterminate written right of coefficients)."""
    acc = np.zeros(8)
    for c in P.coeffs:
        acc = dq_mul_arrays(acc, h.coeffs) + c
    return DualQuaternion(acc)


def norm_residual(P: DQPolynomial) -> tuple[np.ndarray, float]:
    """Real part of ``P conj(P)`` and the relative size of its non-real part."""
    N = dqpoly_mul(P, P.conj()).coeffs
    real = N[:, 0].copy()
    scale = np.max(np.abs(real))
    nonreal = np.max(np.abs(N[:, 1:])) if N.size else 0.0
    rel = float(nonreal / scale) if scale > 0 else float(nonreal > 0) * np.inf
    return real, rel


def dqpoly_norm(P: DQPolynomial, tau_real: float = 1e-10) -> np.ndarray:
    """``P conj(P)`` as a real coefficient array.

    Raises NotRealNorm when any non-real component exceeds ``tau_real`` times
    the largest real coefficient, i.e. when P is not a motion polynomial.
    """
    real, rel = norm_residual(P)
    if rel > tau_real:
        raise NotRealNorm(f"norm polynomial has relative non-real residual {rel:.3e}")
    return real


def dqpoly_div_real(P: DQPolynomial, M) -> tuple[DQPolynomial, DQPolynomial]:
    """Divide by a real polynomial: ``P = Q M + R`` with ``deg R < deg M``.

    Real coefficients commute with dual quaternions, so left and right
    division coincide here.
    """
    M = np.atleast_1d(np.asarray(M, dtype=float))
    k = 0
    while k < M.size - 1 and M[k] == 0.0:
        k += 1
    M = M[k:]
    m = M.size - 1
    rem = np.array(P.coeffs, dtype=float)
    n = rem.shape[0] - 1
    if m == 0:
        return DQPolynomial(rem / M[0]), DQPolynomial(np.zeros((1, 8)))
    if n < m:
        return DQPolynomial(np.zeros((1, 8))), DQPolynomial(rem)
    quot = np.zeros((n - m + 1, 8))
    for i in range(n - m + 1):
        c = rem[i] / M[0]
        quot[i] = c
        rem[i:i + m + 1] -= np.outer(M, c)
    return DQPolynomial(quot), DQPolynomial(rem[n - m + 1:])


def dqpoly_div_linear(P: DQPolynomial, h: DualQuaternion) -> tuple[DQPolynomial, DualQuaternion]:
    """Right division by ``t - h``: ``P = Q (t - h) + r``.

    The remainder ``r`` equals the right substitution of ``h`` into ``P``.
    """
    c = P.coeffs
    n = c.shape[0] - 1
    if n == 0:
        return DQPolynomial(np.zeros((1, 8))), DualQuaternion(c[0])
    quot = np.zeros((n, 8))
    quot[0] = c[0]
    for k in range(1, n):
        quot[k] = c[k] + dq_mul_arrays(quot[k - 1], h.coeffs)
    r = c[n] + dq_mul_arrays(quot[n - 1], h.coeffs)
    return DQPolynomial(quot), DualQuaternion(r)


def real_poly_to_dq(M: Sequence[float]) -> DQPolynomial:
    M = np.asarray(M, dtype=float)
    c = np.zeros((M.size, 8))
    c[:, 0] = M
    return DQPolynomial(c)
