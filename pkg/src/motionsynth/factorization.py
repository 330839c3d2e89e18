"""Factorization of motion polynomials into revolute chains.

For a generic motion polynomial ``P`` of degree n the norm polynomial
``P conj(P)`` splits into n irreducible real quadratics. Dividing ``P`` by one
of them leaves a linear remainder ``r1 t + r2`` whose unique zero
``h = -r1^-1 r2`` gives a right factor ``t - h``. Repeating on the quotient
with the remaining quadratics yields one open chain per ordering.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from motionsynth.dualquat import (
    DQPolynomial,
    DualQuaternion,
    dq_inverse,
    dq_mul,
    dqpoly_div_linear,
    dqpoly_div_real,
    dqpoly_eval,
    dqpoly_mul,
    dqpoly_norm,
    projective_distance,
)
from motionsynth.errors import (
    DegenerateJoint,
    IdenticalChains,
    NonGeneric,
    NotInvertible,
    ResidualTooLarge,
)
from motionsynth.numerics import complex_roots

TAU_GEN = 1e-7
DEDUP_TOL = 1e-8


@dataclass(frozen=True)
class QuadraticFactor:
    """Monic ``t^2 + b t + c`` without real roots."""

    b: float
    c: float

    def __post_init__(self):
        if self.b * self.b - 4.0 * self.c >= 0.0:
            raise NonGeneric(f"t^2 + {self.b} t + {self.c} has real roots")

    @property
    def coeffs(self) -> np.ndarray:
        return np.array([1.0, self.b, self.c])

    @property
    def vertex(self) -> float:
        return -0.5 * self.b


@dataclass(frozen=True)
class OpenChain:
    """Revolute joints ``h1 ... hn``; the product of ``t - h_i`` is the motion.

    ``order`` lists the indices of the quadratic factors used for
    ``h_n, h_(n-1), ..., h_1`` in extraction order.
    """

    joints: tuple[DualQuaternion, ...]
    order: tuple[int, ...] = ()
    leading: float = 1.0

    def polynomial(self) -> DQPolynomial:
        P = DQPolynomial([DualQuaternion.real(self.leading)])
        for h in self.joints:
            P = dqpoly_mul(P, DQPolynomial.linear(h))
        return P

    def __call__(self, t: float) -> DualQuaternion:
        acc = DualQuaternion.real(self.leading)
        for h in self.joints:
            v = -h.coeffs.copy()
            v[0] += t
            acc = dq_mul(acc, DualQuaternion(v))
        return acc

    def to_json(self) -> dict:
        return {
            "order": list(self.order),
            "leading": self.leading,
            "joints": [h.coeffs.tolist() for h in self.joints],
            "axes": [{"direction": d.tolist(), "moment": m.tolist()} for d, m in chain_axes(self)],
        }

    @classmethod
    def from_json(cls, doc: dict) -> OpenChain:
        return cls(
            tuple(DualQuaternion(j) for j in doc["joints"]),
            tuple(doc.get("order", ())),
            float(doc.get("leading", 1.0)),
        )


@dataclass(frozen=True)
class Linkage6R:
    """Closed loop: joints of ``chain_a`` base to distal, then ``chain_b`` distal to base."""

    chain_a: OpenChain
    chain_b: OpenChain
    closure_residual: float = field(default=0.0)

    @property
    def joints(self) -> tuple[DualQuaternion, ...]:
        return self.chain_a.joints + tuple(reversed(self.chain_b.joints))

    def to_json(self) -> dict:
        return {
            "chain_a": list(self.chain_a.order),
            "chain_b": list(self.chain_b.order),
            "closure_residual": self.closure_residual,
            "joints": [h.coeffs.tolist() for h in self.joints],
            "axes": [
                {"direction": d.tolist(), "moment": m.tolist()}
                for d, m in _axes(self.joints)
            ],
        }


def quadratic_factors(N, tau_gen: float = TAU_GEN) -> list[QuadraticFactor]:
    """Monic irreducible quadratic factors of a real norm polynomial, sorted by ``b``."""
    N = np.asarray(N, dtype=float)
    if N.size < 3 or (N.size - 1) % 2:
        raise NonGeneric(f"norm polynomial must have even positive degree, got {N.size - 1}")
    pairs, reals = complex_roots(N)
    if reals:
        raise NonGeneric(f"norm polynomial has real roots {reals}")
    spectral = max(1.0, max(abs(z) for z in pairs))
    out = []
    for k, z in enumerate(pairs):
        if abs(z.imag) < tau_gen * spectral:
            raise NonGeneric(f"root {z} is numerically real")
        # a repeated factor admits a continuum of factorizations
        if any(abs(z - w) < math.sqrt(tau_gen) * spectral for w in pairs[:k]):
            raise NonGeneric(f"norm polynomial has the repeated root {z}")
        out.append(QuadraticFactor(-2.0 * z.real, abs(z) ** 2))
    out.sort(key=lambda q: q.b)
    return out


def _remainder_zero(R: DQPolynomial) -> DualQuaternion:
    if R.degree < 1:
        raise NotInvertible("remainder is constant; no unique zero")
    r1, r2 = R[0], R[1]
    try:
        return -1.0 * dq_mul(dq_inverse(r1), r2)
    except NotInvertible as exc:
        raise NotInvertible(f"leading remainder coefficient {r1!r} is not invertible") from exc


def extract_rightmost(
    P: DQPolynomial, M: QuadraticFactor, tol: float = 1e-8
) -> tuple[DualQuaternion, DQPolynomial]:
    """Right factor ``t - h`` of ``P`` belonging to the norm factor ``M``."""
    if P.degree < 2:
        raise ValueError(f"need degree >= 2 to divide by a quadratic, got {P.degree}")
    _, R = dqpoly_div_real(P, M.coeffs)
    if R.degree < 1:
        R = DQPolynomial(np.vstack([np.zeros((1, 8)), R.coeffs]))
    h = _remainder_zero(R)
    Q, r = dqpoly_div_linear(P, h)
    res = float(np.max(np.abs(r.coeffs))) / P.scale()
    if res > tol:
        raise ResidualTooLarge(f"division by t - h leaves relative remainder {res:.3e}")
    return h, Q


def _leading_real(P: DQPolynomial) -> float:
    lc = P.coeffs[0]
    if np.max(np.abs(lc[1:])) > 1e-12 * abs(lc[0]) or lc[0] == 0.0:
        raise NonGeneric("leading coefficient of the motion polynomial is not real")
    return float(lc[0])


def factorize(P: DQPolynomial, order=None, quadratics: list[QuadraticFactor] | None = None) -> OpenChain:
    """Open chain from the quadratic factors taken in ``order`` (rightmost first)."""
    n = P.degree
    lead = _leading_real(P)
    if quadratics is None:
        quadratics = quadratic_factors(dqpoly_norm(P))
    if order is None:
        order = tuple(range(n))
    order = tuple(order)
    if sorted(order) != list(range(n)) or len(quadratics) != n:
        raise ValueError(f"order {order} is not a permutation of the {len(quadratics)} quadratic factors")
    joints: list[DualQuaternion] = []
    Q = DQPolynomial(P.coeffs / lead)
    for k in order[:-1]:
        h, Q = extract_rightmost(Q, quadratics[k])
        joints.append(h)
    # remaining monic linear polynomial t + c1
    joints.append(-1.0 * Q[1] / Q.coeffs[0, 0])
    return OpenChain(tuple(reversed(joints)), order, lead)


def _same_joints(a: OpenChain, b: OpenChain, tol: float = DEDUP_TOL) -> bool:
    for ha, hb in zip(a.joints, b.joints):
        s = max(1.0, float(np.max(np.abs(hb.coeffs))))
        if np.max(np.abs(ha.coeffs - hb.coeffs)) > tol * s:
            return False
    return True


def all_factorizations(P: DQPolynomial, dedup: bool = True) -> list[OpenChain]:
    """One chain per permutation of the quadratic factors, in permutation order."""
    quadratics = quadratic_factors(dqpoly_norm(P))
    chains = [factorize(P, perm, quadratics) for perm in itertools.permutations(range(P.degree))]
    if not dedup:
        return chains
    out: list[OpenChain] = []
    for ch in chains:
        if not any(_same_joints(ch, other) for other in out):
            out.append(ch)
    return out


def _sample_parameters(P: DQPolynomial, samples: int) -> np.ndarray:
    """Parameters spread over the whole real line around the norm polynomial's roots."""
    N = dqpoly_mul(P, P.conj()).coeffs[:, 0]
    if N.size > 1:
        roots = np.roots(N / np.max(np.abs(N)))
        center = float(np.mean(roots.real))
        spread = max(1.0, float(np.max(np.abs(roots - center))))
    else:
        center, spread = 0.0, 1.0
    theta = (np.arange(samples) + 0.5) / samples * math.pi - 0.5 * math.pi
    return center + spread * np.tan(theta)


def verify_chain(chain: OpenChain, P: DQPolynomial, samples: int = 50) -> float:
    """Largest projective distance between the chain's motion and ``P`` over sampled parameters."""
    worst = 0.0
    for t in _sample_parameters(P, samples):
        worst = max(worst, projective_distance(chain(t), dqpoly_eval(P, t)))
    return worst


def make_linkage(a: OpenChain, b: OpenChain, samples: int = 50, tol: float = 1e-8) -> Linkage6R:
    """Close two distinct factorizations of one motion into a single loop."""
    if a.order == b.order or _same_joints(a, b):
        raise IdenticalChains(f"chains {a.order} and {b.order} coincide")
    ref = a.polynomial()
    residual = 0.0
    for t in _sample_parameters(ref, samples):
        residual = max(residual, projective_distance(a(t), b(t)))
    if residual > tol:
        raise ResidualTooLarge(f"loop closure residual {residual:.3e} exceeds {tol:.1e}")
    return Linkage6R(a, b, residual)


def _axes(joints) -> list[tuple[np.ndarray, np.ndarray]]:
    out = []
    for h in joints:
        v = h.primal[1:]
        nv = float(np.linalg.norm(v))
        if nv <= 1e-12 * max(1.0, abs(h.primal[0])):
            raise DegenerateJoint(f"joint {h!r} has no rotational part")
        out.append((-v / nv, h.dual[1:] / nv))
    return out


def chain_axes(chain: OpenChain) -> list[tuple[np.ndarray, np.ndarray]]:
    """Unit direction ``d`` and moment ``m = d x q`` (``q`` any axis point) per joint."""
    return _axes(chain.joints)


def axis_point(direction, moment) -> np.ndarray:
    """Point of the axis closest to the origin."""
    d = np.asarray(direction, float)
    return np.cross(moment, d) / float(d @ d)
