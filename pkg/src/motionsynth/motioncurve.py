"""Factorized rational motions ``C(t) = (t - h1) ... (t - hn)``.

Each linear factor is a rotation about a fixed axis, described by seven shape
parameters ``(x0, x1, x2, x3, x5, x6, x7)``: ``x0`` is the real part of ``h``,
``d = (x1, x2, x3)`` the axis direction and ``p = (x5, x6, x7)`` a point on the
axis. The normalized factor is::

    (t - x0 + x1 i + x2 j + x3 k - eps (d x p)) / |d|

so ``h = x0 - d + eps (d x p)`` and the factor satisfies the Study condition
for every parameter value.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from motionsynth.dualquat import (
    DQPolynomial,
    DualQuaternion,
    dq_left_matrix,
    dq_mul_arrays,
    dq_product_terms,
    dq_right_matrix,
    dqpoly_mul,
)
from motionsynth.errors import DegenerateDirection
from motionsynth.kinematics import (
    Pose,
    dq_embedding_jacobian,
    rotation_numerator,
    dq_to_embedding,
    dq_to_pose,
)

TAU_DIR = 1e-8
PARAMS_PER_FACTOR = 7


def _cross_matrix(v) -> np.ndarray:
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


@dataclass(frozen=True)
class AxisFactor:
    h0: float
    direction: np.ndarray
    point: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "h0", float(self.h0))
        object.__setattr__(self, "direction", np.asarray(self.direction, dtype=float).reshape(3))
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float).reshape(3))
        if np.linalg.norm(self.direction) < TAU_DIR:
            raise DegenerateDirection(f"axis direction {self.direction} has (near) zero norm")

    @classmethod
    def from_params(cls, x: Sequence[float]) -> AxisFactor:
        x0, x1, x2, x3, x5, x6, x7 = x
        return cls(x0, (x1, x2, x3), (x5, x6, x7))

    @property
    def params(self) -> np.ndarray:
        return np.concatenate([[self.h0], self.direction, self.point])

    @property
    def moment(self) -> np.ndarray:
        return np.cross(self.direction, self.point)

    @property
    def scale(self) -> float:
        return float(np.linalg.norm(self.direction))

    def polynomial(self) -> DQPolynomial:
        h, s = factor_to_dq(self)
        return DQPolynomial.linear(h, s)

    def to_json(self) -> dict:
        return {"h0": self.h0, "d": self.direction.tolist(), "p": self.point.tolist()}


def _h_coeffs(f: AxisFactor) -> np.ndarray:
    (d1, d2, d3), (p1, p2, p3) = f.direction, f.point
    return np.array([f.h0, -d1, -d2, -d3, 0.0, d2 * p3 - d3 * p2, d3 * p1 - d1 * p3, d1 * p2 - d2 * p1])


def factor_to_dq(f: AxisFactor) -> tuple[DualQuaternion, float]:
    """``h`` and the normalization ``|d|`` of the factor ``(t - h) / |d|``."""
    return DualQuaternion(_h_coeffs(f)), f.scale


def _factor_value(f: AxisFactor, t: float) -> np.ndarray:
    v = -_h_coeffs(f)
    v[0] += t
    return v / f.scale


def _factor_value_grad(f: AxisFactor, t: float) -> np.ndarray:
    """(8, 7) derivative of ``(t - h) / |d|`` w.r.t. (x0, d, p)."""
    d, p = f.direction, f.point
    s = f.scale
    u = -_h_coeffs(f)
    u[0] += t
    # u = (t - x0, d, 0, -(d x p))
    du = np.zeros((8, 7))
    du[0, 0] = -1.0
    du[1:4, 1:4] = np.eye(3)
    # -(d x p) = p x d: derivative w.r.t. d is [p]_x, w.r.t. p is -[d]_x
    du[5:8, 1:4] = _cross_matrix(p)
    du[5:8, 4:7] = -_cross_matrix(d)
    ds = np.zeros(7)
    ds[1:4] = d / s
    return du / s - np.outer(u, ds) / s**2


@dataclass(frozen=True)
class FactorizedCurve:
    """Ordered product of normalized axis factors; the first factor is the base joint."""

    factors: tuple[AxisFactor, ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))

    @classmethod
    def from_shape(cls, shape: Sequence[float]) -> FactorizedCurve:
        shape = np.asarray(shape, dtype=float).ravel()
        if shape.size % PARAMS_PER_FACTOR:
            raise ValueError(f"shape vector length {shape.size} is not a multiple of 7")
        return cls(tuple(AxisFactor.from_params(shape[i:i + 7]) for i in range(0, shape.size, 7)))

    @property
    def shape(self) -> np.ndarray:
        if not self.factors:
            return np.zeros(0)
        return np.concatenate([f.params for f in self.factors])

    @property
    def n(self) -> int:
        return len(self.factors)

    def __call__(self, t: float) -> DualQuaternion:
        return curve_eval(self, t)

    def to_json(self) -> dict:
        return {"factors": [f.to_json() for f in self.factors]}

    @classmethod
    def from_json(cls, doc: dict) -> FactorizedCurve:
        return cls(tuple(AxisFactor(f["h0"], f["d"], f["p"]) for f in doc["factors"]))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> FactorizedCurve:
        return cls.from_json(json.loads(Path(path).read_text()))


def curve_eval(c: FactorizedCurve, t: float) -> DualQuaternion:
    acc = np.zeros(8)
    acc[0] = 1.0
    for f in c.factors:
        acc = dq_mul_arrays(acc, _factor_value(f, t))
    return DualQuaternion(acc)


def expand(c: FactorizedCurve) -> DQPolynomial:
    P = DQPolynomial([DualQuaternion.real(1.0)])
    for f in c.factors:
        P = dqpoly_mul(P, f.polynomial())
    return P


def curve_pose(c: FactorizedCurve, t: float) -> Pose:
    if np.isinf(t):
        return dq_to_pose(expand(c)[0])
    return dq_to_pose(curve_eval(c, t))


def curve_embedding(c: FactorizedCurve, t: float) -> np.ndarray:
    """R^12 image of the curve point at ``t``; ``t = inf`` gives the limit pose."""
    if np.isinf(t):
        return dq_to_embedding(expand(c)[0])
    return dq_to_embedding(curve_eval(c, t))


def _partial_products(values: list[np.ndarray]) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """``left[k]`` = product of values before k, ``right[k]`` = product after k."""
    one = np.eye(8)[0]
    left = [one]
    for v in values[:-1]:
        left.append(dq_mul_arrays(left[-1], v))
    right = [one]
    for v in reversed(values[1:]):
        right.append(dq_mul_arrays(v, right[-1]))
    return left, right[::-1]


def curve_t_derivative(c: FactorizedCurve, t: float) -> DualQuaternion:
    """``dC/dt``; each factor contributes ``left * (1 / |d|) * right``."""
    values = [_factor_value(f, t) for f in c.factors]
    left, right = _partial_products(values)
    out = np.zeros(8)
    for f, l, r in zip(c.factors, left, right):
        out += dq_mul_arrays(l, r) / f.scale
    return DualQuaternion(out)


def curve_embedding_ext(c: FactorizedCurve, t: float) -> np.ndarray:
    """``curve_embedding`` evaluated in extended precision (``np.longdouble``).

    Used where tiny objective differences must be resolved; on platforms
    whose long double is plain double this is just a slower copy.
    """
    if np.isinf(t) or c.n == 0:
        return curve_embedding(c, t).astype(np.longdouble)
    L = np.longdouble
    tt = L(t)
    acc = [L(1)] + [L(0)] * 7
    for f in c.factors:
        d1, d2, d3 = (L(v) for v in f.direction)
        p1, p2, p3 = (L(v) for v in f.point)
        s = np.sqrt(d1 * d1 + d2 * d2 + d3 * d3)
        v = [tt - L(f.h0), d1, d2, d3, L(0), d3 * p2 - d2 * p3, d1 * p3 - d3 * p1, d2 * p1 - d1 * p2]
        acc = dq_product_terms(acc, [x / s for x in v])
    w, x, y, z, e0, e1, e2, e3 = acc
    n2 = w * w + x * x + y * y + z * z
    R = rotation_numerator((w, x, y, z)).astype(L) / n2
    # vector part of d * conj(p)
    a = np.array([
        -e0 * x + e1 * w - e2 * z + e3 * y,
        -e0 * y + e1 * z + e2 * w - e3 * x,
        -e0 * z - e1 * y + e2 * x + e3 * w,
    ], dtype=L) * 2 / n2
    return np.concatenate([R.reshape(9), a])


def embedding_t_derivative(c: FactorizedCurve, t: float) -> np.ndarray:
    if np.isinf(t) or c.n == 0:
        return np.zeros(12)
    return dq_embedding_jacobian(curve_eval(c, t)) @ curve_t_derivative(c, t).coeffs


def shape_jacobian(c: FactorizedCurve, t: float) -> np.ndarray:
    """(12, 7n) derivative of the embedding at ``t`` w.r.t. the shape vector."""
    n = c.n
    J = np.zeros((12, PARAMS_PER_FACTOR * n))
    if np.isinf(t) or n == 0:
        # the limit pose is the real leading coefficient, i.e. the identity
        return J
    values = [_factor_value(f, t) for f in c.factors]
    left, right = _partial_products(values)
    q = dq_mul_arrays(left[-1], values[-1])
    E = dq_embedding_jacobian(DualQuaternion(q))
    for k, f in enumerate(c.factors):
        G = _factor_value_grad(f, t)
        # dq/dx = left[k] * dF_k * right[k], column by column
        M = dq_left_matrix(left[k]) @ dq_right_matrix(right[k])
        J[:, 7 * k:7 * k + 7] = E @ (M @ G)
    return J
