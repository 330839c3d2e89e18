"""Study's kinematic mapping, the R^12 embedding and the feature-point metric.

A unit dual quaternion ``p + eps d`` acts on a point ``x`` by
``x -> p x conj(p) + 2 d conj(p)`` (vector parts), so the rotation is the one
of the primal quaternion and the translation is ``2 vec(d conj(p)) / |p|^2``.
Non-unit representatives are accepted; everything is projectively invariant.

A pose is embedded in R^12 as the rotation matrix in row-major order followed
by the translation vector.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from motionsynth.dualquat import DualQuaternion, left_matrix, qconj, qmul, right_matrix
from motionsynth.errors import DegenerateCloud, DegeneratePose, OffQuadric

TAU_INV = 1e-12
TAU_STUDY = 1e-6


def rotation_numerator(p) -> np.ndarray:
    """``|p|^2 * R(p)`` for a (not necessarily unit) quaternion ``p``."""
    w, x, y, z = p
    return np.array(
        [
            [w * w + x * x - y * y - z * z, 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), w * w - x * x + y * y - z * z, 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), w * w - x * x - y * y + z * z],
        ]
    )


def _rotation_numerator_grad(p) -> np.ndarray:
    """(3, 3, 4) array: derivative of ``rotation_numerator`` w.r.t. w, x, y, z."""
    w, x, y, z = p
    dw = [[w, -z, y], [z, w, -x], [-y, x, w]]
    dx = [[x, y, z], [y, -x, -w], [z, w, -x]]
    dy = [[-y, x, w], [x, y, z], [-w, z, -y]]
    dz = [[-z, -w, x], [w, -z, y], [x, y, z]]
    return 2.0 * np.stack([dw, dx, dy, dz], axis=-1)


@dataclass(frozen=True)
class Pose:
    """Rigid displacement ``x -> rotation @ x + translation``."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float).reshape(3, 3))
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=float).reshape(3))

    @classmethod
    def identity(cls) -> Pose:
        return cls(np.eye(3), np.zeros(3))

    def apply(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return points @ self.rotation.T + self.translation

    def is_valid(self, tol: float = 1e-9) -> bool:
        A = self.rotation
        return bool(np.allclose(A.T @ A, np.eye(3), atol=tol) and abs(np.linalg.det(A) - 1.0) <= tol)

    def compose(self, other: Pose) -> Pose:
        """``self`` after ``other``."""
        return Pose(self.rotation @ other.rotation, self.rotation @ other.translation + self.translation)


@dataclass(frozen=True)
class PoseError:
    angle: float
    distance: float


def dq_to_pose(q: DualQuaternion, tau_study: float = TAU_STUDY) -> Pose:
    """Rigid displacement of a point on Study's quadric."""
    p, d = q.primal, q.dual
    n2 = float(p @ p)
    if n2 <= TAU_INV * float(q.coeffs @ q.coeffs) or n2 == 0.0:
        raise DegeneratePose(f"primal part of {q!r} is numerically zero")
    pn = math.sqrt(n2)
    study = abs(float(p @ d))
    if study > tau_study * (pn * np.linalg.norm(d) + n2):
        raise OffQuadric(f"Study condition violated: |<x, y>| = {study:.3e}")
    R = rotation_numerator(p) / n2
    a = 2.0 * qmul(d, qconj(p))[1:] / n2
    return Pose(R, a)


def pose_to_dq(pose: Pose) -> DualQuaternion:
    """Unit dual quaternion (primal with ``x0 >= 0``) of a pose."""
    from scipy.spatial.transform import Rotation

    x, y, z, w = Rotation.from_matrix(pose.rotation).as_quat()
    p = np.array([w, x, y, z])
    if p[0] < 0:
        p = -p
    d = 0.5 * qmul(np.concatenate([[0.0], pose.translation]), p)
    return DualQuaternion.from_parts(p, d)


def dq_act(q: DualQuaternion, point) -> np.ndarray:
    """Image of ``point`` under ``q`` via the dual quaternion sandwich.

    ``(p + eps d)(1 + eps x)(conj(p) - eps conj(d)) / |p|^2``; independent of
    the matrix form in ``dq_to_pose``.
    """
    from motionsynth.dualquat import dq_mul

    pt = DualQuaternion.from_parts([1, 0, 0, 0], np.concatenate([[0.0], np.asarray(point, float)]))
    q_star = DualQuaternion.from_parts(qconj(q.primal), -qconj(q.dual))
    img = dq_mul(dq_mul(q, pt), q_star)
    return img.dual[1:] / img.primal[0]


def pose_to_embedding(pose: Pose) -> np.ndarray:
    return np.concatenate([pose.rotation.reshape(9), pose.translation])


def embedding_to_pose(e) -> Pose:
    e = np.asarray(e, dtype=float)
    return Pose(e[:9].reshape(3, 3), e[9:12])


def dq_to_embedding(q: DualQuaternion) -> np.ndarray:
    return pose_to_embedding(dq_to_pose(q))


def dq_embedding_jacobian(q: DualQuaternion) -> np.ndarray:
    """(12, 8) derivative of the embedding w.r.t. the 8 dual quaternion coordinates.

    Uses the formulas of ``dq_to_pose`` as a function on all of R^8 (the
    translation formula is only a rigid motion on the quadric).
    """
    p, d = q.primal, q.dual
    n2 = float(p @ p)
    J = np.zeros((12, 8))
    Q = rotation_numerator(p)
    dQ = _rotation_numerator_grad(p)
    # d(Q / n2)/dp = dQ / n2 - Q * 2p / n2^2
    J[:9, :4] = (dQ.reshape(9, 4) * n2 - np.outer(Q.reshape(9), 2.0 * p)) / n2**2
    V = qmul(d, qconj(p))[1:]
    dV_dd = right_matrix(qconj(p))[1:]
    dV_dp = left_matrix(d)[1:] * np.array([1.0, -1.0, -1.0, -1.0])
    J[9:, 4:] = 2.0 * dV_dd / n2
    J[9:, :4] = 2.0 * (dV_dp * n2 - np.outer(V, 2.0 * p)) / n2**2
    return J


@dataclass(frozen=True)
class FeatureCloud:
    """Feature points rigidly attached to the end effector.

    The metric between two poses is the sum of squared distances between the
    displaced copies of the points; ``gram`` realises it on embeddings.
    """

    points: np.ndarray
    gram: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "gram", gram_matrix(pts))

    @classmethod
    def default(cls, size: float = 1.0) -> FeatureCloud:
        """Six points ``+-size`` along the coordinate axes, barycenter at the origin."""
        e = np.eye(3) * size
        return cls(np.vstack([e, -e]))

    @classmethod
    def from_json(cls, path) -> FeatureCloud:
        doc = json.loads(Path(path).read_text())
        return cls(doc["points"])

    def to_json(self) -> dict:
        return {"points": self.points.tolist()}

    @property
    def barycenter(self) -> np.ndarray:
        return self.points.mean(axis=0)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def second_moment(self) -> np.ndarray:
        return self.points.T @ self.points

    @property
    def first_moment(self) -> np.ndarray:
        return self.points.sum(axis=0)

    def inner(self, e1, e2) -> float:
        return float(np.asarray(e1) @ self.gram @ np.asarray(e2))

    def orthonormalizer(self) -> np.ndarray:
        """Upper-triangular ``U`` with ``U.T @ U == gram``; ``U @ e`` has Euclidean norm ``|e|_G``."""
        return np.linalg.cholesky(self.gram).T


def gram_matrix(points) -> np.ndarray:
    """12x12 matrix G with ``emb(a) @ G @ emb(b) == sum_i <a(fp_i), b(fp_i)>``.

    Only the point count, the first moment and the second moment enter.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    n = pts.shape[0]
    if n < 4:
        raise DegenerateCloud(f"need at least 4 feature points, got {n}")
    centered = pts - pts.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    if sv[-1] <= 1e-9 * max(sv[0], 1e-300):
        raise DegenerateCloud("feature points do not affinely span 3-space")
    S = pts.T @ pts
    s = pts.sum(axis=0)
    G = np.zeros((12, 12))
    G[:9, :9] = np.kron(np.eye(3), S)
    for r in range(3):
        G[3 * r:3 * r + 3, 9 + r] = s
        G[9 + r, 3 * r:3 * r + 3] = s
    G[9:, 9:] = n * np.eye(3)
    return G


def motion_distance(alpha: Pose, beta: Pose, cloud: FeatureCloud) -> float:
    diff = pose_to_embedding(alpha) - pose_to_embedding(beta)
    return math.sqrt(max(0.0, float(diff @ cloud.gram @ diff)))


def pose_error(alpha: Pose, beta: Pose) -> PoseError:
    """Relative rotation angle and translation distance between two poses."""
    c = (np.trace(beta.rotation @ alpha.rotation.T) - 1.0) / 2.0
    angle = float(np.arccos(np.clip(c, -1.0, 1.0)))
    return PoseError(angle, float(np.linalg.norm(alpha.translation - beta.translation)))
