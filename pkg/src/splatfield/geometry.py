"""Rigid-body math on SE(3)/se(3), pinhole cameras, rays, and back-projection.

Conventions used everywhere in this package:

* Poses are world-to-camera: ``x_cam = R @ x_world + t``.
* Twists are 6-vectors ``(rho, phi)`` with the translational part first,
  rotational part (radians) second.
* Pose increments compose on the left: ``P <- se3_exp(delta) @ P``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Below this rotation angle the exp/log maps switch to their Taylor series.
SMALL_ANGLE = 1e-8
# se3_log is refused within this distance of the pi singularity.
PI_SINGULARITY = 1e-6


def skew(v: np.ndarray) -> np.ndarray:
    """Cross-product (hat) matrix of a 3-vector."""
    v = np.asarray(v, dtype=float)
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


@dataclass(frozen=True)
class Twist:
    """se(3) element stored as (rho, phi): translation then rotation."""

    rho: np.ndarray
    phi: np.ndarray

    @staticmethod
    def from_vector(xi) -> "Twist":
        xi = np.asarray(xi, dtype=float).reshape(6)
        return Twist(rho=xi[:3].copy(), phi=xi[3:].copy())

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.rho, self.phi])


@dataclass(frozen=True)
class Pose:
    """World-to-camera rigid transform."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        if not np.all(np.isfinite(R)) or not np.all(np.isfinite(t)):
            raise ValueError("pose entries must be finite")
        if np.abs(R @ R.T - np.eye(3)).max() > 1e-9:
            raise ValueError("rotation is not orthonormal within 1e-9")
        if abs(np.linalg.det(R) - 1.0) > 1e-9:
            raise ValueError("rotation determinant is not +1 within 1e-9")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.eye(3), np.zeros(3))

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Map world points (..., 3) into the camera frame."""
        pts = np.asarray(points, dtype=float)
        return pts @ self.rotation.T + self.translation

    def compose(self, other: "Pose") -> "Pose":
        """Returns self @ other (apply `other` first, then `self`)."""
        return Pose(self.rotation @ other.rotation,
                    self.rotation @ other.translation + self.translation)

    def inverse(self) -> "Pose":
        return Pose(self.rotation.T, -self.rotation.T @ self.translation)

    def camera_center(self) -> np.ndarray:
        """Camera origin expressed in the world frame."""
        return -self.rotation.T @ self.translation


@dataclass(frozen=True)
class Camera:
    """Pinhole intrinsics in pixel units; `near` is the minimum render depth."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    near: float = 0.01

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be >= 1")
        if self.near <= 0:
            raise ValueError("near plane must be positive")

    def scaled(self, factor: int) -> "Camera":
        """Camera for an image downsampled by an integer factor.

        Pixel centers of the small image sit at the average of the
        corresponding factor x factor block of source pixel centers, so
        u_small = (u - (factor - 1) / 2) / factor.
        """
        off = (factor - 1) / 2.0
        return Camera(fx=self.fx / factor, fy=self.fy / factor,
                      cx=(self.cx - off) / factor, cy=(self.cy - off) / factor,
                      width=self.width // factor, height=self.height // factor,
                      near=self.near)


def so3_exp(phi: np.ndarray) -> np.ndarray:
    """Rodrigues rotation from a rotation vector."""
    phi = np.asarray(phi, dtype=float).reshape(3)
    theta = np.linalg.norm(phi)
    K = skew(phi)
    if theta < SMALL_ANGLE:
        # second-order series keeps the round-trip exact to machine precision
        return np.eye(3) + K + 0.5 * (K @ K)
    a = np.sin(theta) / theta
    b = (1.0 - np.cos(theta)) / theta**2
    return np.eye(3) + a * K + b * (K @ K)


def so3_log(R: np.ndarray) -> np.ndarray:
    R = np.asarray(R, dtype=float)
    cos_theta = np.clip((np.trace(R) - 1.0) / 2.0, -1.0, 1.0)
    theta = np.arccos(cos_theta)
    if theta < SMALL_ANGLE:
        return np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]]) / 2.0
    if np.pi - theta < PI_SINGULARITY:
        raise ValueError("rotation angle within 1e-6 of pi: log is ill-conditioned")
    w = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    return theta / (2.0 * np.sin(theta)) * w


def _left_jacobian(phi: np.ndarray) -> np.ndarray:
    """V-matrix coupling translation to rotation in the SE(3) exponential."""
    theta = np.linalg.norm(phi)
    K = skew(phi)
    if theta < SMALL_ANGLE:
        return np.eye(3) + 0.5 * K + (K @ K) / 6.0
    a = (1.0 - np.cos(theta)) / theta**2
    b = (theta - np.sin(theta)) / theta**3
    return np.eye(3) + a * K + b * (K @ K)


def _left_jacobian_inv(phi: np.ndarray) -> np.ndarray:
    theta = np.linalg.norm(phi)
    K = skew(phi)
    if theta < SMALL_ANGLE:
        return np.eye(3) - 0.5 * K + (K @ K) / 12.0
    half = theta / 2.0
    cot_term = (1.0 - half * np.cos(half) / np.sin(half)) / theta**2
    return np.eye(3) - 0.5 * K + cot_term * (K @ K)


def se3_exp(xi: Twist | np.ndarray) -> Pose:
    """Exact SE(3) exponential of a twist."""
    if not isinstance(xi, Twist):
        xi = Twist.from_vector(xi)
    R = so3_exp(xi.phi)
    t = _left_jacobian(xi.phi) @ xi.rho
    return Pose(R, t)


def se3_log(p: Pose) -> Twist:
    """Inverse of se3_exp for rotation angles below pi."""
    phi = so3_log(p.rotation)
    rho = _left_jacobian_inv(phi) @ p.translation
    return Twist(rho=rho, phi=phi)


def project(point: np.ndarray, pose: Pose, cam: Camera):
    """Pinhole projection of one world point.

    Returns (pixel, depth); raises ValueError when the camera-frame depth
    is at or below the near plane.
    """
    pc = pose.apply(np.asarray(point, dtype=float).reshape(3))
    if pc[2] <= cam.near:
        raise ValueError(f"point not projectable: depth {pc[2]:.6g} <= near {cam.near:.6g}")
    pixel = np.array([cam.fx * pc[0] / pc[2] + cam.cx,
                      cam.fy * pc[1] / pc[2] + cam.cy])
    return pixel, float(pc[2])


def project_points(points: np.ndarray, pose: Pose, cam: Camera):
    """Vectorized projection; returns (pixels (N,2), depths (N,), valid (N,))."""
    pc = pose.apply(np.asarray(points, dtype=float).reshape(-1, 3))
    z = pc[:, 2]
    valid = z > cam.near
    zs = np.where(valid, z, 1.0)
    pixels = np.stack([cam.fx * pc[:, 0] / zs + cam.cx,
                       cam.fy * pc[:, 1] / zs + cam.cy], axis=1)
    return pixels, z, valid


def backproject(pixel: np.ndarray, depth: float, pose: Pose, cam: Camera) -> np.ndarray:
    """World point whose projection is (pixel, depth)."""
    if depth <= 0:
        raise ValueError(f"backproject requires depth > 0, got {depth}")
    pixel = np.asarray(pixel, dtype=float).reshape(2)
    pc = np.array([(pixel[0] - cam.cx) / cam.fx * depth,
                   (pixel[1] - cam.cy) / cam.fy * depth,
                   depth])
    return pose.rotation.T @ (pc - pose.translation)


def pixel_ray(pixel: np.ndarray, pose: Pose, cam: Camera):
    """World-frame ray through a pixel: (origin, unit direction)."""
    pixel = np.asarray(pixel, dtype=float).reshape(2)
    d_cam = np.array([(pixel[0] - cam.cx) / cam.fx,
                      (pixel[1] - cam.cy) / cam.fy,
                      1.0])
    d_cam /= np.linalg.norm(d_cam)
    return pose.camera_center(), pose.rotation.T @ d_cam


def pixel_grid_dirs(cam: Camera) -> np.ndarray:
    """Unit camera-frame ray directions for every pixel, shape (H*W, 3).

    Row-major over the image: entry r*W + c is the ray through pixel
    (u=c, v=r) at integer pixel centers.
    """
    u, v = np.meshgrid(np.arange(cam.width, dtype=float),
                       np.arange(cam.height, dtype=float))
    d = np.stack([(u.ravel() - cam.cx) / cam.fx,
                  (v.ravel() - cam.cy) / cam.fy,
                  np.ones(cam.width * cam.height)], axis=1)
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return d


def rotation_angle_deg(Ra: np.ndarray, Rb: np.ndarray) -> float:
    """Geodesic angle in degrees between two rotation matrices."""
    cos = np.clip((np.trace(Ra.T @ Rb) - 1.0) / 2.0, -1.0, 1.0)
    return float(np.degrees(np.arccos(cos)))
