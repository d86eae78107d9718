"""Eye-on-base and eye-in-hand calibration pipelines, plus an AX=XB baseline.

Both pipelines pair a 2D track of a reference point with per-frame joint
readings, assemble 2D-3D correspondences through forward kinematics, and
hand them to the PnP solver:

- eye-on-base: the tracked point rides on the arm; its base-frame position
  comes from FK and the solve yields the camera-to-base transform.
- eye-in-hand: the tracked point sits on the robot base; expressing it in
  the end-effector frame turns the problem into the dual eye-on-base solve
  and yields the camera-to-end-effector transform.

Pairing is by frame index only.  Synchronization frames are captured with
the arm at rest, so interpolating joint states across timestamps would
reintroduce exactly the asynchrony the sync mechanism removes.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientMotion, TooFewPairs
from .geometry import CameraIntrinsics, Pose
from .kinematics import (
    JointLog,
    KinematicChain,
    ReferencePoint,
    base_point_in_ee_frame,
    reference_point_in_base,
)
from .pnp import Correspondence, PnPSolution, RefineOptions, solve_pnp


class Mode(enum.Enum):
    EYE_ON_BASE = "eye_on_base"
    EYE_IN_HAND = "eye_in_hand"


NOT_VISIBLE = "not_visible"
NOT_SYNCED = "not_synced"
MISSING_JOINT = "missing_joint"


@dataclass(frozen=True)
class Track2D:
    """Per-frame tracked pixel positions with visibility and sync flags.

    Pixels may lie outside the image (trackers report out-of-frame
    estimates); they must be finite wherever the point is flagged visible.
    """

    frame_index: np.ndarray
    uv: np.ndarray
    visible: np.ndarray
    sync: np.ndarray

    def __post_init__(self):
        fi = np.array(self.frame_index, dtype=np.int64).reshape(-1)
        uv = np.array(self.uv, dtype=float).reshape(-1, 2)
        vis = np.array(self.visible, dtype=bool).reshape(-1)
        sync = np.array(self.sync, dtype=bool).reshape(-1)
        if not (len(fi) == len(uv) == len(vis) == len(sync)):
            raise ValueError("track arrays must have equal length")
        if len(fi) > 1 and np.any(np.diff(fi) <= 0):
            raise ValueError("track frame indices must be strictly increasing")
        if np.any(~np.isfinite(uv[vis])):
            raise ValueError("visible frames must carry finite pixel coordinates")
        for a in (fi, uv, vis, sync):
            a.setflags(write=False)
        object.__setattr__(self, "frame_index", fi)
        object.__setattr__(self, "uv", uv)
        object.__setattr__(self, "visible", vis)
        object.__setattr__(self, "sync", sync)

    @property
    def n_frames(self) -> int:
        return len(self.frame_index)

    def subset(self, frame_numbers) -> "Track2D":
        """Restrict to the given frame numbers (order preserved)."""
        mask = np.isin(self.frame_index, np.asarray(frame_numbers, dtype=np.int64))
        return Track2D(self.frame_index[mask], self.uv[mask], self.visible[mask], self.sync[mask])


@dataclass(frozen=True)
class CalibrationOptions:
    use_only_sync: bool = True
    min_pairs: int = 10
    robust: bool = False

    def __post_init__(self):
        if self.min_pairs < 4:
            raise ValueError(f"min_pairs must be at least 4, got {self.min_pairs}")


@dataclass(frozen=True)
class CalibrationRequest:
    mode: Mode
    chain: KinematicChain
    ref: ReferencePoint
    intrinsics: CameraIntrinsics
    track: Track2D
    joints: JointLog
    options: CalibrationOptions = field(default_factory=CalibrationOptions)


@dataclass(frozen=True)
class CalibrationResult:
    """Estimated pose (camera-to-base or camera-to-end-effector) plus audit trail."""

    pose: Pose
    solution: PnPSolution
    n_pairs_used: int
    dropped: tuple[tuple[int, str], ...]


def select_frames(
    track: Track2D, joints: JointLog, options: CalibrationOptions | None = None
) -> tuple[np.ndarray, list[tuple[int, str]]]:
    """Frame numbers usable for calibration, plus every dropped frame with
    its reason.  Each track frame lands in exactly one of the two lists."""
    options = options or CalibrationOptions()
    have_joints = set(int(f) for f in joints.frame_index)
    used: list[int] = []
    dropped: list[tuple[int, str]] = []
    for i, frame in enumerate(track.frame_index):
        f = int(frame)
        if f not in have_joints:
            dropped.append((f, MISSING_JOINT))
        elif not track.visible[i]:
            dropped.append((f, NOT_VISIBLE))
        elif options.use_only_sync and not track.sync[i]:
            dropped.append((f, NOT_SYNCED))
        else:
            used.append(f)
    if len(used) < options.min_pairs:
        raise TooFewPairs(len(used), options.min_pairs, dropped)
    return np.array(used, dtype=np.int64), dropped


def _correspondences(req: CalibrationRequest, used: np.ndarray) -> list[Correspondence]:
    track_row = {int(f): i for i, f in enumerate(req.track.frame_index)}
    joint_row = {int(f): i for i, f in enumerate(req.joints.frame_index)}
    corrs = []
    for f in used:
        q = req.joints.positions[joint_row[int(f)]]
        if req.mode is Mode.EYE_ON_BASE:
            p3 = reference_point_in_base(req.chain, req.ref, q)
        else:
            p3 = base_point_in_ee_frame(req.chain, q, req.ref.offset)
        corrs.append(Correspondence(p3, req.track.uv[track_row[int(f)]]))
    return corrs


def _run(req: CalibrationRequest) -> CalibrationResult:
    used, dropped = select_frames(req.track, req.joints, req.options)
    corrs = _correspondences(req, used)
    solution = solve_pnp(corrs, req.intrinsics, RefineOptions(robust=req.options.robust))
    return CalibrationResult(
        pose=solution.pose,
        solution=solution,
        n_pairs_used=len(used),
        dropped=tuple(dropped),
    )


def calibrate_eye_on_base(req: CalibrationRequest) -> CalibrationResult:
    """Solve the camera-to-base transform for a camera fixed in the workspace."""
    if req.mode is not Mode.EYE_ON_BASE:
        raise ValueError(f"request mode is {req.mode}, expected EYE_ON_BASE")
    return _run(req)


def calibrate_eye_in_hand(req: CalibrationRequest) -> CalibrationResult:
    """Solve the camera-to-end-effector transform for an arm-mounted camera.

    The reference point must sit on the base link; its end-effector-frame
    coordinates at each frame come from the inverted FK pose.
    """
    if req.mode is not Mode.EYE_IN_HAND:
        raise ValueError(f"request mode is {req.mode}, expected EYE_IN_HAND")
    if req.ref.link_index != 0:
        raise ValueError(
            "eye-in-hand calibration requires the reference point on the base "
            f"link (link 0), got link {req.ref.link_index}"
        )
    return _run(req)


def calibrate(req: CalibrationRequest) -> CalibrationResult:
    if req.mode is Mode.EYE_ON_BASE:
        return calibrate_eye_on_base(req)
    return calibrate_eye_in_hand(req)


def _log_so3(r: np.ndarray) -> np.ndarray:
    """Rotation vector of a rotation matrix (angle times unit axis)."""
    c = (np.trace(r) - 1.0) / 2.0
    angle = float(np.arccos(min(1.0, max(-1.0, c))))
    if angle < 1e-12:
        return np.zeros(3)
    if np.pi - angle < 1e-6:
        # Near half-turn: extract the axis from the symmetric part.
        a2 = (np.diag(r) + 1.0) / 2.0
        k = int(np.argmax(a2))
        axis = np.zeros(3)
        axis[k] = np.sqrt(max(a2[k], 0.0))
        for j in range(3):
            if j != k:
                axis[j] = (r[k, j] + r[j, k]) / (4.0 * axis[k])
        axis /= np.linalg.norm(axis)
        return axis * angle
    v = np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    return v * (angle / (2.0 * np.sin(angle)))


def solve_axxb(a_list, b_list) -> Pose:
    """Classical two-stage hand-eye solve of A_i X = X B_i.

    Rotation first, as the least-squares alignment of the motion rotation
    vectors; then translation from the stacked linear system
    (R_Ai - I) t = R_X t_Bi - t_Ai.  This is the standard marker-based
    formulation; the A_i come from detected marker poses and the B_i from
    robot motions, neither of which this toolkit produces itself.
    """
    if len(a_list) != len(b_list):
        raise ValueError(f"got {len(a_list)} camera motions but {len(b_list)} robot motions")
    if len(a_list) < 2:
        raise InsufficientMotion(f"need at least 2 motion pairs, got {len(a_list)}")
    alphas = np.array([_log_so3(a.rotation) for a in a_list])
    betas = np.array([_log_so3(b.rotation) for b in b_list])
    angles = np.linalg.norm(alphas, axis=1)
    axes = [alphas[i] / angles[i] for i in range(len(a_list)) if angles[i] > 1e-8]
    diverse = any(
        np.linalg.norm(np.cross(axes[i], axes[j])) >= 1e-6
        for i in range(len(axes))
        for j in range(i + 1, len(axes))
    )
    if not diverse:
        raise InsufficientMotion(
            "rotation axes of the motions are parallel; include motions "
            "rotating about at least two distinct axes"
        )
    cross = betas.T @ alphas
    u, _, vt = np.linalg.svd(cross.T)
    d = np.sign(np.linalg.det(u @ vt))
    rot = u @ np.diag([1.0, 1.0, d]) @ vt
    c = np.vstack([a.rotation - np.eye(3) for a in a_list])
    rhs = np.concatenate([rot @ b.translation - a.translation for a, b in zip(a_list, b_list)])
    t, *_ = np.linalg.lstsq(c, rhs, rcond=None)
    return Pose(rot, t)
