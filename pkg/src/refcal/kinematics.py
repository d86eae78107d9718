"""Serial kinematic chains and forward kinematics for a tracked point.

A chain is an ordered list of joints; joint ``i`` connects link ``i`` to
link ``i + 1``, and link 0 is the robot base.  Each joint carries a fixed
origin transform (parent link frame to joint frame) and, unless fixed,
moves about/along a unit axis expressed in the joint frame.  This per-joint
(origin, axis, kind) form subsumes DH tables: one DH row maps to one origin
plus a z-axis revolute or prismatic joint.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, JointLimitViolation, JointLimitWarning
from .geometry import Pose, apply, compose, identity, invert, rotation_about_axis

REVOLUTE = "revolute"
PRISMATIC = "prismatic"
FIXED = "fixed"
JOINT_KINDS = (REVOLUTE, PRISMATIC, FIXED)


@dataclass(frozen=True)
class Joint:
    name: str
    kind: str
    origin: Pose
    axis: np.ndarray = (0.0, 0.0, 1.0)
    limits: tuple[float, float] | None = None

    def __post_init__(self):
        if self.kind not in JOINT_KINDS:
            raise ValueError(f"joint {self.name!r}: unknown kind {self.kind!r}")
        ax = np.array(self.axis, dtype=float).reshape(3)
        if self.kind != FIXED and abs(np.linalg.norm(ax) - 1.0) > 1e-9:
            raise ValueError(f"joint {self.name!r}: axis must have unit norm")
        ax.setflags(write=False)
        object.__setattr__(self, "axis", ax)
        if self.limits is not None:
            lo, hi = self.limits
            if not lo < hi:
                raise ValueError(f"joint {self.name!r}: limits must satisfy lo < hi")
            object.__setattr__(self, "limits", (float(lo), float(hi)))

    @property
    def actuated(self) -> bool:
        return self.kind != FIXED


@dataclass(frozen=True)
class KinematicChain:
    """Serial chain; branching is not representable and thus rejected at load."""

    name: str
    joints: tuple[Joint, ...]

    def __post_init__(self):
        object.__setattr__(self, "joints", tuple(self.joints))
        names = [j.name for j in self.joints]
        if len(set(names)) != len(names):
            raise ValueError(f"chain {self.name!r}: duplicate joint names")

    @property
    def n_links(self) -> int:
        """Number of link frames, including the base (index 0)."""
        return len(self.joints) + 1

    @property
    def n_actuated(self) -> int:
        return sum(1 for j in self.joints if j.actuated)


@dataclass(frozen=True)
class ReferencePoint:
    """A point rigidly attached to a link; link 0 is the base."""

    link_index: int
    offset: np.ndarray

    def __post_init__(self):
        off = np.array(self.offset, dtype=float).reshape(3)
        off.setflags(write=False)
        object.__setattr__(self, "offset", off)


@dataclass(frozen=True)
class JointLog:
    """Per-frame joint readings: frame index, timestamp, actuated positions."""

    frame_index: np.ndarray
    timestamps: np.ndarray
    positions: np.ndarray

    def __post_init__(self):
        fi = np.array(self.frame_index, dtype=np.int64).reshape(-1)
        ts = np.array(self.timestamps, dtype=float).reshape(-1)
        pos = np.atleast_2d(np.array(self.positions, dtype=float))
        if not (len(fi) == len(ts) == len(pos)):
            raise ValueError("frame_index, timestamps and positions must have equal length")
        if len(fi) > 1 and np.any(np.diff(fi) <= 0):
            raise ValueError("frame indices must be strictly increasing")
        for a in (fi, ts, pos):
            a.setflags(write=False)
        object.__setattr__(self, "frame_index", fi)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "positions", pos)

    @property
    def n_frames(self) -> int:
        return len(self.frame_index)

    @property
    def n_joints(self) -> int:
        return self.positions.shape[1] if self.n_frames else 0


def _joint_motion(joint: Joint, value: float) -> Pose:
    if joint.kind == REVOLUTE:
        return Pose(rotation_about_axis(joint.axis, value), np.zeros(3))
    if joint.kind == PRISMATIC:
        return Pose(np.eye(3), joint.axis * value)
    return identity()


def _check_limits(chain: KinematicChain, q: np.ndarray, strict: bool) -> None:
    qi = iter(q)
    for joint in chain.joints:
        if not joint.actuated:
            continue
        value = float(next(qi))
        if joint.limits is None:
            continue
        lo, hi = joint.limits
        if not lo <= value <= hi:
            if strict:
                raise JointLimitViolation(joint.name, value, lo, hi)
            warnings.warn(
                f"joint {joint.name!r} reading {value:.6g} outside [{lo:.6g}, {hi:.6g}]",
                JointLimitWarning,
                stacklevel=3,
            )


def forward_kinematics(
    chain: KinematicChain, q: np.ndarray, strict_limits: bool = False
) -> list[Pose]:
    """Base-to-link pose for every link frame, index 0 being the base.

    Out-of-limit values warn by default (logged data may carry sensor
    noise) and raise JointLimitViolation when strict_limits is set.
    """
    q = np.asarray(q, dtype=float).reshape(-1)
    if len(q) != chain.n_actuated:
        raise DimensionMismatch(
            f"chain {chain.name!r} has {chain.n_actuated} actuated joints, got {len(q)} values"
        )
    _check_limits(chain, q, strict_limits)
    poses = [identity()]
    t = poses[0]
    qi = iter(q)
    for joint in chain.joints:
        value = float(next(qi)) if joint.actuated else 0.0
        t = compose(t, compose(joint.origin, _joint_motion(joint, value)))
        poses.append(t)
    return poses


def end_effector_pose(chain: KinematicChain, q: np.ndarray, strict_limits: bool = False) -> Pose:
    """Pose of the last link in the base frame (the FK T mapping EE to base)."""
    return forward_kinematics(chain, q, strict_limits)[-1]


def reference_point_in_base(
    chain: KinematicChain, ref: ReferencePoint, q: np.ndarray
) -> np.ndarray:
    """3D position of the reference point in base coordinates."""
    poses = forward_kinematics(chain, q)
    if not 0 <= ref.link_index < len(poses):
        raise ValueError(
            f"reference link index {ref.link_index} out of range for chain with "
            f"{len(poses)} link frames"
        )
    return apply(poses[ref.link_index], ref.offset)


def base_point_in_ee_frame(
    chain: KinematicChain, q: np.ndarray, p_base: np.ndarray
) -> np.ndarray:
    """Express a base-frame point in the end-effector frame.

    This is the algebraic form of reversing the chain topology: the fixed
    base point moves in the end-effector frame as the robot moves.
    """
    return apply(invert(end_effector_pose(chain, q)), p_base)
