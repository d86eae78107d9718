"""Forward kinematics of the bundled 7-joint arm and the chain-reversal view.

The toolkit needs exactly two things from the robot: its kinematic chain
and a reference point rigidly attached to some link.  This demo locates
that point in the base frame (the eye-on-base quantity) and in the
end-effector frame (the eye-in-hand quantity).

Run: python demos/02_forward_kinematics.py
"""

import numpy as np

from refcal import base_point_in_ee_frame, forward_kinematics, reference_point_in_base
from refcal.fileio import builtin_chain_path, parse_chain_file

chain, flange_ref = parse_chain_file(builtin_chain_path("panda"))
print(f"chain {chain.name!r}: {chain.n_actuated} actuated joints, "
      f"{chain.n_links} link frames")
for joint in chain.joints:
    lim = f" limits [{joint.limits[0]:.3f}, {joint.limits[1]:.3f}]" if joint.limits else ""
    print(f"  {joint.name:8s} {joint.kind:9s}{lim}")

q_home = np.array([0.0, -0.785, 0.0, -2.356, 0.0, 1.571, 0.785])
poses = forward_kinematics(chain, q_home)
print("\nlink origins in the base frame at a typical home configuration:")
for i, pose in enumerate(poses):
    x, y, z = pose.translation
    print(f"  link {i}: ({x:7.3f}, {y:7.3f}, {z:7.3f})")

print("\nreference point (flange center) in base coordinates:")
print(" ", reference_point_in_base(chain, flange_ref, q_home))

# The eye-in-hand pipeline watches a point on the BASE instead; expressing
# it in the end-effector frame is the algebraic chain reversal.
_, base_ref = parse_chain_file(builtin_chain_path("panda_base_ref"))
p_ee = base_point_in_ee_frame(chain, q_home, base_ref.offset)
print("\nbase-shell point", base_ref.offset, "seen from the end-effector:")
print(" ", p_ee)
