"""Teleoperation workbench: direct and wand mappings, servo, sessions, metrics."""

from ._core import (
    MappingMode,
    MappingState,
    Pose,
    compose,
    coordination,
    default_config,
    exp_rotation,
    fibonacci_sphere,
    forward_kinematics,
    generate_targets,
    geodesic_angle,
    init_mapping,
    initial_effector_pose,
    invert,
    jacobian,
    log_vector,
    minimum_jerk,
    pose_error,
    reach_progress,
    replay,
    rotation_distance,
    run_experiment,
    target_metrics,
    translation_distance,
    wilcoxon,
)

__all__ = [
    "MappingMode",
    "MappingState",
    "Pose",
    "compose",
    "coordination",
    "default_config",
    "exp_rotation",
    "fibonacci_sphere",
    "forward_kinematics",
    "generate_targets",
    "geodesic_angle",
    "init_mapping",
    "initial_effector_pose",
    "invert",
    "jacobian",
    "log_vector",
    "minimum_jerk",
    "pose_error",
    "reach_progress",
    "replay",
    "rotation_distance",
    "run_experiment",
    "target_metrics",
    "translation_distance",
    "wilcoxon",
]
