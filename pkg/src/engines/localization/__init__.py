"""
Localization Engine - particle belief, odometry motion and the GP-Localize filter.
"""

from src.engines.localization.belief import (
    Belief,
    estimate_location,
    resample,
    systematic_resample,
    systematic_resample_indices,
)
from src.engines.localization.gp_localize import (
    FilterConfig,
    FilterState,
    GPLocalizer,
    ObservationModel,
    filter_step,
    snapshot_size,
)
from src.engines.localization.motion import (
    MotionNoise,
    OdometryAction,
    Pose,
    sample_motion,
    sample_motion_batch,
    wrap_angle,
)
from src.engines.localization.observation import (
    SamplePath,
    advance_sample_paths,
    init_sample_paths,
    observation_likelihood,
    observation_log_likelihood,
    reanchor_due,
)

__all__ = [
    "Belief",
    "estimate_location",
    "resample",
    "systematic_resample",
    "systematic_resample_indices",
    "FilterConfig",
    "FilterState",
    "GPLocalizer",
    "ObservationModel",
    "filter_step",
    "snapshot_size",
    "MotionNoise",
    "OdometryAction",
    "Pose",
    "sample_motion",
    "sample_motion_batch",
    "wrap_angle",
    "SamplePath",
    "advance_sample_paths",
    "init_sample_paths",
    "observation_likelihood",
    "observation_log_likelihood",
    "reanchor_due",
]
