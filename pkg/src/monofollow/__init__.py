"""Monocular target following: depth-target extraction, PnP interpolation,
asynchronous Kalman fusion, pure-pursuit/PID control and a synthetic scene
simulator."""
from ._kernels import BACKEND
from .boxes import BBox, Detection, giou, giou_loss, iou
from .control import ControlCommand, Controller, ControllerConfig, PidMemory, pid_speed, pure_pursuit_steer
from .depth_target import (
    DepthHistogram,
    Source,
    TargetEstimate,
    histogram_peak_depth,
    sigma_split,
    target_position,
)
from .errors import MonoFollowError, NumericalError
from .features import Corner, FlowMatch, GrayImage, lk_track, shi_tomasi, split_foreground
from .fusion import (
    FusionConfig,
    Tracker,
    TrackState,
    TrajectoryBuffer,
    fit_trajectory,
    fused_estimate,
    predict,
    register_network_measurement,
    update,
)
from .geometry import CameraIntrinsics, DepthMap, Pixel, Point3, Pose, back_project, depth_map_to_cloud, project
from .metrics import DepthMetrics, depth_metrics
from .pnp import Correspondence, PnPSolution, pnp_interpolate_position, pnp_motion, solve_pnp
from .vnl import TripletConstraints, sample_triplets, triplet_normal, vnl_between_depth_maps, vnl_loss

__version__ = "0.1.0"
