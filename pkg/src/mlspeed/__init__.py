"""Maximum-likelihood speed estimation of a moving foreground object in video.

The estimator maximizes the frequency-domain likelihood of a constant
integer speed over a window of frames, with the static background either
subtracted (included) or removed by foreground masking (omitted).
"""
from .background import GmmParams, Template, estimate_background, extract_template, gmm_init, gmm_update
from .baseline import BlockMatchConfig, aggregate_speed, block_match_pair
from .core import FrameSequence, PixelIndex, SpeedVector, frame_stats, wrap
from .estimator import (EstimationResult, SpeedGrid, build_context, estimate_speed, included_constant_term,
                        objective_direct, objective_surface_fast)
from .kernels import BACKEND as KERNEL_BACKEND
from .pipeline import PipelineConfig, run_pipeline

__version__ = "0.1.0"
