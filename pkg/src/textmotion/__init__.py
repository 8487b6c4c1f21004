"""textmotion: text-described motion planning, completion and refinement.

The pipeline turns a free-form motion description into a full-body motion:
tree search over proposed keyframes, latent-prior inverse kinematics for
full poses, soft-DTW trajectory completion, and physics-aware policy
refinement. All neural scoring sits behind a small HTTP protocol with
deterministic in-process stubs.
"""

from .completion import CompletionConfig, CompletionResult, complete, initialize
from .dtw import (
    AlignmentMap,
    CostMatrix,
    SoftDtwResult,
    alignment_map,
    combined_loss,
    cost_matrix,
    hard_dtw,
    recon_loss,
    soft_dtw,
    soft_dtw_grad,
)
from .features import FEATURE_DIM, to_feature_263
from .formats import (
    load_matrices,
    load_motion,
    load_plan,
    load_skeleton,
    save_matrices,
    save_motion,
    save_plan,
    save_skeleton,
)
from .ik import IkConfig, IkProblem, IkSolution, pose_loss, solve, solve_sequence
from .kinematics import (
    extract_key_positions,
    forward_kinematics,
    position_jacobian,
    standing_pose,
)
from .physics import (
    ContactLabels,
    RewardWeights,
    SurfaceProxy,
    combined_reward,
    default_proxy,
    derive_contacts,
    lowest_point,
    metric_float,
    metric_pene,
    reward_floating,
    reward_foot_sliding,
    reward_penetration,
)
from .pipeline import PipelineConfig, RunReport, evaluate_motion, run_pipeline
from .pose import Keyframe, KeyframePlan, Motion, Pose, plan_to_absolute, plan_to_delta
from .prior import AffinePosePrior, IdentityPrior, default_pose_prior, fit_affine_prior
from .protocol import (
    JudgeResponse,
    ProposalRequest,
    ProposalResponse,
    judge_motion,
    propose,
    score_frames,
)
from .refine import (
    DenoisingMdp,
    GaussianDenoisingPolicy,
    PpoConfig,
    Trajectory,
    kl_regularizer,
    post_train,
    ppo_loss,
    rollout,
)
from .render import CameraSpec, render_frame, render_frame_png
from .search import SearchConfig, SearchNode, SearchResult, plan_keyframes, search
from .skeleton import Skeleton, chain_skeleton, default_skeleton
from .stubs import StubBackend, StubJudge, StubProposer, TemplateImageScorer

__version__ = "0.1.0"
