"""End-to-end orchestration: plan, solve, complete, refine, evaluate, export.

Each stage writes its artifacts before the next begins, so a failed run
leaves everything produced so far on disk. A run is reproducible from its
config: all randomness flows from the seed, and the report carries a hash
of the canonical config JSON. Stage wall-times are recorded under
"timings_s" in the report and are the single field exempt from
byte-for-byte reproducibility.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .completion import CompletionConfig, complete
from .dtw import AlignmentMap  # noqa: F401  (re-exported in reports)
from .formats import dump_json, save_motion, save_plan
from .ik import IkConfig, solve_sequence
from .kinematics import extract_key_positions, standing_pose
from .optim import NumericalError
from .physics import default_proxy, metric_float, metric_pene
from .pose import Motion
from .protocol import BackendError, ProtocolError, backend_from_env, judge_motion, score_frames
from .refine import DenoisingMdp, GaussianDenoisingPolicy, PpoConfig, post_train, rollout
from .render import CameraSpec, render_frame_png
from .search import SearchConfig, dump_tree, plan_keyframes
from .skeleton import default_skeleton
from .stubs import StubBackend

log = logging.getLogger("textmotion.pipeline")


class ConfigError(ValueError):
    """The pipeline configuration is internally inconsistent."""


@dataclass
class PipelineConfig:
    prompt: str
    keyframes: int = 8            # planned keyframes
    segment_length: int = 2       # keyframes per tree segment
    motion_length: int = 60       # dense motion frames
    fps: float = 20.0
    seed: int = 0
    output_dir: str = "run_output"
    ground_height: float = 0.0

    # planning
    search_iterations: int = 30
    exploration: float = 0.05
    max_children_per_node: int = 3

    # pose solving (plan-stage rollouts gate on the looser render tolerance)
    ik_regularizer: float = 1e-4
    ik_max_iterations: int = 300
    ik_tolerance: float = 1e-3
    plan_ik_tolerance: float = 0.05

    # completion
    lam: float = 0.01
    gamma: float = 0.1
    smoothness_weight: float = 0.1
    completion_steps: int = 600

    # refinement
    refine_iterations: int = 30
    denoise_steps: int = 4
    clip_epsilon: float = 1e-3
    kl_weight: float = 0.01
    buffer_size: int = 3000
    samples_per_update: int = 8
    batch_size: int = 128
    learning_rate: float = 1e-4
    minibatches_per_update: int = 10

    # evaluation
    judge_repeats: int = 10
    semantic_weight: float = 0.6
    naturalness_weight: float = 0.4
    frame_stride: int = 1

    # backends: "stub" or empty (use URLs / env vars)
    backend: str = "stub"
    proposer_url: str = ""
    scorer_url: str = ""
    judge_url: str = ""

    def validate(self) -> None:
        if self.motion_length <= self.keyframes:
            raise ConfigError("motion_length must exceed the keyframe count")
        if self.keyframes < 1 or self.segment_length < 1:
            raise ConfigError("keyframes and segment_length must be positive")
        if self.fps <= 0:
            raise ConfigError("fps must be positive")
        if self.frame_stride < 1:
            raise ConfigError("frame_stride must be at least 1")
        if self.backend not in ("stub", "http"):
            raise ConfigError("backend must be 'stub' or 'http'")

    def to_json(self) -> str:
        return dump_json(asdict(self))

    @staticmethod
    def from_json(text: str) -> "PipelineConfig":
        return PipelineConfig(**json.loads(text))

    def config_hash(self) -> str:
        # identifies the run's numerical identity; where outputs land is
        # not part of it
        doc = asdict(self)
        doc.pop("output_dir")
        return hashlib.sha256(dump_json(doc).encode()).hexdigest()[:16]


@dataclass
class RunReport:
    config_hash: str
    seed: int
    plan_score: float
    ik_residuals: list[float]
    completion_loss: float
    reward_curve: list[float]
    metrics_completed: dict
    metrics_refined: dict
    artifacts: dict[str, str]
    timings_s: dict[str, float] = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return asdict(self)


def _make_backend(config: PipelineConfig):
    if config.backend == "stub":
        return StubBackend(seed=config.seed)
    return backend_from_env(
        proposer_url=config.proposer_url or None,
        scorer_url=config.scorer_url or None,
        judge_url=config.judge_url or None,
    )


def evaluate_motion(
    motion: Motion,
    prompt: str,
    backend,
    skeleton=None,
    proxy=None,
    camera: CameraSpec | None = None,
    judge_repeats: int = 10,
    semantic_weight: float = 0.6,
    naturalness_weight: float = 0.4,
    frame_stride: int = 1,
) -> dict:
    """Semantic and physical metrics for one motion.

    Frame scores and the judge degrade gracefully: a missing or failing
    backend leaves those fields null; the physics metrics always compute.
    """
    skeleton = skeleton or default_skeleton()
    proxy = proxy or default_proxy(skeleton)
    camera = camera or CameraSpec()

    metrics = {
        "clip_s": None,
        "vlm_s": None,
        "vlm_semantic": None,
        "vlm_naturalness": None,
        "float_mm": metric_float(skeleton, motion, proxy),
        "pene_mm": metric_pene(skeleton, motion, proxy),
    }
    frames = [
        render_frame_png(skeleton, pose, camera, proxy.ground_height)
        for pose in motion.frames[:: frame_stride]
    ]
    if backend is not None and hasattr(backend, "score"):
        try:
            metrics["clip_s"] = score_frames(backend, prompt, frames)
        except ProtocolError as exc:
            log.warning("[eval] frame scoring unavailable: %s", exc)
    if backend is not None and hasattr(backend, "judge"):
        try:
            judged = judge_motion(
                backend,
                prompt,
                frames,
                semantic_weight=semantic_weight,
                naturalness_weight=naturalness_weight,
                repeats=judge_repeats,
            )
            metrics["vlm_s"] = judged.weighted
            metrics["vlm_semantic"] = judged.semantic
            metrics["vlm_naturalness"] = judged.naturalness
        except ProtocolError as exc:
            log.warning("[eval] judge unavailable: %s", exc)
    return metrics


def _refine_motion(
    completed: Motion, config: PipelineConfig, skeleton, proxy
) -> tuple[Motion, list[float]]:
    """PPO post-training of a Gaussian policy seeded on the completed motion.

    The policy's noise-free mean chain decodes to the refined motion; if
    training did not beat the completed motion's physics reward, the
    completed motion is kept (refinement never hurts its own objective).
    """
    from .physics import combined_reward

    flat = completed.as_array()
    shape = flat.shape
    dim = flat.size

    def reward_fn(vec: np.ndarray) -> float:
        try:
            motion = Motion.from_array(vec.reshape(shape), config.fps)
        except ValueError:
            return 0.0
        return combined_reward(skeleton, motion, proxy=proxy)

    mdp = DenoisingMdp(num_steps=config.denoise_steps, dim=dim)
    policy = GaussianDenoisingPolicy.around_target(mdp, flat.ravel())
    ppo = PpoConfig(
        clip_epsilon=config.clip_epsilon,
        kl_weight=config.kl_weight,
        buffer_size=config.buffer_size,
        samples_per_update=config.samples_per_update,
        batch_size=config.batch_size,
        learning_rate=config.learning_rate,
        minibatches_per_update=config.minibatches_per_update,
    )
    policy, curve = post_train(
        mdp, policy, reward_fn, ppo, config.refine_iterations, seed=config.seed
    )

    m = np.zeros(dim)
    for t in range(mdp.num_steps):
        m = policy.mean(m, t, mdp.condition)
    refined = Motion.from_array(m.reshape(shape), config.fps)
    if reward_fn(m) < reward_fn(flat.ravel()):
        log.info("[refine] trained mean did not beat the completed motion; keeping it")
        refined = completed
    return refined, curve


def run_pipeline(config: PipelineConfig) -> RunReport:
    config.validate()
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "frames").mkdir(exist_ok=True)

    skeleton = default_skeleton()
    proxy = default_proxy(skeleton, config.ground_height)
    camera = CameraSpec()
    backend = _make_backend(config)
    from .prior import default_pose_prior

    prior = default_pose_prior()
    timings: dict[str, float] = {}
    artifacts: dict[str, str] = {}

    def stage(name):
        log.info("[%s] starting", name)
        return time.perf_counter()

    # plan
    t0 = stage("plan")
    search_config = SearchConfig(
        iterations=config.search_iterations,
        exploration=config.exploration,
        segment_length=config.segment_length,
        target_length=config.keyframes,
        max_children_per_node=config.max_children_per_node,
    )
    ik_config = IkConfig(
        regularizer_weight=config.ik_regularizer,
        max_iterations=config.ik_max_iterations,
        tolerance=config.ik_tolerance,
    )
    plan_ik = IkConfig(
        regularizer_weight=config.ik_regularizer,
        max_iterations=200,
        tolerance=config.plan_ik_tolerance,
    )
    result = plan_keyframes(
        config.prompt,
        search_config,
        backend,
        skeleton,
        prior,
        backend,
        camera,
        plan_ik,
        config.ground_height,
    )
    save_plan(out / "plan.json", result.best_plan)
    (out / "tree.json").write_text(dump_json(dump_tree(result)))
    artifacts["plan"] = "plan.json"
    artifacts["tree"] = "tree.json"
    timings["plan"] = time.perf_counter() - t0

    # solve key poses
    t0 = stage("solve")
    solutions = solve_sequence(result.best_plan, prior, skeleton, ik_config)
    key_poses = [s.pose for s in solutions]
    residuals = [s.residual for s in solutions]
    save_motion(out / "keyposes.motion", Motion(tuple(key_poses), config.fps))
    artifacts["keyposes"] = "keyposes.motion"
    timings["solve"] = time.perf_counter() - t0

    # complete
    t0 = stage("complete")
    completion_config = CompletionConfig(
        target_length=config.motion_length,
        lam=config.lam,
        gamma=config.gamma,
        smoothness_weight=config.smoothness_weight,
        max_steps=config.completion_steps,
        seed=config.seed,
        fps=config.fps,
    )
    completion = complete(key_poses, completion_config)
    save_motion(out / "completed.motion", completion.motion)
    artifacts["completed"] = "completed.motion"
    timings["complete"] = time.perf_counter() - t0

    # refine
    t0 = stage("refine")
    refined, curve = _refine_motion(completion.motion, config, skeleton, proxy)
    save_motion(out / "refined.motion", refined)
    curve_lines = ["iteration,mean_reward"] + [
        f"{i},{r!r}" for i, r in enumerate(curve)
    ]
    (out / "reward_curve.csv").write_text("\n".join(curve_lines) + "\n")
    artifacts["refined"] = "refined.motion"
    artifacts["reward_curve"] = "reward_curve.csv"
    timings["refine"] = time.perf_counter() - t0

    # evaluate + export frames
    t0 = stage("eval")
    metrics_completed = evaluate_motion(
        completion.motion,
        config.prompt,
        backend,
        skeleton,
        proxy,
        camera,
        config.judge_repeats,
        config.semantic_weight,
        config.naturalness_weight,
        config.frame_stride,
    )
    metrics_refined = evaluate_motion(
        refined,
        config.prompt,
        backend,
        skeleton,
        proxy,
        camera,
        config.judge_repeats,
        config.semantic_weight,
        config.naturalness_weight,
        config.frame_stride,
    )
    for i, pose in enumerate(refined.frames[:: config.frame_stride]):
        png = render_frame_png(skeleton, pose, camera, proxy.ground_height)
        (out / "frames" / f"{i:04d}.png").write_bytes(png)
    artifacts["frames"] = "frames"
    timings["eval"] = time.perf_counter() - t0

    report = RunReport(
        config_hash=config.config_hash(),
        seed=config.seed,
        plan_score=result.best_score,
        ik_residuals=residuals,
        completion_loss=completion.final_loss,
        reward_curve=curve,
        metrics_completed=metrics_completed,
        metrics_refined=metrics_refined,
        artifacts=artifacts,
        timings_s=timings,
    )
    (out / "report.json").write_text(dump_json(report.to_json_dict()))
    (out / "config.json").write_text(config.to_json())
    for name, rel in artifacts.items():
        if not (out / rel).exists():
            raise RuntimeError(f"artifact {name} missing at report time: {out / rel}")
    log.info("[done] report written to %s", out / "report.json")
    return report


EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BACKEND = 3
EXIT_NUMERIC = 4


def exit_code_for(exc: BaseException) -> int:
    from .refine import DivergenceError

    if isinstance(exc, (ConfigError, ValueError)):
        return EXIT_CONFIG
    if isinstance(exc, (BackendError, ProtocolError)):
        return EXIT_BACKEND
    if isinstance(exc, (NumericalError, DivergenceError, FloatingPointError)):
        return EXIT_NUMERIC
    return 1
