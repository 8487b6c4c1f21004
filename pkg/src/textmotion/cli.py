"""Command-line interface: one subcommand per pipeline stage plus `pipeline`.

Stages exchange files in the formats of formats.py, so each is invocable
standalone with inputs produced by any other run. Exit codes: 0 success,
2 validation error, 3 backend error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np


def _add_backend_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--backend", choices=("stub", "http"), default="stub")
    p.add_argument("--proposer-url", default="", help="overrides PROPOSER_URL")
    p.add_argument("--scorer-url", default="", help="overrides SCORER_URL")
    p.add_argument("--judge-url", default="", help="overrides JUDGE_URL")
    p.add_argument("--seed", type=int, default=0)


def _backend(args):
    from .protocol import backend_from_env
    from .stubs import StubBackend

    if args.backend == "stub":
        return StubBackend(seed=args.seed)
    return backend_from_env(
        proposer_url=args.proposer_url or None,
        scorer_url=args.scorer_url or None,
        judge_url=args.judge_url or None,
    )


def cmd_plan(args) -> int:
    from .formats import dump_json, save_plan
    from .ik import IkConfig
    from .prior import default_pose_prior
    from .search import SearchConfig, dump_tree, plan_keyframes
    from .skeleton import default_skeleton

    config = SearchConfig(
        iterations=args.iters,
        exploration=args.alpha,
        segment_length=args.segment,
        target_length=args.frames,
        max_children_per_node=args.max_children,
    )
    backend = _backend(args)
    result = plan_keyframes(
        args.prompt,
        config,
        backend,
        default_skeleton(),
        default_pose_prior(),
        backend,
        ik_config=IkConfig(regularizer_weight=1e-4, tolerance=0.01, max_iterations=200),
    )
    save_plan(args.out, result.best_plan)
    if args.tree:
        Path(args.tree).write_text(dump_json(dump_tree(result)))
    print(f"plan written to {args.out} (best score {result.best_score:.3f})")
    return 0


def _load_key_poses(path: str, fps: float):
    from .formats import load_motion, load_plan
    from .ik import IkConfig, solve_sequence
    from .pose import plan_to_absolute
    from .kinematics import extract_key_positions, standing_pose
    from .prior import default_pose_prior
    from .skeleton import default_skeleton

    if path.endswith(".json"):
        skeleton = default_skeleton()
        plan = plan_to_absolute(
            load_plan(path),
            extract_key_positions(skeleton, standing_pose(skeleton)),
        )
        solutions = solve_sequence(
            plan, default_pose_prior(), skeleton, IkConfig(regularizer_weight=1e-4)
        )
        return [s.pose for s in solutions]
    return list(load_motion(path).frames)


def cmd_solve(args) -> int:
    from .formats import load_plan, save_motion
    from .ik import IkConfig, solve_sequence
    from .kinematics import extract_key_positions, standing_pose
    from .pose import Motion, plan_to_absolute
    from .prior import default_pose_prior
    from .skeleton import default_skeleton

    skeleton = default_skeleton()
    plan = plan_to_absolute(
        load_plan(args.plan), extract_key_positions(skeleton, standing_pose(skeleton))
    )
    config = IkConfig(
        regularizer_weight=args.reg, max_iterations=args.iters, tolerance=args.tolerance
    )
    solutions = solve_sequence(plan, default_pose_prior(), skeleton, config)
    save_motion(args.out, Motion(tuple(s.pose for s in solutions), args.fps))
    worst = max(s.residual for s in solutions)
    print(f"{len(solutions)} key poses written to {args.out} (worst residual {worst:.4f} m)")
    return 0


def cmd_complete(args) -> int:
    from .completion import CompletionConfig, complete
    from .formats import save_motion

    keys = _load_key_poses(args.keys, args.fps)
    config = CompletionConfig(
        target_length=args.length,
        lam=args.lam,
        gamma=args.gamma,
        smoothness_weight=args.smoothness,
        max_steps=args.steps,
        fps=args.fps,
    )
    result = complete(keys, config)
    save_motion(args.out, result.motion)
    print(f"completed motion ({args.length} frames) written to {args.out}; "
          f"final loss {result.final_loss:.6f}")
    return 0


def cmd_refine(args) -> int:
    from .formats import load_motion, save_motion
    from .physics import combined_reward, default_proxy
    from .pose import Motion
    from .refine import DenoisingMdp, GaussianDenoisingPolicy, PpoConfig, post_train
    from .skeleton import default_skeleton

    motion = load_motion(args.motion_init)
    skeleton = default_skeleton()
    proxy = default_proxy(skeleton)
    arr = motion.as_array()

    def reward_fn(vec):
        try:
            m = Motion.from_array(vec.reshape(arr.shape), motion.fps)
        except ValueError:
            return 0.0
        return combined_reward(skeleton, m, proxy=proxy)

    mdp = DenoisingMdp(num_steps=args.denoise_steps, dim=arr.size)
    policy = GaussianDenoisingPolicy.around_target(mdp, arr.ravel())
    config = PpoConfig(clip_epsilon=args.clip, kl_weight=args.kl, learning_rate=args.lr)
    policy, curve = post_train(mdp, policy, reward_fn, config, args.iters, seed=args.seed)

    m = np.zeros(arr.size)
    for t in range(mdp.num_steps):
        m = policy.mean(m, t, mdp.condition)
    refined = Motion.from_array(m.reshape(arr.shape), motion.fps)
    if reward_fn(m) < reward_fn(arr.ravel()):
        refined = motion
    save_motion(args.out, refined)
    lines = ["iteration,mean_reward"] + [f"{i},{r!r}" for i, r in enumerate(curve)]
    Path(args.curve).write_text("\n".join(lines) + "\n")
    print(f"refined motion written to {args.out}; reward {curve[0]:.4f} -> {curve[-1]:.4f}")
    return 0


def cmd_eval(args) -> int:
    from .formats import dump_json, load_motion
    from .physics import (
        combined_reward,
        default_proxy,
        derive_contacts,
        metric_float,
        metric_pene,
        reward_floating,
        reward_foot_sliding,
        reward_penetration,
    )
    from .pipeline import evaluate_motion
    from .skeleton import default_skeleton

    motion = load_motion(args.motion)
    skeleton = default_skeleton()
    proxy = default_proxy(skeleton, args.ground)
    wanted = args.metrics.split(",")
    doc = {}
    if "float" in wanted:
        doc["float_mm"] = metric_float(skeleton, motion, proxy)
    if "pene" in wanted:
        doc["pene_mm"] = metric_pene(skeleton, motion, proxy)
    if "rewards" in wanted:
        contacts = derive_contacts(skeleton, motion, proxy)
        doc["reward_foot_sliding"] = reward_foot_sliding(skeleton, motion, contacts)
        doc["reward_floating"] = reward_floating(skeleton, motion, proxy)
        doc["reward_penetration"] = reward_penetration(skeleton, motion, proxy)
        doc["reward_combined"] = combined_reward(skeleton, motion, contacts, proxy)
    if "semantic" in wanted:
        backend = _backend(args)
        doc.update(
            evaluate_motion(motion, args.prompt, backend, skeleton, proxy)
        )
    text = dump_json(doc)
    if args.json:
        print(text, end="")
    else:
        for k, v in doc.items():
            print(f"{k}: {v}")
    if args.out:
        Path(args.out).write_text(text)
    return 0


def cmd_render(args) -> int:
    from .formats import load_motion
    from .render import CameraSpec, render_frame_png
    from .skeleton import default_skeleton

    motion = load_motion(args.motion)
    skeleton = default_skeleton()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    camera = CameraSpec()
    count = 0
    for i, pose in enumerate(motion.frames[:: args.stride]):
        (out / f"{i:04d}.png").write_bytes(
            render_frame_png(skeleton, pose, camera, args.ground)
        )
        count += 1
    print(f"{count} frames rendered to {out}")
    return 0


def cmd_pipeline(args) -> int:
    from .pipeline import PipelineConfig, run_pipeline

    if args.config:
        config = PipelineConfig.from_json(Path(args.config).read_text())
    else:
        config = PipelineConfig(prompt=args.prompt or "stand still")
    overrides = {
        "prompt": args.prompt,
        "output_dir": args.out,
        "seed": args.seed_override,
        "keyframes": args.frames,
        "motion_length": args.length,
        "backend": args.backend_override,
    }
    for name, value in overrides.items():
        if value is not None:
            setattr(config, name, value)
    report = run_pipeline(config)
    print(json.dumps({"config_hash": report.config_hash,
                      "plan_score": report.plan_score,
                      "pene_completed_mm": report.metrics_completed["pene_mm"],
                      "pene_refined_mm": report.metrics_refined["pene_mm"],
                      "output_dir": config.output_dir}, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="textmotion",
        description="Text-to-motion planning, completion and refinement toolkit",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="search keyframes for a prompt")
    p.add_argument("--prompt", required=True)
    p.add_argument("--frames", type=int, default=8)
    p.add_argument("--iters", type=int, default=30)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--segment", type=int, default=2)
    p.add_argument("--max-children", type=int, default=3)
    p.add_argument("--out", default="plan.json")
    p.add_argument("--tree", default="")
    _add_backend_flags(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("solve", help="solve full-body key poses for a plan")
    p.add_argument("--plan", required=True)
    p.add_argument("--out", default="keyposes.motion")
    p.add_argument("--reg", type=float, default=1e-4)
    p.add_argument("--iters", type=int, default=500)
    p.add_argument("--tolerance", type=float, default=1e-3)
    p.add_argument("--fps", type=float, default=20.0)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("complete", help="densify key poses into a motion")
    p.add_argument("--keys", required=True, help="keyposes .motion or plan .json")
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=0.01)
    p.add_argument("--gamma", type=float, default=0.1)
    p.add_argument("--smoothness", type=float, default=0.1)
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--fps", type=float, default=20.0)
    p.add_argument("--out", default="completed.motion")
    p.set_defaults(func=cmd_complete)

    p = sub.add_parser("refine", help="physics-aware policy refinement")
    p.add_argument("--motion-init", required=True)
    p.add_argument("--iters", type=int, default=30)
    p.add_argument("--clip", type=float, default=1e-3)
    p.add_argument("--kl", type=float, default=0.01)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--denoise-steps", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="refined.motion")
    p.add_argument("--curve", default="reward_curve.csv")
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("eval", help="metrics for a motion file")
    p.add_argument("--motion", required=True)
    p.add_argument("--metrics", default="float,pene,rewards")
    p.add_argument("--prompt", default="")
    p.add_argument("--ground", type=float, default=0.0)
    p.add_argument("--json", action="store_true")
    p.add_argument("--out", default="")
    _add_backend_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("render", help="render a motion to PNG frames")
    p.add_argument("--motion", required=True)
    p.add_argument("--out", default="frames")
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--ground", type=float, default=0.0)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("pipeline", help="run all stages end to end")
    p.add_argument("--config", default="")
    p.add_argument("--prompt", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--seed", dest="seed_override", type=int, default=None)
    p.add_argument("--frames", type=int, default=None)
    p.add_argument("--length", type=int, default=None)
    p.add_argument("--backend", dest="backend_override", default=None,
                   choices=("stub", "http"))
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    from .pipeline import exit_code_for

    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s %(message)s",
    )
    try:
        return args.func(args)
    except Exception as exc:  # map to documented exit codes
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
