"""Run every stage end to end under the deterministic stub backends.

Produces plan.json, keyposes.motion, completed.motion, refined.motion,
rendered frames and a report with semantic and physics metrics, all under
demo_output/pipeline/.
"""

import json
import logging
from pathlib import Path

from textmotion import PipelineConfig, run_pipeline

logging.basicConfig(level=logging.INFO, format="%(message)s")

config = PipelineConfig(
    prompt="step forward and squat",
    keyframes=6,
    motion_length=40,
    search_iterations=12,
    completion_steps=300,
    refine_iterations=10,
    output_dir="demo_output/pipeline",
    seed=7,
)
report = run_pipeline(config)

print(f"\nconfig hash: {report.config_hash}")
print(f"plan score: {report.plan_score:.2f}")
print(f"worst IK residual: {max(report.ik_residuals) * 1000:.1f} mm")
print(f"completion loss: {report.completion_loss:.5f}")
print("\nmetrics (completed -> refined):")
for key in ("clip_s", "vlm_s", "float_mm", "pene_mm"):
    a = report.metrics_completed[key]
    b = report.metrics_refined[key]
    print(f"  {key:9s}: {a:.3f} -> {b:.3f}")

out = Path(config.output_dir)
print("\nartifacts:")
for name, rel in report.artifacts.items():
    print(f"  {name:12s} {out / rel}")
print("\nrerun this script: every artifact reproduces byte-for-byte.")
