"""Key-joint inverse kinematics through a latent pose prior.

Solves for a latent code whose decoded pose places the planned key joints
at their target positions, with a ridge penalty keeping the code near the
prior's center. Global root translation and rotation are optimized outside
the latent as six extra free variables (a pose prior constrains body
shape, not world placement), appended after the latent in the optimization
vector and left unregularized.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kinematics import forward_kinematics, position_jacobian, standing_pose
from .optim import minimize_least_squares
from .pose import Keyframe, KeyframePlan, Pose
from .prior import numeric_decode_jacobian
from .skeleton import Skeleton


def default_joint_mask(skeleton: Skeleton) -> np.ndarray:
    """Binary selector, one row per key slot, a single 1 at that key joint."""
    mask = np.zeros((len(skeleton.key_joint_indices), skeleton.num_joints))
    for row, j in enumerate(skeleton.key_joint_indices):
        mask[row, j] = 1.0
    return mask


@dataclass
class IkProblem:
    skeleton: Skeleton
    target: Keyframe
    joint_mask: np.ndarray | None = None  # rows select joints; all-zero row = inactive
    regularizer_weight: float = 1.0
    max_iterations: int = 500
    step_size: float = 0.05
    tolerance: float = 1e-3

    def __post_init__(self):
        if self.target.mode != "absolute":
            raise ValueError("IK targets must be absolute keyframes")
        if self.joint_mask is None:
            self.joint_mask = default_joint_mask(self.skeleton)
        self.joint_mask = np.asarray(self.joint_mask, dtype=float)
        if not np.isin(self.joint_mask, (0.0, 1.0)).all():
            raise ValueError("joint mask entries must be 0 or 1")
        if (self.joint_mask.sum(axis=1) > 1).any():
            raise ValueError("each mask row may select at most one joint")

    def active_rows(self) -> list[tuple[int, int]]:
        """(target row, joint index) pairs for rows that select a joint."""
        out = []
        for row in range(self.joint_mask.shape[0]):
            hits = np.nonzero(self.joint_mask[row])[0]
            if hits.size:
                out.append((row, int(hits[0])))
        return out


@dataclass
class IkSolution:
    latent: np.ndarray
    pose: Pose
    residual: float
    converged: bool
    iterations_used: int
    solution_vector: np.ndarray = field(repr=False, default=None)


def _decode_with_root(prior, x: np.ndarray) -> np.ndarray:
    """Pose vector for the extended variable [latent, root offsets]."""
    d_z = prior.latent_dim
    vec = prior.decode_vector(x[:d_z]).copy()
    vec[:6] = vec[:6] + x[d_z:]
    return vec


def pose_loss(x: np.ndarray, problem: IkProblem, prior) -> tuple[float, np.ndarray]:
    """Summed squared key-joint error plus the latent ridge, with gradient.

    x = [latent (d_z), root translation offset (3), root rotation offset (3)].
    The gradient chains analytically through the decoder (when it exposes
    decode_jacobian) and forward kinematics; opaque decoders get a central
    finite-difference Jacobian.
    """
    x = np.asarray(x, dtype=float)
    d_z = prior.latent_dim
    z = x[:d_z]
    vec = _decode_with_root(prior, x)
    pose = Pose.from_vector(vec)

    active = problem.active_rows()
    w = problem.regularizer_weight
    if not active:
        loss = w * float(z @ z)
        grad = np.zeros_like(x)
        grad[:d_z] = 2.0 * w * z
        return loss, grad

    rows = [r for r, _ in active]
    joints = np.array([j for _, j in active])
    positions = forward_kinematics(problem.skeleton, pose)
    residuals = positions[joints] - problem.target.key_positions[rows]
    loss = float(np.sum(residuals * residuals)) + w * float(z @ z)

    jac_fk = position_jacobian(problem.skeleton, pose, joints)  # (3*n, pose_dim)
    grad_vec = 2.0 * (jac_fk.T @ residuals.ravel())

    jac_fn = getattr(prior, "decode_jacobian", None)
    if callable(jac_fn):
        jac_dec = jac_fn(z)
    else:
        jac_dec = numeric_decode_jacobian(prior, z)

    grad = np.zeros_like(x)
    grad[:d_z] = jac_dec.T @ grad_vec + 2.0 * w * z
    grad[d_z:] = grad_vec[:6]
    return loss, grad


def _residual(x: np.ndarray, problem: IkProblem, prior) -> float:
    active = problem.active_rows()
    if not active:
        return 0.0
    pose = Pose.from_vector(_decode_with_root(prior, x))
    positions = forward_kinematics(problem.skeleton, pose)
    errs = [
        np.linalg.norm(positions[j] - problem.target.key_positions[r]) for r, j in active
    ]
    return float(max(errs))


def _augmented_residuals(x: np.ndarray, problem: IkProblem, prior) -> np.ndarray:
    """Stacked residual vector whose squared norm equals pose_loss."""
    d_z = prior.latent_dim
    active = problem.active_rows()
    sqrt_w = np.sqrt(problem.regularizer_weight)
    ridge = sqrt_w * x[:d_z]
    if not active:
        return ridge
    pose = Pose.from_vector(_decode_with_root(prior, x))
    positions = forward_kinematics(problem.skeleton, pose)
    rows = [r for r, _ in active]
    joints = np.array([j for _, j in active])
    pos_res = (positions[joints] - problem.target.key_positions[rows]).ravel()
    return np.concatenate([pos_res, ridge])


def _augmented_jacobian(x: np.ndarray, problem: IkProblem, prior) -> np.ndarray:
    d_z = prior.latent_dim
    active = problem.active_rows()
    sqrt_w = np.sqrt(problem.regularizer_weight)
    ridge_jac = np.zeros((d_z, d_z + 6))
    ridge_jac[:, :d_z] = sqrt_w * np.eye(d_z)
    if not active:
        return ridge_jac
    z = x[:d_z]
    pose = Pose.from_vector(_decode_with_root(prior, x))
    joints = np.array([j for _, j in active])
    jac_fk = position_jacobian(problem.skeleton, pose, joints)  # (3n, pose_dim)
    jac_fn = getattr(prior, "decode_jacobian", None)
    jac_dec = jac_fn(z) if callable(jac_fn) else numeric_decode_jacobian(prior, z)
    top = np.zeros((jac_fk.shape[0], d_z + 6))
    top[:, :d_z] = jac_fk @ jac_dec
    top[:, d_z:] = jac_fk[:, :6]
    return np.vstack([top, ridge_jac])


def solve(problem: IkProblem, prior, z_init: np.ndarray | None = None) -> IkSolution:
    """Minimize the key-joint loss from z_init (default: encoded rest pose).

    Runs damped least-squares (Levenberg-Marquardt) on the stacked
    position-plus-ridge residuals, using the analytic decoder and FK
    Jacobians. Stops on gradient norm < 1e-6, key-joint residual <
    tolerance, or the iteration budget; reports the best-by-loss iterate
    either way.
    """
    d_z = prior.latent_dim
    if z_init is None:
        z_init = prior.encode(standing_pose(problem.skeleton))
    z_init = np.asarray(z_init, dtype=float)
    x0 = np.concatenate([z_init, np.zeros(6)]) if z_init.size == d_z else z_init.copy()
    if x0.size != d_z + 6:
        raise ValueError(f"z_init must have {d_z} or {d_z + 6} entries")

    has_targets = bool(problem.active_rows())

    def stop(x):
        return has_targets and _residual(x, problem, prior) < problem.tolerance

    result = minimize_least_squares(
        lambda x: _augmented_residuals(x, problem, prior),
        lambda x: _augmented_jacobian(x, problem, prior),
        x0,
        max_steps=problem.max_iterations,
        grad_tol=1e-6,
        should_stop=stop,
    )
    residual = _residual(result.x, problem, prior)
    return IkSolution(
        latent=result.x[:d_z].copy(),
        pose=Pose.from_vector(_decode_with_root(prior, result.x)),
        residual=residual,
        converged=residual <= problem.tolerance,
        iterations_used=result.iterations,
        solution_vector=result.x,
    )


@dataclass
class IkConfig:
    regularizer_weight: float = 1.0
    max_iterations: int = 500
    step_size: float = 0.05
    tolerance: float = 1e-3


def solve_sequence(
    plan: KeyframePlan,
    prior,
    skeleton: Skeleton,
    config: IkConfig | None = None,
) -> list[IkSolution]:
    """Solve each keyframe of an absolute plan, warm-starting from the last."""
    if not plan.is_absolute:
        raise ValueError("solve_sequence needs an absolute plan")
    config = config or IkConfig()
    solutions: list[IkSolution] = []
    warm: np.ndarray | None = None
    for index, frame in enumerate(plan.frames):
        problem = IkProblem(
            skeleton=skeleton,
            target=frame,
            regularizer_weight=config.regularizer_weight,
            max_iterations=config.max_iterations,
            step_size=config.step_size,
            tolerance=config.tolerance,
        )
        try:
            solution = solve(problem, prior, z_init=warm)
        except Exception as exc:
            raise RuntimeError(f"IK failed at keyframe {index}: {exc}") from exc
        solutions.append(solution)
        warm = solution.solution_vector
    return solutions
