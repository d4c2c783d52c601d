"""Time steppers advancing (theta, m) under residual-minimizing dynamics.

Two schemes are provided. The semi-implicit Euler scheme advances theta with
forward Euler and the history variable m with backward Euler, which reduces
to the exponential moving average ``m_{k+1} = beta m_k + (1-beta) eta_k``
with ``beta = tau/(tau + dt)``; the history is injected only through the
complement of the retained singular basis, so the instantaneous
residual-minimizing part of the update is untouched. The RK4 scheme threads
a stage-coupled EMA through the four classical stages; note that its history
variable tracks stage *displacements* (h_s eta_s) rather than velocities and
is divided by h_s when forming stage directions, so momentum state is not
interchangeable between the two schemes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .errors import InputError, IntegrationError
from .linalg import (
    LsqResult,
    SketchConfig,
    project_complement,
    solve_min_norm,
    solve_min_norm_randomized,
    solve_tikhonov,
)
from .models import assemble_system

__all__ = [
    "SolverSpec",
    "StepConfig",
    "StepRecord",
    "df_velocity",
    "dfo_euler_step",
    "dfo_rk4_step",
    "integrate",
]

log = logging.getLogger(__name__)

SCHEMES = ("euler", "rk4")
SOLVERS = ("tsvd", "tikhonov", "rsvd")


@dataclass(frozen=True)
class SolverSpec:
    """Least-squares solver selection for one integrator configuration."""

    kind: str = "tsvd"
    gamma: float = 1e-6            # tikhonov only
    sketch: SketchConfig | None = None  # rsvd only

    def __post_init__(self):
        if self.kind not in SOLVERS:
            raise InputError(f"unknown solver {self.kind!r}, expected one of {SOLVERS}")
        if self.kind == "tikhonov" and not self.gamma > 0.0:
            raise InputError(f"gamma must be > 0, got {self.gamma}")
        if self.kind == "rsvd" and self.sketch is None:
            raise InputError("rsvd solver requires a SketchConfig")


@dataclass(frozen=True)
class StepConfig:
    """One integrator configuration.

    Exactly one of ``tau`` (Onsager relaxation time) and ``beta`` (EMA
    coefficient) must be given; with ``tau`` the coefficient is recomputed
    from the actual step length, which matters for a non-uniform final step.
    """

    dt: float
    tau: float | None = None
    beta: float | None = None
    lam: float = 0.0
    eps_rel: float = 1e-12
    abs_tol: float = 0.0
    scheme: str = "euler"
    solver: SolverSpec = SolverSpec()

    def __post_init__(self):
        if not self.dt > 0.0:
            raise InputError(f"dt must be > 0, got {self.dt}")
        if (self.tau is None) == (self.beta is None):
            raise InputError("exactly one of tau and beta must be set")
        if self.tau is not None and not self.tau > 0.0:
            raise InputError(f"tau must be > 0, got {self.tau}")
        if self.beta is not None and not 0.0 < self.beta < 1.0:
            raise InputError(f"beta must be in (0, 1), got {self.beta}")
        if self.lam < 0.0:
            raise InputError(f"lambda must be >= 0, got {self.lam}")
        if self.scheme not in SCHEMES:
            raise InputError(f"unknown scheme {self.scheme!r}, expected one of {SCHEMES}")

    def beta_for(self, dt):
        """EMA coefficient for a step of length ``dt``."""
        if self.beta is not None:
            return self.beta
        return self.tau / (self.tau + dt)


@dataclass
class StepRecord:
    """Per-step diagnostics; ``theta_after`` is kept only when requested."""

    t: float
    theta_after: np.ndarray | None
    residual_norm: float
    retained_rank: int
    sigma_max: float
    sigma_min_retained: float
    momentum_norm: float
    projected_momentum_norm: float


def _solve(J, f, spec, eps_rel, abs_tol, step_index=0):
    """Dispatch one regularized solve according to the solver spec.

    For the Tikhonov solver the retained basis (used only for the momentum
    projection and diagnostics) still comes from a truncated SVD of the same
    system at eps_rel, since the nullspace projector is defined by the
    spectrum, not by the regularizer; this costs a second factorization.
    """
    if spec.kind == "tsvd":
        return solve_min_norm(J, f, eps_rel, abs_tol)
    if spec.kind == "tikhonov":
        eta = solve_tikhonov(J, f, spec.gamma)
        base = solve_min_norm(J, f, eps_rel, abs_tol)
        return replace(base, eta_bar=eta)
    sketch = spec.sketch
    if step_index:
        # decorrelate per-step sketches while staying deterministic
        sketch = replace(sketch, seed=sketch.seed + step_index)
    return solve_min_norm_randomized(J, f, eps_rel, sketch, abs_tol)


def df_velocity(problem, model, theta, t, points, solver=None, eps_rel=1e-12,
                abs_tol=0.0):
    """Residual-minimizing parameter velocity at one state.

    Assembles the batch system and returns the selected solver's velocity
    together with the retained singular basis.
    """
    spec = solver if solver is not None else SolverSpec()
    J, f = assemble_system(problem, model, theta, t, points)
    return _solve(J, f, spec, eps_rel, abs_tol)


def _record(t, theta, res, m_new, m_perp, record_theta):
    sig_min = float(res.singulars[-1]) if res.retained_rank else 0.0
    return StepRecord(
        t=t,
        theta_after=theta.copy() if record_theta else None,
        residual_norm=0.0,  # filled by caller
        retained_rank=res.retained_rank,
        sigma_max=res.sigma_max,
        sigma_min_retained=sig_min,
        momentum_norm=float(np.linalg.norm(m_new)),
        projected_momentum_norm=float(np.linalg.norm(m_perp)),
    )


def dfo_euler_step(problem, model, theta, m, t, cfg, points, dt=None,
                   step_index=0, record_theta=True):
    """One semi-implicit Euler step of the (theta, m) system.

    Order of operations: assemble, solve, EMA update of m, projection of
    the updated m onto the complement of the retained basis, then the
    forward-Euler theta update ``theta + dt (eta + lam m_perp)``.
    """
    h = cfg.dt if dt is None else dt
    beta = cfg.beta_for(h)
    J, f = assemble_system(problem, model, theta, t, points)
    res = _solve(J, f, cfg.solver, cfg.eps_rel, cfg.abs_tol, step_index)
    m_new = beta * m + (1.0 - beta) * res.eta_bar
    m_perp = project_complement(res.basis, m_new)
    if cfg.lam == 0.0:
        theta_new = theta + h * res.eta_bar
    else:
        theta_new = theta + h * (res.eta_bar + cfg.lam * m_perp)
    rec = _record(t + h, theta_new, res, m_new, m_perp, record_theta)
    rec.residual_norm = float(np.linalg.norm(J @ res.eta_bar - f))
    return theta_new, m_new, rec


_RK4_STAGE_FRACTIONS = (0.0, 0.5, 0.5, 1.0)


def dfo_rk4_step(problem, model, theta, m, t, cfg, points, dt=None,
                 step_index=0, record_theta=True):
    """One RK4 macro step with the stage-coupled EMA history.

    Stage substeps are h1 = h4 = h and h2 = h3 = h/2. At stage s the solve
    yields (eta_s, V_s); the history absorbs the stage displacement
    ``h_s eta_s`` through the EMA, is projected onto the complement of V_s,
    and contributes ``lam m_perp / h_s`` to the stage direction. Collocation
    points are held fixed across the four stages. The record carries the
    first-stage solve diagnostics (the step's base point), the final history
    norm, and the first-stage projected-history norm.
    """
    h = cfg.dt if dt is None else dt
    beta = cfg.beta_for(h)
    stage_h = (h, 0.5 * h, 0.5 * h, h)
    theta_s = theta
    m_s = m
    ks = []
    first = None
    for s in range(4):
        if s > 0:
            theta_s = theta + (0.5 * h if s < 3 else h) * ks[s - 1]
        t_s = t + _RK4_STAGE_FRACTIONS[s] * h
        J, f = assemble_system(problem, model, theta_s, t_s, points)
        res = _solve(J, f, cfg.solver, cfg.eps_rel, cfg.abs_tol, step_index)
        delta = stage_h[s] * res.eta_bar
        m_s = beta * m_s + (1.0 - beta) * delta
        m_perp = project_complement(res.basis, m_s)
        if cfg.lam == 0.0:
            k_s = res.eta_bar
        else:
            k_s = res.eta_bar + cfg.lam * m_perp / stage_h[s]
        ks.append(k_s)
        if s == 0:
            first = (res, m_perp, float(np.linalg.norm(J @ res.eta_bar - f)))
    theta_new = theta + (h / 6.0) * (ks[0] + 2.0 * ks[1] + 2.0 * ks[2] + ks[3])
    res0, perp0, residual0 = first
    rec = _record(t + h, theta_new, res0, m_s, perp0, record_theta)
    rec.residual_norm = residual0
    return theta_new, m_s, rec


_STEPPERS = {"euler": dfo_euler_step, "rk4": dfo_rk4_step}


def integrate(problem, model, theta0, cfg, t_span, points_provider,
              observer=None, record_theta=True):
    """Advance (theta, m) over ``t_span = (t0, t1)`` with uniform steps.

    ``points_provider(step_index, t)`` supplies the collocation points for
    each macro step. A trailing remainder shorter than dt is integrated as
    a flagged partial step (with ``tau`` configurations the EMA coefficient
    is recomputed for its actual length). Momentum starts at zero. Returns
    the list of per-step records; ``observer(record)``, when given, is
    called after every step.

    Raises IntegrationError as soon as theta stops being finite.
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t1 < t0:
        raise InputError(f"t_span must satisfy t1 >= t0, got {t_span}")
    theta = np.asarray(theta0, dtype=float).copy()
    m = np.zeros_like(theta)
    step = _STEPPERS[cfg.scheme]
    span = t1 - t0
    n_full = int(np.floor(span / cfg.dt + 1e-9))
    remainder = span - n_full * cfg.dt
    if remainder < 1e-12 * max(cfg.dt, 1.0):
        remainder = 0.0
    records = []
    for k in range(n_full + (1 if remainder else 0)):
        t = t0 + k * cfg.dt
        h = cfg.dt if k < n_full else remainder
        if k == n_full:
            log.warning("final partial step of length %g (dt=%g)", h, cfg.dt)
        points = points_provider(k, t)
        theta, m, rec = step(
            problem, model, theta, m, t, cfg, points,
            dt=h, step_index=k, record_theta=record_theta,
        )
        if not np.all(np.isfinite(theta)):
            raise IntegrationError(
                f"non-finite parameters after step {k} (t={t + h})", step_index=k
            )
        records.append(rec)
        if observer is not None:
            observer(rec)
    return records
