"""Stochastic controlled evolution of the classical top and its measures.

Each trajectory draws its control/chaos coin flips from a private
counter-based stream keyed by (seed, trajectory id), so results do not
depend on how trajectories are grouped into blocks or distributed over
workers. Blocks of trajectories are evolved as vectorized numpy arrays.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .classical import (
    OUTSIDE_CHAOS,
    ControlParams,
    control_step_radial,
    control_step_spherical,
    in_region,
    kicked_top_step,
)
from .streams import AUX, COINS, substream

__all__ = [
    "StochasticRunConfig",
    "LyapunovConfig",
    "run_controlled_trajectory",
    "order_parameter_O2",
    "lyapunov_benettin",
    "density_dump",
    "o2_samples",
    "mu_samples",
    "extract_contours",
    "O2_CONTROLLED_THRESHOLD",
]

log = logging.getLogger(__name__)

# squared-displacement tolerance below which the run counts as controlled
O2_CONTROLLED_THRESHOLD = 0.01

VARIANT_SPHERICAL = "spherical"
VARIANT_RADIAL = "radial"


@dataclass(frozen=True)
class StochasticRunConfig:
    """One stochastic-control experiment on the classical top."""

    k: float
    ctrl: ControlParams
    p: float
    steps: int = 10_000
    burn_in: int | None = None  # default: half of steps
    n_traj: int = 10_000
    seed: int = 0
    stream_prefix: tuple = ()  # distinguishes streams between sweep grid points
    control_variant: str = VARIANT_SPHERICAL

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0):
            raise ValueError(f"p must be in [0, 1], got {self.p}")
        if self.burn_in is None:
            object.__setattr__(self, "burn_in", self.steps // 2)
        if not (0 <= self.burn_in < self.steps):
            raise ValueError("burn_in must satisfy 0 <= burn_in < steps")
        if self.n_traj < 1:
            raise ValueError("n_traj must be >= 1")
        if self.control_variant not in (VARIANT_SPHERICAL, VARIANT_RADIAL):
            raise ValueError(f"unknown control variant {self.control_variant!r}")


@dataclass(frozen=True)
class LyapunovConfig(StochasticRunConfig):
    """Benettin-estimator settings on top of a stochastic run."""

    d0: float = 1e-8
    tau: int = 10
    n_resets: int = 400

    def __post_init__(self):
        super().__post_init__()
        if self.d0 <= 0.0:
            raise ValueError("d0 must be positive")
        if self.tau < 1:
            raise ValueError("tau must be >= 1")


def _control_fn(cfg: StochasticRunConfig):
    return control_step_spherical if cfg.control_variant == VARIANT_SPHERICAL else control_step_radial


def _initial_points(cfg: StochasticRunConfig, normals: np.ndarray) -> np.ndarray:
    """Uniform points on the sphere from standard-normal triples."""
    return normals / np.linalg.norm(normals, axis=-1, keepdims=True)


def _step_block(r: np.ndarray, coins: np.ndarray, cfg: StochasticRunConfig) -> np.ndarray:
    """One mixed step for a block of trajectories (coins: shape (B,))."""
    ctrl = cfg.ctrl
    want_ctrl = coins < cfg.p
    eligible = want_ctrl & in_region(r, ctrl.region)
    # outside-region control draws fall back to identity or to the chaotic map
    chaos = ~want_ctrl
    if ctrl.outside_mode == OUTSIDE_CHAOS:
        chaos = chaos | (want_ctrl & ~eligible)
    out = r.copy()
    if np.any(chaos):
        out[chaos] = kicked_top_step(r[chaos], cfg.k)
    if np.any(eligible):
        out[eligible] = _control_fn(cfg)(r[eligible], ctrl)
    return out


def run_controlled_trajectory(cfg: StochasticRunConfig, traj_id: int) -> np.ndarray:
    """Full time series (steps+1, 3) of one realization.

    Deterministic in (cfg.seed, cfg.stream_prefix, traj_id); the stream
    yields three normals for the initial condition followed by one
    uniform coin per step.
    """
    rng = substream(cfg.seed, *cfg.stream_prefix, COINS, traj_id)
    r = _initial_points(cfg, rng.normal(size=3))
    coins = rng.random(cfg.steps)
    out = np.empty((cfg.steps + 1, 3))
    out[0] = r
    for t in range(cfg.steps):
        r = _step_block(r[None, :], coins[t : t + 1], cfg)[0]
        out[t + 1] = r
    return out


def o2_samples(cfg: StochasticRunConfig, traj_ids: np.ndarray | None = None) -> np.ndarray:
    """Per-trajectory time-averaged squared displacement from the target.

    Averages |r(t) - r0|^2 over the post-burn-in window of each
    trajectory; the sweep layer aggregates these into mean and variance.
    """
    ids = np.arange(cfg.n_traj) if traj_ids is None else np.asarray(traj_ids)
    B = len(ids)
    init = np.empty((B, 3))
    coins = np.empty((B, cfg.steps))
    for row, tid in enumerate(ids):
        rng = substream(cfg.seed, *cfg.stream_prefix, COINS, int(tid))
        init[row] = rng.normal(size=3)
        coins[row] = rng.random(cfg.steps)
    r = _initial_points(cfg, init)
    target = cfg.ctrl.target
    acc = np.zeros(B)
    n_avg = cfg.steps - cfg.burn_in
    for t in range(cfg.steps):
        r = _step_block(r, coins[:, t], cfg)
        if t >= cfg.burn_in:
            acc += np.sum((r - target) ** 2, axis=-1)
    return acc / n_avg


def order_parameter_O2(cfg: StochasticRunConfig) -> tuple[float, float]:
    """(mean, standard error) of O^2 over trajectories."""
    vals = o2_samples(cfg)
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(len(vals)))


# ---------------------------------------------------------------------------
# Benettin Lyapunov estimator
# ---------------------------------------------------------------------------

# below this chordal separation the companion direction is float noise;
# legitimate separations stay >= d0 * a^tau >> this for any sane config
_DEGENERATE_SEP = 1e-13


def _place_at_distance(r_a: np.ndarray, u: np.ndarray, d0: float) -> np.ndarray:
    """Companions at chordal distance d0 from r_a along tangent(s) u."""
    uhat = u / np.linalg.norm(u, axis=-1, keepdims=True)
    alpha = 2.0 * np.arcsin(0.5 * d0)
    return np.cos(alpha) * r_a + np.sin(alpha) * uhat


def _random_tangent(r_a: np.ndarray, rows, aux_rng_of) -> np.ndarray:
    out = np.empty((len(rows), 3))
    for i, row in enumerate(rows):
        v = aux_rng_of(row).normal(size=3)
        v -= np.dot(v, r_a[row]) * r_a[row]
        out[i] = v
    return out


def _geodesic_reset(r_a: np.ndarray, r_b: np.ndarray, d0: float, aux_rng_of) -> np.ndarray:
    """Place companions at chordal distance d0 from r_a toward r_b.

    Walks along the great circle through both points (slerp). Pairs that
    have collapsed onto each other (direction lost to round-off) get a
    random tangent direction from the trajectory's aux stream instead.
    """
    u = r_b - np.sum(r_b * r_a, axis=-1, keepdims=True) * r_a
    degenerate = np.linalg.norm(u, axis=-1) < _DEGENERATE_SEP
    if np.any(degenerate):
        rows = np.nonzero(degenerate)[0]
        log.warning("geodesic reset: %d degenerate companion(s) re-seeded randomly", len(rows))
        u[rows] = _random_tangent(r_a, rows, aux_rng_of)
    return _place_at_distance(r_a, u, d0)


def mu_samples(cfg: LyapunovConfig, traj_ids: np.ndarray | None = None) -> np.ndarray:
    """Per-trajectory Benettin Lyapunov estimates.

    A fiducial and a companion trajectory share the same control/chaos
    draws; every tau steps the log stretch ln(d_i/d0) is banked and the
    companion is reset along the geodesic. Estimate per trajectory:
    sum_i ln(d_i/d0) / (n_resets * tau).
    """
    ids = np.arange(cfg.n_traj) if traj_ids is None else np.asarray(traj_ids)
    B = len(ids)
    total_steps = cfg.burn_in + cfg.n_resets * cfg.tau
    init = np.empty((B, 3))
    coins = np.empty((B, total_steps))
    for row, tid in enumerate(ids):
        rng = substream(cfg.seed, *cfg.stream_prefix, COINS, int(tid))
        init[row] = rng.normal(size=3)
        coins[row] = rng.random(total_steps)

    def aux_rng_of(row):
        return substream(cfg.seed, *cfg.stream_prefix, AUX, int(ids[row]))

    r_a = _initial_points(cfg, init)
    for t in range(cfg.burn_in):
        r_a = _step_block(r_a, coins[:, t], cfg)
    # companion starts at distance d0 in a random tangent direction
    u0 = _random_tangent(r_a, np.arange(B), aux_rng_of)
    r_b = _place_at_distance(r_a, u0, cfg.d0)

    acc = np.zeros(B)
    t = cfg.burn_in
    for _ in range(cfg.n_resets):
        for _ in range(cfg.tau):
            r_a = _step_block(r_a, coins[:, t], cfg)
            r_b = _step_block(r_b, coins[:, t], cfg)
            t += 1
        d = np.linalg.norm(r_a - r_b, axis=-1)
        collapsed = d < 1e-300
        if np.any(collapsed):
            # contraction underflowed; count the segment at float-min distance
            log.warning("benettin: %d collapsed pair(s) clamped", int(np.count_nonzero(collapsed)))
            d = np.where(collapsed, 5e-324, d)
        acc += np.log(d / cfg.d0)
        r_b = _geodesic_reset(r_a, r_b, cfg.d0, aux_rng_of)
    return acc / (cfg.n_resets * cfg.tau)


def lyapunov_benettin(cfg: LyapunovConfig) -> tuple[float, float]:
    """(mean, standard error) of the Lyapunov exponent over trajectories."""
    vals = mu_samples(cfg)
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(len(vals)))


# ---------------------------------------------------------------------------
# phase-space density
# ---------------------------------------------------------------------------

def density_dump(
    cfg: StochasticRunConfig,
    n_theta: int = 60,
    n_phi: int = 120,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Normalized occupation histogram in the (theta, phi) plane.

    Accumulates all post-burn-in samples of all trajectories; returns
    (hist, theta_edges, phi_edges) with hist summing to 1.
    """
    theta_edges = np.linspace(0.0, np.pi, n_theta + 1)
    phi_edges = np.linspace(-np.pi, np.pi, n_phi + 1)
    hist = np.zeros((n_theta, n_phi))
    ids = np.arange(cfg.n_traj)
    init = np.empty((len(ids), 3))
    coins = np.empty((len(ids), cfg.steps))
    for row, tid in enumerate(ids):
        rng = substream(cfg.seed, *cfg.stream_prefix, COINS, int(tid))
        init[row] = rng.normal(size=3)
        coins[row] = rng.random(cfg.steps)
    r = _initial_points(cfg, init)
    for t in range(cfg.steps):
        r = _step_block(r, coins[:, t], cfg)
        if t >= cfg.burn_in:
            theta = np.arccos(np.clip(r[:, 2], -1.0, 1.0))
            phi = np.arctan2(r[:, 1], r[:, 0])
            h, _, _ = np.histogram2d(theta, phi, bins=(theta_edges, phi_edges))
            hist += h
    return hist / hist.sum(), theta_edges, phi_edges


# ---------------------------------------------------------------------------
# transition-line extraction
# ---------------------------------------------------------------------------

def extract_contours(
    p_values: np.ndarray,
    o2_means: np.ndarray,
    mu_means: np.ndarray | None = None,
    threshold: float = O2_CONTROLLED_THRESHOLD,
) -> dict:
    """Critical-p estimates from one column of a phase-diagram sweep.

    The O^2 line is the first downward crossing of ``threshold`` (linear
    interpolation in p); the Lyapunov line is the first sign change of
    mu. Missing crossings yield nan.
    """
    p = np.asarray(p_values, dtype=float)
    order = np.argsort(p)
    p = p[order]
    out: dict[str, float] = {}

    o2 = np.asarray(o2_means, dtype=float)[order]
    pc_o2 = np.nan
    for i in range(len(p) - 1):
        if o2[i] > threshold >= o2[i + 1]:
            frac = (o2[i] - threshold) / (o2[i] - o2[i + 1])
            pc_o2 = p[i] + frac * (p[i + 1] - p[i])
            break
    out["p_c_O2"] = float(pc_o2)

    if mu_means is not None:
        mu = np.asarray(mu_means, dtype=float)[order]
        pc_mu = np.nan
        for i in range(len(p) - 1):
            if mu[i] > 0.0 >= mu[i + 1]:
                pc_mu = p[i] + (p[i + 1] - p[i]) * mu[i] / (mu[i] - mu[i + 1])
                break
        out["p_c_mu"] = float(pc_mu)
    return out
