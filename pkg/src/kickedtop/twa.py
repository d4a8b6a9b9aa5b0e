"""Truncated-Wigner dynamics on the sphere.

An ensemble of phase points samples the initial Gaussian Wigner packet
of width 1/sqrt(2S) per tangent component around the target r0. Chaotic
steps push points through the exact classical map; control steps apply
the deterministic contraction toward r0 followed by a tangent-plane
Gaussian kick of per-component variance (1 - a^2)/(2S) and a
renormalization. No noise is attached to the chaotic step: the
attenuator form of the control channel is the only leading-1/S effect.

S enters purely as an inverse temperature-like scale and may be any
positive float (2^64 works: transverse displacements stay >= ~1e-10,
far above unit-vector round-off, so the tangent projection retains six
significant digits). The contraction-plus-noise step is applied on the
whole sphere even though its derivation is local to |r_perp| << 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classical import kicked_top_step, tangent_basis
from .streams import COINS, substream

__all__ = [
    "TWAEnsemble",
    "sample_initial_wigner",
    "twa_control_step",
    "twa_evolve",
    "twa_block",
    "twa_fidelity",
    "twa_s_perp2",
    "transverse_displacement",
]


@dataclass
class TWAEnsemble:
    """Phase-point cloud with its target frame."""

    points: np.ndarray  # (N, 3)
    S: float
    r0: np.ndarray
    t1: np.ndarray
    t2: np.ndarray

    def __post_init__(self):
        norms = np.linalg.norm(self.points, axis=-1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise ValueError("ensemble points must be unit vectors within 1e-12")


def transverse_displacement(points: np.ndarray, r0: np.ndarray) -> np.ndarray:
    """Component of each point orthogonal to r0, u = r - (r.r0) r0.

    Computed from the projection vector, never from 1 - (r.r0)^2, so the
    squared magnitude survives down to the 1e-20 scale needed at
    S = 2^64.
    """
    rpar = points @ r0
    return points - rpar[:, None] * r0[None, :]


def sample_initial_wigner(
    S: float, r0: np.ndarray, N: int, rng: np.random.Generator
) -> TWAEnsemble:
    """Draw N points from the coherent-state Wigner packet at r0.

    Tangent displacements are i.i.d. Gaussian with variance 1/(2S) per
    component; points are pushed back onto the sphere.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    t1, t2 = tangent_basis(r0)
    xi = rng.normal(size=(N, 2)) * np.sqrt(1.0 / (2.0 * S))
    pts = r0[None, :] + xi[:, :1] * t1[None, :] + xi[:, 1:] * t2[None, :]
    pts /= np.linalg.norm(pts, axis=-1, keepdims=True)
    return TWAEnsemble(points=pts, S=float(S), r0=np.asarray(r0, float), t1=t1, t2=t2)


def _control_batch(
    pts: np.ndarray,
    theta: float,
    S: float,
    r0: np.ndarray,
    t1: np.ndarray,
    t2: np.ndarray,
    normals: np.ndarray,
) -> np.ndarray:
    a = np.cos(0.5 * theta)
    v = a * pts + (1.0 - a) * r0[None, :]
    v /= np.linalg.norm(v, axis=-1, keepdims=True)
    sig = np.sqrt((1.0 - a * a) / (2.0 * S))
    v = v + sig * (normals[:, :1] * t1[None, :] + normals[:, 1:] * t2[None, :])
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def twa_control_step(
    point: np.ndarray, theta: float, S: float, r0: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Noisy control update of a single point."""
    t1, t2 = tangent_basis(r0)
    return _control_batch(point[None, :], theta, S, r0, t1, t2, rng.normal(size=(1, 2)))[0]


def twa_evolve(
    ensemble: TWAEnsemble,
    p: float,
    k: float,
    theta: float,
    steps: int,
    *,
    seed: int,
    stream_prefix: tuple = (),
    avg_window: int = 0,
    chunk: int = 4096,
) -> dict:
    """Evolve the ensemble; returns final points and window-averaged
    estimators.

    Each point owns the stream (seed, *stream_prefix, COINS, point_id),
    yielding one coin and one normal pair per step (drawn in time
    chunks). With ``avg_window`` = W > 0 the fidelity and transverse
    moments are averaged over the trailing W steps, implementing the
    late-time average; otherwise only the final-step values are
    reported.
    """
    pts = ensemble.points.copy()
    N = len(pts)
    S, r0, t1, t2 = ensemble.S, ensemble.r0, ensemble.t1, ensemble.t2
    rngs = [substream(seed, *stream_prefix, COINS, i) for i in range(N)]
    win = avg_window if avg_window > 0 else 1
    acc_f = np.zeros(N)
    acc_s2 = np.zeros(N)
    n_acc = 0
    done = 0
    while done < steps:
        span = min(chunk, steps - done)
        coins = np.empty((N, span))
        kicks = np.empty((N, span, 2))
        for i, g in enumerate(rngs):
            coins[i] = g.random(span)
            kicks[i] = g.normal(size=(span, 2))
        for s in range(span):
            t = done + s + 1
            ctrl = coins[:, s] < p
            if np.any(~ctrl):
                stepped = kicked_top_step(pts[~ctrl], k)
                pts[~ctrl] = stepped / np.linalg.norm(stepped, axis=-1, keepdims=True)
            if np.any(ctrl):
                pts[ctrl] = _control_batch(pts[ctrl], theta, S, r0, t1, t2, kicks[ctrl, s])
            if t > steps - win:
                u = transverse_displacement(pts, r0)
                rp2 = np.sum(u * u, axis=-1)
                acc_f += 2.0 * np.exp(-S * rp2)
                acc_s2 += rp2
                n_acc += 1
        done += span
    f_samples = acc_f / n_acc
    s2_samples = acc_s2 / n_acc
    return {
        "points": pts,
        "fidelity": float(f_samples.mean()),
        "s_perp2": float(s2_samples.mean()),
        "fidelity_samples": f_samples,
        "s_perp2_samples": s2_samples,
    }


def twa_block(
    S: float,
    r0: np.ndarray,
    k: float,
    theta: float,
    p: float,
    steps: int,
    *,
    seed: int,
    point_ids,
    stream_prefix: tuple = (),
    avg_window: int = 0,
    chunk: int = 4096,
) -> dict:
    """Sweep-facing evolution of a block of ensemble points.

    Point ``i`` draws everything (two initial normals, then one coin and
    one normal pair per step) from its own stream, so sweep output is
    independent of how points are grouped into blocks and workers.
    """
    ids = [int(i) for i in point_ids]
    N = len(ids)
    t1, t2 = tangent_basis(r0)
    rngs = [substream(seed, *stream_prefix, COINS, i) for i in ids]
    xi = np.stack([g.normal(size=2) for g in rngs]) * np.sqrt(1.0 / (2.0 * S))
    pts = r0[None, :] + xi[:, :1] * t1[None, :] + xi[:, 1:] * t2[None, :]
    pts /= np.linalg.norm(pts, axis=-1, keepdims=True)
    win = avg_window if avg_window > 0 else 1
    acc_f = np.zeros(N)
    acc_s2 = np.zeros(N)
    n_acc = 0
    done = 0
    while done < steps:
        span = min(chunk, steps - done)
        coins = np.empty((N, span))
        kicks = np.empty((N, span, 2))
        for i, g in enumerate(rngs):
            coins[i] = g.random(span)
            kicks[i] = g.normal(size=(span, 2))
        for s in range(span):
            t = done + s + 1
            ctrl = coins[:, s] < p
            if np.any(~ctrl):
                stepped = kicked_top_step(pts[~ctrl], k)
                pts[~ctrl] = stepped / np.linalg.norm(stepped, axis=-1, keepdims=True)
            if np.any(ctrl):
                pts[ctrl] = _control_batch(pts[ctrl], theta, S, r0, t1, t2, kicks[ctrl, s])
            if t > steps - win:
                u = transverse_displacement(pts, r0)
                rp2 = np.sum(u * u, axis=-1)
                acc_f += 2.0 * np.exp(-S * rp2)
                acc_s2 += rp2
                n_acc += 1
        done += span
    return {
        "points": pts,
        "fidelity_samples": acc_f / n_acc,
        "s_perp2_samples": acc_s2 / n_acc,
    }


def twa_fidelity(ensemble: TWAEnsemble) -> float:
    """Semiclassical overlap with the target packet: mean of
    2 exp(-S r_perp^2) over the ensemble."""
    u = transverse_displacement(ensemble.points, ensemble.r0)
    return float(np.mean(2.0 * np.exp(-ensemble.S * np.sum(u * u, axis=-1))))


def twa_s_perp2(ensemble: TWAEnsemble) -> float:
    """Ensemble mean of the squared transverse displacement."""
    u = transverse_displacement(ensemble.points, ensemble.r0)
    return float(np.mean(np.sum(u * u, axis=-1)))
