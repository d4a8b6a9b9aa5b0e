"""Sweep orchestration: configuration, parallel execution, persistence.

A sweep is a cartesian parameter grid handed to one engine. Work is cut
into (grid point, trajectory block) tasks; every task derives all of
its randomness from (seed, hash of the grid-point values, trajectory
id), so the merged table is byte-identical for any worker count and
stays stable when a grid is later extended. All numeric kernels run
under a single BLAS thread; parallelism comes from worker processes
only, which keeps floating-point reductions identical across layouts.

Output format: ``table.csv`` with the fixed header

    engine,S,k,theta,a,p,t,observable,mean,variance,n_samples,seed

(one observable per row, sample variance with ddof=1) plus a
``meta.json`` sidecar carrying the full configuration echo, seed, code
version, wall time, and a partial flag. Phase-space histograms use a
separate (theta_bin, phi_bin, count) layout.
"""

from __future__ import annotations

import hashlib
import json
import math
import multiprocessing as mp
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import tomli
from threadpoolctl import threadpool_limits

from . import __version__
from .classical import (
    ControlParams,
    angle_from_contraction,
    contraction_from_angle,
    critical_probability,
    find_fixed_point,
    lyapunov_linearized,
    moment_threshold,
)
from .experiments import (
    LyapunovConfig,
    StochasticRunConfig,
    density_dump,
    extract_contours,
    mu_samples,
    o2_samples,
)
from .observables import (
    batch_bipartite_entropy,
    batch_displacement_R2,
    batch_fidelity,
    batch_transverse_fluctuations,
    evolve_ancilla_trajectory,
    dicke_encoding_pair,
    fullreset_analytics,
    haar_encoding_pair,
)
from .quantum import ControlChannel, build_rotated_frame, evolve_block, spin_dimension, target_state
from .twa import twa_block

__all__ = [
    "CSV_HEADER",
    "ConfigError",
    "ExperimentConfig",
    "SweepTable",
    "load_config",
    "run_experiment",
    "resume_or_extend",
    "write_outputs",
    "parse_values",
]

CSV_HEADER = "engine,S,k,theta,a,p,t,observable,mean,variance,n_samples,seed"

ENGINES = (
    "analytics",
    "classical",
    "classical-lyapunov",
    "classical-density",
    "quantum",
    "quantum-ancilla",
    "twa",
)

_SPIN_ENGINES = ("quantum", "quantum-ancilla", "twa")

WORKERS_ENV = "KICKEDTOP_WORKERS"

# engine-specific run options and their defaults (None: derived later)
_RUN_DEFAULTS: dict[str, dict] = {
    "analytics": {"moments": [1, 2]},
    "classical": {
        "steps": 10_000,
        "burn_in": None,
        "n_traj": 10_000,
        "control_variant": "spherical",
        "region": "hemisphere_x_positive",
        "outside_mode": "chaos",
        "with_mu": True,
        "d0": 1e-8,
        "tau": 10,
        "n_resets": None,
    },
    "classical-lyapunov": {
        "steps": None,
        "burn_in": 200,
        "n_traj": 1000,
        "control_variant": "spherical",
        "region": "hemisphere_x_positive",
        "outside_mode": "chaos",
        "d0": 1e-8,
        "tau": 10,
        "n_resets": 400,
    },
    "classical-density": {
        "steps": 1000,
        "burn_in": None,
        "n_traj": 50,
        "control_variant": "spherical",
        "region": "hemisphere_x_positive",
        "outside_mode": "chaos",
        "n_theta": 60,
        "n_phi": 120,
    },
    "quantum": {
        "n_traj": 500,
        "steps": None,          # default: min(S, 256) per grid point
        "t_eval": None,         # default: [steps]
        "avg_window": 0,
        "observables": ["F", "R2", "s_perp2", "S_bip"],
    },
    "quantum-ancilla": {
        "n_traj": 10_000,
        "steps": None,          # default: S
        "t_eval": None,         # default: [log2(S), S]
        "encoding": "haar",
    },
    "twa": {
        "n_traj": 100,
        "steps": 20_000,
        "avg_window": 10_000,
    },
}


class ConfigError(ValueError):
    """Invalid experiment configuration; message names the field."""


@dataclass(frozen=True)
class ExperimentConfig:
    engine: str
    seed: int
    grid: dict
    run: dict
    out: str | None = None
    workers: int = 1
    block_size: int = 256

    def to_dict(self) -> dict:
        return {
            "engine": self.engine,
            "seed": self.seed,
            "grid": {k: list(v) for k, v in self.grid.items()},
            "run": dict(self.run),
            "block_size": self.block_size,
        }


@dataclass
class SweepTable:
    """Tidy result rows plus the exact CSV serialization."""

    header: str
    records: list[dict]
    lines: list[str]  # formatted rows, one per record (resume appends verbatim)
    meta: dict = field(default_factory=dict)

    def csv_text(self) -> str:
        return "\n".join([self.header, *self.lines]) + "\n"

    def select(self, **conditions) -> list[dict]:
        out = []
        for rec in self.records:
            if all(rec.get(k) == v for k, v in conditions.items()):
                out.append(rec)
        return out


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return repr(int(v))
    return repr(float(v))


def _format_row(rec: dict) -> str:
    cols = ["engine", "S", "k", "theta", "a", "p", "t", "observable",
            "mean", "variance", "n_samples", "seed"]
    return ",".join(_fmt(rec.get(c)) for c in cols)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def parse_values(text: str) -> list[float]:
    """Grid values from 'v1,v2,...' or 'start:stop:step' (stop inclusive
    within half a step)."""
    text = text.strip()
    if ":" in text:
        parts = [float(x) for x in text.split(":")]
        if len(parts) != 3:
            raise ConfigError(f"range syntax is start:stop:step, got {text!r}")
        start, stop, step = parts
        n = int(math.floor((stop - start) / step + 0.5)) + 1
        return [start + i * step for i in range(max(n, 0))]
    return [float(x) for x in text.split(",") if x.strip()]


def load_config(path: str | Path) -> dict:
    """Raw nested dict from a TOML experiment file."""
    with open(path, "rb") as fh:
        try:
            return tomli.load(fh)
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"config file {path}: {exc}") from exc


def build_config(raw: dict, overrides: dict | None = None) -> ExperimentConfig:
    """Validated ExperimentConfig from a raw dict plus CLI overrides."""
    exp = dict(raw.get("experiment", {}))
    grid = dict(raw.get("grid", {}))
    run = dict(raw.get("run", {}))
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key in ("engine", "seed", "out", "workers", "block_size"):
            exp[key] = val
        elif key in ("k", "a", "theta", "p", "S"):
            grid[key] = val
        else:
            run[key] = val

    engine = exp.get("engine")
    if engine not in ENGINES:
        raise ConfigError(f"experiment.engine must be one of {ENGINES}, got {engine!r}")
    if "seed" not in exp:
        raise ConfigError("experiment.seed is required")
    try:
        seed = int(exp["seed"])
    except (TypeError, ValueError):
        raise ConfigError(f"experiment.seed must be an integer, got {exp['seed']!r}")

    workers = exp.get("workers")
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    workers = max(1, int(workers))
    block_size = max(1, int(exp.get("block_size", 256)))

    # grid axes
    def axis(name):
        vals = grid.get(name)
        if vals is None:
            return None
        if not isinstance(vals, (list, tuple)) or len(vals) == 0:
            raise ConfigError(f"grid.{name} must be a nonempty list")
        return [float(v) for v in vals]

    k_vals = axis("k")
    a_vals = axis("a")
    theta_vals = axis("theta")
    p_vals = axis("p")
    s_vals = axis("S")

    if a_vals is not None and theta_vals is not None:
        raise ConfigError("grid.a and grid.theta are mutually exclusive (a = cos(theta/2))")
    if a_vals is None and theta_vals is None:
        raise ConfigError("one of grid.a or grid.theta is required")
    if theta_vals is None:
        for a in a_vals:
            if not (0.0 < a <= 1.0):
                raise ConfigError(f"grid.a values must be in (0, 1], got {a}")
        theta_vals = [angle_from_contraction(a) for a in a_vals]
    else:
        for th in theta_vals:
            if not (0.0 <= th <= np.pi):
                raise ConfigError(f"grid.theta values must be in [0, pi], got {th}")
        a_vals = [contraction_from_angle(th) for th in theta_vals]
    if k_vals is None:
        raise ConfigError("grid.k is required")
    for kk in k_vals:
        if kk <= 0:
            raise ConfigError(f"grid.k values must be positive, got {kk}")
    if engine != "analytics" and p_vals is None:  # p is optional for analytics
        raise ConfigError("grid.p is required")
    if p_vals is not None:
        for p in p_vals:
            if not (0.0 <= p <= 1.0):
                raise ConfigError(f"grid.p values must be in [0, 1], got {p}")
    if engine in _SPIN_ENGINES:
        if s_vals is None:
            raise ConfigError(f"grid.S is required for engine {engine}")
        for s in s_vals:
            if s <= 0:
                raise ConfigError(f"grid.S values must be positive, got {s}")
            if engine != "twa":
                spin_dimension(s)  # integrality check
    elif s_vals is not None:
        raise ConfigError(f"grid.S is not accepted by engine {engine}")

    # theta and a are parallel axes describing the same control strengths
    norm_grid = {"k": k_vals, "theta": theta_vals, "a": a_vals}
    if p_vals is not None:
        norm_grid["p"] = p_vals
    if s_vals is not None:
        norm_grid["S"] = s_vals

    defaults = dict(_RUN_DEFAULTS[engine])
    unknown = set(run) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown run option(s) for engine {engine}: {sorted(unknown)}")
    merged_run = defaults | run

    return ExperimentConfig(
        engine=engine,
        seed=seed,
        grid=norm_grid,
        run=merged_run,
        out=exp.get("out"),
        workers=workers,
        block_size=block_size,
    )


# ---------------------------------------------------------------------------
# grid enumeration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridPoint:
    S: float | None
    k: float
    theta: float
    a: float
    p: float | None

    def canonical(self) -> str:
        return f"S={self.S!r};k={self.k!r};theta={self.theta!r};a={self.a!r};p={self.p!r}"

    def stream_prefix(self) -> tuple[int, int]:
        digest = hashlib.sha256(self.canonical().encode()).digest()
        return (
            int.from_bytes(digest[:4], "big"),
            int.from_bytes(digest[4:8], "big"),
        )


def expand_grid(cfg: ExperimentConfig) -> list[GridPoint]:
    s_axis = cfg.grid.get("S", [None])
    p_axis = cfg.grid.get("p", [None])
    ctrl_axis = list(zip(cfg.grid["theta"], cfg.grid["a"]))
    pts = []
    for s in s_axis:
        for k in cfg.grid["k"]:
            for theta, a in ctrl_axis:
                for p in p_axis:
                    pts.append(GridPoint(S=s, k=k, theta=theta, a=a, p=p))
    return pts


# ---------------------------------------------------------------------------
# per-engine task execution
# ---------------------------------------------------------------------------

_QUANTUM_CACHE: dict = {}


def _quantum_setup(S: float, k: float, theta: float):
    key = (S, k, theta)
    if key not in _QUANTUM_CACHE:
        frame = build_rotated_frame(S, k)
        channel = ControlChannel(S=S, theta=theta)
        _QUANTUM_CACHE[key] = (frame, channel)
    return _QUANTUM_CACHE[key]


def _classical_run_config(cfg: ExperimentConfig, pt: GridPoint) -> StochasticRunConfig:
    run = cfg.run
    fp = find_fixed_point(pt.k)
    ctrl = ControlParams(
        a=pt.a,
        target=fp.r0,
        region=run["region"],
        outside_mode=run["outside_mode"],
    )
    steps = run["steps"]
    burn_in = run["burn_in"] if run["burn_in"] is not None else steps // 2
    return StochasticRunConfig(
        k=pt.k,
        ctrl=ctrl,
        p=pt.p,
        steps=steps,
        burn_in=burn_in,
        n_traj=run["n_traj"],
        seed=cfg.seed,
        stream_prefix=pt.stream_prefix(),
        control_variant=run["control_variant"],
    )


def _lyapunov_config(cfg: ExperimentConfig, pt: GridPoint) -> LyapunovConfig:
    run = cfg.run
    fp = find_fixed_point(pt.k)
    ctrl = ControlParams(
        a=pt.a, target=fp.r0, region=run["region"], outside_mode=run["outside_mode"]
    )
    tau = run["tau"]
    steps, burn_in, n_resets = run.get("steps"), run.get("burn_in"), run.get("n_resets")
    if steps is not None:
        if burn_in is None:
            burn_in = steps // 2
        if n_resets is None:
            n_resets = max(1, (steps - burn_in) // tau)
    else:
        if burn_in is None:
            burn_in = 200
        if n_resets is None:
            n_resets = 400
    total = burn_in + n_resets * tau
    return LyapunovConfig(
        k=pt.k,
        ctrl=ctrl,
        p=pt.p,
        steps=total,
        burn_in=burn_in,
        n_traj=run["n_traj"],
        seed=cfg.seed,
        stream_prefix=pt.stream_prefix(),
        control_variant=run["control_variant"],
        d0=run["d0"],
        tau=tau,
        n_resets=n_resets,
    )


def _quantum_times(cfg: ExperimentConfig, pt: GridPoint) -> tuple[int, list[int]]:
    run = cfg.run
    steps = run.get("steps")
    if steps is None:
        steps = int(min(pt.S, 256))
    if cfg.engine == "quantum-ancilla":
        t_eval = run.get("t_eval")
        if t_eval is None:
            t_eval = [int(round(np.log2(pt.S))), int(pt.S)]
    else:
        t_eval = run.get("t_eval") or [steps]
    t_eval = sorted({int(t) for t in t_eval})
    if any(t < 1 or t > steps for t in t_eval):
        raise ConfigError(f"run.t_eval entries must lie in [1, steps={steps}]")
    return int(steps), t_eval


def run_task(cfg: ExperimentConfig, pt: GridPoint, ids: np.ndarray) -> dict:
    """Compute one (grid point, trajectory block) task.

    Returns {(observable, t): per-trajectory values}. Executed under a
    single BLAS thread so results do not depend on the process layout.
    """
    with threadpool_limits(limits=1):
        return _run_task_inner(cfg, pt, ids)


def _run_task_inner(cfg: ExperimentConfig, pt: GridPoint, ids: np.ndarray) -> dict:
    engine = cfg.engine
    run = cfg.run

    if engine == "analytics":
        return {"rows": _analytics_rows(cfg, pt)}

    if engine == "classical":
        rc = _classical_run_config(cfg, pt)
        payload = {("O2", rc.steps): o2_samples(rc, ids)}
        if run["with_mu"]:
            lc = _lyapunov_config(cfg, pt)
            payload[("mu", lc.burn_in + lc.n_resets * lc.tau)] = mu_samples(lc, ids)
        return payload

    if engine == "classical-lyapunov":
        lc = _lyapunov_config(cfg, pt)
        return {("mu", lc.burn_in + lc.n_resets * lc.tau): mu_samples(lc, ids)}

    if engine == "classical-density":
        rc = _classical_run_config(cfg, pt)
        hist, te, pe = density_dump(rc, n_theta=run["n_theta"], n_phi=run["n_phi"])
        return {"histogram": (hist, te, pe)}

    if engine == "quantum":
        frame, channel = _quantum_setup(pt.S, pt.k, pt.theta)
        steps, t_eval = _quantum_times(cfg, pt)
        names = list(run["observables"])
        window = int(run["avg_window"])
        S = pt.S
        fns = {
            "F": batch_fidelity,
            "R2": lambda Psi: batch_displacement_R2(Psi, S),
            "s_perp2": lambda Psi: batch_transverse_fluctuations(Psi, S),
            "S_bip": lambda Psi: batch_bipartite_entropy(Psi, S),
        }
        bad = [n for n in names if n not in fns]
        if bad:
            raise ConfigError(f"unknown quantum observable(s): {bad}")
        B = len(ids)
        point_vals = {(n, t): np.zeros(B) for n in names for t in t_eval}
        win_acc = {n: np.zeros(B) for n in names if n != "S_bip" and window > 0}

        def record(t, Psi):
            for n in names:
                if (n, t) in point_vals:
                    point_vals[(n, t)] = fns[n](Psi)
                if n in win_acc and t > steps - window:
                    win_acc[n] += fns[n](Psi)

        evolve_block(
            target_state(pt.S), frame.U_rot, channel, pt.p, steps, ids,
            seed=cfg.seed, stream_prefix=pt.stream_prefix(), record=record,
        )
        payload = dict(point_vals)
        for n, acc in win_acc.items():
            payload[(n, steps)] = acc / window
        return payload

    if engine == "quantum-ancilla":
        frame, channel = _quantum_setup(pt.S, pt.k, pt.theta)
        steps, t_eval = _quantum_times(cfg, pt)
        dim = spin_dimension(pt.S)
        if run["encoding"] not in ("haar", "dicke"):
            raise ConfigError(f"unknown run.encoding {run['encoding']!r}")
        # haar: fresh pair per trajectory, averaging the probe over encodings
        fixed_pair = dicke_encoding_pair(dim) if run["encoding"] == "dicke" else None
        vals = np.empty((len(ids), len(t_eval)))
        for row, tid in enumerate(ids):
            pair = fixed_pair
            if pair is None:
                pair = haar_encoding_pair(dim, cfg.seed, (*pt.stream_prefix(), int(tid)))
            vals[row] = evolve_ancilla_trajectory(
                pair, frame.U_rot, channel, pt.p, steps,
                seed=cfg.seed, traj_id=int(tid),
                stream_prefix=pt.stream_prefix(), schedule=t_eval,
            )
        return {("S_anc", t): vals[:, j].copy() for j, t in enumerate(t_eval)}

    if engine == "twa":
        fp = find_fixed_point(pt.k)
        res = twa_block(
            pt.S, fp.r0, pt.k, pt.theta, pt.p, run["steps"],
            seed=cfg.seed, point_ids=ids, stream_prefix=pt.stream_prefix(),
            avg_window=run["avg_window"],
        )
        t = run["steps"]
        return {("F", t): res["fidelity_samples"], ("s_perp2", t): res["s_perp2_samples"]}

    raise ConfigError(f"unknown engine {engine!r}")


def _analytics_rows(cfg: ExperimentConfig, pt: GridPoint) -> list[tuple[str, float]]:
    fp = find_fixed_point(pt.k)
    rows = [
        ("x0", fp.x0),
        ("y0", float(fp.r0[1])),
        ("z0", float(fp.r0[2])),
        ("h", fp.h),
        ("abs_lambda", fp.abs_lambda),
    ]
    a = pt.a
    if 0.0 < a < 1.0:
        rows.append(("p_c", critical_probability(pt.k, a)))
        for n in cfg.run["moments"]:
            rows.append((f"p_star_{n:g}", moment_threshold(pt.k, a, n)))
    if pt.p is not None:
        rows.append(("mu_linearized", lyapunov_linearized(pt.k, a, pt.p)))
        if 0.0 < pt.p <= 1.0:
            fr = fullreset_analytics(pt.k, pt.p)
            rows += [
                ("fullreset_E_Sbip", fr.E_S),
                ("fullreset_E_Sbip2", fr.E_S2),
                ("fullreset_binder", fr.binder),
                ("fullreset_E_Sbip_asymptotic", fr.E_S_asymptotic),
                ("fullreset_binder_asymptotic", fr.binder_asymptotic),
            ]
    return rows


# ---------------------------------------------------------------------------
# sweep driver
# ---------------------------------------------------------------------------

_WORKER_CFG: ExperimentConfig | None = None


def _pool_init(cfg):
    global _WORKER_CFG
    _WORKER_CFG = cfg


def _pool_task(args):
    gid, pt, ids = args
    return gid, ids[0], run_task(_WORKER_CFG, pt, np.asarray(ids))


def _blocks(n: int, block: int):
    for lo in range(0, n, block):
        yield np.arange(lo, min(lo + block, n))


def _observable_order(names) -> list:
    # fixed presentation order: grid enumeration, then observable name,
    # then evaluation time
    return sorted(names, key=lambda key: (key[0], key[1]))


def _merge_point(cfg: ExperimentConfig, pt: GridPoint, payloads: list[dict]) -> list[dict]:
    """Combine the block payloads of one grid point into CSV records."""
    if cfg.engine == "analytics":
        rows = payloads[0]["rows"]
        return [
            _record(cfg, pt, obs, t=None, mean=val, variance=0.0, n=1)
            for obs, val in rows
        ]
    merged: dict = {}
    for key in payloads[0]:
        parts = [pl[key] for pl in payloads]
        merged[key] = np.concatenate(parts)
    records = []
    for obs, t in _observable_order(merged.keys()):
        vals = merged[(obs, t)]
        var = float(vals.var(ddof=1)) if len(vals) > 1 else 0.0
        records.append(
            _record(cfg, pt, obs, t=t, mean=float(vals.mean()), variance=var, n=len(vals))
        )
        if obs == "S_bip" and len(vals) > 1:
            # Binder ratio persisted so downstream consumers never derive it
            m = float(vals.mean())
            b = float(np.mean(vals**2) / m**2) if abs(m) > 1e-12 else float("nan")
            records.append(
                _record(cfg, pt, "S_bip_binder", t=t, mean=b, variance=0.0, n=len(vals))
            )
    return records


def _record(cfg, pt, obs, *, t, mean, variance, n, p_override="use_point") -> dict:
    return {
        "engine": cfg.engine,
        "S": pt.S,
        "k": pt.k,
        "theta": pt.theta,
        "a": pt.a,
        "p": pt.p if p_override == "use_point" else p_override,
        "t": t,
        "observable": obs,
        "mean": mean,
        "variance": variance,
        "n_samples": n,
        "seed": cfg.seed,
    }


def _contour_records(cfg: ExperimentConfig, records: list[dict]) -> list[dict]:
    """p_c estimates per (k, theta) column of a classical sweep."""
    if cfg.engine not in ("classical", "classical-lyapunov"):
        return []
    p_axis = cfg.grid.get("p") or []
    if len(p_axis) < 2:
        return []
    out = []
    for k in cfg.grid["k"]:
        for theta, a in zip(cfg.grid["theta"], cfg.grid["a"]):
            col = [r for r in records if r["k"] == k and r["theta"] == theta]
            o2 = {r["p"]: r["mean"] for r in col if r["observable"] == "O2"}
            mu = {r["p"]: r["mean"] for r in col if r["observable"] == "mu"}
            ps = sorted(o2 or mu)
            if len(ps) < 2:
                continue
            contours = extract_contours(
                np.array(ps),
                np.array([o2.get(p, np.nan) for p in ps]) if o2 else np.full(len(ps), np.nan),
                np.array([mu.get(p, np.nan) for p in ps]) if mu else None,
            )
            pt = GridPoint(S=None, k=k, theta=theta, a=a, p=None)
            for name, val in contours.items():
                if not math.isnan(val):
                    out.append(
                        _record(cfg, pt, name, t=None, mean=val, variance=0.0,
                                n=len(ps), p_override=None)
                    )
    return out


def _run_points(cfg: ExperimentConfig, points: list[GridPoint], *,
                contours: bool) -> tuple[list[dict], bool]:
    """Execute the tasks of the given grid points; returns (records, partial)."""
    if cfg.engine == "analytics":
        n_units = {gid: 1 for gid in range(len(points))}
        tasks = [(gid, pt, np.array([0])) for gid, pt in enumerate(points)]
    else:
        n_traj = int(cfg.run["n_traj"])
        tasks = []
        n_units = {}
        for gid, pt in enumerate(points):
            blocks = list(_blocks(n_traj, cfg.block_size))
            n_units[gid] = len(blocks)
            for ids in blocks:
                tasks.append((gid, pt, ids))

    if cfg.engine in ("quantum", "quantum-ancilla") and cfg.workers > 1:
        # build the dense unitaries once in the parent; forked workers
        # share them copy-on-write
        with threadpool_limits(limits=1):
            for pt in points:
                _quantum_setup(pt.S, pt.k, pt.theta)

    results: dict[tuple[int, int], dict] = {}
    partial = False
    try:
        if cfg.workers > 1:
            ctx = mp.get_context("fork")
            with ctx.Pool(cfg.workers, initializer=_pool_init, initargs=(cfg,)) as pool:
                for gid, lo, payload in pool.imap_unordered(_pool_task, tasks, chunksize=1):
                    results[(gid, lo)] = payload
        else:
            for gid, pt, ids in tasks:
                results[(gid, int(ids[0]))] = run_task(cfg, pt, ids)
    except KeyboardInterrupt:
        partial = True

    records: list[dict] = []
    for gid, pt in enumerate(points):
        got = sorted(lo for g, lo in results if g == gid)
        payloads = [results[(gid, lo)] for lo in got]
        if len(payloads) != n_units[gid]:
            continue  # incomplete grid point (interrupted)
        records.extend(_merge_point(cfg, pt, payloads))
    if contours:
        records.extend(_contour_records(cfg, records))
    return records, partial


def run_experiment(cfg: ExperimentConfig, *, write: bool = True) -> SweepTable:
    """Execute the sweep and (optionally) persist CSV + JSON sidecar.

    Interruption flushes the grid points completed so far and marks the
    sidecar ``partial``.
    """
    t_start = time.time()
    points = expand_grid(cfg)
    if cfg.engine == "classical-density":
        return _run_density(cfg, points, t_start, write)

    records, partial = _run_points(cfg, points, contours=True)

    table = SweepTable(
        header=CSV_HEADER,
        records=records,
        lines=[_format_row(r) for r in records],
        meta={
            "engine": cfg.engine,
            "seed": cfg.seed,
            "code_version": __version__,
            "config": cfg.to_dict(),
            "schema": CSV_HEADER,
            "grid_points": len(points),
            "rows": len(records),
            "wall_time_s": round(time.time() - t_start, 3),
            "partial": partial,
        },
    )
    if write and cfg.out:
        write_outputs(table, cfg.out)
    return table


def _run_density(cfg, points, t_start, write) -> SweepTable:
    lines = ["k,theta,a,p,theta_bin,phi_bin,count"]
    records = []
    for pt in points:
        payload = run_task(cfg, pt, np.array([0]))
        hist, te, pe = payload["histogram"]
        for i in range(hist.shape[0]):
            for j in range(hist.shape[1]):
                if hist[i, j] == 0.0:
                    continue
                rec = {"k": pt.k, "theta": pt.theta, "a": pt.a, "p": pt.p,
                       "theta_bin": 0.5 * (te[i] + te[i + 1]),
                       "phi_bin": 0.5 * (pe[j] + pe[j + 1]),
                       "count": hist[i, j]}
                records.append(rec)
                lines.append(",".join(_fmt(rec[c]) for c in
                                      ("k", "theta", "a", "p", "theta_bin", "phi_bin", "count")))
    table = SweepTable(
        header=lines[0],
        records=records,
        lines=lines[1:],
        meta={
            "engine": cfg.engine,
            "seed": cfg.seed,
            "code_version": __version__,
            "config": cfg.to_dict(),
            "schema": lines[0],
            "grid_points": len(points),
            "rows": len(records),
            "wall_time_s": round(time.time() - t_start, 3),
            "partial": False,
        },
    )
    if write and cfg.out:
        write_outputs(table, cfg.out)
    return table


def write_outputs(table: SweepTable, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "table.csv").write_text(table.csv_text())
    (out / "meta.json").write_text(json.dumps(table.meta, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# resume / extend
# ---------------------------------------------------------------------------

def resume_or_extend(cfg: ExperimentConfig, prior_dir: str | Path) -> SweepTable:
    """Fill in grid points missing from a previous run of the same setup.

    Everything except the grid must match the prior sidecar exactly, and
    the prior grid must be a subset of the new one; prior rows are kept
    byte-for-byte and new rows are appended.
    """
    prior = Path(prior_dir)
    try:
        meta = json.loads((prior / "meta.json").read_text())
        csv_lines = (prior / "table.csv").read_text().splitlines()
    except FileNotFoundError as exc:
        raise ConfigError(f"prior run incomplete: {exc}") from exc
    old = meta.get("config", {})
    if meta.get("partial"):
        raise ConfigError("prior run is marked partial; rerun it instead of extending")
    for field_name in ("engine", "seed"):
        if old.get(field_name) != getattr(cfg, field_name):
            raise ConfigError(
                f"{field_name} mismatch: prior {old.get(field_name)!r} vs new {getattr(cfg, field_name)!r}"
            )
    if old.get("run") != cfg.run or old.get("block_size") != cfg.block_size:
        raise ConfigError("run parameters differ from the prior sidecar; refusing to merge")
    old_grid = {k: [float(x) for x in v] for k, v in old.get("grid", {}).items()}
    for axis_name, values in old_grid.items():
        new_vals = cfg.grid.get(axis_name, [])
        missing = [v for v in values if v not in new_vals]
        if missing:
            raise ConfigError(
                f"grid.{axis_name} must contain all prior values; missing {missing}"
            )
    if csv_lines[:1] != [CSV_HEADER]:
        raise ConfigError("prior table.csv header does not match the schema")

    old_cfg = ExperimentConfig(
        engine=cfg.engine, seed=cfg.seed, grid=old_grid, run=cfg.run,
        out=None, workers=cfg.workers, block_size=cfg.block_size,
    )
    done = {pt.canonical() for pt in expand_grid(old_cfg)}
    new_points = [pt for pt in expand_grid(cfg) if pt.canonical() not in done]

    new_records: list[dict] = []
    if new_points:
        # run exactly the missing points; streams are keyed by grid-point
        # values, so the new rows match what a from-scratch run would hold
        new_records, partial = _run_points(cfg, new_points, contours=False)
        if partial:
            raise ConfigError("interrupted while extending; prior run left untouched")

    lines = csv_lines[1:] + [_format_row(r) for r in new_records]
    table = SweepTable(header=CSV_HEADER, records=new_records, lines=lines, meta={
        **{k: v for k, v in meta.items() if k not in ("rows", "wall_time_s", "config")},
        "config": cfg.to_dict(),
        "rows": len(lines),
        "extended_from": str(prior),
        "partial": False,
    })
    if cfg.out:
        write_outputs(table, cfg.out)
    return table
