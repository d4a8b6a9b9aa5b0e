"""Measures evaluated on quantum trajectory states.

All functions assume the rotated working frame, where the control
target is |m = S> (last storage index) and the spin operators are the
standard J matrices. Entanglement quantities are reported in bits.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .classical import find_fixed_point
from .quantum import ChannelCompletenessError, ControlChannel, jz_values, ladder_elements
from .streams import BORN, COINS, ENCODING, substream

__all__ = [
    "fidelity",
    "spin_expectations",
    "displacement_R2",
    "transverse_fluctuations",
    "bipartite_entropy",
    "batch_fidelity",
    "batch_displacement_R2",
    "batch_transverse_fluctuations",
    "batch_bipartite_entropy",
    "binder_ratio",
    "entropy_bits",
    "haar_encoding_pair",
    "dicke_encoding_pair",
    "evolve_ancilla_trajectory",
    "FullResetAnalytics",
    "fullreset_analytics",
    "squeezing_entropy",
    "variance_peak",
]

BINDER_MEAN_FLOOR = 1e-12


def fidelity(psi: np.ndarray) -> float:
    """Overlap with the control target, F = |psi_S|^2."""
    return float(np.abs(psi[-1]) ** 2)


def spin_expectations(psi: np.ndarray, S: float) -> np.ndarray:
    """(<J_x>, <J_y>, <J_z>) via the banded ladder sums."""
    pr = np.abs(psi) ** 2
    jz = float(np.sum(jz_values(S) * pr))
    cross = np.sum(np.conj(psi[1:]) * ladder_elements(S) * psi[:-1])
    return np.array([cross.real, cross.imag, jz])


def displacement_R2(psi: np.ndarray, S: float) -> float:
    """Squared displacement of <J>/S from the target pole (0, 0, 1)."""
    delta = spin_expectations(psi, S) / S - np.array([0.0, 0.0, 1.0])
    return float(np.sum(delta**2))


def transverse_fluctuations(psi: np.ndarray, S: float) -> float:
    """s_perp^2 = (<J_x^2> + <J_y^2>) / (S(S+1)) = 1 - <J_z^2>/(S(S+1))."""
    jz2 = np.sum(jz_values(S) ** 2 * np.abs(psi) ** 2)
    return float(1.0 - jz2 / (S * (S + 1.0)))


def entropy_bits(weights: np.ndarray) -> float:
    w = weights[weights > 1e-300]
    return float(-np.sum(w * np.log2(w)))


@lru_cache(maxsize=32)
def _half_cut_factor(two_s: int) -> np.ndarray:
    """sqrt(C(S,kA) C(S,kB) / C(2S, kA+kB)) on the (S+1)x(S+1) grid.

    Log-gamma assembly; exact and overflow-free up to S = 4096.
    """
    S = two_s // 2
    kA = np.arange(S + 1)
    log_cs = gammaln(S + 1.0) - gammaln(kA + 1.0) - gammaln(S - kA + 1.0)
    ktot = kA[:, None] + kA[None, :]
    log_c2s = gammaln(two_s + 1.0) - gammaln(ktot + 1.0) - gammaln(two_s - ktot + 1.0)
    return np.exp(0.5 * (log_cs[:, None] + log_cs[None, :] - log_c2s))


def bipartite_entropy(psi: np.ndarray, S: float) -> float:
    """Half-cut entanglement of the 2S-qubit symmetric-subspace state.

    The amplitude psi_m with k = m + S total excitations splits over the
    two halves as M[kA, kB] = psi_{kA+kB} sqrt(C(S,kA)C(S,kB)/C(2S,k));
    the entropy follows from the singular values of M. Only integer S
    admits the half cut.
    """
    S_int = round(S)
    if abs(S - S_int) > 1e-12:
        raise ValueError("half-cut entropy requires integer S (even qubit count)")
    M = _half_cut_factor(2 * S_int) * psi[
        np.arange(S_int + 1)[:, None] + np.arange(S_int + 1)[None, :]
    ]
    norm = np.linalg.norm(M)
    if abs(norm - 1.0) > 1e-8:
        raise ValueError(f"amplitude matrix norm {norm!r} deviates from 1")
    sv = np.linalg.svd(M, compute_uv=False)
    return entropy_bits(sv**2)


def binder_ratio(samples: np.ndarray) -> float:
    """B = mean(s^2) / mean(s)^2; nan when the mean is indistinguishable
    from zero (division would be meaningless)."""
    s = np.asarray(samples, dtype=float)
    if len(s) < 2:
        raise ValueError("binder_ratio needs at least two samples")
    m = s.mean()
    if abs(m) < BINDER_MEAN_FLOOR:
        return float("nan")
    return float(np.mean(s**2) / m**2)


# column-wise variants over a (dim, B) block of states, for the sweep engine

def batch_fidelity(Psi: np.ndarray) -> np.ndarray:
    return np.abs(Psi[-1, :]) ** 2


def _batch_jz_moments(Psi: np.ndarray, S: float):
    pr = np.abs(Psi) ** 2
    m = jz_values(S)
    cross = np.sum(np.conj(Psi[1:, :]) * ladder_elements(S)[:, None] * Psi[:-1, :], axis=0)
    return cross.real, cross.imag, m @ pr, (m**2) @ pr


def batch_displacement_R2(Psi: np.ndarray, S: float) -> np.ndarray:
    jx, jy, jz, _ = _batch_jz_moments(Psi, S)
    return (jx / S) ** 2 + (jy / S) ** 2 + (jz / S - 1.0) ** 2


def batch_transverse_fluctuations(Psi: np.ndarray, S: float) -> np.ndarray:
    _, _, _, jz2 = _batch_jz_moments(Psi, S)
    return 1.0 - jz2 / (S * (S + 1.0))


def batch_bipartite_entropy(Psi: np.ndarray, S: float) -> np.ndarray:
    return np.array([bipartite_entropy(Psi[:, b], S) for b in range(Psi.shape[1])])


# ---------------------------------------------------------------------------
# ancilla purification probe
# ---------------------------------------------------------------------------

def haar_encoding_pair(dim: int, seed: int, stream_prefix: tuple = ()) -> tuple[np.ndarray, np.ndarray]:
    """Two Haar-random orthonormal symmetric-subspace states."""
    rng = substream(seed, *stream_prefix, ENCODING)
    z = rng.normal(size=(dim, 2)) + 1j * rng.normal(size=(dim, 2))
    q, _ = np.linalg.qr(z)
    return q[:, 0].copy(), q[:, 1].copy()


def dicke_encoding_pair(dim: int) -> tuple[np.ndarray, np.ndarray]:
    """|m = S> and |m = S-1> as a deterministic alternative encoding."""
    a = np.zeros(dim, dtype=complex)
    b = np.zeros(dim, dtype=complex)
    a[-1] = 1.0
    b[-2] = 1.0
    return a, b


def evolve_ancilla_trajectory(
    encoding: tuple[np.ndarray, np.ndarray],
    U_rot: np.ndarray,
    channel: ControlChannel,
    p: float,
    steps: int,
    *,
    seed: int,
    traj_id: int,
    stream_prefix: tuple = (),
    schedule: list[int] | None = None,
) -> np.ndarray:
    """Entropy S_anc(t) of a qubit Bell-paired with the top.

    The joint state c_{i,m} starts as (|0>|psi_0> + |1>|psi_1>)/sqrt(2);
    dynamics act on the top index only and Born probabilities are summed
    over the ancilla index. Returns S_anc at the scheduled times.
    """
    psi0, psi1 = encoding
    if abs(np.vdot(psi0, psi1)) > 1e-10:
        raise ValueError("encoding pair must be orthonormal")
    if schedule is None:
        schedule = [steps]
    sched = sorted(set(int(t) for t in schedule))
    coins = substream(seed, *stream_prefix, COINS, traj_id).random(steps)
    borns = substream(seed, *stream_prefix, BORN, traj_id).random(steps)
    C = np.stack([psi0, psi1]).astype(complex) / np.sqrt(2.0)
    dim = channel.dim
    W, sqW = channel.weights, channel.sqrt_weights
    out = []
    for t in range(1, steps + 1):
        if coins[t - 1] < p:
            pj = W @ (np.abs(C[0]) ** 2 + np.abs(C[1]) ** 2)
            total = pj.sum()
            if abs(total - 1.0) > 1e-8:
                raise ChannelCompletenessError("joint Born probabilities do not sum to 1")
            u = borns[t - 1] * total
            i_a = min(int(np.searchsorted(np.cumsum(pj), u)), dim - 1)
            shift = dim - 1 - i_a
            O = np.zeros_like(C)
            O[:, shift:] = C[:, : i_a + 1] * sqW[i_a, : i_a + 1][None, :]
            nrm = np.linalg.norm(O)
            if nrm < 1e-8:
                raise ChannelCompletenessError("joint normalization lost in control step")
            C = O / nrm
        else:
            C = C @ U_rot.T
        if t in sched:
            rho = C @ C.conj().T
            ev = np.clip(np.linalg.eigvalsh(rho), 0.0, 1.0)
            out.append(entropy_bits(ev))
    return np.array(out)


# ---------------------------------------------------------------------------
# closed-form full-reset entanglement
# ---------------------------------------------------------------------------

def squeezing_entropy(u) -> np.ndarray:
    """Half-cut entropy of two-mode squeezing with parameter u (bits):
    cosh^2 u log2 cosh^2 u - sinh^2 u log2 sinh^2 u.

    Evaluated as log2(1 + s2) + s2 log2(1 + 1/s2) with s2 = sinh^2 u,
    switching to the asymptote (2u - ln 4 + 1)/ln 2 once s2 overflows
    the direct form.
    """
    u = np.abs(np.asarray(u, dtype=float))
    ln2 = np.log(2.0)
    out = np.empty_like(u)
    big = u > 15.0
    with np.errstate(divide="ignore", invalid="ignore"):
        s2 = np.sinh(np.where(big, 0.0, u)) ** 2
        direct = (np.log1p(s2) + s2 * np.log1p(1.0 / np.maximum(s2, 1e-300))) / ln2
    out[~big] = direct[~big]
    out[big] = (2.0 * u[big] - np.log(4.0) + 1.0) / ln2
    return np.where(u == 0.0, 0.0, out)


@dataclass(frozen=True)
class FullResetAnalytics:
    """Closed forms for theta = pi control in the large-S limit.

    Between full resets the dynamics squeezes at rate r = ln|lambda_+|/2
    per step; the number of steps since the last reset is geometric, so
    the steady-state entropy moments are geometric sums over the
    squeezing entropy table.
    """

    k: float
    p: float
    r: float
    n: np.ndarray
    S_bip_table: np.ndarray
    E_S: float
    E_S2: float
    binder: float
    E_S_asymptotic: float
    binder_asymptotic: float


def fullreset_analytics(k: float, p: float, n_max: int | None = None,
                        tail_rel: float = 1e-12) -> FullResetAnalytics:
    """Geometric-sum entanglement moments for full resets (theta = pi).

    The series is truncated once the remaining geometric tail is below
    ``tail_rel`` relative to the running sum. Also reports the large
    |lambda_+| limits E[S] ~ ((1-p)/p) log2|lambda_+| and
    B ~ (2-p)/(1-p).
    """
    if not (0.0 < p <= 1.0):
        raise ValueError("p must be in (0, 1]")
    lam = find_fixed_point(k).abs_lambda
    r = 0.5 * np.log(lam)
    terms_n = [0]
    es = 0.0
    es2 = 0.0
    n = 1
    q = 1.0 - p
    while True:
        w = p * q**n
        s = float(squeezing_entropy(n * r))
        es += w * s
        es2 += w * s * s
        terms_n.append(n)
        converged = es > 0.0 and w * s < tail_rel * es and w * s * s < tail_rel * max(es2, 1e-300)
        if (n_max is not None and n >= n_max) or converged or n > 200_000 or q == 0.0:
            break
        n += 1
    narr = np.array(terms_n)
    table = squeezing_entropy(narr * r)
    binder = es2 / es**2 if es > BINDER_MEAN_FLOOR else float("nan")
    return FullResetAnalytics(
        k=float(k),
        p=float(p),
        r=float(r),
        n=narr,
        S_bip_table=table,
        E_S=float(es),
        E_S2=float(es2),
        binder=float(binder),
        E_S_asymptotic=float((1.0 - p) / p * np.log2(lam)),
        binder_asymptotic=float((2.0 - p) / (1.0 - p)) if p < 1.0 else float("nan"),
    )


# ---------------------------------------------------------------------------
# variance-peak extraction
# ---------------------------------------------------------------------------

def variance_peak(
    p_values: np.ndarray,
    variances: np.ndarray,
    n_samples: np.ndarray | int,
    *,
    rng: np.random.Generator | None = None,
    n_boot: int = 200,
    window: int = 2,
) -> dict:
    """Peak location and height of Var(S_bip) over a p grid.

    Fits a parabola through the points within ``window`` grid steps of
    the empirical maximum and reads off the vertex. Errors come from a
    parametric bootstrap using the normal-theory spread of a sample
    variance, se ~ var * sqrt(2/(n-1)).
    """
    p = np.asarray(p_values, dtype=float)
    v = np.asarray(variances, dtype=float)
    n = np.broadcast_to(np.asarray(n_samples, dtype=float), v.shape)
    order = np.argsort(p)
    p, v, n = p[order], v[order], n[order]

    def vertex(vals):
        i = int(np.argmax(vals))
        lo, hi = max(0, i - window), min(len(p), i + window + 1)
        if hi - lo < 3:
            return p[i], vals[i]
        coef = np.polyfit(p[lo:hi], vals[lo:hi], 2)
        if coef[0] >= 0.0:  # degenerate fit; fall back to the grid max
            return p[i], vals[i]
        pm = -coef[1] / (2.0 * coef[0])
        pm = min(max(pm, p[lo]), p[hi - 1])
        return pm, float(np.polyval(coef, pm))

    p_max, height = vertex(v)
    se = v * np.sqrt(2.0 / np.maximum(n - 1.0, 1.0))
    if rng is None:
        rng = np.random.default_rng(0)
    boots = np.array([vertex(v + se * rng.normal(size=v.shape)) for _ in range(n_boot)])
    return {
        "p_max": float(p_max),
        "height": float(height),
        "p_max_err": float(boots[:, 0].std(ddof=1)),
        "height_err": float(boots[:, 1].std(ddof=1)),
    }
