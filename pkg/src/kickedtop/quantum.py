"""Finite-S Hilbert-space machinery for the controlled kicked top.

States are complex amplitude vectors psi_m over m = -S..S with storage
index i = m + S, so the control target |m = +S> sits at the last index.
All dynamics run in the rotated ("working") frame in which the
classical fixed point r0 maps to the north pole: one chaotic step is
the dense unitary U_rot = R^dag U_KT R, and one control step is a
Born-sampled Kraus update that shuffles excitations n = S - m into a
traced-out ancilla.

The stroboscopic unitary is assembled so that its large-S limit is the
classical map of :mod:`kickedtop.classical` (precession about y first,
z-axis kick second within each period); the rotated-frame target state
is then an approximate fixed point of the mean dynamics.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln, xlogy

from .classical import FixedPointData, find_fixed_point
from .streams import BORN, COINS, substream

__all__ = [
    "ChannelCompletenessError",
    "spin_dimension",
    "jz_values",
    "ladder_elements",
    "rotation_about_y",
    "rotation_to_direction",
    "spin_coherent_state",
    "build_kicked_top_unitary",
    "RotatedFrame",
    "build_rotated_frame",
    "ControlChannel",
    "TrajectoryRecord",
    "evolve_quantum_trajectory",
    "evolve_block",
    "target_state",
]


class ChannelCompletenessError(RuntimeError):
    """Born probabilities failed to sum to one within tolerance."""


def spin_dimension(S: float) -> int:
    two_s = round(2 * S)
    if abs(2 * S - two_s) > 1e-12 or two_s < 1:
        raise ValueError(f"S must be a positive integer or half-integer, got {S}")
    return two_s + 1


def jz_values(S: float) -> np.ndarray:
    """Eigenvalues m = -S..S in storage order."""
    return np.arange(spin_dimension(S), dtype=float) - S


def ladder_elements(S: float) -> np.ndarray:
    """<m+1|J_+|m> = sqrt(S(S+1) - m(m+1)) for m = -S..S-1."""
    m = jz_values(S)[:-1]
    return np.sqrt(S * (S + 1.0) - m * (m + 1.0))


@lru_cache(maxsize=32)
def _jy_eigensystem(two_s: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of J_y, via a real tridiagonal similarity.

    With P = diag(i^n), P J_y P^dag is real symmetric tridiagonal with
    off-diagonal c_m/2; one Hermitian eigensolve per S serves every
    rotation angle, which stays numerically stable at large S where
    d-matrix recursions degrade.
    """
    S = two_s / 2.0
    off = ladder_elements(S) / 2.0
    w, v = eigh_tridiagonal(np.zeros(two_s + 1), off)
    return w, v


def rotation_about_y(S: float, beta: float) -> np.ndarray:
    """Dense unitary exp(-i beta J_y)."""
    dim = spin_dimension(S)
    w, v = _jy_eigensystem(dim - 1)
    phases = (1j) ** np.arange(dim)
    core = (v * np.exp(-1j * beta * w)) @ v.T
    return (np.conj(phases)[:, None] * core) * phases[None, :]


def rotation_to_direction(S: float, theta: float, phi: float) -> np.ndarray:
    """R = exp(-i phi J_z) exp(-i theta J_y), mapping the north pole to
    the unit vector with spherical angles (theta, phi)."""
    rz = np.exp(-1j * phi * jz_values(S))
    return rz[:, None] * rotation_about_y(S, theta)


def target_state(S: float) -> np.ndarray:
    """|m = S> in storage order."""
    psi = np.zeros(spin_dimension(S), dtype=complex)
    psi[-1] = 1.0
    return psi


def spin_coherent_state(S: float, theta: float, phi: float) -> np.ndarray:
    return rotation_to_direction(S, theta, phi) @ target_state(S)


def build_kicked_top_unitary(S: float, k: float, alpha: float = np.pi / 2) -> np.ndarray:
    """Dense one-period unitary: precession about y, then the z^2 kick.

    The kick factor exp(-i k J_z^2 / (2S)) is diagonal in m; the
    precession factor is the dense y-rotation by alpha. Operator order
    (kick on the left) is fixed by requiring the coherent-state dynamics
    to reproduce ``classical.kicked_top_step`` as S grows.
    """
    m = jz_values(S)
    kick = np.exp(-1j * k * m**2 / (2.0 * S))
    return kick[:, None] * rotation_about_y(S, alpha)


@dataclass(frozen=True)
class RotatedFrame:
    """Working frame in which the control target is |m = S>."""

    S: float
    k: float
    fixed_point: FixedPointData
    R: np.ndarray
    U_rot: np.ndarray

    @property
    def theta0(self) -> float:
        return self.fixed_point.theta0

    @property
    def phi0(self) -> float:
        return self.fixed_point.phi0


def build_rotated_frame(S: float, k: float) -> RotatedFrame:
    """Rotate the step unitary so the fixed point sits at the north pole."""
    fp = find_fixed_point(k)
    R = rotation_to_direction(S, fp.theta0, fp.phi0)
    U = build_kicked_top_unitary(S, k)
    U_rot = R.conj().T @ U @ R
    return RotatedFrame(S=float(S), k=float(k), fixed_point=fp, R=R, U_rot=U_rot)


# ---------------------------------------------------------------------------
# measurement-and-reset control channel
# ---------------------------------------------------------------------------

@dataclass
class ControlChannel:
    """Kraus channel of the ancilla-mediated control at angle theta.

    Outcome m_a removes j = S - m_a excitations: the amplitude at m is
    routed to m' = S - m_a + m with weight

        sqrt( C(S-m, S-m_a) ) cos(theta/2)^(m_a-m) sin(theta/2)^(S-m_a),

    so the squared weights form the binomial distribution
    Binom(S - m, sin^2(theta/2)) over j. All factors are assembled in
    log space (gammaln / xlogy), which stays finite for S up to 4096
    where the raw binomials overflow.
    """

    S: float
    theta: float
    weights: np.ndarray = field(init=False, repr=False)   # W[i_a, i] = |K coeff|^2
    sqrt_weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not (0.0 <= self.theta <= np.pi):
            raise ValueError(f"theta must be in [0, pi], got {self.theta}")
        dim = spin_dimension(self.S)
        N = dim - 1
        i = np.arange(dim)
        c2 = np.cos(0.5 * self.theta) ** 2
        s2 = np.sin(0.5 * self.theta) ** 2
        n_in = N - i[None, :]          # excitations of the input level
        n_out = N - i[:, None]         # excitations removed, j = N - i_a
        with np.errstate(divide="ignore", invalid="ignore"):
            log_c = (
                gammaln(n_in + 1.0)
                - gammaln(n_out + 1.0)
                - gammaln(n_in - n_out + 1.0)
            )
            log_w = log_c + xlogy(i[:, None] - i[None, :], c2) + xlogy(n_out, s2)
        W = np.where(i[:, None] >= i[None, :], np.exp(log_w), 0.0)
        self.weights = W
        self.sqrt_weights = np.sqrt(W)

    @property
    def a(self) -> float:
        """Equivalent classical contraction strength cos(theta/2)."""
        return float(np.cos(0.5 * self.theta))

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    def kraus_apply(self, psi: np.ndarray, m_a: float) -> np.ndarray:
        """Unnormalized K_{m_a} |psi> (cost O(S))."""
        i_a = round(m_a + self.S)
        if not (0 <= i_a < self.dim):
            raise ValueError(f"m_a = {m_a} outside -S..S")
        out = np.zeros_like(psi)
        shift = self.dim - 1 - i_a
        out[shift:] = psi[: i_a + 1] * self.sqrt_weights[i_a, : i_a + 1]
        return out

    def kraus_matrix(self, m_a: float) -> np.ndarray:
        """Dense K_{m_a} (for explicit channel checks)."""
        i_a = round(m_a + self.S)
        K = np.zeros((self.dim, self.dim))
        shift = self.dim - 1 - i_a
        cols = np.arange(i_a + 1)
        K[shift + cols, cols] = self.sqrt_weights[i_a, : i_a + 1]
        return K

    def sum_kdag_k(self) -> np.ndarray:
        """Explicitly summed channel normalization sum_m K^dag K."""
        acc = np.zeros((self.dim, self.dim))
        for i_a in range(self.dim):
            K = self.kraus_matrix(i_a - self.S)
            acc += K.T @ K
        return acc

    def born_probabilities(self, psi: np.ndarray) -> np.ndarray:
        """Exact outcome distribution p(m_a) for a normalized state."""
        p = self.weights @ np.abs(psi) ** 2
        total = p.sum()
        if abs(total - 1.0) > 1e-8:
            raise ChannelCompletenessError(
                f"Born probabilities sum to {total!r}; channel incomplete"
            )
        return p

    def born_sample_and_update(
        self, psi: np.ndarray, rng: np.random.Generator
    ) -> tuple[float, np.ndarray]:
        """Sample an outcome and collapse; returns (m_a, normalized state)."""
        p = self.born_probabilities(psi)
        u = rng.random() * p.sum()
        i_a = min(int(np.searchsorted(np.cumsum(p), u)), self.dim - 1)
        out = self.kraus_apply(psi, i_a - self.S)
        out /= np.linalg.norm(out)
        return i_a - self.S, out


# ---------------------------------------------------------------------------
# stochastic trajectories
# ---------------------------------------------------------------------------

@dataclass
class TrajectoryRecord:
    """Observable time series plus the measurement record of one run."""

    S: float
    times: np.ndarray
    observables: dict[str, np.ndarray]
    outcomes: list[tuple[int, float]]
    final_state: np.ndarray


def evolve_quantum_trajectory(
    psi0: np.ndarray,
    U_rot: np.ndarray,
    channel: ControlChannel,
    p: float,
    steps: int,
    *,
    seed: int,
    traj_id: int,
    stream_prefix: tuple = (),
    schedule: list[int] | None = None,
    observables: dict | None = None,
) -> TrajectoryRecord:
    """One Born-sampled realization of the mixed dynamics.

    Control is eligible on the whole sphere. The coin sequence and the
    outcome draws come from two separate per-trajectory streams, so two
    runs differing only in S share their control/chaos pattern.
    ``observables`` maps names to callables psi -> float, evaluated at
    the scheduled (1-based) times.
    """
    if schedule is None:
        schedule = [steps]
    observables = observables or {}
    sched = set(int(t) for t in schedule)
    # both streams are indexed by step, so the draw consumed at time t is
    # fixed regardless of how many control steps preceded it
    coins = substream(seed, *stream_prefix, COINS, traj_id).random(steps)
    borns = substream(seed, *stream_prefix, BORN, traj_id).random(steps)
    psi = np.array(psi0, dtype=complex)
    times = sorted(sched)
    values = {name: [] for name in observables}
    outcomes: list[tuple[int, float]] = []
    for t in range(1, steps + 1):
        if coins[t - 1] < p:
            prob = channel.born_probabilities(psi)
            u = borns[t - 1] * prob.sum()
            i_a = min(int(np.searchsorted(np.cumsum(prob), u)), channel.dim - 1)
            psi = channel.kraus_apply(psi, i_a - channel.S)
            psi = psi / np.linalg.norm(psi)
            m_a = i_a - channel.S
            outcomes.append((t, m_a))
        else:
            psi = U_rot @ psi
        if t in sched:
            for name, fn in observables.items():
                values[name].append(fn(psi))
    return TrajectoryRecord(
        S=channel.S,
        times=np.array(times),
        observables={k: np.array(v) for k, v in values.items()},
        outcomes=outcomes,
        final_state=psi,
    )


def evolve_block(
    psi0: np.ndarray,
    U_rot: np.ndarray,
    channel: ControlChannel,
    p: float,
    steps: int,
    traj_ids: np.ndarray,
    *,
    seed: int,
    stream_prefix: tuple = (),
    record,
) -> None:
    """Evolve a block of trajectories column-wise (states: dim x B).

    Same stream contract as :func:`evolve_quantum_trajectory`; the
    unitary branch runs as one matrix product over the chaotic columns
    and the control branch batches the Born probabilities of all
    control columns into a single weight-matrix product. ``record`` is
    called as record(t, Psi) after every step.
    """
    ids = [int(t) for t in traj_ids]
    B = len(ids)
    coins = np.empty((steps, B))
    borns = np.empty((steps, B))
    for col, tid in enumerate(ids):
        coins[:, col] = substream(seed, *stream_prefix, COINS, tid).random(steps)
        borns[:, col] = substream(seed, *stream_prefix, BORN, tid).random(steps)
    dim = channel.dim
    Psi = np.tile(np.asarray(psi0, dtype=complex)[:, None], (1, B))
    W, sqW = channel.weights, channel.sqrt_weights
    for t in range(1, steps + 1):
        ctrl = coins[t - 1] < p
        if np.any(~ctrl):
            cols = np.nonzero(~ctrl)[0]
            Psi[:, cols] = U_rot @ Psi[:, cols]
        if np.any(ctrl):
            cols = np.nonzero(ctrl)[0]
            P = W @ (np.abs(Psi[:, cols]) ** 2)
            totals = P.sum(axis=0)
            if np.any(np.abs(totals - 1.0) > 1e-8):
                raise ChannelCompletenessError("Born probabilities do not sum to 1")
            cum = np.cumsum(P, axis=0)
            u = borns[t - 1, cols] * totals
            sel = np.minimum((cum < u[None, :]).sum(axis=0), dim - 1)
            for j, col in enumerate(cols):
                i_a = int(sel[j])
                shift = dim - 1 - i_a
                out = np.zeros(dim, dtype=complex)
                out[shift:] = Psi[: i_a + 1, col] * sqW[i_a, : i_a + 1]
                Psi[:, col] = out / np.linalg.norm(out)
        record(t, Psi)
