"""Fidelity, moments, entanglement measures, closed-form references."""

import math

import numpy as np
import pytest
from scipy.special import comb

from kickedtop.classical import find_fixed_point
from kickedtop.observables import (
    binder_ratio,
    bipartite_entropy,
    displacement_R2,
    dicke_encoding_pair,
    evolve_ancilla_trajectory,
    fidelity,
    fullreset_analytics,
    haar_encoding_pair,
    squeezing_entropy,
    transverse_fluctuations,
    variance_peak,
)
from kickedtop.quantum import (
    ControlChannel,
    build_rotated_frame,
    spin_coherent_state,
    spin_dimension,
    target_state,
)


def random_state(dim, seed):
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return psi / np.linalg.norm(psi)


def brute_force_half_cut_entropy(psi_m, S):
    """Oracle: build the explicit 2^(2S) qubit state via the symmetric
    (Dicke) embedding and Schmidt-decompose the half cut directly."""
    N = 2 * S
    full = np.zeros(2**N, dtype=complex)
    for idx in range(2**N):
        w = bin(idx).count("1")
        # amplitude of |m> spreads evenly over the C(N, w) bitstrings
        full[idx] = psi_m[w] / math.sqrt(comb(N, w, exact=True))
    M = full.reshape(2 ** (N // 2), 2 ** (N // 2))
    sv = np.linalg.svd(M, compute_uv=False)
    lam = sv**2
    lam = lam[lam > 1e-300]
    return float(-np.sum(lam * np.log2(lam)))


class TestSimpleMeasures:
    def test_fidelity_endpoints(self):
        S = 9
        up = target_state(S)
        down = np.zeros(spin_dimension(S), complex)
        down[0] = 1.0
        assert fidelity(up) == 1.0
        assert fidelity(down) == 0.0

    def test_fidelity_complement_sums_to_norm(self):
        psi = random_state(31, 4)
        complement = float(np.sum(np.abs(psi[:-1]) ** 2))
        assert abs(fidelity(psi) + complement - 1.0) < 1e-12

    def test_R2_endpoints(self):
        S = 7
        down = np.zeros(spin_dimension(S), complex)
        down[0] = 1.0
        assert displacement_R2(target_state(S), S) < 1e-28
        assert abs(displacement_R2(down, S) - 4.0) < 1e-12

    def test_R2_coherent_state(self):
        # oracle: the mean of a coherent state is exactly S * direction
        S = 40
        for theta_c in (0.3, 1.1, 2.4):
            psi = spin_coherent_state(S, theta_c, 0.0)
            ref = 2.0 * (1.0 - np.cos(theta_c))
            assert abs(displacement_R2(psi, S) - ref) < 1e-9

    def test_transverse_fluctuations_values(self):
        S = 12
        dim = spin_dimension(S)
        assert abs(transverse_fluctuations(target_state(S), S) - 1 / (S + 1)) < 1e-14
        down = np.zeros(dim, complex)
        down[0] = 1.0
        assert abs(transverse_fluctuations(down, S) - 1 / (S + 1)) < 1e-14
        mid = np.zeros(dim, complex)
        mid[S] = 1.0  # m = 0
        assert abs(transverse_fluctuations(mid, S) - 1.0) < 1e-14


class TestBipartiteEntropy:
    def test_product_states_have_zero(self):
        for S in (3, 8):
            dim = spin_dimension(S)
            for idx in (0, dim - 1):  # m = -S, +S
                psi = np.zeros(dim, complex)
                psi[idx] = 1.0
                assert abs(bipartite_entropy(psi, S)) < 1e-12

    def test_single_excitation_is_one_bit(self):
        for S in (2, 5, 17):
            dim = spin_dimension(S)
            psi = np.zeros(dim, complex)
            psi[-2] = 1.0  # m = S - 1
            assert abs(bipartite_entropy(psi, S) - 1.0) < 1e-12

    def test_brute_force_oracle(self):
        for S in (2, 3, 4, 5, 6):
            for rep in range(10):
                psi = random_state(spin_dimension(S), 100 * S + rep)
                fast = bipartite_entropy(psi, S)
                slow = brute_force_half_cut_entropy(psi, S)
                assert abs(fast - slow) < 1e-10

    def test_upper_bound(self):
        for S in (4, 16, 64):
            for rep in range(20):
                psi = random_state(spin_dimension(S), 7000 + 31 * S + rep)
                assert bipartite_entropy(psi, S) <= np.log2(S + 1) + 1e-9

    def test_phase_invariances(self):
        S = 10
        psi = random_state(spin_dimension(S), 77)
        base = bipartite_entropy(psi, S)
        assert abs(bipartite_entropy(np.exp(1j * 0.7) * psi, S) - base) < 1e-10
        m = np.arange(-S, S + 1)
        rotated = psi * np.exp(1j * 0.31 * m)
        assert abs(bipartite_entropy(rotated, S) - base) < 1e-10

    def test_norm_guard(self):
        S = 4
        psi = np.zeros(spin_dimension(S), complex)
        psi[0] = 1.4
        with pytest.raises(ValueError):
            bipartite_entropy(psi, S)


class TestBinder:
    def test_constant_samples(self):
        assert abs(binder_ratio(np.full(10, 2.5)) - 1.0) < 1e-12

    def test_two_point_case(self):
        assert abs(binder_ratio(np.array([0.0, 1.7])) - 2.0) < 1e-12

    def test_zero_mean_guard(self):
        assert math.isnan(binder_ratio(np.zeros(5)))

    def test_needs_two_samples(self):
        with pytest.raises(ValueError):
            binder_ratio(np.array([1.0]))


class TestFullResetAnalytics:
    def test_squeezing_entropy_limits(self):
        assert squeezing_entropy(0.0) == 0.0
        for u in (6.0, 30.0, 400.0):
            ref = 2.0 * u / np.log(2.0)
            assert abs(squeezing_entropy(u) - ref) / ref < 0.2
            assert squeezing_entropy(u) < ref  # approaches from below

    def test_series_and_asymptotics(self):
        fr = fullreset_analytics(6.0, 0.8)
        assert fr.S_bip_table[0] == 0.0
        lam = find_fixed_point(6.0).abs_lambda
        assert abs(fr.r - 0.5 * np.log(lam)) < 1e-14
        assert abs(fr.E_S_asymptotic - 0.25 * np.log2(lam)) < 1e-12
        assert abs(fr.binder_asymptotic - 6.0) < 1e-12
        # exact sum is below the large-lambda form at this moderate lambda
        assert fr.E_S < fr.E_S_asymptotic
        assert fr.binder > 1.0

    def test_half_control_binder_limit(self):
        fr = fullreset_analytics(6.0, 0.5)
        assert abs(fr.binder_asymptotic - 3.0) < 1e-12

    def test_truncation_converged(self):
        a = fullreset_analytics(6.0, 0.3)
        b = fullreset_analytics(6.0, 0.3, n_max=2 * len(a.n))
        assert abs(a.E_S - b.E_S) < 1e-9 * a.E_S

    def test_full_control_limit(self):
        fr = fullreset_analytics(6.0, 1.0)
        assert fr.E_S == 0.0
        assert math.isnan(fr.binder)


class TestFullResetMonteCarlo:
    def test_trajectory_mean_matches_geometric_sum(self):
        # full resets at moderate S: the sampled entropy mean sits on the
        # geometric-sum prediction within sampling error (plus a small
        # allowance for the per-kick squeeze being set by the transient
        # stretch rather than the eigenvalue)
        import numpy as np

        from kickedtop.observables import batch_bipartite_entropy
        from kickedtop.quantum import ControlChannel, build_rotated_frame, evolve_block, target_state

        S, p = 256, 0.8
        frame = build_rotated_frame(S, 6.0)
        chan = ControlChannel(S=S, theta=np.pi)
        got = {}

        def record(t, Psi):
            if t == 128:
                got["v"] = batch_bipartite_entropy(Psi, S)

        evolve_block(target_state(S), frame.U_rot, chan, p, 128, np.arange(300),
                     seed=33, record=record)
        v = got["v"]
        fr = fullreset_analytics(6.0, p)
        err = v.std(ddof=1) / np.sqrt(len(v))
        assert abs(v.mean() - fr.E_S) < 4.0 * err + 0.06
        b = binder_ratio(v)
        assert abs(b - fr.binder) < 0.35 * fr.binder


class TestVariancePeak:
    def test_recovers_parabola_vertex(self):
        p = np.linspace(0.2, 0.9, 15)
        var = 2.0 - 10.0 * (p - 0.55) ** 2
        out = variance_peak(p, var, 1000)
        assert abs(out["p_max"] - 0.55) < 1e-9
        assert abs(out["height"] - 2.0) < 1e-9
        assert out["p_max_err"] < 0.05

    def test_noisy_peak_within_error(self):
        rng = np.random.default_rng(8)
        p = np.linspace(0.2, 0.9, 15)
        var = 2.0 - 10.0 * (p - 0.55) ** 2 + rng.normal(scale=0.05, size=15)
        out = variance_peak(p, var, 500, rng=np.random.default_rng(1))
        assert abs(out["p_max"] - 0.55) < 4.0 * max(out["p_max_err"], 0.01)


class TestAncilla:
    def setup(self, S=8, k=8.0, theta=np.pi / 2):
        frame = build_rotated_frame(S, k)
        chan = ControlChannel(S=S, theta=theta)
        return frame, chan

    def test_unitary_dynamics_preserves_entropy_exactly(self):
        S = 16
        frame, chan = self.setup(S=S)
        pair = haar_encoding_pair(spin_dimension(S), seed=1)
        vals = evolve_ancilla_trajectory(
            pair, frame.U_rot, chan, p=0.0, steps=100, seed=2, traj_id=0,
            schedule=list(range(1, 101)),
        )
        assert np.abs(vals - 1.0).max() < 1e-10

    def test_full_reset_purifies_in_one_step(self):
        S = 8
        frame, chan = self.setup(S=S, theta=np.pi)
        pair = dicke_encoding_pair(spin_dimension(S))
        vals = evolve_ancilla_trajectory(
            pair, frame.U_rot, chan, p=1.0, steps=1, seed=3, traj_id=0, schedule=[1]
        )
        assert vals[0] < 1e-10

    def test_encoding_pair_orthonormal(self):
        for seed in range(5):
            a, b = haar_encoding_pair(33, seed=seed)
            assert abs(np.linalg.norm(a) - 1) < 1e-12
            assert abs(np.linalg.norm(b) - 1) < 1e-12
            assert abs(np.vdot(a, b)) < 1e-12

    def test_partial_control_decreases_entropy(self):
        S = 8
        frame, chan = self.setup(S=S)
        pair = haar_encoding_pair(spin_dimension(S), seed=11)
        vals = np.array([
            evolve_ancilla_trajectory(
                pair, frame.U_rot, chan, p=0.5, steps=12, seed=5, traj_id=t,
                schedule=[12],
            )[0]
            for t in range(60)
        ])
        assert 0.0 < vals.mean() < 0.95
