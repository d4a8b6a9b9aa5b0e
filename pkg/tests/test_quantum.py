"""Spin operators, step unitary, rotated frame, Kraus channel, evolver."""

import numpy as np
import pytest

from kickedtop.classical import kicked_top_step
from kickedtop.observables import spin_expectations
from kickedtop.quantum import (
    ChannelCompletenessError,
    ControlChannel,
    build_kicked_top_unitary,
    build_rotated_frame,
    evolve_block,
    evolve_quantum_trajectory,
    jz_values,
    rotation_about_y,
    spin_coherent_state,
    spin_dimension,
    target_state,
)

def unitarity_defect(U):
    return np.abs(U @ U.conj().T - np.eye(U.shape[0])).max()


class TestOperators:
    def test_dimensions_and_half_integers(self):
        assert spin_dimension(0.5) == 2
        assert spin_dimension(1) == 3
        assert spin_dimension(64) == 129
        with pytest.raises(ValueError):
            spin_dimension(0.7)

    def test_rotation_unitarity(self):
        for S in (0.5, 1, 7.5, 64):
            for beta in (0.1, np.pi / 2, 2.5):
                assert unitarity_defect(rotation_about_y(S, beta)) < 1e-12

    def test_coherent_state_direction(self):
        rng = np.random.default_rng(0)
        for S in (4, 33):
            for _ in range(5):
                v = rng.normal(size=3)
                v /= np.linalg.norm(v)
                th, ph = np.arccos(v[2]), np.arctan2(v[1], v[0])
                psi = spin_coherent_state(S, th, ph)
                np.testing.assert_allclose(spin_expectations(psi, S) / S, v, atol=1e-10)


class TestKickedTopUnitary:
    def test_unitarity(self):
        for S in (0.5, 8, 128):
            assert unitarity_defect(build_kicked_top_unitary(S, 6.0)) < 1e-12

    def test_spin_half_reduces_to_pure_rotation(self):
        # J_z^2 = I/4 at S = 1/2: the kick is a global phase
        U = build_kicked_top_unitary(0.5, 3.7)
        R = rotation_about_y(0.5, np.pi / 2)
        phase = U[0, 0] / R[0, 0]
        assert abs(abs(phase) - 1.0) < 1e-12
        np.testing.assert_allclose(U, phase * R, atol=1e-12)

    def test_classical_correspondence_improves_with_S(self):
        rng = np.random.default_rng(5)
        v = rng.normal(size=3)
        v /= np.linalg.norm(v)
        th, ph = np.arccos(v[2]), np.arctan2(v[1], v[0])
        target = kicked_top_step(v, 6.0)
        errs = []
        for S in (64, 256, 1024):
            psi = build_kicked_top_unitary(S, 6.0) @ spin_coherent_state(S, th, ph)
            errs.append(np.linalg.norm(spin_expectations(psi, S) / S - target))
        assert errs[0] < 1.0 / np.sqrt(64)
        assert errs[1] < errs[0] and errs[2] < errs[1]
        assert errs[2] < 1.0 / np.sqrt(1024)


class TestRotatedFrame:
    def test_frame_maps_pole_to_fixed_point(self):
        frame = build_rotated_frame(64, 6.0)
        assert unitarity_defect(frame.R) < 1e-10
        assert unitarity_defect(frame.U_rot) < 1e-10
        psi = frame.R @ target_state(64)
        np.testing.assert_allclose(
            spin_expectations(psi, 64) / 64, frame.fixed_point.r0, atol=1e-8
        )

    def test_target_is_mean_fixed_point(self):
        # the mean direction stays at the pole within O(1/S) even though
        # the state itself squeezes (one-kick overlap is set by the local
        # stretch: F = 1/cosh(ln sigma_max) ~ 0.52, S-independent)
        for S, ctol in ((256, 6.0), (1024, 6.0)):
            frame = build_rotated_frame(S, 6.0)
            psi = frame.U_rot @ target_state(S)
            delta = spin_expectations(psi, S) / S - np.array([0, 0, 1.0])
            assert np.linalg.norm(delta) < ctol / S
            # oracle-pinned fidelity floor for the one-step leakage
            assert abs(psi[-1]) ** 2 > 0.5


class TestControlChannel:
    def test_completeness_explicit_sum(self):
        for S in (1, 4, 16):
            for theta in (0.0, np.pi / 4, np.pi / 2, 3 * np.pi / 4, np.pi):
                chan = ControlChannel(S=S, theta=theta)
                defect = np.abs(chan.sum_kdag_k() - np.eye(chan.dim)).max()
                assert defect < 1e-10

    def test_weight_rows_normalized_large_S(self):
        chan = ControlChannel(S=1024, theta=np.pi / 2)
        assert np.abs(chan.weights.sum(axis=0) - 1.0).max() < 1e-10

    def test_theta_zero_is_identity(self):
        chan = ControlChannel(S=8, theta=0.0)
        K_top = chan.kraus_matrix(8)
        np.testing.assert_allclose(K_top, np.eye(17), atol=1e-15)
        for m_a in range(-8, 8):
            assert np.abs(chan.kraus_matrix(m_a)).max() == 0.0

    def test_theta_pi_full_reset(self):
        S = 6
        chan = ControlChannel(S=S, theta=np.pi)
        rng = np.random.default_rng(3)
        psi = rng.normal(size=13) + 1j * rng.normal(size=13)
        psi /= np.linalg.norm(psi)
        for m_a in range(-S, S + 1):
            out = chan.kraus_apply(psi, m_a)
            expected = np.zeros(13, complex)
            expected[-1] = psi[m_a + S]
            np.testing.assert_allclose(out, expected, atol=1e-15)

    def test_dark_state(self):
        for theta in (0.3, np.pi / 2, np.pi):
            chan = ControlChannel(S=16, theta=theta)
            psi = target_state(16)
            p = chan.born_probabilities(psi)
            assert abs(p[-1] - 1.0) < 1e-12
            out = chan.kraus_apply(psi, 16)
            np.testing.assert_allclose(out, psi, atol=1e-12)

    def test_born_sampling_matches_distribution(self):
        # frequencies of 10^6 draws against the exact Born weights
        S = 8
        chan = ControlChannel(S=S, theta=np.pi / 2)
        rng = np.random.default_rng(17)
        psi = rng.normal(size=17) + 1j * rng.normal(size=17)
        psi /= np.linalg.norm(psi)
        p = chan.born_probabilities(psi)
        n = 1_000_000
        counts = np.zeros(17)
        draw = np.random.default_rng(99)
        for _ in range(n):
            m_a, _ = chan.born_sample_and_update(psi, draw)
            counts[int(m_a) + S] += 1
        freqs = counts / n
        sigma = np.sqrt(np.maximum(p * (1 - p) / n, 1e-18))
        mask = p > 1e-6
        assert np.all(np.abs(freqs - p)[mask] < 4.0 * sigma[mask] + 5.0 / n)

    def test_completeness_failure_detected(self):
        chan = ControlChannel(S=4, theta=0.7)
        bad = np.zeros(9, complex)
        bad[0] = 2.0  # unnormalized input breaks the probability sum
        with pytest.raises(ChannelCompletenessError):
            chan.born_probabilities(bad)


class TestTrajectories:
    def test_pure_unitary_conserves_norm_and_casimir(self):
        S = 16
        frame = build_rotated_frame(S, 6.0)
        chan = ControlChannel(S=S, theta=np.pi / 2)
        # explicit J^2 from the ladder matrices
        from kickedtop.quantum import ladder_elements

        dim = spin_dimension(S)
        jp = np.zeros((dim, dim))
        jp[np.arange(1, dim), np.arange(dim - 1)] = ladder_elements(S)
        jx = (jp + jp.T) / 2.0
        jy = (jp - jp.T) / 2.0j
        jz = np.diag(jz_values(S))
        j2 = jx @ jx + jy @ jy + jz @ jz
        rec = evolve_quantum_trajectory(
            target_state(S), frame.U_rot, chan, p=0.0, steps=200,
            seed=1, traj_id=0,
            schedule=[50, 100, 200],
            observables={
                "norm": lambda psi: float(np.linalg.norm(psi)),
                "casimir": lambda psi: float(np.vdot(psi, j2 @ psi).real),
            },
        )
        assert np.abs(rec.observables["norm"] - 1.0).max() < 1e-10
        assert np.abs(rec.observables["casimir"] - S * (S + 1)).max() < 1e-10
        assert rec.outcomes == []

    def test_full_control_reaches_target_first_step(self):
        S = 12
        frame = build_rotated_frame(S, 6.0)
        chan = ControlChannel(S=S, theta=np.pi)
        rng = np.random.default_rng(4)
        psi0 = rng.normal(size=25) + 1j * rng.normal(size=25)
        psi0 /= np.linalg.norm(psi0)
        rec = evolve_quantum_trajectory(
            psi0, frame.U_rot, chan, p=1.0, steps=5, seed=2, traj_id=0,
            schedule=[1, 5], observables={"F": lambda psi: abs(psi[-1]) ** 2},
        )
        np.testing.assert_allclose(rec.observables["F"], 1.0, atol=1e-12)
        # first outcome is Born-random; once on the dark state, m_a = S a.s.
        assert all(m_a == S for _, m_a in rec.outcomes[1:])

    def test_block_evolver_matches_single(self):
        S = 10
        frame = build_rotated_frame(S, 6.0)
        chan = ControlChannel(S=S, theta=np.pi / 2)
        psi0 = target_state(S)
        finals = {}

        def record(t, Psi):
            if t == 40:
                finals["block"] = Psi.copy()

        evolve_block(psi0, frame.U_rot, chan, 0.6, 40, np.arange(3),
                     seed=123, record=record)
        for tid in range(3):
            rec = evolve_quantum_trajectory(
                psi0, frame.U_rot, chan, 0.6, 40, seed=123, traj_id=tid,
            )
            np.testing.assert_allclose(
                finals["block"][:, tid], rec.final_state, atol=1e-12
            )

    def test_controlled_side_fidelity_is_high(self):
        # trajectory-averaged fidelity well inside the controlled regime
        S = 16
        frame = build_rotated_frame(S, 6.0)
        chan = ControlChannel(S=S, theta=np.pi / 2)
        fs = []
        for tid in range(120):
            rec = evolve_quantum_trajectory(
                target_state(S), frame.U_rot, chan, 0.9, S, seed=20, traj_id=tid,
                schedule=[S], observables={"F": lambda psi: abs(psi[-1]) ** 2},
            )
            fs.append(rec.observables["F"][0])
        assert np.mean(fs) > 0.5

    def test_north_pole_frame_is_trivial(self):
        # rotation by zero polar angle leaves the step unitary unchanged
        U0 = rotation_about_y(6, 0.0)
        np.testing.assert_allclose(U0, np.eye(13), atol=1e-12)

    def test_same_stream_for_any_worker_split(self):
        # the record depends only on (seed, traj_id)
        S = 8
        frame = build_rotated_frame(S, 6.0)
        chan = ControlChannel(S=S, theta=np.pi / 2)
        a = evolve_quantum_trajectory(target_state(S), frame.U_rot, chan,
                                      0.5, 30, seed=7, traj_id=5)
        b = evolve_quantum_trajectory(target_state(S), frame.U_rot, chan,
                                      0.5, 30, seed=7, traj_id=5)
        assert a.outcomes == b.outcomes
        np.testing.assert_array_equal(a.final_state, b.final_state)
