import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aqgates.core import (
    SIGMA_MINUS,
    SIGMA_X,
    SIGMA_Z,
    DensityOperator,
    LindbladModel,
    Operator,
    StateVector,
    TimeGrid,
    basis,
    coherent_state,
    destroy,
    gaussian_envelope,
    integrate_lindblad,
    integrate_schrodinger,
    jump_ensemble,
    partial_trace,
    quantum_jump_trajectory,
    steady_state,
    tensor,
)
from aqgates.errors import (
    InvalidModelError,
    InvalidParameterError,
    InvalidStateError,
)

EXCITED = basis(2, 1)
GROUND = basis(2, 0)


class TestGaussianEnvelope:
    def test_peak_value(self):
        u = gaussian_envelope(1.0, 0.0)
        assert u(0.0) == pytest.approx((1 / (2 * math.pi)) ** 0.25, abs=1e-12)
        assert abs(u(0.0)) == pytest.approx(0.6316, abs=5e-5)

    @pytest.mark.parametrize("bw,t0", [(1.0, 0.0), (0.03, 100.0), (0.5, -3.0)])
    def test_normalised(self, bw, t0):
        assert gaussian_envelope(bw, t0).energy() == pytest.approx(1.0, abs=1e-6)

    def test_even_about_center(self):
        u = gaussian_envelope(0.7, 2.5)
        s = np.linspace(0, 8, 17)
        np.testing.assert_allclose(u(2.5 + s), u(2.5 - s), atol=1e-15)

    def test_zero_outside_support(self):
        u = gaussian_envelope(1.0, 0.0)
        assert u(u.t_end + 1e-3) == 0
        assert u(u.t_start - 1.0) == 0

    @pytest.mark.parametrize("bw", [0.0, -1.0])
    def test_rejects_nonpositive_bandwidth(self, bw):
        with pytest.raises(InvalidParameterError):
            gaussian_envelope(bw, 0.0)


def rabi_hamiltonian(rabi, detuning=0.0):
    return 0.5 * rabi * SIGMA_X + 0.5 * detuning * SIGMA_Z


class TestSchrodinger:
    def test_zero_hamiltonian_is_identity(self):
        psi0 = StateVector([1, 1j, 0.5])
        traj = integrate_schrodinger(np.zeros((3, 3)), psi0, TimeGrid(0, 5, 0.1))
        np.testing.assert_allclose(traj.states, np.tile(psi0.amplitudes, (len(traj), 1)), atol=1e-15)

    def test_resonant_pi_pulse_inverts(self):
        rabi = 2.0
        traj = integrate_schrodinger(rabi_hamiltonian(rabi), GROUND, TimeGrid(0, math.pi / rabi, 0.005))
        assert abs(traj.final[1]) ** 2 == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("detuning", [0.5, 1.0, 3.0])
    def test_detuned_rabi_maximum(self, detuning):
        rabi = 1.0
        gen = math.hypot(rabi, detuning)
        traj = integrate_schrodinger(rabi_hamiltonian(rabi, detuning), GROUND,
                                     TimeGrid(0, math.pi / gen, 0.002))
        assert abs(traj.final[1]) ** 2 == pytest.approx(rabi**2 / (rabi**2 + detuning**2), abs=1e-5)

    def test_norm_preserved(self):
        H = lambda t: rabi_hamiltonian(1.0 + 0.5 * math.sin(t), 0.3 * t)
        traj = integrate_schrodinger(H, GROUND, TimeGrid(0, 20, 0.01))
        np.testing.assert_allclose(np.linalg.norm(traj.states, axis=1), 1.0, atol=1e-8)

    def test_fourth_order_convergence(self):
        H = lambda t: rabi_hamiltonian(1.0 + 0.5 * math.cos(2 * t), 0.7)
        ref = integrate_schrodinger(H, GROUND, TimeGrid(0, 4, 0.2), substeps=64).final
        errs = []
        for sub in (1, 2, 4):
            out = integrate_schrodinger(H, GROUND, TimeGrid(0, 4, 0.2), substeps=sub).final
            errs.append(np.linalg.norm(out - ref))
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(orders > 3.7)

    def test_step_halving_changes_observable_below_1e_6(self):
        H = lambda t: rabi_hamiltonian(1.0, 0.4 * math.sin(t))
        a = integrate_schrodinger(H, GROUND, TimeGrid(0, 10, 0.02))
        b = integrate_schrodinger(H, GROUND, TimeGrid(0, 10, 0.02), substeps=2)
        assert np.max(np.abs(a.populations() - b.populations())) < 1e-6

    def test_rejects_non_hermitian(self):
        with pytest.raises(InvalidModelError):
            integrate_schrodinger(np.array([[0, 1], [0, 0]]), GROUND, TimeGrid(0, 1, 0.1))
        with pytest.raises(InvalidModelError):
            integrate_schrodinger(lambda t: np.array([[0, t], [0, 0]]), GROUND, TimeGrid(0, 1, 0.1))

    def test_rejects_unnormalised_state(self):
        with pytest.raises(InvalidStateError):
            integrate_schrodinger(SIGMA_X, np.array([1.0, 1.0]), TimeGrid(0, 1, 0.1))


def decay_model(gamma, H=None):
    H = np.zeros((2, 2)) if H is None else H
    return LindbladModel(Operator(H), ((Operator(SIGMA_MINUS), gamma),))


class TestLindblad:
    def test_amplitude_damping(self):
        gamma = 0.8
        traj = integrate_lindblad(decay_model(gamma), EXCITED, TimeGrid(0, 5, 0.01))
        np.testing.assert_allclose(traj.populations()[:, 1], np.exp(-gamma * traj.times), atol=1e-6)

    def test_empty_model_is_static(self):
        rho0 = DensityOperator(np.array([[0.3, 0.2j], [-0.2j, 0.7]]))
        model = LindbladModel(Operator(np.zeros((2, 2))))
        traj = integrate_lindblad(model, rho0, TimeGrid(0, 3, 0.1))
        np.testing.assert_allclose(traj.states, np.broadcast_to(rho0.matrix, traj.states.shape))

    def test_damped_coherent_state(self):
        # closed form: a coherent state stays coherent with alpha(t) = alpha0 exp(-gamma t / 2)
        n, gamma, alpha0 = 20, 1.0, 1.2
        a = destroy(n)
        model = LindbladModel(Operator(np.zeros((n, n))), ((Operator(a), gamma),))
        traj = integrate_lindblad(model, coherent_state(n, alpha0), TimeGrid(0, 4, 0.01))
        expected = alpha0 * np.exp(-gamma * traj.times / 2)
        np.testing.assert_allclose(traj.expect(a), expected, atol=1e-5)

    def test_trace_preserved(self):
        H = 0.5 * SIGMA_X
        traj = integrate_lindblad(decay_model(0.3, H), GROUND, TimeGrid(0, 10, 0.01))
        np.testing.assert_allclose(np.trace(traj.states, axis1=1, axis2=2), 1.0, atol=1e-8)

    def test_rejects_negative_rate(self):
        with pytest.raises(InvalidModelError):
            decay_model(-0.1)

    def test_steady_state_of_driven_decay(self):
        # optical Bloch steady state: P_e = (W^2/4) / (D^2 + g^2/4 + W^2/2), W=rabi, D=0
        rabi, gamma = 1.0, 0.5
        rho = steady_state(decay_model(gamma, 0.5 * rabi * SIGMA_X))
        expected = (rabi**2 / 4) / (gamma**2 / 4 + rabi**2 / 2)
        assert rho[1, 1].real == pytest.approx(expected, abs=1e-10)


class TestQuantumJumps:
    def test_zero_rates_give_unitary_trajectory(self):
        model = LindbladModel(Operator(0.5 * SIGMA_X), ((Operator(SIGMA_MINUS), 0.0),))
        grid = TimeGrid(0, 6, 0.01)
        traj, jumps = quantum_jump_trajectory(model, GROUND, grid, seed=3)
        ref = integrate_schrodinger(0.5 * SIGMA_X, GROUND, grid)
        assert jumps == []
        np.testing.assert_allclose(traj.states, ref.states, atol=1e-8)

    def test_seed_reproducible(self):
        model = decay_model(1.0, 0.5 * SIGMA_X)
        grid = TimeGrid(0, 20, 0.02)
        _, j1 = quantum_jump_trajectory(model, GROUND, grid, seed=11)
        _, j2 = quantum_jump_trajectory(model, GROUND, grid, seed=11)
        assert j1 == j2 and len(j1) > 0

    def test_exponential_waiting_time(self):
        gamma = 2.0
        ens = jump_ensemble(decay_model(gamma), EXCITED, TimeGrid(0, 12, 0.01), seed=1, n_traj=10_000)
        first = np.array([r.times[0] for r in ens.records if len(r)])
        assert len(first) > 9990
        assert np.mean(first) == pytest.approx(1 / gamma, rel=0.03)

    def test_branching_ratio(self):
        # |e> decays to |g> (rate 1) or |s> (rate 3): branching 1:3
        def op(i, j):
            m = np.zeros((3, 3))
            m[i, j] = 1
            return Operator(m)
        model = LindbladModel(Operator(np.zeros((3, 3))), ((op(0, 2), 1.0), (op(1, 2), 3.0)))
        ens = jump_ensemble(model, basis(3, 2), TimeGrid(0, 6, 0.01), seed=2, n_traj=10_000)
        counts = np.bincount(np.concatenate([r.channels for r in ens.records]), minlength=2)
        assert counts[1] / counts.sum() == pytest.approx(0.75, rel=0.03)
        assert counts[0] / counts.sum() == pytest.approx(0.25, rel=0.03)

    def test_ensemble_matches_master_equation(self):
        model = decay_model(0.6, 0.5 * 1.3 * SIGMA_X)
        grid = TimeGrid(0, 8, 0.02)
        ens = jump_ensemble(model, GROUND, grid, seed=5, n_traj=10_000)
        me = integrate_lindblad(model, GROUND, grid).populations()
        # populations are probabilities: 2% is an absolute bound
        assert np.max(np.abs(ens.mean_populations - me)) < 0.02


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), da=st.integers(1, 4), db=st.integers(1, 4))
def test_tensor_product_factorises(seed, da, db):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(da, da)) + 1j * rng.normal(size=(da, da))
    B = rng.normal(size=(db, db)) + 1j * rng.normal(size=(db, db))
    pa = rng.normal(size=da) + 1j * rng.normal(size=da)
    pb = rng.normal(size=db) + 1j * rng.normal(size=db)
    np.testing.assert_allclose(tensor(A, B) @ tensor(pa, pb), tensor(A @ pa, B @ pb), atol=1e-12)


def test_partial_trace_of_product():
    ra = np.array([[0.7, 0.1], [0.1, 0.3]])
    rb = np.diag([0.2, 0.5, 0.3])
    full = np.kron(ra, rb)
    np.testing.assert_allclose(partial_trace(full, [2, 3], [0]), ra, atol=1e-15)
    np.testing.assert_allclose(partial_trace(full, [2, 3], [1]), rb, atol=1e-15)


def test_density_operator_validation():
    with pytest.raises(InvalidStateError):
        DensityOperator(np.diag([0.5, 0.6]))
    with pytest.raises(InvalidStateError):
        DensityOperator(np.diag([1.2, -0.2]))
    with pytest.raises(InvalidStateError):
        DensityOperator(np.array([[0.5, 0.1], [0.2, 0.5]]))


def test_hermitian_flag_checked():
    with pytest.raises(InvalidModelError):
        Operator(np.array([[0, 1], [0, 0]]), hermitian=True)
    assert Operator(SIGMA_X).hermitian
