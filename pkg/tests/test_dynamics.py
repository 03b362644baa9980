import numpy as np
import numpy.testing as npt
import pytest

from conftest import random_reduced_state, rank_one_spin
from orbitflow import (
    CotangentPoint,
    IntegrationError,
    MatrixModel,
    ReducedDerivative,
    ReducedState,
    casimirs,
    classical_cm_field,
    closed_form_2x2,
    compare_to_eigenflow,
    eigenflow,
    hamiltonian_ambient,
    hamiltonian_reduced,
    integrate,
    reconstruct,
    reduce,
    variational_flow,
    vector_field,
    z_matrix,
)


def _energy_gradient_pairing(s, d):
    """dh/dt along the field, from the analytic gradient of the energy."""
    G = s.a[:, None] - s.a[None, :]
    mask = (~s.frozen_mask) & (G != 0.0)
    dG = d.da[:, None] - d.da[None, :]
    val = float(np.dot(s.p, d.dp))
    val += float(np.sum(np.real(np.conj(s.Y[mask]) * d.dY[mask]) / G[mask] ** 2))
    val -= float(np.sum(np.abs(s.Y[mask]) ** 2 * dG[mask] / G[mask] ** 3))
    return val


class TestVectorField:
    def test_free_motion(self):
        s = ReducedState(a=np.array([2.0, 1.0, 0.0]), p=np.array([0.5, 0.0, -0.5]),
                         Y=np.zeros((3, 3)), model=MatrixModel.real_symmetric(3))
        d = vector_field(s)
        npt.assert_array_equal(d.da, s.p)
        npt.assert_array_equal(d.dp, 0.0)
        npt.assert_array_equal(d.dY, 0.0)

    def test_two_body_coupling_from_rank_one(self):
        # dp_i = 2 sum c^2/(a_i-a_j)^3 at a=(1,0), c=1 gives (2, -2)
        Y = np.array([[0.0, -1j], [-1j, 0.0]])
        s = ReducedState(a=np.array([1.0, 0.0]), p=np.zeros(2), Y=Y,
                         model=MatrixModel.hermitian(2))
        d = vector_field(s)
        npt.assert_allclose(d.dp, [2.0, -2.0], atol=1e-14)

    def test_two_body_symmetric_flip(self):
        Y = np.array([[0.0, 1.0], [-1.0, 0.0]])
        s = ReducedState(a=np.array([1.0, 0.0]), p=np.zeros(2), Y=Y,
                         model=MatrixModel.real_symmetric(2))
        d = vector_field(s)
        npt.assert_allclose(d.dp, [2.0, -2.0], atol=1e-14)
        npt.assert_array_equal(d.dY, 0.0)  # Z is proportional to Y for n=2

    def test_acceleration_matches_closed_form_curvature(self):
        # second derivative of the sorted eigenvalue branch at t=0
        h = 1e-5
        lam = [closed_form_2x2(1.0, 0.0, 0.0, 0.0, 1.0, t)[0]
               for t in (-h, 0.0, h)]
        accel = (lam[0] - 2 * lam[1] + lam[2]) / h**2
        assert accel == pytest.approx(2.0, abs=1e-5)

    def test_energy_conserved_along_field(self):
        # the chosen spin-equation sign makes dh/dt vanish identically
        rng = np.random.default_rng(0)
        for kind in ("hermitian", "real_symmetric"):
            for trial in range(20):
                s, *_ = random_reduced_state(kind, int(rng.integers(2, 6)),
                                             seed=100 + trial)
                d = vector_field(s)
                scale = max(1.0, abs(hamiltonian_reduced(s)))
                assert abs(_energy_gradient_pairing(s, d)) < 1e-10 * scale

    def test_z_matrix_sparsity(self):
        s, *_ = random_reduced_state("hermitian", 4, seed=5)
        Z = z_matrix(s)
        G = s.a[:, None] - s.a[None, :]
        off = ~np.eye(4, dtype=bool)
        npt.assert_allclose(Z[off], s.Y[off] / G[off] ** 2, atol=1e-15)
        assert np.all(np.diag(Z) == 0.0)


class TestHamiltonianReduced:
    def test_free_value(self):
        s = ReducedState(a=np.array([1.0, 0.0]), p=np.array([1.0, 2.0]),
                         Y=np.zeros((2, 2)), model=MatrixModel.real_symmetric(2))
        assert hamiltonian_reduced(s) == pytest.approx(2.5)

    def test_rank_one_matches_classical_potential(self):
        rng = np.random.default_rng(1)
        n, c = 4, -0.6
        a = np.array([2.0, 1.0, -0.4, -1.7])
        p = rng.standard_normal(n)
        s = ReducedState(a=a, p=p, Y=rank_one_spin(n, c, rng),
                         model=MatrixModel.hermitian(n))
        expected = 0.5 * np.sum(p**2)
        for i in range(n):
            for j in range(n):
                if i != j:
                    expected += 0.5 * c**2 / (a[i] - a[j]) ** 2
        assert hamiltonian_reduced(s) == pytest.approx(expected, abs=1e-12)

    def test_equals_ambient_energy_of_reconstruction(self):
        s, *_ = random_reduced_state("hermitian", 5, seed=2)
        assert hamiltonian_reduced(s) == pytest.approx(
            hamiltonian_ambient(reconstruct(s)), abs=1e-10
        )


class TestCasimirs:
    def test_zero_spin(self):
        npt.assert_array_equal(casimirs(np.zeros((3, 3)), 3), 0.0)

    def test_two_by_two_value(self):
        c = 0.7
        Y = np.array([[0.0, c * 1j], [c * 1j, 0.0]])
        npt.assert_allclose(casimirs(Y, 1), [2 * c**2], atol=1e-14)

    def test_constant_along_trajectory(self):
        s, *_ = random_reduced_state("hermitian", 4, seed=3)
        traj = integrate(s, 1.0)
        c0 = traj.step_casimir[0]
        drift = np.max(np.abs(traj.step_casimir - c0), axis=0)
        assert np.all(drift / np.maximum(1.0, np.abs(c0)) < 1e-8)


class TestIntegrate:
    def test_free_case_reflects_at_walls(self):
        # crossing momenta: the sampled states are the sorted diagonal flow
        s = ReducedState(a=np.array([1.0, 0.0, -1.0]),
                         p=np.array([-1.0, 0.0, 1.0]),
                         Y=np.zeros((3, 3)), model=MatrixModel.real_symmetric(3))
        traj = integrate(s, 3.0)
        for k, t in enumerate(traj.times):
            expected = np.sort(s.a + t * s.p)[::-1]
            npt.assert_allclose(traj.states[k].a, expected, atol=1e-12)
        assert any(e.kind == "reflection" for e in traj.events)

    def test_two_by_two_closed_form(self):
        s, _ = reduce(CotangentPoint(A=np.diag([1.0, 0.0]),
                                     alpha=np.array([[0.0, 1.0], [1.0, 0.0]])))
        traj = integrate(s, 2.0)
        for k, t in enumerate(traj.times):
            l1, l2 = closed_form_2x2(1.0, 0.0, 0.0, 0.0, 1.0, t)
            npt.assert_allclose(traj.states[k].a, [l1, l2], atol=1e-8)

    @pytest.mark.parametrize("kind", ["hermitian", "real_symmetric"])
    def test_matches_eigenflow_oracle(self, kind):
        s, A, alpha, _ = random_reduced_state(kind, 4, seed=4)
        traj = integrate(s, 1.0)
        dev, _ = compare_to_eigenflow(traj, A, alpha)
        assert np.max(dev) < 1e-6

    def test_flipped_sign_fails_oracle(self):
        s, A, alpha, _ = random_reduced_state("hermitian", 3, seed=5)
        traj = integrate(s, 1.0, debug_flip_sign=True)
        dev, _ = compare_to_eigenflow(traj, A, alpha)
        assert np.max(dev) > 1e-6

    def test_energy_drift_bounded(self):
        s, *_ = random_reduced_state("real_symmetric", 5, seed=6)
        traj = integrate(s, 1.0)
        drift = np.abs(traj.step_energy - traj.step_energy[0])
        assert np.max(drift) / max(1.0, abs(traj.step_energy[0])) < 1e-8

    def test_reversibility(self):
        s, *_ = random_reduced_state("hermitian", 4, seed=7)
        traj = integrate(s, 1.0)
        end = traj.final_state()
        back = ReducedState(a=end.a, p=-end.p, Y=-end.Y, model=end.model)
        traj_back = integrate(back, 1.0)
        again = traj_back.final_state()
        npt.assert_allclose(again.a, s.a, atol=1e-6)
        npt.assert_allclose(-again.p, s.p, atol=1e-6)
        npt.assert_allclose(-again.Y, s.Y, atol=1e-6)

    def test_wall_avoidance_with_full_spin(self):
        # all couplings nonzero: the trajectory stays away from the walls
        rng = np.random.default_rng(8)
        for n in (2, 3):
            a = np.sort(rng.standard_normal(n))[::-1] * 1.5
            a += np.arange(n)[::-1] * 0.4
            p = rng.standard_normal(n)
            s = ReducedState(a=a, p=p, Y=rank_one_spin(n, -0.5, rng),
                             model=MatrixModel.hermitian(n))
            traj = integrate(s, 2.0)
            assert not any(e.kind == "gap_floor" for e in traj.events)
            assert np.min(traj.min_gap) > 0.0

    def test_gap_floor_event_aborts(self):
        # nearly-closing pair with a coupling too weak to repel in time
        Y = np.array([[0.0, 1e-9], [-1e-9, 0.0]])
        s = ReducedState(a=np.array([1e-3, -1e-3]), p=np.array([-1.0, 1.0]),
                         Y=Y, model=MatrixModel.real_symmetric(2))
        with pytest.raises(IntegrationError) as exc:
            integrate(s, 1.0)
        traj = exc.value.trajectory
        assert any(e.kind == "gap_floor" for e in traj.events)
        assert traj.times[-1] < 1.0

    def test_t_end_validation(self):
        s, *_ = random_reduced_state("hermitian", 2, seed=9)
        with pytest.raises(Exception):
            integrate(s, -1.0)

    def test_initial_state_inside_gap_floor_rejected(self):
        from orbitflow import InputError

        Y = np.array([[0.0, 0.5], [-0.5, 0.0]])
        s = ReducedState(a=np.array([4e-8, -4e-8]), p=np.zeros(2), Y=Y,
                         model=MatrixModel.real_symmetric(2), tol=1e-9)
        with pytest.raises(InputError):
            integrate(s, 1.0)


class TestDegenerateBlocks:
    @pytest.mark.parametrize("kind", ["hermitian", "real_symmetric"])
    def test_decoupled_block_moves_freely(self, kind):
        model = MatrixModel(kind, 4)
        rng = np.random.default_rng(10)
        B2 = MatrixModel(kind, 2).random_matrix(rng)
        C2 = MatrixModel(kind, 2).random_matrix(rng)
        A = np.diag([5.0, 5.0, 1.0, 0.0]).astype(model.dtype)
        Z = np.zeros((2, 2), dtype=model.dtype)
        alpha = np.block([[B2, Z], [Z, C2]])
        s0, _ = reduce(CotangentPoint(A=A, alpha=alpha), model)
        traj = integrate(s0, 1.0)
        mu = np.sort(np.linalg.eigvalsh(B2))[::-1]
        for k, t in enumerate(traj.times):
            st = traj.states[k]
            # frozen entries stay exactly zero; block coordinates are affine
            assert np.max(np.abs(st.Y[:2, :2])) == 0.0
            assert np.max(np.abs(st.Y[:2, 2:])) == 0.0
            npt.assert_allclose(st.a[:2], 5.0 + t * mu, atol=1e-10)
        # remaining coordinates match the lower-dimensional regular run
        sub_model = MatrixModel(kind, 2)
        s_sub, _ = reduce(CotangentPoint(A=np.diag([1.0, 0.0]).astype(model.dtype),
                                         alpha=C2), sub_model)
        traj_sub = integrate(s_sub, 1.0)
        for k in range(len(traj.times)):
            npt.assert_allclose(traj.states[k].a[2:], traj_sub.states[k].a,
                                atol=1e-6)

    def test_coupled_degenerate_block_is_refused(self):
        # a degenerate pair coupled through the spin matrix leaves the
        # regime of the frozen-pattern equations: integration must stop
        model = MatrixModel.real_symmetric(3)
        A = np.diag([1.0, 1.0, 0.0])
        alpha = np.array([[0.4, 0.0, 0.3],
                          [0.0, -0.2, 0.9],
                          [0.3, 0.9, 0.0]])
        s0, _ = reduce(CotangentPoint(A=A, alpha=alpha), model)
        with pytest.raises(IntegrationError) as exc:
            integrate(s0, 1.0)
        assert any(e.kind == "frozen_drift" for e in exc.value.trajectory.events)


class TestClassicalCM:
    def test_two_body_values(self):
        da, dp = classical_cm_field(np.array([1.0, 0.0]), np.array([0.0, 0.0]), 1.0)
        npt.assert_array_equal(da, 0.0)
        npt.assert_allclose(dp, [2.0, -2.0], atol=1e-14)

    def test_zero_coupling_is_free(self):
        a = np.array([2.0, 1.0, 0.0])
        p = np.array([0.1, 0.2, 0.3])
        da, dp = classical_cm_field(a, p, 0.0)
        npt.assert_array_equal(da, p)
        npt.assert_array_equal(dp, 0.0)

    def test_degenerate_pairs_exert_no_force(self):
        a = np.array([1.0, 1.0, 0.0])
        _, dp = classical_cm_field(a, np.zeros(3), 1.0, tol=0.0)
        npt.assert_allclose(dp[0], 2.0, atol=1e-14)
        npt.assert_allclose(dp[1], 2.0, atol=1e-14)
        npt.assert_allclose(dp[2], -4.0, atol=1e-14)

    def test_matches_spin_field_on_rank_one_states(self):
        rng = np.random.default_rng(11)
        for n in (2, 3, 4, 5):
            c = -float(rng.uniform(0.3, 1.0))
            a = np.sort(rng.standard_normal(n))[::-1] + np.arange(n)[::-1]
            p = rng.standard_normal(n)
            s = ReducedState(a=a, p=p, Y=rank_one_spin(n, c, rng),
                             model=MatrixModel.hermitian(n))
            d = vector_field(s)
            da, dp = classical_cm_field(a, p, c)
            npt.assert_allclose(d.da, da, atol=1e-12)
            npt.assert_allclose(d.dp, dp, atol=1e-12)


class TestVariationalFlow:
    def test_free_case_affine_growth(self):
        s = ReducedState(a=np.array([2.0, 1.0, 0.0]), p=np.zeros(3),
                         Y=np.zeros((3, 3)), model=MatrixModel.real_symmetric(3))
        da0 = np.array([0.1, 0.0, -0.1])
        dp0 = np.array([0.0, 0.2, 0.0])
        vt = variational_flow(
            s, ReducedDerivative(da=da0, dp=dp0, dY=np.zeros((3, 3))), 2.0
        )
        for k, t in enumerate(vt.times):
            npt.assert_allclose(vt.delta_a[k], da0 + t * dp0, atol=1e-13)
            npt.assert_allclose(vt.delta_p[k], dp0, atol=1e-13)

    def test_zero_perturbation_stays_zero(self):
        s, *_ = random_reduced_state("hermitian", 3, seed=12)
        vt = variational_flow(
            s,
            ReducedDerivative(da=np.zeros(3), dp=np.zeros(3),
                              dY=np.zeros((3, 3), complex)),
            1.0,
        )
        assert np.max(np.abs(vt.delta_a)) == 0.0
        assert np.max(np.abs(vt.delta_p)) == 0.0
        assert np.max(np.abs(vt.delta_Y)) == 0.0

    def test_matches_central_finite_differences(self):
        from orbitflow.dynamics import pack_state, unpack_state

        s, _, _, model = random_reduced_state("real_symmetric", 3, seed=13)
        rng = np.random.default_rng(14)
        da0 = rng.standard_normal(3) * 0.1
        dp0 = rng.standard_normal(3) * 0.1
        dY0 = np.zeros((3, 3))
        dY0[1, 0], dY0[2, 0] = 0.1, -0.05
        dY0 -= dY0.T
        vt = variational_flow(
            s, ReducedDerivative(da=da0, dp=dp0, dY=dY0), 1.0, samples=10
        )
        eps = 1e-6
        y0 = pack_state(s.a, s.p, s.Y, model)
        dy = pack_state(da0, dp0, dY0, model)

        def run(y):
            a, p, Y = unpack_state(y, 3, model)
            st = ReducedState(a=a, p=p, Y=Y, model=model)
            return integrate(st, 1.0, samples=10)

        plus, minus = run(y0 + eps * dy), run(y0 - eps * dy)
        for k, t in enumerate(vt.times):
            fd_a = (plus.states[k].a - minus.states[k].a) / (2 * eps)
            fd_p = (plus.states[k].p - minus.states[k].p) / (2 * eps)
            npt.assert_allclose(vt.delta_a[k], fd_a, atol=10 * eps)
            npt.assert_allclose(vt.delta_p[k], fd_p, atol=10 * eps)


class TestEigenflowConsistencyExamples:
    def test_commuting_line_stays_piecewise_linear(self):
        A = np.diag([2.0, 1.0, 0.0])
        alpha = np.diag([0.3, 0.2, 0.1])
        s, _ = reduce(CotangentPoint(A=A, alpha=alpha))
        traj = integrate(s, 1.0)
        rows = eigenflow(A, alpha, times=traj.times)
        for k in range(len(traj.times)):
            npt.assert_allclose(traj.states[k].a, rows[k], atol=1e-12)
