import numpy as np
import pytest

import sensorcollab as sc
from sensorcollab import admm
from sensorcollab.model import (CollaborationTopology, CorrelationSpec,
                                assemble_instance, random_instance,
                                standard_view, time_invariant_view)


def small_sdp(seed=7, tau=0.7, num_sensors=4, horizon=2, radius=0.6,
              time_invariant=False):
    inst = random_instance(seed - 4, num_sensors=num_sensors, horizon=horizon,
                           radius=radius)
    view = time_invariant_view(inst) if time_invariant else standard_view(inst)
    rng = np.random.default_rng(seed)
    return admm.PenalizedSdp(view, rng.uniform(0.0, 1.0, view.dim), tau)


def sym(rng, n):
    a = rng.normal(size=(n, n))
    return 0.5 * (a + a.T)


def random_primal(sdp, rng):
    L = sdp.block_size
    return admm.PrimalSet(
        w=rng.normal(size=sdp.dim), p=rng.normal(size=sdp.K),
        V=sym(rng, sdp.K),
        U=[sym(rng, L) for _ in range(sdp.J)],
        Z=[sym(rng, L) for _ in range(sdp.J)])


def random_slack(sdp, rng, cls=admm.SlackSet):
    out = cls.zeros(sdp)
    out.lam = [rng.normal(size=sdp.dim + 1) for _ in range(sdp.M)]
    out.L1 = sym(rng, 2 * sdp.K)
    out.L2 = [sym(rng, sdp.N + 1) for _ in range(sdp.K)]
    out.L3 = [sym(rng, sdp.block_size + 1) for _ in range(sdp.J)]
    out.L4 = [sym(rng, sdp.block_size) for _ in range(sdp.J)]
    return out


class TestProjections:
    def test_soc_inside_cone(self):
        beta = np.array([3.0, 4.0, 10.0])
        np.testing.assert_array_equal(admm.project_soc(beta), beta)

    def test_soc_polar_cone(self):
        np.testing.assert_array_equal(
            admm.project_soc(np.array([3.0, 4.0, -6.0])), np.zeros(3))

    def test_soc_boundary_case(self):
        out = admm.project_soc(np.array([3.0, 4.0, 0.0]))
        np.testing.assert_allclose(out, [1.5, 2.0, 2.5])

    def test_soc_nearest_point_by_sampling(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            beta = rng.normal(size=6) * 3
            proj = admm.project_soc(beta)
            assert np.linalg.norm(proj[:-1]) <= proj[-1] + 1e-12
            best = np.linalg.norm(proj - beta)
            for _ in range(1000):
                v = rng.normal(size=5)
                t = np.linalg.norm(v) * (1 + rng.uniform(0, 2))
                cand = np.concatenate([v, [t]])
                assert np.linalg.norm(cand - beta) >= best - 1e-8

    def test_psd_diagonal_clamp(self):
        out = admm.project_psd(np.diag([2.0, -3.0]))
        np.testing.assert_allclose(out, np.diag([2.0, 0.0]), atol=1e-12)

    def test_psd_offdiagonal(self):
        out = admm.project_psd(np.array([[0.0, 1.0], [1.0, 0.0]]))
        np.testing.assert_allclose(out, [[0.5, 0.5], [0.5, 0.5]], atol=1e-12)

    def test_psd_fixes_cone(self):
        rng = np.random.default_rng(1)
        a = rng.normal(size=(5, 5))
        spd = a @ a.T + 0.1 * np.eye(5)
        np.testing.assert_allclose(admm.project_psd(spd), spd, atol=1e-12)

    def test_psd_idempotent_and_nearest(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            phi = sym(rng, 4) * 2
            proj = admm.project_psd(phi)
            np.testing.assert_allclose(admm.project_psd(proj), proj,
                                       atol=1e-10)
            assert np.linalg.eigvalsh(proj).min() >= -1e-12
            best = np.linalg.norm(proj - phi)
            for _ in range(1000):
                b = rng.normal(size=(4, 4))
                cand = b @ b.T
                assert np.linalg.norm(cand - phi) >= best - 1e-8


class TestGradients:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(11)
        sdp = small_sdp()
        rho = 1.3
        primal = random_primal(sdp, rng)
        slack = random_slack(sdp, rng)
        dual = random_slack(sdp, rng, admm.DualSet)
        grads = admm.gradient_uqp(sdp, primal, slack, dual, rho)

        def phi(pr):
            return admm.phi_value(sdp, pr, slack, dual, rho)

        h = 1e-6
        fd_w = np.zeros(sdp.dim)
        for i in range(sdp.dim):
            hi, lo = primal.copy(), primal.copy()
            hi.w[i] += h
            lo.w[i] -= h
            fd_w[i] = (phi(hi) - phi(lo)) / (2 * h)
        assert np.linalg.norm(fd_w - grads.w) <= \
            1e-5 * max(1.0, np.linalg.norm(grads.w))

        fd_p = np.zeros(sdp.K)
        for i in range(sdp.K):
            hi, lo = primal.copy(), primal.copy()
            hi.p[i] += h
            lo.p[i] -= h
            fd_p[i] = (phi(hi) - phi(lo)) / (2 * h)
        assert np.linalg.norm(fd_p - grads.p) <= \
            1e-5 * max(1.0, np.linalg.norm(grads.p))

    def test_zero_state_closed_values(self):
        # all variables, shifts, and the linearization point at zero:
        # the Z gradient is tau I and the V gradient is the identity
        inst = random_instance(3, num_sensors=3, horizon=2, radius=0.8)
        view = standard_view(inst)
        sdp = admm.PenalizedSdp(view, np.zeros(view.dim), tau=0.9)
        zero = admm.PrimalSet(w=np.zeros(sdp.dim), p=np.zeros(sdp.K),
                              V=np.zeros((sdp.K, sdp.K)),
                              U=[np.zeros((sdp.block_size,) * 2)
                                 for _ in range(sdp.J)],
                              Z=[np.zeros((sdp.block_size,) * 2)
                                 for _ in range(sdp.J)])
        grads = admm.gradient_uqp(sdp, zero, admm.SlackSet.zeros(sdp),
                                  admm.DualSet.zeros(sdp), 1.0)
        for g in grads.Z:
            np.testing.assert_allclose(g, 0.9 * np.eye(sdp.block_size),
                                       atol=1e-12)
        np.testing.assert_allclose(grads.V, np.eye(sdp.K), atol=1e-12)

    def test_gradient_symmetry(self):
        rng = np.random.default_rng(12)
        sdp = small_sdp(seed=9)
        grads = admm.gradient_uqp(sdp, random_primal(sdp, rng),
                                  random_slack(sdp, rng),
                                  random_slack(sdp, rng, admm.DualSet), 2.0)
        for g in grads.U + grads.Z:
            np.testing.assert_allclose(g, g.T, atol=1e-10)


class TestClosedFormPV:
    def test_zero_shift_values(self):
        sdp = small_sdp()
        p, V = admm.closed_form_p_V(sdp, admm.SlackSet.zeros(sdp),
                                    admm.DualSet.zeros(sdp), 1.0)
        np.testing.assert_allclose(p, 0.5 * np.diag(sdp.C), atol=1e-12)
        np.testing.assert_allclose(V, -np.eye(sdp.K), atol=1e-12)

    def test_stationarity(self):
        rng = np.random.default_rng(13)
        sdp = small_sdp(seed=10)
        slack = random_slack(sdp, rng)
        dual = random_slack(sdp, rng, admm.DualSet)
        rho = 1.7
        p, V = admm.closed_form_p_V(sdp, slack, dual, rho)
        primal = random_primal(sdp, rng)
        primal.p, primal.V = p, V
        grads = admm.gradient_uqp(sdp, primal, slack, dual, rho)
        assert np.abs(grads.p).max() <= 1e-10
        assert np.abs(grads.V).max() <= 1e-10

    def test_coordinate_perturbation_optimality(self):
        rng = np.random.default_rng(14)
        sdp = small_sdp(seed=11)
        slack = random_slack(sdp, rng)
        dual = random_slack(sdp, rng, admm.DualSet)
        rho = 0.9
        p, V = admm.closed_form_p_V(sdp, slack, dual, rho)
        primal = random_primal(sdp, rng)
        primal.p, primal.V = p.copy(), V.copy()
        base = admm.phi_value(sdp, primal, slack, dual, rho)
        for i in range(sdp.K):
            for delta in (1e-4, -1e-4):
                bump = primal.copy()
                bump.p = bump.p.copy()
                bump.p[i] += delta
                assert admm.phi_value(sdp, bump, slack, dual, rho) >= base


class TestXMinimize:
    def test_descent(self):
        rng = np.random.default_rng(15)
        sdp = small_sdp(seed=12)
        slack = random_slack(sdp, rng)
        dual = random_slack(sdp, rng, admm.DualSet)
        config = admm.AdmmConfig()
        start = random_primal(sdp, rng)
        out, iters, stalled = admm.x_minimize(sdp, start, slack, dual, config)
        assert not stalled
        phi_before = admm.phi_value(sdp, _with_pv(start, out), slack, dual,
                                    config.rho)
        phi_after = admm.phi_value(sdp, out, slack, dual, config.rho)
        assert phi_after <= phi_before + 1e-9

    def test_gradient_energy_below_tolerance(self):
        rng = np.random.default_rng(16)
        sdp = small_sdp(seed=13)
        slack = random_slack(sdp, rng)
        dual = random_slack(sdp, rng, admm.DualSet)
        config = admm.AdmmConfig(max_grad_iters=2000)
        out, _, stalled = admm.x_minimize(sdp, random_primal(sdp, rng),
                                          slack, dual, config)
        assert not stalled
        grads = admm.gradient_uqp(sdp, out, slack, dual, config.rho)
        assert grads.squared_norm_wuz() <= config.eps_grad

    def test_scalar_quadratic_analytic_minimum(self):
        # K = 1, L = 1 network: minimizing over w alone is a scalar
        # quadratic, so the converged w must match the stationary point of
        # phi along w computed by a dense 1-D scan
        topo = CollaborationTopology.from_adjacency(np.eye(1))
        inst = assemble_instance(topo, 1, np.array([[0.8]]),
                                 np.array([[0.6]]), 1.0, 1.0, 1.0,
                                 CorrelationSpec("uncorrelated"),
                                 np.array([1.0]))
        sdp = admm.PenalizedSdp(standard_view(inst), np.array([0.4]), 1.0)
        rng = np.random.default_rng(17)
        slack = random_slack(sdp, rng)
        dual = random_slack(sdp, rng, admm.DualSet)
        config = admm.AdmmConfig(eps_grad=1e-14, max_grad_iters=20_000)
        out, _, _ = admm.x_minimize(sdp, random_primal(sdp, rng), slack,
                                    dual, config)
        ws = np.linspace(out.w[0] - 0.1, out.w[0] + 0.1, 4001)
        vals = []
        for wv in ws:
            cand = out.copy()
            cand.w = np.array([wv])
            vals.append(admm.phi_value(sdp, cand, slack, dual, config.rho))
        assert abs(ws[int(np.argmin(vals))] - out.w[0]) <= 1e-4


def _with_pv(start, solved):
    mixed = start.copy()
    mixed.p = solved.p.copy()
    mixed.V = solved.V.copy()
    return mixed


class TestZMinimizeAndDuals:
    def test_zero_state_lambda_is_budget_vertex(self):
        sdp = small_sdp(seed=18)
        primal = admm.PrimalSet.cold_start(sdp)
        primal.w = np.zeros(sdp.dim)
        slack = admm.z_minimize(sdp, primal, admm.DualSet.zeros(sdp), 1.0)
        for m in range(sdp.M):
            np.testing.assert_allclose(slack.lam[m], sdp.c_vecs[m],
                                       atol=1e-12)

    def test_slacks_in_cones(self):
        rng = np.random.default_rng(19)
        sdp = small_sdp(seed=19)
        slack = admm.z_minimize(sdp, random_primal(sdp, rng),
                                random_slack(sdp, rng, admm.DualSet), 2.0)
        for lam in slack.lam:
            assert np.linalg.norm(lam[:-1]) <= lam[-1] + 1e-9
        for mat in [slack.L1] + slack.L2 + slack.L3 + slack.L4:
            assert np.linalg.eigvalsh(mat).min() >= -1e-9

    def test_idempotence(self):
        rng = np.random.default_rng(20)
        sdp = small_sdp(seed=20)
        primal = random_primal(sdp, rng)
        dual = random_slack(sdp, rng, admm.DualSet)
        a = admm.z_minimize(sdp, primal, dual, 1.5)
        b = admm.z_minimize(sdp, primal, dual, 1.5)
        assert a.distance_to(b) == 0.0

    def test_dual_update_arithmetic(self):
        sdp = small_sdp(seed=21)
        duals = admm.DualSet.zeros(sdp)
        primal = admm.PrimalSet.cold_start(sdp)
        slack = admm.SlackSet.zeros(sdp)
        res = admm.constraint_residuals(sdp, primal, slack)
        updated = admm.dual_update(duals, res, 2.0)
        np.testing.assert_allclose(updated.lam[0], 2.0 * res.f[0])
        np.testing.assert_allclose(updated.L1, 2.0 * res.F1)
        # zero residuals leave duals unchanged
        zero_res = admm.constraint_residuals(sdp, primal, slack)
        zero_res.f = [np.zeros_like(v) for v in zero_res.f]
        zero_res.F1 = np.zeros_like(zero_res.F1)
        zero_res.F2 = [np.zeros_like(v) for v in zero_res.F2]
        zero_res.F3 = [np.zeros_like(v) for v in zero_res.F3]
        zero_res.F4 = [np.zeros_like(v) for v in zero_res.F4]
        again = admm.dual_update(updated, zero_res, 2.0)
        np.testing.assert_array_equal(again.L1, updated.L1)

    def test_sqrt_factorization_identity(self):
        sdp = small_sdp(seed=22)
        for m in range(sdp.M):
            np.testing.assert_allclose(sdp.q_sqrt[m].T @ sdp.q_sqrt[m],
                                       sdp.view.energy[m], atol=1e-10)


class TestSolve:
    def test_small_instance_converges(self):
        sdp = small_sdp(seed=7, tau=0.7)
        primal, rep = admm.solve(sdp, admm.AdmmConfig(max_iters=2000))
        assert rep.status == "ok"
        assert rep.extras["primal_residual"] <= 1e-3
        assert rep.extras["slack_change"] <= 1e-3

    def test_zero_budget_forces_zero_weights(self):
        # with the penalty at its cap, inflating the lifted blocks no longer
        # pays, so zero energy pins everything at the prior-only solution
        topo = CollaborationTopology.from_adjacency(np.eye(2))
        inst = assemble_instance(topo, 1, np.ones((1, 2)), np.ones((1, 2)),
                                 1.0, 1.0, 1.0,
                                 CorrelationSpec("uncorrelated"), np.zeros(2))
        sdp = admm.PenalizedSdp(standard_view(inst), np.zeros(2), tau=100.0)
        primal, rep = admm.solve(sdp, admm.AdmmConfig(max_iters=3000))
        assert np.abs(primal.w).max() <= 5e-3
        slack = admm.z_minimize(sdp, primal, admm.DualSet.zeros(sdp), 10.0)
        for m in range(sdp.M):
            np.testing.assert_allclose(slack.lam[m], sdp.c_vecs[m], atol=5e-3)
        # prior-only information: tr(V) approaches tr(Sigma_theta) = 1
        assert np.trace(primal.V) == pytest.approx(1.0, abs=0.05)

    def test_tiny_sdp_matches_grid_oracle(self):
        # K = 1, L = 1: for fixed (w, U) the remaining variables have closed
        # forms, so a dense 2-D grid bounds the optimum
        topo = CollaborationTopology.from_adjacency(np.eye(1))
        inst = assemble_instance(topo, 1, np.array([[0.8]]),
                                 np.array([[0.6]]), 1.0, 1.0, 1.0,
                                 CorrelationSpec("uncorrelated"),
                                 np.array([1.0]))
        view = standard_view(inst)
        w_hat = np.array([0.4])
        tau = 1.0
        sdp = admm.PenalizedSdp(view, w_hat, tau)
        primal, rep = admm.solve(sdp, admm.AdmmConfig(max_iters=3000))
        assert rep.status == "ok"

        C = sdp.C[0, 0]
        c_ratio = sdp.c_ratio
        h2 = inst.obs_gains[0, 0] ** 2
        g2 = inst.channel_gains[0, 0] ** 2
        Q = inst.Q[0][0][0, 0]
        wmax = np.sqrt(inst.budgets[0] / Q)
        ws = np.linspace(-wmax, wmax, 801)
        us = np.linspace(0.0, 4 * wmax ** 2 + 2.0, 1201)
        W, U = np.meshgrid(ws, us, indexing="ij")
        mask = U >= W ** 2
        p_lb = (h2 / inst.sigma_eps_sq) / (1.0 + c_ratio * g2 * U)
        V = 1.0 / (C - p_lb)
        Z = U - 2 * w_hat[0] * W + w_hat[0] ** 2
        obj = np.where(mask, V + tau * Z, np.inf)
        oracle = obj.min()
        assert rep.objective == pytest.approx(oracle, rel=1e-2)

    def test_iteration_log_schema(self):
        sdp = small_sdp(seed=23)
        _, rep = admm.solve(sdp, admm.AdmmConfig(max_iters=50))
        row = rep.trajectory_rows[0]
        assert list(row.keys()) == ["iteration", "objective",
                                    "primal_residual", "slack_change", "rho",
                                    "grad_iters", "elapsed_ms"]

    def test_time_invariant_layout_runs(self):
        sdp = small_sdp(seed=24, time_invariant=True, horizon=3)
        assert sdp.J == 1
        primal, rep = admm.solve(sdp, admm.AdmmConfig(max_iters=2000))
        assert rep.status == "ok"
        assert primal.w.shape == (sdp.dim,)
        assert rep.plan.shape == (3 * sdp.dim,)

    def test_warm_start_reuses_primal(self):
        sdp = small_sdp(seed=25)
        primal, rep1 = admm.solve(sdp, admm.AdmmConfig(max_iters=2000))
        _, rep2 = admm.solve(sdp, admm.AdmmConfig(max_iters=2000),
                             warm_primal=primal)
        assert rep2.iterations <= rep1.iterations

    def test_residual_windowed_decrease(self):
        # soft invariant: over a converging run, the combined primal
        # residual maxed over consecutive 50-iteration windows increases at
        # most a few times (the plateau at the inexactness floor after
        # convergence is excluded by stopping at eps_admm)
        sdp = small_sdp(seed=26, num_sensors=5, horizon=2, radius=0.5)
        _, rep = admm.solve(sdp, admm.AdmmConfig(max_iters=2000))
        assert rep.status == "ok"
        res = np.array([r["primal_residual"] for r in rep.trajectory_rows])
        window_max = [res[i:i + 50].max() for i in range(0, len(res), 50)]
        increases = sum(1 for a, b in zip(window_max, window_max[1:])
                        if b > a * (1 + 1e-9))
        assert increases <= 3
