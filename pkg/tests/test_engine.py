import numpy as np
import pytest

from quditmeas.bayes import MCMCConfig
from quditmeas.engine import (
    EstimationReport,
    RunSettings,
    XiEstimate,
    comparison_metrics,
    delta_o,
    fit_noise_model,
    record_batch,
    relative_advantage,
    run_estimation,
    select_clique,
    systematic_deviation,
    worst_case_bound,
    xi_posterior,
)
from quditmeas.clifford import CliffordCircuit, Gate
from quditmeas.graph import Clique, EdgeEstimates, build_graph, clique_cover
from quditmeas.observables import Observable
from quditmeas.paulis import PauliString, QuditRegister
from quditmeas.simulator import NoiseModel, ProbeTally, StateVector, basis_state, prepare_product_state


def make_obs(dims, terms):
    reg = QuditRegister(tuple(dims))
    return Observable(reg, [(c, PauliString(reg, tuple(exps))) for c, exps in terms])


def fast_settings(**kw):
    base = dict(
        budget=400,
        seed=11,
        mcmc=MCMCConfig(n_chains=2, min_samples=120, max_samples=240, seed=0),
    )
    base.update(kw)
    return RunSettings(**base)


Z_OBS = make_obs((2,), [(1.0, [(0, 1)])])


class TestXiPosterior:
    def test_uninformative(self):
        assert xi_posterior(ProbeTally()).mean == pytest.approx(0.5)

    def test_posterior_mean(self):
        assert xi_posterior(ProbeTally(n_error=1, n_ok=99)).mean == pytest.approx(2 / 102)

    def test_limit_to_zero(self):
        means = [xi_posterior(ProbeTally(0, n)).mean for n in (10, 100, 10_000)]
        assert means[0] > means[1] > means[2]
        assert means[2] < 1e-3

    def test_variance_matches_beta(self):
        t = ProbeTally(n_error=3, n_ok=7)
        m = (3 + 1) / 12
        assert xi_posterior(t).variance == pytest.approx(m * (1 - m) / 13)


class TestRecordBatch:
    def test_singleton_counts(self):
        g = build_graph(Z_OBS, "general")
        clique = Clique((0,), circuit=CliffordCircuit((), Z_OBS.register))
        record_batch(g, clique, np.array([[0], [0], [1]]))
        assert g.tallies.m_of(0) == 3
        assert list(g.tallies.s[0]) == [2, 1]

    def test_pair_counts_and_identity(self):
        obs = make_obs((2, 2), [(1.0, [(1, 0), (1, 0)]), (0.5, [(0, 1), (0, 1)])])
        g = build_graph(obs, "general")
        cover = clique_cover(g)
        from quditmeas.clifford import diagonalize_clique

        strings = obs.strings()
        joint = next(c for c in cover if len(c.vertices) == 2)
        joint.circuit = diagonalize_clique([strings[v] for v in joint.vertices], "general")
        rng = np.random.default_rng(0)
        outcomes = rng.integers(0, 2, size=(20, 2))
        record_batch(g, joint, outcomes)
        i, j = joint.vertices
        assert g.tallies.m_pair(i, j) == 20
        assert g.tallies.s_pair(i, j).sum() == 20
        g.tallies.validate()

    def test_tallies_match_direct_eigenvalues(self):
        # canonical tallies must reproduce the physical eigenvalue of each string
        from quditmeas.clifford import diagonalize_clique
        from quditmeas.paulis import ps_matrix
        from quditmeas.simulator import apply_circuit

        obs = make_obs((2, 2), [(1.0, [(1, 0), (1, 0)]), (0.5, [(0, 1), (0, 1)])])
        g = build_graph(obs, "general")
        strings = obs.strings()
        clique = Clique((0, 1), circuit=diagonalize_clique(list(strings), "general"))
        rng = np.random.default_rng(3)
        amps = rng.normal(size=4) + 1j * rng.normal(size=4)
        state = StateVector(obs.register, amps / np.linalg.norm(amps))
        final = apply_circuit(state, clique.circuit)
        probs = final.probabilities()
        n = 40_000
        flats = rng.choice(4, size=n, p=probs / probs.sum())
        outcomes = np.stack([(flats // 2) % 2, flats % 2], axis=1)
        record_batch(g, clique, outcomes)
        d_p = 2
        omega = np.array([1.0, -1.0])
        for v in (0, 1):
            emp = (g.tallies.s[v] / n) @ omega * np.exp(1j * np.pi * g.offsets[v] / d_p)
            want = state.amplitudes.conj() @ ps_matrix(strings[v]) @ state.amplitudes
            assert abs(emp - want) < 0.02


class TestSelectClique:
    def test_single_clique(self):
        g = build_graph(Z_OBS, "general")
        clique_cover(g)
        est = EdgeEstimates.non_adaptive(g)
        assert select_clique(g, est, 5) == 0

    def test_weight_dominance_non_adaptive(self):
        obs = make_obs((2,), [(1.0, [(1, 0)]), (0.2, [(0, 1)])])
        g = build_graph(obs, "general")
        clique_cover(g)
        est = EdgeEstimates.non_adaptive(g)
        chosen = select_clique(g, est, 5)
        heavy = int(np.argmax(np.abs(g.observable.coefficients())))
        assert heavy in g.cliques[chosen].vertices

    def test_adaptive_shifts_away_from_deterministic_string(self):
        obs = make_obs((2,), [(1.0, [(1, 0)]), (0.2, [(0, 1)])])
        g = build_graph(obs, "general")
        clique_cover(g)
        heavy = int(np.argmax(np.abs(g.observable.coefficients())))
        other = 1 - heavy
        est = EdgeEstimates.non_adaptive(g)
        est.q_diag = est.q_diag.astype(complex)
        est.q_diag[heavy] = 0.0  # deterministic: no variance to harvest
        est.q_diag[other] = 0.5
        chosen = select_clique(g, est, 5)
        assert other in g.cliques[chosen].vertices


class TestErrorAwareness:
    def test_deviation_uniform_theta_is_zero(self):
        dev = systematic_deviation([1.0], [0.3], [np.array([0.5, 0.5])], [0], 2)
        assert abs(dev) < 1e-12

    def test_deviation_concentrated(self):
        dev = systematic_deviation([1.0], [0.2], [np.array([1.0, 0.0])], [0], 2)
        assert dev == pytest.approx(0.2)

    def test_deviation_zero_xi(self):
        dev = systematic_deviation([1.0, 0.5], [0.0, 0.0], [np.array([1.0, 0.0])] * 2, [0, 0], 2)
        assert abs(dev) < 1e-12

    def test_worst_case_example(self):
        assert worst_case_bound([1.0], [0.2], [np.array([1.0, 0.0])], 2) == pytest.approx(0.4)

    def test_worst_case_zero_xi(self):
        assert worst_case_bound([1.0], [0.0], [np.array([0.7, 0.3])], 2) == 0.0

    def test_bound_dominates_deviation(self, rng):
        for _ in range(100):
            d_p = int(rng.choice([2, 3]))
            n = int(rng.integers(1, 4))
            coeffs = rng.normal(size=n) + 1j * rng.normal(size=n)
            xi = rng.uniform(0, 1, size=n)
            thetas = [rng.dirichlet(np.ones(d_p)) for _ in range(n)]
            offsets = [int(rng.integers(0, 2)) for _ in range(n)]
            dev = systematic_deviation(coeffs, xi, thetas, offsets, d_p)
            bound = worst_case_bound(coeffs, xi, thetas, d_p)
            assert bound >= abs(dev) - 1e-12


class TestNoiseFit:
    def synthetic_records(self, rng, truth, n_probes):
        specs = [(4, 0), (0, 2), (4, 2), (2, 1), (0, 0)]
        records = []
        for k in range(n_probes):
            nl, ne = specs[k % len(specs)]
            xi = 1 - (1 - truth[2]) * (1 - truth[1]) ** ne * (1 - truth[0]) ** nl
            records.append((nl, ne, rng.random() < xi))
        return records

    def test_synthetic_recovery(self, rng):
        truth = (0.0041, 0.079, 0.0)
        fit = fit_noise_model(self.synthetic_records(rng, truth, 4000))
        for k in range(3):
            assert abs(fit.mean[k] - truth[k]) <= 2.5 * fit.sigma[k] + 1e-3

    def test_all_error_data_pushes_to_boundary(self):
        fit = fit_noise_model([(2, 1, 50, 0)])
        xi_map = 1 - (1 - fit.map_point[2]) * (1 - fit.map_point[1]) ** 1 * (1 - fit.map_point[0]) ** 2
        assert xi_map > 0.95

    def test_unidentifiable_axis_flagged(self):
        fit = fit_noise_model([(3, 0, 2, 48)])
        assert "xi_ent" in fit.unidentifiable
        # flat marginal: mean near 1/2, sigma near uniform's 1/sqrt(12)
        assert abs(fit.mean[1] - 0.5) < 0.05
        assert abs(fit.sigma[1] - 1 / np.sqrt(12)) < 0.05

    def test_empty_records_rejected(self):
        with pytest.raises(ValueError):
            fit_noise_model([])


class TestComparisonMetrics:
    def test_identical_variances(self):
        assert relative_advantage(0.4, 0.4) == 0.0

    def test_half_variance(self):
        assert relative_advantage(1.0, 0.5) == pytest.approx(2 / 3)

    def test_zero_denominator(self):
        with pytest.raises(ValueError):
            relative_advantage(0.0, 0.0)

    def test_delta_o_near_unity_for_calibrated_runs(self, rng):
        exact = 0.3
        runs = []
        for _ in range(300):
            var = 0.05 ** 2
            runs.append((exact + rng.normal(0, 0.05), var))
        assert 0.5 < delta_o(runs, exact) < 1.2

    def test_delta_o_validation(self):
        with pytest.raises(ValueError):
            delta_o([(0.5, 0.0)], 0.3)


class TestRunEstimation:
    def test_z_on_zero_state_converges(self):
        state = basis_state(Z_OBS.register, (0,))
        rep = run_estimation(Z_OBS, state, fast_settings(budget=300))
        assert abs(rep.o_est - 1.0) <= 3 * np.sqrt(rep.var_stat) + 0.05
        # variance decreasing in shot count
        early = rep.history[len(rep.history) // 4].var_stat
        late = rep.history[-1].var_stat
        assert late < early

    def test_budget_accounting_exact(self):
        state = prepare_product_state(Z_OBS.register, [[1, 1]])
        for noise_aware in (False, True):
            rep = run_estimation(
                Z_OBS,
                state,
                fast_settings(budget=173, noise_aware=noise_aware),
                noise=NoiseModel(xi_detect=0.1) if noise_aware else None,
            )
            assert rep.total_shots == 173
            assert rep.history[-1].m_total == 173

    def test_depolarized_plus_state_unbiased(self):
        # |+> under pure detection noise keeps <Z> = 0: deviation stays small
        state = prepare_product_state(Z_OBS.register, [[1, 1]])
        rep = run_estimation(
            Z_OBS,
            state,
            fast_settings(budget=2000, noise_aware=True, seed=5),
            noise=NoiseModel(xi_detect=0.25),
        )
        assert abs(rep.dev_sys) <= 3 * rep.dev_sigma + 0.02
        assert abs(rep.o_est) < 0.2

    def test_known_error_rate_recovered(self):
        # Z on |0> with xi(C) = 0.2: mean near 0.8, deviation near 0.2
        state = basis_state(Z_OBS.register, (0,))
        rep = run_estimation(
            Z_OBS,
            state,
            fast_settings(budget=4000, noise_aware=True, seed=7),
            noise=NoiseModel(xi_detect=0.2),
        )
        assert abs(rep.o_est - 0.8) <= 4 * np.sqrt(rep.var_stat)
        assert abs(rep.dev_sys - 0.2) <= 3 * rep.dev_sigma
        assert rep.worst_case >= abs(rep.dev_sys) - 1e-12

    def test_noise_decomposition_exact_every_batch(self):
        state = prepare_product_state(Z_OBS.register, [[1, 1]])
        rep = run_estimation(
            Z_OBS,
            state,
            fast_settings(budget=500, noise_aware=True, seed=3),
            noise=NoiseModel(xi_detect=0.3),
        )
        for row in rep.history:
            assert row.var_noise_aware == row.var_stat + row.dev_sys_sq
        assert rep.var_noise_aware == rep.var_stat + rep.dev_sys_sq

    def test_seed_determinism(self):
        obs = make_obs((2, 2), [(1.0, [(1, 0), (1, 0)]), (0.8, [(0, 1), (0, 1)])])
        state = prepare_product_state(obs.register, [[1, 1], [1, 0]])
        reps = [run_estimation(obs, state, fast_settings(budget=200, seed=42)) for _ in range(2)]
        assert reps[0].o_est == reps[1].o_est
        assert reps[0].var_stat == reps[1].var_stat
        assert [r.clique_id for r in reps[0].history] == [r.clique_id for r in reps[1].history]

    def test_register_mismatch(self):
        state = basis_state(QuditRegister((3,)), (0,))
        with pytest.raises(ValueError):
            run_estimation(Z_OBS, state, fast_settings())

    def test_bad_settings(self):
        with pytest.raises(ValueError):
            RunSettings(budget=0)
        with pytest.raises(ValueError):
            RunSettings(mode="xx")
        with pytest.raises(ValueError):
            RunSettings(probe_split=1.0)

    def test_gc_adaptive_beats_bc_nonadaptive_on_anticorrelated_state(self):
        # state with perfect XX/ZZ anticorrelation: the joint clique cancels
        obs = make_obs((2, 2), [(1.0, [(1, 0), (1, 0)]), (1.0, [(0, 1), (0, 1)])])
        amps = np.array([1, 1, 1, -1], dtype=complex) / 2.0
        state = StateVector(obs.register, amps)
        rep_gc = run_estimation(obs, state, fast_settings(budget=3000, mode="gc", adaptive=True, seed=1))
        rep_bc = run_estimation(obs, state, fast_settings(budget=3000, mode="bc", adaptive=False, seed=1))
        assert rep_gc.var_stat < 0.9 * rep_bc.var_stat

    def test_pair_covariance_estimate_matches_dense_truth(self):
        # anticorrelated XX/ZZ: true Q^{(1,1)} = <(XX)ZZ> - <XX><ZZ> = -1
        from quditmeas.paulis import ps_dagger, ps_matrix, ps_multiply

        obs = make_obs((2, 2), [(1.0, [(1, 0), (1, 0)]), (1.0, [(0, 1), (0, 1)])])
        amps = np.array([1, 1, 1, -1], dtype=complex) / 2.0
        state = StateVector(obs.register, amps)
        rep = run_estimation(obs, state, fast_settings(budget=3000, seed=2))
        strings = obs.strings()
        (pair,) = list(rep.estimates.q_pairs)
        i, j = pair
        prod = ps_matrix(ps_multiply(ps_dagger(strings[i]), strings[j]))
        e_i = amps.conj() @ ps_matrix(strings[i]) @ amps
        e_j = amps.conj() @ ps_matrix(strings[j]) @ amps
        q_true = amps.conj() @ prod @ amps - np.conj(e_i) * e_j
        assert abs(rep.estimates.q_pairs[pair] - q_true) < 0.15
        assert q_true == pytest.approx(-1.0)

    def test_qutrit_conjugate_pair_observable(self):
        # O = Z + Z^dag on a qutrit: exercises complex eigenvalue bookkeeping
        reg = QuditRegister((3,))
        obs = make_obs((3,), [(1.0, [(0, 1)]), (1.0, [(0, 2)])])
        assert obs.hermitian
        rng = np.random.default_rng(8)
        amps = rng.normal(size=3) + 1j * rng.normal(size=3)
        state = StateVector(reg, amps / np.linalg.norm(amps))
        rep = run_estimation(obs, state, fast_settings(budget=3000, seed=6))
        from quditmeas.simulator import expectation

        want = expectation(obs, state)
        assert abs(want.imag) < 1e-12
        assert abs(rep.o_est.real - want.real) <= 4 * np.sqrt(rep.var_stat) + 0.02
        assert abs(rep.o_est.imag) < 1e-9
        assert rep.var_stat >= 0

    def test_mixed_dim_register_runs(self):
        obs = make_obs((2, 3), [(1.0, [(0, 1), (0, 0)]), (0.5, [(0, 0), (0, 1)]), (0.3, [(1, 0), (1, 0)])])
        state = prepare_product_state(obs.register, [[1, 1], [1, 1, 1]])
        rep = run_estimation(obs, state, fast_settings(budget=300, seed=9))
        from quditmeas.simulator import expectation

        want = expectation(obs, state)
        assert abs(rep.o_est - want) < 5 * np.sqrt(rep.var_stat) + 0.1
