import math

import numpy as np
import pytest

import adqed as aq
from adqed import dynamics as dyn
from adqed.model import double_well_emitter


def small_protocol(wg, g, d_i=0.7, d_f=0.9, v=0.5, n_c=2, alpha_c=6):
    return dyn.QuenchProtocol(waveguide=wg,
                              emitter_initial=double_well_emitter(v, d_i),
                              emitter_final=double_well_emitter(v, d_f),
                              g=g, n_c=n_c, alpha_c=alpha_c)


class TestQuenchInitialState:
    def test_trivial_quench(self, small_waveguide):
        proto = small_protocol(small_waveguide, 1.0, d_i=0.9, d_f=0.9)
        prep = dyn.quench_initial_state(proto)
        c = np.abs(prep.weights)
        assert c[np.argmax(c)] > 1.0 - 1e-10
        assert prep.deficit < 1e-10

    def test_weights_normalized(self, small_waveguide):
        proto = small_protocol(small_waveguide, 1.5)
        prep = dyn.quench_initial_state(proto)
        assert np.sum(prep.weights**2) == pytest.approx(1.0, abs=1e-12)
        assert prep.deficit < 1e-3

    def test_shared_frame_enforced(self, small_waveguide):
        proto = small_protocol(small_waveguide, 1.0)
        prep = dyn.quench_initial_state(proto)
        assert np.array_equal(prep.system_pre.frame.Omega,
                              prep.system_post.frame.Omega)


class TestEvolution:
    def test_zero_coupling_dark(self, small_waveguide):
        proto = small_protocol(small_waveguide, 0.0)
        prep = dyn.quench_initial_state(proto)
        res = dyn.evolve_observables(prep, np.linspace(0, 10, 40))
        assert np.max(np.abs(res.n_xt)) < 1e-20

    def test_conservation_laws(self, small_waveguide):
        proto = small_protocol(small_waveguide, 1.2)
        prep = dyn.quench_initial_state(proto)
        res = dyn.evolve_observables(prep, np.linspace(0, 30, 120))
        assert res.norm_drift < 1e-10
        assert res.energy_drift < 1e-8

    def test_lattice_symmetry_and_fold_consistency(self):
        """Unfolded (full-k) occupancies must be mirror symmetric and match
        the folded even-sector computation site by site."""
        wg = aq.build_cavity_array(1.0, 0.2, 5)
        em_i = double_well_emitter(0.5, 0.7)
        em_f = double_well_emitter(0.5, 0.9)
        times = np.linspace(0.0, 8.0, 25)

        proto = dyn.QuenchProtocol(waveguide=wg, emitter_initial=em_i,
                                   emitter_final=em_f, g=1.0, n_c=2, alpha_c=6)
        prep_f = dyn.quench_initial_state(proto)
        res_f = dyn.evolve_observables(prep_f, times)

        post_u = aq.prepare_system(wg, em_f, 1.0, n_c=2, alpha_c=6, fold=False)
        pre_u = aq.prepare_system(wg, em_i, 1.0, n_c=2, alpha_c=6, fold=False,
                                  grid=(abs(post_u.matter.q[0]), post_u.matter.q.size))
        post_u = aq.prepare_system(wg, em_f, 1.0, n_c=2, alpha_c=6, fold=False,
                                   grid=(abs(pre_u.matter.q[0]), pre_u.matter.q.size))
        r_pre = post_u, pre_u
        res_pre = pre_u.diagonalize(method="dense")
        res_post = post_u.diagonalize(method="dense")
        overlap = (post_u.matter.psi * post_u.matter.dq) @ pre_u.matter.psi.T
        v0 = res_pre.vectors[:, 0].reshape(pre_u.basis.n_photon_states,
                                           pre_u.basis.alpha_c)
        mapped = (v0 @ overlap.T).reshape(-1)
        c = res_post.vectors.T @ mapped
        c /= np.linalg.norm(c)
        prep_u = dyn.QuenchPrepared(system_pre=pre_u, system_post=post_u,
                                    result_post=res_post, weights=c, deficit=0.0)
        res_u = dyn.evolve_observables(prep_u, times)

        # mirror symmetry of the independent unfolded path
        sym = np.max(np.abs(res_u.n_xt - res_u.n_xt[:, ::-1]))
        assert sym < 1e-10
        # folded and unfolded paths agree (both converged in the same cutoffs)
        assert np.max(np.abs(res_u.n_xt - res_f.n_xt)) < 1e-8

    def test_total_flux_continuity(self, small_waveguide):
        # continuity: the largest step of sum_x n_x halves when dt halves
        proto = small_protocol(small_waveguide, 1.5)
        prep = dyn.quench_initial_state(proto)
        jumps = {}
        for n_t in (400, 800):
            res = dyn.evolve_observables(prep, np.linspace(0.0, 20.0, n_t))
            jumps[n_t] = np.max(np.abs(np.diff(np.sum(res.n_xt, axis=1))))
        assert jumps[800] < 0.6 * jumps[400]

    def test_empty_time_grid(self, small_waveguide):
        proto = small_protocol(small_waveguide, 1.0)
        prep = dyn.quench_initial_state(proto)
        with pytest.raises(ValueError, match="empty"):
            dyn.evolve_observables(prep, [])


class TestCoulombPhotonNumber:
    def test_zero_coupling_vacuum(self, small_waveguide):
        em = double_well_emitter(0.5, 0.87)
        system = aq.prepare_system(small_waveguide, em, 0.0, n_c=2, alpha_c=4)
        res = system.diagonalize(n_eigs=1)
        assert dyn.coulomb_photon_number(system, res.vectors[:, 0]) < 1e-20

    def test_total_equals_site_sum(self, small_waveguide):
        em = double_well_emitter(0.5, 0.87)
        system = aq.prepare_system(small_waveguide, em, 2.0, n_c=2, alpha_c=6)
        res = system.diagonalize(n_eigs=1)
        v = res.vectors[:, 0]
        total = dyn.coulomb_photon_number(system, v)
        forms, mats = dyn.site_occupation_matrices(system, v.reshape(-1, 1))
        site_sum = 0.0
        for row, mat in mats.items():
            weight = 1.0 if forms.sites[row] == 0 else 2.0   # mirror sites
            site_sum += weight * float(np.real(mat[0, 0]))
        assert total == pytest.approx(site_sum, rel=1e-10)

    def test_grows_with_g(self, small_waveguide):
        em = double_well_emitter(0.5, 0.87)
        prev = -1.0
        for g in (0.5, 1.0, 2.0, 4.0):
            system = aq.prepare_system(small_waveguide, em, g, n_c=2, alpha_c=6)
            res = system.diagonalize(n_eigs=1)
            val = dyn.coulomb_photon_number(system, res.vectors[:, 0])
            assert val > prev
            prev = val


class TestOscillationEstimate:
    def test_undressed_limit(self):
        om, period = dyn.oscillation_estimate(0.5, 1.2, 4.0, 0.0)
        assert om == pytest.approx(math.sqrt(8 * 0.5) / (1.2 * 2.0))
        assert period == pytest.approx(2 * math.pi / om)

    def test_flagged_when_barrier_gone(self):
        om, period = dyn.oscillation_estimate(0.5, 1.0, 4.0, 1.0 / math.sqrt(3.0) + 0.01)
        assert om is None and period is None

    def test_frequency_extraction(self):
        t = np.linspace(0, 200, 4096)
        trace = 0.2 * np.cos(0.31 * t) + 1.0 * np.cos(0.62 * t) + 3.0
        assert abs(dyn.dominant_frequency(t, trace) - 0.62) < 0.01
        assert abs(dyn.fundamental_frequency(t, trace) - 0.31) < 0.01


def test_displacement_parity_zero(small_waveguide):
    em = double_well_emitter(0.5, 0.87)
    system = aq.prepare_system(small_waveguide, em, 1.0, n_c=2, alpha_c=6)
    res = system.diagonalize(n_eigs=1)
    assert abs(dyn.displacement_expectation(system, res.vectors[:, 0])) < 1e-10
