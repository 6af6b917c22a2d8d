import math

import numpy as np
import pytest

import adqed as aq
from adqed.bosons import diagonalize_symplectic
from adqed.effective import (IsingModel, JCModel, LMGModel, build_ising,
                             build_jc_ad, build_jc_coulomb, diagonalize_spins,
                             lmg_limit, rabi_excitation_energy,
                             solve_single_excitation, spin_hamiltonian)
from adqed.model import double_well_emitter


def jc_ad_for(wg, em, g, alpha_c=8):
    system = aq.prepare_system(wg, em, g, n_c=0, alpha_c=alpha_c)
    return build_jc_ad(system.ad, system.matter, system.frame), system


class TestSingleExcitation:
    def test_decoupled(self):
        jc = JCModel("AD", 1.3, np.array([1.0, 2.0]), np.zeros(2))
        assert solve_single_excitation(jc) == pytest.approx(1.3)

    def test_single_mode_closed_form(self):
        delta, omega, g = 1.1, 0.9, 0.27
        jc = JCModel("AD", delta, np.array([omega]), np.array([g]))
        root = solve_single_excitation(jc)
        exact = 0.5 * (delta + omega) - 0.5 * math.sqrt((delta - omega) ** 2 + 4 * g**2)
        assert abs(root - exact) < 1e-12
        both = solve_single_excitation(jc, all_branches=True)
        assert len(both) == 1   # single pole, single bracketed branch below it

    def test_residual(self):
        rng = np.random.default_rng(3)
        jc = JCModel("AD", 1.0, np.linspace(0.9, 1.1, 7), 0.05 * rng.random(7))
        e = solve_single_excitation(jc)
        resid = e - jc.delta - np.sum(jc.couplings**2 / (e - jc.omegas))
        assert abs(resid) < 1e-10

    def test_root_descends_with_coupling(self):
        prev = np.inf
        for g in (0.05, 0.1, 0.2, 0.4):
            jc = JCModel("AD", 1.0, np.linspace(0.9, 1.1, 5), np.full(5, g))
            e = solve_single_excitation(jc)
            assert e < prev
            prev = e


class TestJCModels:
    def test_frames_coincide_at_weak_coupling(self, fig3_waveguide, fig3_emitter):
        g = 1e-3
        jc_ad, _ = jc_ad_for(fig3_waveguide, fig3_emitter, g)
        jc_c = build_jc_coulomb(fig3_waveguide, g, fig3_emitter)
        e_ad = solve_single_excitation(jc_ad)
        e_c = solve_single_excitation(jc_c)
        assert abs(e_ad - e_c) / e_c < 1e-4

    def test_coulomb_couplings_uniform(self, fig3_waveguide, fig3_emitter):
        jc = build_jc_coulomb(fig3_waveguide, 0.5, fig3_emitter)
        assert np.allclose(jc.couplings, jc.couplings[0])
        assert jc.frame_tag == "Coulomb"

    def test_rwa_guardrail_flag(self, fig3_waveguide, fig3_emitter):
        jc_weak, _ = jc_ad_for(fig3_waveguide, fig3_emitter, 0.2)
        assert jc_weak.rwa_valid
        jc_esc, _ = jc_ad_for(fig3_waveguide, fig3_emitter, 12.0, alpha_c=6)
        assert not jc_esc.rwa_valid   # Delta_g < max g_n in deep ESC

    def test_rabi_reduces_to_weak_jc(self, fig3_waveguide, fig3_emitter):
        jc, _ = jc_ad_for(fig3_waveguide, fig3_emitter, 0.1)
        e_jc = solve_single_excitation(jc)
        e_rabi = rabi_excitation_energy(jc, n_c=2)
        assert abs(e_rabi - e_jc) / e_jc < 0.01

    def test_degenerate_dipole_rejected(self, small_waveguide):
        # pure quartic potential: <1|dV/dQ|2> = 0 is impossible, use a
        # symmetric harmonic where <psi1|V'|psi2> is odd-to-odd... instead
        # check the error path with an even-only coupling emitter
        from adqed.model import EmitterSpec, PolynomialPotential
        em = EmitterSpec(potential=PolynomialPotential([0, 0, 0, 0, 0, 0, 1.0]))
        system = aq.prepare_system(small_waveguide, em, 0.5, n_c=0, alpha_c=4)
        # sextic still has nonzero dipole; force the degenerate branch directly
        with pytest.raises(ValueError, match="dipole"):
            matter = system.matter
            matter.psi = np.abs(matter.psi)  # destroy parity structure -> ~0 dipole
            build_jc_ad(system.ad, matter, system.frame)

    def test_json_roundtrip(self, fig3_waveguide, fig3_emitter):
        import json
        jc, _ = jc_ad_for(fig3_waveguide, fig3_emitter, 0.5)
        payload = json.loads(jc.to_json())
        assert payload["frame"] == "AD"
        assert len(payload["couplings"]) == jc.omegas.size


class TestIsing:
    def build(self, positions, g=0.5, alpha_c=4, include_bosons=False, L=11):
        wg = aq.build_cavity_array(1.0, 0.2, L)
        ems = [double_well_emitter(0.5, 1.0, position=float(x)) for x in positions]
        cp = aq.coupling_for_strength(wg, g)
        fr = diagonalize_symplectic(wg, ems, cp)
        ad = aq.mass_renormalization(fr, cp, wg, ems)
        return build_ising(wg, ems, cp, fr, ad, alpha_c=alpha_c,
                           include_bosons=include_bosons)

    def test_single_emitter(self):
        model = self.build([0.0])
        assert model.n_spins == 1
        assert model.J.shape == (1, 1) and model.J[0, 0] == 0.0
        assert model.delta_g[0] > 0

    def test_homogeneous_translation_invariance(self):
        # equally spaced around the L = 9 ring: every pair separation is 3
        model = self.build([0.0, 3.0, 6.0], L=9)
        off = model.J[np.triu_indices(3, 1)]
        assert np.max(np.abs(off - off[0])) < 1e-10
        assert np.ptp(model.delta_g) < 1e-10
        # open placement: equal nearest-neighbour separations still match
        chain = self.build([0.0, 2.0, 4.0])
        assert chain.J[1, 0] == pytest.approx(chain.J[2, 1], abs=1e-10)

    def test_boson_sector_optional(self):
        model = self.build([0.0, 1.0], include_bosons=True)
        assert model.omegas is not None
        assert model.boson_couplings.shape == (11, 2)

    def test_lmg_limit(self):
        model = self.build([0.0, 0.0])
        lmg = lmg_limit(model)
        assert lmg.J_prime == pytest.approx(model.J[1, 0])
        assert lmg.J_prime < 0    # ferromagnetic on cavity arrays
        with pytest.raises(ValueError):
            lmg_limit(self.build([0.0, 1.0, 3.0]))  # unequal separations

    def test_lmg_spectrum_matches_ising(self):
        model = self.build([0.0] * 4, alpha_c=3)
        lmg = lmg_limit(model)
        e_ising = diagonalize_spins(model)["energies"]
        e_lmg = diagonalize_spins(lmg)["energies"]
        assert np.max(np.abs(e_ising - e_lmg)) < 1e-10


class TestSpinED:
    def test_free_spins(self):
        model = IsingModel(delta_g=np.array([0.7, 1.1]), J=np.zeros((2, 2)))
        e = diagonalize_spins(model)["energies"]
        expect = np.sort([0.5 * (s1 * 0.7 + s2 * 1.1)
                          for s1 in (-1, 1) for s2 in (-1, 1)])
        assert np.allclose(e, expect, atol=1e-12)

    def test_two_spin_closed_form(self):
        delta, j = 0.9, -0.35
        model = IsingModel(delta_g=np.array([delta, delta]),
                           J=np.array([[0.0, j], [j, 0.0]]))
        e = diagonalize_spins(model)["energies"]
        # sigma^x sigma^x couples |dd>,|uu> and |du>,|ud| separately
        expect = np.sort([math.hypot(delta, j) * s for s in (-1, 1)] + [j, -j])
        assert np.allclose(np.sort(e), expect, atol=1e-12)

    def test_classical_degeneracy(self):
        model = LMGModel(delta_g=0.0, J_prime=-0.4, n_spins=3)
        out = diagonalize_spins(model)
        e = out["energies"]
        assert abs(e[0] - e[1]) < 1e-8
        assert abs(out["magnetization_x"]) > 2.9   # bias picks a broken state

    def test_size_cap(self):
        model = LMGModel(delta_g=1.0, J_prime=-0.1, n_spins=15)
        with pytest.raises(ValueError, match="N <= 14"):
            spin_hamiltonian(model)
