import numpy as np
import pytest

import adqed as aq
from adqed.model import double_well_emitter
from adqed.spectra import (classify_excitations, qbic_decay_estimate,
                           scan_anticrossings, track_branch)


class TestClassification:
    def test_partition(self, small_waveguide):
        em = double_well_emitter(0.5, 0.87)
        system = aq.prepare_system(small_waveguide, em, 2.0, n_c=2, alpha_c=8)
        res = system.diagonalize()
        cls = classify_excitations(res, system.basis, small_waveguide,
                                   matter=system.matter)
        assert len(cls.labels) == res.n_states
        assert set(cls.labels) <= set(aq.spectra.LABELS)

    def test_zero_coupling_bare_level_above_band(self, small_waveguide):
        # v, d chosen so the first matter excitation sits above the band
        em = double_well_emitter(1.0, 0.6)
        system = aq.prepare_system(small_waveguide, em, 0.0, n_c=1, alpha_c=4)
        res = system.diagonalize()
        cls = classify_excitations(res, system.basis, small_waveguide,
                                   matter=system.matter)
        dE1 = res.excitations[1:]
        first_emitter = int(np.argmin(np.abs(
            dE1 - (system.matter.E[1] - system.matter.E[0])))) + 1
        assert cls.excitations[first_emitter] > small_waveguide.band_edges[1]
        assert cls.labels[first_emitter] == "bound"

    def test_bound_ladder_count_grows(self, fig3_waveguide, fig3_emitter):
        counts = []
        for g in (5.0, 10.0, 20.0):
            system = aq.prepare_system(fig3_waveguide, fig3_emitter, g,
                                       n_c=2, alpha_c=10)
            res = system.diagonalize(n_eigs=30)
            cls = classify_excitations(res, system.basis, fig3_waveguide,
                                       matter=system.matter)
            below = [i for i, lab in enumerate(cls.labels)
                     if lab == "bound" and cls.excitations[i]
                     < fig3_waveguide.band_edges[0]]
            counts.append(len(below))
        assert counts == sorted(counts)

    def test_bic_and_quasi_labels(self, fig3_waveguide, fig3_emitter):
        # measured: even emitter branch in band at g = 1.2, odd at g = 1.8
        for g, label, parity in ((1.2, "BIC", 1), (1.8, "quasi-BIC", -1)):
            system = aq.prepare_system(fig3_waveguide, fig3_emitter, g,
                                       n_c=2, alpha_c=12)
            res = system.diagonalize(n_eigs=40)
            cls = classify_excitations(res, system.basis, fig3_waveguide,
                                       matter=system.matter)
            found = [i for i, lab in enumerate(cls.labels) if lab == label]
            assert found, f"no {label} found at g={g}"
            assert all(res.parity[i] == parity for i in found)

    def test_vectors_absent_flagged(self, small_waveguide):
        em = double_well_emitter(0.5, 0.87)
        system = aq.prepare_system(small_waveguide, em, 1.0, n_c=1, alpha_c=4)
        res = system.diagonalize(keep_vectors=False)
        cls = classify_excitations(res, system.basis, small_waveguide,
                                   matter=system.matter)
        assert cls.band_position_only
        assert set(cls.labels) <= {"bound", "scattering"}

    def test_multi_photon_ladder_index(self, fig3_waveguide, fig3_emitter):
        system = aq.prepare_system(fig3_waveguide, fig3_emitter, 8.0,
                                   n_c=2, alpha_c=8)
        res = system.diagonalize(n_eigs=60)
        cls = classify_excitations(res, system.basis, fig3_waveguide,
                                   matter=system.matter)
        mpc = [i for i, lab in enumerate(cls.labels)
               if lab == "multi-photon-continuum"]
        assert mpc
        assert all(cls.ladder_index[i] >= 1 for i in mpc)


class TestBranchTracking:
    def test_parity_invariant_along_branch(self, fig3_waveguide, fig3_emitter):
        gs = np.linspace(5.0, 6.0, 6)
        results = []
        for g in gs:
            system = aq.prepare_system(fig3_waveguide, fig3_emitter, g,
                                       n_c=2, alpha_c=8)
            results.append(system.diagonalize(n_eigs=20))
        idx, overlaps = track_branch(results, system.basis, start_index=1)
        assert all(i >= 0 for i in idx)
        assert min(overlaps) > 0.9
        parities = [results[j].parity[i] for j, i in enumerate(idx)]
        assert len(set(parities)) == 1


class TestAnticrossings:
    @pytest.mark.slow
    def test_protected_crossing(self, fig3_waveguide, fig3_emitter):
        rep = scan_anticrossings(fig3_waveguide, fig3_emitter, 1.0, 1.45,
                                 branch_parity=+1, partner="opposite",
                                 n_c=2, alpha_c=12, n_eigs=40, n_coarse=13)
        assert rep.kind == "crossing"
        assert rep.gap < 1e-8

    @pytest.mark.slow
    def test_quasi_bic_avoided(self, fig3_waveguide, fig3_emitter):
        rep = scan_anticrossings(fig3_waveguide, fig3_emitter, 1.6, 2.1,
                                 branch_parity=-1, partner="same",
                                 n_c=2, alpha_c=12, n_eigs=40, n_coarse=13)
        assert rep.kind == "avoided"
        assert 1e-6 < rep.gap < 1e-1

    def test_no_crossing_reports_monotone(self, fig3_waveguide, fig3_emitter):
        # window far below any band entry of the even branch
        rep = scan_anticrossings(fig3_waveguide, fig3_emitter, 6.0, 6.4,
                                 branch_parity=1, partner="opposite",
                                 n_c=1, alpha_c=10, n_eigs=30, n_coarse=5,
                                 search_window=(0.0, 0.9))
        assert rep.kind == "monotone"


class TestDecayEstimate:
    def test_no_hopping_no_decay(self):
        wg = aq.build_cavity_array(1.0, 0.0, 9)
        assert qbic_decay_estimate(wg, 5.0, double_well_emitter(0.5, 0.87),
                                   m_eff=51.0) == 0.0

    def test_j_squared_scaling(self):
        em = double_well_emitter(0.5, 0.87)
        g1 = qbic_decay_estimate(aq.build_cavity_array(1.0, 0.1, 9), 10.0, em, 201.0)
        g2 = qbic_decay_estimate(aq.build_cavity_array(1.0, 0.2, 9), 10.0, em, 201.0)
        assert g1 > 0
        assert g2 / g1 == pytest.approx(4.0, rel=1e-12)

    def test_g_exponent(self, fig3_waveguide, fig3_emitter):
        # with the real m_eff(g) of the array, Gamma ~ g^(-3/2) in ESC
        rates, gs = [], np.geomspace(5, 20, 6)
        for g in gs:
            system = aq.prepare_system(fig3_waveguide, fig3_emitter, g,
                                       n_c=0, alpha_c=2)
            rates.append(qbic_decay_estimate(fig3_waveguide, g, fig3_emitter,
                                             float(system.ad.m_eff)))
        slope = np.polyfit(np.log(gs), np.log(rates), 1)[0]
        assert abs(slope - (-1.5)) < 0.1
