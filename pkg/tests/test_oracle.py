"""Self-checks of the brute-force Coulomb-gauge validator."""

import numpy as np
import pytest

import adqed as aq
from adqed.adframe import solve_matter_eigenstates
from adqed.model import double_well_emitter
from oracle import BruteForceSpec, coulomb_ed, coulomb_hamiltonian

TWO_MODES = np.array([0.8, 1.2])


def test_exactly_symmetric_by_construction():
    em = double_well_emitter(0.5, 0.87)
    cp = aq.coupling_for_strength(aq.build_tabulated(np.array([0.0, 0.5]), TWO_MODES), 0.7)
    H, _ = coulomb_hamiltonian(TWO_MODES, cp.f, em.potential,
                               spec=BruteForceSpec(n_max=6, grid_points=41))
    assert abs(H - H.T).max() == 0.0


def test_zero_coupling_factorizes():
    em = double_well_emitter(0.5, 0.87)
    spec = BruteForceSpec(n_max=4, grid_points=301, grid_extent=3.4)
    H, q = coulomb_hamiltonian(TWO_MODES, np.zeros(2), em.potential, spec=spec)
    from scipy.sparse.linalg import eigsh
    vals = np.sort(eigsh(H, k=6, which="SA", tol=1e-10,
                         v0=np.full(H.shape[0], H.shape[0] ** -0.5),
                         return_eigenvectors=False))
    matter = solve_matter_eigenstates(em.potential, 1.0, 4,
                                      grid=(spec.grid_extent, spec.grid_points))
    ladder = sorted(matter.E[a] + n1 * 0.8 + n2 * 1.2
                    for a in range(4) for n1 in range(3) for n2 in range(3))[:6]
    assert np.allclose(vals, ladder, atol=1e-8)


def test_memory_budget_enforced():
    em = double_well_emitter(0.5, 0.87)
    with pytest.raises(ValueError, match="budget"):
        coulomb_hamiltonian(np.ones(3), np.full(3, 0.1), em.potential,
                            spec=BruteForceSpec(n_max=60, grid_points=2001))


@pytest.mark.slow
def test_coulomb_truncation_breakdown_vs_ad_frame():
    """Photon-level truncation collapses in the Coulomb gauge at strong g
    while the AD frame stays converged (measured ratio ~ 1e9 at g = 6)."""
    wg = aq.build_tabulated(np.array([0.0, 0.5]), TWO_MODES)
    em = double_well_emitter(0.5, 0.87)
    g = 6.0
    cp = aq.coupling_for_strength(wg, g)
    out = coulomb_ed(TWO_MODES, cp.f, em.potential, n_levels=4,
                     spec=BruteForceSpec(n_max=16, grid_points=121,
                                         grid_extent=2.6))
    assert out["unusable"]          # n_max 8 vs 16 moves levels by > 1%
    r8 = aq.prepare_system(wg, em, g, n_c=8, alpha_c=12).diagonalize(
        n_eigs=5, keep_vectors=False)
    r16 = aq.prepare_system(wg, em, g, n_c=16, alpha_c=12).diagonalize(
        n_eigs=5, keep_vectors=False)
    ad_shift = float(np.max(np.abs(r8.energies[:4] - r16.energies[:4])
                            / np.abs(r16.energies[:4])))
    assert out["cutoff_shift"] > 10.0 * ad_shift
