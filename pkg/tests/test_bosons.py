import numpy as np
import pytest
from scipy.linalg import eigh

import adqed as aq
from adqed.bosons import symplectic_form, write_frame_csv
from adqed.model import double_well_emitter


def toy_frame(g=0.5):
    omega = np.array([0.8, 1.0, 1.2])
    g_k = np.full(3, g / np.sqrt(3.0))
    return omega, g_k, aq.orthogonal_frame(omega, g_k)


class TestOrthogonal:
    def test_decoupled_limit(self):
        omega = np.array([1.1, 0.9, 1.0])
        fr = aq.orthogonal_frame(omega, np.zeros(3))
        assert np.allclose(np.sort(fr.Omega)[::-1], fr.Omega)
        assert np.allclose(np.sort(fr.Omega), np.sort(omega))
        assert np.allclose(fr.xi, 0.0)

    def test_3x3_brute_force(self):
        omega, g_k, fr = toy_frame(0.5)
        quad = np.diag(omega**2) + 2.0 * np.outer(g_k, g_k)
        vals = np.sort(eigh(quad, eigvals_only=True))[::-1]
        assert np.allclose(fr.Omega**2, vals, rtol=1e-12)

    def test_orthogonality_and_diagonalization(self):
        omega, g_k, fr = toy_frame(0.8)
        assert np.max(np.abs(fr.O.T @ fr.O - np.eye(3))) < 1e-10
        quad = np.diag(omega**2) + 2.0 * np.outer(g_k, g_k)
        resid = fr.O.T @ quad @ fr.O - np.diag(fr.Omega**2)
        assert np.max(np.abs(resid)) / np.max(np.abs(quad)) < 1e-8

    def test_round_trip(self):
        omega, g_k, fr = toy_frame(1.2)
        quad = np.diag(omega**2) + 2.0 * np.outer(g_k, g_k)
        back = fr.O @ np.diag(fr.Omega**2) @ fr.O.T
        assert np.linalg.norm(back - quad) / np.linalg.norm(quad) < 1e-12

    def test_trace_identity(self):
        omega, g_k, fr = toy_frame(0.7)
        lhs = np.sum(fr.Omega**2)
        rhs = np.sum(omega**2) + 2.0 * np.sum(g_k**2)
        assert abs(lhs - rhs) / rhs < 1e-10

    def test_top_mode_raised(self):
        omega, g_k, fr = toy_frame(0.4)
        assert fr.Omega[0] >= np.max(omega)

    def test_omega0_monotone_in_g(self):
        prev = 0.0
        for g in (0.2, 0.5, 1.0, 2.0, 5.0):
            _, _, fr = toy_frame(g)
            assert fr.Omega[0] > prev
            prev = fr.Omega[0]

    def test_fig2_dominant_mode(self):
        # J = 0.2, g = 2: Omega_0 ~ sqrt(omega_c^2 + 2 g^2) = 3
        wg = aq.build_cavity_array(1.0, 0.2, 19)
        cp = aq.coupling_for_strength(wg, 2.0)
        fr = aq.diagonalize_orthogonal(wg, cp, double_well_emitter(0.5, 1.0))
        assert abs(fr.Omega[0] - 3.0) < 0.05

    def test_flat_band_deterministic(self):
        omega = np.ones(4)
        g_k = np.array([0.3, 0.3, 0.3, 0.3])
        a = aq.orthogonal_frame(omega, g_k)
        b = aq.orthogonal_frame(omega, g_k)
        assert np.array_equal(a.O, b.O)

    def test_unstable_input_rejected(self):
        with pytest.raises(ValueError):
            aq.orthogonal_frame(np.array([0.0, 1.0]), np.array([0.1, 0.1]))


class TestSymplectic:
    def setup_method(self):
        self.wg = aq.build_cavity_array(1.0, 0.2, 5)
        self.cp = aq.coupling_for_strength(self.wg, 0.7)

    def test_single_emitter_reduces_to_orthogonal(self):
        ems = [double_well_emitter(0.5, 1.0, position=0.0)]
        fr = aq.diagonalize_symplectic(self.wg, ems, self.cp)
        fro = aq.orthogonal_frame(self.wg.omega, self.cp.g_k)
        assert np.max(np.abs(fr.Omega - fro.Omega)) < 1e-10

    def test_zero_separation_collective(self):
        ems = [double_well_emitter(0.5, 1.0, position=0.0),
               double_well_emitter(0.5, 1.0, position=0.0)]
        fr = aq.diagonalize_symplectic(self.wg, ems, self.cp)
        fro = aq.orthogonal_frame(self.wg.omega, np.sqrt(2.0) * self.cp.g_k)
        assert np.max(np.abs(fr.Omega - fro.Omega)) < 1e-10

    def test_symplectic_condition_and_reconstruction(self):
        ems = [double_well_emitter(0.5, 1.0, position=0.0),
               double_well_emitter(0.5, 1.0, position=2.0)]
        fr = aq.diagonalize_symplectic(self.wg, ems, self.cp)
        L = fr.L
        sigma = symplectic_form(L)
        assert np.max(np.abs(fr.S @ sigma @ fr.S.T - sigma)) < 1e-10
        # reconstruct the quadratic form from the normal form through S
        target = np.diag(np.concatenate([fr.Omega**2, np.ones(L)]))
        s_inv = -sigma @ fr.S.T @ sigma        # inverse of a symplectic matrix
        back = s_inv.T @ target @ s_inv
        from adqed.bosons import multi_emitter_couplings
        gc, gs, _, _ = multi_emitter_couplings(self.wg, ems, self.cp)
        u_p = -gs / self.wg.omega[:, None]
        H = np.block([
            [np.diag(self.wg.omega**2) + 2 * gc @ gc.T, 2 * gc @ u_p.T],
            [(2 * gc @ u_p.T).T, np.eye(L) + 2 * u_p @ u_p.T]])
        assert np.max(np.abs(back - H)) / np.max(np.abs(H)) < 1e-8

    def test_zeta_reduces_to_real(self):
        ems = [double_well_emitter(0.5, 1.0, position=0.0)]
        fr = aq.diagonalize_symplectic(self.wg, ems, self.cp)
        assert np.max(np.abs(fr.zeta.imag)) < 1e-10


def test_frame_csv_dump(tmp_path):
    _, _, fr = toy_frame(0.3)
    files = write_frame_csv(fr, tmp_path)
    assert all(f.exists() for f in files)
    body = (tmp_path / "modes.csv").read_text().splitlines()
    assert body[0] == "n,Omega,zeta,xi"
    assert len(body) == 4
