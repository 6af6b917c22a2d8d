"""
adqed: nonperturbative waveguide QED in the asymptotically decoupled frame.

Exact diagonalization of a charged emitter coupled to a finite photonic
continuum at any coupling strength: the quadratic photon sector (including
the diamagnetic term) is diagonalized exactly, the asymptotic-decoupling
unitary removes the minimal coupling in favor of a renormalized mass and a
vacuum-dressed potential, and the residual interaction is diagonalized in a
few-photon basis whose dimension grows polynomially with system size.
"""

from .adframe import (ADParameters, CollectiveMode, DressedPotential,
                      MatterSpectrum, collective_reduction, dressed_potential,
                      mass_renormalization, scaling_table,
                      solve_matter_eigenstates)
from .bosons import (OrthogonalFrame, SymplecticFrame, diagonalize_orthogonal,
                     diagonalize_symplectic, orthogonal_frame, write_frame_csv)
from .dynamics import (QuenchProtocol, QuenchResult, coulomb_photon_number,
                       displacement_expectation, dominant_frequency,
                       evolve_observables, oscillation_estimate,
                       quench_initial_state)
from .ed import (EDResult, EDSystem, FewPhotonBasis, SparseHamiltonian,
                 assemble_hamiltonian, convergence_study, diagonalize,
                 enumerate_basis, fold_even_modes, prepare_system)
from .effective import (IsingModel, JCModel, LMGModel, build_ising, build_jc_ad,
                        build_jc_coulomb, diagonalize_spins, lmg_limit,
                        rabi_excitation_energy, solve_single_excitation)
from .model import (CharacteristicScales, CouplingProfile, DoubleWellPotential,
                    EmitterSpec, PolynomialPotential, TabulatedPotential,
                    WaveguideSpec, build_cavity_array, build_powerlaw,
                    build_tabulated, characteristic_scales, coupling_for_strength,
                    double_well_emitter, point_coupling,
                    spectral_function_exponent)
from .phase import (OrderParameterScan, ThetaScaling, order_parameter_scan,
                    theta_scaling, tunneling_gap)
from .spectra import (AnticrossingReport, StateClassification,
                      classify_excitations, qbic_decay_estimate,
                      scan_anticrossings, track_branch)

__version__ = "0.1.0"
