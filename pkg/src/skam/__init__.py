"""Semiclassical quasi-resonant normal forms on the torus.

Exact finite-Fourier symbol calculus, resonance geometry, the homological
equation, the iterative normal form and a dense spectral oracle.
"""

from .context import (EnumerationCapError, NotSelfAdjointError, ParameterError, ResonanceError,
                      SemiclassicalContext, SupportOverflowError, default_context)
from .cutoff import chi, phi
from .fields import Evaluator, Field
from .symbols import (FourierSymbol, adjoint, commutator, eval_symbol, lattice_average, moyal_expansion_term,
                      moyal_product, poisson_with_H, prune, torus_average)
from .seminorms import SeminormReport, seminorm_estimate
from .hamiltonian import Hamiltonian
from .lattice import ResonanceLattice, enumerate_lattices, hermite_normal_form
from .resonance import (ZoneVolumeEstimate, check_geometric_lemma, in_block, in_zone, in_zone_star, mc_volume,
                        omega)
from .averaging import (hdelta_average, selfadjoint_hdelta_average, selfadjoint_homological,
                        solve_homological)
from .normal_form import NormalFormResult, choose_M, conjugate_expand, effective_eigenvalue, normal_form_iterate
from .oracle import OperatorMatrix, QuasimodeReport, build_quasimode, eigensolve, quantize, unitary_exp

__version__ = "0.1.0"
