"""Classical-trajectory toolkit for correlated three-electron escape in strong laser fields.

Saddle-point location and stability analysis of the triangular (C3v) and
planar (C2v) three-electron configurations, generalized threshold exponents,
and Monte Carlo trajectory ensembles yielding parallel ion-momentum
distributions.
"""

import os as _os

# allow more compiled worker threads than visible cores so ensemble results
# can be checked for independence of the thread count; must be set before
# numba is first imported
_os.environ.setdefault("NUMBA_NUM_THREADS", "8")

from .errors import (ConvergenceError, DomainError, InsufficientStatistics,
                     SamplingError, TrionError)
from .fields import (FieldParams, envelope, field_value, pulse_profile,
                     scale_energy, scale_frequency, scale_state, scale_time)
from .hamiltonians import (MASS_C2V, MASS_C3V, C2vState, C3vState, FullState,
                           embed, eom_c2v, eom_c3v, hamiltonian_c2v,
                           hamiltonian_c3v, hamiltonian_full, potential_c2v,
                           potential_c3v, potential_full)
from .saddles import (SaddleInfo, ring_scan, saddle_c2v, saddle_c3v,
                      saddle_ring)
from .stability import (Mode, StabilityReport, analyze_fullspace,
                        analyze_subspace, hessian, standard_exponents,
                        timescale_report, wannier_exponent)
from .integrator import (IntegratorControls, TrajectoryOutcome, classify,
                         integrate_span, ion_momentum, propagate)
from .sampling import EnsembleConfig, sample_c2v, sample_c3v
from .ensemble import (MomentumHistogram, histogram, run_ensemble,
                       shape_metrics, t0_symmetry_check)

__version__ = "0.1.0"
