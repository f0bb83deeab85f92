"""toalab: arrival-time and transition-time probabilities for quantum systems.

Subpackages and modules:

* ``transitions``    finite-dimensional transition framework (restricted
  propagators, class operators, interval probabilities, smeared POVMs),
* ``wavepacket``     1D states on momentum grids, dispersion relations,
  Wigner functions,
* ``detectors``      three detector kernel families and their absorption
  coefficients,
* ``toa``            arrival-time densities, probability current, classical
  and semiclassical limits,
* ``oscillations``   time-integrated oscillation probabilities, standard and
  non-standard wavenumbers,
* ``cli``            the scenario runner.

The hot kernels run on a compiled extension when available (see
``toalab._accel.BACKEND``), with a numpy fallback selected at import.
"""

__version__ = "0.1.0"

from ._accel import BACKEND
from .detectors import (AbsorptionCoefficient, CouplingFunction, DensityOfStates, DetectorModel,
                        absorption, kernel_coherent, kernel_decoherent, kernel_element,
                        kernel_energy, kernel_matrix)
from .errors import (NoPeakError, NumericalError, SingularKernelError, ToalabError,
                     ValidationError, WindowError)
from .oscillations import (DecoherenceKernel, ExponentialEnvelope, GaussianEnvelope,
                           OscillationScenario, envelope_autocorrelation, fit_wavenumber,
                           localization_length, nonstandard_wavenumber, oscillation_probability,
                           oscillation_sweep, standard_wavenumber)
from .toa import (TimeGrid, ToADensity, analytic_time_integrated, classical_toa,
                  kijowski_density, probability_current, semiclassical_correction,
                  time_integrated, toa_density_absorption, toa_density_kernel)
from .transitions import (RestrictedPropagator, SmearingKernel, TransitionSystem,
                          class_operator_exact, class_operator_perturbative,
                          consistency_offdiagonal, consistency_ratio,
                          detection_probability_interval, no_detection_operator,
                          restricted_propagator, smeared_povm_element, transition_density,
                          zeno_propagator)
from .wavepacket import (Dispersion, MixedState, MomentumGrid, PhaseSpaceField, WavePacket,
                         evolve, gaussian_packet, wigner)
