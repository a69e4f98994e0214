"""Linear-optical simulation of controlled quantum teleportation.

Builds the four-photon experiment from the emission source up: Fock-level
states, optical elements as creation-operator substitutions, the GHZ
preparation and singlet projection, the controller's allow/deny measurement,
qubit-level channel analysis (GHZ mixtures and noisy channels), and the
statistical layer (count-ratio fidelities, maximum-likelihood tomography,
background subtraction, Poisson uncertainties).
"""

from .channels import (ChannelSpec, ConditionalChannel, avg_teleport_fidelity,
                       classical_control_baseline, condition_on_controller,
                       make_channel, make_ghz_mixture, make_werner,
                       teleport_fidelity, werner_scan)
from .elements import (OpticalElement, apply, apply_all, balanced_bs, hwp,
                       jones_element, measure_polarization, pbs,
                       pbs_with_imperfection, phase_plate, polarizer, qwp)
from .estimation import (FidelityEstimate, MLResult, ProjectionCounts,
                         corrected_fidelity, correct_for_background,
                         fidelity_from_counts, ml_reconstruct,
                         poisson_uncertainty, read_counts_csv)
from .fock import (H, V, PureState, fidelity, project, tensor,
                   to_qubit_density, validate_density)
from .protocol import (CountRecord, InputQubit, ProtocolConfig, ProtocolError,
                       analyzer_frame, bob_correction, emulate_mixture,
                       prepare_ghz, run_protocol, singlet_projection,
                       swap_roles)
from .spdc import (SourceParams, fit_source_ratio, four_mode_source,
                   heralded_fraction, two_mode_spdc)

__version__ = "0.1.0"
