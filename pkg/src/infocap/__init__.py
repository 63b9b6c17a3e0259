"""infocap: channel information capacity numerics.

Fisher information and Cramér-Rao/Stam inequality chains for N-channel
samples under Euclidean and Minkowski metric contraction, the kinematic
(amplitude/probability) capacity forms on discretized fields, the Maxwell
gauge-field capacity, and Fourier-space capacity with the mass-squared and
Fourier-information identities.
"""

__version__ = "0.1.0"

from .metric import (BoostParameters, MetricSignature, boost_matrix, contract,
                     lower_index, raise_index)
from .statmodel import (ParameterVector, ParametricModel, SampleBatch,
                        expected_parameter_check, gaussian_location_model,
                        log_likelihood, sample, score, score_mean_check)
from .fisher import (CapacityResult, EstimationReport, FisherMatrix,
                     build_estimation_report, channel_capacity, channel_fisher,
                     crlb_check, estimator_variance, expected_fisher,
                     identity_estimator, observed_fisher, outer_form_fisher,
                     stam_capacity_check, stam_information)
from .kinematic import (AmplitudeField, GaugeField, GridSpec, boost_field,
                        capacity_from_amplitudes, capacity_from_probabilities,
                        gauge_normalization_check, gaussian_amplitude_field,
                        gradient, lorentz_condition_residual, maxwell_capacity,
                        mixture_density, plane_wave_field,
                        statistical_kinematic_consistency)
from .fourier import (MomentumField, PhysicalConstants, forward_transform,
                      fourier_information, free_particle_capacity,
                      inverse_transform, mass_squared, momentum_capacity,
                      parseval_check, tachyon_check)
