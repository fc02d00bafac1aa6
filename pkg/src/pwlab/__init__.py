"""pwlab: pilot-wave dynamics on periodic grids.

Schrodinger evolution, first- and second-order trajectory integration,
classical reference paths, frame transformations and the audits that
compare them.
"""
from .core import (DensityField, GridSpec, ParticleModel, VelocityField, WaveFunction, density, interpolate,
                   phase_gradient, sample_density)
from .errors import (ConfigInvalid, DegenerateDensity, DegenerateEnsemble, NodeProximity, NonFinite, OutOfSpan,
                     PacketTruncated, PilotWaveError, SupportWrap)
from .potentials import Free, GaussianBarrier, Harmonic, Sum, Tabulated, UniformGradient
from .schrodinger import EvolutionRecord, SplitStepPropagator, evolve, gaussian_packet
from .guidance import IntegratorOptions, Trajectory, integrate_ensemble, integrate_guidance
from .bohm import integrate_second_order, quantum_force, quantum_potential
from .classical import integrate_newton
from .frames import FrameTransform, boost_covariance_audit, boost_wavefunction, euclidean_transform_wavefunction
from .equivariance import EnsembleState, coefficient_uniqueness_experiment, continuity_residual, transport_ensemble

__version__ = "0.1.0"
