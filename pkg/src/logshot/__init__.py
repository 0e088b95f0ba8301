"""Shot-noise processes with logarithmic response and their Hadamard-fBm limit."""
from .errors import AccuracyError, DomainError, NumericalError
from .kernels import Kernel, eval_kernel, log_kernel, poly_kernel
from .noise import (BoundedPowerLawVariance, IndependentConstant, LogDecayVariance,
                    NoiseModel, PowerLawVariance, k2, k4, sample_noise)
from .specfun import kummer_phi, ln_gamma, tricomi_psi, tricomi_psi_derivative
from .shotnoise import (ArrivalSet, Ensemble, SamplePath, SimConfig, attach_marks,
                        evaluate_path, path_rng, simulate_arrivals, simulate_ensemble,
                        simulate_path, simulate_scaled)
from .hfbm import (CovMatrix, HfbmParams, c_alpha, cov_matrix, hfbm_cov,
                   increment_variance, lemma_checks, sample_hfbm)

__version__ = "0.1.0"
