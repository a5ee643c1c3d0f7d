"""Vendi scores of arbitrary order, their gradients, and Vendi sampling."""

from ._accel import BACKEND
from .grad import GradientReport, check_gradient_fd, vendi_force, vendi_gradient
from .kernels import Kernel, KernelError, ShapeColor, build_kernel_matrix, eval_kernel
from .sampler import (DivergenceError, DoubleWell, SamplerConfig, Trajectory,
                      count_transitions, free_energy_difference, free_energy_oracle,
                      reference_config, run_vendi_sampling)
from .scenarios import ScenarioSpec, evaluate_panel, evaluate_panels, generate_scenario
from .scores import (ScoreReport, hill_number, renyi_exponential, score_profile,
                     vendi_score, vendi_score_from_embeddings)
from .spectrum import IndefiniteKernelError, RankError, Spectrum, SpectrumError

__version__ = "0.1.0"
