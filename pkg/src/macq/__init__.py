"""Analytic queueing models, capacity scaling laws and a slotted
simulator for threshold-based distributed multiple access."""

from .core import (BernoulliExceedance, ChannelModel, ConvergenceError,
                   GaussianIID, GilbertElliott, InstabilityError,
                   StationaryMixture, SystemConfig, UserStatus,
                   ValidationError, mixture_cdf, mixture_pdf, mixture_sf,
                   validate_config)
from .coupled_chains import (ModelISolution, QueueBoundary,
                             avg_success_probs, build_transition_matrix,
                             enumerate_states, queue_boundary, solve_model1,
                             stationary_distribution)
from .evt import (GumbelConstants, distributed_capacity, dprime_bound,
                  dprime_tail_sum, expected_max, good_only_expected_max,
                  gumbel_constants, gumbel_domain_diagnostic,
                  level_for_intensity, mixing_bound, threshold_for_one,
                  utilized_slot_probability)
from .gilbert_queue import (ModulatedQueueSolution, cubic_coeffs,
                            solve_model3, solve_z0, steady_state)
from .meanfield import MeanFieldSolution, mm1_metrics, solve_pcoll
from .sim import (SimReport, count_exceedances, run_sim,
                  sample_max_capacity, sweep_threshold)

__version__ = "0.1.0"
