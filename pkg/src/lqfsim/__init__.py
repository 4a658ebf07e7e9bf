"""lqfsim: simulator and numerical-limit toolkit for parallel queues under
randomized longest-queue-first scheduling.

Exact event-level simulation of the n-buffer system runs on an exchangeable
count representation, with a compiled kernel for the hot loops and a pure
Python fallback selected at import (see ``lqfsim.backend_name()``).  On top
of the simulator sit the fluid ODE hierarchy, the fluctuation SDE and its
variance ODE, normal approximations of the fraction of nonempty buffers,
empirical validation statistics, and an exact small-instance oracle.
"""

__version__ = "0.1.0"

from lqfsim._backend import HAVE_COMPILED

from lqfsim.engine import (CountState, EventRecord, SystemConfig,
                           TailFractionPath, initial_state, max_length_pmf,
                           mean_queue_length, sample_max_length, scaled_view,
                           simulate, simulate_terminal, step)
from lqfsim.errors import (BranchUnsupportedError, ConfigurationError,
                           InterpolationError, LqfError, NumericalDomainError,
                           StateSpaceError)
from lqfsim.fluid import (FluidConfig, FluidSolution, fixed_point, fluid_rhs,
                          solve_fluid, u1_closed_form)
from lqfsim.diffusion import (ApproxDistribution, SdePath, VarianceCurve,
                              approx_f1_distribution, ks_region_accepts,
                              sample_z_path, sample_z_terminal,
                              sample_zk_path, sample_zk_terminal,
                              solve_variance_ode, stationary_mu_sigma)
from lqfsim.stats import (EmpiricalSample, Histogram, histogram, ks_distance,
                          mean_ci, normal_cdf)
from lqfsim.oracle import OracleResult, uniformization_oracle


def backend_name() -> str:
    """Name of the kernel backend in use ('compiled' or 'python')."""
    from lqfsim._backend import kernel
    return kernel.BACKEND_NAME
