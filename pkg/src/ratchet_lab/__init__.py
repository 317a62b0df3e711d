"""Numerical laboratory for two-state flashing Brownian ratchets."""

from .model import (
    Grid,
    GridFn,
    ModelError,
    Potential,
    RateProfile,
    RatchetParams,
    conjugate_eta,
    make_constant_rate,
    make_peaked_rate,
    make_smooth_rate,
    make_smoothed_sawtooth,
    shift_differences,
    well_integrals,
)
from .bvp import SLOperator, green_function, green_function_at, solve_sl_neumann
from .diffusive_mean import diffusive_mean
from .squeezing import squeeze_solution
from .stationary import (
    DensityPair,
    Direction,
    solve_collaborative,
    solve_stationary,
    transport_verdict,
    well_mass_report,
)
from .transient import FlashingSchedule, compare_directions, run_to_stationary

__version__ = "0.1.0"
