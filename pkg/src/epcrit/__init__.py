"""epcrit: breakdown-vs-global classification for radial Euler-Poisson flows.

The library evaluates explicit pointwise conditions for finite-time
breakdown of radially symmetric pressureless Euler-Poisson flows
(gradient focusing Gamma -> 0 or collapse X -> 0 along characteristics)
and cross-validates every verdict with a characteristic-ODE simulation.
"""

from .profiles import (
    CompactBumpProfile,
    ConstantProfile,
    EnvelopedSineProfile,
    ExponentialDecayProfile,
    GaussianProfile,
    InitialData,
    PositiveRootVelocity,
    PowerSineProfile,
    ProblemConfig,
    ProfileError,
    RadialProfile,
    RationalDecayProfile,
    TabulatedProfile,
    eval_density,
    eval_velocity,
    eval_velocity_derivative,
    make_profile,
    mass,
)
from .quadrature import (
    DomainError,
    IntegralResult,
    IntegralSpec,
    QuadratureError,
    integrate,
    integrate_sqrt_log,
)
from .quantities import (
    QuantityError,
    ThresholdQuantities,
    TurningData,
    constant_In,
    threshold_quantities,
    turning_time,
    turning_time_value,
)
from .pcfb import (
    CONDITION_IDS,
    Classification,
    ScanConfig,
    Verdict,
    classify,
    evaluate_pcfb,
    pcfb_1d,
    pcfb_2d_repulsive,
    pcfb_3d_repulsive,
    pcfb_4d_closed,
    pcfb_attractive,
)
from .characteristics import (
    BreakdownEvent,
    CharState,
    CharTrajectory,
    FieldSlice,
    SimulationError,
    closed_form_1d,
    closed_form_4d,
    collapse_time_4d,
    detect_breakdown,
    energy_residual,
    reconstruct,
    simulate,
    simulate_fan,
)

__version__ = "0.1.0"
