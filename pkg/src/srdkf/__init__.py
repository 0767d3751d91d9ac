"""Set-valued distributed Kalman filtering for secure GPS timing."""

from srdkf.estimator import (
    NoiseDescriptor,
    PointState,
    adaptive_R,
    pv_measurement_update,
    pv_time_update,
    single_adaptive_kf_step,
)
from srdkf.netsim import (
    AttackSpec,
    IntervalBounds,
    MonteCarloResult,
    NetworkGraph,
    NoiseBounds,
    Scenario,
    SimLog,
    World,
    monte_carlo,
    preset_coordinated,
    preset_none,
    preset_robustness_cell,
    run_round,
    run_scenario,
)
from srdkf.risk import RiskResult, UnsafeSet, halfplane_clip_area, timing_risk
from srdkf.setfilter import (
    MeasurementBundle,
    SetState,
    adaptive_gain,
    attack_status,
    innovation_pzonotope,
    sr_measurement_update,
    sr_time_update,
)
from srdkf.sets import (
    LeveledPolytope,
    Polytope2D,
    PZonotope,
    Zonotope,
    from_bounds,
    gamma_confidence_zonotope,
    linear_map,
    mahalanobis_to_zonotope,
    minkowski_sum,
    overapprox_leveled_polytopes,
    sup_density,
    translate,
    zonotope_to_polytope2d,
)

__version__ = "0.1.0"
