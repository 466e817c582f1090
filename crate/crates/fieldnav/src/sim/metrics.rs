//! Episode metrics: Success weighted by Path Length (SPL), its soft
//! variant, and distance to success.
//!
//! All distances are geodesic meters. `oracle_m` is the shortest-path length
//! from the start to the success zone; `agent_m` is the length the agent
//! actually walked.

use crate::scalar::Scalar;

/// `oracle / max(agent, oracle)`. When both lengths are zero the agent
/// started at the goal and walked nowhere, which counts as perfectly
/// efficient (ratio 1).
pub fn path_efficiency<F: Scalar>(oracle_m: F, agent_m: F) -> F {
    let denom = agent_m.max(oracle_m);
    if denom == F::zero() {
        F::one()
    } else {
        oracle_m / denom
    }
}

/// Success weighted by path length: `success * oracle / max(agent, oracle)`.
pub fn spl<F: Scalar>(success: bool, oracle_m: F, agent_m: F) -> F {
    if success {
        path_efficiency(oracle_m, agent_m)
    } else {
        F::zero()
    }
}

/// Progress-weighted efficiency: `(1 - d_final/d_init) * oracle /
/// max(agent, oracle)`, with progress clamped to [0, 1] and defined as 1
/// when the episode starts at distance zero. Unlike SPL it rewards partial
/// progress on failed episodes.
pub fn soft_spl<F: Scalar>(d_init_m: F, d_final_m: F, oracle_m: F, agent_m: F) -> F {
    if !d_init_m.is_finite() {
        return F::zero();
    }
    let progress = if d_init_m == F::zero() {
        F::one()
    } else {
        (F::one() - d_final_m / d_init_m).max(F::zero()).min(F::one())
    };
    progress * path_efficiency(oracle_m, agent_m)
}

/// Distance to success: geodesic distance from the final cell to the
/// success zone, floored at zero.
pub fn distance_to_success<F: Scalar>(zone_distance_m: F) -> F {
    zone_distance_m.max(F::zero())
}
