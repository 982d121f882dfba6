//! Diagnostics for the structural facts behind the regret analysis:
//! ℓ1-span norms, hull volumes, anomaly-freeness, Cayley–Hamilton
//! recurrences, leverage sums and small polynomial multiples.

mod anomaly;
mod cayley;
mod hull;
mod l1span;
mod leverage;
mod planar;
mod polys;
mod primes;

pub use anomaly::{
    anomaly_pareto, certify_anomaly_free, minimal_c, resolve_directions, AnomalyCheck, AnomalyParams,
    AnomalyReport, DirectionRecord, Directions,
};
pub use cayley::{
    ch_noise_bound, ch_recurrence_residual, char_poly, char_poly_for_spec, char_poly_from_roots,
    jordan_power_check, CharPoly, JordanPowerReport, MAX_CHAR_POLY_DIM,
};
pub use hull::{
    check_volume_doubling, hull_volume, hull_volume_in, hull_volume_with, DoublingRecord, HullVolume,
    VolumeOptions, DEFAULT_MC_SAMPLES, DISK_POLYGON_SIDES,
};
pub use l1span::{
    exists_large_witness, l1_span_norm, l1_span_norm_at_most, outlier_indices, outlier_threshold,
    theoretical_l1_bounds, L1Decomposition, OutlierSet, WitnessRecord, GAP_TOLERANCE, MAX_ITERATIONS,
};
pub use leverage::{leverage_diagnostics, net_quantities, LeverageRecord, NetQuantities};
pub use polys::{poly_from_roots, poly_mod, poly_mod_complex, small_multiple_search, SmallMultiple};
pub use primes::{primes_up_to, primorial, Primorial, MAX_PRIMORIAL_ARG};
