//! Level-by-level construction of `(λ_n, ψ_n, τ_n)` for a degree-one
//! quasi-arithmetic sequence, the divergence condition on those weights,
//! hits `‖λ_n α‖ <= ψ_n`, and the pair-correlation windows a hit forces.

pub mod levels;
pub mod mu;
pub mod star;
pub mod totient;
pub mod witness;

pub use levels::{
    build_levels, difference_multiset, select_top_values, BuildOptions, ConstructionState, DifferenceMultiset,
    GrowthMode, InterleavedProgression, LevelData, LevelRecord,
};
pub use mu::{mu_brute, mu_exact, mu_sequence};
pub use star::{verify_condition_star, StarReport};
pub use totient::TotientTable;
pub use witness::{find_hits, hit_survey, witness_non_poissonian, Hit, WitnessCase, WitnessReport};
