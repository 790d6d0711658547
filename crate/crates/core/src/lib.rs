//! Exact finite-horizon laboratory for density splitting on ω.
//!
//! Sets of naturals are descriptor trees ([`OmegaSet`]) that count exactly over
//! ranges with arbitrary-precision endpoints. On top of that sit interval
//! partitions, relative-density reports, adversarial constructions with
//! re-checkable rational certificates, nested splitting chains, and finite
//! relational systems.

pub mod adversary;
pub mod bits;
pub mod certificate;
pub mod chain;
pub mod density;
pub mod error;
pub mod omega;
pub mod partition;
pub mod preservation;
pub mod rational;
pub mod relsys;
pub mod rho;
pub mod symbolic;

pub use adversary::{
    centred_escape, centred_thresholds, defeat_bisector, laver_blocks, laver_escape,
    min_index_for_eps, Condition, Defeat, Slalom,
};
pub use bits::{BitBuf, Rle};
pub use certificate::{verify_certificate, Certificate, ChainKind, Conclusion, Raw, Rel, Step};
pub use chain::{
    build_chain, make_oracle, transform_splitter, ChainConfig, ChainMode, Direction, OracleKind,
    SplitChain, SplitterOracle, TransformConfig, TransformPath, TransformReport,
};
pub use density::{
    compose_densities, density_report, split_verdict, upper_lower_density, Checkpoints,
    ComposeMode, DensityReport, SplitKind, SplitVerdict, VerdictParams,
};
pub use error::{Error, Result};
pub use omega::{combine, horizon_cap, parse_rule, parse_set, OmegaSet, Prefix, SetOp};
pub use partition::{
    build_partition, interval_of, verify_growth, Growth, GrowthVerdict, IntervalPartition,
};
pub use preservation::{
    nwd_escape, reap_contract, reap_tukey_map, sq_rel_holds, witness_above, witness_below,
    GoodPair, RelVerdict,
};
pub use rational::{fmt_q, parse_q, Q};
pub use relsys::{
    bounding_number, check_tukey, compose, dominating_number, dual, gallery, pullback,
    thinness_check, Extremal, FiniteRelSys, Gallery, ThinnessReport, TukeyPair, TukeyVerdict,
};
pub use rho::{
    binary_digits, greedy_base_digits, select_levels, squaring_chain, ChainOp, Expansion,
    SquaringChain, Weights,
};
pub use symbolic::{IntervalSubset, PartKind, PartRule, SymbolicSet};
