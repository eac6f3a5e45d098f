//! Exact simulation and closed-form analysis of single-rail photonic
//! entanglement distribution over lossy channels, covering heralded
//! schemes with noiseless linear amplification and a two-pair
//! purification scheme.

pub mod compare;
pub mod fock;
pub mod formulas;
pub mod optics;
pub mod protocols;

pub use compare::{
    best_protocol, linspace, region_map, tradeoff_curve, ComparisonPoint, TradeoffPoint,
    TIE_BREAK_ORDER,
};
pub use fock::{
    make_state, EnvKind, FockError, LinearNetwork, ModeLabel, OccupationPattern, OperatorState,
    Role, MAX_OCCUPANCY, NETWORK_TOL, PRUNE_THRESHOLD,
};
pub use formulas::{
    check_feasible_x, distance_from_eta, eta_from_distance, limiting_forms, p_nla_bob,
    p_nla_bob_detector,
    p_nla_bob_perfect, p_nla_halfway, p_nla_halfway_detector, p_nla_halfway_perfect,
    p_purification, p_purification_perfect, purification_optimal_t, purity_from_x, x_do_nothing,
    x_max, x_nla_bob_of_t, x_nla_halfway_of_t, x_purification, x_root_nla_bob, FormulaError,
    FormulaId, LimitingForm, ATTENUATION_LENGTH_KM, FEASIBILITY_MARGIN,
};
pub use optics::{
    entangler, loss_channel, noisy_detector, noisy_source, NetworkBuilder, NoiseParams,
    OpticsError, ProtocolParams,
};
pub use protocols::{
    max_entanglement_tau, t_from_target_x, Circuit, ClickPattern, ConditionedOutcome,
    ProtocolError, ProtocolId, CLICK_UNIFORMITY_TOL, X_FLOOR,
};
