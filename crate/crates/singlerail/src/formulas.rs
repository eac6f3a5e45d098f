//! Closed-form expressions for the protocols: success probabilities as
//! functions of the purity ratio X, feasibility bounds, peak locations,
//! limiting behaviour and the distance-to-transmissivity channel model.
//!
//! Each probability formula is written in its exact published shape;
//! algebraic reductions between the noisy and noiseless families are
//! verified by tests, not baked into the code.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::optics::NoiseParams;
use crate::protocols::ProtocolId;

/// Fibre attenuation length in kilometres.
pub const ATTENUATION_LENGTH_KM: f64 = 22.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormulaError {
    #[error("purity ratio {x} is not reachable; the bound is {x_max}")]
    InfeasibleX { x: f64, x_max: f64 },
    #[error("unknown formula id `{0}`")]
    UnknownFormula(String),
}

/// Channel transmissivity after `d_km` kilometres of fibre.
pub fn eta_from_distance(d_km: f64) -> f64 {
    (-d_km / ATTENUATION_LENGTH_KM).exp()
}

/// Fibre length giving channel transmissivity `eta`.
pub fn distance_from_eta(eta: f64) -> f64 {
    -ATTENUATION_LENGTH_KM * eta.ln()
}

/// Purity ratio of direct transmission: 2 eta / (1 - eta).
pub fn x_do_nothing(eta: f64) -> f64 {
    if eta >= 1.0 {
        f64::INFINITY
    } else {
        2.0 * eta / (1.0 - eta)
    }
}

/// Largest purity ratio any amplified scheme can reach with source
/// quality `epsilon`: 2 epsilon / (1 - epsilon).
pub fn x_max(epsilon: f64) -> f64 {
    if epsilon >= 1.0 {
        f64::INFINITY
    } else {
        2.0 * epsilon / (1.0 - epsilon)
    }
}

/// Purity ratio delivered by the purification scheme, which is fixed
/// by the source quality alone: 2 eps^2 / (1 - eps^2).
pub fn x_purification(epsilon: f64) -> f64 {
    if epsilon >= 1.0 {
        f64::INFINITY
    } else {
        2.0 * epsilon * epsilon / (1.0 - epsilon * epsilon)
    }
}

/// Tr(rho^2) of the heralded mixture: (1 + X^2) / (1 + X)^2.
pub fn purity_from_x(x: f64) -> f64 {
    if x.is_infinite() {
        1.0
    } else {
        (1.0 + x * x) / ((1.0 + x) * (1.0 + x))
    }
}

/// Purity ratio of amplification at Bob's end as a function of the
/// resource splitter transmissivity.
pub fn x_nla_bob_of_t(t: f64, eta: f64, delta: f64, epsilon: f64) -> f64 {
    let a = 1.0 + eta - 2.0 * eta * delta;
    let denom = epsilon * a * (1.0 - t) + eta * (1.0 - epsilon);
    if denom <= 0.0 {
        f64::INFINITY
    } else {
        2.0 * t * eta * epsilon / denom
    }
}

/// Purity ratio of half-way amplification as a function of the
/// resource splitter transmissivity.
pub fn x_nla_halfway_of_t(t: f64, eta: f64, delta: f64, epsilon: f64) -> f64 {
    let b = 1.0 - delta * eta.sqrt();
    let denom = epsilon * (1.0 - t) * b + 0.5 * (1.0 - epsilon);
    if denom <= 0.0 {
        f64::INFINITY
    } else {
        epsilon * t / denom
    }
}

/// Location of the stationary point of the noiseless Bob's-end success
/// probability in X, when a physical one exists.
///
/// The positive root requires eta > sqrt(2) - 1; below that the curve
/// is monotone on the feasible range and there is no interior peak.
pub fn x_root_nla_bob(eta: f64) -> Option<f64> {
    if !(0.0..1.0).contains(&eta) {
        return None;
    }
    let disc = (eta + 1.0) * (3.0 * eta - 1.0);
    if disc < 0.0 {
        return None;
    }
    let root = -1.0 + disc.sqrt() / (1.0 - eta);
    (root > 0.0).then_some(root)
}

/// Noiseless success probability of amplification at Bob's end.
pub fn p_nla_bob_perfect(x: f64, eta: f64) -> f64 {
    4.0 * eta * (1.0 - eta) * (1.0 + x)
        / ((2.0 * eta + x * (1.0 - eta)) * (2.0 + x * (1.0 - eta)))
}

/// Bob's-end success probability with detector quality `delta`.
pub fn p_nla_bob_detector(x: f64, eta: f64, delta: f64) -> f64 {
    let a = 1.0 + eta - 2.0 * eta * delta;
    4.0 * delta * eta * a * (1.0 + x) / ((2.0 * eta + x * a) * (2.0 + x * a))
}

/// Noiseless success probability of half-way amplification.
pub fn p_nla_halfway_perfect(x: f64, eta: f64) -> f64 {
    let r = eta.sqrt();
    let d = x * (r - 1.0) - 1.0;
    2.0 * r * (1.0 - r) * (1.0 + x) / (d * d)
}

/// Half-way success probability with detector quality `delta`.
pub fn p_nla_halfway_detector(x: f64, eta: f64, delta: f64) -> f64 {
    let b = 1.0 - delta * eta.sqrt();
    let d = 1.0 + x * b;
    2.0 * delta * eta.sqrt() * (1.0 + x) * b / (d * d)
}

/// Relative slack applied at the reachability bound so that targets
/// sitting exactly on it are rejected despite rounding in the bound.
pub const FEASIBILITY_MARGIN: f64 = 1e-12;

/// Rejects purity-ratio targets at or beyond the reachable bound.
pub fn check_feasible_x(x: f64, epsilon: f64) -> Result<(), FormulaError> {
    let bound = x_max(epsilon);
    if x.is_nan() || x <= 0.0 || x >= bound * (1.0 - FEASIBILITY_MARGIN) {
        return Err(FormulaError::InfeasibleX { x, x_max: bound });
    }
    Ok(())
}

/// Success probability of amplification at Bob's end in the most
/// general noise setting. An infinite target is allowed only with a
/// perfect source, where the probability tends to zero.
pub fn p_nla_bob(x: f64, eta: f64, delta: f64, epsilon: f64) -> Result<f64, FormulaError> {
    if x.is_infinite() && x > 0.0 && epsilon >= 1.0 {
        return Ok(0.0);
    }
    check_feasible_x(x, epsilon)?;
    let a = 1.0 + eta - 2.0 * eta * delta;
    let num = 2.0 * delta * eta * (1.0 + x) * (epsilon + eta - 2.0 * epsilon * eta * delta)
        * (2.0 * epsilon - x * (1.0 - epsilon));
    let den = (2.0 * eta + x * a)
        * (2.0 * epsilon + x * (2.0 * epsilon * (1.0 - eta * delta) + eta - 1.0));
    Ok(num / den)
}

/// Success probability of half-way amplification in the most general
/// noise setting.
pub fn p_nla_halfway(x: f64, eta: f64, delta: f64, epsilon: f64) -> Result<f64, FormulaError> {
    if x.is_infinite() && x > 0.0 && epsilon >= 1.0 {
        return Ok(0.0);
    }
    check_feasible_x(x, epsilon)?;
    let r = eta.sqrt();
    let b = 1.0 - delta * r;
    let num = delta
        * r
        * (1.0 + x)
        * (1.0 + epsilon - 2.0 * epsilon * delta * r)
        * (2.0 * epsilon - x * (1.0 - epsilon));
    let den = 2.0 * epsilon * (1.0 + x * b) * (1.0 + x * b);
    Ok(num / den)
}

/// Noiseless purification success probability at the optimal setting.
pub fn p_purification_perfect(eta: f64) -> f64 {
    eta / 8.0
}

/// Resource splitter setting that maximizes the purification success
/// probability: 1 / (1 + epsilon).
pub fn purification_optimal_t(epsilon: f64) -> f64 {
    1.0 / (1.0 + epsilon)
}

/// Purification success probability and delivered purity ratio at the
/// optimal splitter setting. The ratio does not depend on eta or delta.
pub fn p_purification(eta: f64, delta: f64, epsilon: f64) -> (f64, f64) {
    let d4 = delta * delta * delta * delta;
    let e2 = epsilon * epsilon;
    let p = d4 * e2 * eta * (1.0 + e2) / (4.0 * (1.0 + epsilon) * (1.0 + epsilon));
    (p, x_purification(epsilon))
}

/// Asymptotic success probability in the regime of large X, small eta
/// and nearly ideal sources.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitingForm {
    pub protocol: ProtocolId,
    pub eta: f64,
    pub delta: f64,
    pub epsilon: f64,
}

/// Evaluator for the limiting success probability of a protocol.
pub fn limiting_forms(protocol: ProtocolId, noise: &NoiseParams) -> LimitingForm {
    LimitingForm {
        protocol,
        eta: noise.eta,
        delta: noise.delta,
        epsilon: noise.epsilon,
    }
}

impl LimitingForm {
    pub fn p_success(&self, x: f64) -> f64 {
        match self.protocol {
            ProtocolId::DoNothing => 1.0,
            ProtocolId::NlaBob => {
                4.0 * self.delta * self.eta * (1.0 / x - (1.0 - self.epsilon) / 2.0)
            }
            ProtocolId::NlaHalfway => {
                2.0 * self.delta * self.eta.sqrt() * (1.0 / x - (1.0 - self.epsilon) / 2.0)
            }
            ProtocolId::Purification => {
                let d4 = self.delta * self.delta * self.delta * self.delta;
                d4 * self.epsilon * self.epsilon * self.eta / 8.0
            }
        }
    }
}

/// Keys for every implemented closed-form expression, used by the
/// formula-versus-simulation verification command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FormulaId {
    EtaFromDistance,
    XDoNothing,
    XMax,
    XRootNlaBob,
    PurityFromX,
    XNlaBobOfT,
    XNlaHalfwayOfT,
    PNlaBobPerfect,
    PNlaBobDetector,
    PNlaBobGeneral,
    PNlaHalfwayPerfect,
    PNlaHalfwayDetector,
    PNlaHalfwayGeneral,
    PPurificationPerfect,
    PPurificationNoisy,
}

impl FormulaId {
    pub const ALL: [FormulaId; 15] = [
        FormulaId::EtaFromDistance,
        FormulaId::XDoNothing,
        FormulaId::XMax,
        FormulaId::XRootNlaBob,
        FormulaId::PurityFromX,
        FormulaId::XNlaBobOfT,
        FormulaId::XNlaHalfwayOfT,
        FormulaId::PNlaBobPerfect,
        FormulaId::PNlaBobDetector,
        FormulaId::PNlaBobGeneral,
        FormulaId::PNlaHalfwayPerfect,
        FormulaId::PNlaHalfwayDetector,
        FormulaId::PNlaHalfwayGeneral,
        FormulaId::PPurificationPerfect,
        FormulaId::PPurificationNoisy,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FormulaId::EtaFromDistance => "eta-from-distance",
            FormulaId::XDoNothing => "x-do-nothing",
            FormulaId::XMax => "x-max",
            FormulaId::XRootNlaBob => "x-root-nla-bob",
            FormulaId::PurityFromX => "purity-from-x",
            FormulaId::XNlaBobOfT => "x-nla-bob-of-t",
            FormulaId::XNlaHalfwayOfT => "x-nla-halfway-of-t",
            FormulaId::PNlaBobPerfect => "p-nla-bob-perfect",
            FormulaId::PNlaBobDetector => "p-nla-bob-detector",
            FormulaId::PNlaBobGeneral => "p-nla-bob-general",
            FormulaId::PNlaHalfwayPerfect => "p-nla-halfway-perfect",
            FormulaId::PNlaHalfwayDetector => "p-nla-halfway-detector",
            FormulaId::PNlaHalfwayGeneral => "p-nla-halfway-general",
            FormulaId::PPurificationPerfect => "p-purification-perfect",
            FormulaId::PPurificationNoisy => "p-purification-noisy",
        }
    }
}

impl fmt::Display for FormulaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FormulaId {
    type Err = FormulaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FormulaId::ALL
            .iter()
            .copied()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| FormulaError::UnknownFormula(s.to_string()))
    }
}
