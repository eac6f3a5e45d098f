//! The four distribution schemes as concrete circuits: network wiring,
//! heralding click patterns, brute-force evaluation of conditioned
//! outcomes, and closed-form tuning of the splitter settings.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use thiserror::Error;

use crate::fock::{make_state, EnvKind, FockError, LinearNetwork, ModeLabel, OperatorState, Role};
use crate::formulas::{check_feasible_x, FormulaError};
use crate::optics::{NetworkBuilder, NoiseParams, OpticsError, ProtocolParams};

/// Click-pattern probabilities in one family must agree within this.
pub const CLICK_UNIFORMITY_TOL: f64 = 1e-10;

/// Probabilities at or below this floor leave the purity ratio undefined.
pub const X_FLOOR: f64 = 1e-15;

/// The implemented distribution schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ProtocolId {
    /// Direct transmission of one half of the entangled state.
    DoNothing,
    /// Heralded amplification at Bob's end of the full channel.
    NlaBob,
    /// Heralded amplification at the midpoint of the channel.
    NlaHalfway,
    /// Two-pair purification with an eight-detector coincidence.
    Purification,
}

impl ProtocolId {
    pub const ALL: [ProtocolId; 4] = [
        ProtocolId::DoNothing,
        ProtocolId::NlaBob,
        ProtocolId::NlaHalfway,
        ProtocolId::Purification,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolId::DoNothing => "do-nothing",
            ProtocolId::NlaBob => "nla-bob",
            ProtocolId::NlaHalfway => "nla-halfway",
            ProtocolId::Purification => "purification",
        }
    }
}

impl fmt::Display for ProtocolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProtocolId {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProtocolId::ALL
            .iter()
            .copied()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| ProtocolError::UnknownProtocol(s.to_string()))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error(transparent)]
    Optics(#[from] OpticsError),
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error("click patterns of `{0}` have unequal probabilities")]
    NonUniformClicks(ProtocolId),
    #[error("the purification scheme requires an ideal source on Alice's side")]
    UnsupportedAliceSource,
    #[error("target purity ratio {x} is not reachable; the bound is {x_max}")]
    InfeasibleTarget { x: f64, x_max: f64 },
    #[error("`{0}` has no closed-form inversion from purity ratio to splitter setting")]
    NoPurityInversion(ProtocolId),
    #[error("unknown protocol `{0}`")]
    UnknownProtocol(String),
}

/// Required photon count per detected mode for one heralding outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClickPattern(pub BTreeMap<String, u8>);

impl ClickPattern {
    pub fn new(counts: &[(&str, u8)]) -> Self {
        ClickPattern(
            counts
                .iter()
                .map(|(name, n)| (name.to_string(), *n))
                .collect(),
        )
    }

    fn as_pairs(&self) -> Vec<(&str, u8)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v)).collect()
    }
}

/// Result of conditioning a circuit on its heralding outcome.
///
/// `psi_f` is the component with every environment mode empty, `psi_0`
/// the complement; both are reported unnormalized, as produced by the
/// projection, together with normalized copies.
#[derive(Debug, Clone)]
pub struct ConditionedOutcome {
    pub p_success: f64,
    pub p_f: f64,
    pub p_0: f64,
    pub x: f64,
    pub psi_f: OperatorState,
    pub psi_0: OperatorState,
    pub psi_f_normalized: OperatorState,
    pub psi_0_normalized: OperatorState,
    pub click_multiplicity: usize,
}

/// A fully wired protocol instance ready for evaluation.
#[derive(Debug, Clone)]
pub struct Circuit {
    pub protocol: ProtocolId,
    pub params: ProtocolParams,
    pub noise: NoiseParams,
    pub network: LinearNetwork,
    pub input: OperatorState,
    pub click_patterns: Vec<ClickPattern>,
}

fn input_labels(names: &[&str]) -> Vec<ModeLabel> {
    names.iter().map(|n| ModeLabel::auxiliary(*n)).collect()
}

impl Circuit {
    pub fn build(
        protocol: ProtocolId,
        params: ProtocolParams,
        noise: NoiseParams,
    ) -> Result<Circuit, ProtocolError> {
        let (network, input, click_patterns) = match protocol {
            ProtocolId::DoNothing => {
                let mut bld = NetworkBuilder::new(&["b_i"])?;
                bld.loss("b_i", noise.alice_epsilon, "sa", EnvKind::Source)?;
                bld.split("b_i", params.tau, "a", "b")?;
                bld.loss("b", noise.eta, "e", EnvKind::Channel)?;
                let network = bld.finish(&["a", "b"], &[])?;
                let input = make_state(input_labels(&["b_i"]), &[("b_i", 1)])?;
                (network, input, Vec::new())
            }
            ProtocolId::NlaBob | ProtocolId::NlaHalfway => {
                // The midpoint scheme splits the fibre loss into two
                // sqrt(eta) legs meeting at the central splitter.
                let leg = if protocol == ProtocolId::NlaHalfway {
                    noise.eta.sqrt()
                } else {
                    noise.eta
                };
                let mut bld = NetworkBuilder::new(&["b_i", "d_i"])?;
                bld.loss("b_i", noise.alice_epsilon, "sa", EnvKind::Source)?;
                bld.split("b_i", params.tau, "a", "ch")?;
                bld.loss("ch", leg, "e", EnvKind::Channel)?;
                bld.loss("d_i", noise.epsilon, "s", EnvKind::Source)?;
                bld.split("d_i", params.t, "d", "r")?;
                if protocol == ProtocolId::NlaHalfway {
                    bld.loss("r", leg, "f", EnvKind::Channel)?;
                }
                bld.beam_splitter("ch", "r", 0.5, "b", "c")?;
                bld.loss("b", noise.delta, "bl", EnvKind::Detector)?;
                bld.loss("c", noise.delta, "cl", EnvKind::Detector)?;
                let network = bld.finish(&["a", "d"], &["b", "c"])?;
                let input =
                    make_state(input_labels(&["b_i", "d_i"]), &[("b_i", 1), ("d_i", 1)])?;
                let patterns = vec![
                    ClickPattern::new(&[("b", 0), ("c", 1)]),
                    ClickPattern::new(&[("b", 1), ("c", 0)]),
                ];
                (network, input, patterns)
            }
            ProtocolId::Purification => {
                if noise.alice_epsilon < 1.0 {
                    return Err(ProtocolError::UnsupportedAliceSource);
                }
                let inputs = ["b_i", "d_i", "k_i", "h_i", "g_i", "m_i", "n_i", "p_i"];
                let mut bld = NetworkBuilder::new(&inputs)?;
                let eps = noise.epsilon;
                bld.loss("k_i", eps, "ks", EnvKind::Source)?;
                bld.loss("g_i", eps, "gs", EnvKind::Source)?;
                bld.loss("m_i", eps, "ms", EnvKind::Source)?;
                bld.loss("p_i", eps, "ps", EnvKind::Source)?;
                bld.loss("n_i", eps * eps, "ns", EnvKind::Source)?;

                let h = 0.5_f64.sqrt();
                let tq = params.tau.sqrt();
                let tr = (1.0 - params.tau).sqrt();
                let sq = params.t.sqrt();
                let sr = (1.0 - params.t).sqrt();
                let eq = noise.eta.sqrt();
                let er = (1.0 - noise.eta).sqrt();
                bld.substitute(
                    "b_i",
                    &[
                        ("b", tr * h),
                        ("k", tr * h),
                        ("a", -tq * eq * h),
                        ("p", -tq * eq * h),
                        ("f", -tq * er),
                    ],
                )?;
                bld.substitute(
                    "d_i",
                    &[
                        ("d", sr * h),
                        ("g", -sr * h),
                        ("c", sq * eq * h),
                        ("m", -sq * eq * h),
                        ("e", -sq * er),
                    ],
                )?;
                bld.substitute("k_i", &[("b", -h), ("k", h)])?;
                bld.substitute("g_i", &[("d", h), ("g", h)])?;
                bld.substitute("m_i", &[("c", h), ("m", h)])?;
                bld.substitute("p_i", &[("a", -h), ("p", h)])?;
                bld.substitute("h_i", &[("h", 1.0)])?;
                bld.substitute("n_i", &[("n", 1.0)])?;
                bld.mark_environment("e", EnvKind::Channel)?;
                bld.mark_environment("f", EnvKind::Channel)?;
                let detectors = ["a", "b", "c", "d", "g", "k", "m", "p"];
                for mode in detectors {
                    bld.loss(mode, noise.delta, &format!("{mode}l"), EnvKind::Detector)?;
                }
                let network = bld.finish(&["h", "n"], &detectors)?;

                let half = Complex64::new(0.5, 0.0);
                let input = OperatorState::superpose(
                    input_labels(&inputs),
                    &[
                        (half, &[("b_i", 1), ("d_i", 1), ("g_i", 1), ("m_i", 1)][..]),
                        (
                            half,
                            &[("b_i", 1), ("d_i", 1), ("g_i", 1), ("n_i", 1), ("p_i", 1)][..],
                        ),
                        (
                            half,
                            &[("b_i", 1), ("d_i", 1), ("k_i", 1), ("h_i", 1), ("m_i", 1)][..],
                        ),
                        (
                            half,
                            &[
                                ("b_i", 1),
                                ("d_i", 1),
                                ("k_i", 1),
                                ("h_i", 1),
                                ("n_i", 1),
                                ("p_i", 1),
                            ][..],
                        ),
                    ],
                )?;

                // One photon in exactly one detector of each corner pair.
                let corners = [("b", "k"), ("d", "g"), ("c", "m"), ("a", "p")];
                let mut patterns = Vec::with_capacity(16);
                for mask in 0..16u32 {
                    let mut counts = Vec::with_capacity(8);
                    for (bit, (first, second)) in corners.iter().enumerate() {
                        let second_fires = mask & (1 << bit) != 0;
                        counts.push((*first, u8::from(!second_fires)));
                        counts.push((*second, u8::from(second_fires)));
                    }
                    patterns.push(ClickPattern::new(&counts));
                }
                (network, input, patterns)
            }
        };
        Ok(Circuit {
            protocol,
            params,
            noise,
            network,
            input,
            click_patterns,
        })
    }

    fn modes_with(&self, pred: impl Fn(Role) -> bool) -> Vec<String> {
        self.network
            .output_modes()
            .iter()
            .filter(|m| pred(m.role))
            .map(|m| m.name.clone())
            .collect()
    }

    pub fn kept_modes(&self) -> Vec<String> {
        self.modes_with(|r| r == Role::Kept)
    }

    pub fn detected_modes(&self) -> Vec<String> {
        self.modes_with(|r| r == Role::Detected)
    }

    pub fn environment_modes(&self) -> Vec<String> {
        self.modes_with(|r| matches!(r, Role::Environment(_)))
    }

    /// Expand the input through the network, condition on each click
    /// pattern, and split the heralded state by environment occupancy.
    ///
    /// Click families must be uniform: every pattern must occur with
    /// the same probability. The reported residuals belong to the
    /// first pattern; the others differ only by correctable signs.
    pub fn evaluate(&self) -> Result<ConditionedOutcome, ProtocolError> {
        let expanded = self.input.apply_network(&self.network)?;
        let env_names = self.environment_modes();

        let default_pattern = ClickPattern(BTreeMap::new());
        let patterns: Vec<&ClickPattern> = if self.click_patterns.is_empty() {
            vec![&default_pattern]
        } else {
            self.click_patterns.iter().collect()
        };

        let mut first: Option<(OperatorState, OperatorState, f64, f64)> = None;
        let mut click_probs = Vec::with_capacity(patterns.len());
        for pattern in patterns {
            let (residual, p_click) = expanded.project(&pattern.as_pairs())?;
            click_probs.push(p_click);
            if first.is_none() {
                let env_zero: Vec<(&str, u8)> =
                    env_names.iter().map(|n| (n.as_str(), 0)).collect();
                let (psi_f, p_f) = residual.project(&env_zero)?;
                let env_idx: Vec<usize> = env_names
                    .iter()
                    .map(|n| residual.mode_index(n).expect("environment mode"))
                    .collect();
                let psi_0 = residual.filter_terms(|e| env_idx.iter().any(|&i| e[i] != 0));
                let p_0 = psi_0.inner_norm_squared();
                first = Some((psi_f, psi_0, p_f, p_0));
            }
        }
        let (psi_f, psi_0, p_f, p_0) = first.expect("at least one pattern");
        if click_probs
            .iter()
            .any(|&p| (p - click_probs[0]).abs() > CLICK_UNIFORMITY_TOL)
        {
            return Err(ProtocolError::NonUniformClicks(self.protocol));
        }

        let click_multiplicity = self.click_patterns.len().max(1);
        let p_success = click_multiplicity as f64 * (p_f + p_0);
        let x = if p_f + p_0 <= X_FLOOR {
            f64::NAN
        } else if p_0 <= X_FLOOR {
            f64::INFINITY
        } else {
            p_f / p_0
        };
        Ok(ConditionedOutcome {
            p_success,
            p_f,
            p_0,
            x,
            psi_f_normalized: psi_f.normalized(),
            psi_0_normalized: psi_0.normalized(),
            psi_f,
            psi_0,
            click_multiplicity,
        })
    }
}

/// Entangling-splitter setting that equalizes the two branch
/// amplitudes of the heralded loss-free state.
pub fn max_entanglement_tau(protocol: ProtocolId, t: f64, noise: &NoiseParams) -> f64 {
    match protocol {
        ProtocolId::DoNothing => noise.eta / (1.0 + noise.eta),
        ProtocolId::NlaBob => {
            let denom = 1.0 - t + t * noise.eta;
            if denom <= 0.0 {
                0.0
            } else {
                t * noise.eta / denom
            }
        }
        ProtocolId::NlaHalfway => t,
        ProtocolId::Purification => {
            let e2 = noise.epsilon * noise.epsilon;
            let denom = 1.0 - t + e2 * t;
            if denom <= 0.0 {
                0.0
            } else {
                e2 * t / denom
            }
        }
    }
}

/// Resource-splitter setting that makes the amplified scheme deliver
/// the requested purity ratio.
pub fn t_from_target_x(
    protocol: ProtocolId,
    x: f64,
    noise: &NoiseParams,
) -> Result<f64, ProtocolError> {
    if !matches!(protocol, ProtocolId::NlaBob | ProtocolId::NlaHalfway) {
        return Err(ProtocolError::NoPurityInversion(protocol));
    }
    if let Err(FormulaError::InfeasibleX { x, x_max }) = check_feasible_x(x, noise.epsilon) {
        return Err(ProtocolError::InfeasibleTarget { x, x_max });
    }
    let (eta, delta, eps) = (noise.eta, noise.delta, noise.epsilon);
    Ok(match protocol {
        ProtocolId::NlaBob => {
            let a = 1.0 + eta - 2.0 * eta * delta;
            x * (eps * a + eta * (1.0 - eps)) / (2.0 * eta * eps + x * eps * a)
        }
        ProtocolId::NlaHalfway => {
            let b = 1.0 - delta * eta.sqrt();
            x * (eps * b + 0.5 * (1.0 - eps)) / (eps * (1.0 + x * b))
        }
        _ => unreachable!(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulas::{
        p_nla_bob_detector, purity_from_x, x_nla_bob_of_t, x_nla_halfway_of_t,
    };
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn eval_at_max_ent(protocol: ProtocolId, t: f64, noise: NoiseParams) -> ConditionedOutcome {
        let tau = max_entanglement_tau(protocol, t, &noise);
        Circuit::build(protocol, ProtocolParams::new(tau, t).unwrap(), noise)
            .unwrap()
            .evaluate()
            .unwrap()
    }

    #[test]
    fn protocol_ids_round_trip_and_order() {
        for id in ProtocolId::ALL {
            assert_eq!(id.as_str().parse::<ProtocolId>().unwrap(), id);
        }
        assert!(matches!(
            "teleport".parse::<ProtocolId>(),
            Err(ProtocolError::UnknownProtocol(_))
        ));
        assert!(ProtocolId::DoNothing < ProtocolId::Purification);
    }

    #[test]
    fn bob_end_rows_match_published_relations() {
        let (tau, t, eta) = (0.3, 0.7, 0.6_f64);
        let circuit = Circuit::build(
            ProtocolId::NlaBob,
            ProtocolParams::new(tau, t).unwrap(),
            NoiseParams::perfect(eta).unwrap(),
        )
        .unwrap();
        let h = 0.5_f64.sqrt();
        let coef = |i: &str, o: &str| circuit.network.coefficient(i, o).unwrap().re;
        assert_abs_diff_eq!(coef("b_i", "a"), tau.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(
            coef("b_i", "e"),
            (1.0 - tau).sqrt() * (1.0 - eta).sqrt(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            coef("b_i", "c"),
            (1.0 - tau).sqrt() * eta.sqrt() * h,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            coef("b_i", "b"),
            (1.0 - tau).sqrt() * eta.sqrt() * h,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(coef("d_i", "d"), t.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(coef("d_i", "b"), -(1.0 - t).sqrt() * h, epsilon = 1e-15);
        assert_abs_diff_eq!(coef("d_i", "c"), (1.0 - t).sqrt() * h, epsilon = 1e-15);
        assert_abs_diff_eq!(coef("d_i", "a"), 0.0);
    }

    #[test]
    fn direct_transmission_outcome() {
        let noise = NoiseParams::perfect(0.5).unwrap();
        let outcome = eval_at_max_ent(ProtocolId::DoNothing, 0.5, noise);
        assert_abs_diff_eq!(outcome.p_success, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(outcome.x, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(outcome.p_f, 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(outcome.p_0, 1.0 / 3.0, epsilon = 1e-12);
        assert_eq!(outcome.click_multiplicity, 1);
        assert_abs_diff_eq!(purity_from_x(outcome.x), 5.0 / 9.0, epsilon = 1e-12);

        // tau = eta/(1+eta) balances the kept amplitudes.
        let amps: Vec<f64> = outcome.psi_f.terms().map(|(_, c)| c.norm()).collect();
        assert_eq!(amps.len(), 2);
        assert_abs_diff_eq!(amps[0], amps[1], epsilon = 1e-12);
    }

    #[test]
    fn bob_end_outcome_matches_closed_forms() {
        let noise = NoiseParams::perfect(0.5).unwrap();
        assert_abs_diff_eq!(
            max_entanglement_tau(ProtocolId::NlaBob, 0.5, &noise),
            1.0 / 3.0,
            epsilon = 1e-15
        );
        let outcome = eval_at_max_ent(ProtocolId::NlaBob, 0.5, noise);
        assert_abs_diff_eq!(outcome.x, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(outcome.p_success, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(outcome.p_f, 1.0 / 6.0, epsilon = 1e-13);
        assert_abs_diff_eq!(outcome.p_0, 1.0 / 12.0, epsilon = 1e-13);
        assert_eq!(outcome.click_multiplicity, 2);
        assert_abs_diff_eq!(
            outcome.x,
            x_nla_bob_of_t(0.5, 0.5, 1.0, 1.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn halfway_outcome_matches_closed_forms() {
        let noise = NoiseParams::perfect(0.25).unwrap();
        let t = t_from_target_x(ProtocolId::NlaHalfway, 2.0, &noise).unwrap();
        assert_abs_diff_eq!(t, 0.5, epsilon = 1e-15);
        let outcome = eval_at_max_ent(ProtocolId::NlaHalfway, t, noise);
        assert_abs_diff_eq!(outcome.x, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(outcome.p_success, 0.375, epsilon = 1e-12);
        assert_abs_diff_eq!(outcome.p_f, 0.125, epsilon = 1e-13);
        assert_abs_diff_eq!(outcome.p_0, 0.0625, epsilon = 1e-13);
        assert_abs_diff_eq!(
            outcome.x,
            x_nla_halfway_of_t(t, 0.25, 1.0, 1.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn noisy_outcomes_match_boxed_formulas() {
        // Detector noise only.
        let noise = NoiseParams::new(0.5, 0.8, 1.0).unwrap();
        let outcome = eval_at_max_ent(ProtocolId::NlaBob, 0.5, noise);
        assert_relative_eq!(outcome.x, 10.0 / 7.0, max_relative = 1e-12);
        assert_relative_eq!(outcome.p_success, 34.0 / 75.0, max_relative = 1e-12);
        assert_relative_eq!(
            outcome.p_success,
            p_nla_bob_detector(outcome.x, 0.5, 0.8),
            max_relative = 1e-12
        );

        // Full noise model, both placements.
        let noise = NoiseParams::new(0.4, 0.85, 0.92).unwrap();
        for (protocol, x_of_t) in [
            (
                ProtocolId::NlaBob,
                x_nla_bob_of_t as fn(f64, f64, f64, f64) -> f64,
            ),
            (ProtocolId::NlaHalfway, x_nla_halfway_of_t),
        ] {
            let outcome = eval_at_max_ent(protocol, 0.6, noise);
            let expected_x = x_of_t(0.6, 0.4, 0.85, 0.92);
            assert_relative_eq!(outcome.x, expected_x, max_relative = 1e-11);
        }
    }

    #[test]
    fn purification_click_is_loss_free_with_ideal_parts() {
        let noise = NoiseParams::perfect(0.8).unwrap();
        let outcome = eval_at_max_ent(ProtocolId::Purification, 0.5, noise);
        assert!(outcome.psi_0.is_empty());
        assert_eq!(outcome.p_0, 0.0);
        assert!(outcome.x.is_infinite());
        assert_abs_diff_eq!(outcome.p_success, 0.1, epsilon = 1e-12);
        assert_eq!(outcome.click_multiplicity, 16);

        // Kept-state amplitudes: one photon shared between h and n.
        let amp_10 = outcome.psi_f.amplitude(&[1, 0]).re;
        let amp_01 = outcome.psi_f.amplitude(&[0, 1]).re;
        let want = 0.125 * 0.5_f64.sqrt() * 0.8_f64.sqrt() * 0.5_f64.sqrt();
        assert_abs_diff_eq!(amp_10, want, epsilon = 1e-13);
        assert_abs_diff_eq!(amp_01, -want, epsilon = 1e-13);
    }

    #[test]
    fn purification_noisy_probabilities_match_printed_forms() {
        let (eta, delta, eps, t) = (0.7, 0.85, 0.9_f64, 0.6);
        let noise = NoiseParams::new(eta, delta, eps).unwrap();
        let tau = max_entanglement_tau(ProtocolId::Purification, t, &noise);
        assert_relative_eq!(
            tau,
            eps * eps * t / (1.0 - t + eps * eps * t),
            max_relative = 1e-15
        );
        let outcome = eval_at_max_ent(ProtocolId::Purification, t, noise);
        let d4 = delta.powi(4);
        let e2 = eps * eps;
        let p_f = d4 * e2 * eta * (tau * (1.0 - t) + e2 * t * (1.0 - tau)) / 64.0;
        let p_0 = d4 * e2 * eta * t * (1.0 - eps) * (1.0 - tau) * (1.0 + eps) / 64.0;
        assert_relative_eq!(outcome.p_f, p_f, max_relative = 1e-12);
        assert_relative_eq!(outcome.p_0, p_0, max_relative = 1e-12);
        assert_relative_eq!(outcome.x, 2.0 * e2 / (1.0 - e2), max_relative = 1e-12);
        assert_relative_eq!(
            outcome.p_success,
            16.0 * (p_f + p_0),
            max_relative = 1e-12
        );
    }

    #[test]
    fn click_branches_agree_up_to_sign() {
        let noise = NoiseParams::new(0.6, 0.9, 0.95).unwrap();
        let tau = max_entanglement_tau(ProtocolId::NlaBob, 0.45, &noise);
        let circuit = Circuit::build(
            ProtocolId::NlaBob,
            ProtocolParams::new(tau, 0.45).unwrap(),
            noise,
        )
        .unwrap();
        let expanded = circuit.input.apply_network(&circuit.network).unwrap();
        let env = circuit.environment_modes();
        let env_zero: Vec<(&str, u8)> = env.iter().map(|n| (n.as_str(), 0)).collect();
        let mut branches = Vec::new();
        for pattern in &circuit.click_patterns {
            let (residual, p) = expanded.project(&pattern.as_pairs()).unwrap();
            let (psi_f, p_f) = residual.project(&env_zero).unwrap();
            branches.push((psi_f, p, p_f));
        }
        let (first, p1, pf1) = &branches[0];
        let (second, p2, pf2) = &branches[1];
        assert_abs_diff_eq!(p1, p2, epsilon = 1e-12);
        assert_abs_diff_eq!(pf1, pf2, epsilon = 1e-12);
        // The heralds agree up to correctable sign flips: every branch
        // amplitude matches in magnitude and is real.
        for (exps, amp) in first.terms() {
            assert_abs_diff_eq!(
                amp.norm(),
                second.amplitude(exps).norm(),
                epsilon = 1e-12
            );
            assert_abs_diff_eq!(amp.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn non_uniform_click_families_are_rejected() {
        let noise = NoiseParams::perfect(0.5).unwrap();
        let mut circuit = Circuit::build(
            ProtocolId::NlaBob,
            ProtocolParams::new(1.0 / 3.0, 0.5).unwrap(),
            noise,
        )
        .unwrap();
        circuit.click_patterns = vec![
            ClickPattern::new(&[("b", 1), ("c", 0)]),
            ClickPattern::new(&[("b", 1), ("c", 1)]),
        ];
        assert!(matches!(
            circuit.evaluate(),
            Err(ProtocolError::NonUniformClicks(ProtocolId::NlaBob))
        ));
    }

    #[test]
    fn alice_source_extension_scales_the_loss_free_part() {
        let base = NoiseParams::perfect(0.5).unwrap();
        let degraded = base.with_alice_epsilon(0.9).unwrap();
        let reference = eval_at_max_ent(ProtocolId::DoNothing, 0.5, base);
        let scaled = eval_at_max_ent(ProtocolId::DoNothing, 0.5, degraded);
        assert_relative_eq!(scaled.p_f, 0.9 * reference.p_f, max_relative = 1e-12);
        assert_abs_diff_eq!(scaled.p_success, 1.0, epsilon = 1e-12);

        let reference = eval_at_max_ent(ProtocolId::NlaBob, 0.5, base);
        let scaled = eval_at_max_ent(ProtocolId::NlaBob, 0.5, degraded);
        assert_relative_eq!(scaled.p_f, 0.9 * reference.p_f, max_relative = 1e-12);
        assert_abs_diff_eq!(
            scaled.p_success,
            2.0 * (scaled.p_f + scaled.p_0),
            epsilon = 1e-14
        );

        assert!(matches!(
            Circuit::build(
                ProtocolId::Purification,
                ProtocolParams::new(0.5, 0.5).unwrap(),
                degraded,
            ),
            Err(ProtocolError::UnsupportedAliceSource)
        ));
    }

    #[test]
    fn tuning_relations_match_worked_examples() {
        let noise = NoiseParams::perfect(0.5).unwrap();
        assert_abs_diff_eq!(
            max_entanglement_tau(ProtocolId::DoNothing, 0.0, &noise),
            1.0 / 3.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            max_entanglement_tau(ProtocolId::NlaHalfway, 0.7, &noise),
            0.7
        );
        let noisy = NoiseParams::new(0.5, 1.0, 0.9).unwrap();
        assert_relative_eq!(
            max_entanglement_tau(ProtocolId::Purification, 0.5, &noisy),
            0.405 / 0.905,
            max_relative = 1e-12
        );

        assert_abs_diff_eq!(
            t_from_target_x(ProtocolId::NlaBob, 2.0, &noise).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        assert!(matches!(
            t_from_target_x(ProtocolId::NlaBob, 18.0, &noisy),
            Err(ProtocolError::InfeasibleTarget { .. })
        ));
        assert!(matches!(
            t_from_target_x(ProtocolId::DoNothing, 1.0, &noise),
            Err(ProtocolError::NoPurityInversion(_))
        ));
        assert!(matches!(
            t_from_target_x(ProtocolId::Purification, 1.0, &noise),
            Err(ProtocolError::NoPurityInversion(_))
        ));
        assert!(matches!(
            t_from_target_x(ProtocolId::NlaHalfway, f64::INFINITY, &noise),
            Err(ProtocolError::InfeasibleTarget { .. })
        ));

        // Inverting and re-simulating reproduces the target ratio.
        let noise = NoiseParams::new(0.4, 0.9, 0.95).unwrap();
        for protocol in [ProtocolId::NlaBob, ProtocolId::NlaHalfway] {
            let t = t_from_target_x(protocol, 3.0, &noise).unwrap();
            let outcome = eval_at_max_ent(protocol, t, noise);
            assert_abs_diff_eq!(outcome.x, 3.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn max_entanglement_tau_balances_kept_amplitudes() {
        let noise = NoiseParams::new(0.35, 0.9, 0.88).unwrap();
        for protocol in ProtocolId::ALL {
            if protocol == ProtocolId::Purification && noise.alice_epsilon < 1.0 {
                continue;
            }
            let outcome = eval_at_max_ent(protocol, 0.4, noise);
            let amps: Vec<f64> = outcome.psi_f.terms().map(|(_, c)| c.norm()).collect();
            assert_eq!(amps.len(), 2, "{protocol} kept-state term count");
            assert_abs_diff_eq!(amps[0], amps[1], epsilon = 1e-12);
        }
    }

    #[test]
    fn loss_free_probability_grows_with_each_efficiency() {
        let params = ProtocolParams::new(0.3, 0.4).unwrap();
        let eval = |eta: f64, delta: f64, eps: f64| {
            Circuit::build(
                ProtocolId::NlaBob,
                params,
                NoiseParams::new(eta, delta, eps).unwrap(),
            )
            .unwrap()
            .evaluate()
            .unwrap()
            .p_f
        };
        let grid = [0.2, 0.5, 0.8];
        for window in grid.windows(2) {
            assert!(eval(window[1], 0.9, 0.9) >= eval(window[0], 0.9, 0.9));
            assert!(eval(0.5, window[1], 0.9) >= eval(0.5, window[0], 0.9));
            assert!(eval(0.5, 0.9, window[1]) >= eval(0.5, 0.9, window[0]));
        }
    }
}
