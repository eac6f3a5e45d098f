//! Protocol selection across distance and source quality, and the
//! success-probability versus purity tradeoff behind the region maps.
//!
//! All schemes are compared at the same delivered state quality: the
//! purity ratio the purification scheme produces at the given source
//! efficiency. Amplified schemes are tuned to that target; direct
//! transmission wins outright when it already exceeds it.

use std::collections::BTreeMap;

use crate::formulas::{
    eta_from_distance, p_nla_bob, p_nla_halfway, p_purification, x_do_nothing, x_max,
    x_purification,
};
use crate::protocols::ProtocolId;

/// Precedence on exact probability ties: higher delivered purity wins.
pub const TIE_BREAK_ORDER: [ProtocolId; 4] = [
    ProtocolId::Purification,
    ProtocolId::NlaHalfway,
    ProtocolId::NlaBob,
    ProtocolId::DoNothing,
];

/// Evenly spaced values covering both endpoints.
pub fn linspace(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n)
            .map(|i| start + (end - start) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// One cell of the protocol-selection map.
#[derive(Debug, Clone)]
pub struct ComparisonPoint {
    pub d_km: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub eta: f64,
    pub x_target: f64,
    pub p_by_protocol: BTreeMap<ProtocolId, f64>,
    pub winner: ProtocolId,
}

/// Best scheme at one distance, detector quality, and source quality.
pub fn best_protocol(d_km: f64, delta: f64, epsilon: f64) -> ComparisonPoint {
    let eta = eta_from_distance(d_km);
    let x_target = x_purification(epsilon);

    let mut p_by_protocol = BTreeMap::new();
    p_by_protocol.insert(ProtocolId::DoNothing, 1.0);
    p_by_protocol.insert(
        ProtocolId::NlaBob,
        p_nla_bob(x_target, eta, delta, epsilon).unwrap_or(0.0),
    );
    p_by_protocol.insert(
        ProtocolId::NlaHalfway,
        p_nla_halfway(x_target, eta, delta, epsilon).unwrap_or(0.0),
    );
    let (p_purif, _) = p_purification(eta, delta, epsilon);
    p_by_protocol.insert(ProtocolId::Purification, p_purif);

    // The target always sits strictly below the reachable bound, so the
    // amplified entries above can only be excluded at degenerate epsilon.
    debug_assert!(!(0.0..1.0).contains(&epsilon) || epsilon == 0.0 || x_target < x_max(epsilon));

    // Direct transmission already beats the target quality when the
    // channel outperforms the source; otherwise take the most probable
    // scheme, preferring higher purity on ties.
    let winner = if epsilon < eta {
        ProtocolId::DoNothing
    } else {
        let mut best = ProtocolId::Purification;
        for candidate in [ProtocolId::NlaHalfway, ProtocolId::NlaBob] {
            if p_by_protocol[&candidate] > p_by_protocol[&best] {
                best = candidate;
            }
        }
        best
    };

    ComparisonPoint {
        d_km,
        delta,
        epsilon,
        eta,
        x_target,
        p_by_protocol,
        winner,
    }
}

/// Winner map over a rectangle of distances and source qualities,
/// row-major with distance as the outer axis.
pub fn region_map(
    d_start: f64,
    d_end: f64,
    epsilon_start: f64,
    epsilon_end: f64,
    delta: f64,
    n_distance: usize,
    n_epsilon: usize,
) -> Vec<ComparisonPoint> {
    let epsilons = linspace(epsilon_start, epsilon_end, n_epsilon);
    let mut cells = Vec::with_capacity(n_distance * n_epsilon);
    for d_km in linspace(d_start, d_end, n_distance) {
        for &epsilon in &epsilons {
            cells.push(best_protocol(d_km, delta, epsilon));
        }
    }
    cells
}

/// One sample of the success probability versus quality tradeoff.
#[derive(Debug, Clone)]
pub struct TradeoffPoint {
    pub protocol: ProtocolId,
    pub x: f64,
    pub p_success: f64,
    pub feasible: bool,
    pub dominated: bool,
}

/// Success probability of one scheme across delivered-purity targets.
///
/// Unreachable targets are reported infeasible with zero probability;
/// targets below what direct transmission gives for free are flagged
/// dominated.
pub fn tradeoff_curve(
    protocol: ProtocolId,
    eta: f64,
    delta: f64,
    epsilon: f64,
    xs: &[f64],
) -> Vec<TradeoffPoint> {
    let x_free = x_do_nothing(eta);
    xs.iter()
        .map(|&x| {
            let (feasible, p_success) = match protocol {
                ProtocolId::DoNothing => {
                    if x <= x_free {
                        (true, 1.0)
                    } else {
                        (false, 0.0)
                    }
                }
                ProtocolId::Purification => {
                    let (p, x_native) = p_purification(eta, delta, epsilon);
                    if x <= x_native {
                        (true, p)
                    } else {
                        (false, 0.0)
                    }
                }
                ProtocolId::NlaBob => match p_nla_bob(x, eta, delta, epsilon) {
                    Ok(p) => (true, p),
                    Err(_) => (false, 0.0),
                },
                ProtocolId::NlaHalfway => match p_nla_halfway(x, eta, delta, epsilon) {
                    Ok(p) => (true, p),
                    Err(_) => (false, 0.0),
                },
            };
            TradeoffPoint {
                protocol,
                x,
                p_success,
                feasible,
                dominated: x < x_free,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::{NoiseParams, ProtocolParams};
    use crate::protocols::{
        max_entanglement_tau, t_from_target_x, Circuit, ProtocolId,
    };
    use approx::assert_abs_diff_eq;

    #[test]
    fn linspace_covers_endpoints() {
        assert_eq!(linspace(0.0, 1.0, 0), Vec::<f64>::new());
        assert_eq!(linspace(3.5, 9.0, 1), vec![3.5]);
        assert_eq!(linspace(0.0, 1.0, 5), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(linspace(2.0, -2.0, 3), vec![2.0, 0.0, -2.0]);
    }

    #[test]
    fn worked_selection_examples() {
        assert_eq!(
            best_protocol(25.0, 0.9, 0.99).winner,
            ProtocolId::Purification
        );
        // eta(15.25 km) is just above 0.4999, so a weak source loses
        // to the channel outright.
        assert_eq!(
            best_protocol(15.25, 0.9, 0.3).winner,
            ProtocolId::DoNothing
        );
        assert_eq!(
            best_protocol(150.0, 0.9, 0.99).winner,
            ProtocolId::NlaHalfway
        );
    }

    #[test]
    fn comparison_point_is_complete() {
        let point = best_protocol(60.0, 0.9, 0.95);
        assert_eq!(point.p_by_protocol.len(), 4);
        assert_abs_diff_eq!(point.eta, eta_from_distance(60.0), epsilon = 1e-15);
        assert_abs_diff_eq!(point.x_target, x_purification(0.95), epsilon = 1e-15);
        assert!(point.epsilon >= point.eta);
        let p_winner = point.p_by_protocol[&point.winner];
        for id in [
            ProtocolId::Purification,
            ProtocolId::NlaHalfway,
            ProtocolId::NlaBob,
        ] {
            assert!(p_winner >= point.p_by_protocol[&id]);
        }
    }

    #[test]
    fn winner_is_scale_invariant() {
        let point = best_protocol(80.0, 0.9, 0.97);
        let mut best = ProtocolId::Purification;
        for candidate in [ProtocolId::NlaHalfway, ProtocolId::NlaBob] {
            if 7.3 * point.p_by_protocol[&candidate] > 7.3 * point.p_by_protocol[&best] {
                best = candidate;
            }
        }
        assert_eq!(best, point.winner);
    }

    #[test]
    fn region_map_is_row_major() {
        let cells = region_map(0.0, 100.0, 0.6, 1.0, 0.9, 2, 3);
        assert_eq!(cells.len(), 6);
        let expected = [
            (0.0, 0.6),
            (0.0, 0.8),
            (0.0, 1.0),
            (100.0, 0.6),
            (100.0, 0.8),
            (100.0, 1.0),
        ];
        for (cell, (d, e)) in cells.iter().zip(expected) {
            assert_abs_diff_eq!(cell.d_km, d);
            assert_abs_diff_eq!(cell.epsilon, e);
        }
        let single = region_map(25.0, 25.0, 0.99, 0.99, 0.9, 1, 1);
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].winner, best_protocol(25.0, 0.9, 0.99).winner);
    }

    #[test]
    fn high_quality_column_crosses_to_halfway() {
        // At zero distance the channel beats the source outright; then
        // purification wins until half-way amplification overtakes it,
        // with no further switches out to 200 km.
        let mut winners: Vec<ProtocolId> = (0..=200)
            .map(|d| best_protocol(d as f64, 0.9, 0.99).winner)
            .collect();
        winners.dedup();
        assert_eq!(
            winners,
            vec![
                ProtocolId::DoNothing,
                ProtocolId::Purification,
                ProtocolId::NlaHalfway,
            ]
        );
    }

    #[test]
    fn tradeoff_flags_match_their_definitions() {
        let xs = [1.0, 1.9999, 2.0, 3.0];
        let curve = tradeoff_curve(ProtocolId::NlaBob, 0.5, 1.0, 1.0, &xs);
        let dominated: Vec<bool> = curve.iter().map(|p| p.dominated).collect();
        assert_eq!(dominated, vec![true, true, false, false]);
        assert!(curve.iter().all(|p| p.feasible));

        let near_bound = [17.9, 18.0, 20.0];
        let curve = tradeoff_curve(ProtocolId::NlaBob, 0.5, 1.0, 0.9, &near_bound);
        assert!(curve[0].feasible && curve[0].p_success > 0.0);
        assert!(!curve[1].feasible && curve[1].p_success == 0.0);
        assert!(!curve[2].feasible);

        let curve = tradeoff_curve(ProtocolId::DoNothing, 0.5, 1.0, 1.0, &[1.5, 2.0, 2.5]);
        assert!(curve[0].feasible && curve[0].p_success == 1.0);
        assert!(curve[1].feasible && !curve[1].dominated);
        assert!(!curve[2].feasible && curve[2].p_success == 0.0);

        let curve = tradeoff_curve(ProtocolId::Purification, 0.8, 1.0, 1.0, &[5.0, 1e9]);
        assert!(curve.iter().all(|p| p.feasible));
        assert_abs_diff_eq!(curve[0].p_success, 0.1, epsilon = 1e-12);
    }

    #[test]
    fn winners_agree_with_brute_force() {
        let delta = 0.9;
        for d_km in [10.0, 40.0, 80.0, 120.0, 160.0] {
            for epsilon in [0.9, 0.95, 0.99, 0.999] {
                let point = best_protocol(d_km, delta, epsilon);
                let noise = NoiseParams::new(point.eta, delta, epsilon).unwrap();

                let mut simulated = BTreeMap::new();
                simulated.insert(ProtocolId::DoNothing, 1.0);
                for protocol in [ProtocolId::NlaBob, ProtocolId::NlaHalfway] {
                    let t = t_from_target_x(protocol, point.x_target, &noise).unwrap();
                    let tau = max_entanglement_tau(protocol, t, &noise);
                    let outcome =
                        Circuit::build(protocol, ProtocolParams::new(tau, t).unwrap(), noise)
                            .unwrap()
                            .evaluate()
                            .unwrap();
                    simulated.insert(protocol, outcome.p_success);
                }
                let t = 1.0 / (1.0 + epsilon);
                let tau = max_entanglement_tau(ProtocolId::Purification, t, &noise);
                let outcome = Circuit::build(
                    ProtocolId::Purification,
                    ProtocolParams::new(tau, t).unwrap(),
                    noise,
                )
                .unwrap()
                .evaluate()
                .unwrap();
                simulated.insert(ProtocolId::Purification, outcome.p_success);

                for (id, p) in &simulated {
                    assert_abs_diff_eq!(*p, point.p_by_protocol[id], epsilon = 1e-10);
                }
                let mut best = ProtocolId::Purification;
                if point.epsilon >= point.eta {
                    for candidate in [ProtocolId::NlaHalfway, ProtocolId::NlaBob] {
                        if simulated[&candidate] > simulated[&best] {
                            best = candidate;
                        }
                    }
                } else {
                    best = ProtocolId::DoNothing;
                }
                assert_eq!(best, point.winner, "at d={d_km}, eps={epsilon}");
            }
        }
    }
}
