//! Circuit elements for the simulated schemes: entangling splitters,
//! channel loss, imperfect sources and imperfect detectors, plus a
//! builder that composes them into one LinearNetwork per protocol.
//!
//! Loss of any kind is a beam splitter leaking into a dedicated
//! environment mode; the environment tag records whether the leak came
//! from the fibre, a source, or a detector.

use num_complex::Complex64;
use thiserror::Error;

use crate::fock::{EnvKind, FockError, LinearNetwork, ModeLabel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpticsError {
    #[error("parameter `{name}` = {value} is outside [0, 1]")]
    ParamOutOfRange { name: &'static str, value: f64 },
    #[error("unknown mode `{0}`")]
    UnknownMode(String),
    #[error("mode `{0}` already exists")]
    DuplicateMode(String),
    #[error("mode `{0}` has no role assignment")]
    UnassignedMode(String),
    #[error(transparent)]
    Network(#[from] FockError),
}

fn check_unit_interval(name: &'static str, value: f64) -> Result<(), OpticsError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(OpticsError::ParamOutOfRange { name, value })
    }
}

/// Loss parameters shared by every protocol circuit.
///
/// `alice_epsilon` is the efficiency of Alice's own pair source. The
/// baseline schemes assume it is perfect, so it defaults to 1 and is
/// only changed through [`NoiseParams::with_alice_epsilon`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    pub eta: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub alice_epsilon: f64,
}

impl NoiseParams {
    pub fn new(eta: f64, delta: f64, epsilon: f64) -> Result<Self, OpticsError> {
        check_unit_interval("eta", eta)?;
        check_unit_interval("delta", delta)?;
        check_unit_interval("epsilon", epsilon)?;
        Ok(NoiseParams {
            eta,
            delta,
            epsilon,
            alice_epsilon: 1.0,
        })
    }

    /// Channel loss only: ideal detectors and sources.
    pub fn perfect(eta: f64) -> Result<Self, OpticsError> {
        Self::new(eta, 1.0, 1.0)
    }

    pub fn with_alice_epsilon(mut self, alice_epsilon: f64) -> Result<Self, OpticsError> {
        check_unit_interval("alice_epsilon", alice_epsilon)?;
        self.alice_epsilon = alice_epsilon;
        Ok(self)
    }
}

/// Tunable splitter transmissivities: `tau` on Alice's entangling
/// splitter, `t` on the resource-state splitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    pub tau: f64,
    pub t: f64,
}

impl ProtocolParams {
    pub fn new(tau: f64, t: f64) -> Result<Self, OpticsError> {
        check_unit_interval("tau", tau)?;
        check_unit_interval("t", t)?;
        Ok(ProtocolParams { tau, t })
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Entangling splitter: one photon in, amplitude sqrt(tau) on the kept
/// mode and sqrt(1-tau) on the sent mode.
pub fn entangler(tau: f64) -> Result<LinearNetwork, OpticsError> {
    check_unit_interval("tau", tau)?;
    Ok(LinearNetwork::new(
        vec![ModeLabel::auxiliary("in")],
        vec![ModeLabel::kept("kept"), ModeLabel::auxiliary("sent")],
        vec![vec![c(tau.sqrt()), c((1.0 - tau).sqrt())]],
    )?)
}

fn loss_fragment(transmissivity: f64, kind: EnvKind) -> Result<LinearNetwork, OpticsError> {
    Ok(LinearNetwork::new(
        vec![ModeLabel::auxiliary("in")],
        vec![
            ModeLabel::auxiliary("out"),
            ModeLabel::environment("env", kind),
        ],
        vec![vec![c(transmissivity.sqrt()), c((1.0 - transmissivity).sqrt())]],
    )?)
}

/// Fibre loss: transmit with amplitude sqrt(transmissivity), leak the
/// rest into a channel-tagged environment mode.
pub fn loss_channel(transmissivity: f64) -> Result<LinearNetwork, OpticsError> {
    check_unit_interval("transmissivity", transmissivity)?;
    loss_fragment(transmissivity, EnvKind::Channel)
}

/// Source inefficiency: same structure as channel loss, environment
/// tagged as source loss.
pub fn noisy_source(epsilon: f64) -> Result<LinearNetwork, OpticsError> {
    check_unit_interval("epsilon", epsilon)?;
    loss_fragment(epsilon, EnvKind::Source)
}

/// Detector inefficiency: loss in front of an ideal detector. Returns
/// the fragment and the name of the mode the ideal detector watches.
pub fn noisy_detector(delta: f64, mode: &str) -> Result<(LinearNetwork, String), OpticsError> {
    check_unit_interval("delta", delta)?;
    let net = LinearNetwork::new(
        vec![ModeLabel::auxiliary(mode)],
        vec![
            ModeLabel::detected(mode),
            ModeLabel::environment(format!("{mode}_loss"), EnvKind::Detector),
        ],
        vec![vec![c(delta.sqrt()), c((1.0 - delta).sqrt())]],
    )?;
    Ok((net, mode.to_string()))
}

/// Incrementally composes elementary splitters and losses into one
/// network, tracking which output columns are environment modes.
///
/// Columns keep their creation order, so mode order is deterministic
/// for a fixed wiring sequence.
#[derive(Debug, Clone)]
pub struct NetworkBuilder {
    inputs: Vec<String>,
    cols: Vec<String>,
    rows: Vec<Vec<f64>>,
    env: Vec<(String, EnvKind)>,
}

impl NetworkBuilder {
    /// Starts as the identity on the given input modes.
    pub fn new(inputs: &[&str]) -> Result<Self, OpticsError> {
        for (i, name) in inputs.iter().enumerate() {
            if inputs[..i].contains(name) {
                return Err(OpticsError::DuplicateMode((*name).to_string()));
            }
        }
        let n = inputs.len();
        Ok(NetworkBuilder {
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            cols: inputs.iter().map(|s| s.to_string()).collect(),
            rows: (0..n)
                .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
            env: Vec::new(),
        })
    }

    fn col_index(&self, name: &str) -> Option<usize> {
        self.cols.iter().position(|c| c == name)
    }

    fn col_index_or_new(&mut self, name: &str) -> usize {
        match self.col_index(name) {
            Some(j) => j,
            None => {
                self.cols.push(name.to_string());
                for row in &mut self.rows {
                    row.push(0.0);
                }
                self.cols.len() - 1
            }
        }
    }

    /// Replace one current column by a weighted combination of named
    /// columns, creating columns that do not exist yet. Image columns
    /// are created even for zero weights so the mode set of a wiring
    /// does not depend on parameter edge values.
    pub fn substitute(
        &mut self,
        mode: &str,
        images: &[(&str, f64)],
    ) -> Result<&mut Self, OpticsError> {
        let col = self
            .col_index(mode)
            .ok_or_else(|| OpticsError::UnknownMode(mode.to_string()))?;
        for (i, (name, _)) in images.iter().enumerate() {
            if images[..i].iter().any(|(p, _)| p == name) {
                return Err(OpticsError::DuplicateMode((*name).to_string()));
            }
        }
        let old: Vec<f64> = self.rows.iter_mut().map(|row| row.remove(col)).collect();
        self.cols.remove(col);
        for (name, weight) in images {
            let j = self.col_index_or_new(name);
            for (row, &v) in self.rows.iter_mut().zip(&old) {
                row[j] += v * weight;
            }
        }
        Ok(self)
    }

    /// Asymmetric splitter sending `mode` to two fresh output arms.
    pub fn split(
        &mut self,
        mode: &str,
        t: f64,
        out1: &str,
        out2: &str,
    ) -> Result<&mut Self, OpticsError> {
        check_unit_interval("t", t)?;
        self.require_fresh_or(out1, mode)?;
        self.require_fresh_or(out2, mode)?;
        if out1 == out2 {
            return Err(OpticsError::DuplicateMode(out1.to_string()));
        }
        self.substitute(mode, &[(out1, t.sqrt()), (out2, (1.0 - t).sqrt())])
    }

    /// Two-input splitter onto two fresh outputs. The first input
    /// transmits with +sqrt(t); the second picks up the minus sign on
    /// its reflected arm.
    pub fn beam_splitter(
        &mut self,
        in1: &str,
        in2: &str,
        t: f64,
        out1: &str,
        out2: &str,
    ) -> Result<&mut Self, OpticsError> {
        check_unit_interval("t", t)?;
        if in1 == in2 {
            return Err(OpticsError::DuplicateMode(in1.to_string()));
        }
        if out1 == out2 {
            return Err(OpticsError::DuplicateMode(out1.to_string()));
        }
        for out in [out1, out2] {
            if self.col_index(out).is_some() {
                return Err(OpticsError::DuplicateMode(out.to_string()));
            }
        }
        if self.col_index(in2).is_none() {
            return Err(OpticsError::UnknownMode(in2.to_string()));
        }
        self.substitute(in1, &[(out1, t.sqrt()), (out2, (1.0 - t).sqrt())])?;
        self.substitute(in2, &[(out1, -(1.0 - t).sqrt()), (out2, t.sqrt())])
    }

    /// Loss on `mode`: keeps the name, leaks into a fresh environment
    /// mode of the given kind.
    pub fn loss(
        &mut self,
        mode: &str,
        transmissivity: f64,
        env: &str,
        kind: EnvKind,
    ) -> Result<&mut Self, OpticsError> {
        check_unit_interval("transmissivity", transmissivity)?;
        self.require_fresh_or(env, mode)?;
        if env == mode {
            return Err(OpticsError::DuplicateMode(env.to_string()));
        }
        self.substitute(
            mode,
            &[
                (mode, transmissivity.sqrt()),
                (env, (1.0 - transmissivity).sqrt()),
            ],
        )?;
        self.env.push((env.to_string(), kind));
        Ok(self)
    }

    /// Tag an existing column as an environment mode. Used when a raw
    /// substitution already routed amplitude into it.
    pub fn mark_environment(&mut self, mode: &str, kind: EnvKind) -> Result<&mut Self, OpticsError> {
        if self.col_index(mode).is_none() {
            return Err(OpticsError::UnknownMode(mode.to_string()));
        }
        if self.env.iter().any(|(name, _)| name == mode) {
            return Err(OpticsError::DuplicateMode(mode.to_string()));
        }
        self.env.push((mode.to_string(), kind));
        Ok(self)
    }

    fn require_fresh_or(&self, name: &str, allowed: &str) -> Result<(), OpticsError> {
        if name != allowed && self.col_index(name).is_some() {
            return Err(OpticsError::DuplicateMode(name.to_string()));
        }
        Ok(())
    }

    /// Current matrix entry from an input mode to an output column.
    pub fn coefficient(&self, input: &str, output: &str) -> Option<f64> {
        let i = self.inputs.iter().position(|m| m == input)?;
        let j = self.col_index(output)?;
        Some(self.rows[i][j])
    }

    /// Assign roles and validate. Every column must end up kept,
    /// detected, or tagged as environment.
    pub fn finish(self, kept: &[&str], detected: &[&str]) -> Result<LinearNetwork, OpticsError> {
        let mut outputs = Vec::with_capacity(self.cols.len());
        for name in &self.cols {
            let label = if kept.contains(&name.as_str()) {
                ModeLabel::kept(name.clone())
            } else if detected.contains(&name.as_str()) {
                ModeLabel::detected(name.clone())
            } else if let Some((_, kind)) = self.env.iter().find(|(n, _)| n == name) {
                ModeLabel::environment(name.clone(), *kind)
            } else {
                return Err(OpticsError::UnassignedMode(name.clone()));
            };
            outputs.push(label);
        }
        for name in kept.iter().chain(detected) {
            if !self.cols.contains(&name.to_string()) {
                return Err(OpticsError::UnknownMode(name.to_string()));
            }
        }
        let map = self
            .rows
            .iter()
            .map(|row| row.iter().map(|&v| c(v)).collect())
            .collect();
        let inputs = self.inputs.into_iter().map(ModeLabel::auxiliary).collect();
        Ok(LinearNetwork::new(inputs, outputs, map)?)
    }
}
