//! Exact multimode bosonic pure states, kept as sparse polynomials of
//! creation operators acting on vacuum. States pass through linear
//! optical networks by operator substitution and polynomial expansion,
//! so amplitudes are exact up to f64 rounding; nothing is truncated.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

/// Hard cap on the photon number in any single mode.
pub const MAX_OCCUPANCY: u8 = 4;

/// Terms with |amplitude| below this are dropped after collection.
pub const PRUNE_THRESHOLD: f64 = 1e-15;

/// Tolerance on unit rows and isometry checks at network construction.
pub const NETWORK_TOL: f64 = 1e-12;

const FACTORIAL: [f64; MAX_OCCUPANCY as usize + 1] = [1.0, 1.0, 2.0, 6.0, 24.0];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("unknown mode label `{0}`")]
    UnknownMode(String),
    #[error("duplicate mode label `{0}`")]
    DuplicateMode(String),
    #[error("mode `{0}` exceeds the maximum occupancy of {MAX_OCCUPANCY}")]
    OccupancyExceeded(String),
    #[error("row for input `{mode}` has squared norm {norm_sq}, expected 1")]
    NonUnitRow { mode: String, norm_sq: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    ModeMismatch { expected: usize, found: usize },
    #[error("mode `{0}` is still occupied")]
    OccupiedMode(String),
}

/// Which physical imperfection an environment mode traces out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EnvKind {
    /// Propagation loss in the fibre.
    Channel,
    /// Sub-unit source efficiency.
    Source,
    /// Sub-unit detector efficiency.
    Detector,
}

/// How a mode participates in a protocol circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// Retained by a party; carries the conditioned state.
    Kept,
    /// Measured by a heralding detector.
    Detected,
    /// Lost photons end up here; never measured, only traced out.
    Environment(EnvKind),
    /// Input or bookkeeping mode with no physical assignment yet.
    Auxiliary,
}

/// A named mode together with its circuit role.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeLabel {
    pub name: String,
    pub role: Role,
}

impl ModeLabel {
    pub fn new(name: impl Into<String>, role: Role) -> Self {
        ModeLabel { name: name.into(), role }
    }

    pub fn kept(name: impl Into<String>) -> Self {
        Self::new(name, Role::Kept)
    }

    pub fn detected(name: impl Into<String>) -> Self {
        Self::new(name, Role::Detected)
    }

    pub fn environment(name: impl Into<String>, kind: EnvKind) -> Self {
        Self::new(name, Role::Environment(kind))
    }

    pub fn auxiliary(name: impl Into<String>) -> Self {
        Self::new(name, Role::Auxiliary)
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Photon counts per mode, in the owning state's mode order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct OccupationPattern(pub Vec<u8>);

impl OccupationPattern {
    pub fn total(&self) -> u32 {
        self.0.iter().map(|&n| u32::from(n)).sum()
    }
}

fn check_unique(labels: &[ModeLabel]) -> Result<(), FockError> {
    for (i, m) in labels.iter().enumerate() {
        if labels[..i].iter().any(|p| p.name == m.name) {
            return Err(FockError::DuplicateMode(m.name.clone()));
        }
    }
    Ok(())
}

/// A pure state written as a polynomial of creation operators applied
/// to vacuum: the map sends per-mode exponent vectors to amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorState {
    modes: Vec<ModeLabel>,
    terms: BTreeMap<Vec<u8>, Complex64>,
}

/// Monomial input state with one creation operator power per listed mode.
///
/// Modes absent from `photons` hold vacuum. The resulting state has a
/// single term with amplitude 1.
pub fn make_state(
    modes: Vec<ModeLabel>,
    photons: &[(&str, u8)],
) -> Result<OperatorState, FockError> {
    OperatorState::superpose(modes, &[(Complex64::new(1.0, 0.0), photons)])
}

impl OperatorState {
    /// The vacuum state over the given modes.
    pub fn vacuum(modes: Vec<ModeLabel>) -> Result<Self, FockError> {
        make_state(modes, &[])
    }

    /// Weighted superposition of monomials, collected and pruned.
    pub fn superpose(
        modes: Vec<ModeLabel>,
        parts: &[(Complex64, &[(&str, u8)])],
    ) -> Result<Self, FockError> {
        check_unique(&modes)?;
        let mut terms: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
        for (amp, photons) in parts {
            let mut exps = vec![0u8; modes.len()];
            for (name, count) in *photons {
                let i = modes
                    .iter()
                    .position(|m| m.name == *name)
                    .ok_or_else(|| FockError::UnknownMode((*name).to_string()))?;
                if exps[i] != 0 {
                    return Err(FockError::DuplicateMode((*name).to_string()));
                }
                if *count > MAX_OCCUPANCY {
                    return Err(FockError::OccupancyExceeded((*name).to_string()));
                }
                exps[i] = *count;
            }
            *terms.entry(exps).or_insert(Complex64::new(0.0, 0.0)) += amp;
        }
        terms.retain(|_, c| c.norm() >= PRUNE_THRESHOLD);
        Ok(OperatorState { modes, terms })
    }

    /// Rebuild a state from raw exponent vectors; collects and prunes.
    pub fn from_terms(
        modes: Vec<ModeLabel>,
        parts: impl IntoIterator<Item = (Vec<u8>, Complex64)>,
    ) -> Result<Self, FockError> {
        check_unique(&modes)?;
        let mut terms: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
        for (exps, amp) in parts {
            if exps.len() != modes.len() {
                return Err(FockError::ModeMismatch {
                    expected: modes.len(),
                    found: exps.len(),
                });
            }
            if let Some(i) = exps.iter().position(|&n| n > MAX_OCCUPANCY) {
                return Err(FockError::OccupancyExceeded(modes[i].name.clone()));
            }
            *terms.entry(exps).or_insert(Complex64::new(0.0, 0.0)) += amp;
        }
        terms.retain(|_, c| c.norm() >= PRUNE_THRESHOLD);
        Ok(OperatorState { modes, terms })
    }

    pub fn modes(&self) -> &[ModeLabel] {
        &self.modes
    }

    pub fn mode_index(&self, name: &str) -> Option<usize> {
        self.modes.iter().position(|m| m.name == name)
    }

    /// Number of stored monomials.
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Iterate stored monomials in deterministic exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (&[u8], Complex64)> {
        self.terms.iter().map(|(e, &c)| (e.as_slice(), c))
    }

    /// Monomial coefficient for an exact exponent vector; zero if absent.
    pub fn amplitude(&self, exponents: &[u8]) -> Complex64 {
        self.terms
            .get(exponents)
            .copied()
            .unwrap_or_else(|| Complex64::new(0.0, 0.0))
    }

    /// Substitute every input operator by its network row and expand.
    ///
    /// The state's modes must be a subset of the network's input modes;
    /// unused inputs are allowed. The result lives on the network's
    /// output modes.
    pub fn apply_network(&self, net: &LinearNetwork) -> Result<OperatorState, FockError> {
        let rows: Vec<&[Complex64]> = self
            .modes
            .iter()
            .map(|m| {
                net.row_for(&m.name)
                    .ok_or_else(|| FockError::UnknownMode(m.name.clone()))
            })
            .collect::<Result<_, _>>()?;
        let outputs = net.output_modes();
        let n_out = outputs.len();

        let mut collected: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
        for (exps, &coef) in &self.terms {
            let mut partial: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
            partial.insert(vec![0u8; n_out], coef);
            for (i, &count) in exps.iter().enumerate() {
                for _ in 0..count {
                    let mut next: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
                    for (e, c) in &partial {
                        for (j, w) in rows[i].iter().enumerate() {
                            if w.norm_sqr() == 0.0 {
                                continue;
                            }
                            if e[j] >= MAX_OCCUPANCY {
                                return Err(FockError::OccupancyExceeded(
                                    outputs[j].name.clone(),
                                ));
                            }
                            let mut e2 = e.clone();
                            e2[j] += 1;
                            *next.entry(e2).or_insert(Complex64::new(0.0, 0.0)) += c * w;
                        }
                    }
                    partial = next;
                }
            }
            for (e, c) in partial {
                *collected.entry(e).or_insert(Complex64::new(0.0, 0.0)) += c;
            }
        }
        collected.retain(|_, c| c.norm() >= PRUNE_THRESHOLD);
        Ok(OperatorState {
            modes: outputs.to_vec(),
            terms: collected,
        })
    }

    /// Fock-basis amplitudes: monomial coefficient times ∏ sqrt(n_i!).
    pub fn to_fock_amplitudes(&self) -> BTreeMap<OccupationPattern, Complex64> {
        self.terms
            .iter()
            .map(|(e, &c)| {
                let factor: f64 = e.iter().map(|&n| FACTORIAL[n as usize]).product();
                (OccupationPattern(e.clone()), c * factor.sqrt())
            })
            .collect()
    }

    /// Project a subset of modes onto fixed photon counts.
    ///
    /// Returns the residual state over the remaining modes and the
    /// probability of the outcome, which is the residual's squared norm.
    pub fn project(&self, pattern: &[(&str, u8)]) -> Result<(OperatorState, f64), FockError> {
        let mut picked: Vec<(usize, u8)> = Vec::with_capacity(pattern.len());
        for (name, count) in pattern {
            let i = self
                .mode_index(name)
                .ok_or_else(|| FockError::UnknownMode((*name).to_string()))?;
            if picked.iter().any(|&(j, _)| j == i) {
                return Err(FockError::DuplicateMode((*name).to_string()));
            }
            if *count > MAX_OCCUPANCY {
                return Err(FockError::OccupancyExceeded((*name).to_string()));
            }
            picked.push((i, *count));
        }
        let clicked_factor: f64 = picked
            .iter()
            .map(|&(_, n)| FACTORIAL[n as usize])
            .product::<f64>()
            .sqrt();
        let keep: Vec<usize> = (0..self.modes.len())
            .filter(|i| !picked.iter().any(|&(j, _)| j == *i))
            .collect();

        let mut terms: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
        for (exps, &coef) in &self.terms {
            if picked.iter().all(|&(i, n)| exps[i] == n) {
                let e: Vec<u8> = keep.iter().map(|&i| exps[i]).collect();
                *terms.entry(e).or_insert(Complex64::new(0.0, 0.0)) += coef * clicked_factor;
            }
        }
        terms.retain(|_, c| c.norm() >= PRUNE_THRESHOLD);
        let residual = OperatorState {
            modes: keep.iter().map(|&i| self.modes[i].clone()).collect(),
            terms,
        };
        let probability = residual.inner_norm_squared();
        Ok((residual, probability))
    }

    /// Squared Fock-space norm: sum of |coefficient|² ∏ n_i!.
    pub fn inner_norm_squared(&self) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                let factor: f64 = e.iter().map(|&n| FACTORIAL[n as usize]).product();
                c.norm_sqr() * factor
            })
            .sum()
    }

    /// Unit-norm copy; the empty state is returned unchanged.
    pub fn normalized(&self) -> OperatorState {
        let n2 = self.inner_norm_squared();
        if n2 <= 0.0 {
            return self.clone();
        }
        let scale = 1.0 / n2.sqrt();
        OperatorState {
            modes: self.modes.clone(),
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.clone(), c * scale))
                .collect(),
        }
    }

    /// Keep only monomials whose exponent vector satisfies the predicate.
    pub fn filter_terms(&self, keep: impl Fn(&[u8]) -> bool) -> OperatorState {
        OperatorState {
            modes: self.modes.clone(),
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| keep(e.as_slice()))
                .map(|(e, c)| (e.clone(), *c))
                .collect(),
        }
    }

    /// Drop modes that hold vacuum in every stored term.
    pub fn without_modes(&self, names: &[&str]) -> Result<OperatorState, FockError> {
        let mut drop = Vec::with_capacity(names.len());
        for name in names {
            let i = self
                .mode_index(name)
                .ok_or_else(|| FockError::UnknownMode((*name).to_string()))?;
            if self.terms.keys().any(|e| e[i] != 0) {
                return Err(FockError::OccupiedMode((*name).to_string()));
            }
            drop.push(i);
        }
        let keep: Vec<usize> = (0..self.modes.len())
            .filter(|i| !drop.contains(i))
            .collect();
        Ok(OperatorState {
            modes: keep.iter().map(|&i| self.modes[i].clone()).collect(),
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (keep.iter().map(|&i| e[i]).collect(), *c))
                .collect(),
        })
    }
}

/// Isometry from input creation operators to output creation operators.
/// One row per input, one column per output; rows have unit norm.
#[derive(Debug, Clone)]
pub struct LinearNetwork {
    input_modes: Vec<ModeLabel>,
    output_modes: Vec<ModeLabel>,
    map: Vec<Vec<Complex64>>,
}

impl LinearNetwork {
    pub fn new(
        input_modes: Vec<ModeLabel>,
        output_modes: Vec<ModeLabel>,
        map: Vec<Vec<Complex64>>,
    ) -> Result<Self, FockError> {
        check_unique(&input_modes)?;
        check_unique(&output_modes)?;
        if map.len() != input_modes.len() {
            return Err(FockError::ModeMismatch {
                expected: input_modes.len(),
                found: map.len(),
            });
        }
        for (row, label) in map.iter().zip(&input_modes) {
            if row.len() != output_modes.len() {
                return Err(FockError::ModeMismatch {
                    expected: output_modes.len(),
                    found: row.len(),
                });
            }
            let norm_sq: f64 = row.iter().map(|w| w.norm_sqr()).sum();
            if (norm_sq - 1.0).abs() > NETWORK_TOL {
                return Err(FockError::NonUnitRow {
                    mode: label.name.clone(),
                    norm_sq,
                });
            }
        }
        Ok(LinearNetwork {
            input_modes,
            output_modes,
            map,
        })
    }

    /// Network that maps every listed mode to itself.
    pub fn identity(modes: Vec<ModeLabel>) -> Self {
        let n = modes.len();
        let map = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
                    .collect()
            })
            .collect();
        LinearNetwork {
            input_modes: modes.clone(),
            output_modes: modes,
            map,
        }
    }

    pub fn input_modes(&self) -> &[ModeLabel] {
        &self.input_modes
    }

    pub fn output_modes(&self) -> &[ModeLabel] {
        &self.output_modes
    }

    pub fn row_for(&self, input: &str) -> Option<&[Complex64]> {
        self.input_modes
            .iter()
            .position(|m| m.name == input)
            .map(|i| self.map[i].as_slice())
    }

    /// Matrix entry sending `input` to `output`, if both names exist.
    pub fn coefficient(&self, input: &str, output: &str) -> Option<Complex64> {
        let row = self.row_for(input)?;
        let j = self.output_modes.iter().position(|m| m.name == output)?;
        Some(row[j])
    }

    /// True when all rows are mutually orthonormal within `tol`.
    pub fn is_isometry(&self, tol: f64) -> bool {
        for i in 0..self.map.len() {
            for j in i..self.map.len() {
                let dot: Complex64 = self.map[i]
                    .iter()
                    .zip(&self.map[j])
                    .map(|(a, b)| a * b.conj())
                    .sum();
                let target = if i == j { 1.0 } else { 0.0 };
                if (dot - target).norm() > tol {
                    return false;
                }
            }
        }
        true
    }
}
