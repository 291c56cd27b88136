//! Sparse linear expressions over named variables.
//!
//! An [`AffineForm`] is a map from variables to coefficients plus a constant.
//! Variables are either network inputs or the fresh variables introduced for
//! undecided neurons during symbolic propagation. Coefficients are kept in a
//! `BTreeMap` so iteration order (inputs by index, then star variables by
//! layer and neuron) is deterministic, and numerical zeros are pruned to keep
//! forms canonical.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::interval::Interval;

/// Coefficients with magnitude below this are dropped after combination.
pub const COEFF_PRUNE_TOL: f64 = 1e-12;

/// Identifier of a variable an [`AffineForm`] may mention.
///
/// The derived ordering (inputs by index, then star variables by layer and
/// neuron) fixes the iteration order of every form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarId {
    /// Network input coordinate.
    Input(usize),
    /// Fresh variable standing in for an undecided neuron's output.
    Star { layer: usize, neuron: usize },
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarId::Input(i) => write!(f, "x{i}"),
            VarId::Star { layer, neuron } => write!(f, "v{layer}_{neuron}"),
        }
    }
}

#[derive(Debug, Clone, Error)]
pub enum AffineError {
    #[error("no bounds available for variable {0}")]
    MissingVariable(VarId),
}

/// A sparse linear expression `sum(coeff * var) + constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineForm {
    coeffs: BTreeMap<VarId, f64>,
    constant: f64,
}

impl AffineForm {
    pub fn constant(c: f64) -> Self {
        AffineForm {
            coeffs: BTreeMap::new(),
            constant: c,
        }
    }

    /// The form consisting of a single variable with coefficient one.
    pub fn variable(id: VarId) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(id, 1.0);
        AffineForm {
            coeffs,
            constant: 0.0,
        }
    }

    pub fn constant_term(&self) -> f64 {
        self.constant
    }

    pub fn coeff(&self, id: VarId) -> f64 {
        self.coeffs.get(&id).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (VarId, f64)> + '_ {
        self.coeffs.iter().map(|(k, v)| (*k, *v))
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Whether every variable is a network input.
    pub fn is_input_only(&self) -> bool {
        self.coeffs.keys().all(|v| matches!(v, VarId::Input(_)))
    }

    /// Whether the canonical-form invariant holds (no stored zeros).
    pub fn is_canonical(&self) -> bool {
        self.coeffs.values().all(|c| c.abs() >= COEFF_PRUNE_TOL)
    }

    /// Adds `weight * other` into `self` without pruning; call
    /// [`AffineForm::prune`] once a combination is complete.
    fn add_scaled(&mut self, other: &AffineForm, weight: f64) {
        if weight == 0.0 {
            return;
        }
        self.constant += weight * other.constant;
        for (id, c) in &other.coeffs {
            *self.coeffs.entry(*id).or_insert(0.0) += weight * c;
        }
    }

    fn prune(&mut self) {
        self.coeffs.retain(|_, c| c.abs() >= COEFF_PRUNE_TOL);
    }

    /// The weighted combination `sum(weights[k] * forms[k]) + offset`, with
    /// coefficient merging and zero pruning. Cancellation happens here: equal
    /// and opposite contributions of the same variable vanish instead of
    /// widening downstream bounds.
    pub fn combine(weights: &[f64], forms: &[AffineForm], offset: f64) -> AffineForm {
        assert_eq!(
            weights.len(),
            forms.len(),
            "one weight per combined form required"
        );
        let mut out = AffineForm::constant(offset);
        for (w, f) in weights.iter().zip(forms) {
            out.add_scaled(f, *w);
        }
        out.prune();
        out
    }

    /// Negated copy.
    pub fn negated(&self) -> AffineForm {
        AffineForm {
            coeffs: self.coeffs.iter().map(|(k, v)| (*k, -v)).collect(),
            constant: -self.constant,
        }
    }

    /// Tight range of the form over independent per-variable bounds: each
    /// coefficient picks the endpoint that minimizes (resp. maximizes) its
    /// contribution.
    pub fn bounds(&self, bounds: &VarBounds) -> Result<Interval, AffineError> {
        let mut lo = self.constant;
        let mut hi = self.constant;
        for (id, c) in &self.coeffs {
            let iv = bounds.get(*id).ok_or(AffineError::MissingVariable(*id))?;
            if *c >= 0.0 {
                lo += c * iv.lo();
                hi += c * iv.hi();
            } else {
                lo += c * iv.hi();
                hi += c * iv.lo();
            }
        }
        Ok(Interval::new(lo, hi))
    }

    /// Evaluates a form over input variables at the point `x`.
    ///
    /// Panics if the form mentions a star variable; those have no value at an
    /// input point.
    pub fn eval_at_input(&self, x: &[f64]) -> f64 {
        let mut acc = self.constant;
        for (id, c) in &self.coeffs {
            match id {
                VarId::Input(i) => acc += c * x[*i],
                VarId::Star { .. } => panic!("cannot evaluate star variable at an input point"),
            }
        }
        acc
    }
}

/// Interval bounds for a set of variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VarBounds {
    map: BTreeMap<VarId, Interval>,
}

impl VarBounds {
    pub fn new() -> Self {
        VarBounds::default()
    }

    /// Bounds for the input variables of an axis-aligned box.
    pub fn from_box(region: &[Interval]) -> Self {
        VarBounds {
            map: region
                .iter()
                .enumerate()
                .map(|(i, iv)| (VarId::Input(i), *iv))
                .collect(),
        }
    }

    pub fn insert(&mut self, id: VarId, iv: Interval) {
        self.map.insert(id, iv);
    }

    pub fn get(&self, id: VarId) -> Option<Interval> {
        self.map.get(&id).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, Interval)> + '_ {
        self.map.iter().map(|(k, v)| (*k, *v))
    }
}
