//! Branch-and-bound nodes: half-space constraint sets over the inputs, an
//! activation pattern, and cached input-affine expressions.
//!
//! A node is equivalently `{constraints, pattern}`. The constraints are the
//! input box plus the strict half-spaces accumulated by branching; the
//! pattern records which neuron signs those constraints decide. `lin_prop`
//! pushes exact input-only expressions for each neuron's pre-activation
//! through decided layers, stopping at (and including) the first layer that
//! still contains an undecided neuron — beyond it the linear relationship
//! with the inputs breaks down.

use std::sync::Arc;

use thiserror::Error;

use crate::affine::{AffineForm, VarId};
use crate::interval::Interval;
use crate::network::{ActivationPattern, Network, NeuronState};
use crate::symprop::sym_prop;

#[derive(Debug, Error)]
pub enum SubProblemError {
    #[error("region has {found} intervals, expected {expected}")]
    RegionDimension { expected: usize, found: usize },
}

/// Which side of the hyperplane `form = 0` a constraint keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    /// `form < 0`
    StrictNeg,
    /// `form > 0`
    StrictPos,
}

impl Sense {
    /// The neuron state a branch on this side decides.
    pub fn decided_state(self) -> NeuronState {
        match self {
            Sense::StrictNeg => NeuronState::Inactive,
            Sense::StrictPos => NeuronState::Active,
        }
    }
}

/// A strict half-space over the input variables.
#[derive(Debug, Clone)]
pub struct HalfSpace {
    form: AffineForm,
    sense: Sense,
}

impl HalfSpace {
    /// Panics if `form` mentions a star variable; constraints live entirely
    /// in input space.
    pub fn new(form: AffineForm, sense: Sense) -> Self {
        assert!(
            form.is_input_only(),
            "half-space constraints must be input-only"
        );
        HalfSpace { form, sense }
    }

    pub fn form(&self) -> &AffineForm {
        &self.form
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    /// Strict pointwise satisfaction.
    pub fn satisfied_by(&self, x: &[f64]) -> bool {
        let v = self.form.eval_at_input(x);
        match self.sense {
            Sense::StrictNeg => v < 0.0,
            Sense::StrictPos => v > 0.0,
        }
    }
}

/// The feasible set of a node: an optional bounding box (absent in global
/// mode) intersected with strict half-spaces.
#[derive(Debug, Clone)]
pub struct ConstraintSet {
    dim: usize,
    bounding_box: Option<Vec<Interval>>,
    halves: Vec<HalfSpace>,
}

impl ConstraintSet {
    pub fn bounded(region: Vec<Interval>) -> Self {
        ConstraintSet {
            dim: region.len(),
            bounding_box: Some(region),
            halves: Vec::new(),
        }
    }

    /// No box constraints; the feasibility oracle substitutes a large
    /// artificial box.
    pub fn unbounded(dim: usize) -> Self {
        ConstraintSet {
            dim,
            bounding_box: None,
            halves: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bounding_box(&self) -> Option<&[Interval]> {
        self.bounding_box.as_deref()
    }

    pub fn halves(&self) -> &[HalfSpace] {
        &self.halves
    }

    pub fn push(&mut self, half: HalfSpace) {
        self.halves.push(half);
    }

    /// Pointwise membership: inside the box and strictly inside every
    /// half-space.
    pub fn satisfied_by(&self, x: &[f64]) -> bool {
        if x.len() != self.dim {
            return false;
        }
        if let Some(region) = &self.bounding_box {
            if !region.iter().zip(x).all(|(iv, xi)| iv.contains(*xi)) {
                return false;
            }
        }
        self.halves.iter().all(|h| h.satisfied_by(x))
    }
}

/// Search mode: bound the Lipschitz constant over a box, or over all of
/// input space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Local,
    Global,
}

/// A branch-and-bound node.
///
/// Invariants: `pre_forms` holds input-only pre-activation expressions for weight
/// layers `0..pre_forms.len()`, and after [`SubProblem::lin_prop`] that prefix
/// extends exactly through the pattern's frontier layer; `lip_ub` is a valid
/// upper bound on the Lipschitz constant of the node's region and never
/// exceeds the parent's.
#[derive(Debug, Clone)]
pub struct SubProblem {
    constraints: ConstraintSet,
    pattern: ActivationPattern,
    pre_forms: Vec<Arc<Vec<AffineForm>>>,
    lip_ub: f64,
    branch_hint: Option<(usize, usize)>,
    creation_seq: u64,
    touched_artificial_bound: bool,
}

impl SubProblem {
    /// Builds the root node.
    ///
    /// Local mode seeds the pattern from symbolic propagation over the box
    /// and takes the box as the initial constraints; the second return value
    /// carries the propagation's output bounds. Global mode marks every
    /// neuron undecided, starts from an empty constraint set, and ignores
    /// `region`.
    pub fn make_root(
        net: &Network,
        region: &[Interval],
        mode: Mode,
    ) -> Result<(SubProblem, Option<Vec<Interval>>), SubProblemError> {
        let (constraints, pattern, output_bounds) = match mode {
            Mode::Local => {
                if region.len() != net.input_dim() {
                    return Err(SubProblemError::RegionDimension {
                        expected: net.input_dim(),
                        found: region.len(),
                    });
                }
                let sym = sym_prop(net, region);
                (
                    ConstraintSet::bounded(region.to_vec()),
                    sym.pattern,
                    Some(sym.output_bounds),
                )
            }
            Mode::Global => (
                ConstraintSet::unbounded(net.input_dim()),
                ActivationPattern::all_star(net),
                None,
            ),
        };
        Ok((
            SubProblem {
                constraints,
                pattern,
                pre_forms: Vec::new(),
                lip_ub: f64::INFINITY,
                branch_hint: None,
                creation_seq: 0,
                touched_artificial_bound: false,
            },
            output_bounds,
        ))
    }

    /// A node with every neuron undecided over the given box. The
    /// enumeration oracle starts here so that all sign information comes
    /// from feasibility checks alone, independent of the symbolic pass.
    pub fn all_star_over_box(
        net: &Network,
        region: &[Interval],
    ) -> Result<SubProblem, SubProblemError> {
        if region.len() != net.input_dim() {
            return Err(SubProblemError::RegionDimension {
                expected: net.input_dim(),
                found: region.len(),
            });
        }
        Ok(SubProblem {
            constraints: ConstraintSet::bounded(region.to_vec()),
            pattern: ActivationPattern::all_star(net),
            pre_forms: Vec::new(),
            lip_ub: f64::INFINITY,
            branch_hint: None,
            creation_seq: 0,
            touched_artificial_bound: false,
        })
    }

    pub fn constraints(&self) -> &ConstraintSet {
        &self.constraints
    }

    pub fn pattern(&self) -> &ActivationPattern {
        &self.pattern
    }

    pub fn lip_ub(&self) -> f64 {
        self.lip_ub
    }

    pub fn branch_hint(&self) -> Option<(usize, usize)> {
        self.branch_hint
    }

    pub fn creation_seq(&self) -> u64 {
        self.creation_seq
    }

    /// Whether any feasibility certificate observed while building this node
    /// (or an ancestor) pressed against the artificial global-mode box.
    pub fn touched_artificial_bound(&self) -> bool {
        self.touched_artificial_bound
    }

    pub(crate) fn flag_artificial_bound(&mut self) {
        self.touched_artificial_bound = true;
    }

    /// First hidden layer still containing a star, or the output layer index
    /// when fully decided.
    pub fn frontier(&self, net: &Network) -> usize {
        self.pattern.frontier(net.num_layers())
    }

    /// Cached pre-activation expressions of weight layer `l`, if propagated.
    pub fn pre_activation_forms(&self, l: usize) -> Option<&[AffineForm]> {
        self.pre_forms.get(l).map(|forms| forms.as_slice())
    }

    pub(crate) fn set_lip_ub(&mut self, ub: f64) {
        self.lip_ub = ub;
    }

    pub(crate) fn set_branch_hint(&mut self, hint: Option<(usize, usize)>) {
        self.branch_hint = hint;
    }

    pub(crate) fn set_state(&mut self, layer: usize, neuron: usize, state: NeuronState) {
        self.pattern.set_state(layer, neuron, state);
    }

    /// Adds a half-space to the node's constraints. Shrinking the region
    /// keeps every decided state and cached expression valid.
    pub fn push_constraint(&mut self, half: HalfSpace) {
        self.constraints.push(half);
    }

    /// Drops cached expressions invalidated by a state change in hidden layer
    /// `t`. Layers `0..=t` stay valid: layer `t`'s expressions depend only on
    /// the states of earlier layers.
    pub(crate) fn invalidate_after(&mut self, t: usize) {
        self.pre_forms.truncate(t + 1);
    }

    /// Propagates input-only pre-activation expressions through decided
    /// layers until the frontier layer (inclusive). Incremental: already
    /// cached layers are kept and shared with descendants. Idempotent.
    pub fn lin_prop(&mut self, net: &Network) {
        let frontier = self.frontier(net);
        while self.pre_forms.len() <= frontier {
            let l = self.pre_forms.len();
            let layer = net.layer(l);
            let inputs: Vec<AffineForm>;
            let prev: &[AffineForm] = if l == 0 {
                inputs = (0..net.input_dim())
                    .map(|i| AffineForm::variable(VarId::Input(i)))
                    .collect();
                &inputs
            } else {
                // Safe: every layer before the frontier is star-free.
                inputs = self.pre_forms[l - 1]
                    .iter()
                    .enumerate()
                    .map(|(i, ze)| match self.pattern.state(l - 1, i) {
                        NeuronState::Active => ze.clone(),
                        NeuronState::Inactive => AffineForm::constant(0.0),
                        NeuronState::Star => {
                            unreachable!("layer before the frontier contains a star")
                        }
                    })
                    .collect();
                &inputs
            };
            let forms: Vec<AffineForm> = (0..layer.size())
                .map(|i| AffineForm::combine(layer.weights().row(i), prev, layer.bias()[i]))
                .collect();
            self.pre_forms.push(Arc::new(forms));
        }
    }

    /// A child with one undecided neuron fixed and the corresponding
    /// half-space recorded. Expressions beyond the changed layer are dropped;
    /// the caller re-runs [`SubProblem::lin_prop`].
    pub(crate) fn child(
        &self,
        layer: usize,
        neuron: usize,
        sense: Sense,
        constraint: Option<HalfSpace>,
        seq: u64,
    ) -> SubProblem {
        debug_assert_eq!(self.pattern.state(layer, neuron), NeuronState::Star);
        let mut child = self.clone();
        child.set_state(layer, neuron, sense.decided_state());
        if let Some(half) = constraint {
            child.push_constraint(half);
        }
        child.invalidate_after(layer);
        child.branch_hint = None;
        child.creation_seq = seq;
        child
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::RealMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi)
    }

    fn relu_net() -> Network {
        Network::new(vec![
            (RealMatrix::from_rows(vec![vec![1.0]]), vec![0.0]),
            (RealMatrix::from_rows(vec![vec![1.0]]), vec![0.0]),
        ])
        .unwrap()
    }

    fn two_path_net() -> Network {
        Network::new(vec![
            (
                RealMatrix::from_rows(vec![vec![1.0], vec![-1.0]]),
                vec![0.0, 0.0],
            ),
            (RealMatrix::from_rows(vec![vec![1.0, 1.0]]), vec![0.0]),
        ])
        .unwrap()
    }

    #[test]
    fn local_root_uses_symbolic_pattern_and_box() {
        let net = relu_net();
        let (root, bounds) = SubProblem::make_root(&net, &[iv(-1.0, 1.0)], Mode::Local).unwrap();
        assert_eq!(root.pattern().state(0, 0), NeuronState::Star);
        assert_eq!(root.constraints().bounding_box().unwrap().len(), 1);
        assert!(root.constraints().halves().is_empty());
        assert_eq!(bounds.unwrap()[0], iv(0.0, 1.0));
    }

    #[test]
    fn global_root_is_all_star_unconstrained() {
        let net = two_path_net();
        let (root, bounds) = SubProblem::make_root(&net, &[], Mode::Global).unwrap();
        assert_eq!(root.pattern().star_count(), 2);
        assert!(root.constraints().bounding_box().is_none());
        assert!(root.constraints().halves().is_empty());
        assert!(bounds.is_none());
    }

    #[test]
    fn always_active_hidden_layer_extends_frontier() {
        let net = Network::new(vec![
            (RealMatrix::from_rows(vec![vec![1.0]]), vec![5.0]),
            (RealMatrix::from_rows(vec![vec![1.0]]), vec![0.0]),
        ])
        .unwrap();
        let (root, _) = SubProblem::make_root(&net, &[iv(0.0, 1.0)], Mode::Local).unwrap();
        assert_eq!(root.pattern().state(0, 0), NeuronState::Active);
        assert_eq!(root.frontier(&net), 1);
    }

    #[test]
    fn local_root_rejects_bad_dimension() {
        let net = relu_net();
        assert!(matches!(
            SubProblem::make_root(&net, &[iv(0.0, 1.0), iv(0.0, 1.0)], Mode::Local),
            Err(SubProblemError::RegionDimension {
                expected: 1,
                found: 2
            })
        ));
    }

    #[test]
    fn lin_prop_stops_at_star_layer() {
        let net = two_path_net();
        let (mut root, _) = SubProblem::make_root(&net, &[], Mode::Global).unwrap();
        root.lin_prop(&net);
        assert_eq!(root.frontier(&net), 0);
        let forms = root.pre_activation_forms(0).unwrap();
        assert_eq!(forms[0].coeff(VarId::Input(0)), 1.0);
        assert_eq!(forms[1].coeff(VarId::Input(0)), -1.0);
        assert!(root.pre_activation_forms(1).is_none());
    }

    #[test]
    fn lin_prop_zeroes_inactive_paths() {
        let net = two_path_net();
        let (mut root, _) = SubProblem::make_root(&net, &[], Mode::Global).unwrap();
        root.set_state(0, 0, NeuronState::Active);
        root.set_state(0, 1, NeuronState::Inactive);
        root.lin_prop(&net);
        assert_eq!(root.frontier(&net), 1);
        let out = &root.pre_activation_forms(1).unwrap()[0];
        assert_eq!(out.coeff(VarId::Input(0)), 1.0);
        assert_eq!(out.constant_term(), 0.0);
    }

    #[test]
    fn lin_prop_reaches_output_when_decided() {
        let net = relu_net();
        let (mut root, _) = SubProblem::make_root(&net, &[iv(1.0, 2.0)], Mode::Local).unwrap();
        // box is strictly positive, so symprop decides the hidden neuron
        assert_eq!(root.pattern().star_count(), 0);
        root.lin_prop(&net);
        assert_eq!(root.frontier(&net), 1);
        assert!(root.pre_activation_forms(1).is_some());
    }

    fn random_net(rng: &mut ChaCha8Rng, shape: &[usize]) -> Network {
        Network::new(
            shape
                .windows(2)
                .map(|w| {
                    (
                        RealMatrix::from_rows(
                            (0..w[1])
                                .map(|_| (0..w[0]).map(|_| rng.gen_range(-1.0..1.0)).collect())
                                .collect(),
                        ),
                        (0..w[1]).map(|_| rng.gen_range(-0.5..0.5)).collect(),
                    )
                })
                .collect(),
        )
        .unwrap()
    }

    /// The cached expressions evaluate to the true pre-activations wherever
    /// the preceding layers are fully decided.
    #[test]
    fn cached_forms_match_forward_pre_activations() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for _ in 0..20 {
            let net = random_net(&mut rng, &[2, 4, 3, 2]);
            let region: Vec<Interval> = (0..2)
                .map(|_| {
                    let a: f64 = rng.gen_range(-1.0..1.0);
                    let b: f64 = rng.gen_range(-1.0..1.0);
                    iv(a.min(b), a.max(b))
                })
                .collect();
            let (mut root, _) = SubProblem::make_root(&net, &region, Mode::Local).unwrap();
            root.lin_prop(&net);
            for _ in 0..50 {
                let x: Vec<f64> = region
                    .iter()
                    .map(|iv| rng.gen_range(iv.lo()..=iv.hi()))
                    .collect();
                if !root.constraints().satisfied_by(&x) {
                    continue;
                }
                let pre = net.pre_activations(&x).unwrap();
                for l in 0..=root.frontier(&net).min(net.num_layers() - 1) {
                    if let Some(forms) = root.pre_activation_forms(l) {
                        for (i, form) in forms.iter().enumerate() {
                            assert!(
                                (form.eval_at_input(&x) - pre[l][i]).abs() < 1e-9,
                                "layer {l} neuron {i}"
                            );
                        }
                    }
                }
            }
        }
    }

    /// Decided states match true pre-activation signs at feasible points.
    #[test]
    fn decided_states_are_sound_at_feasible_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let mut tested = 0;
        for _ in 0..30 {
            let net = random_net(&mut rng, &[2, 5, 4, 2]);
            let region: Vec<Interval> = (0..2).map(|_| iv(-1.0, 1.0)).collect();
            let (root, _) = SubProblem::make_root(&net, &region, Mode::Local).unwrap();
            for _ in 0..40 {
                let x: Vec<f64> = region
                    .iter()
                    .map(|iv| rng.gen_range(iv.lo()..=iv.hi()))
                    .collect();
                if !root.constraints().satisfied_by(&x) {
                    continue;
                }
                let pre = net.pre_activations(&x).unwrap();
                for l in 0..net.num_hidden_layers() {
                    for i in 0..net.layer(l).size() {
                        match root.pattern().state(l, i) {
                            NeuronState::Active => assert!(pre[l][i] > -1e-9),
                            NeuronState::Inactive => assert!(pre[l][i] < 1e-9),
                            NeuronState::Star => {}
                        }
                        tested += 1;
                    }
                }
            }
        }
        assert!(tested > 1000);
    }

    #[test]
    fn child_extends_constraints_by_exactly_one() {
        let net = relu_net();
        let (mut root, _) = SubProblem::make_root(&net, &[iv(-1.0, 1.0)], Mode::Local).unwrap();
        root.lin_prop(&net);
        let form = root.pre_activation_forms(0).unwrap()[0].clone();
        let child = root.child(
            0,
            0,
            Sense::StrictPos,
            Some(HalfSpace::new(form, Sense::StrictPos)),
            1,
        );
        assert_eq!(
            child.constraints().halves().len(),
            root.constraints().halves().len() + 1
        );
        assert_eq!(child.pattern().state(0, 0), NeuronState::Active);
        assert_eq!(child.creation_seq(), 1);
    }
}
