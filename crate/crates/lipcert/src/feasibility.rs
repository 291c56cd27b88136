//! LP feasibility for strict constraint sets, and the state-fixing filter.
//!
//! Strict inequalities cannot be fed to an LP directly, so `form < 0` is
//! realized as `form <= -eps_strict` (symmetrically for `> 0`). The margin
//! mirrors the finite tolerance every LP solver imposes; pushing it to zero
//! is not possible, it is surfaced in the configuration and report instead.

use crate::affine::{AffineForm, VarId};
use crate::interval::Interval;
use crate::network::{Network, NeuronState};
use crate::simplex::{phase_one, LpOutcome, LpRow};
use crate::subproblem::{ConstraintSet, Sense, SubProblem};

/// Tunables of the feasibility oracle.
#[derive(Debug, Clone)]
pub struct FeasibilityConfig {
    /// Slack substituted for strict inequalities.
    pub eps_strict: f64,
    /// Pivot and feasibility tolerance of the simplex.
    pub lp_tol: f64,
    /// Pivot cap; exceeding it reports Feasible, which costs extra branching
    /// but never prunes a region that might be nonempty.
    pub max_pivots: usize,
    /// Half-width of the artificial box bounding unconstrained variables in
    /// global mode.
    pub big_m: f64,
}

impl Default for FeasibilityConfig {
    fn default() -> Self {
        FeasibilityConfig {
            eps_strict: 1e-7,
            lp_tol: 1e-9,
            max_pivots: 10_000,
            big_m: 1e6,
        }
    }
}

/// A point certifying feasibility.
#[derive(Debug, Clone)]
pub struct Witness {
    pub point: Vec<f64>,
    /// Whether the point presses against the artificial global-mode box;
    /// when set, the region may extend beyond what the box can see.
    pub hits_artificial_bound: bool,
}

/// Verdict of the oracle.
#[derive(Debug, Clone)]
pub enum Feasibility {
    Feasible(Witness),
    Infeasible,
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible(_))
    }

    pub fn hits_artificial_bound(&self) -> bool {
        matches!(
            self,
            Feasibility::Feasible(Witness {
                hits_artificial_bound: true,
                ..
            })
        )
    }
}

/// Decides whether a constraint set admits a point satisfying every strict
/// inequality with margin `eps_strict`. Deterministic.
pub fn feasible(cs: &ConstraintSet, cfg: &FeasibilityConfig) -> Feasibility {
    feasible_with(cs, None, cfg)
}

/// Like [`feasible`], with one extra probe constraint that is not
/// materialized into the set. Branching and filtering test both sides of a
/// hyperplane this way without cloning constraint sets.
pub fn feasible_with(
    cs: &ConstraintSet,
    probe: Option<(&AffineForm, Sense)>,
    cfg: &FeasibilityConfig,
) -> Feasibility {
    let n = cs.dim();
    let (lower, upper): (Vec<f64>, Vec<f64>) = match cs.bounding_box() {
        Some(region) => (
            region.iter().map(Interval::lo).collect(),
            region.iter().map(Interval::hi).collect(),
        ),
        None => (vec![-cfg.big_m; n], vec![cfg.big_m; n]),
    };

    let mut rows: Vec<LpRow> = Vec::with_capacity(cs.halves().len() + 1);
    for half in cs.halves() {
        rows.push(strict_row(half.form(), half.sense(), n, cfg.eps_strict));
    }
    if let Some((form, sense)) = probe {
        rows.push(strict_row(form, sense, n, cfg.eps_strict));
    }

    match phase_one(&rows, &lower, &upper, cfg.lp_tol, cfg.max_pivots) {
        LpOutcome::Infeasible => Feasibility::Infeasible,
        LpOutcome::Feasible { mut point } | LpOutcome::PivotLimit { mut point } => {
            let mut hits = false;
            if cs.bounding_box().is_none() {
                pull_toward_origin(&mut point, &rows, cfg.big_m);
                hits = point.iter().any(|x| x.abs() >= cfg.big_m - 1e-6);
            }
            Feasibility::Feasible(Witness {
                point,
                hits_artificial_bound: hits,
            })
        }
    }
}

/// Moves coordinates of a feasible point toward the origin as far as the
/// rows allow. Phase-1 leaves nonbasic variables parked at the artificial
/// global box's corner, so without this a witness would "touch" the bound
/// whenever the bound is slack, which is exactly backwards. After the pull,
/// a coordinate still at the bound means the constraints really pin the
/// region against it.
fn pull_toward_origin(point: &mut [f64], rows: &[LpRow], big_m: f64) {
    for i in 0..point.len() {
        if point[i].abs() < big_m - 1e-6 {
            continue;
        }
        // Moving x_i by delta changes row j by coeffs[j][i] * delta; stay
        // within every row's remaining slack, with a safety factor.
        let toward_zero = -point[i]; // full move to the origin
        let mut scale = 1.0_f64;
        for row in rows {
            let a = row.coeffs[i];
            if a == 0.0 {
                continue;
            }
            let value: f64 = row
                .coeffs
                .iter()
                .zip(point.iter())
                .map(|(c, x)| c * x)
                .sum();
            let slack = row.rhs - value;
            let change = a * toward_zero;
            if change > slack {
                scale = scale.min((slack / change).max(0.0));
            }
        }
        point[i] += toward_zero * scale * 0.999;
    }
}

/// `form < 0` as `coeffs . x <= -constant - eps`; `form > 0` mirrored.
fn strict_row(form: &AffineForm, sense: Sense, n: usize, eps: f64) -> LpRow {
    let mut coeffs = vec![0.0; n];
    for (id, c) in form.terms() {
        match id {
            VarId::Input(i) => coeffs[i] = c,
            VarId::Star { .. } => panic!("constraints must be input-only"),
        }
    }
    match sense {
        Sense::StrictNeg => LpRow {
            coeffs,
            rhs: -form.constant_term() - eps,
        },
        Sense::StrictPos => LpRow {
            coeffs: coeffs.into_iter().map(|c| -c).collect(),
            rhs: form.constant_term() - eps,
        },
    }
}

/// Fixes the states of undecided neurons that the node's constraints already
/// decide.
///
/// Scans star neurons of the frontier layer in index order, testing both
/// sides of each neuron's hyperplane. One-sided neurons are fixed (no
/// constraint is added; the set already implies the sign) and propagation is
/// extended whenever a layer becomes star-free. The scan stops at the first
/// neuron feasible on both sides and records it as the branch hint, so a
/// later branch on it is guaranteed to produce two feasible children. If no
/// undecided neuron remains, the hint is cleared.
///
/// When neither side is feasible the neuron's pre-activation sits within
/// `eps_strict` of zero across the whole region; it contributes (at most) a
/// vanishing derivative either way and is fixed inactive.
pub fn fix_decided_states(sp: &mut SubProblem, net: &Network, cfg: &FeasibilityConfig) {
    sp.lin_prop(net);
    loop {
        let frontier = sp.frontier(net);
        if frontier >= net.num_hidden_layers() {
            sp.set_branch_hint(None);
            return;
        }
        for neuron in 0..net.layer(frontier).size() {
            if sp.pattern().state(frontier, neuron) != NeuronState::Star {
                continue;
            }
            // Fixing earlier neurons in this layer does not touch its
            // expressions, so the cached forms stay valid across the scan.
            let form = sp
                .pre_activation_forms(frontier)
                .expect("lin_prop reached the frontier")[neuron]
                .clone();
            let neg = feasible_with(sp.constraints(), Some((&form, Sense::StrictNeg)), cfg);
            let pos = feasible_with(sp.constraints(), Some((&form, Sense::StrictPos)), cfg);
            if neg.hits_artificial_bound() || pos.hits_artificial_bound() {
                sp.flag_artificial_bound();
            }
            match (neg.is_feasible(), pos.is_feasible()) {
                (true, true) => {
                    sp.set_branch_hint(Some((frontier, neuron)));
                    return;
                }
                (false, true) => sp.set_state(frontier, neuron, NeuronState::Active),
                // Only the negative side, or neither side, is reachable. In
                // the latter case the pre-activation is pinned within
                // eps_strict of zero over the region and its derivative
                // contribution vanishes; inactive is sound either way.
                _ => sp.set_state(frontier, neuron, NeuronState::Inactive),
            }
        }
        // Every star in the frontier layer got fixed; propagate deeper.
        sp.lin_prop(net);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::RealMatrix;
    use crate::subproblem::{HalfSpace, Mode};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi)
    }

    fn x(i: usize) -> AffineForm {
        AffineForm::variable(VarId::Input(i))
    }

    fn cfg() -> FeasibilityConfig {
        FeasibilityConfig::default()
    }

    #[test]
    fn contradictory_halves_are_infeasible() {
        let mut cs = ConstraintSet::bounded(vec![iv(0.0, 1.0), iv(0.0, 1.0)]);
        cs.push(HalfSpace::new(x(0), Sense::StrictPos));
        cs.push(HalfSpace::new(x(0), Sense::StrictNeg));
        assert!(!feasible(&cs, &cfg()).is_feasible());
    }

    #[test]
    fn witness_returned_for_feasible_sets() {
        // x0 + x1 > 1 in the unit box.
        let mut cs = ConstraintSet::bounded(vec![iv(0.0, 1.0), iv(0.0, 1.0)]);
        cs.push(HalfSpace::new(
            AffineForm::combine(&[1.0, 1.0], &[x(0), x(1)], -1.0),
            Sense::StrictPos,
        ));
        match feasible(&cs, &cfg()) {
            Feasibility::Feasible(w) => {
                assert!(w.point[0] + w.point[1] > 1.0);
                assert!(cs.satisfied_by(&w.point));
            }
            Feasibility::Infeasible => panic!("expected feasible"),
        }
    }

    #[test]
    fn empty_halves_over_box_feasible() {
        let cs = ConstraintSet::bounded(vec![iv(0.0, 1.0), iv(0.0, 1.0)]);
        assert!(feasible(&cs, &cfg()).is_feasible());
    }

    #[test]
    fn unbounded_sets_use_artificial_box() {
        let mut cs = ConstraintSet::unbounded(1);
        cs.push(HalfSpace::new(
            AffineForm::combine(&[1.0], &[x(0)], -100.0),
            Sense::StrictPos,
        ));
        match feasible(&cs, &cfg()) {
            Feasibility::Feasible(w) => {
                assert!(w.point[0] > 100.0);
                assert!(!w.hits_artificial_bound);
            }
            Feasibility::Infeasible => panic!("expected feasible"),
        }
    }

    fn relu_net() -> Network {
        Network::new(vec![
            (RealMatrix::from_rows(vec![vec![1.0]]), vec![0.0]),
            (RealMatrix::from_rows(vec![vec![1.0]]), vec![0.0]),
        ])
        .unwrap()
    }

    #[test]
    fn filter_fixes_one_sided_neuron() {
        // Constraint x0 > 0.6 decides the sign of z = x0 - 0.5.
        let net = Network::new(vec![
            (RealMatrix::from_rows(vec![vec![1.0, 0.0]]), vec![-0.5]),
            (RealMatrix::from_rows(vec![vec![1.0]]), vec![0.0]),
        ])
        .unwrap();
        let (mut sp, _) =
            SubProblem::make_root(&net, &[iv(0.0, 1.0), iv(0.0, 1.0)], Mode::Local).unwrap();
        assert_eq!(sp.pattern().state(0, 0), NeuronState::Star);
        sp.push_constraint(HalfSpace::new(
            AffineForm::combine(&[1.0], &[x(0)], -0.6),
            Sense::StrictPos,
        ));
        sp.lin_prop(&net);
        fix_decided_states(&mut sp, &net, &cfg());
        assert_eq!(sp.pattern().state(0, 0), NeuronState::Active);
        assert_eq!(sp.branch_hint(), None);
    }

    #[test]
    fn filter_reports_two_sided_neuron() {
        let net = relu_net();
        let (mut sp, _) = SubProblem::make_root(&net, &[iv(-1.0, 1.0)], Mode::Local).unwrap();
        sp.lin_prop(&net);
        fix_decided_states(&mut sp, &net, &cfg());
        assert_eq!(sp.branch_hint(), Some((0, 0)));
        assert_eq!(sp.pattern().state(0, 0), NeuronState::Star);
    }

    #[test]
    fn filter_leaves_decided_patterns_alone() {
        let net = relu_net();
        let (mut sp, _) = SubProblem::make_root(&net, &[iv(1.0, 2.0)], Mode::Local).unwrap();
        assert_eq!(sp.pattern().star_count(), 0);
        let before = sp.pattern().clone();
        fix_decided_states(&mut sp, &net, &cfg());
        assert_eq!(*sp.pattern(), before);
        assert_eq!(sp.branch_hint(), None);
    }

    /// LP verdicts agree with a dense grid search on random 2-D instances,
    /// up to the guard band around constraint boundaries.
    #[test]
    fn oracle_matches_grid_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let config = cfg();
        for _ in 0..1000 {
            let nrows = rng.gen_range(1..4);
            let mut cs = ConstraintSet::bounded(vec![iv(0.0, 1.0), iv(0.0, 1.0)]);
            let mut rows = Vec::new();
            for _ in 0..nrows {
                let a0: f64 = rng.gen_range(-2.0..2.0);
                let a1: f64 = rng.gen_range(-2.0..2.0);
                let c: f64 = rng.gen_range(-1.5..1.5);
                let sense = if rng.gen_bool(0.5) {
                    Sense::StrictNeg
                } else {
                    Sense::StrictPos
                };
                cs.push(HalfSpace::new(
                    AffineForm::combine(&[a0, a1], &[x(0), x(1)], c),
                    sense,
                ));
                rows.push((a0, a1, c, sense));
            }
            let verdict = feasible(&cs, &config);

            // 401x401 grid; a point counts as strongly inside when every row
            // holds with a 2*eps margin.
            let eps = config.eps_strict;
            let mut strong_inside = false;
            'grid: for gi in 0..=400 {
                for gj in 0..=400 {
                    let p = [gi as f64 / 400.0, gj as f64 / 400.0];
                    let inside = rows.iter().all(|(a0, a1, c, sense)| {
                        let v = a0 * p[0] + a1 * p[1] + c;
                        match sense {
                            Sense::StrictNeg => v <= -2.0 * eps,
                            Sense::StrictPos => v >= 2.0 * eps,
                        }
                    });
                    if inside {
                        strong_inside = true;
                        break 'grid;
                    }
                }
            }
            match verdict {
                Feasibility::Feasible(w) => {
                    // The witness is a direct certificate.
                    for (a0, a1, c, sense) in &rows {
                        let v = a0 * w.point[0] + a1 * w.point[1] + c;
                        match sense {
                            Sense::StrictNeg => assert!(v <= -eps * 0.99),
                            Sense::StrictPos => assert!(v >= eps * 0.99),
                        }
                    }
                }
                Feasibility::Infeasible => {
                    assert!(!strong_inside, "grid refutes an infeasible verdict");
                }
            }
        }
    }

    /// Fixed states agree with true pre-activation signs at sampled feasible
    /// points.
    #[test]
    fn filter_fixes_are_sound() {
        let mut rng = ChaCha8Rng::seed_from_u64(103);
        let config = cfg();
        let mut samples = 0;
        while samples < 1000 {
            let net = Network::new(
                [2usize, 4, 3, 2]
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
            .unwrap();
            let region = vec![iv(0.0, 1.0), iv(0.0, 1.0)];
            let (mut sp, _) = SubProblem::make_root(&net, &region, Mode::Local).unwrap();
            let before = sp.pattern().clone();
            sp.lin_prop(&net);
            fix_decided_states(&mut sp, &net, &config);
            for _ in 0..50 {
                let p: Vec<f64> = region
                    .iter()
                    .map(|iv| rng.gen_range(iv.lo()..=iv.hi()))
                    .collect();
                if !sp.constraints().satisfied_by(&p) {
                    continue;
                }
                let pre = net.pre_activations(&p).unwrap();
                for l in 0..net.num_hidden_layers() {
                    for i in 0..net.layer(l).size() {
                        if before.state(l, i) == NeuronState::Star {
                            match sp.pattern().state(l, i) {
                                NeuronState::Active => assert!(pre[l][i] > -1e-6),
                                NeuronState::Inactive => assert!(pre[l][i] < 1e-6),
                                NeuronState::Star => {}
                            }
                            samples += 1;
                        }
                    }
                }
            }
        }
    }

    /// Branching on the recorded hint always gives two feasible children.
    #[test]
    fn hint_is_two_sided() {
        let mut rng = ChaCha8Rng::seed_from_u64(107);
        let config = cfg();
        for _ in 0..50 {
            let net = Network::new(
                [2usize, 4, 3, 1]
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
            .unwrap();
            let (mut sp, _) =
                SubProblem::make_root(&net, &[iv(-1.0, 1.0), iv(-1.0, 1.0)], Mode::Local).unwrap();
            sp.lin_prop(&net);
            fix_decided_states(&mut sp, &net, &config);
            if let Some((l, i)) = sp.branch_hint() {
                let form = sp.pre_activation_forms(l).unwrap()[i].clone();
                for sense in [Sense::StrictNeg, Sense::StrictPos] {
                    assert!(
                        feasible_with(sp.constraints(), Some((&form, sense)), &config)
                            .is_feasible()
                    );
                }
            }
        }
    }

    #[test]
    fn determinism() {
        let mut cs = ConstraintSet::bounded(vec![iv(0.0, 1.0), iv(0.0, 1.0)]);
        cs.push(HalfSpace::new(
            AffineForm::combine(&[1.0, -1.0], &[x(0), x(1)], 0.1),
            Sense::StrictPos,
        ));
        let a = match feasible(&cs, &cfg()) {
            Feasibility::Feasible(w) => w.point,
            _ => panic!(),
        };
        let b = match feasible(&cs, &cfg()) {
            Feasibility::Feasible(w) => w.point,
            _ => panic!(),
        };
        assert_eq!(a, b);
    }
}
