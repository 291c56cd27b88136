//! The branch-and-bound engine.
//!
//! Nodes live in a max-heap ordered by their Lipschitz upper bound. Each
//! iteration pops the worst node; its bound is the current global upper
//! bound `gub`. Fully-decided nodes carry exact constants and raise the
//! global lower bound `glb`. The loop stops when `gub <= k * glb` (with
//! `k = 1` demanding equality up to the numeric tolerance), or when an
//! iteration or time budget runs out — in which case the current `gub` is
//! still a valid upper bound, just not yet tight.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::feasibility::{feasible, feasible_with, fix_decided_states, FeasibilityConfig};
use crate::interval::{Interval, NUM_TOL};
use crate::matrix::{mul_real_interval, IntervalMatrix};
use crate::network::{ActivationPattern, Network};
use crate::norm::{op_norm_or_fallback, NormKind};
use crate::subproblem::{HalfSpace, Mode, Sense, SubProblem, SubProblemError};

#[derive(Debug, Error)]
pub enum BabError {
    #[error("approximation factor must be at least 1, got {0}")]
    InvalidApproxFactor(f64),
    #[error(transparent)]
    Region(#[from] SubProblemError),
}

/// Engine configuration.
#[derive(Debug, Clone)]
pub struct BabConfig {
    pub norm: NormKind,
    /// Termination factor `k >= 1`: stop once `gub <= k * glb`.
    pub approx_factor: f64,
    pub mode: Mode,
    /// Cap on heap pops.
    pub max_iterations: u64,
    pub time_limit: Duration,
    pub feasibility: FeasibilityConfig,
    /// Seeds the spectral-norm power iteration; everything else is
    /// deterministic without it.
    pub seed: u64,
    /// Record a per-iteration `(gub, glb, queue)` trace in the result.
    pub trace: bool,
}

impl Default for BabConfig {
    fn default() -> Self {
        BabConfig {
            norm: NormKind::Two,
            approx_factor: 1.0,
            mode: Mode::Local,
            max_iterations: 1_000_000,
            time_limit: Duration::from_secs(300),
            feasibility: FeasibilityConfig::default(),
            seed: 0,
            trace: false,
        }
    }
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BabStatus {
    /// `gub == glb` up to the numeric tolerance: the exact constant.
    Exact,
    /// `gub <= k * glb`.
    KApprox,
    IterLimit,
    TimeLimit,
}

/// One row of the convergence trace, recorded at each pop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: u64,
    pub gub: f64,
    pub glb: f64,
    pub queue_len: usize,
}

/// Outcome of a run.
#[derive(Debug, Clone)]
pub struct BabResult {
    /// Certified upper bound on the Lipschitz constant.
    pub gub: f64,
    /// Largest exact constant among fully-decided regions seen so far.
    pub glb: f64,
    pub status: BabStatus,
    /// Heap pops performed.
    pub iterations: u64,
    /// Nodes created, root included.
    pub subproblems_created: u64,
    /// Nodes still queued at exit.
    pub subproblems_remaining: usize,
    /// Output bounds of the network over the box (local mode only), a
    /// by-product of the root's symbolic propagation.
    pub output_bounds: Option<Vec<Interval>>,
    pub elapsed: Duration,
    pub trace: Option<Vec<TraceRow>>,
    /// Whether any feasibility certificate in global mode touched the
    /// artificial bounding box; if set, regions may extend beyond it.
    pub big_m_saturated: bool,
}

/// Upper bound on the Lipschitz constant of the region described by a
/// pattern (Jacobian chain with interval activation factors). Exact when the
/// pattern has no undecided neuron.
pub fn pattern_upper_bound(
    net: &Network,
    pattern: &ActivationPattern,
    norm: NormKind,
    seed: u64,
) -> f64 {
    if pattern.star_count() == 0 {
        let jac = net
            .jacobian_of_pattern(pattern)
            .expect("fully decided pattern");
        op_norm_or_fallback(&jac, norm, seed)
    } else {
        let mut j = IntervalMatrix::from_real(net.layer(0).weights());
        for l in 1..net.num_layers() {
            let diag = pattern.interval_diagonal(l - 1);
            j = mul_real_interval(net.layer(l).weights(), &j.scaled_rows(&diag));
        }
        op_norm_or_fallback(&j.abs_upper(), norm, seed)
    }
}

/// Splits a node on its branch hint (or the first undecided neuron) and
/// returns the feasible children, fully prepared: propagated, filtered, and
/// bounded. A child's bound is clamped by the parent's so bounds are
/// monotone along every path even under floating-point wobble.
pub fn branch(
    sp: &SubProblem,
    net: &Network,
    cfg: &BabConfig,
    next_seq: &mut u64,
) -> Vec<SubProblem> {
    let (layer, neuron) = sp
        .branch_hint()
        .or_else(|| sp.pattern().first_star())
        .expect("branch requires an undecided neuron");
    let hinted = sp.branch_hint() == Some((layer, neuron));
    let form = sp
        .pre_activation_forms(layer)
        .expect("propagation reached the branch layer")[neuron]
        .clone();

    let mut children = Vec::with_capacity(2);
    for sense in [Sense::StrictNeg, Sense::StrictPos] {
        // The hint was discovered by testing exactly these two sides against
        // the same constraints, so the checks are already paid for.
        let mut probe_hit_bound = false;
        if !hinted {
            let verdict = feasible_with(sp.constraints(), Some((&form, sense)), &cfg.feasibility);
            probe_hit_bound = verdict.hits_artificial_bound();
            if !verdict.is_feasible() {
                continue;
            }
        }
        *next_seq += 1;
        let mut child = sp.child(
            layer,
            neuron,
            sense,
            Some(HalfSpace::new(form.clone(), sense)),
            *next_seq,
        );
        if probe_hit_bound {
            child.flag_artificial_bound();
        }
        child.lin_prop(net);
        fix_decided_states(&mut child, net, &cfg.feasibility);
        let ub = pattern_upper_bound(net, child.pattern(), cfg.norm, cfg.seed);
        child.set_lip_ub(ub.min(sp.lip_ub()));
        children.push(child);
    }
    children
}

struct QueueEntry(SubProblem);

impl PartialEq for QueueEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for QueueEntry {}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Highest bound first; earliest creation wins ties, which keeps runs
        // deterministic.
        self.0
            .lip_ub()
            .total_cmp(&other.0.lip_ub())
            .then_with(|| other.0.creation_seq().cmp(&self.0.creation_seq()))
    }
}

/// Certifies the Lipschitz constant of `net`.
///
/// Local mode bounds it over the box `region`; global mode bounds it over
/// all of input space and ignores `region`. The returned `gub` is always a
/// valid upper bound; on [`BabStatus::Exact`] it is the constant itself.
pub fn certify(net: &Network, region: &[Interval], cfg: &BabConfig) -> Result<BabResult, BabError> {
    if cfg.approx_factor.is_nan() || cfg.approx_factor < 1.0 {
        return Err(BabError::InvalidApproxFactor(cfg.approx_factor));
    }
    let start = Instant::now();
    let (mut root, output_bounds) = SubProblem::make_root(net, region, cfg.mode)?;

    let mut big_m_saturated = false;
    match feasible(root.constraints(), &cfg.feasibility) {
        crate::feasibility::Feasibility::Feasible(w) => {
            big_m_saturated |= w.hits_artificial_bound;
        }
        crate::feasibility::Feasibility::Infeasible => {
            // Degenerate empty domain: the constant over it is zero.
            return Ok(BabResult {
                gub: 0.0,
                glb: 0.0,
                status: BabStatus::Exact,
                iterations: 0,
                subproblems_created: 1,
                subproblems_remaining: 0,
                output_bounds,
                elapsed: start.elapsed(),
                trace: cfg.trace.then(Vec::new),
                big_m_saturated,
            });
        }
    }

    root.lin_prop(net);
    fix_decided_states(&mut root, net, &cfg.feasibility);
    big_m_saturated |= root.touched_artificial_bound();
    let root_ub = pattern_upper_bound(net, root.pattern(), cfg.norm, cfg.seed);
    root.set_lip_ub(root_ub);

    let mut glb: f64 = 0.0;
    if root.pattern().star_count() == 0 {
        glb = root.lip_ub();
    }
    let mut gub;

    let mut heap = BinaryHeap::new();
    heap.push(QueueEntry(root));
    let mut created: u64 = 1;
    let mut next_seq: u64 = 0;
    let mut iterations: u64 = 0;
    let mut trace = cfg.trace.then(Vec::<TraceRow>::new);

    let status = loop {
        let Some(QueueEntry(top)) = heap.pop() else {
            // Queue exhaustion means every region was resolved exactly.
            gub = glb;
            break BabStatus::Exact;
        };
        iterations += 1;
        gub = top.lip_ub();
        if let Some(t) = &mut trace {
            t.push(TraceRow {
                iteration: iterations,
                gub,
                glb,
                queue_len: heap.len(),
            });
        }

        if top.pattern().star_count() == 0 {
            // The worst remaining node is a linear region, so its bound is
            // attained: this is the exact constant, whatever k asked for.
            glb = glb.max(gub);
            break BabStatus::Exact;
        }
        if gub <= glb + NUM_TOL {
            break BabStatus::Exact;
        }
        if gub <= cfg.approx_factor * glb {
            break BabStatus::KApprox;
        }
        if iterations >= cfg.max_iterations {
            heap.push(QueueEntry(top));
            break BabStatus::IterLimit;
        }
        if start.elapsed() >= cfg.time_limit {
            heap.push(QueueEntry(top));
            break BabStatus::TimeLimit;
        }

        for child in branch(&top, net, cfg, &mut next_seq) {
            created += 1;
            big_m_saturated |= child.touched_artificial_bound();
            if child.pattern().star_count() == 0 {
                glb = glb.max(child.lip_ub());
            }
            heap.push(QueueEntry(child));
        }
    };

    Ok(BabResult {
        gub,
        glb,
        status,
        iterations,
        subproblems_created: created,
        subproblems_remaining: heap.len(),
        output_bounds,
        elapsed: start.elapsed(),
        trace,
        big_m_saturated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::RealMatrix;
    use crate::network::NeuronState;
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

    fn config(norm: NormKind) -> BabConfig {
        BabConfig {
            norm,
            ..BabConfig::default()
        }
    }

    #[test]
    fn interval_chain_bound_for_stars() {
        let net = two_path_net();
        let pattern = ActivationPattern::all_star(&net);
        // [J] = [0,1] * 1 + [0,1] * (-1) = [-1, 1]; |U| = 1.
        assert_eq!(pattern_upper_bound(&net, &pattern, NormKind::Inf, 0), 1.0);

        let decided =
            ActivationPattern::from_states(vec![vec![NeuronState::Active, NeuronState::Inactive]]);
        for kind in [NormKind::One, NormKind::Two, NormKind::Inf, NormKind::Fro] {
            assert!((pattern_upper_bound(&net, &decided, kind, 0) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_linear_layer_is_exact_immediately() {
        let net = Network::new(vec![(
            RealMatrix::from_rows(vec![vec![1.0, -2.0], vec![3.0, 4.0]]),
            vec![0.0, 0.0],
        )])
        .unwrap();
        let pattern = ActivationPattern::all_star(&net);
        assert_eq!(pattern_upper_bound(&net, &pattern, NormKind::One, 0), 6.0);

        let cfg = config(NormKind::One);
        let r = certify(&net, &[iv(0.0, 1.0), iv(0.0, 1.0)], &cfg).unwrap();
        assert_eq!(r.gub, 6.0);
        assert_eq!(r.glb, 6.0);
        assert_eq!(r.status, BabStatus::Exact);
        assert_eq!(r.iterations, 1);
        assert_eq!(r.subproblems_created, 1);
    }

    #[test]
    fn relu_branches_into_both_signs() {
        let net = relu_net();
        let cfg = config(NormKind::Inf);
        let (mut root, _) = SubProblem::make_root(&net, &[iv(-1.0, 1.0)], Mode::Local).unwrap();
        root.lin_prop(&net);
        fix_decided_states(&mut root, &net, &cfg.feasibility);
        root.set_lip_ub(pattern_upper_bound(
            &net,
            root.pattern(),
            cfg.norm,
            cfg.seed,
        ));
        assert_eq!(root.lip_ub(), 1.0);

        let mut seq = 0;
        let children = branch(&root, &net, &cfg, &mut seq);
        assert_eq!(children.len(), 2);
        let ubs: Vec<f64> = children.iter().map(SubProblem::lip_ub).collect();
        assert!(ubs.contains(&0.0) && ubs.contains(&1.0));
        let glb = children
            .iter()
            .filter(|c| c.pattern().star_count() == 0)
            .map(SubProblem::lip_ub)
            .fold(0.0_f64, f64::max);
        assert_eq!(glb, 1.0);
    }

    #[test]
    fn relu_certify_is_exact() {
        let net = relu_net();
        let r = certify(&net, &[iv(-1.0, 1.0)], &config(NormKind::Two)).unwrap();
        assert_eq!(r.status, BabStatus::Exact);
        assert!((r.gub - 1.0).abs() < 1e-12);
        assert!((r.glb - 1.0).abs() < 1e-12);
        assert_eq!(r.output_bounds.as_ref().unwrap()[0], iv(0.0, 1.0));
    }

    #[test]
    fn global_mode_covers_both_regions() {
        let net = relu_net();
        let cfg = BabConfig {
            norm: NormKind::Inf,
            mode: Mode::Global,
            ..BabConfig::default()
        };
        let r = certify(&net, &[], &cfg).unwrap();
        assert_eq!(r.status, BabStatus::Exact);
        assert!((r.gub - 1.0).abs() < 1e-12);
        assert!(r.output_bounds.is_none());
    }

    #[test]
    fn rejects_bad_approx_factor() {
        let net = relu_net();
        let cfg = BabConfig {
            approx_factor: 0.5,
            ..BabConfig::default()
        };
        assert!(matches!(
            certify(&net, &[iv(0.0, 1.0)], &cfg),
            Err(BabError::InvalidApproxFactor(_))
        ));
    }

    #[test]
    fn zero_time_budget_stops_after_first_pop() {
        let mut rng = ChaCha8Rng::seed_from_u64(199);
        let net = random_net(&mut rng, &[2, 5, 5, 2]);
        let region = vec![iv(-1.0, 1.0), iv(-1.0, 1.0)];
        let cfg = BabConfig {
            norm: NormKind::One,
            time_limit: Duration::ZERO,
            ..BabConfig::default()
        };
        let r = certify(&net, &region, &cfg).unwrap();
        if r.status == BabStatus::TimeLimit {
            assert_eq!(r.iterations, 1);
            assert_eq!(r.subproblems_remaining, 1); // the unbranched root
            let full = certify(
                &net,
                &region,
                &BabConfig {
                    norm: NormKind::One,
                    ..BabConfig::default()
                },
            )
            .unwrap();
            assert!(r.gub + 1e-9 >= full.gub);
        } else {
            // Root can be exact outright when the box decides every neuron.
            assert_eq!(r.status, BabStatus::Exact);
        }
    }

    #[test]
    fn iteration_limit_returns_valid_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(201);
        let net = random_net(&mut rng, &[2, 5, 5, 2]);
        let region = vec![iv(-1.0, 1.0), iv(-1.0, 1.0)];
        let full = certify(&net, &region, &config(NormKind::One)).unwrap();
        let cfg = BabConfig {
            norm: NormKind::One,
            max_iterations: 2,
            ..BabConfig::default()
        };
        let limited = certify(&net, &region, &cfg).unwrap();
        if limited.status == BabStatus::IterLimit {
            assert!(limited.iterations <= 2);
            assert!(limited.gub + 1e-9 >= full.gub);
            assert!(limited.subproblems_remaining > 0);
        }
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

    /// Children never exceed their parent's bound, including before the
    /// engine's clamp.
    #[test]
    fn child_bounds_shrink() {
        let mut rng = ChaCha8Rng::seed_from_u64(205);
        let cfg = config(NormKind::Inf);
        let mut branches = 0;
        while branches < 1000 {
            let net = random_net(&mut rng, &[2, 4, 4, 2]);
            let (mut root, _) =
                SubProblem::make_root(&net, &[iv(-1.0, 1.0), iv(-1.0, 1.0)], Mode::Local).unwrap();
            root.lin_prop(&net);
            fix_decided_states(&mut root, &net, &cfg.feasibility);
            root.set_lip_ub(pattern_upper_bound(
                &net,
                root.pattern(),
                cfg.norm,
                cfg.seed,
            ));
            let mut queue = vec![root];
            while let Some(sp) = queue.pop() {
                if sp.pattern().star_count() == 0 || branches >= 1000 {
                    continue;
                }
                let mut seq = 0;
                for child in branch(&sp, &net, &cfg, &mut seq) {
                    let raw = pattern_upper_bound(&net, child.pattern(), cfg.norm, cfg.seed);
                    assert!(raw <= sp.lip_ub() + 1e-9);
                    assert!(child.lip_ub() <= sp.lip_ub());
                    // Each branch decides at least the split neuron, so the
                    // tree depth is bounded by the neuron count.
                    assert!(child.pattern().star_count() < sp.pattern().star_count());
                    branches += 1;
                    queue.push(child);
                }
            }
        }
    }

    /// The gub trace never increases, the glb trace never decreases, and the
    /// two never cross.
    #[test]
    fn bounds_evolve_monotonically() {
        let mut rng = ChaCha8Rng::seed_from_u64(207);
        for _ in 0..10 {
            let net = random_net(&mut rng, &[2, 5, 4, 2]);
            let cfg = BabConfig {
                norm: NormKind::Inf,
                trace: true,
                ..BabConfig::default()
            };
            let r = certify(&net, &[iv(0.0, 1.0), iv(0.0, 1.0)], &cfg).unwrap();
            let trace = r.trace.unwrap();
            assert_eq!(trace.len() as u64, r.iterations);
            for w in trace.windows(2) {
                assert!(w[1].gub <= w[0].gub + 1e-9);
                assert!(w[1].glb + 1e-9 >= w[0].glb);
            }
            for row in &trace {
                assert!(row.glb <= row.gub + 1e-9);
            }
        }
    }

    #[test]
    fn determinism_across_runs() {
        let mut rng = ChaCha8Rng::seed_from_u64(209);
        let net = random_net(&mut rng, &[3, 6, 5, 2]);
        let region = vec![iv(0.0, 1.0); 3];
        let cfg = BabConfig {
            norm: NormKind::Two,
            trace: true,
            ..BabConfig::default()
        };
        let a = certify(&net, &region, &cfg).unwrap();
        let b = certify(&net, &region, &cfg).unwrap();
        assert_eq!(a.gub, b.gub);
        assert_eq!(a.glb, b.glb);
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.subproblems_created, b.subproblems_created);
        assert_eq!(a.trace, b.trace);
    }
}
