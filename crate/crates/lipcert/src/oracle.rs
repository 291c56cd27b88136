//! Ground-truth machinery for validating the engine on desk-size networks.
//!
//! [`enumerate_regions`] splits every undecided neuron both ways with no
//! bounding or filtering, so it visits every feasible fully-decided
//! activation pattern: the complete set of linear regions the network
//! realizes over a box. Its maximum Jacobian norm is the exact Lipschitz
//! constant, independently of the engine's heap, bounding, and interval
//! machinery. [`sample_lower_bound`] is the cruder cousin: the best Jacobian
//! norm among random differentiable points, always a valid lower bound.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::feasibility::{feasible, feasible_with, Feasibility, FeasibilityConfig};
use crate::interval::Interval;
use crate::matrix::RealMatrix;
use crate::network::{ActivationPattern, Network};
use crate::norm::{op_norm_or_fallback, NormKind, DEFAULT_SPECTRAL_SEED};
use crate::subproblem::{HalfSpace, Sense, SubProblem};

/// Enumeration refuses networks with more hidden neurons than this; the
/// region count grows exponentially.
pub const MAX_ORACLE_NEURONS: usize = 20;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("network has {neurons} hidden neurons, enumeration is capped at {limit}")]
    TooLarge { neurons: usize, limit: usize },
}

/// One feasible linear region of the network over the box.
#[derive(Debug, Clone)]
pub struct Region {
    /// The fully-decided activation pattern of the region.
    pub pattern: ActivationPattern,
    /// A point strictly inside the region.
    pub witness: Vec<f64>,
    /// The Jacobian shared by all points of the region.
    pub jacobian: RealMatrix,
}

/// Every feasible linear region of a network over a box.
#[derive(Debug, Clone, Default)]
pub struct RegionCatalog {
    regions: Vec<Region>,
}

impl RegionCatalog {
    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Region> {
        self.regions.iter()
    }

    /// The exact Lipschitz constant for `norm`: the largest Jacobian norm
    /// over all regions.
    pub fn max_norm(&self, norm: NormKind) -> f64 {
        self.regions
            .iter()
            .map(|r| op_norm_or_fallback(&r.jacobian, norm, 0))
            .fold(0.0, f64::max)
    }
}

/// Exhaustively enumerates the feasible linear regions of `net` over
/// `region` by unpruned splitting.
pub fn enumerate_regions(
    net: &Network,
    region: &[Interval],
    cfg: &FeasibilityConfig,
) -> Result<RegionCatalog, OracleError> {
    let neurons = net.num_hidden_neurons();
    if neurons > MAX_ORACLE_NEURONS {
        return Err(OracleError::TooLarge {
            neurons,
            limit: MAX_ORACLE_NEURONS,
        });
    }

    let mut root = SubProblem::all_star_over_box(net, region)
        .expect("oracle region must match the input dimension");
    root.lin_prop(net);

    let mut catalog = RegionCatalog::default();
    let mut stack = vec![root];
    while let Some(sp) = stack.pop() {
        match sp.pattern().first_star() {
            None => {
                let witness = match feasible(sp.constraints(), cfg) {
                    Feasibility::Feasible(w) => w.point,
                    // Unreachable in practice: children are only pushed for
                    // feasible sides.
                    Feasibility::Infeasible => continue,
                };
                let jacobian = net
                    .jacobian_of_pattern(sp.pattern())
                    .expect("pattern fully decided");
                catalog.regions.push(Region {
                    pattern: sp.pattern().clone(),
                    witness,
                    jacobian,
                });
            }
            Some((layer, neuron)) => {
                let form = sp
                    .pre_activation_forms(layer)
                    .expect("propagation reached the star layer")[neuron]
                    .clone();
                let mut any = false;
                for sense in [Sense::StrictNeg, Sense::StrictPos] {
                    if feasible_with(sp.constraints(), Some((&form, sense)), cfg).is_feasible() {
                        any = true;
                        let mut child = sp.child(
                            layer,
                            neuron,
                            sense,
                            Some(HalfSpace::new(form.clone(), sense)),
                            0,
                        );
                        child.lin_prop(net);
                        stack.push(child);
                    }
                }
                if !any {
                    // Pre-activation pinned within eps of zero on the whole
                    // region; it transmits nothing, same as the engine's
                    // filter.
                    let mut child = sp.child(layer, neuron, Sense::StrictNeg, None, 0);
                    child.lin_prop(net);
                    stack.push(child);
                }
            }
        }
    }
    debug_assert!(pairwise_distinct(&catalog));
    Ok(catalog)
}

fn pairwise_distinct(catalog: &RegionCatalog) -> bool {
    for (i, a) in catalog.regions.iter().enumerate() {
        for b in &catalog.regions[i + 1..] {
            if a.pattern == b.pattern {
                return false;
            }
        }
    }
    true
}

/// Best Jacobian norm among `n` uniform samples from the box; points landing
/// on activation boundaries are skipped. Deterministic for a fixed seed.
pub fn sample_lower_bound(
    net: &Network,
    region: &[Interval],
    n: usize,
    norm: NormKind,
    seed: u64,
) -> f64 {
    assert!(n >= 1, "at least one sample required");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0_f64;
    for _ in 0..n {
        let x: Vec<f64> = region
            .iter()
            .map(|iv| {
                if iv.width() == 0.0 {
                    iv.lo()
                } else {
                    rng.gen_range(iv.lo()..=iv.hi())
                }
            })
            .collect();
        let (pattern, differentiable) = net.activation_at(&x).expect("sample matches input dim");
        if !differentiable {
            continue;
        }
        let jac = net.jacobian_of_pattern(&pattern).expect("decided pattern");
        best = best.max(op_norm_or_fallback(&jac, norm, DEFAULT_SPECTRAL_SEED));
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NeuronState;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi)
    }

    fn cfg() -> FeasibilityConfig {
        FeasibilityConfig::default()
    }

    fn relu_net() -> Network {
        Network::new(vec![
            (RealMatrix::from_rows(vec![vec![1.0]]), vec![0.0]),
            (RealMatrix::from_rows(vec![vec![1.0]]), vec![0.0]),
        ])
        .unwrap()
    }

    #[test]
    fn relu_has_two_regions() {
        let catalog = enumerate_regions(&relu_net(), &[iv(-1.0, 1.0)], &cfg()).unwrap();
        assert_eq!(catalog.len(), 2);
        let mut norms: Vec<f64> = catalog
            .iter()
            .map(|r| op_norm_or_fallback(&r.jacobian, NormKind::Inf, 0))
            .collect();
        norms.sort_by(f64::total_cmp);
        assert_eq!(norms, vec![0.0, 1.0]);
        assert_eq!(catalog.max_norm(NormKind::Inf), 1.0);
    }

    #[test]
    fn linear_layer_is_one_region() {
        let net = Network::new(vec![(
            RealMatrix::from_rows(vec![vec![1.0, -2.0], vec![3.0, 4.0]]),
            vec![0.0, 0.0],
        )])
        .unwrap();
        let catalog = enumerate_regions(&net, &[iv(0.0, 1.0), iv(0.0, 1.0)], &cfg()).unwrap();
        assert_eq!(catalog.len(), 1);
        assert_eq!(catalog.max_norm(NormKind::One), 6.0);
    }

    #[test]
    fn opposed_paths_give_two_unit_regions() {
        let net = Network::new(vec![
            (
                RealMatrix::from_rows(vec![vec![1.0], vec![-1.0]]),
                vec![0.0, 0.0],
            ),
            (RealMatrix::from_rows(vec![vec![1.0, 1.0]]), vec![0.0]),
        ])
        .unwrap();
        let catalog = enumerate_regions(&net, &[iv(-1.0, 1.0)], &cfg()).unwrap();
        assert_eq!(catalog.len(), 2);
        for r in catalog.iter() {
            assert!((op_norm_or_fallback(&r.jacobian, NormKind::One, 0) - 1.0).abs() < 1e-12);
            // Witness satisfies the pattern's sign constraints.
            let (at, _) = net.activation_at(&r.witness).unwrap();
            for l in 0..net.num_hidden_layers() {
                for i in 0..net.layer(l).size() {
                    if at.state(l, i) != NeuronState::Star {
                        assert_eq!(at.state(l, i), r.pattern.state(l, i));
                    }
                }
            }
        }
        let patterns: Vec<_> = catalog.iter().map(|r| r.pattern.clone()).collect();
        assert_ne!(patterns[0], patterns[1]);
    }

    #[test]
    fn size_guard_trips() {
        let wide = Network::new(vec![
            (
                RealMatrix::from_rows((0..25).map(|_| vec![1.0]).collect()),
                vec![0.0; 25],
            ),
            (RealMatrix::from_rows(vec![vec![1.0; 25]]), vec![0.0]),
        ])
        .unwrap();
        assert!(matches!(
            enumerate_regions(&wide, &[iv(0.0, 1.0)], &cfg()),
            Err(OracleError::TooLarge { neurons: 25, .. })
        ));
    }

    #[test]
    fn sampler_on_linear_layer_is_exact() {
        let net = Network::new(vec![(
            RealMatrix::from_rows(vec![vec![1.0, -2.0], vec![3.0, 4.0]]),
            vec![0.0, 0.0],
        )])
        .unwrap();
        let region = vec![iv(0.0, 1.0), iv(0.0, 1.0)];
        for kind in [NormKind::One, NormKind::Two, NormKind::Inf, NormKind::Fro] {
            let want = op_norm_or_fallback(net.layer(0).weights(), kind, 0);
            assert_eq!(sample_lower_bound(&net, &region, 3, kind, 9), want);
        }
    }

    #[test]
    fn sampler_finds_the_active_region() {
        let got = sample_lower_bound(&relu_net(), &[iv(-1.0, 1.0)], 100, NormKind::Inf, 4);
        assert_eq!(got, 1.0);
    }

    #[test]
    fn sampler_never_beats_enumeration() {
        use rand::{Rng, SeedableRng};
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(301);
        for trial in 0..20 {
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
            let catalog = enumerate_regions(&net, &region, &cfg()).unwrap();
            for kind in [NormKind::One, NormKind::Inf] {
                let sampled = sample_lower_bound(&net, &region, 200, kind, trial);
                assert!(sampled <= catalog.max_norm(kind) + 1e-9);
            }
        }
    }
}
