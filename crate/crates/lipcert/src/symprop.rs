//! Symbolic forward propagation and the naive interval baseline.
//!
//! Both walks compute pre-activation bounds per hidden neuron and output
//! bounds for a box of inputs. The naive walk propagates intervals directly
//! and suffers the dependency problem: repeated occurrences of a variable are
//! bounded independently, so `x - x` is as wide as `2x`. The symbolic walk
//! keeps one affine expression per neuron instead, carrying dependencies
//! through active neurons, zeroing inactive ones, and introducing a fresh
//! variable with range `[0, upper]` where the sign is undecided. Bounds only
//! get concretized at sign tests and at the output layer.

use crate::affine::{AffineForm, VarBounds, VarId};
use crate::interval::Interval;
use crate::network::{ActivationPattern, Network, NeuronState};

/// Result of a symbolic propagation pass.
#[derive(Debug, Clone)]
pub struct SymPropResult {
    /// Initial activation pattern: the sign of each hidden neuron over the
    /// box, or star where both signs occur.
    pub pattern: ActivationPattern,
    /// Pre-activation bounds per hidden layer and neuron.
    pub pre_activation_bounds: Vec<Vec<Interval>>,
    /// Bounds on each network output over the box.
    pub output_bounds: Vec<Interval>,
    /// Bounds for every variable the expressions mention: the input box plus
    /// the ranges of introduced star variables.
    pub var_bounds: VarBounds,
}

/// Runs symbolic propagation over `region` (one interval per input).
///
/// A neuron is marked active only when its lower bound is strictly positive
/// and inactive only when its upper bound is strictly negative; bounds that
/// touch zero yield a star, the conservative reading of the sign tests.
///
/// Panics if `region` does not match the network's input dimension.
pub fn sym_prop(net: &Network, region: &[Interval]) -> SymPropResult {
    assert_eq!(
        region.len(),
        net.input_dim(),
        "region dimension must match network input dimension"
    );

    let mut var_bounds = VarBounds::from_box(region);
    let mut outputs: Vec<AffineForm> = (0..net.input_dim())
        .map(|i| AffineForm::variable(VarId::Input(i)))
        .collect();
    let mut states = Vec::with_capacity(net.num_hidden_layers());
    let mut pre_bounds = Vec::with_capacity(net.num_hidden_layers());

    for l in 0..net.num_hidden_layers() {
        let layer = net.layer(l);
        let mut layer_states = Vec::with_capacity(layer.size());
        let mut layer_bounds = Vec::with_capacity(layer.size());
        let mut next_outputs = Vec::with_capacity(layer.size());
        for i in 0..layer.size() {
            let ze = AffineForm::combine(layer.weights().row(i), &outputs, layer.bias()[i]);
            let iv = ze
                .bounds(&var_bounds)
                .expect("propagated forms only mention bounded variables");
            layer_bounds.push(iv);
            if iv.lo() > 0.0 {
                layer_states.push(NeuronState::Active);
                next_outputs.push(ze);
            } else if iv.hi() < 0.0 {
                layer_states.push(NeuronState::Inactive);
                next_outputs.push(AffineForm::constant(0.0));
            } else {
                let id = VarId::Star {
                    layer: l,
                    neuron: i,
                };
                var_bounds.insert(id, Interval::new(0.0, iv.hi()));
                layer_states.push(NeuronState::Star);
                next_outputs.push(AffineForm::variable(id));
            }
        }
        states.push(layer_states);
        pre_bounds.push(layer_bounds);
        outputs = next_outputs;
    }

    let last = net.layer(net.num_layers() - 1);
    let output_bounds = (0..last.size())
        .map(|i| {
            AffineForm::combine(last.weights().row(i), &outputs, last.bias()[i])
                .bounds(&var_bounds)
                .expect("propagated forms only mention bounded variables")
        })
        .collect();

    SymPropResult {
        pattern: ActivationPattern::from_states(states),
        pre_activation_bounds: pre_bounds,
        output_bounds,
        var_bounds,
    }
}

/// Bounds from plain interval propagation.
#[derive(Debug, Clone)]
pub struct IbpBounds {
    /// Pre-activation bounds per hidden layer and neuron.
    pub pre_activation_bounds: Vec<Vec<Interval>>,
    /// Bounds on each network output.
    pub output_bounds: Vec<Interval>,
}

/// Naive interval bound propagation: each layer's input intervals are pushed
/// through the weights and rectified independently.
///
/// Panics if `region` does not match the network's input dimension.
pub fn naive_ibp(net: &Network, region: &[Interval]) -> IbpBounds {
    assert_eq!(
        region.len(),
        net.input_dim(),
        "region dimension must match network input dimension"
    );

    let mut cur: Vec<Interval> = region.to_vec();
    let mut pre_bounds = Vec::with_capacity(net.num_hidden_layers());
    for l in 0..net.num_layers() {
        let layer = net.layer(l);
        let z: Vec<Interval> = (0..layer.size())
            .map(|i| {
                layer
                    .weights()
                    .row(i)
                    .iter()
                    .zip(&cur)
                    .fold(Interval::point(layer.bias()[i]), |acc, (w, iv)| {
                        acc + iv.scale(*w)
                    })
            })
            .collect();
        if l + 1 == net.num_layers() {
            return IbpBounds {
                pre_activation_bounds: pre_bounds,
                output_bounds: z,
            };
        }
        cur = z.iter().map(Interval::relu).collect();
        pre_bounds.push(z);
    }
    unreachable!("networks have at least one layer")
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

    /// Hidden layer computes (x, -x); output is their rectified sum, which is
    /// identically x on positive boxes. Symbolic cancellation sees that.
    fn cancellation_net() -> Network {
        Network::new(vec![
            (
                RealMatrix::from_rows(vec![vec![1.0], vec![1.0]]),
                vec![0.0, 0.0],
            ),
            (RealMatrix::from_rows(vec![vec![1.0, -1.0]]), vec![0.0]),
        ])
        .unwrap()
    }

    fn relu_net() -> Network {
        Network::new(vec![
            (RealMatrix::from_rows(vec![vec![1.0]]), vec![0.0]),
            (RealMatrix::from_rows(vec![vec![1.0]]), vec![0.0]),
        ])
        .unwrap()
    }

    #[test]
    fn sign_tests_decide_states() {
        let net = Network::new(vec![
            (
                RealMatrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]),
                vec![0.5, -2.0],
            ),
            (RealMatrix::from_rows(vec![vec![1.0, 1.0]]), vec![0.0]),
        ])
        .unwrap();
        let r = sym_prop(&net, &[iv(0.0, 1.0), iv(0.0, 1.0)]);
        assert_eq!(r.pre_activation_bounds[0][0], iv(0.5, 1.5));
        assert_eq!(r.pattern.state(0, 0), NeuronState::Active);
        assert_eq!(r.pre_activation_bounds[0][1], iv(-2.0, -1.0));
        assert_eq!(r.pattern.state(0, 1), NeuronState::Inactive);
    }

    #[test]
    fn symbolic_cancellation_is_exact() {
        let r = sym_prop(&cancellation_net(), &[iv(0.1, 1.0)]);
        assert_eq!(r.pattern.state(0, 0), NeuronState::Active);
        assert_eq!(r.pattern.state(0, 1), NeuronState::Active);
        assert_eq!(r.output_bounds[0], iv(0.0, 0.0));
    }

    #[test]
    fn star_variable_gets_clamped_range() {
        let r = sym_prop(&relu_net(), &[iv(-1.0, 1.0)]);
        assert_eq!(r.pattern.state(0, 0), NeuronState::Star);
        assert_eq!(
            r.var_bounds.get(VarId::Star {
                layer: 0,
                neuron: 0
            }),
            Some(iv(0.0, 1.0))
        );
        assert_eq!(r.output_bounds[0], iv(0.0, 1.0));
    }

    #[test]
    fn naive_ibp_examples() {
        let r = naive_ibp(&cancellation_net(), &[iv(0.1, 1.0)]);
        assert!((r.output_bounds[0].lo() - -0.9).abs() < 1e-12);
        assert!((r.output_bounds[0].hi() - 0.9).abs() < 1e-12);

        let one = Network::new(vec![(RealMatrix::from_rows(vec![vec![2.0]]), vec![1.0])]).unwrap();
        assert_eq!(
            naive_ibp(&one, &[iv(0.0, 1.0)]).output_bounds[0],
            iv(1.0, 3.0)
        );

        let zero = Network::new(vec![
            (RealMatrix::from_rows(vec![vec![0.0]]), vec![0.7]),
            (RealMatrix::from_rows(vec![vec![0.0]]), vec![-1.3]),
        ])
        .unwrap();
        assert_eq!(
            naive_ibp(&zero, &[iv(-5.0, 5.0)]).output_bounds[0],
            iv(-1.3, -1.3)
        );
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

    fn random_box(rng: &mut ChaCha8Rng, dim: usize) -> Vec<Interval> {
        (0..dim)
            .map(|_| {
                let a: f64 = rng.gen_range(-1.0..1.0);
                let b: f64 = rng.gen_range(-1.0..1.0);
                iv(a.min(b), a.max(b))
            })
            .collect()
    }

    /// Sampled outputs land inside both bound flavors; decided states match
    /// the true pre-activation signs.
    #[test]
    fn soundness_over_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        for _ in 0..10 {
            let net = random_net(&mut rng, &[2, 5, 4, 2]);
            let region = random_box(&mut rng, 2);
            let sym = sym_prop(&net, &region);
            let ibp = naive_ibp(&net, &region);
            for _ in 0..100 {
                let x: Vec<f64> = region
                    .iter()
                    .map(|iv| rng.gen_range(iv.lo()..=iv.hi()))
                    .collect();
                let y = net.forward(&x).unwrap();
                for (o, (s, n)) in y
                    .iter()
                    .zip(sym.output_bounds.iter().zip(&ibp.output_bounds))
                {
                    assert!(
                        *o >= s.lo() - 1e-9 && *o <= s.hi() + 1e-9,
                        "{o} outside {s}"
                    );
                    assert!(
                        *o >= n.lo() - 1e-9 && *o <= n.hi() + 1e-9,
                        "{o} outside {n}"
                    );
                }
                let pre = net.pre_activations(&x).unwrap();
                for l in 0..net.num_hidden_layers() {
                    for i in 0..net.layer(l).size() {
                        match sym.pattern.state(l, i) {
                            NeuronState::Active => assert!(pre[l][i] > -1e-9),
                            NeuronState::Inactive => assert!(pre[l][i] < 1e-9),
                            NeuronState::Star => {}
                        }
                    }
                }
            }
        }
    }

    /// Symbolic output bounds are never wider than the naive ones.
    #[test]
    fn symbolic_tighter_than_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(57);
        for _ in 0..50 {
            let net = random_net(&mut rng, &[3, 6, 5, 2]);
            let region = random_box(&mut rng, 3);
            let sym = sym_prop(&net, &region);
            let ibp = naive_ibp(&net, &region);
            for (s, n) in sym.output_bounds.iter().zip(&ibp.output_bounds) {
                assert!(s.width() <= n.width() + 1e-9);
            }
        }
    }

    /// Neurons the symbolic pass decides really are one-sided: every linear
    /// region found by exhaustive enumeration agrees with the decided state,
    /// so the star set can only over-approximate the truly undecided set.
    #[test]
    fn stars_cover_all_truly_undecided_neurons() {
        use crate::feasibility::FeasibilityConfig;
        use crate::oracle::enumerate_regions;
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..15 {
            let net = random_net(&mut rng, &[2, 4, 3, 1]);
            let region = random_box(&mut rng, 2);
            let sym = sym_prop(&net, &region);
            let catalog = enumerate_regions(&net, &region, &FeasibilityConfig::default()).unwrap();
            for l in 0..net.num_hidden_layers() {
                for i in 0..net.layer(l).size() {
                    let state = sym.pattern.state(l, i);
                    if state == NeuronState::Star {
                        continue;
                    }
                    for r in catalog.iter() {
                        assert_eq!(
                            r.pattern.state(l, i),
                            state,
                            "neuron ({l},{i}) decided {state:?} but a region disagrees"
                        );
                    }
                }
            }
        }
    }

    /// Pattern states agree with the computed bounds by construction.
    #[test]
    fn pattern_agrees_with_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        for _ in 0..50 {
            let net = random_net(&mut rng, &[2, 6, 6, 2]);
            let region = random_box(&mut rng, 2);
            let r = sym_prop(&net, &region);
            for l in 0..net.num_hidden_layers() {
                for i in 0..net.layer(l).size() {
                    let b = r.pre_activation_bounds[l][i];
                    match r.pattern.state(l, i) {
                        NeuronState::Active => assert!(b.lo() > 0.0),
                        NeuronState::Inactive => assert!(b.hi() < 0.0),
                        NeuronState::Star => assert!(b.lo() <= 0.0 && b.hi() >= 0.0),
                    }
                }
            }
        }
    }
}
