//! Acceptance suite: one test per criterion, each printing a pass line.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

mod support;

use std::sync::LazyLock;
use std::time::{Duration, Instant};

use lipcert::{
    certify, enumerate_regions, naive_ibp, op_norm, sym_prop, BabConfig, BabStatus,
    FeasibilityConfig, Interval, Mode, Network, NormKind, RealMatrix,
};
use rand::Rng;
use support::{close_rel, random_box, random_net, random_point, random_shape, rng, unit_box};

const NORMS: [NormKind; 3] = [NormKind::One, NormKind::Two, NormKind::Inf];

fn pass(n: usize, name: &str) {
    println!("acceptance criterion {n} ({name}): PASS");
}

struct ExactnessRun {
    shape: [usize; 4],
    region_count: usize,
    /// Per norm: engine bound, oracle maximum, nodes created.
    per_norm: Vec<(NormKind, f64, f64, u64)>,
}

/// Shared by criteria 1 and 6: fifty random networks, each solved exactly
/// for every norm and enumerated by the oracle.
static EXACTNESS_RUNS: LazyLock<Vec<ExactnessRun>> = LazyLock::new(|| {
    let mut rng = rng(0xACCE01);
    (0..50)
        .map(|_| {
            let shape = random_shape(&mut rng);
            let net = random_net(&mut rng, &shape);
            let region = unit_box(shape[0]);
            let catalog = enumerate_regions(&net, &region, &FeasibilityConfig::default())
                .expect("acceptance shapes fit the oracle guard");
            let per_norm = NORMS
                .iter()
                .map(|&norm| {
                    let cfg = BabConfig {
                        norm,
                        ..BabConfig::default()
                    };
                    let result = certify(&net, &region, &cfg).unwrap();
                    assert_eq!(result.status, BabStatus::Exact, "k=1 must converge");
                    (
                        norm,
                        result.gub,
                        catalog.max_norm(norm),
                        result.subproblems_created,
                    )
                })
                .collect();
            ExactnessRun {
                shape,
                region_count: catalog.len(),
                per_norm,
            }
        })
        .collect()
});

#[test]
fn criterion_1_exactness_vs_oracle() {
    let start = Instant::now();
    for run in EXACTNESS_RUNS.iter() {
        for (norm, gub, oracle, _) in &run.per_norm {
            assert!(
                close_rel(*gub, *oracle, 1e-6),
                "shape {:?} p={norm}: engine {gub} vs oracle {oracle}",
                run.shape
            );
        }
    }
    assert!(
        start.elapsed() < Duration::from_secs(300),
        "exactness sweep exceeded five minutes"
    );
    pass(1, "exactness vs oracle");
}

#[test]
fn criterion_2_anytime_soundness() {
    let mut rng = rng(0xACCE02);
    for trial in 0..20 {
        let shape = random_shape(&mut rng);
        let net = random_net(&mut rng, &shape);
        let region = unit_box(shape[0]);
        let norm = NORMS[trial % 3];
        let cfg = BabConfig {
            norm,
            trace: true,
            ..BabConfig::default()
        };
        let result = certify(&net, &region, &cfg).unwrap();
        let trace = result.trace.as_ref().unwrap();

        // Largest sampled Jacobian norm over a thousand differentiable
        // points: a floor every iteration's gub must clear.
        let mut sampled_norms = Vec::with_capacity(1000);
        let mut attempts = 0;
        while sampled_norms.len() < 1000 && attempts < 20_000 {
            attempts += 1;
            let x = random_point(&mut rng, &region);
            let (pattern, differentiable) = net.activation_at(&x).unwrap();
            if !differentiable {
                continue;
            }
            let jac = net.jacobian_of_pattern(&pattern).unwrap();
            sampled_norms.push(op_norm(&jac, norm).unwrap());
        }
        assert_eq!(sampled_norms.len(), 1000);
        let max_sampled = sampled_norms.iter().fold(0.0_f64, |a, &b| a.max(b));

        for row in trace {
            assert!(
                row.gub + 1e-9 >= max_sampled,
                "iteration {}: gub {} below sampled norm {max_sampled}",
                row.iteration,
                row.gub
            );
            assert!(row.glb <= row.gub + 1e-9, "glb crossed gub");
        }
        for w in trace.windows(2) {
            assert!(w[1].gub <= w[0].gub + 1e-9, "gub increased");
            assert!(w[1].glb + 1e-9 >= w[0].glb, "glb decreased");
        }
    }
    pass(2, "anytime soundness");
}

#[test]
fn criterion_3_k_approximation_contract() {
    let mut rng = rng(0xACCE03);
    for k in [2.0, 1.5] {
        for _ in 0..10 {
            let shape = random_shape(&mut rng);
            let net = random_net(&mut rng, &shape);
            let region = unit_box(shape[0]);
            let cfg = BabConfig {
                norm: NormKind::Two,
                approx_factor: k,
                ..BabConfig::default()
            };
            let result = certify(&net, &region, &cfg).unwrap();
            assert!(
                matches!(result.status, BabStatus::Exact | BabStatus::KApprox),
                "k={k}: unexpected status {:?}",
                result.status
            );
            assert!(
                result.gub <= k * result.glb + 1e-9,
                "k={k}: gub {} exceeds k * glb {}",
                result.gub,
                k * result.glb
            );
        }
    }
    pass(3, "k-approximation contract");
}

#[test]
fn criterion_4_closed_form_linear_layers() {
    let mut rng = rng(0xACCE04);
    let mut matrices = vec![RealMatrix::from_rows(vec![vec![1.0, -2.0], vec![3.0, 4.0]])];
    for _ in 0..10 {
        let rows = rng.gen_range(1..5);
        let cols = rng.gen_range(1..5);
        matrices.push(RealMatrix::from_rows(
            (0..rows)
                .map(|_| (0..cols).map(|_| rng.gen_range(-3.0..3.0)).collect())
                .collect(),
        ));
    }

    for w in &matrices {
        let net = Network::new(vec![(w.clone(), vec![0.0; w.rows()])]).unwrap();
        let region = unit_box(w.cols());

        // p = 1 and p = inf reproduce the column/row sums bit for bit.
        let mut col_sums = vec![0.0_f64; w.cols()];
        for j in 0..w.cols() {
            for i in 0..w.rows() {
                col_sums[j] += w.get(i, j).abs();
            }
        }
        let expected_one = col_sums.iter().copied().fold(0.0_f64, f64::max);
        let mut expected_inf = 0.0_f64;
        for i in 0..w.rows() {
            expected_inf = expected_inf.max(w.row(i).iter().map(|x| x.abs()).sum());
        }
        for (norm, expected) in [(NormKind::One, expected_one), (NormKind::Inf, expected_inf)] {
            let cfg = BabConfig {
                norm,
                ..BabConfig::default()
            };
            let result = certify(&net, &region, &cfg).unwrap();
            assert_eq!(result.gub, expected, "p={norm} not bit-equal");
            assert_eq!(result.glb, expected);
            assert_eq!(result.status, BabStatus::Exact);
        }

        // p = 2 against an independent symmetric-eigenvalue oracle.
        let a = nalgebra::DMatrix::from_fn(w.rows(), w.cols(), |i, j| w.get(i, j));
        let expected_two = (a.transpose() * &a)
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(0.0_f64, |m, &v| m.max(v))
            .max(0.0)
            .sqrt();
        let cfg = BabConfig {
            norm: NormKind::Two,
            ..BabConfig::default()
        };
        let result = certify(&net, &region, &cfg).unwrap();
        assert!(
            (result.gub - expected_two).abs() <= 1e-8,
            "p=2: engine {} vs eigen oracle {expected_two}",
            result.gub
        );
    }
    pass(4, "closed-form linear layers");
}

#[test]
fn criterion_5_symbolic_tightness() {
    let mut rng = rng(0xACCE05);
    for _ in 0..50 {
        let shape = random_shape(&mut rng);
        let net = random_net(&mut rng, &shape);
        let region = random_box(&mut rng, shape[0], 1.0);
        let sym = sym_prop(&net, &region);
        let ibp = naive_ibp(&net, &region);
        for (s, n) in sym.output_bounds.iter().zip(&ibp.output_bounds) {
            assert!(
                s.width() <= n.width() + 1e-9,
                "symbolic width {} above naive {}",
                s.width(),
                n.width()
            );
        }
    }

    // The cancellation network: hidden (x, x), output difference. Symbolic
    // propagation sees the two paths cancel; intervals cannot.
    let net = Network::new(vec![
        (
            RealMatrix::from_rows(vec![vec![1.0], vec![1.0]]),
            vec![0.0, 0.0],
        ),
        (RealMatrix::from_rows(vec![vec![1.0, -1.0]]), vec![0.0]),
    ])
    .unwrap();
    let region = vec![Interval::new(0.1, 1.0)];
    let sym = sym_prop(&net, &region);
    let ibp = naive_ibp(&net, &region);
    assert_eq!(sym.output_bounds[0], Interval::new(0.0, 0.0));
    assert!((ibp.output_bounds[0].lo() - -0.9).abs() < 1e-12);
    assert!((ibp.output_bounds[0].hi() - 0.9).abs() < 1e-12);
    assert!(sym.output_bounds[0].width() < ibp.output_bounds[0].width());
    pass(5, "symbolic propagation tightness");
}

#[test]
fn criterion_6_subproblem_budget() {
    for run in EXACTNESS_RUNS.iter() {
        let budget = 2 * run.region_count as u64 - 1;
        for (norm, _, _, created) in &run.per_norm {
            assert!(
                *created <= budget,
                "shape {:?} p={norm}: created {created} nodes, budget {budget} (p = {})",
                run.shape,
                run.region_count
            );
        }
    }
    pass(6, "subproblem budget 2p-1");
}

#[test]
fn criterion_7_global_dominates_local() {
    let mut rng = rng(0xACCE07);
    for trial in 0..20 {
        // Small shapes: global enumeration covers the whole arrangement.
        let shape = [
            rng.gen_range(2..=3),
            rng.gen_range(3..=5),
            rng.gen_range(3..=4),
            rng.gen_range(1..=2),
        ];
        let net = random_net(&mut rng, &shape);
        let norm = NORMS[trial % 3];
        let feas = FeasibilityConfig::default();

        let local_region = random_box(&mut rng, shape[0], 1.0);
        let local = certify(
            &net,
            &local_region,
            &BabConfig {
                norm,
                ..BabConfig::default()
            },
        )
        .unwrap();
        let global = certify(
            &net,
            &[],
            &BabConfig {
                norm,
                mode: Mode::Global,
                ..BabConfig::default()
            },
        )
        .unwrap();
        assert!(
            global.gub + 1e-9 >= local.gub,
            "global {} below local {}",
            global.gub,
            local.gub
        );

        let big_box = vec![Interval::new(-feas.big_m, feas.big_m); shape[0]];
        let catalog = enumerate_regions(&net, &big_box, &feas).unwrap();
        assert!(
            close_rel(global.gub, catalog.max_norm(norm), 1e-6),
            "global {} vs big-box oracle {}",
            global.gub,
            catalog.max_norm(norm)
        );
    }
    pass(7, "global dominates local");
}

#[test]
fn criterion_8_desk_scale_performance() {
    let mut rng = rng(0xACCE08);
    let net = random_net(&mut rng, &[4, 5, 5, 3]);
    let region = unit_box(4);
    let start = Instant::now();
    let result = certify(
        &net,
        &region,
        &BabConfig {
            norm: NormKind::Two,
            ..BabConfig::default()
        },
    )
    .unwrap();
    let elapsed = start.elapsed();
    assert_eq!(result.status, BabStatus::Exact);
    assert!(
        elapsed < Duration::from_secs(10),
        "took {elapsed:?}, budget 10s"
    );
    pass(8, "desk-scale performance");
}

#[test]
fn criterion_9_determinism() {
    let mut rng = rng(0xACCE09);
    let net = random_net(&mut rng, &[3, 6, 5, 2]);
    let region = unit_box(3);
    let cfg = BabConfig {
        norm: NormKind::Two,
        trace: true,
        seed: 7,
        ..BabConfig::default()
    };
    let a = certify(&net, &region, &cfg).unwrap();
    let b = certify(&net, &region, &cfg).unwrap();
    assert_eq!(a.gub.to_bits(), b.gub.to_bits());
    assert_eq!(a.glb.to_bits(), b.glb.to_bits());
    assert_eq!(a.iterations, b.iterations);
    assert_eq!(a.subproblems_created, b.subproblems_created);
    assert_eq!(a.trace, b.trace);
    pass(9, "determinism");
}
