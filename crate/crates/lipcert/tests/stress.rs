//! Slow randomized differential testing against the enumeration oracle.
//!
//! Ignored by default; run explicitly with
//! `cargo test --test stress --release -- --ignored`.

mod support;

use lipcert::{
    certify, enumerate_regions, sample_lower_bound, BabConfig, BabStatus, FeasibilityConfig,
    Interval, Mode, Network, NormKind, RealMatrix,
};
use rand::Rng;
use support::{close_rel, random_net, rng};

const ALL_NORMS: [NormKind; 4] = [NormKind::One, NormKind::Two, NormKind::Inf, NormKind::Fro];

fn varied_box(r: &mut rand_chacha::ChaCha8Rng, dim: usize) -> Vec<Interval> {
    let style = r.gen_range(0..5);
    (0..dim)
        .map(|i| match style {
            0 => Interval::new(0.0, 1.0),
            1 => Interval::new(-1.5, -0.5),
            2 => {
                let a: f64 = r.gen_range(-2.0..2.0);
                let b: f64 = r.gen_range(-2.0..2.0);
                Interval::new(a.min(b), a.max(b))
            }
            // One pinned coordinate: a face of a box is still a valid domain.
            3 if i == 0 => Interval::point(r.gen_range(-1.0..1.0)),
            3 => Interval::new(-1.0, 1.0),
            _ => {
                let c: f64 = r.gen_range(-1.0..1.0);
                Interval::new(c, c + 1e-3)
            }
        })
        .collect()
}

fn varied_net(r: &mut rand_chacha::ChaCha8Rng) -> Network {
    let depth = r.gen_range(1..=4);
    let mut shape = vec![r.gen_range(1..=4)];
    for _ in 0..depth.min(3) {
        shape.push(r.gen_range(1..=6));
    }
    shape.push(r.gen_range(1..=3));
    let scale = [0.5, 1.0, 3.0][r.gen_range(0..3)];
    let zero_bias = r.gen_bool(0.25);
    Network::new(
        shape
            .windows(2)
            .map(|w| {
                (
                    RealMatrix::from_rows(
                        (0..w[1])
                            .map(|_| (0..w[0]).map(|_| r.gen_range(-scale..scale)).collect())
                            .collect(),
                    ),
                    (0..w[1])
                        .map(|_| if zero_bias { 0.0 } else { r.gen_range(-0.5..0.5) })
                        .collect(),
                )
            })
            .collect(),
    )
    .unwrap()
}

#[test]
#[ignore = "slow randomized sweep; run with --ignored"]
fn local_mode_matches_oracle_everywhere() {
    let mut r = rng(0x57BE55);
    for trial in 0..300 {
        let net = varied_net(&mut r);
        if net.num_hidden_neurons() > 18 {
            continue;
        }
        let region = varied_box(&mut r, net.input_dim());
        let catalog = enumerate_regions(&net, &region, &FeasibilityConfig::default()).unwrap();
        let norm = ALL_NORMS[trial % 4];
        let result = certify(
            &net,
            &region,
            &BabConfig {
                norm,
                ..BabConfig::default()
            },
        )
        .unwrap();
        let oracle = catalog.max_norm(norm);
        assert_eq!(result.status, BabStatus::Exact, "trial {trial}");
        assert!(
            close_rel(result.gub, oracle, 1e-6),
            "trial {trial} p={norm}: engine {} vs oracle {oracle} ({} regions)",
            result.gub,
            catalog.len()
        );
        assert!(result.subproblems_created <= 2 * catalog.len() as u64 - 1);
        let sampled = sample_lower_bound(&net, &region, 200, norm, trial as u64);
        assert!(sampled <= result.gub + 1e-9, "trial {trial}: sampler beat gub");
    }
}

#[test]
#[ignore = "slow randomized sweep; run with --ignored"]
fn truncated_runs_stay_sound() {
    let mut r = rng(0x57BE56);
    for trial in 0..100 {
        let net = varied_net(&mut r);
        if net.num_hidden_neurons() > 18 {
            continue;
        }
        let region = varied_box(&mut r, net.input_dim());
        let catalog = enumerate_regions(&net, &region, &FeasibilityConfig::default()).unwrap();
        let norm = ALL_NORMS[trial % 4];
        let truth = catalog.max_norm(norm);
        for max_iterations in [1, 2, 5] {
            let result = certify(
                &net,
                &region,
                &BabConfig {
                    norm,
                    max_iterations,
                    ..BabConfig::default()
                },
            )
            .unwrap();
            assert!(
                result.gub + 1e-9 >= truth,
                "trial {trial}, cap {max_iterations}: bound {} below true {truth}",
                result.gub
            );
            assert!(result.glb <= truth + 1e-9 * truth.abs().max(1.0));
        }
    }
}

#[test]
#[ignore = "slow randomized sweep; run with --ignored"]
fn global_mode_matches_big_box_oracle() {
    let mut r = rng(0x57BE57);
    let feas = FeasibilityConfig::default();
    for trial in 0..60 {
        let shape = [
            r.gen_range(1..=3),
            r.gen_range(2..=5),
            r.gen_range(2..=4),
            r.gen_range(1..=2),
        ];
        let net = random_net(&mut r, &shape);
        let norm = ALL_NORMS[trial % 4];
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
        let big_box = vec![Interval::new(-feas.big_m, feas.big_m); shape[0]];
        let catalog = enumerate_regions(&net, &big_box, &feas).unwrap();
        assert!(
            close_rel(global.gub, catalog.max_norm(norm), 1e-6),
            "trial {trial} p={norm}: global {} vs oracle {}",
            global.gub,
            catalog.max_norm(norm)
        );
    }
}

#[test]
#[ignore = "slow randomized sweep; run with --ignored"]
fn degenerate_networks_are_exactly_zero_or_linear() {
    // All-zero weights: constant function, constant zero on every norm.
    let zero = Network::new(vec![
        (RealMatrix::zeros(3, 2), vec![0.4, -0.2, 0.0]),
        (RealMatrix::zeros(2, 3), vec![1.0, -1.0]),
    ])
    .unwrap();
    for norm in ALL_NORMS {
        let result = certify(
            &zero,
            &[Interval::new(-1.0, 1.0), Interval::new(-1.0, 1.0)],
            &BabConfig {
                norm,
                ..BabConfig::default()
            },
        )
        .unwrap();
        assert_eq!(result.gub, 0.0);
        assert_eq!(result.status, BabStatus::Exact);
    }

    // A hidden layer forced inactive kills the whole signal.
    let dead = Network::new(vec![
        (RealMatrix::from_rows(vec![vec![1.0], vec![-1.0]]), vec![
            -10.0, -10.0,
        ]),
        (RealMatrix::from_rows(vec![vec![5.0, 5.0]]), vec![0.3]),
    ])
    .unwrap();
    let result = certify(
        &dead,
        &[Interval::new(-1.0, 1.0)],
        &BabConfig {
            norm: NormKind::Inf,
            ..BabConfig::default()
        },
    )
    .unwrap();
    assert_eq!(result.gub, 0.0);
    assert_eq!(result.iterations, 1);
}
