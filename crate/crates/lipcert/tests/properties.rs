//! Property tests over the public API.

mod support;

use lipcert::{
    mul_real_interval, naive_ibp, op_norm, sym_prop, AffineForm, Interval, IntervalMatrix,
    NormKind, RealMatrix, VarBounds, VarId,
};
use proptest::prelude::*;

fn interval() -> impl Strategy<Value = Interval> {
    (-10.0..10.0f64, -10.0..10.0f64).prop_map(|(a, b)| Interval::new(a.min(b), a.max(b)))
}

fn interval_with_point() -> impl Strategy<Value = (Interval, f64)> {
    (interval(), 0.0..=1.0f64).prop_map(|(iv, t)| {
        let x = (iv.lo() + t * (iv.hi() - iv.lo())).clamp(iv.lo(), iv.hi());
        (iv, x)
    })
}

proptest! {
    #[test]
    fn interval_ops_contain_pointwise_results(
        (p, x) in interval_with_point(),
        (q, y) in interval_with_point(),
        c in -5.0..5.0f64,
    ) {
        prop_assert!((p + q).contains(x + y));
        let prod = p * q;
        // One rounding step of slack for the product of endpoints.
        prop_assert!(prod.contains(x * y)
            || (x * y - prod.lo()).abs() < 1e-12
            || (x * y - prod.hi()).abs() < 1e-12);
        prop_assert!(p.scale(c).contains(c * x) || (c * x - p.scale(c).lo()).abs() < 1e-12
            || (c * x - p.scale(c).hi()).abs() < 1e-12);
    }

    #[test]
    fn interval_ops_monotone_under_refinement(
        (p, a) in interval_with_point(),
        q in interval(),
        t in 0.0..=1.0f64,
    ) {
        let b = (p.lo() + t * (p.hi() - p.lo())).clamp(p.lo(), p.hi());
        let ps = Interval::new(a.min(b), a.max(b));
        prop_assert!((p + q).encloses(&(ps + q)));
        prop_assert!((p * q).encloses(&(ps * q)));
    }

    #[test]
    fn affine_bounds_contain_evaluations(
        coeffs in prop::collection::vec(-3.0..3.0f64, 1..5),
        offset in -2.0..2.0f64,
        picks in prop::collection::vec(0.0..=1.0f64, 5),
        widths in prop::collection::vec((-2.0..2.0f64, 0.0..2.0f64), 5),
    ) {
        let n = coeffs.len();
        let vars: Vec<AffineForm> = (0..n).map(|i| AffineForm::variable(VarId::Input(i))).collect();
        let form = AffineForm::combine(&coeffs, &vars, offset);
        let region: Vec<Interval> = widths[..n]
            .iter()
            .map(|(lo, w)| Interval::new(*lo, lo + w))
            .collect();
        let point: Vec<f64> = region
            .iter()
            .zip(&picks[..n])
            .map(|(iv, t)| iv.lo() + t * iv.width())
            .collect();
        let bounds = form.bounds(&VarBounds::from_box(&region)).unwrap();
        let v = form.eval_at_input(&point);
        prop_assert!(v >= bounds.lo() - 1e-9 && v <= bounds.hi() + 1e-9);
    }

    #[test]
    fn norm_dominance_under_elementwise_bound(
        rows in 1usize..4,
        cols in 1usize..4,
        entries in prop::collection::vec((-3.0..3.0f64, 0.0..1.0f64), 16),
    ) {
        let mut a = RealMatrix::zeros(rows, cols);
        let mut b = RealMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let (v, pad) = entries[i * cols + j];
                a.set(i, j, v);
                b.set(i, j, v.abs() + pad);
            }
        }
        for kind in [NormKind::One, NormKind::Two, NormKind::Inf, NormKind::Fro] {
            prop_assert!(op_norm(&a, kind).unwrap() <= op_norm(&b, kind).unwrap() + 1e-9);
        }
    }

    #[test]
    fn interval_product_contains_real_products(
        w_entries in prop::collection::vec(-2.0..2.0f64, 6),
        m_entries in prop::collection::vec((-2.0..2.0f64, 0.0..1.0f64, 0.0..=1.0f64), 6),
    ) {
        // W is 2x3; M is 3x2 with a random selection inside each entry.
        let w = RealMatrix::from_rows(vec![w_entries[..3].to_vec(), w_entries[3..].to_vec()]);
        let mut rows = Vec::new();
        let mut sel_rows = Vec::new();
        for r in 0..3 {
            let mut row = Vec::new();
            let mut sel = Vec::new();
            for c in 0..2 {
                let (lo, width, t) = m_entries[r * 2 + c];
                let iv = Interval::new(lo, lo + width);
                row.push(iv);
                sel.push(iv.lo() + t * iv.width());
            }
            rows.push(row);
            sel_rows.push(sel);
        }
        let m = IntervalMatrix::from_entries(rows);
        let chosen = RealMatrix::from_rows(sel_rows);
        let prod = mul_real_interval(&w, &m);
        let exact = w.matmul(&chosen);
        for i in 0..2 {
            for j in 0..2 {
                let iv = prod.get(i, j);
                let v = exact.get(i, j);
                prop_assert!(v >= iv.lo() - 1e-9 && v <= iv.hi() + 1e-9);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Outputs of random two-layer networks stay within both bound flavors,
    /// and the symbolic bounds are never looser.
    #[test]
    fn propagation_bounds_are_sound_and_ordered(
        seed in 0u64..1_000_000,
        t in prop::collection::vec(0.0..=1.0f64, 3),
    ) {
        let mut r = support::rng(seed);
        let net = support::random_net(&mut r, &[3, 5, 2]);
        let region = support::random_box(&mut r, 3, 1.0);
        let sym = sym_prop(&net, &region);
        let ibp = naive_ibp(&net, &region);
        let x: Vec<f64> = region
            .iter()
            .zip(&t)
            .map(|(iv, t)| iv.lo() + t * iv.width())
            .collect();
        let y = net.forward(&x).unwrap();
        for (i, v) in y.iter().enumerate() {
            let s = sym.output_bounds[i];
            let n = ibp.output_bounds[i];
            prop_assert!(*v >= s.lo() - 1e-9 && *v <= s.hi() + 1e-9);
            prop_assert!(*v >= n.lo() - 1e-9 && *v <= n.hi() + 1e-9);
            prop_assert!(s.width() <= n.width() + 1e-9);
        }
    }
}
