//! Dense real and interval matrices.
//!
//! Matrices here are small (network layers, Jacobians), so storage is a plain
//! row-major `Vec`. Dimension mismatches are programming errors and panic.

use crate::interval::Interval;

/// A dense real matrix with positive dimensions, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        RealMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from row vectors. Panics if `rows` is empty or ragged.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        assert!(!rows.is_empty(), "matrix needs at least one row");
        let cols = rows[0].len();
        assert!(cols > 0, "matrix needs at least one column");
        assert!(
            rows.iter().all(|r| r.len() == cols),
            "ragged rows in matrix literal"
        );
        let nrows = rows.len();
        let data = rows.into_iter().flatten().collect();
        RealMatrix {
            rows: nrows,
            cols,
            data,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = RealMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &RealMatrix) -> RealMatrix {
        assert_eq!(
            self.cols, other.rows,
            "dimension mismatch in matrix product"
        );
        let mut out = RealMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    /// Matrix-vector product `self * v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(
            self.cols,
            v.len(),
            "dimension mismatch in matrix-vector product"
        );
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, x)| a * x).sum())
            .collect()
    }

    /// Transposed matrix-vector product `selfᵀ * v`.
    pub fn t_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(
            self.rows,
            v.len(),
            "dimension mismatch in transposed product"
        );
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let vi = v[i];
            if vi == 0.0 {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                *o += self.get(i, j) * vi;
            }
        }
        out
    }

    /// Row `i` scaled by `diag[i]`, i.e. `diag(d) * self`.
    pub fn scaled_rows(&self, diag: &[f64]) -> RealMatrix {
        assert_eq!(
            self.rows,
            diag.len(),
            "diagonal length must match row count"
        );
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[i * self.cols + j] *= diag[i];
            }
        }
        out
    }
}

/// A dense matrix of [`Interval`] entries.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Interval>,
}

impl IntervalMatrix {
    pub fn from_entries(rows: Vec<Vec<Interval>>) -> Self {
        assert!(!rows.is_empty(), "matrix needs at least one row");
        let cols = rows[0].len();
        assert!(cols > 0, "matrix needs at least one column");
        assert!(
            rows.iter().all(|r| r.len() == cols),
            "ragged rows in matrix literal"
        );
        let nrows = rows.len();
        let data = rows.into_iter().flatten().collect();
        IntervalMatrix {
            rows: nrows,
            cols,
            data,
        }
    }

    /// Degenerate interval matrix `[m, m]`.
    pub fn from_real(m: &RealMatrix) -> Self {
        IntervalMatrix {
            rows: m.rows(),
            cols: m.cols(),
            data: (0..m.rows())
                .flat_map(|i| (0..m.cols()).map(move |j| Interval::point(m.get(i, j))))
                .collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Interval {
        self.data[i * self.cols + j]
    }

    /// Row `i` multiplied by the interval `diag[i]`: the product `diag * self`
    /// for a diagonal interval matrix.
    pub fn scaled_rows(&self, diag: &[Interval]) -> IntervalMatrix {
        assert_eq!(
            self.rows,
            diag.len(),
            "diagonal length must match row count"
        );
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[i * self.cols + j] = diag[i] * out.data[i * self.cols + j];
            }
        }
        out
    }

    /// Elementwise upper bound on magnitudes: `U_ij = max(|lo_ij|, |hi_ij|)`.
    ///
    /// Every real matrix contained in `self` is elementwise dominated by the
    /// result, which is what lets its operator norm bound theirs.
    pub fn abs_upper(&self) -> RealMatrix {
        let mut out = RealMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let iv = self.get(i, j);
                out.set(i, j, iv.lo().abs().max(iv.hi().abs()));
            }
        }
        out
    }

    /// Whether `m` is contained entrywise in `self`.
    pub fn contains(&self, m: &RealMatrix) -> bool {
        self.rows == m.rows()
            && self.cols == m.cols()
            && (0..self.rows).all(|i| (0..self.cols).all(|j| self.get(i, j).contains(m.get(i, j))))
    }
}

/// Product of a real matrix with an interval matrix, `w * m`.
///
/// Entry `(i, j)` is the interval sum over `k` of `w[i][k] * m[k][j]`, so the
/// result contains `w * a` for every real `a` contained in `m`.
pub fn mul_real_interval(w: &RealMatrix, m: &IntervalMatrix) -> IntervalMatrix {
    assert_eq!(w.cols(), m.rows(), "dimension mismatch in matrix product");
    let mut data = vec![Interval::point(0.0); w.rows() * m.cols()];
    for i in 0..w.rows() {
        for k in 0..w.cols() {
            let c = w.get(i, k);
            if c == 0.0 {
                continue;
            }
            for j in 0..m.cols() {
                let idx = i * m.cols() + j;
                data[idx] = data[idx] + m.get(k, j).scale(c);
            }
        }
    }
    IntervalMatrix {
        rows: w.rows(),
        cols: m.cols(),
        data,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi)
    }

    #[test]
    fn real_interval_product_scales_and_sums() {
        // [[2, -3]] * diag([1,1], [0,1]) = [[[2,2], [-3,0]]]
        let w = RealMatrix::from_rows(vec![vec![2.0, -3.0]]);
        let m = IntervalMatrix::from_entries(vec![
            vec![iv(1.0, 1.0), iv(0.0, 0.0)],
            vec![iv(0.0, 0.0), iv(0.0, 1.0)],
        ]);
        let prod = mul_real_interval(&w, &m);
        assert_eq!(prod.get(0, 0), iv(2.0, 2.0));
        assert_eq!(prod.get(0, 1), iv(-3.0, 0.0));
    }

    #[test]
    fn identity_is_neutral() {
        let m = IntervalMatrix::from_entries(vec![
            vec![iv(-1.0, 2.0), iv(0.5, 0.5)],
            vec![iv(0.0, 3.0), iv(-2.0, -1.0)],
        ]);
        assert_eq!(mul_real_interval(&RealMatrix::identity(2), &m), m);
    }

    #[test]
    fn row_sum_collapses() {
        let w = RealMatrix::from_rows(vec![vec![1.0, 1.0]]);
        let m = IntervalMatrix::from_entries(vec![vec![iv(0.0, 1.0)], vec![iv(-1.0, 0.0)]]);
        assert_eq!(mul_real_interval(&w, &m).get(0, 0), iv(-1.0, 1.0));
    }

    #[test]
    #[should_panic(expected = "dimension mismatch")]
    fn product_rejects_mismatched_shapes() {
        let w = RealMatrix::from_rows(vec![vec![1.0, 2.0, 3.0]]);
        let m = IntervalMatrix::from_real(&RealMatrix::identity(2));
        mul_real_interval(&w, &m);
    }

    #[test]
    fn abs_upper_takes_endpoint_magnitudes() {
        let m = IntervalMatrix::from_entries(vec![vec![iv(-2.0, 1.0)]]);
        assert_eq!(m.abs_upper(), RealMatrix::from_rows(vec![vec![2.0]]));
        let z = IntervalMatrix::from_entries(vec![vec![iv(0.0, 0.0)]]);
        assert_eq!(z.abs_upper(), RealMatrix::from_rows(vec![vec![0.0]]));
        let m2 = IntervalMatrix::from_entries(vec![vec![iv(-3.0, 0.0), iv(2.0, 5.0)]]);
        assert_eq!(m2.abs_upper(), RealMatrix::from_rows(vec![vec![3.0, 5.0]]));
    }

    #[test]
    fn containment_through_product() {
        use rand::{Rng, SeedableRng};
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let w = RealMatrix::from_rows(
                (0..2)
                    .map(|_| (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect())
                    .collect(),
            );
            // random interval matrix plus a random selection from it
            let mut entries = Vec::new();
            let mut selection = Vec::new();
            for _ in 0..3 {
                let mut row = Vec::new();
                let mut srow = Vec::new();
                for _ in 0..2 {
                    let a: f64 = rng.gen_range(-2.0..2.0);
                    let b: f64 = rng.gen_range(-2.0..2.0);
                    let ivl = iv(a.min(b), a.max(b));
                    srow.push(rng.gen_range(ivl.lo()..=ivl.hi()));
                    row.push(ivl);
                }
                entries.push(row);
                selection.push(srow);
            }
            let m = IntervalMatrix::from_entries(entries);
            let a = RealMatrix::from_rows(selection);
            assert!(mul_real_interval(&w, &m).contains(&w.matmul(&a)));
        }
    }
}
