//! Dense phase-1 simplex used by the feasibility oracle.
//!
//! Decides whether `{x : rows(x) <= rhs, lower <= x <= upper}` is nonempty.
//! Problems here are tiny (input dimension by tens of rows), so a dense
//! tableau with Bland's pivoting rule is plenty: Bland's rule cannot cycle,
//! which makes termination and determinism unconditional.

/// Outcome of a phase-1 solve.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpOutcome {
    /// A point satisfying every constraint.
    Feasible {
        point: Vec<f64>,
    },
    Infeasible,
    /// The pivot cap was hit before optimality; the carried point is the
    /// current basic solution and need not be feasible.
    PivotLimit {
        point: Vec<f64>,
    },
}

/// One `a · x <= b` row.
#[derive(Debug, Clone)]
pub(crate) struct LpRow {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

/// Phase-1 feasibility for `rows` with box bounds `lower <= x <= upper`.
///
/// The box enters the tableau as substitution `x = lower + y`, `y >= 0`, plus
/// one `y_i <= upper_i - lower_i` row per variable. Artificials are added
/// only for rows whose shifted right-hand side is negative; feasibility means
/// driving their sum to zero.
pub(crate) fn phase_one(
    rows: &[LpRow],
    lower: &[f64],
    upper: &[f64],
    tol: f64,
    max_pivots: usize,
) -> LpOutcome {
    let n = lower.len();
    debug_assert_eq!(upper.len(), n);
    debug_assert!(lower.iter().zip(upper).all(|(l, u)| l <= u));

    // Shifted rows: original constraints then variable upper bounds.
    let mut all_rows: Vec<(Vec<f64>, f64)> = Vec::with_capacity(rows.len() + n);
    for row in rows {
        debug_assert_eq!(row.coeffs.len(), n);
        let shift: f64 = row.coeffs.iter().zip(lower).map(|(a, l)| a * l).sum();
        all_rows.push((row.coeffs.clone(), row.rhs - shift));
    }
    for i in 0..n {
        let mut coeffs = vec![0.0; n];
        coeffs[i] = 1.0;
        all_rows.push((coeffs, upper[i] - lower[i]));
    }

    let m = all_rows.len();
    let num_artificial = all_rows.iter().filter(|(_, b)| *b < 0.0).count();
    if num_artificial == 0 {
        // y = 0 is feasible outright.
        return LpOutcome::Feasible {
            point: lower.to_vec(),
        };
    }

    // Column layout: structural y (n) | slacks (m) | artificials.
    let total = n + m + num_artificial;
    let mut tableau = vec![vec![0.0; total + 1]; m];
    let mut basis = vec![0usize; m];
    let mut next_artificial = n + m;
    for (r, (coeffs, rhs)) in all_rows.iter().enumerate() {
        let row = &mut tableau[r];
        let negate = *rhs < 0.0;
        let sign = if negate { -1.0 } else { 1.0 };
        for (j, a) in coeffs.iter().enumerate() {
            row[j] = sign * a;
        }
        row[n + r] = sign; // slack
        row[total] = sign * rhs;
        if negate {
            row[next_artificial] = 1.0;
            basis[r] = next_artificial;
            next_artificial += 1;
        } else {
            basis[r] = n + r;
        }
    }

    // Reduced costs d_j = c_j - sum over artificial-basic rows of T[r][j],
    // minimizing the sum of artificials (c = 1 on artificials, 0 elsewhere).
    let is_artificial = |j: usize| j >= n + m;
    let mut pivots = 0usize;
    loop {
        let mut entering = None;
        for j in 0..total {
            if basis.contains(&j) {
                continue;
            }
            let mut d = if is_artificial(j) { 1.0 } else { 0.0 };
            for r in 0..m {
                if is_artificial(basis[r]) {
                    d -= tableau[r][j];
                }
            }
            if d < -tol {
                entering = Some(j); // Bland: first improving index
                break;
            }
        }
        let Some(enter) = entering else {
            // Optimal: objective equals the sum of artificial basic values.
            let objective: f64 = (0..m)
                .filter(|r| is_artificial(basis[*r]))
                .map(|r| tableau[r][total])
                .sum();
            let scale = all_rows
                .iter()
                .map(|(_, b)| b.abs())
                .fold(1.0_f64, f64::max);
            return if objective <= tol * scale {
                LpOutcome::Feasible {
                    point: extract_point(&tableau, &basis, lower, n, total),
                }
            } else {
                LpOutcome::Infeasible
            };
        };

        // Ratio test; ties broken by smallest basis index (Bland).
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..m {
            let a = tableau[r][enter];
            if a > tol {
                let ratio = tableau[r][total] / a;
                match leave {
                    None => leave = Some((r, ratio)),
                    Some((lr, lratio)) => {
                        if ratio < lratio - 1e-15
                            || (ratio <= lratio + 1e-15 && basis[r] < basis[lr])
                        {
                            leave = Some((r, ratio));
                        }
                    }
                }
            }
        }
        let Some((leave_row, _)) = leave else {
            // Unbounded improving direction in a phase-1 problem cannot
            // happen with finite boxes; treat defensively as feasible.
            return LpOutcome::Feasible {
                point: extract_point(&tableau, &basis, lower, n, total),
            };
        };

        pivot(&mut tableau, leave_row, enter);
        basis[leave_row] = enter;
        pivots += 1;
        if pivots >= max_pivots {
            return LpOutcome::PivotLimit {
                point: extract_point(&tableau, &basis, lower, n, total),
            };
        }
    }
}

fn pivot(tableau: &mut [Vec<f64>], row: usize, col: usize) {
    let m = tableau.len();
    let width = tableau[0].len();
    let p = tableau[row][col];
    for j in 0..width {
        tableau[row][j] /= p;
    }
    for r in 0..m {
        if r == row {
            continue;
        }
        let factor = tableau[r][col];
        if factor == 0.0 {
            continue;
        }
        for j in 0..width {
            tableau[r][j] -= factor * tableau[row][j];
        }
    }
}

fn extract_point(
    tableau: &[Vec<f64>],
    basis: &[usize],
    lower: &[f64],
    n: usize,
    total: usize,
) -> Vec<f64> {
    let mut point = lower.to_vec();
    for (r, b) in basis.iter().enumerate() {
        if *b < n {
            point[*b] = lower[*b] + tableau[r][total];
        }
    }
    point
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(rows: Vec<(Vec<f64>, f64)>, lower: Vec<f64>, upper: Vec<f64>) -> LpOutcome {
        let rows: Vec<LpRow> = rows
            .into_iter()
            .map(|(coeffs, rhs)| LpRow { coeffs, rhs })
            .collect();
        phase_one(&rows, &lower, &upper, 1e-9, 10_000)
    }

    fn feasible_point(outcome: LpOutcome) -> Vec<f64> {
        match outcome {
            LpOutcome::Feasible { point } => point,
            other => panic!("expected feasible, got {other:?}"),
        }
    }

    #[test]
    fn empty_rows_over_box_is_feasible() {
        let p = feasible_point(solve(vec![], vec![0.0, 0.0], vec![1.0, 1.0]));
        assert_eq!(p, vec![0.0, 0.0]);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        // x0 <= 0.2 and -x0 <= -0.8 (x0 >= 0.8) cannot both hold.
        let out = solve(
            vec![(vec![1.0, 0.0], 0.2), (vec![-1.0, 0.0], -0.8)],
            vec![0.0, 0.0],
            vec![1.0, 1.0],
        );
        assert_eq!(out, LpOutcome::Infeasible);
    }

    #[test]
    fn witness_satisfies_rows() {
        // x0 + x1 >= 1.3 within the unit box.
        let p = feasible_point(solve(
            vec![(vec![-1.0, -1.0], -1.3)],
            vec![0.0, 0.0],
            vec![1.0, 1.0],
        ));
        assert!(p[0] + p[1] >= 1.3 - 1e-9);
        assert!(p.iter().all(|v| (-1e-9..=1.0 + 1e-9).contains(v)));
    }

    #[test]
    fn respects_negative_lower_bounds() {
        // x0 <= -0.5 with x0 in [-1, 1].
        let p = feasible_point(solve(vec![(vec![1.0], -0.5)], vec![-1.0], vec![1.0]));
        assert!(p[0] <= -0.5 + 1e-9 && p[0] >= -1.0 - 1e-9);
    }

    #[test]
    fn zero_width_box_pins_variables() {
        let out = solve(vec![(vec![-1.0], -0.4)], vec![0.25], vec![0.25]);
        assert_eq!(out, LpOutcome::Infeasible); // needs x0 >= 0.4 but x0 = 0.25
        let p = feasible_point(solve(vec![(vec![-1.0], -0.2)], vec![0.25], vec![0.25]));
        assert!((p[0] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn constant_zero_row_with_negative_rhs_is_infeasible() {
        let out = solve(vec![(vec![0.0], -1.0)], vec![0.0], vec![1.0]);
        assert_eq!(out, LpOutcome::Infeasible);
    }

    #[test]
    fn random_instances_match_grid_search() {
        use rand::{Rng, SeedableRng};
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..300 {
            let nrows = rng.gen_range(1..5);
            let rows: Vec<(Vec<f64>, f64)> = (0..nrows)
                .map(|_| {
                    (
                        vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
                        rng.gen_range(-1.0..1.5),
                    )
                })
                .collect();
            let out = solve(rows.clone(), vec![0.0, 0.0], vec![1.0, 1.0]);
            // 41x41 grid: coarse but enough to sanity-check with a margin.
            let mut strong_grid_point = false;
            for gi in 0..=40 {
                for gj in 0..=40 {
                    let x = [gi as f64 / 40.0, gj as f64 / 40.0];
                    if rows
                        .iter()
                        .all(|(a, b)| a[0] * x[0] + a[1] * x[1] <= b - 1e-6)
                    {
                        strong_grid_point = true;
                    }
                }
            }
            match &out {
                LpOutcome::Feasible { point } => {
                    assert!(rows
                        .iter()
                        .all(|(a, b)| a[0] * point[0] + a[1] * point[1] <= b + 1e-7));
                }
                LpOutcome::Infeasible => {
                    assert!(!strong_grid_point, "grid found a point the LP missed");
                }
                LpOutcome::PivotLimit { .. } => panic!("tiny instance hit pivot limit"),
            }
        }
    }
}
