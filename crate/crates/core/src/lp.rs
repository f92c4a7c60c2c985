//! Small dense linear programs in standard form,
//! `minimize c·x subject to A x = b, x >= 0`.
//!
//! Two-phase tableau simplex with Bland's rule. Rows and columns are scaled
//! to unit max-norm first, and the final basic solution is recomputed from
//! the original (scaled) matrix by partial-pivoting elimination so the
//! reported optimum does not carry the tableau's accumulated round-off.

use crate::error::{invalid, Result};

const PIVOT_EPS: f64 = 1e-11;
const COST_EPS: f64 = 1e-11;
const FEASIBILITY_EPS: f64 = 1e-9;
const MAX_PIVOTS: usize = 50_000;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

/// Solves `min c·x, A x = b, x >= 0` with `A` given row by row.
pub fn minimize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<LpOutcome> {
    let m = a.len();
    let n = c.len();
    if b.len() != m || a.iter().any(|row| row.len() != n) {
        return Err(invalid("linear program dimensions disagree"));
    }
    if c.iter().chain(b).chain(a.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(invalid("linear program has non-finite data"));
    }
    if m == 0 {
        // Only sign constraints: x = 0 is optimal unless some cost is negative.
        return Ok(if c.iter().any(|&cj| cj < 0.0) {
            LpOutcome::Unbounded
        } else {
            LpOutcome::Optimal { x: vec![0.0; n], objective: 0.0 }
        });
    }

    // Scale rows, then columns; flip rows so that b >= 0.
    let mut a_s: Vec<Vec<f64>> = a.to_vec();
    let mut b_s = b.to_vec();
    for (row, bi) in a_s.iter_mut().zip(b_s.iter_mut()) {
        let r = row.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let sign = if *bi < 0.0 { -1.0 } else { 1.0 };
        let f = if r > 0.0 { sign / r } else { sign };
        row.iter_mut().for_each(|v| *v *= f);
        *bi *= f;
    }
    let col_scale: Vec<f64> = (0..n)
        .map(|j| {
            let s = a_s.iter().fold(0.0f64, |acc, row| acc.max(row[j].abs()));
            if s > 0.0 {
                s
            } else {
                1.0
            }
        })
        .collect();
    for row in a_s.iter_mut() {
        for (v, s) in row.iter_mut().zip(&col_scale) {
            *v /= s;
        }
    }
    // x = x' / s  =>  c·x = (c / s)·x'.
    let c_s: Vec<f64> = c.iter().zip(&col_scale).map(|(cj, s)| cj / s).collect();

    let mut tab = Tableau::new(&a_s, &b_s);
    let b_norm = b_s.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));

    // Phase 1: drive the artificials to zero.
    let phase1_cost: Vec<f64> = (0..n + m).map(|j| if j >= n { 1.0 } else { 0.0 }).collect();
    tab.set_costs(&phase1_cost);
    if !tab.run(|j| j < n + m)? {
        unreachable!("phase one is bounded below by zero");
    }
    if tab.objective() > FEASIBILITY_EPS * b_norm {
        return Ok(LpOutcome::Infeasible);
    }
    tab.evict_artificials(n);

    // Phase 2 on the original costs, artificials barred from entering.
    let mut phase2_cost = c_s.clone();
    phase2_cost.resize(n + m, 0.0);
    tab.set_costs(&phase2_cost);
    if !tab.run(|j| j < n)? {
        return Ok(LpOutcome::Unbounded);
    }

    let mut x_s = vec![0.0; n];
    match refine(&a_s, &b_s, &tab.basis, n) {
        Some(values) => {
            for (&j, v) in tab.basis.iter().zip(values) {
                if j < n {
                    x_s[j] = v.max(0.0);
                }
            }
        }
        None => {
            for (i, &j) in tab.basis.iter().enumerate() {
                if j < n {
                    x_s[j] = tab.rhs[i].max(0.0);
                }
            }
        }
    }
    let x: Vec<f64> = x_s.iter().zip(&col_scale).map(|(v, s)| v / s).collect();
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Ok(LpOutcome::Optimal { x, objective })
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    reduced: Vec<f64>,
    value: f64,
}

impl Tableau {
    fn new(a: &[Vec<f64>], b: &[f64]) -> Self {
        let m = a.len();
        let n = a[0].len();
        let rows = a
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut r = row.clone();
                r.resize(n + m, 0.0);
                r[n + i] = 1.0;
                r
            })
            .collect();
        Self { rows, rhs: b.to_vec(), basis: (n..n + m).collect(), reduced: vec![0.0; n + m], value: 0.0 }
    }

    fn objective(&self) -> f64 {
        self.value
    }

    fn set_costs(&mut self, cost: &[f64]) {
        self.reduced = cost.to_vec();
        self.value = 0.0;
        for (i, &bj) in self.basis.iter().enumerate() {
            let cb = cost[bj];
            if cb != 0.0 {
                for (d, t) in self.reduced.iter_mut().zip(&self.rows[i]) {
                    *d -= cb * t;
                }
                self.value += cb * self.rhs[i];
            }
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let p = self.rows[r][q];
        self.rows[r].iter_mut().for_each(|v| *v /= p);
        self.rhs[r] /= p;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r];
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][q];
            if f != 0.0 {
                for (v, pr) in self.rows[i].iter_mut().zip(&pivot_row) {
                    *v -= f * pr;
                }
                self.rows[i][q] = 0.0;
                self.rhs[i] -= f * pivot_rhs;
            }
        }
        let f = self.reduced[q];
        if f != 0.0 {
            for (d, pr) in self.reduced.iter_mut().zip(&pivot_row) {
                *d -= f * pr;
            }
            self.reduced[q] = 0.0;
            self.value += f * pivot_rhs;
        }
        self.basis[r] = q;
    }

    /// Pivots to optimality; `Ok(false)` on an unbounded ray.
    fn run(&mut self, allowed: impl Fn(usize) -> bool) -> Result<bool> {
        for _ in 0..MAX_PIVOTS {
            let Some(q) = (0..self.reduced.len()).find(|&j| allowed(j) && self.reduced[j] < -COST_EPS) else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let t = self.rows[i][q];
                if t > PIVOT_EPS {
                    let ratio = self.rhs[i].max(0.0) / t;
                    let better = match leave {
                        None => true,
                        Some((r, best)) => ratio < best || (ratio == best && self.basis[i] < self.basis[r]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, q),
                None => return Ok(false),
            }
        }
        Err(invalid("simplex did not converge"))
    }

    /// Replaces basic artificials (all at zero level after phase one) by
    /// structural columns where the row allows it.
    fn evict_artificials(&mut self, n: usize) {
        for r in 0..self.rows.len() {
            if self.basis[r] >= n {
                let best = (0..n)
                    .filter(|j| !self.basis.contains(j))
                    .max_by(|&x, &y| self.rows[r][x].abs().total_cmp(&self.rows[r][y].abs()));
                if let Some(q) = best {
                    if self.rows[r][q].abs() > 1e-9 {
                        self.pivot(r, q);
                    }
                }
            }
        }
    }
}

/// Solves `B x_B = b` for a structural basis; `None` if the basis still
/// holds artificials, is singular, or yields a clearly infeasible point.
fn refine(a: &[Vec<f64>], b: &[f64], basis: &[usize], n: usize) -> Option<Vec<f64>> {
    if basis.iter().any(|&j| j >= n) {
        return None;
    }
    let m = a.len();
    let mut mat: Vec<Vec<f64>> = (0..m).map(|i| basis.iter().map(|&j| a[i][j]).collect()).collect();
    let mut rhs = b.to_vec();
    for col in 0..m {
        let piv = (col..m).max_by(|&x, &y| mat[x][col].abs().total_cmp(&mat[y][col].abs()))?;
        if mat[piv][col].abs() < 1e-14 {
            return None;
        }
        mat.swap(col, piv);
        rhs.swap(col, piv);
        for i in col + 1..m {
            let f = mat[i][col] / mat[col][col];
            if f != 0.0 {
                for k in col..m {
                    mat[i][k] -= f * mat[col][k];
                }
                rhs[i] -= f * rhs[col];
            }
        }
    }
    let mut x = vec![0.0; m];
    for i in (0..m).rev() {
        let s: f64 = (i + 1..m).map(|k| mat[i][k] * x[k]).sum();
        x[i] = (rhs[i] - s) / mat[i][i];
    }
    let norm = x.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    if x.iter().any(|&v| v < -FEASIBILITY_EPS * norm) {
        return None;
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn optimum(out: LpOutcome) -> (Vec<f64>, f64) {
        match out {
            LpOutcome::Optimal { x, objective } => (x, objective),
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn textbook_problem() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18  (optimum 36 at (2, 6)).
        let c = [-3.0, -5.0, 0.0, 0.0, 0.0];
        let a = vec![vec![1.0, 0.0, 1.0, 0.0, 0.0], vec![0.0, 2.0, 0.0, 1.0, 0.0], vec![3.0, 2.0, 0.0, 0.0, 1.0]];
        let (x, obj) = optimum(minimize(&c, &a, &[4.0, 12.0, 18.0]).unwrap());
        assert!((obj + 36.0).abs() < 1e-12);
        assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        // x + y = -1 with x, y >= 0.
        assert_eq!(minimize(&[1.0, 1.0], &[vec![1.0, 1.0]], &[-1.0]).unwrap(), LpOutcome::Infeasible);
        // min -x with x - y = 0.
        assert_eq!(minimize(&[-1.0, 0.0], &[vec![1.0, -1.0]], &[0.0]).unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_rows() {
        let a = vec![vec![1.0, 1.0, 1.0], vec![2.0, 2.0, 2.0], vec![1.0, 0.0, 0.0]];
        let (x, obj) = optimum(minimize(&[0.0, 1.0, 2.0], &a, &[1.0, 2.0, 0.25]).unwrap());
        assert!((obj - 0.75).abs() < 1e-12, "{obj}");
        assert!((x[0] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn badly_scaled_columns() {
        // min x1 with 1e-12 x0 + x1 = 1, x0 <= 1e12 via slack.
        let a = vec![vec![1e-12, 1.0, 0.0], vec![1.0, 0.0, 1.0]];
        let (x, obj) = optimum(minimize(&[0.0, 1.0, 0.0], &a, &[1.0, 1e12]).unwrap());
        assert!(obj.abs() < 1e-9, "{obj}");
        assert!((x[0] - 1e12).abs() < 1e-3);
    }

    #[test]
    fn dimension_checks() {
        assert!(minimize(&[1.0], &[vec![1.0, 2.0]], &[1.0]).is_err());
        assert!(minimize(&[f64::NAN], &[vec![1.0]], &[1.0]).is_err());
    }
}
