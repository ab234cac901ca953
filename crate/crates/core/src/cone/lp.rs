//! Dense two-phase simplex for the tiny LPs that show up in wrench space.
//!
//! Problems are in standard form: maximize `c·x` subject to `A x = b`, `x >= 0`.
//! Row counts here are at most a handful (3 wrench rows plus a few
//! normalization rows), so a dense tableau with Bland's rule is both fast
//! and immune to cycling.

use nalgebra::{DMatrix, DVector};

const PIVOT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

/// A standard-form LP. `a` is row-major with `rows * cols` entries.
#[derive(Debug, Clone)]
pub struct StandardLp {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl StandardLp {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            a: vec![0.0; rows * cols],
            b: vec![0.0; rows],
            c: vec![0.0; cols],
        }
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.a[row * self.cols + col] = value;
    }

    /// Solves the problem. `feas_tol` bounds the phase-1 infeasibility
    /// (sum of artificial variables) that is still accepted as feasible.
    pub fn solve(&self, feas_tol: f64) -> LpOutcome {
        Tableau::new(self).solve(self, feas_tol)
    }
}

struct Tableau {
    m: usize,
    n: usize,
    // (m + 1) rows of (n + m + 1) entries; last row is the reduced-cost row,
    // last column is the right-hand side.
    t: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn new(lp: &StandardLp) -> Self {
        let m = lp.rows;
        let n = lp.cols;
        let width = n + m + 1;
        let mut t = vec![0.0; (m + 1) * width];
        for i in 0..m {
            let sign = if lp.b[i] < 0.0 { -1.0 } else { 1.0 };
            for j in 0..n {
                t[i * width + j] = sign * lp.a[i * n + j];
            }
            t[i * width + n + i] = 1.0;
            t[i * width + n + m] = sign * lp.b[i];
        }
        Self {
            m,
            n,
            t,
            basis: (n..n + m).collect(),
        }
    }

    #[inline]
    fn width(&self) -> usize {
        self.n + self.m + 1
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.width() + j]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let w = self.width();
        let p = self.t[row * w + col];
        for j in 0..w {
            self.t[row * w + j] /= p;
        }
        for i in 0..=self.m {
            if i == row {
                continue;
            }
            let f = self.t[i * w + col];
            if f == 0.0 {
                continue;
            }
            for j in 0..w {
                self.t[i * w + j] -= f * self.t[row * w + j];
            }
        }
        self.basis[row] = col;
    }

    /// Fills the reduced-cost row for objective `cost` (maximization).
    fn price(&mut self, cost: &[f64]) {
        let w = self.width();
        let m = self.m;
        for j in 0..w {
            let mut r = if j < cost.len() { cost[j] } else { 0.0 };
            for i in 0..m {
                let cb = cost.get(self.basis[i]).copied().unwrap_or(0.0);
                r -= cb * self.t[i * w + j];
            }
            self.t[m * w + j] = r;
        }
    }

    /// Runs simplex iterations over columns `0..allowed`. Returns false when
    /// the objective is unbounded.
    fn iterate(&mut self, allowed: usize) -> bool {
        let w = self.width();
        let m = self.m;
        let max_iter = 50 * (w + m);
        for _ in 0..max_iter {
            let entering = (0..allowed).find(|&j| self.t[m * w + j] > PIVOT_EPS);
            let Some(col) = entering else {
                return true;
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let aij = self.at(i, col);
                if aij > PIVOT_EPS {
                    let ratio = self.at(i, w - 1) / aij;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - PIVOT_EPS
                                || (ratio <= lr + PIVOT_EPS && self.basis[i] < self.basis[li])
                            {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            match leave {
                Some((row, _)) => self.pivot(row, col),
                None => return false,
            }
        }
        true
    }

    /// Basic values re-solved from the original columns. The tableau picks up
    /// round-off over many pivots (Bland's rule takes small pivots); solving
    /// the final basis directly makes `A x = b` hold to machine precision.
    /// `None` if the basis matrix is singular or the point is not feasible.
    fn refined_basics(&self, lp: &StandardLp) -> Option<Vec<f64>> {
        let (m, n) = (self.m, self.n);
        let basis = DMatrix::from_fn(m, m, |r, k| {
            let j = self.basis[k];
            if j < n {
                lp.a[r * n + j]
            } else {
                // Artificial columns carry the sign flip of their row.
                let sign = if lp.b[r] < 0.0 { -1.0 } else { 1.0 };
                if j - n == r { sign } else { 0.0 }
            }
        });
        let xb = basis.lu().solve(&DVector::from_column_slice(&lp.b))?;
        if xb.iter().any(|v| !v.is_finite() || *v < -1e-9) {
            return None;
        }
        Some(xb.iter().map(|v| v.max(0.0)).collect())
    }

    fn solve(mut self, lp: &StandardLp, feas_tol: f64) -> LpOutcome {
        let cost = &lp.c[..];
        let (m, n) = (self.m, self.n);
        let w = self.width();

        // Phase 1: maximize -(sum of artificials).
        let mut phase1 = vec![0.0; n + m];
        for c in phase1.iter_mut().skip(n) {
            *c = -1.0;
        }
        self.price(&phase1);
        self.iterate(n + m);
        let infeasibility: f64 = (0..m)
            .filter(|&i| self.basis[i] >= n)
            .map(|i| self.at(i, w - 1).abs())
            .sum();
        if infeasibility > feas_tol {
            return LpOutcome::Infeasible;
        }

        // Drive zero-level artificials out of the basis where possible.
        for i in 0..m {
            if self.basis[i] >= n {
                if let Some(j) = (0..n).find(|&j| self.at(i, j).abs() > 1e-9) {
                    self.pivot(i, j);
                }
            }
        }

        // Phase 2 over the original columns only.
        self.price(cost);
        if !self.iterate(n) {
            return LpOutcome::Unbounded;
        }

        let basics = self
            .refined_basics(lp)
            .unwrap_or_else(|| (0..m).map(|i| self.at(i, w - 1).max(0.0)).collect());
        let mut x = vec![0.0; n];
        for i in 0..m {
            if self.basis[i] < n {
                x[self.basis[i]] = basics[i];
            }
        }
        let objective = x.iter().zip(cost).map(|(xi, ci)| xi * ci).sum();
        LpOutcome::Optimal { x, objective }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_textbook_problem() {
        // max 3x + 2y s.t. x + y + s1 = 4, x + 3y + s2 = 6
        let mut lp = StandardLp::new(2, 4);
        lp.set(0, 0, 1.0);
        lp.set(0, 1, 1.0);
        lp.set(0, 2, 1.0);
        lp.set(1, 0, 1.0);
        lp.set(1, 1, 3.0);
        lp.set(1, 3, 1.0);
        lp.b = vec![4.0, 6.0];
        lp.c = vec![3.0, 2.0, 0.0, 0.0];
        match lp.solve(1e-9) {
            LpOutcome::Optimal { x, objective } => {
                assert!((objective - 12.0).abs() < 1e-12);
                assert!((x[0] - 4.0).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn detects_infeasibility() {
        // x = -1 with x >= 0
        let mut lp = StandardLp::new(1, 1);
        lp.set(0, 0, 1.0);
        lp.b = vec![-1.0];
        assert_eq!(lp.solve(1e-9), LpOutcome::Infeasible);
    }

    #[test]
    fn detects_unboundedness() {
        // max x s.t. x - y = 0
        let mut lp = StandardLp::new(1, 2);
        lp.set(0, 0, 1.0);
        lp.set(0, 1, -1.0);
        lp.c = vec![1.0, 0.0];
        assert_eq!(lp.solve(1e-9), LpOutcome::Unbounded);
    }

    #[test]
    fn tolerates_redundant_rows() {
        // x + y = 1 stated twice; max x
        let mut lp = StandardLp::new(2, 2);
        for r in 0..2 {
            lp.set(r, 0, 1.0);
            lp.set(r, 1, 1.0);
        }
        lp.b = vec![1.0, 1.0];
        lp.c = vec![1.0, 0.0];
        match lp.solve(1e-9) {
            LpOutcome::Optimal { objective, .. } => assert!((objective - 1.0).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }
}
