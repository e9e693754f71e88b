//! Dense two-phase simplex for small equality-form linear programs:
//! minimize `c . x` subject to `A x = b`, `x >= 0`.
//!
//! Bland's rule on both the entering and leaving choice prevents cycling; all
//! symmetrizability programs in this crate have at most a few hundred
//! variables, where a dense tableau is simplest and fast enough.

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-10;
/// Phase-1 objective below this is declared feasible.
pub const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

struct Tableau {
    /// m rows of length n_cols + 1 (rhs last).
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    n_cols: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.rows[r][self.n_cols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let piv = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= piv;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let factor = row[c];
            if factor != 0.0 {
                for (v, p) in row.iter_mut().zip(pivot_row.iter()) {
                    *v -= factor * p;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    fn reduced_cost(&self, cost: &[f64], j: usize) -> f64 {
        let mut rc = cost[j];
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                rc -= cb * self.rows[r][j];
            }
        }
        rc
    }

    /// Bland simplex over the columns for which `allowed` holds. Returns false
    /// on unboundedness.
    fn run(&mut self, cost: &[f64], allowed: impl Fn(usize) -> bool) -> bool {
        loop {
            let mut entering = None;
            for j in 0..self.n_cols {
                if allowed(j) && !self.basis.contains(&j) && self.reduced_cost(cost, j) < -COST_TOL
                {
                    entering = Some(j);
                    break;
                }
            }
            let Some(j) = entering else { return true };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][j];
                if a > PIVOT_TOL {
                    let ratio = self.rhs(r) / a;
                    let replace = match leave {
                        None => true,
                        Some((best_r, best_ratio)) => {
                            ratio < best_ratio - 1e-12
                                || (ratio < best_ratio + 1e-12
                                    && self.basis[r] < self.basis[best_r])
                        }
                    };
                    if replace {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else { return false };
            self.pivot(r, j);
        }
    }

    fn objective(&self, cost: &[f64]) -> f64 {
        self.basis
            .iter()
            .enumerate()
            .map(|(r, &b)| cost[b] * self.rhs(r))
            .sum()
    }

    fn solution(&self, n_vars: usize) -> Vec<f64> {
        let mut x = vec![0.0; n_vars];
        for (r, &b) in self.basis.iter().enumerate() {
            if b < n_vars {
                x[b] = self.rhs(r).max(0.0);
            }
        }
        x
    }
}

/// Solve `min c.x  s.t.  A x = b, x >= 0` by the two-phase dense simplex.
pub fn solve_equality_form(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> LpOutcome {
    let n = c.len();
    let m = a.len();
    assert_eq!(b.len(), m, "rhs length must match row count");
    assert!(a.iter().all(|row| row.len() == n), "ragged constraint matrix");

    // Artificial variables n..n+m form the initial basis; flip rows so b >= 0.
    let n_total = n + m;
    let mut rows = Vec::with_capacity(m);
    for (i, row) in a.iter().enumerate() {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        let mut t = vec![0.0; n_total + 1];
        for (j, &v) in row.iter().enumerate() {
            t[j] = sign * v;
        }
        t[n + i] = 1.0;
        t[n_total] = sign * b[i];
        rows.push(t);
    }
    let mut tab = Tableau {
        rows,
        basis: (n..n_total).collect(),
        n_cols: n_total,
    };

    // Phase 1: minimize the sum of artificials.
    let mut phase1_cost = vec![0.0; n_total];
    for cj in phase1_cost.iter_mut().skip(n) {
        *cj = 1.0;
    }
    if !tab.run(&phase1_cost, |_| true) {
        // The phase-1 objective is bounded below by 0; unboundedness cannot
        // happen, but treat it defensively as infeasible.
        return LpOutcome::Infeasible;
    }
    let scale = 1.0 + b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if tab.objective(&phase1_cost) > FEAS_TOL * scale {
        return LpOutcome::Infeasible;
    }

    // Drive artificials out of the basis; rows that cannot pivot are redundant.
    let mut r = 0;
    while r < tab.rows.len() {
        if tab.basis[r] >= n {
            let col = (0..n).find(|&j| tab.rows[r][j].abs() > PIVOT_TOL);
            match col {
                Some(j) => tab.pivot(r, j),
                None => {
                    tab.rows.remove(r);
                    tab.basis.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }

    // Phase 2 over the structural columns only.
    let mut phase2_cost = vec![0.0; n_total];
    phase2_cost[..n].copy_from_slice(c);
    if !tab.run(&phase2_cost, |j| j < n) {
        return LpOutcome::Unbounded;
    }
    let x = tab.solution(n);
    let value = c.iter().zip(x.iter()).map(|(ci, xi)| ci * xi).sum();
    LpOutcome::Optimal { x, value }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_allocation() {
        // min x0 + 2 x1  s.t.  x0 + x1 = 1  =>  x = (1, 0).
        let out = solve_equality_form(&[1.0, 2.0], &[vec![1.0, 1.0]], &[1.0]);
        match out {
            LpOutcome::Optimal { x, value } => {
                assert!((x[0] - 1.0).abs() < 1e-9);
                assert!(x[1].abs() < 1e-9);
                assert!((value - 1.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn two_constraints() {
        // min 2 x0 + 3 x1 + x2
        //   x0 + x1 + x2 = 4
        //   x0 - x1      = 1    =>  best is x1 = 0, x0 = 1, x2 = 3, value 5.
        let out = solve_equality_form(
            &[2.0, 3.0, 1.0],
            &[vec![1.0, 1.0, 1.0], vec![1.0, -1.0, 0.0]],
            &[4.0, 1.0],
        );
        match out {
            LpOutcome::Optimal { x, value } => {
                assert!((value - 5.0).abs() < 1e-9, "value {value}, x {x:?}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_system() {
        // x0 = 1 and x0 = 2 simultaneously.
        let out = solve_equality_form(&[1.0], &[vec![1.0], vec![1.0]], &[1.0, 2.0]);
        assert_eq!(out, LpOutcome::Infeasible);
    }

    #[test]
    fn unbounded_direction() {
        // min -x0  s.t.  x0 - x1 = 0: push both to infinity.
        let out = solve_equality_form(&[-1.0, 0.0], &[vec![1.0, -1.0]], &[0.0]);
        assert_eq!(out, LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_rows_are_dropped() {
        // Duplicate constraint rows.
        let out = solve_equality_form(
            &[1.0, 1.0],
            &[vec![1.0, 1.0], vec![1.0, 1.0]],
            &[1.0, 1.0],
        );
        assert!(matches!(out, LpOutcome::Optimal { .. }));
    }

    #[test]
    fn negative_rhs_rows_are_normalized() {
        // -x0 - x1 = -2 with min x0 => x = (0, 2).
        let out = solve_equality_form(&[1.0, 0.0], &[vec![-1.0, -1.0]], &[-2.0]);
        match out {
            LpOutcome::Optimal { x, value } => {
                assert!(x[0].abs() < 1e-9);
                assert!((x[1] - 2.0).abs() < 1e-9);
                assert!(value.abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }
}
