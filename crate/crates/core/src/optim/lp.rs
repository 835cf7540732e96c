//! Dense two-phase simplex for the small linear programs solved inside the
//! trust-region step.
//!
//! Solves `min c^T x  s.t.  A x <= b, x >= 0` with Bland's rule, which keeps
//! the pivot sequence (and therefore the optimizer) deterministic.

const EPS: f64 = 1e-11;
const MAX_PIVOTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    cost: Vec<f64>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.rows[r][self.width]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.rows[row][col];
        for v in self.rows[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[row].clone();
        for (r, other) in self.rows.iter_mut().enumerate() {
            if r == row {
                continue;
            }
            let f = other[col];
            if f != 0.0 {
                for (o, p) in other.iter_mut().zip(&pivot_row) {
                    *o -= f * p;
                }
            }
        }
        let f = self.cost[col];
        if f != 0.0 {
            for (o, p) in self.cost.iter_mut().zip(&pivot_row) {
                *o -= f * p;
            }
        }
        self.basis[row] = col;
    }

    /// Runs simplex iterations on the current cost row. Columns `>= allowed`
    /// never enter. Returns false when unbounded.
    fn optimize(&mut self, allowed: usize) -> Option<bool> {
        for _ in 0..MAX_PIVOTS {
            let Some(col) = (0..allowed).find(|&j| self.cost[j] < -EPS) else {
                return Some(true);
            };
            let mut best: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][col];
                if a > EPS {
                    let ratio = self.rhs(r) / a;
                    match best {
                        Some((br, bv))
                            if ratio > bv + EPS
                                || (ratio > bv - EPS && self.basis[r] > self.basis[br]) => {}
                        _ => best = Some((r, ratio)),
                    }
                }
            }
            match best {
                Some((row, _)) => self.pivot(row, col),
                None => return Some(false),
            }
        }
        None
    }
}

/// Minimizes `c^T x` over `{x >= 0 : A x <= b}`.
pub fn solve(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> LpOutcome {
    let n = c.len();
    let m = b.len();
    let n_art = b.iter().filter(|v| **v < 0.0).count();
    let width = n + m + n_art;
    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut art = n + m;
    for i in 0..m {
        let mut row = vec![0.0; width + 1];
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            row[j] = sign * a[i][j];
        }
        row[n + i] = sign;
        row[width] = sign * b[i];
        if b[i] < 0.0 {
            row[art] = 1.0;
            basis.push(art);
            art += 1;
        } else {
            basis.push(n + i);
        }
        rows.push(row);
    }
    let mut t = Tableau {
        rows,
        cost: vec![0.0; width + 1],
        basis,
        width,
    };

    if n_art > 0 {
        for j in n + m..width {
            t.cost[j] = 1.0;
        }
        for r in 0..m {
            if t.basis[r] >= n + m {
                for j in 0..=width {
                    t.cost[j] -= t.rows[r][j];
                }
            }
        }
        if t.optimize(width) != Some(true) {
            return LpOutcome::Infeasible;
        }
        if -t.cost[width] > 1e-9 {
            return LpOutcome::Infeasible;
        }
        for r in 0..m {
            if t.basis[r] >= n + m {
                if let Some(col) = (0..n + m).find(|&j| t.rows[r][j].abs() > 1e-9) {
                    t.pivot(r, col);
                }
            }
        }
    }

    t.cost = vec![0.0; width + 1];
    t.cost[..n].copy_from_slice(c);
    for r in 0..m {
        let cb = if t.basis[r] < n { c[t.basis[r]] } else { 0.0 };
        if cb != 0.0 {
            for j in 0..=width {
                t.cost[j] -= cb * t.rows[r][j];
            }
        }
    }
    match t.optimize(n + m) {
        Some(true) => {}
        Some(false) => return LpOutcome::Unbounded,
        None => return LpOutcome::Infeasible,
    }
    let mut x = vec![0.0; n];
    for r in 0..m {
        if t.basis[r] < n {
            x[t.basis[r]] = t.rhs(r).max(0.0);
        }
    }
    let objective = c.iter().zip(&x).map(|(a, b)| a * b).sum();
    LpOutcome::Optimal { x, objective }
}
