//! Two-phase tableau simplex with Bland's rule for `max c·x  s.t.  A x = b,  x ≥ 0`.

use super::{LpError, FEAS_TOL, OPT_TOL, PIVOT_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct StandardLp {
    /// Row-major constraint matrix.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StandardSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Basic variable per row (original indices).
    pub basis: Vec<usize>,
    /// Row duals `y = c_B B⁻¹`.
    pub y: Vec<f64>,
    /// `c_j − yᵀA_j` for every original column.
    pub reduced_costs: Vec<f64>,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    /// Reduced-cost row; last entry holds the negated objective.
    obj: Vec<f64>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, q: usize) {
        let piv = self.rows[r][q];
        for v in self.rows[r].iter_mut() {
            *v /= piv;
        }
        let pr = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                let f = row[q];
                if f != 0.0 {
                    for (v, p) in row.iter_mut().zip(&pr) {
                        *v -= f * p;
                    }
                }
            }
        }
        let f = self.obj[q];
        if f != 0.0 {
            for (v, p) in self.obj.iter_mut().zip(&pr) {
                *v -= f * p;
            }
        }
        self.basis[r] = q;
    }

    fn set_objective(&mut self, cost: &[f64]) {
        self.obj = vec![0.0; self.width + 1];
        self.obj[..cost.len()].copy_from_slice(cost);
        for (r, &k) in self.basis.iter().enumerate() {
            let ck = self.obj[k];
            if ck != 0.0 {
                for (v, p) in self.obj.iter_mut().zip(&self.rows[r]) {
                    *v -= ck * p;
                }
            }
        }
    }

    /// Bland's rule iterations over columns `< allowed`.
    fn optimize(&mut self, allowed: usize, max_iter: usize) -> Result<(), LpError> {
        for _ in 0..max_iter {
            let Some(q) = (0..allowed).find(|&j| self.obj[j] > OPT_TOL) else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for (r, row) in self.rows.iter().enumerate() {
                if row[q] > PIVOT_TOL {
                    let ratio = row[self.width] / row[q];
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((br, bratio)) => {
                            if ratio < bratio - FEAS_TOL
                                || (ratio <= bratio + FEAS_TOL && self.basis[r] < self.basis[br])
                            {
                                Some((r, ratio))
                            } else {
                                Some((br, bratio))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Err(LpError::Unbounded);
            };
            self.pivot(r, q);
        }
        Err(LpError::IterationLimit(max_iter))
    }
}

pub fn solve_standard(lp: &StandardLp) -> Result<StandardSolution, LpError> {
    let m = lp.b.len();
    let n = lp.c.len();
    if lp.a.len() != m || lp.a.iter().any(|r| r.len() != n) {
        return Err(LpError::Malformed("constraint matrix shape".into()));
    }
    let width = n + m;
    let mut sign = vec![1.0; m];
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        if lp.b[i] < 0.0 {
            sign[i] = -1.0;
        }
        let mut row = vec![0.0; width + 1];
        for j in 0..n {
            row[j] = sign[i] * lp.a[i][j];
        }
        row[n + i] = 1.0;
        row[width] = sign[i] * lp.b[i];
        rows.push(row);
    }
    let mut t = Tableau {
        rows,
        obj: Vec::new(),
        basis: (n..width).collect(),
        width,
    };
    let max_iter = 100 * (width + 10);

    let mut phase1 = vec![0.0; width];
    phase1[n..].iter_mut().for_each(|c| *c = -1.0);
    t.set_objective(&phase1);
    t.optimize(width, max_iter)?;
    let infeas: f64 = t
        .basis
        .iter()
        .enumerate()
        .filter(|(_, &k)| k >= n)
        .map(|(r, _)| t.rows[r][width])
        .sum();
    if infeas > FEAS_TOL * (1.0 + lp.b.iter().map(|v| v.abs()).sum::<f64>()) {
        return Err(LpError::Infeasible);
    }
    // Drive zero-valued artificials out of the basis where possible.
    for r in 0..m {
        if t.basis[r] >= n {
            if let Some(q) = (0..n).find(|&j| t.rows[r][j].abs() > PIVOT_TOL) {
                t.pivot(r, q);
            }
        }
    }

    let mut phase2 = vec![0.0; width];
    phase2[..n].copy_from_slice(&lp.c);
    t.set_objective(&phase2);
    t.optimize(n, max_iter)?;

    let mut x = vec![0.0; n];
    for (r, &k) in t.basis.iter().enumerate() {
        if k < n {
            x[k] = t.rows[r][width].max(0.0);
        }
    }
    let objective = x.iter().zip(&lp.c).map(|(x, c)| x * c).sum();
    // The artificial column of row i carries B⁻¹e_i, so its reduced cost is −y_i.
    let y: Vec<f64> = (0..m).map(|i| -t.obj[n + i] * sign[i]).collect();
    let reduced_costs = t.obj[..n].to_vec();
    Ok(StandardSolution {
        x,
        objective,
        basis: t.basis.clone(),
        y,
        reduced_costs,
    })
}
