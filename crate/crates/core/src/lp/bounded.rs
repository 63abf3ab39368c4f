//! Long-step dual simplex for `max c·x  s.t.  A x ≤ b,  0 ≤ x ≤ u`.
//!
//! Built for problems with few rows and many boxed columns (the hindsight
//! relaxation and the LP form of the dual objective). The basis inverse is
//! kept dense and rebuilt every iteration, which is cheap for `m ≤ ~20`.

use super::LpError;

const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-11;
const PIVOT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Basic(usize),
    AtLower,
    AtUpper,
}

/// Problem data; columns are stored densely, one `Vec` of length `m` per column.
#[derive(Debug, Clone)]
pub struct BoundedLp {
    m: usize,
    cost: Vec<f64>,
    cols: Vec<Vec<f64>>,
    upper: Vec<f64>,
    rhs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BoundedSolution {
    pub x: Vec<f64>,
    /// Row duals, nonnegative.
    pub y: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl BoundedLp {
    pub fn new(rhs: Vec<f64>) -> Self {
        BoundedLp {
            m: rhs.len(),
            cost: Vec::new(),
            cols: Vec::new(),
            upper: Vec::new(),
            rhs,
        }
    }

    /// Adds a column; `upper` may be `f64::INFINITY`.
    pub fn push_column(&mut self, cost: f64, col: Vec<f64>, upper: f64) -> usize {
        assert_eq!(col.len(), self.m, "column length must equal row count");
        self.cost.push(cost);
        self.cols.push(col);
        self.upper.push(upper);
        self.cols.len() - 1
    }

    pub fn n(&self) -> usize {
        self.cols.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    fn column_value(&self, k: usize, row: usize) -> f64 {
        if k < self.n() {
            self.cols[k][row]
        } else if k - self.n() == row {
            1.0
        } else {
            0.0
        }
    }

    fn var_cost(&self, k: usize) -> f64 {
        if k < self.n() {
            self.cost[k]
        } else {
            0.0
        }
    }

    fn var_upper(&self, k: usize) -> f64 {
        if k < self.n() {
            self.upper[k]
        } else {
            f64::INFINITY
        }
    }

    pub fn solve(&self) -> Result<BoundedSolution, LpError> {
        let n = self.n();
        let m = self.m;
        let total = n + m;
        for k in 0..n {
            if !(self.upper[k] >= 0.0) || !self.cost[k].is_finite() {
                return Err(LpError::Malformed(format!("column {k} has bad bound or cost")));
            }
            if self.cost[k] > 0.0 && self.upper[k].is_infinite() {
                return Err(LpError::Malformed(format!(
                    "column {k} has positive cost and no upper bound"
                )));
            }
        }
        if self.rhs.iter().any(|v| !v.is_finite()) {
            return Err(LpError::Malformed("non-finite right-hand side".into()));
        }

        // Slack basis with y = 0 is dual feasible once each column sits at the
        // bound its cost prefers.
        let mut status: Vec<Status> = (0..total)
            .map(|k| {
                if k >= n {
                    Status::Basic(k - n)
                } else if self.cost[k] > 0.0 {
                    Status::AtUpper
                } else {
                    Status::AtLower
                }
            })
            .collect();
        let mut basis: Vec<usize> = (n..total).collect();
        let mut binv = identity(m);
        let max_iter = 50 * total + 1000;
        let mut d = vec![0.0; total];
        let mut x_b = vec![0.0; m];
        let mut cands: Vec<(f64, f64, usize)> = Vec::new();
        let mut row_alpha = vec![0.0; total];

        for iter in 0..max_iter {
            // y = c_B B⁻¹
            let mut y = vec![0.0; m];
            for (r, &k) in basis.iter().enumerate() {
                let c = self.var_cost(k);
                if c != 0.0 {
                    for i in 0..m {
                        y[i] += c * binv[r][i];
                    }
                }
            }
            for k in 0..total {
                d[k] = match status[k] {
                    Status::Basic(_) => 0.0,
                    _ => {
                        let mut v = self.var_cost(k);
                        if k < n {
                            v -= dot(&y, &self.cols[k]);
                        } else {
                            v -= y[k - n];
                        }
                        v
                    }
                };
            }
            // x_B = B⁻¹ (b − Σ_{at upper} A_k u_k)
            let mut rhs = self.rhs.clone();
            for k in 0..n {
                if status[k] == Status::AtUpper {
                    let u = self.upper[k];
                    for (i, v) in self.cols[k].iter().enumerate() {
                        rhs[i] -= v * u;
                    }
                }
            }
            for r in 0..m {
                x_b[r] = dot(&binv[r], &rhs);
            }

            // Leaving row: largest bound violation.
            let mut leave: Option<(usize, f64, f64)> = None;
            for r in 0..m {
                let k = basis[r];
                let u = self.var_upper(k);
                let (viol, sigma) = if x_b[r] < -PRIMAL_TOL {
                    (-x_b[r], 1.0)
                } else if x_b[r] > u + PRIMAL_TOL {
                    (x_b[r] - u, -1.0)
                } else {
                    continue;
                };
                let scale = 1.0 + u.min(x_b[r].abs());
                let score = viol / scale;
                if leave.is_none_or(|(_, best, _)| score > best) {
                    leave = Some((r, score, sigma));
                }
            }
            let Some((r, _, sigma)) = leave else {
                return Ok(self.extract(&status, &basis, &x_b, y, iter));
            };
            let leaving = basis[r];
            let mut slope = if sigma > 0.0 {
                -x_b[r]
            } else {
                x_b[r] - self.var_upper(leaving)
            };

            for k in 0..total {
                row_alpha[k] = match status[k] {
                    Status::Basic(_) => 0.0,
                    _ => {
                        if k < n {
                            dot(&binv[r], &self.cols[k])
                        } else {
                            binv[r][k - n]
                        }
                    }
                };
            }

            cands.clear();
            for k in 0..total {
                let at = match status[k] {
                    Status::Basic(_) => continue,
                    s => s,
                };
                let a_t = -sigma * row_alpha[k];
                if a_t.abs() < PIVOT_TOL {
                    continue;
                }
                let eligible = (at == Status::AtLower && a_t > 0.0) || (at == Status::AtUpper && a_t < 0.0);
                if eligible {
                    let ratio = d[k].abs().max(0.0) / a_t.abs();
                    let ratio = if ratio < DUAL_TOL { 0.0 } else { ratio };
                    cands.push((ratio, a_t.abs(), k));
                }
            }
            if cands.is_empty() {
                return Err(LpError::Infeasible);
            }
            cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)).then(a.2.cmp(&b.2)));

            let mut entering = None;
            let mut flips = Vec::new();
            for &(_, abs_alpha, k) in &cands {
                let u = self.var_upper(k);
                if u.is_finite() {
                    let next = slope - abs_alpha * u;
                    if next > PRIMAL_TOL {
                        slope = next;
                        flips.push(k);
                        continue;
                    }
                }
                entering = Some(k);
                break;
            }
            // Flipping every candidate still leaves the row violated: dual ray.
            let Some(q) = entering else {
                return Err(LpError::Infeasible);
            };
            for k in flips {
                status[k] = match status[k] {
                    Status::AtLower => Status::AtUpper,
                    Status::AtUpper => Status::AtLower,
                    s => s,
                };
            }
            status[leaving] = if sigma > 0.0 {
                Status::AtLower
            } else {
                Status::AtUpper
            };
            status[q] = Status::Basic(r);
            basis[r] = q;

            // Pivot update of B⁻¹ on column q.
            let col_q: Vec<f64> = (0..m)
                .map(|row| {
                    (0..m)
                        .map(|i| binv[row][i] * self.column_value(q, i))
                        .sum::<f64>()
                })
                .collect();
            let piv = col_q[r];
            if piv.abs() < PIVOT_TOL {
                return Err(LpError::Numerical("vanishing pivot".into()));
            }
            let pivot_row: Vec<f64> = binv[r].iter().map(|v| v / piv).collect();
            for row in 0..m {
                if row == r {
                    binv[row].clone_from(&pivot_row);
                } else if col_q[row] != 0.0 {
                    let f = col_q[row];
                    for i in 0..m {
                        binv[row][i] -= f * pivot_row[i];
                    }
                }
            }
            // Refactor periodically to curb drift.
            if iter % 32 == 31 {
                binv = self.invert_basis(&basis)?;
            }
        }
        Err(LpError::IterationLimit(max_iter))
    }

    fn invert_basis(&self, basis: &[usize]) -> Result<Vec<Vec<f64>>, LpError> {
        let m = self.m;
        let mut a: Vec<Vec<f64>> = (0..m)
            .map(|i| basis.iter().map(|&k| self.column_value(k, i)).collect())
            .collect();
        let mut inv = identity(m);
        for c in 0..m {
            let p = (c..m)
                .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
                .expect("nonempty");
            if a[p][c].abs() < PIVOT_TOL {
                return Err(LpError::Numerical("singular basis".into()));
            }
            a.swap(c, p);
            inv.swap(c, p);
            let piv = a[c][c];
            for v in a[c].iter_mut() {
                *v /= piv;
            }
            for v in inv[c].iter_mut() {
                *v /= piv;
            }
            for i in 0..m {
                if i != c && a[i][c] != 0.0 {
                    let f = a[i][c];
                    for j in 0..m {
                        a[i][j] -= f * a[c][j];
                        inv[i][j] -= f * inv[c][j];
                    }
                }
            }
        }
        Ok(inv)
    }

    fn extract(
        &self,
        status: &[Status],
        basis: &[usize],
        x_b: &[f64],
        y: Vec<f64>,
        iterations: usize,
    ) -> BoundedSolution {
        let n = self.n();
        let mut x = vec![0.0; n];
        for k in 0..n {
            x[k] = match status[k] {
                Status::AtLower => 0.0,
                Status::AtUpper => self.upper[k],
                Status::Basic(_) => 0.0,
            };
        }
        for (r, &k) in basis.iter().enumerate() {
            if k < n {
                x[k] = x_b[r].clamp(0.0, self.upper[k]);
            }
        }
        let objective = x.iter().zip(&self.cost).map(|(x, c)| x * c).sum();
        BoundedSolution {
            x,
            y: y.into_iter().map(|v| v.max(0.0)).collect(),
            objective,
            iterations,
        }
    }
}

fn identity(m: usize) -> Vec<Vec<f64>> {
    (0..m)
        .map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
