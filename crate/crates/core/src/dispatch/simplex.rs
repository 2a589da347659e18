//! Dense two-phase tableau simplex for small linear programs.
//!
//! Maximises `c·x` subject to rows `a·x {<=, >=, =} b` and `x >= 0`. Intended
//! for cross-checking the specialised dispatch solver, not for production
//! scale: the tableau is stored densely.

use thiserror::Error;

const PIVOT_EPS: f64 = 1e-9;
const FEAS_EPS: f64 = 1e-7;
/// Degenerate pivots tolerated before switching to Bland's rule.
const STALL_LIMIT: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("problem is infeasible")]
    Infeasible,
    #[error("problem is unbounded")]
    Unbounded,
    #[error("iteration limit reached")]
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    objective: Vec<f64>,
    rows: Vec<(Vec<f64>, Relation, f64)>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// `∂objective/∂b_i` for each row, in the orientation the row was added.
    pub duals: Vec<f64>,
}

impl LinearProgram {
    pub fn maximize(objective: Vec<f64>) -> Self {
        Self {
            objective,
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Adds a row given as sparse `(variable, coefficient)` pairs.
    pub fn add_row(&mut self, terms: &[(usize, f64)], rel: Relation, rhs: f64) -> usize {
        let mut row = vec![0.0; self.num_vars()];
        for &(j, a) in terms {
            row[j] += a;
        }
        self.rows.push((row, rel, rhs));
        self.rows.len() - 1
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        Tableau::build(self).run(self)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ColKind {
    Structural,
    Slack,
    Artificial,
}

struct Tableau {
    m: usize,
    width: usize,
    /// Row-major `m × width`; the last column is the right-hand side.
    cells: Vec<f64>,
    /// Reduced costs `c_B B⁻¹ A_j − c_j` followed by the objective value.
    obj: Vec<f64>,
    basis: Vec<usize>,
    kinds: Vec<ColKind>,
    /// Row sign flip applied to make the right-hand side non-negative.
    flip: Vec<f64>,
    /// Column holding the slack (or, for equalities, artificial) of each row
    /// and its coefficient in the normalised row.
    row_marker: Vec<(usize, f64)>,
    live: Vec<bool>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.num_vars();
        let m = lp.rows.len();
        let mut flip = Vec::with_capacity(m);
        let mut rels = Vec::with_capacity(m);
        for (_, rel, b) in &lp.rows {
            let (sigma, rel) = if *b < 0.0 {
                let flipped = match rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                (-1.0, flipped)
            } else {
                (1.0, *rel)
            };
            flip.push(sigma);
            rels.push(rel);
        }
        let slacks = rels.iter().filter(|r| **r != Relation::Eq).count();
        let artificials = rels.iter().filter(|r| **r != Relation::Le).count();
        let cols = n + slacks + artificials;
        let width = cols + 1;

        let mut kinds = vec![ColKind::Structural; n];
        kinds.extend(std::iter::repeat_n(ColKind::Slack, slacks));
        kinds.extend(std::iter::repeat_n(ColKind::Artificial, artificials));

        let mut cells = vec![0.0; m * width];
        let mut basis = vec![0; m];
        let mut row_marker = vec![(0, 0.0); m];
        let mut next_slack = n;
        let mut next_art = n + slacks;
        for (i, (a, _, b)) in lp.rows.iter().enumerate() {
            let row = &mut cells[i * width..(i + 1) * width];
            for j in 0..n {
                row[j] = flip[i] * a[j];
            }
            row[cols] = flip[i] * b;
            match rels[i] {
                Relation::Le => {
                    row[next_slack] = 1.0;
                    basis[i] = next_slack;
                    row_marker[i] = (next_slack, 1.0);
                    next_slack += 1;
                }
                Relation::Ge => {
                    row[next_slack] = -1.0;
                    row_marker[i] = (next_slack, -1.0);
                    next_slack += 1;
                    row[next_art] = 1.0;
                    basis[i] = next_art;
                    next_art += 1;
                }
                Relation::Eq => {
                    row[next_art] = 1.0;
                    basis[i] = next_art;
                    row_marker[i] = (next_art, 1.0);
                    next_art += 1;
                }
            }
        }
        Self {
            m,
            width,
            cells,
            obj: vec![0.0; width],
            basis,
            kinds,
            flip,
            row_marker,
            live: vec![true; m],
        }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.cells[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.width - 1)
    }

    /// Rebuilds the objective row for column costs `cost`.
    fn price(&mut self, cost: &[f64]) {
        let w = self.width;
        self.obj.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..w - 1 {
            self.obj[j] = -cost[j];
        }
        for i in 0..self.m {
            if !self.live[i] {
                continue;
            }
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for j in 0..w {
                    self.obj[j] += cb * self.cells[i * w + j];
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let p = self.cells[r * w + c];
        for j in 0..w {
            self.cells[r * w + j] /= p;
        }
        let (before, rest) = self.cells.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for (i, row) in before.chunks_mut(w).chain(after.chunks_mut(w)).enumerate() {
            let i = if i >= r { i + 1 } else { i };
            if !self.live[i] {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for j in 0..w {
                    row[j] -= f * prow[j];
                }
                row[c] = 0.0;
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for j in 0..w {
                self.obj[j] -= f * prow[j];
            }
            self.obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    fn iterate(&mut self, allowed: impl Fn(usize) -> bool) -> Result<(), LpError> {
        let cols = self.width - 1;
        let max_iters = 50 * (self.m + cols) + 1000;
        let mut stall = 0;
        for _ in 0..max_iters {
            let bland = stall > STALL_LIMIT;
            let mut enter = None;
            let mut best = -PIVOT_EPS;
            for j in 0..cols {
                if !allowed(j) {
                    continue;
                }
                let r = self.obj[j];
                if r < -PIVOT_EPS {
                    if bland {
                        enter = Some(j);
                        break;
                    }
                    if r < best {
                        best = r;
                        enter = Some(j);
                    }
                }
            }
            let Some(c) = enter else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                if !self.live[i] {
                    continue;
                }
                let a = self.at(i, c);
                if a > PIVOT_EPS {
                    let ratio = self.rhs(i) / a;
                    let better = match leave {
                        None => true,
                        Some((li, lr)) => {
                            ratio < lr - 1e-12 || (ratio <= lr + 1e-12 && self.basis[i] < self.basis[li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                return Err(LpError::Unbounded);
            };
            stall = if ratio.abs() <= 1e-12 { stall + 1 } else { 0 };
            self.pivot(r, c);
        }
        Err(LpError::IterationLimit)
    }

    fn run(mut self, lp: &LinearProgram) -> Result<LpSolution, LpError> {
        let n = lp.num_vars();
        let cols = self.width - 1;
        let has_artificial = self.kinds.contains(&ColKind::Artificial);

        if has_artificial {
            let phase1: Vec<f64> = self
                .kinds
                .iter()
                .map(|k| if *k == ColKind::Artificial { -1.0 } else { 0.0 })
                .collect();
            self.price(&phase1);
            self.iterate(|_| true)?;
            let scale = 1.0 + (0..self.m).map(|i| self.rhs(i).abs()).fold(0.0, f64::max);
            if self.obj[cols] < -FEAS_EPS * scale {
                return Err(LpError::Infeasible);
            }
            // Drive zero-level artificials out of the basis; rows where that
            // is impossible are redundant.
            for i in 0..self.m {
                if self.kinds[self.basis[i]] != ColKind::Artificial {
                    continue;
                }
                let entering = (0..cols).find(|&j| {
                    self.kinds[j] != ColKind::Artificial && self.at(i, j).abs() > PIVOT_EPS
                });
                match entering {
                    Some(j) => self.pivot(i, j),
                    None => self.live[i] = false,
                }
            }
        }

        let mut cost = vec![0.0; cols];
        cost[..n].copy_from_slice(&lp.objective);
        self.price(&cost);
        let kinds = self.kinds.clone();
        self.iterate(|j| kinds[j] != ColKind::Artificial)?;

        let mut x = vec![0.0; n];
        for i in 0..self.m {
            if self.live[i] && self.basis[i] < n {
                x[self.basis[i]] = self.rhs(i);
            }
        }
        let duals = (0..self.m)
            .map(|i| {
                if !self.live[i] {
                    return 0.0;
                }
                let (col, coef) = self.row_marker[i];
                self.flip[i] * self.obj[col] * coef
            })
            .collect();
        Ok(LpSolution {
            x,
            objective: self.obj[cols],
            duals,
        })
    }
}
