//! Dense two-phase simplex with Bland's pivoting rule, for small programs.

use serde::{Deserialize, Serialize};

/// `min c·x` subject to `a_ub x <= b_ub`, `a_eq x = b_eq` and `x_i >= lower[i]`
/// (a `None` bound leaves the variable free).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lp {
    pub c: Vec<f64>,
    pub a_ub: Vec<Vec<f64>>,
    pub b_ub: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
    pub lower: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

const EPS: f64 = 1e-9;
const MAX_PIVOTS: usize = 100_000;

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.rows[r][self.cols]
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let p = self.rows[r][j];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (k, row) in self.rows.iter_mut().enumerate() {
            if k != r {
                let f = row[j];
                if f != 0.0 {
                    for (v, pv) in row.iter_mut().zip(&pivot_row) {
                        *v -= f * pv;
                    }
                }
            }
        }
        self.basis[r] = j;
    }

    /// Minimises `cost` over the columns flagged in `allowed`. Returns false
    /// when the objective is unbounded below.
    fn run(&mut self, cost: &[f64], allowed: &[bool]) -> bool {
        for _ in 0..MAX_PIVOTS {
            let entering = (0..self.cols).find(|&j| {
                if !allowed[j] || self.basis.contains(&j) {
                    return false;
                }
                let z: f64 = cost[j] - (0..self.rows.len()).map(|r| cost[self.basis[r]] * self.rows[r][j]).sum::<f64>();
                z < -EPS
            });
            let Some(j) = entering else { return true };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][j];
                if a > EPS {
                    let ratio = self.rhs(r) / a;
                    match leave {
                        None => leave = Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - EPS || (ratio <= lratio + EPS && self.basis[r] < self.basis[lr]) {
                                leave = Some((r, ratio));
                            }
                        }
                    }
                }
            }
            match leave {
                None => return false,
                Some((r, _)) => self.pivot(r, j),
            }
        }
        true
    }
}

pub fn solve_lp(lp: &Lp) -> LpOutcome {
    let n = lp.c.len();
    // Column layout of the shifted, sign-split variables.
    let mut map: Vec<(usize, Option<usize>)> = Vec::with_capacity(n);
    let mut cols = 0;
    for b in &lp.lower {
        match b {
            Some(_) => {
                map.push((cols, None));
                cols += 1;
            }
            None => {
                map.push((cols, Some(cols + 1)));
                cols += 2;
            }
        }
    }
    let structural = cols;
    let shift: Vec<f64> = lp.lower.iter().map(|b| b.unwrap_or(0.0)).collect();

    let m_ub = lp.a_ub.len();
    let m = m_ub + lp.a_eq.len();
    let slack0 = structural;
    let art0 = structural + m_ub;
    let total = art0 + m;

    let mut rows = Vec::with_capacity(m);
    for (k, (a, b)) in lp.a_ub.iter().zip(&lp.b_ub).chain(lp.a_eq.iter().zip(&lp.b_eq)).enumerate() {
        let mut row = vec![0.0; total + 1];
        let mut rhs = *b;
        for (i, &coef) in a.iter().enumerate() {
            rhs -= coef * shift[i];
            let (pos, neg) = map[i];
            row[pos] = coef;
            if let Some(neg) = neg {
                row[neg] = -coef;
            }
        }
        if k < m_ub {
            row[slack0 + k] = 1.0;
        }
        if rhs < 0.0 {
            row.iter_mut().for_each(|v| *v = -*v);
            rhs = -rhs;
        }
        row[art0 + k] = 1.0;
        row[total] = rhs;
        rows.push(row);
    }

    let mut tab = Tableau { rows, basis: (art0..total).collect(), cols: total };
    let phase1: Vec<f64> = (0..total).map(|j| if j >= art0 { 1.0 } else { 0.0 }).collect();
    tab.run(&phase1, &vec![true; total]);
    let infeas: f64 = (0..tab.rows.len()).filter(|&r| tab.basis[r] >= art0).map(|r| tab.rhs(r)).sum();
    let scale = 1.0 + lp.b_ub.iter().chain(&lp.b_eq).fold(0.0f64, |a, b| a.max(b.abs()));
    if infeas > 1e-7 * scale {
        return LpOutcome::Infeasible;
    }
    // Drive remaining artificials out of the basis, dropping redundant rows.
    let mut r = 0;
    while r < tab.rows.len() {
        if tab.basis[r] >= art0 {
            match (0..art0).find(|&j| tab.rows[r][j].abs() > EPS && !tab.basis.contains(&j)) {
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

    let mut cost = vec![0.0; total];
    for (i, &(pos, neg)) in map.iter().enumerate() {
        cost[pos] = lp.c[i];
        if let Some(neg) = neg {
            cost[neg] = -lp.c[i];
        }
    }
    let allowed: Vec<bool> = (0..total).map(|j| j < art0).collect();
    if !tab.run(&cost, &allowed) {
        return LpOutcome::Unbounded;
    }
    let mut y = vec![0.0; total];
    for (r, &b) in tab.basis.iter().enumerate() {
        y[b] = tab.rhs(r);
    }
    let x: Vec<f64> = map
        .iter()
        .enumerate()
        .map(|(i, &(pos, neg))| shift[i] + y[pos] - neg.map_or(0.0, |k| y[k]))
        .collect();
    let objective = x.iter().zip(&lp.c).map(|(a, b)| a * b).sum();
    LpOutcome::Optimal { x, objective }
}
