//! Dense two-phase simplex for the small budgeted programs of the search.
//!
//! Maximizes `c·x` subject to linear rows and `x ≥ 0`. Pricing is Dantzig's
//! rule, switching to Bland's rule after a pivot budget so degenerate
//! cycling terminates.

const EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
struct Row {
    coeffs: Vec<(usize, f64)>,
    relation: Relation,
    rhs: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct LinearProgram {
    vars: usize,
    objective: Vec<f64>,
    rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

struct Tableau {
    cells: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.cells[i][self.width]
    }

    fn pivot(&mut self, obj: &mut [f64], row: usize, col: usize) {
        let p = self.cells[row][col];
        for v in self.cells[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.cells[row].clone();
        for (i, r) in self.cells.iter_mut().enumerate() {
            if i != row {
                let f = r[col];
                if f != 0.0 {
                    for (v, pv) in r.iter_mut().zip(&pivot_row) {
                        *v -= f * pv;
                    }
                }
            }
        }
        let f = obj[col];
        if f != 0.0 {
            for (v, pv) in obj.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
        }
        self.basis[row] = col;
    }

    /// Runs to optimality on `obj` (reduced costs, negative = improving).
    /// Returns `false` if unbounded.
    fn optimize(&mut self, obj: &mut [f64], allowed: usize) -> bool {
        let bland_after = 50 * (self.cells.len() + allowed);
        let mut iterations = 0usize;
        loop {
            let entering = if iterations < bland_after {
                (0..allowed)
                    .filter(|&j| obj[j] < -EPS)
                    .min_by(|&a, &b| obj[a].total_cmp(&obj[b]).then(a.cmp(&b)))
            } else {
                (0..allowed).find(|&j| obj[j] < -EPS)
            };
            let Some(col) = entering else {
                return true;
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.cells.len() {
                let a = self.cells[i][col];
                if a > EPS {
                    let ratio = self.rhs(i) / a;
                    let better = match leave {
                        None => true,
                        Some((l, r)) => ratio < r - EPS || (ratio <= r + EPS && self.basis[i] < self.basis[l]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((row, _)) = leave else {
                return false;
            };
            self.pivot(obj, row, col);
            iterations += 1;
        }
    }
}

impl LinearProgram {
    pub(crate) fn new(vars: usize) -> Self {
        Self {
            vars,
            objective: vec![0.0; vars],
            rows: Vec::new(),
        }
    }

    pub(crate) fn set_objective(&mut self, j: usize, c: f64) {
        self.objective[j] = c;
    }

    pub(crate) fn add_row(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        debug_assert!(coeffs.iter().all(|&(j, _)| j < self.vars));
        self.rows.push(Row { coeffs, relation, rhs });
    }

    pub(crate) fn solve(&self) -> LpOutcome {
        let n = self.vars;
        let rows: Vec<Row> = self
            .rows
            .iter()
            .map(|r| {
                if r.rhs < 0.0 {
                    Row {
                        coeffs: r.coeffs.iter().map(|&(j, a)| (j, -a)).collect(),
                        relation: match r.relation {
                            Relation::Le => Relation::Ge,
                            Relation::Ge => Relation::Le,
                            Relation::Eq => Relation::Eq,
                        },
                        rhs: -r.rhs,
                    }
                } else {
                    r.clone()
                }
            })
            .collect();
        let slacks = rows.iter().filter(|r| r.relation != Relation::Eq).count();
        let artificials = rows.iter().filter(|r| r.relation != Relation::Le).count();
        let structural = n + slacks;
        let width = structural + artificials;
        let m = rows.len();

        let mut cells = vec![vec![0.0; width + 1]; m];
        let mut basis = vec![0; m];
        let (mut next_slack, mut next_art) = (n, structural);
        for (i, r) in rows.iter().enumerate() {
            for &(j, a) in &r.coeffs {
                cells[i][j] += a;
            }
            cells[i][width] = r.rhs;
            match r.relation {
                Relation::Le => {
                    cells[i][next_slack] = 1.0;
                    basis[i] = next_slack;
                    next_slack += 1;
                }
                Relation::Ge => {
                    cells[i][next_slack] = -1.0;
                    next_slack += 1;
                    cells[i][next_art] = 1.0;
                    basis[i] = next_art;
                    next_art += 1;
                }
                Relation::Eq => {
                    cells[i][next_art] = 1.0;
                    basis[i] = next_art;
                    next_art += 1;
                }
            }
        }
        let mut tab = Tableau { cells, basis, width };

        if artificials > 0 {
            let mut phase1 = vec![0.0; width + 1];
            phase1[structural..width].iter_mut().for_each(|v| *v = 1.0);
            for i in 0..m {
                if tab.basis[i] >= structural {
                    for (v, t) in phase1.iter_mut().zip(&tab.cells[i]) {
                        *v -= t;
                    }
                }
            }
            tab.optimize(&mut phase1, width);
            if phase1[width] < -1e-9 {
                return LpOutcome::Infeasible;
            }
            for i in 0..m {
                if tab.basis[i] >= structural {
                    if let Some(j) = (0..structural).find(|&j| tab.cells[i][j].abs() > EPS) {
                        tab.pivot(&mut phase1, i, j);
                    }
                }
            }
        }

        let mut obj = vec![0.0; width + 1];
        for (o, c) in obj.iter_mut().zip(&self.objective) {
            *o = -c;
        }
        for i in 0..m {
            let b = tab.basis[i];
            let f = obj[b];
            if f != 0.0 {
                for (v, t) in obj.iter_mut().zip(&tab.cells[i]) {
                    *v -= f * t;
                }
            }
        }
        if !tab.optimize(&mut obj, structural) {
            return LpOutcome::Unbounded;
        }
        let mut x = vec![0.0; n];
        for i in 0..m {
            if tab.basis[i] < n {
                x[tab.basis[i]] = tab.rhs(i).max(0.0);
            }
        }
        let value = x.iter().zip(&self.objective).map(|(a, b)| a * b).sum();
        LpOutcome::Optimal { x, value }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_program() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36
        let mut lp = LinearProgram::new(2);
        lp.set_objective(0, 3.0);
        lp.set_objective(1, 5.0);
        lp.add_row(vec![(0, 1.0)], Relation::Le, 4.0);
        lp.add_row(vec![(1, 2.0)], Relation::Le, 12.0);
        lp.add_row(vec![(0, 3.0), (1, 2.0)], Relation::Le, 18.0);
        match lp.solve() {
            LpOutcome::Optimal { x, value } => {
                assert!((value - 36.0).abs() < 1e-9);
                assert!((x[0] - 2.0).abs() < 1e-9 && (x[1] - 6.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn equality_and_ge_rows() {
        // max -x - y, x + y = 1, x ≥ 0.25, y - x ≥ -1 → value -1
        let mut lp = LinearProgram::new(2);
        lp.set_objective(0, -1.0);
        lp.set_objective(1, -1.0);
        lp.add_row(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 1.0);
        lp.add_row(vec![(0, 1.0)], Relation::Ge, 0.25);
        lp.add_row(vec![(1, 1.0), (0, -1.0)], Relation::Ge, -1.0);
        match lp.solve() {
            LpOutcome::Optimal { x, value } => {
                assert!((value + 1.0).abs() < 1e-9);
                assert!(x[0] >= 0.25 - 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(1);
        lp.add_row(vec![(0, 1.0)], Relation::Le, 1.0);
        lp.add_row(vec![(0, 1.0)], Relation::Ge, 2.0);
        assert_eq!(lp.solve(), LpOutcome::Infeasible);
        let mut lp = LinearProgram::new(1);
        lp.set_objective(0, 1.0);
        lp.add_row(vec![(0, 1.0)], Relation::Ge, 1.0);
        assert_eq!(lp.solve(), LpOutcome::Unbounded);
    }
}
