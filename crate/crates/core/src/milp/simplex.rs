//! Dense two-phase tableau simplex with Bland's rule, for the small LPs the
//! enumeration oracle solves. Kept independent of the model emitter and of
//! every solver backend.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpResult {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

/// `min c·x` subject to rows and `lower <= x <= upper`; every lower bound
/// must be finite.
#[derive(Debug, Clone, Default)]
pub(crate) struct DenseLp {
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<(Vec<f64>, Sense, f64)>,
}

const PIVOT_EPS: f64 = 1e-11;

impl DenseLp {
    pub fn new(n: usize) -> Self {
        Self {
            objective: vec![0.0; n],
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
            rows: Vec::new(),
        }
    }

    pub fn add_row(&mut self, coefficients: Vec<f64>, sense: Sense, rhs: f64) {
        self.rows.push((coefficients, sense, rhs));
    }

    pub fn solve(&self) -> LpResult {
        let n = self.objective.len();
        // substitute x = lower + y, y >= 0; finite upper bounds become rows
        let mut rows: Vec<(Vec<f64>, Sense, f64)> = Vec::new();
        for (a, sense, b) in &self.rows {
            let shift: f64 = a.iter().zip(&self.lower).map(|(ai, li)| ai * li).sum();
            rows.push((a.clone(), *sense, b - shift));
        }
        for j in 0..n {
            if self.upper[j].is_finite() {
                let mut a = vec![0.0; n];
                a[j] = 1.0;
                rows.push((a, Sense::Le, self.upper[j] - self.lower[j]));
            }
        }
        for (a, sense, b) in &mut rows {
            if *b < 0.0 {
                a.iter_mut().for_each(|v| *v = -*v);
                *b = -*b;
                *sense = match *sense {
                    Sense::Le => Sense::Ge,
                    Sense::Ge => Sense::Le,
                    Sense::Eq => Sense::Eq,
                };
            }
        }

        let m = rows.len();
        let slacks = rows.iter().filter(|r| r.1 != Sense::Eq).count();
        let artificials = rows.iter().filter(|r| r.1 != Sense::Le).count();
        let first_artificial = n + slacks;
        let width = first_artificial + artificials;
        let mut tab = Tableau {
            a: vec![vec![0.0; width + 1]; m],
            basis: vec![0; m],
            width,
        };
        let (mut next_slack, mut next_art) = (n, first_artificial);
        for (i, (a, sense, b)) in rows.iter().enumerate() {
            tab.a[i][..n].copy_from_slice(a);
            tab.a[i][width] = *b;
            match sense {
                Sense::Le => {
                    tab.a[i][next_slack] = 1.0;
                    tab.basis[i] = next_slack;
                    next_slack += 1;
                }
                Sense::Ge => {
                    tab.a[i][next_slack] = -1.0;
                    next_slack += 1;
                    tab.a[i][next_art] = 1.0;
                    tab.basis[i] = next_art;
                    next_art += 1;
                }
                Sense::Eq => {
                    tab.a[i][next_art] = 1.0;
                    tab.basis[i] = next_art;
                    next_art += 1;
                }
            }
        }

        let scale = 1.0 + rows.iter().map(|r| r.2.abs()).fold(0.0, f64::max);
        if artificials > 0 {
            let mut phase1 = vec![0.0; width];
            phase1[first_artificial..].iter_mut().for_each(|c| *c = 1.0);
            if tab.optimize(&phase1, width).is_none() {
                return LpResult::Infeasible;
            }
            let infeasibility: f64 = (0..m)
                .filter(|&i| tab.basis[i] >= first_artificial)
                .map(|i| tab.a[i][width])
                .sum();
            if infeasibility > 1e-9 * scale {
                return LpResult::Infeasible;
            }
            tab.drive_out_artificials(first_artificial);
        }

        let mut cost = vec![0.0; width];
        cost[..n].copy_from_slice(&self.objective);
        if tab.optimize(&cost, first_artificial).is_none() {
            return LpResult::Unbounded;
        }
        let mut x = self.lower.clone();
        for (i, &j) in tab.basis.iter().enumerate() {
            if j < n {
                x[j] += tab.a[i][width];
            }
        }
        let objective = x.iter().zip(&self.objective).map(|(xi, ci)| xi * ci).sum();
        LpResult::Optimal { x, objective }
    }
}

struct Tableau {
    a: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    /// Minimizes `cost` letting only columns below `allowed` enter. Returns
    /// `None` when unbounded.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> Option<()> {
        let rhs = self.width;
        loop {
            // Bland: lowest-index column with negative reduced cost
            let entering = (0..allowed).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let reduced = cost[j]
                    - self
                        .basis
                        .iter()
                        .enumerate()
                        .map(|(i, &b)| cost[b] * self.a[i][j])
                        .sum::<f64>();
                reduced < -1e-10
            });
            let Some(j) = entering else {
                return Some(());
            };
            let mut leaving: Option<(usize, f64)> = None;
            for i in 0..self.a.len() {
                let aij = self.a[i][j];
                if aij > PIVOT_EPS {
                    let ratio = self.a[i][rhs] / aij;
                    let better = match leaving {
                        None => true,
                        Some((k, best)) => {
                            ratio < best - 1e-12 || (ratio <= best + 1e-12 && self.basis[i] < self.basis[k])
                        }
                    };
                    if better {
                        leaving = Some((i, ratio));
                    }
                }
            }
            let (row, _) = leaving?;
            self.pivot(row, j);
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.a[row][col];
        self.a[row].iter_mut().for_each(|v| *v /= p);
        let pivot_row = self.a[row].clone();
        for (i, r) in self.a.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let f = r[col];
            if f != 0.0 {
                r.iter_mut().zip(&pivot_row).for_each(|(v, pv)| *v -= f * pv);
            }
        }
        self.basis[row] = col;
    }

    /// Pivots zero-level artificials out of the basis, dropping rows that
    /// turn out to be redundant.
    fn drive_out_artificials(&mut self, first_artificial: usize) {
        let mut i = 0;
        while i < self.a.len() {
            if self.basis[i] < first_artificial {
                i += 1;
                continue;
            }
            match (0..first_artificial).find(|&j| !self.basis.contains(&j) && self.a[i][j].abs() > 1e-9) {
                Some(j) => {
                    self.pivot(i, j);
                    i += 1;
                }
                None => {
                    self.a.remove(i);
                    self.basis.remove(i);
                }
            }
        }
    }
}
