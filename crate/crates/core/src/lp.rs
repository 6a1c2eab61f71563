//! Dense two-phase primal simplex with Bland's rule.
//!
//! Problems are stated as maximization with `≤`, `≥` or `=` rows and
//! per-variable bounds (possibly infinite).

use crate::error::{Error, Result};

const EPS: f64 = 1e-9;
const DEFAULT_MAX_ITER: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

/// maximize `objective · x` subject to `rows[i] · x (senses[i]) rhs[i]` and
/// `bounds[j].0 ≤ x_j ≤ bounds[j].1`.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub senses: Vec<RowSense>,
    pub bounds: Vec<(f64, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Unbounded,
    Infeasible,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
}

impl LinearProgram {
    /// maximize `c·x` s.t. `A x ≤ b`, `x ≥ 0`.
    pub fn packing(objective: Vec<f64>, rows: Vec<Vec<f64>>, rhs: Vec<f64>) -> Self {
        let n = objective.len();
        let k = rows.len();
        LinearProgram {
            objective,
            rows,
            rhs,
            senses: vec![RowSense::Le; k],
            bounds: vec![(0.0, f64::INFINITY); n],
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.objective.len();
        let k = self.rows.len();
        for (found, expected) in [(self.rhs.len(), k), (self.senses.len(), k), (self.bounds.len(), n)]
        {
            if found != expected {
                return Err(Error::DimensionMismatch { expected, found });
            }
        }
        for r in &self.rows {
            if r.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: r.len(),
                });
            }
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(Error::InvalidArgument(format!("bad bounds for variable {j}")));
            }
        }
        Ok(())
    }
}

/// How an original variable is expressed in nonnegative columns.
enum VarMap {
    /// x = lo + y
    Shift { col: usize, lo: f64 },
    /// x = hi - y
    Flip { col: usize, hi: f64 },
    /// x = y⁺ - y⁻
    Split { pos: usize, neg: usize },
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// (rows) × (cols + 1), last entry of each row is the right-hand side.
    a: Vec<f64>,
    /// Reduced costs `z_j - c_j`, last entry is the objective value.
    obj: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * (self.cols + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let w = self.cols + 1;
        let piv = self.at(r, e);
        for c in 0..w {
            self.a[r * w + c] /= piv;
        }
        let prow: Vec<f64> = self.a[r * w..(r + 1) * w].to_vec();
        for rr in 0..self.rows {
            if rr == r {
                continue;
            }
            let f = self.a[rr * w + e];
            if f != 0.0 {
                for c in 0..w {
                    let v = self.a[rr * w + c] - f * prow[c];
                    self.a[rr * w + c] = if v.abs() < 1e-13 { 0.0 } else { v };
                }
                self.a[rr * w + e] = 0.0;
            }
        }
        let f = self.obj[e];
        if f != 0.0 {
            for c in 0..w {
                self.obj[c] -= f * prow[c];
            }
            self.obj[e] = 0.0;
        }
        self.basis[r] = e;
    }

    fn set_objective(&mut self, c: &[f64]) {
        let w = self.cols + 1;
        self.obj = vec![0.0; w];
        for j in 0..self.cols {
            self.obj[j] = -c[j];
        }
        for r in 0..self.rows {
            let cb = c[self.basis[r]];
            if cb != 0.0 {
                for j in 0..w {
                    self.obj[j] += cb * self.a[r * w + j];
                }
            }
        }
    }

    /// Runs simplex iterations; columns with `allowed[j] == false` never enter.
    fn optimize(&mut self, allowed: &[bool], iters: &mut usize, cap: usize) -> Result<bool> {
        loop {
            let entering = (0..self.cols).find(|&j| allowed[j] && self.obj[j] < -EPS);
            let Some(e) = entering else {
                return Ok(true);
            };
            *iters += 1;
            if *iters > cap {
                return Err(Error::IterationLimit(cap));
            }
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, e);
                if a > EPS {
                    let ratio = self.rhs(r) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            let tie = (ratio - lratio).abs() <= 1e-12 * (1.0 + lratio.abs());
                            if (!tie && ratio < lratio) || (tie && self.basis[r] < self.basis[lr]) {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            match leave {
                None => return Ok(false),
                Some((r, _)) => self.pivot(r, e),
            }
        }
    }
}

pub fn lp_solve(lp: &LinearProgram) -> Result<LpSolution> {
    lp_solve_with_cap(lp, DEFAULT_MAX_ITER)
}

pub fn lp_solve_with_cap(lp: &LinearProgram, cap: usize) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.objective.len();

    // Columns for the structural variables, plus bound rows.
    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0usize;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for &(lo, hi) in &lp.bounds {
        if lo.is_finite() {
            maps.push(VarMap::Shift { col: ncols, lo });
            if hi.is_finite() {
                bound_rows.push((ncols, hi - lo));
            }
            ncols += 1;
        } else if hi.is_finite() {
            maps.push(VarMap::Flip { col: ncols, hi });
            ncols += 1;
        } else {
            maps.push(VarMap::Split {
                pos: ncols,
                neg: ncols + 1,
            });
            ncols += 2;
        }
    }
    let nstruct = ncols;

    // Rows in the transformed columns.
    let mut rows: Vec<(Vec<f64>, RowSense, f64)> = Vec::new();
    for ((row, &sense), &b) in lp.rows.iter().zip(&lp.senses).zip(&lp.rhs) {
        let mut coef = vec![0.0; nstruct];
        let mut rhs = b;
        for (j, m) in maps.iter().enumerate() {
            let a = row[j];
            match *m {
                VarMap::Shift { col, lo } => {
                    coef[col] += a;
                    rhs -= a * lo;
                }
                VarMap::Flip { col, hi } => {
                    coef[col] -= a;
                    rhs -= a * hi;
                }
                VarMap::Split { pos, neg } => {
                    coef[pos] += a;
                    coef[neg] -= a;
                }
            }
        }
        rows.push((coef, sense, rhs));
    }
    for &(col, ub) in &bound_rows {
        let mut coef = vec![0.0; nstruct];
        coef[col] = 1.0;
        rows.push((coef, RowSense::Le, ub));
    }
    for r in rows.iter_mut() {
        if r.2 < 0.0 {
            for c in r.0.iter_mut() {
                *c = -*c;
            }
            r.2 = -r.2;
            r.1 = match r.1 {
                RowSense::Le => RowSense::Ge,
                RowSense::Ge => RowSense::Le,
                RowSense::Eq => RowSense::Eq,
            };
        }
    }

    let mut obj_struct = vec![0.0; nstruct];
    let mut obj_const = 0.0;
    for (j, m) in maps.iter().enumerate() {
        let c = lp.objective[j];
        match *m {
            VarMap::Shift { col, lo } => {
                obj_struct[col] += c;
                obj_const += c * lo;
            }
            VarMap::Flip { col, hi } => {
                obj_struct[col] -= c;
                obj_const += c * hi;
            }
            VarMap::Split { pos, neg } => {
                obj_struct[pos] += c;
                obj_struct[neg] -= c;
            }
        }
    }

    // Slack, surplus and artificial columns.
    let k = rows.len();
    let n_slack = rows.iter().filter(|r| r.1 != RowSense::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != RowSense::Le).count();
    let cols = nstruct + n_slack + n_art;
    let w = cols + 1;
    let mut a = vec![0.0; k * w];
    let mut basis = vec![0usize; k];
    let mut is_art = vec![false; cols];
    let mut next_slack = nstruct;
    let mut next_art = nstruct + n_slack;
    for (r, (coef, sense, rhs)) in rows.iter().enumerate() {
        a[r * w..r * w + nstruct].copy_from_slice(coef);
        a[r * w + cols] = *rhs;
        match sense {
            RowSense::Le => {
                a[r * w + next_slack] = 1.0;
                basis[r] = next_slack;
                next_slack += 1;
            }
            RowSense::Ge => {
                a[r * w + next_slack] = -1.0;
                next_slack += 1;
                a[r * w + next_art] = 1.0;
                basis[r] = next_art;
                is_art[next_art] = true;
                next_art += 1;
            }
            RowSense::Eq => {
                a[r * w + next_art] = 1.0;
                basis[r] = next_art;
                is_art[next_art] = true;
                next_art += 1;
            }
        }
    }
    let mut t = Tableau {
        rows: k,
        cols,
        a,
        obj: Vec::new(),
        basis,
    };
    let mut iters = 0usize;

    if n_art > 0 {
        let c1: Vec<f64> = (0..cols).map(|j| if is_art[j] { -1.0 } else { 0.0 }).collect();
        t.set_objective(&c1);
        t.optimize(&vec![true; cols], &mut iters, cap)?;
        let scale = 1.0 + rows.iter().map(|r| r.2.abs()).fold(0.0, f64::max);
        if t.obj[cols] < -1e-8 * scale {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: vec![0.0; n],
                objective: f64::NEG_INFINITY,
            });
        }
        // Drive zero-level artificials out of the basis where possible.
        for r in 0..k {
            if is_art[t.basis[r]] {
                if let Some(e) = (0..cols).find(|&j| !is_art[j] && t.at(r, j).abs() > EPS) {
                    t.pivot(r, e);
                }
            }
        }
    }

    let mut c2 = vec![0.0; cols];
    c2[..nstruct].copy_from_slice(&obj_struct);
    t.set_objective(&c2);
    let allowed: Vec<bool> = (0..cols).map(|j| !is_art[j]).collect();
    if !t.optimize(&allowed, &mut iters, cap)? {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: vec![0.0; n],
            objective: f64::INFINITY,
        });
    }

    let mut y = vec![0.0; cols];
    for r in 0..k {
        y[t.basis[r]] = t.rhs(r).max(0.0);
    }
    let x: Vec<f64> = maps
        .iter()
        .map(|m| match *m {
            VarMap::Shift { col, lo } => lo + y[col],
            VarMap::Flip { col, hi } => hi - y[col],
            VarMap::Split { pos, neg } => y[pos] - y[neg],
        })
        .collect();
    let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum::<f64>();
    debug_assert!((objective - (t.obj[cols] + obj_const)).abs() < 1e-6 * (1.0 + objective.abs()));
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_variable() {
        let lp = LinearProgram::packing(vec![1.0], vec![vec![1.0]], vec![1.0]);
        let s = lp_solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_variables() {
        let lp = LinearProgram::packing(vec![1.0, 1.0], vec![vec![1.0, 1.0]], vec![1.0]);
        let s = lp_solve(&lp).unwrap();
        assert!((s.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_and_infeasible() {
        let lp = LinearProgram::packing(vec![1.0, 0.0], vec![vec![0.0, 1.0]], vec![1.0]);
        assert_eq!(lp_solve(&lp).unwrap().status, LpStatus::Unbounded);
        let lp = LinearProgram {
            objective: vec![1.0],
            rows: vec![vec![1.0], vec![1.0]],
            rhs: vec![1.0, 2.0],
            senses: vec![RowSense::Le, RowSense::Ge],
            bounds: vec![(0.0, f64::INFINITY)],
        };
        assert_eq!(lp_solve(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn equality_bounds_and_free_variables() {
        // max x - y, x + y = 2, x ≤ 1.5, y free, y ≥ -3 via row.
        let lp = LinearProgram {
            objective: vec![1.0, -1.0],
            rows: vec![vec![1.0, 1.0], vec![0.0, 1.0]],
            rhs: vec![2.0, -3.0],
            senses: vec![RowSense::Eq, RowSense::Ge],
            bounds: vec![(0.0, 1.5), (f64::NEG_INFINITY, f64::INFINITY)],
        };
        let s = lp_solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 1.5).abs() < 1e-9);
        assert!((s.x[1] - 0.5).abs() < 1e-9);
        assert!((s.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn minimization_by_negation() {
        // min 2a + 3b s.t. a + b ≥ 1, a ≥ 0.2 → 2.0 at (1, 0).
        let lp = LinearProgram {
            objective: vec![-2.0, -3.0],
            rows: vec![vec![1.0, 1.0]],
            rhs: vec![1.0],
            senses: vec![RowSense::Ge],
            bounds: vec![(0.2, f64::INFINITY), (0.0, f64::INFINITY)],
        };
        let s = lp_solve(&lp).unwrap();
        assert!((s.objective + 2.0).abs() < 1e-9);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let lp = LinearProgram::packing(
            vec![1.0, 1.0, 1.0],
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
            vec![1.0, 1.0, 1.0],
        );
        assert!(matches!(lp_solve_with_cap(&lp, 1), Err(Error::IterationLimit(1))));
    }

    /// Best objective over vertices of `{x ≥ 0, A x ≤ b}` by solving every
    /// choice of `n` tight constraints.
    fn vertex_max(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> f64 {
        let n = c.len();
        let mut cons: Vec<(Vec<f64>, f64)> = a.iter().cloned().zip(b.iter().copied()).collect();
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = -1.0;
            cons.push((e, 0.0));
        }
        let total = cons.len();
        let mut best = f64::NEG_INFINITY;
        let mut pick: Vec<usize> = (0..n).collect();
        loop {
            if let Some(x) = solve_square(&pick.iter().map(|&i| cons[i].clone()).collect::<Vec<_>>()) {
                if cons.iter().all(|(row, r)| row.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() <= r + 1e-7) {
                    best = best.max(c.iter().zip(&x).map(|(a, b)| a * b).sum());
                }
            }
            let mut i = n;
            while i > 0 && pick[i - 1] == total - n + i - 1 {
                i -= 1;
            }
            if i == 0 {
                return best;
            }
            pick[i - 1] += 1;
            for r in i..n {
                pick[r] = pick[r - 1] + 1;
            }
        }
    }

    fn solve_square(rows: &[(Vec<f64>, f64)]) -> Option<Vec<f64>> {
        let n = rows.len();
        let mut m: Vec<Vec<f64>> = rows.iter().map(|(r, b)| r.iter().copied().chain([*b]).collect()).collect();
        for col in 0..n {
            let piv = (col..n).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))?;
            if m[piv][col].abs() < 1e-9 {
                return None;
            }
            m.swap(col, piv);
            for r in 0..n {
                if r != col {
                    let f = m[r][col] / m[col][col];
                    for k in col..=n {
                        m[r][k] -= f * m[col][k];
                    }
                }
            }
        }
        Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
    }

    proptest::proptest! {
        #[test]
        fn packing_matches_vertex_enumeration(
            n in 1usize..=5,
            k in 1usize..=5,
            seed in proptest::prelude::any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
            let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..3.0)).collect();
            let a: Vec<Vec<f64>> = (0..k)
                .map(|_| (0..n).map(|_| rng.gen_range(0.1..2.0)).collect())
                .collect();
            let b: Vec<f64> = (0..k).map(|_| rng.gen_range(0.5..3.0)).collect();
            let s = lp_solve(&LinearProgram::packing(c.clone(), a.clone(), b.clone())).unwrap();
            proptest::prop_assert_eq!(s.status, LpStatus::Optimal);
            let oracle = vertex_max(&c, &a, &b);
            proptest::prop_assert!((s.objective - oracle).abs() <= 1e-7 * (1.0 + oracle.abs()));
            for (row, r) in a.iter().zip(&b) {
                let lhs: f64 = row.iter().zip(&s.x).map(|(x, y)| x * y).sum();
                proptest::prop_assert!(lhs <= r + 1e-9);
            }
            proptest::prop_assert!(s.x.iter().all(|&x| x >= -1e-12));
        }
    }
}
