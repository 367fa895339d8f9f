//! Dense two-phase simplex.
//!
//! Problems have the form
//!
//! ```text
//! minimize  c·y
//! s.t.      A_eq y  = b_eq
//!           A_ge y >= b_ge
//!           y_j >= l_j        (l_j may be -inf)
//! ```
//!
//! Entering columns follow Bland's rule (lowest index with a negative reduced
//! cost) and ratio-test ties go to the lowest basic column, so every solve is
//! deterministic and cannot cycle. Sizes handled here are a few hundred rows
//! at most.

use thiserror::Error;

/// Absolute residual tolerance for feasibility and optimality decisions.
pub const TOLERANCE: f64 = 1e-9;

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-10;
const DROP_TOL: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("row has {found} coefficients, program has {expected} variables")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("simplex exceeded {0} pivots")]
    IterationLimit(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    n_vars: usize,
    objective: Vec<f64>,
    eq_rows: Vec<Vec<f64>>,
    eq_rhs: Vec<f64>,
    ge_rows: Vec<Vec<f64>>,
    ge_rhs: Vec<f64>,
    lower: Vec<f64>,
}

impl LinearProgram {
    /// Zero objective, no constraints, all variables free.
    pub fn new(n_vars: usize) -> Self {
        LinearProgram {
            n_vars,
            objective: vec![0.0; n_vars],
            eq_rows: Vec::new(),
            eq_rhs: Vec::new(),
            ge_rows: Vec::new(),
            ge_rhs: Vec::new(),
            lower: vec![f64::NEG_INFINITY; n_vars],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_constraints(&self) -> usize {
        self.eq_rows.len() + self.ge_rows.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn set_objective(&mut self, c: Vec<f64>) -> &mut Self {
        self.objective = c;
        self
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.eq_rows.push(row);
        self.eq_rhs.push(rhs);
        self
    }

    pub fn add_ge(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.ge_rows.push(row);
        self.ge_rhs.push(rhs);
        self
    }

    /// `row·y <= rhs`, stored as `-row·y >= -rhs`.
    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.ge_rows.push(row.into_iter().map(|v| -v).collect());
        self.ge_rhs.push(-rhs);
        self
    }

    pub fn set_lower(&mut self, var: usize, bound: f64) -> &mut Self {
        self.lower[var] = bound;
        self
    }

    pub fn set_all_nonnegative(&mut self) -> &mut Self {
        self.lower.iter_mut().for_each(|l| *l = 0.0);
        self
    }

    fn validate(&self) -> Result<(), LpError> {
        let check_len = |row: &Vec<f64>| {
            if row.len() != self.n_vars {
                Err(LpError::DimensionMismatch {
                    expected: self.n_vars,
                    found: row.len(),
                })
            } else {
                Ok(())
            }
        };
        check_len(&self.objective)?;
        if self.lower.len() != self.n_vars {
            return Err(LpError::DimensionMismatch {
                expected: self.n_vars,
                found: self.lower.len(),
            });
        }
        for row in self.eq_rows.iter().chain(&self.ge_rows) {
            check_len(row)?;
            if row.iter().any(|v| !v.is_finite()) {
                return Err(LpError::NonFinite("constraint matrix"));
            }
        }
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(LpError::NonFinite("objective"));
        }
        if self.eq_rhs.iter().chain(&self.ge_rhs).any(|v| !v.is_finite()) {
            return Err(LpError::NonFinite("right-hand side"));
        }
        if self
            .lower
            .iter()
            .any(|l| l.is_nan() || *l == f64::INFINITY)
        {
            return Err(LpError::NonFinite("variable lower bound"));
        }
        Ok(())
    }

    /// Largest violation of any constraint or bound at `y`.
    pub fn max_violation(&self, y: &[f64]) -> f64 {
        let dot = |row: &[f64]| row.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        let eq = self
            .eq_rows
            .iter()
            .zip(&self.eq_rhs)
            .map(|(r, b)| (dot(r) - b).abs());
        let ge = self
            .ge_rows
            .iter()
            .zip(&self.ge_rhs)
            .map(|(r, b)| (b - dot(r)).max(0.0));
        let bounds = self.lower.iter().zip(y).map(|(l, v)| (l - v).max(0.0));
        eq.chain(ge).chain(bounds).fold(0.0, f64::max)
    }

    /// `row·y − rhs` for every equality row, then every `>=` row.
    pub fn slacks(&self, y: &[f64]) -> Vec<f64> {
        let dot = |row: &[f64]| row.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        self.eq_rows
            .iter()
            .zip(&self.eq_rhs)
            .chain(self.ge_rows.iter().zip(&self.ge_rhs))
            .map(|(r, b)| dot(r) - b)
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

impl LpStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unbounded => "unbounded",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpOutcome {
    pub status: LpStatus,
    /// Empty unless `Optimal`.
    pub solution: Vec<f64>,
    /// Value of the (last) objective at `solution`.
    pub objective: f64,
    /// Objective values of each stage of a lexicographic solve.
    pub stage_objectives: Vec<f64>,
    /// `row·y − rhs` per constraint, equalities first.
    pub slacks: Vec<f64>,
    pub max_residual: f64,
    pub pivots: usize,
}

impl LpOutcome {
    fn without_point(status: LpStatus, pivots: usize) -> Self {
        LpOutcome {
            status,
            solution: Vec::new(),
            objective: match status {
                LpStatus::Unbounded => f64::NEG_INFINITY,
                _ => f64::NAN,
            },
            stage_objectives: Vec::new(),
            slacks: Vec::new(),
            max_residual: f64::NAN,
            pivots,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Minimizes the program's objective.
pub fn solve(lp: &LinearProgram) -> Result<LpOutcome, LpError> {
    let mut out = solve_lexicographic(lp, std::slice::from_ref(&lp.objective))?;
    out.stage_objectives.clear();
    Ok(out)
}

/// Finds any feasible point (the objective is ignored).
pub fn feasible(lp: &LinearProgram) -> Result<LpOutcome, LpError> {
    solve_lexicographic(lp, &[])
}

/// Minimizes `objectives[0]`, then `objectives[1]` over the optimal face of
/// the first, and so on. The program's own objective is ignored.
///
/// After each stage, nonbasic columns with a strictly positive reduced cost
/// are fixed at zero, which restricts later stages to the optimal face
/// without adding tolerance-relaxed constraints.
pub fn solve_lexicographic(
    lp: &LinearProgram,
    objectives: &[Vec<f64>],
) -> Result<LpOutcome, LpError> {
    lp.validate()?;
    for c in objectives {
        if c.len() != lp.n_vars {
            return Err(LpError::DimensionMismatch {
                expected: lp.n_vars,
                found: c.len(),
            });
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(LpError::NonFinite("objective"));
        }
    }

    let mut tab = Tableau::build(lp);
    if !tab.phase_one()? {
        return Ok(LpOutcome::without_point(LpStatus::Infeasible, tab.pivots));
    }

    let mut stage_objectives = Vec::with_capacity(objectives.len());
    for (stage, c) in objectives.iter().enumerate() {
        if stage > 0 {
            tab.fix_positive_reduced_costs();
        }
        tab.load_objective(&tab.structural_costs(c));
        if !tab.optimize()? {
            return Ok(LpOutcome::without_point(LpStatus::Unbounded, tab.pivots));
        }
        let y = tab.point();
        stage_objectives.push(dot(c, &y));
    }

    let solution = tab.point();
    let objective = objectives.last().map_or(0.0, |c| dot(c, &solution));
    Ok(LpOutcome {
        status: LpStatus::Optimal,
        objective,
        stage_objectives,
        slacks: lp.slacks(&solution),
        max_residual: lp.max_violation(&solution),
        solution,
        pivots: tab.pivots,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Where an original variable lives among the tableau columns.
#[derive(Clone, Copy, Debug)]
enum VarColumns {
    Shifted { col: usize, lower: f64 },
    Split { pos: usize, neg: usize },
}

struct Tableau {
    width: usize,
    rows: usize,
    /// Row-major, `width + 1` entries per row (last is the right-hand side).
    a: Vec<f64>,
    /// Reduced costs, last entry is minus the current objective value.
    obj: Vec<f64>,
    basis: Vec<usize>,
    blocked: Vec<bool>,
    artificial_start: usize,
    vars: Vec<VarColumns>,
    pivots: usize,
    max_pivots: usize,
    scratch: Vec<f64>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let mut vars = Vec::with_capacity(lp.n_vars);
        let mut n_struct = 0;
        for &l in &lp.lower {
            if l.is_finite() {
                vars.push(VarColumns::Shifted {
                    col: n_struct,
                    lower: l,
                });
                n_struct += 1;
            } else {
                vars.push(VarColumns::Split {
                    pos: n_struct,
                    neg: n_struct + 1,
                });
                n_struct += 2;
            }
        }

        // Each row: structural coefficients, rhs, and whether a slack column
        // (+1 or -1) and artificial are attached.
        struct Row {
            coef: Vec<f64>,
            rhs: f64,
            slack: Option<f64>,
            artificial: bool,
        }
        let expand = |row: &[f64], rhs: f64| -> (Vec<f64>, f64) {
            let mut coef = vec![0.0; n_struct];
            let mut shifted = rhs;
            for (j, &a) in row.iter().enumerate() {
                match vars[j] {
                    VarColumns::Shifted { col, lower } => {
                        coef[col] = a;
                        shifted -= a * lower;
                    }
                    VarColumns::Split { pos, neg } => {
                        coef[pos] = a;
                        coef[neg] = -a;
                    }
                }
            }
            (coef, shifted)
        };

        let mut rows = Vec::with_capacity(lp.n_constraints());
        for (row, &b) in lp.eq_rows.iter().zip(&lp.eq_rhs) {
            let (mut coef, mut rhs) = expand(row, b);
            if rhs < 0.0 {
                coef.iter_mut().for_each(|v| *v = -*v);
                rhs = -rhs;
            }
            rows.push(Row {
                coef,
                rhs,
                slack: None,
                artificial: true,
            });
        }
        for (row, &b) in lp.ge_rows.iter().zip(&lp.ge_rhs) {
            let (mut coef, mut rhs) = expand(row, b);
            if rhs > 0.0 {
                rows.push(Row {
                    coef,
                    rhs,
                    slack: Some(-1.0),
                    artificial: true,
                });
            } else {
                coef.iter_mut().for_each(|v| *v = -*v);
                rhs = -rhs;
                rows.push(Row {
                    coef,
                    rhs,
                    slack: Some(1.0),
                    artificial: false,
                });
            }
        }

        let n_slack = rows.iter().filter(|r| r.slack.is_some()).count();
        let n_art = rows.iter().filter(|r| r.artificial).count();
        let artificial_start = n_struct + n_slack;
        let width = artificial_start + n_art;
        let stride = width + 1;
        let m = rows.len();
        let mut a = vec![0.0; m * stride];
        let mut basis = vec![0; m];
        let mut slack_col = n_struct;
        let mut art_col = artificial_start;
        for (r, row) in rows.into_iter().enumerate() {
            let base = r * stride;
            a[base..base + n_struct].copy_from_slice(&row.coef);
            a[base + width] = row.rhs;
            if let Some(sign) = row.slack {
                a[base + slack_col] = sign;
                if !row.artificial {
                    basis[r] = slack_col;
                }
                slack_col += 1;
            }
            if row.artificial {
                a[base + art_col] = 1.0;
                basis[r] = art_col;
                art_col += 1;
            }
        }

        Tableau {
            width,
            rows: m,
            a,
            obj: vec![0.0; stride],
            basis,
            blocked: vec![false; width],
            artificial_start,
            vars,
            pivots: 0,
            max_pivots: 100_000 + 50 * (m + width),
            scratch: vec![0.0; stride],
        }
    }

    fn stride(&self) -> usize {
        self.width + 1
    }

    fn rhs(&self, r: usize) -> f64 {
        self.a[r * self.stride() + self.width]
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.stride() + c]
    }

    fn structural_costs(&self, c: &[f64]) -> Vec<f64> {
        let mut costs = vec![0.0; self.width];
        for (j, v) in self.vars.iter().enumerate() {
            match *v {
                VarColumns::Shifted { col, .. } => costs[col] = c[j],
                VarColumns::Split { pos, neg } => {
                    costs[pos] = c[j];
                    costs[neg] = -c[j];
                }
            }
        }
        costs
    }

    /// Sets the objective row to the reduced costs of `costs` under the
    /// current basis.
    fn load_objective(&mut self, costs: &[f64]) {
        let stride = self.stride();
        self.obj[..self.width].copy_from_slice(costs);
        self.obj[self.width] = 0.0;
        for r in 0..self.rows {
            let cb = costs[self.basis[r]];
            if cb != 0.0 {
                let row = &self.a[r * stride..(r + 1) * stride];
                for (o, v) in self.obj.iter_mut().zip(row) {
                    *o -= cb * v;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let stride = self.stride();
        let inv = 1.0 / self.at(r, c);
        {
            let row = &mut self.a[r * stride..(r + 1) * stride];
            for v in row.iter_mut() {
                *v *= inv;
            }
            row[c] = 1.0;
            self.scratch.copy_from_slice(row);
        }
        let nz: Vec<usize> = (0..stride)
            .filter(|&k| self.scratch[k] != 0.0)
            .collect();
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.a[i * stride + c];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.a[i * stride..(i + 1) * stride];
            for &k in &nz {
                let v = row[k] - f * self.scratch[k];
                row[k] = if v.abs() < DROP_TOL { 0.0 } else { v };
            }
            row[c] = 0.0;
        }
        let f = self.obj[c];
        if f != 0.0 {
            for &k in &nz {
                self.obj[k] -= f * self.scratch[k];
            }
            self.obj[c] = 0.0;
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Runs Bland-rule pivots until optimal (`true`) or unbounded (`false`).
    fn optimize(&mut self) -> Result<bool, LpError> {
        loop {
            if self.pivots > self.max_pivots {
                return Err(LpError::IterationLimit(self.max_pivots));
            }
            let entering = (0..self.width).find(|&j| !self.blocked[j] && self.obj[j] < -COST_TOL);
            let Some(c) = entering else {
                return Ok(true);
            };
            let mut best: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let v = self.at(r, c);
                if v <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(r).max(0.0) / v;
                best = match best {
                    None => Some((r, ratio)),
                    Some((br, bratio)) => {
                        let tie = (ratio - bratio).abs() <= 1e-12 * (1.0 + bratio.abs());
                        if ratio < bratio && !tie || tie && self.basis[r] < self.basis[br] {
                            Some((r, ratio))
                        } else {
                            Some((br, bratio))
                        }
                    }
                };
            }
            match best {
                None => return Ok(false),
                Some((r, _)) => self.pivot(r, c),
            }
        }
    }

    /// Minimizes the sum of artificials. Returns `false` when infeasible.
    fn phase_one(&mut self) -> Result<bool, LpError> {
        if self.artificial_start == self.width {
            return Ok(true);
        }
        let mut costs = vec![0.0; self.width];
        costs[self.artificial_start..].iter_mut().for_each(|v| *v = 1.0);
        self.load_objective(&costs);
        let scale = (0..self.rows)
            .map(|r| self.rhs(r).abs())
            .fold(1.0, f64::max);
        self.optimize()?;
        let infeasibility = -self.obj[self.width];
        if infeasibility > TOLERANCE * scale {
            return Ok(false);
        }

        // drive zero-level artificials out of the basis; drop redundant rows
        let mut r = 0;
        while r < self.rows {
            if self.basis[r] >= self.artificial_start {
                let replacement = (0..self.artificial_start)
                    .filter(|&j| self.at(r, j).abs() > 1e-9)
                    .max_by(|&x, &y| self.at(r, x).abs().total_cmp(&self.at(r, y).abs()));
                match replacement {
                    Some(c) => {
                        self.pivot(r, c);
                        r += 1;
                    }
                    None => self.remove_row(r),
                }
            } else {
                r += 1;
            }
        }
        for j in self.artificial_start..self.width {
            self.blocked[j] = true;
        }
        for r in 0..self.rows {
            let idx = r * self.stride() + self.width;
            if self.a[idx] < 0.0 {
                self.a[idx] = 0.0;
            }
        }
        Ok(true)
    }

    fn remove_row(&mut self, r: usize) {
        let stride = self.stride();
        self.a.drain(r * stride..(r + 1) * stride);
        self.basis.remove(r);
        self.rows -= 1;
    }

    fn fix_positive_reduced_costs(&mut self) {
        for j in 0..self.width {
            if self.obj[j] > COST_TOL {
                self.blocked[j] = true;
            }
        }
    }

    fn point(&self) -> Vec<f64> {
        let mut values = vec![0.0; self.width];
        for r in 0..self.rows {
            values[self.basis[r]] = self.rhs(r).max(0.0);
        }
        self.vars
            .iter()
            .map(|v| match *v {
                VarColumns::Shifted { col, lower } => lower + values[col],
                VarColumns::Split { pos, neg } => values[pos] - values[neg],
            })
            .collect()
    }
}
