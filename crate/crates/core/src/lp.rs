//! Exact linear programming.
//!
//! A two-phase primal simplex over sparse tableau rows. Pricing is Dantzig's
//! rule, falling back to Bland's rule after a run of degenerate pivots until
//! the objective moves again, so the method always terminates.
//!
//! Duals and infeasibility certificates refer to the rows after
//! normalization to `≤` form (a `≥` row is negated; an `=` row is kept).

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use std::cmp::Ordering;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Max,
    Min,
    Feasibility,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub nonneg: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint<T> {
    pub coeffs: Vec<(usize, T)>,
    pub relation: Relation,
    pub rhs: T,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearProgram<T> {
    pub variables: Vec<Variable>,
    pub sense: Sense,
    pub objective: Vec<(usize, T)>,
    pub constraints: Vec<Constraint<T>>,
}

impl<T: Scalar> LinearProgram<T> {
    pub fn new(sense: Sense) -> Self {
        LinearProgram {
            variables: Vec::new(),
            sense,
            objective: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn add_variable(&mut self, name: impl Into<String>, nonneg: bool) -> usize {
        self.variables.push(Variable {
            name: name.into(),
            nonneg,
        });
        self.variables.len() - 1
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, T)>, relation: Relation, rhs: T) {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.variables.len();
        let bad = |c: &[(usize, T)]| c.iter().any(|(j, _)| *j >= n);
        if bad(&self.objective) || self.constraints.iter().any(|c| bad(&c.coeffs)) {
            return Err(Error::Lp("coefficient on an undeclared variable".into()));
        }
        Ok(())
    }

    /// Row `i` in `≤`/`=` form: (coefficients, is_equality, rhs).
    pub fn normalized_row(&self, i: usize) -> (Vec<(usize, T)>, bool, T) {
        let c = &self.constraints[i];
        match c.relation {
            Relation::Le => (c.coeffs.clone(), false, c.rhs.clone()),
            Relation::Eq => (c.coeffs.clone(), true, c.rhs.clone()),
            Relation::Ge => (
                c.coeffs.iter().map(|(j, a)| (*j, -a.clone())).collect(),
                false,
                -c.rhs.clone(),
            ),
        }
    }

    pub fn objective_value(&self, x: &[T]) -> T {
        self.objective
            .iter()
            .fold(T::zero(), |acc, (j, c)| acc + c.clone() * x[*j].clone())
    }

    /// Exact primal feasibility check.
    pub fn is_feasible(&self, x: &[T]) -> bool {
        if x.len() != self.variables.len() {
            return false;
        }
        if self
            .variables
            .iter()
            .zip(x)
            .any(|(v, xv)| v.nonneg && xv.is_negative())
        {
            return false;
        }
        self.constraints.iter().all(|c| {
            let lhs = c
                .coeffs
                .iter()
                .fold(T::zero(), |acc, (j, a)| acc + a.clone() * x[*j].clone());
            match c.relation {
                Relation::Le => lhs <= c.rhs,
                Relation::Eq => lhs == c.rhs,
                Relation::Ge => lhs >= c.rhs,
            }
        })
    }

    /// Σ_i y_i a'_i as a dense vector over variables.
    fn combine(&self, y: &[T]) -> Vec<T> {
        let mut acc = vec![T::zero(); self.variables.len()];
        for (i, yi) in y.iter().enumerate() {
            if yi.is_zero() {
                continue;
            }
            let (row, _, _) = self.normalized_row(i);
            for (j, a) in row {
                acc[j] = acc[j].clone() + yi.clone() * a;
            }
        }
        acc
    }

    fn rhs_combination(&self, y: &[T]) -> T {
        (0..self.constraints.len()).fold(T::zero(), |acc, i| {
            acc + y[i].clone() * self.normalized_row(i).2
        })
    }

    fn sign_ok(&self, y: &[T]) -> bool {
        y.len() == self.constraints.len()
            && self
                .constraints
                .iter()
                .zip(y)
                .all(|(c, yi)| c.relation == Relation::Eq || !yi.is_negative())
    }

    /// Checks an infeasibility certificate: y ≥ 0 on inequality rows,
    /// yᵀA' ≥ 0 on nonnegative variables (= 0 on free ones), yᵀb' < 0.
    pub fn verify_infeasibility(&self, y: &[T]) -> bool {
        if !self.sign_ok(y) {
            return false;
        }
        let comb = self.combine(y);
        let cols_ok = self.variables.iter().zip(&comb).all(|(v, a)| {
            if v.nonneg {
                !a.is_negative()
            } else {
                a.is_zero()
            }
        });
        cols_ok && self.rhs_combination(y).is_negative()
    }

    /// Checks an optimal primal/dual pair by feasibility and equal objectives.
    pub fn verify_optimal(&self, x: &[T], y: &[T]) -> bool {
        if !self.is_feasible(x) || !self.sign_ok(y) && self.sense != Sense::Min {
            return false;
        }
        let c = {
            let mut c = vec![T::zero(); self.variables.len()];
            for (j, v) in &self.objective {
                c[*j] = c[*j].clone() + v.clone();
            }
            c
        };
        let comb = self.combine(y);
        let primal = self.objective_value(x);
        let dual = self.rhs_combination(y);
        match self.sense {
            Sense::Max | Sense::Feasibility => {
                let c = if self.sense == Sense::Feasibility {
                    vec![T::zero(); c.len()]
                } else {
                    c
                };
                let ok = self.variables.iter().enumerate().all(|(j, v)| {
                    if v.nonneg {
                        comb[j] >= c[j]
                    } else {
                        comb[j] == c[j]
                    }
                });
                ok && (self.sense == Sense::Feasibility || primal == dual)
            }
            Sense::Min => {
                let neg: Vec<T> = y.iter().map(|v| -v.clone()).collect();
                if !self.sign_ok(&neg) {
                    return false;
                }
                let ok = self.variables.iter().enumerate().all(|(j, v)| {
                    if v.nonneg {
                        comb[j] <= c[j]
                    } else {
                        comb[j] == c[j]
                    }
                });
                ok && primal == dual
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpOutcome<T> {
    pub status: LpStatus,
    pub primal: Option<Vec<T>>,
    pub objective: Option<T>,
    /// Optimal dual (optimal status) or Farkas certificate (infeasible).
    pub dual: Option<Vec<T>>,
    pub pivots: usize,
}

type Row<T> = Vec<(usize, T)>;

fn row_get<T: Scalar>(row: &Row<T>, col: usize) -> Option<&T> {
    row.binary_search_by(|(c, _)| c.cmp(&col))
        .ok()
        .map(|i| &row[i].1)
}

/// row - f * other, dropping zeros.
fn row_axpy<T: Scalar>(row: &Row<T>, f: &T, other: &Row<T>) -> Row<T> {
    let mut out = Vec::with_capacity(row.len() + other.len());
    let (mut i, mut j) = (0, 0);
    while i < row.len() || j < other.len() {
        let ord = match (row.get(i), other.get(j)) {
            (Some(a), Some(b)) => a.0.cmp(&b.0),
            (Some(_), None) => Ordering::Less,
            _ => Ordering::Greater,
        };
        match ord {
            Ordering::Less => {
                out.push(row[i].clone());
                i += 1;
            }
            Ordering::Greater => {
                out.push((other[j].0, -(f.clone() * other[j].1.clone())));
                j += 1;
            }
            Ordering::Equal => {
                let v = row[i].1.clone() - f.clone() * other[j].1.clone();
                if !v.is_zero() {
                    out.push((row[i].0, v));
                }
                i += 1;
                j += 1;
            }
        }
    }
    out
}

const DEGENERATE_STREAK: usize = 50;

struct Tableau<T> {
    rows: Vec<Row<T>>,
    rhs: Vec<T>,
    basis: Vec<usize>,
    z: Vec<T>,
    value: T,
    ncols: usize,
    blocked: Vec<bool>,
    pivots: usize,
}

enum Step {
    Optimal,
    Unbounded,
}

impl<T: Scalar> Tableau<T> {
    fn pivot(&mut self, p: usize, q: usize) {
        let piv = row_get(&self.rows[p], q).expect("pivot on zero").clone();
        let prow: Row<T> = self.rows[p]
            .iter()
            .map(|(c, v)| (*c, v.clone() / piv.clone()))
            .collect();
        let prhs = self.rhs[p].clone() / piv;
        for r in 0..self.rows.len() {
            if r == p {
                continue;
            }
            if let Some(f) = row_get(&self.rows[r], q).cloned() {
                self.rows[r] = row_axpy(&self.rows[r], &f, &prow);
                self.rhs[r] = self.rhs[r].clone() - f * prhs.clone();
            }
        }
        let zq = self.z[q].clone();
        if !zq.is_zero() {
            for (c, v) in &prow {
                self.z[*c] = self.z[*c].clone() - zq.clone() * v.clone();
            }
            self.value = self.value.clone() - zq * prhs.clone();
        }
        self.rows[p] = prow;
        self.rhs[p] = prhs;
        self.basis[p] = q;
        self.pivots += 1;
    }

    /// Sets the reduced-cost row for objective `c` (maximize).
    fn set_objective(&mut self, c: &[T]) {
        let mut z: Vec<T> = c.iter().map(|v| -v.clone()).collect();
        let mut value = T::zero();
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = &c[b];
            if cb.is_zero() {
                continue;
            }
            for (col, v) in &self.rows[r] {
                z[*col] = z[*col].clone() + cb.clone() * v.clone();
            }
            value = value + cb.clone() * self.rhs[r].clone();
        }
        self.z = z;
        self.value = value;
    }

    fn run(&mut self) -> Step {
        let mut streak = 0usize;
        loop {
            let bland = streak >= DEGENERATE_STREAK;
            let mut q: Option<usize> = None;
            for j in 0..self.ncols {
                if self.blocked[j] || !self.z[j].is_negative() {
                    continue;
                }
                if bland {
                    q = Some(j);
                    break;
                }
                if q.is_none_or(|b| self.z[j] < self.z[b]) {
                    q = Some(j);
                }
            }
            let Some(q) = q else {
                return Step::Optimal;
            };
            let mut best: Option<(usize, T)> = None;
            for r in 0..self.rows.len() {
                if let Some(a) = row_get(&self.rows[r], q) {
                    if a.is_positive() {
                        let ratio = self.rhs[r].clone() / a.clone();
                        let better = match &best {
                            None => true,
                            Some((br, bv)) => {
                                ratio < *bv || (ratio == *bv && self.basis[r] < self.basis[*br])
                            }
                        };
                        if better {
                            best = Some((r, ratio));
                        }
                    }
                }
            }
            let Some((p, ratio)) = best else {
                return Step::Unbounded;
            };
            if ratio.is_zero() {
                streak += 1;
            } else {
                streak = 0;
            }
            self.pivot(p, q);
        }
    }
}

/// Solves the program exactly.
pub fn solve<T: Scalar>(lp: &LinearProgram<T>) -> Result<LpOutcome<T>> {
    lp.validate()?;
    let n = lp.variables.len();
    let m = lp.constraints.len();
    // structural columns; free variables get a negated twin
    let mut col_of = Vec::with_capacity(n);
    let mut ncols = 0;
    for v in &lp.variables {
        let plus = ncols;
        ncols += 1;
        let minus = if v.nonneg {
            None
        } else {
            ncols += 1;
            Some(ncols - 1)
        };
        col_of.push((plus, minus));
    }
    let nstruct = ncols;
    let mut rows: Vec<Row<T>> = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    let mut sigma = Vec::with_capacity(m);
    let mut id_col = vec![0; m];
    let mut basis = vec![0; m];
    let mut artificial = Vec::new();
    let mut pending_art = Vec::new();
    for i in 0..m {
        let (coeffs, eq, b) = lp.normalized_row(i);
        let s = if b.is_negative() { -T::one() } else { T::one() };
        let mut dense: std::collections::BTreeMap<usize, T> = std::collections::BTreeMap::new();
        for (j, a) in coeffs {
            let (p, mi) = col_of[j];
            let e = dense.entry(p).or_insert_with(T::zero);
            *e = e.clone() + a.clone() * s.clone();
            if let Some(mi) = mi {
                let e = dense.entry(mi).or_insert_with(T::zero);
                *e = e.clone() - a * s.clone();
            }
        }
        if !eq {
            let sc = ncols;
            ncols += 1;
            dense.insert(sc, s.clone());
            if s.is_positive() {
                id_col[i] = sc;
                basis[i] = sc;
            } else {
                pending_art.push(i);
            }
        } else {
            pending_art.push(i);
        }
        rows.push(dense.into_iter().filter(|(_, v)| !v.is_zero()).collect());
        rhs.push(b * s.clone());
        sigma.push(s);
    }
    for &i in &pending_art {
        let ac = ncols;
        ncols += 1;
        rows[i].push((ac, T::one()));
        id_col[i] = ac;
        basis[i] = ac;
        artificial.push(ac);
    }
    let mut is_art = vec![false; ncols];
    for &a in &artificial {
        is_art[a] = true;
    }
    let mut tab = Tableau {
        rows,
        rhs,
        basis,
        z: vec![T::zero(); ncols],
        value: T::zero(),
        ncols,
        blocked: is_art.clone(),
        pivots: 0,
    };

    if !artificial.is_empty() {
        let mut c1 = vec![T::zero(); ncols];
        for &a in &artificial {
            c1[a] = -T::one();
        }
        tab.set_objective(&c1);
        tab.run();
        if tab.value.is_negative() {
            // phase-1 dual gives the certificate
            let u: Vec<T> = (0..m)
                .map(|i| tab.z[id_col[i]].clone() + c1[id_col[i]].clone())
                .collect();
            let y: Vec<T> = (0..m).map(|i| sigma[i].clone() * u[i].clone()).collect();
            if !lp.verify_infeasibility(&y) {
                return Err(Error::Lp("internal: certificate failed to verify".into()));
            }
            return Ok(LpOutcome {
                status: LpStatus::Infeasible,
                primal: None,
                objective: None,
                dual: Some(y),
                pivots: tab.pivots,
            });
        }
        // drive zero-level artificials out of the basis
        for r in 0..m {
            if is_art[tab.basis[r]] {
                let q = tab.rows[r]
                    .iter()
                    .find(|(c, v)| !is_art[*c] && !v.is_zero())
                    .map(|(c, _)| *c);
                if let Some(q) = q {
                    tab.pivot(r, q);
                }
            }
        }
    }

    let mut c2 = vec![T::zero(); ncols];
    let flip = lp.sense == Sense::Min;
    if lp.sense != Sense::Feasibility {
        for (j, v) in &lp.objective {
            let v = if flip { -v.clone() } else { v.clone() };
            let (p, mi) = col_of[*j];
            c2[p] = c2[p].clone() + v.clone();
            if let Some(mi) = mi {
                c2[mi] = c2[mi].clone() - v;
            }
        }
    }
    tab.set_objective(&c2);
    let step = tab.run();
    if let Step::Unbounded = step {
        return Ok(LpOutcome {
            status: LpStatus::Unbounded,
            primal: None,
            objective: None,
            dual: None,
            pivots: tab.pivots,
        });
    }
    let mut xs = vec![T::zero(); nstruct];
    for (r, &b) in tab.basis.iter().enumerate() {
        if b < nstruct {
            xs[b] = tab.rhs[r].clone();
        }
    }
    let x: Vec<T> = col_of
        .iter()
        .map(|&(p, mi)| match mi {
            Some(mi) => xs[p].clone() - xs[mi].clone(),
            None => xs[p].clone(),
        })
        .collect();
    let y: Vec<T> = (0..m)
        .map(|i| {
            let yi = sigma[i].clone() * (tab.z[id_col[i]].clone() + c2[id_col[i]].clone());
            if flip {
                -yi
            } else {
                yi
            }
        })
        .collect();
    let objective = lp.objective_value(&x);
    Ok(LpOutcome {
        status: LpStatus::Optimal,
        primal: Some(x),
        objective: Some(if lp.sense == Sense::Feasibility {
            T::zero()
        } else {
            objective
        }),
        dual: Some(y),
        pivots: tab.pivots,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FarkasVariant {
    /// x ≥ 0, Σx = 1, Ax ≥ b; or y ≥ 0 with (Aᵀy)_i < bᵀy for all i.
    One,
    /// x ≥ 0, Σx = 1, Ax ≤ b; or y ≥ 0 with (Aᵀy)_i > bᵀy for all i.
    Two,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FarkasWitness<T> {
    /// A distribution over the columns.
    Primal(Vec<T>),
    /// Nonnegative row weights summing to 1.
    Dual(Vec<T>),
}

/// Row-sparse system: `rows[j]` lists (column, coefficient) of row j.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FarkasSystem<T> {
    pub ncols: usize,
    pub rows: Vec<Vec<(usize, T)>>,
    pub b: Vec<T>,
}

impl<T: Scalar> FarkasSystem<T> {
    pub fn from_dense(rows: &[Vec<T>], b: Vec<T>) -> Self {
        let ncols = rows.first().map_or(0, |r| r.len());
        FarkasSystem {
            ncols,
            rows: rows
                .iter()
                .map(|r| {
                    r.iter()
                        .enumerate()
                        .filter(|(_, v)| !v.is_zero())
                        .map(|(i, v)| (i, v.clone()))
                        .collect()
                })
                .collect(),
            b,
        }
    }

    fn row_value(&self, j: usize, x: &[T]) -> T {
        self.rows[j]
            .iter()
            .fold(T::zero(), |acc, (i, a)| acc + a.clone() * x[*i].clone())
    }

    fn column_values(&self, y: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.ncols];
        for (j, row) in self.rows.iter().enumerate() {
            if y[j].is_zero() {
                continue;
            }
            for (i, a) in row {
                out[*i] = out[*i].clone() + a.clone() * y[j].clone();
            }
        }
        out
    }

    pub fn verify(&self, variant: FarkasVariant, w: &FarkasWitness<T>) -> bool {
        match w {
            FarkasWitness::Primal(x) => {
                x.len() == self.ncols
                    && x.iter().all(|v| !v.is_negative())
                    && x.iter().fold(T::zero(), |a, v| a + v.clone()) == T::one()
                    && (0..self.rows.len()).all(|j| {
                        let lhs = self.row_value(j, x);
                        match variant {
                            FarkasVariant::One => lhs >= self.b[j],
                            FarkasVariant::Two => lhs <= self.b[j],
                        }
                    })
            }
            FarkasWitness::Dual(y) => {
                if y.len() != self.rows.len() || y.iter().any(|v| v.is_negative()) {
                    return false;
                }
                let by = self
                    .b
                    .iter()
                    .zip(y)
                    .fold(T::zero(), |a, (b, y)| a + b.clone() * y.clone());
                self.column_values(y).iter().all(|c| match variant {
                    FarkasVariant::One => *c < by,
                    FarkasVariant::Two => *c > by,
                })
            }
        }
    }
}

/// Decides which side of the chosen Farkas alternative holds and returns
/// the verified witness.
pub fn check_farkas_variant<T: Scalar>(
    sys: &FarkasSystem<T>,
    variant: FarkasVariant,
) -> Result<FarkasWitness<T>> {
    if sys.rows.len() != sys.b.len() {
        return Err(Error::Lp("row count and right-hand side differ".into()));
    }
    let mut lp = LinearProgram::new(Sense::Feasibility);
    for i in 0..sys.ncols {
        lp.add_variable(format!("x{i}"), true);
    }
    lp.add_constraint(
        (0..sys.ncols).map(|i| (i, T::one())).collect(),
        Relation::Eq,
        T::one(),
    );
    let rel = match variant {
        FarkasVariant::One => Relation::Ge,
        FarkasVariant::Two => Relation::Le,
    };
    for (row, b) in sys.rows.iter().zip(&sys.b) {
        lp.add_constraint(row.clone(), rel, b.clone());
    }
    let out = solve(&lp)?;
    let w = match out.status {
        LpStatus::Optimal => FarkasWitness::Primal(out.primal.unwrap()),
        LpStatus::Infeasible => {
            let cert = out.dual.unwrap();
            let y: Vec<T> = cert[1..].to_vec();
            let total = y.iter().fold(T::zero(), |a, v| a + v.clone());
            FarkasWitness::Dual(y.into_iter().map(|v| v / total.clone()).collect())
        }
        LpStatus::Unbounded => return Err(Error::Lp("feasibility program unbounded".into())),
    };
    if !sys.verify(variant, &w) {
        return Err(Error::Lp("internal: Farkas witness failed to verify".into()));
    }
    Ok(w)
}
