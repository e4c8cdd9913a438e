//! Conic problems over Hermitian matrix variables and real scalars.
//!
//! Problems are assembled with complex coefficients and lowered to the
//! standard form `min qᵀx s.t. Ax + s = b, s ∈ K` only when solved, with
//! `K` a product of zero, non-negative, PSD-triangle and exponential cones.

mod clarabel_backend;
pub mod embed;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use crate::error::{IsacError, Result};
use crate::linalg::{CMat, RMat};

pub use clarabel_backend::ClarabelBackend;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MatVar(usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ScalarVar(usize);

/// Real affine functional of the problem's column vector.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    terms: BTreeMap<usize, f64>,
    constant: f64,
}

impl LinExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(value: f64) -> Self {
        Self {
            terms: BTreeMap::new(),
            constant: value,
        }
    }

    pub fn constant_term(&self) -> f64 {
        self.constant
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.terms.iter().map(|(&c, &v)| (c, v))
    }

    fn add_term(&mut self, col: usize, coeff: f64) {
        if coeff != 0.0 {
            *self.terms.entry(col).or_insert(0.0) += coeff;
        }
    }

    pub fn add_scaled(&mut self, other: &LinExpr, factor: f64) {
        for (c, v) in other.terms() {
            self.add_term(c, factor * v);
        }
        self.constant += factor * other.constant;
    }

    pub fn plus(mut self, other: &LinExpr) -> Self {
        self.add_scaled(other, 1.0);
        self
    }

    pub fn minus(mut self, other: &LinExpr) -> Self {
        self.add_scaled(other, -1.0);
        self
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        for v in self.terms.values_mut() {
            *v *= factor;
        }
        self.constant *= factor;
        self
    }

    pub fn plus_constant(mut self, value: f64) -> Self {
        self.constant += value;
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms().map(|(c, v)| v * x[c]).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// `expr (rel) 0`
#[derive(Debug, Clone)]
pub struct AffineConstraint {
    pub label: String,
    pub expr: LinExpr,
    pub relation: Relation,
}

/// Symmetric matrix whose entries are affine in the columns; only the upper
/// triangle is stored, column-major.
#[derive(Debug, Clone)]
pub struct SymAffine {
    pub dim: usize,
    upper: Vec<LinExpr>,
}

impl SymAffine {
    pub fn from_fn(dim: usize, mut entry: impl FnMut(usize, usize) -> LinExpr) -> Self {
        let mut upper = Vec::with_capacity(dim * (dim + 1) / 2);
        for j in 0..dim {
            for i in 0..=j {
                upper.push(entry(i, j));
            }
        }
        Self { dim, upper }
    }

    pub fn entry(&self, i: usize, j: usize) -> &LinExpr {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        &self.upper[j * (j + 1) / 2 + i]
    }

    pub fn eval(&self, x: &[f64]) -> RMat {
        RMat::from_fn(self.dim, self.dim, |i, j| self.entry(i, j).eval(x))
    }
}

#[derive(Debug, Clone)]
pub struct LogdetConstraint {
    pub label: String,
    pub map: SymAffine,
    /// constant part of the bound
    pub bound: f64,
}

/// `sub ≤ ln(arg)`, realized as `(sub, 1, arg) ∈ K_exp`.
#[derive(Debug, Clone)]
pub struct LogHypograph {
    pub sub: LinExpr,
    pub arg: LinExpr,
}

#[derive(Debug, Clone)]
struct MatrixVarInfo {
    name: String,
    dim: usize,
    offset: usize,
}

#[derive(Debug, Clone)]
struct ScalarVarInfo {
    name: String,
    col: usize,
}

#[derive(Debug, Clone, Default)]
pub struct ConicProblem {
    n_cols: usize,
    matrix_vars: Vec<MatrixVarInfo>,
    scalar_vars: Vec<ScalarVarInfo>,
    objective: LinExpr,
    affine: Vec<AffineConstraint>,
    psd_vars: Vec<MatVar>,
    psd_affine: Vec<SymAffine>,
    exp_cones: Vec<LogHypograph>,
    logdets: Vec<LogdetConstraint>,
}

impl ConicProblem {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares an `n×n` Hermitian variable (not yet constrained PSD).
    pub fn hermitian_var(&mut self, name: impl Into<String>, dim: usize) -> MatVar {
        let offset = self.n_cols;
        self.n_cols += embed::n_coords(dim);
        self.matrix_vars.push(MatrixVarInfo {
            name: name.into(),
            dim,
            offset,
        });
        MatVar(self.matrix_vars.len() - 1)
    }

    pub fn scalar_var(&mut self, name: impl Into<String>) -> ScalarVar {
        let col = self.n_cols;
        self.n_cols += 1;
        self.scalar_vars.push(ScalarVarInfo {
            name: name.into(),
            col,
        });
        ScalarVar(self.scalar_vars.len() - 1)
    }

    pub fn n_columns(&self) -> usize {
        self.n_cols
    }

    pub fn n_matrix_vars(&self) -> usize {
        self.matrix_vars.len()
    }

    pub fn n_scalar_vars(&self) -> usize {
        self.scalar_vars.len()
    }

    pub fn matrix_dim(&self, v: MatVar) -> usize {
        self.matrix_vars[v.0].dim
    }

    /// Sizes of all PSD constraints on declared matrix variables (complex
    /// dimension), i.e. the LMI census of the problem.
    pub fn lmi_sizes(&self) -> Vec<usize> {
        self.psd_vars.iter().map(|v| self.matrix_dim(*v)).collect()
    }

    pub fn affine_constraints(&self) -> &[AffineConstraint] {
        &self.affine
    }

    pub fn logdet_constraints(&self) -> &[LogdetConstraint] {
        &self.logdets
    }

    pub fn n_exp_cones(&self) -> usize {
        self.exp_cones.len()
    }

    /// `tr(C W)` for Hermitian `C`.
    pub fn trace(&self, var: MatVar, coeff: &CMat) -> LinExpr {
        let info = &self.matrix_vars[var.0];
        assert_eq!(coeff.nrows(), info.dim, "coefficient size mismatch");
        let mut e = LinExpr::zero();
        for (i, g) in embed::trace_coefficients(coeff).into_iter().enumerate() {
            e.add_term(info.offset + i, g);
        }
        e
    }

    /// `tr(W)`
    pub fn trace_identity(&self, var: MatVar) -> LinExpr {
        let info = &self.matrix_vars[var.0];
        let mut e = LinExpr::zero();
        for p in 0..info.dim {
            e.add_term(info.offset + embed::coord_diag(info.dim, p), 1.0);
        }
        e
    }

    pub fn scalar(&self, var: ScalarVar) -> LinExpr {
        let mut e = LinExpr::zero();
        e.add_term(self.scalar_vars[var.0].col, 1.0);
        e
    }

    pub fn minimize(&mut self, objective: LinExpr) {
        self.objective = objective;
    }

    pub fn maximize(&mut self, objective: LinExpr) {
        self.objective = objective.scaled(-1.0);
    }

    pub fn objective(&self) -> &LinExpr {
        &self.objective
    }

    pub fn constrain(&mut self, label: impl Into<String>, expr: LinExpr, relation: Relation) {
        self.affine.push(AffineConstraint {
            label: label.into(),
            expr,
            relation,
        });
    }

    /// `lhs ≥ rhs`
    pub fn constrain_ge(&mut self, label: impl Into<String>, lhs: LinExpr, rhs: LinExpr) {
        self.constrain(label, lhs.minus(&rhs), Relation::Ge);
    }

    /// `lhs ≤ rhs`
    pub fn constrain_le(&mut self, label: impl Into<String>, lhs: LinExpr, rhs: LinExpr) {
        self.constrain(label, lhs.minus(&rhs), Relation::Le);
    }

    pub fn constrain_psd(&mut self, var: MatVar) {
        if !self.psd_vars.contains(&var) {
            self.psd_vars.push(var);
        }
    }

    /// Real symmetric affine matrix constrained PSD.
    pub fn constrain_psd_affine(&mut self, map: SymAffine) {
        self.psd_affine.push(map);
    }

    /// `sub ≤ ln(arg)`.
    pub fn constrain_log_hypograph(&mut self, sub: LinExpr, arg: LinExpr) {
        self.exp_cones.push(LogHypograph { sub, arg });
    }

    /// Fresh scalar `u` with `u ≤ ln(arg)`, returned as an expression.
    pub fn log_of(&mut self, name: impl Into<String>, arg: LinExpr) -> LinExpr {
        let u = self.scalar_var(name);
        let ue = self.scalar(u);
        self.constrain_log_hypograph(ue.clone(), arg);
        ue
    }

    /// `logdet(map) ≥ bound`; see [`encode_logdet`].
    pub fn constrain_logdet(&mut self, label: impl Into<String>, map: SymAffine, bound: f64) {
        encode_logdet(self, label.into(), map, LinExpr::constant(bound));
    }

    /// `logdet(map) ≥ bound` with an affine right-hand side.
    pub fn constrain_logdet_ge(&mut self, label: impl Into<String>, map: SymAffine, bound: LinExpr) {
        encode_logdet(self, label.into(), map, bound);
    }

    fn matrix_coords_expr(&self, var: MatVar, coord: usize) -> LinExpr {
        let mut e = LinExpr::zero();
        e.add_term(self.matrix_vars[var.0].offset + coord, 1.0);
        e
    }

    fn embedding_of(&self, var: MatVar) -> SymAffine {
        let n = self.matrix_dim(var);
        SymAffine::from_fn(2 * n, |i, j| match embed::embedding_entry(n, i, j) {
            Some((coord, sign)) => self.matrix_coords_expr(var, coord).scaled(sign),
            None => LinExpr::zero(),
        })
    }

    /// Lowers the problem to solver standard form.
    pub fn standard_form(&self) -> StandardForm {
        let mut sf = StandardForm {
            n: self.n_cols,
            q: vec![0.0; self.n_cols],
            q0: self.objective.constant,
            ..StandardForm::default()
        };
        for (c, v) in self.objective.terms() {
            sf.q[c] += v;
        }
        // s = b − A x: for expr = g·x + c we need s = ±expr
        let push_row = |sf: &mut StandardForm, expr: &LinExpr, sign: f64| {
            let row = sf.b.len();
            for (c, v) in expr.terms() {
                sf.a.push((row, c, -sign * v));
            }
            sf.b.push(sign * expr.constant);
        };
        let eqs: Vec<_> = self.affine.iter().filter(|c| c.relation == Relation::Eq).collect();
        if !eqs.is_empty() {
            for c in &eqs {
                push_row(&mut sf, &c.expr, 1.0);
            }
            sf.cones.push(ConeSpec::Zero(eqs.len()));
        }
        let ineqs: Vec<_> = self.affine.iter().filter(|c| c.relation != Relation::Eq).collect();
        if !ineqs.is_empty() {
            for c in &ineqs {
                let sign = if c.relation == Relation::Ge { 1.0 } else { -1.0 };
                push_row(&mut sf, &c.expr, sign);
            }
            sf.cones.push(ConeSpec::Nonnegative(ineqs.len()));
        }
        let sqrt2 = std::f64::consts::SQRT_2;
        let psd_maps: Vec<SymAffine> = self
            .psd_vars
            .iter()
            .map(|v| self.embedding_of(*v))
            .chain(self.psd_affine.iter().cloned())
            .collect();
        for map in &psd_maps {
            for j in 0..map.dim {
                for i in 0..=j {
                    let scale = if i == j { 1.0 } else { sqrt2 };
                    push_row(&mut sf, &map.entry(i, j).clone().scaled(scale), 1.0);
                }
            }
            sf.cones.push(ConeSpec::PsdTriangle(map.dim));
        }
        for cone in &self.exp_cones {
            push_row(&mut sf, &cone.sub, 1.0);
            push_row(&mut sf, &LinExpr::constant(1.0), 1.0);
            push_row(&mut sf, &cone.arg, 1.0);
            sf.cones.push(ConeSpec::Exponential);
        }
        sf
    }

    /// Plain-text dump of the lowered problem; see [`StandardForm::write_text`].
    pub fn dump<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        let mut header = String::new();
        for v in &self.matrix_vars {
            let _ = writeln!(header, "# hermitian {} dim {} cols {}..{}", v.name, v.dim, v.offset, v.offset + v.dim * v.dim);
        }
        for v in &self.scalar_vars {
            let _ = writeln!(header, "# scalar {} col {}", v.name, v.col);
        }
        out.write_all(header.as_bytes())?;
        self.standard_form().write_text(out)
    }

    /// Builds the structured solution from a raw column vector.
    pub fn unpack(&self, x: &[f64], status: SolveStatus, stats: SolverStats) -> Solution {
        let matrix_values = self
            .matrix_vars
            .iter()
            .map(|v| embed::from_coords(v.dim, &x[v.offset..v.offset + v.dim * v.dim]))
            .collect();
        let scalar_values = self.scalar_vars.iter().map(|v| x[v.col]).collect();
        Solution {
            status,
            matrix_values,
            scalar_values,
            objective_value: self.objective.eval(x),
            raw: x.to_vec(),
            stats,
        }
    }
}

/// Standard-form auxiliary construction for `logdet(X) ≥ bound`:
/// `[[X, Z], [Zᵀ, Diag(Z)]] ⪰ 0` with `Z` lower triangular and
/// `Σ u_i ≥ bound`, `u_i ≤ ln Z_ii`.
pub fn encode_logdet(problem: &mut ConicProblem, label: String, map: SymAffine, bound: LinExpr) {
    let d = map.dim;
    let mut z = vec![vec![None; d]; d];
    for (i, row) in z.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate().take(i + 1) {
            let v = problem.scalar_var(format!("{label}.z{i}{j}"));
            *slot = Some(problem.scalar(v));
        }
    }
    let z_at = |i: usize, j: usize| -> LinExpr { z[i][j].clone().unwrap_or_default() };
    let block = SymAffine::from_fn(2 * d, |i, j| {
        if j < d {
            map.entry(i, j).clone()
        } else if i < d {
            z_at(i, j - d)
        } else if i == j {
            z_at(i - d, i - d)
        } else {
            LinExpr::zero()
        }
    });
    problem.constrain_psd_affine(block);
    let mut sum = LinExpr::zero();
    for i in 0..d {
        let u = problem.log_of(format!("{label}.u{i}"), z_at(i, i));
        sum.add_scaled(&u, 1.0);
    }
    let constant = bound.constant_term();
    problem.constrain(format!("{label}.sum"), sum.minus(&bound), Relation::Ge);
    problem.logdets.push(LogdetConstraint {
        label,
        map,
        bound: constant,
    });
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeSpec {
    Zero(usize),
    Nonnegative(usize),
    /// real symmetric dimension
    PsdTriangle(usize),
    Exponential,
}

impl ConeSpec {
    pub fn rows(&self) -> usize {
        match *self {
            ConeSpec::Zero(n) | ConeSpec::Nonnegative(n) => n,
            ConeSpec::PsdTriangle(d) => d * (d + 1) / 2,
            ConeSpec::Exponential => 3,
        }
    }
}

/// `min qᵀx + q0  s.t.  A x + s = b,  s ∈ K`, with `A` as triplets.
#[derive(Debug, Clone, Default)]
pub struct StandardForm {
    pub n: usize,
    pub q: Vec<f64>,
    pub q0: f64,
    pub a: Vec<(usize, usize, f64)>,
    pub b: Vec<f64>,
    pub cones: Vec<ConeSpec>,
}

impl StandardForm {
    /// Text format:
    ///
    /// ```text
    /// COLUMNS <n>
    /// ROWS <m>
    /// OBJ <q0>
    /// Q <col> <value>          (nonzeros only)
    /// A <row> <col> <value>    (triplets)
    /// B <row> <value>          (nonzeros only)
    /// CONE ZERO|NONNEG <rows> | PSDTRI <dim> | EXP
    /// ```
    ///
    /// PSD-triangle rows hold the upper triangle column-major with
    /// off-diagonals scaled by √2; exponential cones are `(x, y, z)` with
    /// `y·exp(x/y) ≤ z`.
    pub fn write_text<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "COLUMNS {}", self.n)?;
        writeln!(out, "ROWS {}", self.b.len())?;
        writeln!(out, "OBJ {:e}", self.q0)?;
        for (c, v) in self.q.iter().enumerate().filter(|(_, v)| **v != 0.0) {
            writeln!(out, "Q {c} {v:e}")?;
        }
        for (r, c, v) in &self.a {
            writeln!(out, "A {r} {c} {v:e}")?;
        }
        for (r, v) in self.b.iter().enumerate().filter(|(_, v)| **v != 0.0) {
            writeln!(out, "B {r} {v:e}")?;
        }
        for cone in &self.cones {
            match cone {
                ConeSpec::Zero(n) => writeln!(out, "CONE ZERO {n}")?,
                ConeSpec::Nonnegative(n) => writeln!(out, "CONE NONNEG {n}")?,
                ConeSpec::PsdTriangle(d) => writeln!(out, "CONE PSDTRI {d}")?,
                ConeSpec::Exponential => writeln!(out, "CONE EXP")?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
    IterationLimit,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverStats {
    pub iterations: u32,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub solve_time: f64,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub status: SolveStatus,
    pub matrix_values: Vec<CMat>,
    pub scalar_values: Vec<f64>,
    pub objective_value: f64,
    pub raw: Vec<f64>,
    pub stats: SolverStats,
}

impl Solution {
    pub fn matrix(&self, v: MatVar) -> &CMat {
        &self.matrix_values[v.0]
    }

    pub fn scalar(&self, v: ScalarVar) -> f64 {
        self.scalar_values[v.0]
    }

    pub fn eval(&self, e: &LinExpr) -> f64 {
        e.eval(&self.raw)
    }

    pub fn into_result(self) -> Result<Self> {
        match self.status {
            SolveStatus::Optimal => Ok(self),
            SolveStatus::Infeasible => Err(IsacError::Infeasible(self.stats.message)),
            _ => Err(IsacError::Numerical(format!(
                "{:?}: {}",
                self.status, self.stats.message
            ))),
        }
    }
}

/// A conic solver able to handle the lowered problem.
pub trait ConicBackend {
    fn solve(&self, problem: &ConicProblem) -> Solution;
}

pub fn solve(problem: &ConicProblem, backend: &dyn ConicBackend) -> Solution {
    backend.solve(problem)
}
