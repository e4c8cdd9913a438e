use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use log::debug;

use super::{ConeSpec, ConicBackend, ConicProblem, Solution, SolveStatus, SolverStats};

/// Interior-point backend built on Clarabel.
#[derive(Debug, Clone)]
pub struct ClarabelBackend {
    pub max_iter: u32,
    pub tol_feas: f64,
    pub tol_gap: f64,
    /// Residual allowed for an "almost solved" answer to count as optimal.
    pub reduced_accuracy_residual: f64,
    pub verbose: bool,
}

impl Default for ClarabelBackend {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol_feas: 1e-8,
            tol_gap: 1e-8,
            reduced_accuracy_residual: 1e-5,
            verbose: false,
        }
    }
}

/// Environment variable that turns on solver iteration logs.
pub const VERBOSE_ENV: &str = "RSMA_ISAC_SOLVER_VERBOSE";

impl ClarabelBackend {
    /// Default settings, verbose when `RSMA_ISAC_SOLVER_VERBOSE` is set to
    /// anything other than `0` or an empty string.
    pub fn from_env() -> Self {
        let verbose = std::env::var(VERBOSE_ENV).is_ok_and(|v| !v.is_empty() && v != "0");
        Self {
            verbose,
            ..Self::default()
        }
    }

    fn settings(&self) -> DefaultSettings<f64> {
        DefaultSettings {
            max_iter: self.max_iter,
            tol_feas: self.tol_feas,
            tol_gap_abs: self.tol_gap,
            tol_gap_rel: self.tol_gap,
            verbose: self.verbose,
            ..DefaultSettings::default()
        }
    }
}

impl ConicBackend for ClarabelBackend {
    fn solve(&self, problem: &ConicProblem) -> Solution {
        let sf = problem.standard_form();
        let m = sf.b.len();
        let n = sf.n;
        let (mut ri, mut ci, mut vals) = (Vec::new(), Vec::new(), Vec::new());
        for &(r, c, v) in &sf.a {
            ri.push(r);
            ci.push(c);
            vals.push(v);
        }
        let a = CscMatrix::new_from_triplets(m, n, ri, ci, vals);
        let p = CscMatrix::zeros((n, n));
        let cones: Vec<SupportedConeT<f64>> = sf
            .cones
            .iter()
            .map(|c| match *c {
                ConeSpec::Zero(k) => SupportedConeT::ZeroConeT(k),
                ConeSpec::Nonnegative(k) => SupportedConeT::NonnegativeConeT(k),
                ConeSpec::PsdTriangle(d) => SupportedConeT::PSDTriangleConeT(d),
                ConeSpec::Exponential => SupportedConeT::ExponentialConeT(),
            })
            .collect();

        let failed = |msg: String| {
            problem.unpack(
                &vec![0.0; n],
                SolveStatus::NumericalFailure,
                SolverStats {
                    message: msg,
                    ..SolverStats::default()
                },
            )
        };
        let mut solver = match DefaultSolver::new(&p, &sf.q, &a, &sf.b, &cones, self.settings()) {
            Ok(s) => s,
            Err(e) => return failed(format!("solver setup failed: {e}")),
        };
        solver.solve();
        let sol = &solver.solution;
        let info = &solver.info;
        let residual = info.res_primal.max(info.res_dual);
        let status = match sol.status {
            SolverStatus::Solved => SolveStatus::Optimal,
            SolverStatus::AlmostSolved if residual <= self.reduced_accuracy_residual => {
                SolveStatus::Optimal
            }
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                SolveStatus::Infeasible
            }
            SolverStatus::MaxIterations | SolverStatus::MaxTime => SolveStatus::IterationLimit,
            _ => SolveStatus::NumericalFailure,
        };
        debug!(
            "clarabel: {:?} after {} iterations, residual {:.2e}",
            sol.status, info.iterations, residual
        );
        let x: Vec<f64> = if sol.x.iter().all(|v| v.is_finite()) {
            sol.x.clone()
        } else {
            vec![0.0; n]
        };
        problem.unpack(
            &x,
            status,
            SolverStats {
                iterations: info.iterations,
                primal_residual: info.res_primal,
                dual_residual: info.res_dual,
                solve_time: sol.solve_time,
                message: format!("{:?}", sol.status),
            },
        )
    }
}
