use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use highs::{HighsModelStatus, HighsSolutionStatus, RowProblem, Sense};
use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, SolutionStatus};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::linear::{LinearModel, VarKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackendError {
    #[error("unknown solver backend `{0}` (expected `highs` or `microlp`)")]
    UnknownBackend(String),
    #[error("{backend}: {message}")]
    Failed { backend: &'static str, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BackendStatus {
    Optimal,
    /// Stopped by the time limit or gap with a feasible incumbent.
    Feasible,
    /// Stopped by the time limit without an incumbent.
    NoSolution,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackendOutcome {
    pub status: BackendStatus,
    /// Column values, present for `Optimal` and `Feasible`.
    pub values: Option<Vec<f64>>,
    pub objective: Option<f64>,
    pub mip_gap: Option<f64>,
}

impl BackendOutcome {
    fn without_solution(status: BackendStatus) -> Self {
        Self {
            status,
            values: None,
            objective: None,
            mip_gap: None,
        }
    }
}

/// Minimal MILP interface the model is written against.
pub trait SolverBackend {
    fn name(&self) -> &'static str;
    fn add_variable(&mut self, lower: f64, upper: f64, objective: f64, binary: bool) -> usize;
    /// `lower <= Σ coef·x <= upper`.
    fn add_constraint(&mut self, terms: &[(usize, f64)], lower: f64, upper: f64);
    fn set_objective(&mut self, coefficients: &[(usize, f64)]);
    fn optimize(&mut self, gap: f64, time_limit: Duration) -> Result<BackendOutcome, BackendError>;

    fn load(&mut self, model: &LinearModel) {
        for v in model.variables() {
            self.add_variable(v.lower, v.upper, v.objective, v.kind == VarKind::Binary);
        }
        for c in model.constraints() {
            let terms: Vec<(usize, f64)> = c.terms.iter().map(|(id, coef)| (id.0, *coef)).collect();
            self.add_constraint(&terms, c.lower, c.upper);
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Highs,
    MicroLp,
}

impl BackendKind {
    /// Environment variable that overrides the configured backend.
    pub const ENV_VAR: &'static str = "EMS_SOLVER";

    /// `EMS_SOLVER` if set, else `configured`, else HiGHS.
    pub fn resolve(configured: Option<&str>) -> Result<Self, BackendError> {
        match std::env::var(Self::ENV_VAR) {
            Ok(name) if !name.trim().is_empty() => name.parse(),
            _ => configured.map_or(Ok(Self::default()), str::parse),
        }
    }

    pub fn create(self) -> Box<dyn SolverBackend> {
        match self {
            BackendKind::Highs => Box::new(HighsBackend::default()),
            BackendKind::MicroLp => Box::new(MicroLpBackend::default()),
        }
    }
}

impl FromStr for BackendKind {
    type Err = BackendError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "highs" => Ok(BackendKind::Highs),
            "microlp" => Ok(BackendKind::MicroLp),
            other => Err(BackendError::UnknownBackend(other.to_string())),
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::Highs => "highs",
            BackendKind::MicroLp => "microlp",
        })
    }
}

#[derive(Debug, Clone, Default)]
struct Buffered {
    columns: Vec<(f64, f64, f64, bool)>,
    rows: Vec<(Vec<(usize, f64)>, f64, f64)>,
}

impl Buffered {
    fn add_variable(&mut self, lower: f64, upper: f64, objective: f64, binary: bool) -> usize {
        self.columns.push((lower, upper, objective, binary));
        self.columns.len() - 1
    }

    fn set_objective(&mut self, coefficients: &[(usize, f64)]) {
        for column in &mut self.columns {
            column.2 = 0.0;
        }
        for &(j, c) in coefficients {
            self.columns[j].2 = c;
        }
    }
}

/// HiGHS through the `highs` crate, single-threaded and quiet.
#[derive(Debug, Clone, Default)]
pub struct HighsBackend {
    buffer: Buffered,
}

impl SolverBackend for HighsBackend {
    fn name(&self) -> &'static str {
        "highs"
    }

    fn add_variable(&mut self, lower: f64, upper: f64, objective: f64, binary: bool) -> usize {
        self.buffer.add_variable(lower, upper, objective, binary)
    }

    fn add_constraint(&mut self, terms: &[(usize, f64)], lower: f64, upper: f64) {
        self.buffer.rows.push((terms.to_vec(), lower, upper));
    }

    fn set_objective(&mut self, coefficients: &[(usize, f64)]) {
        self.buffer.set_objective(coefficients);
    }

    fn optimize(&mut self, gap: f64, time_limit: Duration) -> Result<BackendOutcome, BackendError> {
        let mut problem = RowProblem::default();
        let cols: Vec<_> = self
            .buffer
            .columns
            .iter()
            .map(|&(lower, upper, cost, binary)| problem.add_column_with_integrality(cost, lower..=upper, binary))
            .collect();
        for (terms, lower, upper) in &self.buffer.rows {
            problem.add_row(*lower..=*upper, terms.iter().map(|&(j, c)| (cols[j], c)));
        }

        let failed = |message: String| BackendError::Failed {
            backend: "highs",
            message,
        };
        let mut model = problem
            .try_optimise(Sense::Minimise)
            .map_err(|status| failed(format!("model rejected: {status:?}")))?;
        model.make_quiet();
        let options: [(&str, f64); 4] = [
            ("mip_rel_gap", gap),
            ("time_limit", time_limit.as_secs_f64()),
            ("primal_feasibility_tolerance", 1e-9),
            ("mip_feasibility_tolerance", 1e-9),
        ];
        for (name, value) in options {
            model
                .try_set_option(name, value)
                .map_err(|e| failed(format!("option {name}: {e:?}")))?;
        }
        model
            .try_set_option("threads", 1)
            .map_err(|e| failed(format!("option threads: {e:?}")))?;
        model
            .try_set_option("random_seed", 0)
            .map_err(|e| failed(format!("option random_seed: {e:?}")))?;
        // restarts cost more than they save on these models
        model
            .try_set_option("mip_allow_restart", false)
            .map_err(|e| failed(format!("option mip_allow_restart: {e:?}")))?;

        let solved = model
            .try_solve()
            .map_err(|status| failed(format!("solve failed: {status:?}")))?;
        let has_solution = solved.primal_solution_status() == HighsSolutionStatus::Feasible;
        let status = match solved.status() {
            HighsModelStatus::Optimal => BackendStatus::Optimal,
            HighsModelStatus::Infeasible => BackendStatus::Infeasible,
            HighsModelStatus::Unbounded | HighsModelStatus::UnboundedOrInfeasible => BackendStatus::Unbounded,
            HighsModelStatus::ReachedTimeLimit
            | HighsModelStatus::ReachedIterationLimit
            | HighsModelStatus::ReachedSolutionLimit
            | HighsModelStatus::ReachedInterrupt
            | HighsModelStatus::ObjectiveBound
            | HighsModelStatus::ObjectiveTarget => {
                if has_solution {
                    BackendStatus::Feasible
                } else {
                    BackendStatus::NoSolution
                }
            }
            other => return Err(failed(format!("model status {other:?}"))),
        };
        if !matches!(status, BackendStatus::Optimal | BackendStatus::Feasible) || !has_solution {
            return Ok(BackendOutcome::without_solution(status));
        }
        let gap = solved.mip_gap();
        Ok(BackendOutcome {
            status,
            values: Some(solved.get_solution().columns().to_vec()),
            objective: Some(solved.objective_value()),
            mip_gap: gap.is_finite().then_some(gap),
        })
    }
}

/// Pure-Rust branch and bound from the `microlp` crate. Much slower than
/// HiGHS; meant for small instances and as a cross-check.
#[derive(Debug, Clone, Default)]
pub struct MicroLpBackend {
    buffer: Buffered,
}

impl SolverBackend for MicroLpBackend {
    fn name(&self) -> &'static str {
        "microlp"
    }

    fn add_variable(&mut self, lower: f64, upper: f64, objective: f64, binary: bool) -> usize {
        self.buffer.add_variable(lower, upper, objective, binary)
    }

    fn add_constraint(&mut self, terms: &[(usize, f64)], lower: f64, upper: f64) {
        self.buffer.rows.push((terms.to_vec(), lower, upper));
    }

    fn set_objective(&mut self, coefficients: &[(usize, f64)]) {
        self.buffer.set_objective(coefficients);
    }

    fn optimize(&mut self, gap: f64, time_limit: Duration) -> Result<BackendOutcome, BackendError> {
        let mut problem = microlp::Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<_> = self
            .buffer
            .columns
            .iter()
            .map(|&(lower, upper, cost, binary)| {
                if binary {
                    problem.add_binary_var(cost)
                } else {
                    problem.add_var(cost, (lower, upper))
                }
            })
            .collect();
        for (terms, lower, upper) in &self.buffer.rows {
            let expr = || {
                let mut e = LinearExpr::empty();
                for &(j, c) in terms {
                    e.add(vars[j], c);
                }
                e
            };
            if lower == upper {
                problem.add_constraint(expr(), ComparisonOp::Eq, *upper);
                continue;
            }
            if upper.is_finite() {
                problem.add_constraint(expr(), ComparisonOp::Le, *upper);
            }
            if lower.is_finite() {
                problem.add_constraint(expr(), ComparisonOp::Ge, *lower);
            }
        }

        let mut options = microlp::SolveOptions::default();
        options.time_limit = Some(time_limit);
        options.mip_gap = gap;
        match problem.solve_with(options) {
            Ok(outcome) => match outcome.solution() {
                Some(solution) => Ok(BackendOutcome {
                    status: match solution.status() {
                        SolutionStatus::Optimal => BackendStatus::Optimal,
                        SolutionStatus::Feasible => BackendStatus::Feasible,
                    },
                    values: Some(vars.iter().map(|v| solution.var_value_raw(*v)).collect()),
                    objective: Some(solution.objective()),
                    mip_gap: solution.gap(),
                }),
                None => Ok(BackendOutcome::without_solution(BackendStatus::NoSolution)),
            },
            Err(microlp::Error::Infeasible) => Ok(BackendOutcome::without_solution(BackendStatus::Infeasible)),
            Err(microlp::Error::Unbounded) => Ok(BackendOutcome::without_solution(BackendStatus::Unbounded)),
            Err(e) => Err(BackendError::Failed {
                backend: "microlp",
                message: e.to_string(),
            }),
        }
    }
}
