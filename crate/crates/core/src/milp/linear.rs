use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub objective: f64,
    pub kind: VarKind,
}

/// Constraint families, used to tag rows and to group residuals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    EssChargeGating,
    EssDischargeGating,
    SocRecursion,
    SocBounds,
    RbeCap,
    PowerBalance,
    GridBuyGating,
    GridSellGating,
    TerminalSoc,
}

impl Family {
    pub const ALL: [Family; 9] = [
        Family::EssChargeGating,
        Family::EssDischargeGating,
        Family::SocRecursion,
        Family::SocBounds,
        Family::RbeCap,
        Family::PowerBalance,
        Family::GridBuyGating,
        Family::GridSellGating,
        Family::TerminalSoc,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Family::EssChargeGating => "ess charge gating",
            Family::EssDischargeGating => "ess discharge gating",
            Family::SocRecursion => "soc recursion",
            Family::SocBounds => "soc bounds",
            Family::RbeCap => "regenerative braking cap",
            Family::PowerBalance => "power balance",
            Family::GridBuyGating => "grid purchase gating",
            Family::GridSellGating => "grid sale gating",
            Family::TerminalSoc => "terminal soc",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// `lower <= Σ coef·x <= upper`; equal bounds make an equality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constraint {
    pub name: String,
    pub family: Family,
    pub terms: Vec<(VarId, f64)>,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ModelSize {
    pub continuous: usize,
    pub binaries: usize,
    pub constraints: usize,
}

/// Solver-independent minimization model.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LinearModel {
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    objective_offset: f64,
}

impl LinearModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_continuous(&mut self, name: String, lower: f64, upper: f64, objective: f64) -> VarId {
        self.push(Variable {
            name,
            lower,
            upper,
            objective,
            kind: VarKind::Continuous,
        })
    }

    pub fn add_binary(&mut self, name: String) -> VarId {
        self.push(Variable {
            name,
            lower: 0.0,
            upper: 1.0,
            objective: 0.0,
            kind: VarKind::Binary,
        })
    }

    fn push(&mut self, variable: Variable) -> VarId {
        self.variables.push(variable);
        VarId(self.variables.len() - 1)
    }

    pub fn add_constraint(&mut self, name: String, family: Family, terms: Vec<(VarId, f64)>, lower: f64, upper: f64) {
        self.constraints.push(Constraint {
            name,
            family,
            terms,
            lower,
            upper,
        });
    }

    pub fn add_objective_offset(&mut self, offset: f64) {
        self.objective_offset += offset;
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective_offset(&self) -> f64 {
        self.objective_offset
    }

    pub fn size(&self) -> ModelSize {
        let binaries = self.variables.iter().filter(|v| v.kind == VarKind::Binary).count();
        ModelSize {
            continuous: self.variables.len() - binaries,
            binaries,
            constraints: self.constraints.len(),
        }
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective_offset
            + self
                .variables
                .iter()
                .zip(values)
                .map(|(v, x)| v.objective * x)
                .sum::<f64>()
    }

    /// Writes the model in CPLEX LP text format.
    pub fn to_lp_format(&self) -> String {
        let mut out = String::new();
        let name = |id: VarId| self.variables[id.0].name.as_str();
        let expr = |terms: &mut dyn Iterator<Item = (VarId, f64)>| {
            let mut text = String::new();
            for (i, (id, coef)) in terms.enumerate() {
                let sign = if coef < 0.0 { " -" } else if i == 0 { "" } else { " +" };
                let _ = write!(text, "{sign} {} {}", lp_number(coef.abs()), name(id));
            }
            if text.is_empty() {
                text.push_str(" 0");
            }
            text
        };

        out.push_str("\\ station energy management model\nMinimize\n obj:");
        let mut objective = self
            .variables
            .iter()
            .enumerate()
            .filter(|(_, v)| v.objective != 0.0)
            .map(|(i, v)| (VarId(i), v.objective));
        out.push_str(&expr(&mut objective));
        if self.objective_offset != 0.0 {
            let _ = write!(out, " + {} constant", lp_number(self.objective_offset));
        }
        out.push_str("\nSubject To\n");
        for c in &self.constraints {
            let body = expr(&mut c.terms.iter().copied());
            if c.lower == c.upper {
                let _ = writeln!(out, " {}:{body} = {}", c.name, lp_number(c.upper));
                continue;
            }
            if c.upper.is_finite() {
                let suffix = if c.lower.is_finite() { "_hi" } else { "" };
                let _ = writeln!(out, " {}{suffix}:{body} <= {}", c.name, lp_number(c.upper));
            }
            if c.lower.is_finite() {
                let suffix = if c.upper.is_finite() { "_lo" } else { "" };
                let _ = writeln!(out, " {}{suffix}:{body} >= {}", c.name, lp_number(c.lower));
            }
        }
        out.push_str("Bounds\n");
        if self.objective_offset != 0.0 {
            out.push_str(" constant = 1\n");
        }
        for v in self.variables.iter().filter(|v| v.kind == VarKind::Continuous) {
            let upper = if v.upper.is_finite() {
                lp_number(v.upper)
            } else {
                "+inf".to_string()
            };
            let lower = if v.lower.is_finite() {
                lp_number(v.lower)
            } else {
                "-inf".to_string()
            };
            let _ = writeln!(out, " {lower} <= {} <= {upper}", v.name);
        }
        let binaries: Vec<&str> = self
            .variables
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .map(|v| v.name.as_str())
            .collect();
        if !binaries.is_empty() {
            out.push_str("Binaries\n");
            for chunk in binaries.chunks(8) {
                let _ = writeln!(out, " {}", chunk.join(" "));
            }
        }
        out.push_str("End\n");
        out
    }
}

fn lp_number(value: f64) -> String {
    // shortest round-trip representation
    format!("{value:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lp_export_lists_every_section() {
        let mut model = LinearModel::new();
        let x = model.add_continuous("x".into(), 0.0, 10.0, 2.0);
        let y = model.add_continuous("y".into(), 0.0, f64::INFINITY, -1.5);
        let u = model.add_binary("u".into());
        model.add_constraint("bal".into(), Family::PowerBalance, vec![(x, 1.0), (y, -1.0)], 3.0, 3.0);
        model.add_constraint("gate".into(), Family::GridBuyGating, vec![(x, 1.0), (u, -10.0)], f64::NEG_INFINITY, 0.0);
        model.add_constraint("rng".into(), Family::SocBounds, vec![(y, 1.0)], 1.0, 2.0);
        let text = model.to_lp_format();
        assert!(text.contains("obj: 2.0 x - 1.5 y"));
        assert!(text.contains(" bal: 1.0 x - 1.0 y = 3.0"));
        assert!(text.contains(" gate: 1.0 x - 10.0 u <= 0.0"));
        assert!(text.contains(" rng_hi: 1.0 y <= 2.0"));
        assert!(text.contains(" rng_lo: 1.0 y >= 1.0"));
        assert!(text.contains(" 0.0 <= y <= +inf"));
        assert!(text.contains("Binaries\n u\n"));
        assert!(text.ends_with("End\n"));
        assert_eq!(
            model.size(),
            ModelSize {
                continuous: 2,
                binaries: 1,
                constraints: 3
            }
        );
    }

    #[test]
    fn objective_value_includes_offset() {
        let mut model = LinearModel::new();
        model.add_continuous("x".into(), 0.0, 1.0, 3.0);
        model.add_objective_offset(-1.0);
        assert_eq!(model.objective_value(&[2.0]), 5.0);
    }
}
