use std::collections::BTreeMap;

use serde::Serialize;

use super::linear::Family;
use super::solve::{DecisionSchedule, EmsSolution};
use super::EmsProblem;

/// Constraint residuals of one scenario's schedule, recomputed from the
/// problem data. Every value is a violation amount: zero when satisfied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioResiduals {
    pub id: String,
    /// Largest violation per constraint family, in kW or kWh.
    pub families: BTreeMap<Family, f64>,
    /// Largest distance of a binary from 0 or 1.
    pub integrality: f64,
    /// Largest variable bound violation in kW (power variables only).
    pub power_bounds: f64,
    /// Largest `min(p_rbe + p_ch, p_dis)` over steps.
    pub ess_complementarity: f64,
    /// Largest `min(p_buy, p_sell)` over steps.
    pub grid_complementarity: f64,
    /// `|soc_T − soc_0 − Σ increments|` in kWh, with increments from charge,
    /// discharge and self-discharge.
    pub soc_conservation: f64,
    /// Solver objective minus recomputed cost, in €.
    pub objective_mismatch: Option<f64>,
}

impl ScenarioResiduals {
    pub fn family(&self, family: Family) -> f64 {
        self.families.get(&family).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub scenarios: Vec<ScenarioResiduals>,
    /// `max(1, peak train + EV demand)` in kW, the scale for power residuals.
    pub power_scale: f64,
    /// Storage capacity in kWh (1 without storage).
    pub energy_scale: f64,
}

impl ResidualReport {
    pub fn max_family(&self, family: Family) -> f64 {
        self.scenarios.iter().map(|s| s.family(family)).fold(0.0, f64::max)
    }

    fn max_of(&self, f: impl Fn(&ScenarioResiduals) -> f64) -> f64 {
        self.scenarios.iter().map(f).fold(0.0, f64::max)
    }

    pub fn max_integrality(&self) -> f64 {
        self.max_of(|s| s.integrality)
    }

    pub fn max_ess_complementarity(&self) -> f64 {
        self.max_of(|s| s.ess_complementarity)
    }

    pub fn max_grid_complementarity(&self) -> f64 {
        self.max_of(|s| s.grid_complementarity)
    }

    pub fn max_objective_mismatch(&self) -> f64 {
        self.max_of(|s| s.objective_mismatch.map_or(0.0, f64::abs))
    }

    /// Feasibility at the tolerances used throughout: balance and other power
    /// rows within `1e-6·power_scale`, SoC bounds within `1e-9·capacity`,
    /// binaries within 1e-6 of integral, complementary pairs zero up to what
    /// the binary tolerance lets through.
    pub fn is_feasible(&self) -> bool {
        let power_tol = 1e-6 * self.power_scale;
        let energy_tol = 1e-6 * self.energy_scale;
        Family::ALL.iter().all(|&family| {
            let limit = match family {
                Family::SocBounds => 1e-9 * self.energy_scale,
                Family::SocRecursion | Family::TerminalSoc => energy_tol,
                _ => power_tol,
            };
            self.max_family(family) <= limit
        }) && self.max_integrality() <= BINARY_TOLERANCE
            && self.max_ess_complementarity() <= BINARY_TOLERANCE * self.power_scale
            && self.max_grid_complementarity() <= BINARY_TOLERANCE * self.power_scale
            && self.scenarios.iter().all(|s| s.power_bounds <= power_tol)
    }
}

pub(crate) const BINARY_TOLERANCE: f64 = 1e-6;

/// Recomputes every constraint on the returned schedules.
pub fn validate_solution(problem: &EmsProblem, solution: &EmsSolution) -> ResidualReport {
    let scenarios = solution
        .scenarios
        .iter()
        .enumerate()
        .filter_map(|(s, result)| {
            let schedule = result.schedule.as_ref()?;
            let mut residuals = schedule_residuals(problem, s, schedule);
            if let (Some(objective), Some(cost)) = (result.objective_eur, result.cost_eur) {
                residuals.objective_mismatch = Some(objective - cost);
            }
            Some(residuals)
        })
        .collect();
    let peak = (0..problem.scenarios.len())
        .flat_map(|s| {
            let sc = &problem.scenarios.scenarios()[s];
            (0..problem.steps()).map(move |t| sc.train_demand().values()[t] + problem.ev_demand.values()[t])
        })
        .fold(1.0, f64::max);
    ResidualReport {
        scenarios,
        power_scale: peak,
        energy_scale: problem.ess.map_or(1.0, |e| e.capacity_kwh),
    }
}

fn schedule_residuals(problem: &EmsProblem, s: usize, sch: &DecisionSchedule) -> ScenarioResiduals {
    let mut families: BTreeMap<Family, f64> = Family::ALL.iter().map(|f| (*f, 0.0)).collect();
    let mut bump = |family: Family, violation: f64| {
        let entry = families.get_mut(&family).expect("all families present");
        *entry = entry.max(violation.max(0.0));
    };
    let dt = problem.dt_hours();
    let grid = problem.grid_params;
    let rbe = problem.scenarios.scenarios()[s].rb_available().values();
    let binary_gap = |u: f64| u.abs().min((1.0 - u).abs());
    let mut integrality: f64 = 0.0;
    let mut power_bounds: f64 = 0.0;
    let mut ess_complementarity: f64 = 0.0;
    let mut grid_complementarity: f64 = 0.0;
    let mut soc_conservation = 0.0;

    for t in 0..sch.steps() {
        let (buy, sell, ug) = (sch.p_buy[t], sch.p_sell[t], sch.u_g[t]);
        integrality = integrality.max(binary_gap(ug));
        power_bounds = power_bounds
            .max(-buy)
            .max(-sell)
            .max(buy - grid.p_buy_max_kw)
            .max(sell - grid.p_sell_max_kw);
        bump(Family::GridBuyGating, buy - grid.p_buy_max_kw * ug);
        bump(Family::GridSellGating, sell - grid.p_sell_max_kw * (1.0 - ug));
        grid_complementarity = grid_complementarity.max(buy.min(sell).max(0.0));

        let (ch, dis, rb) = (sch.p_ch[t], sch.p_dis[t], sch.p_rbe[t]);
        let balance = buy + dis - ch - sell - problem.net_load(s, t);
        bump(Family::PowerBalance, balance.abs());
        power_bounds = power_bounds.max(-ch).max(-dis).max(-rb);

        if let Some(ess) = &problem.ess {
            let ub = sch.u_b[t];
            integrality = integrality.max(binary_gap(ub));
            power_bounds = power_bounds
                .max(ch - ess.p_charge_max_kw)
                .max(dis - ess.p_discharge_max_kw);
            bump(Family::EssChargeGating, rb + ch - ess.p_charge_max_kw * ub);
            bump(Family::EssDischargeGating, dis - ess.p_discharge_max_kw * (1.0 - ub));
            bump(Family::RbeCap, rb - rbe[t]);
            ess_complementarity = ess_complementarity.max((rb + ch).min(dis).max(0.0));

            let previous = if t == 0 { ess.soc0_kwh() } else { sch.soc[t - 1] };
            let loss = problem
                .options
                .discharge_convention
                .energy_per_kw(ess.eta_discharge, dt);
            let increment = -ess.self_discharge * previous + ess.eta_charge * (rb + ch) * dt - loss * dis;
            bump(Family::SocRecursion, (sch.soc[t] - previous - increment).abs());
            bump(Family::SocBounds, ess.soc_min_kwh() - sch.soc[t]);
            bump(Family::SocBounds, sch.soc[t] - ess.soc_max_kwh());
            soc_conservation += increment;
        } else {
            bump(Family::RbeCap, rb - rbe[t]);
        }
    }

    let soc_conservation = match (&problem.ess, sch.soc.last()) {
        (Some(ess), Some(last)) => {
            if problem.options.enforce_terminal_soc {
                bump(Family::TerminalSoc, ess.soc0_kwh() - last);
            }
            (last - ess.soc0_kwh() - soc_conservation).abs()
        }
        _ => 0.0,
    };

    ScenarioResiduals {
        id: sch.scenario_id.clone(),
        families,
        integrality,
        power_bounds,
        ess_complementarity,
        grid_complementarity,
        soc_conservation,
        objective_mismatch: None,
    }
}
