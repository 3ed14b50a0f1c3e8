use super::linear::{Family, LinearModel, VarId};
use super::EmsProblem;

/// Variables of one scenario in an emitted model, indexed by step.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioLayout {
    pub scenario: usize,
    pub p_buy: Vec<VarId>,
    pub p_sell: Vec<VarId>,
    /// `None` at steps where the grid binary was left out.
    pub u_g: Vec<Option<VarId>>,
    /// Empty when storage is disabled.
    pub p_ch: Vec<VarId>,
    pub p_dis: Vec<VarId>,
    pub p_rbe: Vec<VarId>,
    pub soc: Vec<VarId>,
    /// `None` at steps where the storage binary was left out.
    pub u_b: Vec<Option<VarId>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmittedModel {
    pub model: LinearModel,
    pub layouts: Vec<ScenarioLayout>,
}

/// One model holding every scenario, objective weighted by probability.
pub fn emit_milp(problem: &EmsProblem) -> EmittedModel {
    let mut model = LinearModel::new();
    let layouts = problem
        .scenarios
        .iter()
        .enumerate()
        .map(|(s, scenario)| emit_into(&mut model, problem, s, scenario.probability()))
        .collect();
    EmittedModel { model, layouts }
}

/// Model of scenario `s` alone with an unweighted objective.
pub fn emit_scenario_milp(problem: &EmsProblem, s: usize) -> EmittedModel {
    let mut model = LinearModel::new();
    let layout = emit_into(&mut model, problem, s, 1.0);
    EmittedModel {
        model,
        layouts: vec![layout],
    }
}

fn emit_into(model: &mut LinearModel, problem: &EmsProblem, s: usize, weight: f64) -> ScenarioLayout {
    let scenario = &problem.scenarios.scenarios()[s];
    let steps = problem.steps();
    let dt = problem.dt_hours();
    let grid = problem.grid_params;
    let buy = scenario.buy_price().values();
    let sell = scenario.sell_price().values();
    let rbe = scenario.rb_available().values();
    let name = |var: &str, t: usize| format!("{var}_s{s}_t{t}");

    let mut layout = ScenarioLayout {
        scenario: s,
        p_buy: Vec::with_capacity(steps),
        p_sell: Vec::with_capacity(steps),
        u_g: Vec::with_capacity(steps),
        p_ch: Vec::new(),
        p_dis: Vec::new(),
        p_rbe: Vec::new(),
        soc: Vec::new(),
        u_b: Vec::new(),
    };

    let (charge_max, discharge_max) = problem
        .ess
        .map_or((0.0, 0.0), |e| (e.p_charge_max_kw, e.p_discharge_max_kw));

    for t in 0..steps {
        // Gating coefficients shrunk to what the balance row allows; the set
        // of integer-feasible points is unchanged, the relaxation is tighter.
        let net_load = problem.net_load(s, t);
        let buy_max = grid.p_buy_max_kw.min((net_load + charge_max).max(0.0));
        let sell_max = grid.p_sell_max_kw.min((discharge_max - net_load).max(0.0));
        let p_buy = model.add_continuous(name("p_buy", t), 0.0, grid.p_buy_max_kw.min(buy_max), weight * buy[t] * dt);
        let p_sell = model.add_continuous(name("p_sell", t), 0.0, grid.p_sell_max_kw.min(sell_max), -weight * sell[t] * dt);
        // Where selling pays no more than buying, a schedule that buys and
        // sells at once can be netted without raising the cost, so the grid
        // binary is left out and the extracted schedule is netted instead.
        let u_g = (sell[t] > buy[t]).then(|| {
            let u_g = model.add_binary(name("u_g", t));
            model.add_constraint(
                name("grid_buy", t),
                Family::GridBuyGating,
                vec![(p_buy, 1.0), (u_g, -buy_max)],
                f64::NEG_INFINITY,
                0.0,
            );
            model.add_constraint(
                name("grid_sell", t),
                Family::GridSellGating,
                vec![(p_sell, 1.0), (u_g, sell_max)],
                f64::NEG_INFINITY,
                sell_max,
            );
            u_g
        });

        let mut balance = vec![(p_buy, 1.0), (p_sell, -1.0)];
        if let Some(ess) = &problem.ess {
            let gain = ess.eta_charge * dt;
            let loss = problem
                .options
                .discharge_convention
                .energy_per_kw(ess.eta_discharge, dt);
            let p_ch = model.add_continuous(name("p_ch", t), 0.0, ess.p_charge_max_kw, 0.0);
            let p_dis = model.add_continuous(name("p_dis", t), 0.0, ess.p_discharge_max_kw, 0.0);
            let p_rbe = model.add_continuous(name("p_rbe", t), 0.0, f64::INFINITY, 0.0);
            let soc = model.add_continuous(name("soc", t), ess.soc_min_kwh(), ess.soc_max_kwh(), 0.0);
            // Same netting argument for storage: with no braking energy and a
            // lossless round trip, charging and discharging together can be
            // netted without touching the stored energy or the grid flows.
            let lossless = (gain - loss).abs() <= 1e-12 * gain;
            let u_b = if rbe[t] > 0.0 || !lossless {
                let u_b = model.add_binary(name("u_b", t));
                model.add_constraint(
                    name("ess_charge", t),
                    Family::EssChargeGating,
                    vec![(p_rbe, 1.0), (p_ch, 1.0), (u_b, -ess.p_charge_max_kw)],
                    f64::NEG_INFINITY,
                    0.0,
                );
                let dis_max = ess.p_discharge_max_kw.min((net_load.max(0.0) + grid.p_sell_max_kw).max(0.0));
                model.add_constraint(
                    name("ess_discharge", t),
                    Family::EssDischargeGating,
                    vec![(p_dis, 1.0), (u_b, dis_max)],
                    f64::NEG_INFINITY,
                    dis_max,
                );
                model.add_constraint(
                    name("rbe_cap", t),
                    Family::RbeCap,
                    vec![(p_rbe, 1.0), (u_b, -rbe[t].max(0.0))],
                    f64::NEG_INFINITY,
                    0.0,
                );
                Some(u_b)
            } else {
                model.add_constraint(name("rbe_cap", t), Family::RbeCap, vec![(p_rbe, 1.0)], f64::NEG_INFINITY, 0.0);
                None
            };

            // soc_t - (1-ε)·soc_{t-1} - η⁺Δt·(p_rbe + p_ch) + k·p_dis = 0
            let keep = 1.0 - ess.self_discharge;
            let mut terms = vec![(soc, 1.0), (p_rbe, -gain), (p_ch, -gain), (p_dis, loss)];
            let rhs = match layout.soc.last() {
                Some(&previous) => {
                    terms.push((previous, -keep));
                    0.0
                }
                None => keep * ess.soc0_kwh(),
            };
            model.add_constraint(name("soc", t), Family::SocRecursion, terms, rhs, rhs);

            balance.push((p_dis, 1.0));
            balance.push((p_ch, -1.0));
            layout.p_ch.push(p_ch);
            layout.p_dis.push(p_dis);
            layout.p_rbe.push(p_rbe);
            layout.soc.push(soc);
            layout.u_b.push(u_b);
        }

        model.add_constraint(name("balance", t), Family::PowerBalance, balance, net_load, net_load);
        layout.p_buy.push(p_buy);
        layout.p_sell.push(p_sell);
        layout.u_g.push(u_g);
    }

    if let (Some(ess), Some(&last), true) = (&problem.ess, layout.soc.last(), problem.options.enforce_terminal_soc) {
        model.add_constraint(
            format!("terminal_soc_s{s}"),
            Family::TerminalSoc,
            vec![(last, 1.0)],
            ess.soc0_kwh(),
            f64::INFINITY,
        );
    }
    layout
}
