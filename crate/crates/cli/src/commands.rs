//! One function per subcommand, each turning a validated configuration into a [`Report`].

use eamac::io::{RunConfig, SweepParam, SweepQuantity};
use eamac::planner::{
    budget_load, budget_terms, covert_budget, covert_budget_constant, covert_plan, normalized_rates, scaling_constants,
    willie_tv_leading, willie_tv_mc, CovertPlan, Rate, ScalingConstants,
};
use eamac::region::{achievable_region, covert_rectangle, PhaseMi, RateRegion, RegionReport, SumBranch};
use eamac::validation::run_suite;
use rayon::prelude::*;

use crate::error::{CliError, CliResult};
use crate::report::{Block, Polygon, Report, Val};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Region,
    CovertRect,
    Budget,
    Plan,
    Sweep,
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Region => "region",
            Command::CovertRect => "covert-rect",
            Command::Budget => "budget",
            Command::Plan => "plan",
            Command::Sweep => "sweep",
            Command::Validate => "validate",
        }
    }
}

/// A report plus the failure to signal once it has been written.
pub struct Outcome {
    pub report: Report,
    pub failure: Option<CliError>,
}

impl From<Report> for Outcome {
    fn from(report: Report) -> Self {
        Self { report, failure: None }
    }
}

fn need<'a, T>(v: &'a Option<T>, section: &str) -> CliResult<&'a T> {
    v.as_ref().ok_or_else(|| CliError::Config(format!("this command needs a [{section}] section")))
}

pub fn run(cmd: Command, cfg: &RunConfig) -> CliResult<Outcome> {
    let mut report = Report::new(cmd.name());
    match cmd {
        Command::Region => {
            let rep = region_report(cfg)?;
            report.blocks = region_summary(&rep);
            region_geometry(&mut report, &rep.region, cfg.output.boundary_per_edge);
            report.polygons.push(Polygon { label: "achievable region".into(), vertices: rep.region.vertices.clone() });
        }
        Command::CovertRect => {
            let r = rectangle(cfg)?;
            report.blocks = rectangle_summary(&r);
            region_geometry(&mut report, &r, cfg.output.boundary_per_edge);
            report.polygons.push(Polygon { label: "small-signal rectangle".into(), vertices: r.vertices.clone() });
        }
        Command::Budget => report.blocks = budget_summary(cfg)?,
        Command::Plan => {
            report.blocks = plan_summary(&plan(cfg)?);
            if let Some(c) = &cfg.scaling {
                let x = need(&cfg.plan, "plan")?;
                push_constants(report.block("limits"), &scaling_constants(&cfg.channel, c)?);
                push_constants(report.block("normalized"), &normalized_rates(&cfg.channel, c, x.n, x.epsilon)?);
            }
        }
        Command::Sweep => report.table = Some(sweep(cfg)?),
        Command::Validate => return validate(cfg, report),
    }
    Ok(report.into())
}

fn region_report(cfg: &RunConfig) -> CliResult<RegionReport> {
    let m = need(&cfg.modulation, "modulation")?;
    Ok(achievable_region(&cfg.channel, m, &cfg.numerics)?)
}

fn constraints_block(r: &RateRegion) -> Block {
    let mut b = Block::new("constraints");
    for c in &r.constraints {
        b.put(c.kind.label(), Val::Info(c.value));
        b.put(format!("{}_active", c.kind.label()), Val::Flag(c.active));
    }
    b
}

fn region_summary(rep: &RegionReport) -> Vec<Block> {
    let r = &rep.region;
    let mut cons = constraints_block(r);
    let branch = match r.sum_branch {
        SumBranch::XUnconditioned => "x_unconditioned",
        SumBranch::YUnconditioned => "y_unconditioned",
        SumBranch::None => "none",
    };
    cons.put("sum_branch", Val::Text(branch.into()));
    cons.put("sum_candidate_x_unconditioned", Val::Info(r.sum_candidates[0]));
    cons.put("sum_candidate_y_unconditioned", Val::Info(r.sum_candidates[1]));
    cons.put("vertices", Val::Int(r.vertices.len() as u64));

    let mut terms = Block::new("terms");
    let t = &rep.terms;
    let named: [(&str, &PhaseMi); 4] = [
        ("x_conditioned", &t.x_conditioned),
        ("y_conditioned", &t.y_conditioned),
        ("x_unconditioned", &t.x_unconditioned),
        ("y_unconditioned", &t.y_unconditioned),
    ];
    for ((name, mi), eff) in named.iter().zip(&rep.effective) {
        terms.put(*name, Val::Info(mi.value));
        terms.put(format!("{name}_kappa_eff"), Val::Num(eff.kappa_eff));
        terms.put(format!("{name}_n_t_eff"), Val::Num(eff.n_t_eff));
        terms.put(format!("{name}_conditional_entropy"), Val::Info(mi.conditional.value));
        terms.put(format!("{name}_noise_condition"), Val::Flag(mi.conditional.in_validity_region));
        terms.put(format!("{name}_tail"), Val::Num(mi.tail));
    }
    terms.put("max_tail", Val::Num(t.max_tail()));
    terms.put("all_in_validity_region", Val::Flag(t.all_in_validity_region()));
    vec![cons, terms]
}

fn region_geometry(report: &mut Report, r: &RateRegion, per_edge: usize) {
    let v = report.block("vertices");
    for (i, &(x, y)) in r.vertices.iter().enumerate() {
        v.put(format!("v{i}_rx"), Val::Info(x)).put(format!("v{i}_ry"), Val::Info(y));
    }
    if per_edge > 0 {
        let b = report.block("boundary");
        for (i, (x, y)) in r.boundary(per_edge).into_iter().enumerate() {
            b.put(format!("p{i}_rx"), Val::Info(x)).put(format!("p{i}_ry"), Val::Info(y));
        }
    }
}

fn rectangle(cfg: &RunConfig) -> CliResult<RateRegion> {
    let r = need(&cfg.rectangle, "rectangle")?;
    Ok(covert_rectangle(&cfg.channel, r.s)?)
}

fn rectangle_summary(r: &RateRegion) -> Vec<Block> {
    let mut b = constraints_block(r);
    b.put("vertices", Val::Int(r.vertices.len() as u64));
    vec![b]
}

fn budget_summary(cfg: &RunConfig) -> CliResult<Vec<Block>> {
    let b = need(&cfg.budget, "budget")?;
    let p = &cfg.channel;
    let budget = covert_budget(b.n, b.delta, p)?;
    let mut blk = Block::new("budget");
    blk.put("constant", Val::Num(covert_budget_constant(b.delta, p)?));
    blk.put("budget", Val::Num(budget));
    if let (Some(alpha), Some(beta), Some(s)) = (b.alpha, b.beta, b.s) {
        let (tx, ty) = budget_terms(alpha, beta, s, p);
        let load = budget_load(alpha, beta, s, p);
        blk.put("load", Val::Num(load));
        blk.put("x_term", Val::Num(tx));
        blk.put("y_term", Val::Num(ty));
        blk.put("slack", Val::Num(budget - load));
        blk.put("frontier_rhs", Val::Num(if s > 0.0 { budget / s } else { f64::INFINITY }));
        blk.put("within_budget", Val::Flag(load <= budget));
    }
    Ok(vec![blk])
}

fn plan(cfg: &RunConfig) -> CliResult<CovertPlan> {
    Ok(covert_plan(&cfg.channel, need(&cfg.plan, "plan")?)?)
}

fn put_rate(b: &mut Block, key: &str, r: &Rate) {
    b.put(key, Val::Info(r.value));
    b.put(format!("{key}_order"), Val::Text(r.order.clone()));
}

fn plan_summary(plan: &CovertPlan) -> Vec<Block> {
    let mut budget = Block::new("budget");
    budget.put("budget", Val::Num(plan.budget)).put("load", Val::Num(plan.load)).put("feasible", Val::Flag(true));

    let mut l1 = Block::new("layer1");
    let r = &plan.layer1;
    put_rate(&mut l1, "log_m_x1", &r.log_m_x1);
    put_rate(&mut l1, "log_m_y1", &r.log_m_y1);
    put_rate(&mut l1, "log_m_x1_m_y1", &r.log_m_x1_m_y1);
    put_rate(&mut l1, "log_m_x1_s_x", &r.log_m_x1_s_x);
    put_rate(&mut l1, "log_m_y1_s_y", &r.log_m_y1_s_y);
    put_rate(&mut l1, "log_keys_total", &r.log_keys_total);

    let mut l2 = Block::new("layer2");
    let r = &plan.layer2;
    put_rate(&mut l2, "log_m_x2", &r.log_m_x2);
    put_rate(&mut l2, "log_m_y2", &r.log_m_y2);
    put_rate(&mut l2, "log_m_x2_m_y2", &r.log_m_x2_m_y2);
    l2.put("l_x", Val::Int(r.l_x)).put("l_y", Val::Int(r.l_y));
    l2.put("ent_nats_x", Val::Info(r.ent_nats_x)).put("ent_nats_y", Val::Info(r.ent_nats_y));

    let mut cov = Block::new("covertness");
    cov.put("chernoff_truncation", Val::Num(plan.chernoff)).put("willie_tv_leading", Val::Num(plan.willie_tv));
    vec![budget, l1, l2, cov]
}

fn push_constants(b: &mut Block, k: &ScalingConstants) {
    for (label, v) in ScalingConstants::LABELS.iter().zip(k.as_array()) {
        b.put(*label, Val::Info(v));
    }
}

fn willie_summary(cfg: &RunConfig, seed: Option<u64>) -> CliResult<Vec<Block>> {
    let w = need(&cfg.willie, "willie")?;
    let mut b = Block::new("willie");
    b.put("tv_leading", Val::Num(willie_tv_leading(w.n, w.alpha, w.beta, w.s, &cfg.channel)?));
    if let Some(seed) = seed {
        let mc = willie_tv_mc(w.n, w.alpha, w.beta, w.s, &cfg.channel, w.samples, Some(seed))?;
        b.put("tv_mc", Val::Num(mc.estimate)).put("tv_mc_std_error", Val::Num(mc.std_error));
        b.put("samples", Val::Int(mc.samples)).put("seed", Val::Int(seed));
    }
    Ok(vec![b])
}

fn point_summary(q: SweepQuantity, cfg: &RunConfig, seed: Option<u64>) -> CliResult<Vec<Block>> {
    match q {
        SweepQuantity::Region => {
            let mut blocks = region_summary(&region_report(cfg)?);
            blocks[1].entries.retain(|(k, _)| !k.ends_with("_kappa_eff") && !k.ends_with("_n_t_eff"));
            Ok(blocks)
        }
        SweepQuantity::Rectangle => Ok(rectangle_summary(&rectangle(cfg)?)),
        SweepQuantity::Budget => budget_summary(cfg),
        SweepQuantity::Plan => Ok(plan_summary(&plan(cfg)?)),
        SweepQuantity::WillieTv => willie_summary(cfg, None),
        SweepQuantity::WillieMc => willie_summary(cfg, seed),
    }
}

/// Grid rows in grid order; point `i` of a Monte Carlo sweep uses seed `seed + i`.
fn sweep(cfg: &RunConfig) -> CliResult<Vec<Vec<(String, Val)>>> {
    let s = need(&cfg.sweep, "sweep")?;
    let seed = match s.quantity {
        SweepQuantity::WillieMc => Some(cfg.require_seed()?),
        _ => cfg.seed,
    };
    let grid = s.grid();
    let rows: Vec<CliResult<Vec<(String, Val)>>> = grid
        .par_iter()
        .enumerate()
        .map(|(i, point)| {
            let at = cfg.at_point(&s.axes, point)?;
            let mut row: Vec<(String, Val)> = vec![("index".into(), Val::Int(i as u64))];
            for (a, &v) in s.axes.iter().zip(point) {
                let v = if a.param == SweepParam::N { Val::Int(v.round() as u64) } else { Val::Num(v) };
                row.push((a.param.label().into(), v));
            }
            let blocks = point_summary(s.quantity, &at, seed.map(|x| x.wrapping_add(i as u64)))
                .map_err(|e| at_point(e, i, point))?;
            for b in blocks {
                for (k, v) in b.entries {
                    row.push((format!("{}.{k}", b.name), v));
                }
            }
            Ok(row)
        })
        .collect();
    rows.into_iter().collect()
}

fn at_point(e: CliError, i: usize, point: &[f64]) -> CliError {
    let at = format!("sweep point {i} {point:?}");
    match e {
        CliError::Config(m) => CliError::Config(format!("{at}: {m}")),
        CliError::Infeasible(m) => CliError::Infeasible(format!("{at}: {m}")),
        CliError::Numerical(m) => CliError::Numerical(format!("{at}: {m}")),
        other => other,
    }
}

fn validate(cfg: &RunConfig, mut report: Report) -> CliResult<Outcome> {
    let seed = cfg.require_seed()?;
    let suite = run_suite(&cfg.validate.unwrap_or_default(), seed)?;
    let failed: Vec<&str> = suite.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    report
        .block("summary")
        .put("checks", Val::Int(suite.checks.len() as u64))
        .put("failed", Val::Int(failed.len() as u64))
        .put("all_passed", Val::Flag(failed.is_empty()));
    for c in &suite.checks {
        report
            .block(&c.name)
            .put("passed", Val::Flag(c.passed))
            .put("measured", Val::Num(c.measured))
            .put("tolerance", Val::Num(c.tolerance))
            .put("detail", Val::Text(c.detail.clone()));
    }
    let failure = (!failed.is_empty()).then(|| CliError::ValidationFailed(failed.join(", ")));
    Ok(Outcome { report, failure })
}
