//! Subcommand implementations. Each command validates its config block,
//! runs the analysis, writes the CSV tables and the JSON mirror, and
//! returns the process exit code.

use serde_json::json;

use sidonlab_core::construction::Tower;
use sidonlab_core::dynamics::{self, Direction, ScanMode, WitnessReport};
use sidonlab_core::oracle::{builtin_tiny_parameter_sets, equivalence_battery, EquivalenceOptions};
use sidonlab_core::poisson::{self, CylinderSpec, JointFactor, JointSpec, PoissonCaps};
use sidonlab_core::{hp, Error as CoreError, Int, Rat};

use crate::config::{parse_int, parse_rat, ConfigError, RunConfig, SetDef};
use crate::report::{provenance, CsvTable, ReportWriter};

/// Exit codes: 0 success, 1 violation detected, 2 configuration error,
/// 3 resource limit.
#[derive(Debug)]
pub enum RunError {
    Config(String),
    Resource(String),
    Exactness(String),
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Io(_) => 2,
            RunError::Resource(_) => 3,
            RunError::Exactness(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            RunError::Config(m)
            | RunError::Resource(m)
            | RunError::Exactness(m)
            | RunError::Io(m) => m,
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e.to_string())
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e.to_string())
    }
}

fn core(e: CoreError) -> RunError {
    if e.is_resource_limit() {
        RunError::Resource(e.to_string())
    } else if e.is_exactness_bug() {
        RunError::Exactness(e.to_string())
    } else {
        RunError::Config(e.to_string())
    }
}

/// Everything a command needs.
pub struct Ctx<'a> {
    pub cfg: &'a RunConfig,
    pub tower: Tower,
    pub precision: u32,
    pub seed_override: Option<u64>,
    pub budget_floors: u64,
    pub writer: ReportWriter,
}

impl Ctx<'_> {
    fn dec(&self, r: &Rat) -> String {
        hp::render_sig(r, self.precision)
    }
}

pub fn cmd_stages(ctx: &mut Ctx) -> Result<i32, RunError> {
    let block = ctx
        .cfg
        .stages
        .as_ref()
        .ok_or_else(|| RunError::Config("missing \"stages\" block".into()))?;
    if block.max_stage < 1 {
        return Err(RunError::Config(
            "stages.max_stage must be at least 1".into(),
        ));
    }
    let sums = dynamics::spectral_condition_report(&ctx.tower, block.max_stage).map_err(core)?;
    let mut table = CsvTable::new(vec![
        "j",
        "r",
        "h",
        "w",
        "w_dec",
        "mu_X",
        "mu_X_dec",
        "sum_inv_r",
        "sum_inv_r_dec",
    ]);
    let mut rows_json = Vec::new();
    for (j, sum_inv_r) in &sums {
        let geom = ctx.tower.geometry(*j).map_err(core)?;
        let mu = ctx
            .tower
            .measure(&ctx.tower.tower_set(*j).map_err(core)?)
            .map_err(core)?;
        table.push(vec![
            j.to_string(),
            geom.cuts.to_string(),
            geom.height.to_string(),
            geom.width.to_string(),
            ctx.dec(&geom.width),
            mu.to_string(),
            ctx.dec(&mu),
            sum_inv_r.to_string(),
            ctx.dec(sum_inv_r),
        ]);
        rows_json.push(json!({
            "j": j,
            "r": geom.cuts,
            "h": geom.height.to_string(),
            "w": geom.width.to_string(),
            "mu_X": mu.to_string(),
            "sum_inv_r": sum_inv_r.to_string(),
        }));
        ctx.writer.say(&format!(
            "stage {j}: r = {}, h = {}, w = {}, mu(X_{j}) = {}, sum 1/r = {}",
            geom.cuts, geom.height, geom.width, mu, sum_inv_r
        ));
    }
    ctx.writer.write_csv("stages", &table)?;
    let prov = provenance(&ctx.tower, ctx.precision);
    ctx.writer.write_json(
        "stages",
        &json!({
            "command": "stages",
            "provenance": prov,
            "settings": {"max_stage": block.max_stage},
            "rows": rows_json,
        }),
    )?;
    Ok(0)
}

pub fn cmd_sidon(ctx: &mut Ctx) -> Result<i32, RunError> {
    let block = ctx
        .cfg
        .sidon
        .as_ref()
        .ok_or_else(|| RunError::Config("missing \"sidon\" block".into()))?;
    let budget = match &block.budget {
        Some(s) => parse_int(s, "sidon.budget")?,
        None => Int::from(1_000_000u64),
    };
    let random_samples = block.random_samples.unwrap_or(64);
    let seed = ctx.seed_override.or(block.seed).unwrap_or(0);
    let scan =
        dynamics::sidon_scan(&ctx.tower, block.j, &budget, random_samples, seed).map_err(core)?;

    let x_j = ctx.tower.tower_set(block.j).map_err(core)?;
    let mut table = CsvTable::new(vec!["j", "m", "witness", "mu_intersection", "mu_dec"]);
    let mut rows_json = Vec::new();
    for (m, witness) in &scan.results {
        let mu = dynamics::intersect_shifted_measure(&ctx.tower, &x_j, &x_j, m).map_err(core)?;
        table.push(vec![
            block.j.to_string(),
            m.to_string(),
            witness.label(),
            mu.to_string(),
            ctx.dec(&mu),
        ]);
        rows_json.push(json!({
            "m": m.to_string(),
            "witness": witness.label(),
            "mu_intersection": mu.to_string(),
        }));
    }
    let violations: Vec<String> = scan.violations().iter().map(|m| m.to_string()).collect();
    let mode_label = scan.mode.label();
    ctx.writer.say(&format!(
        "sidon scan at stage {}: {} shifts ({}), {} violations",
        block.j,
        scan.results.len(),
        mode_label,
        violations.len()
    ));
    ctx.writer.write_csv("sidon", &table)?;
    let prov = provenance(&ctx.tower, ctx.precision);
    ctx.writer.write_json(
        "sidon",
        &json!({
            "command": "sidon",
            "provenance": prov,
            "settings": {
                "j": block.j,
                "budget": budget.to_string(),
                "random_samples": random_samples,
                "seed": seed,
                "mode": mode_label,
                "sample_is_exhaustive": matches!(scan.mode, ScanMode::Exhaustive),
            },
            "violations": violations,
            "rows": rows_json,
        }),
    )?;
    if scan.violations().is_empty() {
        Ok(0)
    } else {
        Ok(1)
    }
}

fn directions(block_direction: Option<&str>) -> Result<Vec<Direction>, RunError> {
    match block_direction.unwrap_or("both") {
        "forward" => Ok(vec![Direction::Forward]),
        "inverse" => Ok(vec![Direction::Inverse]),
        "both" => Ok(vec![Direction::Forward, Direction::Inverse]),
        other => Err(RunError::Config(format!(
            "direction must be forward, inverse or both; got {other:?}"
        ))),
    }
}

fn witness_reports(ctx: &Ctx, dirs: &[Direction]) -> Result<Vec<WitnessReport>, RunError> {
    let block = ctx
        .cfg
        .theorem3
        .as_ref()
        .ok_or_else(|| RunError::Config("missing \"theorem3\" block".into()))?;
    let base = ctx.cfg.resolve_set(&ctx.tower, &block.set)?;
    let mut reports = Vec::new();
    for j in &block.stages {
        for dir in dirs {
            reports.push(dynamics::witness_stats(&ctx.tower, &base, *j, *dir).map_err(core)?);
        }
    }
    Ok(reports)
}

pub fn cmd_theorem3(ctx: &mut Ctx) -> Result<i32, RunError> {
    let block_direction = ctx.cfg.theorem3.as_ref().and_then(|b| b.direction.clone());
    let dirs = directions(block_direction.as_deref())?;
    let reports = witness_reports(ctx, &dirs)?;
    let mut table = CsvTable::new(vec![
        "j",
        "direction",
        "r",
        "mu_A",
        "mu_A_dec",
        "expr0",
        "expr0_dec",
        "expr1",
        "expr1_dec",
        "defect",
        "defect_dec",
    ]);
    let mut rows_json = Vec::new();
    for rep in &reports {
        table.push(vec![
            rep.j.to_string(),
            rep.direction.label().to_string(),
            rep.cuts.to_string(),
            rep.mu_a.to_string(),
            ctx.dec(&rep.mu_a),
            rep.expr0.to_string(),
            ctx.dec(&rep.expr0),
            rep.expr1.to_string(),
            ctx.dec(&rep.expr1),
            rep.union_defect.to_string(),
            ctx.dec(&rep.union_defect),
        ]);
        rows_json.push(json!({
            "j": rep.j,
            "direction": rep.direction.label(),
            "r": rep.cuts,
            "mu_A": rep.mu_a.to_string(),
            "expr0": rep.expr0.to_string(),
            "expr1": rep.expr1.to_string(),
            "defect": rep.union_defect.to_string(),
        }));
        ctx.writer.say(&format!(
            "stage {} {}: expr0 = {}, expr1 = {}, defect = {}",
            rep.j,
            rep.direction.label(),
            rep.expr0,
            rep.expr1,
            rep.union_defect
        ));
    }
    ctx.writer.write_csv("theorem3", &table)?;
    let prov = provenance(&ctx.tower, ctx.precision);
    let block = ctx.cfg.theorem3.as_ref().expect("checked");
    ctx.writer.write_json(
        "theorem3",
        &json!({
            "command": "theorem3",
            "provenance": prov,
            "settings": {"set": block.set, "stages": block.stages, "direction": block_direction},
            "rows": rows_json,
        }),
    )?;
    Ok(0)
}

pub fn cmd_asymmetry(ctx: &mut Ctx) -> Result<i32, RunError> {
    let reports = witness_reports(ctx, &[Direction::Forward, Direction::Inverse])?;
    let mut table = CsvTable::new(vec![
        "j",
        "r",
        "mu_A",
        "expr0_fwd",
        "expr1_fwd",
        "defect_fwd",
        "expr0_inv",
        "expr1_inv",
        "defect_inv",
        "expr1_fwd_dec",
        "expr1_inv_dec",
    ]);
    let mut rows_json = Vec::new();
    for pair in reports.chunks(2) {
        let [fwd, inv] = pair else { continue };
        table.push(vec![
            fwd.j.to_string(),
            fwd.cuts.to_string(),
            fwd.mu_a.to_string(),
            fwd.expr0.to_string(),
            fwd.expr1.to_string(),
            fwd.union_defect.to_string(),
            inv.expr0.to_string(),
            inv.expr1.to_string(),
            inv.union_defect.to_string(),
            ctx.dec(&fwd.expr1),
            ctx.dec(&inv.expr1),
        ]);
        rows_json.push(json!({
            "j": fwd.j,
            "r": fwd.cuts,
            "mu_A": fwd.mu_a.to_string(),
            "forward": {
                "expr0": fwd.expr0.to_string(),
                "expr1": fwd.expr1.to_string(),
                "defect": fwd.union_defect.to_string(),
            },
            "inverse": {
                "expr0": inv.expr0.to_string(),
                "expr1": inv.expr1.to_string(),
                "defect": inv.union_defect.to_string(),
            },
        }));
        ctx.writer.say(&format!(
            "stage {}: forward (expr0, expr1) = ({}, {}); inverse = ({}, {})",
            fwd.j, fwd.expr0, fwd.expr1, inv.expr0, inv.expr1
        ));
    }
    ctx.writer.write_csv("asymmetry", &table)?;
    let prov = provenance(&ctx.tower, ctx.precision);
    let block = ctx.cfg.theorem3.as_ref().expect("checked");
    ctx.writer.write_json(
        "asymmetry",
        &json!({
            "command": "asymmetry",
            "provenance": prov,
            "settings": {"set": block.set, "stages": block.stages},
            "rows": rows_json,
        }),
    )?;
    Ok(0)
}

pub fn cmd_mixing(ctx: &mut Ctx) -> Result<i32, RunError> {
    let block = ctx
        .cfg
        .mixing
        .as_ref()
        .ok_or_else(|| RunError::Config("missing \"mixing\" block".into()))?;
    let a = ctx.cfg.resolve_set(&ctx.tower, &block.a)?;
    let b = ctx.cfg.resolve_set(&ctx.tower, &block.b)?;
    let ns = block
        .ns
        .iter()
        .map(|s| parse_int(s, "mixing.ns"))
        .collect::<Result<Vec<_>, _>>()?;
    let curve = dynamics::mixing_curve(&ctx.tower, &a, &b, &ns).map_err(core)?;
    let mut table = CsvTable::new(vec!["n", "value", "value_dec"]);
    let mut rows_json = Vec::new();
    for (n, v) in &curve {
        table.push(vec![n.to_string(), v.to_string(), ctx.dec(v)]);
        rows_json.push(json!({"n": n.to_string(), "value": v.to_string()}));
        ctx.writer
            .say(&format!("mu(T^{n} {} ∩ {}) = {}", block.a, block.b, v));
    }
    ctx.writer.write_csv("mixing", &table)?;
    let prov = provenance(&ctx.tower, ctx.precision);
    ctx.writer.write_json(
        "mixing",
        &json!({
            "command": "mixing",
            "provenance": prov,
            "settings": {"a": block.a, "b": block.b},
            "rows": rows_json,
        }),
    )?;
    Ok(0)
}

fn poisson_caps(ctx: &Ctx) -> Result<(PoissonCaps, u32), RunError> {
    let block = ctx
        .cfg
        .poisson
        .as_ref()
        .ok_or_else(|| RunError::Config("missing \"poisson\" block".into()))?;
    let mut caps = PoissonCaps::default();
    if let Some(v) = block.max_factors {
        caps.max_factors = v;
    }
    if let Some(v) = block.max_count {
        caps.max_count = v;
    }
    if let Some(v) = &block.rate_cap {
        caps.rate_cap = parse_rat(v, "poisson.rate_cap")?;
    }
    Ok((caps, block.precision.unwrap_or(50)))
}

fn resolve_cylinder(ctx: &Ctx, label: &str) -> Result<CylinderSpec, RunError> {
    let block = ctx.cfg.poisson.as_ref().expect("caller checked");
    let cyl = block
        .cylinders
        .iter()
        .find(|c| c.label == label)
        .ok_or_else(|| RunError::Config(format!("unknown cylinder label {label:?}")))?;
    let parts = cyl
        .parts
        .iter()
        .map(|p| Ok((ctx.cfg.resolve_set(&ctx.tower, &p.set)?, p.count)))
        .collect::<Result<Vec<_>, RunError>>()?;
    Ok(CylinderSpec::new(parts))
}

pub fn cmd_poisson_exact(ctx: &mut Ctx) -> Result<i32, RunError> {
    let (caps, sig) = poisson_caps(ctx)?;
    let block = ctx.cfg.poisson.as_ref().expect("checked");
    if block.cylinders.is_empty() && block.gap.is_none() {
        return Err(RunError::Config(
            "poisson block needs cylinders and/or a gap request".into(),
        ));
    }

    let mut cyl_table = CsvTable::new(vec!["label", "coeff", "rate", "value_dec"]);
    let mut cyl_json = Vec::new();
    for cyl in &block.cylinders {
        let spec = resolve_cylinder(ctx, &cyl.label)?;
        let v = poisson::cylinder_measure(&ctx.tower, &spec, &caps).map_err(core)?;
        cyl_table.push(vec![
            cyl.label.clone(),
            v.coeff.to_string(),
            v.rate.to_string(),
            v.render(sig),
        ]);
        cyl_json.push(json!({
            "label": cyl.label,
            "coeff": v.coeff.to_string(),
            "rate": v.rate.to_string(),
            "value_dec": v.render(sig),
        }));
        ctx.writer.say(&format!(
            "cylinder {}: {} * exp(-{}) = {}",
            cyl.label,
            v.coeff,
            v.rate,
            v.render(sig.min(16))
        ));
    }
    ctx.writer.write_csv("poisson_exact", &cyl_table)?;

    let mut gap_json = serde_json::Value::Null;
    if let Some(gap_cfg) = &block.gap {
        let c = resolve_cylinder(ctx, &gap_cfg.c)?;
        let c_prime = resolve_cylinder(ctx, &gap_cfg.c_prime)?;
        let n = parse_int(&gap_cfg.n, "poisson.gap.n")?;
        let g = poisson::mixing_gap(&ctx.tower, &c, &c_prime, &n, &caps, sig).map_err(core)?;
        let mut gap_table = CsvTable::new(vec![
            "n",
            "joint_coeff",
            "joint_rate",
            "joint_dec",
            "product_coeff",
            "product_rate",
            "product_dec",
            "gap_dec",
        ]);
        let gap_dec = hp::render_sig(&g.gap, sig);
        gap_table.push(vec![
            n.to_string(),
            g.joint.coeff.to_string(),
            g.joint.rate.to_string(),
            g.joint.render(sig),
            g.product.coeff.to_string(),
            g.product.rate.to_string(),
            g.product.render(sig),
            gap_dec.clone(),
        ]);
        ctx.writer.write_csv("poisson_gap", &gap_table)?;
        gap_json = json!({
            "n": n.to_string(),
            "joint": {"coeff": g.joint.coeff.to_string(), "rate": g.joint.rate.to_string()},
            "product": {"coeff": g.product.coeff.to_string(), "rate": g.product.rate.to_string()},
            "gap_dec": gap_dec,
        });
        ctx.writer.say(&format!(
            "mixing gap at n = {}: {}",
            n,
            hp::render_sig(&g.gap, sig.min(16))
        ));
    }

    let prov = provenance(&ctx.tower, ctx.precision);
    ctx.writer.write_json(
        "poisson_exact",
        &json!({
            "command": "poisson-exact",
            "provenance": prov,
            "settings": {
                "precision": sig,
                "max_factors": caps.max_factors,
                "max_count": caps.max_count,
            },
            "cylinders": cyl_json,
            "gap": gap_json,
        }),
    )?;
    Ok(0)
}

pub fn cmd_poisson_mc(ctx: &mut Ctx) -> Result<i32, RunError> {
    let (caps, sig) = poisson_caps(ctx)?;
    let block = ctx.cfg.poisson.as_ref().expect("checked");
    let mc = block
        .mc
        .as_ref()
        .ok_or_else(|| RunError::Config("missing \"poisson.mc\" block".into()))?;
    let factors = mc
        .factors
        .iter()
        .map(|f| {
            Ok(JointFactor {
                set: ctx.cfg.resolve_set(&ctx.tower, &f.set)?,
                shift: parse_int(&f.shift, "poisson.mc.factors.shift")?,
                count: f.count,
            })
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    let spec = JointSpec::new(factors);
    let seed = ctx.seed_override.or(mc.seed).unwrap_or(42);
    let workers = mc.workers.unwrap_or(1);

    let exact = poisson::joint_count_distribution(&ctx.tower, &spec, &caps)
        .map_err(core)?
        .probability(&spec.counts())
        .cloned()
        .expect("count vector inside the distribution grid");
    let exact_value = exact.eval(sig);
    let estimate = poisson::monte_carlo_joint(&ctx.tower, &spec, mc.samples, seed, workers, &caps)
        .map_err(core)?;
    let exact_dec = hp::render_sig(&exact_value, sig);
    let exact_f64 = {
        use num_traits::ToPrimitive;
        exact_value.to_f64().unwrap_or(f64::NAN)
    };
    let abs_error = (estimate.estimate - exact_f64).abs();
    let z = if estimate.std_error > 0.0 {
        abs_error / estimate.std_error
    } else {
        0.0
    };

    let mut table = CsvTable::new(vec![
        "samples",
        "seed",
        "workers",
        "successes",
        "estimate",
        "std_error",
        "exact_dec",
        "abs_error_dec",
        "z_score",
    ]);
    table.push(vec![
        estimate.samples.to_string(),
        estimate.seed.to_string(),
        estimate.workers.to_string(),
        estimate.successes.to_string(),
        format!("{}", estimate.estimate),
        format!("{}", estimate.std_error),
        exact_dec.clone(),
        format!("{abs_error:e}"),
        format!("{z:.3}"),
    ]);
    ctx.writer.write_csv("poisson_mc", &table)?;
    let prov = provenance(&ctx.tower, ctx.precision);
    ctx.writer.write_json(
        "poisson_mc",
        &json!({
            "command": "poisson-mc",
            "provenance": prov,
            "settings": {"samples": mc.samples, "seed": seed, "workers": workers, "precision": sig},
            "result": {
                "successes": estimate.successes,
                "estimate": estimate.estimate,
                "std_error": estimate.std_error,
                "exact_dec": exact_dec,
                "z_score": z,
            },
        }),
    )?;
    ctx.writer.say(&format!(
        "monte carlo: {} / {} successes, estimate {} (exact {}, z = {:.3})",
        estimate.successes, estimate.samples, estimate.estimate, exact_dec, z
    ));
    Ok(0)
}

pub fn cmd_oracle_check(ctx: &mut Ctx) -> Result<i32, RunError> {
    let defaults = EquivalenceOptions::default();
    let (random_sets, expr_cases, seed, use_params) = match &ctx.cfg.oracle_check {
        Some(b) => (
            b.random_sets.unwrap_or(defaults.random_sets),
            b.expr_cases_per_set.unwrap_or(defaults.expr_cases_per_set),
            ctx.seed_override.or(b.seed).unwrap_or(defaults.seed),
            b.use_params.unwrap_or(false),
        ),
        None => (
            defaults.random_sets,
            defaults.expr_cases_per_set,
            ctx.seed_override.unwrap_or(defaults.seed),
            false,
        ),
    };
    let opts = EquivalenceOptions {
        random_sets,
        expr_cases_per_set: expr_cases,
        seed,
        budget: ctx.budget_floors,
    };

    let param_sets: Vec<(String, sidonlab_core::ConstructionParams)> = if use_params {
        vec![("config".to_string(), ctx.cfg.construction_params()?)]
    } else {
        builtin_tiny_parameter_sets()
            .into_iter()
            .map(|(n, p)| (n.to_string(), p))
            .collect()
    };

    let mut table = CsvTable::new(vec![
        "param_set",
        "final_stage",
        "floors",
        "shift_comparisons",
        "expr_comparisons",
        "witness_comparisons",
        "refusal_checks",
        "mismatches",
        "status",
    ]);
    let mut rows_json = Vec::new();
    let mut all_passed = true;
    for (name, params) in &param_sets {
        let report = equivalence_battery(params, &opts).map_err(core)?;
        let status = if report.passed() { "pass" } else { "FAIL" };
        all_passed &= report.passed();
        table.push(vec![
            name.clone(),
            report.final_stage.to_string(),
            report.floor_count.to_string(),
            report.shift_comparisons.to_string(),
            report.expr_comparisons.to_string(),
            report.witness_comparisons.to_string(),
            report.refusal_checks.to_string(),
            report.mismatches.len().to_string(),
            status.to_string(),
        ]);
        rows_json.push(json!({
            "param_set": name,
            "final_stage": report.final_stage,
            "floors": report.floor_count,
            "shift_comparisons": report.shift_comparisons,
            "expr_comparisons": report.expr_comparisons,
            "witness_comparisons": report.witness_comparisons,
            "refusal_checks": report.refusal_checks,
            "mismatches": report.mismatches,
            "status": status,
        }));
        ctx.writer.say(&format!(
            "oracle check {name}: {} shift + {} expr + {} witness comparisons, {} mismatches",
            report.shift_comparisons,
            report.expr_comparisons,
            report.witness_comparisons,
            report.mismatches.len()
        ));
    }
    ctx.writer.write_csv("oracle_check", &table)?;
    let prov = provenance(&ctx.tower, ctx.precision);
    ctx.writer.write_json(
        "oracle_check",
        &json!({
            "command": "oracle-check",
            "provenance": prov,
            "settings": {
                "random_sets": random_sets,
                "expr_cases_per_set": expr_cases,
                "seed": seed,
                "budget_floors": ctx.budget_floors,
                "use_params": use_params,
            },
            "rows": rows_json,
        }),
    )?;
    Ok(if all_passed { 0 } else { 1 })
}

/// Validates that every set name referenced anywhere can be resolved;
/// used to fail fast with exit 2 before any files are written.
pub fn validate_set_references(cfg: &RunConfig) -> Result<(), RunError> {
    let mut names: Vec<&String> = Vec::new();
    if let Some(b) = &cfg.theorem3 {
        names.push(&b.set);
    }
    if let Some(b) = &cfg.mixing {
        names.push(&b.a);
        names.push(&b.b);
    }
    if let Some(b) = &cfg.poisson {
        for c in &b.cylinders {
            for p in &c.parts {
                names.push(&p.set);
            }
        }
        if let Some(mc) = &b.mc {
            for f in &mc.factors {
                names.push(&f.set);
            }
        }
    }
    for name in names {
        if !cfg.sets.contains_key(name) {
            return Err(RunError::Config(format!("unknown set name {name:?}")));
        }
    }
    // the definitions themselves must hold parseable integers
    for (name, def) in &cfg.sets {
        if let SetDef::Ranges { ranges, .. } = def {
            for (a, b) in ranges {
                parse_int(a, &format!("set {name:?} range start"))?;
                parse_int(b, &format!("set {name:?} range end"))?;
            }
        }
    }
    Ok(())
}
