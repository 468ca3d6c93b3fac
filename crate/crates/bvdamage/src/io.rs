//! Output formats and the batch commands behind the CLI.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{parse_pairs, RunConfig};
use crate::constitutive::Model;
use crate::discretization::State;
use crate::dissipation::{d_nu, Extended};
use crate::driver::{run_viscous, Trajectory};
use crate::error::{Error, Result};
use crate::gronwall::{self, AffineInstance, ClassicInstance, GronwallInstance, GronwallOutcome, ViscousInstance};
use crate::reparam::{
    bv_sweep, contact_potential, reparam_ed, reparam_standard, stability_check, ContactParams, ParamTrajectory, Regime,
    SweepReport,
};

pub const TRAJECTORY_COLUMNS: [&str; 20] = [
    "step",
    "t",
    "s_std",
    "s_ed",
    "E_mu",
    "N_value",
    "power",
    "balance_residual",
    "min_z",
    "dual_u",
    "dist_z",
    "dist_p",
    "dnu",
    "dstar",
    "norm_u_H1",
    "norm_p_L1",
    "norm_p_L2",
    "norm_e_L2",
    "iterations",
    "accepted",
];

/// Shortest round-trip rendering; stable across runs and platforms.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:e}")
    }
}

fn fmt_ext(x: Extended) -> String {
    match x {
        Extended::Finite(v) => fmt_f64(v),
        Extended::PlusInfinity => "inf".into(),
    }
}

/// Sorted `key = value` record.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary(pub BTreeMap<String, String>);

impl Summary {
    pub fn set(&mut self, k: impl Into<String>, v: impl Into<String>) {
        self.0.insert(k.into(), v.into());
    }

    pub fn num(&mut self, k: impl Into<String>, v: f64) {
        self.set(k, fmt_f64(v));
    }

    pub fn flag(&mut self, k: impl Into<String>, v: bool) {
        self.set(k, v.to_string());
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.0 {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn parse(text: &str) -> Result<Summary> {
        Ok(Summary(parse_pairs(text)?))
    }

    /// Boolean entries under `assert.`; all must be `true`.
    pub fn assertions_hold(&self) -> bool {
        self.0.iter().filter(|(k, _)| k.starts_with("assert.")).all(|(_, v)| v == "true")
    }
}

pub fn trajectory_csv(model: &Model, traj: &Trajectory, std: &ParamTrajectory, ed: &ParamTrajectory) -> String {
    let mut s = TRAJECTORY_COLUMNS.join(",");
    s.push('\n');
    let nu = traj.params.nu;
    for (k, r) in traj.records.iter().enumerate() {
        let dn = if k == 0 { 0.0 } else { d_nu(model, &traj.rate(model, k), nu) };
        let row = [
            k.to_string(),
            fmt_f64(r.t),
            fmt_f64(std.s[k]),
            fmt_f64(ed.s[k]),
            fmt_f64(r.energy),
            fmt_f64(r.n_value),
            fmt_f64(r.power),
            fmt_f64(r.balance_residual_cum),
            fmt_f64(r.min_z),
            fmt_f64(r.dual.dual_u),
            fmt_f64(r.dual.dist_z),
            fmt_f64(r.dual.dist_p),
            fmt_f64(dn),
            fmt_f64(r.dual.dstar_nu_mu),
            fmt_f64(r.norm_u_h1),
            fmt_f64(r.norm_p_l1),
            fmt_f64(r.norm_p_l2),
            fmt_f64(r.norm_e_l2),
            r.iterations.to_string(),
            (r.accepted as u8).to_string(),
        ];
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Totals and pass/fail assertions of one viscous run.
pub fn solve_summary(cfg: &RunConfig, model: &Model, traj: &Trajectory, std: &ParamTrajectory, ed: &ParamTrajectory) -> Summary {
    let p = &traj.params;
    let last = traj.records.last().expect("initial record");
    let scale = model.scale();
    let mut s = Summary::default();
    s.num("params.eps", p.eps);
    s.num("params.nu", p.nu);
    s.num("params.mu", p.mu);
    s.num("params.tau", p.tau);
    s.num("params.T", p.horizon);
    s.set("params.n_steps", traj.n_steps().to_string());
    s.set("grid.n", model.grid.n.to_string());
    s.num("total.energy_initial", traj.records[0].energy);
    s.num("total.energy_final", last.energy);
    s.num("total.work", last.work_cum);
    s.num("total.dissipation", last.dissipation_cum);
    s.num("total.balance_residual", last.balance_residual_cum);
    s.num("total.balance_defect", last.balance_defect);
    s.num("total.enhanced_estimate", traj.enhanced_estimate());
    s.num("total.length_std", std.total_length());
    s.num("total.length_ed", ed.total_length());
    s.num("total.min_z", traj.records.iter().map(|r| r.min_z).fold(f64::INFINITY, f64::min));
    s.set("total.iterations", traj.records.iter().map(|r| r.iterations).sum::<usize>().to_string());
    s.set("total.warnings", traj.warnings.len().to_string());
    let steps = &traj.records[1..];
    let max_el = steps.iter().map(|r| r.el.max()).fold(0.0, f64::max);
    let min_slack = steps.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min);
    let identity = steps.iter().map(|r| (r.dual.dstar_nu_mu - p.eps * r.dual.d_nu).abs()).fold(0.0, f64::max);
    let norm_dev = std.normalization.iter().chain(&ed.normalization).skip(1).map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    let monotone = traj.states.windows(2).all(|w| w[1].z.iter().zip(&w[0].z).all(|(a, b)| a <= b));
    s.num("check.max_el_residual", max_el);
    s.num("check.min_slack", if steps.is_empty() { 0.0 } else { min_slack });
    s.num("check.max_identity_gap", identity);
    s.num("check.max_normalization_dev", norm_dev);
    s.flag("assert.all_accepted", traj.records.iter().all(|r| r.accepted));
    s.flag("assert.el_converged", max_el <= cfg.tol_stat * scale);
    s.flag("assert.slack_nonnegative", steps.is_empty() || min_slack >= -1e-9);
    s.flag("assert.solution_identity", identity <= 10.0 * (cfg.tol_stat + p.tau) * scale);
    s.flag("assert.z_nonincreasing", monotone);
    s.flag("assert.normalized", norm_dev <= 1e-8);
    s
}

/// Per-knot reparameterized data with the contact potential of `regime`.
pub fn reparam_csv(model: &Model, pt: &ParamTrajectory, regime: Regime, cp: &ContactParams, cfg: &RunConfig) -> Result<String> {
    let stab = stability_check(pt, regime, cp.tol_zero, cp.tol_jump);
    let mut s = String::from(
        "knot,s,t,t_rate,norm_u_rate,norm_z_rate,norm_p_rate,dual_u,dist_z,dist_p,dstar_nu_mu,dstar_mu,dstar0,magnitude,in_jump,stable,contact,normalization\n",
    );
    for k in 0..pt.len() {
        let r = &pt.rates[k];
        let d = &pt.diag[k];
        let contact = if k == 0 {
            "nan".to_string()
        } else if regime == Regime::Visc && pt.t_rate[k] <= 0.0 {
            "inf".to_string()
        } else {
            fmt_ext(contact_potential(model, regime, pt.t[k], &pt.states[k], pt.t_rate[k], r, cp, cfg.dist_z_convention)?)
        };
        let row = [
            k.to_string(),
            fmt_f64(pt.s[k]),
            fmt_f64(pt.t[k]),
            fmt_f64(pt.t_rate[k]),
            fmt_f64(model.norm_kd(&r.u)),
            fmt_f64(model.norm_hm(&r.z)),
            fmt_f64(model.norm_l2(&r.p)),
            fmt_f64(d.dual_u),
            fmt_f64(d.dist_z),
            fmt_f64(d.dist_p),
            fmt_f64(d.dstar_nu_mu),
            fmt_f64(d.dstar_mu),
            fmt_f64(d.dstar0),
            fmt_f64(stab[k].magnitude),
            (stab[k].in_jump as u8).to_string(),
            (stab[k].stable as u8).to_string(),
            contact,
            fmt_f64(pt.normalization[k]),
        ];
        s.push_str(&row.join(","));
        s.push('\n');
    }
    Ok(s)
}

fn write(dir: &Path, name: &str, content: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    fs::create_dir_all(dir)?;
    let p = dir.join(name);
    fs::write(&p, content)?;
    files.push(p);
    Ok(())
}

/// Result of a batch command: whether its assertions held, and what it wrote.
#[derive(Debug, Clone, Default)]
pub struct CmdOutcome {
    pub ok: bool,
    pub files: Vec<PathBuf>,
    pub message: String,
}

/// Viscous run of `cfg` on an assembled `model`, with both reparameterizations.
pub fn solve_on(model: &Model, cfg: &RunConfig) -> Result<(Trajectory, ParamTrajectory, ParamTrajectory)> {
    let traj = run_viscous(model, &cfg.energy_params(), &State::initial(&model.grid), &cfg.driver_options())?;
    let std = reparam_standard(model, &traj)?;
    let ed = reparam_ed(model, &traj, cfg.ed_dnu_args)?;
    Ok((traj, std, ed))
}

fn solve_run(cfg: &RunConfig) -> Result<(Model, Trajectory, ParamTrajectory, ParamTrajectory)> {
    let model = cfg.build_model()?;
    let (traj, std, ed) = solve_on(&model, cfg)?;
    Ok((model, traj, std, ed))
}

/// Viscous run: `trajectory.csv` and `summary.txt` in `out`.
pub fn cmd_solve(cfg: &RunConfig, out: &Path) -> Result<CmdOutcome> {
    let (model, traj, std, ed) = solve_run(cfg)?;
    let summary = solve_summary(cfg, &model, &traj, &std, &ed);
    let mut files = Vec::new();
    write(out, "trajectory.csv", &trajectory_csv(&model, &traj, &std, &ed), &mut files)?;
    write(out, "summary.txt", &summary.render(), &mut files)?;
    let ok = summary.assertions_hold();
    Ok(CmdOutcome { ok, files, message: format!("solve: {} steps, assertions {}", traj.n_steps(), if ok { "hold" } else { "FAIL" }) })
}

/// Viscous run plus the per-knot reparameterized data for `cfg.regime`.
pub fn cmd_reparam(cfg: &RunConfig, out: &Path) -> Result<CmdOutcome> {
    let (model, traj, std, ed) = solve_run(cfg)?;
    let cp = ContactParams {
        eps: cfg.eps,
        nu: cfg.nu,
        mu: cfg.mu,
        tol_jump: cfg.tol_jump,
        tol_zero: cfg.tol_stab_factor * cfg.eps,
    };
    let pt = match cfg.regime.arclength() {
        crate::reparam::ArcLength::Standard => &std,
        crate::reparam::ArcLength::EnergyDissipation => &ed,
    };
    let mut files = Vec::new();
    write(out, "reparam_std.csv", &reparam_csv(&model, &std, cfg.regime, &cp, cfg)?, &mut files)?;
    write(out, "reparam_ed.csv", &reparam_csv(&model, &ed, cfg.regime, &cp, cfg)?, &mut files)?;
    let mut summary = solve_summary(cfg, &model, &traj, &std, &ed);
    summary.set("reparam.regime", cfg.regime.name());
    summary.set("reparam.jumps", crate::reparam::detect_jumps(pt, cfg.tol_jump).len().to_string());
    write(out, "summary.txt", &summary.render(), &mut files)?;
    let ok = summary.assertions_hold();
    Ok(CmdOutcome { ok, files, message: format!("reparam: {} knots, assertions {}", pt.len(), if ok { "hold" } else { "FAIL" }) })
}

pub fn sweep_summary(rep: &SweepReport) -> Summary {
    let mut s = Summary::default();
    s.set("regime", rep.regime.name());
    s.set("levels", rep.levels.len().to_string());
    for (i, l) in rep.levels.iter().enumerate() {
        let key = |k: &str| format!("level.{i}.{k}");
        s.num(key("eps"), l.level.eps);
        s.num(key("nu"), l.level.nu);
        s.num(key("mu"), l.level.mu);
        s.num(key("balance_residual"), l.balance_residual);
        s.num(key("max_nonjump_magnitude"), l.max_nonjump_magnitude);
        s.num(key("max_nonjump_dstar"), l.max_nonjump_dstar);
        s.num(key("tol_stab"), l.tol_stab);
        s.flag(key("all_stable"), l.all_stable);
        s.set(key("jumps"), l.jumps.len().to_string());
        let spans: Vec<String> = l.jumps.iter().map(|j| format!("[{}:{}]", fmt_f64(j.s_start), fmt_f64(j.s_end))).collect();
        s.set(key("jump_spans"), spans.join(" "));
        s.set(key("contact_integral"), fmt_ext(l.contact_integral));
        s.num(key("ed_residual"), l.ed_residual);
        s.num(key("total_length"), l.total_length);
        s.num(key("min_z"), l.min_z);
        s.num(key("enhanced_estimate"), l.enhanced_estimate);
        s.num(key("max_normalization_dev"), l.max_normalization_dev);
        s.num(key("max_switch_violation"), l.max_switch_violation);
    }
    s.set("distances", rep.distances.iter().map(|d| fmt_f64(*d)).collect::<Vec<_>>().join(", "));
    s.set("z_distances", rep.z_distances.iter().map(|d| fmt_f64(*d)).collect::<Vec<_>>().join(", "));
    let mono = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    let mags: Vec<f64> = rep.levels.iter().map(|l| l.max_nonjump_magnitude).collect();
    let eds: Vec<f64> = rep.levels.iter().map(|l| l.ed_residual).collect();
    s.flag("trend.distances_decreasing", mono(&rep.distances));
    s.flag("trend.magnitude_decreasing", mono(&mags));
    s.flag("trend.ed_residual_decreasing", mono(&eds));
    s
}

/// Ladder sweep: `sweep.txt` plus `level_i/{trajectory.csv,summary.txt,reparam.csv}`.
pub fn cmd_sweep(cfg: &RunConfig, out: &Path, level_parallelism: usize) -> Result<CmdOutcome> {
    let model = cfg.build_model()?;
    let prob = cfg.sweep_problem(&model)?;
    let rep = bv_sweep(&prob, level_parallelism)?;
    let mut files = Vec::new();
    for (i, (traj, lvl)) in rep.trajectories.iter().zip(&rep.levels).enumerate() {
        let level_cfg = RunConfig { eps: lvl.level.eps, nu: lvl.level.nu, mu: lvl.level.mu, ..cfg.clone() };
        let std = reparam_standard(&model, traj)?;
        let ed = reparam_ed(&model, traj, cfg.ed_dnu_args)?;
        let dir = out.join(format!("level_{i}"));
        write(&dir, "trajectory.csv", &trajectory_csv(&model, traj, &std, &ed), &mut files)?;
        write(&dir, "summary.txt", &solve_summary(&level_cfg, &model, traj, &std, &ed).render(), &mut files)?;
        let cp = ContactParams { eps: lvl.level.eps, nu: lvl.level.nu, mu: lvl.level.mu, tol_jump: cfg.tol_jump, tol_zero: lvl.tol_stab };
        write(&dir, "reparam.csv", &reparam_csv(&model, &rep.param_trajectories[i], cfg.regime, &cp, cfg)?, &mut files)?;
    }
    let summary = sweep_summary(&rep);
    write(out, "sweep.txt", &summary.render(), &mut files)?;
    Ok(CmdOutcome {
        ok: true,
        files,
        message: format!("sweep {}: {} levels, distances {}", rep.regime.name(), rep.levels.len(), summary.0["distances"]),
    })
}

fn field<'a>(m: &'a BTreeMap<String, String>, key: &str) -> Result<&'a str> {
    m.get(key).map(|s| s.as_str()).ok_or_else(|| Error::Config { key: key.into(), msg: "missing".into() })
}

fn num(m: &BTreeMap<String, String>, key: &str) -> Result<f64> {
    let v = field(m, key)?;
    v.parse().map_err(|_| Error::Config { key: key.into(), msg: format!("`{v}` is not a number") })
}

fn seq(m: &BTreeMap<String, String>, key: &str) -> Result<Vec<f64>> {
    let v = field(m, key)?;
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',')
        .map(|x| x.trim().parse().map_err(|_| Error::Config { key: key.into(), msg: format!("`{x}` is not a number") }))
        .collect()
}

fn check_keys(m: &BTreeMap<String, String>, allowed: &[&str]) -> Result<()> {
    for k in m.keys() {
        if k != "lemma" && !allowed.contains(&k.as_str()) {
            return Err(Error::Config { key: k.clone(), msg: "unknown key".into() });
        }
    }
    Ok(())
}

/// Instances separated by blank lines, each a block of `key = value` lines with `lemma`.
pub fn parse_gronwall_data(text: &str) -> Result<Vec<GronwallInstance>> {
    let mut blocks = vec![String::new()];
    for line in text.lines() {
        if line.trim().is_empty() {
            blocks.push(String::new());
        } else {
            let b = blocks.last_mut().expect("nonempty");
            b.push_str(line);
            b.push('\n');
        }
    }
    let mut out = Vec::new();
    for b in blocks {
        let m = parse_pairs(&b)?;
        if m.is_empty() {
            continue;
        }
        let inst = match field(&m, "lemma")? {
            "classic" => {
                check_keys(&m, &["a", "b", "big_b"])?;
                GronwallInstance::Classic(ClassicInstance { a: seq(&m, "a")?, b: seq(&m, "b")?, big_b: num(&m, "big_b")? })
            }
            "affine" => {
                check_keys(&m, &["a", "b", "lambda", "big_lambda"])?;
                GronwallInstance::Affine(AffineInstance {
                    a: seq(&m, "a")?,
                    b: num(&m, "b")?,
                    lambda: num(&m, "lambda")?,
                    big_lambda: num(&m, "big_lambda")?,
                })
            }
            "viscous" => {
                check_keys(&m, &["a", "m", "r", "c", "rho", "eta", "kappa1", "kappa2", "tau", "eps"])?;
                GronwallInstance::Viscous(ViscousInstance {
                    a: seq(&m, "a")?,
                    m: seq(&m, "m")?,
                    r: seq(&m, "r")?,
                    c: seq(&m, "c")?,
                    rho: num(&m, "rho")?,
                    eta: num(&m, "eta")?,
                    kappa1: num(&m, "kappa1")?,
                    kappa2: num(&m, "kappa2")?,
                    tau: num(&m, "tau")?,
                    eps: num(&m, "eps")?,
                })
            }
            other => return Err(Error::Config { key: "lemma".into(), msg: format!("unknown lemma `{other}`") }),
        };
        out.push(inst);
    }
    Ok(out)
}

fn lemma_name(inst: &GronwallInstance) -> &'static str {
    match inst {
        GronwallInstance::Classic(_) => "classic",
        GronwallInstance::Affine(_) => "affine",
        GronwallInstance::Viscous(_) => "viscous",
    }
}

fn outcome_entries(s: &mut Summary, prefix: &str, o: &GronwallOutcome) {
    s.flag(format!("{prefix}.hypotheses_ok"), o.hypotheses_ok);
    s.flag(format!("{prefix}.holds"), o.holds);
    s.num(format!("{prefix}.slack"), o.slack);
    s.set(format!("{prefix}.violations"), o.violations.join("; "));
}

/// Checks instances from `data`, or the seeded random suite plus saturating recursions.
pub fn cmd_check_gronwall(data: Option<&Path>, seed: u64, trials: usize, out: &Path) -> Result<CmdOutcome> {
    let mut s = Summary::default();
    let mut ok = true;
    match data {
        Some(path) => {
            let insts = parse_gronwall_data(&fs::read_to_string(path)?)?;
            s.set("instances", insts.len().to_string());
            for (i, inst) in insts.iter().enumerate() {
                let o = gronwall::check(inst)?;
                let prefix = format!("instance.{i}");
                s.set(format!("{prefix}.lemma"), lemma_name(inst));
                outcome_entries(&mut s, &prefix, &o);
                ok &= !o.hypotheses_ok || o.holds;
            }
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let counts = gronwall::random_suite(&mut rng, trials)?;
            s.set("seed", seed.to_string());
            for (name, c) in ["classic", "affine", "viscous"].iter().zip(counts.iter()) {
                s.set(format!("random.{name}.trials"), c.trials.to_string());
                s.set(format!("random.{name}.admissible"), c.admissible.to_string());
                s.set(format!("random.{name}.held"), c.held.to_string());
                ok &= c.held == c.admissible && c.admissible > 0;
            }
            let sat = [
                GronwallInstance::Classic(gronwall::saturating_classic(1.0, &[0.5, 0.25, 1.0, 0.1, 0.3])),
                GronwallInstance::Affine(gronwall::saturating_affine(10, 0.1, 2.0, 0.7)),
                GronwallInstance::Viscous(gronwall::saturating_viscous(20, 1.0, 1.0, 2.0, 0.04, 0.2)),
            ];
            for inst in &sat {
                let o = gronwall::check(inst)?;
                outcome_entries(&mut s, &format!("saturating.{}", lemma_name(inst)), &o);
                ok &= o.hypotheses_ok && o.holds;
            }
        }
    }
    s.flag("assert.all_hold", ok);
    let mut files = Vec::new();
    write(out, "gronwall.txt", &s.render(), &mut files)?;
    Ok(CmdOutcome { ok, files, message: format!("check-gronwall: {}", if ok { "all hold" } else { "FAIL" }) })
}

/// Structured error record written on failure.
pub fn error_record(command: &str, e: &Error) -> String {
    let kind = match e {
        Error::InvalidGrid(_) => "invalid_grid",
        Error::InvalidParam { .. } => "invalid_param",
        Error::TimeOutOfRange { .. } => "time_out_of_range",
        Error::DamageNonPositive { .. } => "damage_non_positive",
        Error::NegativeDamage(_) => "negative_damage",
        Error::TraceViolation(_) => "trace_violation",
        Error::Factorization(_) => "factorization",
        Error::StepRejected { .. } => "step_rejected",
        Error::Regime(_) => "regime",
        Error::Config { .. } => "config",
        Error::LengthMismatch(_) => "length_mismatch",
        Error::Io(_) => "io",
    };
    let mut s = Summary::default();
    s.set("error.command", command);
    s.set("error.kind", kind);
    if let Error::Config { key, .. } = e {
        s.set("error.key", key.clone());
    }
    s.set("error.message", e.to_string().replace('\n', " "));
    s.render()
}

/// Runs every brute-force oracle suite on instances drawn from `seed`.
pub fn cmd_selftest(seed: u64, out: Option<&Path>) -> Result<CmdOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reports = crate::oracles::selftest(&mut rng)?;
    let mut s = Summary::default();
    s.set("seed", seed.to_string());
    let mut lines = Vec::new();
    for r in &reports {
        s.set(format!("{}.trials", r.name), r.trials.to_string());
        s.num(format!("{}.max_error", r.name), r.max_error);
        s.num(format!("{}.tol", r.name), r.tol);
        s.flag(format!("assert.{}", r.name), r.passed());
        lines.push(format!("{} {} (max error {:.3e}, tol {:.0e})", if r.passed() { "PASS" } else { "FAIL" }, r.name, r.max_error, r.tol));
    }
    let mut files = Vec::new();
    if let Some(dir) = out {
        write(dir, "selftest.txt", &s.render(), &mut files)?;
    }
    Ok(CmdOutcome { ok: s.assertions_hold(), files, message: lines.join("\n") })
}
