//! The subcommands and the pipeline that chains them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Subcommand;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tcshift::bdg_lattice::{
    alpha_delta_deviation, key_identity_residual, klein_gap, loglog_slope, random, semiclassical_residual,
    trial_state_tc_witness, Lattice, LatticeSystem,
};
use tcshift::gl::{
    compute_dc, compute_gl_coefficients, minimize_gl_ray, predict_critical_temperature, GlCoefficients, GlEnergy,
    GlField, GlSpectralResult,
};
use tcshift::model::{validate, ModelConfig};
use tcshift::ti_bcs::{compute_pairing, default_tolerance, find_tc, PairingData};

use crate::cache::{Cache, Stage, Status};
use crate::config::LoadedConfig;
use crate::error::{CliError, CliResult};
use crate::report::{num, write_csv, ReportRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Check the model assumptions.
    Validate,
    /// Critical temperature of the translation-invariant problem.
    Tc,
    /// Pair wave function and its momentum profile.
    Pairing,
    /// Ginzburg-Landau coefficients.
    Coeffs,
    /// Shift coefficient D_c and its eigenvector.
    Dc,
    /// Predicted critical temperature Tc(1 - D_c h²).
    Predict,
    /// Semiclassical expansion of the free energy gain.
    VerifySemiclassics,
    /// Free energy identity on random instances.
    VerifyIdentity,
    /// Klein's inequality on random instances.
    VerifyKlein,
    /// Deviation of the pair density from its leading term.
    VerifyAlphaDelta,
    /// Trial-state witness of the critical temperature shift.
    VerifyWitness,
    /// Every stage in dependency order.
    Pipeline,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Validate => "validate",
            Self::Tc => "tc",
            Self::Pairing => "pairing",
            Self::Coeffs => "coeffs",
            Self::Dc => "dc",
            Self::Predict => "predict",
            Self::VerifySemiclassics => "verify-semiclassics",
            Self::VerifyIdentity => "verify-identity",
            Self::VerifyKlein => "verify-klein",
            Self::VerifyAlphaDelta => "verify-alpha-delta",
            Self::VerifyWitness => "verify-witness",
            Self::Pipeline => "pipeline",
        }
    }

    /// Stages run by `pipeline`, in order.
    pub const PIPELINE: [Command; 11] = [
        Self::Validate,
        Self::Tc,
        Self::Pairing,
        Self::Coeffs,
        Self::Dc,
        Self::Predict,
        Self::VerifySemiclassics,
        Self::VerifyIdentity,
        Self::VerifyKlein,
        Self::VerifyAlphaDelta,
        Self::VerifyWitness,
    ];
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub config: PathBuf,
    pub out: PathBuf,
    /// Overrides the config `seed`.
    pub seed: Option<u64>,
    /// Multiplies the default resolutions.
    pub grid_scale: f64,
}

/// Report of a run and the cache status of every stage it touched.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: ReportRecord,
    pub stages: BTreeMap<String, Status>,
}

pub fn run(command: Command, opts: &RunOptions) -> CliResult<Outcome> {
    if !(opts.grid_scale > 0.0 && opts.grid_scale.is_finite()) {
        return Err(CliError::Schema(format!("--grid-scale must be positive, got {}", opts.grid_scale)));
    }
    let cfg = LoadedConfig::from_path(&opts.config)?;
    std::fs::create_dir_all(&opts.out)?;
    let mut ctx = Ctx::new(cfg, opts)?;
    let report = ctx.dispatch(command)?;
    Ok(Outcome { report, stages: ctx.stages })
}

struct Ctx {
    cfg: LoadedConfig,
    model: ModelConfig,
    out: PathBuf,
    seed: u64,
    grid_scale: f64,
    cache: Cache,
    stages: BTreeMap<String, Status>,
    pairing: Option<PairingData>,
    coeffs: Option<GlCoefficients>,
    dc: Option<GlSpectralResult>,
    /// Set once a stage is recomputed, forcing its dependents to follow.
    recomputed: bool,
}

impl Ctx {
    fn new(cfg: LoadedConfig, opts: &RunOptions) -> CliResult<Self> {
        let model = cfg.run.model()?;
        let seed = opts.seed.unwrap_or(cfg.run.seed);
        let cache = Cache::new(&opts.out, &cfg.digest, opts.grid_scale);
        Ok(Self {
            cfg,
            model,
            out: opts.out.clone(),
            seed,
            grid_scale: opts.grid_scale,
            cache,
            stages: BTreeMap::new(),
            pairing: None,
            coeffs: None,
            dc: None,
            recomputed: false,
        })
    }

    fn dispatch(&mut self, command: Command) -> CliResult<ReportRecord> {
        if command == Command::Pipeline {
            return self.pipeline();
        }
        let mut rec = self.record(command);
        match command {
            Command::Validate => return self.validate(rec),
            _ => self.require_valid()?,
        }
        match command {
            Command::Tc => self.tc(&mut rec)?,
            Command::Pairing => self.pairing_cmd(&mut rec)?,
            Command::Coeffs => self.coeffs_cmd(&mut rec)?,
            Command::Dc => self.dc_cmd(&mut rec)?,
            Command::Predict => self.predict(&mut rec)?,
            Command::VerifySemiclassics => self.semiclassics(&mut rec)?,
            Command::VerifyIdentity => self.identity(&mut rec)?,
            Command::VerifyKlein => self.klein(&mut rec)?,
            Command::VerifyAlphaDelta => self.alpha_delta(&mut rec)?,
            Command::VerifyWitness => self.witness(&mut rec)?,
            Command::Validate | Command::Pipeline => unreachable!(),
        }
        rec.write(&self.out)?;
        Ok(rec)
    }

    fn record(&self, command: Command) -> ReportRecord {
        let run = &self.cfg.run;
        let mut rec = ReportRecord::new(command.name(), &self.cfg.digest);
        rec.input("dim", run.dim).input("mu", run.mu).input("h", run.h).input("seed", self.seed).input("grid_scale", self.grid_scale);
        rec
    }

    fn csv(&self, command: &str, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
        write_csv(&self.out.join(format!("{command}.csv")), header, rows)
    }

    fn validate(&self, mut rec: ReportRecord) -> CliResult<ReportRecord> {
        let report = rec.timed("validate", || validate(&self.model));
        rec.output("passed", report.passed()).output("failed", report.failed()).output("checks", &report.checks);
        rec.output("summability", &report.summability);
        rec.write(&self.out)?;
        if !report.passed() {
            return Err(CliError::Validation(report.failed().into_iter().map(String::from).collect()));
        }
        Ok(rec)
    }

    fn require_valid(&self) -> CliResult<()> {
        let report = validate(&self.model);
        if report.passed() {
            Ok(())
        } else {
            Err(CliError::Validation(report.failed().into_iter().map(String::from).collect()))
        }
    }

    fn mark(&mut self, stage: Stage, status: Status) {
        self.stages.insert(stage.name().into(), status);
        self.recomputed |= status == Status::Computed;
    }

    fn pairing(&mut self) -> CliResult<&PairingData> {
        if self.pairing.is_none() {
            let grid = self.cfg.run.position_grid(self.grid_scale)?;
            let model = &self.model;
            let (p, status) =
                self.cache.get_or_compute(Stage::Pairing, self.recomputed, || Ok(compute_pairing(model, &grid)?))?;
            self.mark(Stage::Pairing, status);
            self.pairing = Some(p);
        }
        Ok(self.pairing.as_ref().expect("set above"))
    }

    fn coeffs(&mut self) -> CliResult<&GlCoefficients> {
        if self.coeffs.is_none() {
            self.pairing()?;
            let p = self.pairing.as_ref().expect("loaded");
            let (c, status) =
                self.cache.get_or_compute(Stage::Coeffs, self.recomputed, || Ok(compute_gl_coefficients(p)?))?;
            self.mark(Stage::Coeffs, status);
            self.coeffs = Some(c);
        }
        Ok(self.coeffs.as_ref().expect("set above"))
    }

    fn dc(&mut self) -> CliResult<&GlSpectralResult> {
        if self.dc.is_none() {
            self.coeffs()?;
            let c = self.coeffs.as_ref().expect("loaded");
            let cutoff = self.cfg.run.gl_cutoff(self.grid_scale);
            let fields = &self.model.fields;
            let (s, status) = self.cache.get_or_compute(Stage::Dc, self.recomputed, || Ok(compute_dc(c, fields, cutoff)?))?;
            self.mark(Stage::Dc, status);
            self.dc = Some(s);
        }
        Ok(self.dc.as_ref().expect("set above"))
    }

    fn tc(&mut self, rec: &mut ReportRecord) -> CliResult<()> {
        let grid = self.cfg.run.position_grid(self.grid_scale)?;
        let tol = default_tolerance(self.model.mu);
        let s = rec.timed("tc", || find_tc(&self.model, &grid, tol))?;
        rec.input("position_grid", grid).input("tolerance", tol);
        rec.output("tc", s.tc).output("bracket", s.bracket).output("evaluations", s.evaluations);
        rec.output("lowest_at_zero", s.lowest_at_zero);
        rec.residual("bracket_width", s.bracket.1 - s.bracket.0);
        Ok(())
    }

    fn pairing_cmd(&mut self, rec: &mut ReportRecord) -> CliResult<()> {
        let p = self.pairing()?.clone();
        rec.input("position_grid", p.grid);
        rec.output("tc", p.tc).output("beta_c", p.beta_c).output("eigenvalue", p.eigenvalue);
        rec.output("simplicity_gap", p.simplicity_gap).output("momentum_cutoff", p.momentum_cutoff());
        rec.output("alpha_star", &p.alpha_star);
        rec.residual("residual_norm", p.residual_norm);
        let rows: Vec<Vec<String>> =
            p.t_star.iter().map(|&(q, t)| vec![num(q), num(t), num(p.profile.alpha_hat(q))]).collect();
        self.csv("pairing", &["p", "t_star", "alpha_hat"], &rows)
    }

    fn coeffs_cmd(&mut self, rec: &mut ReportRecord) -> CliResult<()> {
        let c = self.coeffs()?.clone();
        rec.output("lambda0", &c.lambda0).output("lambda1", c.lambda1).output("lambda2", c.lambda2);
        rec.output("lambda3", c.lambda3).output("beta_c", c.beta_c);
        rec.residual("quadrature_error_estimate", c.quadrature_error_estimate);
        Ok(())
    }

    fn dc_cmd(&mut self, rec: &mut ReportRecord) -> CliResult<()> {
        let s = self.dc()?.clone();
        let c = self.coeffs()?.clone();
        rec.input("gl_cutoff", s.basis_cutoff);
        rec.output("dc", s.dc).output("eigenvalue", s.eigenvalue).output("eigen_gap", s.eigen_gap);
        rec.output("psi_star", &s.psi_star).output("psi_star_l4_pow4", s.psi_star.l4_norm_pow4());
        rec.residual("residual_norm", s.residual_norm).residual("cutoff_change", s.cutoff_change);
        rec.residual("check_cutoff", s.check_cutoff);
        // energy along the ray θψ_* one unit above D_c
        let d = s.dc + 1.0;
        let ray = minimize_gl_ray(d, &c, &s)?;
        let energy = GlEnergy::new(&c, &self.model.fields, s.basis_cutoff, d)?;
        let points = 41;
        let rows: Vec<Vec<String>> = (0..points)
            .map(|i| {
                let theta = 2.0 * ray.theta * i as f64 / (points - 1) as f64;
                vec![num(theta), num(energy.value(&s.psi_star.scaled(theta).coeffs))]
            })
            .collect();
        rec.output("ray_scan_d", d);
        self.csv("dc", &["theta", "energy"], &rows)
    }

    fn predict(&mut self, rec: &mut ReportRecord) -> CliResult<()> {
        let tc = self.pairing()?.tc;
        let dc = self.dc()?.dc;
        let p = predict_critical_temperature(self.model.h, tc, dc, self.model.dim)?;
        rec.output("tc", p.tc).output("dc", p.dc).output("t_pred", p.t_pred);
        rec.output("lower_error_order", &p.lower_error_order).output("upper_error_order", &p.upper_error_order);
        Ok(())
    }

    fn probe(&self) -> CliResult<GlField> {
        let modes = self.cfg.run.probe_modes()?;
        let cutoff = modes.iter().flat_map(|(n, _)| n.iter().map(|c| c.unsigned_abs() as usize)).max().unwrap_or(0).max(1);
        Ok(GlField::from_modes(self.model.dim, cutoff, &modes)?)
    }

    /// Default lattice at scale `h`, with `N` multiplied by the grid scale.
    fn lattice(&mut self, h: f64, interaction: bool) -> CliResult<Lattice> {
        let (dim, mu) = (self.model.dim, self.model.mu);
        let p = self.pairing()?;
        Ok(Lattice::auto(h, dim, p.momentum_cutoff(), mu, p.tc, interaction)?.scaled(self.grid_scale)?)
    }

    fn beta(&mut self) -> CliResult<f64> {
        let beta = self.cfg.run.verify.beta;
        Ok(beta.unwrap_or(self.pairing()?.beta_c))
    }

    fn semiclassics(&mut self, rec: &mut ReportRecord) -> CliResult<()> {
        let psi = self.probe()?;
        let beta = self.beta()?;
        let hs = self.cfg.run.verify.semiclassics_h.clone();
        rec.input("h_values", &hs).input("beta", beta);
        let mut rows = Vec::new();
        let mut points = Vec::new();
        let mut max_change: f64 = 0.0;
        for &h in &hs {
            let lat = self.lattice(h, false)?;
            let finer = lat.refined(2)?;
            let p = self.pairing.as_ref().expect("loaded");
            let fields = &self.model.fields;
            let (r, fine) = rec.timed(&format!("h={h}"), || -> CliResult<_> {
                Ok((
                    semiclassical_residual(&psi, p, beta, fields, &lat)?,
                    semiclassical_residual(&psi, p, beta, fields, &finer)?,
                ))
            })?;
            let change = (fine.residual - r.residual).abs() / fine.residual.abs();
            max_change = max_change.max(change);
            points.push((h, r.residual.abs()));
            rows.push(vec![
                num(h),
                num(r.lhs),
                num(r.e1_term),
                num(r.e2_term),
                num(r.residual),
                num(r.residual.abs()),
                num(fine.residual),
                r.n.to_string(),
            ]);
        }
        let slope = fit_slope(&points);
        rec.output("slope", slope).output("slope_theory", 5.0).output("residuals", points_json(&points));
        rec.residual("max_refinement_change", max_change);
        self.csv(
            "verify-semiclassics",
            &["h", "lhs", "e1_term", "e2_term", "residual", "abs_residual", "refined_residual", "n"],
            &rows,
        )
    }

    fn identity(&mut self, rec: &mut ReportRecord) -> CliResult<()> {
        let v = self.cfg.run.verify.clone();
        let auto = self.lattice(v.identity_h, true)?;
        let lat = Lattice::new(v.identity_h, self.model.dim, auto.grid.n, 1)?;
        let p = self.pairing()?.clone();
        let t_of = |q: f64| p.t(q);
        let mut rng = random::rng(self.seed);
        let mut rows = Vec::new();
        let mut worst: f64 = 0.0;
        rec.input("identity_h", v.identity_h).input("n", lat.grid.n).input("instances", v.identity_instances);
        for k in 0..v.identity_instances {
            let a_scale = if k % 2 == 0 { 0.0 } else { 0.5 };
            let f = random::fields(&mut rng, self.model.dim, 2, 1.0, a_scale);
            let system = LatticeSystem::new(&self.model.with_fields(f), lat.clone())?;
            let t = random::uniform(&mut rng, 0.4 * p.tc, 1.6 * p.tc);
            let gaps = system.gap(&random::field(&mut rng, self.model.dim, 2, 1.0)?, &t_of)?;
            let tilde = system.table()?.divide(&system.delta_kernel(&gaps)?)?;
            // even instances use the Gibbs state of the same gap, odd ones of another
            let states = if k % 2 == 0 {
                system.gibbs(&gaps, 1.0 / t)?
            } else {
                let other = system.gap(&random::field(&mut rng, self.model.dim, 2, 1.5)?, &t_of)?;
                system.gibbs(&other, 1.0 / t)?
            };
            let r = key_identity_residual(&states, &gaps, &tilde, t, &system)?;
            worst = worst.max(r.residual);
            let kind = if k % 2 == 0 { "same_gap" } else { "other_gap" };
            rows.push(vec![k.to_string(), kind.into(), num(t), num(r.lhs), num(r.rhs), num(r.residual)]);
        }
        rec.output("max_residual", worst);
        rec.residual("max_relative_residual", worst);
        self.csv("verify-identity", &["instance", "state", "t", "lhs", "rhs", "residual"], &rows)
    }

    fn klein(&mut self, rec: &mut ReportRecord) -> CliResult<()> {
        let count = self.cfg.run.verify.klein_instances;
        let mut rng = random::rng(self.seed);
        let mut rows = Vec::new();
        let mut min_gap = f64::INFINITY;
        rec.input("instances", count);
        for k in 0..count {
            let n = 3 + k % 6;
            let h0 = random::block_diagonal(&mut rng, n, 0.5 + (k % 5) as f64);
            let gamma = random::density(&mut rng, 2 * n)?;
            let gap = klein_gap(&gamma, &h0)?;
            min_gap = min_gap.min(gap);
            rows.push(vec![k.to_string(), n.to_string(), num(gap)]);
        }
        rec.output("min_gap", min_gap);
        self.csv("verify-klein", &["instance", "n", "gap"], &rows)
    }

    fn alpha_delta(&mut self, rec: &mut ReportRecord) -> CliResult<()> {
        let psi = self.probe()?;
        let beta = self.beta()?;
        let hs = self.cfg.run.verify.alpha_delta_h.clone();
        rec.input("h_values", &hs).input("beta", beta);
        let mut rows = Vec::new();
        let mut points = Vec::new();
        for &h in &hs {
            let lat = self.lattice(h, false)?;
            let p = self.pairing.as_ref().expect("loaded");
            let r = rec.timed(&format!("h={h}"), || alpha_delta_deviation(&psi, p, beta, &self.model.fields, &lat))?;
            points.push((h, r.h1_norm_dev));
            rows.push(vec![num(h), num(r.h1_norm_dev), num(r.h1_norm_lead), r.n.to_string()]);
        }
        let slope = fit_slope(&points);
        let theory = 3.0 - self.model.dim as f64 / 2.0;
        rec.output("slope", slope).output("slope_theory", theory).output("deviations", points_json(&points));
        self.csv("verify-alpha-delta", &["h", "h1_norm_dev", "h1_norm_lead", "n"], &rows)
    }

    fn witness(&mut self, rec: &mut ReportRecord) -> CliResult<()> {
        let hs = self.cfg.run.verify.witness_h.clone();
        rec.input("h_values", &hs);
        self.dc()?;
        let mut rows = Vec::new();
        let mut errors = Vec::new();
        for &h in &hs {
            let lat = self.lattice(h, true)?;
            let (p, c, s) = (
                self.pairing.as_ref().expect("loaded"),
                self.coeffs.as_ref().expect("loaded"),
                self.dc.as_ref().expect("loaded"),
            );
            let model = &self.model;
            let w = rec.timed(&format!("h={h}"), || trial_state_tc_witness(p, c, s, model, lat))?;
            let err = (w.normalized_shift - s.dc).abs();
            errors.push(err);
            rows.push(vec![
                num(h),
                num(w.t_witness),
                num(w.normalized_shift),
                num(err),
                w.no_witness.to_string(),
                w.n.to_string(),
            ]);
        }
        let dc = self.dc.as_ref().expect("loaded").dc;
        let decreasing = errors.windows(2).all(|e| e[1] < e[0]);
        let bound = 0.15 * dc.abs() + 0.05;
        rec.output("dc", dc).output("errors", &errors).output("errors_decreasing", decreasing);
        rec.output("error_bound", bound).output("within_bound", errors.last().is_some_and(|&e| e <= bound));
        self.csv("verify-witness", &["h", "t_witness", "normalized_shift", "abs_error", "no_witness", "n"], &rows)
    }

    fn pipeline(&mut self) -> CliResult<ReportRecord> {
        let mut rec = self.record(Command::Pipeline);
        let mut outputs = serde_json::Map::new();
        for command in Command::PIPELINE {
            let start = std::time::Instant::now();
            let r = self.dispatch(command)?;
            rec.timings.insert(command.name().into(), start.elapsed().as_secs_f64());
            outputs.insert(command.name().into(), json!(r.outputs));
        }
        rec.output("stages", Value::Object(outputs));
        rec.write(&self.out)?;
        Ok(rec)
    }
}

fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    loglog_slope(points).ok()
}

fn points_json(points: &[(f64, f64)]) -> Value {
    Value::Array(points.iter().map(|&(h, y)| json!({ "h": h, "value": y })).collect())
}

/// Path of the JSON report of `command` under `out`.
pub fn report_path(out: &Path, command: Command) -> PathBuf {
    ReportRecord::json_path(out, command.name())
}
