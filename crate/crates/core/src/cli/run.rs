//! Experiment drivers behind the `cens` binary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::classical::{
    evaluate_actions, gauge_fix_hamilton_with, integrate_hamilton, maupertuis_shoot_with,
    reparametrization_invariance_check_with, ExtendedPhasePoint, ShootingOptions, Trajectory,
};
use crate::ensembles::{full_report, max_offdiagonal_block, EnsembleReport};
use crate::error::Error;
use crate::linalg::{eig_hermitian, max_abs_diff};
use crate::models::{build_quantum, ClassicalModelSpec, ClassicalSystem, QuantumModelSpec};
use crate::projector::{build_constraint, projector_quadrature, projector_spectral, to_clock_basis, DeltaRegularization};

use super::config::{parse_model, ConfigError, Experiment, OutputFormat, RunConfig};

/// Failure of a run, split by exit status.
#[derive(Debug)]
pub enum RunError {
    /// Exit status 2.
    Config(ConfigError),
    /// Exit status 1.
    Module { error: Error, operation: &'static str },
    /// Exit status 1.
    Io { path: PathBuf, message: String },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Module { .. } | RunError::Io { .. } => 1,
        }
    }

    /// Machine-readable record printed on stderr.
    pub fn record(&self) -> Value {
        match self {
            RunError::Config(c) => json!({
                "error": "ConfigInvalid",
                "module": "cli",
                "operation": "parse_config",
                "pointer": c.pointer,
                "message": c.message,
            }),
            RunError::Module { error, operation } => json!({
                "error": error.kind(),
                "module": error.module(),
                "operation": operation,
                "message": error.to_string(),
            }),
            RunError::Io { path, message } => json!({
                "error": "IoError",
                "module": "cli",
                "operation": "write_output",
                "path": path.display().to_string(),
                "message": message,
            }),
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(c: ConfigError) -> Self {
        RunError::Config(c)
    }
}

trait Context<T> {
    fn op(self, operation: &'static str) -> Result<T, RunError>;
}

impl<T> Context<T> for crate::error::Result<T> {
    fn op(self, operation: &'static str) -> Result<T, RunError> {
        self.map_err(|error| RunError::Module { error, operation })
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output: Option<String>,
    pub format: Option<OutputFormat>,
    pub seed: Option<u64>,
}

/// Files produced by a run plus a short summary for stdout.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub files: Vec<(PathBuf, String)>,
    pub summary: Value,
}

impl RunOutput {
    pub fn write(&self) -> Result<Vec<PathBuf>, RunError> {
        let mut written = Vec::new();
        for (path, contents) in &self.files {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| RunError::Io {
                    path: dir.to_path_buf(),
                    message: e.to_string(),
                })?;
            }
            std::fs::write(path, contents).map_err(|e| RunError::Io {
                path: path.clone(),
                message: e.to_string(),
            })?;
            written.push(path.clone());
        }
        Ok(written)
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(num).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// `beta, z_kernel, z_direct, rel_err`.
pub fn canonical_csv(report: &EnsembleReport) -> String {
    let err = report.z_rel_errors();
    csv_table(
        &["beta", "z_kernel", "z_direct", "rel_err"],
        (0..report.beta_grid.len()).map(|i| {
            vec![report.beta_grid[i], report.z_kernel[i], report.z_direct[i], err[i]]
        }),
    )
}

/// `energy, omega_kernel, omega_direct, abs_err`.
pub fn microcanonical_csv(report: &EnsembleReport) -> String {
    let err = report.omega_abs_errors();
    csv_table(
        &["energy", "omega_kernel", "omega_direct", "abs_err"],
        (0..report.energy_grid.len()).map(|i| {
            vec![report.energy_grid[i], report.omega_kernel[i], report.omega_direct[i], err[i]]
        }),
    )
}

/// `sigma, q0..qD-1, p0..pD-1, t, pi_t, H_value`.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let d = traj.initial().q.len();
    let mut header = String::from("sigma");
    for i in 0..d {
        let _ = write!(header, ",q{i}");
    }
    for i in 0..d {
        let _ = write!(header, ",p{i}");
    }
    header.push_str(",t,pi_t,H_value");
    let mut out = header;
    out.push('\n');
    for ((s, x), h) in traj.sigma_values.iter().zip(&traj.states).zip(&traj.h_values) {
        let mut cells = vec![num(*s)];
        cells.extend(x.q.iter().map(|v| num(*v)));
        cells.extend(x.p.iter().map(|v| num(*v)));
        cells.extend([num(x.t), num(x.pi_t), num(*h)]);
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn pretty(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

struct Plan<'a> {
    experiment: Experiment,
    config: &'a RunConfig,
    prefix: String,
    format: OutputFormat,
    seed: u64,
}

impl Plan<'_> {
    fn path(&self, suffix: &str, ext: &str) -> PathBuf {
        PathBuf::from(format!("{}{suffix}.{ext}", self.prefix))
    }

    fn resolved_config(&self) -> Value {
        let mut c = self.config.clone();
        c.experiment = Some(self.experiment);
        c.output = Some(self.prefix.clone());
        c.format = self.format;
        c.seed = self.seed;
        serde_json::to_value(c).expect("serializable")
    }

    fn model_value(&self) -> Result<&Value, RunError> {
        self.config.model.as_ref().ok_or_else(|| {
            RunError::Config(ConfigError {
                pointer: "/model".into(),
                message: format!("experiment {} needs a model", self.experiment.name()),
            })
        })
    }

    fn quantum_model(&self) -> Result<QuantumModelSpec, RunError> {
        let spec: QuantumModelSpec = match (&self.config.model, self.experiment) {
            (None, Experiment::ProjectorXcheck) => QuantumModelSpec::RandomHermitian {
                n: 2,
                seed: None,
                scale: 0.25,
            },
            _ => parse_model(self.model_value()?)?,
        };
        let spec = spec.with_default_seed(self.seed);
        spec.validate().op("build_quantum")?;
        Ok(spec)
    }

    fn classical_model(&self) -> Result<(ClassicalModelSpec, ClassicalSystem), RunError> {
        let spec: ClassicalModelSpec = parse_model(self.model_value()?)?;
        let sys = ClassicalSystem::from_spec(&spec).op("build_classical")?;
        Ok((spec, sys))
    }

    fn span(&self) -> (f64, f64) {
        let s = self.config.grids.sigma_span;
        (s[0], s[1])
    }

    /// Emits `tables` as CSV plus a JSON sidecar, or everything as one JSON document.
    fn finish(&self, tables: Vec<(&str, String)>, data: Value, summary: Value) -> RunOutput {
        let document = json!({
            "experiment": self.experiment.name(),
            "config": self.resolved_config(),
            "results": data,
        });
        let mut files = Vec::new();
        match self.format {
            OutputFormat::Csv => {
                for (suffix, text) in tables {
                    files.push((self.path(suffix, "csv"), text));
                }
                files.push((self.path("", "json"), pretty(&document)));
            }
            OutputFormat::Json => files.push((self.path("", "json"), pretty(&document))),
        }
        RunOutput { files, summary }
    }
}

/// Runs one experiment and returns the files to write; nothing touches the disk.
pub fn run(config: &RunConfig, experiment: Experiment, overrides: &Overrides) -> Result<RunOutput, RunError> {
    if let Some(e) = config.experiment {
        if e != experiment {
            return Err(RunError::Config(ConfigError {
                pointer: "/experiment".into(),
                message: format!(
                    "config names experiment {} but {} was requested",
                    e.name(),
                    experiment.name()
                ),
            }));
        }
    }
    let plan = Plan {
        experiment,
        config,
        prefix: overrides
            .output
            .clone()
            .or_else(|| config.output.clone())
            .unwrap_or_else(|| format!("cens_{}", experiment.name())),
        format: overrides.format.unwrap_or(config.format),
        seed: overrides.seed.unwrap_or(config.seed),
    };
    match experiment {
        Experiment::Canonical | Experiment::Microcanonical | Experiment::Compare => run_ensembles(&plan),
        Experiment::ClassicalHamilton => run_hamilton(&plan),
        Experiment::ClassicalMaupertuis => run_maupertuis(&plan),
        Experiment::ReparCheck => run_repar(&plan),
        Experiment::ProjectorXcheck => run_xcheck(&plan),
    }
}

fn run_ensembles(plan: &Plan) -> Result<RunOutput, RunError> {
    let spec = plan.quantum_model()?;
    let c = plan.config;
    let betas = c.grids.beta.values();
    let report = full_report(&spec, &c.clock, &c.regularization, &betas, &c.grids.energy).op("full_report")?;
    let tables = match plan.experiment {
        Experiment::Canonical => vec![("", canonical_csv(&report))],
        Experiment::Microcanonical => vec![("", microcanonical_csv(&report))],
        _ => vec![
            ("_canonical", canonical_csv(&report)),
            ("_microcanonical", microcanonical_csv(&report)),
        ],
    };
    let summary = json!({
        "experiment": plan.experiment.name(),
        "max_rel_error_Z": report.max_rel_error_z,
        "max_abs_error_omega": report.max_abs_error_omega,
        "sigma_used": report.sigma_used,
        "clock": report.clock,
    });
    let data = serde_json::to_value(&report).expect("serializable");
    Ok(plan.finish(tables, data, summary))
}

fn run_hamilton(plan: &Plan) -> Result<RunOutput, RunError> {
    let (_, sys) = plan.classical_model()?;
    let d = &plan.config.dynamics;
    let n = plan.config.grids.n_steps;
    let span = plan.span();
    let traj = gauge_fix_hamilton_with(&sys, &d.q0, &d.p0, span, n, d.scheme).op("gauge_fix_hamilton")?;
    let direct = integrate_hamilton(&sys, &d.q0, &d.p0, span, n, d.scheme).op("integrate_hamilton")?;
    let mut gauge_gap = 0.0f64;
    for (x, (q, p)) in traj.states.iter().zip(direct.q.iter().zip(&direct.p)) {
        for (a, b) in x.q.iter().zip(q).chain(x.p.iter().zip(p)) {
            gauge_gap = gauge_gap.max((a - b).abs());
        }
    }
    let actions = evaluate_actions(&traj, &sys, None).op("evaluate_actions")?;
    let h0 = traj.h_values[0];
    let energy_error = traj.h_values.iter().fold(0.0f64, |a, h| a.max((h - h0).abs()));
    let summary = json!({
        "experiment": plan.experiment.name(),
        "energy_drift": traj.energy_drift,
        "energy_error": energy_error,
        "gauge_max_difference": gauge_gap,
        "routh_residual": actions.routh_residual,
    });
    let data = json!({
        "energy_drift": traj.energy_drift,
        "energy_error": energy_error,
        "gauge_max_difference": gauge_gap,
        "actions": actions,
        "final_state": traj.last(),
        "n_steps": n,
    });
    Ok(plan.finish(vec![("", trajectory_csv(&traj))], data, summary))
}

fn run_maupertuis(plan: &Plan) -> Result<RunOutput, RunError> {
    let (_, sys) = plan.classical_model()?;
    let d = &plan.config.dynamics;
    let guess = d
        .init_guess
        .clone()
        .unwrap_or_else(|| d.q_b.iter().zip(&d.q_a).map(|(b, a)| b - a).collect());
    let opts = ShootingOptions {
        n_steps: plan.config.grids.n_steps,
        scheme: d.scheme,
        ..ShootingOptions::default()
    };
    let sol = maupertuis_shoot_with(&sys, &d.q_a, &d.q_b, d.energy, &guess, &opts).op("maupertuis_shoot")?;
    let actions = if sol.trajectory.states.len() > 1 {
        Some(evaluate_actions(&sol.trajectory, &sys, Some(d.energy)).op("evaluate_actions")?)
    } else {
        None
    };
    let summary = json!({
        "experiment": plan.experiment.name(),
        "p_a": sol.p_a,
        "time_of_flight": sol.time_of_flight,
        "endpoint_residual": sol.endpoint_residual,
        "iterations": sol.iterations,
    });
    let data = json!({
        "p_a": sol.p_a,
        "time_of_flight": sol.time_of_flight,
        "endpoint_residual": sol.endpoint_residual,
        "iterations": sol.iterations,
        "energy_drift": sol.trajectory.energy_drift,
        "actions": actions,
    });
    Ok(plan.finish(vec![("", trajectory_csv(&sol.trajectory))], data, summary))
}

fn run_repar(plan: &Plan) -> Result<RunOutput, RunError> {
    let (_, sys) = plan.classical_model()?;
    let d = &plan.config.dynamics;
    let span = plan.span();
    let l1 = d.lapse.build(span).op("lapse_profile")?;
    let l2 = d.lapse_alt.build(span).op("lapse_profile")?;
    let x0 = ExtendedPhasePoint::on_shell(&sys, d.q0.clone(), d.p0.clone(), d.t0).op("integrate_parametrized")?;
    let n = plan.config.grids.n_steps;
    let mut rows = Vec::new();
    for k in (0..=d.refinements).rev() {
        let steps = n >> k;
        if steps < crate::classical::integrator::MIN_STEPS {
            continue;
        }
        let diff = reparametrization_invariance_check_with(&sys, &x0, &l1, &l2, span, steps, d.scheme)
            .op("reparametrization_invariance_check")?;
        rows.push((steps, diff));
    }
    let at_default = rows.last().map(|r| r.1).unwrap_or(f64::NAN);
    let table = csv_table(
        &["n_steps", "difference", "ratio"],
        rows.iter().enumerate().map(|(i, &(s, diff))| {
            let ratio = if i == 0 { f64::NAN } else { rows[i - 1].1 / diff };
            vec![s as f64, diff, ratio]
        }),
    );
    let summary = json!({
        "experiment": plan.experiment.name(),
        "difference": at_default,
        "n_steps": n,
    });
    let data = json!({
        "lapse": l1.description(),
        "lapse_alt": l2.description(),
        "halving": rows.iter().map(|(s, d)| json!({"n_steps": s, "difference": d})).collect::<Vec<_>>(),
        "difference": at_default,
    });
    Ok(plan.finish(vec![("", table)], data, summary))
}

fn run_xcheck(plan: &Plan) -> Result<RunOutput, RunError> {
    let spec = plan.quantum_model()?;
    let x = &plan.config.xcheck;
    let h = build_quantum(&spec).op("build_quantum")?;
    let (_, ops) = crate::clock::build_clock(x.n_sites, x.period).op("build_clock")?;
    let c = build_constraint(&ops, &h).op("build_constraint")?;
    let spectral = projector_spectral(&c, &DeltaRegularization::gaussian(x.width)).op("projector_spectral")?;
    let alpha_max = x.alpha_max.unwrap_or(0.5 * x.period);
    let quad = projector_quadrature(&c, &DeltaRegularization::alpha_quadrature(x.width, alpha_max, x.n_nodes))
        .op("projector_quadrature")?;
    let diff = max_abs_diff(spectral.entries().view(), quad.entries().view());
    let blocks = to_clock_basis(&spectral, &crate::clock::clock_energy_basis(&ops)).op("to_clock_basis")?;
    let offdiag = max_offdiagonal_block(&blocks);
    let eigenvalues = eig_hermitian(&h).op("eig_hermitian")?.eigenvalues;
    let table = csv_table(
        &["n_sites", "n_nodes", "width", "max_abs_diff", "max_offdiagonal_block"],
        [vec![x.n_sites as f64, x.n_nodes as f64, x.width, diff, offdiag]],
    );
    let summary = json!({
        "experiment": plan.experiment.name(),
        "max_abs_diff": diff,
        "max_offdiagonal_block": offdiag,
    });
    let data = json!({
        "max_abs_diff": diff,
        "max_offdiagonal_block": offdiag,
        "alpha_max": alpha_max,
        "eigenvalues": eigenvalues,
        "model": spec,
    });
    Ok(plan.finish(vec![("", table)], data, summary))
}

/// Reads and parses a config file.
pub fn load_config(path: &Path) -> Result<RunConfig, RunError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        RunError::Config(ConfigError {
            pointer: String::new(),
            message: format!("cannot read {}: {e}", path.display()),
        })
    })?;
    Ok(super::config::parse_config(&text)?)
}
