//! Experiment orchestration: one entry point per subcommand, writing CSV
//! series, JSON summaries, optional field dumps and a run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{make_initial_data, OutputFormat, RunConfig};
use crate::diagnostics::{
    default_window, direction_samples, fit_decay, norm_series, stability_map, viscosity_sweep, DecayLaw, NormSeries,
    SweepSolver,
};
use crate::dispersion::{dispersion_beta0, dispersion_beta2, wave_existence_region, wave_threshold};
use crate::error::{Error, Result};
use crate::grid::{write_field_dump, GridSpec, SpectralField, SpectralTransform};
use crate::linear::linear_solve;
use crate::model::ModelParams;
use crate::nonlinear::{pde_residual, picard_solve, time_grid};

pub const NORM_CSV_HEADER: &str = "t,l2_psi,l2_grad_phi,linf_psi,linf_grad_phi,sigma_l2_hess_phi";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    ParamsCheck,
    StabilityMap,
    Linear,
    Nonlinear,
    Dispersion,
    ViscositySweep,
    DecayFit,
}

impl Subcommand {
    pub const ALL: [Subcommand; 7] = [
        Subcommand::ParamsCheck,
        Subcommand::StabilityMap,
        Subcommand::Linear,
        Subcommand::Nonlinear,
        Subcommand::Dispersion,
        Subcommand::ViscositySweep,
        Subcommand::DecayFit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::ParamsCheck => "params-check",
            Subcommand::StabilityMap => "stability-map",
            Subcommand::Linear => "linear",
            Subcommand::Nonlinear => "nonlinear",
            Subcommand::Dispersion => "dispersion",
            Subcommand::ViscositySweep => "viscosity-sweep",
            Subcommand::DecayFit => "decay-fit",
        }
    }
}

impl std::str::FromStr for Subcommand {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown subcommand {s:?}")))
    }
}

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidParams(_) | Error::Data(_) | Error::ShapeMismatch { .. } => 2,
        Error::Io(_) => 4,
        _ => 3,
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides `output.dir`.
    pub output_dir: Option<PathBuf>,
    pub dump_fields: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub status: String,
    pub error: Option<ErrorRecord>,
    pub solver_version: String,
    pub wall_clock_seconds: f64,
    pub iterations: Option<usize>,
    pub artifacts: Vec<String>,
    pub config: Option<RunConfig>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub manifest: RunManifest,
    pub output_dir: PathBuf,
}

/// Collects artifacts written into the output directory.
struct Sink {
    dir: PathBuf,
    formats: Vec<OutputFormat>,
    written: Vec<String>,
    iterations: Option<usize>,
}

impl Sink {
    fn wants(&self, f: OutputFormat) -> bool {
        self.formats.contains(&f)
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        if !self.wants(OutputFormat::Json) {
            return Ok(());
        }
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Data(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn csv(&mut self, name: &str, text: String) -> Result<()> {
        if !self.wants(OutputFormat::Csv) {
            return Ok(());
        }
        self.write(name, text.as_bytes())
    }

    fn dump(&mut self, name: &str, field: &SpectralField, tr: &SpectralTransform) -> Result<()> {
        write_field_dump(&self.dir.join(name), &tr.inverse(field)?)?;
        self.written.push(name.to_string());
        Ok(())
    }
}

/// `{:.16e}` gives 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn norm_csv(s: &NormSeries) -> String {
    let mut out = String::from(NORM_CSV_HEADER);
    out.push('\n');
    for i in 0..s.len() {
        let row = [
            s.times[i],
            s.l2_psi[i],
            s.l2_grad_phi[i],
            s.linf_psi[i],
            s.linf_grad_phi[i],
            s.sigma_l2_hess_phi[i],
        ];
        let cells: Vec<String> = row.iter().map(|&x| fmt_num(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn write_atomically(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Run a subcommand and always leave a manifest behind (when the output
/// directory can be created).
pub fn run(cmd: Subcommand, config: &RunConfig, opts: &RunOptions) -> RunOutcome {
    let dir = opts.output_dir.clone().unwrap_or_else(|| config.output.dir.clone());
    let start = Instant::now();
    let mut sink = Sink {
        dir: dir.clone(),
        formats: config.output.formats.clone(),
        written: Vec::new(),
        iterations: None,
    };
    let result = fs::create_dir_all(&dir)
        .map_err(Error::from)
        .and_then(|_| config.validate())
        .and_then(|_| dispatch(cmd, config, opts, &mut sink));
    let manifest = RunManifest {
        subcommand: cmd.name().to_string(),
        status: if result.is_ok() { "ok" } else { "error" }.to_string(),
        error: result.as_ref().err().map(|e| ErrorRecord {
            kind: e.kind().to_string(),
            message: e.to_string(),
        }),
        solver_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        iterations: sink.iterations,
        artifacts: sink.written.clone(),
        config: Some(config.clone()),
    };
    let mut code = result.as_ref().map(|_| 0).unwrap_or_else(exit_code);
    if let Err(e) = write_manifest(&dir, &manifest) {
        log::error!("could not write manifest: {e}");
        if code == 0 {
            code = 4;
        }
    }
    RunOutcome {
        exit_code: code,
        manifest,
        output_dir: dir,
    }
}

/// Manifest for a run that failed before a configuration was available.
pub fn failed_manifest(cmd: Subcommand, dir: &Path, err: &Error) -> RunOutcome {
    let manifest = RunManifest {
        subcommand: cmd.name().to_string(),
        status: "error".into(),
        error: Some(ErrorRecord {
            kind: err.kind().to_string(),
            message: err.to_string(),
        }),
        solver_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_clock_seconds: 0.0,
        iterations: None,
        artifacts: Vec::new(),
        config: None,
    };
    if let Err(e) = fs::create_dir_all(dir).map_err(Error::from).and_then(|_| write_manifest(dir, &manifest)) {
        log::error!("could not write manifest: {e}");
    }
    RunOutcome {
        exit_code: exit_code(err),
        manifest,
        output_dir: dir.to_path_buf(),
    }
}

fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest).map_err(|e| Error::Data(e.to_string()))?;
    text.push('\n');
    write_atomically(&dir.join("manifest.json"), text.as_bytes())
}

fn dispatch(cmd: Subcommand, config: &RunConfig, opts: &RunOptions, sink: &mut Sink) -> Result<()> {
    let params = config.params()?;
    match cmd {
        Subcommand::ParamsCheck => params_check(config, &params, sink),
        Subcommand::StabilityMap => stability(config, &params, sink),
        Subcommand::Linear => linear(config, &params, opts, sink),
        Subcommand::Nonlinear => nonlinear(config, &params, opts, sink),
        Subcommand::Dispersion => dispersion(config, &params, sink),
        Subcommand::ViscositySweep => sweep(config, &params, sink),
        Subcommand::DecayFit => decay(config, &params, sink),
    }
}

fn params_check(config: &RunConfig, params: &ModelParams, sink: &mut Sink) -> Result<()> {
    let grid = config.grid()?;
    let picard = config.picard_config(params)?;
    let data = make_initial_data(config, &grid)?;
    sink.json(
        "params.json",
        &json!({
            "params": params,
            "f_bar": params.f_bar(),
            "subcritical": params.is_subcritical(),
            "decay_constant": params.decay_constant(),
            "norm_c": picard.norm_c,
            "norm_k": picard.norm_order,
            "time_nodes": picard.time_nodes,
            "grid": { "n": grid.n(), "length": grid.length(), "spacing": grid.spacing() },
            "data_weight_norm": data.weight_norm,
        }),
    )
}

fn stability(config: &RunConfig, params: &ModelParams, sink: &mut Sink) -> Result<()> {
    let rho_grid = if config.experiment.rho_grid.is_empty() {
        (1..20).map(|j| 0.05 * j as f64 * params.rho_max).collect()
    } else {
        config.experiment.rho_grid.clone()
    };
    let rows = stability_map(&rho_grid, &direction_samples(config.experiment.directions), params)
        .map_err(|e| match e {
            Error::InvalidParams(m) => Error::Config(format!("experiment.rho_grid: {m}")),
            other => other,
        })?;
    let mut csv = String::from("rho_bar,gap,regime,wave_threshold\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{:?},{}",
            fmt_num(r.rho_bar),
            fmt_num(r.gap),
            r.regime,
            r.wave_threshold.map(fmt_num).unwrap_or_default()
        );
    }
    sink.csv("stability_map.csv", csv)?;
    sink.json("stability_map.json", &rows)
}

fn dump_pair(sink: &mut Sink, tag: &str, psi: &SpectralField, phi: &SpectralField, tr: &SpectralTransform) -> Result<()> {
    sink.dump(&format!("psi_{tag}.ghfd"), psi, tr)?;
    sink.dump(&format!("phi_{tag}.ghfd"), phi, tr)
}

fn boundary_errors(psi: &[SpectralField], phi: &[SpectralField], psi0: &SpectralField, phi_t: &SpectralField) -> (f64, f64) {
    let rel = |a: &SpectralField, b: &SpectralField| {
        let d = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        let s = b.max_abs();
        if s > 0.0 {
            d / s
        } else {
            d
        }
    };
    (rel(&psi[0], psi0), rel(phi.last().expect("nonempty"), phi_t))
}

fn mass_drift(psi: &[SpectralField]) -> f64 {
    let m0 = psi[0].zero_mode();
    psi.iter().map(|p| (p.zero_mode() - m0).norm()).fold(0.0, f64::max)
}

fn linear(config: &RunConfig, params: &ModelParams, opts: &RunOptions, sink: &mut Sink) -> Result<()> {
    let grid = config.grid()?;
    let data = make_initial_data(config, &grid)?;
    let times = time_grid(params.horizon, config.experiment.samples);
    let traj = linear_solve(&data.psi0, &data.phi_t, &times, &grid, params)?;
    let series = norm_series(&traj, &grid, params)?;
    sink.csv("norms.csv", norm_csv(&series))?;
    let (e0, et) = boundary_errors(&traj.psi_hat, &traj.phi_hat, &data.psi0.without_nyquist(&grid), &data.phi_t.without_nyquist(&grid));
    sink.json(
        "linear.json",
        &json!({
            "samples": times.len(),
            "boundary_error_psi0": e0,
            "boundary_error_phiT": et,
            "mass_drift": mass_drift(&traj.psi_hat),
            "data_weight_norm": data.weight_norm,
        }),
    )?;
    if opts.dump_fields {
        let tr = SpectralTransform::new(&grid);
        let last = times.len() - 1;
        dump_pair(sink, "t0", &traj.psi_hat[0], &traj.phi_hat[0], &tr)?;
        dump_pair(sink, "tT", &traj.psi_hat[last], &traj.phi_hat[last], &tr)?;
    }
    Ok(())
}

fn nonlinear(config: &RunConfig, params: &ModelParams, opts: &RunOptions, sink: &mut Sink) -> Result<()> {
    let grid = config.grid()?;
    let picard = config.picard_config(params)?;
    let data = make_initial_data(config, &grid)?;
    let traj = picard_solve(&data.psi0, &data.phi_t, &grid, &picard, params)?;
    sink.iterations = Some(traj.iterations());
    let series = norm_series(&traj, &grid, params)?;
    sink.csv("norms.csv", norm_csv(&series))?;
    let mut it = String::from("iteration,distance\n");
    for (i, d) in traj.iteration_report.iter().enumerate() {
        let _ = writeln!(it, "{},{}", i + 1, fmt_num(*d));
    }
    sink.csv("iterations.csv", it)?;
    let residual = pde_residual(&traj, &grid, params, picard.form)?;
    let (e0, et) = boundary_errors(&traj.psi_hat, &traj.phi_hat, &data.psi0.without_nyquist(&grid), &data.phi_t.without_nyquist(&grid));
    sink.json(
        "nonlinear.json",
        &json!({
            "iterations": traj.iterations(),
            "distances": traj.iteration_report,
            "max_pde_residual": residual.iter().cloned().fold(0.0, f64::max),
            "boundary_error_psi0": e0,
            "boundary_error_phiT": et,
            "mass_drift": mass_drift(&traj.psi_hat),
            "data_weight_norm": data.weight_norm,
            "picard": picard,
        }),
    )?;
    if opts.dump_fields {
        let tr = SpectralTransform::new(&grid);
        let last = traj.times.len() - 1;
        dump_pair(sink, "t0", &traj.psi_hat[0], &traj.phi_hat[0], &tr)?;
        dump_pair(sink, "tT", &traj.psi_hat[last], &traj.phi_hat[last], &tr)?;
    }
    Ok(())
}

fn dispersion(config: &RunConfig, params: &ModelParams, sink: &mut Sink) -> Result<()> {
    let e = &config.experiment;
    let waves = if e.beta == 0 {
        dispersion_beta0(e.a, e.b, params)?
    } else {
        dispersion_beta2(e.a, e.b, params)?
    };
    let region: Vec<Value> = wave_existence_region(params, &e.ratio_grid)
        .into_iter()
        .map(|(r, ok)| json!({ "ratio": r, "exists": ok }))
        .collect();
    sink.json(
        "dispersion.json",
        &json!({
            "beta": e.beta,
            "a": e.a,
            "b": e.b,
            "rho_bar": params.rho_bar,
            "waves": waves,
            "frequencies": waves.iter().map(|w| w.c).collect::<Vec<_>>(),
            "wave_threshold": wave_threshold(params),
            "existence_region": region,
        }),
    )
}

fn sweep(config: &RunConfig, params: &ModelParams, sink: &mut Sink) -> Result<()> {
    let grid = config.grid()?;
    let picard = config.picard_config(params)?;
    let data = make_initial_data(config, &grid)?;
    let kind = config.experiment.solver.unwrap_or(SweepSolver::Nonlinear);
    let report = viscosity_sweep(
        &data.psi0,
        &data.phi_t,
        &config.experiment.sigmas,
        &grid,
        params,
        &picard,
        kind,
    )?;
    let mut csv = String::from("sigma,difference,iterations\n");
    for p in &report.points {
        let _ = writeln!(csv, "{},{},{}", fmt_num(p.sigma), fmt_num(p.difference), p.iterations);
    }
    sink.csv("viscosity_sweep.csv", csv)?;
    sink.json("viscosity_sweep.json", &report)
}

fn decay(config: &RunConfig, params: &ModelParams, sink: &mut Sink) -> Result<()> {
    let grid = config.grid()?;
    let data = make_initial_data(config, &grid)?;
    let kind = config.experiment.solver.unwrap_or(SweepSolver::Linear);
    let series = decay_series(config, params, &grid, &data.psi0, &data.phi_t, kind, sink)?;
    sink.csv("norms.csv", norm_csv(&series))?;
    let window = config.experiment.window.unwrap_or_else(|| default_window(params.horizon));
    let l2 = fit_decay(&series.times, &series.l2_total(), DecayLaw::Inverse, window, params.horizon)?;
    let linf = fit_decay(&series.times, &series.linf_total(), DecayLaw::InverseSquare, window, params.horizon)?;
    sink.json("decay_fit.json", &json!({ "solver": kind, "l2": l2, "linf": linf }))
}

fn decay_series(
    config: &RunConfig,
    params: &ModelParams,
    grid: &GridSpec,
    psi0: &SpectralField,
    phi_t: &SpectralField,
    kind: SweepSolver,
    sink: &mut Sink,
) -> Result<NormSeries> {
    match kind {
        SweepSolver::Linear => {
            let times = time_grid(params.horizon, config.experiment.samples);
            norm_series(&linear_solve(psi0, phi_t, &times, grid, params)?, grid, params)
        }
        SweepSolver::Nonlinear => {
            let picard = config.picard_config(params)?;
            let traj = picard_solve(psi0, phi_t, grid, &picard, params)?;
            sink.iterations = Some(traj.iterations());
            norm_series(&traj, grid, params)
        }
    }
}
