//! Experiment harness behind the `dough` binary. Each command computes all of
//! its artifacts in memory first; nothing touches the output directory until
//! the whole command has succeeded.

pub mod config;
pub mod export;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use dough_core::control::{RunConfig, RunLog, Session};
use dough_core::dcd::{disk_pair, sgd_deform, DcdParams};
use dough_core::presets::{ExperimentPreset, REPETITIONS};
use dough_core::sim::{material_presets, MaterialParams};
use dough_core::summary::{summarize, ConditionSummary};
use dough_core::tactile::{classify, measure_all, reaction_force, write_readings, FsrCircuit, Protocol};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use config::{ConfigError, ConfigFile};
use export::{log_csv, run_plots, slug, snapshot_svg, to_json, RunSummary};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Run(#[from] dough_core::Error),
    #[error("writing {path}: {source}")]
    Write { path: String, source: std::io::Error },
}

impl CliError {
    /// 2 for anything wrong with the input, 3 for runtime failures such as an
    /// empty dough, 1 for output errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Run(dough_core::Error::InvalidConfig(_)) => 2,
            CliError::Run(_) => 3,
            CliError::Write { .. } => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Options shared by every command.
#[derive(Clone, Debug, Default)]
pub struct Options {
    pub seed: Option<u64>,
    pub resolution: Option<f64>,
    pub format: Format,
    /// Write a top-view SVG every `k` iterations; 0 disables snapshots.
    pub svg_every: usize,
}

impl Options {
    fn apply(&self, mut cfg: RunConfig) -> Result<RunConfig, CliError> {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(r) = self.resolution {
            cfg.resolution = r;
        }
        cfg.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(cfg)
    }
}

/// Files produced by a command, as (relative path, contents), plus a report for stdout.
#[derive(Debug, Default)]
pub struct Output {
    pub files: Vec<(PathBuf, String)>,
    pub report: String,
}

impl Output {
    fn add(&mut self, path: impl Into<PathBuf>, contents: String) {
        self.files.push((path.into(), contents));
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        for (rel, text) in &self.files {
            let path = dir.join(rel);
            let wrap = |source| CliError::Write { path: path.display().to_string(), source };
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(wrap)?;
            }
            std::fs::write(&path, text).map_err(wrap)?;
        }
        Ok(())
    }
}

/// A finished run and its snapshots as (iteration, svg).
pub struct Simulated {
    pub log: RunLog,
    pub snapshots: Vec<(usize, String)>,
}

/// Runs one configuration to termination, drawing every `svg_every`-th state and the last one.
pub fn simulate(cfg: RunConfig, svg_every: usize) -> dough_core::Result<Simulated> {
    let target = cfg.target;
    let mut s = Session::new(cfg)?;
    let mut snapshots = Vec::new();
    let mut draw = |s: &Session| {
        let it = s.records().last().map_or(0, |r| r.iteration);
        let r = s.records().last().expect("record 0 exists");
        let caption = format!("iter {it}  t {} s  IoU {:.3}", r.t, r.iou);
        let next = if s.termination().is_none() { s.planned() } else { None };
        snapshots.push((it, snapshot_svg(s.state(), &target, next, &caption)));
    };
    loop {
        let done = s.termination().is_some();
        let it = s.records().last().map_or(0, |r| r.iteration);
        if svg_every > 0 && (it % svg_every == 0 || done) {
            draw(&s);
        }
        if done {
            break;
        }
        s.step()?;
    }
    Ok(Simulated { log: s.into_log(), snapshots })
}

fn add_run_files(out: &mut Output, sim: &Simulated, format: Format) {
    let stem = format!("{}_s{}", slug(&sim.log.name), sim.log.seed);
    match format {
        Format::Csv => out.add(format!("logs/{stem}.csv"), log_csv(&sim.log)),
        Format::Json => out.add(format!("logs/{stem}.json"), to_json(&sim.log)),
    }
    for (it, svg) in &sim.snapshots {
        out.add(format!("snapshots/{stem}_{it:04}.svg"), svg.clone());
    }
}

fn run_line(s: &RunSummary) -> String {
    format!(
        "{:<48} seed {:>3}  IoU {:.3} -> {:.3}  max h {:.2} mm  {:>3} actions  {}",
        s.name,
        s.seed,
        s.initial_iou,
        s.final_iou,
        s.final_max_height * 1000.0,
        s.actions.values().sum::<usize>(),
        s.termination
    )
}

/// `run <config>`: one run of the configuration file.
pub fn run_config(path: &Path, opts: &Options) -> Result<Output, CliError> {
    let cfg = opts.apply(ConfigFile::load(path)?.apply(&RunConfig::default())?)?;
    let sim = simulate(cfg, opts.svg_every)?;
    let summary = RunSummary::of(&sim.log);
    let mut out = Output::default();
    add_run_files(&mut out, &sim, opts.format);
    out.add("summary.json", to_json(&summary));
    let (iou, height) = run_plots(std::slice::from_ref(&sim.log));
    out.add("iou.svg", iou);
    out.add("height.svg", height);
    out.report = run_line(&summary) + "\n";
    Ok(out)
}

#[derive(Serialize)]
struct PresetSummary<'a> {
    preset: &'a str,
    repetitions: usize,
    conditions: &'a [ConditionSummary],
    runs: &'a [RunSummary],
}

/// `preset <name>`: expands the experiment and runs every condition
/// [`REPETITIONS`] times with seeds `seed, seed + 1, ...`. Runs go in
/// parallel; files are collected in configuration-major order.
pub fn run_preset(name: &str, base: Option<&Path>, opts: &Options) -> Result<Output, CliError> {
    let preset: ExperimentPreset = name.parse().map_err(|e: dough_core::Error| ConfigError::Invalid(e.to_string()))?;
    if preset == ExperimentPreset::Tactile {
        return tactile_demo(&TactileOptions { seed: opts.seed.unwrap_or(0), ..TactileOptions::default() });
    }
    let base = match base {
        Some(p) => ConfigFile::load(p)?.apply(&RunConfig::default())?,
        None => RunConfig::default(),
    };
    let base = opts.apply(base)?;
    let jobs: Vec<RunConfig> = preset
        .expand(&base)
        .into_iter()
        .flat_map(|c| (0..REPETITIONS).map(move |rep| RunConfig { seed: c.seed.wrapping_add(rep as u64), ..c.clone() }))
        .collect();
    let sims: Vec<Simulated> =
        jobs.into_par_iter().map(|c| simulate(c, opts.svg_every)).collect::<dough_core::Result<_>>()?;

    let mut out = Output::default();
    for sim in &sims {
        add_run_files(&mut out, sim, opts.format);
    }
    let logs: Vec<RunLog> = sims.into_iter().map(|s| s.log).collect();
    let runs: Vec<RunSummary> = logs.iter().map(RunSummary::of).collect();
    let conditions = summarize(&logs);
    out.add(
        "summary.json",
        to_json(&PresetSummary { preset: preset.as_str(), repetitions: REPETITIONS, conditions: &conditions, runs: &runs }),
    );
    out.add("summary.csv", condition_csv(&conditions));
    let (iou, height) = condition_plots(&logs, &conditions);
    out.add("iou.svg", iou);
    out.add("height.svg", height);

    let mut report = String::new();
    for r in &runs {
        writeln!(report, "{}", run_line(r)).unwrap();
    }
    report.push('\n');
    report.push_str(&condition_table(&conditions));
    out.report = report;
    Ok(out)
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn condition_csv(conds: &[ConditionSummary]) -> String {
    let mut s = String::from(
        "condition,runs,final_iou_mean,final_iou_min,final_iou_max,delta_iou_mean,max_height_mean,\
         t_iou_0.7,t_iou_0.8,t_iou_0.9,rolls,forward_shrinks,side_shrinks,terminations\n",
    );
    for c in conds {
        let terms: Vec<String> = c.terminations.iter().map(|(k, n)| format!("{k}:{n}")).collect();
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.name,
            c.runs,
            c.final_iou.mean,
            c.final_iou.min,
            c.final_iou.max,
            c.delta_iou.mean,
            c.final_max_height.mean,
            opt(c.time_to[0].mean),
            opt(c.time_to[1].mean),
            opt(c.time_to[2].mean),
            c.rolls,
            c.forward_shrinks,
            c.side_shrinks,
            terms.join(" ")
        )
        .unwrap();
    }
    s
}

pub fn condition_table(conds: &[ConditionSummary]) -> String {
    let mut s = format!(
        "{:<48} {:>6} {:>6} {:>6} {:>7} {:>8} {:>8}  {}\n",
        "condition", "IoU", "min", "max", "dIoU", "h [mm]", "t0.9 [s]", "terminations"
    );
    for c in conds {
        let terms: Vec<String> = c.terminations.iter().map(|(k, n)| format!("{k}:{n}")).collect();
        writeln!(
            s,
            "{:<48} {:>6.3} {:>6.3} {:>6.3} {:>7.3} {:>8.2} {:>8}  {}",
            c.name,
            c.final_iou.mean,
            c.final_iou.min,
            c.final_iou.max,
            c.delta_iou.mean,
            c.final_max_height.mean * 1000.0,
            c.time_to[2].mean.map(|t| format!("{t:.0}")).unwrap_or_else(|| "-".into()),
            terms.join(" ")
        )
        .unwrap();
    }
    s
}

/// Mean curves per condition. A finished run holds its last value.
fn condition_plots(logs: &[RunLog], conds: &[ConditionSummary]) -> (String, String) {
    let curve = |name: &str, f: &dyn Fn(&dough_core::control::Record) -> f64| -> Vec<(f64, f64)> {
        let group: Vec<&RunLog> = logs.iter().filter(|l| l.name == name).collect();
        let len = group.iter().map(|l| l.records.len()).max().unwrap_or(0);
        (0..len)
            .map(|i| {
                let t = group.iter().filter_map(|l| l.records.get(i)).map(|r| r.t).fold(0.0, f64::max);
                let mean = group.iter().map(|l| f(l.records.get(i).unwrap_or_else(|| l.last()))).sum::<f64>()
                    / group.len() as f64;
                (t, mean)
            })
            .collect()
    };
    let iou: Vec<_> = conds.iter().map(|c| (c.name.clone(), curve(&c.name, &|r| r.iou))).collect();
    let height: Vec<_> = conds.iter().map(|c| (c.name.clone(), curve(&c.name, &|r| r.max_height * 1000.0))).collect();
    (
        export::line_plot("Mean IoU over time", "time [s]", "IoU", &iou),
        export::line_plot("Mean maximum dough height", "time [s]", "height [mm]", &height),
    )
}

#[derive(Clone, Debug)]
pub struct DcdOptions {
    pub steps: usize,
    pub lr: f64,
    pub points: usize,
    pub source_radius: f64,
    pub target_radius: f64,
    pub alpha: f64,
}

impl Default for DcdOptions {
    fn default() -> Self {
        Self { steps: 200, lr: 1e-3, points: 500, source_radius: 0.028, target_radius: 0.0508, alpha: DcdParams::default().alpha }
    }
}

/// `dcd-demo`: deforms a flat disk cloud onto a wider one with the same volume.
pub fn dcd_demo(d: &DcdOptions, opts: &Options) -> Result<Output, CliError> {
    let dough = RunConfig::default().dough;
    let volume = std::f64::consts::PI * (0.5 * dough.diameter).powi(2) * dough.height;
    let (src, tgt) = disk_pair(d.source_radius, d.target_radius, volume, d.points)?;
    let trace = sgd_deform(&src, &tgt, d.steps, d.lr, &DcdParams { alpha: d.alpha })?;
    let mut out = Output::default();
    match opts.format {
        Format::Csv => out.add("dcd.csv", trace.to_csv()),
        Format::Json => out.add("dcd.json", to_json(&trace)),
    }
    let series = |v: &[f64]| v.iter().enumerate().map(|(k, &y)| (k as f64, y)).collect::<Vec<_>>();
    out.add("dcd.svg", export::line_plot("DCD loss", "step", "loss", &[("DCD".into(), series(&trace.dcd))]));
    out.add("chamfer.svg", export::line_plot("Chamfer distance", "step", "CD [m]", &[("CD".into(), series(&trace.chamfer))]));
    let uphill = trace.dcd.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    out.report = format!(
        "dcd {:.9} -> {:.9}, chamfer {:.6e} -> {:.6e}, largest step change {uphill:.3e}\n",
        trace.dcd[0],
        trace.dcd[d.steps],
        trace.chamfer[0],
        trace.chamfer[d.steps]
    );
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct TactileOptions {
    /// Presses per material.
    pub presses: usize,
    /// Force noise, N. `None` uses 5% of the smallest gap between preset forces.
    pub noise: Option<f64>,
    pub seed: u64,
}

impl Default for TactileOptions {
    fn default() -> Self {
        Self { presses: 5, noise: None, seed: 0 }
    }
}

#[derive(Serialize)]
struct TactileSummary {
    noise_sd: f64,
    presses: usize,
    results: Vec<TactileResult>,
    accuracy: f64,
}

#[derive(Serialize)]
struct TactileResult {
    material: String,
    mean_force: f64,
    compliance: Option<f64>,
    classified_as: Option<String>,
}

/// Smallest force gap between any two presets under `protocol`, N.
pub fn min_preset_gap(presets: &[MaterialParams], protocol: Protocol) -> f64 {
    let f: Vec<f64> = presets.iter().map(|m| reaction_force(m, protocol.delta_x, protocol.rate)).collect();
    let mut gap = f64::INFINITY;
    for i in 0..f.len() {
        for j in i + 1..f.len() {
            gap = gap.min((f[i] - f[j]).abs());
        }
    }
    gap
}

/// `tactile-demo`: noisy presses on every bundled material, then classification.
pub fn tactile_demo(t: &TactileOptions) -> Result<Output, CliError> {
    let presets = material_presets();
    let protocol = Protocol::default();
    let noise = t.noise.unwrap_or_else(|| 0.05 * min_preset_gap(presets, protocol));
    let readings = measure_all(presets, &FsrCircuit::default(), protocol, t.presses, noise, t.seed)?;
    let mut results = Vec::new();
    let mut report = String::new();
    for (m, rs) in presets.iter().zip(readings.chunks(t.presses.max(1))) {
        let mean = rs.iter().map(|r| r.force).sum::<f64>() / rs.len() as f64;
        let label = classify(rs, presets).map(str::to_string);
        writeln!(report, "{:<14} mean force {mean:.4} N  -> {}", m.name, label.as_deref().unwrap_or("?")).unwrap();
        results.push(TactileResult {
            material: m.name.clone(),
            mean_force: mean,
            compliance: dough_core::tactile::compliance(protocol.delta_x, mean).ok(),
            classified_as: label,
        });
    }
    let correct = results.iter().filter(|r| r.classified_as.as_deref() == Some(r.material.as_str())).count();
    let accuracy = correct as f64 / results.len().max(1) as f64;
    writeln!(report, "accuracy {accuracy:.3} (noise sd {noise:.4e} N)").unwrap();
    let mut csv = Vec::new();
    write_readings(&readings, &mut csv)?;
    let mut out = Output::default();
    out.add("tactile.csv", String::from_utf8(csv).expect("csv is utf-8"));
    out.add("tactile.json", to_json(&TactileSummary { noise_sd: noise, presses: t.presses, results, accuracy }));
    out.report = report;
    Ok(out)
}
