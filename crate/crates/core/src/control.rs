//! The closed shaping loop: look, score, plan, roll, until time runs out, the
//! target overlap is reached, the dough breaks apart, or no move is left.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Disk, Vec2, Vec3, INCH};
use crate::perception::{capture, ShapeState};
use crate::planner::{plan, PlanConfig};
use crate::sim::{
    apply_action, ActionKind, HeightMap, MaterialParams, RollAction, SimParams, DEFAULT_EPSILON, DEFAULT_RESOLUTION,
    DEFAULT_WORKSPACE,
};

/// Target disk of the given diameter in inches, centered at the origin.
pub fn standard_target(inches: f64) -> Disk {
    Disk::from_diameter_inches(Vec2::ZERO, inches).expect("positive diameter")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoughInit {
    pub diameter: f64,
    pub height: f64,
    /// Placement relative to the target center, m.
    pub offset: Vec2,
    /// Radius of the seeded random placement jitter, m.
    pub jitter: f64,
}

impl Default for DoughInit {
    fn default() -> Self {
        Self { diameter: 0.056, height: 0.016, offset: Vec2::ZERO, jitter: 0.002 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Condition label used to group runs in summaries.
    pub name: String,
    pub material: MaterialParams,
    pub target: Disk,
    pub plan: PlanConfig,
    /// Time budget, s.
    pub t_max: f64,
    pub iou_min: f64,
    pub seed: u64,
    /// Simulated robot time charged per action, s.
    pub action_duration: f64,
    pub dough: DoughInit,
    pub sim: SimParams,
    pub resolution: f64,
    pub workspace: f64,
    /// Dough presence threshold, m.
    pub epsilon: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            name: "run".into(),
            material: MaterialParams::play_doh(),
            target: standard_target(4.0),
            plan: PlanConfig::default(),
            t_max: 300.0,
            iou_min: 0.90,
            seed: 0,
            action_duration: 20.0,
            dough: DoughInit::default(),
            sim: SimParams::default(),
            resolution: DEFAULT_RESOLUTION,
            workspace: DEFAULT_WORKSPACE,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        self.material.validate()?;
        self.plan.validate()?;
        if !(self.t_max >= 0.0 && self.t_max.is_finite()) {
            return bad("t_max must be a finite non-negative number of seconds");
        }
        if !(self.iou_min > 0.0 && self.iou_min <= 1.0) {
            return bad("iou_min must lie in (0, 1]");
        }
        if !(self.action_duration > 0.0 && self.action_duration.is_finite()) {
            return bad("action_duration must be positive");
        }
        if !(self.resolution > 0.0) || !(self.workspace > self.resolution) {
            return bad("resolution must be positive and smaller than the workspace");
        }
        if !(self.epsilon >= 0.0) {
            return bad("epsilon must be >= 0");
        }
        if !(self.dough.diameter > 0.0 && self.dough.height > 0.0 && self.dough.jitter >= 0.0) {
            return bad("dough diameter and height must be positive");
        }
        if !(self.sim.pin_speed >= 0.0 && (0.0..=1.0).contains(&self.sim.press_ratio)) {
            return bad("pin_speed must be >= 0 and press_ratio in [0, 1]");
        }
        let p = &self.sim;
        if ![p.min_pin_height, p.settle_ratio, p.film_height, p.crumb_area].iter().all(|v| *v >= 0.0 && v.is_finite())
            || !(0.0..=1.0).contains(&p.forward_shrink_transfer)
        {
            return bad("simulator constants must be finite and >= 0, forward_shrink_transfer in [0, 1]");
        }
        Ok(())
    }

    /// Most actions a run can take.
    pub fn max_actions(&self) -> usize {
        (self.t_max / self.action_duration).ceil() as usize
    }

    /// Dough center after the seeded placement jitter.
    pub fn dough_center(&self) -> Vec2 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let r = self.dough.jitter * rng.random::<f64>().sqrt();
        let a = rng.random_range(0.0..std::f64::consts::TAU);
        self.target.center + self.dough.offset + Vec2::from_angle(a) * r
    }

    pub fn initial_heightmap(&self) -> Result<HeightMap> {
        let mut hm = HeightMap::workspace(self.resolution, self.workspace);
        hm.add_cylinder(self.dough.diameter, self.dough.height, self.dough_center())?;
        Ok(hm)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Termination {
    TimeLimit,
    IoUReached,
    Disconnected,
    Stalled,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::TimeLimit => "TimeLimit",
            Termination::IoUReached => "IoUReached",
            Termination::Disconnected => "Disconnected",
            Termination::Stalled => "Stalled",
        }
    }
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// State after one iteration. `action` is the move that led here; record 0
/// has none, and so does the no-op record a stalled run ends with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub t: f64,
    pub iteration: usize,
    pub action: Option<ActionKind>,
    pub start: Option<Vec3>,
    pub end: Option<Vec3>,
    pub iou: f64,
    pub max_height: f64,
    pub volume: f64,
    pub components: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub name: String,
    pub seed: u64,
    pub records: Vec<Record>,
    pub termination: Termination,
    /// Volume pushed off the workspace over the whole run, m³.
    pub spilled: f64,
}

impl RunLog {
    pub fn initial(&self) -> &Record {
        &self.records[0]
    }

    pub fn last(&self) -> &Record {
        self.records.last().expect("record 0 always present")
    }

    pub fn final_iou(&self) -> f64 {
        self.last().iou
    }

    /// IoU gain over the initial state, per record.
    pub fn delta_iou(&self) -> Vec<f64> {
        let base = self.initial().iou;
        self.records.iter().map(|r| r.iou - base).collect()
    }

    /// Time of the first record with IoU at or above `threshold`.
    pub fn time_to(&self, threshold: f64) -> Option<f64> {
        self.records.iter().find(|r| r.iou >= threshold).map(|r| r.t)
    }

    pub fn action_count(&self, kind: ActionKind) -> usize {
        self.records.iter().filter(|r| r.action == Some(kind)).count()
    }

    pub fn actions(&self) -> usize {
        self.records.iter().filter(|r| r.action.is_some()).count()
    }
}

/// A run in progress. Holds the current dough and the action already planned
/// from the latest capture.
pub struct Session {
    cfg: RunConfig,
    hm: HeightMap,
    state: ShapeState,
    components: usize,
    t: f64,
    iteration: usize,
    planned: Result<RollAction>,
    records: Vec<Record>,
    spilled: f64,
    termination: Option<Termination>,
}

impl Session {
    /// Places the dough, captures it, scores it and plans the first action.
    pub fn new(cfg: RunConfig) -> Result<Self> {
        cfg.validate()?;
        let hm = cfg.initial_heightmap()?;
        Self::from_heightmap(cfg, hm)
    }

    /// Starts from an arbitrary dough state instead of the configured cylinder.
    pub fn from_heightmap(cfg: RunConfig, hm: HeightMap) -> Result<Self> {
        cfg.validate()?;
        let state = capture(&hm, &cfg.target, cfg.epsilon)?;
        let planned = plan(&cfg.plan, &state, &hm, &cfg.target);
        let components = hm.connected_components(cfg.epsilon);
        let mut s = Self {
            cfg,
            hm,
            state,
            components,
            t: 0.0,
            iteration: 0,
            planned,
            records: Vec::new(),
            spilled: 0.0,
            termination: None,
        };
        s.push_record(None);
        s.termination = s.check();
        Ok(s)
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn heightmap(&self) -> &HeightMap {
        &self.hm
    }

    pub fn state(&self) -> &ShapeState {
        &self.state
    }

    /// The action the next `step` will execute, if planning succeeded.
    pub fn planned(&self) -> Option<&RollAction> {
        self.planned.as_ref().ok()
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn termination(&self) -> Option<Termination> {
        self.termination
    }

    fn push_record(&mut self, action: Option<&RollAction>) {
        self.records.push(Record {
            t: self.t,
            iteration: self.iteration,
            action: action.map(|a| a.kind),
            start: action.map(|a| a.start),
            end: action.map(|a| a.end),
            iou: self.state.iou,
            max_height: self.state.max_height,
            volume: self.hm.total_volume(),
            components: self.components,
        });
    }

    /// Loop guard, evaluated after every capture.
    fn check(&self) -> Option<Termination> {
        if self.components > 1 {
            Some(Termination::Disconnected)
        } else if self.state.iou >= self.cfg.iou_min {
            Some(Termination::IoUReached)
        } else if self.t >= self.cfg.t_max {
            Some(Termination::TimeLimit)
        } else {
            None
        }
    }

    /// Executes the planned action, captures and scores the result and plans the
    /// next action. Returns the termination reason once the run is over.
    pub fn step(&mut self) -> Result<Option<Termination>> {
        if self.termination.is_some() {
            return Ok(self.termination);
        }
        self.iteration += 1;
        self.t += self.cfg.action_duration;
        let action = match &self.planned {
            Ok(a) => *a,
            Err(_) => {
                self.push_record(None);
                self.termination = Some(Termination::Stalled);
                return Ok(self.termination);
            }
        };
        let report = apply_action(&mut self.hm, &action, &self.cfg.material, &self.cfg.sim);
        self.spilled += report.spilled;
        self.state = capture(&self.hm, &self.cfg.target, self.cfg.epsilon)?;
        self.components = self.hm.connected_components(self.cfg.epsilon);
        self.push_record(Some(&action));
        self.termination = self.check();
        if self.termination.is_none() {
            self.planned = plan(&self.cfg.plan, &self.state, &self.hm, &self.cfg.target);
        }
        Ok(self.termination)
    }

    pub fn into_log(self) -> RunLog {
        RunLog {
            name: self.cfg.name,
            seed: self.cfg.seed,
            records: self.records,
            termination: self.termination.unwrap_or(Termination::TimeLimit),
            spilled: self.spilled,
        }
    }
}

/// Runs one configuration to termination.
pub fn run(cfg: RunConfig) -> Result<RunLog> {
    let mut s = Session::new(cfg)?;
    while s.step()?.is_none() {}
    Ok(s.into_log())
}

/// Every configuration `repetitions` times with seeds `seed + rep`. Runs go in
/// parallel; logs come back in configuration-major, repetition-minor order.
pub fn run_batch(cfgs: &[RunConfig], repetitions: usize) -> Result<Vec<RunLog>> {
    if repetitions == 0 {
        return Err(Error::InvalidConfig("repetitions must be >= 1".into()));
    }
    let jobs: Vec<RunConfig> = cfgs
        .iter()
        .flat_map(|c| {
            (0..repetitions).map(move |rep| RunConfig { seed: c.seed.wrapping_add(rep as u64), ..c.clone() })
        })
        .collect();
    jobs.into_par_iter().map(run).collect()
}

/// Standard target sizes by their inch label ("3.5", "T4.0", "T_4.5").
pub fn parse_target_label(label: &str) -> Option<Disk> {
    let digits = label.trim().trim_start_matches(['T', 't']).trim_start_matches('_');
    let inches: f64 = digits.parse().ok()?;
    [3.5, 4.0, 4.5].contains(&inches).then(|| standard_target(inches))
}

/// Inches to meters.
pub fn inches(v: f64) -> f64 {
    v * INCH
}
