//! Per-condition statistics over a batch of run logs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::control::RunLog;
use crate::sim::ActionKind;

/// IoU levels reported by [`summarize`].
pub const THRESHOLDS: [f64; 3] = [0.7, 0.8, 0.9];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    /// `None` for an empty slice.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(Self { mean, min, max })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeTo {
    pub threshold: f64,
    /// Mean over the runs that got there, s.
    pub mean: Option<f64>,
    pub reached: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub name: String,
    pub runs: usize,
    pub final_iou: Stats,
    /// Final minus initial IoU.
    pub delta_iou: Stats,
    pub final_max_height: Stats,
    pub time_to: Vec<TimeTo>,
    /// Mean number of actions per run, by kind.
    pub rolls: f64,
    pub forward_shrinks: f64,
    pub side_shrinks: f64,
    pub terminations: BTreeMap<String, usize>,
}

/// Groups logs by name, in order of first appearance.
pub fn summarize(logs: &[RunLog]) -> Vec<ConditionSummary> {
    let mut order: Vec<&str> = Vec::new();
    for l in logs {
        if !order.contains(&l.name.as_str()) {
            order.push(&l.name);
        }
    }
    order
        .into_iter()
        .map(|name| {
            let group: Vec<&RunLog> = logs.iter().filter(|l| l.name == name).collect();
            let n = group.len() as f64;
            let col = |f: &dyn Fn(&RunLog) -> f64| group.iter().map(|l| f(l)).collect::<Vec<f64>>();
            let time_to = THRESHOLDS
                .iter()
                .map(|&threshold| {
                    let times: Vec<f64> = group.iter().filter_map(|l| l.time_to(threshold)).collect();
                    TimeTo { threshold, mean: Stats::of(&times).map(|s| s.mean), reached: times.len() }
                })
                .collect();
            let count = |k: ActionKind| group.iter().map(|l| l.action_count(k) as f64).sum::<f64>() / n;
            let mut terminations = BTreeMap::new();
            for l in &group {
                *terminations.entry(l.termination.as_str().to_string()).or_insert(0) += 1;
            }
            ConditionSummary {
                name: name.to_string(),
                runs: group.len(),
                final_iou: Stats::of(&col(&|l| l.final_iou())).expect("nonempty group"),
                delta_iou: Stats::of(&col(&|l| l.final_iou() - l.initial().iou)).expect("nonempty group"),
                final_max_height: Stats::of(&col(&|l| l.last().max_height)).expect("nonempty group"),
                time_to,
                rolls: count(ActionKind::Roll),
                forward_shrinks: count(ActionKind::ForwardShrink),
                side_shrinks: count(ActionKind::SideShrink),
                terminations,
            }
        })
        .collect()
}
