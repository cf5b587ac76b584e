//! Rewards and change-detection metrics.
//!
//! All comparisons use binarized occupancy restricted to explorable cells. Ratios are
//! in [0, 1]; Seen% is a percentage.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::som::{Mask, OccupancyGrid};

fn check_dims(a: &OccupancyGrid, b: &OccupancyGrid, what: &str) -> Result<()> {
    a.geometry().check_same(b.geometry(), what)
}

fn check_mask(g: &OccupancyGrid, m: &Mask, what: &str) -> Result<()> {
    if !m.same_shape(g.width(), g.height()) {
        return Err(Error::DimensionMismatch(format!(
            "{what}: mask {}x{} vs map {}x{}",
            m.width(),
            m.height(),
            g.width(),
            g.height()
        )));
    }
    Ok(())
}

/// Explorable cells where `m` agrees with `truth`.
pub fn match_count(m: &OccupancyGrid, truth: &OccupancyGrid, explorable: &Mask) -> Result<usize> {
    check_dims(m, truth, "match_count")?;
    check_mask(m, explorable, "match_count")?;
    Ok((0..m.geometry().len())
        .filter(|&i| explorable.at(i) && m.is_occupied(i) == truth.is_occupied(i))
        .count())
}

/// Change in the number of explorable cells agreeing with the truth.
pub fn r_diff(prev: &OccupancyGrid, curr: &OccupancyGrid, truth: &OccupancyGrid, explorable: &Mask) -> Result<i64> {
    check_dims(prev, curr, "r_diff")?;
    Ok(match_count(curr, truth, explorable)? as i64 - match_count(prev, truth, explorable)? as i64)
}

/// Newly seen explorable cells.
pub fn coverage_reward(seen_prev: &Mask, seen_curr: &Mask, explorable: &Mask) -> Result<u64> {
    let (w, h) = (explorable.width(), explorable.height());
    if !seen_prev.same_shape(w, h) || !seen_curr.same_shape(w, h) {
        return Err(Error::DimensionMismatch("coverage_reward: mask shapes differ".into()));
    }
    Ok((0..w * h)
        .filter(|&i| explorable.at(i) && seen_curr.at(i) && !seen_prev.at(i))
        .count() as u64)
}

pub fn r_global(r_exp: f64, r_diff: f64, beta1: f64, beta2: f64) -> f64 {
    beta1 * r_exp + beta2 * r_diff
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardRecord {
    pub t: usize,
    pub r_diff: i64,
    pub r_exp: u64,
    pub r_global: f64,
    pub r_local: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardTrace {
    pub records: Vec<RewardRecord>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardTotals {
    pub r_diff: i64,
    pub r_exp: u64,
    pub r_global: f64,
    pub r_local: f64,
}

impl RewardTrace {
    pub fn push(&mut self, r: RewardRecord) {
        self.records.push(r);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn totals(&self) -> RewardTotals {
        self.records.iter().fold(RewardTotals::default(), |mut a, r| {
            a.r_diff += r.r_diff;
            a.r_exp += r.r_exp;
            a.r_global += r.r_global;
            a.r_local += r.r_local;
            a
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub seen_pct: f64,
    pub acc: f64,
    pub iou_plus: f64,
    pub iou_minus: f64,
    pub iou: f64,
    pub m_acc: f64,
    pub m_iou_plus: f64,
    pub m_iou_minus: f64,
    pub m_iou: f64,
}

impl Metrics {
    /// Column names in table order.
    pub const COLUMNS: [&'static str; 9] = [
        "seen_pct", "acc", "iou_plus", "iou_minus", "iou", "m_acc", "m_iou_plus", "m_iou_minus", "m_iou",
    ];

    pub fn values(&self) -> [f64; 9] {
        [
            self.seen_pct,
            self.acc,
            self.iou_plus,
            self.iou_minus,
            self.iou,
            self.m_acc,
            self.m_iou_plus,
            self.m_iou_minus,
            self.m_iou,
        ]
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Counts {
    truth: usize,
    pred: usize,
    both: usize,
    plus_inter: usize,
    plus_union: usize,
    minus_inter: usize,
    minus_union: usize,
}

fn ratio_or_one(num: usize, den: usize) -> f64 {
    if den == 0 { 1.0 } else { num as f64 / den as f64 }
}

impl Counts {
    fn acc(&self) -> f64 {
        match (self.truth, self.pred) {
            (0, 0) => 1.0,
            (0, _) => 0.0,
            (t, _) => self.both as f64 / t as f64,
        }
    }

    fn iou(&self) -> f64 {
        ratio_or_one(self.both, self.truth + self.pred - self.both)
    }
}

/// Change-detection metrics of a final belief against the prior and the truth.
pub fn compute_metrics(
    prior: &OccupancyGrid,
    truth: &OccupancyGrid,
    belief: &OccupancyGrid,
    seen: &Mask,
    explorable: &Mask,
) -> Result<Metrics> {
    check_dims(prior, truth, "compute_metrics")?;
    check_dims(prior, belief, "compute_metrics")?;
    check_mask(prior, seen, "compute_metrics")?;
    check_mask(prior, explorable, "compute_metrics")?;
    let mut all = Counts::default();
    let mut masked = Counts::default();
    let (mut free, mut free_seen) = (0usize, 0usize);
    for i in 0..prior.geometry().len() {
        if !explorable.at(i) {
            continue;
        }
        let (p, t, b) = (prior.is_occupied(i), truth.is_occupied(i), belief.is_occupied(i));
        if !t {
            free += 1;
            free_seen += seen.at(i) as usize;
        }
        let changed = p != t;
        let predicted = b != p;
        let plus_t = !p && t;
        let plus_p = !p && b;
        let minus_t = p && !t;
        let minus_p = p && !b;
        let add = |c: &mut Counts| {
            c.truth += changed as usize;
            c.pred += predicted as usize;
            c.both += (changed && predicted) as usize;
            c.plus_inter += (plus_t && plus_p) as usize;
            c.plus_union += (plus_t || plus_p) as usize;
            c.minus_inter += (minus_t && minus_p) as usize;
            c.minus_union += (minus_t || minus_p) as usize;
        };
        add(&mut all);
        if seen.at(i) {
            add(&mut masked);
        }
    }
    Ok(Metrics {
        seen_pct: percent(free_seen, free),
        acc: all.acc(),
        iou_plus: ratio_or_one(all.plus_inter, all.plus_union),
        iou_minus: ratio_or_one(all.minus_inter, all.minus_union),
        iou: all.iou(),
        m_acc: masked.acc(),
        m_iou_plus: ratio_or_one(masked.plus_inter, masked.plus_union),
        m_iou_minus: ratio_or_one(masked.minus_inter, masked.minus_union),
        m_iou: masked.iou(),
    })
}

fn percent(num: usize, den: usize) -> f64 {
    if den == 0 { 0.0 } else { 100.0 * num as f64 / den as f64 }
}

/// Metrics sample at step `t` of an episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: usize,
    pub acc: f64,
    pub iou: f64,
    pub seen_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub metrics: Metrics,
    pub curves: Vec<CurvePoint>,
}
