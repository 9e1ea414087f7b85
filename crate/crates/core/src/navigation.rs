//! Real-time navigation over a precomputed robust front.
//!
//! The navigated point is a convex combination of two neighbouring anchors
//! of the robust front. The same coefficients blend the anchors' NSR values,
//! and the MO marker comes from a ray intersection with the nominal front.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{MaroError, Result};
use crate::price::{report_from, PriceFlags};
use crate::replicated::Scalarization;

/// One precomputed solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub objectives: Vec<f64>,
    /// HNV.
    pub x: Vec<f64>,
    /// WSV at the nominal scenario.
    pub y: Vec<f64>,
    /// NSR objective values (robust anchors only).
    #[serde(default)]
    pub nsr: Option<Vec<f64>>,
    /// Re-optimized WSV (robust anchors only).
    #[serde(default)]
    pub y_nsr: Option<Vec<f64>>,
}

/// Immutable data shared by all sessions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavigationData {
    pub objective_names: Vec<String>,
    pub hnv_names: Vec<String>,
    pub wsv_names: Vec<String>,
    pub robust: Vec<Anchor>,
    pub nominal: Vec<Anchor>,
}

impl NavigationData {
    /// Sorts both fronts by the first objective and checks shapes.
    pub fn new(
        objective_names: Vec<String>,
        hnv_names: Vec<String>,
        wsv_names: Vec<String>,
        mut robust: Vec<Anchor>,
        mut nominal: Vec<Anchor>,
    ) -> Result<Self> {
        if robust.is_empty() || nominal.is_empty() {
            return Err(MaroError::EmptyFront);
        }
        let m = objective_names.len();
        if m != 2 {
            return Err(MaroError::NotBiObjective(m));
        }
        for (i, a) in robust.iter().enumerate() {
            check_dims(a, m, hnv_names.len(), wsv_names.len())?;
            match &a.nsr {
                Some(v) if v.len() == m => {}
                _ => return Err(MaroError::MissingNsr(i)),
            }
        }
        for a in &nominal {
            check_dims(a, m, hnv_names.len(), wsv_names.len())?;
        }
        let by_first = |a: &Anchor, b: &Anchor| a.objectives[0].total_cmp(&b.objectives[0]);
        robust.sort_by(by_first);
        nominal.sort_by(by_first);
        Ok(Self {
            objective_names,
            hnv_names,
            wsv_names,
            robust,
            nominal,
        })
    }

    pub fn objective_index(&self, name: &str) -> Result<usize> {
        self.objective_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| MaroError::UnknownObjective(name.to_string()))
    }

    pub fn nominal_objectives(&self) -> Vec<Vec<f64>> {
        self.nominal.iter().map(|a| a.objectives.clone()).collect()
    }

    /// Per objective `[min, max]` over the robust front.
    pub fn ranges(&self) -> Vec<[f64; 2]> {
        (0..self.objective_names.len())
            .map(|j| {
                self.robust.iter().fold([f64::INFINITY, f64::NEG_INFINITY], |r, a| {
                    [r[0].min(a.objectives[j]), r[1].max(a.objectives[j])]
                })
            })
            .collect()
    }
}

fn check_dims(a: &Anchor, m: usize, nx: usize, ny: usize) -> Result<()> {
    let checks = [("anchor objectives", m, a.objectives.len()), ("anchor HNV", nx, a.x.len()), ("anchor WSV", ny, a.y.len())];
    for (context, expected, got) in checks {
        if expected != got {
            return Err(MaroError::DimensionMismatch {
                context: context.into(),
                expected,
                got,
            });
        }
    }
    Ok(())
}

/// Position on the robust polyline: anchor `seg` blended with `seg + 1` by
/// `s`. `s == 0` sits exactly on `seg`, `s == 1` exactly on `seg + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Position {
    seg: usize,
    s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Markers {
    pub nsr: Vec<f64>,
    pub mo: Vec<f64>,
    pub price: Vec<f64>,
    pub alpha: f64,
    pub flags: PriceFlags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variables {
    pub hnv: Vec<f64>,
    pub wsv: Vec<f64>,
    pub wsv_nsr: Vec<f64>,
    /// Variables of the comparable nominal-front point.
    pub nominal_hnv: Vec<f64>,
    pub nominal_wsv: Vec<f64>,
    /// Blended from two anchors, not re-optimized.
    pub interpolated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoveReport {
    pub objective: String,
    pub requested: f64,
    pub achieved: f64,
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub lambda: Vec<f64>,
    pub f_nav: Vec<f64>,
    pub markers: Markers,
    pub variables: Variables,
    /// Upper bounds; `None` means unbounded.
    pub restrictions: Vec<Option<f64>>,
    pub last_move: Option<MoveReport>,
}

#[derive(Debug, Clone)]
pub struct NavigationSession {
    data: Arc<NavigationData>,
    pos: Position,
    restrictions: Vec<Option<f64>>,
    last_move: Option<MoveReport>,
    snapshot: Snapshot,
}

fn blend(a: &[f64], b: &[f64], s: f64) -> Vec<f64> {
    if s == 0.0 {
        return a.to_vec();
    }
    if s == 1.0 {
        return b.to_vec();
    }
    a.iter().zip(b).map(|(x, y)| x * (1.0 - s) + y * s).collect()
}

fn blend_weighted(vectors: &[&[f64]], lambda: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; vectors.first().map_or(0, |v| v.len())];
    let support: Vec<usize> = (0..lambda.len()).filter(|&i| lambda[i] > 0.0).collect();
    if let [i] = support[..] {
        return vectors[i].to_vec();
    }
    for &i in &support {
        for (o, v) in out.iter_mut().zip(vectors[i]) {
            *o += lambda[i] * v;
        }
    }
    out
}

impl NavigationSession {
    /// Opens a session at the balanced point: uniform over the two middle
    /// anchors, or the middle anchor for an odd count.
    pub fn open(data: Arc<NavigationData>) -> Result<Self> {
        let pos = initial_position(data.robust.len());
        let m = data.objective_names.len();
        let snapshot = compute_snapshot(&data, pos, &vec![None; m], None)?;
        Ok(Self {
            data,
            pos,
            restrictions: vec![None; m],
            last_move: None,
            snapshot,
        })
    }

    pub fn data(&self) -> &Arc<NavigationData> {
        &self.data
    }

    pub fn snapshot(&self) -> &Snapshot {
        &self.snapshot
    }

    /// Moves objective `j` to `target` along the front, staying as close as
    /// possible to the current values of the other objectives. Targets that
    /// cannot be reached are clamped and reported in `last_move`.
    pub fn move_slider(&mut self, j: usize, target: f64) -> Result<&Snapshot> {
        self.check_objective(j)?;
        if !target.is_finite() {
            return Err(MaroError::InvalidSpec(format!("slider target must be finite, got {target}")));
        }
        let pos = best_position(&self.data, &self.restrictions, &self.snapshot.f_nav, j, target)
            .ok_or(MaroError::InfeasibleRestrictions)?;
        self.commit(pos, self.restrictions.clone(), Some((j, target)))
    }

    /// Sets (or with `None` clears) an upper bound on objective `j`. A
    /// violated bound moves the navigated point onto it.
    pub fn set_restriction(&mut self, j: usize, bound: Option<f64>) -> Result<&Snapshot> {
        self.check_objective(j)?;
        let bound = match bound {
            Some(b) if b.is_nan() => {
                return Err(MaroError::InvalidSpec("restriction must not be NaN".into()))
            }
            Some(b) if b == f64::INFINITY => None,
            other => other,
        };
        let mut restrictions = self.restrictions.clone();
        restrictions[j] = bound;
        if !any_feasible(&self.data, &restrictions) {
            return Err(MaroError::InfeasibleRestrictions);
        }
        let current = self.snapshot.f_nav.clone();
        let violated = restrictions
            .iter()
            .zip(&current)
            .any(|(r, f)| matches!(r, Some(b) if f > b));
        let pos = if violated {
            let target = restrictions[j].unwrap_or(current[j]);
            best_position(&self.data, &restrictions, &current, j, target)
                .ok_or(MaroError::InfeasibleRestrictions)?
        } else {
            self.pos
        };
        self.last_move = None;
        self.commit(pos, restrictions, None)
    }

    /// Back to the balanced point without restrictions.
    pub fn reset(&mut self) -> Result<&Snapshot> {
        let m = self.data.objective_names.len();
        self.last_move = None;
        self.commit(initial_position(self.data.robust.len()), vec![None; m], None)
    }

    fn check_objective(&self, j: usize) -> Result<()> {
        if j >= self.data.objective_names.len() {
            return Err(MaroError::UnknownObjective(j.to_string()));
        }
        Ok(())
    }

    fn commit(
        &mut self,
        pos: Position,
        restrictions: Vec<Option<f64>>,
        request: Option<(usize, f64)>,
    ) -> Result<&Snapshot> {
        let probe = compute_snapshot(&self.data, pos, &restrictions, None)?;
        let last_move = request.map(|(j, target)| {
            let achieved = probe.f_nav[j];
            MoveReport {
                objective: self.data.objective_names[j].clone(),
                requested: target,
                achieved,
                clamped: (achieved - target).abs() > 1e-9 * (1.0 + target.abs()),
            }
        });
        let mut snapshot = probe;
        snapshot.last_move = last_move.clone();
        self.pos = pos;
        self.restrictions = restrictions;
        self.last_move = last_move;
        self.snapshot = snapshot;
        Ok(&self.snapshot)
    }
}

fn initial_position(n: usize) -> Position {
    if n == 1 {
        Position { seg: 0, s: 0.0 }
    } else if n.is_multiple_of(2) {
        Position { seg: n / 2 - 1, s: 0.5 }
    } else {
        Position { seg: n / 2, s: 0.0 }
    }
}

/// Feasible `s` interval on segment `seg` under the restrictions.
fn feasible_interval(data: &NavigationData, restrictions: &[Option<f64>], seg: usize) -> Option<(f64, f64)> {
    let a = &data.robust[seg].objectives;
    let b = data.robust.get(seg + 1).map_or(a, |p| &p.objectives);
    let single = data.robust.len() == 1;
    let (mut lo, mut hi): (f64, f64) = (0.0, if single { 0.0 } else { 1.0 });
    for (r, bound) in restrictions.iter().enumerate() {
        let Some(bound) = *bound else { continue };
        let (fa, fb) = (a[r], b[r]);
        let slope = fb - fa;
        if slope == 0.0 {
            if fa > bound {
                return None;
            }
            continue;
        }
        let t = (bound - fa) / slope;
        if slope > 0.0 {
            hi = hi.min(t);
        } else {
            lo = lo.max(t);
        }
    }
    (lo <= hi).then_some((lo, hi))
}

fn segments(data: &NavigationData) -> usize {
    data.robust.len().saturating_sub(1).max(1)
}

fn any_feasible(data: &NavigationData, restrictions: &[Option<f64>]) -> bool {
    (0..segments(data)).any(|k| feasible_interval(data, restrictions, k).is_some())
}

/// Minimal deviation from the target, then minimal squared distance of the
/// other objectives from `prev`, then the lowest segment.
fn best_position(
    data: &NavigationData,
    restrictions: &[Option<f64>],
    prev: &[f64],
    j: usize,
    target: f64,
) -> Option<Position> {
    let single = data.robust.len() == 1;
    let mut best: Option<(f64, f64, Position)> = None;
    let scale = 1e-12 * (1.0 + target.abs());
    for k in 0..segments(data) {
        let Some((lo, hi)) = feasible_interval(data, restrictions, k) else { continue };
        let a = &data.robust[k].objectives;
        let b = if single { a } else { &data.robust[k + 1].objectives };
        let slope = b[j] - a[j];
        let other_dist = |s: f64| -> f64 {
            (0..a.len())
                .filter(|&i| i != j)
                .map(|i| {
                    let v = if s == 0.0 {
                        a[i]
                    } else if s == 1.0 {
                        b[i]
                    } else {
                        a[i] * (1.0 - s) + b[i] * s
                    };
                    (v - prev[i]).powi(2)
                })
                .sum()
        };
        let s = if slope != 0.0 {
            let raw = (target - a[j]) / slope;
            snap(raw.clamp(lo, hi), lo, hi)
        } else {
            // constant along the segment: pick s closest to prev in the rest
            let (mut num, mut den) = (0.0, 0.0);
            for i in (0..a.len()).filter(|&i| i != j) {
                let e = b[i] - a[i];
                num += e * (prev[i] - a[i]);
                den += e * e;
            }
            let raw = if den > 0.0 { num / den } else { lo };
            snap(raw.clamp(lo, hi), lo, hi)
        };
        let value = if s == 0.0 {
            a[j]
        } else if s == 1.0 {
            b[j]
        } else {
            a[j] * (1.0 - s) + b[j] * s
        };
        let deviation = (value - target).abs();
        let dist = other_dist(s);
        let better = match &best {
            None => true,
            Some((bd, bo, _)) => deviation < bd - scale || (deviation <= bd + scale && dist < *bo),
        };
        if better {
            best = Some((deviation, dist, Position { seg: k, s }));
        }
    }
    best.map(|(_, _, p)| p)
}

/// Rounds `s` to the interval ends when within a few ulps so anchors are hit
/// exactly.
fn snap(s: f64, lo: f64, hi: f64) -> f64 {
    let s = s.clamp(lo, hi);
    if s.abs() <= 1e-14 {
        0.0
    } else if (1.0 - s).abs() <= 1e-14 {
        1.0
    } else {
        s
    }
}

fn compute_snapshot(
    data: &NavigationData,
    pos: Position,
    restrictions: &[Option<f64>],
    last_move: Option<MoveReport>,
) -> Result<Snapshot> {
    let n = data.robust.len();
    let a = &data.robust[pos.seg];
    let b = data.robust.get(pos.seg + 1).unwrap_or(a);
    let s = if n == 1 { 0.0 } else { pos.s };
    let mut lambda = vec![0.0; n];
    lambda[pos.seg] = 1.0 - s;
    if s > 0.0 {
        lambda[pos.seg + 1] = s;
    }
    let f_nav = blend(&a.objectives, &b.objectives, s);
    let missing = |i: usize| MaroError::MissingNsr(i);
    let nsr_a = a.nsr.as_ref().ok_or_else(|| missing(pos.seg))?;
    let nsr_b = b.nsr.as_ref().ok_or_else(|| missing(pos.seg + 1))?;
    let nsr = blend(nsr_a, nsr_b, s);
    let y_nsr_a = a.y_nsr.as_deref().unwrap_or(&a.y);
    let y_nsr_b = b.y_nsr.as_deref().unwrap_or(&b.y);
    let nominal = data.nominal_objectives();
    let report = report_from(
        f_nav.clone(),
        nsr.clone(),
        Vec::new(),
        &nominal,
        Scalarization::unit(f_nav.len(), 0),
    )?;
    let nominal_x: Vec<&[f64]> = data.nominal.iter().map(|p| p.x.as_slice()).collect();
    let nominal_y: Vec<&[f64]> = data.nominal.iter().map(|p| p.y.as_slice()).collect();
    Ok(Snapshot {
        lambda,
        f_nav,
        markers: Markers {
            nsr,
            mo: report.f_mo,
            price: report.p_r,
            alpha: report.alpha_star,
            flags: report.flags,
        },
        variables: Variables {
            hnv: blend(&a.x, &b.x, s),
            wsv: blend(&a.y, &b.y, s),
            wsv_nsr: blend(y_nsr_a, y_nsr_b, s),
            nominal_hnv: blend_weighted(&nominal_x, &report.intersection),
            nominal_wsv: blend_weighted(&nominal_y, &report.intersection),
            interpolated: s > 0.0 && s < 1.0,
        },
        restrictions: restrictions.to_vec(),
        last_move,
    })
}
