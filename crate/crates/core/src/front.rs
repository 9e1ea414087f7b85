//! Bi-objective front approximation with weighted-sum solves.
//!
//! Points are kept in normalized objective space `q = (f - ideal) / (nadir -
//! ideal)`, where ideal and nadir come from the two lexicographic extreme
//! compromises. Each solved point carries the normal of its supporting line.
//! For a segment between neighbours the outer vertex is the intersection of
//! their supporting lines; the gap is its distance to the segment.

use serde::{Deserialize, Serialize};

use crate::error::{MaroError, Result};
use crate::replicated::{ParetoPoint, Scalarization, SolveMode, SolveRequest};

/// Slack on the first-stage optimum in lexicographic solves.
pub const LEXICOGRAPHIC_SLACK: f64 = 1e-6;
const SAME_POINT: f64 = 1e-9;
const DOMINANCE_TOL: f64 = 1e-6;

pub trait FrontPoint {
    fn objectives(&self) -> &[f64];
}

impl FrontPoint for ParetoPoint {
    fn objectives(&self) -> &[f64] {
        &self.objectives
    }
}

impl FrontPoint for Vec<f64> {
    fn objectives(&self) -> &[f64] {
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichOptions {
    pub eps: f64,
    pub max_solves: usize,
}

impl Default for SandwichOptions {
    fn default() -> Self {
        Self {
            eps: 0.01,
            max_solves: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FrontPlan {
    Sandwich(SandwichOptions),
    /// The two extreme compromises plus `points - 2` weights evenly spaced in
    /// normalized objective space.
    Schedule { points: usize },
}

impl Default for FrontPlan {
    fn default() -> Self {
        FrontPlan::Sandwich(SandwichOptions::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub ideal: Vec<f64>,
    pub nadir: Vec<f64>,
}

impl Normalization {
    pub fn range(&self, i: usize) -> f64 {
        let r = self.nadir[i] - self.ideal[i];
        if r > 1e-12 {
            r
        } else {
            1.0
        }
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        f.iter()
            .enumerate()
            .map(|(i, v)| (v - self.ideal[i]) / self.range(i))
            .collect()
    }

    pub fn identity(m: usize) -> Self {
        Self {
            ideal: vec![0.0; m],
            nadir: vec![1.0; m],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontApproximation<P> {
    /// Ascending in the first objective, mutually non-dominated.
    pub points: Vec<P>,
    /// Supporting-line normal of each point in normalized space.
    pub normals: Vec<Vec<f64>>,
    /// Sandwich gap of each segment between neighbours (0 when certified).
    pub segment_gaps: Vec<f64>,
    /// Largest remaining gap.
    pub quality: f64,
    pub gap_history: Vec<f64>,
    pub normalization: Normalization,
    pub solves: usize,
    /// Solves after the extreme compromises.
    pub refinement_solves: usize,
    pub warnings: Vec<String>,
    pub mode: Option<SolveMode>,
}

impl<P: FrontPoint> FrontApproximation<P> {
    pub fn with_mode(mut self, mode: SolveMode) -> Self {
        self.mode = Some(mode);
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn objective_vectors(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|p| p.objectives().to_vec()).collect()
    }
}

/// Per-objective lexicographic optima; `points[j]` minimizes `f_j` first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremeCompromises<P> {
    pub points: Vec<P>,
}

/// Minimizes `f_j`, then the other objective with `f_j <= f_j* + 1e-6`.
pub fn extreme_compromises<P, F>(solve: &mut F) -> Result<ExtremeCompromises<P>>
where
    P: FrontPoint,
    F: FnMut(&SolveRequest) -> Result<P>,
{
    let mut points = Vec::with_capacity(2);
    for j in 0..2 {
        let first = solve(&SolveRequest::new(Scalarization::unit(2, j)))?;
        let bound = first.objectives()[j] + LEXICOGRAPHIC_SLACK;
        let req = SolveRequest::new(Scalarization::unit(2, 1 - j)).with_bound(j, bound);
        let second = solve(&req)?;
        points.push(second);
    }
    Ok(ExtremeCompromises { points })
}

struct Node<P> {
    id: usize,
    point: P,
    q: [f64; 2],
    normal: [f64; 2],
}

struct Builder<P> {
    nodes: Vec<Node<P>>,
    next_id: usize,
    /// Segments (by node ids) proven to lie on the front.
    certified: Vec<(usize, usize)>,
    /// Segments excluded from refinement after a non-convexity warning.
    withdrawn: Vec<(usize, usize)>,
    norm: Normalization,
    warnings: Vec<String>,
    solves: usize,
}

impl<P: FrontPoint> Builder<P> {
    fn q(&self, p: &P) -> [f64; 2] {
        let v = self.norm.apply(p.objectives());
        [v[0], v[1]]
    }

    fn key(&self, i: usize) -> (usize, usize) {
        (self.nodes[i].id, self.nodes[i + 1].id)
    }

    fn is_withdrawn(&self, i: usize) -> bool {
        self.withdrawn.contains(&self.key(i))
    }

    fn certify(&mut self, i: usize) {
        let k = self.key(i);
        self.certified.push(k);
    }

    fn withdraw(&mut self, i: usize) {
        let k = self.key(i);
        self.withdrawn.push(k);
    }

    fn gap(&self, i: usize) -> f64 {
        if self.certified.contains(&self.key(i)) {
            return 0.0;
        }
        segment_gap(&self.nodes[i], &self.nodes[i + 1])
    }

    fn gaps(&self) -> Vec<f64> {
        (0..self.nodes.len().saturating_sub(1)).map(|i| self.gap(i)).collect()
    }

    /// Weights in original objective space for a normalized-space normal.
    fn request(&self, n: [f64; 2]) -> Result<SolveRequest> {
        let w = [n[0] / self.norm.range(0), n[1] / self.norm.range(1)];
        Ok(SolveRequest::new(Scalarization::weighted_sum(&w)?))
    }

    /// Some point of the current interpolant is better than `q` by more than
    /// the tolerance in both objectives.
    fn dominated_by_interpolant(&self, q: [f64; 2]) -> bool {
        let t = DOMINANCE_TOL;
        self.nodes.windows(2).any(|w| {
            let (a, b) = (w[0].q, w[1].q);
            let mut lo: f64 = 0.0;
            let mut hi: f64 = 1.0;
            for k in 0..2 {
                // a_k + s (b_k - a_k) <= q_k - t
                let d = b[k] - a[k];
                let rhs = q[k] - t - a[k];
                if d.abs() < 1e-15 {
                    if rhs < 0.0 {
                        return false;
                    }
                } else if d > 0.0 {
                    hi = hi.min(rhs / d);
                } else {
                    lo = lo.max(rhs / d);
                }
            }
            lo <= hi
        }) || self
            .nodes
            .iter()
            .any(|n| n.q[0] <= q[0] - t && n.q[1] <= q[1] - t)
    }

    /// Inserts a solved point in first-objective order; returns false (with a
    /// warning) if it duplicates or is dominated by the current front.
    fn insert(&mut self, point: P, normal: [f64; 2]) -> bool {
        let q = self.q(&point);
        if self
            .nodes
            .iter()
            .any(|n| (n.q[0] - q[0]).abs() <= SAME_POINT && (n.q[1] - q[1]).abs() <= SAME_POINT)
        {
            return false;
        }
        if self.dominated_by_interpolant(q) {
            self.warnings.push(format!(
                "non-convexity: point {:?} is dominated by the inner approximation",
                point.objectives()
            ));
            return false;
        }
        // drop nodes the new point dominates
        let before = self.nodes.len();
        self.nodes
            .retain(|n| !(q[0] <= n.q[0] + SAME_POINT && q[1] <= n.q[1] + SAME_POINT));
        if self.nodes.len() < before {
            self.warnings.push(format!(
                "{} point(s) replaced by dominating point {:?}",
                before - self.nodes.len(),
                point.objectives()
            ));
        }
        let pos = self.nodes.iter().position(|n| n.q[0] > q[0]).unwrap_or(self.nodes.len());
        let id = self.next_id;
        self.next_id += 1;
        self.nodes.insert(
            pos,
            Node {
                id,
                point,
                q,
                normal,
            },
        );
        true
    }

    fn finish(self, gap_history: Vec<f64>, refinement_solves: usize) -> FrontApproximation<P> {
        let segment_gaps = self.gaps();
        let quality = segment_gaps.iter().fold(0.0f64, |a, &b| a.max(b));
        let normals = self.nodes.iter().map(|n| n.normal.to_vec()).collect();
        FrontApproximation {
            points: self.nodes.into_iter().map(|n| n.point).collect(),
            normals,
            segment_gaps,
            quality,
            gap_history,
            normalization: self.norm,
            solves: self.solves,
            refinement_solves,
            warnings: self.warnings,
            mode: None,
        }
    }
}

fn segment_gap<P>(a: &Node<P>, b: &Node<P>) -> f64 {
    let (na, nb) = (a.normal, b.normal);
    let det = na[0] * nb[1] - na[1] * nb[0];
    let seg = [a.q[1] - b.q[1], b.q[0] - a.q[0]];
    let len = (seg[0] * seg[0] + seg[1] * seg[1]).sqrt();
    if det.abs() < 1e-14 || len < 1e-15 {
        return 0.0;
    }
    let ra = na[0] * a.q[0] + na[1] * a.q[1];
    let rb = nb[0] * b.q[0] + nb[1] * b.q[1];
    let v = [(ra * nb[1] - rb * na[1]) / det, (na[0] * rb - nb[0] * ra) / det];
    let ns = [seg[0] / len, seg[1] / len];
    let gap = ns[0] * (a.q[0] - v[0]) + ns[1] * (a.q[1] - v[1]);
    gap.max(0.0)
}

fn start<P, F>(solve: &mut F) -> Result<Builder<P>>
where
    P: FrontPoint,
    F: FnMut(&SolveRequest) -> Result<P>,
{
    let mut calls = 0;
    let mut counted = |req: &SolveRequest| {
        calls += 1;
        solve(req)
    };
    let ext = extreme_compromises(&mut counted)?;
    let [a, b]: [P; 2] = ext
        .points
        .try_into()
        .map_err(|_| MaroError::NotBiObjective(0))?;
    if a.objectives().len() != 2 {
        return Err(MaroError::NotBiObjective(a.objectives().len()));
    }
    let norm = Normalization {
        ideal: vec![a.objectives()[0], b.objectives()[1]],
        nadir: vec![b.objectives()[0], a.objectives()[1]],
    };
    let mut builder = Builder {
        nodes: Vec::new(),
        next_id: 1,
        certified: Vec::new(),
        withdrawn: Vec::new(),
        norm,
        warnings: Vec::new(),
        solves: calls,
    };
    let qa = builder.q(&a);
    builder.nodes.push(Node {
        id: 0,
        point: a,
        q: qa,
        normal: [1.0, 0.0],
    });
    builder.insert(b, [0.0, 1.0]);
    Ok(builder)
}

/// Sandwich refinement: repeatedly solves the weighted sum normal to the
/// segment with the largest gap until every gap is below `eps` or the solve
/// budget (extreme compromises included) is spent.
pub fn sandwich<P, F>(solve: &mut F, opts: &SandwichOptions) -> Result<FrontApproximation<P>>
where
    P: FrontPoint,
    F: FnMut(&SolveRequest) -> Result<P>,
{
    let mut b = start(solve)?;
    let mut history = Vec::new();
    let mut refinement = 0;
    loop {
        let gaps = b.gaps();
        let open: Vec<(usize, f64)> = gaps
            .iter()
            .copied()
            .enumerate()
            .filter(|(i, _)| !b.is_withdrawn(*i))
            .collect();
        history.push(gaps.iter().fold(0.0f64, |a, &g| a.max(g)));
        let Some(&(i, gap)) = open
            .iter()
            .max_by(|x, y| x.1.total_cmp(&y.1).then(y.0.cmp(&x.0)))
        else {
            break;
        };
        if gap <= opts.eps || b.solves >= opts.max_solves {
            break;
        }
        let (qa, qb) = (b.nodes[i].q, b.nodes[i + 1].q);
        let raw = [qa[1] - qb[1], qb[0] - qa[0]];
        let s = raw[0] + raw[1];
        let n = [raw[0] / s, raw[1] / s];
        let req = b.request(n)?;
        let p = solve(&req)?;
        b.solves += 1;
        refinement += 1;
        let q = b.q(&p);
        let value = n[0] * q[0] + n[1] * q[1];
        let level = n[0] * qa[0] + n[1] * qa[1];
        if value >= level - SAME_POINT {
            if value > level + DOMINANCE_TOL {
                b.warnings.push(format!(
                    "non-convexity: weighted-sum optimum {:?} lies above the inner segment",
                    p.objectives()
                ));
                b.withdraw(i);
            } else {
                // the segment is part of the front
                b.certify(i);
            }
            continue;
        }
        if !b.insert(p, n) {
            b.withdraw(i);
        }
    }
    Ok(b.finish(history, refinement))
}

/// Extreme compromises plus evenly spaced normalized weights.
pub fn weight_schedule<P, F>(solve: &mut F, points: usize) -> Result<FrontApproximation<P>>
where
    P: FrontPoint,
    F: FnMut(&SolveRequest) -> Result<P>,
{
    let mut b = start(solve)?;
    let interior = points.saturating_sub(2);
    let mut refinement = 0;
    for k in 1..=interior {
        let a = k as f64 / (interior + 1) as f64;
        let n = [a, 1.0 - a];
        let req = b.request(n)?;
        let p = solve(&req)?;
        b.solves += 1;
        refinement += 1;
        b.insert(p, n);
    }
    let gaps = b.gaps();
    let history = vec![gaps.iter().fold(0.0f64, |a, &g| a.max(g))];
    Ok(b.finish(history, refinement))
}

pub fn approximate<P, F>(solve: &mut F, plan: &FrontPlan) -> Result<FrontApproximation<P>>
where
    P: FrontPoint,
    F: FnMut(&SolveRequest) -> Result<P>,
{
    match plan {
        FrontPlan::Sandwich(opts) => sandwich(solve, opts),
        FrontPlan::Schedule { points } => weight_schedule(solve, *points),
    }
}

/// Indices of the points on the lower-left convex hull of a bi-objective
/// point set, ascending in the first objective. Dominated points and points
/// above the hull are dropped.
pub fn lower_hull(points: &[Vec<f64>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a][0]
            .total_cmp(&points[b][0])
            .then(points[a][1].total_cmp(&points[b][1]))
            .then(a.cmp(&b))
    });
    let mut frontier: Vec<usize> = Vec::with_capacity(order.len());
    for i in order {
        if frontier.last().is_some_and(|&k| points[k][1] <= points[i][1]) {
            continue;
        }
        frontier.push(i);
    }
    let cross = |o: &[f64], a: &[f64], b: &[f64]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<usize> = Vec::with_capacity(frontier.len());
    for i in frontier {
        while hull.len() >= 2 {
            let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            if cross(&points[o], &points[a], &points[i]) <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    hull
}

/// Value of the piecewise-linear interpolant through `points` (ascending in
/// the first coordinate) at `x`, or `None` outside its range.
pub fn interpolate(points: &[Vec<f64>], x: f64) -> Option<f64> {
    let first = points.first()?;
    let last = points.last()?;
    if x < first[0] - 1e-12 || x > last[0] + 1e-12 {
        return None;
    }
    if points.len() == 1 {
        return Some(first[1]);
    }
    for w in points.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if x <= b[0] + 1e-12 {
            let dx = b[0] - a[0];
            if dx <= 0.0 {
                return Some(a[1].min(b[1]));
            }
            let s = ((x - a[0]) / dx).clamp(0.0, 1.0);
            return Some(a[1] + s * (b[1] - a[1]));
        }
    }
    Some(last[1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    /// Largest amount by which a point of the first front lies above the
    /// second front's interpolant (normalized; negative means strictly
    /// below).
    pub max_exceedance: f64,
    /// First-objective value where it occurs.
    pub at: f64,
    /// Same measure between the two interpolants, which also counts the
    /// first front's own interpolation error.
    pub interpolant_exceedance: f64,
    pub shared_range: [f64; 2],
}

/// Compares two bi-objective fronts over their shared first-objective range in
/// the given normalization.
pub fn dominance_check(
    front_a: &[Vec<f64>],
    front_b: &[Vec<f64>],
    norm: &Normalization,
) -> Result<DominanceReport> {
    if front_a.is_empty() || front_b.is_empty() {
        return Err(MaroError::EmptyFront);
    }
    for p in front_a.iter().chain(front_b) {
        if p.len() != 2 {
            return Err(MaroError::NotBiObjective(p.len()));
        }
    }
    let sorted = |f: &[Vec<f64>]| {
        let mut v: Vec<Vec<f64>> = f.iter().map(|p| norm.apply(p)).collect();
        v.sort_by(|a, b| a[0].total_cmp(&b[0]));
        v
    };
    let (a, b) = (sorted(front_a), sorted(front_b));
    let lo = a[0][0].max(b[0][0]);
    let hi = a[a.len() - 1][0].min(b[b.len() - 1][0]);
    if lo > hi + 1e-12 {
        return Err(MaroError::DisjointRanges);
    }
    let mut best = (f64::NEG_INFINITY, lo);
    for p in &a {
        if let Some(v) = interpolate(&b, p[0]) {
            let d = p[1] - v;
            if d > best.0 {
                best = (d, p[0]);
            }
        }
    }
    let mut interp = f64::NEG_INFINITY;
    let xs = a.iter().chain(&b).map(|p| p[0]).chain([lo, hi]);
    for x in xs {
        if let (Some(va), Some(vb)) = (interpolate(&a, x), interpolate(&b, x)) {
            interp = interp.max(va - vb);
        }
    }
    if !best.0.is_finite() {
        // no vertex of the first front inside the shared range
        best = (interp, lo);
    }
    Ok(DominanceReport {
        max_exceedance: best.0,
        at: best.1,
        interpolant_exceedance: interp,
        shared_range: [lo, hi],
    })
}
