//! Price of robustness.
//!
//! For a robust design `x*` the WSV are re-optimized at the nominal scenario
//! (NSR). The improvement direction `d = F_nsr - F_maro` is followed from
//! `F_maro` until it meets the nominal front at `F_mo = F_maro + α d`; the
//! price is `p_R = F_nsr - F_mo`.

use serde::{Deserialize, Serialize};

use crate::error::{MaroError, Result};
use crate::front::{lower_hull, FrontApproximation};
use crate::nlp::{self, NlpOptions, NlpProblem, NlpStatus, SparseRow};
use crate::par;
use crate::problem::ProblemSpec;
use crate::replicated::{ParetoPoint, Scalarization};

/// Below this infinity norm `d` counts as zero.
pub const D_ZERO_TOL: f64 = 1e-9;
const SEGMENT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PriceFlags {
    pub d_zero: bool,
    pub ray_misses_front: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NsrSolution {
    pub y: Vec<f64>,
    pub objectives: Vec<f64>,
    pub constraints: Vec<f64>,
    pub status: NlpStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayIntersection {
    pub alpha: f64,
    pub f_mo: Vec<f64>,
    /// Convex coefficients over the nominal front points, in input order.
    pub lambda: Vec<f64>,
    pub flags: PriceFlags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceReport {
    pub f_maro: Vec<f64>,
    pub f_nsr: Vec<f64>,
    pub y_nsr: Vec<f64>,
    pub d: Vec<f64>,
    pub alpha_star: f64,
    pub f_mo: Vec<f64>,
    pub p_r: Vec<f64>,
    pub intersection: Vec<f64>,
    pub flags: PriceFlags,
    pub preference: Scalarization,
}

/// `min_y w·F(x*, y, u_nom)  s.t.  g <= 0,  F_j <= cap_j`.
struct NsrProblem<'a> {
    spec: &'a ProblemSpec,
    x: &'a [f64],
    u: Vec<f64>,
    weights: &'a [f64],
    cap: Option<&'a [f64]>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl NlpProblem for NsrProblem<'_> {
    fn dim(&self) -> usize {
        self.lower.len()
    }

    fn lower(&self) -> &[f64] {
        &self.lower
    }

    fn upper(&self) -> &[f64] {
        &self.upper
    }

    fn num_constraints(&self) -> usize {
        self.spec.num_constraints() + self.cap.map_or(0, |c| c.len())
    }

    fn evaluate(&self, y: &[f64]) -> Result<(f64, Vec<f64>)> {
        let ev = self.spec.evaluate_unchecked(self.x, y, &self.u)?;
        let value = self.weights.iter().zip(&ev.objectives).map(|(w, f)| w * f).sum();
        let mut rows = ev.constraints;
        if let Some(cap) = self.cap {
            rows.extend(ev.objectives.iter().zip(cap).map(|(f, c)| f - c));
        }
        Ok((value, rows))
    }

    fn gradients(&self, y: &[f64]) -> Result<(Vec<f64>, Vec<SparseRow>)> {
        let nx = self.spec.nx();
        let jac = self.spec.jacobian_unchecked(self.x, y, &self.u)?;
        let mut grad = vec![0.0; y.len()];
        for (w, row) in self.weights.iter().zip(&jac.objectives) {
            for (g, v) in grad.iter_mut().zip(&row[nx..]) {
                *g += w * v;
            }
        }
        let sparse = |row: &[f64]| -> SparseRow {
            row[nx..]
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i, *v))
                .collect()
        };
        let mut rows: Vec<SparseRow> = jac.constraints.iter().map(|r| sparse(r)).collect();
        if self.cap.is_some() {
            rows.extend(jac.objectives.iter().map(|r| sparse(r)));
        }
        Ok((grad, rows))
    }
}

/// Re-optimizes the WSV at the nominal scenario for fixed HNV.
///
/// With `cap` each objective is additionally bounded by the given values
/// (the robust point's objectives), so the result never worsens an objective
/// that carries zero weight. `y0` seeds the solver.
pub fn solve_nsr(
    spec: &ProblemSpec,
    x_star: &[f64],
    preference: &Scalarization,
    cap: Option<&[f64]>,
    y0: Option<&[f64]>,
    opts: &NlpOptions,
) -> Result<NsrSolution> {
    if x_star.len() != spec.nx() {
        return Err(MaroError::DimensionMismatch {
            context: "NSR here-and-now vector".into(),
            expected: spec.nx(),
            got: x_star.len(),
        });
    }
    let m = spec.num_objectives();
    if preference.weights.len() != m {
        return Err(MaroError::DimensionMismatch {
            context: "NSR preference weights".into(),
            expected: m,
            got: preference.weights.len(),
        });
    }
    let u = spec.uncertainty.nominal();
    let feas_tol = opts.feas_tol;
    if spec.ny() == 0 {
        let ev = spec.evaluate_unchecked(x_star, &[], &u)?;
        let violation = ev.constraints.iter().fold(0.0f64, |a, &b| a.max(b));
        if violation > feas_tol {
            return Err(MaroError::NsrInfeasible { violation });
        }
        return Ok(NsrSolution {
            y: Vec::new(),
            objectives: ev.objectives,
            constraints: ev.constraints,
            status: NlpStatus::Optimal,
        });
    }
    let (lower, upper) = spec.y_bounds();
    // loosen the cap by the feasibility tolerance so the robust response
    // itself stays admissible
    let loosened: Option<Vec<f64>> = cap.map(|c| c.iter().map(|v| v + feas_tol).collect());
    let problem = NsrProblem {
        spec,
        x: x_star,
        u: u.clone(),
        weights: &preference.weights,
        cap: loosened.as_deref(),
        lower,
        upper,
    };
    let start = y0.map(<[f64]>::to_vec).unwrap_or_else(|| spec.y_initial());
    let r = nlp::solve(&problem, &start, opts);
    let ev = spec.evaluate_unchecked(x_star, &r.x_opt, &u)?;
    let violation = ev.constraints.iter().fold(0.0f64, |a, &b| a.max(b));
    if violation > feas_tol {
        return Err(MaroError::NsrInfeasible { violation });
    }
    let mut objectives = ev.objectives;
    if let Some(cap) = cap {
        // the cap may be met only within tolerance
        for (f, c) in objectives.iter_mut().zip(cap) {
            if *f > *c && *f <= *c + 2.0 * feas_tol {
                *f = *c;
            }
        }
    }
    Ok(NsrSolution {
        y: r.x_opt,
        objectives,
        constraints: ev.constraints,
        status: r.status,
    })
}

fn sorted_order(front: &[Vec<f64>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..front.len()).collect();
    order.sort_by(|&a, &b| front[a][0].total_cmp(&front[b][0]).then(a.cmp(&b)));
    order
}

fn span(front: &[Vec<f64>], m: usize) -> Vec<f64> {
    (0..m)
        .map(|i| {
            let (lo, hi) = front
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[i]), hi.max(p[i])));
            if hi > lo {
                hi - lo
            } else {
                1.0
            }
        })
        .collect()
}

struct Hit {
    alpha: f64,
    seg: usize,
    s: f64,
}

/// Ray (or line, when `line` is set) through `f` along `d` against the
/// polyline `pts`. Returns every hit as (α, segment, s).
fn hits(f: &[f64], d: &[f64], pts: &[&Vec<f64>], line: bool) -> Vec<Hit> {
    let mut out = Vec::new();
    let dn = d[0].abs().max(d[1].abs());
    for k in 0..pts.len().saturating_sub(1) {
        let (a, b) = (pts[k], pts[k + 1]);
        let e = [b[0] - a[0], b[1] - a[1]];
        let r = [a[0] - f[0], a[1] - f[1]];
        // α d - s e = r
        let det = -d[0] * e[1] + d[1] * e[0];
        let en = e[0].abs().max(e[1].abs());
        if det.abs() <= 1e-14 * dn * en.max(1e-300) {
            // parallel; only a collinear overlap counts
            let cross = d[0] * r[1] - d[1] * r[0];
            if cross.abs() > 1e-12 * dn * (1.0 + r[0].abs().max(r[1].abs())) {
                continue;
            }
            let dd = d[0] * d[0] + d[1] * d[1];
            let ta = (r[0] * d[0] + r[1] * d[1]) / dd;
            let tb = ((b[0] - f[0]) * d[0] + (b[1] - f[1]) * d[1]) / dd;
            let (lo, hi) = if ta <= tb { (ta, tb) } else { (tb, ta) };
            let alpha = 1.0f64.clamp(lo, hi);
            let s = if tb != ta { (alpha - ta) / (tb - ta) } else { 0.0 };
            out.push(Hit { alpha, seg: k, s });
            continue;
        }
        let alpha = (-r[0] * e[1] + r[1] * e[0]) / det;
        let s = (d[0] * r[1] - d[1] * r[0]) / det;
        if !(-SEGMENT_TOL..=1.0 + SEGMENT_TOL).contains(&s) {
            continue;
        }
        if !line && alpha < -SEGMENT_TOL {
            continue;
        }
        out.push(Hit {
            alpha,
            seg: k,
            s: s.clamp(0.0, 1.0),
        });
    }
    out
}

fn point_on(pts: &[&Vec<f64>], seg: usize, s: f64) -> Vec<f64> {
    let a = pts[seg];
    if s == 0.0 || pts.len() == 1 {
        return a.clone();
    }
    let b = pts[seg + 1];
    if s == 1.0 {
        return b.clone();
    }
    a.iter().zip(b).map(|(x, y)| x * (1.0 - s) + y * s).collect()
}

fn lambda_for(order: &[usize], n: usize, seg: usize, s: f64) -> Vec<f64> {
    let mut lambda = vec![0.0; n];
    lambda[order[seg]] = 1.0 - s;
    if s > 0.0 {
        lambda[order[seg + 1]] = s;
    }
    lambda
}

/// Intersects the ray `F_maro + α d` (α ≥ 0) with the piecewise-linear
/// nominal front and keeps the largest α hit.
///
/// `d ≈ 0` projects `F_maro` onto the front along the negative normalized
/// diagonal and reports α = 1. A ray that misses the front snaps to the
/// closer endpoint.
pub fn intersect_nominal_front(
    f_maro: &[f64],
    d: &[f64],
    nominal_front: &[Vec<f64>],
) -> Result<RayIntersection> {
    if nominal_front.is_empty() {
        return Err(MaroError::EmptyFront);
    }
    let m = f_maro.len();
    if m != 2 {
        return Err(MaroError::NotBiObjective(m));
    }
    for p in nominal_front {
        if p.len() != m {
            return Err(MaroError::NotBiObjective(p.len()));
        }
    }
    if d.len() != m || d.iter().any(|v| !v.is_finite()) {
        return Err(MaroError::DimensionMismatch {
            context: "improvement direction".into(),
            expected: m,
            got: d.len(),
        });
    }
    let n = nominal_front.len();
    let order = sorted_order(nominal_front);
    let pts: Vec<&Vec<f64>> = order.iter().map(|&i| &nominal_front[i]).collect();
    let dn = d.iter().fold(0.0f64, |a, v| a.max(v.abs()));

    if dn <= D_ZERO_TOL {
        let range = span(nominal_front, m);
        let diag: Vec<f64> = range.iter().map(|r| -r).collect();
        let flags = PriceFlags {
            d_zero: true,
            ray_misses_front: false,
        };
        let best = hits(f_maro, &diag, &pts, true)
            .into_iter()
            .min_by(|a, b| a.alpha.abs().total_cmp(&b.alpha.abs()));
        let (f_mo, lambda) = match best {
            Some(h) => (point_on(&pts, h.seg, h.s), lambda_for(&order, n, h.seg, h.s)),
            None => {
                let (seg, s) = nearest_endpoint(f_maro, &diag, &pts);
                (point_on(&pts, seg, s), lambda_for(&order, n, seg, s))
            }
        };
        return Ok(RayIntersection {
            alpha: 1.0,
            f_mo,
            lambda,
            flags,
        });
    }

    let single = if n == 1 { on_ray(f_maro, d, pts[0]) } else { None };
    let best = if n == 1 {
        single.map(|alpha| Hit { alpha, seg: 0, s: 0.0 })
    } else {
        hits(f_maro, d, &pts, false)
            .into_iter()
            .fold(None, |best: Option<Hit>, h| match best {
                Some(b) if b.alpha >= h.alpha => Some(b),
                _ => Some(h),
            })
    };
    match best {
        Some(h) => {
            let f_mo = point_on(&pts, h.seg, h.s);
            Ok(RayIntersection {
                alpha: h.alpha,
                f_mo,
                lambda: lambda_for(&order, n, h.seg, h.s),
                flags: PriceFlags::default(),
            })
        }
        None => {
            let (seg, s) = nearest_endpoint(f_maro, d, &pts);
            let e = point_on(&pts, seg, s);
            let dd: f64 = d.iter().map(|v| v * v).sum();
            let alpha = d.iter().zip(e.iter().zip(f_maro)).map(|(di, (ei, fi))| di * (ei - fi)).sum::<f64>() / dd;
            Ok(RayIntersection {
                alpha,
                f_mo: e,
                lambda: lambda_for(&order, n, seg, s),
                flags: PriceFlags {
                    d_zero: false,
                    ray_misses_front: true,
                },
            })
        }
    }
}

/// α with `f + α d = p`, if `p` lies on the ray.
fn on_ray(f: &[f64], d: &[f64], p: &[f64]) -> Option<f64> {
    let dd: f64 = d.iter().map(|v| v * v).sum();
    let alpha = d.iter().zip(p.iter().zip(f)).map(|(di, (pi, fi))| di * (pi - fi)).sum::<f64>() / dd;
    let scale = 1.0 + p.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let off = f
        .iter()
        .zip(d)
        .zip(p)
        .fold(0.0f64, |a, ((fi, di), pi)| a.max((fi + alpha * di - pi).abs()));
    (alpha >= -SEGMENT_TOL && off <= 1e-9 * scale).then_some(alpha)
}

/// Front endpoint closer to the ray's supporting line, as (segment, s).
fn nearest_endpoint(f: &[f64], d: &[f64], pts: &[&Vec<f64>]) -> (usize, f64) {
    let dd: f64 = d.iter().map(|v| v * v).sum();
    let dist = |p: &[f64]| -> f64 {
        let alpha = if dd > 0.0 {
            (d.iter().zip(p.iter().zip(f)).map(|(di, (pi, fi))| di * (pi - fi)).sum::<f64>() / dd).max(0.0)
        } else {
            0.0
        };
        f.iter().zip(d).zip(p).map(|((fi, di), pi)| (fi + alpha * di - pi).powi(2)).sum()
    };
    let last = pts.len() - 1;
    if last == 0 || dist(pts[0]) <= dist(pts[last]) {
        (0, 0.0)
    } else {
        (last - 1, 1.0)
    }
}

/// Weights that produced the point; for a lexicographic second stage the
/// bounded objective, which was minimized first.
pub fn default_preference(point: &ParetoPoint) -> Scalarization {
    let m = point.objectives.len();
    match point.upper_bounds.iter().position(Option::is_some) {
        Some(j) if j < m => Scalarization::unit(m, j),
        _ => point.scalarization.clone(),
    }
}

/// NSR solve for a robust point, capped at its own objective values.
pub fn nsr_for_point(
    spec: &ProblemSpec,
    maro_point: &ParetoPoint,
    preference: &Scalarization,
    opts: &NlpOptions,
) -> Result<NsrSolution> {
    let y0 = nominal_response(maro_point);
    solve_nsr(
        spec,
        &maro_point.solution.x_star,
        preference,
        Some(&maro_point.objectives),
        y0,
        opts,
    )
}

/// Composes the NSR solve and the ray intersection for one robust point.
///
/// The preference defaults to [`default_preference`].
pub fn price(
    spec: &ProblemSpec,
    maro_point: &ParetoPoint,
    nominal_front: &[Vec<f64>],
    preference: Option<&Scalarization>,
    opts: &NlpOptions,
) -> Result<PriceReport> {
    let preference = preference.cloned().unwrap_or_else(|| default_preference(maro_point));
    let nsr = nsr_for_point(spec, maro_point, &preference, opts)?;
    report_from(maro_point.objectives.clone(), nsr.objectives, nsr.y, nominal_front, preference)
}

/// WSV of the highest scenario id, which is the nominal one whenever the set
/// contains it.
fn nominal_response(point: &ParetoPoint) -> Option<&[f64]> {
    point
        .solution
        .y_per_scenario
        .iter()
        .max_by_key(|r| r.scenario_id)
        .map(|r| r.y.as_slice())
}

/// Builds the report from known objective vectors; also used by navigation
/// on interpolated points.
pub fn report_from(
    f_maro: Vec<f64>,
    f_nsr: Vec<f64>,
    y_nsr: Vec<f64>,
    nominal_front: &[Vec<f64>],
    preference: Scalarization,
) -> Result<PriceReport> {
    let d: Vec<f64> = f_nsr.iter().zip(&f_maro).map(|(n, r)| n - r).collect();
    let hit = intersect_nominal_front(&f_maro, &d, nominal_front)?;
    let p_r = if hit.flags.d_zero {
        vec![0.0; f_maro.len()]
    } else {
        f_nsr.iter().zip(&hit.f_mo).map(|(n, o)| n - o).collect()
    };
    Ok(PriceReport {
        f_maro,
        f_nsr,
        y_nsr,
        d,
        alpha_star: hit.alpha,
        f_mo: hit.f_mo,
        p_r,
        intersection: hit.lambda,
        flags: hit.flags,
        preference,
    })
}

/// Where a point of the pricing front comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "index")]
pub enum PricingOrigin {
    /// Vertex of the nominal front.
    Nominal(usize),
    /// NSR point of the robust point with this index.
    Nsr(usize),
}

/// A nominal-scenario achievable point used for ray intersections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricingPoint {
    pub objectives: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub origin: PricingOrigin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontPrices {
    /// Lower convex hull of the nominal vertices and the NSR points,
    /// ascending in the first objective.
    pub pricing_front: Vec<PricingPoint>,
    /// One report per robust point, in front order.
    pub reports: Vec<PriceReport>,
}

impl FrontPrices {
    pub fn pricing_objectives(&self) -> Vec<Vec<f64>> {
        self.pricing_front.iter().map(|p| p.objectives.clone()).collect()
    }
}

/// WSV of a front point at the nominal scenario.
pub fn nominal_wsv(point: &ParetoPoint) -> Vec<f64> {
    nominal_response(point).map(<[f64]>::to_vec).unwrap_or_default()
}

/// Prices every point of a robust front.
///
/// NSR points are achievable at the nominal scenario, so together with the
/// nominal vertices they form a tighter inner approximation of the nominal
/// front; the rays are intersected with its lower convex hull.
pub fn price_front(
    spec: &ProblemSpec,
    robust: &FrontApproximation<ParetoPoint>,
    nominal: &FrontApproximation<ParetoPoint>,
    opts: &NlpOptions,
) -> Result<FrontPrices> {
    if nominal.points.is_empty() {
        return Err(MaroError::EmptyFront);
    }
    let solved: Vec<Result<(Scalarization, NsrSolution)>> = par::map(&robust.points, |p| {
        let pref = default_preference(p);
        nsr_for_point(spec, p, &pref, opts).map(|n| (pref, n))
    });
    let solved = solved.into_iter().collect::<Result<Vec<_>>>()?;
    let mut candidates: Vec<PricingPoint> = nominal
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| PricingPoint {
            objectives: p.objectives.clone(),
            x: p.solution.x_star.clone(),
            y: nominal_wsv(p),
            origin: PricingOrigin::Nominal(i),
        })
        .collect();
    candidates.extend(robust.points.iter().zip(&solved).enumerate().map(|(i, (p, (_, n)))| PricingPoint {
        objectives: n.objectives.clone(),
        x: p.solution.x_star.clone(),
        y: n.y.clone(),
        origin: PricingOrigin::Nsr(i),
    }));
    let objs: Vec<Vec<f64>> = candidates.iter().map(|c| c.objectives.clone()).collect();
    let pricing_front: Vec<PricingPoint> = lower_hull(&objs).into_iter().map(|i| candidates[i].clone()).collect();
    let hull: Vec<Vec<f64>> = pricing_front.iter().map(|p| p.objectives.clone()).collect();
    let reports = robust
        .points
        .iter()
        .zip(solved)
        .map(|(p, (pref, n))| report_from(p.objectives.clone(), n.objectives, n.y, &hull, pref))
        .collect::<Result<Vec<_>>>()?;
    Ok(FrontPrices {
        pricing_front,
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case_study::build_sp1;

    fn seg() -> Vec<Vec<f64>> {
        vec![vec![0.0, 1.0], vec![1.0, 0.0]]
    }

    #[test]
    fn ray_hits_segment_midpoint() {
        let r = intersect_nominal_front(&[1.0, 1.0], &[-0.25, -0.25], &seg()).unwrap();
        assert!((r.alpha - 2.0).abs() < 1e-12);
        assert!((r.f_mo[0] - 0.5).abs() < 1e-12 && (r.f_mo[1] - 0.5).abs() < 1e-12);
        assert!((r.lambda[0] - 0.5).abs() < 1e-12 && (r.lambda[1] - 0.5).abs() < 1e-12);
        assert_eq!(r.flags, PriceFlags::default());
    }

    #[test]
    fn lambda_follows_input_order() {
        let front = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let r = intersect_nominal_front(&[1.0, 1.0], &[-0.25, -0.75], &front).unwrap();
        // 1 - a/4 = s and 1 - 3a/4 = 1 - s give a = 1, s = 3/4
        assert!((r.alpha - 1.0).abs() < 1e-12);
        assert!((r.lambda[1] - 0.25).abs() < 1e-12);
        assert!((r.lambda[0] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn point_on_front_moving_along_it() {
        let r = intersect_nominal_front(&[0.25, 0.75], &[0.25, -0.25], &seg()).unwrap();
        assert!((r.alpha - 1.0).abs() < 1e-12);
        assert!((r.f_mo[0] + r.f_mo[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn largest_alpha_wins() {
        // zig-zag polyline crossed twice by the ray
        let front = vec![vec![0.0, 1.0], vec![0.5, 0.2], vec![1.0, 0.6]];
        let r = intersect_nominal_front(&[0.5, 2.0], &[0.0, -1.0], &front).unwrap();
        assert!((r.alpha - 1.8).abs() < 1e-12);
    }

    #[test]
    fn miss_snaps_to_nearest_endpoint() {
        let r = intersect_nominal_front(&[3.0, 3.0], &[0.0, -1.0], &seg()).unwrap();
        assert!(r.flags.ray_misses_front);
        assert_eq!(r.f_mo, vec![1.0, 0.0]);
        assert_eq!(r.lambda, vec![0.0, 1.0]);
        assert!((r.alpha - 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_direction_is_flagged() {
        let r = intersect_nominal_front(&[1.0, 1.0], &[0.0, 0.0], &seg()).unwrap();
        assert!(r.flags.d_zero);
        assert_eq!(r.alpha, 1.0);
        assert!((r.f_mo[0] - 0.5).abs() < 1e-12);
        let p = report_from(vec![1.0, 1.0], vec![1.0, 1.0], vec![], &seg(), Scalarization::unit(2, 0)).unwrap();
        assert_eq!(p.p_r, vec![0.0, 0.0]);
    }

    #[test]
    fn endpoint_hit_is_exact() {
        let front = vec![vec![0.0, 1.0], vec![1.0, 0.2], vec![2.0, 0.0]];
        let r = intersect_nominal_front(&[2.0, 0.2], &[0.0, -0.2], &front).unwrap();
        assert!(!r.flags.ray_misses_front);
        assert_eq!(r.f_mo, vec![2.0, 0.0]);
        assert!((r.alpha - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(
            intersect_nominal_front(&[1.0, 1.0], &[-1.0, -1.0], &[]),
            Err(MaroError::EmptyFront)
        );
        assert!(intersect_nominal_front(&[1.0, 1.0], &[f64::NAN, -1.0], &seg()).is_err());
    }

    #[test]
    fn nsr_matches_grid_search() {
        let spec = build_sp1();
        let opts = NlpOptions::default();
        for &x in &[0.0, 0.3, 0.5, 0.8, 1.0] {
            for w in [[1.0, 0.0], [0.5, 0.5], [0.2, 0.8], [0.0, 1.0]] {
                let pref = Scalarization::weighted_sum(&w).unwrap();
                let nsr = solve_nsr(&spec, &[x], &pref, None, None, &opts).unwrap();
                let mut best = f64::INFINITY;
                for k in 0..=10_000 {
                    let y = k as f64 / 10_000.0;
                    let ev = spec.evaluate(&[x], &[y], &[0.0]).unwrap();
                    if ev.constraints[0] <= 0.0 {
                        best = best.min(pref.value(&ev.objectives));
                    }
                }
                assert!((pref.value(&nsr.objectives) - best).abs() < 1e-3, "x={x} w={w:?}");
            }
        }
    }

    #[test]
    fn capped_nsr_never_worsens() {
        let spec = build_sp1();
        let cap = [2.0, 0.2];
        let pref = Scalarization::unit(2, 0);
        let nsr = solve_nsr(&spec, &[1.0], &pref, Some(&cap), None, &NlpOptions::default()).unwrap();
        assert!(nsr.objectives[0] <= cap[0] + 1e-6);
        assert!(nsr.objectives[1] <= cap[1] + 1e-6);
        // the cheapest f1 under f2 <= 0.2 needs y >= 0.6
        assert!((nsr.objectives[0] - 1.6).abs() < 1e-4);
    }

    #[test]
    fn nsr_checks_dimensions() {
        let spec = build_sp1();
        let pref = Scalarization::unit(2, 0);
        assert!(solve_nsr(&spec, &[0.1, 0.2], &pref, None, None, &NlpOptions::default()).is_err());
    }
}
