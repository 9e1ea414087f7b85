//! Reference discretizations: finite scenario sets standing in for the
//! continuous uncertainty set. Every discretization contains the nominal
//! scenario exactly once.

use serde::{Deserialize, Serialize};

use crate::error::{MaroError, Result};
use crate::problem::{Geometry, UncertaintySet};

pub const DEFAULT_SCENARIO_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// One-based index, stable for identical inputs.
    pub id: usize,
    pub values: Vec<f64>,
    pub is_nominal: bool,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceDiscretization {
    pub scenarios: Vec<Scenario>,
    pub geometry: String,
    pub contains_nominal: bool,
}

/// Level rule for box discretizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxLevels {
    /// `{lower, mid, upper}` on every axis.
    VerticesAndMids,
    /// `n >= 2` equidistant levels per axis, endpoints included.
    Uniform(usize),
}

impl ReferenceDiscretization {
    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn ids(&self) -> Vec<usize> {
        self.scenarios.iter().map(|s| s.id).collect()
    }

    pub fn nominal(&self) -> &Scenario {
        self.scenarios
            .iter()
            .find(|s| s.is_nominal)
            .expect("a reference discretization always holds the nominal scenario")
    }

    pub fn nominal_id(&self) -> usize {
        self.nominal().id
    }

    pub fn get(&self, id: usize) -> Result<&Scenario> {
        self.scenarios
            .iter()
            .find(|s| s.id == id)
            .ok_or(MaroError::UnknownScenario(id))
    }

    /// Sub-discretization with the given ids, in reference order.
    pub fn subset(&self, ids: &[usize]) -> Result<Vec<Scenario>> {
        for &id in ids {
            self.get(id)?;
        }
        Ok(self
            .scenarios
            .iter()
            .filter(|s| ids.contains(&s.id))
            .cloned()
            .collect())
    }

    /// A discretization made of the nominal scenario alone.
    pub fn nominal_only(uncertainty: &UncertaintySet) -> Self {
        let nominal = uncertainty.nominal();
        Self {
            scenarios: vec![Scenario {
                id: 1,
                label: label(uncertainty, &nominal, true),
                values: nominal,
                is_nominal: true,
            }],
            geometry: "nominal".into(),
            contains_nominal: true,
        }
    }

    fn assemble(uncertainty: &UncertaintySet, points: Vec<Vec<f64>>, geometry: &str) -> Self {
        let nominal = uncertainty.nominal();
        let mut unique: Vec<Vec<f64>> = Vec::with_capacity(points.len() + 1);
        for p in points {
            if !unique.contains(&p) {
                unique.push(p);
            }
        }
        if !unique.contains(&nominal) {
            unique.push(nominal.clone());
        }
        let scenarios = unique
            .into_iter()
            .enumerate()
            .map(|(k, values)| {
                let is_nominal = values == nominal;
                Scenario {
                    id: k + 1,
                    label: label(uncertainty, &values, is_nominal),
                    values,
                    is_nominal,
                }
            })
            .collect();
        Self {
            scenarios,
            geometry: geometry.to_string(),
            contains_nominal: true,
        }
    }
}

fn label(uncertainty: &UncertaintySet, values: &[f64], is_nominal: bool) -> String {
    let body = uncertainty
        .params
        .iter()
        .zip(values)
        .map(|(p, v)| format!("{}={}", p.name, (v * 1e9).round() / 1e9))
        .collect::<Vec<_>>()
        .join(", ");
    if is_nominal {
        format!("nominal ({body})")
    } else {
        body
    }
}

fn axis_levels(lower: f64, upper: f64, rule: BoxLevels) -> Vec<f64> {
    let mut levels = match rule {
        BoxLevels::VerticesAndMids => vec![lower, (lower + upper) / 2.0, upper],
        BoxLevels::Uniform(n) => (0..n)
            .map(|i| {
                if i == 0 {
                    lower
                } else if i + 1 == n {
                    upper
                } else {
                    lower + (upper - lower) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    };
    levels.dedup();
    levels
}

/// Tensor grid of box levels, first parameter varying fastest, with the
/// nominal scenario appended when it is not a grid point.
pub fn generate_box(
    uncertainty: &UncertaintySet,
    levels: BoxLevels,
    cap: usize,
) -> Result<ReferenceDiscretization> {
    if uncertainty.geometry != Geometry::Box {
        return Err(MaroError::WrongGeometry { expected: "box" });
    }
    if let BoxLevels::Uniform(n) = levels {
        if n < 2 {
            return Err(MaroError::InvalidSpec(
                "uniform box levels need at least two levels per axis".into(),
            ));
        }
    }
    let axes: Vec<Vec<f64>> = uncertainty
        .params
        .iter()
        .map(|p| axis_levels(p.lower, p.upper, levels))
        .collect();
    let required = axes
        .iter()
        .try_fold(1usize, |acc, a| acc.checked_mul(a.len()))
        .and_then(|n| n.checked_add(1))
        .unwrap_or(usize::MAX);
    if required > cap {
        return Err(MaroError::DimensionTooLarge { required, cap });
    }
    let total = required - 1;
    let mut points = Vec::with_capacity(total);
    for mut k in 0..total {
        let mut p = Vec::with_capacity(axes.len());
        for axis in &axes {
            p.push(axis[k % axis.len()]);
            k /= axis.len();
        }
        points.push(p);
    }
    Ok(ReferenceDiscretization::assemble(uncertainty, points, "box"))
}

/// Axis piercing points `c ± r_i e_i`, then diagonal piercing points
/// `c + r ⊙ s / sqrt(d)` for every sign pattern `s`, then the nominal scenario
/// if distinct.
pub fn generate_ellipsoid(
    uncertainty: &UncertaintySet,
    cap: usize,
) -> Result<ReferenceDiscretization> {
    let Geometry::Ellipsoid { center, radii } = &uncertainty.geometry else {
        return Err(MaroError::WrongGeometry {
            expected: "ellipsoid",
        });
    };
    let d = center.len();
    let required = 1usize
        .checked_shl(d as u32)
        .filter(|_| d < usize::BITS as usize)
        .and_then(|n| n.checked_add(2 * d + 1))
        .unwrap_or(usize::MAX);
    if required > cap {
        return Err(MaroError::DimensionTooLarge { required, cap });
    }
    let mut points = Vec::with_capacity(required);
    for i in 0..d {
        for sign in [-1.0, 1.0] {
            let mut p = center.clone();
            p[i] += sign * radii[i];
            points.push(p);
        }
    }
    let scale = 1.0 / (d as f64).sqrt();
    for pattern in 0..(1usize << d) {
        let p: Vec<f64> = (0..d)
            .map(|i| {
                let sign = if pattern >> i & 1 == 1 { 1.0 } else { -1.0 };
                center[i] + sign * radii[i] * scale
            })
            .collect();
        points.push(p);
    }
    for p in &points {
        if !uncertainty.contains(p) {
            return Err(MaroError::InvalidSpec(format!(
                "ellipsoid piercing point {p:?} leaves the parameter bounds"
            )));
        }
    }
    Ok(ReferenceDiscretization::assemble(
        uncertainty,
        points,
        "ellipsoid",
    ))
}

/// Dispatches on the uncertainty geometry.
pub fn generate(
    uncertainty: &UncertaintySet,
    levels: BoxLevels,
    cap: usize,
) -> Result<ReferenceDiscretization> {
    match uncertainty.geometry {
        Geometry::Box => generate_box(uncertainty, levels, cap),
        Geometry::Ellipsoid { .. } => generate_ellipsoid(uncertainty, cap),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{ellipsoid_level, UncertainParamSpec};
    use proptest::prelude::*;

    fn table1() -> UncertaintySet {
        UncertaintySet::new_box(vec![
            UncertainParamSpec::new("l", 0.6, 1.2, 1.0),
            UncertainParamSpec::new("w_MF", 0.78, 0.82, 0.8),
            UncertainParamSpec::new("F12", 0.9, 1.1, 1.0),
        ])
        .unwrap()
    }

    #[test]
    fn column_ranges_give_28_scenarios() {
        let d = generate_box(&table1(), BoxLevels::VerticesAndMids, DEFAULT_SCENARIO_CAP).unwrap();
        assert_eq!(d.len(), 28);
        let nominal = d.nominal();
        assert_eq!(nominal.id, 28);
        assert_eq!(nominal.values, vec![1.0, 0.8, 1.0]);
        assert_eq!(d.scenarios.iter().filter(|s| s.is_nominal).count(), 1);
        // first parameter fastest: scenario 25 is (l, w_MF, F12) = (0.6, 0.82, 1.1)
        assert_eq!(d.get(25).unwrap().values, vec![0.6, 0.82, 1.1]);
        assert_eq!(d.get(27).unwrap().values, vec![1.2, 0.82, 1.1]);
    }

    #[test]
    fn centered_unit_square_gives_nine() {
        let set = UncertaintySet::new_box(vec![
            UncertainParamSpec::new("a", 0.0, 1.0, 0.5),
            UncertainParamSpec::new("b", 0.0, 1.0, 0.5),
        ])
        .unwrap();
        let d = generate_box(&set, BoxLevels::VerticesAndMids, DEFAULT_SCENARIO_CAP).unwrap();
        assert_eq!(d.len(), 9);
        assert_eq!(d.nominal().id, 5);
    }

    #[test]
    fn one_dimensional_off_center_nominal() {
        let set = UncertaintySet::new_box(vec![UncertainParamSpec::new("a", 0.0, 1.0, 0.25)]).unwrap();
        let d = generate_box(&set, BoxLevels::VerticesAndMids, DEFAULT_SCENARIO_CAP).unwrap();
        let values: Vec<f64> = d.scenarios.iter().map(|s| s.values[0]).collect();
        assert_eq!(values, vec![0.0, 0.5, 1.0, 0.25]);
        assert!(d.scenarios[3].is_nominal);
    }

    #[test]
    fn collapsed_axis_deduplicates() {
        let set = UncertaintySet::new_box(vec![UncertainParamSpec::new("a", 0.3, 0.3, 0.3)]).unwrap();
        let d = generate_box(&set, BoxLevels::VerticesAndMids, DEFAULT_SCENARIO_CAP).unwrap();
        assert_eq!(d.len(), 1);
        assert!(d.scenarios[0].is_nominal);
    }

    #[test]
    fn cap_is_enforced() {
        let params = (0..9)
            .map(|i| UncertainParamSpec::new(&format!("p{i}"), 0.0, 1.0, 0.5))
            .collect();
        let set = UncertaintySet::new_box(params).unwrap();
        let err = generate_box(&set, BoxLevels::VerticesAndMids, DEFAULT_SCENARIO_CAP).unwrap_err();
        assert_eq!(
            err,
            MaroError::DimensionTooLarge {
                required: 19_684,
                cap: DEFAULT_SCENARIO_CAP
            }
        );
    }

    #[test]
    fn uniform_levels_include_endpoints() {
        let set = UncertaintySet::new_box(vec![UncertainParamSpec::new("u", -1.0, 1.0, 0.0)]).unwrap();
        let d = generate_box(&set, BoxLevels::Uniform(5), DEFAULT_SCENARIO_CAP).unwrap();
        let values: Vec<f64> = d.scenarios.iter().map(|s| s.values[0]).collect();
        assert_eq!(values, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(d.nominal_id(), 3);
    }

    fn circle(d: usize) -> UncertaintySet {
        let params = (0..d)
            .map(|i| UncertainParamSpec::new(&format!("u{i}"), -1.0, 1.0, 0.0))
            .collect();
        UncertaintySet::new_ellipsoid(params, vec![0.0; d], vec![1.0; d]).unwrap()
    }

    #[test]
    fn ellipsoid_counts() {
        assert_eq!(generate_ellipsoid(&circle(2), DEFAULT_SCENARIO_CAP).unwrap().len(), 9);
        assert_eq!(generate_ellipsoid(&circle(3), DEFAULT_SCENARIO_CAP).unwrap().len(), 15);
    }

    #[test]
    fn wrong_geometry_is_rejected() {
        assert!(generate_ellipsoid(&table1(), DEFAULT_SCENARIO_CAP).is_err());
        assert!(generate_box(&circle(2), BoxLevels::VerticesAndMids, DEFAULT_SCENARIO_CAP).is_err());
    }

    #[test]
    fn ellipsoid_points_lie_on_boundary() {
        let params = vec![
            UncertainParamSpec::new("a", 0.0, 4.0, 1.0),
            UncertainParamSpec::new("b", -1.0, 1.0, 0.1),
            UncertainParamSpec::new("c", 5.0, 6.0, 5.5),
        ];
        let center = vec![1.5, 0.0, 5.5];
        let radii = vec![1.2, 0.7, 0.25];
        let set = UncertaintySet::new_ellipsoid(params, center.clone(), radii.clone()).unwrap();
        let d = generate_ellipsoid(&set, DEFAULT_SCENARIO_CAP).unwrap();
        assert_eq!(d.len(), 15);
        for s in d.scenarios.iter().filter(|s| !s.is_nominal) {
            assert!((ellipsoid_level(&s.values, &center, &radii) - 1.0).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn box_grid_invariants(
            bounds in proptest::collection::vec((-5.0f64..5.0, 0.0f64..3.0, 0.0f64..1.0), 1..4)
        ) {
            let params: Vec<_> = bounds
                .iter()
                .enumerate()
                .map(|(i, &(lo, width, t))| UncertainParamSpec::new(&format!("p{i}"), lo, lo + width, lo + t * width))
                .collect();
            let set = UncertaintySet::new_box(params).unwrap();
            let a = generate_box(&set, BoxLevels::VerticesAndMids, DEFAULT_SCENARIO_CAP).unwrap();
            let b = generate_box(&set, BoxLevels::VerticesAndMids, DEFAULT_SCENARIO_CAP).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(a.scenarios.iter().filter(|s| s.is_nominal).count(), 1);
            for (k, s) in a.scenarios.iter().enumerate() {
                prop_assert_eq!(s.id, k + 1);
                prop_assert!(set.contains(&s.values));
                for t in &a.scenarios[..k] {
                    prop_assert_ne!(&t.values, &s.values);
                }
            }
        }
    }
}
