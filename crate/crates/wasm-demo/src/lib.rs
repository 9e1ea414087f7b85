//! Browser bindings for the demo page in `www/`.
//!
//! [`Demo`] and [`discretization`] are plain Rust and carry the logic; the
//! `#[wasm_bindgen]` wrappers only translate errors and hand JSON strings to
//! the page.

use std::sync::Arc;

use serde::Serialize;
use wasm_bindgen::prelude::*;

use maro_core::adaptive::AdaptiveOptions;
use maro_core::artifact::navigation_data;
use maro_core::case_study::{builtin, default_levels};
use maro_core::discretization::{generate, ReferenceDiscretization, DEFAULT_SCENARIO_CAP};
use maro_core::front::FrontPlan;
use maro_core::navigation::{NavigationSession, Snapshot};
use maro_core::pipeline::{solve_front, FrontMode};
use maro_core::price::price_front;
use maro_core::problem::{ProblemSpec, UncertaintySet};
use maro_core::{MaroError, Result};

/// Shrinks every uncertain range towards its nominal value; `scale = 1` keeps
/// the built-in ranges.
fn scaled(model: &str, scale: f64) -> Result<(ProblemSpec, ReferenceDiscretization)> {
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(MaroError::InvalidSpec(format!("uncertainty scale {scale} outside (0, 1]")));
    }
    let spec = builtin(model)?;
    let mut params = spec.uncertainty.params.clone();
    for p in &mut params {
        p.lower = p.nominal - scale * (p.nominal - p.lower);
        p.upper = p.nominal + scale * (p.upper - p.nominal);
    }
    let spec = spec.with_uncertainty(UncertaintySet {
        params,
        geometry: spec.uncertainty.geometry.clone(),
    })?;
    let reference = generate(&spec.uncertainty, default_levels(model), DEFAULT_SCENARIO_CAP)?;
    Ok((spec, reference))
}

#[derive(Debug, Serialize)]
struct GridView<'a> {
    params: Vec<&'a str>,
    scenarios: &'a [maro_core::discretization::Scenario],
}

/// Reference discretization of a built-in model as JSON
/// `{params, scenarios: [{id, values, is_nominal, label}]}`.
pub fn discretization(model: &str, scale: f64) -> Result<String> {
    let (spec, reference) = scaled(model, scale)?;
    let view = GridView {
        params: spec.uncertainty.params.iter().map(|p| p.name.as_str()).collect(),
        scenarios: &reference.scenarios,
    };
    Ok(serde_json::to_string(&view).expect("views serialize"))
}

#[derive(Debug, Serialize)]
pub struct FrontsView {
    pub objectives: Vec<String>,
    pub nominal: Vec<Vec<f64>>,
    pub maro: Vec<Vec<f64>>,
    pub nsr: Vec<Vec<f64>>,
    pub mo: Vec<Vec<f64>>,
    pub worst_cases: Vec<usize>,
    pub scenarios: usize,
}

/// Nominal and robust fronts of a built-in model with a navigation session
/// on top.
pub struct Demo {
    pub fronts: FrontsView,
    session: NavigationSession,
}

impl Demo {
    pub fn new(model: &str, scale: f64, points: usize) -> Result<Self> {
        let (spec, reference) = scaled(model, scale)?;
        let opts = AdaptiveOptions::default();
        let nominal = solve_front(&spec, &reference, FrontMode::Nominal, false, &FrontPlan::default(), &opts)?;
        let maro = solve_front(
            &spec,
            &reference,
            FrontMode::Maro,
            true,
            &FrontPlan::Schedule { points: points.max(2) },
            &opts,
        )?;
        let prices = price_front(&spec, &maro.front, &nominal.front, &opts.nlp)?;
        let session = NavigationSession::open(navigation_data(&spec, &maro.front, &prices)?)?;
        let fronts = FrontsView {
            objectives: spec.objective_names.clone(),
            nominal: nominal.front.objective_vectors(),
            maro: maro.front.objective_vectors(),
            nsr: prices.reports.iter().map(|r| r.f_nsr.clone()).collect(),
            mo: prices.reports.iter().map(|r| r.f_mo.clone()).collect(),
            worst_cases: maro.union.map(|u| u.ids).unwrap_or_default(),
            scenarios: reference.len(),
        };
        Ok(Self { fronts, session })
    }

    pub fn snapshot(&self) -> &Snapshot {
        self.session.snapshot()
    }

    pub fn move_slider(&mut self, objective: usize, value: f64) -> Result<&Snapshot> {
        self.session.move_slider(objective, value)
    }

    pub fn restrict(&mut self, objective: usize, bound: Option<f64>) -> Result<&Snapshot> {
        self.session.set_restriction(objective, bound)
    }

    pub fn reset(&mut self) -> Result<&Snapshot> {
        self.session.reset()
    }

    pub fn data(&self) -> &Arc<maro_core::navigation::NavigationData> {
        self.session.data()
    }
}

fn js(e: MaroError) -> JsError {
    JsError::new(&e.to_string())
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("views serialize")
}

#[wasm_bindgen(js_name = discretization)]
pub fn discretization_js(model: &str, scale: f64) -> std::result::Result<String, JsError> {
    discretization(model, scale).map_err(js)
}

#[wasm_bindgen]
pub struct Explorer {
    demo: Demo,
}

#[wasm_bindgen]
impl Explorer {
    #[wasm_bindgen(constructor)]
    pub fn new(model: &str, scale: f64, points: usize) -> std::result::Result<Explorer, JsError> {
        Demo::new(model, scale, points).map(|demo| Explorer { demo }).map_err(js)
    }

    pub fn fronts(&self) -> String {
        json(&self.demo.fronts)
    }

    pub fn snapshot(&self) -> String {
        json(self.demo.snapshot())
    }

    #[wasm_bindgen(js_name = moveSlider)]
    pub fn move_slider(&mut self, objective: usize, value: f64) -> std::result::Result<String, JsError> {
        self.demo.move_slider(objective, value).map(json).map_err(js)
    }

    /// `NaN` clears the bound.
    pub fn restrict(&mut self, objective: usize, bound: f64) -> std::result::Result<String, JsError> {
        let bound = (!bound.is_nan()).then_some(bound);
        self.demo.restrict(objective, bound).map(json).map_err(js)
    }

    pub fn reset(&mut self) -> std::result::Result<String, JsError> {
        self.demo.reset().map(json).map_err(js)
    }
}
