//! Smooth surrogate of a binary methanol / methyl-formate distillation column.
//!
//! Decision variables and uncertain parameters carry the ranges of the
//! real design problem; the equations are a compact stand-in with the
//! following structure (all constraints in `g <= 0` form):
//!
//! * separation difficulty at the top, `tau_t`, rises with the MF feed
//!   fraction and the thermodynamic factor, and most steeply when both are
//!   high; at the bottom (low MF fractions) a higher factor eases the split:
//!   ```text
//!   w^ = (w_MF - 0.8) / 0.02,   F^ = (F12 - 1) / 0.1
//!   tau_t = 1 + 0.06 w^ + 0.06 F^ + 0.04 w^ F^
//!   tau_b = 1 - 0.03 w^ - 0.02 F^
//!   ```
//! * rectifying stages `n_t = N - N_f`, stripping stages
//!   `n_b = 0.1 N + 0.9 N_f`; the stripping boil-up left after reflux is
//!   `B = Q_r / 0.115 - R_V`;
//! * purity constraints as log-impurity margins:
//!   ```text
//!   S_t = 0.6 n_t (1 - exp(-(R_V - 0.45 tau_t) / 0.25)),  g_top = 1 - S_t / 5.3
//!   S_b = 1.2 n_b (1 - exp(-(B - 0.6 tau_b) / 0.5)),      g_bot = 1 - S_b / 4.6
//!   ```
//! * equipment limits scale with the load `l`:
//!   ```text
//!   g_Qr = l Q_r / (1e-3 A_r) - 1
//!   g_Qc = 0.1 l (1 + R_V) / (9e-4 A_c) - 1
//!   g_F  = l (1 + R_V)(1 + 0.02 w^) / (1.6 D^2) - 1
//!   ```
//! * `CAPEX = (0.02 N D^1.5 + 0.01 (A_r^0.65 + A_c^0.65) + 0.2) / 1.5`
//!   depends on the HNV only, and
//!   `OPEX = (Q_r + 0.02 (1 + R_V)) / 0.24` is specific to the product mass,
//!   hence independent of the load.
//!
//! Stage counts are continuous.

use std::sync::Arc;

use crate::problem::{
    Evaluation, Jacobian, Model, ModelSource, ProblemSpec, Signature, UncertainParamSpec,
    UncertaintySet, VariableRole, VariableSpec,
};

const S_TOP_REQ: f64 = 5.3;
const S_BOT_REQ: f64 = 4.6;
const Q_UNIT: f64 = 0.115;
const CAPEX_REF: f64 = 1.5;
const OPEX_REF: f64 = 0.24;

#[derive(Debug, Clone, Copy, Default)]
pub struct ColumnSurrogate;

struct Terms {
    tau_v: f64,
    n_top: f64,
    n_bot: f64,
    e_top: f64,
    e_bot: f64,
}

impl ColumnSurrogate {
    fn terms(x: &[f64], y: &[f64], u: &[f64]) -> Terms {
        let (n, nf) = (x[0], x[1]);
        let (rv, qr) = (y[0], y[1]);
        let (w, f) = (u[1], u[2]);
        let wh = (w - 0.8) / 0.02;
        let fh = (f - 1.0) / 0.1;
        let tau_t = 1.0 + 0.06 * wh + 0.06 * fh + 0.04 * wh * fh;
        let tau_b = 1.0 - 0.03 * wh - 0.02 * fh;
        let boilup = qr / Q_UNIT - rv;
        Terms {
            tau_v: 1.0 + 0.02 * wh,
            n_top: n - nf,
            n_bot: 0.1 * n + 0.9 * nf,
            e_top: (-(rv - 0.45 * tau_t) / 0.25).exp(),
            e_bot: (-(boilup - 0.6 * tau_b) / 0.5).exp(),
        }
    }
}

impl Model for ColumnSurrogate {
    fn signature(&self) -> Signature {
        Signature {
            here_and_now: 5,
            wait_and_see: 2,
            uncertain: 3,
            objectives: 2,
            constraints: 5,
        }
    }

    fn evaluate(&self, x: &[f64], y: &[f64], u: &[f64]) -> Evaluation {
        let t = Self::terms(x, y, u);
        let (n, d, ar, ac) = (x[0], x[2], x[3], x[4]);
        let (rv, qr) = (y[0], y[1]);
        let l = u[0];
        let capex = (0.02 * n * d.powf(1.5) + 0.01 * (ar.powf(0.65) + ac.powf(0.65)) + 0.2) / CAPEX_REF;
        let opex = (qr + 0.02 * (1.0 + rv)) / OPEX_REF;
        let s_bot = 1.2 * t.n_bot * (1.0 - t.e_bot);
        let s_top = 0.6 * t.n_top * (1.0 - t.e_top);
        Evaluation {
            objectives: vec![capex, opex],
            constraints: vec![
                1.0 - s_bot / S_BOT_REQ,
                1.0 - s_top / S_TOP_REQ,
                l * qr / (1e-3 * ar) - 1.0,
                0.1 * l * (1.0 + rv) / (9e-4 * ac) - 1.0,
                l * (1.0 + rv) * t.tau_v / (1.6 * d * d) - 1.0,
            ],
        }
    }

    fn jacobian(&self, x: &[f64], y: &[f64], u: &[f64]) -> Option<Jacobian> {
        let t = Self::terms(x, y, u);
        let (n, d, ar, ac) = (x[0], x[2], x[3], x[4]);
        let (rv, qr) = (y[0], y[1]);
        let l = u[0];
        let mut jac = Jacobian::zeros(self.signature());
        // columns: N, N_f, D, A_r, A_c, R_V, Q_r
        let capex = &mut jac.objectives[0];
        capex[0] = 0.02 * d.powf(1.5) / CAPEX_REF;
        capex[2] = 0.03 * n * d.sqrt() / CAPEX_REF;
        capex[3] = 0.0065 * ar.powf(-0.35) / CAPEX_REF;
        capex[4] = 0.0065 * ac.powf(-0.35) / CAPEX_REF;
        let opex = &mut jac.objectives[1];
        opex[5] = 0.02 / OPEX_REF;
        opex[6] = 1.0 / OPEX_REF;

        // bottom purity: d S_b
        let phi_b = 1.0 - t.e_bot;
        let ds_db = 1.2 * t.n_bot * t.e_bot / 0.5;
        let bot = &mut jac.constraints[0];
        bot[0] = -1.2 * 0.1 * phi_b / S_BOT_REQ;
        bot[1] = -1.2 * 0.9 * phi_b / S_BOT_REQ;
        bot[5] = ds_db / S_BOT_REQ;
        bot[6] = -ds_db / Q_UNIT / S_BOT_REQ;

        let phi_t = 1.0 - t.e_top;
        let top = &mut jac.constraints[1];
        top[0] = -0.6 * phi_t / S_TOP_REQ;
        top[1] = 0.6 * phi_t / S_TOP_REQ;
        top[5] = -0.6 * t.n_top * t.e_top / 0.25 / S_TOP_REQ;

        let qmax = &mut jac.constraints[2];
        qmax[3] = -l * qr / (1e-3 * ar * ar);
        qmax[6] = l / (1e-3 * ar);

        let cmax = &mut jac.constraints[3];
        cmax[4] = -0.1 * l * (1.0 + rv) / (9e-4 * ac * ac);
        cmax[5] = 0.1 * l / (9e-4 * ac);

        let fmax = &mut jac.constraints[4];
        fmax[2] = -2.0 * l * (1.0 + rv) * t.tau_v / (1.6 * d * d * d);
        fmax[5] = l * t.tau_v / (1.6 * d * d);
        Some(jac)
    }

    fn has_analytic_jacobian(&self) -> bool {
        true
    }
}

pub fn build_column_surrogate() -> ProblemSpec {
    use VariableRole::{HereAndNow as H, WaitAndSee as W};
    ProblemSpec::new(
        vec![
            VariableSpec::new("N", 10.0, 150.0, H, 33.0),
            VariableSpec::new("N_f", 3.0, 40.0, H, 5.0),
            VariableSpec::new("D", 0.8, 2.0, H, 1.09),
            VariableSpec::new("A_r", 50.0, 1000.0, H, 216.98),
            VariableSpec::new("A_c", 50.0, 1000.0, H, 191.91),
            VariableSpec::new("R_V", 0.5, 2.0, W, 0.74),
            VariableSpec::new("Q_r", 0.0625, 0.375, W, 0.21),
        ],
        UncertaintySet::new_box(vec![
            UncertainParamSpec::new("l", 0.6, 1.2, 1.0),
            UncertainParamSpec::new("w_MF", 0.78, 0.82, 0.8),
            UncertainParamSpec::new("F12", 0.9, 1.1, 1.0),
        ])
        .expect("valid column uncertainty"),
        vec!["CAPEX".into(), "OPEX".into()],
        vec![
            "w_MeOH_bot_min".into(),
            "w_MF_top_min".into(),
            "Q_r_max".into(),
            "Q_c_max".into(),
            "F_max".into(),
        ],
        Arc::new(ColumnSurrogate),
        ModelSource::Builtin("column_surrogate".into()),
    )
    .expect("valid column surrogate")
}
