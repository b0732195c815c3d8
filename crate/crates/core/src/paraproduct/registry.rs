//! Registry of bilinear, commutator and composition estimates.
//!
//! Each entry records the admissible index range as interval data and a
//! recipe describing which norms make up both sides. Exponents `s` are
//! linear forms in the estimate parameters and the dimension-dependent
//! quantities `d/p`, `d/p'`.

use serde::{Deserialize, Serialize};

use super::bony::Nonlinearity;
use crate::error::{LabError, Result};

/// Quantities a linear form can refer to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Var {
    One,
    /// Space dimension `d`.
    D,
    /// `d / p`
    Dp,
    /// `d / p'` with `1/p + 1/p' = 1`.
    Dpp,
    P,
    S,
    S1,
    S2,
    S1p,
    S2p,
}

/// `Σ c_i · var_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearForm(pub Vec<(Var, f64)>);

impl LinearForm {
    pub fn var(v: Var) -> Self {
        LinearForm(vec![(v, 1.0)])
    }

    pub fn constant(c: f64) -> Self {
        LinearForm(vec![(Var::One, c)])
    }

    pub fn plus(mut self, v: Var, c: f64) -> Self {
        self.0.push((v, c));
        self
    }

    pub fn eval(&self, p: &EstimateParams) -> f64 {
        self.0.iter().map(|&(v, c)| if c == 0.0 { 0.0 } else { c * p.value(v) }).sum()
    }
}

/// Relation of a constraint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rel {
    Le,
    Lt,
    Ge,
    Gt,
    Eq,
}

/// Right-hand side of a constraint: a form, or the max/min of several.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    Form(LinearForm),
    Max(Vec<LinearForm>),
    Min(Vec<LinearForm>),
}

impl Bound {
    fn eval(&self, p: &EstimateParams) -> f64 {
        match self {
            Bound::Form(f) => f.eval(p),
            Bound::Max(fs) => fs.iter().map(|f| f.eval(p)).fold(f64::NEG_INFINITY, f64::max),
            Bound::Min(fs) => fs.iter().map(|f| f.eval(p)).fold(f64::INFINITY, f64::min),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub lhs: LinearForm,
    pub rel: Rel,
    pub bound: Bound,
    pub text: String,
}

impl Constraint {
    fn new(lhs: LinearForm, rel: Rel, bound: Bound, text: &str) -> Self {
        Constraint { lhs, rel, bound, text: text.to_string() }
    }

    pub fn holds(&self, p: &EstimateParams) -> bool {
        let (a, b) = (self.lhs.eval(p), self.bound.eval(p));
        let tol = 1e-12 * (1.0 + a.abs().max(b.abs()));
        match self.rel {
            Rel::Le => a <= b + tol,
            Rel::Lt => a < b,
            Rel::Ge => a + tol >= b,
            Rel::Gt => a > b,
            Rel::Eq => (a - b).abs() <= tol,
        }
    }
}

/// Which operand a factor norm applies to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operand {
    F,
    G,
}

/// Spatial integrability of a norm: the estimate's `p`, or 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PChoice {
    P,
    Two,
}

/// Time integrability of a Chemin–Lerner norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QChoice {
    Q,
    Q1,
    Q2,
    One,
    Inf,
}

/// Summability index of a Besov norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RChoice {
    One,
    Two,
    Inf,
    /// The estimate's own `r` parameter.
    R,
}

/// `‖·‖_{L̃^q_T(Ḃ^s_{p,r}(ω?))}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub s: LinearForm,
    pub p: PChoice,
    pub r: RChoice,
    pub q: QChoice,
    pub weighted: bool,
}

impl NormSpec {
    fn new(s: LinearForm, p: PChoice, r: RChoice, q: QChoice, weighted: bool) -> Self {
        NormSpec { s, p, r, q, weighted }
    }
}

/// One factor of a right-hand-side term.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    Norm { operand: Operand, norm: NormSpec },
    /// `(1 + ‖f‖_{L^∞_T(L^∞)})^{[s]+2}`
    SupPower { operand: Operand },
}

/// Left-hand-side expression.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LhsKind {
    /// `T_g f`
    ParaTgf,
    /// `T_f g`
    ParaTfg,
    /// `R(f, g)`
    Remainder,
    Product,
    /// Block sequence `[Δ_j, f]∇g`
    Commutator,
    /// `F(f)`
    Composition,
}

impl LhsKind {
    pub fn is_product_type(self) -> bool {
        matches!(self, LhsKind::ParaTgf | LhsKind::ParaTfg | LhsKind::Remainder | LhsKind::Product)
    }
}

/// Parameters of one verification run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimateParams {
    pub s1: f64,
    pub s2: f64,
    pub s: f64,
    pub s1p: f64,
    pub s2p: f64,
    #[serde(with = "crate::exponent")]
    pub p: f64,
    #[serde(with = "crate::exponent")]
    pub r: f64,
    #[serde(with = "crate::exponent")]
    pub q: f64,
    #[serde(with = "crate::exponent")]
    pub q1: f64,
    #[serde(with = "crate::exponent")]
    pub q2: f64,
    pub dim: usize,
    pub n: usize,
    /// Number of time samples; 1 means a single snapshot with horizon 1.
    pub samples: usize,
    /// Heat-flow rate of the trajectory-mode test fields.
    pub heat_rate: f64,
    /// Rate constant `c` of the weights `ω_k`.
    pub weight_rate: f64,
    pub nonlinearity: Nonlinearity,
    /// `max |f|` of the composition test fields.
    pub amplitude: f64,
    /// Blocks removed from the top of the resolved range in the test fields.
    pub drop_top: u32,
}

impl Default for EstimateParams {
    fn default() -> Self {
        EstimateParams {
            s1: 0.5,
            s2: 0.5,
            s: 0.5,
            s1p: 0.5,
            s2p: 0.5,
            p: 2.0,
            r: 1.0,
            q: f64::INFINITY,
            q1: f64::INFINITY,
            q2: f64::INFINITY,
            dim: 3,
            n: 32,
            samples: 1,
            heat_rate: 0.05,
            weight_rate: 1.0,
            nonlinearity: Nonlinearity::Square,
            amplitude: 0.5,
            drop_top: 0,
        }
    }
}

impl EstimateParams {
    pub fn value(&self, v: Var) -> f64 {
        let d = self.dim as f64;
        match v {
            Var::One => 1.0,
            Var::D => d,
            Var::Dp => d / self.p,
            Var::Dpp => d * (1.0 - 1.0 / self.p),
            Var::P => self.p,
            Var::S => self.s,
            Var::S1 => self.s1,
            Var::S2 => self.s2,
            Var::S1p => self.s1p,
            Var::S2p => self.s2p,
        }
    }

    pub fn spatial(&self, c: PChoice) -> f64 {
        match c {
            PChoice::P => self.p,
            PChoice::Two => 2.0,
        }
    }

    pub fn summability(&self, c: RChoice) -> f64 {
        match c {
            RChoice::One => 1.0,
            RChoice::Two => 2.0,
            RChoice::Inf => f64::INFINITY,
            RChoice::R => self.r,
        }
    }

    pub fn time(&self, c: QChoice) -> f64 {
        match c {
            QChoice::Q => self.q,
            QChoice::Q1 => self.q1,
            QChoice::Q2 => self.q2,
            QChoice::One => 1.0,
            QChoice::Inf => f64::INFINITY,
        }
    }
}

/// A registered estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateSpec {
    pub id: String,
    pub summary: String,
    pub lhs_kind: LhsKind,
    pub lhs: NormSpec,
    /// Sum of products of factors.
    pub rhs: Vec<Vec<Factor>>,
    pub constraints: Vec<Constraint>,
    /// Parameters inside the admissible range, used when none are given.
    pub defaults: EstimateParams,
}

impl EstimateSpec {
    /// Fails with the first violated constraint.
    pub fn check(&self, params: &EstimateParams) -> Result<()> {
        if !(params.p >= 1.0) {
            return Err(LabError::ConstraintViolated { id: self.id.clone(), detail: "p >= 1".into() });
        }
        for c in &self.constraints {
            if !c.holds(params) {
                return Err(LabError::ConstraintViolated { id: self.id.clone(), detail: c.text.clone() });
            }
        }
        Ok(())
    }
}

fn f_norm(s: LinearForm, p: PChoice, q: QChoice, weighted: bool) -> Factor {
    Factor::Norm { operand: Operand::F, norm: NormSpec::new(s, p, RChoice::One, q, weighted) }
}

fn f_norm_r(s: LinearForm, p: PChoice, r: RChoice, q: QChoice, weighted: bool) -> Factor {
    Factor::Norm { operand: Operand::F, norm: NormSpec::new(s, p, r, q, weighted) }
}

fn g_norm(s: LinearForm, p: PChoice, r: RChoice, q: QChoice, weighted: bool) -> Factor {
    Factor::Norm { operand: Operand::G, norm: NormSpec::new(s, p, r, q, weighted) }
}

fn v(x: Var) -> LinearForm {
    LinearForm::var(x)
}

/// `s1 + s2 − d/p`
fn product_index() -> LinearForm {
    v(Var::S1).plus(Var::S2, 1.0).plus(Var::Dp, -1.0)
}

fn c(lhs: LinearForm, rel: Rel, bound: Bound, text: &str) -> Constraint {
    Constraint::new(lhs, rel, bound, text)
}

fn form(f: LinearForm) -> Bound {
    Bound::Form(f)
}

fn p_at_least_two() -> Constraint {
    c(v(Var::P), Rel::Ge, form(LinearForm::constant(2.0)), "p >= 2")
}

/// `s1 + s2 > d·max(0, 2/p − 1)`
fn positivity_high_p() -> Constraint {
    c(
        v(Var::S1).plus(Var::S2, 1.0),
        Rel::Gt,
        Bound::Max(vec![LinearForm::constant(0.0), v(Var::Dp).plus(Var::Dp, 1.0).plus(Var::D, -1.0)]),
        "s1 + s2 > d·max(0, 2/p - 1)",
    )
}

fn params(s1: f64, s2: f64, p: f64) -> EstimateParams {
    EstimateParams { s1, s2, p, ..EstimateParams::default() }
}

/// Same-space bilinear family `‖·‖_{L̃^q(Ḃ^{s1+s2-d/p}_{p,1}(ω))} ≤ ‖f‖_{L̃^{q1}(Ḃ^{s1}_{p,1}(ω))}‖g‖_{L̃^{q2}(Ḃ^{s2}_{p,1})}`.
fn same_space(id: &str, summary: &str, kind: LhsKind, weighted: bool, constraints: Vec<Constraint>, d: EstimateParams) -> EstimateSpec {
    EstimateSpec {
        id: id.into(),
        summary: summary.into(),
        lhs_kind: kind,
        lhs: NormSpec::new(product_index(), PChoice::P, RChoice::One, QChoice::Q, weighted),
        rhs: vec![vec![
            f_norm(v(Var::S1), PChoice::P, QChoice::Q1, weighted),
            g_norm(v(Var::S2), PChoice::P, RChoice::One, QChoice::Q2, false),
        ]],
        constraints,
        defaults: d,
    }
}

/// Mixed family with the result and `g` measured in `Ḃ_{2,2}`.
fn mixed_space(id: &str, summary: &str, kind: LhsKind, weighted: bool, constraints: Vec<Constraint>, d: EstimateParams) -> EstimateSpec {
    EstimateSpec {
        id: id.into(),
        summary: summary.into(),
        lhs_kind: kind,
        lhs: NormSpec::new(product_index(), PChoice::Two, RChoice::Two, QChoice::Q, weighted),
        rhs: vec![vec![
            f_norm(v(Var::S1), PChoice::P, QChoice::Q1, weighted),
            g_norm(v(Var::S2), PChoice::Two, RChoice::Two, QChoice::Q2, false),
        ]],
        constraints,
        defaults: d,
    }
}

fn commutator_lhs(p: PChoice, r: RChoice, weighted: bool) -> NormSpec {
    NormSpec::new(v(Var::S), p, r, QChoice::One, weighted)
}

/// Every registered estimate.
pub fn registry() -> Vec<EstimateSpec> {
    use Rel::*;
    let s1_le_dp = c(v(Var::S1), Le, form(v(Var::Dp)), "s1 <= d/p");
    let s2_le_dp = c(v(Var::S2), Le, form(v(Var::Dp)), "s2 <= d/p");
    let s2_lt_dp = c(v(Var::S2), Lt, form(v(Var::Dp)), "s2 < d/p");
    let s1_le_dp_1 = c(v(Var::S1), Le, form(v(Var::Dp).plus(Var::One, -1.0)), "s1 <= d/p - 1");
    let s1p_le_dp = c(v(Var::S1p), Le, form(v(Var::Dp)), "s1' <= d/p");
    let s1p_le_dp_1 = c(v(Var::S1p), Le, form(v(Var::Dp).plus(Var::One, -1.0)), "s1' <= d/p - 1");
    let sum_pos = c(v(Var::S1).plus(Var::S2, 1.0), Gt, form(LinearForm::constant(0.0)), "s1 + s2 > 0");
    let s_gt_minus_dp = c(v(Var::S), Gt, form(LinearForm(vec![(Var::Dp, -1.0)])), "s > -d/p");
    let s_lt_dp = c(v(Var::S), Lt, form(v(Var::Dp)), "s < d/p");

    let mut out = vec![
        same_space("Lemma2.2a", "weighted paraproduct T_g f", LhsKind::ParaTgf, true, vec![s2_le_dp.clone()], params(0.5, 0.5, 2.0)),
        same_space("Lemma2.2b", "weighted paraproduct T_f g", LhsKind::ParaTfg, true, vec![s1_le_dp_1.clone()], params(0.25, 0.5, 2.0)),
        same_space("Lemma2.2c", "weighted remainder R(f, g)", LhsKind::Remainder, true, vec![positivity_high_p()], params(0.5, 0.5, 2.0)),
        same_space(
            "Lemma2.3",
            "weighted product fg",
            LhsKind::Product,
            true,
            vec![s1_le_dp_1.clone(), s2_le_dp.clone(), positivity_high_p()],
            params(0.25, 0.75, 2.0),
        ),
        same_space(
            "Lemma2.4",
            "product fg",
            LhsKind::Product,
            false,
            vec![s1_le_dp.clone(), s2_le_dp.clone(), positivity_high_p()],
            params(0.5, 1.0, 2.0),
        ),
        EstimateSpec {
            id: "Lemma2.5".into(),
            summary: "composition F(f) with F(0) = 0".into(),
            lhs_kind: LhsKind::Composition,
            lhs: NormSpec::new(v(Var::S), PChoice::P, RChoice::R, QChoice::Q, true),
            rhs: vec![vec![
                Factor::SupPower { operand: Operand::F },
                f_norm_r(v(Var::S), PChoice::P, RChoice::R, QChoice::Q, true),
            ]],
            constraints: vec![c(v(Var::S), Gt, form(LinearForm::constant(0.0)), "s > 0")],
            defaults: EstimateParams { s: 0.5, ..EstimateParams::default() },
        },
        EstimateSpec {
            id: "Lemma2.6".into(),
            summary: "weighted commutator [Δ_j, f]∇g in L^p".into(),
            lhs_kind: LhsKind::Commutator,
            lhs: commutator_lhs(PChoice::P, RChoice::One, true),
            rhs: vec![vec![
                f_norm(v(Var::Dp), PChoice::P, QChoice::Inf, true),
                g_norm(v(Var::S).plus(Var::One, 1.0), PChoice::P, RChoice::One, QChoice::One, false),
            ]],
            constraints: vec![
                c(v(Var::Dp), Gt, form(LinearForm::constant(0.0)), "p < ∞"),
                c(
                    v(Var::S),
                    Gt,
                    Bound::Max(vec![LinearForm(vec![(Var::Dp, -1.0)]), LinearForm(vec![(Var::Dpp, -1.0)])]),
                    "s > -d·min(1/p, 1/p')",
                ),
                c(v(Var::S), Le, form(v(Var::Dp)), "s <= d/p"),
            ],
            defaults: EstimateParams { s: 0.5, ..EstimateParams::default() },
        },
        mixed_space("Lemma5.1a", "weighted T_g f into Ḃ_{2,2}", LhsKind::ParaTgf, true, vec![p_at_least_two(), s2_lt_dp.clone()], params(0.5, 0.5, 2.0)),
        mixed_space("Lemma5.1b", "weighted T_f g into Ḃ_{2,2}", LhsKind::ParaTfg, true, vec![p_at_least_two(), s1_le_dp_1.clone()], params(0.25, 0.5, 2.0)),
        mixed_space("Lemma5.1c", "weighted R(f, g) into Ḃ_{2,2}", LhsKind::Remainder, true, vec![p_at_least_two(), sum_pos.clone()], params(0.5, 0.5, 2.0)),
        mixed_space(
            "Lemma5.2",
            "product fg into Ḃ_{2,2}",
            LhsKind::Product,
            false,
            vec![p_at_least_two(), s1_le_dp.clone(), s2_lt_dp.clone(), sum_pos.clone()],
            params(0.5, 0.5, 2.0),
        ),
        mixed_space(
            "Lemma5.2w",
            "weighted product fg into Ḃ_{2,2}",
            LhsKind::Product,
            true,
            vec![p_at_least_two(), s1_le_dp_1.clone(), s2_lt_dp.clone(), sum_pos.clone()],
            params(0.25, 0.75, 2.0),
        ),
    ];

    for (id, weighted) in [("Lemma5.3", false), ("Lemma5.3w", true)] {
        out.push(EstimateSpec {
            id: id.into(),
            summary: "commutator [Δ_j, f]∇g in L²".into(),
            lhs_kind: LhsKind::Commutator,
            lhs: commutator_lhs(PChoice::Two, RChoice::Two, weighted),
            rhs: vec![vec![
                f_norm(v(Var::Dp), PChoice::P, QChoice::Inf, weighted),
                g_norm(v(Var::S).plus(Var::One, 1.0), PChoice::Two, RChoice::Two, QChoice::One, false),
            ]],
            constraints: vec![p_at_least_two(), s_gt_minus_dp.clone(), s_lt_dp.clone()],
            defaults: EstimateParams { s: 0.0, ..EstimateParams::default() },
        });
    }
    out.push(EstimateSpec {
        id: "Lemma5.4".into(),
        summary: "commutator with the derivative on f".into(),
        lhs_kind: LhsKind::Commutator,
        lhs: commutator_lhs(PChoice::Two, RChoice::Two, false),
        rhs: vec![vec![
            f_norm(v(Var::Dp).plus(Var::One, 1.0), PChoice::P, QChoice::Inf, false),
            g_norm(v(Var::S), PChoice::Two, RChoice::Two, QChoice::One, false),
        ]],
        constraints: vec![
            p_at_least_two(),
            s_gt_minus_dp.clone(),
            c(v(Var::S), Lt, form(v(Var::Dp).plus(Var::One, 1.0)), "s < d/p + 1"),
        ],
        defaults: EstimateParams { s: 0.5, ..EstimateParams::default() },
    });
    for (id, weighted) in [("Lemma5.5", false), ("Lemma5.5w", true)] {
        let mut constraints = vec![p_at_least_two()];
        if weighted {
            constraints.extend([s1_le_dp_1.clone(), s1p_le_dp_1.clone()]);
        } else {
            constraints.extend([s1_le_dp.clone(), s1p_le_dp.clone()]);
        }
        constraints.push(c(
            v(Var::S1).plus(Var::S2, 1.0),
            Eq,
            form(v(Var::S1p).plus(Var::S2p, 1.0)),
            "s1 + s2 = s1' + s2'",
        ));
        constraints.push(sum_pos.clone());
        out.push(EstimateSpec {
            id: id.into(),
            summary: "two-term product into Ḃ_{2,2}".into(),
            lhs_kind: LhsKind::Product,
            lhs: NormSpec::new(product_index(), PChoice::Two, RChoice::Two, QChoice::Q, weighted),
            rhs: vec![
                vec![
                    f_norm(v(Var::S1), PChoice::P, QChoice::Q1, weighted),
                    g_norm(v(Var::S2), PChoice::Two, RChoice::Two, QChoice::Q2, false),
                ],
                vec![
                    f_norm_r(v(Var::S2p), PChoice::Two, RChoice::Two, QChoice::Q1, false),
                    g_norm(v(Var::S1p), PChoice::P, RChoice::One, QChoice::Q2, weighted),
                ],
            ],
            constraints,
            defaults: EstimateParams {
                s1: if weighted { 0.25 } else { 0.5 },
                s2: if weighted { 0.75 } else { 0.5 },
                s1p: if weighted { 0.0 } else { 0.75 },
                s2p: if weighted { 1.0 } else { 0.25 },
                ..EstimateParams::default()
            },
        });
    }
    for (id, weighted) in [("Lemma5.6", false), ("Lemma5.6w", true)] {
        out.push(EstimateSpec {
            id: id.into(),
            summary: "two-term commutator estimate".into(),
            lhs_kind: LhsKind::Commutator,
            lhs: commutator_lhs(PChoice::Two, RChoice::Two, weighted),
            rhs: vec![
                vec![
                    f_norm(v(Var::Dp), PChoice::P, QChoice::Inf, true),
                    g_norm(v(Var::S).plus(Var::One, 1.0), PChoice::Two, RChoice::Two, QChoice::One, false),
                ],
                vec![
                    f_norm_r(v(Var::S), PChoice::Two, RChoice::Two, QChoice::Inf, true),
                    g_norm(v(Var::Dp), PChoice::P, RChoice::One, QChoice::One, false),
                ],
            ],
            constraints: vec![p_at_least_two(), s_gt_minus_dp.clone()],
            defaults: EstimateParams { s: 0.5, ..EstimateParams::default() },
        });
    }
    out.push(EstimateSpec {
        id: "Lemma5.7".into(),
        summary: "two-term commutator estimate, time exponents swapped".into(),
        lhs_kind: LhsKind::Commutator,
        lhs: commutator_lhs(PChoice::Two, RChoice::Two, false),
        rhs: vec![
            vec![
                f_norm(v(Var::Dp).plus(Var::One, 1.0), PChoice::P, QChoice::One, false),
                g_norm(v(Var::S), PChoice::Two, RChoice::Two, QChoice::Inf, false),
            ],
            vec![
                f_norm_r(v(Var::S).plus(Var::One, 1.0), PChoice::Two, RChoice::Two, QChoice::One, false),
                g_norm(v(Var::Dp), PChoice::P, RChoice::One, QChoice::Inf, false),
            ],
        ],
        constraints: vec![p_at_least_two(), s_gt_minus_dp],
        defaults: EstimateParams { s: 0.5, ..EstimateParams::default() },
    });
    out
}

/// Looks up one estimate by id. A trailing `a` on an id without parts is accepted (`Lemma5.3a`).
pub fn lookup(id: &str) -> Result<EstimateSpec> {
    let all = registry();
    let stripped = id.strip_suffix('a');
    all.iter()
        .find(|e| e.id == id)
        .or_else(|| stripped.and_then(|s| all.iter().find(|e| e.id == s)))
        .cloned()
        .ok_or_else(|| LabError::UnknownEstimate(id.to_string()))
}

/// The registry as pretty-printed JSON.
pub fn registry_json() -> Result<String> {
    Ok(serde_json::to_string_pretty(&registry())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_admissible() {
        for e in registry() {
            e.check(&e.defaults).unwrap_or_else(|err| panic!("{}: {err}", e.id));
        }
    }

    #[test]
    fn ids_are_unique_and_cover_both_families() {
        let ids: Vec<String> = registry().into_iter().map(|e| e.id).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), ids.len());
        for want in ["Lemma2.2a", "Lemma2.4", "Lemma2.6", "Lemma5.1c", "Lemma5.5w", "Lemma5.7"] {
            assert!(ids.iter().any(|i| i == want));
        }
    }

    #[test]
    fn guards() {
        let e = lookup("Lemma2.4").unwrap();
        let bad = EstimateParams { s1: 0.0, s2: 0.0, p: 2.0, ..EstimateParams::default() };
        assert!(matches!(e.check(&bad), Err(LabError::ConstraintViolated { .. })));
        let ok = EstimateParams { s1: 0.75, s2: 0.5, p: 4.0, ..EstimateParams::default() };
        assert!(e.check(&ok).is_ok());
        // s1 + s2 > 3·max(0, 2/p − 1) bites for p < 2
        let low_p = EstimateParams { s1: 0.5, s2: 0.5, p: 1.5, ..EstimateParams::default() };
        assert!(e.check(&low_p).is_err());
        let too_big = EstimateParams { s1: 2.0, s2: 0.5, p: 2.0, ..EstimateParams::default() };
        assert!(e.check(&too_big).is_err());
        let c = lookup("Lemma2.6").unwrap();
        let inf = EstimateParams { p: f64::INFINITY, s: 0.0, ..EstimateParams::default() };
        assert!(c.check(&inf).is_err());
        assert_eq!(lookup("Lemma5.3a").unwrap().id, "Lemma5.3");
        assert!(matches!(lookup("Lemma9.9"), Err(LabError::UnknownEstimate(_))));
    }

    #[test]
    fn registry_round_trips_through_json() {
        let text = registry_json().unwrap();
        let back: Vec<EstimateSpec> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, registry());
    }
}
