//! Monte-Carlo ratio statistics for the registered estimates.
//!
//! Each trial draws random smooth `f`, `g`, evaluates both sides of an
//! estimate and records `lhs / rhs`. In static mode a single snapshot is
//! read as a field constant on `[0, 1]`; in trajectory mode the fields are
//! evolved by a heat flow and sampled uniformly on `[0, 1]`.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bony::{commutator_blocks, dealiased_product, paraproduct, remainder, Nonlinearity};
use super::registry::{lookup, EstimateParams, EstimateSpec, Factor, LhsKind, NormSpec, Operand, QChoice};
use crate::besov::{lr_norm, BlockNormTrajectory, WeightProfile};
use crate::error::{LabError, Result};
use crate::exponent;
use crate::littlewood_paley::{build_partition, low_pass, DyadicPartition};
use crate::random::RandomSpectrum;
use crate::spectral::{forward_transform, lp_norm, Grid, RealField};

/// Relative threshold under which a right-hand side counts as zero.
pub const DEGENERATE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Static,
    Trajectory,
}

/// Outcome of one verification run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimate_id: String,
    pub params: EstimateParams,
    pub weighted: bool,
    pub trials: usize,
    pub max_ratio: f64,
    pub seed: u64,
    pub mode: Mode,
}

impl EstimateReport {
    pub const CSV_HEADER: &'static str = "id,s1,s2,s,s1p,s2p,p,q,q1,q2,r,weighted,trials,seed,max_ratio";

    pub fn csv_row(&self) -> String {
        let p = &self.params;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{:.12e}",
            self.estimate_id,
            p.s1,
            p.s2,
            p.s,
            p.s1p,
            p.s2p,
            exponent::display(p.p),
            exponent::display(p.q),
            exponent::display(p.q1),
            exponent::display(p.q2),
            exponent::display(p.r),
            self.weighted,
            self.trials,
            self.seed,
            self.max_ratio
        )
    }
}

/// Appends reports to a CSV ledger, writing the header for a new file.
pub fn append_csv(path: &Path, reports: &[EstimateReport]) -> Result<()> {
    let fresh = !path.exists() || std::fs::metadata(path)?.len() == 0;
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    if fresh {
        writeln!(file, "{}", EstimateReport::CSV_HEADER)?;
    }
    for r in reports {
        writeln!(file, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Samples of one field along `[0, horizon]`.
#[derive(Clone, Debug)]
pub struct Sampled {
    pub times: Vec<f64>,
    pub fields: Vec<RealField<f64>>,
}

impl Sampled {
    /// A single snapshot, read as constant in time.
    pub fn snapshot(f: RealField<f64>) -> Self {
        Sampled { times: vec![0.0], fields: vec![f] }
    }

    /// `e^{κ t Δ} f` at `samples` uniform times on `[0, 1]`.
    pub fn heat_flow(f: &RealField<f64>, rate: f64, samples: usize) -> Result<Self> {
        if samples < 2 {
            return Err(LabError::TooFewSamples(format!("{samples} samples for a trajectory")));
        }
        let spec = forward_transform(f)?;
        let grid = *f.grid();
        let times: Vec<f64> = (0..samples).map(|i| i as f64 / (samples - 1) as f64).collect();
        let fields = times
            .par_iter()
            .map(|&t| {
                spec.apply_multiplier(|i| {
                    let k = grid.frequency_norm(i);
                    (-rate * k * k * t).exp()
                })
                .inverse()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Sampled { times, fields })
    }

    pub fn map(&self, f: impl Fn(&RealField<f64>) -> Result<RealField<f64>> + Sync + Send) -> Result<Self> {
        let fields = self.fields.par_iter().map(f).collect::<Result<Vec<_>>>()?;
        Ok(Sampled { times: self.times.clone(), fields })
    }

    fn is_static(&self) -> bool {
        self.times.len() == 1
    }

    fn horizon(&self) -> f64 {
        if self.is_static() {
            1.0
        } else {
            self.times[self.times.len() - 1] - self.times[0]
        }
    }
}

fn block_trajectory(s: &Sampled, p: f64, partition: &DyadicPartition<f64>) -> Result<BlockNormTrajectory> {
    if s.is_static() {
        let mut traj = BlockNormTrajectory::new(p, partition.j_min(), partition.j_max());
        traj.push_field(0.0, &s.fields[0], partition)?;
        Ok(traj)
    } else {
        BlockNormTrajectory::from_fields(&s.times, &s.fields, p, partition)
    }
}

/// `‖·‖_{L̃^q(Ḃ^s_{p,r}(ω?))}`; a single sample stands for a constant on `[0, 1]`.
fn tilde_norm(traj: &BlockNormTrajectory, s: f64, r: f64, q: f64, weights: Option<&WeightProfile>) -> Result<f64> {
    let per_block = (traj.j_min..=traj.j_max)
        .map(|j| {
            let series = traj.series(j);
            let t = if traj.times.len() == 1 {
                series[0]
            } else {
                crate::besov::time_norm(&traj.times, &series, q)?
            };
            Ok((j as f64 * s).exp2() * weights.map_or(1.0, |w| w.weight(j)) * t)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(lr_norm(per_block, r))
}

fn eval_norm(
    spec: &NormSpec,
    params: &EstimateParams,
    field: &Sampled,
    partition: &DyadicPartition<f64>,
    weights: &WeightProfile,
) -> Result<f64> {
    let traj = block_trajectory(field, params.spatial(spec.p), partition)?;
    tilde_norm(
        &traj,
        spec.s.eval(params),
        params.summability(spec.r),
        params.time(spec.q),
        spec.weighted.then_some(weights),
    )
}

/// The two sides of an estimate for given sampled inputs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sides {
    pub lhs: f64,
    pub rhs: f64,
    /// Size of the inputs, for the degeneracy test.
    pub scale: f64,
}

impl Sides {
    /// `lhs / rhs`, with `0/0 = 0` and `x/0` an error.
    pub fn ratio(&self, id: &str) -> Result<f64> {
        let tiny = DEGENERATE_TOL * self.scale;
        if self.rhs <= tiny {
            if self.lhs <= tiny {
                return Ok(0.0);
            }
            return Err(LabError::Degenerate(format!("{id}: rhs {} with lhs {}", self.rhs, self.lhs)));
        }
        Ok(self.lhs / self.rhs)
    }
}

fn sup_l2(s: &Sampled) -> Result<f64> {
    s.fields.iter().try_fold(0.0_f64, |m, f| Ok(m.max(lp_norm(f, 2.0)?)))
}

/// Evaluates both sides of `spec` on sampled `f` and `g`.
pub fn evaluate_sides(
    spec: &EstimateSpec,
    params: &EstimateParams,
    f: &Sampled,
    g: &Sampled,
    partition: &DyadicPartition<f64>,
) -> Result<Sides> {
    let weights = WeightProfile::new(params.weight_rate, f.horizon())?;
    let lhs = match spec.lhs_kind {
        LhsKind::Commutator => commutator_lhs(spec, params, f, g, partition, &weights)?,
        kind => {
            let pairs = f.fields.iter().zip(&g.fields).collect::<Vec<_>>();
            let fields = pairs
                .par_iter()
                .map(|(a, b)| match kind {
                    LhsKind::ParaTgf => paraproduct(b, a, partition),
                    LhsKind::ParaTfg => paraproduct(a, b, partition),
                    LhsKind::Remainder => remainder(a, b, partition),
                    LhsKind::Product => dealiased_product(a, b),
                    LhsKind::Composition => params.nonlinearity.compose(a),
                    LhsKind::Commutator => unreachable!(),
                })
                .collect::<Result<Vec<_>>>()?;
            let out = Sampled { times: f.times.clone(), fields };
            eval_norm(&spec.lhs, params, &out, partition, &weights)?
        }
    };
    let mut rhs = 0.0;
    for term in &spec.rhs {
        let mut prod = 1.0;
        for factor in term {
            prod *= match factor {
                Factor::Norm { operand, norm } => {
                    let x = if *operand == Operand::F { f } else { g };
                    eval_norm(norm, params, x, partition, &weights)?
                }
                Factor::SupPower { operand } => {
                    let x = if *operand == Operand::F { f } else { g };
                    let sup = x.fields.iter().fold(0.0_f64, |m, v| m.max(v.max_abs()));
                    (1.0 + sup).powi(params.s.floor() as i32 + 2)
                }
            };
        }
        rhs += prod;
    }
    let scale = if spec.lhs_kind == LhsKind::Composition { sup_l2(f)? } else { sup_l2(f)? * sup_l2(g)? };
    Ok(Sides { lhs, rhs, scale })
}

/// `‖(2^{js} ω_j? ‖[Δ_j, f]∇g‖_{L^1_T L^p})_j‖_{ℓ^r}`.
fn commutator_lhs(
    spec: &EstimateSpec,
    params: &EstimateParams,
    f: &Sampled,
    g: &Sampled,
    partition: &DyadicPartition<f64>,
    weights: &WeightProfile,
) -> Result<f64> {
    let p = params.spatial(spec.lhs.p);
    let rows = f
        .fields
        .par_iter()
        .zip(g.fields.par_iter())
        .map(|(a, b)| {
            commutator_blocks(a, b, partition)?
                .into_iter()
                .map(|(_, c)| lp_norm(&c, p))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut traj = BlockNormTrajectory::new(p, partition.j_min(), partition.j_max());
    for (t, row) in f.times.iter().zip(rows) {
        traj.push(*t, row)?;
    }
    tilde_norm(
        &traj,
        spec.lhs.s.eval(params),
        params.summability(spec.lhs.r),
        params.time(QChoice::One),
        spec.lhs.weighted.then_some(weights),
    )
}

/// Spectral decay exponents of the trial fields lie in this range.
pub const TRIAL_DECAY: (f64, f64) = (2.0, 4.0);

/// Decay exponents of `(f, g)` in trial `i` of `trials`: `f` is stratified over
/// [`TRIAL_DECAY`], `g` follows a golden-ratio sequence, so every seed covers
/// the same exponents and only the phases are random.
pub fn trial_decays(i: usize, trials: usize) -> (f64, f64) {
    const GOLDEN: f64 = 0.618_033_988_749_894_8;
    let (lo, hi) = TRIAL_DECAY;
    let a = (i as f64 + 0.5) / trials as f64;
    let b = ((i as f64 + 0.5) * GOLDEN).fract();
    (lo + (hi - lo) * a, lo + (hi - lo) * b)
}

/// Random test field with `|f̂(ξ)| ∝ (1+|ξ|)^{-decay}`, band-limited below the dropped top blocks.
pub fn trial_field(grid: Grid, partition: &DyadicPartition<f64>, drop_top: u32, decay: f64, seed: u64) -> Result<RealField<f64>> {
    let spec = RandomSpectrum::default().with_decay(decay, decay).spectrum::<f64>(grid, 1, seed)?;
    if drop_top == 0 {
        return spec.inverse();
    }
    let top = partition.j_max() - drop_top as i32;
    low_pass(&spec, partition, top + 1)?.inverse()
}

fn check_time_exponents(spec: &EstimateSpec, params: &EstimateParams) -> Result<()> {
    if params.samples > 1 && spec.lhs_kind.is_product_type() {
        let lhs = 1.0 / params.q;
        let rhs = 1.0 / params.q1 + 1.0 / params.q2;
        if (lhs - rhs).abs() > 1e-12 {
            return Err(LabError::ConstraintViolated {
                id: spec.id.clone(),
                detail: "1/q = 1/q1 + 1/q2".into(),
            });
        }
    }
    Ok(())
}

fn sample(f: RealField<f64>, params: &EstimateParams) -> Result<Sampled> {
    if params.samples > 1 {
        Sampled::heat_flow(&f, params.heat_rate, params.samples)
    } else {
        Ok(Sampled::snapshot(f))
    }
}

/// Runs `trials` random trials of any registered estimate.
pub fn verify_estimate(id: &str, params: &EstimateParams, trials: usize, seed: u64) -> Result<EstimateReport> {
    let spec = lookup(id)?;
    run(&spec, params, trials, seed)
}

fn run(spec: &EstimateSpec, params: &EstimateParams, trials: usize, seed: u64) -> Result<EstimateReport> {
    spec.check(params)?;
    check_time_exponents(spec, params)?;
    if trials == 0 {
        return Err(LabError::InvalidParameter("trials must be positive".into()));
    }
    let grid = Grid::new(params.dim, params.n, 1.0)?;
    let partition = build_partition::<f64>(grid)?;
    if params.drop_top as i32 >= partition.len() as i32 - 2 {
        return Err(LabError::InvalidParameter(format!("cannot drop {} of {} blocks", params.drop_top, partition.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<(u64, u64)> = (0..trials).map(|_| (rng.gen(), rng.gen())).collect();
    let ratios = seeds
        .par_iter()
        .enumerate()
        .map(|(i, &(sf, sg))| {
            let (df, dg) = trial_decays(i, trials);
            let mut f = trial_field(grid, &partition, params.drop_top, df, sf)?;
            if spec.lhs_kind == LhsKind::Composition {
                let m = f.max_abs();
                f = f.scale(params.amplitude / m);
            }
            let g = trial_field(grid, &partition, params.drop_top, dg, sg)?;
            let sides = evaluate_sides(spec, params, &sample(f, params)?, &sample(g, params)?, &partition)?;
            sides.ratio(&spec.id)
        })
        .collect::<Result<Vec<f64>>>()?;
    let max_ratio = ratios.into_iter().fold(0.0, f64::max);
    if !max_ratio.is_finite() {
        return Err(LabError::NonFinite);
    }
    Ok(EstimateReport {
        estimate_id: spec.id.clone(),
        params: params.clone(),
        weighted: spec.lhs.weighted,
        trials,
        max_ratio,
        seed,
        mode: if params.samples > 1 { Mode::Trajectory } else { Mode::Static },
    })
}

/// Product, paraproduct and remainder estimates.
pub fn verify_product_estimate(id: &str, params: &EstimateParams, trials: usize, seed: u64) -> Result<EstimateReport> {
    let spec = lookup(id)?;
    if !spec.lhs_kind.is_product_type() {
        return Err(LabError::InvalidParameter(format!("{id} is not a product estimate")));
    }
    run(&spec, params, trials, seed)
}

/// Commutator estimates.
pub fn verify_commutator_estimate(id: &str, params: &EstimateParams, trials: usize, seed: u64) -> Result<EstimateReport> {
    let spec = lookup(id)?;
    if spec.lhs_kind != LhsKind::Commutator {
        return Err(LabError::InvalidParameter(format!("{id} is not a commutator estimate")));
    }
    run(&spec, params, trials, seed)
}

/// `‖F(f)‖_{Ḃ^s_{p,r}} / ((1 + ‖f‖_∞)^{[s]+2} ‖f‖_{Ḃ^s_{p,r}})` over random `f` scaled to `max |f| = 0.5`.
pub fn verify_composition_estimate(
    nonlinearity: Nonlinearity,
    s: f64,
    p: f64,
    r: f64,
    trials: usize,
    seed: u64,
) -> Result<EstimateReport> {
    if nonlinearity.apply(0.0).abs() > 1e-14 {
        return Err(LabError::InvalidParameter("F(0) must vanish".into()));
    }
    let params = EstimateParams { s, p, r, nonlinearity, weight_rate: 1.0, ..EstimateParams::default() };
    run(&lookup("Lemma2.5")?, &params, trials, seed)
}
