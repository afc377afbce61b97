//! Stability of prediction error under shifts of the joint distribution of
//! the confounder and the response.
//!
//! Each replication draws one set of effects, simulates a training set with
//! fixed `(C, Y)` moments and nine test sets with shifted moments, and scores
//! four adjustment strategies by test MSE. The spread of a strategy's nine
//! MSE values is its stability error.

mod io;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::Uniform;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::counterfactual::fit_anticausal;
use crate::dataset::{Dataset, Provenance};
use crate::error::{Error, Result};
use crate::regression::ols;
use crate::rng::{self, derive_seed, tags, PSD_TOLERANCE};
use crate::scm::Role;

pub use io::{read_results, write_results, Metadata, RESULTS_FILE, STABILITY_FILE, METADATA_FILE};

/// Number of shifted test sets per replication.
pub const GRID_LEN: usize = 9;

/// Retry budget when a parameter draw is invalid for some grid point.
pub const MAX_PARAM_ATTEMPTS: usize = 100;

/// Second moments of `(C, Y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSpec {
    pub var_c: f64,
    pub cov_yc: f64,
    pub var_y: f64,
}

impl MomentSpec {
    pub fn new(var_c: f64, cov_yc: f64, var_y: f64) -> Result<Self> {
        let s = Self { var_c, cov_yc, var_y };
        s.check()?;
        Ok(s)
    }

    /// Rejects specs whose 2×2 moment matrix is not positive definite.
    pub fn check(&self) -> Result<()> {
        let finite = self.var_c.is_finite() && self.cov_yc.is_finite() && self.var_y.is_finite();
        if !finite || self.var_c <= 0.0 || self.var_y <= 0.0 || self.var_c * self.var_y - self.cov_yc * self.cov_yc <= 0.0 {
            return Err(Error::Input(format!("moments {self:?} are not positive definite")));
        }
        Ok(())
    }
}

impl Default for MomentSpec {
    fn default() -> Self {
        Self { var_c: 1.0, cov_yc: 0.8, var_y: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    /// Var(Y) stays at 1 while Cov(Y, C) falls and Var(C) grows.
    #[serde(rename = "fixed-vary")]
    FixedVarY,
    /// Var(C) stays at 1 while Cov(Y, C) falls and Var(Y) grows.
    #[serde(rename = "increasing-vary")]
    IncreasingVarY,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::FixedVarY => "fixed-vary",
            Variant::IncreasingVarY => "increasing-vary",
        }
    }

    pub fn grid(self) -> Vec<MomentSpec> {
        (0..GRID_LEN)
            .map(|k| {
                let cov_yc = (8.0 - 2.0 * k as f64) / 10.0;
                let ramp = 1.0 + 0.25 * k as f64;
                match self {
                    Variant::FixedVarY => MomentSpec { var_c: ramp, cov_yc, var_y: 1.0 },
                    Variant::IncreasingVarY => MomentSpec { var_c: 1.0, cov_yc, var_y: ramp },
                }
            })
            .collect()
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed-vary" => Ok(Variant::FixedVarY),
            "increasing-vary" => Ok(Variant::IncreasingVarY),
            other => Err(Error::Input(format!("unknown variant '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjustmentMethod {
    CausalityAware,
    Baseline1,
    Baseline2,
    NoAdjustment,
}

impl AdjustmentMethod {
    pub const ALL: [AdjustmentMethod; 4] = [
        AdjustmentMethod::CausalityAware,
        AdjustmentMethod::Baseline1,
        AdjustmentMethod::Baseline2,
        AdjustmentMethod::NoAdjustment,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AdjustmentMethod::CausalityAware => "causality_aware",
            AdjustmentMethod::Baseline1 => "baseline1",
            AdjustmentMethod::Baseline2 => "baseline2",
            AdjustmentMethod::NoAdjustment => "no_adjustment",
        }
    }
}

impl fmt::Display for AdjustmentMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AdjustmentMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Input(format!("unknown method '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub variant: Variant,
    pub n_features: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub n_reps: usize,
    pub train_moments: MomentSpec,
    /// Overrides the variant's grid when set.
    pub test_grid: Option<Vec<MomentSpec>>,
    pub methods: Vec<AdjustmentMethod>,
    pub base_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::new(Variant::FixedVarY)
    }
}

impl ExperimentConfig {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            n_features: 10,
            n_train: 1000,
            n_test: 1000,
            n_reps: 1000,
            train_moments: MomentSpec::default(),
            test_grid: None,
            methods: AdjustmentMethod::ALL.to_vec(),
            base_seed: 0,
        }
    }

    pub fn grid(&self) -> Vec<MomentSpec> {
        self.test_grid.clone().unwrap_or_else(|| self.variant.grid())
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid();
        if grid.len() != GRID_LEN {
            return Err(Error::Input(format!("test grid needs {GRID_LEN} entries, got {}", grid.len())));
        }
        self.train_moments.check()?;
        for spec in &grid {
            spec.check()?;
        }
        if self.n_features == 0 {
            return Err(Error::Input("need at least one feature".into()));
        }
        if self.n_train <= self.n_features + 2 || self.n_test == 0 {
            return Err(Error::Input("sample sizes too small for the regression fits".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Input("no adjustment methods selected".into()));
        }
        Ok(())
    }
}

/// Covariance entries of the `(U_C, U_Y)` errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorMoments {
    pub phi_cc: f64,
    pub phi_cy: f64,
    pub phi_yy: f64,
}

impl ErrorMoments {
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[self.phi_cc, self.phi_cy, self.phi_cy, self.phi_yy])
    }
}

/// Error covariance that, under `C = U_C` and `Y = β_YC C + U_Y`, produces the
/// moments in `spec`.
pub fn solve_error_moments(spec: &MomentSpec, beta_yc: f64) -> Result<ErrorMoments> {
    let phi_cc = spec.var_c;
    let phi_cy = spec.cov_yc - beta_yc * spec.var_c;
    // Var(Y) = β²φ_CC + φ_YY + 2βφ_CY
    let phi_yy = spec.var_y + beta_yc * beta_yc * spec.var_c - 2.0 * beta_yc * spec.cov_yc;
    let m = ErrorMoments { phi_cc, phi_cy, phi_yy };
    let min = m.matrix().symmetric_eigenvalues().min();
    if !min.is_finite() || min < -PSD_TOLERANCE {
        return Err(Error::Psd(format!("error moments {m:?} have minimum eigenvalue {min:e}")));
    }
    Ok(m)
}

/// `p × p` matrix with entries `rho^|i-j|`.
pub fn ar1_error_cov(p: usize, rho: f64) -> Result<DMatrix<f64>> {
    if !(rho.abs() < 1.0) {
        return Err(Error::Input(format!("|rho| must be below 1, got {rho}")));
    }
    Ok(DMatrix::from_fn(p, p, |i, j| rho.powi(i.abs_diff(j) as i32)))
}

/// Effects shared by the training and test sets of one replication.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicationParams {
    pub beta_xy: DVector<f64>,
    pub beta_xc: DVector<f64>,
    pub beta_yc: f64,
    pub rho: f64,
    /// Invalid draws discarded before this one.
    pub rejected: usize,
}

impl ReplicationParams {
    pub fn n_features(&self) -> usize {
        self.beta_xy.len()
    }
}

/// Draws `β ~ U(-1, 1)` and `ρ ~ U(-0.5, 0.5)`, redrawing from a fresh
/// sub-stream until the draw is valid for every moment spec.
pub fn sample_replication_params(seed: u64, n_features: usize, specs: &[MomentSpec]) -> Result<ReplicationParams> {
    let beta = Uniform::new(-1.0, 1.0).expect("valid range");
    let rho = Uniform::new(-0.5, 0.5).expect("valid range");
    for attempt in 0..MAX_PARAM_ATTEMPTS {
        let mut r = rng::stream(derive_seed(seed, attempt as u64), tags::PARAMS);
        let beta_xy = DVector::from_fn(n_features, |_, _| r.sample(beta));
        let beta_xc = DVector::from_fn(n_features, |_, _| r.sample(beta));
        let beta_yc = r.sample(beta);
        let rho = r.sample(rho);
        if specs.iter().all(|s| solve_error_moments(s, beta_yc).is_ok()) {
            return Ok(ReplicationParams { beta_xy, beta_xc, beta_yc, rho, rejected: attempt });
        }
    }
    Err(Error::ParamSearch { attempts: MAX_PARAM_ATTEMPTS })
}

/// Exogenous draws for one simulated set.
#[derive(Clone, Debug)]
pub struct ErrorDraws {
    pub u_c: DVector<f64>,
    pub u_y: DVector<f64>,
    pub u_x: DMatrix<f64>,
    pub moments: ErrorMoments,
}

pub fn draw_errors(params: &ReplicationParams, spec: &MomentSpec, n: usize, seed: u64, tag: u64) -> Result<ErrorDraws> {
    let moments = solve_error_moments(spec, params.beta_yc)?;
    let cy_factor = rng::covariance_factor(&moments.matrix())?;
    let x_factor = rng::covariance_factor(&ar1_error_cov(params.n_features(), params.rho)?)?;
    let mut r = rng::stream(seed, tag);
    let cy = rng::sample_gaussian(&mut r, n, &cy_factor);
    let u_x = rng::sample_gaussian(&mut r, n, &x_factor);
    Ok(ErrorDraws { u_c: cy.column(0).into_owned(), u_y: cy.column(1).into_owned(), u_x, moments })
}

pub fn feature_names(p: usize) -> Vec<String> {
    (1..=p).map(|j| format!("X{j}")).collect()
}

/// Builds the `(C, Y, X1..Xp)` dataset from errors and the given effects.
fn assemble(c: &DVector<f64>, y: &DVector<f64>, beta_xy: &DVector<f64>, beta_xc: &DVector<f64>, u_x: &DMatrix<f64>) -> Result<Dataset> {
    let (n, p) = u_x.shape();
    let mut data = DMatrix::zeros(n, p + 2);
    data.set_column(0, c);
    data.set_column(1, y);
    for j in 0..p {
        let col = u_x.column(j) + y * beta_xy[j] + c * beta_xc[j];
        data.set_column(j + 2, &col);
    }
    let mut names = vec!["C".to_string(), "Y".to_string()];
    names.extend(feature_names(p));
    let mut roles = vec![Role::Confounder, Role::Response];
    roles.extend(std::iter::repeat_n(Role::Feature, p));
    Dataset::new(names, roles, data, Provenance::Simulated)
}

/// A confounded dataset `C = U_C`, `Y = β_YC C + U_Y`, `X = β_XY Y + β_XC C + U_X`.
pub fn simulate_confounded(params: &ReplicationParams, draws: &ErrorDraws) -> Result<Dataset> {
    let y = &draws.u_c * params.beta_yc + &draws.u_y;
    assemble(&draws.u_c, &y, &params.beta_xy, &params.beta_xc, &draws.u_x)
}

#[derive(Clone, Debug)]
pub struct TrainingSets {
    pub confounded: Dataset,
    /// Confounder → feature effects removed.
    pub baseline1: Dataset,
    /// Confounder–response association removed.
    pub baseline2: Dataset,
}

/// The three training sets of one replication, all built from one draw of
/// the error terms.
pub fn generate_training_sets(params: &ReplicationParams, moments: &MomentSpec, n: usize, seed: u64) -> Result<TrainingSets> {
    let draws = draw_errors(params, moments, n, seed, tags::TRAIN)?;
    let confounded = simulate_confounded(params, &draws)?;
    let y = confounded.column("Y")?;
    let zero = DVector::zeros(params.n_features());
    let baseline1 = assemble(&draws.u_c, &y, &params.beta_xy, &zero, &draws.u_x)?;
    // U_Y minus its projection on U_C, so Y carries no association with C
    let phi = draws.moments;
    let y2 = &draws.u_y - &draws.u_c * (phi.phi_cy / phi.phi_cc);
    let baseline2 = assemble(&draws.u_c, &y2, &params.beta_xy, &params.beta_xc, &draws.u_x)?;
    Ok(TrainingSets { confounded, baseline1, baseline2 })
}

/// Closed-form expected test MSE of the linear predictor `b0 + bᵀX` on a
/// test population with moments `test`.
///
/// `weights` holds `b` alone or `(b0, b)`. With `adjusted_test` the
/// features are the deconfounded `X* = β_XY Y + U_X`, whose moments involve
/// only `Var(Y)`.
pub fn expected_mse_analytic(weights: &DVector<f64>, params: &ReplicationParams, test: &MomentSpec, adjusted_test: bool) -> Result<f64> {
    let p = params.n_features();
    let (b0, b) = match weights.len() {
        n if n == p => (0.0, weights.clone()),
        n if n == p + 1 => (weights[0], weights.rows(1, p).into_owned()),
        n => return Err(Error::Shape(format!("{n} weights for {p} features"))),
    };
    let sigma_u = ar1_error_cov(p, params.rho)?;
    let (sigma_x, cov_xy) = if adjusted_test {
        let bxy = &params.beta_xy;
        (bxy * bxy.transpose() * test.var_y + sigma_u, bxy * test.var_y)
    } else {
        let mut loadings = DMatrix::zeros(p, 2);
        loadings.set_column(0, &params.beta_xy);
        loadings.set_column(1, &params.beta_xc);
        let m = DMatrix::from_row_slice(2, 2, &[test.var_y, test.cov_yc, test.cov_yc, test.var_c]);
        (&loadings * m * loadings.transpose() + sigma_u, &params.beta_xy * test.var_y + &params.beta_xc * test.cov_yc)
    };
    Ok(b0 * b0 + test.var_y + (b.transpose() * sigma_x * &b)[(0, 0)] - 2.0 * b.dot(&cov_xy))
}

/// How test predictions are scored.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scoring {
    /// Mean squared error on the simulated test sets.
    Empirical,
    /// Closed-form expected MSE of the trained model on each test population.
    Analytic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MseRecord {
    pub replication: usize,
    pub method: AdjustmentMethod,
    /// 1-based position in the test grid.
    pub test_index: usize,
    pub mse: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityRecord {
    pub replication: usize,
    pub method: AdjustmentMethod,
    pub stability_error: f64,
}

#[derive(Clone, Debug)]
pub struct ReplicationOutcome {
    pub records: Vec<MseRecord>,
    pub rejected_draws: usize,
}

fn fit_predictor(train: &Dataset) -> Result<DVector<f64>> {
    let x = train.columns(&train.names_with_role(Role::Feature))?;
    let fit = ols(&x, &train.column("Y")?, true)?;
    let mut w = DVector::zeros(fit.coefficients.len() + 1);
    w[0] = fit.intercept;
    w.rows_mut(1, fit.coefficients.len()).copy_from(&fit.coefficients);
    Ok(w)
}

fn empirical_mse(weights: &DVector<f64>, x: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
    let p = x.ncols();
    let pred = (x * weights.rows(1, p)).add_scalar(weights[0]);
    (y - pred).norm_squared() / y.len() as f64
}

/// Seed of replication `rep`.
pub fn replication_seed(base_seed: u64, rep: usize) -> u64 {
    derive_seed(base_seed, rep as u64)
}

/// One full replication: draw parameters, simulate, adjust, fit and score.
pub fn run_replication(rep: usize, config: &ExperimentConfig) -> Result<ReplicationOutcome> {
    run_replication_scored(rep, config, Scoring::Empirical)
}

pub fn run_replication_scored(rep: usize, config: &ExperimentConfig, scoring: Scoring) -> Result<ReplicationOutcome> {
    config.validate()?;
    let grid = config.grid();
    let seed = replication_seed(config.base_seed, rep);
    let mut specs = grid.clone();
    specs.push(config.train_moments);
    let params = sample_replication_params(seed, config.n_features, &specs)?;
    let train = generate_training_sets(&params, &config.train_moments, config.n_train, derive_seed(seed, tags::TRAIN))?;
    let features = feature_names(config.n_features);

    let ca_fit = fit_anticausal(&train.confounded)?;
    let ca_train = train
        .confounded
        .replace_columns(&features, &ca_fit.direct_train_features(&train.confounded)?)?;

    let mut weights = Vec::new();
    for &method in &config.methods {
        let w = match method {
            AdjustmentMethod::CausalityAware => fit_predictor(&ca_train)?,
            AdjustmentMethod::Baseline1 => fit_predictor(&train.baseline1)?,
            AdjustmentMethod::Baseline2 => fit_predictor(&train.baseline2)?,
            AdjustmentMethod::NoAdjustment => fit_predictor(&train.confounded)?,
        };
        weights.push((method, w));
    }

    let mut records = Vec::with_capacity(config.methods.len() * GRID_LEN);
    let test_seed = derive_seed(seed, tags::TEST);
    let mut scores = vec![Vec::with_capacity(GRID_LEN); weights.len()];
    for (k, spec) in grid.iter().enumerate() {
        let empirical = match scoring {
            Scoring::Empirical => {
                let draws = draw_errors(&params, spec, config.n_test, test_seed, k as u64)?;
                let test = simulate_confounded(&params, &draws)?;
                let x = test.columns(&features)?;
                let x_star = ca_fit.direct_by_subtraction(&test)?;
                Some((x, x_star, test.column("Y")?))
            }
            Scoring::Analytic => None,
        };
        for (slot, (method, w)) in weights.iter().enumerate() {
            let adjusted = *method == AdjustmentMethod::CausalityAware;
            let mse = match &empirical {
                Some((x, x_star, y)) => empirical_mse(w, if adjusted { x_star } else { x }, y),
                None => expected_mse_analytic(w, &params, spec, adjusted)?,
            };
            scores[slot].push(mse);
        }
    }
    for (slot, (method, _)) in weights.iter().enumerate() {
        for (k, &mse) in scores[slot].iter().enumerate() {
            records.push(MseRecord { replication: rep, method: *method, test_index: k + 1, mse });
        }
    }
    Ok(ReplicationOutcome { records, rejected_draws: params.rejected })
}

/// Sample standard deviation (`n - 1` denominator).
pub fn stability_error(mse: &[f64]) -> f64 {
    let n = mse.len() as f64;
    if mse.len() < 2 {
        return 0.0;
    }
    let mean = mse.iter().sum::<f64>() / n;
    (mse.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

#[derive(Clone, Debug, Default)]
pub struct ResultsTable {
    pub records: Vec<MseRecord>,
    pub stability: Vec<StabilityRecord>,
    /// Replications that failed, with the error message.
    pub failures: Vec<(usize, String)>,
    pub rejected_draws: usize,
}

impl ResultsTable {
    /// Builds the table from per-replication outcomes, in replication order.
    pub fn from_outcomes(outcomes: Vec<(usize, Result<ReplicationOutcome>)>) -> Self {
        let mut table = ResultsTable::default();
        for (rep, outcome) in outcomes {
            match outcome {
                Ok(o) => {
                    table.rejected_draws += o.rejected_draws;
                    table.records.extend(o.records);
                }
                Err(e) => table.failures.push((rep, e.to_string())),
            }
        }
        table.recompute_stability();
        table
    }

    pub fn recompute_stability(&mut self) {
        let mut groups: std::collections::BTreeMap<(usize, AdjustmentMethod), Vec<(usize, f64)>> = Default::default();
        for r in &self.records {
            groups.entry((r.replication, r.method)).or_default().push((r.test_index, r.mse));
        }
        self.stability = groups
            .into_iter()
            .map(|((replication, method), mut v)| {
                v.sort_by_key(|&(k, _)| k);
                let mse: Vec<f64> = v.into_iter().map(|(_, m)| m).collect();
                StabilityRecord { replication, method, stability_error: stability_error(&mse) }
            })
            .collect();
    }

    pub fn stability_of(&self, method: AdjustmentMethod) -> Vec<f64> {
        self.stability.iter().filter(|s| s.method == method).map(|s| s.stability_error).collect()
    }

    pub fn mse_of(&self, method: AdjustmentMethod, test_index: usize) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.method == method && r.test_index == test_index)
            .map(|r| r.mse)
            .collect()
    }

    /// Paired stability errors of two methods over the replications where
    /// both are present.
    pub fn paired_stability(&self, a: AdjustmentMethod, b: AdjustmentMethod) -> (Vec<f64>, Vec<f64>) {
        let lookup: std::collections::BTreeMap<usize, f64> = self
            .stability
            .iter()
            .filter(|s| s.method == b)
            .map(|s| (s.replication, s.stability_error))
            .collect();
        self.stability
            .iter()
            .filter(|s| s.method == a)
            .filter_map(|s| lookup.get(&s.replication).map(|&other| (s.stability_error, other)))
            .unzip()
    }
}

/// Runs every replication on the current rayon pool. Results do not depend
/// on the number of threads.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultsTable> {
    run_experiment_scored(config, Scoring::Empirical)
}

pub fn run_experiment_scored(config: &ExperimentConfig, scoring: Scoring) -> Result<ResultsTable> {
    config.validate()?;
    let outcomes: Vec<_> = (0..config.n_reps)
        .into_par_iter()
        .map(|rep| (rep, run_replication_scored(rep, config, scoring)))
        .collect();
    Ok(ResultsTable::from_outcomes(outcomes))
}

/// Median of a sample (mean of the middle pair for even sizes).
pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// Linear-interpolation quantile (type 7).
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignTest {
    /// Pairs where the first sample is smaller.
    pub wins: u64,
    pub losses: u64,
    /// One-sided p-value against "first is smaller no more often than not".
    pub p_value: f64,
}

/// One-sided paired sign test that `a` tends to be smaller than `b`. Ties
/// are dropped.
pub fn sign_test(a: &[f64], b: &[f64]) -> SignTest {
    let wins = a.iter().zip(b).filter(|(x, y)| x < y).count() as u64;
    let losses = a.iter().zip(b).filter(|(x, y)| x > y).count() as u64;
    let n = wins + losses;
    let p_value = if wins == 0 {
        1.0
    } else {
        Binomial::new(0.5, n).expect("valid binomial").sf(wins - 1)
    };
    SignTest { wins, losses, p_value }
}
