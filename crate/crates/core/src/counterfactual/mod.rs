//! Counterfactual features for anticausal tasks and counterfactual
//! responses for causal tasks.
//!
//! Coefficients are estimated by regressing each effect variable on its
//! candidate parents in the reparameterized model. The counterfactual is the
//! linear predictor restricted to the pathway of interest plus the estimated
//! residual.

mod population;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dataset::{Dataset, Provenance};
use crate::error::{Error, Result};
use crate::regression::{ols, ols_many, OlsFit};
use crate::scm::Role;

pub use population::{
    altered_y_covariance, intervened_cf_covariance, intervened_model, population_cf_covariance, AlteredIntervention,
};

/// Which causal pathway the counterfactual keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PathTarget {
    /// Paths `Y → X` (anticausal) or `X → Y` (causal).
    Direct,
    /// Paths through the mediators.
    Indirect,
    /// The backdoor paths through the confounders.
    ConfoundingOnly,
}

impl PathTarget {
    pub const ALL: [PathTarget; 3] = [PathTarget::Direct, PathTarget::Indirect, PathTarget::ConfoundingOnly];

    pub fn as_str(self) -> &'static str {
        match self {
            PathTarget::Direct => "direct",
            PathTarget::Indirect => "indirect",
            PathTarget::ConfoundingOnly => "confounding",
        }
    }

    fn check_roles(self, n_c: usize, n_m: usize) -> Result<()> {
        match self {
            PathTarget::Indirect if n_m == 0 => Err(Error::Role("indirect target needs at least one mediator".into())),
            PathTarget::ConfoundingOnly if n_c == 0 => {
                Err(Error::Role("confounding target needs at least one confounder".into()))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for PathTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PathTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(PathTarget::Direct),
            "indirect" => Ok(PathTarget::Indirect),
            "confounding" | "confounding-only" | "confounding_only" => Ok(PathTarget::ConfoundingOnly),
            other => Err(Error::Input(format!("unknown target '{other}'"))),
        }
    }
}

/// Column names of a dataset grouped by role.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RoleColumns {
    pub features: Vec<String>,
    pub confounders: Vec<String>,
    pub mediators: Vec<String>,
    pub response: String,
}

impl RoleColumns {
    fn of(data: &Dataset) -> Result<Self> {
        let response = data.names_with_role(Role::Response);
        if response.len() != 1 {
            return Err(Error::Role(format!("expected one response column, found {}", response.len())));
        }
        let features = data.names_with_role(Role::Feature);
        if features.is_empty() {
            return Err(Error::Role("no feature columns".into()));
        }
        Ok(Self {
            features,
            confounders: data.names_with_role(Role::Confounder),
            mediators: data.names_with_role(Role::Mediator),
            response: response.into_iter().next().unwrap(),
        })
    }

    /// Checks that `data` carries the same feature set as the fit.
    fn check_features(&self, data: &Dataset) -> Result<()> {
        let found = data.names_with_role(Role::Feature);
        if found.len() != self.features.len() {
            return Err(Error::Shape(format!(
                "fit has {} features, data has {}",
                self.features.len(),
                found.len()
            )));
        }
        Ok(())
    }
}

fn concat_columns(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let n = blocks[0].nrows();
    let k = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(n, k);
    let mut at = 0;
    for b in blocks {
        out.columns_mut(at, b.ncols()).copy_from(b);
        at += b.ncols();
    }
    out
}

fn stack_coefficients(fits: &[OlsFit], from: usize, len: usize) -> DMatrix<f64> {
    DMatrix::from_fn(fits.len(), len, |i, j| fits[i].coefficients[from + j])
}

fn fit_each(design: &DMatrix<f64>, targets: &DMatrix<f64>, names: &[String]) -> Result<Vec<OlsFit>> {
    if targets.ncols() == 0 {
        return Ok(Vec::new());
    }
    Ok(ols_many(design, targets, true)?.into_iter().map(|f| f.with_names(names.to_vec())).collect())
}

/// Residuals `target - intercept - design · coefficients` for each fit.
fn residuals_under(fits: &[OlsFit], design: &DMatrix<f64>, targets: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut out = targets.clone();
    for (j, fit) in fits.iter().enumerate() {
        let pred = fit.predict(design)?;
        out.column_mut(j).zip_apply(&pred, |v, p| *v -= p);
    }
    Ok(out)
}

/// Per-feature and per-mediator regressions of an anticausal task.
#[derive(Clone, Debug)]
pub struct AnticausalFit {
    pub columns: RoleColumns,
    /// `X_j` on `(C, M, Y)`.
    pub features: Vec<OlsFit>,
    /// `M_j` on `(C, Y)`.
    pub mediators: Vec<OlsFit>,
    /// Column means of the training set, in training column order.
    pub train_means: Vec<(String, f64)>,
}

pub fn fit_anticausal(train: &Dataset) -> Result<AnticausalFit> {
    let cols = RoleColumns::of(train)?;
    let c = train.columns(&cols.confounders)?;
    let m = train.columns(&cols.mediators)?;
    let y = train.columns(std::slice::from_ref(&cols.response))?;
    let x = train.columns(&cols.features)?;

    let x_names: Vec<String> = cols
        .confounders
        .iter()
        .chain(&cols.mediators)
        .chain(std::iter::once(&cols.response))
        .cloned()
        .collect();
    let features = fit_each(&concat_columns(&[&c, &m, &y]), &x, &x_names)?;
    let m_names: Vec<String> = cols.confounders.iter().chain(std::iter::once(&cols.response)).cloned().collect();
    let mediators = fit_each(&concat_columns(&[&c, &y]), &m, &m_names)?;

    let n = train.nrows() as f64;
    let train_means = train
        .names()
        .iter()
        .zip(train.matrix().column_iter())
        .map(|(name, col)| (name.clone(), col.sum() / n))
        .collect();
    Ok(AnticausalFit { columns: cols, features, mediators, train_means })
}

impl AnticausalFit {
    fn n_c(&self) -> usize {
        self.columns.confounders.len()
    }

    fn n_m(&self) -> usize {
        self.columns.mediators.len()
    }

    /// Γ̂_XC, `n_X × n_C`.
    pub fn gamma_xc(&self) -> DMatrix<f64> {
        stack_coefficients(&self.features, 0, self.n_c())
    }

    /// Γ̂_XM, `n_X × n_M`.
    pub fn gamma_xm(&self) -> DMatrix<f64> {
        stack_coefficients(&self.features, self.n_c(), self.n_m())
    }

    /// Γ̂_XY, `n_X × 1`.
    pub fn gamma_xy(&self) -> DMatrix<f64> {
        stack_coefficients(&self.features, self.n_c() + self.n_m(), 1)
    }

    /// Γ̂_MC, `n_M × n_C`.
    pub fn gamma_mc(&self) -> DMatrix<f64> {
        stack_coefficients(&self.mediators, 0, self.n_c())
    }

    /// Γ̂_MY, `n_M × 1`.
    pub fn gamma_my(&self) -> DMatrix<f64> {
        stack_coefficients(&self.mediators, self.n_c(), 1)
    }

    pub fn feature_intercepts(&self) -> DVector<f64> {
        DVector::from_iterator(self.features.len(), self.features.iter().map(|f| f.intercept))
    }

    /// Ŵ_X on the training set, `n × n_X`.
    pub fn feature_residuals(&self) -> DMatrix<f64> {
        DMatrix::from_columns(&self.features.iter().map(|f| f.residuals.clone()).collect::<Vec<_>>())
    }

    /// Training-set counterfactual features for the direct pathway in the
    /// residual-addition form `μ̂ + Γ̂_XY Y + Ŵ_X`.
    pub fn direct_train_features(&self, train: &Dataset) -> Result<DMatrix<f64>> {
        let y = train.column(&self.columns.response)?;
        let w = self.feature_residuals();
        if w.nrows() != y.len() {
            return Err(Error::Shape("dataset is not the fitting set".into()));
        }
        let g = self.gamma_xy();
        let mu = self.feature_intercepts();
        Ok(DMatrix::from_fn(y.len(), self.features.len(), |i, j| mu[j] + g[(j, 0)] * y[i] + w[(i, j)]))
    }

    /// Direct-pathway features by subtraction, `X - Γ̂_XC C - Γ̂_XM M`.
    /// Needs no response column.
    pub fn direct_by_subtraction(&self, data: &Dataset) -> Result<DMatrix<f64>> {
        self.columns.check_features(data)?;
        let x = data.columns(&self.columns.features)?;
        let c = data.columns(&self.columns.confounders)?;
        let m = data.columns(&self.columns.mediators)?;
        Ok(x - c * self.gamma_xc().transpose() - m * self.gamma_xm().transpose())
    }

    /// Ŵ_X on `data` under the fitted coefficients.
    fn feature_residuals_on(&self, data: &Dataset) -> Result<DMatrix<f64>> {
        let cols = &self.columns;
        let design = concat_columns(&[
            &data.columns(&cols.confounders)?,
            &data.columns(&cols.mediators)?,
            &data.columns(std::slice::from_ref(&cols.response))?,
        ]);
        residuals_under(&self.features, &design, &data.columns(&cols.features)?)
    }
}

/// Replaces the features of `data` with counterfactual features keeping only
/// the `target` pathway.
///
/// The direct target works without labels; the other two need the response
/// column of `data` to estimate the residuals.
pub fn generate_cf_features(fit: &AnticausalFit, data: &Dataset, target: PathTarget) -> Result<Dataset> {
    let cols = &fit.columns;
    target.check_roles(cols.confounders.len(), cols.mediators.len())?;
    cols.check_features(data)?;
    let x_star = match target {
        PathTarget::Direct => fit.direct_by_subtraction(data)?,
        PathTarget::Indirect => {
            let w = fit.feature_residuals_on(data)?;
            let m = data.columns(&cols.mediators)?;
            let c = data.columns(&cols.confounders)?;
            let m_star = m - c * fit.gamma_mc().transpose();
            m_star * fit.gamma_xm().transpose() + w
        }
        PathTarget::ConfoundingOnly => {
            let w = fit.feature_residuals_on(data)?;
            data.columns(&cols.confounders)? * fit.gamma_xc().transpose() + w
        }
    };
    Ok(data
        .replace_columns(&cols.features, &x_star)?
        .with_provenance(Provenance::Adjusted(target.as_str().to_string())))
}

/// Output of the training/test adjustment for confounder-only graphs.
#[derive(Clone, Debug)]
pub struct Algorithm1Output {
    pub train: Dataset,
    pub test: Dataset,
    pub fit: AnticausalFit,
}

/// Deconfounds a labeled training set and an unlabeled test set.
///
/// Each feature is regressed on the response and the confounders in the
/// training set. Training features become `μ̂ + β̂_XY Y + Ŵ`; test features
/// become `X - Σ β̂_XC C`.
pub fn algorithm1_adjust(train: &Dataset, test: &Dataset) -> Result<Algorithm1Output> {
    if train.has_role(Role::Mediator) || test.has_role(Role::Mediator) {
        return Err(Error::Role(
            "mediators present; fit on confounders and response explicitly for total-effect adjustment".into(),
        ));
    }
    let fit = fit_anticausal(train)?;
    let tag = Provenance::Adjusted(PathTarget::Direct.as_str().to_string());
    let train_x = fit.direct_train_features(train)?;
    let test_x = fit.direct_by_subtraction(test)?;
    Ok(Algorithm1Output {
        train: train.replace_columns(&fit.columns.features, &train_x)?.with_provenance(tag.clone()),
        test: test.replace_columns(&fit.columns.features, &test_x)?.with_provenance(tag),
        fit,
    })
}

/// Response and mediator regressions of a causal task.
#[derive(Clone, Debug)]
pub struct CausalFit {
    pub columns: RoleColumns,
    /// `Y` on `(C, M, X)`.
    pub response: OlsFit,
    /// `M_j` on `(C, X)`.
    pub mediators: Vec<OlsFit>,
}

pub fn fit_causal(train: &Dataset) -> Result<CausalFit> {
    let cols = RoleColumns::of(train)?;
    let c = train.columns(&cols.confounders)?;
    let m = train.columns(&cols.mediators)?;
    let x = train.columns(&cols.features)?;
    let y = train.column(&cols.response)?;
    let y_names: Vec<String> = cols.confounders.iter().chain(&cols.mediators).chain(&cols.features).cloned().collect();
    let response = ols(&concat_columns(&[&c, &m, &x]), &y, true)?.with_names(y_names);
    let m_names: Vec<String> = cols.confounders.iter().chain(&cols.features).cloned().collect();
    let mediators = fit_each(&concat_columns(&[&c, &x]), &m, &m_names)?;
    Ok(CausalFit { columns: cols, response, mediators })
}

impl CausalFit {
    fn n_c(&self) -> usize {
        self.columns.confounders.len()
    }

    fn n_m(&self) -> usize {
        self.columns.mediators.len()
    }

    fn n_x(&self) -> usize {
        self.columns.features.len()
    }

    /// Γ̂_YC, `1 × n_C`.
    pub fn gamma_yc(&self) -> DMatrix<f64> {
        stack_coefficients(std::slice::from_ref(&self.response), 0, self.n_c())
    }

    /// Γ̂_YM, `1 × n_M`.
    pub fn gamma_ym(&self) -> DMatrix<f64> {
        stack_coefficients(std::slice::from_ref(&self.response), self.n_c(), self.n_m())
    }

    /// Γ̂_YX, `1 × n_X`.
    pub fn gamma_yx(&self) -> DMatrix<f64> {
        stack_coefficients(std::slice::from_ref(&self.response), self.n_c() + self.n_m(), self.n_x())
    }

    /// Γ̂_MC, `n_M × n_C`.
    pub fn gamma_mc(&self) -> DMatrix<f64> {
        stack_coefficients(&self.mediators, 0, self.n_c())
    }

    /// Γ̂_MX, `n_M × n_X`.
    pub fn gamma_mx(&self) -> DMatrix<f64> {
        stack_coefficients(&self.mediators, self.n_c(), self.n_x())
    }
}

/// Counterfactual response keeping only the `target` pathway. Requires a
/// labeled dataset.
pub fn generate_cf_response(fit: &CausalFit, data: &Dataset, target: PathTarget) -> Result<DVector<f64>> {
    let cols = &fit.columns;
    target.check_roles(cols.confounders.len(), cols.mediators.len())?;
    cols.check_features(data)?;
    let c = data.columns(&cols.confounders)?;
    let m = data.columns(&cols.mediators)?;
    let x = data.columns(&cols.features)?;
    let y = data.columns(std::slice::from_ref(&cols.response))?;
    let w = residuals_under(std::slice::from_ref(&fit.response), &concat_columns(&[&c, &m, &x]), &y)?;
    let y_star = match target {
        // μ̂ + Γ̂_YX X + Ŵ_Y, i.e. Y with the confounder and mediator terms removed
        PathTarget::Direct => x * fit.gamma_yx().transpose() + w.add_scalar(fit.response.intercept),
        PathTarget::Indirect => {
            let m_star = m - c * fit.gamma_mc().transpose();
            m_star * fit.gamma_ym().transpose() + w
        }
        PathTarget::ConfoundingOnly => c * fit.gamma_yc().transpose() + w,
    };
    Ok(y_star.column(0).into_owned())
}
