//! Population-level covariances of the counterfactual constructions.

use nalgebra::DMatrix;

use super::PathTarget;
use crate::error::{Error, Result};
use crate::scm::{reparameterize, Block, LinearScm, Role, Task};

/// Closed-form covariance between the counterfactual and the untouched side
/// of the task.
///
/// Anticausal models give `Cov(X*, Y)` as an `n_X × 1` matrix: `Γ_XY Var(Y)`,
/// `Γ_XM Γ_MY Var(Y)` or `Γ_XC Cov(C) Γ_YCᵀ`. Causal models give
/// `Cov(Y*, X)` as a `1 × n_X` matrix: `Γ_YX Cov(X)`, `Γ_YM Γ_MX Cov(X)` or
/// `Γ_YC Cov(C) Γ_XCᵀ`.
pub fn population_cf_covariance(scm: &LinearScm, target: PathTarget) -> Result<DMatrix<f64>> {
    scm.validate()?;
    if !scm.has_role_independent_errors() {
        return Err(Error::Input("closed forms need error terms that are uncorrelated across roles".into()));
    }
    target.check_roles(scm.indices(Role::Confounder).len(), scm.indices(Role::Mediator).len())?;
    let r = reparameterize(scm)?;
    let cov = scm.implied_moments()?.cov;
    let block = |a: Role, b: Role| {
        let (i, j) = (scm.indices(a), scm.indices(b));
        DMatrix::from_fn(i.len(), j.len(), |p, q| cov[(i[p], j[q])])
    };
    let cov_c = block(Role::Confounder, Role::Confounder);
    Ok(match scm.task() {
        Task::Anticausal => {
            let var_y = block(Role::Response, Role::Response)[(0, 0)];
            match target {
                PathTarget::Direct => r.gamma(Block::XY) * var_y,
                PathTarget::Indirect => r.gamma(Block::XM) * r.gamma(Block::MY) * var_y,
                PathTarget::ConfoundingOnly => r.gamma(Block::XC) * cov_c * r.gamma(Block::YC).transpose(),
            }
        }
        Task::Causal => {
            let cov_x = block(Role::Feature, Role::Feature);
            match target {
                PathTarget::Direct => r.gamma(Block::YX) * cov_x,
                PathTarget::Indirect => r.gamma(Block::YM) * r.gamma(Block::MX) * cov_x,
                PathTarget::ConfoundingOnly => r.gamma(Block::YC) * cov_c * r.gamma(Block::XC).transpose(),
            }
        }
    })
}

/// The model after the intervention defining the counterfactual: the
/// mechanisms of the features (anticausal) or of the response (causal) lose
/// every input outside the target pathway, and for the indirect pathway the
/// mediators also lose their confounder inputs.
///
/// Features have no children outside the feature set in an anticausal task,
/// and the response has none in a causal task, so the counterfactual
/// variables can replace the factual ones in place while sharing all error
/// terms. Everything upstream is unchanged.
pub fn intervened_model(scm: &LinearScm, target: PathTarget) -> Result<LinearScm> {
    scm.validate()?;
    target.check_roles(scm.indices(Role::Confounder).len(), scm.indices(Role::Mediator).len())?;
    let (effect, cause) = match scm.task() {
        Task::Anticausal => (Role::Feature, Role::Response),
        Task::Causal => (Role::Response, Role::Feature),
    };
    let cut: &[(Role, Role)] = match target {
        PathTarget::Direct => &[(effect, Role::Confounder), (effect, Role::Mediator)],
        PathTarget::Indirect => &[(effect, Role::Confounder), (effect, cause), (Role::Mediator, Role::Confounder)],
        PathTarget::ConfoundingOnly => &[(effect, Role::Mediator), (effect, cause)],
    };
    let mut out = scm.clone();
    for &(child, parent) in cut {
        for i in scm.indices(child) {
            for j in scm.indices(parent) {
                out = out.with_coefficient(j, i, 0.0);
            }
        }
    }
    Ok(out)
}

/// Covariance of the counterfactual with the untouched side, read off the
/// implied moments of [`intervened_model`]; same shape as
/// [`population_cf_covariance`].
pub fn intervened_cf_covariance(scm: &LinearScm, target: PathTarget) -> Result<DMatrix<f64>> {
    let model = intervened_model(scm, target)?;
    let cov = model.implied_moments()?.cov;
    let x = scm.indices(Role::Feature);
    let y = scm.response_index().expect("validated");
    Ok(match scm.task() {
        Task::Anticausal => DMatrix::from_fn(x.len(), 1, |i, _| cov[(x[i], y)]),
        Task::Causal => DMatrix::from_fn(1, x.len(), |_, j| cov[(y, x[j])]),
    })
}

/// Interventions that alter the response instead of the features.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlteredIntervention {
    /// Hold the confounder at its mean.
    FixConfounder,
    /// Delete the confounder → response edge.
    CutConfounderToY,
}

/// `Cov(X*, Y*)` when the intervention also changes the response, for a
/// standardized model with one feature, one confounder and no mediator.
pub fn altered_y_covariance(scm: &LinearScm, variant: AlteredIntervention) -> Result<f64> {
    scm.validate()?;
    let count = |r| scm.indices(r).len();
    if scm.task() != Task::Anticausal || count(Role::Feature) != 1 || count(Role::Confounder) != 1 || count(Role::Mediator) != 0 {
        return Err(Error::Input("need an anticausal model with one feature, one confounder and no mediator".into()));
    }
    let m = scm.implied_moments()?;
    if m.cov.diagonal().iter().any(|v| (v - 1.0).abs() > 1e-9) {
        return Err(Error::Input("model is not standardized".into()));
    }
    let (x, c, y) = (scm.indices(Role::Feature)[0], scm.indices(Role::Confounder)[0], scm.response_index().unwrap());
    let mut altered = scm.with_coefficient(c, y, 0.0);
    if variant == AlteredIntervention::FixConfounder {
        // C ≡ E[C]: its contribution moves into the intercepts
        let c_value = m.mean[c];
        let (t_yc, t_xc) = (scm.theta()[(y, c)], scm.theta()[(x, c)]);
        altered = altered.with_coefficient(c, x, 0.0);
        let mut mu = altered.mu().clone();
        mu[y] += t_yc * c_value;
        mu[x] += t_xc * c_value;
        altered = LinearScm::new(
            altered.names().to_vec(),
            altered.roles().to_vec(),
            altered.task(),
            altered.theta().clone(),
            mu,
            altered.error_cov().clone(),
        )?;
    }
    Ok(altered.implied_moments()?.cov[(x, y)])
}
