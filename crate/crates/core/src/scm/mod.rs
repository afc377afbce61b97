//! Linear structural causal models.
//!
//! A model is `Z = Θ Z + μ + U` with `Cov(U) = Ψ`. Entry `theta[(k, j)]` is
//! the direct effect of variable `j` on variable `k`. Every variable carries a
//! [`Role`]; the [`Task`] decides which role pairs may be joined by an edge.

mod io;
mod reparam;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Provenance};
use crate::error::{Error, Result};
use crate::rng::{self, PSD_TOLERANCE};

pub use io::SCM_FORMAT;
pub use reparam::{
    covariance_decomposition, reparameterize, total_effects, Block, CovarianceDecomposition,
    ReparameterizedScm, TotalEffects,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Feature,
    Confounder,
    Mediator,
    Response,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::Feature, Role::Confounder, Role::Mediator, Role::Response];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Feature => "feature",
            Role::Confounder => "confounder",
            Role::Mediator => "mediator",
            Role::Response => "response",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "feature" | "x" => Ok(Role::Feature),
            "confounder" | "c" => Ok(Role::Confounder),
            "mediator" | "m" => Ok(Role::Mediator),
            "response" | "y" => Ok(Role::Response),
            other => Err(Error::Role(format!("unknown role '{other}'"))),
        }
    }
}

/// Direction of the prediction task.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// The response causes the features.
    #[default]
    Anticausal,
    /// The features cause the response.
    Causal,
}

impl Task {
    /// Whether a `parent → child` edge between these roles is allowed.
    pub fn allows_edge(self, parent: Role, child: Role) -> bool {
        use Role::*;
        match self {
            Task::Anticausal => matches!(
                (parent, child),
                (Confounder, Confounder | Response | Mediator | Feature)
                    | (Response, Mediator | Feature)
                    | (Mediator, Mediator | Feature)
                    | (Feature, Feature)
            ),
            Task::Causal => matches!(
                (parent, child),
                (Confounder, Confounder | Feature | Mediator | Response)
                    | (Feature, Feature | Mediator | Response)
                    | (Mediator, Mediator | Response)
            ),
        }
    }
}

/// Population mean vector and covariance matrix of all model variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Moments {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearScm {
    names: Vec<String>,
    roles: Vec<Role>,
    task: Task,
    theta: DMatrix<f64>,
    mu: DVector<f64>,
    error_cov: DMatrix<f64>,
}

impl LinearScm {
    /// Assembles a model after checking dimensions. Semantic checks are
    /// done by [`LinearScm::validate`].
    pub fn new(
        names: Vec<String>,
        roles: Vec<Role>,
        task: Task,
        theta: DMatrix<f64>,
        mu: DVector<f64>,
        error_cov: DMatrix<f64>,
    ) -> Result<Self> {
        let p = names.len();
        if roles.len() != p {
            return Err(Error::Shape(format!("{} names but {} roles", p, roles.len())));
        }
        if theta.shape() != (p, p) {
            return Err(Error::Shape(format!("theta is {:?}, expected ({p}, {p})", theta.shape())));
        }
        if mu.len() != p {
            return Err(Error::Shape(format!("mu has length {}, expected {p}", mu.len())));
        }
        if error_cov.shape() != (p, p) {
            return Err(Error::Shape(format!(
                "error_cov is {:?}, expected ({p}, {p})",
                error_cov.shape()
            )));
        }
        let unique: BTreeSet<&str> = names.iter().map(String::as_str).collect();
        if unique.len() != p {
            return Err(Error::Input("variable names must be unique".into()));
        }
        Ok(Self { names, roles, task, theta, mu, error_cov })
    }

    pub fn builder(task: Task) -> ScmBuilder {
        ScmBuilder { task, names: Vec::new(), roles: Vec::new(), variances: Vec::new(), means: Vec::new(), edges: Vec::new(), covariances: Vec::new() }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn theta(&self) -> &DMatrix<f64> {
        &self.theta
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn error_cov(&self) -> &DMatrix<f64> {
        &self.error_cov
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Indices of the variables with `role`, in declaration order.
    pub fn indices(&self, role: Role) -> Vec<usize> {
        role_indices(&self.roles, role)
    }

    pub fn response_index(&self) -> Option<usize> {
        self.roles.iter().position(|&r| r == Role::Response)
    }

    /// Path coefficient of the edge `from → to`.
    pub fn coefficient(&self, from: &str, to: &str) -> Option<f64> {
        Some(self.theta[(self.index_of(to)?, self.index_of(from)?)])
    }

    /// Copy with one path coefficient replaced.
    pub fn with_coefficient(&self, from: usize, to: usize, value: f64) -> Self {
        let mut out = self.clone();
        out.theta[(to, from)] = value;
        out
    }

    /// Checks roles, edge legality, acyclicity and the error covariance, and
    /// returns a topological order of the variables.
    pub fn validate(&self) -> Result<Vec<usize>> {
        let p = self.len();
        let count = |r| self.roles.iter().filter(|&&x| x == r).count();
        if count(Role::Response) != 1 {
            return Err(Error::Role(format!(
                "exactly one response variable required, found {}",
                count(Role::Response)
            )));
        }
        if count(Role::Feature) == 0 {
            return Err(Error::Role("at least one feature variable required".into()));
        }
        if self.theta.iter().chain(self.mu.iter()).chain(self.error_cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Input("model parameters must be finite".into()));
        }
        for k in 0..p {
            for j in 0..p {
                if k != j && self.theta[(k, j)] != 0.0 && !self.task.allows_edge(self.roles[j], self.roles[k]) {
                    return Err(Error::Role(format!(
                        "illegal edge {} ({}) -> {} ({}) in {:?} task",
                        self.names[j], self.roles[j], self.names[k], self.roles[k], self.task
                    )));
                }
            }
        }
        let order = self.topological_order()?;
        self.check_error_cov()?;
        Ok(order)
    }

    fn topological_order(&self) -> Result<Vec<usize>> {
        let p = self.len();
        let mut indegree: Vec<usize> = (0..p)
            .map(|k| (0..p).filter(|&j| self.theta[(k, j)] != 0.0).count())
            .collect();
        let mut ready: BTreeSet<usize> = (0..p).filter(|&k| indegree[k] == 0).collect();
        let mut order = Vec::with_capacity(p);
        while let Some(j) = ready.pop_first() {
            order.push(j);
            for k in 0..p {
                if k != j && self.theta[(k, j)] != 0.0 {
                    indegree[k] -= 1;
                    if indegree[k] == 0 {
                        ready.insert(k);
                    }
                }
            }
        }
        if order.len() < p {
            let nodes = (0..p)
                .filter(|&k| indegree[k] > 0)
                .map(|k| self.names[k].clone())
                .collect();
            return Err(Error::Cycle { nodes });
        }
        Ok(order)
    }

    fn check_error_cov(&self) -> Result<()> {
        let asym = (&self.error_cov - self.error_cov.transpose()).abs().max();
        if asym > PSD_TOLERANCE {
            return Err(Error::Psd(format!("error_cov is not symmetric (max asymmetry {asym:e})")));
        }
        if !self.is_empty() {
            let min = self.error_cov.clone().symmetric_eigenvalues().min();
            if min < -PSD_TOLERANCE {
                return Err(Error::Psd(format!("error_cov minimum eigenvalue {min:e}")));
            }
        }
        Ok(())
    }

    /// `(I - Θ)⁻¹`, built row by row in topological order.
    pub fn total_effect_matrix(&self) -> Result<DMatrix<f64>> {
        let order = self.validate()?;
        Ok(self.total_effect_matrix_in(&order))
    }

    fn total_effect_matrix_in(&self, order: &[usize]) -> DMatrix<f64> {
        let p = self.len();
        let mut inv = DMatrix::<f64>::zeros(p, p);
        for &k in order {
            inv[(k, k)] = 1.0;
            for j in 0..p {
                let t = self.theta[(k, j)];
                if t != 0.0 {
                    // row j is final because j precedes k
                    for c in 0..p {
                        inv[(k, c)] += t * inv[(j, c)];
                    }
                }
            }
        }
        inv
    }

    /// Population mean `(I-Θ)⁻¹μ` and covariance `(I-Θ)⁻¹Ψ(I-Θ)⁻ᵀ`.
    pub fn implied_moments(&self) -> Result<Moments> {
        let a = self.total_effect_matrix()?;
        let cov = &a * &self.error_cov * a.transpose();
        let cov = (&cov + cov.transpose()) * 0.5;
        Ok(Moments { mean: &a * &self.mu, cov })
    }

    /// Draws `n` samples; deterministic in `seed`.
    pub fn simulate(&self, n: usize, seed: u64) -> Result<Dataset> {
        self.simulate_with_errors(n, seed).map(|(d, _)| d)
    }

    /// Like [`LinearScm::simulate`] but also returns the `n × p` matrix of
    /// exogenous error draws.
    pub fn simulate_with_errors(&self, n: usize, seed: u64) -> Result<(Dataset, DMatrix<f64>)> {
        if n == 0 {
            return Err(Error::Input("sample count must be at least 1".into()));
        }
        self.validate()?;
        let factor = rng::covariance_factor(&self.error_cov)?;
        let mut stream = rng::stream(seed, rng::tags::SIMULATE);
        let errors = rng::sample_gaussian(&mut stream, n, &factor);
        let data = self.simulate_from_errors(&errors)?;
        Ok((data, errors))
    }

    /// Solves `Z = ΘZ + μ + U` for each row of `errors`.
    pub fn simulate_from_errors(&self, errors: &DMatrix<f64>) -> Result<Dataset> {
        let order = self.validate()?;
        let (n, p) = errors.shape();
        if p != self.len() {
            return Err(Error::Shape(format!("errors have {p} columns, model has {}", self.len())));
        }
        let mut data = DMatrix::<f64>::zeros(n, p);
        for &k in &order {
            let mut col = errors.column(k).add_scalar(self.mu[k]);
            for j in 0..p {
                let t = self.theta[(k, j)];
                if t != 0.0 {
                    col.axpy(t, &data.column(j), 1.0);
                }
            }
            data.set_column(k, &col);
        }
        Dataset::new(self.names.clone(), self.roles.clone(), data, Provenance::Simulated)
    }

    /// Equivalent model in standardized form: zero means, unit variances and
    /// path coefficients `θ_kj · sd_j / sd_k`.
    pub fn standardized(&self) -> Result<Self> {
        let m = self.implied_moments()?;
        let sd: Vec<f64> = m.cov.diagonal().iter().map(|v| v.sqrt()).collect();
        if sd.iter().any(|&s| s <= 0.0) {
            return Err(Error::Input("cannot standardize a variable with zero variance".into()));
        }
        let p = self.len();
        let theta = DMatrix::from_fn(p, p, |k, j| self.theta[(k, j)] * sd[j] / sd[k]);
        let error_cov = DMatrix::from_fn(p, p, |k, j| self.error_cov[(k, j)] / (sd[k] * sd[j]));
        Self::new(self.names.clone(), self.roles.clone(), self.task, theta, DVector::zeros(p), error_cov)
    }

    /// True when `Cov(U)` has no entries linking different roles.
    pub fn has_role_independent_errors(&self) -> bool {
        let p = self.len();
        (0..p).all(|i| (0..p).all(|j| self.roles[i] == self.roles[j] || self.error_cov[(i, j)] == 0.0))
    }
}

pub(crate) fn role_indices(roles: &[Role], role: Role) -> Vec<usize> {
    roles.iter().enumerate().filter(|(_, &r)| r == role).map(|(i, _)| i).collect()
}

/// Submatrix with the given rows and columns.
pub(crate) fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Coefficients of the population regression of `target` on `regressors`,
/// from a covariance matrix: solves `Σ_RR b = Σ_R,target`.
pub fn population_regression(cov: &DMatrix<f64>, target: usize, regressors: &[usize]) -> Result<DVector<f64>> {
    let srr = submatrix(cov, regressors, regressors);
    let srt = DVector::from_iterator(regressors.len(), regressors.iter().map(|&r| cov[(r, target)]));
    srr.cholesky()
        .map(|c| c.solve(&srt))
        .ok_or(Error::Rank { ratio: 0.0, threshold: 1e-10 })
}

/// Incremental construction of a [`LinearScm`] by variable and edge names.
#[derive(Clone, Debug)]
pub struct ScmBuilder {
    task: Task,
    names: Vec<String>,
    roles: Vec<Role>,
    variances: Vec<f64>,
    means: Vec<f64>,
    edges: Vec<(String, String, f64)>,
    covariances: Vec<(String, String, f64)>,
}

impl ScmBuilder {
    /// Adds a variable with independent error variance `error_var`.
    pub fn var(mut self, name: &str, role: Role, error_var: f64) -> Self {
        self.names.push(name.to_string());
        self.roles.push(role);
        self.variances.push(error_var);
        self.means.push(0.0);
        self
    }

    pub fn mean(mut self, name: &str, mu: f64) -> Self {
        if let Some(i) = self.names.iter().position(|n| n == name) {
            self.means[i] = mu;
        }
        self
    }

    /// Adds the edge `from → to` with path coefficient `coef`.
    pub fn edge(mut self, from: &str, to: &str, coef: f64) -> Self {
        self.edges.push((from.to_string(), to.to_string(), coef));
        self
    }

    /// Sets the error covariance between two variables.
    pub fn error_cov(mut self, a: &str, b: &str, cov: f64) -> Self {
        self.covariances.push((a.to_string(), b.to_string(), cov));
        self
    }

    pub fn build(self) -> Result<LinearScm> {
        let p = self.names.len();
        let idx = |name: &str| {
            self.names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::Input(format!("unknown variable '{name}'")))
        };
        let mut theta = DMatrix::zeros(p, p);
        for (from, to, coef) in &self.edges {
            theta[(idx(to)?, idx(from)?)] = *coef;
        }
        let mut error_cov = DMatrix::from_diagonal(&DVector::from_vec(self.variances.clone()));
        for (a, b, c) in &self.covariances {
            let (i, j) = (idx(a)?, idx(b)?);
            error_cov[(i, j)] = *c;
            error_cov[(j, i)] = *c;
        }
        LinearScm::new(self.names, self.roles, self.task, theta, DVector::from_vec(self.means), error_cov)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    fn chain() -> LinearScm {
        LinearScm::builder(Task::Anticausal)
            .var("X", Role::Feature, 1.0)
            .var("Y", Role::Response, 1.0)
            .var("C", Role::Confounder, 1.0)
            .edge("C", "Y", 0.8)
            .edge("Y", "X", 0.5)
            .build()
            .unwrap()
    }

    #[test]
    fn chain_order() {
        let scm = chain();
        let names: Vec<_> = scm.validate().unwrap().iter().map(|&i| scm.names()[i].clone()).collect();
        assert_eq!(names, ["C", "Y", "X"]);
    }

    #[test]
    fn two_cycle_is_rejected() {
        let scm = LinearScm::builder(Task::Anticausal)
            .var("X1", Role::Feature, 1.0)
            .var("X2", Role::Feature, 1.0)
            .var("Y", Role::Response, 1.0)
            .edge("X1", "X2", 0.3)
            .edge("X2", "X1", 0.2)
            .build()
            .unwrap();
        match scm.validate() {
            Err(Error::Cycle { nodes }) => assert_eq!(nodes, ["X1", "X2"]),
            other => panic!("expected cycle, got {other:?}"),
        }
    }

    #[test]
    fn self_loop_is_a_cycle() {
        let scm = chain().with_coefficient(0, 0, 0.1);
        assert!(matches!(scm.validate(), Err(Error::Cycle { .. })));
    }

    #[test]
    fn illegal_role_edges() {
        let scm = chain();
        let (x, y, c) = (0, 1, 2);
        // X -> Y is not part of an anticausal task
        assert!(matches!(scm.with_coefficient(x, y, 0.1).validate(), Err(Error::Role(_))));
        assert!(matches!(scm.with_coefficient(y, c, 0.1).validate(), Err(Error::Role(_))));
    }

    #[test]
    fn role_counts() {
        let no_response = LinearScm::builder(Task::Anticausal).var("X", Role::Feature, 1.0).build().unwrap();
        assert!(matches!(no_response.validate(), Err(Error::Role(_))));
        let no_feature = LinearScm::builder(Task::Anticausal).var("Y", Role::Response, 1.0).build().unwrap();
        assert!(matches!(no_feature.validate(), Err(Error::Role(_))));
    }

    #[test]
    fn indefinite_error_cov() {
        let scm = LinearScm::builder(Task::Anticausal)
            .var("X", Role::Feature, 1.0)
            .var("Y", Role::Response, 1.0)
            .error_cov("X", "Y", 2.0)
            .build()
            .unwrap();
        assert!(matches!(scm.validate(), Err(Error::Psd(_))));
    }

    #[test]
    fn fig_s6_order() {
        let scm = models::fig_s6(&models::FIG_S6_DEFAULT);
        let order = scm.validate().unwrap();
        let pos = |name: &str| order.iter().position(|&i| scm.names()[i] == name).unwrap();
        assert!(pos("C2") < pos("C1"));
        assert!(pos("C1") < pos("C3"));
        assert!(pos("C3") < pos("Y"));
    }

    #[test]
    fn no_edges_unit_errors_give_identity() {
        let scm = LinearScm::builder(Task::Anticausal)
            .var("X", Role::Feature, 1.0)
            .var("C", Role::Confounder, 1.0)
            .var("Y", Role::Response, 1.0)
            .build()
            .unwrap();
        assert_eq!(scm.implied_moments().unwrap().cov, DMatrix::identity(3, 3));
    }

    #[test]
    fn standardized_chain_covariance() {
        // X <- Y <- C plus C -> X, unit variances
        let (yc, xy, xc) = (0.8, 0.5, 0.3);
        let var_uy = 1.0 - yc * yc;
        let var_ux = 1.0 - (xy * xy + xc * xc + 2.0 * xy * xc * yc);
        let scm = LinearScm::builder(Task::Anticausal)
            .var("C", Role::Confounder, 1.0)
            .var("Y", Role::Response, var_uy)
            .var("X", Role::Feature, var_ux)
            .edge("C", "Y", yc)
            .edge("Y", "X", xy)
            .edge("C", "X", xc)
            .build()
            .unwrap();
        let cov = scm.implied_moments().unwrap().cov;
        // path sum: direct + backdoor
        assert!((cov[(2, 1)] - (xy + xc * yc)).abs() < 1e-14);
        assert!((cov[(2, 1)] - 0.74).abs() < 1e-14);
        for i in 0..3 {
            assert!((cov[(i, i)] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn triangular_solve_matches_dense_inverse() {
        let scm = models::fig_s6(&models::FIG_S6_DEFAULT);
        let tri = scm.total_effect_matrix().unwrap();
        let dense = (DMatrix::identity(scm.len(), scm.len()) - scm.theta()).try_inverse().unwrap();
        assert!((tri - dense).abs().max() < 1e-12);
    }

    #[test]
    fn simulate_rejects_empty_and_is_deterministic() {
        let scm = chain();
        assert!(matches!(scm.simulate(0, 1), Err(Error::Input(_))));
        let a = scm.simulate(100, 42).unwrap();
        let b = scm.simulate(100, 42).unwrap();
        assert_eq!(a.matrix().as_slice(), b.matrix().as_slice());
        let c = scm.simulate(100, 43).unwrap();
        assert_ne!(a.matrix().as_slice(), c.matrix().as_slice());
    }

    #[test]
    fn standardize_gives_unit_variances() {
        let scm = LinearScm::builder(Task::Anticausal)
            .var("C", Role::Confounder, 2.0)
            .var("Y", Role::Response, 0.5)
            .var("X", Role::Feature, 3.0)
            .edge("C", "Y", 1.5)
            .edge("Y", "X", -2.0)
            .mean("X", 4.0)
            .build()
            .unwrap();
        let s = scm.standardized().unwrap();
        let m = s.implied_moments().unwrap();
        for i in 0..3 {
            assert!((m.cov[(i, i)] - 1.0).abs() < 1e-12);
            assert_eq!(m.mean[i], 0.0);
        }
        // correlations are preserved
        let orig = scm.implied_moments().unwrap().cov;
        let corr = orig[(2, 0)] / (orig[(2, 2)] * orig[(0, 0)]).sqrt();
        assert!((m.cov[(2, 0)] - corr).abs() < 1e-12);
    }
}
