//! Reference graphs used in documentation, tests and the CLI examples.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scm::{LinearScm, Role, Task};

/// Edges `(from, to)` of the nine-variable anticausal example with three
/// confounders, two mediators and three features.
pub const FIG_S6_EDGES: [(&str, &str); 15] = [
    ("C2", "C1"),
    ("C1", "C3"),
    ("C2", "C3"),
    ("C3", "Y"),
    ("M2", "M1"),
    ("C3", "M2"),
    ("Y", "M2"),
    ("X1", "X2"),
    ("X1", "X3"),
    ("X2", "X3"),
    ("C2", "X1"),
    ("M2", "X1"),
    ("M1", "X3"),
    ("Y", "X2"),
    ("Y", "X3"),
];

pub const FIG_S6_DEFAULT: [f64; 15] =
    [0.6, -0.5, 0.4, 0.7, 0.5, -0.3, 0.6, 0.4, -0.3, 0.5, 0.7, -0.4, 0.3, 0.8, -0.5];

const FIG_S6_VARS: [(&str, Role); 9] = [
    ("C1", Role::Confounder),
    ("C2", Role::Confounder),
    ("C3", Role::Confounder),
    ("M1", Role::Mediator),
    ("M2", Role::Mediator),
    ("X1", Role::Feature),
    ("X2", Role::Feature),
    ("X3", Role::Feature),
    ("Y", Role::Response),
];

/// The nine-variable anticausal example with unit error variances and the
/// given path coefficients, in [`FIG_S6_EDGES`] order.
pub fn fig_s6(coefs: &[f64; 15]) -> LinearScm {
    let mut b = LinearScm::builder(Task::Anticausal);
    for (name, role) in FIG_S6_VARS {
        b = b.var(name, role, 1.0);
    }
    for (&(from, to), &c) in FIG_S6_EDGES.iter().zip(coefs) {
        b = b.edge(from, to, c);
    }
    b.build().expect("static graph")
}

/// Edges of the seven-variable causal example: two confounders, two
/// mediators and two features.
pub const FIG_S11_EDGES: [(&str, &str); 11] = [
    ("C1", "X1"),
    ("C1", "X2"),
    ("C1", "C2"),
    ("C2", "M2"),
    ("C2", "Y"),
    ("X1", "X2"),
    ("X1", "Y"),
    ("X2", "M1"),
    ("X2", "Y"),
    ("M1", "M2"),
    ("M2", "Y"),
];

pub const FIG_S11_DEFAULT: [f64; 11] = [0.6, -0.4, 0.5, 0.3, 0.4, 0.5, 0.3, 0.6, -0.2, 0.5, 0.4];

const FIG_S11_VARS: [(&str, Role); 7] = [
    ("C1", Role::Confounder),
    ("C2", Role::Confounder),
    ("M1", Role::Mediator),
    ("M2", Role::Mediator),
    ("X1", Role::Feature),
    ("X2", Role::Feature),
    ("Y", Role::Response),
];

pub fn fig_s11(coefs: &[f64; 11]) -> LinearScm {
    let mut b = LinearScm::builder(Task::Causal);
    for (name, role) in FIG_S11_VARS {
        b = b.var(name, role, 1.0);
    }
    for (&(from, to), &c) in FIG_S11_EDGES.iter().zip(coefs) {
        b = b.edge(from, to, c);
    }
    b.build().expect("static graph")
}

/// Path coefficients of the one-variable-per-role anticausal model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnivariateCoefficients {
    pub xy: f64,
    pub xc: f64,
    pub yc: f64,
    pub xm: f64,
    pub my: f64,
    pub mc: f64,
}

impl Default for UnivariateCoefficients {
    fn default() -> Self {
        Self { xy: 0.5, xc: 0.3, yc: 0.8, xm: 0.5, my: 0.4, mc: 0.2 }
    }
}

/// Univariate anticausal model where C, Y and M have unit variance and X has
/// unit error variance.
pub fn univariate_anticausal(k: &UnivariateCoefficients) -> Result<LinearScm> {
    let var_uy = 1.0 - k.yc * k.yc;
    let var_um = 1.0 - (k.my * k.my + k.mc * k.mc + 2.0 * k.my * k.mc * k.yc);
    if var_uy <= 0.0 || var_um <= 0.0 {
        return Err(Error::Input("coefficients admit no unit-variance model".into()));
    }
    LinearScm::builder(Task::Anticausal)
        .var("C", Role::Confounder, 1.0)
        .var("Y", Role::Response, var_uy)
        .var("M", Role::Mediator, var_um)
        .var("X", Role::Feature, 1.0)
        .edge("C", "Y", k.yc)
        .edge("C", "M", k.mc)
        .edge("Y", "M", k.my)
        .edge("C", "X", k.xc)
        .edge("M", "X", k.xm)
        .edge("Y", "X", k.xy)
        .build()
}

/// Model with the given coefficients and independent errors whose variances
/// make every variable's variance exactly one.
pub fn unit_variance(names: &[&str], roles: &[Role], task: Task, theta: DMatrix<f64>) -> Result<LinearScm> {
    let p = names.len();
    let names: Vec<String> = names.iter().map(|s| s.to_string()).collect();
    let probe = LinearScm::new(names.clone(), roles.to_vec(), task, theta.clone(), DVector::zeros(p), DMatrix::identity(p, p))?;
    let order = probe.validate()?;
    let mut cov = DMatrix::<f64>::zeros(p, p);
    let mut psi = DVector::<f64>::zeros(p);
    for &k in &order {
        // Cov(Z_k, Z_j) for already placed j, then Var(Z_k)
        let explained: f64 = (0..p)
            .flat_map(|a| (0..p).map(move |b| (a, b)))
            .map(|(a, b)| theta[(k, a)] * theta[(k, b)] * cov[(a, b)])
            .sum();
        psi[k] = 1.0 - explained;
        if psi[k] <= 0.0 {
            return Err(Error::Input(format!("variable {} would need error variance {}", names[k], psi[k])));
        }
        for j in 0..p {
            if j != k {
                let c: f64 = (0..p).map(|a| theta[(k, a)] * cov[(a, j)]).sum();
                cov[(k, j)] = c;
                cov[(j, k)] = c;
            }
        }
        cov[(k, k)] = 1.0;
    }
    LinearScm::new(names, roles.to_vec(), task, theta, DVector::zeros(p), DMatrix::from_diagonal(&psi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_graphs_validate() {
        fig_s6(&FIG_S6_DEFAULT).validate().unwrap();
        fig_s11(&FIG_S11_DEFAULT).validate().unwrap();
        univariate_anticausal(&UnivariateCoefficients::default()).unwrap().validate().unwrap();
    }

    #[test]
    fn unit_variance_model_is_standardized() {
        let scm = fig_s6(&[0.3; 15]);
        let names: Vec<&str> = scm.names().iter().map(String::as_str).collect();
        let std = unit_variance(&names, scm.roles(), scm.task(), scm.theta().clone()).unwrap();
        let cov = std.implied_moments().unwrap().cov;
        for i in 0..cov.nrows() {
            assert!((cov[(i, i)] - 1.0).abs() < 1e-12);
        }
    }
}
