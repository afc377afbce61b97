//! Block reparameterization `Z = Γ_ZC C + Γ_ZM M + ... + W_Z`, where every
//! within-role edge has been pushed into the correlated error `W`.

use nalgebra::{DMatrix, DVector};

use super::{role_indices, submatrix, LinearScm, Moments, Role, Task};
use crate::error::{Error, Result};

/// A `(child, parent)` pair of roles naming one Γ block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Block {
    pub child: Role,
    pub parent: Role,
}

impl Block {
    pub const YC: Block = Block::new(Role::Response, Role::Confounder);
    pub const MC: Block = Block::new(Role::Mediator, Role::Confounder);
    pub const MY: Block = Block::new(Role::Mediator, Role::Response);
    pub const XC: Block = Block::new(Role::Feature, Role::Confounder);
    pub const XM: Block = Block::new(Role::Feature, Role::Mediator);
    pub const XY: Block = Block::new(Role::Feature, Role::Response);
    pub const MX: Block = Block::new(Role::Mediator, Role::Feature);
    pub const YM: Block = Block::new(Role::Response, Role::Mediator);
    pub const YX: Block = Block::new(Role::Response, Role::Feature);

    pub const fn new(child: Role, parent: Role) -> Self {
        Self { child, parent }
    }
}

#[derive(Clone, Debug)]
pub struct ReparameterizedScm {
    names: Vec<String>,
    roles: Vec<Role>,
    task: Task,
    /// Γ embedded in the original variable indexing; within-role entries are 0.
    gamma: DMatrix<f64>,
    w_mean: DVector<f64>,
    w_cov: DMatrix<f64>,
}

/// Computes Γ and the moments of `W = D (μ + U)`, where `D` is the
/// block-diagonal matrix of `(I - Θ_VV)⁻¹` over roles.
pub fn reparameterize(scm: &LinearScm) -> Result<ReparameterizedScm> {
    scm.validate()?;
    let p = scm.len();
    let mut d = DMatrix::<f64>::zeros(p, p);
    for role in Role::ALL {
        let idx = scm.indices(role);
        if idx.is_empty() {
            continue;
        }
        let block = submatrix(scm.theta(), &idx, &idx);
        let inv = within_role_inverse(&block);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                d[(i, j)] = inv[(a, b)];
            }
        }
    }
    let mut gamma = &d * scm.theta();
    for i in 0..p {
        for j in 0..p {
            if scm.roles()[i] == scm.roles()[j] {
                gamma[(i, j)] = 0.0;
            }
        }
    }
    let w_cov = &d * scm.error_cov() * d.transpose();
    Ok(ReparameterizedScm {
        names: scm.names().to_vec(),
        roles: scm.roles().to_vec(),
        task: scm.task(),
        gamma,
        w_mean: &d * scm.mu(),
        w_cov: (&w_cov + w_cov.transpose()) * 0.5,
    })
}

/// `(I - B)⁻¹` for a within-role block of an acyclic graph, via the
/// terminating Neumann series (B is nilpotent).
fn within_role_inverse(b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = b.nrows();
    let mut inv = DMatrix::identity(n, n);
    let mut power = DMatrix::identity(n, n);
    for _ in 0..n {
        power = &power * b;
        if power.iter().all(|&v| v == 0.0) {
            break;
        }
        inv += &power;
    }
    inv
}

impl ReparameterizedScm {
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn task(&self) -> Task {
        self.task
    }

    /// Γ block for `child ← parent`, shaped `n_child × n_parent`.
    pub fn gamma(&self, block: Block) -> DMatrix<f64> {
        let rows = role_indices(&self.roles, block.child);
        let cols = role_indices(&self.roles, block.parent);
        if block.child == block.parent {
            return DMatrix::zeros(rows.len(), cols.len());
        }
        submatrix(&self.gamma, &rows, &cols)
    }

    /// Single coefficient `γ_{child, parent}` by variable name.
    pub fn coefficient(&self, child: &str, parent: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == child)?;
        let j = self.names.iter().position(|n| n == parent)?;
        Some(self.gamma[(i, j)])
    }

    /// Γ in the original variable indexing.
    pub fn gamma_matrix(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    /// Full covariance of `W`, including any cross-role blocks.
    pub fn w_cov_full(&self) -> &DMatrix<f64> {
        &self.w_cov
    }

    /// `Cov(W_V)` for one role.
    pub fn w_cov(&self, role: Role) -> DMatrix<f64> {
        let idx = role_indices(&self.roles, role);
        submatrix(&self.w_cov, &idx, &idx)
    }

    pub fn w_mean(&self) -> &DVector<f64> {
        &self.w_mean
    }

    /// Joint moments of `Z = ΓZ + W`.
    pub fn implied_moments(&self) -> Result<Moments> {
        let p = self.names.len();
        let a = (DMatrix::identity(p, p) - &self.gamma)
            .try_inverse()
            .ok_or_else(|| Error::Input("I - Γ is singular".into()))?;
        let cov = &a * &self.w_cov * a.transpose();
        Ok(Moments { mean: &a * &self.w_mean, cov: (&cov + cov.transpose()) * 0.5 })
    }
}

/// Total effects of `Y` and `C` on the features once mediators are
/// marginalized out.
#[derive(Clone, Debug, PartialEq)]
pub struct TotalEffects {
    /// `Γ_XY + Γ_XM Γ_MY`, `n_X × 1`.
    pub xy: DMatrix<f64>,
    /// `Γ_XC + Γ_XM Γ_MC`, `n_X × n_C`.
    pub xc: DMatrix<f64>,
}

pub fn total_effects(scm: &LinearScm) -> Result<TotalEffects> {
    require_task(scm, Task::Anticausal)?;
    let r = reparameterize(scm)?;
    let xm = r.gamma(Block::XM);
    Ok(TotalEffects {
        xy: r.gamma(Block::XY) + &xm * r.gamma(Block::MY),
        xc: r.gamma(Block::XC) + &xm * r.gamma(Block::MC),
    })
}

/// Path decomposition of `Cov(X, Y)`, each field `n_X × 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceDecomposition {
    pub direct: DMatrix<f64>,
    pub indirect: DMatrix<f64>,
    pub confounding_direct: DMatrix<f64>,
    pub confounding_via_m: DMatrix<f64>,
}

impl CovarianceDecomposition {
    pub fn total(&self) -> DMatrix<f64> {
        &self.direct + &self.indirect + &self.confounding_direct + &self.confounding_via_m
    }
}

pub fn covariance_decomposition(scm: &LinearScm) -> Result<CovarianceDecomposition> {
    require_task(scm, Task::Anticausal)?;
    require_role_independent_errors(scm)?;
    let r = reparameterize(scm)?;
    let cov = scm.implied_moments()?.cov;
    let y = scm.response_index().expect("validated");
    let c = scm.indices(Role::Confounder);
    let var_y = cov[(y, y)];
    let cov_c = submatrix(&cov, &c, &c);
    let (xy, xm, xc) = (r.gamma(Block::XY), r.gamma(Block::XM), r.gamma(Block::XC));
    let (my, mc, yc) = (r.gamma(Block::MY), r.gamma(Block::MC), r.gamma(Block::YC));
    let backdoor = &cov_c * yc.transpose();
    Ok(CovarianceDecomposition {
        direct: &xy * var_y,
        indirect: &xm * &my * var_y,
        confounding_direct: &xc * &backdoor,
        confounding_via_m: &xm * &mc * &backdoor,
    })
}

pub(crate) fn require_task(scm: &LinearScm, task: Task) -> Result<()> {
    if scm.task() != task {
        return Err(Error::Input(format!("operation requires a {task:?} model, got {:?}", scm.task())));
    }
    Ok(())
}

pub(crate) fn require_role_independent_errors(scm: &LinearScm) -> Result<()> {
    if !scm.has_role_independent_errors() {
        return Err(Error::Input(
            "closed forms need error terms that are uncorrelated across roles".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    #[test]
    fn no_within_feature_edges_keeps_theta() {
        let scm = LinearScm::builder(Task::Anticausal)
            .var("C", Role::Confounder, 1.0)
            .var("Y", Role::Response, 1.0)
            .var("X1", Role::Feature, 1.0)
            .var("X2", Role::Feature, 1.0)
            .edge("C", "Y", 0.4)
            .edge("C", "X1", 0.3)
            .edge("Y", "X1", -0.2)
            .edge("Y", "X2", 0.7)
            .build()
            .unwrap();
        let r = reparameterize(&scm).unwrap();
        assert_eq!(r.coefficient("X1", "C"), Some(0.3));
        assert_eq!(r.coefficient("X1", "Y"), Some(-0.2));
        assert_eq!(r.coefficient("X2", "Y"), Some(0.7));
        assert_eq!(r.coefficient("Y", "C"), Some(0.4));
    }

    #[test]
    fn three_feature_error_structure() {
        // X1 -> X2 -> X3 and X1 -> X3, all driven by Y
        let (t21, t31, t32) = (0.6, -0.4, 0.5);
        let scm = LinearScm::builder(Task::Anticausal)
            .var("Y", Role::Response, 1.0)
            .var("X1", Role::Feature, 1.0)
            .var("X2", Role::Feature, 2.0)
            .var("X3", Role::Feature, 0.5)
            .edge("Y", "X1", 0.3)
            .edge("Y", "X2", 0.2)
            .edge("Y", "X3", 0.1)
            .edge("X1", "X2", t21)
            .edge("X1", "X3", t31)
            .edge("X2", "X3", t32)
            .build()
            .unwrap();
        let r = reparameterize(&scm).unwrap();
        // W_X3 = U_X3 + θ32 U_X2 + (θ31 + θ21 θ32) U_X1
        let inv = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, t21, 1.0, 0.0, t31 + t21 * t32, t32, 1.0]);
        let psi = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 0.5]));
        let expected = &inv * psi * inv.transpose();
        assert!((r.w_cov(Role::Feature) - expected).abs().max() < 1e-14);
        assert!((r.coefficient("X3", "Y").unwrap() - (0.1 + t32 * 0.2 + (t31 + t21 * t32) * 0.3)).abs() < 1e-14);
    }

    #[test]
    fn reparameterization_preserves_moments() {
        let scm = models::fig_s6(&models::FIG_S6_DEFAULT);
        let r = reparameterize(&scm).unwrap();
        let a = scm.implied_moments().unwrap();
        let b = r.implied_moments().unwrap();
        assert!((a.cov - b.cov).abs().max() < 1e-12);
        assert!((a.mean - b.mean).abs().max() < 1e-12);
    }

    #[test]
    fn total_effects_univariate() {
        let scm = LinearScm::builder(Task::Anticausal)
            .var("Y", Role::Response, 1.0)
            .var("M", Role::Mediator, 1.0)
            .var("X", Role::Feature, 1.0)
            .edge("Y", "X", 0.2)
            .edge("M", "X", 0.5)
            .edge("Y", "M", 0.4)
            .build()
            .unwrap();
        let t = total_effects(&scm).unwrap();
        assert!((t.xy[(0, 0)] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn decomposition_of_standardized_univariate_model() {
        let scm = models::univariate_anticausal(&models::UnivariateCoefficients::default()).unwrap();
        let k = models::UnivariateCoefficients::default();
        let d = covariance_decomposition(&scm).unwrap();
        assert!((d.direct[(0, 0)] - k.xy).abs() < 1e-12);
        assert!((d.indirect[(0, 0)] - k.xm * k.my).abs() < 1e-12);
        assert!((d.confounding_direct[(0, 0)] - k.xc * k.yc).abs() < 1e-12);
        assert!((d.confounding_via_m[(0, 0)] - k.xm * k.mc * k.yc).abs() < 1e-12);
        let cov = scm.implied_moments().unwrap().cov;
        let (x, y) = (scm.index_of("X").unwrap(), scm.index_of("Y").unwrap());
        assert!((d.total()[(0, 0)] - cov[(x, y)]).abs() < 1e-12);
    }

    #[test]
    fn decomposition_needs_independent_roles() {
        let scm = LinearScm::builder(Task::Anticausal)
            .var("C", Role::Confounder, 1.0)
            .var("Y", Role::Response, 1.0)
            .var("X", Role::Feature, 1.0)
            .error_cov("C", "X", 0.2)
            .build()
            .unwrap();
        assert!(matches!(covariance_decomposition(&scm), Err(Error::Input(_))));
    }
}
