//! Shared oracles for the integration tests: random models, plug-in
//! statistics evaluated on covariance matrices, and delta-method standard
//! errors for Gaussian samples.
#![allow(dead_code)]

use decon::rng;
use decon::scm::{LinearScm, Role, Task};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn stream(seed: u64) -> ChaCha8Rng {
    rng::stream(seed, 0x7e57)
}

/// Sample covariance matrix of the columns (`n - 1` denominator).
pub fn sample_cov(data: &DMatrix<f64>) -> DMatrix<f64> {
    let n = data.nrows() as f64;
    let mut centered = data.clone();
    for mut col in centered.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    centered.tr_mul(&centered) / (n - 1.0)
}

pub fn sample_cov2(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.mean(), b.mean());
    a.iter().zip(b.iter()).fold(0.0, |s, (x, y)| s + (x - ma) * (y - mb)) / (n - 1.0)
}

pub fn sample_corr(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    sample_cov2(a, b) / (sample_cov2(a, a) * sample_cov2(b, b)).sqrt()
}

/// Standard error of `Cov(a, b)` estimated from `n` Gaussian samples.
pub fn cov_se(sigma: &DMatrix<f64>, a: usize, b: usize, n: usize) -> f64 {
    ((sigma[(a, a)] * sigma[(b, b)] + sigma[(a, b)].powi(2)) / n as f64).sqrt()
}

/// Delta-method standard error of `f(S)` where `S` is the sample covariance
/// of `n` Gaussian draws with covariance `sigma`:
/// `Var(tr(G S)) = 2 tr(G Σ G Σ) / n` with `G` the symmetric gradient.
pub fn delta_se(sigma: &DMatrix<f64>, n: usize, f: impl Fn(&DMatrix<f64>) -> f64) -> f64 {
    let p = sigma.nrows();
    let h = 1e-6;
    let mut g = DMatrix::zeros(p, p);
    for a in 0..p {
        for b in a..p {
            let bump = |s: f64| {
                let mut m = sigma.clone();
                m[(a, b)] += s;
                if a != b {
                    m[(b, a)] += s;
                }
                f(&m)
            };
            let d = (bump(h) - bump(-h)) / (2.0 * h);
            if a == b {
                g[(a, a)] = d;
            } else {
                g[(a, b)] = d / 2.0;
                g[(b, a)] = d / 2.0;
            }
        }
    }
    let gs = &g * sigma;
    ((2.0 * (&gs * &gs).trace()) / n as f64).sqrt()
}

/// Coefficients of the linear regression of `target` on `regressors`,
/// solved from the covariance matrix by LU.
pub fn regress(sigma: &DMatrix<f64>, target: usize, regressors: &[usize]) -> DVector<f64> {
    let k = regressors.len();
    if k == 0 {
        return DVector::zeros(0);
    }
    let a = DMatrix::from_fn(k, k, |i, j| sigma[(regressors[i], regressors[j])]);
    let b = DVector::from_fn(k, |i, _| sigma[(regressors[i], target)]);
    a.lu().solve(&b).expect("regressors are not collinear")
}

/// Indices of a role in a role vector.
pub fn of_role(roles: &[Role], role: Role) -> Vec<usize> {
    roles.iter().enumerate().filter(|(_, r)| **r == role).map(|(i, _)| i).collect()
}

/// `Cov` between each counterfactual variable and the untouched side,
/// written as a function of the covariance matrix of the observed data.
///
/// Anticausal models return `Cov(X*_j, Y)` for each feature and causal
/// models `Cov(Y*, X_j)`. The estimated residuals are uncorrelated in-sample
/// with every regressor, so on a sample covariance this reproduces the sample
/// statistic exactly and on the population covariance its limit.
pub fn cf_statistic(sigma: &DMatrix<f64>, roles: &[Role], task: Task, target: &str) -> Vec<f64> {
    let c = of_role(roles, Role::Confounder);
    let m = of_role(roles, Role::Mediator);
    let x = of_role(roles, Role::Feature);
    let y = of_role(roles, Role::Response)[0];
    let (effects, side): (Vec<usize>, Vec<usize>) = match task {
        Task::Anticausal => (x.clone(), vec![y]),
        Task::Causal => (vec![y], x.clone()),
    };
    let cause_set: Vec<usize> = match task {
        Task::Anticausal => vec![y],
        Task::Causal => x.clone(),
    };
    // mediator regressions on (C, cause side)
    let med_regs: Vec<usize> = c.iter().chain(&cause_set).copied().collect();
    let gamma_mc: Vec<DVector<f64>> = m.iter().map(|&mi| regress(sigma, mi, &med_regs).rows(0, c.len()).into_owned()).collect();
    let full_regs: Vec<usize> = c.iter().chain(&m).chain(&cause_set).copied().collect();

    let mut out = Vec::new();
    for &e in &effects {
        let g = regress(sigma, e, &full_regs);
        let g_c = g.rows(0, c.len()).into_owned();
        let g_m = g.rows(c.len(), m.len()).into_owned();
        for &s in &side {
            let cov = |a: usize| sigma[(a, s)];
            let v = match target {
                // X* = X − Γ̂_C C − Γ̂_M M
                "direct" => {
                    cov(e) - c.iter().enumerate().map(|(i, &ci)| g_c[i] * cov(ci)).sum::<f64>()
                        - m.iter().enumerate().map(|(i, &mi)| g_m[i] * cov(mi)).sum::<f64>()
                }
                // X* = Γ̂_M (M − Γ̂_MC C) + Ŵ
                "indirect" => m
                    .iter()
                    .enumerate()
                    .map(|(i, &mi)| {
                        let mstar = cov(mi) - c.iter().enumerate().map(|(l, &cl)| gamma_mc[i][l] * cov(cl)).sum::<f64>();
                        g_m[i] * mstar
                    })
                    .sum(),
                // X* = Γ̂_C C + Ŵ
                "confounding" => c.iter().enumerate().map(|(i, &ci)| g_c[i] * cov(ci)).sum(),
                other => panic!("unknown target {other}"),
            };
            out.push(v);
        }
    }
    out
}

/// Random model of the given task with at most the given role counts.
///
/// Variables are declared in shuffled order; edges follow a fixed causal
/// order of roles and appear with probability 0.6. Errors may correlate
/// within a role but never across roles.
pub fn random_scm(seed: u64, task: Task, max_x: usize, max_c: usize, max_m: usize) -> LinearScm {
    let mut r = stream(seed);
    let n_x = r.random_range(1..=max_x);
    let n_c = r.random_range(0..=max_c);
    let n_m = r.random_range(0..=max_m);
    let mut vars: Vec<(String, Role)> = Vec::new();
    vars.extend((1..=n_c).map(|i| (format!("C{i}"), Role::Confounder)));
    let ys = vec![("Y".to_string(), Role::Response)];
    let xs: Vec<(String, Role)> = (1..=n_x).map(|i| (format!("X{i}"), Role::Feature)).collect();
    let ms: Vec<(String, Role)> = (1..=n_m).map(|i| (format!("M{i}"), Role::Mediator)).collect();
    match task {
        Task::Anticausal => {
            vars.extend(ys);
            vars.extend(ms);
            vars.extend(xs);
        }
        Task::Causal => {
            vars.extend(xs);
            vars.extend(ms);
            vars.extend(ys);
        }
    }
    let mut declared = vars.clone();
    declared.shuffle(&mut r);
    let mut b = LinearScm::builder(task);
    for (name, role) in &declared {
        b = b.var(name, *role, r.random_range(0.5..1.5));
        b = b.mean(name, r.random_range(-1.0..1.0));
    }
    for i in 0..vars.len() {
        for j in i + 1..vars.len() {
            if task.allows_edge(vars[i].1, vars[j].1) && r.random_bool(0.6) {
                b = b.edge(&vars[i].0, &vars[j].0, r.random_range(-0.7..0.7));
            }
        }
    }
    let scm = b.build().expect("valid random model");
    // within-role error correlation, |r| < 0.4 keeps each block diagonally dominant
    let mut psi = scm.error_cov().clone();
    for role in Role::ALL {
        let idx = scm.indices(role);
        for (a, &i) in idx.iter().enumerate() {
            for &j in &idx[a + 1..] {
                if r.random_bool(0.5) {
                    let rho = r.random_range(-0.39..0.39);
                    let v = rho * (psi[(i, i)] * psi[(j, j)]).sqrt();
                    psi[(i, j)] = v;
                    psi[(j, i)] = v;
                }
            }
        }
    }
    LinearScm::new(scm.names().to_vec(), scm.roles().to_vec(), task, scm.theta().clone(), scm.mu().clone(), psi)
        .expect("valid random model")
}

/// `|value - expected| <= k * se`, with a message on failure.
pub fn assert_within(value: f64, expected: f64, se: f64, k: f64, what: &str) {
    assert!(
        (value - expected).abs() <= k * se,
        "{what}: {value} vs {expected}, |diff| = {:.3e} > {k}·SE = {:.3e}",
        (value - expected).abs(),
        k * se
    );
}

/// One Monte Carlo comparison of a counterfactual covariance.
#[derive(Debug)]
pub struct CfCheck {
    pub target: &'static str,
    pub index: usize,
    pub sample: f64,
    /// Same statistic evaluated on the sample covariance matrix.
    pub plug_in: f64,
    pub population: f64,
    pub se: f64,
}

impl CfCheck {
    pub fn z(&self) -> f64 {
        (self.sample - self.population).abs() / self.se
    }
}

fn target_name(t: decon::counterfactual::PathTarget) -> &'static str {
    t.as_str()
}

/// Simulates `n` rows, builds every applicable counterfactual on the fitting
/// set and compares its sample covariance with the untouched side against
/// the library's closed form.
pub fn cf_monte_carlo(scm: &LinearScm, n: usize, seed: u64) -> Vec<CfCheck> {
    use decon::counterfactual::*;
    let data = scm.simulate(n, seed).unwrap();
    let sigma = scm.implied_moments().unwrap().cov;
    let s = sample_cov(data.matrix());
    let roles = scm.roles().to_vec();
    let n_c = scm.indices(Role::Confounder).len();
    let n_m = scm.indices(Role::Mediator).len();
    let features = data.names_with_role(Role::Feature);
    let y = data.column(&data.names_with_role(Role::Response)[0]).unwrap();
    let mut out = Vec::new();
    let anticausal = scm.task() == Task::Anticausal;
    let afit = anticausal.then(|| fit_anticausal(&data).unwrap());
    let cfit = (!anticausal).then(|| fit_causal(&data).unwrap());
    for target in PathTarget::ALL {
        if (target == PathTarget::Indirect && n_m == 0) || (target == PathTarget::ConfoundingOnly && n_c == 0) {
            continue;
        }
        let name = target_name(target);
        let population = population_cf_covariance(scm, target).unwrap();
        let sample: Vec<f64> = if let Some(fit) = &afit {
            let cf = generate_cf_features(fit, &data, target).unwrap();
            features.iter().map(|f| sample_cov2(&cf.column(f).unwrap(), &y)).collect()
        } else {
            let y_star = generate_cf_response(cfit.as_ref().unwrap(), &data, target).unwrap();
            features.iter().map(|f| sample_cov2(&y_star, &data.column(f).unwrap())).collect()
        };
        let plug_in = cf_statistic(&s, &roles, scm.task(), name);
        // pathways that vanish in the population are products of estimates
        // that are both zero, so the first-order term degenerates; the
        // second-order scale tr(Σ)/n keeps the band meaningful there
        let floor = sigma.trace() / n as f64;
        for (j, &v) in sample.iter().enumerate() {
            let first = delta_se(&sigma, n, |m| cf_statistic(m, &roles, scm.task(), name)[j]);
            let se = first.hypot(floor);
            out.push(CfCheck { target: name, index: j, sample: v, plug_in: plug_in[j], population: population.as_slice()[j], se });
        }
    }
    out
}

/// Largest deviation from the closed-form reparameterized coefficients of
/// the nine-variable example.
pub fn nine_variable_identity_error(coefs: &[f64; 15]) -> f64 {
    let scm = decon::models::fig_s6(coefs);
    let r = decon::scm::reparameterize(&scm).unwrap();
    let t = |from: &str, to: &str| scm.coefficient(from, to).unwrap();
    let g = |child: &str, parent: &str| r.coefficient(child, parent).unwrap();
    let x3_from_x1 = t("X1", "X3") + t("X1", "X2") * t("X2", "X3");
    let expected = [
        (g("Y", "C3"), t("C3", "Y")),
        (g("Y", "C1"), 0.0),
        (g("Y", "C2"), 0.0),
        (g("M1", "C3"), t("M2", "M1") * t("C3", "M2")),
        (g("M2", "C3"), t("C3", "M2")),
        (g("M1", "C1"), 0.0),
        (g("M1", "C2"), 0.0),
        (g("M2", "C1"), 0.0),
        (g("M2", "C2"), 0.0),
        (g("M1", "Y"), t("M2", "M1") * t("Y", "M2")),
        (g("M2", "Y"), t("Y", "M2")),
        (g("X1", "C2"), t("C2", "X1")),
        (g("X2", "C2"), t("X1", "X2") * t("C2", "X1")),
        (g("X3", "C2"), t("C2", "X1") * x3_from_x1),
        (g("X1", "C1"), 0.0),
        (g("X1", "C3"), 0.0),
        (g("X2", "C1"), 0.0),
        (g("X2", "C3"), 0.0),
        (g("X3", "C1"), 0.0),
        (g("X3", "C3"), 0.0),
        (g("X3", "M1"), t("M1", "X3")),
        (g("X1", "M2"), t("M2", "X1")),
        (g("X2", "M2"), t("M2", "X1") * t("X1", "X2")),
        (g("X3", "M2"), t("M2", "X1") * x3_from_x1),
        (g("X1", "M1"), 0.0),
        (g("X2", "M1"), 0.0),
        (g("X2", "Y"), t("Y", "X2")),
        (g("X3", "Y"), t("Y", "X3") + t("X2", "X3") * t("Y", "X2")),
        (g("X1", "Y"), 0.0),
    ];
    expected.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Standardized C → Y, C → X, Y → X.
pub fn altered_model(xy: f64, xc: f64, yc: f64) -> LinearScm {
    let theta = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, yc, 0.0, 0.0, xc, xy, 0.0]);
    decon::models::unit_variance(&["C", "Y", "X"], &[Role::Confounder, Role::Response, Role::Feature], Task::Anticausal, theta)
        .unwrap()
}
