//! Ordinary least squares by Householder QR.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Smallest accepted ratio of extreme singular values of the design.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct OlsFit {
    /// Zero when the fit was made without an intercept.
    pub intercept: f64,
    pub coefficients: DVector<f64>,
    pub residuals: DVector<f64>,
    /// Standard errors of `coefficients` under homoscedastic errors.
    pub std_errors: DVector<f64>,
    pub intercept_std_error: f64,
    pub names: Vec<String>,
}

/// Least-squares fit of `target` on the columns of `design`.
///
/// Requires `n > k + 1` samples for `k` regressors, with or without the
/// intercept column.
pub fn ols(design: &DMatrix<f64>, target: &DVector<f64>, with_intercept: bool) -> Result<OlsFit> {
    if target.len() != design.nrows() {
        return Err(Error::Shape(format!("design has {} rows, target has {}", design.nrows(), target.len())));
    }
    let targets = DMatrix::from_column_slice(target.len(), 1, target.as_slice());
    Ok(ols_many(design, &targets, with_intercept)?.pop().expect("one target"))
}

/// One fit per column of `targets`, sharing a single factorization of the
/// design.
pub fn ols_many(design: &DMatrix<f64>, targets: &DMatrix<f64>, with_intercept: bool) -> Result<Vec<OlsFit>> {
    let (n, k) = design.shape();
    if targets.nrows() != n {
        return Err(Error::Shape(format!("design has {n} rows, targets have {}", targets.nrows())));
    }
    if n <= k + 1 {
        return Err(Error::SampleSize { n, regressors: k, needed: k + 1 });
    }
    if design.iter().chain(targets.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Input("regression inputs must be finite".into()));
    }
    let offset = usize::from(with_intercept);
    let cols = k + offset;
    let t = targets.ncols();
    // R of [1 | design | targets]: its top-right block is Qᵀ·targets
    let full = streaming_r(design, targets, with_intercept);
    let r = full.view((0, 0), (cols, cols)).into_owned();
    let qty = full.view((0, cols), (cols, t)).into_owned();
    let sv = r.singular_values();
    let (max, min) = (sv.max(), sv.min());
    let ratio = if max > 0.0 { min / max } else { 0.0 };
    if !(ratio >= RANK_TOLERANCE) {
        return Err(Error::Rank { ratio, threshold: RANK_TOLERANCE });
    }
    let betas = r.solve_upper_triangular(&qty).ok_or(Error::Rank { ratio, threshold: RANK_TOLERANCE })?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(cols, cols))
        .ok_or(Error::Rank { ratio, threshold: RANK_TOLERANCE })?;
    let row_norms: Vec<f64> = r_inv.row_iter().map(|row| row.norm_squared()).collect();

    let mut fits = Vec::with_capacity(targets.ncols());
    for (t, beta) in targets.column_iter().zip(betas.column_iter()) {
        let intercept = if with_intercept { beta[0] } else { 0.0 };
        let coefficients = beta.rows(offset, k).into_owned();
        let residuals = (t - design * &coefficients).add_scalar(-intercept);
        // Cov(β) = σ² (RᵀR)⁻¹ = σ² R⁻¹ R⁻ᵀ
        let sigma2 = residuals.norm_squared() / (n - cols) as f64;
        let se = DVector::from_iterator(cols, row_norms.iter().map(|v| (sigma2 * v).sqrt()));
        fits.push(OlsFit {
            intercept,
            coefficients,
            residuals,
            std_errors: se.rows(offset, k).into_owned(),
            intercept_std_error: if with_intercept { se[0] } else { 0.0 },
            names: (0..k).map(|j| format!("x{j}")).collect(),
        });
    }
    Ok(fits)
}

const CHUNK_ROWS: usize = 4096;

/// Upper triangular factor of `[1 | design | targets]`, accumulated over
/// blocks of rows: each step refactors the running `R` stacked on the next
/// block, which keeps the Householder sweeps in cache for tall inputs.
fn streaming_r(design: &DMatrix<f64>, targets: &DMatrix<f64>, with_intercept: bool) -> DMatrix<f64> {
    let (n, k) = design.shape();
    let offset = usize::from(with_intercept);
    let w = offset + k + targets.ncols();
    let mut r = DMatrix::<f64>::zeros(0, w);
    let mut start = 0;
    while start < n {
        let b = CHUNK_ROWS.min(n - start);
        let h = r.nrows();
        let mut block = DMatrix::<f64>::zeros(h + b, w);
        block.rows_mut(0, h).copy_from(&r);
        if with_intercept {
            block.view_mut((h, 0), (b, 1)).fill(1.0);
        }
        block.view_mut((h, offset), (b, k)).copy_from(&design.rows(start, b));
        block.view_mut((h, offset + k), (b, targets.ncols())).copy_from(&targets.rows(start, b));
        r = block.qr().r();
        start += b;
    }
    r
}

impl OlsFit {
    pub fn with_names(mut self, names: Vec<String>) -> Self {
        assert_eq!(names.len(), self.coefficients.len());
        self.names = names;
        self
    }

    pub fn predict(&self, design: &DMatrix<f64>) -> Result<DVector<f64>> {
        if design.ncols() != self.coefficients.len() {
            return Err(Error::Shape(format!(
                "design has {} columns, fit has {} coefficients",
                design.ncols(),
                self.coefficients.len()
            )));
        }
        Ok((design * &self.coefficients).add_scalar(self.intercept))
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.coefficients[i])
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.std_errors[i])
    }
}
