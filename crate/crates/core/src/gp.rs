//! Gaussian-process surrogate over the normalized parameter cube.
//!
//! Targets are standardized before fitting and the prior mean is zero in
//! standardized units, so posterior queries are mapped back to raw fitness
//! units on the way out. The covariance is a squared-exponential kernel with
//! one length scale per input dimension.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::params::DIM;

pub type Point = [f64; DIM];

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GpError {
    #[error("kernel matrix is not positive definite even with jitter {max_jitter:e}")]
    FactorizationFailure { max_jitter: f64 },
    #[error("invalid kernel parameters: {0}")]
    InvalidKernel(&'static str),
    #[error("dataset has {inputs} inputs but {targets} targets")]
    LengthMismatch { inputs: usize, targets: usize },
    #[error("input {index} has coordinate {value} outside the unit cube")]
    OutsideUnitCube { index: usize, value: f64 },
    #[error("non-finite target at index {0}")]
    NonFiniteTarget(usize),
}

/// Hyperparameters of the ARD squared-exponential kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub signal_variance: f64,
    pub length_scales: [f64; DIM],
    pub noise_variance: f64,
}

impl Default for KernelParams {
    fn default() -> Self {
        Self { signal_variance: 1.0, length_scales: [0.3; DIM], noise_variance: 1e-4 }
    }
}

impl KernelParams {
    pub fn isotropic(signal_variance: f64, length_scale: f64, noise_variance: f64) -> Self {
        Self { signal_variance, length_scales: [length_scale; DIM], noise_variance }
    }

    pub fn validate(&self) -> Result<(), GpError> {
        if !(self.signal_variance > 0.0 && self.signal_variance.is_finite()) {
            return Err(GpError::InvalidKernel("signal variance must be positive"));
        }
        if !self.length_scales.iter().all(|l| *l > 0.0 && l.is_finite()) {
            return Err(GpError::InvalidKernel("length scales must be positive"));
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(GpError::InvalidKernel("noise variance must be non-negative"));
        }
        Ok(())
    }
}

/// `σ_f² · exp(-½ Σ_d (a_d - b_d)² / ℓ_d²)`
pub fn kernel_eval(a: &Point, b: &Point, kp: &KernelParams) -> f64 {
    let r2: f64 = (0..DIM)
        .map(|d| {
            let z = (a[d] - b[d]) / kp.length_scales[d];
            z * z
        })
        .sum();
    kp.signal_variance * (-0.5 * r2).exp()
}

/// Covariance matrix of a point set, without the noise term.
pub fn kernel_matrix(xs: &[Point], kp: &KernelParams) -> DMatrix<f64> {
    let n = xs.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = kernel_eval(&xs[i], &xs[i], kp);
        for j in 0..i {
            let v = kernel_eval(&xs[i], &xs[j], kp);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Observation history in normalized input coordinates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    inputs: Vec<Point>,
    targets: Vec<f64>,
    target_mean: f64,
    target_std: f64,
}

impl Dataset {
    pub fn empty() -> Self {
        Self { inputs: Vec::new(), targets: Vec::new(), target_mean: 0.0, target_std: 1.0 }
    }

    pub fn new(inputs: Vec<Point>, targets: Vec<f64>) -> Result<Self, GpError> {
        if inputs.len() != targets.len() {
            return Err(GpError::LengthMismatch { inputs: inputs.len(), targets: targets.len() });
        }
        for (i, x) in inputs.iter().enumerate() {
            check_unit_cube(i, x)?;
        }
        if let Some(i) = targets.iter().position(|y| !y.is_finite()) {
            return Err(GpError::NonFiniteTarget(i));
        }
        let mut data = Self { inputs, targets, target_mean: 0.0, target_std: 1.0 };
        data.restandardize();
        Ok(data)
    }

    pub fn push(&mut self, x: Point, y: f64) -> Result<(), GpError> {
        check_unit_cube(self.inputs.len(), &x)?;
        if !y.is_finite() {
            return Err(GpError::NonFiniteTarget(self.targets.len()));
        }
        self.inputs.push(x);
        self.targets.push(y);
        self.restandardize();
        Ok(())
    }

    fn restandardize(&mut self) {
        let n = self.targets.len();
        if n == 0 {
            self.target_mean = 0.0;
            self.target_std = 1.0;
            return;
        }
        let mean = self.targets.iter().sum::<f64>() / n as f64;
        let var = self.targets.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n as f64;
        let std = var.sqrt();
        self.target_mean = mean;
        // A constant target vector standardizes to zeros with unit scale.
        self.target_std = if std > 0.0 && std.is_finite() { std } else { 1.0 };
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn inputs(&self) -> &[Point] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn target_mean(&self) -> f64 {
        self.target_mean
    }

    pub fn target_std(&self) -> f64 {
        self.target_std
    }

    pub fn standardized_targets(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.len(),
            self.targets.iter().map(|y| (y - self.target_mean) / self.target_std),
        )
    }
}

fn check_unit_cube(index: usize, x: &Point) -> Result<(), GpError> {
    match x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        Some(&value) => Err(GpError::OutsideUnitCube { index, value }),
        None => Ok(()),
    }
}

/// Diagonal jitter schedule applied when the covariance fails to factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JitterPolicy {
    pub initial: f64,
    pub factor: f64,
    pub max: f64,
}

impl Default for JitterPolicy {
    fn default() -> Self {
        Self { initial: 1e-10, factor: 10.0, max: 1e-4 }
    }
}

impl JitterPolicy {
    /// Never retries; any non-positive-definite matrix is an error.
    pub fn disabled() -> Self {
        Self { initial: 0.0, factor: 10.0, max: 0.0 }
    }
}

/// Factor `a + jitter·I`, escalating jitter per the policy.
fn factor_with_jitter(a: &DMatrix<f64>, policy: &JitterPolicy) -> Result<(Cholesky<f64, Dyn>, f64), GpError> {
    if let Some(chol) = Cholesky::new(a.clone()) {
        return Ok((chol, 0.0));
    }
    let mut jitter = policy.initial;
    while jitter > 0.0 && jitter <= policy.max * (1.0 + 1e-12) {
        let mut m = a.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(m) {
            return Ok((chol, jitter));
        }
        jitter *= policy.factor;
    }
    Err(GpError::FactorizationFailure { max_jitter: policy.max })
}

/// A fitted GP posterior. Immutable once built.
#[derive(Debug, Clone)]
pub struct GpModel {
    data: Dataset,
    kernel: KernelParams,
    chol: Option<Cholesky<f64, Dyn>>,
    alpha: DVector<f64>,
    jitter: f64,
}

impl GpModel {
    /// The prior: no observations.
    pub fn prior(kernel: KernelParams) -> Self {
        Self { data: Dataset::empty(), kernel, chol: None, alpha: DVector::zeros(0), jitter: 0.0 }
    }

    pub fn fit(data: Dataset, kernel: KernelParams) -> Result<Self, GpError> {
        Self::fit_with_jitter(data, kernel, &JitterPolicy::default())
    }

    pub fn fit_with_jitter(data: Dataset, kernel: KernelParams, policy: &JitterPolicy) -> Result<Self, GpError> {
        kernel.validate()?;
        if data.is_empty() {
            let mut model = Self::prior(kernel);
            model.data = data;
            return Ok(model);
        }
        let (chol, jitter) = factor_with_jitter(&noisy_kernel_matrix(&data, &kernel), policy)?;
        let alpha = chol.solve(&data.standardized_targets());
        Ok(Self { data, kernel, chol: Some(chol), alpha, jitter })
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn kernel(&self) -> &KernelParams {
        &self.kernel
    }

    /// Jitter that was added to the diagonal to obtain a factorization.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Lower-triangular factor of `K + (σ_n² + jitter)·I`, if fitted.
    pub fn cholesky_factor(&self) -> Option<DMatrix<f64>> {
        self.chol.as_ref().map(|c| c.l())
    }

    /// Posterior mean and variance of the latent function in raw target units.
    pub fn predict(&self, x: &Point) -> (f64, f64) {
        let (mean_s, var_s) = self.predict_standardized(x);
        let std = self.data.target_std();
        (self.data.target_mean() + std * mean_s, std * std * var_s)
    }

    /// Posterior in standardized units. Variance is clamped at zero.
    pub fn predict_standardized(&self, x: &Point) -> (f64, f64) {
        let prior_var = kernel_eval(x, x, &self.kernel);
        let Some(chol) = &self.chol else {
            return (0.0, prior_var);
        };
        let kstar = DVector::from_iterator(
            self.data.len(),
            self.data.inputs().iter().map(|xi| kernel_eval(xi, x, &self.kernel)),
        );
        let mean = kstar.dot(&self.alpha);
        let v = chol.l_dirty().solve_lower_triangular(&kstar).expect("cholesky factor has a positive diagonal");
        let var = (prior_var - v.dot(&v)).max(0.0);
        (mean, var)
    }

    /// Log evidence of the stored data under the stored kernel.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let Some(chol) = &self.chol else {
            return 0.0;
        };
        let y = self.data.standardized_targets();
        let n = y.len() as f64;
        let log_det_half: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
        -0.5 * y.dot(&self.alpha) - log_det_half - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
    }
}

fn noisy_kernel_matrix(data: &Dataset, kernel: &KernelParams) -> DMatrix<f64> {
    let mut k = kernel_matrix(data.inputs(), kernel);
    for i in 0..k.nrows() {
        k[(i, i)] += kernel.noise_variance;
    }
    k
}

/// `log p(y | X, θ)` on standardized targets.
pub fn log_marginal_likelihood(data: &Dataset, kp: &KernelParams) -> Result<f64, GpError> {
    Ok(GpModel::fit(data.clone(), *kp)?.log_marginal_likelihood())
}

fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi / lo).ln() / (n - 1) as f64;
    (0..n).map(|i| lo * (step * i as f64).exp()).collect()
}

/// The 5×5×5 log grid over (shared length scale, signal variance, noise variance).
pub fn hyperparameter_grid() -> Vec<KernelParams> {
    let mut grid = Vec::with_capacity(125);
    for &l in &geomspace(0.075, 1.2, 5) {
        for &sf in &geomspace(0.25, 4.0, 5) {
            for &sn in &geomspace(1e-6, 1e-2, 5) {
                grid.push(KernelParams::isotropic(sf, l, sn));
            }
        }
    }
    grid
}

/// Picks the candidate with the highest evidence; the first wins ties.
/// Candidates that fail to factor are skipped. Falls back to `fallback`
/// when the data are empty or nothing factors.
pub fn select_hyperparameters(data: &Dataset, candidates: &[KernelParams], fallback: KernelParams) -> KernelParams {
    if data.is_empty() {
        return fallback;
    }
    let mut best: Option<(f64, KernelParams)> = None;
    for kp in candidates {
        if let Ok(lml) = log_marginal_likelihood(data, kp) {
            if lml.is_finite() && best.is_none_or(|(b, _)| lml > b) {
                best = Some((lml, *kp));
            }
        }
    }
    best.map_or(fallback, |(_, kp)| kp)
}
