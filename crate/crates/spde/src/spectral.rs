//! Sine-basis spectral representation of the Dirichlet Laplacian on (0,1).
//!
//! States live in the span of the orthonormal basis e_k(x) = sqrt(2) sin(k pi x),
//! k = 1..K. The linear operator A = -nu * Laplacian acts mode-wise through its
//! eigenvalues lambda_k = nu k^2 pi^2. Grid representations hold point values at
//! the interior collocation points x_j = j/(K+1); the two representations are
//! linked by an orthogonal DST-I pair, so transforms round-trip exactly up to
//! rounding and the quadrature L^2 norm matches the coefficient sum (Parseval).

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Coefficients c_k of a state in the orthonormal sine basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    /// Zero state with `k_modes` coefficients.
    pub fn zero(k_modes: usize) -> Self {
        Self { coeffs: vec![0.0; k_modes] }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Sum of squared coefficients; equals the squared L^2 norm of the state.
    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }
}

/// Point values u(x_j) at the interior collocation points x_j = j/(K+1).
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    values: Vec<f64>,
}

impl GridField {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Rectangle-rule quadrature of the q-th power of the L^q norm:
/// (1/(K+1)) * sum_j u_j^q.
///
/// For q = 2 this equals the coefficient sum of squares exactly (up to
/// rounding), by DST-I orthogonality.
///
/// # Panics
/// If `q` is odd or less than 2.
pub fn lq_norm_pow(u: &GridField, q: u32) -> f64 {
    assert!(q >= 2 && q % 2 == 0, "norm exponent must be even and >= 2, got {q}");
    let sum: f64 = u.values.iter().map(|&v| v.powi(q as i32)).sum();
    sum / (u.values.len() as f64 + 1.0)
}

/// Fast unnormalized DST-I of length K computed through a complex FFT of
/// length 2(K+1) on the odd extension. Output: S_k = sum_j in_j sin(pi jk/(K+1)).
struct SineDst {
    k_modes: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl SineDst {
    fn new(k_modes: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(2 * (k_modes + 1));
        Self { k_modes, fft }
    }

    fn apply(&self, input: &[f64]) -> Vec<f64> {
        debug_assert_eq!(input.len(), self.k_modes);
        let l = 2 * (self.k_modes + 1);
        let mut buf = vec![Complex::new(0.0, 0.0); l];
        for (j, &x) in input.iter().enumerate() {
            buf[j + 1].re = x;
            buf[l - 1 - j].re = -x;
        }
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        self.fft.process_with_scratch(&mut buf, &mut scratch);
        // Odd input makes the spectrum purely imaginary: B_k = -2i S_k.
        (1..=self.k_modes).map(|k| -0.5 * buf[k].im).collect()
    }
}

/// Unnormalized DST-I by direct O(K^2) summation; correctness baseline for the
/// FFT path.
fn sine_dst_naive(input: &[f64]) -> Vec<f64> {
    let k_modes = input.len();
    let step = std::f64::consts::PI / (k_modes as f64 + 1.0);
    (1..=k_modes)
        .map(|k| {
            input
                .iter()
                .enumerate()
                .map(|(j, &x)| x * ((k * (j + 1)) as f64 * step).sin())
                .sum()
        })
        .collect()
}

/// The retained sine-mode basis together with the diffusivity nu, providing
/// mode-wise operator calculus and the grid transforms.
///
/// All methods are pure; the value is cheap to clone and safe to share across
/// threads.
#[derive(Clone)]
pub struct ModeBasis {
    k_modes: usize,
    nu: f64,
    dst: Arc<SineDst>,
}

impl std::fmt::Debug for ModeBasis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModeBasis")
            .field("k_modes", &self.k_modes)
            .field("nu", &self.nu)
            .finish()
    }
}

impl ModeBasis {
    pub fn new(k_modes: usize, nu: f64) -> Result<Self> {
        if k_modes == 0 {
            return Err(Error::InvalidConfig("mode count K must be >= 1".into()));
        }
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "diffusivity nu must be positive and finite, got {nu}"
            )));
        }
        Ok(Self { k_modes, nu, dst: Arc::new(SineDst::new(k_modes)) })
    }

    pub fn k_modes(&self) -> usize {
        self.k_modes
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Eigenvalue lambda_k = nu k^2 pi^2 of -A for the 1-based mode index k.
    ///
    /// # Panics
    /// If `k` is 0 or exceeds the mode count.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        assert!(k >= 1 && k <= self.k_modes, "mode index {k} out of range 1..={}", self.k_modes);
        let kf = k as f64;
        self.nu * kf * kf * std::f64::consts::PI * std::f64::consts::PI
    }

    fn check_len(&self, len: usize) {
        assert_eq!(len, self.k_modes, "field length {len} does not match basis K={}", self.k_modes);
    }

    /// Forward evaluation u_j = sqrt(2) sum_k c_k sin(k pi j/(K+1)).
    pub fn to_grid(&self, f: &SpectralField) -> GridField {
        self.check_len(f.len());
        let mut v = self.dst.apply(f.coeffs());
        for x in &mut v {
            *x *= std::f64::consts::SQRT_2;
        }
        GridField::new(v)
    }

    /// Inverse transform c_k = (sqrt(2)/(K+1)) sum_j u_j sin(k pi j/(K+1)).
    pub fn to_spectral(&self, u: &GridField) -> SpectralField {
        self.check_len(u.len());
        let scale = std::f64::consts::SQRT_2 / (self.k_modes as f64 + 1.0);
        let mut c = self.dst.apply(u.values());
        for x in &mut c {
            *x *= scale;
        }
        SpectralField::new(c)
    }

    /// O(K^2) reference implementation of [`Self::to_grid`].
    pub fn to_grid_naive(&self, f: &SpectralField) -> GridField {
        self.check_len(f.len());
        let mut v = sine_dst_naive(f.coeffs());
        for x in &mut v {
            *x *= std::f64::consts::SQRT_2;
        }
        GridField::new(v)
    }

    /// O(K^2) reference implementation of [`Self::to_spectral`].
    pub fn to_spectral_naive(&self, u: &GridField) -> SpectralField {
        self.check_len(u.len());
        let scale = std::f64::consts::SQRT_2 / (self.k_modes as f64 + 1.0);
        let mut c = sine_dst_naive(u.values());
        for x in &mut c {
            *x *= scale;
        }
        SpectralField::new(c)
    }

    fn assert_time(t: f64) {
        assert!(t >= 0.0 && t.is_finite(), "time must be finite and nonnegative, got {t}");
    }

    /// Semigroup e^{tA}: mode-wise factor e^{-lambda_k t}.
    ///
    /// # Panics
    /// If `t` is negative or not finite.
    pub fn semigroup_apply(&self, f: &SpectralField, t: f64) -> SpectralField {
        Self::assert_time(t);
        self.check_len(f.len());
        let c = f
            .coeffs()
            .iter()
            .enumerate()
            .map(|(i, &ck)| ck * (-self.eigenvalue(i + 1) * t).exp())
            .collect();
        SpectralField::new(c)
    }

    /// Resolvent (I - tA)^{-1}: mode-wise division by (1 + lambda_k t).
    ///
    /// # Panics
    /// If `t` is negative or not finite.
    pub fn resolvent_apply(&self, f: &SpectralField, t: f64) -> SpectralField {
        Self::assert_time(t);
        self.check_len(f.len());
        let c = f
            .coeffs()
            .iter()
            .enumerate()
            .map(|(i, &ck)| ck / (1.0 + self.eigenvalue(i + 1) * t))
            .collect();
        SpectralField::new(c)
    }

    /// Numerator half of the Crank-Nicolson factor: mode-wise (1 - lambda_k t/2).
    ///
    /// Kept separate from [`Self::cn_denominator_apply`] so the reference step
    /// can apply the numerator to the state before adding drift and noise,
    /// preserving the fixed arithmetic order of the time step.
    pub fn cn_numerator_apply(&self, f: &SpectralField, t: f64) -> SpectralField {
        Self::assert_time(t);
        self.check_len(f.len());
        let c = f
            .coeffs()
            .iter()
            .enumerate()
            .map(|(i, &ck)| ck * (1.0 - self.eigenvalue(i + 1) * t / 2.0))
            .collect();
        SpectralField::new(c)
    }

    /// Denominator half of the Crank-Nicolson factor: mode-wise division by
    /// (1 + lambda_k t/2).
    pub fn cn_denominator_apply(&self, f: &SpectralField, t: f64) -> SpectralField {
        Self::assert_time(t);
        self.check_len(f.len());
        let c = f
            .coeffs()
            .iter()
            .enumerate()
            .map(|(i, &ck)| ck / (1.0 + self.eigenvalue(i + 1) * t / 2.0))
            .collect();
        SpectralField::new(c)
    }

    /// Fractional power (-A)^r: mode-wise factor lambda_k^r, r in [-2, 2].
    ///
    /// # Panics
    /// If |r| > 2 (outside the range any operator-bound check needs).
    pub fn fractional_power_apply(&self, f: &SpectralField, r: f64) -> SpectralField {
        assert!(r.is_finite() && r.abs() <= 2.0, "fractional power exponent {r} outside [-2, 2]");
        self.check_len(f.len());
        let c = f
            .coeffs()
            .iter()
            .enumerate()
            .map(|(i, &ck)| ck * self.eigenvalue(i + 1).powf(r))
            .collect();
        SpectralField::new(c)
    }
}

/// Uniform time grid {0, h, 2h, ..., T} with h = T/N.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_horizon: f64,
    n_steps: u64,
}

impl TimeGrid {
    pub fn new(t_horizon: f64, n_steps: u64) -> Result<Self> {
        if !(t_horizon > 0.0) || !t_horizon.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "time horizon must be positive and finite, got {t_horizon}"
            )));
        }
        if n_steps == 0 {
            return Err(Error::InvalidConfig("step count N must be >= 1".into()));
        }
        Ok(Self { t_horizon, n_steps })
    }

    pub fn t_horizon(&self) -> f64 {
        self.t_horizon
    }

    pub fn n_steps(&self) -> u64 {
        self.n_steps
    }

    pub fn h(&self) -> f64 {
        self.t_horizon / self.n_steps as f64
    }

    /// Value of the j-th grid point. The last point is exactly T, avoiding the
    /// rounding drift of N*(T/N).
    ///
    /// # Panics
    /// If `j > N`.
    pub fn grid_point(&self, j: u64) -> f64 {
        assert!(j <= self.n_steps, "grid index {j} out of range 0..={}", self.n_steps);
        if j == self.n_steps {
            self.t_horizon
        } else {
            j as f64 * self.h()
        }
    }

    /// Largest grid point <= t, computed by binary search on integer step
    /// indices. Grid points map to themselves; float division by h is never
    /// used, so round-off cannot misclassify a grid point.
    ///
    /// # Panics
    /// If `t` is outside [0, T] or NaN.
    pub fn floor_grid(&self, t: f64) -> f64 {
        assert!(
            t >= 0.0 && t <= self.t_horizon,
            "time {t} outside [0, {}]",
            self.t_horizon
        );
        let mut lo = 0u64; // invariant: grid_point(lo) <= t
        let mut hi = self.n_steps;
        if self.grid_point(hi) <= t {
            return self.grid_point(hi);
        }
        // invariant: grid_point(hi) > t
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.grid_point(mid) <= t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        self.grid_point(lo)
    }
}
