//! Odd-degree polynomial drift F(v) = sum_k a_k v^k with negative leading
//! coefficient, the norm-based truncation gate applied to it inside the time
//! steps, and the closed-form constants from its growth and Lipschitz bounds
//! used by the verification suite.

use crate::error::{Error, Result};
use crate::spectral::{lq_norm_pow, GridField};

/// Polynomial nonlinearity of odd degree n with a_n < 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialDrift {
    degree: usize,
    coeffs: Vec<f64>,
}

impl PolynomialDrift {
    /// Builds the drift from coefficients a_0..a_n in ascending order.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::InvalidConfig("drift needs coefficients a_0..a_n with n >= 1".into()));
        }
        let degree = coeffs.len() - 1;
        if degree % 2 == 0 {
            return Err(Error::InvalidConfig(format!("drift degree must be odd, got {degree}")));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidConfig("drift coefficients must be finite".into()));
        }
        let leading = *coeffs.last().expect("nonempty");
        if !(leading < 0.0) {
            return Err(Error::InvalidConfig(format!(
                "leading drift coefficient must be negative, got {leading}"
            )));
        }
        Ok(Self { degree, coeffs })
    }

    /// The cubic v - v^3 (degree 3, a = (0, 1, 0, -1)).
    pub fn ginzburg_landau() -> Self {
        Self::new(vec![0.0, 1.0, 0.0, -1.0]).expect("valid by construction")
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Scalar evaluation by Horner's rule; one rounding convention everywhere.
    pub fn eval_pointwise(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for &a in self.coeffs.iter().rev() {
            acc = acc * x + a;
        }
        acc
    }

    /// Pointwise application at every collocation point.
    pub fn apply_on_grid(&self, u: &GridField) -> GridField {
        GridField::new(u.values().iter().map(|&x| self.eval_pointwise(x)).collect())
    }

    /// Constant G in the L^2 growth bound
    /// ||F(v+w)||_{L^2} <= G (1 + ||v||_{L^q}^{q/2} + ||w||_{L^q}^{q/2})
    /// on the unit interval: G = 2^{n+1} max_k |a_k|.
    ///
    /// # Panics
    /// If `q` is odd or smaller than 2n.
    pub fn growth_constant(&self, q: u32) -> f64 {
        assert!(
            q % 2 == 0 && q as usize >= 2 * self.degree,
            "growth bound needs even q >= 2n, got q={q} for n={}",
            self.degree
        );
        let amax = self.coeffs.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        2f64.powi(self.degree as i32 + 1) * amax
    }

    /// Constant C in the scalar one-sided bound
    /// (x-y)(f(x)-f(y)) <= C (x-y)^2 for all reals:
    /// C = (n-1) max{1, |a_n|^{2-n}} max{1, max_{k<n} (k|a_k|)^{n-1}}.
    pub fn one_sided_constant(&self) -> f64 {
        let n = self.degree as i32;
        let lead = self.coeffs[self.degree].abs();
        let inner = self
            .coeffs
            .iter()
            .take(self.degree)
            .enumerate()
            .fold(0.0f64, |m, (k, a)| m.max((k as f64 * a.abs()).powi(n - 1)));
        (n - 1) as f64 * lead.powi(2 - n).max(1.0) * inner.max(1.0)
    }

    /// Constant L in the local Lipschitz bound
    /// ||F(v)-F(w)||_{L^2}^2 <= L ||v-w||_{L^{2n^2}}^2 (1 + ||v||^{2(n-1)} + ||w||^{2(n-1)})
    /// on the unit interval: L = [n(n+1)/2 * max_{1<=j<=n} |a_j|]^2.
    pub fn local_lipschitz_constant(&self) -> f64 {
        let n = self.degree as f64;
        let amax = self.coeffs.iter().skip(1).fold(0.0f64, |m, a| m.max(a.abs()));
        let inner = n * (n + 1.0) / 2.0 * amax;
        inner * inner
    }
}

/// Which field the truncation gate measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndicatorVariant {
    /// Gate on the state itself (the scheme as analyzed).
    StateNorm,
    /// Gate on the drift evaluated at the state (the behavior of the
    /// published experiment script).
    DriftNorm,
}

impl IndicatorVariant {
    pub fn name(&self) -> &'static str {
        match self {
            IndicatorVariant::StateNorm => "state_norm",
            IndicatorVariant::DriftNorm => "drift_norm",
        }
    }
}

impl std::str::FromStr for IndicatorVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "state_norm" => Ok(IndicatorVariant::StateNorm),
            "drift_norm" => Ok(IndicatorVariant::DriftNorm),
            other => Err(Error::InvalidConfig(format!(
                "unknown indicator variant `{other}` (expected state_norm or drift_norm)"
            ))),
        }
    }
}

/// Truncation gate: the drift is kept only while the L^{2n^2} quadrature norm
/// of the measured field stays below (N/T)^chi.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationRule {
    chi: f64,
    t_horizon: f64,
    n_steps: u64,
    variant: IndicatorVariant,
    degree: usize,
}

impl TruncationRule {
    pub fn new(
        chi: f64,
        t_horizon: f64,
        n_steps: u64,
        variant: IndicatorVariant,
        degree: usize,
    ) -> Result<Self> {
        if degree % 2 == 0 || degree == 0 {
            return Err(Error::InvalidConfig(format!(
                "truncation rule needs an odd drift degree, got {degree}"
            )));
        }
        let chi_max = 1.0 / (2.0 * degree as f64);
        if !(chi > 0.0) || chi > chi_max || !chi.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "chi must lie in (0, {chi_max}] for degree {degree}, got {chi}"
            )));
        }
        if !(t_horizon > 0.0) || !t_horizon.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "time horizon must be positive and finite, got {t_horizon}"
            )));
        }
        if n_steps == 0 {
            return Err(Error::InvalidConfig("step count N must be >= 1".into()));
        }
        Ok(Self { chi, t_horizon, n_steps, variant, degree })
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn variant(&self) -> IndicatorVariant {
        self.variant
    }

    pub fn n_steps(&self) -> u64 {
        self.n_steps
    }

    /// Norm exponent q = 2n^2 of the gate.
    pub fn norm_exponent(&self) -> u32 {
        2 * (self.degree * self.degree) as u32
    }

    /// Threshold raised to the q-th power: (N/T)^{2 n^2 chi}. The comparison
    /// happens in powered form so no roots are ever taken. Exponents within
    /// 1e-9 of an integer are snapped so that chi = 1/(2n) yields exactly
    /// (N/T)^n.
    pub fn threshold_pow(&self) -> f64 {
        let ratio = self.n_steps as f64 / self.t_horizon;
        let p = self.norm_exponent() as f64 * self.chi;
        if (p - p.round()).abs() < 1e-9 {
            ratio.powi(p.round() as i32)
        } else {
            ratio.powf(p)
        }
    }

    /// Evaluates the gate. `state` and `drift_of_state` are both supplied so
    /// the variant choice stays an implementation detail of the rule.
    pub fn indicator(&self, state: &GridField, drift_of_state: &GridField) -> bool {
        let measured = match self.variant {
            IndicatorVariant::StateNorm => state,
            IndicatorVariant::DriftNorm => drift_of_state,
        };
        lq_norm_pow(measured, self.norm_exponent()) <= self.threshold_pow()
    }
}
