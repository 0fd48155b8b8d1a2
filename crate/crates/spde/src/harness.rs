//! Coupled Monte Carlo strong-error estimation, convergence-order
//! regression, and the per-step energy audit.
//!
//! Every run couples one reference path at the finest resolution with each
//! coarse path through the same [`NoiseSource`], so coarse increments are
//! bitwise sums of the fine ones and the measured error isolates the time
//! discretization. Runs are distributed over worker threads by run index;
//! accumulation happens in ascending run order, which makes results
//! byte-identical for any thread count.

use std::path::PathBuf;

use crate::drift::{IndicatorVariant, PolynomialDrift, TruncationRule};
use crate::error::{Error, Result};
use crate::noise::NoiseSource;
use crate::scheme::{run_path, PathRecord, RecordSpec, SchemeContext, SchemeKind};
use crate::spectral::{lq_norm_pow, GridField, ModeBasis, SpectralField};
use crate::verify::one_step_energy_bound;

/// Where the initial field comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum XiSpec {
    /// Start from the zero field.
    Zero,
    /// Explicit spectral coefficients, at most one per mode; shorter vectors
    /// are padded with zeros. Not representable in a config file; intended
    /// for programmatic use.
    Coeffs(Vec<f64>),
    /// Path to a coefficient file: one coefficient per non-comment line.
    File(PathBuf),
}

/// Full description of a convergence experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Time horizon T.
    pub t_horizon: f64,
    /// Diffusivity in front of the Dirichlet Laplacian.
    pub nu: f64,
    pub drift: PolynomialDrift,
    /// Truncation exponent; the step-size threshold is (N/T)^chi.
    pub chi: f64,
    /// Number of spectral modes K.
    pub k_modes: usize,
    /// Reference resolution; every entry of `n_list` must divide it.
    pub n_ref: u64,
    /// Coarse resolutions, strictly ascending.
    pub n_list: Vec<u64>,
    pub mc_runs: u64,
    pub seed: u64,
    /// Schemes compared against the reference, no duplicates.
    pub schemes: Vec<SchemeKind>,
    pub indicator_variant: IndicatorVariant,
    /// 1 turns the noise on, 0 off; nothing in between.
    pub noise_scale: f64,
    pub xi: XiSpec,
    /// Scheme integrating the reference path at `n_ref`.
    pub reference_scheme: SchemeKind,
    /// When set, report the maximum L^2 distance over shared grid times
    /// instead of the distance at the final time only.
    pub sup_error: bool,
}

impl Default for ExperimentConfig {
    /// The full-scale figure preset: K = 2^10 modes, reference resolution
    /// K^2, coarse resolutions 2^6..2^18, 25 Monte Carlo runs.
    fn default() -> Self {
        Self {
            t_horizon: 1.0,
            nu: 1.0,
            drift: PolynomialDrift::ginzburg_landau(),
            chi: 1.0 / 6.0,
            k_modes: 1 << 10,
            n_ref: 1 << 20,
            n_list: (6..=18).map(|e| 1u64 << e).collect(),
            mc_runs: 25,
            seed: 0,
            schemes: vec![SchemeKind::TruncExpEuler, SchemeKind::TruncLinImplicitEuler],
            indicator_variant: IndicatorVariant::DriftNorm,
            noise_scale: 1.0,
            xi: XiSpec::Zero,
            reference_scheme: SchemeKind::TruncCrankNicolson,
            sup_error: false,
        }
    }
}

impl ExperimentConfig {
    /// Checks every cross-field invariant. Field-level constraints (drift
    /// shape, chi range, noise scale) are re-checked by the constructors of
    /// the types involved; this reports them as configuration errors up
    /// front.
    pub fn validate(&self) -> Result<()> {
        if !(self.t_horizon.is_finite() && self.t_horizon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "T must be positive and finite, got {}",
                self.t_horizon
            )));
        }
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "nu must be positive and finite, got {}",
                self.nu
            )));
        }
        TruncationRule::new(
            self.chi,
            self.t_horizon,
            1,
            self.indicator_variant,
            self.drift.degree(),
        )?;
        if self.k_modes == 0 {
            return Err(Error::InvalidConfig("K must be at least 1".into()));
        }
        if self.n_ref == 0 || self.n_ref > crate::noise::MAX_N_REF {
            return Err(Error::InvalidConfig(format!(
                "N_ref must lie in 1..=2^40, got {}",
                self.n_ref
            )));
        }
        if self.n_list.is_empty() {
            return Err(Error::InvalidConfig("N_list must not be empty".into()));
        }
        for pair in self.n_list.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::InvalidConfig(format!(
                    "N_list must be strictly ascending, got {} after {}",
                    pair[1], pair[0]
                )));
            }
        }
        for &n in &self.n_list {
            if n == 0 || self.n_ref % n != 0 {
                return Err(Error::InvalidConfig(format!(
                    "every N in N_list must divide N_ref = {}, got {n}",
                    self.n_ref
                )));
            }
        }
        if self.mc_runs == 0 || self.mc_runs > crate::noise::MAX_RUN_INDEX as u64 {
            return Err(Error::InvalidConfig(format!(
                "mc_runs must lie in 1..=2^24, got {}",
                self.mc_runs
            )));
        }
        if self.schemes.is_empty() {
            return Err(Error::InvalidConfig("schemes must not be empty".into()));
        }
        for (i, s) in self.schemes.iter().enumerate() {
            if self.schemes[..i].contains(s) {
                return Err(Error::InvalidConfig(format!("duplicate scheme {}", s.name())));
            }
        }
        if !(self.noise_scale == 0.0 || self.noise_scale == 1.0) {
            return Err(Error::InvalidConfig(format!(
                "noise_scale must be exactly 0 or 1, got {}",
                self.noise_scale
            )));
        }
        if let XiSpec::Coeffs(c) = &self.xi {
            if c.len() > self.k_modes {
                return Err(Error::InvalidConfig(format!(
                    "initial condition has {} coefficients but only K = {} modes",
                    c.len(),
                    self.k_modes
                )));
            }
        }
        Ok(())
    }

    /// Resolves the initial condition to a K-mode spectral field, reading
    /// the coefficient file if one was configured.
    pub fn initial_field(&self) -> Result<SpectralField> {
        let coeffs = match &self.xi {
            XiSpec::Zero => Vec::new(),
            XiSpec::Coeffs(c) => c.clone(),
            XiSpec::File(path) => parse_coeff_lines(&std::fs::read_to_string(path)?)?,
        };
        if coeffs.len() > self.k_modes {
            return Err(Error::InvalidConfig(format!(
                "initial condition has {} coefficients but only K = {} modes",
                coeffs.len(),
                self.k_modes
            )));
        }
        let mut full = coeffs;
        full.resize(self.k_modes, 0.0);
        Ok(SpectralField::new(full))
    }
}

/// Parses one coefficient per line; empty lines and `#` comments skipped.
pub fn parse_coeff_lines(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v: f64 = t.parse().map_err(|_| {
            Error::InvalidConfig(format!(
                "coefficient file line {}: `{t}` is not a number",
                lineno + 1
            ))
        })?;
        if !v.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "coefficient file line {}: value must be finite",
                lineno + 1
            )));
        }
        out.push(v);
    }
    Ok(out)
}

/// One measured point of the error table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRow {
    pub scheme: SchemeKind,
    pub n_steps: u64,
    pub mc_runs: u64,
    pub rmse: f64,
    pub stderr_rmse: f64,
}

/// Strong-error results, rows sorted by (scheme name, N) and keyed uniquely
/// by that pair.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorTable {
    pub rows: Vec<ErrorRow>,
}

impl ErrorTable {
    pub fn row(&self, scheme: SchemeKind, n_steps: u64) -> Option<&ErrorRow> {
        self.rows.iter().find(|r| r.scheme == scheme && r.n_steps == n_steps)
    }
}

/// Least-squares fit of log(rmse) against log(N).
#[derive(Debug, Clone, Copy)]
pub struct OrderFit {
    pub scheme: SchemeKind,
    /// Negative slope magnitude is the observed convergence order.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Squared L^2 distance between two coefficient vectors (Parseval).
fn dist_sq(a: &SpectralField, b: &SpectralField) -> f64 {
    a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Squared error of one coarse path against the reference path for one run:
/// distance at the final time, or the maximum over shared grid times when
/// `sup_error` is set.
fn path_error_sq(reference: &PathRecord, coarse: &PathRecord, ref_stride: u64, sup: bool) -> f64 {
    if !sup {
        return dist_sq(reference.terminal_state(), coarse.terminal_state());
    }
    let ratio = reference.n_steps() / coarse.n_steps();
    let mut worst = 0.0f64;
    for (j, state) in coarse.states().iter().enumerate() {
        let ref_idx = (j as u64 * ratio / ref_stride) as usize;
        worst = worst.max(dist_sq(&reference.states()[ref_idx], state));
    }
    worst
}

/// Runs the coupled Monte Carlo experiment and tabulates rmse per
/// (scheme, N).
///
/// `threads` workers split the runs by index stride; the result is
/// byte-identical for every thread count because each run's contribution
/// depends only on (seed, run index) and the final reduction is in ascending
/// run order.
pub fn strong_error_mc(cfg: &ExperimentConfig, threads: usize) -> Result<ErrorTable> {
    cfg.validate()?;
    let xi = cfg.initial_field()?;
    let basis = ModeBasis::new(cfg.k_modes, cfg.nu)?;
    let ctx = SchemeContext::new(
        basis,
        cfg.drift.clone(),
        cfg.chi,
        cfg.indicator_variant,
        cfg.t_horizon,
    )?;

    let pairs: Vec<(SchemeKind, u64)> = cfg
        .schemes
        .iter()
        .flat_map(|&s| cfg.n_list.iter().map(move |&n| (s, n)))
        .collect();
    // With sup_error on, the reference keeps every state that any coarse grid
    // shares; the stride is the gcd of the step ratios.
    let ref_stride = cfg.n_list.iter().fold(0, |g, &n| gcd(g, cfg.n_ref / n));
    let ref_record_spec =
        if cfg.sup_error { RecordSpec::Every(ref_stride) } else { RecordSpec::TerminalOnly };
    let coarse_record_spec =
        if cfg.sup_error { RecordSpec::Every(1) } else { RecordSpec::TerminalOnly };

    let mc = cfg.mc_runs;
    let workers = threads.max(1).min(mc as usize);
    let run_one = |m: u64| -> Result<Vec<f64>> {
        let src = NoiseSource::new(
            cfg.seed,
            m as u32,
            cfg.k_modes,
            cfg.n_ref,
            cfg.t_horizon,
            cfg.noise_scale,
        )?;
        let reference =
            run_path(&ctx, cfg.reference_scheme, cfg.n_ref, &src, 1, &xi, ref_record_spec)?;
        let mut sq = Vec::with_capacity(pairs.len());
        for &(kind, n) in &pairs {
            let coarse =
                run_path(&ctx, kind, n, &src, cfg.n_ref / n, &xi, coarse_record_spec)?;
            sq.push(path_error_sq(&reference, &coarse, ref_stride, cfg.sup_error));
        }
        Ok(sq)
    };

    // sq_by_run[m][pair]: every worker owns the runs with its stride class,
    // so slots never overlap and the merged table is thread-count free.
    let mut sq_by_run: Vec<Vec<f64>> = vec![Vec::new(); mc as usize];
    if workers <= 1 {
        for (m, slot) in sq_by_run.iter_mut().enumerate() {
            *slot = run_one(m as u64)?;
        }
    } else {
        let chunks: Vec<Result<Vec<(u64, Vec<f64>)>>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let run_one = &run_one;
                    scope.spawn(move || {
                        (w as u64..mc)
                            .step_by(workers)
                            .map(|m| run_one(m).map(|sq| (m, sq)))
                            .collect()
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });
        for chunk in chunks {
            for (m, sq) in chunk? {
                sq_by_run[m as usize] = sq;
            }
        }
    }

    let mut rows = Vec::with_capacity(pairs.len());
    for (pi, &(scheme, n)) in pairs.iter().enumerate() {
        let mean = sq_by_run.iter().map(|sq| sq[pi]).sum::<f64>() / mc as f64;
        let rmse = mean.sqrt();
        let stderr_rmse = if rmse > 0.0 && mc >= 2 {
            let var = sq_by_run.iter().map(|sq| (sq[pi] - mean) * (sq[pi] - mean)).sum::<f64>()
                / (mc - 1) as f64;
            // Delta method: se(sqrt(m)) = se(m) / (2 sqrt(m)).
            (var / mc as f64).sqrt() / (2.0 * rmse)
        } else {
            0.0
        };
        rows.push(ErrorRow { scheme, n_steps: n, mc_runs: mc, rmse, stderr_rmse });
    }
    rows.sort_by(|a, b| (a.scheme.name(), a.n_steps).cmp(&(b.scheme.name(), b.n_steps)));
    Ok(ErrorTable { rows })
}

/// Ordinary least squares of log(rmse) on log(N) for one scheme's rows.
/// Requires at least three rows, all with rmse > 0.
pub fn fit_order(table: &ErrorTable, scheme: SchemeKind) -> Result<OrderFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for row in table.rows.iter().filter(|r| r.scheme == scheme) {
        if row.rmse <= 0.0 {
            return Err(Error::Fit(format!(
                "{} at N = {} has rmse {} — log-log fit undefined",
                scheme.name(),
                row.n_steps,
                row.rmse
            )));
        }
        xs.push((row.n_steps as f64).ln());
        ys.push(row.rmse.ln());
    }
    if xs.len() < 3 {
        return Err(Error::Fit(format!(
            "need at least 3 positive-rmse rows for {}, found {}",
            scheme.name(),
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 =
        xs.iter().zip(&ys).map(|(x, y)| (y - (intercept + slope * x)).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let r_squared = if ss_tot <= f64::MIN_POSITIVE { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(OrderFit { scheme, slope, intercept, r_squared })
}

/// Worst per-step margin of the one-step energy inequality along a path.
#[derive(Debug, Clone)]
pub struct AuditReport {
    pub steps_checked: u64,
    /// Minimum over steps of (RHS - LHS) / max(1, |RHS|).
    pub worst_margin: f64,
    /// Step index where the worst margin occurred.
    pub worst_step: u64,
    /// True when no margin falls below -1e-6.
    pub pass: bool,
}

/// Relative tolerance absorbing quadrature rounding in the audit.
pub const AUDIT_SLACK: f64 = 1e-6;

/// Evaluates the one-step energy inequality at every recorded state of a
/// path: with u the state, v = 0, q = 2·degree, and t one full step, the
/// gated Euler predictor must satisfy
/// ||u + h·1{gate}·F(u)||_q^q <= [`one_step_energy_bound`].
///
/// The path must have been produced with the state-norm indicator, which is
/// the gate the inequality's left side re-evaluates.
pub fn lyapunov_audit(cfg: &ExperimentConfig, path: &PathRecord) -> AuditReport {
    assert_eq!(
        cfg.indicator_variant,
        IndicatorVariant::StateNorm,
        "audit precondition: path gated by the state norm"
    );
    let basis = ModeBasis::new(cfg.k_modes, cfg.nu).expect("validated config");
    let rule = TruncationRule::new(
        cfg.chi,
        cfg.t_horizon,
        path.n_steps(),
        IndicatorVariant::StateNorm,
        cfg.drift.degree(),
    )
    .expect("validated config");
    let n = cfg.drift.degree();
    let q = 2 * n as u32;
    let h = path.h();
    let mut worst = f64::INFINITY;
    let mut worst_step = 0;
    let mut checked = 0u64;
    for (&step, state) in path.steps().iter().zip(path.states()) {
        let u = basis.to_grid(state);
        let fu = cfg.drift.apply_on_grid(&u);
        let gate = rule.indicator(&u, &fu);
        let shifted = GridField::new(
            u.values()
                .iter()
                .zip(fu.values())
                .map(|(x, f)| x + if gate { h * f } else { 0.0 })
                .collect(),
        );
        let lhs = lq_norm_pow(&shifted, q);
        let rhs = one_step_energy_bound(&cfg.drift, q, h, cfg.t_horizon, &u, 0.0);
        let margin = (rhs - lhs) / rhs.abs().max(1.0);
        if margin < worst {
            worst = margin;
            worst_step = step;
        }
        checked += 1;
    }
    AuditReport {
        steps_checked: checked,
        worst_margin: worst,
        worst_step,
        pass: worst >= -AUDIT_SLACK,
    }
}
