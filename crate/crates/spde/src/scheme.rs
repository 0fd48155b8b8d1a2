//! One-step time integrators on the spectral state and the path runner.
//!
//! All three integrators share one fixed operation order per step: grid
//! transform, drift evaluation, truncation gate, spectral transform of the
//! drift, affine combination with the noise increment, linear operator. The
//! order is part of the output contract; changing it reorders floating-point
//! operations and breaks bitwise reproducibility of recorded paths.
//!
//! The drift is always evaluated at the left endpoint of the step, including
//! inside the Crank-Nicolson integrator, whose averaging applies to the linear
//! part only.

use crate::drift::{IndicatorVariant, PolynomialDrift, TruncationRule};
use crate::error::{Error, Result};
use crate::noise::{IncrementBlock, NoiseSource};
use crate::spectral::{ModeBasis, SpectralField, TimeGrid};

/// Integrator selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeKind {
    /// Y' = e^{hA} [Y + h 1{gate} F(Y) + dW].
    TruncExpEuler,
    /// Z' = (Z + h 1{gate} F(Z) + dW) / (1 + lambda h), mode-wise.
    TruncLinImplicitEuler,
    /// X' = ((1 - lambda h/2) X + h 1{gate} F(X) + dW) / (1 + lambda h/2).
    TruncCrankNicolson,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 3] =
        [SchemeKind::TruncExpEuler, SchemeKind::TruncLinImplicitEuler, SchemeKind::TruncCrankNicolson];

    pub fn name(&self) -> &'static str {
        match self {
            SchemeKind::TruncExpEuler => "exp_euler",
            SchemeKind::TruncLinImplicitEuler => "lin_implicit",
            SchemeKind::TruncCrankNicolson => "crank_nicolson",
        }
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp_euler" => Ok(SchemeKind::TruncExpEuler),
            "lin_implicit" => Ok(SchemeKind::TruncLinImplicitEuler),
            "crank_nicolson" => Ok(SchemeKind::TruncCrankNicolson),
            other => Err(Error::InvalidConfig(format!(
                "unknown scheme `{other}` (expected exp_euler, lin_implicit, or crank_nicolson)"
            ))),
        }
    }
}

/// Everything an integrator shares across step counts: basis, drift, gate
/// parameters, and the horizon.
#[derive(Debug, Clone)]
pub struct SchemeContext {
    basis: ModeBasis,
    drift: PolynomialDrift,
    chi: f64,
    variant: IndicatorVariant,
    t_horizon: f64,
}

impl SchemeContext {
    pub fn new(
        basis: ModeBasis,
        drift: PolynomialDrift,
        chi: f64,
        variant: IndicatorVariant,
        t_horizon: f64,
    ) -> Result<Self> {
        // Validate chi against the drift degree eagerly; a per-N rule is
        // constructed later with the same parameters.
        TruncationRule::new(chi, t_horizon, 1, variant, drift.degree())?;
        Ok(Self { basis, drift, chi, variant, t_horizon })
    }

    pub fn basis(&self) -> &ModeBasis {
        &self.basis
    }

    pub fn drift(&self) -> &PolynomialDrift {
        &self.drift
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn variant(&self) -> IndicatorVariant {
        self.variant
    }

    pub fn t_horizon(&self) -> f64 {
        self.t_horizon
    }
}

/// State of one path at a grid time.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeState {
    step_index: u64,
    field: SpectralField,
}

impl SchemeState {
    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    pub fn field(&self) -> &SpectralField {
        &self.field
    }

    pub fn into_field(self) -> SpectralField {
        self.field
    }
}

/// One-step integrator for a fixed (scheme, step count) pair with precomputed
/// mode factors.
#[derive(Debug, Clone)]
pub struct Stepper<'a> {
    ctx: &'a SchemeContext,
    kind: SchemeKind,
    grid: TimeGrid,
    rule: TruncationRule,
    /// Multiplicative factor per mode (e^{-lambda h} or 1 - lambda h/2); unused
    /// entries are 1.
    num_factor: Vec<f64>,
    /// Divisor per mode (1 + lambda h or 1 + lambda h/2); unused entries are 1.
    denominator: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(ctx: &'a SchemeContext, kind: SchemeKind, n_steps: u64) -> Result<Self> {
        let grid = TimeGrid::new(ctx.t_horizon, n_steps)?;
        let rule =
            TruncationRule::new(ctx.chi, ctx.t_horizon, n_steps, ctx.variant, ctx.drift.degree())?;
        let h = grid.h();
        let k_modes = ctx.basis.k_modes();
        let mut num_factor = vec![1.0; k_modes];
        let mut denominator = vec![1.0; k_modes];
        for k in 1..=k_modes {
            let lam = ctx.basis.eigenvalue(k);
            match kind {
                SchemeKind::TruncExpEuler => {
                    num_factor[k - 1] = (-lam * h).exp();
                }
                SchemeKind::TruncLinImplicitEuler => {
                    denominator[k - 1] = 1.0 + lam * h;
                }
                SchemeKind::TruncCrankNicolson => {
                    num_factor[k - 1] = 1.0 - lam * h / 2.0;
                    denominator[k - 1] = 1.0 + lam * h / 2.0;
                }
            }
        }
        Ok(Self { ctx, kind, grid, rule, num_factor, denominator })
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn rule(&self) -> &TruncationRule {
        &self.rule
    }

    /// State at time 0 with the given initial coefficients.
    ///
    /// # Panics
    /// If `xi` does not match the basis length.
    pub fn initial_state(&self, xi: &SpectralField) -> SchemeState {
        assert_eq!(xi.len(), self.ctx.basis.k_modes(), "initial value length mismatch");
        SchemeState { step_index: 0, field: xi.clone() }
    }

    /// Advances one grid step with the supplied increment block.
    ///
    /// # Panics
    /// If the path is already at the horizon, or the block does not span one
    /// step of this grid.
    pub fn step(&self, s: SchemeState, dw: &IncrementBlock) -> SchemeState {
        let h = self.grid.h();
        assert!(
            (dw.dt() - h).abs() <= 1e-12 * h,
            "increment spans {} but the step size is {h}",
            dw.dt()
        );
        self.step_on_slice(s, dw.values())
    }

    fn step_on_slice(&self, s: SchemeState, dw: &[f64]) -> SchemeState {
        assert!(s.step_index < self.grid.n_steps(), "path already at the horizon");
        assert_eq!(dw.len(), self.ctx.basis.k_modes(), "increment length mismatch");
        let h = self.grid.h();
        let basis = &self.ctx.basis;

        let u = basis.to_grid(&s.field);
        let fu = self.ctx.drift.apply_on_grid(&u);
        let gate_open = self.rule.indicator(&u, &fu);
        let fhat = if gate_open {
            self.ctx.drift_to_spectral(&fu)
        } else {
            SpectralField::zero(basis.k_modes())
        };

        let c = s.field.coeffs();
        let f = fhat.coeffs();
        let mut next = Vec::with_capacity(c.len());
        match self.kind {
            SchemeKind::TruncExpEuler => {
                for k in 0..c.len() {
                    next.push(self.num_factor[k] * (c[k] + h * f[k] + dw[k]));
                }
            }
            SchemeKind::TruncLinImplicitEuler => {
                for k in 0..c.len() {
                    next.push((c[k] + h * f[k] + dw[k]) / self.denominator[k]);
                }
            }
            SchemeKind::TruncCrankNicolson => {
                for k in 0..c.len() {
                    next.push((self.num_factor[k] * c[k] + h * f[k] + dw[k]) / self.denominator[k]);
                }
            }
        }
        SchemeState { step_index: s.step_index + 1, field: SpectralField::new(next) }
    }
}

impl SchemeContext {
    fn drift_to_spectral(&self, fu: &crate::spectral::GridField) -> SpectralField {
        self.basis.to_spectral(fu)
    }
}

/// Which grid times a path run records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordSpec {
    /// Only the state at the horizon.
    TerminalOnly,
    /// Time 0, every s-th grid time, and always the horizon.
    Every(u64),
}

/// States of one simulated path at the recorded grid times.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    kind: SchemeKind,
    n_steps: u64,
    run_index: u32,
    h: f64,
    steps: Vec<u64>,
    times: Vec<f64>,
    states: Vec<SpectralField>,
}

impl PathRecord {
    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn n_steps(&self) -> u64 {
        self.n_steps
    }

    pub fn run_index(&self) -> u32 {
        self.run_index
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Recorded step indices, strictly increasing.
    pub fn steps(&self) -> &[u64] {
        &self.steps
    }

    /// Recorded grid times, strictly increasing.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[SpectralField] {
        &self.states
    }

    /// State at the horizon (always recorded).
    pub fn terminal_state(&self) -> &SpectralField {
        self.states.last().expect("terminal state always recorded")
    }
}

/// Runs one path of `kind` over N steps, consuming the coarse increments of
/// `src` with the given fine-to-coarse ratio. Deterministic in
/// (seed, run index, configuration).
///
/// `ratio * n_steps` must equal the fine step count of `src`; the initial value
/// `xi` enters as the spectral state at time 0. Rough initial coefficients are
/// accepted but degrade the observed convergence rates.
pub fn run_path(
    ctx: &SchemeContext,
    kind: SchemeKind,
    n_steps: u64,
    src: &NoiseSource,
    ratio: u64,
    xi: &SpectralField,
    record: RecordSpec,
) -> Result<PathRecord> {
    if ratio == 0 || ratio.checked_mul(n_steps) != Some(src.n_ref()) {
        return Err(Error::InvalidConfig(format!(
            "ratio {ratio} x steps {n_steps} must equal the fine step count {}",
            src.n_ref()
        )));
    }
    if src.k_modes() != ctx.basis.k_modes() {
        return Err(Error::InvalidConfig(format!(
            "noise has {} modes but the basis has {}",
            src.k_modes(),
            ctx.basis.k_modes()
        )));
    }
    if src.t_horizon() != ctx.t_horizon {
        return Err(Error::InvalidConfig(format!(
            "noise horizon {} does not match context horizon {}",
            src.t_horizon(),
            ctx.t_horizon
        )));
    }
    if xi.len() != ctx.basis.k_modes() {
        return Err(Error::InvalidConfig(format!(
            "initial value has {} coefficients but the basis has {}",
            xi.len(),
            ctx.basis.k_modes()
        )));
    }
    let snap_every = match record {
        RecordSpec::TerminalOnly => None,
        RecordSpec::Every(0) => {
            return Err(Error::InvalidConfig("snapshot stride must be >= 1".into()))
        }
        RecordSpec::Every(s) => Some(s),
    };

    let stepper = Stepper::new(ctx, kind, n_steps)?;
    let should_record = |j: u64| match snap_every {
        None => j == n_steps,
        Some(s) => j % s == 0 || j == n_steps,
    };

    let mut rec = PathRecord {
        kind,
        n_steps,
        run_index: src.run_index(),
        h: stepper.grid().h(),
        steps: Vec::new(),
        times: Vec::new(),
        states: Vec::new(),
    };
    let mut state = stepper.initial_state(xi);
    if should_record(0) {
        rec.steps.push(0);
        rec.times.push(stepper.grid().grid_point(0));
        rec.states.push(state.field.clone());
    }
    let mut dw = vec![0.0; ctx.basis.k_modes()];
    for j in 0..n_steps {
        src.coarse_increment_into(j, ratio, &mut dw)?;
        state = stepper.step_on_slice(state, &dw);
        if should_record(j + 1) {
            rec.steps.push(j + 1);
            rec.times.push(stepper.grid().grid_point(j + 1));
            rec.states.push(state.field.clone());
        }
    }
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::GridField;

    fn gl_context(k_modes: usize) -> SchemeContext {
        SchemeContext::new(
            ModeBasis::new(k_modes, 1.0).unwrap(),
            PolynomialDrift::ginzburg_landau(),
            1.0 / 6.0,
            IndicatorVariant::StateNorm,
            1.0,
        )
        .unwrap()
    }

    fn linear_context() -> SchemeContext {
        SchemeContext::new(
            ModeBasis::new(1, 1.0).unwrap(),
            PolynomialDrift::new(vec![0.0, -1.0]).unwrap(),
            0.5,
            IndicatorVariant::StateNorm,
            1.0,
        )
        .unwrap()
    }

    fn zero_block(k_modes: usize, n_steps: u64) -> IncrementBlock {
        NoiseSource::new(0, 0, k_modes, n_steps, 1.0, 0.0)
            .unwrap()
            .fine_increment(0)
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn zero_is_a_fixed_point() {
        let ctx = gl_context(8);
        let dw = zero_block(8, 4);
        for kind in SchemeKind::ALL {
            let stepper = Stepper::new(&ctx, kind, 4).unwrap();
            let next = stepper.step(stepper.initial_state(&SpectralField::zero(8)), &dw);
            assert!(next.field().coeffs().iter().all(|&c| c == 0.0), "{kind:?}");
            assert_eq!(next.step_index(), 1);
        }
    }

    #[test]
    fn one_step_closed_forms_single_mode() {
        // Linear drift, noise off, c0 = 1, two steps of size 1/2.
        let ctx = linear_context();
        let dw = zero_block(1, 2);
        let xi = SpectralField::new(vec![1.0]);

        let exp = Stepper::new(&ctx, SchemeKind::TruncExpEuler, 2).unwrap();
        let y1 = exp.step(exp.initial_state(&xi), &dw);
        assert!(rel_close(y1.field().coeffs()[0], 0.0035959416779131828, 1e-12));

        let li = Stepper::new(&ctx, SchemeKind::TruncLinImplicitEuler, 2).unwrap();
        let z1 = li.step(li.initial_state(&xi), &dw);
        assert!(rel_close(z1.field().coeffs()[0], 0.084248806127710780, 1e-12));

        let cn = Stepper::new(&ctx, SchemeKind::TruncCrankNicolson, 2).unwrap();
        let x1 = cn.step(cn.initial_state(&xi), &dw);
        assert!(rel_close(x1.field().coeffs()[0], -0.56739934128699859, 1e-12));
    }

    #[test]
    fn gated_step_is_affine() {
        // States far above the truncation threshold leave only the linear part;
        // superposition then holds exactly up to rounding.
        let ctx = gl_context(6);
        let src = NoiseSource::new(5, 0, 6, 8, 1.0, 1.0).unwrap();
        let d1 = src.fine_increment(0);
        let d2 = src.fine_increment(1);
        let s1 = SpectralField::new(vec![150.0, -30.0, 12.0, 4.0, -2.0, 9.0]);
        let s2 = SpectralField::new(vec![-80.0, 55.0, 21.0, -6.0, 3.0, -17.0]);
        let sum = SpectralField::new(
            s1.coeffs().iter().zip(s2.coeffs()).map(|(a, b)| a + b).collect(),
        );
        let both = IncrementBlock::clone(&d1);
        let combined: Vec<f64> =
            both.values().iter().zip(d2.values()).map(|(a, b)| a + b).collect();

        for kind in SchemeKind::ALL {
            let stepper = Stepper::new(&ctx, kind, 8).unwrap();
            // All three inputs must be gated for superposition to apply.
            for s in [&s1, &s2, &sum] {
                let u = ctx.basis().to_grid(s);
                let fu = ctx.drift().apply_on_grid(&u);
                assert!(!stepper.rule().indicator(&u, &fu));
            }
            let a = stepper.step_on_slice(stepper.initial_state(&s1), d1.values());
            let b = stepper.step_on_slice(stepper.initial_state(&s2), d2.values());
            let c = stepper.step_on_slice(stepper.initial_state(&sum), &combined);
            for k in 0..6 {
                let lhs = a.field().coeffs()[k] + b.field().coeffs()[k];
                let rhs = c.field().coeffs()[k];
                assert!(rel_close(lhs, rhs, 1e-12), "{kind:?} mode {k}");
            }
        }
    }

    #[test]
    fn exp_step_matches_termwise_mild_form() {
        let ctx = gl_context(5);
        let src = NoiseSource::new(1, 2, 5, 4, 1.0, 1.0).unwrap();
        let dw = src.fine_increment(0);
        let y = SpectralField::new(vec![0.4, -0.2, 0.11, 0.05, -0.03]);
        let stepper = Stepper::new(&ctx, SchemeKind::TruncExpEuler, 4).unwrap();
        let next = stepper.step(stepper.initial_state(&y), &dw);

        let h = 0.25;
        let basis = ctx.basis();
        let u = basis.to_grid(&y);
        let fu = ctx.drift().apply_on_grid(&u);
        assert!(stepper.rule().indicator(&u, &fu), "small state must pass the gate");
        let fhat = basis.to_spectral(&fu);
        let sy = basis.semigroup_apply(&y, h);
        let sf = basis.semigroup_apply(&fhat, h);
        let sw = basis.semigroup_apply(&SpectralField::new(dw.values().to_vec()), h);
        for k in 0..5 {
            let termwise = sy.coeffs()[k] + h * sf.coeffs()[k] + sw.coeffs()[k];
            assert!(rel_close(next.field().coeffs()[k], termwise, 1e-12), "mode {k}");
        }
    }

    #[test]
    fn implicit_schemes_contract_every_mode() {
        // Gate forced shut by a huge state so only the linear factor acts.
        let ctx = gl_context(8);
        let dw = zero_block(8, 16);
        for kind in [SchemeKind::TruncLinImplicitEuler, SchemeKind::TruncCrankNicolson] {
            let stepper = Stepper::new(&ctx, kind, 16).unwrap();
            let big = SpectralField::new(vec![1e7; 8]);
            let next = stepper.step(stepper.initial_state(&big), &dw);
            for k in 0..8 {
                assert!(next.field().coeffs()[k].abs() <= big.coeffs()[k].abs(), "{kind:?} mode {k}");
            }
        }
    }

    #[test]
    fn cn_mode_zeroed_at_critical_step() {
        // lambda h = 2 makes the numerator factor vanish.
        let lam = std::f64::consts::PI * std::f64::consts::PI;
        let t_horizon = 2.0 / lam * 4.0;
        let ctx = SchemeContext::new(
            ModeBasis::new(1, 1.0).unwrap(),
            PolynomialDrift::new(vec![0.0, -1.0]).unwrap(),
            0.5,
            IndicatorVariant::StateNorm,
            t_horizon,
        )
        .unwrap();
        let stepper = Stepper::new(&ctx, SchemeKind::TruncCrankNicolson, 4).unwrap();
        let big = SpectralField::new(vec![1e8; 1]); // gate shut
        let dw = NoiseSource::new(0, 0, 1, 4, t_horizon, 0.0).unwrap().fine_increment(0);
        let next = stepper.step(stepper.initial_state(&big), &dw);
        assert!(next.field().coeffs()[0].abs() < 1e8 * 1e-12);
    }

    #[test]
    fn run_path_is_deterministic_and_records_requested_times() {
        let ctx = gl_context(12);
        let src = NoiseSource::new(99, 5, 12, 32, 1.0, 1.0).unwrap();
        let xi = SpectralField::zero(12);
        let a = run_path(&ctx, SchemeKind::TruncExpEuler, 8, &src, 4, &xi, RecordSpec::Every(2))
            .unwrap();
        let b = run_path(&ctx, SchemeKind::TruncExpEuler, 8, &src, 4, &xi, RecordSpec::Every(2))
            .unwrap();
        assert_eq!(a.steps(), &[0, 2, 4, 6, 8]);
        assert_eq!(a.times().first(), Some(&0.0));
        assert_eq!(a.times().last(), Some(&1.0));
        for (sa, sb) in a.states().iter().zip(b.states()) {
            for (x, y) in sa.coeffs().iter().zip(sb.coeffs()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        let t = run_path(&ctx, SchemeKind::TruncExpEuler, 8, &src, 4, &xi, RecordSpec::TerminalOnly)
            .unwrap();
        assert_eq!(t.steps(), &[8]);
        assert_eq!(t.terminal_state(), a.terminal_state());
    }

    #[test]
    fn quiet_path_stays_at_zero() {
        let ctx = gl_context(4);
        let src = NoiseSource::new(0, 0, 4, 16, 1.0, 0.0).unwrap();
        let rec = run_path(
            &ctx,
            SchemeKind::TruncLinImplicitEuler,
            16,
            &src,
            1,
            &SpectralField::zero(4),
            RecordSpec::Every(1),
        )
        .unwrap();
        assert_eq!(rec.states().len(), 17);
        for s in rec.states() {
            assert!(s.coeffs().iter().all(|&c| c == 0.0));
        }
    }

    #[test]
    fn run_path_validates_ratio() {
        let ctx = gl_context(4);
        let src = NoiseSource::new(0, 0, 4, 16, 1.0, 1.0).unwrap();
        let xi = SpectralField::zero(4);
        assert!(run_path(&ctx, SchemeKind::TruncExpEuler, 8, &src, 3, &xi, RecordSpec::TerminalOnly)
            .is_err());
        assert!(run_path(&ctx, SchemeKind::TruncExpEuler, 8, &src, 0, &xi, RecordSpec::TerminalOnly)
            .is_err());
        assert!(
            run_path(&ctx, SchemeKind::TruncExpEuler, 8, &src, 2, &xi, RecordSpec::Every(0)).is_err()
        );
        assert!(run_path(&ctx, SchemeKind::TruncExpEuler, 8, &src, 2, &xi, RecordSpec::TerminalOnly)
            .is_ok());
    }

    #[test]
    fn reference_at_fine_resolution_reproduces_itself() {
        let ctx = gl_context(6);
        let src = NoiseSource::new(3, 1, 6, 64, 1.0, 1.0).unwrap();
        let xi = SpectralField::zero(6);
        let a = run_path(&ctx, SchemeKind::TruncCrankNicolson, 64, &src, 1, &xi, RecordSpec::TerminalOnly)
            .unwrap();
        let b = run_path(&ctx, SchemeKind::TruncCrankNicolson, 64, &src, 1, &xi, RecordSpec::TerminalOnly)
            .unwrap();
        assert_eq!(a.terminal_state(), b.terminal_state());
    }

    #[test]
    fn drift_gate_uses_drift_norm_variant_when_configured() {
        // A state whose own norm fails the gate but whose drift passes: the
        // two variants must produce different steps.
        let basis = ModeBasis::new(3, 1.0).unwrap();
        let drift = PolynomialDrift::ginzburg_landau();
        // Build the state whose grid values are all 1.2.
        let state = basis.to_spectral(&GridField::new(vec![1.2; 3]));
        let mk = |variant| {
            SchemeContext::new(basis.clone(), drift.clone(), 1.0 / 6.0, variant, 1.0).unwrap()
        };
        let ctx_state = mk(IndicatorVariant::StateNorm);
        let ctx_drift = mk(IndicatorVariant::DriftNorm);
        let dw = zero_block(3, 1);
        let a = Stepper::new(&ctx_state, SchemeKind::TruncExpEuler, 1)
            .unwrap()
            .step(Stepper::new(&ctx_state, SchemeKind::TruncExpEuler, 1).unwrap().initial_state(&state), &dw);
        let b = Stepper::new(&ctx_drift, SchemeKind::TruncExpEuler, 1)
            .unwrap()
            .step(Stepper::new(&ctx_drift, SchemeKind::TruncExpEuler, 1).unwrap().initial_state(&state), &dw);
        assert_ne!(a.field(), b.field());
    }
}
