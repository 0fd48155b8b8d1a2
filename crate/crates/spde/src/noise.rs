//! Reproducible spectral Wiener increments.
//!
//! Each fine-grid increment block is regenerated on demand from a counter-based
//! stream keyed by (seed, run index, fine step), so any worker on any thread
//! observes identical bits, and a coarse ladder can replay exactly the Brownian
//! path that drove the reference: a coarse increment is the componentwise sum
//! of its fine increments in ascending step order.
//!
//! Generation is pinned for the life of the output format: ChaCha8 keyed with
//! the little-endian seed (zero padded to 32 bytes), stream id
//! `run_index << 40 | fine_step`, uniforms u = ((x >> 11) + 0.5) * 2^-53 from
//! 64-bit words, and Box-Muller pairs z0 = sqrt(-2 ln u1) cos(2 pi u2),
//! z1 = sqrt(-2 ln u1) sin(2 pi u2). Changing any part of this would silently
//! change every CSV this crate emits; do not.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};

/// Highest admissible run index (exclusive); keeps `run << 40` collision-free.
pub const MAX_RUN_INDEX: u32 = 1 << 24;
/// Highest admissible fine step count (inclusive).
pub const MAX_N_REF: u64 = 1 << 40;

/// Per-mode Brownian increments covering `dt` of time.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementBlock {
    values: Vec<f64>,
    dt: f64,
}

impl IncrementBlock {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
}

/// Deterministic source of the increments of one Monte Carlo run.
///
/// Immutable after construction; all methods are pure, so a single source may
/// be shared by any number of workers.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSource {
    seed: u64,
    run_index: u32,
    k_modes: usize,
    n_ref: u64,
    t_horizon: f64,
    scale: f64,
}

fn chacha_key(seed: u64) -> [u8; 32] {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key
}

/// Maps a 64-bit word to the open interval (0, 1) on a 2^-53 lattice.
fn unit_open(x: u64) -> f64 {
    ((x >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

impl NoiseSource {
    pub fn new(
        seed: u64,
        run_index: u32,
        k_modes: usize,
        n_ref: u64,
        t_horizon: f64,
        scale: f64,
    ) -> Result<Self> {
        if k_modes == 0 {
            return Err(Error::InvalidConfig("mode count K must be >= 1".into()));
        }
        if n_ref == 0 || n_ref > MAX_N_REF {
            return Err(Error::InvalidConfig(format!(
                "fine step count must lie in 1..={MAX_N_REF}, got {n_ref}"
            )));
        }
        if run_index >= MAX_RUN_INDEX {
            return Err(Error::InvalidConfig(format!(
                "run index must be < {MAX_RUN_INDEX}, got {run_index}"
            )));
        }
        if !(t_horizon > 0.0) || !t_horizon.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "time horizon must be positive and finite, got {t_horizon}"
            )));
        }
        if scale != 0.0 && scale != 1.0 {
            return Err(Error::InvalidConfig(format!(
                "noise scale must be 0 (off) or 1 (on), got {scale}"
            )));
        }
        Ok(Self { seed, run_index, k_modes, n_ref, t_horizon, scale })
    }

    pub fn k_modes(&self) -> usize {
        self.k_modes
    }

    pub fn n_ref(&self) -> u64 {
        self.n_ref
    }

    pub fn t_horizon(&self) -> f64 {
        self.t_horizon
    }

    pub fn run_index(&self) -> u32 {
        self.run_index
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn h_ref(&self) -> f64 {
        self.t_horizon / self.n_ref as f64
    }

    /// Writes the increments of fine step `m` into `out`.
    ///
    /// # Panics
    /// If `m >= n_ref` or `out` has the wrong length.
    pub fn fine_increment_into(&self, m: u64, out: &mut [f64]) {
        assert!(m < self.n_ref, "fine step {m} out of range 0..{}", self.n_ref);
        assert_eq!(out.len(), self.k_modes, "output length mismatch");
        if self.scale == 0.0 {
            out.fill(0.0);
            return;
        }
        let mut rng = ChaCha8Rng::from_seed(chacha_key(self.seed));
        rng.set_stream(((self.run_index as u64) << 40) | m);
        let std_scale = self.scale * self.h_ref().sqrt();
        let mut i = 0;
        while i < self.k_modes {
            let u1 = unit_open(rng.next_u64());
            let u2 = unit_open(rng.next_u64());
            let radius = (-2.0 * u1.ln()).sqrt();
            let theta = std::f64::consts::TAU * u2;
            out[i] = std_scale * (radius * theta.cos());
            i += 1;
            if i < self.k_modes {
                out[i] = std_scale * (radius * theta.sin());
                i += 1;
            }
        }
    }

    /// Gaussian increments of fine step `m`: mean 0, variance T/N_ref per mode.
    pub fn fine_increment(&self, m: u64) -> IncrementBlock {
        let mut values = vec![0.0; self.k_modes];
        self.fine_increment_into(m, &mut values);
        IncrementBlock { values, dt: self.h_ref() }
    }

    /// Accumulates the `r` fine increments of coarse step `j` into `out`, in
    /// ascending fine-step order. Bitwise equal to summing the fine blocks by
    /// hand in that order.
    pub fn coarse_increment_into(&self, j: u64, r: u64, out: &mut [f64]) -> Result<()> {
        if r == 0 || self.n_ref % r != 0 {
            return Err(Error::InvalidConfig(format!(
                "coarse ratio {r} does not divide the fine step count {}",
                self.n_ref
            )));
        }
        let n_coarse = self.n_ref / r;
        if j >= n_coarse {
            return Err(Error::InvalidConfig(format!(
                "coarse step {j} out of range 0..{n_coarse}"
            )));
        }
        assert_eq!(out.len(), self.k_modes, "output length mismatch");
        out.fill(0.0);
        let mut fine = vec![0.0; self.k_modes];
        for m in j * r..(j + 1) * r {
            self.fine_increment_into(m, &mut fine);
            for (acc, x) in out.iter_mut().zip(&fine) {
                *acc += x;
            }
        }
        Ok(())
    }

    /// Sum of the fine increments covering coarse step `j` of a ladder with
    /// `n_ref / r` steps.
    pub fn coarse_increment(&self, j: u64, r: u64) -> Result<IncrementBlock> {
        let mut values = vec![0.0; self.k_modes];
        self.coarse_increment_into(j, r, &mut values)?;
        Ok(IncrementBlock { values, dt: r as f64 * self.h_ref() })
    }
}
