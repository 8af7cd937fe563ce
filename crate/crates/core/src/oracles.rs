//! Closed-form reference solutions.
//!
//! The Gaussian constant-index pair yields shifted harmonic oscillators
//! `−d²/dx² + α²x² ± α`; the `μ ≡ 1` sech² permittivity yields a
//! Pöschl–Teller well with integer strength.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::profiles::MaterialProfile;
use crate::reduction::Polarization;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorOracle {
    alpha: f64,
    n0: f64,
    k0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleLevel {
    /// `ℰ = n0²k0² − β²`
    pub e_susy: f64,
    pub beta_sq: f64,
}

impl OscillatorOracle {
    pub fn new(alpha: f64, n0: f64, k0: f64) -> Result<Self> {
        if !(alpha > 0.0 && n0 > 0.0 && k0 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "oscillator oracle needs alpha, n0, k0 > 0 (got {alpha}, {n0}, {k0})"
            )));
        }
        Ok(Self { alpha, n0, k0 })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn profile(&self) -> MaterialProfile {
        MaterialProfile::gaussian_susy_pair(self.n0, self.alpha).expect("validated parameters")
    }

    /// Oscillator quantum number of level `n` for the energy: TE is shifted up by one.
    fn quantum_number(pol: Polarization, n: usize) -> usize {
        match pol {
            Polarization::TE => n + 1,
            Polarization::TM => n,
        }
    }

    pub fn level(&self, pol: Polarization, n: usize) -> OracleLevel {
        let e_susy = 2.0 * self.alpha * Self::quantum_number(pol, n) as f64;
        OracleLevel {
            e_susy,
            beta_sq: self.n0 * self.n0 * self.k0 * self.k0 - e_susy,
        }
    }
}

/// Levels `n = 0..=n_max`: `ℰ_TE,n = 2α(n+1)`, `ℰ_TM,n = 2αn`, `β² = n0²k0² − ℰ`.
pub fn oscillator_spectrum(
    o: &OscillatorOracle,
    pol: Polarization,
    n_max: usize,
) -> Vec<OracleLevel> {
    (0..=n_max).map(|n| o.level(pol, n)).collect()
}

fn ln_factorial(m: usize) -> f64 {
    (2..=m).map(|k| (k as f64).ln()).sum()
}

/// Normalized Hermite function of quantum number `m` for the oscillator `−d²/dx² + α²x²`.
pub fn hermite_function(alpha: f64, m: usize, x: f64) -> f64 {
    let xi = alpha.sqrt() * x;
    // physicists' Hermite polynomial by the three-term recurrence
    let (mut h_prev, mut h) = (0.0, 1.0);
    for k in 0..m {
        let next = 2.0 * xi * h - 2.0 * k as f64 * h_prev;
        h_prev = h;
        h = next;
    }
    let ln_norm = 0.25 * (alpha / PI).ln() - 0.5 * (m as f64 * 2f64.ln() + ln_factorial(m));
    h * (ln_norm - 0.5 * xi * xi).exp()
}

/// Normalized wavefunction of level `n`. Both partner potentials are `α²x²`
/// plus a constant, so the `n`-th level is the `n`-th Hermite function in
/// either polarization even though the energies are offset by `2α`.
pub fn oscillator_wavefunction(o: &OscillatorOracle, n: usize, x: f64) -> f64 {
    hermite_function(o.alpha, n, x)
}

/// Bound states `(ℰ, β²)` of `V = −k0² − λ(λ+1)sech²x`, deepest first:
/// `ℰ_j = −k0² − (λ − j)²` for `j = 0..λ`.
pub fn poschl_teller_bound_states(k0: f64, depth_levels: usize) -> Vec<OracleLevel> {
    let lambda = depth_levels as f64;
    (0..depth_levels)
        .map(|j| {
            let e = -k0 * k0 - (lambda - j as f64).powi(2);
            OracleLevel {
                e_susy: e,
                beta_sq: -e,
            }
        })
        .collect()
}

/// `ε = 1 + λ(λ+1) sech²(x) / k0²`, `μ = 1`, whose TE potential is the well above.
pub fn poschl_teller_profile(k0: f64, depth_levels: usize) -> Result<MaterialProfile> {
    let lambda = depth_levels as f64;
    MaterialProfile::sech_squared_eps(1.0, lambda * (lambda + 1.0) / (k0 * k0), 1.0)
}
