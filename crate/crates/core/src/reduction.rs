//! Schrödinger form of the TE/TM mode equations.
//!
//! With `E_y = √μ ψ_E` (TE) or `H_y = √ε ψ_H` (TM) the mode equation becomes
//! `−ψ″ + V ψ = −β² ψ` where
//!
//! ```text
//! V = −ε μ k0² + (f′/2f)² − (f′/2f)′,   f = μ (TE) or ε (TM)
//! ```
//!
//! and `(f′/2f)′ = f″/2f − f′²/2f²` is evaluated from the sampled derivatives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profiles::{sample_on_grid, Grid, MaterialProfile, ProfileSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarization {
    TE,
    TM,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::TE, Polarization::TM];

    pub fn as_str(self) -> &'static str {
        match self {
            Polarization::TE => "TE",
            Polarization::TM => "TM",
        }
    }
}

impl std::fmt::Display for Polarization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PotentialForm {
    #[default]
    Full,
    /// Drops both derivative terms: V = −εμk0².
    WeakGradient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectivePotential {
    pub polarization: Polarization,
    pub grid: Grid,
    pub v: Vec<f64>,
    pub k0: f64,
    pub form: PotentialForm,
}

impl EffectivePotential {
    /// Smallest β² a bound state must exceed: the larger of −V at the two box edges,
    /// and never below zero.
    pub fn guidance_threshold(&self) -> f64 {
        let first = -self.v[0];
        let last = -self.v[self.v.len() - 1];
        first.max(last).max(0.0)
    }

    pub fn is_guided(&self, beta_sq: f64) -> bool {
        beta_sq > self.guidance_threshold()
    }
}

/// Potential value at a single sample.
pub fn potential_at(s: &ProfileSample, k0: f64, pol: Polarization, form: PotentialForm) -> f64 {
    let base = -s.eps * s.mu * k0 * k0;
    if form == PotentialForm::WeakGradient {
        return base;
    }
    let (f, df, d2f) = match pol {
        Polarization::TE => (s.mu, s.dmu, s.d2mu),
        Polarization::TM => (s.eps, s.deps, s.d2eps),
    };
    let half_log_slope = df / (2.0 * f);
    let slope_derivative = d2f / (2.0 * f) - df * df / (2.0 * f * f);
    base + half_log_slope * half_log_slope - slope_derivative
}

pub fn effective_potential(
    profile: &MaterialProfile,
    grid: &Grid,
    k0: f64,
    pol: Polarization,
    form: PotentialForm,
) -> Result<EffectivePotential> {
    if !(k0 > 0.0 && k0.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "k0 must be positive, got {k0}"
        )));
    }
    let samples = sample_on_grid(profile, grid)?;
    Ok(EffectivePotential {
        polarization: pol,
        grid: *grid,
        v: samples
            .iter()
            .map(|s| potential_at(s, k0, pol, form))
            .collect(),
        k0,
        form,
    })
}

/// Physical field from a Schrödinger wavefunction: `E_y = √μ ψ` (TE), `H_y = √ε ψ` (TM).
pub fn field_from_wavefunction(
    psi: &[f64],
    profile: &MaterialProfile,
    grid: &Grid,
    pol: Polarization,
) -> Result<Vec<f64>> {
    if psi.len() != grid.n_points() {
        return Err(Error::LengthMismatch {
            expected: grid.n_points(),
            got: psi.len(),
        });
    }
    let samples = sample_on_grid(profile, grid)?;
    Ok(psi
        .iter()
        .zip(&samples)
        .map(|(p, s)| {
            let f = match pol {
                Polarization::TE => s.mu,
                Polarization::TM => s.eps,
            };
            f.sqrt() * p
        })
        .collect())
}

/// β² = −ℰ. Positive values propagate.
pub fn beta_squared_from_eigenvalue(e_schr: f64) -> f64 {
    -e_schr
}

/// Interior residual of the second-order mode equation
/// `−f (1/f · u′)′ − εμk0² u + β² u` for the field `u`, using a conservative
/// three-point stencil with `1/f` averaged at half nodes.
pub fn mode_equation_residual(
    field: &[f64],
    profile: &MaterialProfile,
    grid: &Grid,
    k0: f64,
    beta_sq: f64,
    pol: Polarization,
) -> Result<Vec<f64>> {
    let n = grid.n_points();
    if field.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: field.len(),
        });
    }
    let h = grid.spacing();
    let weight = |x: f64| -> Result<f64> {
        let s = profile.evaluate(x)?;
        Ok(match pol {
            Polarization::TE => s.mu,
            Polarization::TM => s.eps,
        })
    };
    let samples = sample_on_grid(profile, grid)?;
    let mut out = Vec::with_capacity(n - 2);
    for i in 1..n - 1 {
        let x = grid.x(i);
        let f = weight(x)?;
        let inv_right = 1.0 / weight(x + 0.5 * h)?;
        let inv_left = 1.0 / weight(x - 0.5 * h)?;
        let flux = (inv_right * (field[i + 1] - field[i]) - inv_left * (field[i] - field[i - 1]))
            / (h * h);
        let s = &samples[i];
        out.push(-f * flux - s.eps * s.mu * k0 * k0 * field[i] + beta_sq * field[i]);
    }
    Ok(out)
}

/// Interior residual `−ψ″ + Vψ − ℰψ` with the three-point Laplacian.
pub fn schrodinger_residual(
    psi: &[f64],
    pot: &EffectivePotential,
    e_schr: f64,
) -> Result<Vec<f64>> {
    let n = pot.grid.n_points();
    if psi.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: psi.len(),
        });
    }
    let h2 = pot.grid.spacing().powi(2);
    Ok((1..n - 1)
        .map(|i| -(psi[i + 1] - 2.0 * psi[i] + psi[i - 1]) / h2 + (pot.v[i] - e_schr) * psi[i])
        .collect())
}
