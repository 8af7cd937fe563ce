//! Supersymmetric structure of constant-index waveguides.
//!
//! When `ε(x)μ(x) = n0²` the TE and TM potentials become the partner pair
//! `W² ± W′ − n0²k0²` with superpotential `W = ε′/2ε = −μ′/2μ`. In the shifted
//! energy `ℰ = n0²k0² − β²` the partner Hamiltonians factor as
//! `H_TE = −B⁻B⁺`, `H_TM = −B⁺B⁻` with `B± = d/dx ∓ W`, every nonzero level is
//! shared by both polarizations, and at most one polarization has a
//! normalizable zero mode (exact SUSY) built from `√ε` or `1/√ε`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::profiles::{sample_on_grid, Grid, MaterialProfile, ProfileSample};
use crate::reduction::{EffectivePotential, Polarization, PotentialForm};
use crate::spectral::{normalize_wavefunction, ModeSpectrum};

pub const ANALYTIC_CONSTANCY_TOL: f64 = 1e-9;
pub const TABULATED_CONSTANCY_TOL: f64 = 1e-4;

/// Default constancy tolerance for a profile.
pub fn default_constancy_tol(profile: &MaterialProfile) -> f64 {
    if profile.is_tabulated() {
        TABULATED_CONSTANCY_TOL
    } else {
        ANALYTIC_CONSTANCY_TOL
    }
}

struct Constancy {
    n0: f64,
    max_deviation: f64,
    worst_x: f64,
}

fn constancy(samples: &[ProfileSample], grid: &Grid) -> Constancy {
    let products: Vec<f64> = samples.iter().map(|s| s.eps * s.mu).collect();
    let mean = products.iter().sum::<f64>() / products.len() as f64;
    let (worst, max_deviation) = products
        .iter()
        .map(|p| (p - mean).abs() / mean)
        .enumerate()
        .fold((0, 0.0), |acc, (i, d)| if d > acc.1 { (i, d) } else { acc });
    Constancy {
        n0: mean.sqrt(),
        max_deviation,
        worst_x: grid.x(worst),
    }
}

/// Returns `n0 = √⟨εμ⟩` when `max |εμ − n0²|/n0² ≤ tol`.
pub fn check_constant_index(profile: &MaterialProfile, grid: &Grid, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let samples = sample_on_grid(profile, grid)?;
    let c = constancy(&samples, grid);
    if c.max_deviation > tol {
        return Err(Error::NotConstantIndex {
            max_deviation: c.max_deviation,
            x: c.worst_x,
        });
    }
    Ok(c.n0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Superpotential {
    pub grid: Grid,
    pub w: Vec<f64>,
    pub dw: Vec<f64>,
    pub n0: f64,
    /// max |εμ − n0²| / n0² over the grid
    pub constancy_residual: f64,
}

pub fn superpotential(profile: &MaterialProfile, grid: &Grid, tol: f64) -> Result<Superpotential> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let samples = sample_on_grid(profile, grid)?;
    let c = constancy(&samples, grid);
    if c.max_deviation > tol {
        return Err(Error::NotConstantIndex {
            max_deviation: c.max_deviation,
            x: c.worst_x,
        });
    }

    let w: Vec<f64> = samples.iter().map(|s| s.deps / (2.0 * s.eps)).collect();
    let w_mu: Vec<f64> = samples.iter().map(|s| -s.dmu / (2.0 * s.mu)).collect();
    let scale = 1.0 + w.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if let Some((i, gap)) = w
        .iter()
        .zip(&w_mu)
        .map(|(a, b)| (a - b).abs())
        .enumerate()
        .find(|(_, d)| *d > tol * scale)
    {
        return Err(Error::NotConstantIndex {
            max_deviation: gap / scale,
            x: grid.x(i),
        });
    }
    let dw = samples
        .iter()
        .map(|s| s.d2eps / (2.0 * s.eps) - s.deps * s.deps / (2.0 * s.eps * s.eps))
        .collect();

    Ok(Superpotential {
        grid: *grid,
        w,
        dw,
        n0: c.n0,
        constancy_residual: c.max_deviation,
    })
}

/// `V_TE = −n0²k0² + W² + W′`, `V_TM = −n0²k0² + W² − W′`.
pub fn partner_potentials(w: &Superpotential, k0: f64) -> (EffectivePotential, EffectivePotential) {
    let offset = -w.n0 * w.n0 * k0 * k0;
    let build = |pol: Polarization, sign: f64| EffectivePotential {
        polarization: pol,
        grid: w.grid,
        v: w.w
            .iter()
            .zip(&w.dw)
            .map(|(w, dw)| offset + w * w + sign * dw)
            .collect(),
        k0,
        form: PotentialForm::Full,
    };
    (build(Polarization::TE, 1.0), build(Polarization::TM, -1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Ladder {
    /// `B⁺ = d/dx − W`
    BPlus,
    /// `B⁻ = d/dx + W`
    BMinus,
}

/// Second-order first derivative; one-sided three-point stencils at the ends.
pub fn derivative(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    (0..n)
        .map(|i| {
            if i == 0 {
                (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
            } else if i == n - 1 {
                (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h)
            } else {
                (f[i + 1] - f[i - 1]) / (2.0 * h)
            }
        })
        .collect()
}

pub fn apply_ladder(direction: Ladder, psi: &[f64], w: &Superpotential) -> Result<Vec<f64>> {
    if psi.len() != w.w.len() {
        return Err(Error::LengthMismatch {
            expected: w.w.len(),
            got: psi.len(),
        });
    }
    let sign = match direction {
        Ladder::BPlus => -1.0,
        Ladder::BMinus => 1.0,
    };
    Ok(derivative(psi, w.grid.spacing())
        .into_iter()
        .zip(psi.iter().zip(&w.w))
        .map(|(d, (p, w))| d + sign * w * p)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SusyClassification {
    ExactTMZeroMode,
    ExactTEZeroMode,
    Broken,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroModeAnalysis {
    pub classification: SusyClassification,
    pub te_candidate_normalizable: bool,
    pub tm_candidate_normalizable: bool,
    /// Normalized zero mode of the exact sector, if any.
    pub zero_mode: Option<Vec<f64>>,
}

const EDGE_DECAY: f64 = 1e-4;
const NORM_CONVERGENCE: f64 = 1e-6;

fn l2_norm(f: &[f64], h: f64) -> f64 {
    (f.iter().map(|x| x * x).sum::<f64>() * h).sqrt()
}

fn decays_at_edges(f: &[f64]) -> bool {
    let peak = f.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    peak > 0.0 && f[0].abs() < EDGE_DECAY * peak && f[f.len() - 1].abs() < EDGE_DECAY * peak
}

/// Zero-mode candidates `ψ_E ∝ √ε`, `ψ_H ∝ 1/√ε` and the resulting classification.
///
/// A candidate counts as normalizable when it has decayed at both box edges and
/// its L² norm is stable under a 25% change of the domain (widened when the
/// profile can be evaluated there, otherwise shrunk).
pub fn zero_modes(
    _w: &Superpotential,
    profile: &MaterialProfile,
    grid: &Grid,
) -> Result<ZeroModeAnalysis> {
    let h = grid.spacing();
    let samples = sample_on_grid(profile, grid)?;
    let te: Vec<f64> = samples.iter().map(|s| s.eps.sqrt()).collect();
    let tm: Vec<f64> = te.iter().map(|e| 1.0 / e).collect();

    let wide = grid.widened(1.25);
    let wide_samples = sample_on_grid(profile, &wide).ok();
    let norm_stable = |candidate: &[f64], wide_value: &dyn Fn(&ProfileSample) -> f64| -> bool {
        let base = l2_norm(candidate, h);
        let other = match &wide_samples {
            Some(ws) => {
                let f: Vec<f64> = ws.iter().map(wide_value).collect();
                l2_norm(&f, h)
            }
            None => {
                let n = candidate.len();
                let keep = ((n as f64) / 1.25).round() as usize;
                let start = (n - keep) / 2;
                l2_norm(&candidate[start..start + keep], h)
            }
        };
        base.is_finite()
            && other.is_finite()
            && (other - base).abs() <= NORM_CONVERGENCE * other.max(base)
    };

    let te_ok = decays_at_edges(&te) && norm_stable(&te, &|s: &ProfileSample| s.eps.sqrt());
    let tm_ok = decays_at_edges(&tm) && norm_stable(&tm, &|s: &ProfileSample| 1.0 / s.eps.sqrt());

    let (classification, zero_mode) = match (te_ok, tm_ok) {
        (false, true) => (SusyClassification::ExactTMZeroMode, Some(tm)),
        (true, false) => (SusyClassification::ExactTEZeroMode, Some(te)),
        _ => (SusyClassification::Broken, None),
    };
    let zero_mode = zero_mode.map(|mut z| {
        normalize_wavefunction(&mut z, h);
        z
    });
    Ok(ZeroModeAnalysis {
        classification,
        te_candidate_normalizable: te_ok,
        tm_candidate_normalizable: tm_ok,
        zero_mode,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SusyPair {
    pub te_index: usize,
    pub tm_index: usize,
    pub te_energy: f64,
    pub tm_energy: f64,
    pub gap: f64,
    /// `‖B⁺ψ_E − √ℰ ψ_H‖` (L² norm) after sign alignment
    pub intertwining_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroEnergyState {
    pub polarization: Polarization,
    pub mode_index: usize,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnpairedState {
    pub polarization: Polarization,
    pub mode_index: usize,
    pub energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FactorizationResiduals {
    pub te: f64,
    pub tm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SusyReport {
    pub n0: f64,
    pub constancy_residual: f64,
    pub classification: SusyClassification,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zero_mode: Option<Vec<f64>>,
    pub zero_energy_states: Vec<ZeroEnergyState>,
    pub pairing: Vec<SusyPair>,
    pub unpaired: Vec<UnpairedState>,
    /// Unmatched states above every computed partner level; their partner
    /// may simply lie past the mode limit, so they are not counted as unpaired.
    pub beyond_partner_range: Vec<UnpairedState>,
    pub intertwining_residuals: Vec<f64>,
    pub factorization_residuals: FactorizationResiduals,
}

/// Shifted SUSY energy `ℰ = n0²k0² − β²`.
pub fn susy_energy(beta_sq: f64, n0: f64, k0: f64) -> f64 {
    n0 * n0 * k0 * k0 - beta_sq
}

fn sqrt_clamped(e: f64) -> f64 {
    if e.abs() < 1e-12 {
        0.0
    } else {
        e.max(0.0).sqrt()
    }
}

/// Max over modes of the interior L² norm of `(−B∓B± − H)ψ`.
fn factorization_residual(
    spectrum: &ModeSpectrum,
    w: &Superpotential,
    first: Ladder,
    second: Ladder,
    sign: f64,
) -> Result<f64> {
    let h = w.grid.spacing();
    let n = w.grid.n_points();
    let h2 = h * h;
    let mut worst: f64 = 0.0;
    for mode in &spectrum.modes {
        let psi = &mode.psi;
        let composed = apply_ladder(second, &apply_ladder(first, psi, w)?, w)?;
        // skip two nodes at each end where one-sided stencils enter
        let sum: f64 = (2..n - 2)
            .map(|i| {
                let potential = w.w[i] * w.w[i] + sign * w.dw[i];
                let h_psi = -(psi[i + 1] - 2.0 * psi[i] + psi[i - 1]) / h2 + potential * psi[i];
                let r = -composed[i] - h_psi;
                r * r
            })
            .sum();
        worst = worst.max((sum * h).sqrt());
    }
    Ok(worst)
}

/// Pairs TE and TM levels, checks the factorization and intertwining relations.
///
/// Both spectra must come from the same grid and `k0`. Energies are shifted to
/// `ℰ = n0²k0² − β²`; levels with `|ℰ| ≤ pair_tol` are reported as zero-energy
/// states and excluded from pairing.
pub fn verify_susy(
    te: &ModeSpectrum,
    tm: &ModeSpectrum,
    w: &Superpotential,
    zero: &ZeroModeAnalysis,
    pair_tol: f64,
) -> Result<SusyReport> {
    if te.polarization != Polarization::TE || tm.polarization != Polarization::TM {
        return Err(Error::ShiftMismatch(
            "expected a TE and a TM spectrum".into(),
        ));
    }
    if te.k0 != tm.k0 {
        return Err(Error::ShiftMismatch(format!(
            "k0 differs: {} vs {}",
            te.k0, tm.k0
        )));
    }
    if te.grid != tm.grid || te.grid != w.grid {
        return Err(Error::ShiftMismatch(
            "spectra and superpotential use different grids".into(),
        ));
    }
    let k0 = te.k0;
    let h = w.grid.spacing();
    let energy = |beta_sq: f64| susy_energy(beta_sq, w.n0, k0);

    let mut zero_energy_states = Vec::new();
    let mut candidates = |s: &ModeSpectrum| -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for (i, m) in s.modes.iter().enumerate() {
            let e = energy(m.beta_sq);
            if e.abs() <= pair_tol {
                zero_energy_states.push(ZeroEnergyState {
                    polarization: s.polarization,
                    mode_index: m.mode_index,
                    energy: e,
                });
            } else {
                out.push((i, e));
            }
        }
        out
    };
    let te_levels = candidates(te);
    let tm_levels = candidates(tm);

    let mut options: Vec<(f64, usize, usize)> = Vec::new();
    for (a, &(_, ea)) in te_levels.iter().enumerate() {
        for (b, &(_, eb)) in tm_levels.iter().enumerate() {
            let gap = (ea - eb).abs();
            if gap <= pair_tol {
                options.push((gap, a, b));
            }
        }
    }
    options.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));

    let mut te_used = vec![false; te_levels.len()];
    let mut tm_used = vec![false; tm_levels.len()];
    let mut pairing = Vec::new();
    for (gap, a, b) in options {
        if te_used[a] || tm_used[b] {
            continue;
        }
        te_used[a] = true;
        tm_used[b] = true;
        let (ia, ea) = te_levels[a];
        let (ib, eb) = tm_levels[b];
        let psi_e = &te.modes[ia].psi;
        let psi_h = &tm.modes[ib].psi;
        let mut mapped = apply_ladder(Ladder::BPlus, psi_e, w)?;
        let overlap: f64 = mapped.iter().zip(psi_h).map(|(a, b)| a * b).sum();
        if overlap < 0.0 {
            mapped.iter_mut().for_each(|x| *x = -*x);
        }
        let root = sqrt_clamped(ea);
        let residual = (mapped
            .iter()
            .zip(psi_h)
            .map(|(a, b)| (a - root * b).powi(2))
            .sum::<f64>()
            * h)
            .sqrt();
        pairing.push(SusyPair {
            te_index: te.modes[ia].mode_index,
            tm_index: tm.modes[ib].mode_index,
            te_energy: ea,
            tm_energy: eb,
            gap,
            intertwining_residual: residual,
        });
    }
    pairing.sort_by_key(|p| (p.te_index, p.tm_index));

    let mut unpaired: Vec<UnpairedState> = te_levels
        .iter()
        .zip(&te_used)
        .filter(|(_, used)| !**used)
        .map(|(&(i, e), _)| UnpairedState {
            polarization: Polarization::TE,
            mode_index: te.modes[i].mode_index,
            energy: e,
        })
        .collect();
    unpaired.extend(
        tm_levels
            .iter()
            .zip(&tm_used)
            .filter(|(_, used)| !**used)
            .map(|(&(i, e), _)| UnpairedState {
                polarization: Polarization::TM,
                mode_index: tm.modes[i].mode_index,
                energy: e,
            }),
    );

    let top =
        |levels: &[(usize, f64)]| levels.iter().map(|l| l.1).fold(f64::NEG_INFINITY, f64::max);
    let (te_top, tm_top) = (top(&te_levels), top(&tm_levels));
    let (beyond_partner_range, unpaired): (Vec<_>, Vec<_>) = unpaired.into_iter().partition(|u| {
        let partner_top = match u.polarization {
            Polarization::TE => tm_top,
            Polarization::TM => te_top,
        };
        u.energy > partner_top + pair_tol
    });

    let factorization_residuals = FactorizationResiduals {
        te: factorization_residual(te, w, Ladder::BPlus, Ladder::BMinus, 1.0)?,
        tm: factorization_residual(tm, w, Ladder::BMinus, Ladder::BPlus, -1.0)?,
    };

    Ok(SusyReport {
        n0: w.n0,
        constancy_residual: w.constancy_residual,
        classification: zero.classification,
        zero_mode: zero.zero_mode.clone(),
        zero_energy_states,
        intertwining_residuals: pairing.iter().map(|p| p.intertwining_residual).collect(),
        pairing,
        unpaired,
        beyond_partner_range,
        factorization_residuals,
    })
}
