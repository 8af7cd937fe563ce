//! Bound states of `−ψ″ + Vψ = ℰψ` on a Dirichlet box.
//!
//! The operator is discretized with the three-point Laplacian on the interior
//! nodes, giving a symmetric tridiagonal matrix with a constant off-diagonal.
//! Eigenvalues come from Sturm-sequence bisection and eigenvectors from
//! inverse iteration with a pivoted tridiagonal LU.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::profiles::{Grid, MaterialProfile};
use crate::reduction::{
    beta_squared_from_eigenvalue, effective_potential, EffectivePotential, Polarization,
    PotentialForm,
};

/// Symmetric tridiagonal operator on the `n_points − 2` interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteHamiltonian {
    pub grid: Grid,
    pub diag: Vec<f64>,
    pub offdiag: f64,
}

impl DiscreteHamiltonian {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Gershgorin bound on the spectral radius.
    pub fn norm(&self) -> f64 {
        self.diag
            .iter()
            .map(|d| d.abs() + 2.0 * self.offdiag.abs())
            .fold(0.0, f64::max)
    }

    fn gershgorin(&self) -> (f64, f64) {
        let r = 2.0 * self.offdiag.abs();
        self.diag
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| {
                (lo.min(d - r), hi.max(d + r))
            })
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let e2 = self.offdiag * self.offdiag;
        let tiny = f64::MIN_POSITIVE.sqrt() * (1.0 + self.offdiag.abs());
        let mut count = 0;
        let mut q = 1.0;
        for (i, &d) in self.diag.iter().enumerate() {
            q = if i == 0 { d - x } else { d - x - e2 / q };
            if q == 0.0 {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// `H v` on the interior vector.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * v[i];
                if i > 0 {
                    y += self.offdiag * v[i - 1];
                }
                if i + 1 < n {
                    y += self.offdiag * v[i + 1];
                }
                y
            })
            .collect()
    }

    /// k-th smallest eigenvalue (0-based), bisected until the bracket stops shrinking.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        for _ in 0..256 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

pub fn build_hamiltonian(pot: &EffectivePotential) -> DiscreteHamiltonian {
    let h2 = pot.grid.spacing().powi(2);
    let n = pot.grid.n_points();
    DiscreteHamiltonian {
        grid: pot.grid,
        diag: pot.v[1..n - 1].iter().map(|v| 2.0 / h2 + v).collect(),
        offdiag: -1.0 / h2,
    }
}

/// LU factors of `T − σI` with partial pivoting (row interchanges as in LAPACK `gttrf`).
struct ShiftedLu {
    // U has up to two super-diagonals
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    l: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    fn factor(h: &DiscreteHamiltonian, shift: f64, pivot_floor: f64) -> Self {
        let n = h.dim();
        let mut d: Vec<f64> = h.diag.iter().map(|x| x - shift).collect();
        let mut du = vec![h.offdiag; n.saturating_sub(1)];
        let dl = vec![h.offdiag; n.saturating_sub(1)];
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut l = vec![0.0; n.saturating_sub(1)];
        let mut swapped = vec![false; n.saturating_sub(1)];

        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                let f = if d[i] != 0.0 { dl[i] / d[i] } else { 0.0 };
                l[i] = f;
                d[i + 1] -= f * du[i];
            } else {
                let f = d[i] / dl[i];
                d[i] = dl[i];
                l[i] = f;
                let tmp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = tmp - f * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -f;
                }
                swapped[i] = true;
            }
        }
        for p in d.iter_mut() {
            if p.abs() < pivot_floor {
                *p = if *p < 0.0 { -pivot_floor } else { pivot_floor };
            }
        }
        Self {
            u0: d,
            u1: du,
            u2: du2,
            l,
            swapped,
        }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.u0.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                b.swap(i, i + 1);
                b[i + 1] -= self.l[i] * b[i];
            } else {
                b[i + 1] -= self.l[i] * b[i];
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            if i + 1 < n {
                s -= self.u1[i] * b[i + 1];
            }
            if i + 2 < n {
                s -= self.u2[i] * b[i + 2];
            }
            b[i] = s / self.u0[i];
        }
    }
}

/// An eigenpair on the full grid (endpoints included as zeros).
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub e_schr: f64,
    pub psi: Vec<f64>,
}

const MAX_RESTARTS: usize = 50;
const ITERATIONS_PER_START: usize = 6;

fn starting_vector(n: usize, attempt: usize) -> Vec<f64> {
    // deterministic, non-symmetric, no zero entries
    let mut state: u64 =
        0x9E37_79B9_7F4A_7C15 ^ (attempt as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    (0..n)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            0.5 + (state >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect()
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inverse_iteration(
    h: &DiscreteHamiltonian,
    lambda: f64,
    cluster: &[&Vec<f64>],
    hnorm: f64,
) -> Result<Vec<f64>> {
    let n = h.dim();
    let eps = f64::EPSILON;
    let tol = 1e-10 * hnorm;
    let mut best_residual = f64::INFINITY;

    for attempt in 0..MAX_RESTARTS {
        // first attempt shifts by the eigenvalue itself; restarts nudge it
        let nudge = if attempt == 0 {
            0.0
        } else {
            (attempt as f64) * 10.0 * eps * hnorm * if attempt % 2 == 0 { 1.0 } else { -1.0 }
        };
        let lu = ShiftedLu::factor(h, lambda + nudge, eps * hnorm);
        let mut v = starting_vector(n, attempt);
        let s = norm2(&v);
        v.iter_mut().for_each(|x| *x /= s);

        for _ in 0..ITERATIONS_PER_START {
            lu.solve(&mut v);
            for q in cluster {
                let c = dot(&v, q);
                v.iter_mut().zip(q.iter()).for_each(|(x, y)| *x -= c * y);
            }
            let s = norm2(&v);
            if !(s.is_finite() && s > 0.0) {
                break;
            }
            v.iter_mut().for_each(|x| *x /= s);

            let hv = h.apply(&v);
            let residual = norm2(
                &hv.iter()
                    .zip(&v)
                    .map(|(a, b)| a - lambda * b)
                    .collect::<Vec<_>>(),
            );
            best_residual = best_residual.min(residual);
            if residual <= tol {
                return Ok(v);
            }
        }
    }
    Err(Error::ConvergenceFailure {
        eigenvalue: lambda,
        residual: best_residual,
    })
}

/// Normalizes `Σψ²h = 1` and makes the entry of largest magnitude positive.
pub fn normalize_wavefunction(psi: &mut [f64], h: f64) {
    let norm = (psi.iter().map(|p| p * p).sum::<f64>() * h).sqrt();
    if norm == 0.0 {
        return;
    }
    let peak = psi
        .iter()
        .copied()
        .fold(0.0_f64, |acc, p| if p.abs() > acc.abs() { p } else { acc });
    let scale = if peak < 0.0 { -1.0 / norm } else { 1.0 / norm };
    psi.iter_mut().for_each(|p| *p *= scale);
}

/// The `max_modes` lowest eigenpairs, eigenvalues ascending.
pub fn solve_bound_states(h: &DiscreteHamiltonian, max_modes: usize) -> Result<Vec<Eigenpair>> {
    if max_modes == 0 {
        return Err(Error::InvalidArgument(
            "max_modes must be at least 1".into(),
        ));
    }
    let n = h.dim();
    let count = max_modes.min(n);
    let hnorm = h.norm();
    let spacing = h.grid.spacing();
    let cluster_gap = 1e-3 * hnorm;

    let mut values = Vec::with_capacity(count);
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(count);
    for k in 0..count {
        let lambda = h.eigenvalue(k);
        let cluster: Vec<&Vec<f64>> = values
            .iter()
            .zip(&vectors)
            .filter(|(&mu, _): &(&f64, _)| (lambda - mu).abs() < cluster_gap)
            .map(|(_, v)| v)
            .collect();
        let v = inverse_iteration(h, lambda, &cluster, hnorm)?;
        values.push(lambda);
        vectors.push(v);
    }

    Ok(values
        .into_iter()
        .zip(vectors)
        .map(|(e_schr, v)| {
            let mut psi = Vec::with_capacity(n + 2);
            psi.push(0.0);
            psi.extend(v);
            psi.push(0.0);
            normalize_wavefunction(&mut psi, spacing);
            Eigenpair { e_schr, psi }
        })
        .collect())
}

/// Sign changes of ψ, ignoring entries below `1e-6` of the peak magnitude.
pub fn count_nodes(psi: &[f64]) -> usize {
    let peak = psi.iter().fold(0.0_f64, |m, p| m.max(p.abs()));
    let floor = 1e-6 * peak;
    let mut last_sign = 0.0;
    let mut nodes = 0;
    for &p in psi {
        if p.abs() <= floor {
            continue;
        }
        let s = p.signum();
        if last_sign != 0.0 && s != last_sign {
            nodes += 1;
        }
        last_sign = s;
    }
    nodes
}

/// Removes the leading `h²/12 ψ⁗` truncation error of the three-point Laplacian
/// to first order, using `ψ″ = (V − ℰ)ψ` on the interior.
pub fn fourth_order_correction(pot: &EffectivePotential, e_schr: f64, psi: &[f64]) -> f64 {
    let h = pot.grid.spacing();
    let n = pot.grid.n_points();
    let weighted: f64 = (1..n - 1)
        .map(|i| {
            let r = (pot.v[i] - e_schr) * psi[i];
            r * r
        })
        .sum::<f64>()
        * h;
    let norm: f64 = psi.iter().map(|p| p * p).sum::<f64>() * h;
    e_schr + h * h / 12.0 * weighted / norm
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mode {
    pub mode_index: usize,
    pub e_schr: f64,
    pub beta_sq: f64,
    /// `max(|ψ_1|, |ψ_{N−2}|) / max|ψ|`; large values mean the box truncates the mode.
    pub boundary_ratio: f64,
    #[serde(skip)]
    pub psi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpectrum {
    pub polarization: Polarization,
    pub k0: f64,
    pub grid: Grid,
    pub potential: EffectivePotential,
    pub modes: Vec<Mode>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub form: PotentialForm,
    /// Apply [`fourth_order_correction`] to every eigenvalue.
    pub refine_eigenvalues: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            form: PotentialForm::Full,
            refine_eigenvalues: true,
        }
    }
}

pub fn compute_spectrum(
    profile: &MaterialProfile,
    grid: &Grid,
    k0: f64,
    pol: Polarization,
    max_modes: usize,
) -> Result<ModeSpectrum> {
    compute_spectrum_with(profile, grid, k0, pol, max_modes, &SolveOptions::default())
}

/// Potential, discretization, eigen-solve, β² mapping, then only guided modes are kept.
pub fn compute_spectrum_with(
    profile: &MaterialProfile,
    grid: &Grid,
    k0: f64,
    pol: Polarization,
    max_modes: usize,
    opts: &SolveOptions,
) -> Result<ModeSpectrum> {
    let pot = effective_potential(profile, grid, k0, pol, opts.form)?;
    let ham = build_hamiltonian(&pot);
    let pairs = solve_bound_states(&ham, max_modes)?;

    let n = grid.n_points();
    let mut modes: Vec<Mode> = pairs
        .into_iter()
        .map(|pair| {
            let e_schr = if opts.refine_eigenvalues {
                fourth_order_correction(&pot, pair.e_schr, &pair.psi)
            } else {
                pair.e_schr
            };
            let peak = pair.psi.iter().fold(0.0_f64, |m, p| m.max(p.abs()));
            let edge = pair.psi[1].abs().max(pair.psi[n - 2].abs());
            Mode {
                mode_index: count_nodes(&pair.psi),
                e_schr,
                beta_sq: beta_squared_from_eigenvalue(e_schr),
                boundary_ratio: if peak > 0.0 { edge / peak } else { 0.0 },
                psi: pair.psi,
            }
        })
        .filter(|m| pot.is_guided(m.beta_sq))
        .collect();
    modes.sort_by(|a, b| a.e_schr.total_cmp(&b.e_schr));

    Ok(ModeSpectrum {
        polarization: pol,
        k0,
        grid: *grid,
        potential: pot,
        modes,
    })
}
