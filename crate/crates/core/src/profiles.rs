//! Material profiles ε(x), μ(x) and the uniform grid they are sampled on.
//!
//! Analytic kinds return closed-form first and second derivatives. Tabulated
//! data is interpolated with a natural cubic spline and differentiated through
//! the spline, so the second derivatives needed by the effective potentials
//! are continuous.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform 1-D discretization of `[x_min, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    x_min: f64,
    x_max: f64,
    n_points: usize,
}

impl Grid {
    pub const MIN_POINTS: usize = 16;

    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_min >= x_max {
            return Err(Error::InvalidGrid(format!(
                "need finite x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        if n_points < Self::MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "need at least {} points, got {n_points}",
                Self::MIN_POINTS
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            n_points,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    /// Position of node `i`. The last node is pinned to `x_max` exactly.
    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.x_max
        } else {
            self.x_min + i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.x(i))
    }

    /// Same spacing, domain widened symmetrically so its length grows by `factor`.
    pub fn widened(&self, factor: f64) -> Self {
        let h = self.spacing();
        let extra = ((factor - 1.0) * (self.x_max - self.x_min) / (2.0 * h)).ceil() as usize;
        Self {
            x_min: self.x_min - extra as f64 * h,
            x_max: self.x_max + extra as f64 * h,
            n_points: self.n_points + 2 * extra,
        }
    }
}

/// ε, μ and their first two derivatives at one position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub eps: f64,
    pub mu: f64,
    pub deps: f64,
    pub dmu: f64,
    pub d2eps: f64,
    pub d2mu: f64,
}

impl ProfileSample {
    fn exchanged(self) -> Self {
        Self {
            eps: self.mu,
            mu: self.eps,
            deps: self.dmu,
            dmu: self.deps,
            d2eps: self.d2mu,
            d2mu: self.d2eps,
        }
    }
}

/// Natural cubic spline through strictly increasing knots.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    // second derivatives at the knots
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn natural(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::LengthMismatch {
                expected: xs.len(),
                got: ys.len(),
            });
        }
        if xs.len() < 3 {
            return Err(Error::InvalidProfile(
                "spline needs at least 3 knots".into(),
            ));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidProfile(
                "knots must be strictly increasing".into(),
            ));
        }

        // Tridiagonal system for the interior second derivatives, m_0 = m_{n-1} = 0.
        let n = xs.len();
        let mut m = vec![0.0; n];
        let mut c_prime = vec![0.0; n];
        let mut d_prime = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = xs[i] - xs[i - 1];
            let h1 = xs[i + 1] - xs[i];
            let a = h0;
            let b = 2.0 * (h0 + h1);
            let c = h1;
            let rhs = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
            let denom = b - a * c_prime[i - 1];
            c_prime[i] = c / denom;
            d_prime[i] = (rhs - a * d_prime[i - 1]) / denom;
        }
        for i in (1..n - 1).rev() {
            m[i] = d_prime[i] - c_prime[i] * m[i + 1];
        }
        Ok(Self { xs, ys, m })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    /// Value, first and second derivative at `x`, which must lie in the knot range.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let n = self.xs.len();
        let k = match self.xs.partition_point(|&xk| xk <= x) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let h = self.xs[k + 1] - self.xs[k];
        let a = (self.xs[k + 1] - x) / h;
        let b = (x - self.xs[k]) / h;
        let (m0, m1) = (self.m[k], self.m[k + 1]);
        let (y0, y1) = (self.ys[k], self.ys[k + 1]);

        let value = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let first =
            (y1 - y0) / h - (3.0 * a * a - 1.0) / 6.0 * h * m0 + (3.0 * b * b - 1.0) / 6.0 * h * m1;
        let second = a * m0 + b * m1;
        (value, first, second)
    }
}

/// ε and μ given at sample positions, interpolated by natural cubic splines.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedProfile {
    eps: CubicSpline,
    mu: CubicSpline,
}

impl TabulatedProfile {
    pub const MIN_ROWS: usize = 4;

    pub fn new(xs: Vec<f64>, eps: Vec<f64>, mu: Vec<f64>) -> Result<Self> {
        if xs.len() < Self::MIN_ROWS {
            return Err(Error::InvalidProfile(format!(
                "tabulated profile needs at least {} rows, got {}",
                Self::MIN_ROWS,
                xs.len()
            )));
        }
        if eps.len() != xs.len() || mu.len() != xs.len() {
            return Err(Error::LengthMismatch {
                expected: xs.len(),
                got: eps.len().min(mu.len()),
            });
        }
        if let Some(i) = (0..xs.len()).find(|&i| !(eps[i] > 0.0 && mu[i] > 0.0)) {
            return Err(Error::NonPositiveMaterial {
                x: xs[i],
                eps: eps[i],
                mu: mu[i],
            });
        }
        Ok(Self {
            eps: CubicSpline::natural(xs.clone(), eps)?,
            mu: CubicSpline::natural(xs, mu)?,
        })
    }

    /// Parses whitespace-separated `x eps mu` rows; `#` lines and blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut xs = Vec::new();
        let mut eps = Vec::new();
        let mut mu = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("expected 3 columns, found {}", fields.len()),
                });
            }
            let mut row = [0.0; 3];
            for (slot, field) in row.iter_mut().zip(&fields) {
                *slot = field.parse().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    message: format!("not a number: `{field}`"),
                })?;
            }
            if let Some(&last) = xs.last() {
                if !(row[0] > last) {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        message: "rows must be sorted by strictly increasing x".into(),
                    });
                }
            }
            xs.push(row[0]);
            eps.push(row[1]);
            mu.push(row[2]);
        }
        Self::new(xs, eps, mu)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    /// Tabulates another profile at `n` evenly spaced points of `[x_min, x_max]`.
    pub fn tabulate(profile: &MaterialProfile, x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        let grid = Grid::new(x_min, x_max, n.max(Grid::MIN_POINTS))?;
        let xs: Vec<f64> = grid.points().collect();
        let samples = sample_on_grid(profile, &grid)?;
        Self::new(
            xs,
            samples.iter().map(|s| s.eps).collect(),
            samples.iter().map(|s| s.mu).collect(),
        )
    }

    pub fn domain(&self) -> (f64, f64) {
        self.eps.domain()
    }

    fn eval(&self, x: f64) -> Result<ProfileSample> {
        let (lo, hi) = self.domain();
        let slack = 1e-12 * (hi - lo);
        if !(x >= lo - slack && x <= hi + slack) {
            return Err(Error::OutOfDomain { x, lo, hi });
        }
        let x = x.clamp(lo, hi);
        let (eps, deps, d2eps) = self.eps.eval(x);
        let (mu, dmu, d2mu) = self.mu.eval(x);
        Ok(ProfileSample {
            eps,
            mu,
            deps,
            dmu,
            d2eps,
            d2mu,
        })
    }

    fn exchanged(&self) -> Self {
        Self {
            eps: self.mu.clone(),
            mu: self.eps.clone(),
        }
    }
}

/// The built-in families and tabulated data.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileKind {
    Constant {
        eps: f64,
        mu: f64,
    },
    /// ε = n0²·exp(αx²), μ = exp(−αx²); εμ = n0² everywhere.
    GaussianSusyPair {
        n0: f64,
        alpha: f64,
    },
    /// ε = ε_b + Δ·sech²(x/w), μ = 1.
    SechSquaredEps {
        eps_b: f64,
        delta: f64,
        width: f64,
    },
    Tabulated(TabulatedProfile),
}

/// A material profile. `exchanged` swaps the roles of ε and μ.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialProfile {
    kind: ProfileKind,
    exchanged: bool,
}

impl MaterialProfile {
    pub fn new(kind: ProfileKind) -> Result<Self> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match &kind {
            ProfileKind::Constant { eps, mu } => {
                if !(*eps > 0.0 && *mu > 0.0) || !finite(&[*eps, *mu]) {
                    return Err(Error::InvalidProfile(format!(
                        "constant profile needs eps, mu > 0 (got {eps}, {mu})"
                    )));
                }
            }
            ProfileKind::GaussianSusyPair { n0, alpha } => {
                if !(*n0 > 0.0) || !finite(&[*n0, *alpha]) {
                    return Err(Error::InvalidProfile(format!(
                        "gaussian pair needs n0 > 0 and finite alpha (got {n0}, {alpha})"
                    )));
                }
            }
            ProfileKind::SechSquaredEps {
                eps_b,
                delta,
                width,
            } => {
                if !(*eps_b > 0.0 && *width > 0.0 && eps_b + delta.min(0.0) > 0.0)
                    || !finite(&[*eps_b, *delta, *width])
                {
                    return Err(Error::InvalidProfile(format!(
                        "sech^2 profile needs eps_b > 0, width > 0, eps_b + delta > 0 \
                         (got {eps_b}, {delta}, {width})"
                    )));
                }
            }
            ProfileKind::Tabulated(_) => {}
        }
        Ok(Self {
            kind,
            exchanged: false,
        })
    }

    pub fn constant(eps: f64, mu: f64) -> Result<Self> {
        Self::new(ProfileKind::Constant { eps, mu })
    }

    pub fn gaussian_susy_pair(n0: f64, alpha: f64) -> Result<Self> {
        Self::new(ProfileKind::GaussianSusyPair { n0, alpha })
    }

    pub fn sech_squared_eps(eps_b: f64, delta: f64, width: f64) -> Result<Self> {
        Self::new(ProfileKind::SechSquaredEps {
            eps_b,
            delta,
            width,
        })
    }

    pub fn tabulated(table: TabulatedProfile) -> Self {
        Self {
            kind: ProfileKind::Tabulated(table),
            exchanged: false,
        }
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self.kind, ProfileKind::Tabulated(_))
    }

    /// The same medium with ε and μ swapped.
    pub fn exchange_materials(&self) -> Self {
        match &self.kind {
            ProfileKind::Constant { eps, mu } => Self {
                kind: ProfileKind::Constant { eps: *mu, mu: *eps },
                exchanged: false,
            },
            ProfileKind::Tabulated(t) if !self.exchanged => Self {
                kind: ProfileKind::Tabulated(t.exchanged()),
                exchanged: false,
            },
            _ => Self {
                kind: self.kind.clone(),
                exchanged: !self.exchanged,
            },
        }
    }

    /// ε, μ and derivatives at `x`.
    pub fn evaluate(&self, x: f64) -> Result<ProfileSample> {
        let sample = match &self.kind {
            ProfileKind::Constant { eps, mu } => ProfileSample {
                eps: *eps,
                mu: *mu,
                deps: 0.0,
                dmu: 0.0,
                d2eps: 0.0,
                d2mu: 0.0,
            },
            ProfileKind::GaussianSusyPair { n0, alpha } => {
                let g = (alpha * x * x).exp();
                let eps = n0 * n0 * g;
                let mu = 1.0 / g;
                ProfileSample {
                    eps,
                    mu,
                    deps: 2.0 * alpha * x * eps,
                    dmu: -2.0 * alpha * x * mu,
                    d2eps: (2.0 * alpha + 4.0 * alpha * alpha * x * x) * eps,
                    d2mu: (-2.0 * alpha + 4.0 * alpha * alpha * x * x) * mu,
                }
            }
            ProfileKind::SechSquaredEps {
                eps_b,
                delta,
                width,
            } => {
                let u = x / width;
                let s = 1.0 / u.cosh();
                let t = u.tanh();
                let s2 = s * s;
                ProfileSample {
                    eps: eps_b + delta * s2,
                    mu: 1.0,
                    deps: -2.0 * delta * s2 * t / width,
                    dmu: 0.0,
                    d2eps: delta * (4.0 * s2 * t * t - 2.0 * s2 * s2) / (width * width),
                    d2mu: 0.0,
                }
            }
            ProfileKind::Tabulated(table) => table.eval(x)?,
        };
        if !(sample.eps > 0.0 && sample.mu > 0.0) {
            return Err(Error::NonPositiveMaterial {
                x,
                eps: sample.eps,
                mu: sample.mu,
            });
        }
        Ok(if self.exchanged {
            sample.exchanged()
        } else {
            sample
        })
    }
}

/// Evaluates the profile at every grid node.
pub fn sample_on_grid(profile: &MaterialProfile, grid: &Grid) -> Result<Vec<ProfileSample>> {
    grid.points()
        .enumerate()
        .map(|(i, x)| profile.evaluate(x).map_err(|e| e.at_index(i)))
        .collect()
}
