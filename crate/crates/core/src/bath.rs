//! Spin-boson bath: spectral density, rational fit of the Bose function and
//! the resulting HEOM modes.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{HeomError, Result};
use crate::hierarchy::{BathMode, HeomModel, ModeKind};
use crate::linalg::{self, C64};
use crate::superop::SystemOperator;

/// Points in the AAA sample grid, linear in ω on `(0, Λ]`.
pub const FIT_GRID_POINTS: usize = 4000;
/// Points in the log-spaced validation grid on `[Λ·1e-3, Λ]`.
pub const VALIDATION_POINTS: usize = 5000;
/// Residues below this magnitude mark spurious poles.
pub const SPURIOUS_RESIDUE: f64 = 1e-13;
/// Largest support size tried in tolerance mode.
pub const MAX_SUPPORT: usize = 60;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinBosonParams {
    pub alpha: f64,
    pub omega0: f64,
    pub eta: f64,
    pub temperature: f64,
    pub lambda: f64,
    pub n_fit_poles: usize,
}

impl SpinBosonParams {
    /// α = 2, ω₀ = 2, η = 0.5 at T = 0.5 with an 11-pole fit on [-50, 50].
    pub fn reference_example() -> Self {
        Self { alpha: 2.0, omega0: 2.0, eta: 0.5, temperature: 0.5, lambda: 50.0, n_fit_poles: 11 }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.alpha, self.omega0, self.eta, self.temperature, self.lambda];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(HeomError::InvalidArgument("spin-boson parameters must be finite".into()));
        }
        if !(self.alpha > 0.0) {
            return Err(HeomError::InvalidArgument(format!("alpha = {} must be positive", self.alpha)));
        }
        if !(self.eta > 0.0) {
            return Err(HeomError::InvalidArgument(format!("eta = {} must be positive", self.eta)));
        }
        if !(self.omega0 > self.eta) {
            return Err(HeomError::InvalidArgument(format!(
                "overdamped oscillator (omega0 = {} <= eta = {}) is not supported",
                self.omega0, self.eta
            )));
        }
        check_fit_inputs(self.temperature, self.lambda)
    }
}

fn check_fit_inputs(temperature: f64, lambda: f64) -> Result<()> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(HeomError::InvalidArgument(format!("temperature {temperature} must be positive")));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(HeomError::InvalidArgument(format!("cutoff {lambda} must be positive")));
    }
    Ok(())
}

/// `J(ω) = α ω ω₀⁴ / [(ω² - ω₀²)² + 4η²ω²]`.
pub fn spectral_density(p: &SpinBosonParams, omega: f64) -> f64 {
    let w2 = omega * omega;
    let w02 = p.omega0 * p.omega0;
    p.alpha * omega * w02 * w02 / ((w2 - w02).powi(2) + 4.0 * p.eta * p.eta * w2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitGrid {
    pub points: usize,
    pub spacing: String,
    pub omega_min: f64,
    pub omega_max: f64,
}

/// `coth(ω/2T) ≈ 2T/ω + Σ_j 2 r_j ω / (ω² + ν_j²)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalBathFit {
    pub temperature: f64,
    pub lambda: f64,
    /// Descending.
    pub nu: Vec<f64>,
    pub r: Vec<f64>,
    /// Max relative error against coth on the validation grid.
    pub max_rel_error: f64,
    pub grid: FitGrid,
    /// Discarded poles `u_p` of the fit in the variable u = ω², as `[re, im]`.
    #[serde(default)]
    pub discarded: Vec<[f64; 2]>,
}

impl RationalBathFit {
    /// A fit from given poles and residues, sorted descending in ν.
    pub fn from_poles(temperature: f64, lambda: f64, nu: &[f64], r: &[f64]) -> Result<Self> {
        check_fit_inputs(temperature, lambda)?;
        if nu.len() != r.len() {
            return Err(HeomError::DimMismatch { expected: nu.len(), got: r.len() });
        }
        if nu.iter().chain(r).any(|x| !x.is_finite()) || nu.iter().any(|&x| !(x > 0.0)) {
            return Err(HeomError::InvalidArgument("poles must be finite and positive".into()));
        }
        let mut pairs: Vec<(f64, f64)> = nu.iter().cloned().zip(r.iter().cloned()).collect();
        pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let mut fit = Self {
            temperature,
            lambda,
            nu: pairs.iter().map(|p| p.0).collect(),
            r: pairs.iter().map(|p| p.1).collect(),
            max_rel_error: 0.0,
            grid: FitGrid { points: 0, spacing: "given".into(), omega_min: 0.0, omega_max: lambda },
            discarded: Vec::new(),
        };
        fit.max_rel_error = validation_error(&fit);
        Ok(fit)
    }

    pub fn len(&self) -> usize {
        self.nu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu.is_empty()
    }
}

/// Reference 11-pole fit at T = 0.5, Λ = 50.
#[allow(clippy::approx_constant)]
pub fn reference_fit() -> RationalBathFit {
    let nu = [341.9, 110.8, 63.00, 41.63, 29.38, 21.57, 16.35, 12.63, 9.426, 6.283, 3.145];
    let r = [219.2, 24.98, 9.358, 4.958, 3.055, 2.009, 1.367, 1.058, 1.002, 1.000, 1.000];
    RationalBathFit::from_poles(0.5, 50.0, &nu, &r).expect("valid table")
}

/// The fitted Bose function at a complex argument.
pub fn bose_eval(fit: &RationalBathFit, omega: C64) -> C64 {
    let mut s = C64::new(2.0 * fit.temperature, 0.0) / omega;
    for (&nu, &r) in fit.nu.iter().zip(&fit.r) {
        s += omega * (2.0 * r) / (omega * omega + nu * nu);
    }
    s
}

pub fn bose_eval_real(fit: &RationalBathFit, omega: f64) -> f64 {
    bose_eval(fit, C64::new(omega, 0.0)).re
}

fn coth(x: f64) -> f64 {
    1.0 / x.tanh()
}

/// Max relative error against `coth(ω/2T)` on a log grid over `[Λ·1e-3, Λ]`.
pub fn validation_error(fit: &RationalBathFit) -> f64 {
    let lo = (fit.lambda * 1e-3).ln();
    let hi = fit.lambda.ln();
    (0..VALIDATION_POINTS)
        .map(|k| {
            let w = (lo + (hi - lo) * k as f64 / (VALIDATION_POINTS - 1) as f64).exp();
            let exact = coth(w / (2.0 * fit.temperature));
            ((bose_eval_real(fit, w) - exact) / exact).abs()
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FitTarget {
    /// Fixed number of fluctuation poles.
    Poles(usize),
    /// Smallest order reaching this validation error.
    Tolerance(f64),
}

/// Symmetrized AAA fit of `coth(ω/2T)` on `[-Λ, Λ]`.
///
/// The fit runs in u = ω² on `h(u) = ω coth(ω/2T)`, which is even in ω, so
/// the resulting poles sit on the imaginary ω axis in ± pairs. Support
/// points are chosen greedily by the error in coth itself, `|h - r|/ω`.
pub fn aaa_fit_bose(temperature: f64, lambda: f64, target: FitTarget) -> Result<RationalBathFit> {
    check_fit_inputs(temperature, lambda)?;
    let omega: Vec<f64> = (1..=FIT_GRID_POINTS).map(|k| lambda * k as f64 / FIT_GRID_POINTS as f64).collect();
    let grid = FitGrid { points: FIT_GRID_POINTS, spacing: "linear-omega".into(), omega_min: omega[0], omega_max: lambda };
    match target {
        FitTarget::Poles(0) => {
            let mut fit = RationalBathFit::from_poles(temperature, lambda, &[], &[])?;
            fit.grid = grid;
            Ok(fit)
        }
        FitTarget::Poles(k) => {
            let mut aaa = Aaa::new(temperature, &omega);
            for _ in 0..=k {
                aaa.add_support()?;
            }
            aaa.to_fit(temperature, lambda, grid)
        }
        FitTarget::Tolerance(tol) => {
            if !(tol > 0.0) {
                return Err(HeomError::InvalidArgument(format!("fit tolerance {tol} must be positive")));
            }
            let mut aaa = Aaa::new(temperature, &omega);
            aaa.add_support()?;
            while aaa.support.len() < MAX_SUPPORT {
                aaa.add_support()?;
                if let Ok(fit) = aaa.to_fit(temperature, lambda, grid.clone()) {
                    if fit.max_rel_error <= tol {
                        return Ok(fit);
                    }
                }
            }
            Err(HeomError::Fit(format!("tolerance {tol:e} not reached with {MAX_SUPPORT} support points")))
        }
    }
}

struct Aaa {
    omega: Vec<f64>,
    u: Vec<f64>,
    h: Vec<f64>,
    /// Current approximation of coth on the grid.
    approx: Vec<f64>,
    support: Vec<usize>,
    weights: Vec<f64>,
}

impl Aaa {
    fn new(temperature: f64, omega: &[f64]) -> Self {
        let h: Vec<f64> = omega.iter().map(|&w| w * coth(w / (2.0 * temperature))).collect();
        let f_mean = h.iter().zip(omega).map(|(h, w)| h / w).sum::<f64>() / omega.len() as f64;
        Self {
            omega: omega.to_vec(),
            u: omega.iter().map(|w| w * w).collect(),
            h,
            approx: vec![f_mean; omega.len()],
            support: Vec::new(),
            weights: Vec::new(),
        }
    }

    fn add_support(&mut self) -> Result<()> {
        let mut best = (0usize, -1.0f64);
        for i in 0..self.u.len() {
            if self.support.contains(&i) {
                continue;
            }
            let err = (self.h[i] / self.omega[i] - self.approx[i]).abs();
            if err > best.1 {
                best = (i, err);
            }
        }
        self.support.push(best.0);
        let rest: Vec<usize> = (0..self.u.len()).filter(|i| !self.support.contains(i)).collect();
        let m = self.support.len();
        let loewner = Mat::from_fn(rest.len(), m, |r, c| {
            let (i, j) = (rest[r], self.support[c]);
            C64::new((self.h[i] - self.h[j]) / (self.u[i] - self.u[j]), 0.0)
        });
        let (_, s, v) = linalg::thin_svd(loewner.as_ref())?;
        let kmin = (0..s.len()).min_by(|&a, &b| s[a].partial_cmp(&s[b]).unwrap()).unwrap_or(0);
        // The Loewner matrix is real, so the singular vector is real up to a phase.
        let pivot = (0..m).max_by(|&a, &b| v[(a, kmin)].norm().partial_cmp(&v[(b, kmin)].norm()).unwrap()).unwrap();
        let phase = v[(pivot, kmin)] / v[(pivot, kmin)].norm();
        self.weights = (0..m).map(|i| (v[(i, kmin)] / phase).re).collect();
        for &i in &rest {
            let (mut num, mut den) = (0.0, 0.0);
            for (c, &j) in self.support.iter().enumerate() {
                let k = self.weights[c] / (self.u[i] - self.u[j]);
                num += k * self.h[j];
                den += k;
            }
            self.approx[i] = num / den / self.omega[i];
        }
        for &j in &self.support {
            self.approx[j] = self.h[j] / self.omega[j];
        }
        Ok(())
    }

    fn to_fit(&self, temperature: f64, lambda: f64, grid: FitGrid) -> Result<RationalBathFit> {
        let z: Vec<f64> = self.support.iter().map(|&j| self.u[j]).collect();
        let hs: Vec<f64> = self.support.iter().map(|&j| self.h[j]).collect();
        let w = &self.weights;
        let m = z.len();
        let wsum: f64 = w.iter().sum();
        if wsum == 0.0 {
            return Err(HeomError::Fit("barycentric weights sum to zero".into()));
        }
        // Roots of Σ w_i/(u - z_i) are the nonzero eigenvalues of D - 1 (w∘z)ᵀ / Σw;
        // the extra eigenvalue is exactly 0.
        let mmat = Mat::from_fn(m, m, |i, j| {
            let d = if i == j { z[i] } else { 0.0 };
            C64::new(d - w[j] * z[j] / wsum, 0.0)
        });
        let mut ev = linalg::eigenvalues(mmat.as_ref())?;
        ev.sort_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap());
        ev.remove(0);
        let u_min = self.u[0];
        let u_max = *self.u.last().unwrap();
        let mut nu = Vec::new();
        let mut r = Vec::new();
        let mut discarded = Vec::new();
        for p in ev {
            let mut num = C64::new(0.0, 0.0);
            let mut dden = C64::new(0.0, 0.0);
            for i in 0..m {
                let inv = C64::new(1.0, 0.0) / (p - z[i]);
                num += inv * (w[i] * hs[i]);
                dden -= inv * inv * w[i];
            }
            let rho = num / dden;
            let spurious = rho.norm() < SPURIOUS_RESIDUE;
            if p.re > 0.0 || spurious || p.im.abs() > 1e-8 * p.norm() {
                if p.re >= u_min && p.re <= u_max && !spurious && p.im.abs() <= 1e-8 * p.norm() {
                    return Err(HeomError::Fit(format!("pole u = {p} inside the fit interval")));
                }
                discarded.push([p.re, p.im]);
                continue;
            }
            nu.push((-p.re).sqrt());
            r.push((rho / (2.0 * p)).re);
        }
        let mut fit = RationalBathFit::from_poles(temperature, lambda, &nu, &r)?;
        fit.grid = grid;
        fit.discarded = discarded;
        Ok(fit)
    }
}

/// HEOM model of the spin-boson system `H = σ_x`, `q = σ_z` with the fitted bath.
pub fn spin_boson_model(p: &SpinBosonParams, fit: &RationalBathFit) -> Result<HeomModel> {
    p.validate()?;
    if (fit.temperature - p.temperature).abs() > 1e-12 * p.temperature {
        return Err(HeomError::InvalidArgument(format!(
            "fit temperature {} differs from model temperature {}",
            fit.temperature, p.temperature
        )));
    }
    let i = C64::new(0.0, 1.0);
    let w0 = p.omega0;
    let eta = p.eta;
    let omega1 = (w0 * w0 - eta * eta).sqrt();
    let g1 = C64::new(eta, omega1);
    let g2 = g1.conj();
    let c1 = i * (w0 * w0 * p.alpha.sqrt() / (2.0 * (2.0 * eta).sqrt() * omega1.sqrt()));
    let b1 = bose_eval(fit, -i * g1);
    let b2 = bose_eval(fit, -i * g2);
    let one = C64::new(1.0, 0.0);
    let q = SystemOperator::pauli_z();
    let mut modes = vec![
        BathMode::new(g1, c1, c1 / 2.0 * (one + b1), c1 / 2.0 * (one - b1), q.clone())?.with_kind(ModeKind::Dynamical),
        BathMode::new(g2, c1, -c1 / 2.0 * (one + b2), -c1 / 2.0 * (one - b2), q.clone())?.with_kind(ModeKind::Dynamical),
    ];
    for (&nu, &r) in fit.nu.iter().zip(&fit.r) {
        let g = C64::new(nu, 0.0);
        let g2 = g * g;
        let den = 2.0 * ((g2 + w0 * w0).powi(2) - g2 * eta * eta);
        let c = i * (g * r * w0.powi(4) / den).sqrt();
        modes.push(BathMode::new(g, c, -c, c, q.clone())?.with_kind(ModeKind::Fluctuation { nu }));
    }
    HeomModel::new(SystemOperator::pauli_x(), modes)
}

/// Keep dynamical and generic modes and the fluctuation modes with ν ≤ nu_max.
pub fn mode_subset(model: &HeomModel, nu_max: f64) -> HeomModel {
    let modes = model
        .modes
        .iter()
        .filter(|m| match m.kind {
            ModeKind::Fluctuation { nu } => nu <= nu_max,
            _ => true,
        })
        .cloned()
        .collect();
    HeomModel { hamiltonian: model.hamiltonian.clone(), modes }
}
