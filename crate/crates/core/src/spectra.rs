//! Dense spectra of truncated Liouvillians, stability classification and
//! convergence along exhausting sequences.

use faer::{Mat, MatRef};
use rayon::prelude::*;

use crate::assembly::{assemble, TruncatedLiouvillian, TruncationKind};
use crate::error::{HeomError, Result};
use crate::hierarchy::{build_truncation_capped, decay_rates, HeomModel};
use crate::linalg::{self, Lu, C64};
use crate::superop::spectral_norm;

pub const RESIDUAL_TOL: f64 = 1e-8;
pub const STABILITY_TOL: f64 = 1e-8;
pub const CLUSTER_TOL: f64 = 1e-6;
/// Eigenpairs checked by inverse iteration after each eigensolve.
pub const RESIDUAL_SAMPLES: usize = 3;

/// All eigenvalues, with the residual of a few eigenpairs checked by inverse iteration.
pub fn eigenvalues(l: &TruncatedLiouvillian) -> Result<Vec<C64>> {
    eigenvalues_of(l.matrix.as_ref(), RESIDUAL_SAMPLES)
}

pub fn eigenvalues_of(a: MatRef<'_, C64>, residual_samples: usize) -> Result<Vec<C64>> {
    let ev = linalg::eigenvalues(a)?;
    if ev.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(HeomError::Numerical("non-finite eigenvalue".into()));
    }
    let norm = linalg::frobenius(a);
    if norm > 0.0 && residual_samples > 0 {
        for k in residual_picks(&ev, residual_samples) {
            let r = eigen_residual(a, ev[k])?;
            if r > RESIDUAL_TOL * norm {
                return Err(HeomError::Residual { residual: r / norm, tol: RESIDUAL_TOL });
            }
        }
    }
    Ok(ev)
}

/// The rightmost eigenvalue, the one nearest 0, and evenly spread others.
fn residual_picks(ev: &[C64], count: usize) -> Vec<usize> {
    let mut picks = Vec::new();
    if ev.is_empty() {
        return picks;
    }
    let right = (0..ev.len()).max_by(|&a, &b| ev[a].re.partial_cmp(&ev[b].re).unwrap()).unwrap();
    let zero = (0..ev.len()).min_by(|&a, &b| ev[a].norm().partial_cmp(&ev[b].norm()).unwrap()).unwrap();
    picks.push(right);
    picks.push(zero);
    let mut k = 1;
    while picks.len() < count.max(2) && k < ev.len() {
        picks.push((k * 7919) % ev.len());
        k += 1;
    }
    picks.sort_unstable();
    picks.dedup();
    picks.truncate(count.max(1));
    picks
}

/// `|A v - λ v|` for the unit vector v from two steps of inverse iteration.
pub fn eigen_residual(a: MatRef<'_, C64>, lambda: C64) -> Result<f64> {
    let n = a.nrows();
    let scale = linalg::frobenius(a).max(1e-300);
    let mut shifted = a.to_owned();
    let shift = lambda + C64::new(scale * 1e-14, scale * 1e-14);
    for i in 0..n {
        shifted[(i, i)] -= shift;
    }
    let lu = Lu::new(shifted.as_ref())?;
    let mut v = Mat::from_fn(n, 1, |i, _| C64::new(1.0 + (i as f64 * 0.618).sin(), (i as f64 * 0.414).cos()));
    for _ in 0..2 {
        let x = lu.solve(v.as_ref())?;
        let nx = linalg::frobenius(x.as_ref());
        if !(nx > 0.0) || !nx.is_finite() {
            return Err(HeomError::Numerical("inverse iteration breakdown".into()));
        }
        v = Mat::from_fn(n, 1, |i, _| x[(i, 0)] / nx);
    }
    let av = a * &v;
    let r = Mat::from_fn(n, 1, |i, _| av[(i, 0)] - v[(i, 0)] * lambda);
    Ok(linalg::frobenius(r.as_ref()))
}

/// Cluster labels for eigenvalues closer than `radius` (single linkage).
pub fn cluster_ids(ev: &[C64], radius: f64) -> Vec<usize> {
    let n = ev.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut k = i;
        while p[k] != r {
            let next = p[k];
            p[k] = r;
            k = next;
        }
        r
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| ev[a].re.partial_cmp(&ev[b].re).unwrap());
    for (pos, &i) in order.iter().enumerate() {
        for &j in &order[pos + 1..] {
            if ev[j].re - ev[i].re > radius {
                break;
            }
            if (ev[j] - ev[i]).norm() <= radius {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    (0..n)
        .map(|i| {
            let r = find(&mut parent, i);
            if label[r] == usize::MAX {
                label[r] = next;
                next += 1;
            }
            label[r]
        })
        .collect()
}

/// Eigenvalues sorted by real part descending, then imaginary part descending.
pub fn sorted(ev: &[C64]) -> Vec<C64> {
    let mut v = ev.to_vec();
    v.sort_by(|a, b| b.re.partial_cmp(&a.re).unwrap().then(b.im.partial_cmp(&a.im).unwrap()));
    v
}

#[derive(Clone, Debug)]
pub struct SpectrumReport {
    /// Sorted as in [`sorted`].
    pub eigenvalues: Vec<C64>,
    pub cluster_ids: Vec<usize>,
    pub matrix_norm: f64,
    pub tol: f64,
    pub spectral_abscissa: f64,
    pub zero_mode_error: f64,
    pub stable: bool,
    pub gapped: bool,
    /// Distance from 0 to the nearest other eigenvalue with `|Re λ| ≤ tol`.
    pub gap: f64,
    /// `-max Re λ` over eigenvalues other than the zero mode.
    pub decay_gap: f64,
    pub slowest_nonzero: Option<C64>,
}

impl SpectrumReport {
    pub fn n_clusters(&self) -> usize {
        self.cluster_ids.iter().max().map_or(0, |m| m + 1)
    }
}

/// Index of the eigenvalue nearest 0.
pub fn zero_mode(ev: &[C64]) -> Option<usize> {
    (0..ev.len()).min_by(|&a, &b| ev[a].norm().partial_cmp(&ev[b].norm()).unwrap())
}

/// Rightmost eigenvalue other than the zero mode; among near-ties the one with largest Im.
pub fn slowest_nonzero(ev: &[C64], tie: f64) -> Option<C64> {
    let z = zero_mode(ev)?;
    let rest: Vec<C64> = ev.iter().enumerate().filter(|&(i, _)| i != z).map(|(_, &v)| v).collect();
    let top = rest.iter().map(|v| v.re).fold(f64::NEG_INFINITY, f64::max);
    rest.into_iter()
        .filter(|v| v.re >= top - tie)
        .max_by(|a, b| a.im.partial_cmp(&b.im).unwrap())
}

/// Stability and gap classification with tolerances relative to `|L|_F`.
pub fn stability_report(l: &TruncatedLiouvillian, tol_rel: f64) -> Result<SpectrumReport> {
    let ev = eigenvalues(l)?;
    Ok(classify(&ev, l.norm(), tol_rel, CLUSTER_TOL))
}

pub fn classify(ev: &[C64], norm: f64, tol_rel: f64, cluster_rel: f64) -> SpectrumReport {
    let ev = sorted(ev);
    let tol = tol_rel * norm;
    let cluster_ids = cluster_ids(&ev, cluster_rel * norm);
    let spectral_abscissa = ev.iter().map(|v| v.re).fold(f64::NEG_INFINITY, f64::max);
    let z = zero_mode(&ev);
    let zero_mode_error = z.map_or(f64::INFINITY, |i| ev[i].norm());
    let stable = ev.iter().all(|v| v.re <= tol);
    let on_axis: Vec<usize> = (0..ev.len()).filter(|&i| ev[i].re.abs() <= tol).collect();
    let gapped = on_axis.len() == 1 && ev[on_axis[0]].norm() <= tol;
    let gap = on_axis
        .iter()
        .filter(|&&i| Some(i) != z)
        .map(|&i| ev[i].norm())
        .fold(f64::INFINITY, f64::min);
    let decay_gap = -(0..ev.len())
        .filter(|&i| Some(i) != z)
        .map(|i| ev[i].re)
        .fold(f64::NEG_INFINITY, f64::max);
    let slowest = slowest_nonzero(&ev, cluster_rel * norm);
    SpectrumReport {
        eigenvalues: ev,
        cluster_ids,
        matrix_norm: norm,
        tol,
        spectral_abscissa,
        zero_mode_error,
        stable,
        gapped,
        gap,
        decay_gap,
        slowest_nonzero: slowest,
    }
}

/// Rectangle `re_min ≤ Re z ≤ re_max`, `|Im z| ≤ im_max`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window {
    pub re_min: f64,
    pub re_max: f64,
    pub im_max: f64,
}

impl Window {
    pub fn contains(&self, z: C64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im.abs() <= self.im_max
    }
}

/// `-0.05 Γ'_min ≤ Re z ≤ 0.1`, `|Im z| ≤ 2(2|H| + max |Im γ_j|)`.
pub fn default_window(model: &HeomModel, gamma_prime_min: f64) -> Window {
    let h = spectral_norm(&model.hamiltonian);
    let im = model.modes.iter().map(|m| m.gamma.im.abs()).fold(0.0, f64::max);
    Window { re_min: -0.05 * gamma_prime_min, re_max: 0.1, im_max: 2.0 * (2.0 * h + im) }
}

#[derive(Clone, Debug)]
pub struct ConvergenceStep {
    pub gamma_star: f64,
    pub gamma_prime: f64,
    pub size: usize,
    pub report: SpectrumReport,
    pub in_window: Vec<C64>,
    /// One-sided Hausdorff distance from this step's windowed spectrum to the previous spectrum.
    pub hausdorff_to_previous: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ConvergenceTrace {
    pub kind: TruncationKind,
    pub window: Window,
    pub steps: Vec<ConvergenceStep>,
}

impl ConvergenceTrace {
    pub fn distances(&self) -> Vec<f64> {
        self.steps.iter().filter_map(|s| s.hausdorff_to_previous).collect()
    }

    pub fn slowest_sequence(&self) -> Vec<Option<C64>> {
        self.steps.iter().map(|s| s.report.slowest_nonzero).collect()
    }
}

/// `max_{a ∈ new} min_{b ∈ old} |a - b|`; 0 when `new` is empty.
pub fn one_sided_hausdorff(new: &[C64], old: &[C64]) -> f64 {
    new.iter()
        .map(|a| old.iter().map(|b| (a - b).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Spectra of `T(γ*)` for each threshold and distances between consecutive windowed spectra.
///
/// The new step's eigenvalues inside the window are matched against the
/// whole previous spectrum, so modes drifting across the window edge do not
/// register as spurious.
pub fn convergence_trace(
    model: &HeomModel,
    gamma_stars: &[f64],
    window: Option<Window>,
    kind: TruncationKind,
    size_cap: usize,
) -> Result<ConvergenceTrace> {
    let truncs = gamma_stars
        .iter()
        .map(|&g| build_truncation_capped(model, g, size_cap))
        .collect::<Result<Vec<_>>>()?;
    let primes = truncs
        .iter()
        .map(|t| decay_rates(model, t).map(|d| d.gamma_prime_t))
        .collect::<Result<Vec<_>>>()?;
    let window = window.unwrap_or_else(|| default_window(model, primes.iter().cloned().fold(f64::INFINITY, f64::min)));
    let reports = truncs
        .par_iter()
        .map(|t| {
            let l = assemble(model, t, kind)?;
            stability_report(&l, STABILITY_TOL)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut steps: Vec<ConvergenceStep> = Vec::with_capacity(reports.len());
    for (((&g, t), gp), report) in gamma_stars.iter().zip(&truncs).zip(primes).zip(reports) {
        let in_window: Vec<C64> = report.eigenvalues.iter().cloned().filter(|z| window.contains(*z)).collect();
        let hausdorff_to_previous = steps.last().map(|p| one_sided_hausdorff(&in_window, &p.report.eigenvalues));
        steps.push(ConvergenceStep { gamma_star: g, gamma_prime: gp, size: t.len(), report, in_window, hausdorff_to_previous });
    }
    Ok(ConvergenceTrace { kind, window, steps })
}

/// Nearest eigenvalue to `target` at each step, with its distance.
pub fn match_eigenvalue(trace: &ConvergenceTrace, target: C64) -> Vec<(C64, f64)> {
    trace
        .steps
        .iter()
        .map(|s| {
            s.report
                .eigenvalues
                .iter()
                .map(|&z| (z, (z - target).norm()))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap_or((C64::new(f64::NAN, f64::NAN), f64::INFINITY))
        })
        .collect()
}
