//! Multi-indices, models, threshold truncations and the constants that
//! control the Gershgorin radii of the hierarchy.

use std::collections::{BTreeSet, HashMap};

use crate::error::{HeomError, Result};
use crate::linalg::C64;
use crate::superop::{spectral_norm, SystemOperator};

pub const DEFAULT_SIZE_CAP: usize = 200_000;

/// Past the cap, enumeration keeps counting up to this multiple of it.
const COUNT_LIMIT_FACTOR: usize = 16;

/// Relative slack for the threshold comparison `Re γ_n ≤ γ*`.
const THRESHOLD_EPS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn unit(n: usize, j: usize) -> Self {
        let mut v = vec![0; n];
        v[j] = 1;
        Self(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&k| k == 0)
    }

    pub fn raised(&self, j: usize) -> Self {
        let mut v = self.0.clone();
        v[j] += 1;
        Self(v)
    }

    pub fn lowered(&self, j: usize) -> Option<Self> {
        if self.0[j] == 0 {
            return None;
        }
        let mut v = self.0.clone();
        v[j] -= 1;
        Some(Self(v))
    }

    /// `Some(j)` if `other = self + e_j`.
    pub fn step_to(&self, other: &MultiIndex) -> Option<(usize, i64)> {
        let mut found = None;
        for (j, (&a, &b)) in self.0.iter().zip(other.0.iter()).enumerate() {
            let diff = b as i64 - a as i64;
            if diff != 0 {
                if found.is_some() || diff.abs() != 1 {
                    return None;
                }
                found = Some((j, diff));
            }
        }
        found
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModeKind {
    Generic,
    /// Underdamped oscillator pole of the spectral density.
    Dynamical,
    /// Pole of the rational Bose-function fit; `nu` is its frequency.
    Fluctuation { nu: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct BathMode {
    pub gamma: C64,
    pub c: C64,
    pub c_prime: C64,
    pub c_dblprime: C64,
    pub q: SystemOperator,
    pub kind: ModeKind,
}

impl BathMode {
    pub fn new(gamma: C64, c: C64, c_prime: C64, c_dblprime: C64, q: SystemOperator) -> Result<Self> {
        let mode = Self { gamma, c, c_prime, c_dblprime, q, kind: ModeKind::Generic };
        mode.validate()?;
        Ok(mode)
    }

    pub fn with_kind(mut self, kind: ModeKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("gamma", self.gamma), ("c", self.c), ("c_prime", self.c_prime), ("c_dblprime", self.c_dblprime)] {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(HeomError::InvalidArgument(format!("mode parameter {name} is not finite")));
            }
        }
        if !(self.gamma.re > 0.0) {
            return Err(HeomError::NonPositiveDecay(format!("{}", self.gamma)));
        }
        self.q.ensure_hermitian()
    }

    /// The same mode with all couplings multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self { c: self.c * s, c_prime: self.c_prime * s, c_dblprime: self.c_dblprime * s, ..self.clone() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeomModel {
    pub hamiltonian: SystemOperator,
    pub modes: Vec<BathMode>,
}

impl HeomModel {
    pub fn new(hamiltonian: SystemOperator, modes: Vec<BathMode>) -> Result<Self> {
        let model = Self { hamiltonian, modes };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes.is_empty() {
            return Err(HeomError::InvalidArgument("model needs at least one bath mode".into()));
        }
        self.hamiltonian.ensure_hermitian()?;
        let d = self.dim();
        for m in &self.modes {
            if m.q.dim() != d {
                return Err(HeomError::DimMismatch { expected: d, got: m.q.dim() });
            }
            m.validate()?;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// The same model with every coupling constant multiplied by `s`.
    pub fn scaled_couplings(&self, s: f64) -> Self {
        Self { hamiltonian: self.hamiltonian.clone(), modes: self.modes.iter().map(|m| m.scaled(s)).collect() }
    }

    pub fn gamma_min(&self) -> f64 {
        self.modes.iter().map(|m| m.gamma.re).fold(f64::INFINITY, f64::min)
    }

    pub fn gamma_max(&self) -> f64 {
        self.modes.iter().map(|m| m.gamma.re).fold(0.0, f64::max)
    }
}

/// `γ_n = Σ n_j γ_j`.
pub fn gamma_n(model: &HeomModel, n: &MultiIndex) -> Result<C64> {
    if n.len() != model.n_modes() {
        return Err(HeomError::DimMismatch { expected: model.n_modes(), got: n.len() });
    }
    Ok(gamma_n_unchecked(model, n))
}

pub(crate) fn gamma_n_unchecked(model: &HeomModel, n: &MultiIndex) -> C64 {
    n.0.iter()
        .zip(&model.modes)
        .map(|(&k, m)| m.gamma * k as f64)
        .sum()
}

fn within_threshold(re: f64, gamma_star: f64) -> bool {
    re <= gamma_star + THRESHOLD_EPS * gamma_star.abs().max(1.0)
}

/// Finite multi-index set with its block layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Truncation {
    indices: Vec<MultiIndex>,
    index_map: HashMap<MultiIndex, usize>,
    gamma_star: Option<f64>,
}

impl Truncation {
    /// Arbitrary index set; it is sorted lexicographically and must contain 0.
    pub fn from_indices(n_modes: usize, indices: Vec<MultiIndex>) -> Result<Self> {
        let set: BTreeSet<MultiIndex> = indices.into_iter().collect();
        if set.iter().any(|n| n.len() != n_modes) {
            return Err(HeomError::InvalidArgument("multi-index length differs from mode count".into()));
        }
        if !set.contains(&MultiIndex::zero(n_modes)) {
            return Err(HeomError::InvalidArgument("truncation must contain the zero index".into()));
        }
        Ok(Self::from_sorted(set.into_iter().collect(), None))
    }

    fn from_sorted(indices: Vec<MultiIndex>, gamma_star: Option<f64>) -> Self {
        let index_map = indices.iter().cloned().enumerate().map(|(i, n)| (n, i)).collect();
        Self { indices, index_map, gamma_star }
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn position(&self, n: &MultiIndex) -> Option<usize> {
        self.index_map.get(n).copied()
    }

    pub fn contains(&self, n: &MultiIndex) -> bool {
        self.index_map.contains_key(n)
    }

    pub fn gamma_star(&self) -> Option<f64> {
        self.gamma_star
    }

    pub fn n_modes(&self) -> usize {
        self.indices[0].len()
    }
}

/// `T(γ*) = {n : Re γ_n ≤ γ*}` with the default size cap.
pub fn build_truncation(model: &HeomModel, gamma_star: f64) -> Result<Truncation> {
    build_truncation_capped(model, gamma_star, DEFAULT_SIZE_CAP)
}

pub fn build_truncation_capped(model: &HeomModel, gamma_star: f64, cap: usize) -> Result<Truncation> {
    if !(gamma_star >= 0.0) || !gamma_star.is_finite() {
        return Err(HeomError::InvalidArgument(format!("threshold {gamma_star} must be finite and nonnegative")));
    }
    let indices = enumerate_below(model, gamma_star, cap)?;
    Ok(Truncation::from_sorted(indices, Some(gamma_star)))
}

/// All n with `Re γ_n ≤ bound`, in lexicographic order.
fn enumerate_below(model: &HeomModel, bound: f64, cap: usize) -> Result<Vec<MultiIndex>> {
    let rates: Vec<f64> = model.modes.iter().map(|m| m.gamma.re).collect();
    let mut out = Vec::new();
    let mut cur = vec![0u32; rates.len()];
    let mut count = 0usize;
    dfs(&rates, bound, 0, 0.0, &mut cur, &mut out, &mut count, cap);
    if count > cap {
        return Err(HeomError::SizeCap { count, cap });
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn dfs(rates: &[f64], bound: f64, j: usize, acc: f64, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>, count: &mut usize, cap: usize) {
    if *count > cap.saturating_mul(COUNT_LIMIT_FACTOR) {
        return;
    }
    if j == rates.len() {
        *count += 1;
        if *count <= cap {
            out.push(MultiIndex(cur.clone()));
        }
        return;
    }
    let mut k = 0u32;
    loop {
        let s = acc + k as f64 * rates[j];
        if !within_threshold(s, bound) {
            break;
        }
        cur[j] = k;
        dfs(rates, bound, j + 1, s, cur, out, count, cap);
        k += 1;
    }
    cur[j] = 0;
}

/// `∂T = {n + e_j ∉ T : n ∈ T}`.
pub fn boundary_set(model: &HeomModel, trunc: &Truncation) -> BTreeSet<MultiIndex> {
    let mut out = BTreeSet::new();
    for n in trunc.indices() {
        for j in 0..model.n_modes() {
            let k = n.raised(j);
            if !trunc.contains(&k) {
                out.insert(k);
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelConstants {
    /// `C = Σ_j |q_j|²(2|c_j| + |c'_j| + |c''_j|)² / Re γ_j`.
    pub c: f64,
    /// `γ = Σ_j Re γ_j`.
    pub gamma_bar: f64,
    /// `γ̃ = γ + max_j Re γ_j`.
    pub gamma_tilde: f64,
}

pub fn model_constants(model: &HeomModel) -> ModelConstants {
    let mut c = 0.0;
    let mut gamma_bar = 0.0;
    let mut gmax = 0.0f64;
    for m in &model.modes {
        let q = spectral_norm(&m.q);
        let s = 2.0 * m.c.norm() + m.c_prime.norm() + m.c_dblprime.norm();
        c += q * q * s * s / m.gamma.re;
        gamma_bar += m.gamma.re;
        gmax = gmax.max(m.gamma.re);
    }
    ModelConstants { c, gamma_bar, gamma_tilde: gamma_bar + gmax }
}

/// `√(C (Re γ_n + γ))`.
pub fn gershgorin_radius_bound(model: &HeomModel, n: &MultiIndex) -> f64 {
    radius_bound_from(&model_constants(model), gamma_n_unchecked(model, n).re)
}

pub fn radius_bound_from(k: &ModelConstants, re_gamma_n: f64) -> f64 {
    (k.c * (re_gamma_n + k.gamma_bar)).max(0.0).sqrt()
}

/// The pre-relaxation column sum `Σ_j |q_j|[2|c_j|√n_j + (|c'_j| + |c''_j|)√(n_j+1)]`.
pub fn sharp_radius_sum(model: &HeomModel, n: &MultiIndex) -> f64 {
    model
        .modes
        .iter()
        .zip(&n.0)
        .map(|(m, &k)| {
            let k = k as f64;
            spectral_norm(&m.q) * (2.0 * m.c.norm() * k.sqrt() + (m.c_prime.norm() + m.c_dblprime.norm()) * (k + 1.0).sqrt())
        })
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayRates {
    /// `Γ_T`: tail minimum of `Re γ_n - √(C(Re γ_n + γ))`.
    pub gamma_t: f64,
    /// `Γ'_T`: tail minimum of `Re γ_n`.
    pub gamma_prime_t: f64,
}

/// Tail decay rates of a threshold truncation.
pub fn decay_rates(model: &HeomModel, trunc: &Truncation) -> Result<DecayRates> {
    let gamma_star = trunc.gamma_star().ok_or(HeomError::NotThreshold)?;
    let gamma_prime_t = boundary_set(model, trunc)
        .iter()
        .map(|k| gamma_n_unchecked(model, k).re)
        .fold(f64::INFINITY, f64::min);
    let k = model_constants(model);
    let f = |x: f64| x - radius_bound_from(&k, x);
    if k.c == 0.0 {
        return Ok(DecayRates { gamma_t: gamma_prime_t, gamma_prime_t });
    }
    // f is convex with minimizer x* = C/4 - γ, so over the attainable tail
    // values only the neighbours of x* (or Γ' when x* lies below it) matter.
    let x_star = k.c / 4.0 - k.gamma_bar;
    let mut best = f(gamma_prime_t);
    if x_star > gamma_prime_t {
        let (lo, hi) = attainable_neighbours(model, gamma_star, x_star);
        for x in [lo, hi].into_iter().flatten() {
            best = best.min(f(x));
        }
    }
    Ok(DecayRates { gamma_t: best, gamma_prime_t })
}

/// Largest attainable `Re γ_n` in `(γ*, x]` and smallest attainable value `≥ x`.
fn attainable_neighbours(model: &HeomModel, gamma_star: f64, x: f64) -> (Option<f64>, Option<f64>) {
    let mut rates: Vec<f64> = model.modes.iter().map(|m| m.gamma.re).collect();
    rates.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let last = *rates.last().unwrap();
    let upper = x + last;
    let mut lo: Option<f64> = None;
    let mut hi: Option<f64> = None;
    let prefix = &rates[..rates.len() - 1];
    let mut stack = vec![(0usize, 0.0f64)];
    while let Some((j, s)) = stack.pop() {
        if j == prefix.len() {
            let in_tail = |v: f64| !within_threshold(v, gamma_star);
            let k_lo = ((x - s) / last).floor().max(0.0);
            for k in [k_lo, k_lo + 1.0] {
                let v = s + k * last;
                if !in_tail(v) {
                    continue;
                }
                if v <= x {
                    lo = Some(lo.map_or(v, |c: f64| c.max(v)));
                } else {
                    hi = Some(hi.map_or(v, |c: f64| c.min(v)));
                }
            }
            continue;
        }
        let mut k = 0.0;
        while s + k * prefix[j] <= upper {
            stack.push((j + 1, s + k * prefix[j]));
            k += 1.0;
        }
    }
    (lo, hi)
}

/// Threshold truncations for increasing thresholds; Γ'_T must strictly increase.
pub fn exhausting_sequence(model: &HeomModel, gamma_stars: &[f64]) -> Result<Vec<Truncation>> {
    exhausting_sequence_capped(model, gamma_stars, DEFAULT_SIZE_CAP)
}

pub fn exhausting_sequence_capped(model: &HeomModel, gamma_stars: &[f64], cap: usize) -> Result<Vec<Truncation>> {
    let mut out = Vec::with_capacity(gamma_stars.len());
    let mut prev = f64::NEG_INFINITY;
    for &g in gamma_stars {
        let t = build_truncation_capped(model, g, cap)?;
        let gp = decay_rates(model, &t)?.gamma_prime_t;
        if !(gp > prev) {
            return Err(HeomError::InvalidArgument(format!(
                "threshold {g} does not increase the tail decay rate ({gp} after {prev})"
            )));
        }
        prev = gp;
        out.push(t);
    }
    Ok(out)
}

/// Indices with `lower < Re γ_n ≤ upper`, lexicographic.
pub fn shell(model: &HeomModel, lower: f64, upper: f64, cap: usize) -> Result<Vec<MultiIndex>> {
    Ok(enumerate_below(model, upper, cap)?
        .into_iter()
        .filter(|n| !within_threshold(gamma_n_unchecked(model, n).re, lower))
        .collect())
}
