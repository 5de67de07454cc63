//! Gershgorin-type certificates for truncated Liouvillians and numerical
//! checks of the resolvent, tail, coupling and terminator bounds.
//!
//! Every sampled norm is a lower bound of the true trace-induced norm, so
//! checks only ever assert `sampled ≤ analytic bound` up to a fixed slack.

use std::fmt;

use faer::{Mat, MatRef};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{assemble, assemble_blocks, terminator_terms, window_indices, BlockBuilder, TailWindow, TruncatedLiouvillian, TruncationKind};
use crate::error::{HeomError, Result};
use crate::hierarchy::{
    boundary_set, build_truncation_capped, decay_rates, gamma_n_unchecked, model_constants, radius_bound_from, HeomModel, ModelConstants, MultiIndex,
    Truncation, DEFAULT_SIZE_CAP,
};
use crate::linalg::{self, Lu, C64};
use crate::spectra;
use crate::superop::{sampled_block_norm, segment_distance, spectral_norm, spread, NormSampling, SegmentSet};

pub const SLACK_ABS: f64 = 1e-9;
pub const SLACK_REL: f64 = 1e-9;
pub const SOLVE_RESIDUAL_TOL: f64 = 1e-10;
pub const DEFAULT_ORACLE_FACTOR: f64 = 3.0;
/// Relative growth allowed between consecutive defects.
pub const DEFECT_SLACK: f64 = 0.10;
/// Multi-indices visited per enclosure membership query before giving up.
pub const ENCLOSURE_SCAN_CAP: usize = 50_000_000;

pub fn within_slack(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + SLACK_ABS + SLACK_REL * rhs.abs()
}

/// One line `CHECK <name> PASS|FAIL lhs=<…> rhs=<…>`.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub pass: bool,
    pub lhs: f64,
    pub rhs: f64,
}

impl CheckLine {
    /// Passes when `lhs ≤ rhs` up to the sampling slack.
    pub fn leq(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self { name: name.into(), pass: within_slack(lhs, rhs), lhs, rhs }
    }

    pub fn with_pass(name: impl Into<String>, pass: bool, lhs: f64, rhs: f64) -> Self {
        Self { name: name.into(), pass, lhs, rhs }
    }
}

impl fmt::Display for CheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "CHECK {} {} lhs={:.9e} rhs={:.9e}",
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            self.lhs,
            self.rhs
        )
    }
}

/// Model data shared by all bound evaluations.
#[derive(Clone, Debug)]
pub struct BoundContext {
    pub model: HeomModel,
    pub consts: ModelConstants,
    pub spread_h: f64,
    /// Multiplies every radius bound; 1 except under fault injection.
    pub radius_scale: f64,
    builder: BlockBuilder,
}

impl BoundContext {
    pub fn new(model: &HeomModel) -> Result<Self> {
        Ok(Self {
            model: model.clone(),
            consts: model_constants(model),
            spread_h: spread(&model.hamiltonian)?,
            radius_scale: 1.0,
            builder: BlockBuilder::new(model),
        })
    }

    pub fn with_radius_scale(mut self, s: f64) -> Self {
        self.radius_scale = s;
        self
    }

    pub fn builder(&self) -> &BlockBuilder {
        &self.builder
    }

    pub fn gamma_n(&self, n: &MultiIndex) -> C64 {
        gamma_n_unchecked(&self.model, n)
    }

    /// `dist(z, S(-γ_n, H))`.
    pub fn beta_lower(&self, n: &MultiIndex, z: C64) -> f64 {
        segment_distance(z, &SegmentSet { b: -self.gamma_n(n), delta: self.spread_h })
    }

    pub fn radius_bound(&self, n: &MultiIndex) -> f64 {
        self.radius_scale * radius_bound_from(&self.consts, self.gamma_n(n).re)
    }

    /// Column-sum bound of the terminator correction, `C(Γ' + γ̃)/Γ'`.
    pub fn terminator_inflation(&self, gamma_prime: f64) -> f64 {
        self.consts.c * (gamma_prime + self.consts.gamma_tilde) / gamma_prime
    }

    /// Inflation appropriate for an assembled matrix: 0 for the naive
    /// truncation, the terminator bound for the Schur-terminated one.
    pub fn inflation_for(&self, l: &TruncatedLiouvillian) -> f64 {
        match l.kind {
            TruncationKind::Naive => 0.0,
            TruncationKind::SchurTerminated => self.terminator_inflation(boundary_rate(&self.model, &l.truncation)),
        }
    }

    pub fn certificate(&self, indices: &[MultiIndex], z: C64, inflation: f64) -> GershgorinCertificate {
        let records: Vec<CertRecord> = indices
            .iter()
            .map(|n| CertRecord { n: n.clone(), beta_lower: self.beta_lower(n, z) - inflation, radius_bound: self.radius_bound(n) })
            .collect();
        GershgorinCertificate::from_records(z, records, inflation)
    }
}

/// `min_{k ∈ ∂T} Re γ_k`, defined for any truncation.
pub fn boundary_rate(model: &HeomModel, trunc: &Truncation) -> f64 {
    boundary_set(model, trunc)
        .iter()
        .map(|k| gamma_n_unchecked(model, k).re)
        .fold(f64::INFINITY, f64::min)
}

/// Lower bound of `β(z; L_nn)` from the spread of H.
pub fn beta_lower(model: &HeomModel, n: &MultiIndex, z: C64) -> Result<f64> {
    let b = -crate::hierarchy::gamma_n(model, n)?;
    Ok(segment_distance(z, &SegmentSet::new(b, spread(&model.hamiltonian)?)?))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertRecord {
    pub n: MultiIndex,
    /// Already reduced by the inflation, if any.
    pub beta_lower: f64,
    pub radius_bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GershgorinCertificate {
    pub z: C64,
    pub records: Vec<CertRecord>,
    pub inflation: f64,
    /// `max_n R_n / β_n`.
    pub q_of_z: f64,
    /// `max_n 1/(β_n - R_n)` when every `β_n > R_n`.
    pub resolvent_bound: Option<f64>,
}

impl GershgorinCertificate {
    fn from_records(z: C64, records: Vec<CertRecord>, inflation: f64) -> Self {
        let mut q: f64 = 0.0;
        let mut conclusive = true;
        let mut bound: f64 = 0.0;
        for r in &records {
            let ratio = if r.beta_lower > 0.0 { r.radius_bound / r.beta_lower } else { f64::INFINITY };
            q = q.max(ratio);
            let gap = r.beta_lower - r.radius_bound;
            if gap > 0.0 {
                bound = bound.max(1.0 / gap);
            } else {
                conclusive = false;
            }
        }
        Self { z, records, inflation, q_of_z: q, resolvent_bound: if conclusive { Some(bound) } else { None } }
    }

    pub fn is_conclusive(&self) -> bool {
        self.resolvent_bound.is_some()
    }
}

/// Certificate over a finite index set without inflation.
pub fn gershgorin_certificate(model: &HeomModel, indices: &[MultiIndex], z: C64) -> Result<GershgorinCertificate> {
    Ok(BoundContext::new(model)?.certificate(indices, z, 0.0))
}

/// Certificate for an assembled matrix, inflated for the terminator when needed.
pub fn certificate_for(ctx: &BoundContext, l: &TruncatedLiouvillian, z: C64) -> GershgorinCertificate {
    ctx.certificate(l.truncation.indices(), z, ctx.inflation_for(l))
}

/// Block column `m` of `A^{-1}` via an LU factorization, with residual tracking.
struct InverseColumns<'a> {
    a: MatRef<'a, C64>,
    lu: Lu,
    dd: usize,
    max_residual: f64,
}

impl<'a> InverseColumns<'a> {
    fn new(a: MatRef<'a, C64>, dd: usize) -> Result<Self> {
        Ok(Self { a, lu: Lu::new(a)?, dd, max_residual: 0.0 })
    }

    fn column(&mut self, m: usize) -> Result<Mat<C64>> {
        let n = self.a.nrows();
        let e = Mat::from_fn(n, self.dd, |i, j| if i == m * self.dd + j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
        let x = self.lu.solve(e.as_ref())?;
        self.max_residual = self.max_residual.max(linalg::residual(self.a, x.as_ref(), e.as_ref()));
        Ok(x)
    }
}

fn shifted(z: C64, l: MatRef<'_, C64>) -> Mat<C64> {
    let n = l.nrows();
    Mat::from_fn(n, n, |i, j| if i == j { z - l[(i, j)] } else { -l[(i, j)] })
}

/// Sampled `|(z - L)^{-1}|` against the certificate bound, plus a solve residual check.
pub fn check_resolvent_bound(l: MatRef<'_, C64>, dim: usize, cert: &GershgorinCertificate, cfg: NormSampling) -> Result<Vec<CheckLine>> {
    let bound = cert
        .resolvent_bound
        .ok_or_else(|| HeomError::InvalidArgument("resolvent check needs a conclusive certificate".into()))?;
    let dd = dim * dim;
    let a = shifted(cert.z, l);
    let mut inv = InverseColumns::new(a.as_ref(), dd)?;
    let sampled = sampled_block_norm(dim, l.nrows() / dd, |m| inv.column(m), cfg)?;
    let z = cert.z;
    Ok(vec![
        CheckLine::leq(format!("solve_residual[z={:.4}{:+.4}i]", z.re, z.im), inv.max_residual, SOLVE_RESIDUAL_TOL),
        CheckLine::leq(format!("gershgorin_resolvent[z={:.4}{:+.4}i]", z.re, z.im), sampled, bound),
    ])
}

/// Sampled window resolvent norms against `1/(Re z + Γ)`.
pub fn tail_resolvent_check(window: &TailWindow, gamma: f64, z_list: &[C64], cfg: NormSampling) -> Result<Vec<CheckLine>> {
    let dd = window.dim * window.dim;
    let mut out = Vec::with_capacity(z_list.len());
    for (k, &z) in z_list.iter().enumerate() {
        let denom = z.re + gamma;
        if !(denom > 0.0) {
            return Err(HeomError::InvalidArgument(format!("tail check needs Re z > {} (got z = {z})", -gamma)));
        }
        let name = format!("tail_resolvent[z={:.4}{:+.4}i,diag={}]", z.re, z.im, window.diagonal_only);
        if window.is_empty() {
            out.push(CheckLine::leq(name, 0.0, 1.0 / denom));
            continue;
        }
        let a = shifted(z, window.matrix.as_ref());
        let mut inv = InverseColumns::new(a.as_ref(), dd)?;
        let sampled = sampled_block_norm(window.dim, window.indices.len(), |m| inv.column(m), NormSampling { seed: cfg.seed.wrapping_add(k as u64), ..cfg })?;
        out.push(CheckLine::leq(name, sampled, 1.0 / denom));
    }
    Ok(out)
}

/// Sampled norms of `L_JT` and `L_TJ` against `√(C(Γ'+γ))` and `√(C(Γ'+γ̃))`.
pub fn offdiag_block_bounds_check(model: &HeomModel, trunc: &Truncation, cfg: NormSampling) -> Result<Vec<CheckLine>> {
    offdiag_checks(&BoundContext::new(model)?, trunc, cfg)
}

fn offdiag_checks(ctx: &BoundContext, trunc: &Truncation, cfg: NormSampling) -> Result<Vec<CheckLine>> {
    let model = &ctx.model;
    let rates = decay_rates(model, trunc)?;
    let gp = rates.gamma_prime_t;
    let d = model.dim();
    let dd = d * d;
    let j: Vec<MultiIndex> = boundary_set(model, trunc).into_iter().collect();
    let t = trunc.indices();
    let l_jt = assemble_blocks(ctx.builder(), &j, t);
    let l_tj = assemble_blocks(ctx.builder(), t, &j);
    let col = |a: &Mat<C64>, m: usize| Ok(a.as_ref().submatrix(0, m * dd, a.nrows(), dd).to_owned());
    let s_jt = sampled_block_norm(d, t.len(), |m| col(&l_jt, m), cfg)?;
    let s_tj = sampled_block_norm(d, j.len(), |m| col(&l_tj, m), NormSampling { seed: cfg.seed ^ 0x5a5a, ..cfg })?;
    let k = &ctx.consts;
    let s = ctx.radius_scale;
    let tag = trunc.gamma_star().unwrap_or(f64::NAN);
    Ok(vec![
        CheckLine::leq(format!("offdiag_tail_from_trunc[gamma_star={tag}]"), s_jt, s * (k.c * (gp + k.gamma_bar)).sqrt()),
        CheckLine::leq(format!("offdiag_trunc_from_tail[gamma_star={tag}]"), s_tj, s * (k.c * (gp + k.gamma_tilde)).sqrt()),
    ])
}

#[derive(Clone, Debug, PartialEq)]
pub struct DefectReport {
    pub z: C64,
    pub value: f64,
    pub oracle_depth: f64,
    pub window_size: usize,
}

/// Sampled `|S_T(z) - (z - L_T)|` with the exact Schur complement replaced by
/// one over the finite window of depth `γ* + oracle_depth`.
pub fn schur_defect(model: &HeomModel, trunc: &Truncation, z: C64, oracle_depth: f64, cfg: NormSampling) -> Result<DefectReport> {
    let gamma_star = trunc.gamma_star().ok_or(HeomError::NotThreshold)?;
    let rates = decay_rates(model, trunc)?;
    if !(z.re > -rates.gamma_t) {
        return Err(HeomError::InvalidArgument(format!("defect needs Re z > {} (got z = {z})", -rates.gamma_t)));
    }
    let builder = BlockBuilder::new(model);
    let t = trunc.indices();
    let w = window_indices(model, trunc, gamma_star + oracle_depth)?;
    let d = model.dim();
    let dd = d * d;
    let n = t.len() * dd;
    // D = (L_T - L_TT) - L_TW (z - L_WW)^{-1} L_WT
    let mut defect = Mat::<C64>::zeros(n, n);
    for term in terminator_terms(model, trunc)? {
        let b = term.block.mat();
        for c in 0..dd {
            for r in 0..dd {
                defect[(term.row * dd + r, term.col * dd + c)] -= b[(r, c)];
            }
        }
    }
    if !w.is_empty() {
        let l_ww = assemble_blocks(&builder, &w, &w);
        let l_wt = assemble_blocks(&builder, &w, t);
        let l_tw = assemble_blocks(&builder, t, &w);
        let x = linalg::solve_checked(shifted(z, l_ww.as_ref()).as_ref(), l_wt.as_ref(), SOLVE_RESIDUAL_TOL)?;
        defect -= &l_tw * &x;
    }
    let value = sampled_block_norm(d, t.len(), |m| Ok(defect.as_ref().submatrix(0, m * dd, n, dd).to_owned()), cfg)?;
    Ok(DefectReport { z, value, oracle_depth, window_size: w.len() })
}

/// Compact set holding every eigenvalue of a truncated Liouvillian with `Re λ ≥ 0`.
#[derive(Clone, Debug)]
pub struct EnclosureSet {
    /// `Δ = C(γ_min + γ̃)/γ_min`.
    pub delta_cap: f64,
    pub consts: ModelConstants,
    pub spread_h: f64,
    pub radius_scale: f64,
    gammas: Vec<C64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Membership {
    pub contained: bool,
    /// `dist - R_n - 2Δ` at the witness index, when one was found.
    pub margin: Option<f64>,
    pub witness: Option<MultiIndex>,
    /// Largest `Re γ_n` that can contribute for this z.
    pub scan_bound: f64,
    pub visited: usize,
}

pub fn unstable_enclosure(model: &HeomModel) -> Result<EnclosureSet> {
    let ctx = BoundContext::new(model)?;
    Ok(enclosure_from(&ctx))
}

pub fn enclosure_from(ctx: &BoundContext) -> EnclosureSet {
    let gmin = ctx.model.gamma_min();
    EnclosureSet {
        delta_cap: ctx.consts.c * (gmin + ctx.consts.gamma_tilde) / gmin,
        consts: ctx.consts,
        spread_h: ctx.spread_h,
        radius_scale: ctx.radius_scale,
        gammas: ctx.model.modes.iter().map(|m| m.gamma).collect(),
    }
}

pub fn enclosure_contains(enc: &EnclosureSet, z: C64) -> bool {
    enclosure_membership(enc, z).map(|m| m.contained).unwrap_or(false)
}

/// Depth-first scan for an index whose inflated Gershgorin segment reaches z.
pub fn enclosure_membership(enc: &EnclosureSet, z: C64) -> Result<Membership> {
    let k = enc.consts;
    let two_delta = 2.0 * enc.delta_cap;
    // dist ≥ Re z + Re γ_n, so only Re γ_n ≤ x with x - √(C(x+γ)) ≤ 2Δ - Re z contribute.
    let kk = two_delta + (-z.re).max(0.0);
    let s = 2.0 * kk + k.c;
    let scan_bound = 0.5 * (s + (s * s - 4.0 * (kk * kk - k.c * k.gamma_bar)).max(0.0).sqrt());
    let rates: Vec<f64> = enc.gammas.iter().map(|g| g.re).collect();
    let mut visited = 0usize;
    let mut stack: Vec<(usize, Vec<u32>, C64)> = vec![(0, vec![0; rates.len()], C64::new(0.0, 0.0))];
    while let Some((j, n, g)) = stack.pop() {
        if j == rates.len() {
            visited += 1;
            let dist = segment_distance(z, &SegmentSet { b: -g, delta: enc.spread_h });
            let margin = dist - enc.radius_scale * radius_bound_from(&k, g.re) - two_delta;
            // Eigenvalues carry rounding error, so degenerate (zero-width) segments get a small slack.
            if margin <= SLACK_ABS * (1.0 + z.norm()) + SLACK_REL * g.norm() {
                return Ok(Membership { contained: true, margin: Some(margin), witness: Some(MultiIndex(n)), scan_bound, visited });
            }
            if visited > ENCLOSURE_SCAN_CAP {
                return Err(HeomError::Numerical(format!("enclosure scan exceeded {ENCLOSURE_SCAN_CAP} indices")));
            }
            continue;
        }
        let mut kj = 0u32;
        let mut next = Vec::new();
        loop {
            let gg = g + enc.gammas[j] * kj as f64;
            if gg.re > scan_bound {
                break;
            }
            let mut nn = n.clone();
            nn[j] = kj;
            next.push((j + 1, nn, gg));
            kj += 1;
        }
        // Small indices first.
        stack.extend(next.into_iter().rev());
    }
    Ok(Membership { contained: false, margin: None, witness: None, scan_bound, visited })
}

/// Whether z lies in the union of the (inflated) Gershgorin sets of the given indices.
pub fn in_gershgorin_union(ctx: &BoundContext, indices: &[MultiIndex], z: C64, inflation: f64) -> bool {
    indices
        .iter()
        .any(|n| ctx.beta_lower(n, z) - inflation <= ctx.radius_bound(n) * (1.0 + 1e-9) + SLACK_ABS)
}

/// Settings for the full certification suite.
#[derive(Clone, Debug)]
pub struct SuiteConfig {
    /// Thresholds of the exhausting sequence (three are used for the per-truncation checks).
    pub gamma_stars: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub diagonal_blocks: usize,
    pub certificates: usize,
    pub tail_z_per_window: usize,
    /// Extra depth of tail windows; defaults to `max(γ*, 2 max Re γ_j)`.
    pub tail_extra_depth: Option<f64>,
    pub oracle_factor: f64,
    /// Evaluation point of the defect sweep; defaults to `max(0, -Γ_T) + 1`.
    pub defect_z: Option<C64>,
    pub radius_scale: f64,
    pub size_cap: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            gamma_stars: Vec::new(),
            samples: 64,
            seed: 0,
            diagonal_blocks: 50,
            certificates: 20,
            tail_z_per_window: 5,
            tail_extra_depth: None,
            oracle_factor: DEFAULT_ORACLE_FACTOR,
            defect_z: None,
            radius_scale: 1.0,
            size_cap: DEFAULT_SIZE_CAP,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SuiteReport {
    pub checks: Vec<CheckLine>,
    pub notes: Vec<String>,
}

impl SuiteReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.pass).count()
    }

    pub fn count(&self, prefix: &str) -> usize {
        self.checks.iter().filter(|c| c.name.starts_with(prefix)).count()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for n in &self.notes {
            s.push_str("# ");
            s.push_str(n);
            s.push('\n');
        }
        for c in &self.checks {
            s.push_str(&c.to_string());
            s.push('\n');
        }
        s.push_str(&format!("SUMMARY checks={} failures={}\n", self.checks.len(), self.failures()));
        s
    }
}

/// Runs every bound check on the truncations `T(γ*)` of the config.
pub fn run_bound_suite(model: &HeomModel, cfg: &SuiteConfig) -> Result<SuiteReport> {
    if cfg.gamma_stars.is_empty() {
        return Err(HeomError::InvalidArgument("bound suite needs at least one threshold".into()));
    }
    let ctx = BoundContext::new(model)?.with_radius_scale(cfg.radius_scale);
    let truncs = cfg
        .gamma_stars
        .iter()
        .map(|&g| build_truncation_capped(model, g, cfg.size_cap))
        .collect::<Result<Vec<_>>>()?;
    let mut rep = SuiteReport::default();
    let k = ctx.consts;
    rep.notes.push(format!("C={:.9e} gamma_bar={:.9e} gamma_tilde={:.9e} spread_h={:.9e}", k.c, k.gamma_bar, k.gamma_tilde, ctx.spread_h));
    rep.notes.push(
        "sampled norms are lower bounds; tail windows are principal sub-blocks of the tail, whose Gershgorin radii only shrink, so the tail bound applies to them"
            .into(),
    );
    let sampling = |salt: u64| NormSampling::new(cfg.samples, cfg.seed.wrapping_mul(0x9e37_79b9).wrapping_add(salt));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    for t in &truncs {
        column_radius_checks(&ctx, t, sampling(1), &mut rep)?;
    }
    diagonal_resolvent_checks(&ctx, truncs.last().unwrap(), cfg.diagonal_blocks, sampling(2), &mut rng, &mut rep)?;

    let mats: Vec<TruncatedLiouvillian> = truncs
        .iter()
        .flat_map(|t| [TruncationKind::Naive, TruncationKind::SchurTerminated].map(|kind| (t, kind)))
        .map(|(t, kind)| assemble(model, t, kind))
        .collect::<Result<_>>()?;
    resolvent_certificate_checks(&ctx, &mats, cfg.certificates, sampling(3), &mut rng, &mut rep)?;
    right_halfplane_q_checks(&ctx, &truncs, &mut rep)?;

    let y = 2.0 * spectral_norm(&model.hamiltonian) + model.modes.iter().map(|m| m.gamma.im.abs()).fold(0.0, f64::max) + 1.0;
    for (i, t) in truncs.iter().enumerate() {
        let rates = decay_rates(model, t)?;
        let gs = t.gamma_star().unwrap();
        let extra = cfg.tail_extra_depth.unwrap_or(gs.max(2.0 * model.gamma_max()));
        let window = crate::assembly::assemble_tail_window(model, t, extra, false)?;
        let x0 = (-rates.gamma_t).max(0.0) + 0.5;
        let shifts = [0.0, 0.5, -0.5, 1.0, -1.0];
        let zs: Vec<C64> = (0..cfg.tail_z_per_window).map(|k| C64::new(x0 * (1.0 + 0.5 * k as f64), y * shifts[k % shifts.len()])).collect();
        rep.notes.push(format!("tail window gamma_star={gs} extra_depth={extra} size={} Gamma_T={:.9e}", window.indices.len(), rates.gamma_t));
        rep.checks.extend(tail_resolvent_check(&window, rates.gamma_t, &zs, sampling(10 + i as u64))?);
        rep.checks.extend(offdiag_checks(&ctx, t, sampling(20 + i as u64))?);
    }

    defect_checks(model, &truncs, cfg, sampling(30), &mut rep)?;

    let enc = enclosure_from(&ctx);
    rep.notes.push(format!("enclosure delta_cap={:.9e}", enc.delta_cap));
    for l in &mats {
        let ev = spectra::eigenvalues(l)?;
        let gs = l.truncation.gamma_star().unwrap();
        let infl = ctx.inflation_for(l);
        let outside = ev.iter().filter(|&&z| !in_gershgorin_union(&ctx, l.truncation.indices(), z, infl)).count();
        rep.checks.push(CheckLine::leq(format!("gershgorin_containment[{} gamma_star={gs}]", l.kind.name()), outside as f64, 0.0));
        for z in ev.into_iter().filter(|z| z.re >= -1e-10) {
            let m = enclosure_membership(&enc, z)?;
            rep.checks.push(CheckLine::with_pass(
                format!("unstable_enclosure[{} gamma_star={gs} z={:.6e}{:+.6e}i]", l.kind.name(), z.re, z.im),
                m.contained,
                m.margin.unwrap_or(f64::INFINITY),
                0.0,
            ));
        }
    }
    Ok(rep)
}

/// Sum of sampled off-diagonal block norms in column n of the full Liouvillian.
fn column_radius_checks(ctx: &BoundContext, t: &Truncation, cfg: NormSampling, rep: &mut SuiteReport) -> Result<()> {
    let d = ctx.model.dim();
    let gs = t.gamma_star().unwrap_or(f64::NAN);
    for (p, n) in t.indices().iter().enumerate() {
        let mut radius = 0.0;
        for j in 0..n.len() {
            let neighbours = [Some(n.raised(j)), n.lowered(j)];
            for (s, m) in neighbours.into_iter().flatten().enumerate() {
                // Column n: block (m, n).
                if let Some(b) = ctx.builder().block(&m, n) {
                    let seed = cfg.seed.wrapping_add((p * 97 + j * 2 + s) as u64);
                    radius += sampled_block_norm(d, 1, |_| Ok(b.mat().to_owned()), NormSampling { seed, ..cfg })?;
                }
            }
        }
        rep.checks.push(CheckLine::leq(format!("column_radius[gamma_star={gs} n={n}]"), radius, ctx.radius_bound(n)));
    }
    Ok(())
}

fn diagonal_resolvent_checks(ctx: &BoundContext, t: &Truncation, count: usize, cfg: NormSampling, rng: &mut ChaCha8Rng, rep: &mut SuiteReport) -> Result<()> {
    let d = ctx.model.dim();
    let gmax = t.indices().iter().map(|n| ctx.gamma_n(n).re).fold(1.0, f64::max);
    let y = ctx.spread_h + ctx.model.modes.iter().map(|m| m.gamma.im.abs()).fold(1.0, f64::max);
    let mut done = 0;
    while done < count {
        let n = &t.indices()[rng.random_range(0..t.len())];
        let z = C64::new(rng.random_range(-1.5 * gmax..1.0), rng.random_range(-2.0 * y..2.0 * y));
        let dist = ctx.beta_lower(n, z);
        if dist <= 1e-8 {
            continue;
        }
        let a = shifted(z, ctx.builder().diagonal(n).mat());
        let mut inv = InverseColumns::new(a.as_ref(), d * d)?;
        let sampled = sampled_block_norm(d, 1, |_| inv.column(0), NormSampling { seed: cfg.seed.wrapping_add(done as u64), ..cfg })?;
        rep.checks.push(CheckLine::leq(format!("diagonal_resolvent[n={n} z={:.4}{:+.4}i]", z.re, z.im), sampled, 1.0 / dist));
        done += 1;
    }
    Ok(())
}

fn resolvent_certificate_checks(
    ctx: &BoundContext,
    mats: &[TruncatedLiouvillian],
    count: usize,
    cfg: NormSampling,
    rng: &mut ChaCha8Rng,
    rep: &mut SuiteReport,
) -> Result<()> {
    let k = ctx.consts;
    let y = 2.0 * ctx.spread_h + 1.0;
    let mut done = 0;
    let mut attempts = 0;
    while done < count && attempts < 50 * count.max(1) {
        let l = &mats[attempts % mats.len()];
        attempts += 1;
        let x_c = k.gamma_bar + k.c + ctx.inflation_for(l);
        // Half the points in the region where q ≤ 1/2 is guaranteed, half closer in.
        let scale = if attempts % 2 == 0 { rng.random_range(1.0..2.0) } else { rng.random_range(0.2..1.0) };
        let z = C64::new(x_c * scale, rng.random_range(-y..y));
        let cert = certificate_for(ctx, l, z);
        if !cert.is_conclusive() {
            continue;
        }
        let lines = check_resolvent_bound(l.matrix.as_ref(), l.dim, &cert, NormSampling { seed: cfg.seed.wrapping_add(done as u64), ..cfg })?;
        for mut c in lines {
            c.name = format!("{}[{} gamma_star={}]", c.name, l.kind.name(), l.truncation.gamma_star().unwrap_or(f64::NAN));
            rep.checks.push(c);
        }
        done += 1;
    }
    rep.checks.push(CheckLine::with_pass("conclusive_certificates", done >= count, done as f64, count as f64));
    Ok(())
}

/// `q(z) ≤ 1/2` for real z beyond `Γ' + γ + C`.
fn right_halfplane_q_checks(ctx: &BoundContext, truncs: &[Truncation], rep: &mut SuiteReport) -> Result<()> {
    for t in truncs {
        let gp = decay_rates(&ctx.model, t)?.gamma_prime_t;
        let z = C64::new(gp + ctx.consts.gamma_bar + ctx.consts.c, 0.0);
        let cert = ctx.certificate(t.indices(), z, 0.0);
        rep.checks.push(CheckLine::leq(format!("right_halfplane_q[gamma_star={}]", t.gamma_star().unwrap()), cert.q_of_z, 0.5));
    }
    Ok(())
}

fn defect_checks(model: &HeomModel, truncs: &[Truncation], cfg: &SuiteConfig, sampling: NormSampling, rep: &mut SuiteReport) -> Result<()> {
    let worst = truncs
        .iter()
        .map(|t| decay_rates(model, t).map(|r| r.gamma_t))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let z = cfg.defect_z.unwrap_or(C64::new((-worst).max(0.0) + 1.0, 0.0));
    let mut prev: Option<f64> = None;
    for t in truncs {
        let gs = t.gamma_star().unwrap();
        let r = schur_defect(model, t, z, cfg.oracle_factor * gs, sampling)?;
        rep.notes.push(format!(
            "schur_defect gamma_star={gs} z={} oracle_depth={} window={} value={:.9e}",
            z, r.oracle_depth, r.window_size, r.value
        ));
        if let Some(p) = prev {
            rep.checks.push(CheckLine::leq(format!("schur_defect_decrease[gamma_star={gs}]"), r.value, (1.0 + DEFECT_SLACK) * p));
        }
        prev = Some(r.value);
    }
    Ok(())
}
