//! Operators on a d-dimensional system and the superoperators acting on them.

use faer::{Mat, MatRef};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{HeomError, Result};
use crate::linalg::{self, C64};

pub const HERMITICITY_TOL: f64 = 1e-10;

/// Default number of random rank-one starts for sampled norms.
pub const DEFAULT_SAMPLES: usize = 256;
/// Default number of ascent steps per start.
pub const DEFAULT_ASCENT_STEPS: usize = 50;

/// A d×d complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemOperator {
    m: Mat<C64>,
}

impl SystemOperator {
    /// Build from row-major entries.
    pub fn new(dim: usize, entries: &[C64]) -> Result<Self> {
        if dim == 0 {
            return Err(HeomError::InvalidArgument("operator dimension must be at least 1".into()));
        }
        if entries.len() != dim * dim {
            return Err(HeomError::DimMismatch { expected: dim * dim, got: entries.len() });
        }
        Self::from_mat(Mat::from_fn(dim, dim, |i, j| entries[i * dim + j]))
    }

    pub fn from_mat(m: Mat<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(HeomError::DimMismatch { expected: m.nrows(), got: m.ncols() });
        }
        if m.nrows() == 0 {
            return Err(HeomError::InvalidArgument("operator dimension must be at least 1".into()));
        }
        if !linalg::all_finite(m.as_ref()) {
            return Err(HeomError::NonFinite("system operator"));
        }
        Ok(Self { m })
    }

    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self> {
        let c: Vec<C64> = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::new(dim, &c)
    }

    pub fn zeros(dim: usize) -> Self {
        Self { m: linalg::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { m: linalg::identity(dim) }
    }

    pub fn pauli_x() -> Self {
        Self::from_real(2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    pub fn pauli_y() -> Self {
        let i = C64::new(0.0, 1.0);
        Self::new(2, &[C64::new(0.0, 0.0), -i, i, C64::new(0.0, 0.0)]).unwrap()
    }

    pub fn pauli_z() -> Self {
        Self::from_real(2, &[1.0, 0.0, 0.0, -1.0]).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn mat(&self) -> MatRef<'_, C64> {
        self.m.as_ref()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.m[(i, j)]
    }

    /// Row-major entries.
    pub fn entries(&self) -> Vec<C64> {
        vectorize(self)
    }

    pub fn adjoint(&self) -> Self {
        Self { m: self.m.adjoint().to_owned() }
    }

    pub fn scale(&self, s: C64) -> Self {
        let d = self.dim();
        Self { m: Mat::from_fn(d, d, |i, j| self.m[(i, j)] * s) }
    }

    pub fn frobenius_norm(&self) -> f64 {
        linalg::frobenius(self.mat())
    }

    /// `|A - A^dag|_F`, compared against `1e-10 |A|_F`.
    pub fn hermiticity_defect(&self) -> f64 {
        let diff = self.m.as_ref() - self.m.adjoint();
        linalg::frobenius(diff.as_ref())
    }

    pub fn ensure_hermitian(&self) -> Result<()> {
        let defect = self.hermiticity_defect();
        let tol = HERMITICITY_TOL * self.frobenius_norm();
        if defect > tol {
            return Err(HeomError::NotHermitian { defect, tol });
        }
        Ok(())
    }

    /// Eigenvalues (ascending) and eigenvectors of a Hermitian operator.
    pub fn hermitian_eig(&self) -> Result<(Vec<f64>, Mat<C64>)> {
        self.ensure_hermitian()?;
        linalg::hermitian_eig(self.mat())
    }
}

impl std::ops::Mul for &SystemOperator {
    type Output = SystemOperator;
    fn mul(self, rhs: &SystemOperator) -> SystemOperator {
        SystemOperator { m: &self.m * &rhs.m }
    }
}

impl std::ops::Sub for &SystemOperator {
    type Output = SystemOperator;
    fn sub(self, rhs: &SystemOperator) -> SystemOperator {
        SystemOperator { m: &self.m - &rhs.m }
    }
}

impl std::ops::Add for &SystemOperator {
    type Output = SystemOperator;
    fn add(self, rhs: &SystemOperator) -> SystemOperator {
        SystemOperator { m: &self.m + &rhs.m }
    }
}

/// A d²×d² matrix acting on row-major vectorized d×d operators.
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator {
    dim: usize,
    m: Mat<C64>,
}

impl Superoperator {
    pub fn from_mat(dim: usize, m: Mat<C64>) -> Result<Self> {
        let n = dim * dim;
        if m.nrows() != n || m.ncols() != n {
            return Err(HeomError::DimMismatch { expected: n, got: m.nrows().max(m.ncols()) });
        }
        if !linalg::all_finite(m.as_ref()) {
            return Err(HeomError::NonFinite("superoperator"));
        }
        Ok(Self { dim, m })
    }

    pub fn zero(dim: usize) -> Self {
        Self { dim, m: linalg::zeros(dim * dim, dim * dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { dim, m: linalg::identity(dim * dim) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mat(&self) -> MatRef<'_, C64> {
        self.m.as_ref()
    }

    pub fn into_mat(self) -> Mat<C64> {
        self.m
    }

    pub fn apply(&self, rho: &SystemOperator) -> Result<SystemOperator> {
        if rho.dim() != self.dim {
            return Err(HeomError::DimMismatch { expected: self.dim, got: rho.dim() });
        }
        let v = vec_column(rho);
        let out = &self.m * &v;
        devectorize(self.dim, out.col_as_slice(0))
    }

    pub fn scale(&self, s: C64) -> Self {
        let n = self.m.nrows();
        Self { dim: self.dim, m: Mat::from_fn(n, n, |i, j| self.m[(i, j)] * s) }
    }

    pub fn compose(&self, rhs: &Superoperator) -> Self {
        Self { dim: self.dim, m: &self.m * &rhs.m }
    }

    pub fn frobenius_norm(&self) -> f64 {
        linalg::frobenius(self.mat())
    }
}

impl std::ops::Add for &Superoperator {
    type Output = Superoperator;
    fn add(self, rhs: &Superoperator) -> Superoperator {
        Superoperator { dim: self.dim, m: &self.m + &rhs.m }
    }
}

impl std::ops::Sub for &Superoperator {
    type Output = Superoperator;
    fn sub(self, rhs: &Superoperator) -> Superoperator {
        Superoperator { dim: self.dim, m: &self.m - &rhs.m }
    }
}

/// Row-major stacking of the entries.
pub fn vectorize(op: &SystemOperator) -> Vec<C64> {
    let d = op.dim();
    let mut v = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            v.push(op.m[(i, j)]);
        }
    }
    v
}

pub fn devectorize(dim: usize, v: &[C64]) -> Result<SystemOperator> {
    SystemOperator::new(dim, v)
}

fn vec_column(op: &SystemOperator) -> Mat<C64> {
    let v = vectorize(op);
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

/// ρ ↦ Aρ, i.e. `A ⊗ I`.
pub fn left_mult_superop(a: &SystemOperator) -> Superoperator {
    let d = a.dim();
    Superoperator { dim: d, m: linalg::kron(a.mat(), linalg::identity(d).as_ref()) }
}

/// ρ ↦ ρA, i.e. `I ⊗ Aᵀ`.
pub fn right_mult_superop(a: &SystemOperator) -> Superoperator {
    let d = a.dim();
    Superoperator { dim: d, m: linalg::kron(linalg::identity(d).as_ref(), a.mat().transpose()) }
}

/// ρ ↦ [A, ρ].
pub fn commutator_superop(a: &SystemOperator) -> Superoperator {
    &left_mult_superop(a) - &right_mult_superop(a)
}

pub fn trace_norm(op: &SystemOperator) -> f64 {
    linalg::singular_values(op.mat())
        .expect("svd of a finite matrix")
        .iter()
        .sum()
}

pub fn spectral_norm(op: &SystemOperator) -> f64 {
    linalg::singular_values(op.mat())
        .expect("svd of a finite matrix")
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Settings for sampled trace-induced norms.
#[derive(Clone, Copy, Debug)]
pub struct NormSampling {
    pub samples: usize,
    pub steps: usize,
    pub seed: u64,
}

impl NormSampling {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self { samples, steps: DEFAULT_ASCENT_STEPS, seed }
    }
}

impl Default for NormSampling {
    fn default() -> Self {
        Self { samples: DEFAULT_SAMPLES, steps: DEFAULT_ASCENT_STEPS, seed: 0 }
    }
}

/// Lower bound of the trace-norm-induced norm of `s`.
///
/// Rank-one inputs `u v^dag` are the extreme points of the trace-norm unit
/// ball, so the maximum over them is the exact norm; random starts followed
/// by alternating top-singular-pair ascent give a certified lower bound.
pub fn sampled_induced_norm(s: &Superoperator, samples: usize, seed: u64) -> Result<f64> {
    let cfg = NormSampling { samples, steps: DEFAULT_ASCENT_STEPS, seed };
    sampled_block_norm(s.dim(), 1, |_| Ok(s.m.clone()), cfg)
}

/// Lower bound of the norm induced by `Σ_n |ρ_n|_1` on a block matrix.
///
/// The matrix has `n_cols` block columns of width d²; `column(m)` returns
/// block column `m` (any number of block rows). Extreme points of the unit
/// ball are rank-one operators supported in a single block, so each start
/// picks a block column and ascends on (u, v).
pub fn sampled_block_norm<F>(dim: usize, n_cols: usize, column: F, cfg: NormSampling) -> Result<f64>
where
    F: FnMut(usize) -> Result<Mat<C64>>,
{
    if cfg.samples == 0 {
        return Err(HeomError::InvalidArgument("sampled norm needs at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let plan = column_plan(n_cols, cfg.samples, &mut rng);
    let mut column = column;
    let mut best = 0.0f64;
    for (m, starts) in plan {
        let a = column(m)?;
        if a.ncols() != dim * dim || a.nrows() % (dim * dim) != 0 {
            return Err(HeomError::DimMismatch { expected: dim * dim, got: a.ncols() });
        }
        for _ in 0..starts {
            let u = random_unit(dim, &mut rng);
            let v = random_unit(dim, &mut rng);
            best = best.max(ascend(dim, a.as_ref(), u, v, cfg.steps)?);
        }
    }
    Ok(best)
}

fn column_plan(n_cols: usize, samples: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    if n_cols == 0 {
        return Vec::new();
    }
    if samples >= n_cols {
        let base = samples / n_cols;
        let extra = samples % n_cols;
        (0..n_cols).map(|m| (m, base + usize::from(m < extra))).collect()
    } else {
        let mut picks: Vec<usize> = rand::seq::index::sample(rng, n_cols, samples).into_vec();
        picks.sort_unstable();
        picks.into_iter().map(|m| (m, 1)).collect()
    }
}

fn random_unit(d: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..d)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let n = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-300 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Value `Σ_n |(A uv^dag)_n|_1` after monotone ascent from (u, v).
fn ascend(d: usize, a: MatRef<'_, C64>, mut u: Vec<C64>, mut v: Vec<C64>, steps: usize) -> Result<f64> {
    let dd = d * d;
    let blocks = a.nrows() / dd;
    let mut best = 0.0f64;
    for step in 0..=steps {
        let x = Mat::from_fn(dd, 1, |k, _| u[k / d] * v[k % d].conj());
        let y = a * &x;
        let mut value = 0.0;
        let mut p = Mat::<C64>::zeros(a.nrows(), 1);
        for b in 0..blocks {
            let blk = Mat::from_fn(d, d, |i, j| y[(b * dd + i * d + j, 0)]);
            let (uu, s, vv) = linalg::thin_svd(blk.as_ref())?;
            value += s.iter().sum::<f64>();
            let polar = &uu * vv.adjoint();
            for i in 0..d {
                for j in 0..d {
                    p[(b * dd + i * d + j, 0)] = polar[(i, j)];
                }
            }
        }
        best = best.max(value);
        if step == steps {
            break;
        }
        let g = a.adjoint() * &p;
        let gm = Mat::from_fn(d, d, |i, j| g[(i * d + j, 0)]);
        let (gu, gs, gv) = linalg::thin_svd(gm.as_ref())?;
        if gs.first().copied().unwrap_or(0.0) <= value * (1.0 + 1e-14) {
            break;
        }
        u = (0..d).map(|i| gu[(i, 0)]).collect();
        v = (0..d).map(|i| gv[(i, 0)]).collect();
    }
    Ok(best)
}

/// Solver for the diagonal HEOM block `X ↦ -i[H, X] - γ X`, via the eigenbasis of H.
#[derive(Clone, Debug)]
pub struct DiagonalBlockSolver {
    energies: Vec<f64>,
    basis: Mat<C64>,
}

impl DiagonalBlockSolver {
    pub fn new(h: &SystemOperator) -> Result<Self> {
        let (energies, basis) = h.hermitian_eig()?;
        Ok(Self { energies, basis })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    fn denominators(&self, gamma: C64) -> Result<Vec<C64>> {
        if !(gamma.re > 0.0) {
            return Err(HeomError::NonPositiveDecay(format!("{gamma}")));
        }
        let e = &self.energies;
        let d = e.len();
        Ok((0..d * d)
            .map(|k| gamma + C64::new(0.0, e[k / d] - e[k % d]))
            .collect())
    }

    /// X with `-i[H, X] - γ X = rhs`.
    pub fn solve(&self, gamma: C64, rhs: &SystemOperator) -> Result<SystemOperator> {
        let d = self.dim();
        if rhs.dim() != d {
            return Err(HeomError::DimMismatch { expected: d, got: rhs.dim() });
        }
        let den = self.denominators(gamma)?;
        let v = self.basis.as_ref();
        let r = v.adjoint() * rhs.mat() * v;
        let x = Mat::from_fn(d, d, |a, b| -r[(a, b)] / den[a * d + b]);
        SystemOperator::from_mat(v * &x * v.adjoint())
    }

    /// The inverse of the diagonal block as a d²×d² matrix.
    pub fn inverse_superop(&self, gamma: C64) -> Result<Superoperator> {
        let d = self.dim();
        let den = self.denominators(gamma)?;
        let conj = Mat::from_fn(d, d, |i, j| self.basis[(i, j)].conj());
        let w = linalg::kron(self.basis.as_ref(), conj.as_ref());
        let scaled = Mat::from_fn(d * d, d * d, |i, j| w[(i, j)] * (-1.0 / den[j]));
        Superoperator::from_mat(d, scaled * w.adjoint())
    }
}

/// X solving `-i[H, X] - γ X = rhs`.
pub fn diag_block_inverse(h: &SystemOperator, gamma_n: C64, rhs: &SystemOperator) -> Result<SystemOperator> {
    DiagonalBlockSolver::new(h)?.solve(gamma_n, rhs)
}

/// The vertical segment `b + i[-Δ, Δ]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentSet {
    pub b: C64,
    pub delta: f64,
}

impl SegmentSet {
    pub fn new(b: C64, delta: f64) -> Result<Self> {
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(HeomError::InvalidArgument(format!("segment half-length {delta} must be nonnegative")));
        }
        Ok(Self { b, delta })
    }
}

pub fn segment_distance(z: C64, seg: &SegmentSet) -> f64 {
    let w = z - seg.b;
    if w.im.abs() <= seg.delta {
        w.re.abs()
    } else {
        let end = C64::new(0.0, seg.delta * w.im.signum());
        (w - end).norm()
    }
}

/// Eigenvalue spread `λ_max - λ_min` of a Hermitian operator.
pub fn spread(a: &SystemOperator) -> Result<f64> {
    let (e, _) = a.hermitian_eig()?;
    Ok(e[e.len() - 1] - e[0])
}
