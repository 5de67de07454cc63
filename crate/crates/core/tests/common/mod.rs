#![allow(dead_code, clippy::needless_range_loop)]

use faer::Mat;
use heom_core::hierarchy::{BathMode, HeomModel, MultiIndex};
use heom_core::linalg::eigenvalues as dense_eigenvalues;
use heom_core::superop::{vectorize, SystemOperator};
use heom_core::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_op(r: &mut ChaCha8Rng, d: usize) -> SystemOperator {
    let e: Vec<C64> = (0..d * d).map(|_| c(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect();
    SystemOperator::new(d, &e).unwrap()
}

pub fn random_hermitian(r: &mut ChaCha8Rng, d: usize) -> SystemOperator {
    let a = random_op(r, d);
    let m = Mat::from_fn(d, d, |i, j| (a.get(i, j) + a.get(j, i).conj()) * 0.5);
    SystemOperator::from_mat(m).unwrap()
}

/// Plain triple-loop product.
pub fn matmul(a: &SystemOperator, b: &SystemOperator) -> Vec<Vec<C64>> {
    let d = a.dim();
    (0..d)
        .map(|i| (0..d).map(|j| (0..d).map(|k| a.get(i, k) * b.get(k, j)).sum()).collect())
        .collect()
}

pub fn max_abs_diff(a: &SystemOperator, b: &[Vec<C64>]) -> f64 {
    let d = a.dim();
    let mut m: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            m = m.max((a.get(i, j) - b[i][j]).norm());
        }
    }
    m
}

pub fn random_model(r: &mut ChaCha8Rng, d: usize, n: usize) -> HeomModel {
    let h = random_hermitian(r, d);
    let modes = (0..n)
        .map(|_| {
            let gamma = c(r.random_range(0.5..2.0), r.random_range(-1.0..1.0));
            let cc = c(r.random_range(-0.5..0.5), r.random_range(-0.5..0.5));
            let cp = c(r.random_range(-0.5..0.5), r.random_range(-0.5..0.5));
            let cpp = c(r.random_range(-0.5..0.5), r.random_range(-0.5..0.5));
            BathMode::new(gamma, cc, cp, cpp, random_hermitian(r, d)).unwrap()
        })
        .collect();
    HeomModel::new(h, modes).unwrap()
}

/// `H = 0`, `q = σ_z`, one mode.
pub fn pure_dephasing(gamma: C64, cc: C64, cp: C64, cpp: C64) -> HeomModel {
    let m = BathMode::new(gamma, cc, cp, cpp, SystemOperator::pauli_z()).unwrap();
    HeomModel::new(SystemOperator::zeros(2), vec![m]).unwrap()
}

/// Pure-dephasing toy used for convergence: γ = 1, c = 0.5i, c' = 0.3 + 0.5i, c'' = conj(c').
pub fn toy_dephasing() -> HeomModel {
    pure_dephasing(c(1.0, 0.0), c(0.0, 0.5), c(0.3, 0.5), c(0.3, -0.5))
}

/// Weakly coupled pure-dephasing toy: C ≈ 1.17, so Γ_T > 0 already at γ* = 2.
pub fn weak_dephasing() -> HeomModel {
    pure_dephasing(c(1.0, 0.0), c(0.0, 0.25), c(0.15, 0.25), c(0.15, -0.25))
}

pub fn uncoupled(h: SystemOperator, gammas: &[C64]) -> HeomModel {
    let d = h.dim();
    let modes = gammas
        .iter()
        .map(|&g| BathMode::new(g, c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), SystemOperator::identity(d)).unwrap())
        .collect();
    HeomModel::new(h, modes).unwrap()
}

pub fn rel_diff(a: faer::MatRef<'_, C64>, b: faer::MatRef<'_, C64>) -> f64 {
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            num += (a[(i, j)] - b[(i, j)]).norm_sqr();
            den += b[(i, j)].norm_sqr();
        }
    }
    (num / den.max(f64::MIN_POSITIVE)).sqrt()
}

/// Match two spectra greedily; returns the largest pairing distance.
pub fn spectrum_distance(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for z in a {
        let (k, d) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, w)| (k, (z - w).norm()))
            .min_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
            .unwrap();
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}

/// `(z - T)^{-1}` for `T = -i[H,·] + b`, by dense inversion.
pub fn segment_resolvent(h: &SystemOperator, b: C64, z: C64) -> heom_core::superop::Superoperator {
    use heom_core::superop::{commutator_superop, Superoperator};
    let d = h.dim();
    let a = &commutator_superop(h).scale(c(0.0, 1.0)) + &Superoperator::identity(d).scale(z - b);
    let inv = heom_core::linalg::Lu::new(a.mat()).unwrap().solve(Mat::<C64>::identity(d * d, d * d).as_ref()).unwrap();
    Superoperator::from_mat(d, inv).unwrap()
}

/// Independent assembly: every block is built by applying the HEOM terms to
/// each matrix unit E_kl with explicit products, then stacking row-major.
pub fn oracle_matrix(model: &HeomModel, idx: &[MultiIndex], couple: impl Fn(&MultiIndex, &MultiIndex) -> bool) -> Mat<C64> {
    let d = model.dim();
    let dd = d * d;
    let h = &model.hamiltonian;
    let mm = |a: &SystemOperator, b: &SystemOperator| -> SystemOperator {
        let p = matmul(a, b);
        let e: Vec<C64> = p.into_iter().flatten().collect();
        SystemOperator::new(d, &e).unwrap()
    };
    let mut out = Mat::<C64>::zeros(idx.len() * dd, idx.len() * dd);
    for (cpos, m) in idx.iter().enumerate() {
        for kl in 0..dd {
            let mut e = vec![c(0.0, 0.0); dd];
            e[kl] = c(1.0, 0.0);
            let rho = SystemOperator::new(d, &e).unwrap();
            for (rpos, n) in idx.iter().enumerate() {
                let mut img = SystemOperator::zeros(d);
                if n == m {
                    let g: C64 = n.0.iter().zip(&model.modes).map(|(&k, mo)| mo.gamma * k as f64).sum();
                    let comm = &mm(h, &rho) - &mm(&rho, h);
                    img = &comm.scale(c(0.0, -1.0)) - &rho.scale(g);
                } else if couple(n, m) {
                    for (j, mo) in model.modes.iter().enumerate() {
                        if m.0[j] == n.0[j] + 1 && (0..n.len()).all(|i| i == j || m.0[i] == n.0[i]) {
                            let comm = &mm(&mo.q, &rho) - &mm(&rho, &mo.q);
                            img = &img + &comm.scale(mo.c * ((n.0[j] + 1) as f64).sqrt());
                        }
                        if n.0[j] == m.0[j] + 1 && (0..n.len()).all(|i| i == j || m.0[i] == n.0[i]) {
                            let t = &mm(&mo.q, &rho).scale(mo.c_prime) + &mm(&rho, &mo.q).scale(mo.c_dblprime);
                            img = &img + &t.scale(c((n.0[j] as f64).sqrt(), 0.0));
                        }
                    }
                }
                let v = vectorize(&img);
                for (r, z) in v.into_iter().enumerate() {
                    out[(rpos * dd + r, cpos * dd + kl)] = z;
                }
            }
        }
    }
    out
}

/// Coherence sector of the single-mode pure-dephasing model as a scalar tridiagonal matrix.
pub fn dephasing_tridiagonal(model: &HeomModel, depth: usize, terminated: bool, sign: f64) -> Vec<C64> {
    let m = &model.modes[0];
    let n = depth + 1;
    let up = |k: usize| m.c * 2.0 * sign * ((k + 1) as f64).sqrt();
    let down = |k: usize| (m.c_prime - m.c_dblprime) * sign * (k as f64).sqrt();
    let mut a = Mat::<C64>::zeros(n, n);
    for k in 0..n {
        a[(k, k)] = -m.gamma * k as f64;
        if k + 1 < n {
            a[(k, k + 1)] = up(k);
            a[(k + 1, k)] = down(k + 1);
        }
    }
    if terminated {
        a[(depth, depth)] += up(depth) * down(depth + 1) / (m.gamma * (depth + 1) as f64);
    }
    dense_eigenvalues(a.as_ref()).unwrap()
}
