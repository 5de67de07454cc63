//! Block assembly of the hierarchy Liouvillian and its truncations.

use faer::Mat;

use crate::error::{HeomError, Result};
use crate::hierarchy::{boundary_set, build_truncation_capped, gamma_n_unchecked, HeomModel, MultiIndex, Truncation, DEFAULT_SIZE_CAP};
use crate::linalg::{self, C64};
use crate::superop::{commutator_superop, left_mult_superop, right_mult_superop, DiagonalBlockSolver, Superoperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TruncationKind {
    Naive,
    SchurTerminated,
}

impl TruncationKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Naive => "naive",
            Self::SchurTerminated => "schur",
        }
    }
}

/// Precomputed superoperators of one model.
#[derive(Clone, Debug)]
pub struct BlockBuilder {
    dim: usize,
    gammas: Vec<C64>,
    minus_i_comm_h: Superoperator,
    /// `c_j [q_j, ·]` per mode.
    up: Vec<Superoperator>,
    /// `c'_j q_j · + c''_j · q_j` per mode.
    down: Vec<Superoperator>,
}

impl BlockBuilder {
    pub fn new(model: &HeomModel) -> Self {
        let i = C64::new(0.0, 1.0);
        let up = model.modes.iter().map(|m| commutator_superop(&m.q).scale(m.c)).collect();
        let down = model
            .modes
            .iter()
            .map(|m| &left_mult_superop(&m.q).scale(m.c_prime) + &right_mult_superop(&m.q).scale(m.c_dblprime))
            .collect();
        Self {
            dim: model.dim(),
            gammas: model.modes.iter().map(|m| m.gamma).collect(),
            minus_i_comm_h: commutator_superop(&model.hamiltonian).scale(-i),
            up,
            down,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn gamma_n(&self, n: &MultiIndex) -> C64 {
        n.0.iter().zip(&self.gammas).map(|(&k, g)| g * k as f64).sum()
    }

    pub fn diagonal(&self, n: &MultiIndex) -> Superoperator {
        let g = self.gamma_n(n);
        let mut m = self.minus_i_comm_h.clone().into_mat();
        for k in 0..m.nrows() {
            m[(k, k)] -= g;
        }
        Superoperator::from_mat(self.dim, m).expect("finite block")
    }

    /// Block `(n, m)` of the full Liouvillian, `None` when structurally zero.
    pub fn block(&self, n: &MultiIndex, m: &MultiIndex) -> Option<Superoperator> {
        if n == m {
            return Some(self.diagonal(n));
        }
        let (j, diff) = n.step_to(m)?;
        if diff == 1 {
            Some(self.up[j].scale(C64::new((n.0[j] as f64 + 1.0).sqrt(), 0.0)))
        } else {
            Some(self.down[j].scale(C64::new((n.0[j] as f64).sqrt(), 0.0)))
        }
    }
}

/// Block `(n, m)` of the hierarchy Liouvillian.
pub fn block(model: &HeomModel, n: &MultiIndex, m: &MultiIndex) -> Result<Option<Superoperator>> {
    let len = model.n_modes();
    if n.len() != len || m.len() != len {
        return Err(HeomError::DimMismatch { expected: len, got: if n.len() != len { n.len() } else { m.len() } });
    }
    Ok(BlockBuilder::new(model).block(n, m))
}

fn write_block(target: &mut Mat<C64>, row: usize, col: usize, b: &Superoperator, sign: f64) {
    let src = b.mat();
    let dd = src.nrows();
    for j in 0..dd {
        for i in 0..dd {
            target[(row * dd + i, col * dd + j)] += src[(i, j)] * sign;
        }
    }
}

/// Dense matrix of the Liouvillian restricted to `rows × cols`.
pub fn assemble_blocks(builder: &BlockBuilder, rows: &[MultiIndex], cols: &[MultiIndex]) -> Mat<C64> {
    let dd = builder.dim() * builder.dim();
    let mut out = linalg::zeros(rows.len() * dd, cols.len() * dd);
    let col_pos: std::collections::HashMap<&MultiIndex, usize> = cols.iter().enumerate().map(|(i, n)| (n, i)).collect();
    for (r, n) in rows.iter().enumerate() {
        let mut neighbours = vec![n.clone()];
        for j in 0..n.len() {
            neighbours.push(n.raised(j));
            if let Some(l) = n.lowered(j) {
                neighbours.push(l);
            }
        }
        for m in neighbours {
            if let Some(&c) = col_pos.get(&m) {
                if let Some(b) = builder.block(n, &m) {
                    write_block(&mut out, r, c, &b, 1.0);
                }
            }
        }
    }
    out
}

/// A dense truncated Liouvillian with its block layout.
#[derive(Clone, Debug)]
pub struct TruncatedLiouvillian {
    pub truncation: Truncation,
    pub dim: usize,
    pub kind: TruncationKind,
    pub matrix: Mat<C64>,
}

impl TruncatedLiouvillian {
    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn block(&self, row: usize, col: usize) -> Mat<C64> {
        let dd = self.dim * self.dim;
        self.matrix.as_ref().submatrix(row * dd, col * dd, dd, dd).to_owned()
    }

    pub fn norm(&self) -> f64 {
        linalg::frobenius(self.matrix.as_ref())
    }
}

/// `L_TT`: the Liouvillian restricted to T × T.
pub fn assemble_naive(model: &HeomModel, trunc: &Truncation) -> TruncatedLiouvillian {
    let builder = BlockBuilder::new(model);
    let matrix = assemble_blocks(&builder, trunc.indices(), trunc.indices());
    TruncatedLiouvillian { truncation: trunc.clone(), dim: model.dim(), kind: TruncationKind::Naive, matrix }
}

/// One terminator contribution `L_{n,k} L_kk^{-1} L_{k,m}` for a boundary index k.
#[derive(Clone, Debug)]
pub struct TerminatorTerm {
    pub row: usize,
    pub col: usize,
    pub block: Superoperator,
}

/// All terminator corrections `L_TJ (L'_JJ)^{-1} L_JT`, per block.
pub fn terminator_terms(model: &HeomModel, trunc: &Truncation) -> Result<Vec<TerminatorTerm>> {
    let builder = BlockBuilder::new(model);
    let solver = DiagonalBlockSolver::new(&model.hamiltonian)?;
    let mut out = Vec::new();
    for k in boundary_set(model, trunc) {
        let kinv = solver.inverse_superop(gamma_n_unchecked(model, &k))?;
        let sources: Vec<(usize, MultiIndex)> = (0..k.len())
            .filter_map(|j| k.lowered(j))
            .filter_map(|m| trunc.position(&m).map(|p| (p, m)))
            .collect();
        let right: Vec<Superoperator> = sources
            .iter()
            .map(|(_, m)| kinv.compose(&builder.block(&k, m).expect("down-coupling block")))
            .collect();
        for (rp, n) in &sources {
            let left = builder.block(n, &k).expect("up-coupling block");
            for ((cp, _), r) in sources.iter().zip(&right) {
                out.push(TerminatorTerm { row: *rp, col: *cp, block: left.compose(r) });
            }
        }
    }
    Ok(out)
}

/// `L_T = L_TT - L_TJ (L'_JJ)^{-1} L_JT`.
pub fn assemble_schur_terminated(model: &HeomModel, trunc: &Truncation) -> Result<TruncatedLiouvillian> {
    let mut l = assemble_naive(model, trunc);
    for t in terminator_terms(model, trunc)? {
        write_block(&mut l.matrix, t.row, t.col, &t.block, -1.0);
    }
    l.kind = TruncationKind::SchurTerminated;
    Ok(l)
}

pub fn assemble(model: &HeomModel, trunc: &Truncation, kind: TruncationKind) -> Result<TruncatedLiouvillian> {
    match kind {
        TruncationKind::Naive => Ok(assemble_naive(model, trunc)),
        TruncationKind::SchurTerminated => assemble_schur_terminated(model, trunc),
    }
}

/// Vectorized trace on block 0, zero elsewhere.
pub fn left_trace_vector(trunc: &Truncation, d: usize) -> Vec<C64> {
    let dd = d * d;
    let mut v = vec![C64::new(0.0, 0.0); trunc.len() * dd];
    let zero = trunc.position(&MultiIndex::zero(trunc.n_modes())).expect("truncation contains 0");
    for i in 0..d {
        v[zero * dd + i * d + i] = C64::new(1.0, 0.0);
    }
    v
}

/// Principal sub-block of the Liouvillian on a finite set of tail indices.
#[derive(Clone, Debug)]
pub struct TailWindow {
    pub indices: Vec<MultiIndex>,
    pub dim: usize,
    pub diagonal_only: bool,
    pub matrix: Mat<C64>,
}

impl TailWindow {
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// `W = {n ∉ T : Re γ_n ≤ γ* + extra_depth}` and `L_WW` (or its block diagonal).
pub fn assemble_tail_window(model: &HeomModel, trunc: &Truncation, extra_depth: f64, diagonal_only: bool) -> Result<TailWindow> {
    let gamma_star = trunc.gamma_star().ok_or(crate::error::HeomError::NotThreshold)?;
    let indices = window_indices(model, trunc, gamma_star + extra_depth.max(0.0))?;
    let builder = BlockBuilder::new(model);
    let matrix = if diagonal_only {
        let dd = builder.dim() * builder.dim();
        let mut m = linalg::zeros(indices.len() * dd, indices.len() * dd);
        for (p, n) in indices.iter().enumerate() {
            write_block(&mut m, p, p, &builder.diagonal(n), 1.0);
        }
        m
    } else {
        assemble_blocks(&builder, &indices, &indices)
    };
    Ok(TailWindow { indices, dim: model.dim(), diagonal_only, matrix })
}

pub(crate) fn window_indices(model: &HeomModel, trunc: &Truncation, depth: f64) -> Result<Vec<MultiIndex>> {
    let outer = build_truncation_capped(model, depth, DEFAULT_SIZE_CAP)?;
    Ok(outer.indices().iter().filter(|n| !trunc.contains(n)).cloned().collect())
}
