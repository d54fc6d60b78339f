//! Sparse superoperators on column-stacked density matrices.
//!
//! The element `ρ[a, b]` of a `d × d` matrix sits at index `a + b·d` of
//! `vec(ρ)`. Generators are stored column-wise: column `j` lists the
//! nonzero images of the elementary matrix with index `j`.
//!
//! Composite models have `d²` far beyond what a dense matrix can hold, but
//! their generators are sparse and conserve local excitation charges, so
//! the subspace reachable from the diagonal is small. [`Superoperator::closure`]
//! finds that invariant subspace and [`Superoperator::restrict`] builds the
//! generator on it.

use std::collections::{BTreeMap, VecDeque};

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::{CMatrix, HilbertLayout};

/// Largest `d²` for which [`Superoperator::to_dense`] is allowed.
pub const DENSE_LIMIT: usize = 4096;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone)]
pub struct Superoperator {
    layout: HilbertLayout,
    d: usize,
    cols: Vec<Vec<(u32, Complex64)>>,
}

/// Nonzero entries `(row, col, value)` of a dense matrix.
pub(crate) fn nonzeros(m: &CMatrix) -> Vec<(usize, usize, Complex64)> {
    let mut out = Vec::new();
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            let v = m[(r, c)];
            if v != Complex64::new(0.0, 0.0) {
                out.push((r, c, v));
            }
        }
    }
    out
}

/// Accumulates generator terms; duplicate entries are summed in [`finish`](Self::finish).
pub struct SuperoperatorBuilder {
    layout: HilbertLayout,
    d: usize,
    cols: Vec<Vec<(u32, Complex64)>>,
}

impl SuperoperatorBuilder {
    pub fn new(layout: HilbertLayout) -> Self {
        let d = layout.total_dim();
        Self { layout, d, cols: vec![Vec::new(); d * d] }
    }

    fn idx(&self, a: usize, b: usize) -> usize {
        a + b * self.d
    }

    fn push(&mut self, row: usize, col: usize, v: Complex64) {
        self.cols[col].push((row as u32, v));
    }

    fn check(&self, m: &CMatrix) -> Result<()> {
        if m.nrows() != self.d || m.ncols() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, actual: m.nrows() });
        }
        Ok(())
    }

    /// `−i[H, ρ]`.
    pub fn hamiltonian(&mut self, h: &CMatrix) -> Result<&mut Self> {
        self.check(h)?;
        let d = self.d;
        for (a, c, v) in nonzeros(h) {
            // (Hρ)[a,b] = Σ_c H[a,c] ρ[c,b]
            // (ρH)[c',b'] with H[a,c] as H[c',b']: (ρH)[x,c] += ρ[x,a] H[a,c]
            for b in 0..d {
                let (row, col) = (self.idx(a, b), self.idx(c, b));
                self.push(row, col, -I * v);
                let (row, col) = (self.idx(b, c), self.idx(b, a));
                self.push(row, col, I * v);
            }
        }
        Ok(self)
    }

    /// `κ (AρA† − ½{A†A, ρ})`.
    pub fn dissipator(&mut self, jump: &CMatrix, kappa: f64) -> Result<&mut Self> {
        self.check(jump)?;
        self.sparse_dissipator(&nonzeros(jump), kappa)
    }

    /// As [`dissipator`](Self::dissipator), with the jump given by its
    /// nonzero entries `(row, col, value)`.
    pub fn sparse_dissipator(&mut self, jump: &[(usize, usize, Complex64)], kappa: f64) -> Result<&mut Self> {
        if let Some(&(r, c, _)) = jump.iter().find(|&&(r, c, _)| r >= self.d || c >= self.d) {
            return Err(Error::DimensionMismatch { expected: self.d, actual: r.max(c) + 1 });
        }
        if kappa == 0.0 {
            return Ok(self);
        }
        let k = Complex64::new(kappa, 0.0);
        for &(a, c, x) in jump {
            for &(b, e, y) in jump {
                let (row, col) = (self.idx(a, b), self.idx(c, e));
                self.push(row, col, k * x * y.conj());
            }
        }
        // (A†A)[c, e] = Σ_a conj(A[a, c]) A[a, e]
        let mut ada: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for &(a, c, x) in jump {
            for &(a2, e, y) in jump {
                if a == a2 {
                    *ada.entry((c, e)).or_default() += x.conj() * y;
                }
            }
        }
        let half = k * 0.5;
        let d = self.d;
        for ((a, c), v) in ada {
            for b in 0..d {
                let (row, col) = (self.idx(a, b), self.idx(c, b));
                self.push(row, col, -half * v);
                let (row, col) = (self.idx(b, c), self.idx(b, a));
                self.push(row, col, -half * v);
            }
        }
        Ok(self)
    }

    /// `Q (τ ⊗ Tr_s[ρ] − ρ)` for subsystem `s`, with `τ` given on that subsystem.
    pub fn reset(&mut self, subsystem: usize, rate: f64, tau: &CMatrix) -> Result<&mut Self> {
        self.layout.check_index(subsystem)?;
        let ds = self.layout.dims()[subsystem];
        if tau.nrows() != ds || tau.ncols() != ds {
            return Err(Error::DimensionMismatch { expected: ds, actual: tau.nrows() });
        }
        if rate == 0.0 {
            return Ok(self);
        }
        let q = Complex64::new(rate, 0.0);
        let stride = self.layout.stride(subsystem);
        let tau_nz = nonzeros(tau);
        let d = self.d;
        for b in 0..d {
            let zb = (b / stride) % ds;
            for a in 0..d {
                let col = self.idx(a, b);
                self.push(col, col, -q);
                let za = (a / stride) % ds;
                if za != zb {
                    continue;
                }
                let a0 = a - za * stride;
                let b0 = b - zb * stride;
                for &(x, xp, t) in &tau_nz {
                    let row = self.idx(a0 + x * stride, b0 + xp * stride);
                    self.push(row, col, q * t);
                }
            }
        }
        Ok(self)
    }

    pub fn finish(self) -> Superoperator {
        let cols = self
            .cols
            .into_iter()
            .map(|mut col| {
                col.sort_unstable_by_key(|&(r, _)| r);
                let mut merged: Vec<(u32, Complex64)> = Vec::with_capacity(col.len());
                for (r, v) in col {
                    match merged.last_mut() {
                        Some((lr, lv)) if *lr == r => *lv += v,
                        _ => merged.push((r, v)),
                    }
                }
                merged.retain(|&(_, v)| v.norm() > 1e-300);
                merged
            })
            .collect();
        Superoperator { layout: self.layout, d: self.d, cols }
    }
}

impl Superoperator {
    pub fn layout(&self) -> &HilbertLayout {
        &self.layout
    }

    /// Hilbert-space dimension `d`; the superoperator acts on `d²` vectors.
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    pub fn vec_index(&self, a: usize, b: usize) -> usize {
        a + b * self.d
    }

    /// `L(ρ)` for a full `d × d` matrix.
    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        if rho.nrows() != self.d || rho.ncols() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, actual: rho.nrows() });
        }
        let mut out = CMatrix::zeros(self.d, self.d);
        // column-major storage of nalgebra matches column stacking
        let src = rho.as_slice();
        let dst = out.as_mut_slice();
        for (j, col) in self.cols.iter().enumerate() {
            let x = src[j];
            if x == Complex64::new(0.0, 0.0) {
                continue;
            }
            for &(r, v) in col {
                dst[r as usize] += v * x;
            }
        }
        Ok(out)
    }

    /// Euclidean norm of `vec(I)† L`; zero for trace-preserving generators.
    pub fn trace_defect(&self) -> f64 {
        let diag_stride = self.d + 1;
        self.cols
            .iter()
            .map(|col| {
                col.iter()
                    .filter(|(r, _)| (*r as usize).is_multiple_of(diag_stride))
                    .map(|&(_, v)| v)
                    .sum::<Complex64>()
                    .norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Dense `d² × d²` matrix; refused beyond [`DENSE_LIMIT`].
    pub fn to_dense(&self) -> Result<CMatrix> {
        let n = self.d * self.d;
        if n > DENSE_LIMIT {
            return Err(Error::DimensionTooLarge { dim: n, limit: DENSE_LIMIT });
        }
        let mut m = CMatrix::zeros(n, n);
        for (j, col) in self.cols.iter().enumerate() {
            for &(r, v) in col {
                m[(r as usize, j)] += v;
            }
        }
        Ok(m)
    }

    /// Indices of the diagonal elements `ρ[a, a]`.
    pub fn diagonal_indices(&self) -> Vec<usize> {
        (0..self.d).map(|a| a * (self.d + 1)).collect()
    }

    /// Smallest index set containing `seed` that the generator maps into itself.
    pub fn closure(&self, seed: &[usize]) -> Vec<usize> {
        let n = self.d * self.d;
        let mut seen = vec![false; n];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &s in seed {
            if !seen[s] {
                seen[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(j) = queue.pop_front() {
            for &(r, _) in &self.cols[j] {
                let r = r as usize;
                if !seen[r] {
                    seen[r] = true;
                    queue.push_back(r);
                }
            }
        }
        (0..n).filter(|&i| seen[i]).collect()
    }

    /// Generator restricted to an invariant index set (see [`closure`](Self::closure)).
    pub fn restrict(&self, support: &[usize]) -> Result<ReducedGenerator> {
        let n = self.d * self.d;
        let mut local = vec![u32::MAX; n];
        for (i, &g) in support.iter().enumerate() {
            local[g] = i as u32;
        }
        // transpose CSC (global) into CSR (local)
        let m = support.len();
        let mut rows: Vec<Vec<(u32, Complex64)>> = vec![Vec::new(); m];
        for (jl, &jg) in support.iter().enumerate() {
            for &(r, v) in &self.cols[jg] {
                let rl = local[r as usize];
                if rl == u32::MAX {
                    return Err(Error::InvalidState(format!(
                        "support is not invariant: element {r} reached from {jg}"
                    )));
                }
                rows[rl as usize].push((jl as u32, v));
            }
        }
        let mut row_ptr = Vec::with_capacity(m + 1);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (c, v) in row {
                col_idx.push(c);
                vals.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(ReducedGenerator { d: self.d, support: support.to_vec(), row_ptr, col_idx, vals })
    }
}

/// A generator restricted to an invariant set of matrix elements, in CSR form.
#[derive(Debug, Clone)]
pub struct ReducedGenerator {
    d: usize,
    support: Vec<usize>,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    vals: Vec<Complex64>,
}

impl ReducedGenerator {
    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn matvec(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.col_idx[k] as usize];
            }
            *yi = acc;
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        let m = self.len();
        let mut out = CMatrix::zeros(m, m);
        for i in 0..m {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out[(i, self.col_idx[k] as usize)] += self.vals[k];
            }
        }
        out
    }

    /// Gathers the supported elements of `rho`.
    pub fn gather(&self, rho: &CMatrix) -> DVector<Complex64> {
        let s = rho.as_slice();
        DVector::from_iterator(self.len(), self.support.iter().map(|&g| s[g]))
    }

    /// Scatters a reduced vector back into a full `d × d` matrix.
    pub fn scatter(&self, x: &[Complex64]) -> CMatrix {
        let mut out = CMatrix::zeros(self.d, self.d);
        let s = out.as_mut_slice();
        for (&g, &v) in self.support.iter().zip(x) {
            s[g] = v;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{sigma_minus, HilbertLayout};
    use approx::assert_abs_diff_eq;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn random_matrix(d: usize, seed: u64) -> CMatrix {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        CMatrix::from_fn(d, d, |_, _| Complex64::new(next(), next()))
    }

    #[test]
    fn hamiltonian_matches_commutator() {
        let layout = HilbertLayout::new(vec![3], 0).unwrap();
        let h0 = random_matrix(3, 1);
        let h = &h0 + h0.adjoint();
        let mut b = SuperoperatorBuilder::new(layout);
        b.hamiltonian(&h).unwrap();
        let l = b.finish();
        let rho = random_matrix(3, 2);
        let direct = (&h * &rho - &rho * &h) * (-I);
        let got = l.apply(&rho).unwrap();
        assert_abs_diff_eq!((got - direct).norm(), 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(l.trace_defect(), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn dissipator_matches_formula() {
        let layout = HilbertLayout::new(vec![2], 0).unwrap();
        let a = sigma_minus();
        let mut b = SuperoperatorBuilder::new(layout);
        b.dissipator(&a, 0.7).unwrap();
        let l = b.finish();
        let rho = random_matrix(2, 3);
        let ad = a.adjoint();
        let ada = &ad * &a;
        let direct = (&a * &rho * &ad - (&ada * &rho + &rho * &ada) * c(0.5)) * c(0.7);
        assert_abs_diff_eq!((l.apply(&rho).unwrap() - direct).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(l.trace_defect(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn reset_matches_partial_trace_formula() {
        let layout = HilbertLayout::new(vec![3, 2, 2], 0).unwrap();
        let tau = CMatrix::from_diagonal(&DVector::from_vec(vec![c(0.7), c(0.3)]));
        let mut b = SuperoperatorBuilder::new(layout.clone());
        b.reset(1, 2.0, &tau).unwrap();
        let l = b.finish();
        let rho = random_matrix(12, 4);
        // reference: reorder so subsystem 1 is explicit
        let mut expect = CMatrix::zeros(12, 12);
        for a in 0..12 {
            for bb in 0..12 {
                let (ta, za, ua) = (a / 4, (a / 2) % 2, a % 2);
                let (tb, zb, ub) = (bb / 4, (bb / 2) % 2, bb % 2);
                let mut reduced = c(0.0);
                for z in 0..2 {
                    reduced += rho[(ta * 4 + z * 2 + ua, tb * 4 + z * 2 + ub)];
                }
                expect[(a, bb)] = tau[(za, zb)] * reduced - rho[(a, bb)];
            }
        }
        expect *= c(2.0);
        assert_abs_diff_eq!((l.apply(&rho).unwrap() - expect).norm(), 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(l.trace_defect(), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn closure_and_restriction_roundtrip() {
        let layout = HilbertLayout::new(vec![2], 0).unwrap();
        let mut b = SuperoperatorBuilder::new(layout);
        b.dissipator(&sigma_minus(), 1.0).unwrap();
        let l = b.finish();
        let support = l.closure(&l.diagonal_indices());
        assert_eq!(support, vec![0, 3]);
        let red = l.restrict(&support).unwrap();
        let dense = red.to_dense();
        assert_abs_diff_eq!(dense[(0, 1)].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dense[(1, 1)].re, -1.0, epsilon = 1e-15);
        // |1⟩⟨1| decays into |0⟩⟨0|, so {|1⟩⟨1|} alone is not invariant
        assert!(l.restrict(&[3]).is_err());
    }
}
