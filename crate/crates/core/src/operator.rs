//! Dense complex operators on composite Hilbert spaces.
//!
//! Basis states of a composite space are ordered lexicographically with the
//! first subsystem most significant, so the Kronecker product `A ⊗ B` acts
//! on `|i⟩_A |j⟩_B` at index `i * dim(B) + j`. Composite models always put
//! the target first, followed by machine qubits in declaration order.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Largest composite dimension accepted by default.
pub const DEFAULT_DIM_LIMIT: usize = 1024;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-10;
const POSITIVITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HilbertLayout {
    dims: Vec<usize>,
    target_index: usize,
}

impl HilbertLayout {
    pub fn new(dims: Vec<usize>, target_index: usize) -> Result<Self> {
        Self::with_limit(dims, target_index, DEFAULT_DIM_LIMIT)
    }

    pub fn with_limit(dims: Vec<usize>, target_index: usize, limit: usize) -> Result<Self> {
        if let Some(&d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidLayout(format!("subsystem dimension {d} < 2")));
        }
        if !dims.is_empty() && target_index >= dims.len() {
            return Err(Error::SubsystemOutOfRange { index: target_index, count: dims.len() });
        }
        let total = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::InvalidLayout("dimension overflow".into()))?;
        if total > limit {
            return Err(Error::DimensionTooLarge { dim: total, limit });
        }
        Ok(Self { dims, target_index })
    }

    /// A single subsystem of dimension `dim`.
    pub fn single(dim: usize) -> Result<Self> {
        Self::new(vec![dim], 0)
    }

    /// The trivial one-dimensional layout left after tracing out everything.
    pub fn scalar() -> Self {
        Self { dims: Vec::new(), target_index: 0 }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn target_index(&self) -> usize {
        self.target_index
    }

    pub fn num_subsystems(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Product of the dimensions after subsystem `index`.
    pub fn stride(&self, index: usize) -> usize {
        self.dims[index + 1..].iter().product()
    }

    pub fn check_index(&self, index: usize) -> Result<()> {
        if index >= self.dims.len() {
            return Err(Error::SubsystemOutOfRange { index, count: self.dims.len() });
        }
        Ok(())
    }

    /// Digit of subsystem `index` in the composite basis label `state`.
    pub fn digit(&self, state: usize, index: usize) -> usize {
        (state / self.stride(index)) % self.dims[index]
    }

    fn concat(layouts: &[&HilbertLayout]) -> Result<Self> {
        let dims: Vec<usize> = layouts.iter().flat_map(|l| l.dims.iter().copied()).collect();
        let target = layouts.first().map_or(0, |l| l.target_index);
        Self::new(dims, target)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    matrix: CMatrix,
    layout: HilbertLayout,
}

impl Operator {
    pub fn new(matrix: CMatrix, layout: HilbertLayout) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare { rows: matrix.nrows(), cols: matrix.ncols() });
        }
        if matrix.nrows() != layout.total_dim() {
            return Err(Error::DimensionMismatch { expected: layout.total_dim(), actual: matrix.nrows() });
        }
        Ok(Self { matrix, layout })
    }

    /// Wraps a square matrix as an operator on a single subsystem.
    pub fn single(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare { rows: matrix.nrows(), cols: matrix.ncols() });
        }
        let layout = HilbertLayout::single(matrix.nrows())?;
        Self::new(matrix, layout)
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self> {
        let m = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            diag.len(),
            diag.iter().map(|&x| Complex64::new(x, 0.0)),
        ));
        Self::single(m)
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::single(CMatrix::identity(dim, dim))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn layout(&self) -> &HilbertLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn adjoint(&self) -> Self {
        Self { matrix: self.matrix.adjoint(), layout: self.layout.clone() }
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        max_abs_diff(&self.matrix, &self.matrix.adjoint())
    }
}

pub(crate) fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Raising operator `|1⟩⟨0|` on a qubit.
pub fn sigma_plus() -> CMatrix {
    let mut m = CMatrix::zeros(2, 2);
    m[(1, 0)] = Complex64::new(1.0, 0.0);
    m
}

/// Lowering operator `|0⟩⟨1|` on a qubit.
pub fn sigma_minus() -> CMatrix {
    sigma_plus().transpose()
}

/// `|row⟩⟨col|` on a `dim`-dimensional space.
pub fn ket_bra(dim: usize, row: usize, col: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    m[(row, col)] = Complex64::new(1.0, 0.0);
    m
}

/// Places `local` on subsystem `index` and identities elsewhere.
pub fn embed(local: &CMatrix, index: usize, layout: &HilbertLayout) -> Result<Operator> {
    layout.check_index(index)?;
    if local.nrows() != layout.dims()[index] || !local.is_square() {
        return Err(Error::DimensionMismatch { expected: layout.dims()[index], actual: local.nrows() });
    }
    let left: usize = layout.dims()[..index].iter().product();
    let right = layout.stride(index);
    let m = CMatrix::identity(left, left).kronecker(local).kronecker(&CMatrix::identity(right, right));
    Operator::new(m, layout.clone())
}

/// Kronecker product of the operands in order; layouts are concatenated.
pub fn tensor_product(ops: &[Operator]) -> Result<Operator> {
    let (first, rest) = ops.split_first().ok_or(Error::NoOperands)?;
    let layouts: Vec<&HilbertLayout> = ops.iter().map(|o| &o.layout).collect();
    let layout = HilbertLayout::concat(&layouts)?;
    let matrix = rest.iter().fold(first.matrix.clone(), |acc, op| acc.kronecker(&op.matrix));
    Operator::new(matrix, layout)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    op: Operator,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace, and positivity.
    pub fn new(op: Operator) -> Result<Self> {
        let herm = op.hermiticity_defect();
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (defect {herm:e})")));
        }
        let tr = op.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        let min = min_eigenvalue(op.matrix());
        if min < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { op })
    }

    /// Symmetrises `(ρ + ρ†)/2` and rescales to unit trace without a positivity check.
    pub fn from_unnormalised(matrix: CMatrix, layout: HilbertLayout) -> Result<Self> {
        let herm = (&matrix + matrix.adjoint()) * Complex64::new(0.5, 0.0);
        let tr = herm.trace().re;
        if !(tr.is_finite() && tr.abs() > f64::MIN_POSITIVE) {
            return Err(Error::InvalidState(format!("cannot normalise trace {tr}")));
        }
        let op = Operator::new(herm.unscale(tr), layout)?;
        Ok(Self { op })
    }

    /// Hermitian part `(ρ + ρ†)/2` with no trace or positivity check; used
    /// for the output of dynamics, whose trace drift is controlled elsewhere.
    pub(crate) fn from_hermitian_part(matrix: CMatrix, layout: HilbertLayout) -> Result<Self> {
        let herm = (&matrix + matrix.adjoint()) * Complex64::new(0.5, 0.0);
        Ok(Self { op: Operator::new(herm, layout)? })
    }

    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        Self::new(Operator::from_real_diagonal(probs)?)
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn matrix(&self) -> &CMatrix {
        self.op.matrix()
    }

    pub fn layout(&self) -> &HilbertLayout {
        self.op.layout()
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    /// Real parts of the diagonal.
    pub fn populations(&self) -> Vec<f64> {
        self.matrix().diagonal().iter().map(|z| z.re).collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(self.matrix())
    }

    pub fn purity(&self) -> f64 {
        (self.matrix() * self.matrix()).trace().re
    }

    /// Half the trace norm of the difference.
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        let diff = self.matrix() - other.matrix();
        0.5 * diff.symmetric_eigenvalues().iter().map(|x| x.abs()).sum::<f64>()
    }
}

fn min_eigenvalue(m: &CMatrix) -> f64 {
    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    herm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Reduced state on the subsystems in `keep`, ordered as in the full layout.
/// An empty `keep` yields the 1x1 matrix holding the trace.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let op = partial_trace_op(rho.operator(), keep)?;
    Ok(DensityMatrix { op })
}

pub fn partial_trace_op(op: &Operator, keep: &[usize]) -> Result<Operator> {
    let layout = op.layout();
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    for &k in &kept {
        layout.check_index(k)?;
    }
    let n = layout.num_subsystems();
    let traced: Vec<usize> = (0..n).filter(|i| !kept.contains(i)).collect();
    let kept_dims: Vec<usize> = kept.iter().map(|&i| layout.dims()[i]).collect();
    let reduced_dim: usize = kept_dims.iter().product();
    let target = kept.iter().position(|&i| i == layout.target_index()).unwrap_or(0);
    let reduced_layout =
        if kept.is_empty() { HilbertLayout::scalar() } else { HilbertLayout::new(kept_dims.clone(), target)? };

    let d = layout.total_dim();
    let reduced_index =
        |state: usize| -> usize { kept.iter().fold(0, |acc, &i| acc * layout.dims()[i] + layout.digit(state, i)) };
    let traced_index =
        |state: usize| -> usize { traced.iter().fold(0, |acc, &i| acc * layout.dims()[i] + layout.digit(state, i)) };
    let red: Vec<usize> = (0..d).map(reduced_index).collect();
    let env: Vec<usize> = (0..d).map(traced_index).collect();

    let m = op.matrix();
    let mut out = CMatrix::zeros(reduced_dim, reduced_dim);
    for b in 0..d {
        for a in 0..d {
            if env[a] == env[b] {
                out[(red[a], red[b])] += m[(a, b)];
            }
        }
    }
    Operator::new(out, reduced_layout)
}

/// Ground/excited populations of a two-level system; always sum to one.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PopPair {
    pub ground: f64,
    pub excited: f64,
}

impl PopPair {
    /// Builds the pair from the excited population, with ground = 1 − excited.
    pub fn from_excited(excited: f64) -> Self {
        Self { ground: 1.0 - excited, excited }
    }

    pub fn from_ground(ground: f64) -> Self {
        Self { ground, excited: 1.0 - ground }
    }
}

/// `ln(1 + e^x)` without overflow.
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Natural logs of the thermal (ground, excited) populations.
///
/// `temperature` may be `±∞` or `±0.0`; a signed zero selects the one-sided
/// limit (`+0.0` pins the ground state, `-0.0` the excited state).
pub fn thermal_log_populations(gap: f64, temperature: f64) -> Result<(f64, f64)> {
    if !(gap > 0.0) {
        return Err(Error::NonPositiveGap(gap));
    }
    let x = if temperature.is_infinite() {
        0.0
    } else if temperature == 0.0 {
        if temperature.is_sign_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    } else {
        gap / temperature
    };
    if x.is_nan() {
        return Err(Error::InvalidState(format!("temperature {temperature} is not a number")));
    }
    Ok((-softplus(-x), -softplus(x)))
}

/// Thermal populations of a two-level system with energy gap `gap`.
pub fn thermal_populations(gap: f64, temperature: f64) -> Result<PopPair> {
    let (_, ln_e) = thermal_log_populations(gap, temperature)?;
    Ok(PopPair::from_excited(ln_e.exp()))
}

/// Gibbs state of the level energies at `temperature` (finite, nonzero).
pub fn gibbs_populations(energies: &[f64], temperature: f64) -> Vec<f64> {
    let e0 = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = energies.iter().map(|&e| (-(e - e0) / temperature).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

/// Two-level thermal state `diag(ground, excited)`.
pub fn thermal_qubit_state(gap: f64, temperature: f64) -> Result<DensityMatrix> {
    let p = thermal_populations(gap, temperature)?;
    DensityMatrix::diagonal(&[p.ground, p.excited])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn identity_tensor() {
        let i6 = tensor_product(&[Operator::identity(2).unwrap(), Operator::identity(3).unwrap()]).unwrap();
        assert_eq!(i6.matrix(), &CMatrix::identity(6, 6));
        assert_eq!(i6.layout().dims(), &[2, 3]);
    }

    #[test]
    fn raising_lowering_tensor() {
        let sp = Operator::single(sigma_plus()).unwrap();
        let sm = Operator::single(sigma_minus()).unwrap();
        let t = tensor_product(&[sp, sm]).unwrap();
        // |10⟩ = index 2, |01⟩ = index 1
        for r in 0..4 {
            for col in 0..4 {
                let expect = if (r, col) == (2, 1) { 1.0 } else { 0.0 };
                assert_eq!(t.matrix()[(r, col)], c(expect));
            }
        }
    }

    #[test]
    fn diagonal_tensor() {
        let a = Operator::from_real_diagonal(&[1.0, 0.0]).unwrap();
        let b = Operator::from_real_diagonal(&[0.6, 0.4]).unwrap();
        let t = tensor_product(&[a, b]).unwrap();
        let d: Vec<f64> = t.matrix().diagonal().iter().map(|z| z.re).collect();
        assert_eq!(d, vec![0.6, 0.4, 0.0, 0.0]);
    }

    #[test]
    fn empty_tensor_errors() {
        assert_eq!(tensor_product(&[]), Err(Error::NoOperands));
    }

    #[test]
    fn bell_state_reduces_to_maximally_mixed() {
        let mut m = CMatrix::zeros(4, 4);
        for &(r, col) in &[(0, 0), (0, 3), (3, 0), (3, 3)] {
            m[(r, col)] = c(0.5);
        }
        let rho = DensityMatrix::new(Operator::new(m, HilbertLayout::new(vec![2, 2], 0).unwrap()).unwrap()).unwrap();
        let red = partial_trace(&rho, &[0]).unwrap();
        assert_abs_diff_eq!(red.matrix()[(0, 0)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(red.matrix()[(1, 1)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(red.matrix()[(0, 1)].norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn empty_keep_gives_scalar_trace() {
        let rho = DensityMatrix::diagonal(&[0.3, 0.7]).unwrap();
        let red = partial_trace(&rho, &[]).unwrap();
        assert_eq!(red.dim(), 1);
        assert_abs_diff_eq!(red.matrix()[(0, 0)].re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn partial_trace_rejects_bad_index() {
        let rho = DensityMatrix::diagonal(&[0.3, 0.7]).unwrap();
        assert!(matches!(partial_trace(&rho, &[1]), Err(Error::SubsystemOutOfRange { .. })));
    }

    #[test]
    fn thermal_limits() {
        let p = thermal_populations(2.0, f64::INFINITY).unwrap();
        assert_eq!((p.ground, p.excited), (0.5, 0.5));
        let p = thermal_populations(2.0, 0.0).unwrap();
        assert_eq!((p.ground, p.excited), (1.0, 0.0));
        let p = thermal_populations(2.0, -0.0).unwrap();
        assert_eq!((p.ground, p.excited), (0.0, 1.0));
    }

    #[test]
    fn thermal_boltzmann_value() {
        let r: f64 = (-2.0f64 / 1.2).exp();
        let expect_e = r / (1.0 + r);
        let p = thermal_populations(2.0, 1.2).unwrap();
        assert_abs_diff_eq!(p.excited, expect_e, epsilon = 1e-15);
        assert_abs_diff_eq!(p.ground, 0.841131, epsilon = 1e-6);
        assert_abs_diff_eq!(p.excited, 0.158869, epsilon = 1e-6);
    }

    #[test]
    fn negative_temperature_inverts() {
        let p = thermal_populations(2.0, -3.0).unwrap();
        assert!(p.excited > p.ground);
        assert_abs_diff_eq!(p.excited / p.ground, (2.0f64 / 3.0).exp(), epsilon = 1e-12);
    }

    #[test]
    fn non_positive_gap() {
        assert_eq!(thermal_populations(0.0, 1.0), Err(Error::NonPositiveGap(0.0)));
        assert_eq!(thermal_populations(-1.0, 1.0), Err(Error::NonPositiveGap(-1.0)));
    }

    #[test]
    fn layout_limit() {
        assert!(matches!(HilbertLayout::new(vec![2; 11], 0), Err(Error::DimensionTooLarge { dim: 2048, limit: 1024 })));
        assert!(HilbertLayout::with_limit(vec![2; 11], 0, 4096).is_ok());
        assert_eq!(HilbertLayout::new(vec![3, 2, 2, 2, 2, 2, 2], 0).unwrap().total_dim(), 192);
    }

    #[test]
    fn embed_matches_kronecker() {
        let layout = HilbertLayout::new(vec![3, 2, 2], 0).unwrap();
        let e = embed(&sigma_plus(), 1, &layout).unwrap();
        let k = CMatrix::identity(3, 3).kronecker(&sigma_plus()).kronecker(&CMatrix::identity(2, 2));
        assert_eq!(e.matrix(), &k);
    }
}
