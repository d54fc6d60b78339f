//! Null-space steady states of superoperators.

use nalgebra::SVD;
use num_complex::Complex64;

use super::superop::Superoperator;
use crate::error::{Error, Result};
use crate::operator::DensityMatrix;

/// Largest invariant sector handed to the dense SVD.
pub const SECTOR_LIMIT: usize = 4096;

/// Second-smallest singular value must exceed this times the largest.
const UNIQUENESS_RATIO: f64 = 1e-8;

/// Steady state as the right singular vector of the smallest singular value.
///
/// Only the sector closed under the generator that contains the diagonal is
/// decomposed; coherences outside it decay and carry no stationary weight.
pub fn steady_state_nullspace(gen: &Superoperator) -> Result<DensityMatrix> {
    let support = gen.closure(&gen.diagonal_indices());
    if support.len() > SECTOR_LIMIT {
        return Err(Error::DimensionTooLarge { dim: support.len(), limit: SECTOR_LIMIT });
    }
    let red = gen.restrict(&support)?;
    let dense = red.to_dense();
    let svd = SVD::new(dense, false, true);
    let v_t = svd.v_t.as_ref().expect("requested right singular vectors");
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[a].total_cmp(&sv[b]));
    let sigma_max = sv.iter().copied().fold(0.0, f64::max);
    if order.len() > 1 {
        let second = sv[order[1]];
        let threshold = UNIQUENESS_RATIO * sigma_max;
        if second < threshold {
            return Err(Error::NonUniqueSteadyState { second, threshold });
        }
    }
    let null: Vec<Complex64> = v_t.row(order[0]).iter().map(|z| z.conj()).collect();
    let mut rho = red.scatter(&null);
    let trace: Complex64 = (0..rho.nrows()).map(|i| rho[(i, i)]).sum();
    if trace.norm() < 1e-300 {
        return Err(Error::InvalidState("null vector has zero trace".into()));
    }
    rho /= trace;
    DensityMatrix::from_hermitian_part(rho, gen.layout().clone())
}
