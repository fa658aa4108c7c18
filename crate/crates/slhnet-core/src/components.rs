//! Standard component parameterizations.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::sync::Arc;

use crate::hilbert::{Signature, SpaceFactor};
use crate::op_matrix::OperatorMatrix;
use crate::operator::Operator;
use crate::slh::{SlhError, SlhTriple};

/// Damped optical cavity `(1, sqrt(gamma) a, delta a* a)` on a fock factor.
pub fn cavity(factor: &Arc<SpaceFactor>, gamma: f64, delta: f64) -> Result<SlhTriple, SlhError> {
    let a = Operator::annihilation(factor)?;
    let sig = a.signature().clone();
    SlhTriple::new(
        OperatorMatrix::identity(1, &sig),
        OperatorMatrix::column(vec![a.scale_re(gamma.sqrt())])?,
        (&a.dagger() * &a).scale_re(delta),
    )
}

/// Static beamsplitter `([[beta, -alpha], [alpha, beta]], 0, 0)`.
///
/// The parameters must satisfy `|alpha|^2 + |beta|^2 = 1` and
/// `alpha* beta = alpha beta*`; validation happens through the unitarity
/// check on the resulting scattering matrix.
pub fn beamsplitter(alpha: Complex64, beta: Complex64) -> Result<SlhTriple, SlhError> {
    let sig = Signature::scalar();
    let s = DMatrix::from_row_slice(2, 2, &[beta, -alpha, alpha, beta]);
    SlhTriple::new(
        OperatorMatrix::from_scalars(&s, &sig),
        OperatorMatrix::zeros(2, 1, &sig),
        Operator::zero(&sig),
    )
}

/// Trivial `n`-channel pass-through `(I_n, 0, 0)` on the scalar signature.
pub fn passthrough(n: usize) -> SlhTriple {
    SlhTriple::passthrough(n, &Signature::scalar())
}

/// Single-channel phase shift `(e^{i theta}, 0, 0)`.
pub fn phase_shift(theta: f64) -> SlhTriple {
    let sig = Signature::scalar();
    let z = Complex64::new(0.0, theta).exp();
    SlhTriple::new(
        OperatorMatrix::from_scalars(&DMatrix::from_element(1, 1, z), &sig),
        OperatorMatrix::zeros(1, 1, &sig),
        Operator::zero(&sig),
    )
    .expect("phase is unitary")
}
