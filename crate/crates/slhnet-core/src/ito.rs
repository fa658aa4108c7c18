//! Itô generator coefficients of the unitary QSDE, and their composition.
//!
//! A triple `(S, L, H)` generates `dV = {tr[(S−I)dΛ] + dA† L − L† S dA
//! − (iH + L†L/2) dt} V`, i.e. the coefficient blocks
//!
//! * `G11 = S − I` (gauge),
//! * `G10 = L` (creation),
//! * `G01 = −L† S` (annihilation),
//! * `G00 = −iH − L†L/2` (time).
//!
//! Composing the generators of two cascaded systems with the canonical Itô
//! table contracts only channel indices:
//! `G^{ab}_{2◁1} = G2^{ab} + G1^{ab} + Σ_m G2^{am} G1^{mb}`. This is an
//! independent route to the series product and serves as its oracle.

use num_complex::Complex64;

use crate::op_matrix::{OperatorMatrix, OperatorVector};
use crate::operator::Operator;
use crate::slh::{SlhError, SlhTriple};

/// The four generator blocks for an `n`-channel system.
#[derive(Clone, Debug)]
pub struct ItoCoefficients {
    /// `dt` coefficient (`1 x 1` as an operator).
    pub g00: Operator,
    /// `dA†` coefficients, `n x 1`.
    pub g10: OperatorVector,
    /// `dA` coefficients, `1 x n`.
    pub g01: OperatorMatrix,
    /// `dΛ` coefficients, `n x n`.
    pub g11: OperatorMatrix,
}

impl ItoCoefficients {
    pub fn channels(&self) -> usize {
        self.g11.rows()
    }
}

/// Extract the generator blocks of a triple.
pub fn ito_coefficients(g: &SlhTriple) -> ItoCoefficients {
    let sig = g.signature();
    let n = g.channels();
    let id = OperatorMatrix::identity(n, sig);
    let s = g.scattering();
    let l = g.coupling();
    let h = g.hamiltonian();
    let g11 = s - &id;
    let g10 = l.clone();
    let g01 = (&l.dagger() * s).scale(Complex64::new(-1.0, 0.0));
    let ldl = (&l.dagger() * l)
        .into_operator()
        .expect("L†L is 1x1");
    let g00 = &h.scale(Complex64::new(0.0, -1.0)) - &ldl.scale_re(0.5);
    ItoCoefficients { g00, g10, g01, g11 }
}

/// Recover `(S, L, H)` from generator blocks.
///
/// Rejects blocks whose `G11 + I` is not unitary or whose recovered
/// `H = i(G00 + L†L/2)` is not self-adjoint within `tol`.
pub fn coefficients_to_slh(c: &ItoCoefficients, tol: f64) -> Result<SlhTriple, SlhError> {
    let sig = c.g00.signature();
    let n = c.channels();
    let id = OperatorMatrix::identity(n, sig);
    let s = &c.g11 + &id;
    let l = c.g10.clone();
    let ldl = (&l.dagger() * &l).into_operator()?;
    let h = (&c.g00 + &ldl.scale_re(0.5)).scale(Complex64::new(0.0, 1.0));
    SlhTriple::with_tol(s, l, h, tol)
}

/// Blockwise composition of two generators under the canonical Itô table:
/// `later` acts downstream of `earlier`.
pub fn ito_compose(
    later: &ItoCoefficients,
    earlier: &ItoCoefficients,
) -> Result<ItoCoefficients, SlhError> {
    if later.channels() != earlier.channels() {
        return Err(SlhError::ChannelMismatch(
            earlier.channels(),
            later.channels(),
        ));
    }
    // contraction runs over the channel index only:
    // dA^{a1} dA^{1b} -> dA^{ab}
    let g00 = &(&later.g00 + &earlier.g00)
        + &(&later.g01 * &earlier.g10).into_operator()?;
    let g10 = &(&later.g10 + &earlier.g10) + &(&later.g11 * &earlier.g10);
    let g01 = &(&later.g01 + &earlier.g01) + &(&later.g01 * &earlier.g11);
    let g11 = &(&later.g11 + &earlier.g11) + &(&later.g11 * &earlier.g11);
    Ok(ItoCoefficients { g00, g10, g01, g11 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::components::cavity;
    use crate::hilbert::{Signature, SpaceRegistry};

    #[test]
    fn passthrough_has_zero_blocks() {
        let g = SlhTriple::passthrough(2, &Signature::scalar());
        let c = ito_coefficients(&g);
        assert!(c.g00.is_zero(1e-15));
        assert!(c.g10.max_abs() < 1e-15);
        assert!(c.g01.max_abs() < 1e-15);
        assert!(c.g11.max_abs() < 1e-15);
    }

    #[test]
    fn cavity_blocks() {
        let mut reg = SpaceRegistry::new();
        let f = reg.fock("c1", 5).unwrap();
        let gamma = 0.5;
        let delta = 1.25;
        let g = cavity(&f, gamma, delta).unwrap();
        let c = ito_coefficients(&g);
        let a = Operator::annihilation(&f).unwrap();
        let n = Operator::number(&f).unwrap();
        // G00 = -i delta a*a - gamma/2 a*a
        let expect = &n.scale(Complex64::new(0.0, -delta)) - &n.scale_re(gamma / 2.0);
        assert!(c.g00.approx_eq(&expect, 1e-12));
        assert!(c
            .g10
            .entry(0, 0)
            .approx_eq(&a.scale_re(gamma.sqrt()), 1e-12));
        assert!(c
            .g01
            .entry(0, 0)
            .approx_eq(&a.dagger().scale_re(-gamma.sqrt()), 1e-12));
        assert!(c.g11.max_abs() < 1e-15);
    }

    #[test]
    fn round_trip() {
        let mut reg = SpaceRegistry::new();
        let f = reg.fock("c1", 5).unwrap();
        let g = cavity(&f, 0.5, 1.25).unwrap().pad(1).unwrap();
        let back = coefficients_to_slh(&ito_coefficients(&g), 1e-10).unwrap();
        assert!(back.approx_eq(&g, 1e-12));
    }

    #[test]
    fn compose_with_trivial_generator() {
        let mut reg = SpaceRegistry::new();
        let f = reg.fock("c1", 5).unwrap();
        let g = cavity(&f, 0.5, 1.25).unwrap();
        let c = ito_coefficients(&g);
        let trivial = ito_coefficients(&SlhTriple::passthrough(1, g.signature()));
        let left = ito_compose(&trivial, &c).unwrap();
        let right = ito_compose(&c, &trivial).unwrap();
        for out in [left, right] {
            let back = coefficients_to_slh(&out, 1e-10).unwrap();
            assert!(back.approx_eq(&g, 1e-12));
        }
    }

    #[test]
    fn gardiner_cascade_hamiltonian() {
        // (1,L2,0) ◁ (1,L1,0): the composed G00 block carries Im{L2† L1}
        let mut reg = SpaceRegistry::new();
        let f = reg.fock("c1", 5).unwrap();
        let a = Operator::annihilation(&f).unwrap();
        let sig = a.signature().clone();
        let l1 = a.scale_re(0.7);
        let l2 = (&a + &Operator::number(&f).unwrap().scale(Complex64::new(0.0, 0.4))).clone();
        let mk = |l: &Operator| {
            SlhTriple::new(
                OperatorMatrix::identity(1, &sig),
                OperatorMatrix::column(vec![l.clone()]).unwrap(),
                Operator::zero(&sig),
            )
            .unwrap()
        };
        let composed = ito_compose(&ito_coefficients(&mk(&l2)), &ito_coefficients(&mk(&l1))).unwrap();
        let triple = coefficients_to_slh(&composed, 1e-10).unwrap();
        let expect_h = (&l2.dagger() * &l1).im();
        assert!(triple.hamiltonian().approx_eq(&expect_h, 1e-12));
        assert!(triple.coupling().entry(0, 0).approx_eq(&(&l1 + &l2), 1e-12));
    }
}
