//! Holevo-generator parameterization and direct measurement feedback.
//!
//! A single-channel Holevo generator `K(t) = H00 t + H01 A + H10 A† + H11 Λ`
//! with `H_ab† = H_ba` determines a unitary via a time-ordered exponential;
//! the equivalent `(S, L, H)` parameters are
//!
//! ```text
//! S = exp(-i H11)
//! L = φ1(H11) H10,          φ1(x) = (e^{-ix} - 1)/x,   φ1(0) = -i
//! H = H00 - H01 φ2(H11) H10, φ2(x) = (x - sin x)/x²,    φ2(0) = 0
//! ```
//!
//! The matrix functions are evaluated spectrally (`H11` is self-adjoint), so
//! the removable singularity at zero eigenvalues is exact. Only this Holevo
//! convention is implemented; it coincides with the Stratonovich-Itô
//! correspondence only when `H11 = 0`.

use num_complex::Complex64;
use thiserror::Error;

use crate::hilbert::HilbertError;
use crate::op_matrix::OperatorMatrix;
use crate::operator::Operator;
use crate::slh::{SlhError, SlhTriple, DEFAULT_TOL};

#[derive(Debug, Error)]
pub enum HolevoError {
    #[error("H00 must be self-adjoint (deviation {0:.3e})")]
    H00NotSelfAdjoint(f64),
    #[error("H11 must be self-adjoint (deviation {0:.3e})")]
    H11NotSelfAdjoint(f64),
    #[error("H01 must equal H10† (deviation {0:.3e})")]
    CrossBlockMismatch(f64),
    #[error("feedback operator must be self-adjoint (deviation {0:.3e})")]
    FeedbackNotSelfAdjoint(f64),
    #[error(transparent)]
    Slh(#[from] SlhError),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
}

/// Single-channel generator blocks `{H_ab}` with `H_ab† = H_ba`.
#[derive(Clone, Debug)]
pub struct HolevoGenerator {
    h00: Operator,
    h01: Operator,
    h10: Operator,
    h11: Operator,
}

impl HolevoGenerator {
    pub fn new(
        h00: Operator,
        h01: Operator,
        h10: Operator,
        h11: Operator,
    ) -> Result<Self, HolevoError> {
        Self::with_tol(h00, h01, h10, h11, DEFAULT_TOL)
    }

    pub fn with_tol(
        h00: Operator,
        h01: Operator,
        h10: Operator,
        h11: Operator,
        tol: f64,
    ) -> Result<Self, HolevoError> {
        let dev = h00.max_abs_diff(&h00.dagger());
        if dev > tol {
            return Err(HolevoError::H00NotSelfAdjoint(dev));
        }
        let dev = h11.max_abs_diff(&h11.dagger());
        if dev > tol {
            return Err(HolevoError::H11NotSelfAdjoint(dev));
        }
        let dev = h01.max_abs_diff(&h10.dagger());
        if dev > tol {
            return Err(HolevoError::CrossBlockMismatch(dev));
        }
        Ok(HolevoGenerator { h00, h01, h10, h11 })
    }

    pub fn h00(&self) -> &Operator {
        &self.h00
    }
    pub fn h01(&self) -> &Operator {
        &self.h01
    }
    pub fn h10(&self) -> &Operator {
        &self.h10
    }
    pub fn h11(&self) -> &Operator {
        &self.h11
    }
}

/// `φ1(x) = (e^{-ix} - 1)/x`, `φ1(0) = -i` (series near zero avoids
/// cancellation).
pub fn phi1(x: f64) -> Complex64 {
    if x.abs() < 1e-2 {
        // sum_{k>=1} (-i)^k x^{k-1} / k!
        let mut acc = Complex64::ZERO;
        let mut coeff = Complex64::new(0.0, -1.0); // (-i)^1 / 1!
        let mut xpow = 1.0;
        for k in 1..=12 {
            acc += coeff * xpow;
            xpow *= x;
            coeff *= Complex64::new(0.0, -1.0) / Complex64::from((k + 1) as f64);
        }
        acc
    } else {
        (Complex64::new(0.0, -x).exp() - 1.0) / x
    }
}

/// `φ2(x) = (x - sin x)/x²`, `φ2(0) = 0`.
pub fn phi2(x: f64) -> Complex64 {
    if x.abs() < 1e-2 {
        // sum_{m>=1} (-1)^{m+1} x^{2m-1} / (2m+1)!
        let mut acc = 0.0;
        let mut term = x / 6.0;
        let mut m = 1usize;
        while term.abs() > 1e-300 && m <= 8 {
            acc += term;
            term *= -x * x / (((2 * m + 2) * (2 * m + 3)) as f64);
            m += 1;
        }
        Complex64::from(acc)
    } else {
        Complex64::from((x - x.sin()) / (x * x))
    }
}

/// Convert Holevo blocks to `(S, L, H)`.
pub fn holevo_to_slh(k: &HolevoGenerator) -> Result<SlhTriple, HolevoError> {
    holevo_to_slh_tol(k, DEFAULT_TOL)
}

pub fn holevo_to_slh_tol(k: &HolevoGenerator, tol: f64) -> Result<SlhTriple, HolevoError> {
    let s = k.h11.hermitian_function(tol, |x| Complex64::new(0.0, -x).exp())?;
    let l = &k.h11.hermitian_function(tol, phi1)? * &k.h10;
    let h = &k.h00 - &(&(&k.h01 * &k.h11.hermitian_function(tol, phi2)?) * &k.h10);
    let sig = s
        .signature()
        .union(l.signature())?
        .union(h.signature())?;
    Ok(SlhTriple::with_tol(
        OperatorMatrix::from_rows(vec![vec![s]])?.embed(&sig)?,
        OperatorMatrix::column(vec![l])?.embed(&sig)?,
        h.embed(&sig)?,
        tol,
    )?)
}

/// Photon-counting feedback `(e^{-iF}, 0, 0)` from the gauge coupling
/// `K(t) = F Λ(t)`.
pub fn photon_feedback(f: &Operator) -> Result<SlhTriple, HolevoError> {
    let dev = f.max_abs_diff(&f.dagger());
    if dev > DEFAULT_TOL {
        return Err(HolevoError::FeedbackNotSelfAdjoint(dev));
    }
    let zero = Operator::zero(f.signature());
    holevo_to_slh(&HolevoGenerator::new(
        zero.clone(),
        zero.clone(),
        zero,
        f.clone(),
    )?)
}

/// Quadrature-measurement feedback `(1, -iF, 0)` from the diffusive coupling
/// `K(t) = F (A† + A)`.
pub fn quadrature_feedback(f: &Operator) -> Result<SlhTriple, HolevoError> {
    let dev = f.max_abs_diff(&f.dagger());
    if dev > DEFAULT_TOL {
        return Err(HolevoError::FeedbackNotSelfAdjoint(dev));
    }
    let zero = Operator::zero(f.signature());
    holevo_to_slh(&HolevoGenerator::new(
        zero.clone(),
        f.clone(),
        f.clone(),
        zero,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{Signature, SpaceRegistry};
    use nalgebra::DMatrix;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_hermitian(sig: &Signature, rng: &mut StdRng) -> Operator {
        let d = sig.dim();
        let m = DMatrix::from_fn(d, d, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        Operator::new(sig.clone(), (&m + m.adjoint()).scale(0.5)).unwrap()
    }

    /// Independent evaluation of (exp(-iX), φ1(X), φ2(X)) by scaled Taylor
    /// series plus doubling identities; shares nothing with the spectral path.
    fn taylor_phi(x: &Operator) -> (Operator, Operator, Operator) {
        let norm = x.max_abs() * x.dim() as f64;
        let mut halvings = 0u32;
        while norm / 2f64.powi(halvings as i32) > 0.5 {
            halvings += 1;
        }
        let xs = x.scale_re(1.0 / 2f64.powi(halvings as i32));
        let sig = x.signature();
        let id = Operator::identity(sig);

        // plain Taylor at the scaled argument
        let series = |coeff: &dyn Fn(usize) -> Complex64, terms: usize| {
            let mut acc = Operator::zero(sig);
            let mut pow = id.clone();
            for k in 0..terms {
                acc = &acc + &pow.scale(coeff(k));
                pow = &pow * &xs;
            }
            acc
        };
        // exp(-ix) = sum (-i)^k x^k / k!
        let fact = |k: usize| (1..=k).map(|j| j as f64).product::<f64>();
        let mut e = series(
            &|k| Complex64::new(0.0, -1.0).powu(k as u32) / Complex64::from(fact(k)),
            20,
        );
        // φ1 = sum_{k>=1} (-i)^k x^{k-1}/k!
        let mut p1 = series(
            &|k| Complex64::new(0.0, -1.0).powu((k + 1) as u32) / Complex64::from(fact(k + 1)),
            20,
        );
        // φ2 = sum_{m>=1} (-1)^{m+1} x^{2m-1}/(2m+1)!  (odd powers only)
        let mut p2 = {
            let mut acc = Operator::zero(sig);
            let mut pow = xs.clone();
            let x2 = &xs * &xs;
            for m in 1..=9 {
                let coeff = if m % 2 == 1 { 1.0 } else { -1.0 } / fact(2 * m + 1);
                acc = &acc + &pow.scale_re(coeff);
                pow = &pow * &x2;
            }
            acc
        };
        // sigma = sin x / x, kappa = (1 - cos x)/x, cos
        let mut sigma = {
            let mut acc = Operator::zero(sig);
            let mut pow = id.clone();
            let x2 = &xs * &xs;
            for m in 0..10 {
                let coeff = if m % 2 == 0 { 1.0 } else { -1.0 } / fact(2 * m + 1);
                acc = &acc + &pow.scale_re(coeff);
                pow = &pow * &x2;
            }
            acc
        };
        let mut kappa = {
            let mut acc = Operator::zero(sig);
            let mut pow = xs.clone();
            let x2 = &xs * &xs;
            for m in 1..=9 {
                let coeff = if m % 2 == 1 { 1.0 } else { -1.0 } / fact(2 * m);
                acc = &acc + &pow.scale_re(coeff);
                pow = &pow * &x2;
            }
            acc
        };
        let mut cosx = {
            let mut acc = Operator::zero(sig);
            let mut pow = id.clone();
            let x2 = &xs * &xs;
            for m in 0..10 {
                let coeff = if m % 2 == 0 { 1.0 } else { -1.0 } / fact(2 * m);
                acc = &acc + &pow.scale_re(coeff);
                pow = &pow * &x2;
            }
            acc
        };

        // doubling: all functions of a common hermitian argument commute
        for _ in 0..halvings {
            p1 = (&p1 * &(&e + &id)).scale_re(0.5);
            p2 = &p2.scale_re(0.5) + &(&sigma * &kappa).scale_re(0.5);
            sigma = &sigma * &cosx;
            kappa = &kappa * &(&cosx + &id);
            cosx = &(&cosx * &cosx).scale_re(2.0) - &id;
            e = &e * &e;
        }
        (e, p1, p2)
    }

    #[test]
    fn gauge_only_generator_is_scattering() {
        let mut reg = SpaceRegistry::new();
        let f = reg.fock("c1", 4).unwrap();
        let big_f = Operator::number(&f).unwrap().scale_re(0.8);
        let g = photon_feedback(&big_f).unwrap();
        let expect_s = big_f.exp_minus_i(1e-10).unwrap();
        assert!(g
            .scattering()
            .entry(0, 0)
            .approx_eq(&expect_s, 1e-12));
        assert!(g.coupling().max_abs() < 1e-14);
        assert!(g.hamiltonian().is_zero(1e-14));
    }

    #[test]
    fn diffusive_generator_is_skew_coupling() {
        let mut reg = SpaceRegistry::new();
        let f = reg.fock("c1", 4).unwrap();
        let a = Operator::annihilation(&f).unwrap();
        let big_f = (&a + &a.dagger()).scale_re(0.37);
        let g = quadrature_feedback(&big_f).unwrap();
        let sig = g.signature();
        assert!(g
            .scattering()
            .approx_eq(&OperatorMatrix::identity(1, sig), 1e-12));
        assert!(g
            .coupling()
            .entry(0, 0)
            .approx_eq(&big_f.scale(c(0.0, -1.0)), 1e-12));
        assert!(g.hamiltonian().is_zero(1e-12));
    }

    #[test]
    fn zero_generator_is_identity() {
        let zero = Operator::zero(&Signature::scalar());
        let g = holevo_to_slh(
            &HolevoGenerator::new(zero.clone(), zero.clone(), zero.clone(), zero).unwrap(),
        )
        .unwrap();
        assert!(g
            .scattering()
            .approx_eq(&OperatorMatrix::identity(1, &Signature::scalar()), 1e-14));
        assert!(g.coupling().max_abs() < 1e-14);
        assert!(g.hamiltonian().is_zero(1e-14));
    }

    #[test]
    fn output_is_valid_triple_for_random_generators() {
        let mut rng = StdRng::seed_from_u64(19);
        let mut reg = SpaceRegistry::new();
        let f = reg.generic("q", 4).unwrap();
        let sig = Signature::single(&f);
        for _ in 0..25 {
            let h00 = random_hermitian(&sig, &mut rng);
            let h11 = random_hermitian(&sig, &mut rng);
            let d = sig.dim();
            let h10 = Operator::new(
                sig.clone(),
                DMatrix::from_fn(d, d, |_, _| {
                    c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                }),
            )
            .unwrap();
            let k = HolevoGenerator::new(h00, h10.dagger(), h10, h11).unwrap();
            // unitarity and self-adjointness validated inside the constructor
            let g = holevo_to_slh_tol(&k, 1e-10).unwrap();
            assert!(g.scattering().is_unitary(1e-10).unwrap());
            assert!(g.hamiltonian().is_hermitian(1e-10));
        }
    }

    #[test]
    fn continuity_at_the_removable_singularity() {
        let mut reg = SpaceRegistry::new();
        let f = reg.generic("q", 3).unwrap();
        let sig = Signature::single(&f);
        let mut rng = StdRng::seed_from_u64(5);
        let d = sig.dim();
        let h10 = Operator::new(
            sig.clone(),
            DMatrix::from_fn(d, d, |_, _| {
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            }),
        )
        .unwrap();
        let h00 = random_hermitian(&sig, &mut rng);
        let eps = 1e-6;
        let id_eps = Operator::identity(&sig).scale_re(eps);
        let k_eps = HolevoGenerator::new(h00.clone(), h10.dagger(), h10.clone(), id_eps).unwrap();
        let k_zero =
            HolevoGenerator::new(h00, h10.dagger(), h10, Operator::zero(&sig)).unwrap();
        let g_eps = holevo_to_slh(&k_eps).unwrap();
        let g_zero = holevo_to_slh(&k_zero).unwrap();
        assert!(g_eps.max_abs_diff(&g_zero) <= 1e-5);
    }

    #[test]
    fn spectral_matches_scaled_taylor() {
        let mut rng = StdRng::seed_from_u64(23);
        let mut reg = SpaceRegistry::new();
        let f = reg.generic("q", 5).unwrap();
        let sig = Signature::single(&f);
        for _ in 0..10 {
            let h11 = random_hermitian(&sig, &mut rng).scale_re(rng.random_range(0.1..3.0));
            let (e_t, p1_t, p2_t) = taylor_phi(&h11);
            let e_s = h11.exp_minus_i(1e-10).unwrap();
            let p1_s = h11.hermitian_function(1e-10, phi1).unwrap();
            let p2_s = h11.hermitian_function(1e-10, phi2).unwrap();
            assert!(e_s.max_abs_diff(&e_t) <= 1e-9, "exp mismatch");
            assert!(p1_s.max_abs_diff(&p1_t) <= 1e-9, "phi1 mismatch");
            assert!(p2_s.max_abs_diff(&p2_t) <= 1e-9, "phi2 mismatch");
        }
    }

    #[test]
    fn invalid_blocks_rejected() {
        let mut reg = SpaceRegistry::new();
        let f = reg.fock("c1", 3).unwrap();
        let a = Operator::annihilation(&f).unwrap();
        let zero = Operator::zero(a.signature());
        // non-hermitian H11
        assert!(matches!(
            HolevoGenerator::new(zero.clone(), zero.clone(), zero.clone(), a.clone()),
            Err(HolevoError::H11NotSelfAdjoint(_))
        ));
        // H01 != H10†
        assert!(matches!(
            HolevoGenerator::new(zero.clone(), a.clone(), a.clone(), zero.clone()),
            Err(HolevoError::CrossBlockMismatch(_))
        ));
        assert!(matches!(
            photon_feedback(&a),
            Err(HolevoError::FeedbackNotSelfAdjoint(_))
        ));
    }
}
