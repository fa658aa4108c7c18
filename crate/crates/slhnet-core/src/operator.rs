//! Dense operators on tensor products of registered factors.
//!
//! An [`Operator`] is a complex square matrix tagged with the signature of
//! factors it acts on. Arithmetic between operators on different signatures
//! embeds both into the union signature first (the usual `A = A ⊗ I`
//! shorthand), so `a * number_op` works even when the operands were built on
//! different subsystems.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::hilbert::{FactorKind, HilbertError, Signature, SpaceFactor};

/// Complex square matrix on a tensor signature.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    sig: Signature,
    mat: DMatrix<Complex64>,
}

impl Operator {
    /// Wrap a matrix acting on `sig`. The matrix must be `dim x dim`.
    pub fn new(sig: Signature, mat: DMatrix<Complex64>) -> Result<Self, HilbertError> {
        let d = sig.dim();
        if mat.nrows() != d || mat.ncols() != d {
            return Err(HilbertError::Shape(format!(
                "matrix is {}x{} but signature `{}` has dimension {}",
                mat.nrows(),
                mat.ncols(),
                sig,
                d
            )));
        }
        Ok(Operator { sig, mat })
    }

    /// A complex number as an operator on the scalar signature.
    pub fn scalar(z: Complex64) -> Self {
        Operator {
            sig: Signature::scalar(),
            mat: DMatrix::from_element(1, 1, z),
        }
    }

    pub fn scalar_re(x: f64) -> Self {
        Self::scalar(Complex64::new(x, 0.0))
    }

    /// Identity on a signature.
    pub fn identity(sig: &Signature) -> Self {
        Operator {
            sig: sig.clone(),
            mat: DMatrix::identity(sig.dim(), sig.dim()),
        }
    }

    /// Zero operator on a signature.
    pub fn zero(sig: &Signature) -> Self {
        Operator {
            sig: sig.clone(),
            mat: DMatrix::zeros(sig.dim(), sig.dim()),
        }
    }

    /// Annihilation operator on a fock factor: `<n-1|a|n> = sqrt(n)`.
    ///
    /// The truncation is hard: the top level `cutoff-1` cannot be raised, so
    /// the CCR `[a, a*] = 1` holds only below the top level.
    pub fn annihilation(factor: &Arc<SpaceFactor>) -> Result<Self, HilbertError> {
        if factor.kind() != FactorKind::Fock {
            return Err(HilbertError::NotFock(
                factor.label().to_string(),
                factor.kind(),
            ));
        }
        let d = factor.dim();
        let mut mat = DMatrix::zeros(d, d);
        for n in 1..d {
            mat[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
        }
        Ok(Operator {
            sig: Signature::single(factor),
            mat,
        })
    }

    /// Creation operator `a*` on a fock factor.
    pub fn creation(factor: &Arc<SpaceFactor>) -> Result<Self, HilbertError> {
        Ok(Self::annihilation(factor)?.dagger())
    }

    /// Number operator `a* a` on a fock factor.
    pub fn number(factor: &Arc<SpaceFactor>) -> Result<Self, HilbertError> {
        let a = Self::annihilation(factor)?;
        Ok(&a.dagger() * &a)
    }

    /// Diagonal operator on a single factor from its basis values.
    pub fn diagonal(factor: &Arc<SpaceFactor>, values: &[Complex64]) -> Result<Self, HilbertError> {
        if values.len() != factor.dim() {
            return Err(HilbertError::Shape(format!(
                "{} diagonal values for factor of dimension {}",
                values.len(),
                factor.dim()
            )));
        }
        let mat = DMatrix::from_diagonal(&DVector::from_row_slice(values));
        Ok(Operator {
            sig: Signature::single(factor),
            mat,
        })
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Tensor with identities on the missing factors of `target`.
    ///
    /// Factor order follows global registration order, so embeddings of
    /// operators built on different subsystems compose consistently.
    pub fn embed(&self, target: &Signature) -> Result<Operator, HilbertError> {
        if self.sig == *target {
            return Ok(self.clone());
        }
        for f in self.sig.factors() {
            if !target.contains(f) {
                return Err(HilbertError::MissingFactor {
                    op: self.sig.to_string(),
                    target: target.to_string(),
                    missing: f.label().to_string(),
                });
            }
        }
        let tdims: Vec<usize> = target.factors().iter().map(|f| f.dim()).collect();
        let tdim: usize = tdims.iter().product();
        // position of each of self's factors within the target, and strides
        // of the row-major (first factor most significant) index layout
        let positions: Vec<usize> = self
            .sig
            .factors()
            .iter()
            .map(|f| {
                target
                    .factors()
                    .iter()
                    .position(|g| g.index() == f.index())
                    .expect("subset checked above")
            })
            .collect();
        let mut strides = vec![1usize; tdims.len()];
        for k in (0..tdims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * tdims[k + 1];
        }
        let own_dims: Vec<usize> = self.sig.factors().iter().map(|f| f.dim()).collect();

        // digits of a target index restricted to self's factors, combined
        // into an index of self's matrix
        let sub_index = |idx: usize| -> usize {
            let mut sub = 0usize;
            for (k, &pos) in positions.iter().enumerate() {
                let digit = (idx / strides[pos]) % tdims[pos];
                sub = sub * own_dims[k] + digit;
            }
            sub
        };
        // digits on the complementary factors, for the identity part
        let rest_index = |idx: usize| -> usize {
            let mut rest = 0usize;
            for (pos, (&stride, &dim)) in strides.iter().zip(&tdims).enumerate() {
                if !positions.contains(&pos) {
                    rest = rest * dim + (idx / stride) % dim;
                }
            }
            rest
        };

        let mut mat = DMatrix::zeros(tdim, tdim);
        for col in 0..tdim {
            let col_sub = sub_index(col);
            let col_rest = rest_index(col);
            for row in 0..tdim {
                if rest_index(row) == col_rest {
                    let v = self.mat[(sub_index(row), col_sub)];
                    if v != Complex64::ZERO {
                        mat[(row, col)] = v;
                    }
                }
            }
        }
        Ok(Operator {
            sig: target.clone(),
            mat,
        })
    }

    /// Embed both operators into the union of their signatures.
    pub fn unify(a: &Operator, b: &Operator) -> Result<(Operator, Operator), HilbertError> {
        if a.sig == b.sig {
            return Ok((a.clone(), b.clone()));
        }
        let sig = a.sig.union(&b.sig)?;
        Ok((a.embed(&sig)?, b.embed(&sig)?))
    }

    /// Hilbert-space adjoint.
    pub fn dagger(&self) -> Operator {
        Operator {
            sig: self.sig.clone(),
            mat: self.mat.adjoint(),
        }
    }

    /// Commutator `[self, other] = self*other - other*self` on the union signature.
    pub fn commutator(&self, other: &Operator) -> Operator {
        let (a, b) = Operator::unify(self, other).expect("operators from the same registry");
        Operator {
            sig: a.sig.clone(),
            mat: &a.mat * &b.mat - &b.mat * &a.mat,
        }
    }

    /// Anticommutator `self*other + other*self`.
    pub fn anticommutator(&self, other: &Operator) -> Operator {
        let (a, b) = Operator::unify(self, other).expect("operators from the same registry");
        Operator {
            sig: a.sig.clone(),
            mat: &a.mat * &b.mat + &b.mat * &a.mat,
        }
    }

    pub fn scale(&self, z: Complex64) -> Operator {
        Operator {
            sig: self.sig.clone(),
            mat: self.mat.scale_complex(z),
        }
    }

    pub fn scale_re(&self, x: f64) -> Operator {
        self.scale(Complex64::new(x, 0.0))
    }

    /// Operator real part `(X + X*)/2`.
    pub fn re(&self) -> Operator {
        (self + &self.dagger()).scale_re(0.5)
    }

    /// Operator imaginary part `(X - X*)/2i`.
    pub fn im(&self) -> Operator {
        (self - &self.dagger()).scale(Complex64::new(0.0, -0.5))
    }

    pub fn trace(&self) -> Complex64 {
        self.mat.trace()
    }

    /// `tr(rho * self)` with `rho` auto-embedded.
    pub fn expectation(&self, rho: &Operator) -> Complex64 {
        let (x, r) = Operator::unify(self, rho).expect("operators from the same registry");
        (&r.mat * &x.mat).trace()
    }

    /// Largest entry magnitude (the entrywise infinity norm used by all
    /// tolerance checks).
    pub fn max_abs(&self) -> f64 {
        self.mat.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        let (a, b) = Operator::unify(self, other).expect("operators from the same registry");
        (&a.mat - &b.mat).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Operator, tol: f64) -> bool {
        self.max_abs_diff(other) <= tol
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.dagger()) <= tol
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.max_abs() <= tol
    }

    /// Eigenvalues of a hermitian operator (ascending order not guaranteed).
    pub fn hermitian_eigenvalues(&self, tol: f64) -> Result<Vec<f64>, HilbertError> {
        let dev = self.max_abs_diff(&self.dagger());
        if dev > tol {
            return Err(HilbertError::NotHermitian(dev));
        }
        let eig = self.mat.clone().symmetric_eigen();
        Ok(eig.eigenvalues.iter().copied().collect())
    }

    /// Spectral function of a hermitian operator: `U f(Λ) U*`.
    ///
    /// This is how matrix functions with removable singularities (the Holevo
    /// conversion) and unitaries `exp(-iF)` are evaluated.
    pub fn hermitian_function(
        &self,
        tol: f64,
        f: impl Fn(f64) -> Complex64,
    ) -> Result<Operator, HilbertError> {
        let dev = self.max_abs_diff(&self.dagger());
        if dev > tol {
            return Err(HilbertError::NotHermitian(dev));
        }
        let eig = self.mat.clone().symmetric_eigen();
        let d = self.dim();
        let mut fl = DMatrix::zeros(d, d);
        for k in 0..d {
            fl[(k, k)] = f(eig.eigenvalues[k]);
        }
        let u = &eig.eigenvectors;
        Ok(Operator {
            sig: self.sig.clone(),
            mat: u * fl * u.adjoint(),
        })
    }

    /// Unitary `exp(-i * self)` for hermitian `self`.
    pub fn exp_minus_i(&self, tol: f64) -> Result<Operator, HilbertError> {
        self.hermitian_function(tol, |x| Complex64::new(0.0, -x).exp())
    }
}

trait ScaleComplex {
    fn scale_complex(&self, z: Complex64) -> Self;
}

impl ScaleComplex for DMatrix<Complex64> {
    fn scale_complex(&self, z: Complex64) -> Self {
        self.map(|v| v * z)
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Operator[{}; {}x{}]", self.sig, self.dim(), self.dim())
    }
}

macro_rules! operator_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait for &Operator {
            type Output = Operator;
            fn $method(self, rhs: &Operator) -> Operator {
                let (a, b) =
                    Operator::unify(self, rhs).expect("operators from the same registry");
                Operator {
                    sig: a.sig.clone(),
                    mat: &a.mat $op &b.mat,
                }
            }
        }
        impl $trait for Operator {
            type Output = Operator;
            fn $method(self, rhs: Operator) -> Operator {
                (&self).$method(&rhs)
            }
        }
    };
}

operator_binop!(Add, add, +);
operator_binop!(Sub, sub, -);
operator_binop!(Mul, mul, *);

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale_re(-1.0)
    }
}

impl Neg for Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale_re(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::SpaceRegistry;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(d: usize, rng: &mut StdRng) -> DMatrix<Complex64> {
        DMatrix::from_fn(d, d, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    #[test]
    fn annihilation_cutoff_3() {
        let mut reg = SpaceRegistry::new();
        let f = reg.fock("c", 3).unwrap();
        let a = Operator::annihilation(&f).unwrap();
        let expect = DMatrix::from_row_slice(
            3,
            3,
            &[
                c(0.0, 0.0),
                c(1.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(2f64.sqrt(), 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
            ],
        );
        assert!((a.matrix() - expect).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn annihilation_cutoff_1_is_zero() {
        let mut reg = SpaceRegistry::new();
        let f = reg.fock("c", 1).unwrap();
        let a = Operator::annihilation(&f).unwrap();
        assert_eq!(a.dim(), 1);
        assert!(a.is_zero(0.0));
    }

    #[test]
    fn annihilation_needs_fock() {
        let mut reg = SpaceRegistry::new();
        let f = reg.generic("q", 2).unwrap();
        assert!(matches!(
            Operator::annihilation(&f),
            Err(HilbertError::NotFock(..))
        ));
    }

    #[test]
    fn number_operator_from_product() {
        let mut reg = SpaceRegistry::new();
        let f = reg.fock("c", 4).unwrap();
        let a = Operator::annihilation(&f).unwrap();
        let n_from_product = &a.dagger() * &a;
        let n_direct = Operator::diagonal(
            &f,
            &[c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)],
        )
        .unwrap();
        assert!(n_from_product.approx_eq(&n_direct, 1e-12));
    }

    #[test]
    fn embed_single_into_pair() {
        let mut reg = SpaceRegistry::new();
        let c1 = reg.fock("c1", 3).unwrap();
        let c2 = reg.fock("c2", 2).unwrap();
        let a = Operator::annihilation(&c1).unwrap();
        let sig = Signature::of(&[c1.clone(), c2.clone()]);
        let big = a.embed(&sig).unwrap();
        assert_eq!(big.dim(), 6);
        // a ⊗ I2 in row-major (c1 most significant) layout equals kron(a, I2)
        let i2 = DMatrix::<Complex64>::identity(2, 2);
        let kron = a.matrix().kronecker(&i2);
        assert!((big.matrix() - kron).iter().all(|z| z.norm() < 1e-15));

        let id = Operator::identity(&Signature::single(&c1));
        let id_big = id.embed(&sig).unwrap();
        assert!(id_big.approx_eq(&Operator::identity(&sig), 1e-15));
    }

    #[test]
    fn embed_second_factor_is_right_kron() {
        let mut reg = SpaceRegistry::new();
        let c1 = reg.fock("c1", 3).unwrap();
        let c2 = reg.fock("c2", 2).unwrap();
        let b = Operator::annihilation(&c2).unwrap();
        let sig = Signature::of(&[c1.clone(), c2.clone()]);
        let big = b.embed(&sig).unwrap();
        let i3 = DMatrix::<Complex64>::identity(3, 3);
        let kron = i3.kronecker(b.matrix());
        assert!((big.matrix() - kron).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn embed_missing_factor_fails() {
        let mut reg = SpaceRegistry::new();
        let c1 = reg.fock("c1", 3).unwrap();
        let c2 = reg.fock("c2", 2).unwrap();
        let a = Operator::annihilation(&c1).unwrap();
        assert!(matches!(
            a.embed(&Signature::single(&c2)),
            Err(HilbertError::MissingFactor { .. })
        ));
    }

    #[test]
    fn embed_is_algebra_homomorphism() {
        let mut rng = StdRng::seed_from_u64(7);
        let mut reg = SpaceRegistry::new();
        let c1 = reg.fock("c1", 3).unwrap();
        let c2 = reg.fock("c2", 2).unwrap();
        let c3 = reg.generic("q", 2).unwrap();
        let sig1 = Signature::single(&c1);
        let target = Signature::of(&[c1.clone(), c2.clone(), c3.clone()]);
        for _ in 0..20 {
            let a = Operator::new(sig1.clone(), random_matrix(3, &mut rng)).unwrap();
            let b = Operator::new(sig1.clone(), random_matrix(3, &mut rng)).unwrap();
            let lhs = (&a * &b).embed(&target).unwrap();
            let rhs = &a.embed(&target).unwrap() * &b.embed(&target).unwrap();
            assert!(lhs.approx_eq(&rhs, 1e-12), "embed(AB) = embed(A)embed(B)");
            let lhs = (&a + &b).embed(&target).unwrap();
            let rhs = &a.embed(&target).unwrap() + &b.embed(&target).unwrap();
            assert!(lhs.approx_eq(&rhs, 1e-12), "embed(A+B) = embed(A)+embed(B)");
            let lhs = a.dagger().embed(&target).unwrap();
            let rhs = a.embed(&target).unwrap().dagger();
            assert!(lhs.approx_eq(&rhs, 1e-12), "embed(A*) = embed(A)*");
        }
    }

    #[test]
    fn embed_interleaved_factor_pair() {
        // operator on (c1, c3) embedded into (c1, c2, c3): c2 sits in between
        let mut rng = StdRng::seed_from_u64(11);
        let mut reg = SpaceRegistry::new();
        let c1 = reg.fock("c1", 2).unwrap();
        let c2 = reg.fock("c2", 3).unwrap();
        let c3 = reg.fock("c3", 2).unwrap();
        let s13 = Signature::of(&[c1.clone(), c3.clone()]);
        let target = Signature::of(&[c1.clone(), c2.clone(), c3.clone()]);
        let a1 = Operator::new(Signature::single(&c1), random_matrix(2, &mut rng)).unwrap();
        let a3 = Operator::new(Signature::single(&c3), random_matrix(2, &mut rng)).unwrap();
        // build a1 ⊗ a3 on (c1, c3) by kron, embed, compare against product of
        // separate embeddings
        let prod13 = Operator::new(s13, a1.matrix().kronecker(a3.matrix())).unwrap();
        let lhs = prod13.embed(&target).unwrap();
        let rhs = &a1.embed(&target).unwrap() * &a3.embed(&target).unwrap();
        assert!(lhs.approx_eq(&rhs, 1e-12));
    }

    #[test]
    fn commutator_ccr_truncation_aware() {
        let mut reg = SpaceRegistry::new();
        let f = reg.fock("c", 6).unwrap();
        let a = Operator::annihilation(&f).unwrap();
        let comm = a.commutator(&a.dagger());
        // [a, a*] = diag(1,1,1,1,1,-5) at cutoff 6
        for n in 0..5 {
            assert!((comm.matrix()[(n, n)] - c(1.0, 0.0)).norm() < 1e-12);
        }
        assert!((comm.matrix()[(5, 5)] - c(-5.0, 0.0)).norm() < 1e-12);
        // off-diagonals vanish
        for r in 0..6 {
            for cc in 0..6 {
                if r != cc {
                    assert!(comm.matrix()[(r, cc)].norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn commutator_antisymmetry() {
        let mut rng = StdRng::seed_from_u64(3);
        let mut reg = SpaceRegistry::new();
        let f = reg.fock("c", 4).unwrap();
        let x = Operator::new(Signature::single(&f), random_matrix(4, &mut rng)).unwrap();
        assert!(x.commutator(&x).is_zero(1e-12));
    }

    #[test]
    fn commutator_a_with_number() {
        // [a, a*a] = a below the truncation edge
        let mut reg = SpaceRegistry::new();
        let f = reg.fock("c", 6).unwrap();
        let a = Operator::annihilation(&f).unwrap();
        let n = Operator::number(&f).unwrap();
        let comm = a.commutator(&n);
        let cutoff = 6;
        for row in 0..cutoff - 1 {
            for col in 0..cutoff - 1 {
                assert!(
                    (comm.matrix()[(row, col)] - a.matrix()[(row, col)]).norm() < 1e-12,
                    "[a, a*a] = a on rows/cols below cutoff-1"
                );
            }
        }
    }

    #[test]
    fn hermitian_function_exponential() {
        let mut reg = SpaceRegistry::new();
        let f = reg.fock("c", 4).unwrap();
        let n = Operator::number(&f).unwrap();
        let u = n.exp_minus_i(1e-10).unwrap();
        // exp(-i n) is diagonal with entries e^{-ik}
        for k in 0..4 {
            let expect = Complex64::new(0.0, -(k as f64)).exp();
            assert!((u.matrix()[(k, k)] - expect).norm() < 1e-12);
        }
        // unitary
        let uu = &u.dagger() * &u;
        assert!(uu.approx_eq(&Operator::identity(u.signature()), 1e-12));
    }

    #[test]
    fn scalar_arithmetic_embeds() {
        let mut reg = SpaceRegistry::new();
        let f = reg.fock("c", 3).unwrap();
        let a = Operator::annihilation(&f).unwrap();
        let two = Operator::scalar_re(2.0);
        let sum = &a + &two;
        assert_eq!(sum.dim(), 3);
        assert!((sum.matrix()[(0, 0)] - c(2.0, 0.0)).norm() < 1e-15);
        assert!((sum.matrix()[(0, 1)] - c(1.0, 0.0)).norm() < 1e-15);
    }
}
