//! Rectangular arrays of operators: the scattering matrix `S`, coupling
//! vector `L`, and the Itô coefficient blocks.
//!
//! All entries of a matrix share one signature; constructors embed entries
//! into the union signature. Empty (0-row or 0-column) matrices are legal and
//! carry their signature explicitly so zero-channel systems compose cleanly.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::hilbert::{HilbertError, Signature};
use crate::operator::Operator;

/// Matrix with [`Operator`] entries, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    rows: usize,
    cols: usize,
    sig: Signature,
    entries: Vec<Operator>,
}

/// Column vector of operators (`n x 1` [`OperatorMatrix`]).
pub type OperatorVector = OperatorMatrix;

impl OperatorMatrix {
    /// Build from nested rows, embedding all entries on a common signature.
    pub fn from_rows(rows: Vec<Vec<Operator>>) -> Result<Self, HilbertError> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(HilbertError::Shape("ragged operator matrix".into()));
        }
        let mut sig = Signature::scalar();
        for r in &rows {
            for e in r {
                sig = sig.union(e.signature())?;
            }
        }
        let mut entries = Vec::with_capacity(nrows * ncols);
        for r in rows {
            for e in r {
                entries.push(e.embed(&sig)?);
            }
        }
        Ok(OperatorMatrix {
            rows: nrows,
            cols: ncols,
            sig,
            entries,
        })
    }

    /// Column vector from a list of operators.
    pub fn column(entries: Vec<Operator>) -> Result<Self, HilbertError> {
        Self::from_rows(entries.into_iter().map(|e| vec![e]).collect())
    }

    /// Empty matrix of a given shape on a signature (all zero entries).
    pub fn zeros(rows: usize, cols: usize, sig: &Signature) -> Self {
        let zero = Operator::zero(sig);
        OperatorMatrix {
            rows,
            cols,
            sig: sig.clone(),
            entries: vec![zero; rows * cols],
        }
    }

    /// `n x n` identity (identity operators on the diagonal).
    pub fn identity(n: usize, sig: &Signature) -> Self {
        let mut m = Self::zeros(n, n, sig);
        let id = Operator::identity(sig);
        for k in 0..n {
            m.entries[k * n + k] = id.clone();
        }
        m
    }

    /// Matrix of scalar entries (each `z_ij` becomes `z_ij * I` on `sig`).
    pub fn from_scalars(scalars: &DMatrix<Complex64>, sig: &Signature) -> Self {
        let id = Operator::identity(sig);
        let entries = scalars.row_iter().flat_map(|row| {
            row.iter().map(|z| id.scale(*z)).collect::<Vec<_>>()
        });
        OperatorMatrix {
            rows: scalars.nrows(),
            cols: scalars.ncols(),
            sig: sig.clone(),
            entries: entries.collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn entry(&self, i: usize, j: usize) -> &Operator {
        &self.entries[i * self.cols + j]
    }

    pub fn entries(&self) -> &[Operator] {
        &self.entries
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Re-embed every entry on a larger signature.
    pub fn embed(&self, target: &Signature) -> Result<Self, HilbertError> {
        if self.sig == *target {
            return Ok(self.clone());
        }
        let entries = self
            .entries
            .iter()
            .map(|e| e.embed(target))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(OperatorMatrix {
            rows: self.rows,
            cols: self.cols,
            sig: target.clone(),
            entries,
        })
    }

    pub fn unify(a: &Self, b: &Self) -> Result<(Self, Self), HilbertError> {
        if a.sig == b.sig {
            return Ok((a.clone(), b.clone()));
        }
        let sig = a.sig.union(&b.sig)?;
        Ok((a.embed(&sig)?, b.embed(&sig)?))
    }

    /// Conjugate transpose `M† = {m_ji*}`.
    pub fn dagger(&self) -> Self {
        let mut entries = Vec::with_capacity(self.entries.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                entries.push(self.entry(i, j).dagger());
            }
        }
        OperatorMatrix {
            rows: self.cols,
            cols: self.rows,
            sig: self.sig.clone(),
            entries,
        }
    }

    /// Entrywise adjoint `M♯ = {m_ij*}` (no transposition).
    pub fn sharp(&self) -> Self {
        OperatorMatrix {
            rows: self.rows,
            cols: self.cols,
            sig: self.sig.clone(),
            entries: self.entries.iter().map(|e| e.dagger()).collect(),
        }
    }

    /// Transpose `Mᵀ = {m_ji}` (no entry adjoints).
    pub fn transpose(&self) -> Self {
        let mut entries = Vec::with_capacity(self.entries.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                entries.push(self.entry(i, j).clone());
            }
        }
        OperatorMatrix {
            rows: self.cols,
            cols: self.rows,
            sig: self.sig.clone(),
            entries,
        }
    }

    pub fn scale(&self, z: Complex64) -> Self {
        OperatorMatrix {
            rows: self.rows,
            cols: self.cols,
            sig: self.sig.clone(),
            entries: self.entries.iter().map(|e| e.scale(z)).collect(),
        }
    }

    /// Block-diagonal assembly `diag(self, other)`.
    pub fn block_diag(&self, other: &Self) -> Result<Self, HilbertError> {
        let (a, b) = Self::unify(self, other)?;
        let rows = a.rows + b.rows;
        let cols = a.cols + b.cols;
        let mut m = Self::zeros(rows, cols, &a.sig);
        for i in 0..a.rows {
            for j in 0..a.cols {
                m.entries[i * cols + j] = a.entry(i, j).clone();
            }
        }
        for i in 0..b.rows {
            for j in 0..b.cols {
                m.entries[(a.rows + i) * cols + (a.cols + j)] = b.entry(i, j).clone();
            }
        }
        Ok(m)
    }

    /// Vertical stack (matching column counts; an empty side passes through).
    pub fn vstack(&self, other: &Self) -> Result<Self, HilbertError> {
        let (a, b) = Self::unify(self, other)?;
        if a.rows != 0 && b.rows != 0 && a.cols != b.cols {
            return Err(HilbertError::Shape(format!(
                "vstack of {}x{} and {}x{}",
                a.rows, a.cols, b.rows, b.cols
            )));
        }
        let cols = if a.rows == 0 { b.cols } else { a.cols };
        let mut entries = a.entries.clone();
        entries.extend(b.entries.iter().cloned());
        Ok(OperatorMatrix {
            rows: a.rows + b.rows,
            cols,
            sig: a.sig.clone(),
            entries,
        })
    }

    /// Permute rows: row `i` of the result is row `perm[i]` of `self`.
    pub fn permute_rows(&self, perm: &[usize]) -> Result<Self, HilbertError> {
        if perm.len() != self.rows {
            return Err(HilbertError::Shape("permutation length mismatch".into()));
        }
        let mut seen = vec![false; self.rows];
        for &p in perm {
            if p >= self.rows || seen[p] {
                return Err(HilbertError::Shape("not a permutation".into()));
            }
            seen[p] = true;
        }
        let mut entries = Vec::with_capacity(self.entries.len());
        for &p in perm {
            for j in 0..self.cols {
                entries.push(self.entry(p, j).clone());
            }
        }
        Ok(OperatorMatrix {
            rows: self.rows,
            cols: self.cols,
            sig: self.sig.clone(),
            entries,
        })
    }

    /// Reduce a `1x1` operator matrix to its single entry.
    pub fn into_operator(self) -> Result<Operator, HilbertError> {
        if self.rows != 1 || self.cols != 1 {
            return Err(HilbertError::Shape(format!(
                "expected 1x1 operator matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        Ok(self.entries.into_iter().next().unwrap())
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.max_abs()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "shape mismatch in operator-matrix comparison"
        );
        let (a, b) = Self::unify(self, other).expect("operator matrices from the same registry");
        a.entries
            .iter()
            .zip(&b.entries)
            .map(|(x, y)| x.max_abs_diff(y))
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.max_abs_diff(other) <= tol
    }

    /// `true` iff `M†M` and `MM†` are both within `tol` of the identity.
    pub fn is_unitary(&self, tol: f64) -> Result<bool, HilbertError> {
        if !self.is_square() {
            return Err(HilbertError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let id = Self::identity(self.rows, &self.sig);
        let left = &self.dagger() * self;
        let right = self * &self.dagger();
        Ok(left.max_abs_diff(&id) <= tol && right.max_abs_diff(&id) <= tol)
    }
}

impl Mul for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(
            self.cols, rhs.rows,
            "operator-matrix product shape mismatch: {}x{} * {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let (a, b) = OperatorMatrix::unify(self, rhs)
            .expect("operator matrices from the same registry");
        let mut out = OperatorMatrix::zeros(a.rows, b.cols, &a.sig);
        for i in 0..a.rows {
            for j in 0..b.cols {
                let mut acc = Operator::zero(&a.sig);
                for k in 0..a.cols {
                    acc = &acc + &(a.entry(i, k) * b.entry(k, j));
                }
                out.entries[i * b.cols + j] = acc;
            }
        }
        out
    }
}

impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        let (a, b) = OperatorMatrix::unify(self, rhs)
            .expect("operator matrices from the same registry");
        OperatorMatrix {
            rows: a.rows,
            cols: a.cols,
            sig: a.sig.clone(),
            entries: a
                .entries
                .iter()
                .zip(&b.entries)
                .map(|(x, y)| x + y)
                .collect(),
        }
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        let (a, b) = OperatorMatrix::unify(self, rhs)
            .expect("operator matrices from the same registry");
        OperatorMatrix {
            rows: a.rows,
            cols: a.cols,
            sig: a.sig.clone(),
            entries: a
                .entries
                .iter()
                .zip(&b.entries)
                .map(|(x, y)| x - y)
                .collect(),
        }
    }
}

impl Neg for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn neg(self) -> OperatorMatrix {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::SpaceRegistry;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn dagger_of_scalar_entry() {
        let m = OperatorMatrix::from_rows(vec![vec![Operator::scalar(c(0.0, 1.0))]]).unwrap();
        let d = m.dagger();
        assert!((d.entry(0, 0).matrix()[(0, 0)] - c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn conjugation_identities() {
        // M† = (Mᵀ)♯ = (M♯)ᵀ and dagger is an involution
        let mut reg = SpaceRegistry::new();
        let f = reg.fock("c", 3).unwrap();
        let a = Operator::annihilation(&f).unwrap();
        let m = OperatorMatrix::from_rows(vec![
            vec![a.clone(), a.dagger()],
            vec![&a + &a.dagger(), Operator::scalar(c(0.3, -0.7))],
        ])
        .unwrap();
        assert!(m.dagger().approx_eq(&m.transpose().sharp(), 0.0));
        assert!(m.dagger().approx_eq(&m.sharp().transpose(), 0.0));
        assert!(m.dagger().dagger().approx_eq(&m, 0.0));
        // entrywise adjoints transposed
        assert!(m.dagger().entry(1, 0).approx_eq(&a, 1e-15));
    }

    #[test]
    fn beamsplitter_matrix_is_unitary() {
        // |alpha|^2 + |beta|^2 = 1 and alpha* beta = alpha beta* (common phase)
        let phase = c(0.0, 0.4).exp();
        let alpha = phase * 0.6;
        let beta = phase * 0.8;
        let s = DMatrix::from_row_slice(2, 2, &[beta, -alpha, alpha, beta]);
        let m = OperatorMatrix::from_scalars(&s, &Signature::scalar());
        assert!(m.is_unitary(1e-12).unwrap());
    }

    #[test]
    fn identity_is_unitary_and_two_is_not() {
        let sig = Signature::scalar();
        assert!(OperatorMatrix::identity(2, &sig).is_unitary(1e-12).unwrap());
        let two = OperatorMatrix::from_rows(vec![vec![Operator::scalar_re(2.0)]]).unwrap();
        assert!(!two.is_unitary(1e-12).unwrap());
    }

    #[test]
    fn non_square_unitary_check_errors() {
        let sig = Signature::scalar();
        let m = OperatorMatrix::zeros(2, 1, &sig);
        assert!(matches!(
            m.is_unitary(1e-12),
            Err(HilbertError::NotSquare { .. })
        ));
    }

    #[test]
    fn block_diag_and_vstack() {
        let sig = Signature::scalar();
        let a = OperatorMatrix::identity(1, &sig);
        let b = OperatorMatrix::identity(2, &sig);
        let d = a.block_diag(&b).unwrap();
        assert_eq!((d.rows(), d.cols()), (3, 3));
        assert!(d.is_unitary(1e-12).unwrap());

        let u = OperatorMatrix::column(vec![Operator::scalar_re(1.0)]).unwrap();
        let v = OperatorMatrix::column(vec![Operator::scalar_re(2.0)]).unwrap();
        let s = u.vstack(&v).unwrap();
        assert_eq!((s.rows(), s.cols()), (2, 1));
    }

    #[test]
    fn empty_matrices_compose() {
        let sig = Signature::scalar();
        let empty = OperatorMatrix::zeros(0, 0, &sig);
        let b = OperatorMatrix::identity(2, &sig);
        let d = empty.block_diag(&b).unwrap();
        assert_eq!((d.rows(), d.cols()), (2, 2));
        let col0 = OperatorMatrix::zeros(0, 1, &sig);
        let l = OperatorMatrix::column(vec![Operator::scalar_re(3.0)]).unwrap();
        let s = col0.vstack(&l).unwrap();
        assert_eq!((s.rows(), s.cols()), (1, 1));
    }

    #[test]
    fn permute_rows_round_trip() {
        let m = OperatorMatrix::from_rows(vec![
            vec![Operator::scalar_re(1.0)],
            vec![Operator::scalar_re(2.0)],
            vec![Operator::scalar_re(3.0)],
        ])
        .unwrap();
        let p = m.permute_rows(&[2, 0, 1]).unwrap();
        assert!((p.entry(0, 0).matrix()[(0, 0)] - c(3.0, 0.0)).norm() < 1e-15);
        // inverse permutation restores
        let back = p.permute_rows(&[1, 2, 0]).unwrap();
        assert!(back.approx_eq(&m, 0.0));
        assert!(m.permute_rows(&[0, 0, 1]).is_err());
    }
}
