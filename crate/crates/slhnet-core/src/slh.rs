//! The `(S, L, H)` triple and its composition laws.
//!
//! `G = (S, L, H)` characterizes an open system coupled to `n` field
//! channels: a unitary scattering matrix, a coupling vector, and a
//! self-adjoint Hamiltonian, all on one initial-space signature. The two
//! products are
//!
//! * concatenation `G1 ⊞ G2`: block assembly with no field connection,
//! * series `G2 ◁ G1`: the output fields of `G1` feed the inputs of `G2`.
//!
//! Channel counts must match for the series product; use [`SlhTriple::pad`]
//! and [`SlhTriple::permute_channels`] to wire things up explicitly. Systems
//! without field channels (`n = 0`) are fully supported and concatenate by
//! adding Hamiltonians.

use num_complex::Complex64;
use thiserror::Error;

use crate::hilbert::{HilbertError, Signature};
use crate::op_matrix::{OperatorMatrix, OperatorVector};
use crate::operator::Operator;

/// Default tolerance for unitarity / self-adjointness validation.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum SlhError {
    #[error("scattering matrix is {rows}x{cols}, expected square")]
    ScatteringNotSquare { rows: usize, cols: usize },
    #[error("coupling vector is {rows}x{cols}, expected {n}x1")]
    CouplingShape { rows: usize, cols: usize, n: usize },
    #[error("scattering matrix is not unitary within tolerance {tol:.1e}")]
    NotUnitary { tol: f64 },
    #[error("hamiltonian is not self-adjoint (deviation {dev:.3e}, tolerance {tol:.1e})")]
    NotSelfAdjoint { dev: f64, tol: f64 },
    #[error("channel counts differ: {0} vs {1}")]
    ChannelMismatch(usize, usize),
    #[error("invalid channel permutation")]
    BadPermutation,
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
}

/// Hudson-Parthasarathy parameters `(S, L, H)` with `n` field channels.
#[derive(Clone, Debug)]
pub struct SlhTriple {
    s: OperatorMatrix,
    l: OperatorVector,
    h: Operator,
}

impl SlhTriple {
    /// Validate and build a triple with the default tolerance.
    pub fn new(s: OperatorMatrix, l: OperatorVector, h: Operator) -> Result<Self, SlhError> {
        Self::with_tol(s, l, h, DEFAULT_TOL)
    }

    /// Validate and build a triple: `S` square and unitary, `L` an `n x 1`
    /// column, `H` self-adjoint, everything embedded on one signature.
    pub fn with_tol(
        s: OperatorMatrix,
        l: OperatorVector,
        h: Operator,
        tol: f64,
    ) -> Result<Self, SlhError> {
        if !s.is_square() {
            return Err(SlhError::ScatteringNotSquare {
                rows: s.rows(),
                cols: s.cols(),
            });
        }
        let n = s.rows();
        if l.rows() != n || (n > 0 && l.cols() != 1) {
            return Err(SlhError::CouplingShape {
                rows: l.rows(),
                cols: l.cols(),
                n,
            });
        }
        let sig = s
            .signature()
            .union(l.signature())?
            .union(h.signature())?;
        let s = s.embed(&sig)?;
        let mut l = l.embed(&sig)?;
        if n == 0 {
            l = OperatorMatrix::zeros(0, 1, &sig);
        }
        let h = h.embed(&sig)?;
        if n > 0 && !s.is_unitary(tol)? {
            return Err(SlhError::NotUnitary { tol });
        }
        let dev = h.max_abs_diff(&h.dagger());
        if dev > tol {
            return Err(SlhError::NotSelfAdjoint { dev, tol });
        }
        Ok(SlhTriple { s, l, h })
    }

    /// Build a triple without validating unitarity or self-adjointness.
    ///
    /// Needed for grid-discretized systems whose one-sided boundary stencils
    /// break exact hermiticity of `H`; the defect is the caller's to report.
    /// Shapes are still checked.
    pub fn new_unchecked(
        s: OperatorMatrix,
        l: OperatorVector,
        h: Operator,
    ) -> Result<Self, SlhError> {
        Self::with_tol(s, l, h, f64::INFINITY)
    }

    /// Trivial `n`-channel pass-through `(I_n, 0, 0)` on a signature.
    pub fn passthrough(n: usize, sig: &Signature) -> Self {
        SlhTriple {
            s: OperatorMatrix::identity(n, sig),
            l: OperatorMatrix::zeros(n, 1, sig),
            h: Operator::zero(sig),
        }
    }

    /// Zero-channel system `(_, _, H)`.
    pub fn hamiltonian_only(h: Operator) -> Result<Self, SlhError> {
        let sig = h.signature().clone();
        Self::new(
            OperatorMatrix::zeros(0, 0, &sig),
            OperatorMatrix::zeros(0, 1, &sig),
            h,
        )
    }

    pub fn channels(&self) -> usize {
        self.s.rows()
    }

    pub fn scattering(&self) -> &OperatorMatrix {
        &self.s
    }

    pub fn coupling(&self) -> &OperatorVector {
        &self.l
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.h
    }

    pub fn signature(&self) -> &Signature {
        self.h.signature()
    }

    /// Embed all three parameters on a larger signature.
    pub fn embed(&self, target: &Signature) -> Result<Self, SlhError> {
        Ok(SlhTriple {
            s: self.s.embed(target)?,
            l: self.l.embed(target)?,
            h: self.h.embed(target)?,
        })
    }

    fn unify(a: &Self, b: &Self) -> Result<(Self, Self), SlhError> {
        let sig = a.signature().union(b.signature())?;
        Ok((a.embed(&sig)?, b.embed(&sig)?))
    }

    /// Concatenation `self ⊞ other`: block-diagonal `S`, stacked `L`, summed `H`.
    pub fn concatenate(&self, other: &Self) -> Result<Self, SlhError> {
        let (a, b) = Self::unify(self, other)?;
        Ok(SlhTriple {
            s: a.s.block_diag(&b.s)?,
            l: a.l.vstack(&b.l)?,
            h: &a.h + &b.h,
        })
    }

    /// Series product `self ◁ upstream`: the outputs of `upstream` drive the
    /// inputs of `self`.
    ///
    /// `(S2,L2,H2) ◁ (S1,L1,H1) = (S2 S1, L2 + S2 L1,
    ///  H1 + H2 + (1/2i)(L2† S2 L1 − L1† S2† L2))`.
    pub fn series(&self, upstream: &Self) -> Result<Self, SlhError> {
        if self.channels() != upstream.channels() {
            return Err(SlhError::ChannelMismatch(
                upstream.channels(),
                self.channels(),
            ));
        }
        let (g2, g1) = Self::unify(self, upstream)?;
        let s = &g2.s * &g1.s;
        let l = &g2.l + &(&g2.s * &g1.l);
        let cross = &(&g2.l.dagger() * &(&g2.s * &g1.l))
            - &(&g1.l.dagger() * &(&g2.s.dagger() * &g2.l));
        let h = &(&g1.h + &g2.h)
            + &cross
                .into_operator()?
                .scale(Complex64::new(0.0, -0.5));
        Self::new(s, l, h)
    }

    /// Exchange past `first`: returns `G2'` such that
    /// `self ◁ first = first ◁ G2'` (parametric equivalence).
    ///
    /// `S2' = S1† S2 S1`,
    /// `L2' = S1†(S2 − I)L1 + S1† L2`,
    /// `H2' = H2 + Im{L2†(S2 + I)L1 − L1† S2 L1}`.
    pub fn exchange_past(&self, first: &Self) -> Result<Self, SlhError> {
        if self.channels() != first.channels() {
            return Err(SlhError::ChannelMismatch(
                first.channels(),
                self.channels(),
            ));
        }
        let (g2, g1) = Self::unify(self, first)?;
        let n = g2.channels();
        let id = OperatorMatrix::identity(n, g2.signature());
        let s1d = g1.s.dagger();
        let s = &(&s1d * &g2.s) * &g1.s;
        let l = &(&s1d * &(&(&g2.s - &id) * &g1.l)) + &(&s1d * &g2.l);
        let x = &(&g2.l.dagger() * &(&(&g2.s + &id) * &g1.l))
            - &(&g1.l.dagger() * &(&g2.s * &g1.l));
        let h = &g2.h + &x.into_operator()?.im();
        Self::new(s, l, h)
    }

    /// Split off the scattering matrix:
    /// `G = series(head, tail)` with `head = (S, 0, 0)`, `tail = (I, S†L, H)`,
    /// and also `G = series((I, L, H), (S, 0, 0))`.
    pub fn move_scattering(&self) -> Result<(Self, Self), SlhError> {
        let sig = self.signature();
        let n = self.channels();
        let head = SlhTriple {
            s: self.s.clone(),
            l: OperatorMatrix::zeros(n, 1, sig),
            h: Operator::zero(sig),
        };
        let tail = Self::new(
            OperatorMatrix::identity(n, sig),
            &self.s.dagger() * &self.l,
            self.h.clone(),
        )?;
        Ok((head, tail))
    }

    /// Append `k` trivial pass-through channels: `self ⊞ (I_k, 0, 0)`.
    pub fn pad(&self, k: usize) -> Result<Self, SlhError> {
        self.concatenate(&Self::passthrough(k, self.signature()))
    }

    /// Permute channels: row `i` of the result's `S` and `L` is row
    /// `perm[i]` of the original. Realizes `(P, 0, 0) ◁ self`; `H` is
    /// unchanged.
    pub fn permute_channels(&self, perm: &[usize]) -> Result<Self, SlhError> {
        let s = self
            .s
            .permute_rows(perm)
            .map_err(|_| SlhError::BadPermutation)?;
        let l = self
            .l
            .permute_rows(perm)
            .map_err(|_| SlhError::BadPermutation)?;
        Ok(SlhTriple {
            s,
            l,
            h: self.h.clone(),
        })
    }

    /// Entrywise distance between two triples (max over S, L, H deviations).
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let ds = self.s.max_abs_diff(&other.s);
        let dl = self.l.max_abs_diff(&other.l);
        let dh = self.h.max_abs_diff(&other.h);
        ds.max(dl).max(dh)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.channels() == other.channels() && self.max_abs_diff(other) <= tol
    }
}
