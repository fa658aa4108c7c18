//! Classical linear-system products and the grid embedding of a classical
//! SDE as a commutative quantum subsystem.
//!
//! The linear part mirrors the quantum products at the `(A, B, C, D)` level:
//! concatenation is block-diagonal assembly, the series connection
//! `u2 = y1` multiplies transfer functions.
//!
//! The embedding part discretizes a 1-D Itô diffusion
//! `dx = f̃(x) dt + g(x) dw`, `dY = h(x) dt + dv` on a uniform grid:
//! `q` is the diagonal position operator, `p = -i D` with `D` the central
//! difference (one-sided at the boundary rows), and
//!
//! ```text
//! L_c1 = -i g(q) p - (1/2) g'(q)      (diffusion port)
//! L_c2 = h(q) / 2                     (measurement port)
//! H_c  = (f(q) p + p f(q)) / 2,       f = f̃ - (1/2) g' g  (Stratonovich drift)
//! ```
//!
//! `H_c` is hermitian only up to the boundary rows; the defect is exposed by
//! [`GridEmbedding::hermiticity_defect`] rather than hidden. Test functions
//! should vanish near the boundary so those rows never enter assertions.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::sync::Arc;
use thiserror::Error;

use crate::hilbert::{HilbertError, Signature, SpaceFactor, SpaceRegistry};
use crate::op_matrix::OperatorMatrix;
use crate::operator::Operator;
use crate::slh::{SlhError, SlhTriple};

#[derive(Debug, Error)]
pub enum ClassicalError {
    #[error("matrix shapes are inconsistent: {0}")]
    Shape(String),
    #[error("series requires dim u2 = dim y1 (got {u2} inputs vs {y1} outputs)")]
    DimensionMismatch { u2: usize, y1: usize },
    #[error("state matrix must be invertible at s = {0}")]
    SingularResolvent(Complex64),
    #[error("grid needs at least 3 points, got {0}")]
    GridTooSmall(usize),
    #[error("sampled coefficient is not finite at x = {0}")]
    NonFiniteSample(f64),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
    #[error(transparent)]
    Slh(#[from] SlhError),
}

/// State-space model `dx = Ax + Bu`, `y = Cx + Du`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalLinearSystem {
    a: DMatrix<Complex64>,
    b: DMatrix<Complex64>,
    c: DMatrix<Complex64>,
    d: DMatrix<Complex64>,
}

impl ClassicalLinearSystem {
    pub fn new(
        a: DMatrix<Complex64>,
        b: DMatrix<Complex64>,
        c: DMatrix<Complex64>,
        d: DMatrix<Complex64>,
    ) -> Result<Self, ClassicalError> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(ClassicalError::Shape(format!(
                "A is {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != n || c.ncols() != n || d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(ClassicalError::Shape(format!(
                "A {}x{}, B {}x{}, C {}x{}, D {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols(),
                d.nrows(),
                d.ncols()
            )));
        }
        Ok(ClassicalLinearSystem { a, b, c, d })
    }

    pub fn from_reals(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<Self, ClassicalError> {
        let lift = |m: &DMatrix<f64>| m.map(Complex64::from);
        Self::new(lift(a), lift(b), lift(c), lift(d))
    }

    /// The `m`-input identity pass-through (no states, `D = I`).
    pub fn identity_passthrough(m: usize) -> Self {
        ClassicalLinearSystem {
            a: DMatrix::zeros(0, 0),
            b: DMatrix::zeros(0, m),
            c: DMatrix::zeros(m, 0),
            d: DMatrix::identity(m, m),
        }
    }

    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn n_outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn a(&self) -> &DMatrix<Complex64> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<Complex64> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<Complex64> {
        &self.c
    }
    pub fn d(&self) -> &DMatrix<Complex64> {
        &self.d
    }

    /// Concatenation: block-diagonal `A`, `B`, `C`, `D`.
    pub fn concatenate(&self, other: &Self) -> Self {
        ClassicalLinearSystem {
            a: block_diag(&self.a, &other.a),
            b: block_diag(&self.b, &other.b),
            c: block_diag(&self.c, &other.c),
            d: block_diag(&self.d, &other.d),
        }
    }

    /// Series connection `self ◁ upstream` (`u2 = y1`):
    /// `A = [[A1, 0], [B2 C1, A2]]`, `B = [B1; B2 D1]`,
    /// `C = [D2 C1, C2]`, `D = D2 D1`.
    pub fn series(&self, upstream: &Self) -> Result<Self, ClassicalError> {
        if self.n_inputs() != upstream.n_outputs() {
            return Err(ClassicalError::DimensionMismatch {
                u2: self.n_inputs(),
                y1: upstream.n_outputs(),
            });
        }
        let (n1, n2) = (upstream.n_states(), self.n_states());
        let mut a = DMatrix::zeros(n1 + n2, n1 + n2);
        a.view_mut((0, 0), (n1, n1)).copy_from(&upstream.a);
        a.view_mut((n1, 0), (n2, n1)).copy_from(&(&self.b * &upstream.c));
        a.view_mut((n1, n1), (n2, n2)).copy_from(&self.a);

        let m = upstream.n_inputs();
        let mut b = DMatrix::zeros(n1 + n2, m);
        b.view_mut((0, 0), (n1, m)).copy_from(&upstream.b);
        b.view_mut((n1, 0), (n2, m)).copy_from(&(&self.b * &upstream.d));

        let p = self.n_outputs();
        let mut c = DMatrix::zeros(p, n1 + n2);
        c.view_mut((0, 0), (p, n1)).copy_from(&(&self.d * &upstream.c));
        c.view_mut((0, n1), (p, n2)).copy_from(&self.c);

        let d = &self.d * &upstream.d;
        ClassicalLinearSystem::new(a, b, c, d)
    }

    /// Transfer function `C (sI - A)^{-1} B + D`.
    pub fn transfer(&self, s: Complex64) -> Result<DMatrix<Complex64>, ClassicalError> {
        if self.n_states() == 0 {
            return Ok(self.d.clone());
        }
        let n = self.n_states();
        let resolvent = (DMatrix::<Complex64>::identity(n, n) * s - &self.a)
            .try_inverse()
            .ok_or(ClassicalError::SingularResolvent(s))?;
        Ok(&self.c * resolvent * &self.b + &self.d)
    }
}

fn block_diag(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), (b.nrows(), b.ncols()))
        .copy_from(b);
    out
}

/// Uniform 1-D lattice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Grid {
    pub fn new(min: f64, max: f64, points: usize) -> Result<Self, ClassicalError> {
        if points < 3 {
            return Err(ClassicalError::GridTooSmall(points));
        }
        Ok(Grid { min, max, points })
    }

    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / (self.points - 1) as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.points).map(|i| self.min + i as f64 * h).collect()
    }

    /// Central-difference first derivative, one-sided at the boundary rows.
    pub fn derivative_matrix(&self) -> DMatrix<f64> {
        let n = self.points;
        let h = self.spacing();
        let mut d = DMatrix::zeros(n, n);
        d[(0, 0)] = -1.0 / h;
        d[(0, 1)] = 1.0 / h;
        for i in 1..n - 1 {
            d[(i, i - 1)] = -0.5 / h;
            d[(i, i + 1)] = 0.5 / h;
        }
        d[(n - 1, n - 2)] = -1.0 / h;
        d[(n - 1, n - 1)] = 1.0 / h;
        d
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes().into_iter().map(f).collect()
    }
}

/// The diffusion generator `𝔏(φ) = f φ' + (1/2) g (g φ')'` realized with the
/// grid's difference stencils. `f` is the Stratonovich-corrected drift.
pub struct ClassicalGenerator {
    matrix: DMatrix<f64>,
}

impl ClassicalGenerator {
    pub fn new(grid: &Grid, f: &[f64], g: &[f64]) -> Result<Self, ClassicalError> {
        if f.len() != grid.points || g.len() != grid.points {
            return Err(ClassicalError::Shape(
                "drift/diffusion samples must match the grid".into(),
            ));
        }
        let d = grid.derivative_matrix();
        let fd = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(f));
        let gd = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(g));
        let matrix = &fd * &d + (&gd * &d * &gd * &d).scale(0.5);
        Ok(ClassicalGenerator { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn apply(&self, phi: &[f64]) -> Vec<f64> {
        let v = nalgebra::DVector::from_row_slice(phi);
        (&self.matrix * v).iter().copied().collect()
    }
}

/// Stratonovich drift samples `f = f̃ - (1/2) (Dg) ⊙ g` on the grid.
pub fn stratonovich_drift(grid: &Grid, f_tilde: &[f64], g: &[f64]) -> Vec<f64> {
    let d = grid.derivative_matrix();
    let gv = nalgebra::DVector::from_row_slice(g);
    let dg = &d * &gv;
    f_tilde
        .iter()
        .zip(g.iter().zip(dg.iter()))
        .map(|(ft, (gi, dgi))| ft - 0.5 * dgi * gi)
        .collect()
}

/// Grid realization of the classical SDE as a two-port quantum component.
pub struct GridEmbedding {
    pub grid: Grid,
    pub factor: Arc<SpaceFactor>,
    /// Diagonal position operator.
    pub q: Operator,
    /// `-i x` central difference.
    pub p: Operator,
    pub l_c1: Operator,
    pub l_c2: Operator,
    pub h_c: Operator,
    /// `(1, L_c1, H_c)` — the diffusion port.
    pub g_c1: SlhTriple,
    /// `(1, L_c2, 0)` — the measurement port.
    pub g_c2: SlhTriple,
}

impl GridEmbedding {
    /// The full two-channel component `G_c = G_c1 ⊞ G_c2`.
    pub fn component(&self) -> Result<SlhTriple, SlhError> {
        self.g_c1.concatenate(&self.g_c2)
    }

    /// `max |H_c - H_c†|`: nonzero because of the one-sided boundary rows.
    pub fn hermiticity_defect(&self) -> f64 {
        self.h_c.max_abs_diff(&self.h_c.dagger())
    }

    /// Diagonal operator `φ(q)` from a grid function.
    pub fn observable(&self, phi: &[f64]) -> Result<Operator, ClassicalError> {
        let values: Vec<Complex64> = phi.iter().map(|&x| Complex64::from(x)).collect();
        Ok(Operator::diagonal(&self.factor, &values)?)
    }
}

/// Discretize `dx = f̃ dt + g dw`, `dY = h dt + dv` on `grid`, registering a
/// generic factor under `label`.
pub fn embed_sde_grid(
    registry: &mut SpaceRegistry,
    label: &str,
    grid: Grid,
    f_tilde: impl Fn(f64) -> f64,
    g: impl Fn(f64) -> f64,
    h: impl Fn(f64) -> f64,
) -> Result<GridEmbedding, ClassicalError> {
    let nodes = grid.nodes();
    let ft: Vec<f64> = nodes.iter().map(|&x| f_tilde(x)).collect();
    let gv: Vec<f64> = nodes.iter().map(|&x| g(x)).collect();
    let hv: Vec<f64> = nodes.iter().map(|&x| h(x)).collect();
    for (vals, xs) in [(&ft, &nodes), (&gv, &nodes), (&hv, &nodes)] {
        if let Some(i) = vals.iter().position(|v| !v.is_finite()) {
            return Err(ClassicalError::NonFiniteSample(xs[i]));
        }
    }
    let factor = registry.generic(label, grid.points)?;
    let sig = Signature::single(&factor);

    let to_complex = |v: &[f64]| -> Vec<Complex64> { v.iter().map(|&x| Complex64::from(x)).collect() };
    let diag = |v: &[f64]| -> Result<Operator, HilbertError> {
        Operator::diagonal(&factor, &to_complex(v))
    };

    let q = diag(&nodes)?;
    let d_real = grid.derivative_matrix();
    let p = Operator::new(
        sig.clone(),
        d_real.map(|x| Complex64::new(0.0, -x)),
    )?;

    let dvec = &d_real * nalgebra::DVector::from_row_slice(&gv);
    let dg: Vec<f64> = dvec.iter().copied().collect();
    let f = stratonovich_drift(&grid, &ft, &gv);

    // L_c1 = -i g(q) p - (1/2) g'(q)
    let g_op = diag(&gv)?;
    let l_c1 = &(&g_op * &p).scale(Complex64::new(0.0, -1.0)) - &diag(&dg)?.scale_re(0.5);
    // L_c2 = h(q)/2
    let l_c2 = diag(&hv)?.scale_re(0.5);
    // H_c = (f(q) p + p f(q)) / 2
    let f_op = diag(&f)?;
    let h_c = (&(&f_op * &p) + &(&p * &f_op)).scale_re(0.5);

    let g_c1 = SlhTriple::new_unchecked(
        OperatorMatrix::identity(1, &sig),
        OperatorMatrix::column(vec![l_c1.clone()])?,
        h_c.clone(),
    )?;
    let g_c2 = SlhTriple::new(
        OperatorMatrix::identity(1, &sig),
        OperatorMatrix::column(vec![l_c2.clone()])?,
        Operator::zero(&sig),
    )?;

    Ok(GridEmbedding {
        grid,
        factor,
        q,
        p,
        l_c1,
        l_c2,
        h_c,
        g_c1,
        g_c2,
    })
}

/// Drift part of the embedded Heisenberg generator applied to an observable:
/// `-i[X, H_c] + L_{c1}(X) + L_{c2}(X)`.
pub fn embedded_generator(embedding: &GridEmbedding, x: &Operator) -> Operator {
    let comm = x.commutator(&embedding.h_c).scale(Complex64::new(0.0, -1.0));
    let diss = |l: &Operator| {
        let ld = l.dagger();
        (&(&ld * &x.commutator(l)) + &(&ld.commutator(x) * l)).scale_re(0.5)
    };
    &(&comm + &diss(&embedding.l_c1)) + &diss(&embedding.l_c2)
}
