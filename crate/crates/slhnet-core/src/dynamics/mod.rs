//! Reduced dynamics generated by a triple: Lindblad superoperator, master
//! equation, Heisenberg-equation coefficients, and output-field moments.
//!
//! Time evolution uses fixed-step explicit fourth-order integration. The
//! step is user-set; as a stability heuristic keep `dt * ||generator||`
//! below about `0.1`. Determinism was preferred over adaptive stepping so
//! trajectories are exactly reproducible.

mod filter;

pub use filter::{evolve_zakai, simulate_record};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::sync::Arc;
use thiserror::Error;

use crate::hilbert::{HilbertError, Signature, SpaceFactor};
use crate::op_matrix::{OperatorMatrix, OperatorVector};
use crate::operator::Operator;
use crate::slh::{SlhError, SlhTriple};

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("density operator trace is {0}, expected 1")]
    BadTrace(f64),
    #[error("density operator is not hermitian (deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("density operator has eigenvalue {0:.3e} below -tol")]
    NegativeEigenvalue(f64),
    #[error("time step must be positive and no larger than the horizon (dt={dt}, t_final={t_final})")]
    BadTimeGrid { dt: f64, t_final: f64 },
    #[error("trace drifted by {deviation:.3e} at t={t} (limit 1e-6); reduce dt")]
    TraceDrift { t: f64, deviation: f64 },
    #[error("state diverged (non-finite entries) at t={t}")]
    Diverged { t: f64 },
    #[error("channel {channel} out of range for {channels}-channel system")]
    BadChannel { channel: usize, channels: usize },
    #[error("level {level} out of range for factor of dimension {dim}")]
    LevelOutOfRange { level: usize, dim: usize },
    #[error("record length {got} does not match the time grid ({expected} steps)")]
    RecordLength { got: usize, expected: usize },
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
    #[error(transparent)]
    Slh(#[from] SlhError),
}

/// Unit-trace positive operator.
#[derive(Clone, Debug)]
pub struct DensityOperator {
    op: Operator,
}

impl DensityOperator {
    /// Validate trace, hermiticity and positivity (eigenvalues >= -tol).
    pub fn new(op: Operator, tol: f64) -> Result<Self, DynamicsError> {
        let tr = op.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(DynamicsError::BadTrace(tr.re));
        }
        let dev = op.max_abs_diff(&op.dagger());
        if dev > tol {
            return Err(DynamicsError::NotHermitian(dev));
        }
        let eigs = op.hermitian_eigenvalues(tol.max(1e-9))?;
        if let Some(&min) = eigs
            .iter()
            .min_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"))
        {
            if min < -tol {
                return Err(DynamicsError::NegativeEigenvalue(min));
            }
        }
        Ok(DensityOperator { op })
    }

    /// Pure state `psi psi*` from a ket on `sig` (normalized internally).
    pub fn pure(sig: &Signature, ket: &DVector<Complex64>) -> Result<Self, DynamicsError> {
        let norm = ket.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(DynamicsError::BadTrace(0.0));
        }
        let psi = ket / Complex64::from(norm);
        let mat = &psi * psi.adjoint();
        let op = Operator::new(sig.clone(), mat)?;
        Ok(DensityOperator { op })
    }

    /// `|0...0><0...0|`: every factor in its lowest basis state.
    pub fn vacuum(sig: &Signature) -> Self {
        let d = sig.dim();
        let mut mat = DMatrix::zeros(d, d);
        mat[(0, 0)] = Complex64::ONE;
        DensityOperator {
            op: Operator::new(sig.clone(), mat).expect("shape is consistent"),
        }
    }

    /// Basis state `|n>` on one factor, vacuum elsewhere.
    pub fn fock(
        sig: &Signature,
        factor: &Arc<SpaceFactor>,
        n: usize,
    ) -> Result<Self, DynamicsError> {
        if n >= factor.dim() {
            return Err(DynamicsError::LevelOutOfRange {
                level: n,
                dim: factor.dim(),
            });
        }
        let ket = factor_ket(sig, factor, |dim| {
            let mut v = DVector::zeros(dim);
            v[n] = Complex64::ONE;
            v
        })?;
        Self::pure(sig, &ket)
    }

    /// Truncated coherent state: displacement `exp(alpha a† - alpha* a)`
    /// applied to the vacuum of one fock factor, vacuum elsewhere.
    ///
    /// The displacement of the truncated mode is exactly unitary, but it
    /// approximates the true coherent state only while `|alpha|^2` is well
    /// below the cutoff.
    pub fn coherent(
        sig: &Signature,
        factor: &Arc<SpaceFactor>,
        alpha: Complex64,
    ) -> Result<Self, DynamicsError> {
        let a = Operator::annihilation(factor)?;
        let gen = &a.dagger().scale(alpha) - &a.scale(alpha.conj());
        // exp(G) for skew-hermitian G, via the hermitian iG
        let disp = gen
            .scale(Complex64::new(0.0, 1.0))
            .exp_minus_i(1e-9)?;
        let ket = factor_ket(sig, factor, |dim| {
            let mut v = DVector::zeros(dim);
            for r in 0..dim {
                v[r] = disp.matrix()[(r, 0)];
            }
            v
        })?;
        Self::pure(sig, &ket)
    }

    /// `I/d` on a signature.
    pub fn maximally_mixed(sig: &Signature) -> Self {
        let d = sig.dim();
        DensityOperator {
            op: Operator::identity(sig).scale_re(1.0 / d as f64),
        }
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn expectation(&self, x: &Operator) -> Complex64 {
        x.expectation(&self.op)
    }

    pub fn purity(&self) -> f64 {
        (&self.op * &self.op).trace().re
    }
}

/// Tensor a per-factor ket with vacuum on the remaining factors of `sig`.
fn factor_ket(
    sig: &Signature,
    factor: &Arc<SpaceFactor>,
    make: impl Fn(usize) -> DVector<Complex64>,
) -> Result<DVector<Complex64>, DynamicsError> {
    if !sig.contains(factor) {
        return Err(DynamicsError::Hilbert(HilbertError::MissingFactor {
            op: factor.label().to_string(),
            target: sig.to_string(),
            missing: factor.label().to_string(),
        }));
    }
    let mut ket = DMatrix::from_element(1, 1, Complex64::ONE);
    for f in sig.factors() {
        let part = if f.index() == factor.index() {
            let v = make(f.dim());
            DMatrix::from_column_slice(f.dim(), 1, v.as_slice())
        } else {
            let mut v = DMatrix::zeros(f.dim(), 1);
            v[(0, 0)] = Complex64::ONE;
            v
        };
        ket = ket.kronecker(&part);
    }
    Ok(DVector::from_column_slice(ket.as_slice()))
}

/// Heisenberg-picture Lindblad superoperator
/// `L(X) = Σ_j (L_j†[X, L_j] + [L_j†, X] L_j) / 2`.
pub fn lindblad_heisenberg(g: &SlhTriple, x: &Operator) -> Operator {
    let sig = g
        .signature()
        .union(x.signature())
        .expect("operators from the same registry");
    let x = x.embed(&sig).expect("subset of union");
    let mut acc = Operator::zero(&sig);
    for j in 0..g.channels() {
        let l = g.coupling().entry(j, 0).embed(&sig).expect("subset");
        let ld = l.dagger();
        let term = &(&ld * &x.commutator(&l)) + &(&ld.commutator(&x) * &l);
        acc = &acc + &term.scale_re(0.5);
    }
    acc
}

/// Schrödinger-picture master-equation right-hand side
/// `i[ρ, H] + Σ_j (L_j ρ L_j† − {L_j† L_j, ρ}/2)`.
///
/// The scattering matrix does not enter the reduced dynamics.
pub fn master_rhs(g: &SlhTriple, rho: &Operator) -> Operator {
    let sig = g
        .signature()
        .union(rho.signature())
        .expect("operators from the same registry");
    let rho = rho.embed(&sig).expect("subset of union");
    let h = g.hamiltonian().embed(&sig).expect("subset");
    let mut acc = rho.commutator(&h).scale(Complex64::new(0.0, 1.0));
    for j in 0..g.channels() {
        let l = g.coupling().entry(j, 0).embed(&sig).expect("subset");
        let ld = l.dagger();
        let kk = &ld * &l;
        let term = &(&(&l * &rho) * &ld) - &kk.anticommutator(&rho).scale_re(0.5);
        acc = &acc + &term;
    }
    acc
}

/// Coefficients of the quantum Itô equation for `X` at `t = 0`.
#[derive(Clone, Debug)]
pub struct HeisenbergCoefficients {
    /// `dt` coefficient: `L(X) − i[X, H]`.
    pub drift: Operator,
    /// `dA†` coefficients `S†[X, L]`, `n x 1`.
    pub da_dagger_coeff: OperatorVector,
    /// `dA` coefficients `[L†, X] S`, `1 x n`.
    pub da_coeff: OperatorMatrix,
    /// `dΛ` coefficients `S† X S − X`, `n x n`.
    pub gauge_coeff: OperatorMatrix,
}

/// Extract the Heisenberg-equation coefficients of an initial-space operator.
pub fn heisenberg_coefficients(g: &SlhTriple, x: &Operator) -> HeisenbergCoefficients {
    let sig = g
        .signature()
        .union(x.signature())
        .expect("operators from the same registry");
    let g = g.embed(&sig).expect("subset of union");
    let x = x.embed(&sig).expect("subset of union");
    let n = g.channels();
    let s = g.scattering();
    let l = g.coupling();

    let drift = &lindblad_heisenberg(&g, &x)
        - &x.commutator(g.hamiltonian()).scale(Complex64::new(0.0, 1.0));

    let comm_col = OperatorMatrix::column(
        (0..n).map(|j| x.commutator(l.entry(j, 0))).collect(),
    )
    .expect("uniform signature");
    let da_dagger_coeff = &s.dagger() * &comm_col;

    let comm_row = OperatorMatrix::from_rows(vec![(0..n)
        .map(|j| l.entry(j, 0).dagger().commutator(&x))
        .collect()])
    .expect("uniform signature");
    let da_coeff = &comm_row * s;

    let x_diag = {
        let mut m = OperatorMatrix::zeros(n, n, &sig);
        let rows: Vec<Vec<Operator>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { x.clone() } else { Operator::zero(&sig) })
                    .collect()
            })
            .collect();
        if n > 0 {
            m = OperatorMatrix::from_rows(rows).expect("uniform signature");
        }
        m
    };
    let gauge_coeff = &(&(&s.dagger() * &x_diag) * s) - &x_diag;

    HeisenbergCoefficients {
        drift,
        da_dagger_coeff,
        da_coeff,
        gauge_coeff,
    }
}

/// Per-channel output-field moments in a state `ρ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelMoments {
    /// Real-quadrature rate `<L_j + L_j†>`.
    pub quadrature_rate: f64,
    /// Photon flux `<L_j† L_j>`.
    pub photon_flux: f64,
}

/// Moments of the output QSDE `dÃ = S dA + L dt` with vacuum inputs.
pub fn output_moments(g: &SlhTriple, rho: &DensityOperator) -> Vec<ChannelMoments> {
    (0..g.channels())
        .map(|j| {
            let l = g.coupling().entry(j, 0);
            let quad = (l + &l.dagger()).expectation(rho.operator()).re;
            let flux = (&l.dagger() * l).expectation(rho.operator()).re;
            ChannelMoments {
                quadrature_rate: quad,
                photon_flux: flux,
            }
        })
        .collect()
}

/// Time grid plus recorded states and expectations.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `expectations[step][k] = tr(ρ_step · observables[k])` (unnormalized
    /// for filter trajectories).
    pub expectations: Vec<Vec<Complex64>>,
    /// `tr(ρ_step)`: 1 for master-equation runs, the filter normalization
    /// `σ_t(1)` for Zakai runs.
    pub norms: Vec<f64>,
    pub states: Vec<Operator>,
}

impl Trajectory {
    /// Series of one observable across time.
    pub fn series(&self, k: usize) -> Vec<Complex64> {
        self.expectations.iter().map(|e| e[k]).collect()
    }

    /// Normalized series `σ_t(X)/σ_t(1)`.
    pub fn normalized_series(&self, k: usize) -> Vec<Complex64> {
        self.expectations
            .iter()
            .zip(&self.norms)
            .map(|(e, &n)| e[k] / Complex64::from(n))
            .collect()
    }
}

pub(crate) struct MasterStepper {
    h: DMatrix<Complex64>,
    ls: Vec<DMatrix<Complex64>>,
    l_dags: Vec<DMatrix<Complex64>>,
    /// `Σ_j L_j† L_j`
    k_sum: DMatrix<Complex64>,
}

impl MasterStepper {
    pub fn new(g: &SlhTriple, sig: &Signature) -> Result<Self, DynamicsError> {
        let g = g.embed(sig)?;
        let h = g.hamiltonian().matrix().clone();
        let mut ls = Vec::new();
        let mut l_dags = Vec::new();
        let d = sig.dim();
        let mut k_sum = DMatrix::zeros(d, d);
        for j in 0..g.channels() {
            let l = g.coupling().entry(j, 0).matrix().clone();
            let ld = l.adjoint();
            k_sum += &ld * &l;
            ls.push(l);
            l_dags.push(ld);
        }
        Ok(MasterStepper { h, ls, l_dags, k_sum })
    }

    pub fn rhs(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let i = Complex64::new(0.0, 1.0);
        let mut out = (rho * &self.h - &self.h * rho).map(|z| z * i);
        for (l, ld) in self.ls.iter().zip(&self.l_dags) {
            out += l * rho * ld;
        }
        let half = Complex64::from(0.5);
        out -= (&self.k_sum * rho + rho * &self.k_sum).map(|z| z * half);
        out
    }

    /// One classical RK4 step of the (deterministic) master equation.
    pub fn rk4_step(&self, rho: &DMatrix<Complex64>, dt: f64) -> DMatrix<Complex64> {
        let half = dt / 2.0;
        let k1 = self.rhs(rho);
        let k2 = self.rhs(&(rho + k1.map(|z| z * Complex64::from(half))));
        let k3 = self.rhs(&(rho + k2.map(|z| z * Complex64::from(half))));
        let k4 = self.rhs(&(rho + k3.map(|z| z * Complex64::from(dt))));
        let sixth = Complex64::from(dt / 6.0);
        rho + (k1 + k2.map(|z| z * Complex64::from(2.0)) + k3.map(|z| z * Complex64::from(2.0)) + k4)
            .map(|z| z * sixth)
    }
}

pub(crate) fn time_steps(dt: f64, t_final: f64) -> Result<usize, DynamicsError> {
    if !dt.is_finite() || dt <= 0.0 || t_final < dt || !t_final.is_finite() {
        return Err(DynamicsError::BadTimeGrid { dt, t_final });
    }
    Ok((t_final / dt).round().max(1.0) as usize)
}

/// Integrate the master equation with fixed-step RK4, recording the state
/// and the requested expectation values on every grid point.
///
/// Aborts with [`DynamicsError::TraceDrift`] if `|tr ρ − 1|` exceeds `1e-6`.
pub fn evolve_master(
    g: &SlhTriple,
    rho0: &DensityOperator,
    dt: f64,
    t_final: f64,
    observables: &[Operator],
) -> Result<Trajectory, DynamicsError> {
    let steps = time_steps(dt, t_final)?;
    let mut sig = g.signature().union(rho0.operator().signature())?;
    for x in observables {
        sig = sig.union(x.signature())?;
    }
    let stepper = MasterStepper::new(g, &sig)?;
    let obs: Vec<Operator> = observables
        .iter()
        .map(|x| x.embed(&sig))
        .collect::<Result<_, _>>()?;
    let mut rho = rho0.operator().embed(&sig)?.into_matrix();

    let mut traj = Trajectory {
        times: Vec::with_capacity(steps + 1),
        expectations: Vec::with_capacity(steps + 1),
        norms: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
    };
    record(&mut traj, 0.0, &rho, &obs, &sig)?;
    for k in 0..steps {
        rho = stepper.rk4_step(&rho, dt);
        let t = (k + 1) as f64 * dt;
        if !rho.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(DynamicsError::Diverged { t });
        }
        let deviation = (rho.trace().re - 1.0).abs();
        if deviation > 1e-6 {
            return Err(DynamicsError::TraceDrift { t, deviation });
        }
        record(&mut traj, t, &rho, &obs, &sig)?;
    }
    Ok(traj)
}

pub(crate) fn record(
    traj: &mut Trajectory,
    t: f64,
    rho: &DMatrix<Complex64>,
    obs: &[Operator],
    sig: &Signature,
) -> Result<(), DynamicsError> {
    traj.times.push(t);
    traj.norms.push(rho.trace().re);
    traj.expectations
        .push(obs.iter().map(|x| (rho * x.matrix()).trace()).collect());
    traj.states.push(Operator::new(sig.clone(), rho.clone())?);
    Ok(())
}
