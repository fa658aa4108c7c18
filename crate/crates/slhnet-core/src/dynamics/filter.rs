//! Unnormalized quantum (Zakai) filter for homodyne detection on one output
//! channel, in the density picture:
//!
//! ```text
//! dρ̃ = (i[ρ̃, H] + L'(ρ̃)) dt + (L_m ρ̃ + ρ̃ L_m†) dy
//! ```
//!
//! The drift is integrated with the same fixed-step RK4 as the master
//! equation; the measurement update is Euler-Maruyama with the pre-step
//! state, which keeps `E[tr ρ̃]` exactly constant under the reference
//! measure (`dy = dW`). Normalized estimates are `π_t(X) = σ_t(X)/σ_t(1)`,
//! available through [`Trajectory::normalized_series`].

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{record, time_steps, DensityOperator, DynamicsError, MasterStepper, Trajectory};
use crate::operator::Operator;
use crate::slh::SlhTriple;

/// Propagate the unnormalized filter along a measurement record of `dy`
/// increments (one per step of size `dt`).
///
/// `rho0` is the initial (normalized) state; expectations recorded in the
/// trajectory are the unnormalized `σ_t(X) = tr(ρ̃_t X)` with `σ_t(1)` in
/// `norms`.
pub fn evolve_zakai(
    g: &SlhTriple,
    channel: usize,
    rho0: &DensityOperator,
    record_dy: &[f64],
    dt: f64,
    observables: &[Operator],
) -> Result<Trajectory, DynamicsError> {
    if channel >= g.channels() {
        return Err(DynamicsError::BadChannel {
            channel,
            channels: g.channels(),
        });
    }
    if !dt.is_finite() || dt <= 0.0 || record_dy.is_empty() {
        return Err(DynamicsError::BadTimeGrid {
            dt,
            t_final: record_dy.len() as f64 * dt,
        });
    }
    let mut sig = g.signature().union(rho0.operator().signature())?;
    for x in observables {
        sig = sig.union(x.signature())?;
    }
    let stepper = MasterStepper::new(g, &sig)?;
    let obs: Vec<Operator> = observables
        .iter()
        .map(|x| x.embed(&sig))
        .collect::<Result<_, _>>()?;
    let l_m = g.coupling().entry(channel, 0).embed(&sig)?;
    let lm = l_m.matrix().clone();
    let lm_dag = lm.adjoint();

    let mut rho = rho0.operator().embed(&sig)?.into_matrix();
    let mut traj = Trajectory {
        times: Vec::with_capacity(record_dy.len() + 1),
        expectations: Vec::with_capacity(record_dy.len() + 1),
        norms: Vec::with_capacity(record_dy.len() + 1),
        states: Vec::with_capacity(record_dy.len() + 1),
    };
    record(&mut traj, 0.0, &rho, &obs, &sig)?;
    for (k, &dy) in record_dy.iter().enumerate() {
        let update = (&lm * &rho + &rho * &lm_dag).map(|z| z * Complex64::from(dy));
        rho = stepper.rk4_step(&rho, dt) + update;
        let t = (k + 1) as f64 * dt;
        if !rho.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(DynamicsError::Diverged { t });
        }
        record(&mut traj, t, &rho, &obs, &sig)?;
    }
    Ok(traj)
}

/// Simulate a homodyne measurement record under the physical measure:
/// `dy = <L_m + L_m†>_t dt + dW` with the conditional expectation taken in
/// the normalized filtered state, and seeded Gaussian increments.
pub fn simulate_record(
    g: &SlhTriple,
    channel: usize,
    rho0: &DensityOperator,
    dt: f64,
    t_final: f64,
    seed: u64,
) -> Result<Vec<f64>, DynamicsError> {
    if channel >= g.channels() {
        return Err(DynamicsError::BadChannel {
            channel,
            channels: g.channels(),
        });
    }
    let steps = time_steps(dt, t_final)?;
    let sig = g.signature().union(rho0.operator().signature())?;
    let stepper = MasterStepper::new(g, &sig)?;
    let l_m = g.coupling().entry(channel, 0).embed(&sig)?;
    let lm = l_m.matrix().clone();
    let lm_dag = lm.adjoint();

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let sqrt_dt = dt.sqrt();
    let mut rho = rho0.operator().embed(&sig)?.into_matrix();
    let mut out = Vec::with_capacity(steps);
    for k in 0..steps {
        let update_op = &lm * &rho + &rho * &lm_dag;
        let mean = update_op.trace().re / rho.trace().re;
        let dw: f64 = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
            * sqrt_dt;
        let dy = mean * dt + dw;
        rho = stepper.rk4_step(&rho, dt) + update_op.map(|z| z * Complex64::from(dy));
        // renormalize: only the conditional state matters for the record
        let tr = rho.trace().re;
        if !(tr.is_finite() && tr > 0.0) {
            return Err(DynamicsError::Diverged {
                t: (k + 1) as f64 * dt,
            });
        }
        rho = rho.map(|z| z / Complex64::from(tr));
        out.push(dy);
    }
    Ok(out)
}
