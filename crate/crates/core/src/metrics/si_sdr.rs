use std::f64::consts::LN_10;

use super::{clamp_db, dot, DB_CAP};
use crate::error::{Error, Result};

/// Residual energy floor relative to the target energy; sets the +120 dB cap.
const RESIDUAL_FLOOR: f64 = 1e-12;

struct Projection {
    alpha: f64,
    target_energy: f64,
    residual: Vec<f64>,
    residual_energy: f64,
}

fn project(estimate: &[f64], reference: &[f64]) -> Result<Projection> {
    if estimate.len() != reference.len() {
        return Err(Error::invalid(format!(
            "estimate has {} samples, reference {}",
            estimate.len(),
            reference.len()
        )));
    }
    if reference.len() < 2 {
        return Err(Error::invalid("SI-SDR needs at least two samples"));
    }
    let ref_energy = dot(reference, reference);
    if ref_energy <= 0.0 || !ref_energy.is_finite() {
        return Err(Error::InvalidReference);
    }
    let alpha = dot(estimate, reference) / ref_energy;
    let residual: Vec<f64> = estimate.iter().zip(reference).map(|(e, r)| e - alpha * r).collect();
    Ok(Projection {
        alpha,
        target_energy: alpha * alpha * ref_energy,
        residual_energy: dot(&residual, &residual),
        residual,
    })
}

/// Which branch of the capped ratio the value came from.
enum Regime {
    Ratio,
    Ceiling,
    Floor,
}

fn evaluate(p: &Projection) -> (f64, Regime) {
    if p.target_energy == 0.0 {
        return (-DB_CAP, Regime::Floor);
    }
    let floor = RESIDUAL_FLOOR * p.target_energy;
    if p.residual_energy <= floor {
        return (DB_CAP, Regime::Ceiling);
    }
    let db = 10.0 * (p.target_energy / p.residual_energy).log10();
    if db <= -DB_CAP {
        return (-DB_CAP, Regime::Floor);
    }
    (clamp_db(db), Regime::Ratio)
}

/// Scale-invariant SDR in dB, no mean removal.
///
/// `α = <e, r> / ‖r‖²`; the ratio `‖α r‖² / ‖e − α r‖²` is clamped to
/// `[-120, +120]` dB, and an estimate orthogonal to the reference scores the
/// floor.
pub fn si_sdr(estimate: &[f64], reference: &[f64]) -> Result<f64> {
    Ok(evaluate(&project(estimate, reference)?).0)
}

/// [`si_sdr`] together with its gradient w.r.t. `estimate`. The gradient is
/// zero wherever the value is clamped.
pub fn si_sdr_with_grad(estimate: &[f64], reference: &[f64]) -> Result<(f64, Vec<f64>)> {
    let p = project(estimate, reference)?;
    let (value, regime) = evaluate(&p);
    let grad = match regime {
        Regime::Ratio => {
            // d/de [10 log10(T / R)] with T = <e,r>²/‖r‖², R = ‖e − αr‖².
            let s = p.alpha * dot(reference, reference);
            let k = 10.0 / LN_10;
            reference
                .iter()
                .zip(&p.residual)
                .map(|(r, res)| k * (2.0 * r / s - 2.0 * res / p.residual_energy))
                .collect()
        }
        Regime::Ceiling | Regime::Floor => vec![0.0; estimate.len()],
    };
    Ok((value, grad))
}
