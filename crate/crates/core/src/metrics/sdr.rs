use super::{clamp_db, dot, DB_CAP};

const RESIDUAL_FLOOR: f64 = 1e-12;
use crate::error::{Error, Result};
use crate::signal::MultiChannelWaveform;

/// Default length of the distortion filter allowed by [`sdr_proj`].
pub const DEFAULT_FILTER_LEN: usize = 512;

/// Projection SDR: the reference may pass through a causal FIR filter of
/// `filter_len` taps before comparison.
///
/// The filter is the ridge-regularised least-squares fit
/// `(G + λI) h = b`, `G` the exact (edge-aware) Gram matrix of lagged copies
/// of the reference, `λ = 1e-9 · trace(G) / filter_len`.
pub fn sdr_proj(estimate: &[f64], reference: &[f64], filter_len: usize) -> Result<f64> {
    let n = estimate.len();
    if reference.len() != n {
        return Err(Error::invalid(format!("estimate has {n} samples, reference {}", reference.len())));
    }
    if filter_len == 0 || n <= filter_len {
        return Err(Error::invalid(format!("signal length {n} must exceed filter length {filter_len} >= 1")));
    }
    let ref_energy = dot(reference, reference);
    if ref_energy <= 0.0 || !ref_energy.is_finite() {
        return Err(Error::InvalidReference);
    }

    let mut gram = lagged_gram(reference, filter_len);
    let mut rhs: Vec<f64> = (0..filter_len).map(|k| dot(&estimate[k..], &reference[..n - k])).collect();
    let trace: f64 = (0..filter_len).map(|k| gram[k * filter_len + k]).sum();
    let lambda = 1e-9 * trace / filter_len as f64;
    for k in 0..filter_len {
        gram[k * filter_len + k] += lambda;
    }
    cholesky_solve(&mut gram, &mut rhs, filter_len)?;
    let taps = rhs;

    let mut fir_target = 0.0;
    let mut fir_error = 0.0;
    for t in 0..n {
        let s: f64 = taps.iter().take(t + 1).enumerate().map(|(k, h)| h * reference[t - k]).sum();
        fir_target += s * s;
        fir_error += (estimate[t] - s) * (estimate[t] - s);
    }

    // The single scaled tap lies in the same subspace; keeping the better of
    // the two fits recovers precision the ridge term costs on narrowband
    // references.
    let alpha = dot(estimate, reference) / ref_energy;
    let tap_target = alpha * alpha * ref_energy;
    let tap_error: f64 = estimate.iter().zip(reference).map(|(e, r)| (e - alpha * r).powi(2)).sum();

    let ratio = |target: f64, error: f64| if error > 0.0 { target / error } else { f64::INFINITY };
    let (target, error) = if ratio(tap_target, tap_error) > ratio(fir_target, fir_error) {
        (tap_target, tap_error)
    } else {
        (fir_target, fir_error)
    };
    if target == 0.0 {
        return Ok(-DB_CAP);
    }
    if error <= RESIDUAL_FLOOR * target {
        return Ok(DB_CAP);
    }
    Ok(clamp_db(10.0 * (target / error).log10()))
}

/// `G[k][l] = Σ_{t ≥ max(k,l)} r[t-k] r[t-l]`, row-major `len × len`.
fn lagged_gram(r: &[f64], len: usize) -> Vec<f64> {
    let n = r.len();
    let mut g = vec![0.0; len * len];
    for d in 0..len {
        let a = dot(&r[..n - d], &r[d..]);
        g[d] = a;
        g[d * len] = a;
    }
    for k in 0..len - 1 {
        for l in 0..len - 1 {
            g[(k + 1) * len + l + 1] = g[k * len + l] - r[n - 1 - k] * r[n - 1 - l];
        }
    }
    g
}

/// Solves `A x = b` in place for symmetric positive definite `A`.
fn cholesky_solve(a: &mut [f64], b: &mut [f64], n: usize) -> Result<()> {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::invalid("projection Gram matrix is not positive definite"));
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let (row_i, row_j) = (i * n, j * n);
            let s = dot(&a[row_i..row_i + j], &a[row_j..row_j + j]);
            a[row_i + j] = (a[row_i + j] - s) / d;
        }
    }
    for i in 0..n {
        let s = dot(&a[i * n..i * n + i], &b[..i]);
        b[i] = (b[i] - s) / a[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= a[k * n + i] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    Ok(())
}

/// Per-channel unprocessed SDR `sdr_proj(y_c, x_c)`.
pub fn in_sdrs(mixture: &MultiChannelWaveform, refs: &MultiChannelWaveform, filter_len: usize) -> Result<Vec<f64>> {
    check_pair(mixture, refs)?;
    (0..mixture.num_channels())
        .map(|c| sdr_proj(mixture.channel(c), refs.channel(c), filter_len))
        .collect()
}

/// `|in-SDR_j − in-SDR_k|` with the default filter length.
pub fn in_sdr_gap(mixture: &MultiChannelWaveform, refs: &MultiChannelWaveform, j: usize, k: usize) -> Result<f64> {
    check_pair(mixture, refs)?;
    let c = mixture.num_channels();
    if j == k || j >= c || k >= c {
        return Err(Error::invalid(format!("channels {j} and {k} must be distinct and below {c}")));
    }
    let sj = sdr_proj(mixture.channel(j), refs.channel(j), DEFAULT_FILTER_LEN)?;
    let sk = sdr_proj(mixture.channel(k), refs.channel(k), DEFAULT_FILTER_LEN)?;
    Ok((sj - sk).abs())
}

fn check_pair(mixture: &MultiChannelWaveform, refs: &MultiChannelWaveform) -> Result<()> {
    if mixture.num_channels() != refs.num_channels() || mixture.len() != refs.len() {
        return Err(Error::invalid("mixture and references differ in shape"));
    }
    Ok(())
}
