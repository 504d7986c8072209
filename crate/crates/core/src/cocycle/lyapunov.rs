//! Lyapunov spectra by repeated Gram-Schmidt orthonormalisation of the
//! derivative cocycle.

use crate::error::{Error, Result};
use crate::perturb::{MapKind, System};
use crate::product::{mat_mul, Mat4, ProductPoint, IDENTITY4};

/// Number of batches used for the batch-means standard errors.
pub const BATCHES: usize = 20;

/// Orthonormalisation order of the frame indices `(u, s, c, n)`: the flag
/// `E^u`, `E^un`, `E^ucn` is respected by processing `u, n, c, s`.
const ORDER: [usize; 4] = [0, 3, 2, 1];

/// Exponents in frame order `(u, s, c, n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LyapunovReport {
    pub exponents: [f64; 4],
    pub std_errors: [f64; 4],
    pub iterations: usize,
    pub seed: u64,
    /// Fraction of steps whose Jacobian differed from that of `S`.
    pub perturbed_fraction: f64,
}

impl LyapunovReport {
    pub fn sum(&self) -> f64 {
        self.exponents.iter().sum()
    }
}

/// Modified Gram-Schmidt on the columns of `m` taken in [`ORDER`]. Returns
/// the orthonormal matrix and the logs of the diagonal of `R` indexed by
/// frame component.
fn orthonormalise(m: &Mat4) -> Result<(Mat4, [f64; 4])> {
    let col = |a: &Mat4, j: usize| [a[0][j], a[1][j], a[2][j], a[3][j]];
    let mut q = [[0.0; 4]; 4];
    let mut logs = [0.0; 4];
    let mut done: Vec<[f64; 4]> = Vec::with_capacity(4);
    for &j in &ORDER {
        let mut v = col(m, j);
        for _ in 0..2 {
            for u in &done {
                let d: f64 = (0..4).map(|i| v[i] * u[i]).sum();
                for i in 0..4 {
                    v[i] -= d * u[i];
                }
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::NumericalBlowup(0));
        }
        for x in &mut v {
            *x /= n;
        }
        logs[j] = n.ln();
        for (i, x) in v.iter().enumerate() {
            q[i][j] = *x;
        }
        done.push(v);
    }
    Ok((q, logs))
}

/// Largest absolute entry.
fn max_abs(m: &Mat4) -> f64 {
    m.iter().flatten().fold(0.0_f64, |a, b| a.max(b.abs()))
}

/// Lyapunov exponents of `kind` along the orbit of `w0`.
///
/// The frame is orthonormalised every `qr_every` steps; `seed` is recorded
/// for bookkeeping (the computation itself is deterministic).
pub fn lyapunov_spectrum(
    sys: &System,
    kind: MapKind,
    w0: &ProductPoint,
    n_iters: usize,
    qr_every: usize,
    seed: u64,
) -> Result<LyapunovReport> {
    let ds = crate::product::s_jacobian(sys.delta);
    lyapunov_spectrum_with(|w| sys.step_with_jacobian(kind, w), &ds, w0, n_iters, qr_every, seed)
}

/// [`lyapunov_spectrum`] for any map given with its body-frame Jacobian.
/// Steps whose Jacobian differs from `reference` count as perturbed.
pub fn lyapunov_spectrum_with<F>(
    mut step: F,
    reference: &Mat4,
    w0: &ProductPoint,
    n_iters: usize,
    qr_every: usize,
    seed: u64,
) -> Result<LyapunovReport>
where
    F: FnMut(&ProductPoint) -> Result<(ProductPoint, Mat4)>,
{
    if !(1..=100).contains(&qr_every) {
        return Err(Error::InvalidConfig("qr_every must lie in [1, 100]".into()));
    }
    if n_iters < BATCHES {
        return Err(Error::InvalidConfig(format!("need at least {BATCHES} iterations")));
    }
    let batch_len = n_iters / BATCHES;
    let n_iters = batch_len * BATCHES;
    let mut w = *w0;
    let mut frame = IDENTITY4;
    let mut batch_sum = [0.0; 4];
    let mut batches: Vec<[f64; 4]> = Vec::with_capacity(BATCHES);
    let mut perturbed = 0usize;
    let mut since_qr = 0;
    for it in 0..n_iters {
        let (next, j) = step(&w)?;
        if j != *reference {
            perturbed += 1;
        }
        frame = mat_mul(&j, &frame);
        w = next;
        since_qr += 1;
        let batch_end = (it + 1) % batch_len == 0;
        if since_qr == qr_every || batch_end {
            if max_abs(&frame) > 1e300 {
                return Err(Error::NumericalBlowup(it));
            }
            let (q, logs) = orthonormalise(&frame).map_err(|_| Error::NumericalBlowup(it))?;
            frame = q;
            for k in 0..4 {
                batch_sum[k] += logs[k];
            }
            since_qr = 0;
        }
        if batch_end {
            batches.push(batch_sum.map(|s| s / batch_len as f64));
            batch_sum = [0.0; 4];
        }
    }
    let nb = batches.len() as f64;
    let mut exponents = [0.0; 4];
    let mut std_errors = [0.0; 4];
    for k in 0..4 {
        let mean = batches.iter().map(|b| b[k]).sum::<f64>() / nb;
        let var = batches.iter().map(|b| (b[k] - mean).powi(2)).sum::<f64>() / (nb - 1.0);
        exponents[k] = mean;
        std_errors[k] = (var / nb).sqrt();
    }
    Ok(LyapunovReport {
        exponents,
        std_errors,
        iterations: n_iters,
        seed,
        perturbed_fraction: perturbed as f64 / n_iters as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthonormalise_respects_order() {
        let m = [
            [2.0, 0.0, 0.0, 1.0],
            [0.0, 0.5, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ];
        let (_, logs) = orthonormalise(&m).unwrap();
        assert!((logs[0] - 2f64.ln()).abs() < 1e-15);
        assert!(logs[3].abs() < 1e-15);
        assert!((logs[1] - 0.5f64.ln()).abs() < 1e-15);
    }
}
