//! Thin helpers around `rustfft` for periodic data on uniform grids.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// Normalized forward DFT: `c_n = (1/L) Σ_j x_j e^{-2πi nj/L}`.
pub fn analyze(data: &[Complex64]) -> Vec<Complex64> {
    let len = data.len();
    let mut buf = data.to_vec();
    if len == 0 {
        return buf;
    }
    plan(len, false).process(&mut buf);
    let scale = 1.0 / len as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
    buf
}

/// Inverse of [`analyze`]: `x_j = Σ_n c_n e^{2πi nj/L}`.
pub fn synthesize(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut buf = coeffs.to_vec();
    if !buf.is_empty() {
        plan(buf.len(), true).process(&mut buf);
    }
    buf
}

/// Signed frequency of DFT bin `k` on a length-`len` grid. The Nyquist bin
/// (even `len`) is reported as `+len/2`.
pub fn signed_freq(k: usize, len: usize) -> i64 {
    if k <= len / 2 {
        k as i64
    } else {
        k as i64 - len as i64
    }
}

/// Trigonometric interpolation of periodic samples onto a grid `factor`
/// times finer. Exact for trigonometric polynomials of degree < len/2.
pub fn upsample(data: &[Complex64], factor: usize) -> Vec<Complex64> {
    let len = data.len();
    if factor <= 1 {
        return data.to_vec();
    }
    let coeffs = analyze(data);
    let fine_len = len * factor;
    let mut fine = vec![Complex64::new(0.0, 0.0); fine_len];
    for (k, c) in coeffs.iter().enumerate() {
        let f = signed_freq(k, len);
        if len % 2 == 0 && f == (len / 2) as i64 {
            // split the Nyquist term symmetrically
            fine[len / 2] += c * 0.5;
            fine[fine_len - len / 2] += c * 0.5;
            continue;
        }
        let idx = if f >= 0 { f as usize } else { (fine_len as i64 + f) as usize };
        fine[idx] = *c;
    }
    synthesize(&fine)
}

/// Spectral derivative `d/ds` of periodic samples on `[0, 2π)`.
pub fn derivative(data: &[Complex64]) -> Vec<Complex64> {
    let len = data.len();
    let mut coeffs = analyze(data);
    for (k, c) in coeffs.iter_mut().enumerate() {
        let f = signed_freq(k, len);
        if len % 2 == 0 && f == (len / 2) as i64 {
            *c = Complex64::new(0.0, 0.0);
        } else {
            *c *= Complex64::new(0.0, f as f64);
        }
    }
    synthesize(&coeffs)
}

/// Trigonometric interpolant of periodic samples on `[0, 2π)`, evaluable
/// with derivatives at any parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigSeries {
    terms: Vec<(f64, Complex64)>,
}

impl TrigSeries {
    pub fn new(samples: &[Complex64]) -> Self {
        let len = samples.len();
        let mut terms = Vec::with_capacity(len + 1);
        for (k, c) in analyze(samples).into_iter().enumerate() {
            let f = signed_freq(k, len);
            if len % 2 == 0 && f == (len / 2) as i64 {
                terms.push((f as f64, c * 0.5));
                terms.push((-f as f64, c * 0.5));
            } else {
                terms.push((f as f64, c));
            }
        }
        TrigSeries { terms }
    }

    /// `(f, f′, f″)` at `s`.
    pub fn eval(&self, s: f64) -> [Complex64; 3] {
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for &(f, c) in &self.terms {
            let e = c * Complex64::from_polar(1.0, f * s);
            out[0] += e;
            out[1] += e * Complex64::new(0.0, f);
            out[2] -= e * (f * f);
        }
        out
    }

    /// Signed frequencies and coefficients.
    pub fn terms(&self) -> &[(f64, Complex64)] {
        &self.terms
    }
}
