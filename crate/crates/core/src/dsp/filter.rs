//! Butterworth bandpass as a biquad cascade, applied forward-backward.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// One second-order section, `b0 + b1 z⁻¹ + b2 z⁻²` over `1 + a1 z⁻¹ + a2 z⁻²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    pub fn response(&self, f: f64, fs: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f / fs);
        let z2 = z1 * z1;
        (self.b[0] + self.b[1] * z1 + self.b[2] * z2) / (1.0 + self.a[0] * z1 + self.a[1] * z2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bandpass {
    pub sections: Vec<Biquad>,
    pub fs: f64,
    pub band: [f64; 2],
    pub order: usize,
}

impl Bandpass {
    /// Digital Butterworth bandpass from an analog prototype of `order`
    /// (the bandpass itself has twice that many poles). Edges are prewarped
    /// so the -3 dB points land on `band` exactly.
    pub fn butterworth(order: usize, band: [f64; 2], fs: f64) -> Result<Self> {
        let [lo, hi] = band;
        if order == 0 {
            return Err(Error::config("filter order must be at least 1"));
        }
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(Error::config(format!("sampling rate must be positive, got {fs}")));
        }
        if !(lo > 0.0 && lo < hi && hi < fs / 2.0) {
            return Err(Error::config(format!(
                "band edges need 0 < f_lo < f_hi < fs/2, got [{lo}, {hi}] at fs = {fs}"
            )));
        }
        let k = 2.0 * fs;
        let warp = |f: f64| k * (std::f64::consts::PI * f / fs).tan();
        let (wl, wh) = (warp(lo), warp(hi));
        let bw = wh - wl;
        let w0 = (wl * wh).sqrt();

        let mut poles = Vec::with_capacity(2 * order);
        for i in 0..order {
            let theta = std::f64::consts::PI * (2 * i + order + 1) as f64 / (2 * order) as f64;
            let p = Complex64::from_polar(1.0, theta) * (bw / 2.0);
            let d = (p * p - w0 * w0).sqrt();
            for s in [p + d, p - d] {
                poles.push((k + s) / (k - s));
            }
        }

        // Conjugate pairs become one section each; leftover real poles pair up.
        let tol = 1e-12;
        let mut sections = Vec::with_capacity(order);
        let mut real = Vec::new();
        for z in &poles {
            if z.im > tol {
                sections.push(Biquad {
                    b: [1.0, 0.0, -1.0],
                    a: [-2.0 * z.re, z.norm_sqr()],
                });
            } else if z.im.abs() <= tol {
                real.push(z.re);
            }
        }
        real.sort_by(f64::total_cmp);
        for pair in real.chunks(2) {
            let (p, q) = (pair[0], pair[1]);
            sections.push(Biquad {
                b: [1.0, 0.0, -1.0],
                a: [-(p + q), p * q],
            });
        }
        debug_assert_eq!(sections.len(), order);

        // Unit gain at the center frequency, spread evenly over the sections.
        let f0 = fs / std::f64::consts::PI * (w0 / k).atan();
        let mut filt = Bandpass {
            sections,
            fs,
            band,
            order,
        };
        let g = filt.response(f0).norm().recip().powf(1.0 / order as f64);
        for s in &mut filt.sections {
            for b in &mut s.b {
                *b *= g;
            }
        }
        Ok(filt)
    }

    pub fn response(&self, f: f64) -> Complex64 {
        self.sections
            .iter()
            .map(|s| s.response(f, self.fs))
            .product()
    }

    /// Odd-extension padding used at each end for zero-phase filtering.
    pub fn pad_len(&self, n: usize) -> usize {
        ((3.0 * self.fs / self.band[0]).ceil() as usize).min(n.saturating_sub(1))
    }

    /// Shortest input accepted by [`Bandpass::filtfilt`].
    pub fn min_len(&self) -> usize {
        6 * 2 * self.order + 1
    }

    /// Single causal pass with each section started in the steady state
    /// of a constant input equal to `x[0]`.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        let Some(&x0) = x.first() else { return y };
        let mut level = x0;
        for s in &self.sections {
            let [b0, b1, b2] = s.b;
            let [a1, a2] = s.a;
            let dc = (b0 + b1 + b2) / (1.0 + a1 + a2);
            let out = dc * level;
            let mut z2 = b2 * level - a2 * out;
            let mut z1 = b1 * level - a1 * out + z2;
            level = out;
            for v in y.iter_mut() {
                let xi = *v;
                let yi = b0 * xi + z1;
                z1 = b1 * xi - a1 * yi + z2;
                z2 = b2 * xi - a2 * yi;
                *v = yi;
            }
        }
        y
    }

    fn forward_backward(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let pad = self.pad_len(n);
        let (first, last) = (x[0], x[n - 1]);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * first - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * last - x[n - 1 - i]));
        let mut y = self.filter(&ext);
        y.reverse();
        let mut y = self.filter(&y);
        y.reverse();
        y[pad..pad + n].to_vec()
    }

    /// Zero-phase filtering: magnitude response |H|², no delay. The result
    /// is the average of the forward-backward and backward-forward passes,
    /// so reversing the input exactly reverses the output.
    pub fn filtfilt(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() < self.min_len() {
            return Err(Error::domain(format!(
                "trace of {} samples is too short for the bandpass (need at least {})",
                x.len(),
                self.min_len()
            )));
        }
        let a = self.forward_backward(x);
        let mut rev = x.to_vec();
        rev.reverse();
        let mut b = self.forward_backward(&rev);
        b.reverse();
        Ok(a.iter().zip(&b).map(|(p, q)| 0.5 * (p + q)).collect())
    }
}
