//! Normalization, correlation and Bland-Altman agreement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn sum_sq_dev(x: &[f64], m: f64) -> f64 {
    x.iter().map(|v| (v - m) * (v - m)).sum()
}

/// Population standard deviation (divisor n).
pub fn std_pop(x: &[f64]) -> f64 {
    (sum_sq_dev(x, mean(x)) / x.len() as f64).sqrt()
}

/// Sample standard deviation (divisor n − 1).
pub fn std_sample(x: &[f64]) -> f64 {
    (sum_sq_dev(x, mean(x)) / (x.len() as f64 - 1.0)).sqrt()
}

/// True when the spread is zero up to rounding of the values themselves.
fn is_flat(x: &[f64], sd: f64) -> bool {
    let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    !(sd > 1e-12 * scale)
}

/// (x − mean) / SD with the population SD.
pub fn zscore(x: &[f64]) -> Result<Vec<f64>> {
    if x.len() < 2 {
        return Err(Error::domain("z-score needs at least 2 samples"));
    }
    let m = mean(x);
    let sd = std_pop(x);
    if is_flat(x, sd) {
        return Err(Error::domain("z-score of a constant signal (zero variance)"));
    }
    Ok(x.iter().map(|v| (v - m) / sd).collect())
}

/// Product-moment correlation.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::domain(format!("pearson: lengths differ ({} vs {})", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::domain("pearson needs at least 2 samples"));
    }
    let (ma, mb) = (mean(a), mean(b));
    let (sa, sb) = (sum_sq_dev(a, ma), sum_sq_dev(b, mb));
    let n = a.len() as f64;
    if is_flat(a, (sa / n).sqrt()) || is_flat(b, (sb / n).sqrt()) {
        return Err(Error::domain("pearson: zero variance"));
    }
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    Ok((cov / (sa * sb).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlandAltmanReport {
    pub bias: f64,
    pub sd: f64,
    pub loa_lower: f64,
    pub loa_upper: f64,
    pub pct_within_loa: f64,
    /// 100 · max|d| / peak-to-peak of the pair means.
    pub max_deviation_pct: f64,
    /// 100 · mean|d| / peak-to-peak of the pair means.
    pub mean_abs_deviation_pct: f64,
    pub n_points: usize,
    pub n_pulses: usize,
}

pub const LOA_Z: f64 = 1.96;

/// Differences are `m − v`. `n_pulses` is carried through for reporting.
pub fn bland_altman(m: &[f64], v: &[f64], n_pulses: usize) -> Result<BlandAltmanReport> {
    if m.len() != v.len() {
        return Err(Error::domain(format!("bland-altman: lengths differ ({} vs {})", m.len(), v.len())));
    }
    let n = m.len();
    if n < 2 {
        return Err(Error::domain("bland-altman needs at least 2 pairs"));
    }
    let d: Vec<f64> = m.iter().zip(v).map(|(a, b)| a - b).collect();
    let bias = mean(&d);
    let sd = std_sample(&d);
    let half = LOA_Z * sd;
    let within = d.iter().filter(|x| (*x - bias).abs() <= half).count();

    let (lo, hi) = m
        .iter()
        .zip(v)
        .map(|(a, b)| 0.5 * (a + b))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    let range = hi - lo;
    let max_abs = d.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    let mean_abs = d.iter().map(|x| x.abs()).sum::<f64>() / n as f64;
    let pct = |x: f64| {
        if x == 0.0 {
            Ok(0.0)
        } else if range > 0.0 {
            Ok(100.0 * x / range)
        } else {
            Err(Error::domain("bland-altman: pair means have zero range"))
        }
    };

    Ok(BlandAltmanReport {
        bias,
        sd,
        loa_lower: bias - half,
        loa_upper: bias + half,
        pct_within_loa: 100.0 * within as f64 / n as f64,
        max_deviation_pct: pct(max_abs)?,
        mean_abs_deviation_pct: pct(mean_abs)?,
        n_points: n,
        n_pulses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn zscore_hand_values() {
        let z = zscore(&[1.0, 2.0, 3.0]).unwrap();
        let k = 1.5f64.sqrt();
        assert!((z[0] + k).abs() < 1e-12 && z[1].abs() < 1e-12 && (z[2] - k).abs() < 1e-12);
        assert!((z[2] - 1.2247).abs() < 1e-4);
        assert!(mean(&z).abs() < 1e-12 && (std_pop(&z) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_input_is_rejected() {
        assert!(zscore(&[2.5; 10]).is_err());
        assert!(zscore(&[0.1, 0.1, 0.1]).is_err());
        assert!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn pearson_values() {
        let a = [1.0, 2.0, 3.0];
        assert!((pearson(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&a, &[-1.0, -2.0, -3.0]).unwrap() + 1.0).abs() < 1e-15);
        // cov 3, sum of squares 2 and 14/3.
        let r = pearson(&a, &[1.0, 2.0, 4.0]).unwrap();
        assert!((r - 0.98198).abs() < 1e-5, "{r}");
        assert!((r - 3.0 / (28.0f64 / 3.0).sqrt()).abs() < 1e-14);
        assert!(pearson(&a, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn bland_altman_identical_channels() {
        let x = [0.3, -1.0, 2.0, 0.5];
        let r = bland_altman(&x, &x, 1).unwrap();
        assert_eq!((r.bias, r.sd, r.pct_within_loa, r.max_deviation_pct), (0.0, 0.0, 100.0, 0.0));
    }

    #[test]
    fn bland_altman_hand_example() {
        let m = [1.0, 2.0, 3.0, 4.0];
        let v = [1.5, 1.5, 3.5, 3.5];
        let r = bland_altman(&m, &v, 2).unwrap();
        // d = (-0.5, 0.5, -0.5, 0.5): bias 0, sample SD = sqrt(1/3).
        assert!(r.bias.abs() < 1e-15);
        assert!((r.sd - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(r.pct_within_loa, 100.0);
        // means 1.25 .. 3.75 → range 2.5, max|d| 0.5 → 20%.
        assert!((r.max_deviation_pct - 20.0).abs() < 1e-12);
        assert!(bland_altman(&[1.0], &[1.0], 1).is_err());
    }

    #[test]
    fn normal_differences_give_95_percent() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let m: Vec<f64> = (0..10_000).map(|i| (i as f64 * 0.01).sin()).collect();
        let v: Vec<f64> = m.iter().map(|x| x - normal.sample(&mut rng)).collect();
        let r = bland_altman(&m, &v, 0).unwrap();
        assert!((r.pct_within_loa - 95.0).abs() <= 1.0, "{}", r.pct_within_loa);
    }

    proptest! {
        #[test]
        fn zscore_idempotent_and_affine(
            x in proptest::collection::vec(-100.0f64..100.0, 3..50),
            a in prop_oneof![-10.0f64..-0.1, 0.1f64..10.0],
            b in -50.0f64..50.0,
        ) {
            prop_assume!(std_pop(&x) > 1e-3);
            let z = zscore(&x).unwrap();
            let zz = zscore(&z).unwrap();
            let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            let zy = zscore(&y).unwrap();
            for i in 0..x.len() {
                prop_assert!((zz[i] - z[i]).abs() < 1e-12);
                prop_assert!((zy[i] - a.signum() * z[i]).abs() < 1e-9);
            }
        }

        #[test]
        fn bland_altman_is_antisymmetric(
            pairs in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 2..60),
        ) {
            let (m, v): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let p = bland_altman(&m, &v, 1).unwrap();
            let q = bland_altman(&v, &m, 1).unwrap();
            prop_assert!((p.bias + q.bias).abs() < 1e-12);
            prop_assert!((p.sd - q.sd).abs() < 1e-12);
            prop_assert_eq!(p.pct_within_loa, q.pct_within_loa);
            prop_assert!((p.max_deviation_pct - q.max_deviation_pct).abs() < 1e-9);
            prop_assert!((p.loa_upper - (p.bias + LOA_Z * p.sd)).abs() < 1e-12);
            prop_assert!((0.0..=100.0).contains(&p.pct_within_loa));
        }

        #[test]
        fn pearson_is_bounded(
            pairs in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..40),
        ) {
            let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            if let Ok(r) = pearson(&a, &b) {
                prop_assert!((-1.0..=1.0).contains(&r));
            }
        }
    }
}
