// SPDX-License-Identifier: Apache-2.0

//! Integer-order Bessel functions of the first kind.
//!
//! Single small-argument evaluations use the ascending power series; bulk
//! evaluation of `J_0..J_K` uses Miller's downward recurrence normalized by
//! `J_0 + 2 Σ J_{2k} = 1`. Negative orders and arguments are folded onto the
//! non-negative quadrant with `J_{-k}(x) = (-1)^k J_k(x) = J_k(-x)`.

use thiserror::Error;

use crate::scalar::Real;

/// Largest |x| for which the 1e-12 absolute accuracy target is maintained.
pub const DOCUMENTED_RANGE: f64 = 1.0e4;

/// Arguments up to this size go through the power series in [`bessel_j`].
const SERIES_LIMIT: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum SpecFunError {
    #[error("bessel argument must be finite, got {0}")]
    NonFinite(f64),
}

/// Integer order of a Bessel function, possibly negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BesselOrder(pub i32);

impl BesselOrder {
    pub fn magnitude(self) -> usize {
        self.0.unsigned_abs() as usize
    }

    /// `(-1)^k`, the factor relating `J_{-k}` to `J_k`.
    pub fn reflection_sign<S: Real>(self) -> S {
        if self.0 % 2 == 0 {
            S::one()
        } else {
            -S::one()
        }
    }

    pub fn eval<S: Real>(self, x: S) -> Result<S, SpecFunError> {
        bessel_j(self.0, x)
    }
}

fn check_finite<S: Real>(x: S) -> Result<(), SpecFunError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(SpecFunError::NonFinite(x.to_f64_lossy()))
    }
}

/// `J_k(x)` for any integer `k`.
pub fn bessel_j<S: Real>(k: i32, x: S) -> Result<S, SpecFunError> {
    check_finite(x)?;
    let order = BesselOrder(k);
    let m = order.magnitude();
    let ax = x.abs();
    let value = if ax <= S::lit(SERIES_LIMIT) {
        series(m, ax)
    } else {
        miller_band(ax, m)[m]
    };
    // J_k(-x) = (-1)^k J_k(x), and J_{-k} picks up the same sign.
    let mut sign = S::one();
    if k < 0 {
        sign *= order.reflection_sign::<S>();
    }
    if x < S::zero() {
        sign *= BesselOrder(m as i32).reflection_sign::<S>();
    }
    Ok(sign * value)
}

/// `[J_0(x), J_1(x), ..., J_{k_max}(x)]`.
pub fn bessel_j_band<S: Real>(x: S, k_max: usize) -> Result<Vec<S>, SpecFunError> {
    check_finite(x)?;
    let mut band = miller_band(x.abs(), k_max);
    if x < S::zero() {
        for v in band.iter_mut().skip(1).step_by(2) {
            *v = -*v;
        }
    }
    Ok(band)
}

/// Ascending series `(x/2)^k Σ_m (-x²/4)^m / (m! (m+k)!)` for `x >= 0`.
fn series<S: Real>(k: usize, x: S) -> S {
    if x == S::zero() {
        return if k == 0 { S::one() } else { S::zero() };
    }
    let half = x * S::lit(0.5);
    let mut lead = S::one();
    for j in 1..=k {
        lead = lead * half / S::from_count(j);
        if lead == S::zero() {
            return S::zero();
        }
    }
    let q = -half * half;
    let mut term = lead;
    let mut sum = lead;
    for m in 1..200 {
        term = term * q / (S::from_count(m) * S::from_count(m + k));
        sum += term;
        if term.abs() <= S::epsilon() * S::lit(1e-3) * sum.abs() {
            break;
        }
    }
    sum
}

/// Downward recurrence for `x >= 0`, returning `k_max + 1` values.
fn miller_band<S: Real>(x: S, k_max: usize) -> Vec<S> {
    let mut out = vec![S::zero(); k_max + 1];
    if x == S::zero() {
        out[0] = S::one();
        return out;
    }
    let reach = k_max.max(x.ceil().to_f64_lossy() as usize);
    let mut start = reach + 30 + (60.0 * reach as f64).sqrt().ceil() as usize;
    if start % 2 == 1 {
        start += 1;
    }

    let big = S::max_value().sqrt();
    let rescale = S::one() / big;
    let two_over_x = S::lit(2.0) / x;

    let mut upper = S::zero(); // J_{k+1}
    let mut current = S::min_positive_value().sqrt(); // J_k, arbitrary seed
    let mut norm = S::zero();
    let mut k = start;
    loop {
        if k <= k_max {
            out[k] = current;
        }
        if k.is_multiple_of(2) {
            norm += if k == 0 { current } else { current + current };
        }
        if k == 0 {
            break;
        }
        let lower = S::from_count(k) * two_over_x * current - upper;
        upper = current;
        current = lower;
        k -= 1;
        if current.abs() > big {
            current *= rescale;
            upper *= rescale;
            norm *= rescale;
            for v in out.iter_mut().skip(k + 1) {
                *v *= rescale;
            }
        }
    }
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle: plain power series summed in f64 with
    /// factorials built up front.
    fn series_oracle(k: u32, x: f64) -> f64 {
        let mut sum = 0.0;
        let mut fact_m = 1.0;
        let mut fact_mk: f64 = (1..=k).map(|j| j as f64).product();
        for m in 0..120u32 {
            if m > 0 {
                fact_m *= m as f64;
                fact_mk *= (m + k) as f64;
            }
            let term = (x / 2.0).powi((2 * m + k) as i32) / (fact_m * fact_mk);
            sum += if m % 2 == 0 { term } else { -term };
        }
        sum
    }

    fn bisect_first_zero() -> f64 {
        let (mut lo, mut hi) = (2.0, 3.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if series_oracle(0, mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn trivial_values_at_origin() {
        assert_eq!(bessel_j(0, 0.0_f64).unwrap(), 1.0);
        assert_eq!(bessel_j(1, 0.0_f64).unwrap(), 0.0);
        assert_eq!(bessel_j(-3, 0.0_f64).unwrap(), 0.0);
    }

    #[test]
    fn j0_at_1_2_matches_series() {
        let oracle = series_oracle(0, 1.2);
        assert!((oracle - 0.671133).abs() < 1e-6);
        assert!((bessel_j(0, 1.2_f64).unwrap() - oracle).abs() < 1e-14);
    }

    #[test]
    fn first_zero_of_j0() {
        let zero = bisect_first_zero();
        assert!((zero - 2.404826).abs() < 1e-6);
        assert!(bessel_j(0, 2.404826_f64).unwrap().abs() < 1e-6);
        assert!(bessel_j(0, zero).unwrap().abs() < 1e-13);
    }

    #[test]
    fn agrees_with_series_oracle_on_small_arguments() {
        for k in 0..12u32 {
            for i in 0..=80 {
                let x = 0.1 * i as f64;
                let expected = series_oracle(k, x);
                let got = bessel_j(k as i32, x).unwrap();
                assert!((got - expected).abs() < 1e-12, "k={k} x={x}: {got} vs {expected}");
                let band = bessel_j_band(x, 12).unwrap();
                assert!((band[k as usize] - expected).abs() < 1e-12, "band k={k} x={x}");
            }
        }
    }

    #[test]
    fn large_arguments_against_frozen_values() {
        // Values computed once with 40-digit arithmetic.
        let frozen = [
            (0, 10.0_f64, -0.245_935_764_451_348_34_f64),
            (1, 10.0, 0.043_472_746_168_861_44),
            (5, 10.0, -0.234_061_528_186_793_64),
            (0, 25.5, 0.144_062_157_546_847_86),
            (3, 100.0, 0.076_284_201_720_331_94),
            (0, 1000.0, 0.024_786_686_152_420_175),
            (7, 1000.0, -0.005_321_783_076_443_615),
            (0, 10000.0, -0.007_096_160_353_388_801_5),
            (2, 10000.0, 0.007_096_889_843_539_907_4),
        ];
        for (k, x, expected) in frozen {
            let got = bessel_j(k, x).unwrap();
            assert!((got - expected).abs() < 1e-12, "J_{k}({x}) = {got}, want {expected}");
        }
    }

    #[test]
    fn tiny_tail_values() {
        assert!((bessel_j(30, 2.4_f64).unwrap() / 8.542_578_092_237_661e-31 - 1.0).abs() < 1e-10);
        assert!((bessel_j(20, 0.5_f64).unwrap() / 3.727_201_961_704_714_5e-31 - 1.0).abs() < 1e-10);
        let band = bessel_j_band(2.4_f64, 40).unwrap();
        assert!(band[30..].iter().all(|v| v.abs() < 1e-15));
        assert!((band[40] / 1.739_182_350_644_724_4e-45 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn band_examples() {
        assert_eq!(bessel_j_band(0.0_f64, 3).unwrap(), vec![1.0, 0.0, 0.0, 0.0]);
        let band = bessel_j_band(0.6_f64, 2).unwrap();
        for (k, v) in band.iter().enumerate() {
            assert!((v - bessel_j(k as i32, 0.6).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn small_argument_does_not_overflow() {
        let band = bessel_j_band(1e-6_f64, 40).unwrap();
        assert!((band[0] - 1.0).abs() < 1e-12);
        assert!(band.iter().all(|v| v.is_finite()));
        assert!((band[1] - 5e-7).abs() < 1e-18);
    }

    #[test]
    fn non_finite_is_rejected() {
        assert!(matches!(bessel_j(0, f64::NAN), Err(SpecFunError::NonFinite(_))));
        assert!(bessel_j_band(f64::INFINITY, 3).is_err());
    }

    #[test]
    fn reflection_symmetry_is_exact() {
        for k in 0..25 {
            for &x in &[0.3, 1.7, 4.9, 5.1, 9.0, 33.0, -2.2, -7.5] {
                let pos = bessel_j(k, x).unwrap();
                let neg = bessel_j(-k, x).unwrap();
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                assert_eq!(neg, sign * pos, "k={k} x={x}");
                assert_eq!(bessel_j(k, -x).unwrap(), sign * pos);
            }
        }
    }

    #[test]
    fn normalization_and_recurrence() {
        for i in 0..=100 {
            let x = 0.1 * i as f64;
            let band = bessel_j_band(x, 60).unwrap();
            let total = band[0] * band[0] + 2.0 * band[1..].iter().map(|v| v * v).sum::<f64>();
            assert!((total - 1.0).abs() < 1e-10, "x={x}: {total}");
            if x >= 0.5 {
                for k in 1..=20 {
                    let r = band[k - 1] + band[k + 1] - 2.0 * k as f64 / x * band[k];
                    assert!(r.abs() <= 1e-9, "x={x} k={k} residual {r}");
                }
            }
        }
    }

    #[test]
    fn works_in_single_precision() {
        let v = bessel_j(0, 1.2_f32).unwrap();
        assert!((v - 0.671_132_7).abs() < 1e-6);
        let band = bessel_j_band(3.3_f32, 8).unwrap();
        assert!((band[2] as f64 - bessel_j(2, 3.3_f64).unwrap()).abs() < 1e-6);
    }
}
