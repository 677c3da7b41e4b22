// SPDX-License-Identifier: MIT OR Apache-2.0

//! Piecewise-constant mean with squared-error loss.

use serde::Serialize;

use crate::data::SeriesData;
use crate::error::Result;
use crate::interval::Interval;
use crate::models::ModelFamily;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanModel {
    pub mu: f64,
}

pub fn fit_mean(data: &SeriesData, iv: Interval) -> Result<MeanModel> {
    data.check_interval(iv)?;
    let z = &data.as_univariate()?[iv.range()];
    let mu = z.iter().sum::<f64>() / z.len() as f64;
    Ok(MeanModel { mu })
}

/// `sum_{i in I} (z_i - mu)^2`.
pub fn mean_loss(model: &MeanModel, data: &SeriesData, iv: Interval) -> Result<f64> {
    data.check_interval(iv)?;
    let z = &data.as_univariate()?[iv.range()];
    Ok(z.iter().map(|v| (v - model.mu).powi(2)).sum())
}

/// Mean family over prefix sums; fits and losses are O(1).
#[derive(Clone, Debug)]
pub struct MeanFamily {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl MeanFamily {
    pub fn new(data: &SeriesData) -> Result<Self> {
        let z = data.as_univariate()?;
        let mut sum = Vec::with_capacity(z.len() + 1);
        let mut sum_sq = Vec::with_capacity(z.len() + 1);
        let (mut s, mut ss) = (0.0, 0.0);
        sum.push(0.0);
        sum_sq.push(0.0);
        for v in z {
            s += v;
            ss += v * v;
            sum.push(s);
            sum_sq.push(ss);
        }
        Ok(Self { sum, sum_sq })
    }
}

impl ModelFamily for MeanFamily {
    type Model = MeanModel;

    fn n(&self) -> usize {
        self.sum.len() - 1
    }

    fn fit(&self, iv: Interval) -> MeanModel {
        let s = self.sum[iv.hi()] - self.sum[iv.lo()];
        MeanModel {
            mu: s / iv.len() as f64,
        }
    }

    fn loss(&self, model: &MeanModel, iv: Interval) -> f64 {
        let s = self.sum[iv.hi()] - self.sum[iv.lo()];
        let ss = self.sum_sq[iv.hi()] - self.sum_sq[iv.lo()];
        let mu = model.mu;
        (ss - 2.0 * mu * s + iv.len() as f64 * mu * mu).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iv(lo: usize, hi: usize) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    #[test]
    fn constant_and_symmetric() {
        let data = SeriesData::univariate(vec![1.0, 1.0, 1.0]).unwrap();
        let m = fit_mean(&data, iv(0, 3)).unwrap();
        assert_eq!(m.mu, 1.0);
        assert_eq!(mean_loss(&m, &data, iv(0, 3)).unwrap(), 0.0);

        let data = SeriesData::univariate(vec![0.0, 2.0]).unwrap();
        let m = fit_mean(&data, iv(0, 2)).unwrap();
        assert_eq!(m.mu, 1.0);
        assert_eq!(mean_loss(&m, &data, iv(0, 2)).unwrap(), 2.0);
    }

    #[test]
    fn rejects_out_of_range() {
        let data = SeriesData::univariate(vec![0.0, 2.0]).unwrap();
        assert!(fit_mean(&data, iv(0, 3)).is_err());
    }

    proptest! {
        #[test]
        fn family_matches_naive_loops(
            z in prop::collection::vec(-50.0f64..50.0, 2..60),
            a in 0usize..60, b in 0usize..60, c in 0usize..60, d in 0usize..60,
        ) {
            let n = z.len();
            let (a, b) = (a % n, b % n);
            let fit_iv = iv(a.min(b), a.max(b) + 1);
            let (c, d) = (c % n, d % n);
            let eval_iv = iv(c.min(d), c.max(d) + 1);
            let data = SeriesData::univariate(z.clone()).unwrap();
            let fam = MeanFamily::new(&data).unwrap();

            // independent summation oracle
            let mut acc = 0.0;
            for i in fit_iv.range() { acc += z[i]; }
            let mu = acc / fit_iv.len() as f64;
            let mut loss = 0.0;
            for i in eval_iv.range() { loss += (z[i] - mu) * (z[i] - mu); }

            let m = fam.fit(fit_iv);
            prop_assert!((m.mu - mu).abs() <= 1e-9 * (1.0 + mu.abs()));
            prop_assert!((fit_mean(&data, fit_iv).unwrap().mu - mu).abs() <= 1e-9 * (1.0 + mu.abs()));
            let tol = 1e-8 * (1.0 + loss);
            prop_assert!((fam.loss(&m, eval_iv) - loss).abs() <= tol);
            prop_assert!((mean_loss(&m, &data, eval_iv).unwrap() - loss).abs() <= tol);
        }

        #[test]
        fn fitted_mean_minimises_its_loss(
            z in prop::collection::vec(-10.0f64..10.0, 1..40),
            others in prop::collection::vec(-20.0f64..20.0, 100),
        ) {
            let data = SeriesData::univariate(z.clone()).unwrap();
            let whole = iv(0, z.len());
            let best = fit_mean(&data, whole).unwrap();
            let best_loss = mean_loss(&best, &data, whole).unwrap();
            for mu in others {
                let other = mean_loss(&MeanModel { mu }, &data, whole).unwrap();
                prop_assert!(best_loss <= other + 1e-9);
            }
        }
    }
}
