// SPDX-License-Identifier: MIT OR Apache-2.0

//! Seeded generators for the three simulation designs.
//!
//! Every generator draws from a `ChaCha8Rng` seeded with `seed_from_u64(seed)`;
//! replication `r` of a run with base seed `s` uses seed `s + r`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Design, SeriesData};
use crate::error::{Error, Result};

/// Generator identity recorded in scenario metadata.
pub const RNG_NAME: &str = "ChaCha8Rng";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    HdLinear,
    Nonparam,
    SingleCp,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::HdLinear => "hd_linear",
            Self::Nonparam => "nonparam",
            Self::SingleCp => "single_cp",
        }
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hd_linear" => Ok(Self::HdLinear),
            "nonparam" => Ok(Self::Nonparam),
            "single_cp" => Ok(Self::SingleCp),
            other => Err(Error::invalid(format!(
                "unknown scenario {other:?}; expected hd_linear, nonparam or single_cp"
            ))),
        }
    }
}

/// Per-segment generating parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TruthParams {
    /// Regression coefficients per segment, dense length `p`.
    Coefficients { beta: Vec<Vec<f64>> },
    /// Distribution names per segment.
    Distributions { names: Vec<String> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    pub kind: ScenarioKind,
    pub n: usize,
    pub p: Option<usize>,
    pub seed: u64,
    pub rng: String,
    pub true_changepoints: Vec<usize>,
    pub truth_params: TruthParams,
}

/// `floor(0.22 n), floor(0.55 n), floor(0.77 n)`.
pub fn three_changepoints(n: usize) -> Vec<usize> {
    [22, 55, 77].iter().map(|&c| c * n / 100).collect()
}

fn unit_circle<R: Rng>(rng: &mut R) -> (f64, f64) {
    let angle = rng.random_range(0.0..std::f64::consts::TAU);
    (angle.cos(), angle.sin())
}

fn segment_of(i: usize, cps: &[usize]) -> usize {
    cps.partition_point(|&c| c <= i)
}

/// Sparse high-dimensional linear model with three changepoints.
///
/// `theta_1 = 2 u_1` and `theta_k = theta_{k-1} + u_k / 2`, with `u_k` drawn
/// uniformly on the unit circle of coordinates 1 and 2.
pub fn gen_hd_linear(n: usize, p: usize, seed: u64) -> Result<(SeriesData, SimScenario)> {
    if p < 2 {
        return Err(Error::invalid("hd_linear needs p >= 2"));
    }
    let cps = three_changepoints(n);
    if cps[0] == 0 || cps.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid(format!("n = {n} is too small for three changepoints")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut thetas = Vec::with_capacity(4);
    let (a, b) = unit_circle(&mut rng);
    let mut cur = (2.0 * a, 2.0 * b);
    thetas.push(cur);
    for _ in 1..4 {
        let (a, b) = unit_circle(&mut rng);
        cur = (cur.0 + 0.5 * a, cur.1 + 0.5 * b);
        thetas.push(cur);
    }
    let values: Vec<f64> = (0..n * p).map(|_| rng.sample(StandardNormal)).collect();
    let x = Design::from_row_major(n, p, values)?;
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let (t1, t2) = thetas[segment_of(i, &cps)];
            let row = x.row(i);
            row[0] * t1 + row[1] * t2 + rng.sample::<f64, _>(StandardNormal)
        })
        .collect();
    let beta = thetas
        .iter()
        .map(|&(t1, t2)| {
            let mut b = vec![0.0; p];
            b[0] = t1;
            b[1] = t2;
            b
        })
        .collect();
    let scenario = SimScenario {
        kind: ScenarioKind::HdLinear,
        n,
        p: Some(p),
        seed,
        rng: RNG_NAME.into(),
        true_changepoints: cps,
        truth_params: TruthParams::Coefficients { beta },
    };
    Ok((SeriesData::regression(x, y)?, scenario))
}

/// Univariate distribution changes: N(0,1), standardised chi2(3),
/// standardised chi2(1), N(0,1). All segments have mean 0 and variance 1.
pub fn gen_nonparam(n: usize, seed: u64) -> Result<(SeriesData, SimScenario)> {
    let cps = three_changepoints(n);
    if cps[0] == 0 || cps.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid(format!("n = {n} is too small for three changepoints")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chi3 = ChiSquared::new(3.0).expect("valid degrees of freedom");
    let chi1 = ChiSquared::new(1.0).expect("valid degrees of freedom");
    let z: Vec<f64> = (0..n)
        .map(|i| match segment_of(i, &cps) {
            1 => (chi3.sample(&mut rng) - 3.0) / 6f64.sqrt(),
            2 => (chi1.sample(&mut rng) - 1.0) / 2f64.sqrt(),
            _ => rng.sample(StandardNormal),
        })
        .collect();
    let names = ["normal(0,1)", "(chi2(3)-3)/sqrt(6)", "(chi2(1)-1)/sqrt(2)", "normal(0,1)"];
    let scenario = SimScenario {
        kind: ScenarioKind::Nonparam,
        n,
        p: None,
        seed,
        rng: RNG_NAME.into(),
        true_changepoints: cps,
        truth_params: TruthParams::Distributions {
            names: names.iter().map(|s| s.to_string()).collect(),
        },
    };
    Ok((SeriesData::univariate(z)?, scenario))
}

/// `Sigma_ij = 2^-|i-j|`.
pub fn kms_covariance(p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(p, p, |i, j| 0.5f64.powi(i.abs_diff(j) as i32))
}

pub const SINGLE_CP_TAU: usize = 120;

/// Single changepoint at 120 between two sparse, orthogonal coefficient
/// vectors, with correlated Gaussian covariates.
pub fn gen_single_cp(n: usize, p: usize, seed: u64) -> Result<(SeriesData, SimScenario)> {
    if p < 8 {
        return Err(Error::invalid("single_cp needs p >= 8"));
    }
    if n <= SINGLE_CP_TAU {
        return Err(Error::invalid(format!("single_cp needs n > {SINGLE_CP_TAU}")));
    }
    let chol = kms_covariance(p)
        .cholesky()
        .ok_or_else(|| Error::invalid("covariance is not positive definite"))?;
    let l = chol.l();
    let mut beta1 = vec![0.0; p];
    let mut beta2 = vec![0.0; p];
    beta1[..4].fill(1.0 / 3.0);
    beta2[4..8].fill(1.0 / 3.0);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n * p);
    let mut z = vec![0.0; p];
    for _ in 0..n {
        z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        for r in 0..p {
            values.push((0..=r).map(|c| l[(r, c)] * z[c]).sum());
        }
    }
    let x = Design::from_row_major(n, p, values)?;
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let beta = if i < SINGLE_CP_TAU { &beta1 } else { &beta2 };
            let fit: f64 = x.row(i).iter().zip(beta).map(|(a, b)| a * b).sum();
            fit + rng.sample::<f64, _>(StandardNormal)
        })
        .collect();
    let scenario = SimScenario {
        kind: ScenarioKind::SingleCp,
        n,
        p: Some(p),
        seed,
        rng: RNG_NAME.into(),
        true_changepoints: vec![SINGLE_CP_TAU],
        truth_params: TruthParams::Coefficients {
            beta: vec![beta1, beta2],
        },
    };
    Ok((SeriesData::regression(x, y)?, scenario))
}

/// Dispatches on `kind`; `p` is ignored for univariate scenarios.
pub fn generate(kind: ScenarioKind, n: usize, p: usize, seed: u64) -> Result<(SeriesData, SimScenario)> {
    match kind {
        ScenarioKind::HdLinear => gen_hd_linear(n, p, seed),
        ScenarioKind::Nonparam => gen_nonparam(n, seed),
        ScenarioKind::SingleCp => gen_single_cp(n, p, seed),
    }
}
