//! Asymptotic moments used to standardize the Pedroni statistics.
//!
//! Each raw statistic is a smooth function of per-entity averages of
//! Brownian-motion functionals; `(Z − μ√N)/√ν → N(0,1)` with `μ` and `ν`
//! obtained from the first two moments of those functionals by the delta
//! method. The frozen tables below come from [`simulate_moments`] with
//! `T = 1000`, 40 000 replications and seed `19990101`
//! (`cargo run --release -p xtpanel --example pedroni_moments`).

use nalgebra::{Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pedroni::pedroni_entity_terms;
use super::PanelDeterministic;
use crate::error::{Error, Result};

pub const PEDRONI_MAX_REGRESSORS: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MomentCase {
    /// Panel-specific linear trends included.
    pub trend: bool,
    pub regressors: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatMoments {
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum StatKind {
    PanelV,
    PanelRho,
    PanelT,
    PanelAdf,
    GroupRho,
    GroupT,
    GroupAdf,
}

impl StatKind {
    const ALL: [StatKind; 7] = [
        StatKind::PanelV,
        StatKind::PanelRho,
        StatKind::PanelT,
        StatKind::PanelAdf,
        StatKind::GroupRho,
        StatKind::GroupT,
        StatKind::GroupAdf,
    ];

    fn index(self) -> usize {
        Self::ALL.iter().position(|&k| k == self).expect("listed")
    }
}

// (mean, variance) for panel v, panel rho, panel t, panel ADF, group rho,
// group t, group ADF; one row per number of regressors 1..=7.
#[rustfmt::skip]
const MEANS_ONLY: [[(f64, f64); 7]; PEDRONI_MAX_REGRESSORS] = [
    [(8.6237, 60.3689), (-6.0404, 31.3383), (-1.7435, 0.9297), (-1.7435, 0.9297), (-9.0565, 35.6023), (-2.0356, 0.6596), (-2.0356, 0.6596)],
    [(11.8465, 102.2209), (-9.5721, 56.8318), (-2.1954, 0.9662), (-2.1954, 0.9662), (-13.0073, 51.6670), (-2.4725, 0.6307), (-2.4725, 0.6307)],
    [(15.2748, 152.0645), (-13.3336, 83.1940), (-2.5940, 0.9537), (-2.5940, 0.9537), (-16.9474, 67.2174), (-2.8461, 0.5972), (-2.8461, 0.5972)],
    [(18.8090, 187.0791), (-17.0975, 98.5772), (-2.9393, 0.8628), (-2.9393, 0.8628), (-20.8007, 82.9226), (-3.1702, 0.5846), (-3.1702, 0.5846)],
    [(22.5888, 225.0008), (-20.9916, 117.8173), (-3.2603, 0.8260), (-3.2603, 0.8260), (-24.7197, 96.7279), (-3.4735, 0.5659), (-3.4735, 0.5659)],
    [(26.3910, 263.1764), (-24.8419, 132.2045), (-3.5493, 0.7673), (-3.5493, 0.7673), (-28.6268, 112.6431), (-3.7498, 0.5652), (-3.7498, 0.5652)],
    [(30.2843, 288.4818), (-28.8739, 148.1249), (-3.8306, 0.7352), (-3.8306, 0.7352), (-32.5872, 126.0662), (-4.0136, 0.5510), (-4.0136, 0.5510)],
];
#[rustfmt::skip]
const MEANS_TRENDS: [[(f64, f64); 7]; PEDRONI_MAX_REGRESSORS] = [
    [(17.8367, 118.5157), (-10.5356, 43.1828), (-2.3019, 0.6673), (-2.3019, 0.6673), (-13.5877, 50.5799), (-2.5357, 0.5707), (-2.5357, 0.5707)],
    [(21.1359, 158.0538), (-14.0254, 64.4397), (-2.6619, 0.7027), (-2.6619, 0.7027), (-17.3817, 66.4012), (-2.8894, 0.5684), (-2.8894, 0.5684)],
    [(24.4747, 195.4849), (-17.6138, 83.9547), (-2.9833, 0.7074), (-2.9833, 0.7074), (-21.0974, 81.7334), (-3.1966, 0.5661), (-3.1966, 0.5661)],
    [(27.8640, 236.0874), (-21.2820, 106.2490), (-3.2817, 0.7308), (-3.2817, 0.7308), (-24.9440, 98.5477), (-3.4881, 0.5698), (-3.4881, 0.5698)],
    [(31.5055, 276.3082), (-25.0965, 121.4350), (-3.5695, 0.6968), (-3.5695, 0.6968), (-28.7816, 112.0003), (-3.7623, 0.5535), (-3.7623, 0.5535)],
    [(35.1923, 314.7101), (-28.8682, 140.3399), (-3.8305, 0.6933), (-3.8305, 0.6933), (-32.6517, 127.0295), (-4.0173, 0.5576), (-4.0173, 0.5576)],
    [(39.0297, 335.6000), (-32.8784, 153.4234), (-4.0930, 0.6634), (-4.0930, 0.6634), (-36.5515, 140.2679), (-4.2628, 0.5444), (-4.2628, 0.5444)],
];

pub(crate) fn moments_for(case: MomentCase, kind: StatKind) -> Result<StatMoments> {
    if case.regressors == 0 || case.regressors > PEDRONI_MAX_REGRESSORS {
        return Err(Error::InvalidParameters(format!(
            "standardization moments tabulated for 1..={PEDRONI_MAX_REGRESSORS} regressors, got {}",
            case.regressors
        )));
    }
    let table = if case.trend { &MEANS_TRENDS } else { &MEANS_ONLY };
    let (mean, variance) = table[case.regressors - 1][kind.index()];
    Ok(StatMoments { mean, variance })
}

/// Simulate the standardization moments for one case: `reps` independent
/// entities of length `t_len` with the dependent variable and every
/// regressor independent Gaussian random walks.
///
/// Returned in the order panel v, panel rho, panel t, panel ADF, group rho,
/// group t, group ADF.
pub fn simulate_moments(case: MomentCase, t_len: usize, reps: usize, seed: u64) -> Result<[StatMoments; 7]> {
    if case.regressors == 0 || t_len < 20 || reps < 2 {
        return Err(Error::InvalidParameters("need regressors ≥ 1, T ≥ 20, reps ≥ 2".into()));
    }
    let det = if case.trend {
        PanelDeterministic::PanelMeansTrends
    } else {
        PanelDeterministic::PanelMeans
    };
    let m = case.regressors;
    let tf = t_len as f64 - 1.0;
    let draws: Vec<[f64; 9]> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let mut walk = vec![0.0; m + 1];
            let mut y = Vec::with_capacity(t_len);
            let mut x = nalgebra::DMatrix::zeros(t_len, m);
            for t in 0..t_len {
                for (j, w) in walk.iter_mut().enumerate() {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    *w += e;
                    if j == 0 {
                        y.push(*w);
                    } else {
                        x[(t, j - 1)] = *w;
                    }
                }
            }
            let k = pedroni_entity_terms(&y, &x, det, 0, 0)?;
            let a = k.sum_lag_sq / (tf * tf * k.l11_sq);
            let b = (k.sum_cross - tf * k.lambda) / (tf * k.l11_sq);
            let c = k.sigma2 / k.l11_sq;
            let a2 = k.sum_lag_sq_adf / (tf * tf * k.l11_sq);
            let b2 = k.sum_cross_adf / (tf * k.l11_sq);
            let c2 = k.s2_adf / k.l11_sq;
            Ok([a, b, c, a2, b2, c2, b / a, b / (c * a).sqrt(), b2 / (c2 * a2).sqrt()])
        })
        .collect::<Result<_>>()?;

    let n = reps as f64;
    let mut mean = [0.0; 9];
    for d in &draws {
        for (m, v) in mean.iter_mut().zip(d) {
            *m += v / n;
        }
    }
    let cov = |i: usize, j: usize| {
        draws
            .iter()
            .map(|d| (d[i] - mean[i]) * (d[j] - mean[j]))
            .sum::<f64>()
            / (n - 1.0)
    };
    let cov3 = |o: usize| Matrix3::from_fn(|i, j| cov(o + i, o + j));

    let (ea, eb, ec) = (mean[0], mean[1], mean[2]);
    let (ea2, eb2, ec2) = (mean[3], mean[4], mean[5]);
    let s = cov3(0);
    let s2 = cov3(3);

    let panel_v = StatMoments {
        mean: 1.0 / ea,
        variance: s[(0, 0)] / ea.powi(4),
    };
    let rho_mu = eb / ea;
    let g = Vector3::new(-eb / (ea * ea), 1.0 / ea, 0.0);
    let panel_rho = StatMoments {
        mean: rho_mu,
        variance: (g.transpose() * s * g)[(0, 0)],
    };
    let t_moments = |ea: f64, eb: f64, ec: f64, s: &Matrix3<f64>| {
        let f = eb / (ec * ea).sqrt();
        let g = Vector3::new(-f / (2.0 * ea), f / eb, -f / (2.0 * ec));
        StatMoments {
            mean: f,
            variance: (g.transpose() * s * g)[(0, 0)],
        }
    };
    let panel_t = t_moments(ea, eb, ec, &s);
    let panel_adf = t_moments(ea2, eb2, ec2, &s2);
    let group = |i: usize| StatMoments {
        mean: mean[i],
        variance: cov(i, i),
    };
    Ok([panel_v, panel_rho, panel_t, panel_adf, group(6), group(7), group(8)])
}
