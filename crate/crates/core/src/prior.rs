//! Conjugate Dirichlet priors and the spike-style testing prior on the
//! group mixing weights:
//!
//! ```text
//! π_X ~ Dir(α),  π_hj ~ Dir(γ_j),
//! ν_x = (1 - T) υ + T υ_x,  υ, υ_x ~ Dir(a, ..., a),  T ~ Bern(pr(H1))
//! ```
//!
//! with `a = 1/H̄` by default.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    CategorySpace, ComponentProfiles, GroupMixingWeights, JointModel, ProbabilityVector,
};

/// Validated hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorConfig {
    /// Dirichlet concentration for `π_X`, one entry per group.
    pub alpha: Vec<f64>,
    /// Dirichlet concentration for each `π_hj`, one vector of length `d_j` per variable.
    pub gamma: Vec<Vec<f64>>,
    /// Prior probability of the alternative, `pr(H1)`.
    pub pr_h1: f64,
    /// Truncation level `H̄`.
    pub h_bar: usize,
    /// Per-coordinate Dirichlet mass for `υ` and `υ_x`.
    pub nu_concentration: f64,
}

impl PriorConfig {
    /// Checks positivity of all concentrations and agreement with `space`.
    ///
    /// `pr_h1` is accepted on the closed interval; the endpoints pin `T`.
    pub fn validate(&self, space: &CategorySpace) -> Result<()> {
        if self.alpha.len() != space.groups() {
            return Err(Error::Argument(format!(
                "alpha has {} entries, space has {} groups",
                self.alpha.len(),
                space.groups()
            )));
        }
        check_positive("alpha", &self.alpha)?;
        if self.gamma.len() != space.p() {
            return Err(Error::Argument(format!(
                "gamma has {} vectors, space has {} variables",
                self.gamma.len(),
                space.p()
            )));
        }
        for (j, g) in self.gamma.iter().enumerate() {
            if g.len() != space.level(j) {
                return Err(Error::Argument(format!(
                    "gamma[{j}] has {} entries, variable has {} levels",
                    g.len(),
                    space.level(j)
                )));
            }
            check_positive(&format!("gamma[{j}]"), g)?;
        }
        if !(0.0..=1.0).contains(&self.pr_h1) {
            return Err(Error::Argument(format!("pr_h1 = {} outside [0, 1]", self.pr_h1)));
        }
        if self.h_bar == 0 {
            return Err(Error::Argument("h_bar must be positive".into()));
        }
        if self.h_bar != space.components() {
            return Err(Error::Argument(format!(
                "h_bar = {} disagrees with truncation level {} of the space",
                self.h_bar,
                space.components()
            )));
        }
        check_positive("nu_concentration", &[self.nu_concentration])?;
        Ok(())
    }

    pub fn nu_prior(&self) -> Vec<f64> {
        vec![self.nu_concentration; self.h_bar]
    }
}

fn check_positive(name: &str, values: &[f64]) -> Result<()> {
    match values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        Some(v) => Err(Error::Argument(format!(
            "{name} must be strictly positive, found {v}"
        ))),
        None => Ok(()),
    }
}

/// `α_x = 1/2`, `γ_jc = 1/d_j`, `pr(H1) = 1/2`, `H̄` from the space and
/// `a = 1/H̄`.
pub fn default_config(space: &CategorySpace) -> PriorConfig {
    let h_bar = space.components();
    PriorConfig {
        alpha: vec![0.5; space.groups()],
        gamma: space
            .levels()
            .iter()
            .map(|&d| vec![1.0 / d as f64; d])
            .collect(),
        pr_h1: 0.5,
        h_bar,
        nu_concentration: 1.0 / h_bar as f64,
    }
}

/// Draws from `Dir(conc)` by normalizing independent Gamma variates.
///
/// Every variate is carried in log scale. Shapes below one use the boost
/// `G_a = G_{a+1} U^{1/a}`, i.e. `ln G_a = ln G_{a+1} + ln(U)/a`, which stays
/// finite for shapes where `U^{1/a}` would underflow in linear scale.
pub fn sample_dirichlet<R: Rng + ?Sized>(conc: &[f64], rng: &mut R) -> Result<ProbabilityVector> {
    if conc.is_empty() {
        return Err(Error::Argument("Dirichlet concentration is empty".into()));
    }
    check_positive("Dirichlet concentration", conc)?;
    let mut logs = Vec::with_capacity(conc.len());
    for &a in conc {
        logs.push(ln_gamma_variate(a, rng));
    }
    Ok(normalize_logs(logs))
}

/// `ln G` for `G ~ Gamma(shape, 1)`.
pub(crate) fn ln_gamma_variate<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape >= 1.0 {
        let g = Gamma::new(shape, 1.0).expect("shape validated positive");
        g.sample(rng).ln()
    } else {
        let g = Gamma::new(shape + 1.0, 1.0).expect("shape validated positive");
        // (0, 1] so the log is finite.
        let u: f64 = 1.0 - rng.random::<f64>();
        g.sample(rng).ln() + u.ln() / shape
    }
}

fn normalize_logs(mut logs: Vec<f64>) -> ProbabilityVector {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in logs.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in logs.iter_mut() {
        *v /= total;
    }
    ProbabilityVector::from_normalized_unchecked(logs)
}

/// One draw of every parameter from the prior, with `ν_x` set according to
/// the sampled `T`.
pub fn sample_prior_model<R: Rng + ?Sized>(
    config: &PriorConfig,
    space: &CategorySpace,
    rng: &mut R,
) -> Result<JointModel> {
    config.validate(space)?;
    let pi_x = sample_dirichlet(&config.alpha, rng)?;
    let mut kernels = Vec::with_capacity(space.components());
    for _ in 0..space.components() {
        let row = config
            .gamma
            .iter()
            .map(|g| sample_dirichlet(g, rng))
            .collect::<Result<Vec<_>>>()?;
        kernels.push(row);
    }
    let profiles = ComponentProfiles::new(space, kernels)?;
    let weights = sample_prior_weights(config, space.groups(), rng)?;
    JointModel::new(space.clone(), pi_x, profiles, weights)
}

pub(crate) fn sample_prior_weights<R: Rng + ?Sized>(
    config: &PriorConfig,
    groups: usize,
    rng: &mut R,
) -> Result<GroupMixingWeights> {
    let nu_prior = config.nu_prior();
    let upsilon = sample_dirichlet(&nu_prior, rng)?;
    let group_draws = (0..groups)
        .map(|_| sample_dirichlet(&nu_prior, rng))
        .collect::<Result<Vec<_>>>()?;
    let alternative = rng.random::<f64>() < config.pr_h1;
    if alternative {
        GroupMixingWeights::group_specific(upsilon, group_draws)
    } else {
        Ok(GroupMixingWeights::shared(upsilon, groups))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngSpec;

    fn mean_of_draws(conc: &[f64], draws: usize, seed: u64) -> Vec<f64> {
        let mut rng = RngSpec::new(seed, 0).rng();
        let mut acc = vec![0.0; conc.len()];
        for _ in 0..draws {
            let d = sample_dirichlet(conc, &mut rng).unwrap();
            for (a, v) in acc.iter_mut().zip(d.as_slice()) {
                *a += v;
            }
        }
        acc.iter().map(|a| a / draws as f64).collect()
    }

    #[test]
    fn default_config_matches_reference_settings() {
        let space = CategorySpace::new(vec![4; 17], 2, 10).unwrap();
        let c = default_config(&space);
        assert_eq!(c.alpha, vec![0.5, 0.5]);
        assert!(c.gamma.iter().all(|g| g == &vec![0.25; 4]));
        assert_eq!(c.pr_h1, 0.5);
        assert_eq!(c.h_bar, 10);
        assert!((c.nu_concentration - 0.1).abs() < 1e-15);
        c.validate(&space).unwrap();
    }

    #[test]
    fn default_config_single_group_and_binary() {
        let space = CategorySpace::new(vec![2, 3], 1, 4).unwrap();
        let c = default_config(&space);
        assert_eq!(c.alpha, vec![0.5]);
        assert_eq!(c.gamma[0], vec![0.5, 0.5]);
    }

    #[test]
    fn validation_rejects_bad_values() {
        let space = CategorySpace::new(vec![2, 2], 2, 3).unwrap();
        let good = default_config(&space);
        let mut c = good.clone();
        c.alpha[0] = 0.0;
        assert!(c.validate(&space).is_err());
        let mut c = good.clone();
        c.gamma[1] = vec![0.5];
        assert!(c.validate(&space).is_err());
        let mut c = good.clone();
        c.pr_h1 = 1.5;
        assert!(c.validate(&space).is_err());
        let mut c = good.clone();
        c.h_bar = 4;
        assert!(c.validate(&space).is_err());
        let mut c = good;
        c.nu_concentration = -1.0;
        assert!(c.validate(&space).is_err());
    }

    #[test]
    fn dirichlet_degenerate_simplex() {
        let mut rng = RngSpec::new(1, 0).rng();
        for c in [0.01, 1.0, 7.5] {
            assert_eq!(sample_dirichlet(&[c], &mut rng).unwrap().as_slice(), &[1.0]);
        }
    }

    #[test]
    fn dirichlet_rejects_nonpositive() {
        let mut rng = RngSpec::new(1, 0).rng();
        assert!(sample_dirichlet(&[1.0, 0.0], &mut rng).is_err());
        assert!(sample_dirichlet(&[1.0, -2.0], &mut rng).is_err());
        assert!(sample_dirichlet(&[], &mut rng).is_err());
    }

    // Moment oracle: E[θ_i] = c_i / Σ c.
    #[test]
    fn dirichlet_flat_mean() {
        let m = mean_of_draws(&[1.0, 1.0], 100_000, 11);
        assert!((m[0] - 0.5).abs() < 0.01 && (m[1] - 0.5).abs() < 0.01, "{m:?}");
    }

    #[test]
    fn dirichlet_skewed_mean() {
        let m = mean_of_draws(&[5.0, 1.0], 100_000, 12);
        assert!((m[0] - 5.0 / 6.0).abs() < 0.01, "{m:?}");
        assert!((m[1] - 1.0 / 6.0).abs() < 0.01, "{m:?}");
    }

    #[test]
    fn dirichlet_small_shape_moments() {
        // Dir(0.1 x 10): mean 0.1, variance a(A - a)/(A^2 (A + 1)) = 0.045.
        let conc = vec![0.1; 10];
        let mut rng = RngSpec::new(13, 0).rng();
        let n = 100_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let v = sample_dirichlet(&conc, &mut rng).unwrap()[3];
            s += v;
            s2 += v * v;
        }
        let mean = s / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!((mean - 0.1).abs() < 0.005, "mean {mean}");
        assert!((var - 0.045).abs() < 0.003, "var {var}");
    }

    #[test]
    fn dirichlet_tiny_shapes_stay_on_simplex() {
        let mut rng = RngSpec::new(14, 0).rng();
        for _ in 0..1000 {
            let d = sample_dirichlet(&[1e-3; 5], &mut rng).unwrap();
            assert!(d.as_slice().iter().all(|v| v.is_finite()));
            assert!((d.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn prior_draw_respects_degenerate_testing_prior() {
        let space = CategorySpace::new(vec![2, 3], 3, 4).unwrap();
        let mut c = default_config(&space);
        let mut rng = RngSpec::new(3, 0).rng();
        c.pr_h1 = 0.0;
        for _ in 0..200 {
            let m = sample_prior_model(&c, &space, &mut rng).unwrap();
            let w = m.weights();
            assert!(!w.alternative());
            assert!((1..3).all(|x| w.nu(x) == w.nu(0)));
            assert_eq!(w.nu(0), w.upsilon());
        }
        c.pr_h1 = 1.0;
        for _ in 0..200 {
            let m = sample_prior_model(&c, &space, &mut rng).unwrap();
            let w = m.weights();
            assert!(w.alternative());
            assert!(w.nu(0) != w.nu(1));
        }
    }

    #[test]
    fn prior_testing_indicator_frequency() {
        // Binomial(10^4, 1/2): sd 0.005, band 0.02 is four sd.
        let space = CategorySpace::new(vec![2, 2], 2, 3).unwrap();
        let c = default_config(&space);
        let mut rng = RngSpec::new(4, 0).rng();
        let n = 10_000;
        let ones = (0..n)
            .filter(|_| sample_prior_model(&c, &space, &mut rng).unwrap().weights().alternative())
            .count();
        let freq = ones as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.02, "freq {freq}");
    }

    #[test]
    fn prior_draws_are_reproducible() {
        let space = CategorySpace::new(vec![2, 4], 2, 5).unwrap();
        let c = default_config(&space);
        let a = sample_prior_model(&c, &space, &mut RngSpec::new(9, 2).rng()).unwrap();
        let b = sample_prior_model(&c, &space, &mut RngSpec::new(9, 2).rng()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn alternative_group_weights_look_independent() {
        // Under T = 1 the correlation between ν_1x and ν_1x' across draws is ~0.
        let space = CategorySpace::new(vec![2], 2, 3).unwrap();
        let mut c = default_config(&space);
        c.pr_h1 = 1.0;
        let mut rng = RngSpec::new(5, 0).rng();
        let n = 20_000;
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                let m = sample_prior_model(&c, &space, &mut rng).unwrap();
                (m.weights().nu(0)[0], m.weights().nu(1)[0])
            })
            .collect();
        let ma = pairs.iter().map(|p| p.0).sum::<f64>() / n as f64;
        let mb = pairs.iter().map(|p| p.1).sum::<f64>() / n as f64;
        let cov = pairs.iter().map(|p| (p.0 - ma) * (p.1 - mb)).sum::<f64>() / n as f64;
        let va = pairs.iter().map(|p| (p.0 - ma).powi(2)).sum::<f64>() / n as f64;
        let vb = pairs.iter().map(|p| (p.1 - mb).powi(2)).sum::<f64>() / n as f64;
        let corr = cov / (va * vb).sqrt();
        assert!(corr.abs() < 0.05, "corr {corr}");
    }
}
