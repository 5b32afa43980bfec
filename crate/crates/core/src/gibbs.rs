//! Gibbs sampler for the group-dependent mixture of product multinomials.
//!
//! Each iteration runs five blocks in a fixed order:
//!
//! 1. `π_X | - ~ Dir(α + n_x)`
//! 2. `z_i | -` from `ν_{h x_i} ∏_j π_hj(y_ij)`, normalized over `h`
//! 3. `π_hj | - ~ Dir(γ_j + n_jh·)`
//! 4. `T | z` with `ν` integrated out (Dirichlet-multinomial marginals)
//! 5. `ν | T, z`: one shared draw under `T = 0`, per-group draws under `T = 1`
//!
//! Blocks 4 and 5 together draw `(T, ν)` jointly given `z`. Units in block 2
//! are updated in index order; their full conditionals are independent given
//! the parameters, so the order does not affect the target.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{sample_index, Dataset};
use crate::error::{Error, Result};
use crate::model::{
    CategorySpace, ComponentProfiles, GroupMixingWeights, JointModel, ModelView, ProbabilityVector,
};
use crate::prior::{sample_dirichlet, sample_prior_model, PriorConfig};
use crate::rng::RngSpec;
use crate::special::ln_dirichlet_multinomial_seq;

/// Iteration counts for one chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            n_iter: 5000,
            burn_in: 1000,
            thin: 1,
        }
    }
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::Schedule("thin must be at least 1".into()));
        }
        if self.burn_in >= self.n_iter {
            return Err(Error::Schedule(format!(
                "burn_in ({}) must be smaller than n_iter ({})",
                self.burn_in, self.n_iter
            )));
        }
        Ok(())
    }

    /// `⌊(n_iter - burn_in) / thin⌋`.
    pub fn retained(&self) -> usize {
        (self.n_iter - self.burn_in) / self.thin
    }

    fn keeps(&self, iter: usize) -> bool {
        iter >= self.burn_in && (iter - self.burn_in + 1).is_multiple_of(self.thin)
    }
}

/// Latent class of each unit, 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatentState {
    pub z: Vec<usize>,
    pub components: usize,
}

impl LatentState {
    pub fn new(z: Vec<usize>, components: usize) -> Result<Self> {
        if let Some((i, &h)) = z.iter().enumerate().find(|(_, &h)| h >= components) {
            return Err(Error::Dimension(format!(
                "unit {i} assigned to component {h}, truncation level is {components}"
            )));
        }
        Ok(Self { z, components })
    }

    pub fn uniform<R: Rng + ?Sized>(n: usize, components: usize, rng: &mut R) -> Self {
        let z = (0..n).map(|_| rng.random_range(0..components)).collect();
        Self { z, components }
    }
}

/// Counts driving every conjugate update.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SufficientStats {
    pub groups: usize,
    pub components: usize,
    /// Units per group.
    pub n_x: Vec<usize>,
    /// Units per component.
    pub n_h: Vec<usize>,
    /// Row-major `k × H`: units of group `x` in component `h`.
    pub n_hx: Vec<usize>,
    /// `H × Σ d_j`, laid out like the flattened profiles: units of
    /// component `h` with `Y_j = c`.
    pub n_jhc: Vec<usize>,
}

impl SufficientStats {
    pub fn n(&self) -> usize {
        self.n_x.iter().sum()
    }

    pub fn group_row(&self, x: usize) -> &[usize] {
        &self.n_hx[x * self.components..(x + 1) * self.components]
    }

    pub fn occupied(&self) -> usize {
        self.n_h.iter().filter(|&&c| c > 0).count()
    }

    /// Checks the cross-sum identities between the count families.
    pub fn check_invariants(&self, space: &CategorySpace) -> Result<()> {
        let n = self.n();
        let fail = |m: &str| Err(Error::Degenerate(format!("count invariant violated: {m}")));
        if self.n_h.iter().sum::<usize>() != n {
            return fail("Σ_h n_h != n");
        }
        for x in 0..self.groups {
            if self.group_row(x).iter().sum::<usize>() != self.n_x[x] {
                return fail("Σ_h n_hx != n_x");
            }
        }
        let width = space.profile_width();
        for h in 0..self.components {
            for j in 0..space.p() {
                let start = h * width + space.offset(j);
                let s: usize = self.n_jhc[start..start + space.level(j)].iter().sum();
                if s != self.n_h[h] {
                    return fail("Σ_c n_jhc != n_h");
                }
            }
        }
        Ok(())
    }
}

/// Tallies the four count families for assignments `z`.
pub fn compute_stats(data: &Dataset, z: &LatentState) -> SufficientStats {
    let space = data.space();
    let (k, hbar, width) = (space.groups(), z.components, space.profile_width());
    debug_assert_eq!(z.z.len(), data.n());
    let mut stats = SufficientStats {
        groups: k,
        components: hbar,
        n_x: vec![0; k],
        n_h: vec![0; hbar],
        n_hx: vec![0; k * hbar],
        n_jhc: vec![0; hbar * width],
    };
    for (i, &h) in z.z.iter().enumerate() {
        let x = data.x(i);
        stats.n_x[x] += 1;
        stats.n_h[h] += 1;
        stats.n_hx[x * hbar + h] += 1;
        let base = h * width;
        for (j, &c) in data.y(i).iter().enumerate() {
            stats.n_jhc[base + space.offset(j) + c] += 1;
        }
    }
    stats
}

/// Block 1: `π_X ~ Dir(α_1 + n_1, ..., α_k + n_k)`.
pub fn update_group_marginal<R: Rng + ?Sized>(
    stats: &SufficientStats,
    config: &PriorConfig,
    rng: &mut R,
) -> Result<ProbabilityVector> {
    let conc: Vec<f64> = config
        .alpha
        .iter()
        .zip(&stats.n_x)
        .map(|(a, &n)| a + n as f64)
        .collect();
    sample_dirichlet(&conc, rng)
}

/// Normalized probabilities from unnormalized log weights, with max
/// subtraction. `None` when every weight is zero.
pub fn normalize_log_weights(log_weights: &[f64]) -> Option<Vec<f64>> {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return None;
    }
    let mut w: Vec<f64> = log_weights.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    Some(w)
}

/// Log tables reused across all units of one block-2 sweep.
struct LogTables {
    profiles: Vec<f64>,
    nu: Vec<f64>,
}

impl LogTables {
    fn new(view: &ModelView<'_>) -> Self {
        Self {
            profiles: view.profiles.iter().map(|p| p.ln()).collect(),
            nu: view.nu.iter().map(|p| p.ln()).collect(),
        }
    }

    fn fill(&self, space: &CategorySpace, y: &[usize], x: usize, out: &mut [f64]) {
        let hbar = space.components();
        let width = space.profile_width();
        for (h, slot) in out.iter_mut().enumerate() {
            let row = &self.profiles[h * width..(h + 1) * width];
            let mut acc = self.nu[x * hbar + h];
            for (j, &c) in y.iter().enumerate() {
                acc += row[space.offset(j) + c];
            }
            *slot = acc;
        }
    }
}

fn check_model_for_data(data: &Dataset, model: &JointModel) -> Result<()> {
    let (ds, ms) = (data.space(), model.space());
    if ds.levels() != ms.levels() || ds.groups() != ms.groups() {
        return Err(Error::Dimension(
            "model parameters do not match the dataset dimensions".into(),
        ));
    }
    Ok(())
}

/// Full conditional `pr(z_i = h | -)` of one unit.
pub fn latent_class_probabilities(data: &Dataset, model: &JointModel, i: usize) -> Result<Vec<f64>> {
    check_model_for_data(data, model)?;
    let space = model.space();
    let tables = LogTables::new(&model.view());
    let mut logw = vec![0.0; space.components()];
    tables.fill(space, data.y(i), data.x(i), &mut logw);
    normalize_log_weights(&logw).ok_or_else(|| degenerate_unit(i))
}

fn degenerate_unit(i: usize) -> Error {
    Error::Degenerate(format!(
        "unit {i} has zero probability under every mixture component"
    ))
}

/// Block 2: draws every `z_i` from its categorical full conditional.
pub fn update_latent_classes<R: Rng + ?Sized>(
    data: &Dataset,
    model: &JointModel,
    rng: &mut R,
) -> Result<LatentState> {
    check_model_for_data(data, model)?;
    let space = model.space();
    let hbar = space.components();
    let tables = LogTables::new(&model.view());
    let mut logw = vec![0.0; hbar];
    let mut z = Vec::with_capacity(data.n());
    for i in 0..data.n() {
        tables.fill(space, data.y(i), data.x(i), &mut logw);
        let probs = normalize_log_weights(&logw).ok_or_else(|| degenerate_unit(i))?;
        z.push(sample_index(&probs, rng));
    }
    Ok(LatentState { z, components: hbar })
}

/// Concentration of the block-3 full conditional for kernel `(h, j)`.
pub fn profile_concentration(
    stats: &SufficientStats,
    space: &CategorySpace,
    config: &PriorConfig,
    h: usize,
    j: usize,
) -> Vec<f64> {
    let start = h * space.profile_width() + space.offset(j);
    config.gamma[j]
        .iter()
        .zip(&stats.n_jhc[start..start + space.level(j)])
        .map(|(g, &n)| g + n as f64)
        .collect()
}

/// Block 3: `π_hj ~ Dir(γ_j + n_jh·)` independently for every `(h, j)`.
pub fn update_component_profiles<R: Rng + ?Sized>(
    stats: &SufficientStats,
    space: &CategorySpace,
    config: &PriorConfig,
    rng: &mut R,
) -> Result<ComponentProfiles> {
    let mut flat = Vec::with_capacity(space.components() * space.profile_width());
    for h in 0..space.components() {
        for j in 0..space.p() {
            let conc = profile_concentration(stats, space, config, h, j);
            flat.extend(sample_dirichlet(&conc, rng)?.into_inner());
        }
    }
    Ok(ComponentProfiles::from_flat_unchecked(space, flat))
}

/// Log of the H0-vs-H1 marginal-likelihood ratio of the component counts,
///
/// ```text
/// ln m(n_1..n_H) - Σ_x ln m(n_1x..n_Hx),
/// m(c) = Γ(H a) / Γ(H a + Σc) · ∏_h Γ(a + c_h) / Γ(a),
/// ```
///
/// with `a` the mixing-weight concentration. At `a = 1/H̄` this reduces to the
/// familiar `∏_h Γ(1/H + n_h) / (Γ(1/H)^H Γ(n + 1))` form.
pub fn log_bf_h0_h1(stats: &SufficientStats, config: &PriorConfig) -> f64 {
    let a = config.nu_concentration;
    let pooled = ln_dirichlet_multinomial_seq(&stats.n_h, a);
    let split: f64 = (0..stats.groups)
        .map(|x| ln_dirichlet_multinomial_seq(stats.group_row(x), a))
        .sum();
    pooled - split
}

/// `pr(T = 1 | z) = [1 + (pr(H0)/pr(H1)) exp(log_bf_h0_h1)]^{-1}`, evaluated
/// as a logistic of the log odds so it never overflows.
pub fn testing_probability(stats: &SufficientStats, config: &PriorConfig) -> f64 {
    let log_odds = config.pr_h1.ln() - (1.0 - config.pr_h1).ln() - log_bf_h0_h1(stats, config);
    if log_odds >= 0.0 {
        1.0 / (1.0 + (-log_odds).exp())
    } else {
        let e = log_odds.exp();
        e / (1.0 + e)
    }
}

/// Block 4: Bernoulli draw of the testing indicator.
pub fn update_testing_indicator<R: Rng + ?Sized>(
    stats: &SufficientStats,
    config: &PriorConfig,
    rng: &mut R,
) -> bool {
    rng.random::<f64>() < testing_probability(stats, config)
}

/// Block 5: per-group draws `ν_x ~ Dir(a + n_·x)` when `T = 1`; otherwise a
/// single `υ ~ Dir(a + n_·)` copied to every group.
///
/// Under `T = 1` the shared vector `υ` does not enter the likelihood and is
/// refreshed from its prior.
pub fn update_mixing_weights<R: Rng + ?Sized>(
    stats: &SufficientStats,
    alternative: bool,
    config: &PriorConfig,
    rng: &mut R,
) -> Result<GroupMixingWeights> {
    let a = config.nu_concentration;
    let shifted = |counts: &[usize]| counts.iter().map(|&n| a + n as f64).collect::<Vec<_>>();
    if alternative {
        let nu = (0..stats.groups)
            .map(|x| sample_dirichlet(&shifted(stats.group_row(x)), rng))
            .collect::<Result<Vec<_>>>()?;
        let upsilon = sample_dirichlet(&config.nu_prior(), rng)?;
        GroupMixingWeights::group_specific(upsilon, nu)
    } else {
        let upsilon = sample_dirichlet(&shifted(&stats.n_h), rng)?;
        Ok(GroupMixingWeights::shared(upsilon, stats.groups))
    }
}

/// Retained draws of one chain, stored flat in draw order.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    pub space: CategorySpace,
    pub config: PriorConfig,
    pub schedule: Schedule,
    pub rng: RngSpec,
    pub n_units: usize,
    /// `draws × k`.
    pub pi_x: Vec<f64>,
    /// `draws × H × Σ d_j`.
    pub profiles: Vec<f64>,
    /// `draws × k × H`.
    pub nu: Vec<f64>,
    /// Testing indicator per draw.
    pub t: Vec<bool>,
    /// Number of occupied components per draw.
    pub occupancy: Vec<usize>,
    /// Number of equal-length chains laid end to end in the draws.
    pub chains: usize,
}

impl ChainOutput {
    pub fn n_draws(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn draw(&self, r: usize) -> ModelView<'_> {
        let (k, hbar, width) = (
            self.space.groups(),
            self.space.components(),
            self.space.profile_width(),
        );
        ModelView::new(
            &self.space,
            &self.pi_x[r * k..(r + 1) * k],
            &self.profiles[r * hbar * width..(r + 1) * hbar * width],
            &self.nu[r * k * hbar..(r + 1) * k * hbar],
        )
    }

    fn record(&mut self, model: &JointModel, occupied: usize) {
        self.pi_x.extend_from_slice(model.pi_x().as_slice());
        self.profiles.extend_from_slice(model.profiles().as_flat());
        self.nu.extend_from_slice(model.weights().nu_flat());
        self.t.push(model.weights().alternative());
        self.occupancy.push(occupied);
    }

    /// Concatenates chains in the given order. All chains must share the
    /// space; metadata is taken from the first.
    pub fn concat(chains: &[ChainOutput]) -> Result<ChainOutput> {
        let first = chains
            .first()
            .ok_or_else(|| Error::Argument("no chains to merge".into()))?;
        let mut out = ChainOutput {
            pi_x: Vec::new(),
            profiles: Vec::new(),
            nu: Vec::new(),
            t: Vec::new(),
            occupancy: Vec::new(),
            chains: 0,
            ..first.clone()
        };
        for c in chains {
            if c.space != first.space {
                return Err(Error::Dimension("chains have different dimensions".into()));
            }
            if c.n_draws() * first.chains != first.n_draws() * c.chains {
                return Err(Error::Dimension("chains have different lengths".into()));
            }
            out.chains += c.chains;
            out.pi_x.extend_from_slice(&c.pi_x);
            out.profiles.extend_from_slice(&c.profiles);
            out.nu.extend_from_slice(&c.nu);
            out.t.extend_from_slice(&c.t);
            out.occupancy.extend_from_slice(&c.occupancy);
        }
        Ok(out)
    }
}

/// Runs one chain. The initial parameters are a prior draw and the initial
/// latent classes are uniform over components.
pub fn run_chain(
    data: &Dataset,
    config: &PriorConfig,
    schedule: &Schedule,
    rng_spec: RngSpec,
) -> Result<ChainOutput> {
    schedule.validate()?;
    let space = data.space().with_components(config.h_bar)?;
    config.validate(&space)?;
    let data = data.clone().with_components(config.h_bar)?;
    let mut rng = rng_spec.rng();

    let mut model = sample_prior_model(config, &space, &mut rng)?;
    let mut z = LatentState::uniform(data.n(), space.components(), &mut rng);
    let mut stats = compute_stats(&data, &z);

    let retained = schedule.retained();
    let (k, hbar, width) = (space.groups(), space.components(), space.profile_width());
    let mut out = ChainOutput {
        space: space.clone(),
        config: config.clone(),
        schedule: *schedule,
        rng: rng_spec,
        n_units: data.n(),
        pi_x: Vec::with_capacity(retained * k),
        profiles: Vec::with_capacity(retained * hbar * width),
        nu: Vec::with_capacity(retained * k * hbar),
        t: Vec::with_capacity(retained),
        occupancy: Vec::with_capacity(retained),
        chains: 1,
    };

    for iter in 0..schedule.n_iter {
        let pi_x = update_group_marginal(&stats, config, &mut rng)?;
        model.set_pi_x(pi_x);

        z = update_latent_classes(&data, &model, &mut rng)?;
        stats = compute_stats(&data, &z);
        debug_assert!(stats.check_invariants(&space).is_ok());

        let profiles = update_component_profiles(&stats, &space, config, &mut rng)?;
        model.set_profiles(profiles);

        let t = update_testing_indicator(&stats, config, &mut rng);
        let weights = update_mixing_weights(&stats, t, config, &mut rng)?;
        model.set_weights(weights);

        if schedule.keeps(iter) {
            out.record(&model, stats.occupied());
        }
    }
    debug_assert_eq!(out.n_draws(), retained);
    Ok(out)
}

/// Runs `chains` independent chains in parallel on streams
/// `base.stream, base.stream + 1, ...`. Output is in chain order.
pub fn run_chains(
    data: &Dataset,
    config: &PriorConfig,
    schedule: &Schedule,
    base: RngSpec,
    chains: usize,
) -> Result<Vec<ChainOutput>> {
    use rayon::prelude::*;
    (0..chains as u64)
        .into_par_iter()
        .map(|c| run_chain(data, config, schedule, base.substream(c)))
        .collect()
}
