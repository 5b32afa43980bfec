//! Posterior summaries of a chain: the global test, model-based Cramér's V
//! coefficients for group differences in each marginal and for pairwise
//! dependence within each group, marginal differences between two groups,
//! and MCMC diagnostics.
//!
//! Every functional is invariant to relabeling the mixture components. To
//! make the floating-point results bit-identical under relabeling too, each
//! draw is put in a canonical component order before evaluation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{diagnose, ScalarDiagnostic};
use crate::error::{Error, Result};
use crate::gibbs::ChainOutput;
use crate::model::ModelView;

pub const DEFAULT_EXCEEDANCE_THRESHOLD: f64 = 0.1;
pub const DEFAULT_CREDIBLE_LEVEL: f64 = 0.90;

/// Posterior probability of the alternative, estimated as the share of
/// draws with `T = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalTestResult {
    pub pr_h1_given_data: f64,
    pub n_draws: usize,
    /// Reporting aid only; no decision is taken by the library.
    pub threshold: Option<f64>,
}

pub fn global_test(chain: &ChainOutput) -> Result<GlobalTestResult> {
    if chain.is_empty() {
        return Err(Error::Argument("chain has no retained draws".into()));
    }
    let ones = chain.t.iter().filter(|&&t| t).count();
    Ok(GlobalTestResult {
        pr_h1_given_data: ones as f64 / chain.n_draws() as f64,
        n_draws: chain.n_draws(),
        threshold: None,
    })
}

/// Owned copy of a draw with its components sorted into canonical order.
#[derive(Debug, Clone)]
pub struct CanonicalDraw {
    space: crate::model::CategorySpace,
    pi_x: Vec<f64>,
    profiles: Vec<f64>,
    nu: Vec<f64>,
}

impl CanonicalDraw {
    /// Components are ordered lexicographically by `(ν_·h, π_h·)` under
    /// `f64::total_cmp`. Tied components are identical, so their order is
    /// immaterial.
    pub fn new(view: &ModelView<'_>) -> Self {
        let space = view.space;
        let (k, hbar, width) = (space.groups(), space.components(), space.profile_width());
        let key = |h: usize| {
            (0..k)
                .map(move |x| view.nu[x * hbar + h])
                .chain(view.profiles[h * width..(h + 1) * width].iter().copied())
        };
        let mut order: Vec<usize> = (0..hbar).collect();
        order.sort_by(|&a, &b| {
            key(a)
                .zip(key(b))
                .map(|(u, v)| u.total_cmp(&v))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut profiles = Vec::with_capacity(view.profiles.len());
        for &h in &order {
            profiles.extend_from_slice(&view.profiles[h * width..(h + 1) * width]);
        }
        let mut nu = Vec::with_capacity(view.nu.len());
        for x in 0..k {
            nu.extend(order.iter().map(|&h| view.nu[x * hbar + h]));
        }
        Self {
            space: space.clone(),
            pi_x: view.pi_x.to_vec(),
            profiles,
            nu,
        }
    }

    pub fn view(&self) -> ModelView<'_> {
        ModelView::new(&self.space, &self.pi_x, &self.profiles, &self.nu)
    }
}

fn degenerate_cell(what: &str) -> Error {
    Error::Degenerate(format!(
        "{what}: zero expected probability with nonzero deviation"
    ))
}

/// Chi-square term with the `0/0 = 0` convention.
fn chi_term(numerator: f64, denominator: f64, what: &str) -> Result<f64> {
    if denominator > 0.0 {
        Ok(numerator * numerator / denominator)
    } else if numerator == 0.0 {
        Ok(0.0)
    } else {
        Err(degenerate_cell(what))
    }
}

#[allow(clippy::needless_range_loop)]
fn marginal_v_raw(view: &ModelView<'_>, j: usize) -> Result<f64> {
    let space = view.space;
    let k = space.groups();
    let d = space.level(j);
    let scale = (k.min(d) - 1) as f64;
    let conds: Vec<Vec<f64>> = (0..k).map(|x| view.univariate_conditional(j, x)).collect();
    let mut chi2 = 0.0;
    for c in 0..d {
        let marginal: f64 = (0..k).map(|x| view.pi_x[x] * conds[x][c]).sum();
        for x in 0..k {
            // π(c, x) - π(c) π_X(x) = π_X(x) Σ_x' π_X(x') [π(c | x) - π(c | x')],
            // which is exactly zero whenever the group conditionals coincide.
            let spread: f64 = (0..k)
                .map(|xp| view.pi_x[xp] * (conds[x][c] - conds[xp][c]))
                .sum();
            let numerator = view.pi_x[x] * spread;
            chi2 += chi_term(numerator, marginal * view.pi_x[x], "marginal Cramér's V")?;
        }
    }
    Ok((chi2 / scale).sqrt().min(1.0))
}

fn pairwise_v_raw(view: &ModelView<'_>, j: usize, jp: usize, x: usize) -> Result<f64> {
    let space = view.space;
    let (dj, djp) = (space.level(j), space.level(jp));
    let scale = (dj.min(djp) - 1) as f64;
    let mj = view.univariate_conditional(j, x);
    let mjp = view.univariate_conditional(jp, x);
    let joint = view.bivariate_conditional(j, jp, x);
    let mut chi2 = 0.0;
    for a in 0..dj {
        for b in 0..djp {
            let expected = mj[a] * mjp[b];
            chi2 += chi_term(joint[a * djp + b] - expected, expected, "pairwise Cramér's V")?;
        }
    }
    Ok((chi2 / scale).sqrt().min(1.0))
}

fn check_marginal_target(view: &ModelView<'_>, j: usize) -> Result<()> {
    if j >= view.space.p() {
        return Err(Error::Argument(format!("variable {j} out of range")));
    }
    if view.space.groups() < 2 {
        return Err(Error::Argument(
            "marginal Cramér's V needs at least two groups".into(),
        ));
    }
    Ok(())
}

fn check_pair_target(view: &ModelView<'_>, j: usize, jp: usize, x: usize) -> Result<()> {
    let p = view.space.p();
    if j >= p || jp >= p {
        return Err(Error::Argument(format!("variable pair ({j}, {jp}) out of range")));
    }
    if j == jp {
        return Err(Error::Argument("pairwise Cramér's V needs distinct variables".into()));
    }
    if x >= view.space.groups() {
        return Err(Error::Argument(format!("group {x} out of range")));
    }
    Ok(())
}

/// Model-based Cramér's V between `Y_j` and the group variable,
///
/// ```text
/// ρ_j = [ Σ_x Σ_c (π(c, x) - π(c) π_X(x))² / (π(c) π_X(x)) / (min(k, d_j) - 1) ]^{1/2}
/// ```
///
/// with `π(c | x) = Σ_h ν_hx π_hj(c)`. Clamped to `[0, 1]` against rounding.
pub fn cramers_v_marginal(view: &ModelView<'_>, j: usize) -> Result<f64> {
    check_marginal_target(view, j)?;
    marginal_v_raw(&CanonicalDraw::new(view).view(), j)
}

/// Model-based Cramér's V between `Y_j` and `Y_j'` within group `x`, from
/// the bivariate conditional `Σ_h ν_hx π_hj(a) π_hj'(b)`.
pub fn cramers_v_pairwise(view: &ModelView<'_>, j: usize, jp: usize, x: usize) -> Result<f64> {
    check_pair_target(view, j, jp, x)?;
    pairwise_v_raw(&CanonicalDraw::new(view).view(), j, jp, x)
}

/// What a [`CramersVSummary`] refers to. Indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VTarget {
    Marginal { variable: usize },
    Pairwise { variable: usize, other: usize, group: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CramersVSummary {
    pub target: VTarget,
    pub mean: f64,
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
    /// `pr(ρ > threshold | data)`.
    pub exceedance: f64,
    pub threshold: f64,
}

/// Marginal and pairwise summaries. Pairs are listed for `j < j'`, by
/// group, then `j`, then `j'`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalTests {
    pub marginals: Vec<CramersVSummary>,
    pub pairwise: Vec<CramersVSummary>,
}

impl LocalTests {
    pub fn marginal(&self, j: usize) -> Option<&CramersVSummary> {
        self.marginals
            .iter()
            .find(|s| s.target == VTarget::Marginal { variable: j })
    }

    pub fn pair(&self, j: usize, jp: usize, x: usize) -> Option<&CramersVSummary> {
        let (a, b) = (j.min(jp), j.max(jp));
        self.pairwise.iter().find(|s| {
            s.target
                == VTarget::Pairwise {
                    variable: a,
                    other: b,
                    group: x,
                }
        })
    }
}

/// Type-7 (linear interpolation) quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

fn summarize_series(target: VTarget, values: &[f64], threshold: f64) -> CramersVSummary {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    CramersVSummary {
        target,
        mean: values.iter().sum::<f64>() / n,
        q05: quantile_sorted(&sorted, 0.05),
        q50: quantile_sorted(&sorted, 0.5),
        q95: quantile_sorted(&sorted, 0.95),
        exceedance: values.iter().filter(|&&v| v > threshold).count() as f64 / n,
        threshold,
    }
}

fn pair_targets(p: usize, k: usize) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::with_capacity(k * p * (p.saturating_sub(1)) / 2);
    for x in 0..k {
        for j in 0..p {
            for jp in j + 1..p {
                out.push((j, jp, x));
            }
        }
    }
    out
}

/// `ρ_j` for every variable (empty when `k < 2`) and `ρ_jj'|x` for every
/// pair and group, for one draw.
fn draw_functionals(view: &ModelView<'_>, pairs: &[(usize, usize, usize)]) -> Result<Vec<f64>> {
    let canon = CanonicalDraw::new(view);
    let v = canon.view();
    let p = v.space.p();
    let mut out = Vec::with_capacity(p + pairs.len());
    if v.space.groups() >= 2 {
        for j in 0..p {
            out.push(marginal_v_raw(&v, j)?);
        }
    }
    for &(j, jp, x) in pairs {
        out.push(pairwise_v_raw(&v, j, jp, x)?);
    }
    Ok(out)
}

/// Per-draw Cramér's V values, row per draw, computed in parallel and
/// returned in draw order.
fn functional_matrix(chain: &ChainOutput, pairs: &[(usize, usize, usize)]) -> Result<Vec<Vec<f64>>> {
    (0..chain.n_draws())
        .into_par_iter()
        .map(|r| draw_functionals(&chain.draw(r), pairs))
        .collect()
}

/// Posterior summaries of every `ρ_j` and every `ρ_jj'|x`.
pub fn summarize_local_tests(chain: &ChainOutput, threshold: f64) -> Result<LocalTests> {
    if chain.is_empty() {
        return Err(Error::Argument("chain has no retained draws".into()));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Argument(format!(
            "exceedance threshold {threshold} outside (0, 1)"
        )));
    }
    let space = &chain.space;
    let p = space.p();
    let pairs = pair_targets(p, space.groups());
    let rows = functional_matrix(chain, &pairs)?;
    let n_marg = if space.groups() >= 2 { p } else { 0 };
    let column = |c: usize| rows.iter().map(|r| r[c]).collect::<Vec<f64>>();

    let marginals = (0..n_marg)
        .map(|j| summarize_series(VTarget::Marginal { variable: j }, &column(j), threshold))
        .collect();
    let pairwise = pairs
        .iter()
        .enumerate()
        .map(|(i, &(j, jp, x))| {
            summarize_series(
                VTarget::Pairwise {
                    variable: j,
                    other: jp,
                    group: x,
                },
                &column(n_marg + i),
                threshold,
            )
        })
        .collect();
    Ok(LocalTests {
        marginals,
        pairwise,
    })
}

/// Posterior of `π(Y_j = c | X = a) - π(Y_j = c | X = b)` for every level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalDifferenceSummary {
    pub variable: usize,
    pub groups: (usize, usize),
    pub level: f64,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Equal-tail credible intervals at `level` for the difference between the
/// conditional marginals of `Y_j` in groups `a` and `b`.
pub fn marginal_differences(
    chain: &ChainOutput,
    j: usize,
    groups: (usize, usize),
    level: f64,
) -> Result<MarginalDifferenceSummary> {
    let space = &chain.space;
    if space.groups() < 2 {
        return Err(Error::Argument("marginal differences need at least two groups".into()));
    }
    if chain.is_empty() {
        return Err(Error::Argument("chain has no retained draws".into()));
    }
    let (a, b) = groups;
    if a >= space.groups() || b >= space.groups() || a == b {
        return Err(Error::Argument(format!("invalid group pair ({a}, {b})")));
    }
    if j >= space.p() {
        return Err(Error::Argument(format!("variable {j} out of range")));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Argument(format!("credible level {level} outside (0, 1)")));
    }
    let d = space.level(j);
    let diffs: Vec<Vec<f64>> = (0..chain.n_draws())
        .into_par_iter()
        .map(|r| {
            let canon = CanonicalDraw::new(&chain.draw(r));
            let v = canon.view();
            let ua = v.univariate_conditional(j, a);
            let ub = v.univariate_conditional(j, b);
            ua.iter().zip(&ub).map(|(x, y)| x - y).collect()
        })
        .collect();
    let tail = (1.0 - level) / 2.0;
    let n = diffs.len() as f64;
    let mut mean = Vec::with_capacity(d);
    let mut lower = Vec::with_capacity(d);
    let mut upper = Vec::with_capacity(d);
    for c in 0..d {
        let mut col: Vec<f64> = diffs.iter().map(|r| r[c]).collect();
        mean.push(col.iter().sum::<f64>() / n);
        col.sort_by(f64::total_cmp);
        lower.push(quantile_sorted(&col, tail));
        upper.push(quantile_sorted(&col, 1.0 - tail));
    }
    Ok(MarginalDifferenceSummary {
        variable: j,
        groups,
        level,
        mean,
        lower,
        upper,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub retained: usize,
    pub chains: usize,
    pub scalars: Vec<ScalarDiagnostic>,
    pub max_occupied: usize,
    pub truncation: usize,
    /// Share of draws in which every component was occupied.
    pub saturated_fraction: f64,
}

impl Diagnostics {
    /// Saturation warning rule: every component occupied in at least 1% of draws.
    pub fn saturated(&self) -> bool {
        self.saturated_fraction >= 0.01
    }

    /// Scalars whose split R-hat exceeds [`RHAT_WARNING`].
    pub fn unmixed(&self) -> Vec<&ScalarDiagnostic> {
        self.scalars
            .iter()
            .filter(|s| s.rhat.is_some_and(|r| r > RHAT_WARNING))
            .collect()
    }
}

/// Split R-hat above this means the chains have not mixed.
pub const RHAT_WARNING: f64 = 1.1;

/// ESS and split R-hat of the testing indicator and of every `ρ_j`, plus
/// occupancy.
pub fn compute_diagnostics(chain: &ChainOutput) -> Result<Diagnostics> {
    if chain.is_empty() {
        return Err(Error::Argument("chain has no retained draws".into()));
    }
    let t: Vec<f64> = chain.t.iter().map(|&b| f64::from(u8::from(b))).collect();
    let chains = chain.chains;
    let mut scalars = vec![diagnose("T", &t, chains)];
    if chain.space.groups() >= 2 {
        let rows = functional_matrix(chain, &[])?;
        for j in 0..chain.space.p() {
            let series: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            scalars.push(diagnose(format!("rho_{}", j + 1), &series, chains));
        }
    }
    let hbar = chain.space.components();
    let saturated = chain.occupancy.iter().filter(|&&o| o >= hbar).count();
    Ok(Diagnostics {
        retained: chain.n_draws(),
        chains,
        scalars,
        max_occupied: chain.occupancy.iter().copied().max().unwrap_or(0),
        truncation: hbar,
        saturated_fraction: saturated as f64 / chain.n_draws() as f64,
    })
}
