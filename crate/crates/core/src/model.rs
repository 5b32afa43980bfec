//! The factorized joint PMF of `(Y, X)`.
//!
//! The conditional law of the categorical vector `Y` given group `x` is a
//! group-dependent mixture of product-multinomial kernels:
//!
//! ```text
//! π(y | x) = Σ_h ν_hx ∏_j π_hj(y_j),    π(y, x) = π(y | x) π_X(x)
//! ```
//!
//! and every marginal over a variable subset `J` keeps the same form with the
//! product restricted to `J`. All indices in this module are 0-based.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::log_sum_exp;

/// Largest `k · ∏ d_j` the brute-force tensor routines will enumerate.
pub const ORACLE_CELL_LIMIT: u128 = 10_000_000;

/// Products over more variables than this are accumulated in log scale.
pub const DEFAULT_LOG_SCALE_THRESHOLD: usize = 30;

const SIMPLEX_TOL: f64 = 1e-12;

/// Dimensions of the problem: level counts `d_j`, group count `k` and the
/// mixture truncation level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SpaceRepr", into = "SpaceRepr")]
pub struct CategorySpace {
    levels: Vec<usize>,
    groups: usize,
    components: usize,
    offsets: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct SpaceRepr {
    levels: Vec<usize>,
    groups: usize,
    components: usize,
}

impl TryFrom<SpaceRepr> for CategorySpace {
    type Error = Error;
    fn try_from(r: SpaceRepr) -> Result<Self> {
        CategorySpace::new(r.levels, r.groups, r.components)
    }
}

impl From<CategorySpace> for SpaceRepr {
    fn from(s: CategorySpace) -> Self {
        SpaceRepr {
            levels: s.levels,
            groups: s.groups,
            components: s.components,
        }
    }
}

impl CategorySpace {
    pub fn new(levels: Vec<usize>, groups: usize, components: usize) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Dimension("at least one variable is required".into()));
        }
        if let Some((j, &d)) = levels.iter().enumerate().find(|(_, &d)| d < 2) {
            return Err(Error::Dimension(format!(
                "variable {j} has {d} levels, at least 2 are required"
            )));
        }
        if groups == 0 {
            return Err(Error::Dimension("at least one group is required".into()));
        }
        if components == 0 {
            return Err(Error::Dimension("truncation level must be positive".into()));
        }
        let offsets = offsets_of(&levels);
        Ok(Self {
            levels,
            groups,
            components,
            offsets,
        })
    }

    /// Same variables and groups with a different truncation level.
    pub fn with_components(&self, components: usize) -> Result<Self> {
        Self::new(self.levels.clone(), self.groups, components)
    }

    pub fn p(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn level(&self, j: usize) -> usize {
        self.levels[j]
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    pub fn components(&self) -> usize {
        self.components
    }

    /// Start of variable `j` within a flattened per-component profile row.
    pub fn offset(&self, j: usize) -> usize {
        self.offsets[j]
    }

    /// `Σ_j d_j`, the length of one flattened component profile row.
    pub fn profile_width(&self) -> usize {
        self.levels.iter().sum()
    }

    /// `|Y| = ∏_j d_j`, saturating at `u128::MAX`.
    pub fn outcome_cells(&self) -> u128 {
        self.levels
            .iter()
            .try_fold(1u128, |acc, &d| acc.checked_mul(d as u128))
            .unwrap_or(u128::MAX)
    }

    /// `|Y × X| = k ∏_j d_j`, saturating at `u128::MAX`.
    pub fn joint_cells(&self) -> u128 {
        self.outcome_cells().saturating_mul(self.groups as u128)
    }

    /// Checks `y` and `x` against the space.
    pub fn check_cell(&self, y: &[usize], x: usize) -> Result<()> {
        if y.len() != self.p() {
            return Err(Error::Dimension(format!(
                "category vector has length {}, expected {}",
                y.len(),
                self.p()
            )));
        }
        for (j, (&c, &d)) in y.iter().zip(&self.levels).enumerate() {
            if c >= d {
                return Err(Error::Dimension(format!(
                    "category {c} out of range for variable {j} with {d} levels"
                )));
            }
        }
        if x >= self.groups {
            return Err(Error::Dimension(format!(
                "group {x} out of range for {} groups",
                self.groups
            )));
        }
        Ok(())
    }

    fn check_subset(&self, subset: &[usize]) -> Result<()> {
        if subset.is_empty() {
            return Err(Error::Argument("variable subset must be nonempty".into()));
        }
        let mut seen = vec![false; self.p()];
        for &j in subset {
            if j >= self.p() {
                return Err(Error::Argument(format!(
                    "variable index {j} out of range for {} variables",
                    self.p()
                )));
            }
            if std::mem::replace(&mut seen[j], true) {
                return Err(Error::Argument(format!("duplicate variable index {j}")));
            }
        }
        Ok(())
    }
}

fn offsets_of(levels: &[usize]) -> Vec<usize> {
    levels
        .iter()
        .scan(0, |acc, &d| {
            let start = *acc;
            *acc += d;
            Some(start)
        })
        .collect()
}

/// A point on the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Argument("probability vector must be nonempty".into()));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Argument(format!("probability {v} outside [0, 1]")));
        }
        let total: f64 = values.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::Argument(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self(values))
    }

    /// Normalizes nonnegative weights onto the simplex.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Argument("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::Argument("weights must have positive total".into()));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(len: usize) -> Result<Self> {
        Self::from_weights(vec![1.0; len])
    }

    /// Degenerate vector with all mass on `index`.
    pub fn one_hot(len: usize, index: usize) -> Result<Self> {
        if index >= len {
            return Err(Error::Argument(format!("index {index} out of range {len}")));
        }
        let mut v = vec![0.0; len];
        v[index] = 1.0;
        Ok(Self(v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Skips validation. The sampler uses this for Dirichlet draws that are
    /// normalized by construction.
    pub(crate) fn from_normalized_unchecked(values: Vec<f64>) -> Self {
        debug_assert!((values.iter().sum::<f64>() - 1.0).abs() <= SIMPLEX_TOL);
        Self(values)
    }
}

impl std::ops::Index<usize> for ProbabilityVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Per-component categorical kernels `π_hj`, stored as one flattened row of
/// length `Σ_j d_j` per component.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentProfiles {
    values: Vec<f64>,
    width: usize,
    components: usize,
}

impl ComponentProfiles {
    /// `kernels[h][j]` must have length `d_j` for every component of `space`.
    pub fn new(space: &CategorySpace, kernels: Vec<Vec<ProbabilityVector>>) -> Result<Self> {
        if kernels.len() != space.components() {
            return Err(Error::Dimension(format!(
                "{} component kernels given, truncation level is {}",
                kernels.len(),
                space.components()
            )));
        }
        let mut values = Vec::with_capacity(space.components() * space.profile_width());
        for (h, row) in kernels.into_iter().enumerate() {
            if row.len() != space.p() {
                return Err(Error::Dimension(format!(
                    "component {h} has {} kernels, expected {}",
                    row.len(),
                    space.p()
                )));
            }
            for (j, kernel) in row.into_iter().enumerate() {
                if kernel.len() != space.level(j) {
                    return Err(Error::Dimension(format!(
                        "kernel ({h}, {j}) has length {}, expected {}",
                        kernel.len(),
                        space.level(j)
                    )));
                }
                values.extend(kernel.into_inner());
            }
        }
        Ok(Self {
            values,
            width: space.profile_width(),
            components: space.components(),
        })
    }

    pub(crate) fn from_flat_unchecked(space: &CategorySpace, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), space.components() * space.profile_width());
        Self {
            values,
            width: space.profile_width(),
            components: space.components(),
        }
    }

    pub fn components(&self) -> usize {
        self.components
    }

    /// Flattened `[h][offset_j + c]` storage.
    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, h: usize) -> &[f64] {
        &self.values[h * self.width..(h + 1) * self.width]
    }

    pub fn kernel<'a>(&'a self, space: &CategorySpace, h: usize, j: usize) -> &'a [f64] {
        let start = h * self.width + space.offset(j);
        &self.values[start..start + space.level(j)]
    }
}

/// Group mixing weights `ν_x`, the shared vector `υ`, and the testing
/// indicator `T`. With `T = 0` every `ν_x` is a bitwise copy of `υ`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupMixingWeights {
    nu: Vec<f64>,
    upsilon: Vec<f64>,
    components: usize,
    alternative: bool,
}

impl GroupMixingWeights {
    /// The null configuration: `ν_x = υ` for all `groups`.
    pub fn shared(upsilon: ProbabilityVector, groups: usize) -> Self {
        let components = upsilon.len();
        let upsilon = upsilon.into_inner();
        let nu = upsilon.repeat(groups);
        Self {
            nu,
            upsilon,
            components,
            alternative: false,
        }
    }

    /// The alternative configuration with one weight vector per group.
    pub fn group_specific(upsilon: ProbabilityVector, nu: Vec<ProbabilityVector>) -> Result<Self> {
        let components = upsilon.len();
        if nu.is_empty() {
            return Err(Error::Dimension("at least one group weight vector required".into()));
        }
        if let Some(v) = nu.iter().find(|v| v.len() != components) {
            return Err(Error::Dimension(format!(
                "group weight vector has length {}, expected {components}",
                v.len()
            )));
        }
        Ok(Self {
            nu: nu.into_iter().flat_map(ProbabilityVector::into_inner).collect(),
            upsilon: upsilon.into_inner(),
            components,
            alternative: true,
        })
    }

    pub fn groups(&self) -> usize {
        self.nu.len() / self.components
    }

    pub fn components(&self) -> usize {
        self.components
    }

    /// The testing indicator `T`.
    pub fn alternative(&self) -> bool {
        self.alternative
    }

    pub fn nu(&self, x: usize) -> &[f64] {
        &self.nu[x * self.components..(x + 1) * self.components]
    }

    /// Row-major `k × H` weights.
    pub fn nu_flat(&self) -> &[f64] {
        &self.nu
    }

    pub fn upsilon(&self) -> &[f64] {
        &self.upsilon
    }
}

/// A full parameter configuration of the factorized joint PMF.
#[derive(Debug, Clone, PartialEq)]
pub struct JointModel {
    space: CategorySpace,
    pi_x: ProbabilityVector,
    profiles: ComponentProfiles,
    weights: GroupMixingWeights,
    log_scale_threshold: usize,
}

impl JointModel {
    pub fn new(
        space: CategorySpace,
        pi_x: ProbabilityVector,
        profiles: ComponentProfiles,
        weights: GroupMixingWeights,
    ) -> Result<Self> {
        if pi_x.len() != space.groups() {
            return Err(Error::Dimension(format!(
                "group marginal has length {}, expected {}",
                pi_x.len(),
                space.groups()
            )));
        }
        if profiles.components() != space.components() || profiles.width != space.profile_width() {
            return Err(Error::Dimension("component profiles do not match the space".into()));
        }
        if weights.components() != space.components() || weights.groups() != space.groups() {
            return Err(Error::Dimension(format!(
                "mixing weights are {}x{}, expected {}x{}",
                weights.groups(),
                weights.components(),
                space.groups(),
                space.components()
            )));
        }
        Ok(Self {
            space,
            pi_x,
            profiles,
            weights,
            log_scale_threshold: DEFAULT_LOG_SCALE_THRESHOLD,
        })
    }

    /// Products over more than `threshold` variables go through log scale.
    pub fn with_log_scale_threshold(mut self, threshold: usize) -> Self {
        self.log_scale_threshold = threshold;
        self
    }

    /// Builds an exact representation of an arbitrary dense PMF on `Y × X`
    /// using one degenerate component per outcome `y`.
    ///
    /// `table` is indexed as in [`JointTensor`]. The resulting truncation level
    /// is `|Y|`, so this is only practical for small spaces.
    pub fn from_joint_table(levels: Vec<usize>, groups: usize, table: &[f64]) -> Result<Self> {
        let probe = CategorySpace::new(levels.clone(), groups, 1)?;
        let outcomes = checked_oracle_cells(&probe)? / groups;
        if table.len() != outcomes * groups {
            return Err(Error::Dimension(format!(
                "table has {} cells, expected {}",
                table.len(),
                outcomes * groups
            )));
        }
        let pmf = ProbabilityVector::new(table.to_vec())?;
        let space = CategorySpace::new(levels, groups, outcomes)?;

        let pi_x: Vec<f64> = (0..groups)
            .map(|x| pmf.as_slice()[x * outcomes..(x + 1) * outcomes].iter().sum())
            .collect();
        let pi_x = ProbabilityVector::from_weights(pi_x)?;

        let mut kernels = Vec::with_capacity(outcomes);
        for y in OutcomeIter::new(space.levels()) {
            let row = y
                .iter()
                .zip(space.levels())
                .map(|(&c, &d)| ProbabilityVector::one_hot(d, c))
                .collect::<Result<Vec<_>>>()?;
            kernels.push(row);
        }
        let profiles = ComponentProfiles::new(&space, kernels)?;

        let nu = (0..groups)
            .map(|x| {
                if pi_x[x] > 0.0 {
                    ProbabilityVector::from_weights(
                        pmf.as_slice()[x * outcomes..(x + 1) * outcomes].to_vec(),
                    )
                } else {
                    ProbabilityVector::uniform(outcomes)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let upsilon = nu[0].clone();
        let weights = GroupMixingWeights::group_specific(upsilon, nu)?;
        Self::new(space, pi_x, profiles, weights)
    }

    pub fn space(&self) -> &CategorySpace {
        &self.space
    }

    pub fn pi_x(&self) -> &ProbabilityVector {
        &self.pi_x
    }

    pub fn profiles(&self) -> &ComponentProfiles {
        &self.profiles
    }

    pub fn weights(&self) -> &GroupMixingWeights {
        &self.weights
    }

    pub(crate) fn set_pi_x(&mut self, pi_x: ProbabilityVector) {
        debug_assert_eq!(pi_x.len(), self.space.groups());
        self.pi_x = pi_x;
    }

    pub(crate) fn set_profiles(&mut self, profiles: ComponentProfiles) {
        debug_assert_eq!(profiles.as_flat().len(), self.profiles.as_flat().len());
        self.profiles = profiles;
    }

    pub(crate) fn set_weights(&mut self, weights: GroupMixingWeights) {
        debug_assert_eq!(weights.nu_flat().len(), self.weights.nu_flat().len());
        self.weights = weights;
    }

    pub fn view(&self) -> ModelView<'_> {
        ModelView {
            space: &self.space,
            pi_x: self.pi_x.as_slice(),
            profiles: self.profiles.as_flat(),
            nu: self.weights.nu_flat(),
            log_scale_threshold: self.log_scale_threshold,
        }
    }

    /// `π(y | x) = Σ_h ν_hx ∏_j π_hj(y_j)`.
    pub fn eval_conditional_pmf(&self, y: &[usize], x: usize) -> Result<f64> {
        self.view().conditional_pmf(y, x)
    }

    /// `π(y, x) = π(y | x) π_X(x)`.
    pub fn eval_joint_pmf(&self, y: &[usize], x: usize) -> Result<f64> {
        self.view().joint_pmf(y, x)
    }

    pub fn marginal_pmf_subset(&self, subset: &[usize], x: usize) -> Result<MarginalTable> {
        self.view().marginal_pmf_subset(subset, x)
    }

    pub fn marginal_pmf_unconditional(&self, subset: &[usize]) -> Result<MarginalTable> {
        self.view().marginal_pmf_unconditional(subset)
    }

    /// Dense enumeration of every `(y, x)` cell. Test oracle; refuses spaces
    /// above [`ORACLE_CELL_LIMIT`].
    pub fn full_joint_tensor(&self) -> Result<JointTensor> {
        let cells = checked_oracle_cells(&self.space)?;
        let mut values = Vec::with_capacity(cells);
        for x in 0..self.space.groups() {
            for y in OutcomeIter::new(self.space.levels()) {
                values.push(self.eval_joint_pmf(&y, x)?);
            }
        }
        Ok(JointTensor {
            levels: self.space.levels().to_vec(),
            groups: self.space.groups(),
            values,
        })
    }
}

fn checked_oracle_cells(space: &CategorySpace) -> Result<usize> {
    let cells = space.joint_cells();
    if cells > ORACLE_CELL_LIMIT {
        return Err(Error::Capacity {
            cells,
            limit: ORACLE_CELL_LIMIT,
        });
    }
    Ok(cells as usize)
}

/// Borrowed parameters of one model configuration. Both [`JointModel`] and
/// retained chain draws evaluate through this view.
#[derive(Debug, Clone, Copy)]
pub struct ModelView<'a> {
    pub space: &'a CategorySpace,
    /// Length `k`.
    pub pi_x: &'a [f64],
    /// Flattened `H × Σ d_j`.
    pub profiles: &'a [f64],
    /// Row-major `k × H`.
    pub nu: &'a [f64],
    pub log_scale_threshold: usize,
}

impl<'a> ModelView<'a> {
    pub fn new(space: &'a CategorySpace, pi_x: &'a [f64], profiles: &'a [f64], nu: &'a [f64]) -> Self {
        debug_assert_eq!(pi_x.len(), space.groups());
        debug_assert_eq!(profiles.len(), space.components() * space.profile_width());
        debug_assert_eq!(nu.len(), space.groups() * space.components());
        Self {
            space,
            pi_x,
            profiles,
            nu,
            log_scale_threshold: DEFAULT_LOG_SCALE_THRESHOLD,
        }
    }

    #[inline]
    pub fn nu(&self, x: usize) -> &'a [f64] {
        let h = self.space.components();
        &self.nu[x * h..(x + 1) * h]
    }

    #[inline]
    pub fn prob(&self, h: usize, j: usize, c: usize) -> f64 {
        self.profiles[h * self.space.profile_width() + self.space.offset(j) + c]
    }

    #[inline]
    pub fn kernel(&self, h: usize, j: usize) -> &'a [f64] {
        let start = h * self.space.profile_width() + self.space.offset(j);
        &self.profiles[start..start + self.space.level(j)]
    }

    pub fn conditional_pmf(&self, y: &[usize], x: usize) -> Result<f64> {
        self.space.check_cell(y, x)?;
        let vars: Vec<usize> = (0..self.space.p()).collect();
        Ok(self.mixture_at(&vars, y, x))
    }

    pub fn joint_pmf(&self, y: &[usize], x: usize) -> Result<f64> {
        Ok(self.conditional_pmf(y, x)? * self.pi_x[x])
    }

    /// `Σ_h ν_hx ∏_{j ∈ vars} π_hj(cats_j)`; `cats[i]` is the level of `vars[i]`.
    fn mixture_at(&self, vars: &[usize], cats: &[usize], x: usize) -> f64 {
        let nu = self.nu(x);
        if vars.len() > self.log_scale_threshold {
            let logs: Vec<f64> = nu
                .iter()
                .enumerate()
                .map(|(h, &w)| {
                    vars.iter()
                        .zip(cats)
                        .map(|(&j, &c)| self.prob(h, j, c).ln())
                        .sum::<f64>()
                        + w.ln()
                })
                .collect();
            log_sum_exp(&logs).exp()
        } else {
            nu.iter()
                .enumerate()
                .filter(|(_, &w)| w > 0.0)
                .map(|(h, &w)| {
                    w * vars
                        .iter()
                        .zip(cats)
                        .map(|(&j, &c)| self.prob(h, j, c))
                        .product::<f64>()
                })
                .sum()
        }
    }

    /// Conditional law of `Y_J` given `X = x`.
    pub fn marginal_pmf_subset(&self, subset: &[usize], x: usize) -> Result<MarginalTable> {
        self.space.check_subset(subset)?;
        if x >= self.space.groups() {
            return Err(Error::Dimension(format!("group {x} out of range")));
        }
        let shape: Vec<usize> = subset.iter().map(|&j| self.space.level(j)).collect();
        let values = OutcomeIter::new(&shape)
            .map(|cats| self.mixture_at(subset, &cats, x))
            .collect();
        Ok(MarginalTable {
            variables: subset.to_vec(),
            shape,
            values,
        })
    }

    /// Unconditional law of `Y_J`, mixing the group conditionals with `π_X`.
    pub fn marginal_pmf_unconditional(&self, subset: &[usize]) -> Result<MarginalTable> {
        let mut acc = self.marginal_pmf_subset(subset, 0)?;
        let w0 = self.pi_x[0];
        acc.values.iter_mut().for_each(|v| *v *= w0);
        for x in 1..self.space.groups() {
            let cond = self.marginal_pmf_subset(subset, x)?;
            for (a, c) in acc.values.iter_mut().zip(&cond.values) {
                *a += self.pi_x[x] * c;
            }
        }
        Ok(acc)
    }

    /// `π(Y_j = c | X = x)` for every level `c`.
    pub fn univariate_conditional(&self, j: usize, x: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.space.level(j)];
        for (h, &w) in self.nu(x).iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (o, &p) in out.iter_mut().zip(self.kernel(h, j)) {
                *o += w * p;
            }
        }
        out
    }

    /// `π(Y_j = a, Y_j' = b | X = x)` as a row-major `d_j × d_j'` table.
    pub fn bivariate_conditional(&self, j: usize, jp: usize, x: usize) -> Vec<f64> {
        let (dj, djp) = (self.space.level(j), self.space.level(jp));
        let mut out = vec![0.0; dj * djp];
        for (h, &w) in self.nu(x).iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let kj = self.kernel(h, j);
            let kjp = self.kernel(h, jp);
            for (a, &pa) in kj.iter().enumerate() {
                let wa = w * pa;
                for (b, &pb) in kjp.iter().enumerate() {
                    out[a * djp + b] += wa * pb;
                }
            }
        }
        out
    }
}

/// Dense PMF over the cells of `Y_J`, row-major with the last variable fastest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalTable {
    pub variables: Vec<usize>,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl MarginalTable {
    pub fn get(&self, cats: &[usize]) -> f64 {
        self.values[mixed_radix_index(&self.shape, cats)]
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Dense `Y × X` tensor, indexed `x · |Y| + index(y)` with `y_p` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTensor {
    pub levels: Vec<usize>,
    pub groups: usize,
    pub values: Vec<f64>,
}

impl JointTensor {
    pub fn outcomes(&self) -> usize {
        self.values.len() / self.groups
    }

    pub fn get(&self, y: &[usize], x: usize) -> f64 {
        self.values[x * self.outcomes() + mixed_radix_index(&self.levels, y)]
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

pub(crate) fn mixed_radix_index(shape: &[usize], cats: &[usize]) -> usize {
    cats.iter().zip(shape).fold(0, |acc, (&c, &d)| acc * d + c)
}

/// Odometer over all cells of a mixed-radix shape, last coordinate fastest.
#[derive(Debug, Clone)]
pub struct OutcomeIter {
    shape: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl OutcomeIter {
    pub fn new(shape: &[usize]) -> Self {
        let next = if shape.iter().all(|&d| d > 0) {
            Some(vec![0; shape.len()])
        } else {
            None
        };
        Self {
            shape: shape.to_vec(),
            next,
        }
    }
}

impl Iterator for OutcomeIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut i = succ.len();
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            succ[i] += 1;
            if succ[i] < self.shape[i] {
                self.next = Some(succ);
                break;
            }
            succ[i] = 0;
        }
        Some(current)
    }
}
