//! Datasets: ancestral simulation from a [`JointModel`], the three reference
//! simulation scenarios, and CSV ingestion.
//!
//! Category and group codes are 1-based in CSV files and 0-based in memory.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    CategorySpace, ComponentProfiles, GroupMixingWeights, JointModel, ProbabilityVector,
};
use crate::prior::sample_dirichlet;
use crate::rng::RngSpec;

pub const DEFAULT_GROUP_COLUMN: &str = "group";

/// `n` units of `(y, x)` on a validated space.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    space: CategorySpace,
    y: Vec<usize>,
    x: Vec<usize>,
    names: Vec<String>,
    group_name: String,
}

impl Dataset {
    /// `rows` are `(y, x)` pairs with 0-based codes.
    pub fn new(space: CategorySpace, rows: Vec<(Vec<usize>, usize)>) -> Result<Self> {
        let mut ds = Self::empty(space);
        for (i, (y, x)) in rows.into_iter().enumerate() {
            ds.space.check_cell(&y, x).map_err(|e| match e {
                Error::Dimension(m) => Error::Dimension(format!("unit {i}: {m}")),
                other => other,
            })?;
            ds.y.extend(y);
            ds.x.push(x);
        }
        Ok(ds)
    }

    pub fn empty(space: CategorySpace) -> Self {
        let names = (1..=space.p()).map(|j| format!("y{j}")).collect();
        Self {
            space,
            y: Vec::new(),
            x: Vec::new(),
            names,
            group_name: DEFAULT_GROUP_COLUMN.to_string(),
        }
    }

    pub fn with_names(mut self, names: Vec<String>, group_name: String) -> Result<Self> {
        if names.len() != self.space.p() {
            return Err(Error::Dimension(format!(
                "{} column names for {} variables",
                names.len(),
                self.space.p()
            )));
        }
        self.names = names;
        self.group_name = group_name;
        Ok(self)
    }

    pub fn space(&self) -> &CategorySpace {
        &self.space
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn y(&self, i: usize) -> &[usize] {
        let p = self.space.p();
        &self.y[i * p..(i + 1) * p]
    }

    pub fn x(&self, i: usize) -> usize {
        self.x[i]
    }

    pub fn groups_column(&self) -> &[usize] {
        &self.x
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn group_name(&self) -> &str {
        &self.group_name
    }

    /// Units per group.
    pub fn group_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.space.groups()];
        for &x in &self.x {
            counts[x] += 1;
        }
        counts
    }

    /// Re-targets the dataset at a different truncation level.
    pub fn with_components(mut self, components: usize) -> Result<Self> {
        self.space = self.space.with_components(components)?;
        Ok(self)
    }

    fn push_unchecked(&mut self, y: &[usize], x: usize) {
        self.y.extend_from_slice(y);
        self.x.push(x);
    }
}

/// Draws an index from a probability vector by inversion.
pub(crate) fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding can leave u == total; fall back to the last positive entry.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// Ancestral sampling with fixed group sizes: for each unit of group `x`,
/// `z ~ ν_x`, then `y_j ~ π_{z j}` independently. Rows are emitted group by group.
pub fn generate_from_model<R: Rng + ?Sized>(
    model: &JointModel,
    n_per_group: &[usize],
    rng: &mut R,
) -> Result<Dataset> {
    let space = model.space();
    if n_per_group.len() != space.groups() {
        return Err(Error::Dimension(format!(
            "{} group sizes given for {} groups",
            n_per_group.len(),
            space.groups()
        )));
    }
    let view = model.view();
    let mut ds = Dataset::empty(space.clone());
    let mut y = vec![0; space.p()];
    for (x, &count) in n_per_group.iter().enumerate() {
        for _ in 0..count {
            let h = sample_index(view.nu(x), rng);
            for (j, yj) in y.iter_mut().enumerate() {
                *yj = sample_index(view.kernel(h, j), rng);
            }
            ds.push_unchecked(&y, x);
        }
    }
    Ok(ds)
}

/// Variables whose kernels differ across components in the reference
/// scenarios, 0-based (1-based: 5, 10, 15, 17).
pub const SCENARIO_ACTIVE_VARIABLES: [usize; 4] = [4, 9, 14, 16];
pub const SCENARIO_VARIABLES: usize = 17;
pub const SCENARIO_LEVELS: usize = 4;
pub const SCENARIO_COMPONENTS: usize = 5;
pub const SCENARIO_DEFAULT_GROUP_SIZE: usize = 200;

/// Which reference scenario to build, with its group size and seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub scenario: u8,
    pub n_per_group: usize,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn new(scenario: u8, seed: u64) -> Self {
        Self {
            scenario,
            n_per_group: SCENARIO_DEFAULT_GROUP_SIZE,
            seed,
        }
    }
}

/// Builds one of the three reference generating models and samples
/// `n_per_group` units in each of the two groups.
///
/// * scenario 1: equal group weights, so `Y` and `X` are independent.
/// * scenario 2: group weights and first-component kernels differ, so the
///   marginals of the active variables change with the group.
/// * scenario 3: marginals are equal across groups; only the pairwise
///   dependence among the active variables changes.
///
/// Inactive variables get a single `Dir(0.25, ..., 0.25)` draw shared by
/// all five components.
pub fn build_scenario(spec: &ScenarioSpec) -> Result<(JointModel, Dataset)> {
    let mut rng = RngSpec::new(spec.seed, crate::rng::SIMULATION_STREAM).rng();
    let model = scenario_model(spec.scenario, &mut rng)?;
    let data = generate_from_model(&model, &[spec.n_per_group; 2], &mut rng)?;
    Ok((model, data))
}

/// The generating model of a reference scenario, drawing the inactive
/// variables' kernels from `rng`.
pub fn scenario_model<R: Rng + ?Sized>(scenario: u8, rng: &mut R) -> Result<JointModel> {
    if !(1..=3).contains(&scenario) {
        return Err(Error::Argument(format!(
            "unknown scenario {scenario}, expected 1, 2 or 3"
        )));
    }
    let space = CategorySpace::new(
        vec![SCENARIO_LEVELS; SCENARIO_VARIABLES],
        2,
        SCENARIO_COMPONENTS,
    )?;
    let pv = |v: [f64; 4]| ProbabilityVector::new(v.to_vec());
    let first_active = match scenario {
        2 => [0.75, 0.25, 0.0, 0.0],
        _ => [0.25, 0.25, 0.25, 0.25],
    };
    let peaked = [
        [0.85, 0.05, 0.05, 0.05],
        [0.05, 0.85, 0.05, 0.05],
        [0.05, 0.05, 0.85, 0.05],
        [0.05, 0.05, 0.05, 0.85],
    ];

    let mut kernels: Vec<Vec<ProbabilityVector>> = (0..SCENARIO_COMPONENTS)
        .map(|_| Vec::with_capacity(SCENARIO_VARIABLES))
        .collect();
    for j in 0..SCENARIO_VARIABLES {
        if SCENARIO_ACTIVE_VARIABLES.contains(&j) {
            kernels[0].push(pv(first_active)?);
            for (h, row) in peaked.iter().enumerate() {
                kernels[h + 1].push(pv(*row)?);
            }
        } else {
            let shared = sample_dirichlet(&[0.25; SCENARIO_LEVELS], rng)?;
            for row in kernels.iter_mut() {
                row.push(shared.clone());
            }
        }
    }
    let profiles = ComponentProfiles::new(&space, kernels)?;

    let spread = ProbabilityVector::new(vec![0.0, 0.25, 0.25, 0.25, 0.25])?;
    let weights = if scenario == 1 {
        GroupMixingWeights::shared(spread, 2)
    } else {
        let first = ProbabilityVector::one_hot(SCENARIO_COMPONENTS, 0)?;
        GroupMixingWeights::group_specific(first.clone(), vec![first, spread])?
    };
    JointModel::new(space, ProbabilityVector::new(vec![0.5, 0.5])?, profiles, weights)
}

/// How to interpret a CSV file on ingestion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub group_column: String,
    /// Declared level counts in variable column order. When absent the
    /// counts are inferred from the observed maxima (at least 2).
    pub levels: Option<Vec<usize>>,
    /// Declared number of groups; inferred from the observed maximum when absent.
    pub groups: Option<usize>,
}

impl Default for DatasetSchema {
    fn default() -> Self {
        Self {
            group_column: DEFAULT_GROUP_COLUMN.to_string(),
            levels: None,
            groups: None,
        }
    }
}

/// Reads a CSV with a header row, 1-based integer codes and one group
/// column. Errors name the 1-based data row (the first record after the
/// header is row 1) and the column.
pub fn read_dataset(path: impl AsRef<Path>, schema: &DatasetSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(BufReader::new(file));

    let headers = reader
        .headers()
        .map_err(|e| Error::format(path, e.to_string()))?
        .clone();
    let group_idx = headers
        .iter()
        .position(|h| h == schema.group_column)
        .ok_or_else(|| {
            Error::format(path, format!("no group column '{}' in header", schema.group_column))
        })?;
    let var_cols: Vec<usize> = (0..headers.len()).filter(|&c| c != group_idx).collect();
    if var_cols.is_empty() {
        return Err(Error::format(path, "no variable columns in header"));
    }
    if let Some(levels) = &schema.levels {
        if levels.len() != var_cols.len() {
            return Err(Error::format(
                path,
                format!(
                    "schema declares {} variables, header has {}",
                    levels.len(),
                    var_cols.len()
                ),
            ));
        }
    }
    let names: Vec<String> = var_cols.iter().map(|&c| headers[c].to_string()).collect();

    let mut y = Vec::new();
    let mut x = Vec::new();
    let mut max_seen = vec![0usize; var_cols.len()];
    let mut max_group = 0usize;
    for (r, record) in reader.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| Error::Ingest {
            row,
            column: String::new(),
            message: e.to_string(),
        })?;
        for (v, &c) in var_cols.iter().enumerate() {
            let code = parse_code(&record[c], row, &names[v])?;
            if let Some(levels) = &schema.levels {
                if code > levels[v] {
                    return Err(Error::Ingest {
                        row,
                        column: names[v].clone(),
                        message: format!("code {code} exceeds declared {} levels", levels[v]),
                    });
                }
            }
            max_seen[v] = max_seen[v].max(code);
            y.push(code - 1);
        }
        let g = parse_code(&record[group_idx], row, &schema.group_column)?;
        if let Some(k) = schema.groups {
            if g > k {
                return Err(Error::Ingest {
                    row,
                    column: schema.group_column.clone(),
                    message: format!("group {g} exceeds declared {k} groups"),
                });
            }
        }
        max_group = max_group.max(g);
        x.push(g - 1);
    }

    let levels = schema
        .levels
        .clone()
        .unwrap_or_else(|| max_seen.iter().map(|&m| m.max(2)).collect());
    let groups = schema.groups.unwrap_or(max_group.max(1));
    let space = CategorySpace::new(levels, groups, 1)?;
    Ok(Dataset {
        space,
        y,
        x,
        names,
        group_name: schema.group_column.clone(),
    })
}

fn parse_code(cell: &str, row: usize, column: &str) -> Result<usize> {
    let err = |message: String| Error::Ingest {
        row,
        column: column.to_string(),
        message,
    };
    let trimmed = cell.trim();
    if trimmed.is_empty() {
        return Err(err("missing value".into()));
    }
    let code: usize = trimmed
        .parse()
        .map_err(|_| err(format!("cannot parse '{trimmed}' as a category code")))?;
    if code == 0 {
        return Err(err("codes are 1-based, found 0".into()));
    }
    Ok(code)
}

/// Writes the dataset as CSV: header of variable names then the group
/// column, 1-based codes, `\n` line endings.
pub fn write_dataset(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_dataset_to(data, &mut out).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_dataset_to<W: Write>(data: &Dataset, out: &mut W) -> std::io::Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let mut header: Vec<&str> = data.names.iter().map(String::as_str).collect();
    header.push(&data.group_name);
    writer.write_record(&header)?;
    let mut record = Vec::with_capacity(data.space.p() + 1);
    for i in 0..data.n() {
        record.clear();
        record.extend(data.y(i).iter().map(|c| (c + 1).to_string()));
        record.push((data.x(i) + 1).to_string());
        writer.write_record(&record)?;
    }
    writer.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::OutcomeIter;

    fn scenario(id: u8) -> JointModel {
        scenario_model(id, &mut RngSpec::new(42, 0).rng()).unwrap()
    }

    #[test]
    fn degenerate_model_generates_identical_rows() {
        let space = CategorySpace::new(vec![3, 2], 2, 1).unwrap();
        let profiles = ComponentProfiles::new(
            &space,
            vec![vec![
                ProbabilityVector::one_hot(3, 2).unwrap(),
                ProbabilityVector::one_hot(2, 0).unwrap(),
            ]],
        )
        .unwrap();
        let weights = GroupMixingWeights::shared(ProbabilityVector::one_hot(1, 0).unwrap(), 2);
        let model =
            JointModel::new(space, ProbabilityVector::uniform(2).unwrap(), profiles, weights)
                .unwrap();
        let ds = generate_from_model(&model, &[5, 3], &mut RngSpec::new(1, 0).rng()).unwrap();
        assert_eq!(ds.n(), 8);
        assert!((0..8).all(|i| ds.y(i) == [2, 0]));
        assert_eq!(ds.group_counts(), vec![5, 3]);
    }

    #[test]
    fn zero_group_sizes_give_empty_dataset() {
        let ds = generate_from_model(&scenario(1), &[0, 0], &mut RngSpec::new(1, 0).rng()).unwrap();
        assert!(ds.is_empty());
    }

    #[test]
    fn unknown_scenario_is_rejected() {
        assert!(matches!(
            build_scenario(&ScenarioSpec::new(4, 1)),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn scenario_sizes() {
        let (model, data) = build_scenario(&ScenarioSpec::new(2, 7)).unwrap();
        assert_eq!(data.n(), 400);
        assert_eq!(data.group_counts(), vec![200, 200]);
        assert_eq!(model.space().p(), 17);
        assert_eq!(model.space().components(), 5);
    }

    #[test]
    fn scenario_one_groups_identical() {
        let m = scenario(1);
        assert!(!m.weights().alternative());
        for j in 0..17 {
            let a = m.marginal_pmf_subset(&[j], 0).unwrap();
            let b = m.marginal_pmf_subset(&[j], 1).unwrap();
            assert_eq!(a.values, b.values);
        }
    }

    #[test]
    fn scenario_two_first_group_marginal() {
        let m = scenario(2);
        for &j in &SCENARIO_ACTIVE_VARIABLES {
            let t = m.marginal_pmf_subset(&[j], 0).unwrap();
            assert_eq!(t.values, vec![0.75, 0.25, 0.0, 0.0]);
        }
    }

    #[test]
    fn scenario_three_marginals_equal() {
        let m = scenario(3);
        for &j in &SCENARIO_ACTIVE_VARIABLES {
            for x in 0..2 {
                let t = m.marginal_pmf_subset(&[j], x).unwrap();
                for v in &t.values {
                    assert!((v - 0.25).abs() < 1e-15, "{:?}", t.values);
                }
            }
        }
    }

    #[test]
    fn scenario_two_conditional_at_ones() {
        // Group 0 uses only component 0, so π(y = 1 | x = 1) is
        // ∏_{j ∉ J} π_0j(1) · 0.75^4.
        let m = scenario(2);
        let y = vec![0; 17];
        let inactive: f64 = (0..17)
            .filter(|j| !SCENARIO_ACTIVE_VARIABLES.contains(j))
            .map(|j| m.profiles().kernel(m.space(), 0, j)[0])
            .product();
        let want = inactive * 0.75f64.powi(4);
        let got = m.eval_conditional_pmf(&y, 0).unwrap();
        assert!(((got - want) / want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn csv_round_trip_and_format() {
        let space = CategorySpace::new(vec![2, 3], 2, 1).unwrap();
        let ds = Dataset::new(space, vec![(vec![0, 2], 0), (vec![1, 1], 1)]).unwrap();
        let mut buf = Vec::new();
        write_dataset_to(&ds, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "y1,y2,group\n1,3,1\n2,2,2\n");

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        write_dataset(&ds, &path).unwrap();
        let schema = DatasetSchema {
            levels: Some(vec![2, 3]),
            groups: Some(2),
            ..Default::default()
        };
        let back = read_dataset(&path, &schema).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn empty_dataset_writes_header_only() {
        let space = CategorySpace::new(vec![2, 2], 1, 1).unwrap();
        let mut buf = Vec::new();
        write_dataset_to(&Dataset::empty(space), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "y1,y2,group\n");
    }

    #[test]
    fn ingestion_errors_name_row_and_column() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "a,b,group\n1,2,1\n3,5,2\n").unwrap();
        let schema = DatasetSchema {
            levels: Some(vec![4, 4]),
            ..Default::default()
        };
        match read_dataset(&path, &schema) {
            Err(Error::Ingest { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "b");
            }
            other => panic!("unexpected {other:?}"),
        }

        std::fs::write(&path, "a,b,group\n1,,1\n").unwrap();
        assert!(matches!(
            read_dataset(&path, &DatasetSchema::default()),
            Err(Error::Ingest { row: 1, .. })
        ));
        std::fs::write(&path, "a,b,group\n1,x,1\n").unwrap();
        assert!(matches!(
            read_dataset(&path, &DatasetSchema::default()),
            Err(Error::Ingest { .. })
        ));
        std::fs::write(&path, "a,b,group\n1,2,\n").unwrap();
        assert!(matches!(
            read_dataset(&path, &DatasetSchema::default()),
            Err(Error::Ingest { .. })
        ));
    }

    #[test]
    fn levels_inferred_from_maxima() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "a,b,group\n1,4,1\n1,2,2\n").unwrap();
        let ds = read_dataset(&path, &DatasetSchema::default()).unwrap();
        assert_eq!(ds.n(), 2);
        assert_eq!(ds.space().levels(), &[2, 4]);
        assert_eq!(ds.space().groups(), 2);
    }

    #[test]
    fn empirical_frequencies_match_model() {
        // Multinomial sampling-error oracle: each cell count within 3 sd
        // (plus a small slack for the 32 simultaneous comparisons).
        let space = CategorySpace::new(vec![2, 2, 2], 2, 3).unwrap();
        let config = crate::prior::default_config(&space);
        let model =
            crate::prior::sample_prior_model(&config, &space, &mut RngSpec::new(5, 0).rng())
                .unwrap();
        let n = 50_000;
        let ds = generate_from_model(&model, &[n, n], &mut RngSpec::new(6, 0).rng()).unwrap();
        let mut counts = [0usize; 16];
        for i in 0..ds.n() {
            let idx = ds.x(i) * 8 + crate::model::mixed_radix_index(&[2, 2, 2], ds.y(i));
            counts[idx] += 1;
        }
        for x in 0..2 {
            for y in OutcomeIter::new(&[2, 2, 2]) {
                let p = model.eval_conditional_pmf(&y, x).unwrap();
                let idx = x * 8 + crate::model::mixed_radix_index(&[2, 2, 2], &y);
                let freq = counts[idx] as f64 / n as f64;
                let sd = (p * (1.0 - p) / n as f64).sqrt();
                assert!((freq - p).abs() <= 3.5 * sd + 1e-12, "cell {idx}: {freq} vs {p}");
            }
        }
    }
}
