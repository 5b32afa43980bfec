//! The summary report document and its flat CSV exports.
//!
//! Variables, groups and categories are 1-based in everything written by
//! this module, matching the input data codes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::chain_io::write_json;
use crate::error::{Error, Result};
use crate::gibbs::ChainOutput;
use crate::posterior::{
    compute_diagnostics, global_test, marginal_differences, summarize_local_tests,
    CramersVSummary, Diagnostics, GlobalTestResult, LocalTests,
};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOptions {
    pub threshold: f64,
    pub credible_level: f64,
    /// Every group pair for the marginal differences, instead of only (1, 2).
    pub all_group_pairs: bool,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            threshold: crate::posterior::DEFAULT_EXCEEDANCE_THRESHOLD,
            credible_level: crate::posterior::DEFAULT_CREDIBLE_LEVEL,
            all_group_pairs: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VSummary {
    pub mean: f64,
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
    pub exceedance: f64,
}

impl From<&CramersVSummary> for VSummary {
    fn from(s: &CramersVSummary) -> Self {
        Self {
            mean: s.mean,
            q05: s.q05,
            q50: s.q50,
            q95: s.q95,
            exceedance: s.exceedance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupDifference {
    pub group_a: usize,
    pub group_b: usize,
    /// `π(Y_j = c | a) - π(Y_j = c | b)` per category.
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableReport {
    pub variable: usize,
    pub name: String,
    pub levels: usize,
    /// Absent when there is a single group.
    pub cramers_v: Option<VSummary>,
    pub differences: Vec<GroupDifference>,
}

/// Square `p × p` matrix of pairwise exceedance probabilities; the
/// diagonal is `null`.
pub type PairMatrix = Vec<Vec<Option<f64>>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPairwise {
    pub group: usize,
    /// Symmetric exceedance matrix.
    pub exceedance: PairMatrix,
    /// Symmetric posterior-mean matrix.
    pub mean: PairMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub schema_version: u32,
    pub n_draws: usize,
    pub threshold: f64,
    pub credible_level: f64,
    pub global: GlobalTestResult,
    pub variables: Vec<VariableReport>,
    pub pairwise: Vec<GroupPairwise>,
    /// Two-group layout: group 1 exceedances below the diagonal, group 2
    /// above. Absent unless there are exactly two groups.
    pub pairwise_two_group_layout: Option<PairMatrix>,
    pub diagnostics: Diagnostics,
}

fn pair_matrix(p: usize, x: usize, local: &LocalTests, f: impl Fn(&CramersVSummary) -> f64) -> PairMatrix {
    (0..p)
        .map(|j| {
            (0..p)
                .map(|jp| (j != jp).then(|| f(local.pair(j, jp, x).expect("all pairs summarized"))))
                .collect()
        })
        .collect()
}

/// Builds the full report. `names` may be empty, in which case variables
/// are named `y1, y2, ...`.
pub fn build_report(chain: &ChainOutput, names: &[String], options: &ReportOptions) -> Result<SummaryReport> {
    let space = &chain.space;
    let (p, k) = (space.p(), space.groups());
    if !names.is_empty() && names.len() != p {
        return Err(Error::Argument(format!("{} names for {p} variables", names.len())));
    }
    let global = global_test(chain)?;
    let local = summarize_local_tests(chain, options.threshold)?;
    let diagnostics = compute_diagnostics(chain)?;

    let group_pairs: Vec<(usize, usize)> = if k < 2 {
        Vec::new()
    } else if options.all_group_pairs {
        (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).collect()
    } else {
        vec![(0, 1)]
    };

    let mut variables = Vec::with_capacity(p);
    for j in 0..p {
        let mut differences = Vec::with_capacity(group_pairs.len());
        for &(a, b) in &group_pairs {
            let d = marginal_differences(chain, j, (a, b), options.credible_level)?;
            differences.push(GroupDifference {
                group_a: a + 1,
                group_b: b + 1,
                mean: d.mean,
                lower: d.lower,
                upper: d.upper,
            });
        }
        variables.push(VariableReport {
            variable: j + 1,
            name: names.get(j).cloned().unwrap_or_else(|| format!("y{}", j + 1)),
            levels: space.level(j),
            cramers_v: local.marginal(j).map(VSummary::from),
            differences,
        });
    }

    let pairwise: Vec<GroupPairwise> = (0..k)
        .map(|x| GroupPairwise {
            group: x + 1,
            exceedance: pair_matrix(p, x, &local, |s| s.exceedance),
            mean: pair_matrix(p, x, &local, |s| s.mean),
        })
        .collect();

    let pairwise_two_group_layout = (k == 2).then(|| {
        (0..p)
            .map(|j| {
                (0..p)
                    .map(|jp| match j.cmp(&jp) {
                        std::cmp::Ordering::Greater => pairwise[0].exceedance[j][jp],
                        std::cmp::Ordering::Less => pairwise[1].exceedance[j][jp],
                        std::cmp::Ordering::Equal => None,
                    })
                    .collect()
            })
            .collect()
    });

    Ok(SummaryReport {
        schema_version: REPORT_SCHEMA_VERSION,
        n_draws: chain.n_draws(),
        threshold: options.threshold,
        credible_level: options.credible_level,
        global,
        variables,
        pairwise,
        pairwise_two_group_layout,
        diagnostics,
    })
}

fn csv_field(name: &str) -> String {
    if name.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", name.replace('"', "\"\""))
    } else {
        name.to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// `variable,name,mean,q05,q50,q95,exceedance`, one row per variable.
pub fn marginal_v_csv(report: &SummaryReport) -> String {
    let mut s = String::from("variable,name,mean,q05,q50,q95,exceedance\n");
    for v in &report.variables {
        if let Some(c) = &v.cramers_v {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                v.variable,
                csv_field(&v.name),
                c.mean,
                c.q05,
                c.q50,
                c.q95,
                c.exceedance
            );
        }
    }
    s
}

/// `variable,name,group_a,group_b,category,mean,lower,upper`.
pub fn differences_csv(report: &SummaryReport) -> String {
    let mut s = String::from("variable,name,group_a,group_b,category,mean,lower,upper\n");
    for v in &report.variables {
        for d in &v.differences {
            for c in 0..d.mean.len() {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{}",
                    v.variable,
                    csv_field(&v.name),
                    d.group_a,
                    d.group_b,
                    c + 1,
                    d.mean[c],
                    d.lower[c],
                    d.upper[c]
                );
            }
        }
    }
    s
}

/// Square matrix with a header row and a leading name column; empty
/// diagonal cells.
pub fn matrix_csv(report: &SummaryReport, m: &PairMatrix) -> String {
    let names: Vec<String> = report.variables.iter().map(|v| csv_field(&v.name)).collect();
    let mut s = format!(",{}\n", names.join(","));
    for (j, row) in m.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|&v| opt(v)).collect();
        let _ = writeln!(s, "{},{}", names[j], cells.join(","));
    }
    s
}

/// Writes `summary.json` and, when `csv` is set, the flat exports. Returns
/// the written paths in a fixed order.
pub fn write_report(report: &SummaryReport, dir: impl AsRef<Path>, csv: bool) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let json = dir.join("summary.json");
    write_json(&json, report)?;
    written.push(json);
    if csv {
        let mut files = vec![
            ("marginal_v.csv".to_string(), marginal_v_csv(report)),
            ("differences.csv".to_string(), differences_csv(report)),
        ];
        for g in &report.pairwise {
            files.push((format!("pairwise_exceedance_group{}.csv", g.group), matrix_csv(report, &g.exceedance)));
            files.push((format!("pairwise_mean_group{}.csv", g.group), matrix_csv(report, &g.mean)));
        }
        for (name, text) in files {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
    }
    Ok(written)
}
