//! Effective sample size by Geyer's initial positive sequence, and the
//! split potential scale reduction factor across chains.

use serde::{Deserialize, Serialize};

/// Convergence diagnostics for one monitored scalar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarDiagnostic {
    pub name: String,
    pub ess: f64,
    /// Split R-hat over all chains; absent for constant or very short
    /// series, infinite when each half-chain is constant at different values.
    #[serde(with = "rhat_serde")]
    pub rhat: Option<f64>,
    /// Series was constant; `ess` is then reported as the draw count.
    pub zero_variance: bool,
}

/// JSON has no infinity, so an infinite R-hat is written as `"inf"`.
mod rhat_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) if x.is_infinite() => Some(Repr::Text("inf".into())).serialize(s),
            Some(x) => Some(Repr::Number(*x)).serialize(s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        match Option::<Repr>::deserialize(d)? {
            None => Ok(None),
            Some(Repr::Number(x)) => Ok(Some(x)),
            Some(Repr::Text(t)) if t == "inf" => Ok(Some(f64::INFINITY)),
            Some(Repr::Text(t)) => Err(serde::de::Error::custom(format!("invalid R-hat `{t}`"))),
        }
    }
}

/// Autocovariance at `lag` with the biased `1/N` normalization.
fn autocovariance(centered: &[f64], lag: usize) -> f64 {
    let n = centered.len();
    centered[..n - lag]
        .iter()
        .zip(&centered[lag..])
        .map(|(a, b)| a * b)
        .sum::<f64>()
        / n as f64
}

/// `N / τ` with `τ = -1 + 2 Σ_m (ρ_2m + ρ_2m+1)`, summing pair sums until
/// the first nonpositive one. Capped at `N`. Returns `(ess, zero_variance)`.
pub fn effective_sample_size(series: &[f64]) -> (f64, bool) {
    let n = series.len();
    if n == 0 {
        return (0.0, false);
    }
    if series.iter().all(|&v| v == series[0]) {
        return (n as f64, true);
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let gamma0 = autocovariance(&centered, 0);
    if n < 4 {
        return (n as f64, false);
    }
    let mut tau = -1.0;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = (autocovariance(&centered, lag) + autocovariance(&centered, lag + 1)) / gamma0;
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        lag += 2;
    }
    let ess = if tau > 0.0 { n as f64 / tau } else { n as f64 };
    (ess.min(n as f64), false)
}

fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Split R-hat of `series`, read as `chains` equal-length chains laid end to
/// end. Each chain is cut into two halves (an odd middle draw is dropped)
/// and the halves are compared as separate chains, so drift within one
/// chain is caught as well as disagreement between chains.
///
/// `None` when a half has fewer than two draws or every half is constant at
/// the same value.
pub fn split_rhat(series: &[f64], chains: usize) -> Option<f64> {
    if chains == 0 || !series.len().is_multiple_of(chains) {
        return None;
    }
    let n = series.len() / chains;
    let half = n / 2;
    if half < 2 {
        return None;
    }
    let stats: Vec<(f64, f64)> = series
        .chunks(n)
        .flat_map(|c| [&c[..half], &c[n - half..]])
        .map(mean_and_variance)
        .collect();
    let (means, vars): (Vec<f64>, Vec<f64>) = stats.into_iter().unzip();
    let w = vars.iter().sum::<f64>() / vars.len() as f64;
    let (_, b_over_n) = mean_and_variance(&means);
    if w == 0.0 {
        return (b_over_n > 0.0).then_some(f64::INFINITY);
    }
    let l = half as f64;
    let pooled = (l - 1.0) / l * w + b_over_n;
    Some((pooled / w).sqrt())
}

/// Diagnostics for one scalar recorded over `chains` equal-length chains.
pub fn diagnose(name: impl Into<String>, series: &[f64], chains: usize) -> ScalarDiagnostic {
    let (ess, zero_variance) = effective_sample_size(series);
    ScalarDiagnostic {
        name: name.into(),
        ess,
        rhat: split_rhat(series, chains),
        zero_variance,
    }
}
