//! Log-scale special functions used by the sampler.

/// Natural log of the Gamma function for `x > 0`.
///
/// Backed by the musl-derived `lgamma` port, which is accurate to a few ulp
/// across the positive axis.
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0, "ln_gamma domain is x > 0, got {x}");
    libm::lgamma(x)
}

/// Log of the Dirichlet-multinomial probability of one specific ordered
/// sequence of draws with the given category counts under a symmetric
/// `Dir(a, ..., a)` prior:
///
/// `ln Γ(H a) - ln Γ(H a + n) + Σ_h [ln Γ(a + n_h) - ln Γ(a)]`.
pub fn ln_dirichlet_multinomial_seq(counts: &[usize], a: f64) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let h = counts.len() as f64;
    let lg_a = ln_gamma(a);
    let mut acc = ln_gamma(h * a) - ln_gamma(h * a + total as f64);
    for &c in counts {
        if c > 0 {
            acc += ln_gamma(a + c as f64) - lg_a;
        }
    }
    acc
}

/// Same as [`ln_dirichlet_multinomial_seq`] with an arbitrary concentration vector.
pub fn ln_dirichlet_multinomial_seq_general(counts: &[usize], conc: &[f64]) -> f64 {
    debug_assert_eq!(counts.len(), conc.len());
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let sum_conc: f64 = conc.iter().sum();
    let mut acc = ln_gamma(sum_conc) - ln_gamma(sum_conc + total as f64);
    for (&c, &a) in counts.iter().zip(conc) {
        if c > 0 {
            acc += ln_gamma(a + c as f64) - ln_gamma(a);
        }
    }
    acc
}

/// `ln Σ exp(v)` with max subtraction. Returns `-inf` when every entry is `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}
