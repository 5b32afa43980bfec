//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Run with `cargo test -p catdiff-core --test acceptance`.

#![allow(clippy::needless_range_loop)]

use std::time::Instant;

use catdiff_core::data::{SCENARIO_ACTIVE_VARIABLES, SCENARIO_VARIABLES};
use catdiff_core::gibbs::{log_bf_h0_h1, SufficientStats};
use catdiff_core::posterior::cramers_v_marginal;
use catdiff_core::{
    build_scenario, default_config, global_test, run_chain, sample_prior_model,
    summarize_local_tests, CategorySpace, ChainOutput, Dataset, JointModel, LocalTests,
    PriorConfig, RngSpec, Schedule, ScenarioSpec,
};
use rand::Rng;

const SEEDS: [u64; 3] = [11, 22, 33];
const H_BAR: usize = 10;
const THRESHOLD: f64 = 0.1;
const DISCOVERY: f64 = 0.95;
const BORDERLINE: f64 = 0.90;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

struct ScenarioFit {
    scenario: u8,
    seed: u64,
    chain: ChainOutput,
    pr_h1: f64,
    local: LocalTests,
}

fn fit_scenario(scenario: u8, seed: u64) -> ScenarioFit {
    let (_, data) = build_scenario(&ScenarioSpec::new(scenario, seed)).expect("scenario");
    let space = data.space().with_components(H_BAR).expect("space");
    let config = default_config(&space);
    let chain = run_chain(&data, &config, &Schedule::default(), RngSpec::new(seed, 1)).expect("fit");
    let pr_h1 = global_test(&chain).expect("global").pr_h1_given_data;
    let local = summarize_local_tests(&chain, THRESHOLD).expect("local");
    ScenarioFit {
        scenario,
        seed,
        chain,
        pr_h1,
        local,
    }
}

fn in_j(j: usize) -> bool {
    SCENARIO_ACTIVE_VARIABLES.contains(&j)
}

/// Checks a discovery rule over a set of exceedance probabilities. Targets
/// flagged `expected` must exceed 0.95. The rest must stay at or below 0.90,
/// except at most one borderline value in (0.90, 0.95).
fn discovery_rule(values: &[(String, bool, f64)]) -> (bool, Vec<String>) {
    let mut problems = Vec::new();
    let mut borderline = Vec::new();
    for (label, expected, e) in values {
        if *expected {
            if *e <= DISCOVERY {
                problems.push(format!("{label} missed ({e:.3})"));
            }
        } else if *e >= DISCOVERY {
            problems.push(format!("{label} false discovery ({e:.3})"));
        } else if *e > BORDERLINE {
            borderline.push(format!("{label} borderline ({e:.3})"));
        }
    }
    let ok = problems.is_empty() && borderline.len() <= 1;
    if borderline.len() > 1 {
        problems.extend(borderline);
    } else {
        problems.extend(borderline.into_iter().map(|b| format!("{b}, allowed")));
    }
    (ok, problems)
}

fn criterion_1(fits: &[ScenarioFit]) -> Verdict {
    let vals: Vec<String> = fits
        .iter()
        .filter(|f| f.scenario == 1)
        .map(|f| format!("seed {}: {:.4}", f.seed, f.pr_h1))
        .collect();
    let pass = fits.iter().filter(|f| f.scenario == 1).all(|f| f.pr_h1 < 0.05);
    verdict(pass, format!("pr(H1|data) < 0.05; {}", vals.join(", ")))
}

fn criterion_2(fits: &[ScenarioFit]) -> Verdict {
    let sel = || fits.iter().filter(|f| f.scenario != 1);
    let vals: Vec<String> = sel()
        .map(|f| format!("s{} seed {}: {:.4}", f.scenario, f.seed, f.pr_h1))
        .collect();
    let pass = sel().all(|f| f.pr_h1 > 0.95);
    verdict(pass, format!("pr(H1|data) > 0.95; {}", vals.join(", ")))
}

fn criterion_3(fits: &[ScenarioFit]) -> Verdict {
    let mut pass = true;
    let mut notes = Vec::new();
    for f in fits.iter().filter(|f| f.scenario == 2) {
        let values: Vec<(String, bool, f64)> = (0..SCENARIO_VARIABLES)
            .map(|j| {
                let e = f.local.marginal(j).expect("marginal").exceedance;
                (format!("rho_{}", j + 1), in_j(j), e)
            })
            .collect();
        let (ok, problems) = discovery_rule(&values);
        pass &= ok;
        let j_min = values
            .iter()
            .filter(|v| v.1)
            .map(|v| v.2)
            .fold(f64::INFINITY, f64::min);
        let other_max = values
            .iter()
            .filter(|v| !v.1)
            .map(|v| v.2)
            .fold(0.0, f64::max);
        notes.push(format!(
            "seed {}: min over J {:.3}, max elsewhere {:.3}{}",
            f.seed,
            j_min,
            other_max,
            if problems.is_empty() {
                String::new()
            } else {
                format!(" [{}]", problems.join("; "))
            }
        ));
    }
    verdict(pass, notes.join(", "))
}

fn pair_values(f: &ScenarioFit, group: usize, expect: impl Fn(usize, usize) -> bool) -> Vec<(String, bool, f64)> {
    let mut out = Vec::new();
    for j in 0..SCENARIO_VARIABLES {
        for jp in j + 1..SCENARIO_VARIABLES {
            let e = f.local.pair(j, jp, group).expect("pair").exceedance;
            out.push((format!("rho_{},{}|{}", j + 1, jp + 1, group + 1), expect(j, jp), e));
        }
    }
    out
}

fn criterion_4(fits: &[ScenarioFit]) -> Verdict {
    let mut pass = true;
    let mut notes = Vec::new();
    for f in fits {
        let (ok, problems) = if f.scenario == 1 {
            // Only the J-pairs are constrained, in both groups.
            let mut problems = Vec::new();
            for g in 0..2 {
                for (label, expected, e) in pair_values(f, g, |j, jp| in_j(j) && in_j(jp)) {
                    if expected && e <= DISCOVERY {
                        problems.push(format!("{label} missed ({e:.3})"));
                    }
                }
            }
            (problems.is_empty(), problems)
        } else {
            let (ok1, mut p1) = discovery_rule(&pair_values(f, 0, |_, _| false));
            let (ok2, p2) = discovery_rule(&pair_values(f, 1, |j, jp| in_j(j) && in_j(jp)));
            p1.extend(p2);
            (ok1 && ok2, p1)
        };
        pass &= ok;
        if !problems.is_empty() {
            notes.push(format!("s{} seed {}: {}", f.scenario, f.seed, problems.join("; ")));
        }
    }
    if notes.is_empty() {
        notes.push("all J-pair rules hold for 9 fits".into());
    }
    verdict(pass, notes.join(", "))
}

/// `Σ_{i<n} ln(a + i)` with Neumaier compensation, i.e. `ln Γ(a+n) - ln Γ(a)`.
fn ln_rising(a: f64, n: usize) -> (f64, f64) {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for i in 0..n {
        let v = (a + i as f64).ln();
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    (sum, comp)
}

/// Dirichlet-multinomial log probability of an ordered sequence, written
/// with rising factorials only.
fn oracle_ln_dm(counts: &[usize], a: f64) -> (f64, f64) {
    let n: usize = counts.iter().sum();
    let (mut s, mut c) = (0.0, 0.0);
    for &k in counts {
        let (ks, kc) = ln_rising(a, k);
        s += ks;
        c += kc;
    }
    let (ds, dc) = ln_rising(counts.len() as f64 * a, n);
    (s - ds, c - dc)
}

fn criterion_5() -> Verdict {
    let mut rng = RngSpec::new(505, 0).rng();
    let mut worst = 0.0f64;
    let mut worst_case = String::new();
    for case in 0..1000 {
        let k = rng.random_range(1..=5);
        let hbar = rng.random_range(1..=20);
        let n = rng.random_range(0..=10_000usize);
        // Random allocation of n units to (x, h) cells, with a random
        // sparsity pattern so empty components occur.
        let active: Vec<bool> = (0..k * hbar).map(|_| rng.random_bool(0.7)).collect();
        let cells: Vec<usize> = (0..k * hbar).filter(|&c| active[c]).collect();
        let mut n_hx = vec![0usize; k * hbar];
        if !cells.is_empty() {
            for _ in 0..n {
                n_hx[cells[rng.random_range(0..cells.len())]] += 1;
            }
        }
        let n_h: Vec<usize> = (0..hbar).map(|h| (0..k).map(|x| n_hx[x * hbar + h]).sum()).collect();
        let n_x: Vec<usize> = (0..k).map(|x| n_hx[x * hbar..(x + 1) * hbar].iter().sum()).collect();
        let a = if rng.random_bool(0.5) {
            1.0 / hbar as f64
        } else {
            rng.random_range(0.05..2.0)
        };
        let space = CategorySpace::new(vec![2], k, hbar).expect("space");
        let config = PriorConfig {
            nu_concentration: a,
            ..default_config(&space)
        };
        let stats = SufficientStats {
            groups: k,
            components: hbar,
            n_x,
            n_h: n_h.clone(),
            n_hx: n_hx.clone(),
            n_jhc: Vec::new(),
        };
        let got = log_bf_h0_h1(&stats, &config);
        let (ps, pc) = oracle_ln_dm(&n_h, a);
        let (mut ss, mut sc) = (0.0, 0.0);
        for x in 0..k {
            let (s, c) = oracle_ln_dm(&n_hx[x * hbar..(x + 1) * hbar], a);
            ss += s;
            sc += c;
        }
        let want = (ps - ss) + (pc - sc);
        let err = if want == 0.0 {
            got.abs()
        } else {
            ((got - want) / want).abs()
        };
        if err > worst {
            worst = err;
            worst_case = format!("case {case}: k={k} H={hbar} n={n} a={a:.3} got {got:.12e} want {want:.12e}");
        }
    }
    verdict(
        worst <= 1e-10,
        format!("max relative error {worst:.2e} over 1000 configs (tol 1e-10){}", if worst > 1e-10 { format!("; {worst_case}") } else { String::new() }),
    )
}

/// Brute force `π(y | x)` from the parameters, independent of the library's
/// evaluation routines.
fn brute_conditional(model: &JointModel, y: &[usize], x: usize) -> f64 {
    let space = model.space();
    let nu = model.weights().nu(x);
    let mut acc = 0.0;
    for h in 0..space.components() {
        let mut prod = nu[h];
        for (j, &c) in y.iter().enumerate() {
            prod *= model.profiles().kernel(space, h, j)[c];
        }
        acc += prod;
    }
    acc
}

fn criterion_6() -> Verdict {
    let mut rng = RngSpec::new(606, 0).rng();
    let mut worst = 0.0f64;
    let mut cells_checked = 0usize;
    for _ in 0..100 {
        // Random dimensions with at most 1e5 joint cells.
        let (levels, k) = loop {
            let p = rng.random_range(1..=6);
            let levels: Vec<usize> = (0..p).map(|_| rng.random_range(2..=6)).collect();
            let k = rng.random_range(1..=4);
            let cells: usize = levels.iter().product::<usize>() * k;
            if cells <= 100_000 {
                break (levels, k);
            }
        };
        let hbar = rng.random_range(1..=6);
        let space = CategorySpace::new(levels.clone(), k, hbar).expect("space");
        let mut config = default_config(&space);
        config.pr_h1 = rng.random_range(0.0..=1.0);
        let model = sample_prior_model(&config, &space, &mut rng).expect("model");
        let p = levels.len();

        // Full conditional tensor by brute force.
        let outcomes: Vec<Vec<usize>> = catdiff_core::model::OutcomeIter::new(&levels).collect();
        let full: Vec<Vec<f64>> = (0..k)
            .map(|x| outcomes.iter().map(|y| brute_conditional(&model, y, x)).collect())
            .collect();

        // A random nonempty subset, in random order.
        let mut subset: Vec<usize> = (0..p).filter(|_| rng.random_bool(0.5)).collect();
        if subset.is_empty() {
            subset.push(rng.random_range(0..p));
        }
        for i in (1..subset.len()).rev() {
            subset.swap(i, rng.random_range(0..=i));
        }
        let shape: Vec<usize> = subset.iter().map(|&j| levels[j]).collect();
        for x in 0..k {
            let table = model.marginal_pmf_subset(&subset, x).expect("subset");
            let mut brute = vec![0.0; shape.iter().product()];
            for (y, v) in outcomes.iter().zip(&full[x]) {
                let cats: Vec<usize> = subset.iter().map(|&j| y[j]).collect();
                brute[index(&shape, &cats)] += v;
            }
            for cats in catdiff_core::model::OutcomeIter::new(&shape) {
                worst = worst.max((table.get(&cats) - brute[index(&shape, &cats)]).abs());
                cells_checked += 1;
            }
        }
        let table = model.marginal_pmf_unconditional(&subset).expect("unconditional");
        let mut brute = vec![0.0; shape.iter().product()];
        for x in 0..k {
            for (y, v) in outcomes.iter().zip(&full[x]) {
                let cats: Vec<usize> = subset.iter().map(|&j| y[j]).collect();
                brute[index(&shape, &cats)] += model.pi_x()[x] * v;
            }
        }
        for cats in catdiff_core::model::OutcomeIter::new(&shape) {
            worst = worst.max((table.get(&cats) - brute[index(&shape, &cats)]).abs());
            cells_checked += 1;
        }
        // Full-joint evaluation against the brute force, cell by cell.
        for x in 0..k {
            for (y, v) in outcomes.iter().zip(&full[x]) {
                let want = model.pi_x()[x] * v;
                worst = worst.max((model.eval_joint_pmf(y, x).expect("joint") - want).abs());
                cells_checked += 1;
            }
        }
    }
    verdict(
        worst <= 1e-12,
        format!("max abs cell error {worst:.2e} over {cells_checked} cells of 100 models (tol 1e-12)"),
    )
}

fn index(shape: &[usize], cats: &[usize]) -> usize {
    shape.iter().zip(cats).fold(0, |acc, (&d, &c)| acc * d + c)
}

/// Rising factorial `a (a+1) ... (a+n-1)`.
fn rising(a: f64, n: usize) -> f64 {
    (0..n).map(|i| a + i as f64).product()
}

fn dm_seq(counts: &[usize], a: f64) -> f64 {
    let n: usize = counts.iter().sum();
    counts.iter().map(|&c| rising(a, c)).product::<f64>() / rising(counts.len() as f64 * a, n)
}

/// Exact `pr(T = 1 | y, x)` by summing over every latent assignment, with
/// all continuous parameters integrated out.
fn exact_micro_posterior(rows: &[(Vec<usize>, usize)], config: &PriorConfig) -> f64 {
    let n = rows.len();
    let hbar = config.h_bar;
    let k = config.alpha.len();
    let a = config.nu_concentration;
    let (mut w0, mut w1) = (0.0, 0.0);
    for code in 0..hbar.pow(n as u32) {
        let z: Vec<usize> = (0..n).map(|i| (code / hbar.pow(i as u32)) % hbar).collect();
        let mut lik = 1.0;
        for h in 0..hbar {
            for (j, g) in config.gamma.iter().enumerate() {
                let mut counts = vec![0usize; g.len()];
                for (i, (y, _)) in rows.iter().enumerate() {
                    if z[i] == h {
                        counts[y[j]] += 1;
                    }
                }
                let total: usize = counts.iter().sum();
                let num: f64 = counts.iter().zip(g).map(|(&c, &gc)| rising(gc, c)).product();
                lik *= num / rising(g.iter().sum(), total);
            }
        }
        let mut n_h = vec![0usize; hbar];
        let mut n_hx = vec![vec![0usize; hbar]; k];
        for (i, (_, x)) in rows.iter().enumerate() {
            n_h[z[i]] += 1;
            n_hx[*x][z[i]] += 1;
        }
        w0 += (1.0 - config.pr_h1) * dm_seq(&n_h, a) * lik;
        w1 += config.pr_h1 * n_hx.iter().map(|c| dm_seq(c, a)).product::<f64>() * lik;
    }
    w1 / (w0 + w1)
}

fn criterion_7() -> Verdict {
    let space = CategorySpace::new(vec![2, 2], 2, 2).expect("space");
    let rows = vec![(vec![0, 0], 0), (vec![0, 1], 0), (vec![1, 1], 1)];
    let data = Dataset::new(space.clone(), rows.clone()).expect("data");
    let config = default_config(&space);
    let exact = exact_micro_posterior(&rows, &config);
    let schedule = Schedule {
        n_iter: 200_000,
        burn_in: 1000,
        thin: 1,
    };
    let chain = run_chain(&data, &config, &schedule, RngSpec::new(707, 0)).expect("chain");
    let est = global_test(&chain).expect("global").pr_h1_given_data;
    verdict(
        (est - exact).abs() <= 0.02,
        format!("chain {est:.4}, enumeration {exact:.4}, |diff| {:.4} (tol 0.02)", (est - exact).abs()),
    )
}

fn criterion_8() -> Verdict {
    let space = CategorySpace::new(vec![3, 2, 4], 2, H_BAR).expect("space");
    let config = default_config(&space);
    let schedule = Schedule {
        n_iter: 21_000,
        burn_in: 1000,
        thin: 1,
    };
    let chain = run_chain(&Dataset::empty(space.clone()), &config, &schedule, RngSpec::new(808, 0))
        .expect("chain");
    let mean_t = global_test(&chain).expect("global").pr_h1_given_data;
    let a = config.nu_concentration;
    let conc_total = a * H_BAR as f64;
    let want_mean = a / conc_total;
    let want_var = a * (conc_total - a) / (conc_total * conc_total * (conc_total + 1.0));
    let mut worst_mean = 0.0f64;
    let mut worst_var = 0.0f64;
    for x in 0..2 {
        for h in 0..H_BAR {
            let series: Vec<f64> = (0..chain.n_draws()).map(|r| chain.draw(r).nu(x)[h]).collect();
            let m = series.iter().sum::<f64>() / series.len() as f64;
            let v = series.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (series.len() - 1) as f64;
            worst_mean = worst_mean.max((m - want_mean).abs());
            worst_var = worst_var.max((v - want_var).abs());
        }
    }
    let pass = (mean_t - config.pr_h1).abs() <= 0.03 && worst_mean <= 0.02 && worst_var <= 0.02;
    verdict(
        pass,
        format!(
            "mean(T) {mean_t:.4} vs {:.2} (tol 0.03); nu mean dev {worst_mean:.4}, var dev {worst_var:.4} vs Dir moments ({want_mean:.3}, {want_var:.4}) (tol 0.02)",
            config.pr_h1
        ),
    )
}

fn criterion_9(fits: &[ScenarioFit]) -> Verdict {
    let mut null_draws = 0usize;
    let mut violations = 0usize;
    for f in fits {
        for r in 0..f.chain.n_draws() {
            if f.chain.t[r] {
                continue;
            }
            null_draws += 1;
            let view = f.chain.draw(r);
            for j in 0..f.chain.space.p() {
                if cramers_v_marginal(&view, j).expect("rho") != 0.0 {
                    violations += 1;
                }
            }
        }
    }
    verdict(
        violations == 0 && null_draws > 0,
        format!("{null_draws} T=0 draws checked, {violations} nonzero rho_j"),
    )
}

fn criterion_10() -> Verdict {
    let mut worst_marginal = 0.0f64;
    let mut best_pair = 0.0f64;
    for seed in SEEDS {
        let (model, _) = build_scenario(&ScenarioSpec::new(3, seed)).expect("scenario");
        let view = model.view();
        for j in 0..SCENARIO_VARIABLES {
            let a = view.univariate_conditional(j, 0);
            let b = view.univariate_conditional(j, 1);
            let gap: f64 = a.iter().zip(&b).map(|(u, v)| (u - v).abs()).sum();
            worst_marginal = worst_marginal.max(gap);
        }
        for (i, &j) in SCENARIO_ACTIVE_VARIABLES.iter().enumerate() {
            for &jp in &SCENARIO_ACTIVE_VARIABLES[i + 1..] {
                let a = view.bivariate_conditional(j, jp, 0);
                let b = view.bivariate_conditional(j, jp, 1);
                let gap: f64 = a.iter().zip(&b).map(|(u, v)| (u - v).abs()).sum();
                best_pair = best_pair.max(gap);
            }
        }
    }
    verdict(
        worst_marginal <= 1e-12 && best_pair > 0.1,
        format!("max marginal L1 gap {worst_marginal:.2e} (tol 1e-12), max J-pair L1 gap {best_pair:.4} (> 0.1)"),
    )
}

fn main() {
    let start = Instant::now();
    let mut fits = Vec::new();
    for scenario in 1..=3u8 {
        for seed in SEEDS {
            let t0 = Instant::now();
            let f = fit_scenario(scenario, seed);
            eprintln!(
                "fitted scenario {scenario} seed {seed} in {:.1}s: pr(H1|data) = {:.4}",
                t0.elapsed().as_secs_f64(),
                f.pr_h1
            );
            fits.push(f);
        }
    }

    let results: Vec<(u8, &str, Verdict)> = vec![
        (1, "scenario 1 global null", criterion_1(&fits)),
        (2, "scenarios 2-3 global alternative", criterion_2(&fits)),
        (3, "scenario 2 local marginals", criterion_3(&fits)),
        (4, "pairwise structure", criterion_4(&fits)),
        (5, "testing-indicator Bayes factor vs oracle", criterion_5()),
        (6, "marginalization vs full tensor", criterion_6()),
        (7, "micro-scale exact posterior", criterion_7()),
        (8, "prior recovery on empty data", criterion_8()),
        (9, "null collapse", criterion_9(&fits)),
        (10, "scenario 3 construction", criterion_10()),
    ];

    let mut failed = 0;
    for (id, name, v) in &results {
        println!(
            "criterion {id:>2} [{name}]: {} ({})",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        failed += usize::from(!v.pass);
    }
    println!(
        "acceptance: {} of {} criteria passed in {:.1}s",
        results.len() - failed,
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
