//! End-to-end checks of the shipped guarantees, one numbered criterion per
//! line of output. Every tolerance is written out here rather than taken
//! from a configuration file.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use anyhow::{anyhow, ensure, Context, Result};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use specfilter_core::basis::TorusBasis;
use specfilter_core::bounds::{self, RateBound, FILTER_BOUND_TOL};
use specfilter_core::data::mix_seed;
use specfilter_core::minimax;
use specfilter_core::pde::{ibp_identity_check, sobolev_objective};
use specfilter_core::spectral::FunctionCoeffs;
use specfilter_harness::config::ExperimentConfig;
use specfilter_harness::rates::RatesReport;
use specfilter_harness::{boundsuite, filtercheck, pderun, rates};

const FLAT_SLOPE_TOL: f64 = 0.12;
const INVERSE_SLOPE_TOL: f64 = 0.15;
const STOPPING_SLOPE_TOL: f64 = 0.15;
const ROUTE_IDENTITY_TOL: f64 = 1e-12;
const OBJECTIVE_IDENTITY_TOL: f64 = 1e-10;
const SINGLE_THREAD_BUDGET: Duration = Duration::from_secs(600);

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load_config(name: &str) -> Result<ExperimentConfig> {
    ExperimentConfig::load(&configs_dir().join(name))
}

#[derive(Default)]
struct Scorecard {
    failed: Vec<u32>,
}

impl Scorecard {
    fn record(&mut self, number: u32, outcome: Result<String>) {
        match outcome {
            Ok(detail) => println!("[PASS] criterion {number}: {detail}"),
            Err(e) => {
                println!("[FAIL] criterion {number}: {e:#}");
                self.failed.push(number);
            }
        }
    }

    fn finish(self) {
        assert!(
            self.failed.is_empty(),
            "criteria failed: {:?}",
            self.failed
        );
        println!("all criteria passed");
    }
}

#[test]
fn acceptance() {
    let mut card = Scorecard::default();

    match flat_rates_run() {
        Ok((report, elapsed)) => {
            card.record(1, flat_slope_check(&report, elapsed));
            card.record(2, sobolev_slope_check(&report));
        }
        Err(e) => {
            let msg = format!("{e:#}");
            card.record(1, Err(anyhow!("{msg}")));
            card.record(2, Err(anyhow!("shared run failed: {msg}")));
        }
    }
    card.record(3, inverse_slope_check());
    card.record(4, route_identity_check());
    card.record(5, filter_bound_sweep_check());
    card.record(6, envelope_suite_check());
    card.record(7, packing_certification_check());
    card.record(8, objective_identity_check());
    card.record(9, stopping_comparison_check());
    card.record(10, thread_determinism_check());

    card.finish();
}

fn flat_rates_run() -> Result<(RatesReport, Duration)> {
    let cfg = load_config("rates.toml")?;
    ensure!(
        cfg.spec.alpha() == 2.0
            && cfg.spec.p() == 0.0
            && cfg.spec.q() == 0.0
            && cfg.spec.beta() == 1.0
            && cfg.spec.mu() == 0.5
            && cfg.spec.n_trunc() == 512,
        "flat-spectrum config drifted from the pinned parameters"
    );
    ensure!(
        cfg.noise.sigma == 0.3
            && cfg.n_grid == vec![128, 256, 512, 1024, 2048, 4096, 8192]
            && cfg.replications == 20
            && cfg.gammas_eval == vec![0.0, 0.5],
        "flat-spectrum run shape drifted from the pinned grid"
    );
    let out = tempfile::tempdir()?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build()?;
    let start = Instant::now();
    let report = pool.install(|| rates::run_rates(&cfg, out.path()))?;
    Ok((report, start.elapsed()))
}

fn gamma_summary(report: &RatesReport, gamma_eval: f64) -> Result<rates::GammaSummary> {
    report
        .per_gamma
        .iter()
        .find(|g| g.gamma_eval == gamma_eval)
        .cloned()
        .ok_or_else(|| anyhow!("no summary for evaluation exponent {gamma_eval}"))
}

fn flat_slope_check(report: &RatesReport, elapsed: Duration) -> Result<String> {
    ensure!(
        report.regime == "ConstLR" && (report.growth_exponent - 2.0 / 3.0).abs() <= 1e-12,
        "expected the constant-step schedule with growth exponent 2/3, got {} / {}",
        report.regime,
        report.growth_exponent
    );
    let g = gamma_summary(report, 0.0)?;
    let target = -2.0 / 3.0;
    ensure!(
        (g.slope_scheduled - target).abs() <= FLAT_SLOPE_TOL,
        "slope {:.4} not within {FLAT_SLOPE_TOL} of {target:.4}",
        g.slope_scheduled
    );
    ensure!(
        g.gap_pass == Some(true),
        "scheduled stop strays more than {}x from the observed optimum",
        3.0
    );
    ensure!(
        elapsed <= SINGLE_THREAD_BUDGET,
        "single-threaded run took {elapsed:.1?}, budget {SINGLE_THREAD_BUDGET:?}"
    );
    Ok(format!(
        "evaluation-norm slope {:.4} within {FLAT_SLOPE_TOL} of {target:.4}, single-threaded in {:.1?}",
        g.slope_scheduled, elapsed
    ))
}

fn sobolev_slope_check(report: &RatesReport) -> Result<String> {
    let g = gamma_summary(report, 0.5)?;
    let target = -1.0 / 3.0;
    ensure!(
        (g.slope_scheduled - target).abs() <= FLAT_SLOPE_TOL,
        "slope {:.4} not within {FLAT_SLOPE_TOL} of {target:.4}",
        g.slope_scheduled
    );
    Ok(format!(
        "half-power-norm slope {:.4} within {FLAT_SLOPE_TOL} of {target:.4}",
        g.slope_scheduled
    ))
}

fn inverse_slope_check() -> Result<String> {
    let cfg = load_config("rates_inverse.toml")?;
    ensure!(
        cfg.spec.alpha() == 2.0
            && cfg.spec.p() == -1.0
            && cfg.spec.q() == -0.5
            && cfg.spec.beta() == 1.0
            && cfg.spec.mu() == 0.5,
        "ill-posed config drifted from the pinned parameters"
    );
    let out = tempfile::tempdir()?;
    let report = rates::run_rates(&cfg, out.path())?;
    let g = gamma_summary(&report, 0.0)?;
    let target = -1.0;
    ensure!(
        (g.slope_scheduled - target).abs() <= INVERSE_SLOPE_TOL,
        "slope {:.4} not within {INVERSE_SLOPE_TOL} of {target:.4}",
        g.slope_scheduled
    );
    Ok(format!(
        "ill-posed slope {:.4} within {INVERSE_SLOPE_TOL} of {target:.4}",
        g.slope_scheduled
    ))
}

fn route_identity_check() -> Result<String> {
    let cfg = load_config("filtercheck.toml")?;
    ensure!(
        cfg.filtercheck.population_t_max == 1000 && cfg.filtercheck.dense_modes <= 8,
        "route-identity config drifted from the pinned sweep"
    );
    let out = tempfile::tempdir()?;
    let report = filtercheck::run_filtercheck(&cfg, out.path())?;
    ensure!(
        report.population_max_dev <= ROUTE_IDENTITY_TOL,
        "population recursion deviates from the closed-form filter by {:.3e}",
        report.population_max_dev
    );
    ensure!(
        report.empirical_max_dev <= ROUTE_IDENTITY_TOL,
        "sampled recursion deviates from the dense-matrix oracle by {:.3e}",
        report.empirical_max_dev
    );
    Ok(format!(
        "population route {:.3e}, dense-oracle route {:.3e}, both under {ROUTE_IDENTITY_TOL:.0e}",
        report.population_max_dev, report.empirical_max_dev
    ))
}

fn filter_bound_sweep_check() -> Result<String> {
    let report = bounds::filter_bound_check(0.5, 1024, 512)?;
    ensure!(
        report.points_checked == 1024 * 512 * 5,
        "sweep covered {} points instead of the full grid",
        report.points_checked
    );
    ensure!(
        report.max_residual_slack <= FILTER_BOUND_TOL && report.max_filter_slack < 0.0,
        "bound violated: residual slack {:.3e}, filter slack {:.3e}",
        report.max_residual_slack,
        report.max_filter_slack
    );
    Ok(format!(
        "{} grid points, residual slack {:.3e}, filter slack {:.3e}",
        report.points_checked, report.max_residual_slack, report.max_filter_slack
    ))
}

fn envelope_suite_check() -> Result<String> {
    let cfg = load_config("bounds.toml")?;
    let out = tempfile::tempdir()?;
    let report = boundsuite::run_bounds(&cfg, out.path())?;
    ensure!(
        report.suites.len() == 3,
        "expected three spectrum shapes, got {}",
        report.suites.len()
    );
    let required = [
        "bias",
        "energy_bias",
        "effective_dimension",
        "dof_trace",
        "n_infty_kernel",
        "n_infty_data",
        "n_infty_objective_proof",
    ];
    for suite in &report.suites {
        ensure!(suite.suite_passed, "suite {} failed", suite.label);
        for name in required {
            let hit = suite
                .quantity_passes
                .iter()
                .find(|(label, _)| label == name)
                .ok_or_else(|| anyhow!("suite {} missing quantity {name}", suite.label))?;
            ensure!(hit.1, "suite {} fails quantity {name}", suite.label);
        }
    }
    ensure!(
        report.control_failed_as_expected,
        "deliberately shifted envelope was not rejected"
    );
    Ok(format!(
        "3 spectrum shapes x {} quantities passed, shifted control rejected",
        report.suites[0].quantity_passes.len()
    ))
}

fn packing_certification_check() -> Result<String> {
    let cfg = load_config("lowerbound.toml")?;
    let spec = &cfg.spec;
    let lb = &cfg.lowerbound;
    ensure!(
        lb.codebook_m == 64 && lb.epsilons == vec![1e-1, 1e-2, 1e-3],
        "packing config drifted from the pinned block length or scales"
    );

    let code = minimax::gilbert_varshamov(lb.codebook_m, cfg.seed, lb.codebook_tries)?;
    ensure!(
        code.word_count() >= 256,
        "codebook holds {} words, need at least 256",
        code.word_count()
    );
    let mut min_hamming = usize::MAX;
    for i in 0..code.word_count() {
        for j in (i + 1)..code.word_count() {
            min_hamming = min_hamming.min(code.hamming(i, j));
        }
    }
    ensure!(
        min_hamming >= 8,
        "pairwise distance dropped to {min_hamming}, need at least 8"
    );

    let lower = bounds::rate_exponent(spec, lb.gamma_eval, RateBound::Lower)?;
    for (idx, &epsilon) in lb.epsilons.iter().enumerate() {
        let m = minimax::budget_m(spec, epsilon, lb.gamma_eval, lb.budget_c)
            .ok_or_else(|| anyhow!("no block length fits the budget at scale {epsilon}"))?;
        let fam_code =
            minimax::gilbert_varshamov(m, mix_seed(cfg.seed, m as u64, idx as u64), lb.codebook_tries)?;
        let family =
            minimax::build_hypotheses(spec, epsilon, m, &fam_code, lb.gamma_eval, lb.budget_c)?;
        let cert = minimax::certify_family(&family, spec, lb.beta_norm_cap)?;
        ensure!(
            cert.min_separation_sq >= epsilon / 8.0 * (1.0 - 1e-9),
            "scale {epsilon}: separation {:.3e} below the floor {:.3e}",
            cert.min_separation_sq,
            epsilon / 8.0
        );
        ensure!(
            cert.identity_max_rel_err <= 1e-9,
            "scale {epsilon}: separations drift {:.3e} from the code-distance identity",
            cert.identity_max_rel_err
        );
        ensure!(
            cert.max_beta_norm <= lb.beta_norm_cap,
            "scale {epsilon}: source norm {:.3} exceeds the cap {}",
            cert.max_beta_norm,
            lb.beta_norm_cap
        );
        let fano = minimax::fano_bound(&family, spec, lb.fano_n, lb.fano_sigma)?;
        ensure!(
            (fano.epsilon_rate_exponent + lower).abs() <= 4.0 * f64::EPSILON,
            "scale {epsilon}: information exponent {:.15} vs floor exponent {:.15}",
            fano.epsilon_rate_exponent,
            -lower
        );
    }
    Ok(format!(
        "codebook {} words with distance >= {min_hamming}, 3 certified scales, exponents match",
        code.word_count()
    ))
}

fn decaying_coeffs(len: usize, rng: &mut ChaCha8Rng) -> FunctionCoeffs {
    let coeffs = (0..len)
        .map(|j| {
            let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            (2.0 * u - 1.0) / ((j + 1) * (j + 1)) as f64
        })
        .collect();
    FunctionCoeffs::new(coeffs)
}

fn objective_identity_check() -> Result<String> {
    let mut worst_objective = 0.0f64;
    let mut worst_parts = 0.0f64;
    for d in 1..=3usize {
        let basis = TorusBasis::new(d, 64)?;
        let mut rng = ChaCha8Rng::seed_from_u64(800 + d as u64);
        for pair in 0..100 {
            let u = decaying_coeffs(64, &mut rng);
            let f = decaying_coeffs(64, &mut rng);
            let obj = sobolev_objective(&u, &f, 1.0, &basis)?;
            let gap = (obj.direct - obj.expanded).abs() / obj.direct.abs().max(1.0);
            ensure!(
                gap <= OBJECTIVE_IDENTITY_TOL,
                "dimension {d} pair {pair}: objective routes disagree by {gap:.3e}"
            );
            worst_objective = worst_objective.max(gap);
            let parts = ibp_identity_check(&u, &f, &basis)?;
            ensure!(
                parts <= OBJECTIVE_IDENTITY_TOL,
                "dimension {d} pair {pair}: gradient identity off by {parts:.3e}"
            );
            worst_parts = worst_parts.max(parts);
        }
    }
    Ok(format!(
        "300 pairs across dimensions 1-3, worst objective gap {worst_objective:.3e}, worst gradient gap {worst_parts:.3e}"
    ))
}

fn stopping_comparison_check() -> Result<String> {
    let cfg = load_config("pde.toml")?;
    ensure!(
        cfg.spec.dimension() == 1
            && cfg.n_grid == vec![256, 512, 1024, 2048, 4096]
            && cfg.replications == 10
            && cfg.pde.operators == vec!["drm".to_string(), "pinn".to_string()],
        "stopping-comparison config drifted from the pinned design"
    );
    let out = tempfile::tempdir()?;
    let report = pderun::run_pde(&cfg, out.path())?;
    let slope_of = |name: &str| {
        report
            .slopes
            .iter()
            .find(|s| s.operator == name)
            .ok_or_else(|| anyhow!("no fitted slope for {name}"))
    };
    let drm = slope_of("drm")?;
    let pinn = slope_of("pinn")?;
    ensure!(
        pinn.slope < drm.slope,
        "residual formulation should stop earlier: {:.4} vs {:.4}",
        pinn.slope,
        drm.slope
    );
    for s in [drm, pinn] {
        ensure!(
            (s.slope - s.theory_exponent).abs() <= STOPPING_SLOPE_TOL,
            "{}: slope {:.4} not within {STOPPING_SLOPE_TOL} of predicted {:.4}",
            s.operator,
            s.slope,
            s.theory_exponent
        );
    }
    Ok(format!(
        "stopping growth drm {:.4} (predicted {:.4}) > pinn {:.4} (predicted {:.4})",
        drm.slope, drm.theory_exponent, pinn.slope, pinn.theory_exponent
    ))
}

fn compare_dirs(a: &Path, b: &Path) -> Result<usize> {
    let list = |dir: &Path| -> Result<Vec<String>> {
        let mut names: Vec<String> = std::fs::read_dir(dir)?
            .map(|e| Ok(e?.file_name().to_string_lossy().into_owned()))
            .collect::<Result<_>>()?;
        names.sort();
        Ok(names)
    };
    let names_a = list(a)?;
    let names_b = list(b)?;
    ensure!(
        names_a == names_b,
        "output file sets differ: {names_a:?} vs {names_b:?}"
    );
    ensure!(!names_a.is_empty(), "no output files were produced");
    for name in &names_a {
        let bytes_a = std::fs::read(a.join(name))?;
        let bytes_b = std::fs::read(b.join(name))?;
        ensure!(bytes_a == bytes_b, "{name} differs between thread counts");
    }
    Ok(names_a.len())
}

fn thread_determinism_check() -> Result<String> {
    let bin = env!("CARGO_BIN_EXE_specfilter");
    let tmp = tempfile::tempdir()?;

    let mut small = load_config("rates.toml")?;
    small.n_grid = vec![128, 256, 512, 1024];
    small.replications = 5;
    let small_path = tmp.path().join("rates_small.toml");
    std::fs::write(&small_path, small.to_toml_string()?)?;

    let jobs: [(&str, PathBuf); 6] = [
        ("rates", small_path.clone()),
        ("phase", configs_dir().join("phase.toml")),
        ("bounds", configs_dir().join("bounds.toml")),
        ("lowerbound", configs_dir().join("lowerbound.toml")),
        ("pde", configs_dir().join("pde.toml")),
        ("filtercheck", configs_dir().join("filtercheck.toml")),
    ];
    let mut files_checked = 0usize;
    for (sub, cfg_path) in &jobs {
        let mut runs = Vec::new();
        for threads in ["1", "4"] {
            let dir = tmp.path().join(format!("{sub}_{threads}"));
            std::fs::create_dir_all(&dir)?;
            let output = Command::new(bin)
                .arg("--config")
                .arg(cfg_path)
                .arg("--out-dir")
                .arg(&dir)
                .arg("--threads")
                .arg(threads)
                .arg(sub)
                .output()
                .with_context(|| format!("launching {sub} with {threads} threads"))?;
            runs.push((dir, output));
        }
        let (dir_a, out_a) = &runs[0];
        let (dir_b, out_b) = &runs[1];
        ensure!(
            out_a.status.code() == out_b.status.code(),
            "{sub}: exit codes differ between thread counts"
        );
        ensure!(
            out_a.stdout == out_b.stdout,
            "{sub}: logs differ between thread counts"
        );
        files_checked += compare_dirs(dir_a, dir_b)
            .with_context(|| format!("comparing {sub} outputs"))?;
    }
    Ok(format!(
        "6 subcommands byte-identical across 1 and 4 worker threads ({files_checked} files)"
    ))
}
