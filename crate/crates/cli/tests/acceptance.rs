//! End-to-end acceptance run. Prints one line per criterion and exits
//! nonzero if any criterion fails or overruns its time budget.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use smk_core::bernstein::{survival_to_exponent, BernsteinSpec, WaitingTimeLaw};
use smk_core::kolmogorov::{
    solve_evolutionary, solve_markov, solve_renewal, solve_volterra_caputo, SolutionGrid,
};
use smk_core::laplace::{oracle_solution, InversionConfig};
use smk_core::limits::{
    run_fractional_diffusion_limit, run_fractional_poisson_limit, AlphaProfile,
    LimitExperimentConfig, LimitKind,
};
use smk_core::quadrature::{integrate, integrate_to_infinity, QuadConfig};
use smk_core::samplers::{sample_waiting_time, RngStream};
use smk_core::semi_markov::{
    empirical_marginal, simulate_path, simulate_time_change, SemiMarkovModel,
};
use smk_core::special_fn::{mittag_leffler, ml_survival, MlParams};
use smk_core::stats::{
    chi_square, ks_critical_one_sample, ks_critical_two_sample, ks_one_sample, ks_two_sample,
};

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ml(alpha: f64, z: f64) -> f64 {
    mittag_leffler(MlParams::one(alpha).unwrap(), z).unwrap()
}

fn benchmark(alpha: f64) -> SemiMarkovModel {
    SemiMarkovModel::two_state_symmetric(BernsteinSpec::with_order(alpha).unwrap(), 1.0).unwrap()
}

/// `π_00(t)` of the symmetric two-state chain, by diagonalising `G`.
fn relaxation(alpha: f64, t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        0.5 * (1.0 + ml(alpha, -2.0 * t.powf(alpha)))
    }
}

fn max_grid_error(g: &SolutionGrid, alpha: f64) -> f64 {
    g.times
        .iter()
        .zip(&g.values)
        .filter(|(&t, _)| t > 0.0)
        .map(|(&t, v)| {
            let p = relaxation(alpha, t);
            (v[(0, 0)] - p).abs().max((v[(0, 1)] - (1.0 - p)).abs())
        })
        .fold(0.0, f64::max)
}

fn mittag_leffler_accuracy() -> Outcome {
    let mut worst: f64 = 0.0;
    for x in [0.1f64, 0.5, 1.0, 2.0, 5.0] {
        let want = (x * x).exp() * libm::erfc(x);
        worst = worst.max((ml(0.5, -x) - want).abs());
    }
    ensure(
        worst <= 1e-10,
        format!("max |E_0.5(-x) - e^(x^2) erfc(x)| = {worst:.2e}"),
    )
}

fn exponent_round_trip() -> Outcome {
    let cfg = QuadConfig::default();
    let mut worst: f64 = 0.0;
    for alpha in [0.3, 0.5, 0.8] {
        let surv = |t: f64| ml_survival(alpha, 1.0, t).unwrap();
        for lambda in [1.0, 2.0, 4.0] {
            let transform = |l: f64| {
                integrate(|t| (-l * t).exp() * surv(t), 0.0, 1.0, cfg).value
                    + integrate_to_infinity(|t| (-l * t).exp() * surv(t), 1.0, cfg).value
            };
            let f = survival_to_exponent(transform, 1.0, lambda).map_err(|e| e.to_string())?;
            worst = worst.max((f - lambda.powf(alpha)).abs());
        }
    }
    ensure(
        worst <= 1e-5,
        format!("max |f(lambda) - lambda^alpha| = {worst:.2e}"),
    )
}

fn waiting_time_law() -> Outcome {
    let n = 100_000;
    let law = WaitingTimeLaw::stable(0.5, 1.0).unwrap();
    let mut rng = RngStream::new(2024, 0);
    let draws: Vec<f64> = (0..n)
        .map(|_| sample_waiting_time(&mut rng, &law))
        .collect();
    let d = ks_one_sample(&draws, |t| 1.0 - ml_survival(0.5, 1.0, t).unwrap());
    let crit = ks_critical_one_sample(n);
    ensure(d < crit, format!("KS D = {d:.5}, critical {crit:.5}"))
}

fn time_change_equivalence() -> Outcome {
    // states 1 and 2 absorb, so each path makes exactly one jump
    let model = SemiMarkovModel::with_shared_exponent(
        vec![
            vec![0.0, 0.3, 0.7],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ],
        vec![1.0, 1.0, 1.0],
        BernsteinSpec::stable(0.6).unwrap(),
    )
    .unwrap();
    let n = 100_000;
    let (mut a, mut b) = (RngStream::new(77, 0), RngStream::new(77, 1));
    let mut direct = Vec::with_capacity(n);
    let mut changed = Vec::with_capacity(n);
    let mut counts = [[0u64; 3]; 2];
    for _ in 0..n {
        let p = simulate_path(&model, 0, 1e15, &mut a).map_err(|e| e.to_string())?;
        let q = simulate_time_change(&model, 0, 1e15, &mut b).map_err(|e| e.to_string())?;
        direct.push(p.epochs[1]);
        changed.push(q.epochs[1]);
        counts[0][p.states[1]] += 1;
        counts[1][q.states[1]] += 1;
    }
    let d = ks_two_sample(&direct, &changed);
    let crit = ks_critical_two_sample(n, n);
    let probs = [0.0, 0.3, 0.7];
    let p_direct = chi_square(&counts[0], &probs)
        .map_err(|e| e.to_string())?
        .p_value;
    let p_changed = chi_square(&counts[1], &probs)
        .map_err(|e| e.to_string())?
        .p_value;
    ensure(
        d < crit && p_direct > 0.01 && p_changed > 0.01,
        format!("KS D = {d:.5} (critical {crit:.5}); chi2 p = {p_direct:.3} direct, {p_changed:.3} time change"),
    )
}

fn fractional_benchmark() -> Outcome {
    let alpha = 0.6;
    let m = benchmark(alpha);
    let mut parts = Vec::new();
    let mut ok = true;
    for g in [
        solve_renewal(&m, 2.0, 1e-3),
        solve_volterra_caputo(&m, 2.0, 1e-3),
        solve_evolutionary(&m, 2.0, 1e-3),
    ] {
        let g = g.map_err(|e| e.to_string())?;
        let e = max_grid_error(&g, alpha);
        ok &= e <= 2e-3;
        parts.push(format!("{} {e:.1e}", g.method.name()));
    }
    let times = [0.5, 1.0, 2.0];
    let o = oracle_solution(&m, &times, InversionConfig::default()).map_err(|e| e.to_string())?;
    let oe = times
        .iter()
        .zip(&o.values)
        .map(|(&t, v)| (v[(0, 0)] - relaxation(alpha, t)).abs())
        .fold(0.0, f64::max);
    ok &= oe <= 1e-5;
    parts.push(format!("oracle {oe:.1e}"));
    let mc = empirical_marginal(&m, 0, 1.0, 100_000, &RngStream::new(11, 0))
        .map_err(|e| e.to_string())?;
    let p = relaxation(alpha, 1.0);
    let z = (mc.probabilities[0] - p).abs() / mc.std_errors[0];
    ok &= z <= 4.0;
    parts.push(format!("Monte Carlo z {z:.2}"));
    ensure(ok, parts.join(", "))
}

fn markov_reduction() -> Outcome {
    let m = benchmark(1.0);
    let mut parts = Vec::new();
    let mut ok = true;
    for g in [
        solve_renewal(&m, 2.0, 1e-4),
        solve_volterra_caputo(&m, 2.0, 1e-4),
        solve_evolutionary(&m, 2.0, 1e-4),
    ] {
        let g = g.map_err(|e| e.to_string())?;
        let x = solve_markov(&m, &g.times).map_err(|e| e.to_string())?;
        let e = g
            .values
            .iter()
            .zip(&x.values)
            .map(|(a, b)| (a - b).amax())
            .fold(0.0, f64::max);
        ok &= e <= 1e-5;
        parts.push(format!("{} {e:.1e}", g.method.name()));
    }
    let times: Vec<f64> = (1..=20).map(|k| 0.1 * k as f64).collect();
    let o = oracle_solution(&m, &times, InversionConfig::default()).map_err(|e| e.to_string())?;
    let x = solve_markov(&m, &times).map_err(|e| e.to_string())?;
    let oe = o
        .values
        .iter()
        .zip(&x.values)
        .map(|(a, b)| (a - b).amax())
        .fold(0.0, f64::max);
    ok &= oe <= 1e-7;
    parts.push(format!("oracle {oe:.1e}"));
    ensure(ok, parts.join(", "))
}

fn variable_order() -> Outcome {
    let m = SemiMarkovModel::new(
        vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        vec![1.0, 1.0],
        vec![
            BernsteinSpec::stable(0.5).unwrap(),
            BernsteinSpec::stable(0.9).unwrap(),
        ],
    )
    .unwrap();
    let c = solve_volterra_caputo(&m, 2.0, 1e-3).map_err(|e| e.to_string())?;
    let idx: Vec<usize> = (0..c.len())
        .filter(|&k| c.times[k] >= 0.1 - 1e-12)
        .step_by(5)
        .collect();
    let times: Vec<f64> = idx.iter().map(|&k| c.times[k]).collect();
    let o = oracle_solution(&m, &times, InversionConfig::default()).map_err(|e| e.to_string())?;
    let diff = idx
        .iter()
        .zip(&o.values)
        .map(|(&k, v)| (&c.values[k] - v).amax())
        .fold(0.0, f64::max);
    ensure(
        diff <= 5e-4,
        format!(
            "max |Caputo - oracle| = {diff:.2e} over {} times",
            times.len()
        ),
    )
}

fn convergence_order() -> Outcome {
    let m = benchmark(0.6);
    let coarse = solve_volterra_caputo(&m, 2.0, 2e-3).map_err(|e| e.to_string())?;
    let fine = solve_volterra_caputo(&m, 2.0, 1e-3).map_err(|e| e.to_string())?;
    let (ec, ef) = (max_grid_error(&coarse, 0.6), max_grid_error(&fine, 0.6));
    let ratio = ec / ef;
    ensure(
        (1.7..=2.3).contains(&ratio),
        format!("error {ec:.3e} at dt=2e-3, {ef:.3e} at dt=1e-3, ratio {ratio:.3}"),
    )
}

fn fractional_poisson() -> Outcome {
    // at c = 1 the drift walk is the fractional Poisson process on the integers
    let mut cfg = LimitExperimentConfig::new(
        LimitKind::FractionalPoissonDrift,
        AlphaProfile::Constant { alpha: 0.8 },
    );
    cfg.scales = vec![1.0];
    cfg.h_ref = Some(1.0);
    cfg.n_paths = 100_000;
    let rep =
        run_fractional_poisson_limit(&cfg, &RngStream::new(8, 0)).map_err(|e| e.to_string())?;
    let zero = rep
        .positions
        .iter()
        .position(|&x| x.abs() < 1e-9)
        .ok_or("no bin at the origin")?;
    let p_hat = rep.scales[0].empirical[zero];
    let p = ml(0.8, -1.0);
    let se = (p * (1.0 - p) / cfg.n_paths as f64).sqrt();
    let z = (p_hat - p) / se;
    ensure(
        z.abs() <= 4.0,
        format!("P(N(1)=0) = {p_hat:.5} vs E_0.8(-1) = {p:.5}, z = {z:.2}"),
    )
}

fn scaling_limits() -> Outcome {
    let seed = RngStream::new(31, 0);
    let mut parts = Vec::new();
    let mut ok = true;

    let control = LimitExperimentConfig::new(
        LimitKind::BrownianMarkovControl,
        AlphaProfile::Constant { alpha: 1.0 },
    );
    let rep =
        run_fractional_diffusion_limit(&control, &seed.substream(0)).map_err(|e| e.to_string())?;
    let check = rep.control.ok_or("control report missing")?;
    ok &= check.passed;
    parts.push(format!(
        "control max z {:.2} over {} bins",
        check.max_z, check.bins_checked
    ));

    let profiles = [
        ("alpha=0.7", AlphaProfile::Constant { alpha: 0.7 }),
        (
            "two-region",
            AlphaProfile::TwoRegion {
                left: 0.6,
                right: 0.9,
                boundary: 0.0,
            },
        ),
    ];
    for (k, (name, profile)) in profiles.into_iter().enumerate() {
        let cfg = LimitExperimentConfig::new(LimitKind::FractionalDiffusion, profile);
        let rep = run_fractional_diffusion_limit(&cfg, &seed.substream(1 + k as u64))
            .map_err(|e| e.to_string())?;
        let first = rep.scales.first().unwrap().tv_distance;
        let last = rep.scales.last().unwrap().tv_distance;
        ok &= last < first;
        parts.push(format!("{name} TV {first:.4} -> {last:.4}"));
    }
    ensure(ok, parts.join("; "))
}

fn run_cli(config: &Path, threads: &str) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_smk"))
        .args([
            "--config",
            config.to_str().unwrap(),
            "--threads",
            threads,
            "--seed",
            "123",
            "--quiet",
        ])
        .env_remove("SMK_SEED")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "{}: {}",
            config.display(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(out.stdout)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let model = r#""model": {"h": [[0, 0.5, 0.5], [0.3, 0, 0.7], [0.5, 0.5, 0]], "theta": [1, 2, 0.5],
        "laws": [{"kind": "stable", "alpha": 0.6}, {"kind": "stable", "alpha": 0.9}, {"kind": "markov"}]}"#;
    let tasks = [
        r#"{"type": "simulate", "horizon": 10.0, "n_paths": 200}"#,
        r#"{"type": "marginal", "times": [0.5, 1.0, 2.0], "n_paths": 20000}"#,
        r#"{"type": "solve", "method": "renewal", "t_max": 2.0}"#,
        r#"{"type": "solve", "method": "volterra_caputo", "t_max": 2.0}"#,
        r#"{"type": "solve", "method": "evolutionary", "t_max": 2.0}"#,
        r#"{"type": "oracle", "t_max": 2.0, "n_points": 40}"#,
        r#"{"type": "validate", "n_paths": 20000}"#,
    ];
    let mut configs: Vec<String> = tasks
        .iter()
        .map(|t| format!("{{{model}, \"task\": {t}}}"))
        .collect();
    configs.push(
        r#"{"task": {"type": "limit", "experiment": {"kind": "fractional_diffusion",
            "alpha": {"kind": "two_region", "left": 0.6, "right": 0.9, "boundary": 0.0}, "n_paths": 20000}}}"#
            .into(),
    );
    let mut total = 0;
    for (k, text) in configs.iter().enumerate() {
        let path = dir.path().join(format!("task{k}.json"));
        std::fs::write(&path, text).map_err(|e| e.to_string())?;
        let one = run_cli(&path, "1")?;
        let four = run_cli(&path, "4")?;
        let again = run_cli(&path, "4")?;
        if one != four || four != again {
            return Err(format!("task {k} differs between runs"));
        }
        total += one.len();
    }
    Ok(format!(
        "{} tasks byte-identical under 1 and 4 threads ({total} bytes)",
        configs.len()
    ))
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() {
    // `cargo test` passes harness flags; a filter argument selects criteria by id
    let filter: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let secs = Duration::from_secs;
    let criteria = [
        Criterion {
            id: 1,
            name: "Mittag-Leffler accuracy",
            budget: secs(1),
            run: mittag_leffler_accuracy,
        },
        Criterion {
            id: 2,
            name: "survival/exponent round trip",
            budget: secs(10),
            run: exponent_round_trip,
        },
        Criterion {
            id: 3,
            name: "waiting-time sampler law",
            budget: secs(30),
            run: waiting_time_law,
        },
        Criterion {
            id: 4,
            name: "time-change equivalence",
            budget: secs(60),
            run: time_change_equivalence,
        },
        Criterion {
            id: 5,
            name: "two-state fractional benchmark",
            budget: secs(120),
            run: fractional_benchmark,
        },
        Criterion {
            id: 6,
            name: "Markov reduction",
            budget: secs(60),
            run: markov_reduction,
        },
        Criterion {
            id: 7,
            name: "variable-order cross-check",
            budget: secs(120),
            run: variable_order,
        },
        Criterion {
            id: 8,
            name: "convergence order",
            budget: secs(120),
            run: convergence_order,
        },
        Criterion {
            id: 9,
            name: "fractional Poisson",
            budget: secs(60),
            run: fractional_poisson,
        },
        Criterion {
            id: 10,
            name: "scaling-limit trends",
            budget: secs(600),
            run: scaling_limits,
        },
        Criterion {
            id: 11,
            name: "determinism",
            budget: secs(120),
            run: determinism,
        },
    ];
    let mut failed = 0;
    for c in criteria
        .iter()
        .filter(|c| filter.is_empty() || filter.contains(&c.id))
    {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok(d) if elapsed <= c.budget => (true, d),
            Ok(d) => (false, format!("{d}; over the {:?} budget", c.budget)),
            Err(d) => (false, d),
        };
        failed += usize::from(!pass);
        println!(
            "[{}] {:>2}. {:<32} {:>7.2}s  {}",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            elapsed.as_secs_f64(),
            detail
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
