//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use homentropy::cli::{run_config, ExperimentConfig, RunArgs};
use homentropy::entropy::{circle_covering_number, greedy_net, greedy_packing, loglog_slope};
use homentropy::groups::{haar_sample, GroupKind, GroupSpec, HomSpace, SubgroupSpec};
use homentropy::invariants::{
    diameter_estimate, diameter_estimate_with, kappa_lower, theta_witness_upper, DiameterMetric,
};
use homentropy::matcore::{Frame, NormSpec};
use homentropy::metrics::{grassmann_dist, quotient_dist_upper, CosetPoint, QuotientOptions};
use homentropy::verify::{
    check_commutator_bound, check_commutator_limit, check_distance_identity, check_exp_lipschitz,
    check_local_injectivity, InjectivityOptions,
};

type Outcome = Result<(bool, String), String>;

fn space(kind: GroupKind, n: usize, sub: SubgroupSpec) -> HomSpace {
    HomSpace::new(GroupSpec::new(kind, n).unwrap(), sub, NormSpec::Operator).unwrap()
}

fn distance_identity() -> Outcome {
    let mut worst = 0.0f64;
    for n in [2, 3] {
        let r = check_distance_identity(n, 1000, 11).map_err(|e| e.to_string())?;
        worst = worst.max(r.worst_violation);
    }
    Ok((worst <= 1e-8, format!("max gap {worst:.2e} (tol 1e-8)")))
}

fn exp_lipschitz() -> Outcome {
    let r = check_exp_lipschitz(3, PI / 4.0, 10_000, 12).map_err(|e| e.to_string())?;
    let (min, max) = (r.stats["min_ratio"], r.stats["max_ratio"]);
    let mut ok = min >= 0.4 && max <= 1.0 + 1e-9;
    let mut detail = format!("pi/4: min {min:.4} max {max:.12}");
    for (label, theta) in [("pi/8", PI / 8.0), ("pi/4", PI / 4.0), ("pi/2", PI / 2.0)] {
        let r = check_exp_lipschitz(3, theta, 10_000, 13).map_err(|e| e.to_string())?;
        ok &= r.passed;
        detail += &format!("; {label}: min {:.4} >= bound {:.4}", r.stats["min_ratio"], r.stats["product_bound"]);
    }
    Ok((ok, detail))
}

fn commutator() -> Outcome {
    let r = check_commutator_bound(3, 0.5, 10_000, 14).map_err(|e| e.to_string())?;
    let l = check_commutator_limit(3, 1e-2, 200, 15).map_err(|e| e.to_string())?;
    Ok((
        r.passed && l.passed,
        format!(
            "bound: worst {:.2e} (tol 1e-8); limit ratio at t=1e-2 in [{:.4}, {:.4}], needs 1 +- 0.1",
            r.worst_violation, l.stats["min_ratio"], l.stats["max_ratio"]
        ),
    ))
}

fn circle_coverings() -> Outcome {
    let s = space(GroupKind::U, 1, SubgroupSpec::Trivial);
    let mut ok = true;
    let mut counts = Vec::new();
    for eps in [PI, PI / 2.0, PI / 4.0, PI / 8.0] {
        let net = greedy_net(&s, eps, 10_000, 10_000, 5).map_err(|e| e.to_string())?;
        ok &= net.count == circle_covering_number(eps);
        counts.push(net.count);
    }
    let packing = greedy_packing(&s, PI / 2.0, 2000, 3).map_err(|e| e.to_string())?;
    ok &= packing.count == 3;
    Ok((ok, format!("net counts {counts:?} (want [1, 2, 4, 8]); packing at pi/2: {}", packing.count)))
}

fn grassmann_closed_form() -> Outcome {
    let s = space(GroupKind::U, 4, SubgroupSpec::Grassmann { k: 2 });
    let opts = QuotientOptions::default();
    let mut worst = 0.0f64;
    for i in 0..50 {
        let u = haar_sample(s.group(), 1000 + 2 * i);
        let v = haar_sample(s.group(), 1001 + 2 * i);
        let fu = Frame::from_columns(&u, 0, 2).map_err(|e| e.to_string())?;
        let fv = Frame::from_columns(&v, 0, 2).map_err(|e| e.to_string())?;
        let closed = grassmann_dist(&fu, &fv, &NormSpec::Operator).map_err(|e| e.to_string())?;
        let p = CosetPoint::new(u, &s).map_err(|e| e.to_string())?;
        let q = CosetPoint::new(v, &s).map_err(|e| e.to_string())?;
        let opt = quotient_dist_upper(&p, &q, &opts).map_err(|e| e.to_string())?;
        worst = worst.max((opt - closed).abs());
    }
    Ok((worst <= 1e-3, format!("worst |optimizer - max angle| {worst:.2e} (tol 1e-3)")))
}

fn dimension_exponent() -> Outcome {
    let grid = [1.2, 0.9, 0.6, 0.45];
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, s, d) in [
        ("G31 real", space(GroupKind::SO, 3, SubgroupSpec::Grassmann { k: 1 }), 2.0),
        ("SO3", space(GroupKind::SO, 3, SubgroupSpec::Trivial), 3.0),
    ] {
        let counts = grid
            .iter()
            .map(|&e| greedy_packing(&s, e, 20_000, 1).map(|r| r.count))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        let slope = loglog_slope(&grid, &counts).map_err(|e| e.to_string())?;
        ok &= (slope - d).abs() <= 0.25 * d;
        detail.push(format!("{name}: counts {counts:?} slope {slope:.3} (d = {d})"));
    }
    Ok((ok, detail.join("; ")))
}

fn local_injectivity() -> Outcome {
    let s = space(GroupKind::U, 4, SubgroupSpec::Grassmann { k: 2 });
    let opts = InjectivityOptions { r: 0.12, lambda: 0.4, anchor_origin: false, override_kappa: false };
    let r = check_local_injectivity(&s, &opts, 1000, 16).map_err(|e| e.to_string())?;
    Ok((r.passed, format!("worst margin {:.3e} over {} pairs (violation iff > 0)", r.worst_violation, r.samples)))
}

fn invariant_table() -> Outcome {
    let g = space(GroupKind::U, 4, SubgroupSpec::Grassmann { k: 2 });
    let kappa = kappa_lower(&g, 64, 17).map_err(|e| e.to_string())?;
    let mut ok = (kappa - 1.0).abs() <= 1e-9;
    let mut detail = format!("kappa_lower(G42) = {kappa:.12}");
    for n in [2, 3, 4] {
        let s = space(GroupKind::U, n, SubgroupSpec::Special);
        let t = theta_witness_upper(&s, 4096, 18).ok_or("no theta witness")?;
        ok &= t.intrinsic <= 2.0 * PI / n as f64 + 1e-6;
        detail += &format!("; theta(U{n}/SU{n}) <= {:.4} (<= {:.4})", t.intrinsic, 2.0 * PI / n as f64);
    }
    let s = space(GroupKind::U, 2, SubgroupSpec::Special);
    let certified = diameter_estimate(&s, 256, 19).map_err(|e| e.to_string())?.sampled;
    let optimized = diameter_estimate_with(&s, 256, 19, DiameterMetric::Optimized).map_err(|e| e.to_string())?.sampled;
    ok &= (certified - PI / 2.0).abs() <= 0.01 && (optimized - PI / 2.0).abs() <= 0.01;
    detail += &format!("; diam(U2/SU2) certified {certified:.4} optimized {optimized:.4} (pi/2 +- 0.01)");
    Ok((ok, detail))
}

fn experiment(task: &str, space_toml: &str, grid: &str, extra: &str) -> String {
    format!("task = \"{task}\"\nseed = 7\nepsilon_grid = {grid}\n{extra}\n[space]\n{space_toml}\n")
}

fn chain() -> Outcome {
    let runs = [
        experiment(
            "cover_curve",
            "group = \"U\"\nn = 1\nsubgroup = \"trivial\"",
            "[1.5707963267948966, 0.7853981633974483, 0.39269908169872414]",
            "",
        ),
        experiment(
            "cover_curve",
            "group = \"SO\"\nn = 3\nsubgroup = \"grassmann\"\nk = 1",
            "[1.2, 0.9, 0.6, 0.45]",
            "",
        ),
        experiment("cover_curve", "group = \"U\"\nn = 2\nsubgroup = \"special\"", "[1.0, 0.5, 0.25]", ""),
        experiment(
            "cover_curve",
            "group = \"SO\"\nn = 3\nsubgroup = \"trivial\"",
            "[1.6, 1.2, 0.8]",
            "[budgets]\nsampler = 5000\nprobe = 2000",
        ),
    ];
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut violations = Vec::new();
    let mut rows = 0;
    for (i, text) in runs.iter().enumerate() {
        let cfg = ExperimentConfig::from_toml(text).map_err(|e| e.to_string())?;
        let args = RunArgs { out_dir: Some(dir.path().join(i.to_string())), ..Default::default() };
        let summary = run_config(&cfg, &args).map_err(|e| e.to_string())?;
        violations.extend(summary.chain_violations);
        rows += cfg.epsilon_grid.len();
    }
    Ok((violations.is_empty(), format!("{} violations over {rows} epsilons in {} runs", violations.len(), runs.len())))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = dir.path().join("run.toml");
    let text = experiment(
        "cover_curve",
        "group = \"SO\"\nn = 3\nsubgroup = \"grassmann\"\nk = 1",
        "[1.2, 0.6]",
        "[budgets]\nsampler = 4000\nprobe = 1000",
    );
    std::fs::write(&cfg, text).map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for (tag, threads) in [("a", "1"), ("b", "0"), ("c", "1")] {
        let out = dir.path().join(tag);
        let status = Command::new(env!("CARGO_BIN_EXE_homentropy"))
            .args(["run", cfg.to_str().unwrap(), "--seed", "99", "--threads", threads, "--out-dir"])
            .arg(&out)
            .status()
            .map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("run {tag} exited with {status}"));
        }
        outputs.push(std::fs::read(Path::new(&out).join("cover_curve.csv")).map_err(|e| e.to_string())?);
    }
    let same = outputs.windows(2).all(|w| w[0] == w[1]);
    Ok((same, format!("3 runs (threads 1, auto, 1), {} CSV bytes each, identical: {same}", outputs[0].len())))
}

fn main() {
    let criteria: [(u32, &str, f64, fn() -> Outcome); 10] = [
        (1, "distance identity", 10.0, distance_identity),
        (2, "exponential bi-Lipschitz constants", 60.0, exp_lipschitz),
        (3, "commutator bound and small-t limit", 60.0, commutator),
        (4, "exact circle coverings", 5.0, circle_coverings),
        (5, "Grassmann closed form", 60.0, grassmann_closed_form),
        (6, "dimension exponent", 300.0, dimension_exponent),
        (7, "local injectivity constants", 120.0, local_injectivity),
        (8, "invariant table", 120.0, invariant_table),
        (9, "packing/covering chain", f64::INFINITY, chain),
        (10, "determinism", f64::INFINITY, determinism),
    ];
    let mut failed = 0;
    for (id, name, limit, f) in criteria {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        let (ok, detail) = match outcome {
            Ok((ok, d)) => (ok && secs < limit, d),
            Err(e) => (false, format!("error: {e}")),
        };
        let budget = if limit.is_finite() { format!(" (limit {limit:.0}s)") } else { String::new() };
        println!("{} criterion {id:>2} {name}: {detail} [{secs:.1}s{budget}]", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
