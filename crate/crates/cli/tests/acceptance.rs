//! Acceptance criteria 1-10. Prints one line per criterion and exits nonzero
//! if any fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use lrperc::electric::{conductance_to_boundary, effective_conductance, escape_probability_mc, series_chain_conductance, Network, TerminalPair};
use lrperc::estimators::{
    bad_edge_fraction, conductance_decay_experiment, delta_eff_estimate, edges_above_zero_experiment,
    expected_edges_above_zero, long_edge_ladder, long_edge_probability, BadEdgeParams, ConductanceLaw, DecaySource,
};
use lrperc::mc::{derive_seed, ols_slope, seeded_rng, Exec, SimRng};
use lrperc::model::{ConnectionFunction, KernelSpec, ModelConfig};
use lrperc::projection::{project_to_znn, SpatialEdge, SpatialNetwork, SpatialVertex};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check, Duration);

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn unit_line(m: i64) -> Network {
    Network::from_edges([], (-m..m).map(|z| (z, z + 1, 1.0))).unwrap()
}

fn criterion_1() -> Check {
    let line = unit_line(512);
    for m in 1..=512 {
        let c = conductance_to_boundary(&line, 0, m).map_err(|e| e.to_string())?;
        ensure(c == 2.0 / m as f64, format!("m={m}: {c} != {}", 2.0 / m as f64))?;
    }
    let two = |edges: &[(i64, i64, f64)], s, t| {
        effective_conductance(&Network::from_edges([], edges.iter().copied()).unwrap(), &TerminalPair::single(s, t).unwrap())
            .unwrap()
    };
    let series = [0.7, 3.0, 11.0, 0.02];
    let chain: Vec<(i64, i64, f64)> = series.iter().enumerate().map(|(i, &c)| (i as i64, i as i64 + 1, c)).collect();
    let want = 1.0 / series.iter().map(|c| 1.0 / c).sum::<f64>();
    let fixtures = [
        ("series", two(&chain, 0, 4), want),
        ("series_chain_conductance", series_chain_conductance(&series).unwrap(), want),
        ("parallel", two(&[(0, 1, 0.5), (0, 1, 2.25), (0, 1, 7.0)], 0, 1), 9.75),
        ("triangle", two(&[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)], 0, 1), 1.5),
        ("weighted triangle", two(&[(0, 1, 2.0), (1, 2, 3.0), (0, 2, 5.0)], 0, 1), 2.0 + 15.0 / 8.0),
    ];
    for (name, got, want) in fixtures {
        ensure(rel(got, want) < 1e-12, format!("{name}: {got} vs {want}"))?;
    }
    Ok("2/m exact for m = 1..512; fixtures within 1e-12".into())
}

/// Random connected network on `0..n`: spanning tree plus extra edges, with
/// conductances log-uniform on `[lo, hi]`.
fn random_network(rng: &mut SimRng, n: usize, lo: f64, hi: f64) -> Vec<(i64, i64, f64)> {
    let mut edges = Vec::new();
    for i in 1..n {
        let parent = rng.random_range(0..i);
        edges.push((parent as i64, i as i64, rng.random_range(lo.ln()..hi.ln()).exp()));
    }
    for _ in 0..rng.random_range(0..=2 * n) {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a != b {
            edges.push((a as i64, b as i64, rng.random_range(lo.ln()..hi.ln()).exp()));
        }
    }
    edges
}

/// Exact Dirichlet solve in rational arithmetic, potential 1 on `s`, 0 on `t`.
#[allow(clippy::needless_range_loop)]
fn exact_oracle(n: usize, edges: &[(i64, i64, f64)], s: usize, t: usize) -> f64 {
    let q = |x: f64| BigRational::from_float(x).unwrap();
    let mut lap = vec![vec![BigRational::zero(); n]; n];
    for &(a, b, c) in edges {
        let (a, b, c) = (a as usize, b as usize, q(c));
        lap[a][a] += &c;
        lap[b][b] += &c;
        lap[a][b] -= &c;
        lap[b][a] -= &c;
    }
    let free: Vec<usize> = (0..n).filter(|&i| i != s && i != t).collect();
    let k = free.len();
    let mut m: Vec<Vec<BigRational>> = free
        .iter()
        .map(|&i| {
            let mut row: Vec<BigRational> = free.iter().map(|&j| lap[i][j].clone()).collect();
            row.push(-lap[i][s].clone());
            row
        })
        .collect();
    for col in 0..k {
        let piv = (col..k).find(|&r| !m[r][col].is_zero()).expect("nonsingular");
        m.swap(col, piv);
        for r in 0..k {
            if r != col && !m[r][col].is_zero() {
                let f = &m[r][col] / &m[col][col];
                for c in col..=k {
                    let d = &f * &m[col][c];
                    m[r][c] -= d;
                }
            }
        }
    }
    let mut v = vec![BigRational::zero(); n];
    v[s] = q(1.0);
    for (r, &i) in free.iter().enumerate() {
        v[i] = &m[r][k] / &m[r][r];
    }
    let mut current = BigRational::zero();
    for j in 0..n {
        current += &lap[s][j] * &v[j];
    }
    current.to_f64().unwrap()
}

fn criterion_2() -> Check {
    let mut rng = seeded_rng(2024);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(2..=12);
        let edges = random_network(&mut rng, n, 1e-3, 1e3);
        let s = rng.random_range(0..n);
        let t = (s + rng.random_range(1..n)) % n;
        let net = Network::from_edges(0..n as i64, edges.iter().copied()).unwrap();
        let got = effective_conductance(&net, &TerminalPair::single(s as i64, t as i64).unwrap()).unwrap();
        let want = exact_oracle(n, &edges, s, t);
        worst = worst.max(rel(got, want));
        ensure(rel(got, want) < 1e-10, format!("n={n}: {got} vs exact {want}"))?;
    }
    Ok(format!("50 networks, worst relative error {worst:.1e}"))
}

fn criterion_3() -> Check {
    let radii: Vec<i64> = (4..=10).map(|k| 1i64 << k).collect();
    let mut parts = Vec::new();
    for (name, law) in [
        ("exponential(1)", ConductanceLaw::Exponential { rate: 1.0 }),
        ("pareto(0.5)", ConductanceLaw::Pareto { tail_index: 0.5, scale: 1.0 }),
    ] {
        let fit = conductance_decay_experiment(&DecaySource::Law(law), &radii, 1000, 3, Exec::default())
            .map_err(|e| e.to_string())?;
        let (slope, se) = (fit.fitted_slope.ok_or("undefined slope")?, fit.slope_stderr.ok_or("no stderr")?);
        ensure(slope <= -0.85 && se < 0.05, format!("{name}: slope {slope} ± {se}"))?;
        parts.push(format!("{name} slope {slope:.3} ± {se:.4}"));
    }
    Ok(parts.join("; "))
}

fn criterion_4() -> Check {
    let law = ConductanceLaw::Exponential { rate: 1.0 };
    let params = BadEdgeParams::for_law(&law, std::f64::consts::LN_2).map_err(|e| e.to_string())?;
    let sampler = law.sampler().map_err(|e| e.to_string())?;
    let mut rng = seeded_rng(4);
    let xs: Vec<f64> = (0..100_000).map(|_| sampler.sample(&mut rng)).collect();
    let f = *bad_edge_fraction(&xs, &params).map_err(|e| e.to_string())?.last().unwrap();
    ensure((f - 0.5).abs() < 0.01, format!("fraction {f}"))?;
    Ok(format!("prefix fraction {f:.4} at n = 1e5"))
}

fn criterion_5() -> Check {
    let scales = [1e2, 1e3, 1e4, 1e5, 1e6];
    let kernel = KernelSpec::Constant { value: 1.0 };
    let mut parts = Vec::new();
    for delta in [2.5, 3.0, 4.0] {
        let e = delta_eff_estimate(&kernel, &ConnectionFunction::Polynomial { p: 1.0, delta }, &scales, 64)
            .map_err(|e| e.to_string())?;
        ensure((e.estimate - delta).abs() <= 0.05 && !e.divergent, format!("delta {delta}: {}", e.estimate))?;
        parts.push(format!("{delta} -> {:.4}", e.estimate));
    }
    let e = delta_eff_estimate(&kernel, &ConnectionFunction::Indicator { radius: 10.0 }, &scales, 64)
        .map_err(|e| e.to_string())?;
    ensure(e.divergent, format!("indicator not divergent: {e:?}"))?;
    parts.push("indicator divergent".into());
    Ok(parts.join(", "))
}

fn criterion_6() -> Check {
    let cfg = ModelConfig::homogeneous(1000, 1.0, 3.0, 0);
    let run = edges_above_zero_experiment(&cfg, 10_000, 6, Exec::default()).map_err(|e| e.to_string())?;
    let exact = expected_edges_above_zero(&cfg).ok_or("no analytic series")?;
    let full = std::f64::consts::PI.powi(2) / 6.0;
    ensure(
        (run.count.mean - exact).abs() <= 3.0 * run.count.stderr,
        format!("delta 3: {} ± {} vs {exact}", run.count.mean, run.count.stderr),
    )?;
    ensure(exact <= full && full - exact < 1e-2, format!("truncated series {exact} vs pi^2/6"))?;

    let ns = [100i64, 1000, 10_000];
    let mut mc_logs = Vec::new();
    let mut exact_logs = Vec::new();
    for &n in &ns {
        let cfg = ModelConfig::homogeneous(n, 1.0, 1.5, 0);
        let run = edges_above_zero_experiment(&cfg, 200, derive_seed(6, n as u64), Exec::default())
            .map_err(|e| e.to_string())?;
        mc_logs.push(run.count.mean.ln());
        exact_logs.push(expected_edges_above_zero(&cfg).ok_or("no analytic series")?.ln());
    }
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let mc = ols_slope(&xs, &mc_logs).ok_or("degenerate fit")?;
    let an = ols_slope(&xs, &exact_logs).ok_or("degenerate fit")?;
    ensure((mc - 0.5).abs() <= 0.1 && (an - 0.5).abs() <= 0.1, format!("delta 1.5 slopes: mc {mc}, series {an}"))?;
    Ok(format!(
        "delta 3: {:.4} ± {:.4} vs series {exact:.4} (full line {full:.4}); delta 1.5 slope mc {mc:.3}, series {an:.3}",
        run.count.mean, run.count.stderr
    ))
}

fn criterion_7() -> Check {
    let r = 10_000u64;
    let tol = 4.0 / (r as f64).sqrt();
    let cfg = ModelConfig::homogeneous(128, 1.0, 2.5, 0);
    let mut worst = 0.0f64;
    for k in 0..=6 {
        let est = long_edge_probability(&cfg, k, r, derive_seed(7, k as u64), Exec::default()).map_err(|e| e.to_string())?;
        let exact = est.exact.ok_or("no exact value")?;
        let dev = (est.probability.mean - exact).abs();
        worst = worst.max(dev);
        ensure(dev < tol, format!("k={k}: {} vs {exact}", est.probability.mean))?;
    }
    let weighted = ModelConfig {
        window_radius: 128,
        kernel: KernelSpec::Product { gamma: 0.25 },
        connection: ConnectionFunction::Polynomial { p: 1.0, delta: 3.0 },
        backbone: true,
        long_edge_conductance: 1.0,
        seed: 0,
    };
    let ladder = long_edge_ladder(&weighted, &[1, 2, 3, 4, 5, 6], r, 77, Exec::default()).map_err(|e| e.to_string())?;
    let (theta, se) = (ladder.theta.ok_or("theta undefined")?, ladder.theta_stderr.ok_or("no stderr")?);
    ensure(theta - 1.96 * se > 0.0, format!("theta {theta} ± {se}"))?;
    Ok(format!("worst |MC - exact| {worst:.4} < {tol}; weighted theta {theta:.3} ± {se:.3}"))
}

fn criterion_8() -> Check {
    let mut rng = seeded_rng(8);
    for case in 0..200 {
        let n = rng.random_range(2..=15usize);
        let mut ticks: Vec<i32> = Vec::new();
        while ticks.len() < n {
            let t = rng.random_range(-4000..4000);
            if !ticks.contains(&t) {
                ticks.push(t);
            }
        }
        let vertices: Vec<SpatialVertex> =
            ticks.iter().enumerate().map(|(i, &t)| SpatialVertex { id: i as i64, position: t as f64 / 500.0 }).collect();
        let edges: Vec<SpatialEdge> = (0..rng.random_range(1..3 * n))
            .filter_map(|_| {
                let (a, b) = (rng.random_range(0..n) as i64, rng.random_range(0..n) as i64);
                let conductance = rng.random_range(0.05..20.0);
                (a != b).then_some(SpatialEdge { a, b, conductance })
            })
            .collect();
        let g = SpatialNetwork::new(vertices, edges).map_err(|e| e.to_string())?;
        let z = g.vertices()[rng.random_range(0..n)].position.floor() as i64;
        let m = rng.random_range(1..6i64);
        let sink: Vec<i64> =
            g.vertices().iter().filter(|v| (v.position.floor() as i64 - z).abs() >= m).map(|v| v.id).collect();
        if sink.is_empty() {
            continue;
        }
        let original =
            effective_conductance(&g.to_network(), &TerminalPair::new(g.class_of(z), sink).unwrap()).map_err(|e| e.to_string())?;
        let p = project_to_znn(&g);
        let projected_sink: Vec<i64> = (p.start..=p.end()).filter(|w| (w - z).abs() >= m).collect();
        let projected = effective_conductance(&p.to_network(), &TerminalPair::new(vec![z], projected_sink).unwrap())
            .map_err(|e| e.to_string())?;
        ensure(projected >= original - 1e-9, format!("case {case}: {projected} < {original}"))?;
    }
    let c = 0.8;
    let g = SpatialNetwork::new(
        vec![SpatialVertex { id: 0, position: 0.3 }, SpatialVertex { id: 1, position: 2.7 }],
        vec![SpatialEdge { a: 0, b: 1, conductance: c }],
    )
    .unwrap();
    let edges = project_to_znn(&g).to_network().labelled_edges();
    ensure(edges == vec![(0, 1, 3.0 * c), (1, 2, 3.0 * c)], format!("worked example gave {edges:?}"))?;
    Ok("200 spatial networks dominated; 0.3 -> 2.7 gives (0,1),(1,2) at 3c".into())
}

fn criterion_9() -> Check {
    let mut rng = seeded_rng(9);
    let mut worst = 0.0f64;
    for case in 0..20 {
        let n = rng.random_range(3..=12);
        let edges = random_network(&mut rng, n, 0.1, 10.0);
        let net = Network::from_edges(0..n as i64, edges.iter().copied()).unwrap();
        let pair = TerminalPair::single(0, n as i64 - 1).unwrap();
        let exact = effective_conductance(&net, &pair).map_err(|e| e.to_string())?;
        let mc = escape_probability_mc(&net, &pair, 100_000, 1_000_000, derive_seed(9, case), Exec::default())
            .map_err(|e| e.to_string())?;
        ensure(mc.censored == 0, format!("case {case}: censored walks"))?;
        let z = (mc.conductance.mean - exact).abs() / mc.conductance.stderr;
        worst = worst.max(z);
        ensure(z <= 4.0, format!("case {case}: {} ± {} vs {exact}", mc.conductance.mean, mc.conductance.stderr))?;
    }
    Ok(format!("20 networks, largest deviation {worst:.2} standard errors"))
}

fn criterion_10() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = dir.path().join("c.toml");
    std::fs::write(
        &config,
        "master_seed = 99\n[model]\nwindow_radius = 64\nkernel = { type = \"product\", gamma = 0.3 }\n\
         connection = { type = \"polynomial\", p = 0.8, delta = 2.6 }\nbackbone = true\n\
         [estimator]\nradii = [4, 8, 16, 32]\nks = [1, 2, 3, 4, 5]\nscales = [1e2, 1e3, 1e4]\n",
    )
    .map_err(|e| e.to_string())?;
    let run = |cmd: &str, workers: &str, out: &Path| -> Result<Vec<u8>, String> {
        let status = Command::new(env!("CARGO_BIN_EXE_lrperc"))
            .args([cmd, "--config", config.to_str().unwrap(), "--workers", workers, "--replicas", "200"])
            .arg("--out")
            .arg(out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(matches!(status.status.code(), Some(0 | 3)), format!("{cmd}: {}", String::from_utf8_lossy(&status.stderr)))?;
        std::fs::read(out).map_err(|e| e.to_string())
    };
    let commands = ["sample", "conductance", "decay", "delta-eff", "long-edges", "edges-above-zero", "verdict"];
    for cmd in commands {
        let a = run(cmd, "1", &dir.path().join(format!("{cmd}-1a")))?;
        let b = run(cmd, "4", &dir.path().join(format!("{cmd}-4")))?;
        let c = run(cmd, "1", &dir.path().join(format!("{cmd}-1b")))?;
        ensure(a == b && a == c, format!("{cmd}: outputs differ"))?;
    }
    Ok(format!("{} commands byte-identical across workers 1 and 4", commands.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 exact conductance laws", criterion_1, Duration::from_secs(1)),
        ("2 solver oracle equivalence", criterion_2, Duration::from_secs(5)),
        ("3 conductance decay", criterion_3, Duration::from_secs(120)),
        ("4 bad-edge fraction", criterion_4, Duration::from_secs(1)),
        ("5 delta_eff recovery", criterion_5, Duration::from_secs(10)),
        ("6 edges above 0+", criterion_6, Duration::from_secs(120)),
        ("7 long-edge probabilities", criterion_7, Duration::from_secs(300)),
        ("8 projection domination", criterion_8, Duration::from_secs(10)),
        ("9 walk/conductance duality", criterion_9, Duration::from_secs(120)),
        ("10 determinism", criterion_10, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (name, check, limit) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let (ok, detail) = match result {
            Ok(d) if elapsed <= limit => (true, d),
            Ok(d) => (false, format!("{d}; over time limit")),
            Err(e) => (false, e),
        };
        failed += !ok as u32;
        println!(
            "[{}] criterion {name}: {detail} ({:.2}s, limit {}s)",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 10 criteria passed");
}
