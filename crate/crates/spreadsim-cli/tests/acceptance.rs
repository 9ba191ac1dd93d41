//! Acceptance suite, CLI side: price-table reproduction, commodity survival
//! levels, schema stability, exit codes, and determinism across thread
//! counts. Everything runs through the real binary.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spreadsim"))
}

fn run_preset(preset: &str, out: &Path, extra: &[&str]) {
    let status = bin()
        .args(["reproduce", "--preset", preset, "--out"])
        .arg(out)
        .args(extra)
        .status()
        .expect("spawning the binary");
    assert!(status.success(), "preset {preset} failed");
}

#[derive(Debug)]
struct Row {
    product: String,
    dependence: String,
    rho: f64,
    mean: f64,
    stderr: f64,
    ci_low: f64,
    ci_high: f64,
}

fn read_table(path: &Path) -> Vec<Row> {
    let text = fs::read_to_string(path).expect("table csv");
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "product,dependence,rho,mean,stderr,ci_low,ci_high"
    );
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            Row {
                product: f[0].into(),
                dependence: f[1].into(),
                rho: f[2].parse().unwrap(),
                mean: f[3].parse().unwrap(),
                stderr: f[4].parse().unwrap(),
                ci_low: f[5].parse().unwrap(),
                ci_high: f[6].parse().unwrap(),
            }
        })
        .collect()
}

type Ref = BTreeMap<(String, String, String), (f64, f64)>;

fn key(product: &str, dep: &str, rho: f64) -> (String, String, String) {
    (product.into(), dep.into(), format!("{rho:.3}"))
}

fn check_table(rows: &[Row], reference: &Ref, label: &str) -> f64 {
    let mut worst_margin = f64::INFINITY;
    for row in rows {
        let (lo, hi) = reference[&key(&row.product, &row.dependence, row.rho)];
        let overlap = row.ci_low <= hi && lo <= row.ci_high;
        assert!(
            overlap,
            "{label} {} {} rho={}: [{:.3}, {:.3}] misses [{lo}, {hi}]",
            row.product, row.dependence, row.rho, row.ci_low, row.ci_high
        );
        worst_margin = worst_margin.min((hi - row.ci_low).min(row.ci_high - lo));
    }
    worst_margin
}

fn by(rows: &[Row], dep: &str, rho: f64) -> BTreeMap<String, f64> {
    rows.iter()
        .filter(|r| r.dependence == dep && (r.rho - rho).abs() < 1e-9)
        .map(|r| (r.product.clone(), r.mean))
        .collect()
}

const PRODUCT_ORDER: [&str; 4] = ["spot", "1mah", "3mah", "6mah"];

#[test]
fn c10_price_table_equal_initial_values() {
    let dir = tempfile::tempdir().unwrap();
    run_preset("table2", dir.path(), &[]);
    let rows = read_table(&dir.path().join("table2.csv"));
    assert_eq!(rows.len(), 20);
    // reference 95% intervals for this preset's configuration
    let mut reference: Ref = BTreeMap::new();
    for (product, dep, rho, lo, hi) in [
        ("spot", "constant", 0.0, 8.39, 8.92),
        ("1mah", "constant", 0.0, 6.54, 6.94),
        ("3mah", "constant", 0.0, 5.45, 5.78),
        ("6mah", "constant", 0.0, 5.33, 5.69),
        ("spot", "mb", 0.3, 8.44, 8.96),
        ("1mah", "mb", 0.3, 6.56, 6.94),
        ("3mah", "mb", 0.3, 5.41, 5.70),
        ("6mah", "mb", 0.3, 5.26, 5.55),
        ("spot", "mb", 0.6, 7.87, 8.37),
        ("1mah", "mb", 0.6, 5.96, 6.30),
        ("3mah", "mb", 0.6, 4.79, 5.03),
        ("6mah", "mb", 0.6, 4.65, 4.87),
        ("spot", "mb", 0.9, 7.29, 7.75),
        ("1mah", "mb", 0.9, 5.00, 5.29),
        ("3mah", "mb", 0.9, 3.27, 3.41),
        ("6mah", "mb", 0.9, 3.02, 3.15),
        ("spot", "benchmark", 0.275, 7.69, 8.19),
        ("1mah", "benchmark", 0.275, 5.80, 6.16),
        ("3mah", "benchmark", 0.275, 4.72, 5.00),
        ("6mah", "benchmark", 0.275, 4.60, 4.88),
    ] {
        reference.insert(key(product, dep, rho), (lo, hi));
    }
    let margin = check_table(&rows, &reference, "table2");
    // qualitative gates: price nonincreasing from spot to 6mah in every
    // dependence model (within Monte Carlo error) ...
    for (dep, rho) in [
        ("constant", 0.0),
        ("mb", 0.3),
        ("mb", 0.6),
        ("mb", 0.9),
        ("benchmark", 0.275),
    ] {
        let col = by(&rows, dep, rho);
        let se_slack: f64 = 3.0
            * rows
                .iter()
                .filter(|r| r.dependence == dep)
                .map(|r| r.stderr)
                .fold(0.0, f64::max);
        for w in PRODUCT_ORDER.windows(2) {
            assert!(
                col[w[1]] <= col[w[0]] + se_slack,
                "{dep} rho={rho}: {} -> {} increases",
                w[0],
                w[1]
            );
        }
    }
    // ... and the strong-coupling column sits below the uncoupled one
    let rho0 = by(&rows, "constant", 0.0);
    let rho9 = by(&rows, "mb", 0.9);
    for p in PRODUCT_ORDER {
        assert!(rho9[p] < rho0[p], "mb 0.9 not below rho 0 for {p}");
    }
    println!("criterion 10 PASS: 20/20 interval overlaps (worst margin {margin:.3}), maturity ordering and coupling ordering hold");
}

#[test]
fn c11_price_table_shifted_initial_values() {
    let dir = tempfile::tempdir().unwrap();
    run_preset("table3", dir.path(), &[]);
    let rows = read_table(&dir.path().join("table3.csv"));
    assert_eq!(rows.len(), 20);
    let mut reference: Ref = BTreeMap::new();
    for (product, dep, rho, lo, hi) in [
        ("spot", "constant", 0.0, 2.52, 2.83),
        ("1mah", "constant", 0.0, 1.24, 1.42),
        ("3mah", "constant", 0.0, 0.67, 0.79),
        ("6mah", "constant", 0.0, 0.63, 0.74),
        ("spot", "mb", 0.3, 2.92, 3.25),
        ("1mah", "mb", 0.3, 1.57, 1.77),
        ("3mah", "mb", 0.3, 0.90, 1.02),
        ("6mah", "mb", 0.3, 0.82, 0.94),
        ("spot", "mb", 0.6, 3.03, 3.36),
        ("1mah", "mb", 0.6, 1.72, 1.92),
        ("3mah", "mb", 0.6, 1.03, 1.15),
        ("6mah", "mb", 0.6, 0.92, 1.03),
        ("spot", "mb", 0.9, 3.13, 3.48),
        ("1mah", "mb", 0.9, 1.74, 1.98),
        ("3mah", "mb", 0.9, 0.81, 0.90),
        ("6mah", "mb", 0.9, 0.67, 0.74),
        ("spot", "benchmark", 0.275, 2.09, 2.37),
        ("1mah", "benchmark", 0.275, 0.88, 1.02),
        ("3mah", "benchmark", 0.275, 0.37, 0.45),
        ("6mah", "benchmark", 0.275, 0.33, 0.41),
    ] {
        reference.insert(key(product, dep, rho), (lo, hi));
    }
    let margin = check_table(&rows, &reference, "table3");
    // reversed ordering: with shifted initial values the barrier coupling
    // raises the option value above the uncorrelated and benchmark cases
    let rho0 = by(&rows, "constant", 0.0);
    let bench = by(&rows, "benchmark", 0.275);
    for rho in [0.3, 0.6, 0.9] {
        let mb = by(&rows, "mb", rho);
        for p in PRODUCT_ORDER {
            assert!(
                mb[p] > bench[p],
                "mb rho={rho} not above benchmark for {p}"
            );
            assert!(mb[p] > rho0[p], "mb rho={rho} not above rho=0 for {p}");
        }
    }
    println!("criterion 11 PASS: 20/20 interval overlaps (worst margin {margin:.3}), barrier coupling raises prices above both references");
}

#[test]
fn c12_spread_survival_levels() {
    let dir = tempfile::tempdir().unwrap();
    run_preset("fig7", dir.path(), &[]);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("fig7_summary.json")).unwrap())
            .unwrap();
    let at0 = &summary["estimates"]["survival_at_0"];
    let mb3 = at0["mb"]["3mah"].as_f64().unwrap();
    let mb6 = at0["mb"]["6mah"].as_f64().unwrap();
    let mb_spot = at0["mb"]["spot"].as_f64().unwrap();
    let b3 = at0["benchmark"]["3mah"].as_f64().unwrap();
    let b6 = at0["benchmark"]["6mah"].as_f64().unwrap();
    let b_spot = at0["benchmark"]["spot"].as_f64().unwrap();
    assert!((mb3 - 0.7).abs() <= 0.05, "mb 3mah {mb3}");
    assert!((mb6 - 0.7).abs() <= 0.05, "mb 6mah {mb6}");
    assert!((mb_spot - 0.5).abs() <= 0.05, "mb spot {mb_spot}");
    assert!((b3 - 0.5).abs() <= 0.05, "benchmark 3mah {b3}");
    assert!((b6 - 0.5).abs() <= 0.05, "benchmark 6mah {b6}");
    assert!((b_spot - 0.5).abs() <= 0.05, "benchmark spot {b_spot}");
    println!(
        "criterion 12 PASS: survival at 0 — mb 3mah {mb3:.3}, 6mah {mb6:.3} (0.70 +- 0.05); spot {mb_spot:.3}, benchmark {b_spot:.3}/{b3:.3}/{b6:.3} (0.50 +- 0.05)"
    );
}

/// All artifact bytes of a preset run, with the summary's runtime zeroed.
fn canonical_outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        let name = entry.file_name().into_string().unwrap();
        let bytes = if name.ends_with("_summary.json") {
            let mut v: serde_json::Value =
                serde_json::from_str(&fs::read_to_string(entry.path()).unwrap()).unwrap();
            v["runtime_seconds"] = serde_json::Value::from(0.0);
            serde_json::to_vec_pretty(&v).unwrap()
        } else {
            fs::read(entry.path()).unwrap()
        };
        out.insert(name, bytes);
    }
    out
}

#[test]
fn c13_determinism_across_thread_counts() {
    let args = ["--paths", "400", "--seed", "9", "--dt", "0.01"];
    let mut snapshots = Vec::new();
    for threads in ["1", "2", "4"] {
        let dir = tempfile::tempdir().unwrap();
        run_preset("fig3", dir.path(), &[&args[..], &["--threads", threads]].concat());
        snapshots.push(canonical_outputs(dir.path()));
    }
    // and a plain rerun without a thread cap
    let dir = tempfile::tempdir().unwrap();
    run_preset("fig3", dir.path(), &args);
    snapshots.push(canonical_outputs(dir.path()));
    for s in &snapshots[1..] {
        assert_eq!(
            snapshots[0].keys().collect::<Vec<_>>(),
            s.keys().collect::<Vec<_>>()
        );
        for (name, bytes) in s {
            assert_eq!(
                &snapshots[0][name], bytes,
                "output {name} differs across runs/threads"
            );
        }
    }
    println!(
        "criterion 13 PASS: {} artifacts byte-identical across --threads 1/2/4 and rerun",
        snapshots[0].len()
    );
}

#[test]
fn fig3_budget_zero_copula_is_gaussian() {
    // with no reflections the pair is Gaussian at correlation -0.9, so the
    // empirical copula cells must match the bivariate normal within 0.02
    use spreadsim::gauss::{bvn_cdf, norm_cdf_inv, Correlation, Probability};
    let dir = tempfile::tempdir().unwrap();
    run_preset("fig3", dir.path(), &[]);
    let text = fs::read_to_string(dir.path().join("fig3_n0.csv")).unwrap();
    let rho = Correlation::new(-0.9).unwrap();
    let mut worst: f64 = 0.0;
    for line in text.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        let (u, v, value) = (f[0], f[1], f[2]);
        let qu = if u >= 1.0 {
            f64::INFINITY
        } else {
            norm_cdf_inv(Probability::new(u).unwrap()).unwrap()
        };
        let qv = if v >= 1.0 {
            f64::INFINITY
        } else {
            norm_cdf_inv(Probability::new(v).unwrap()).unwrap()
        };
        let want = bvn_cdf(qu, qv, rho).unwrap().get();
        worst = worst.max((value - want).abs());
    }
    assert!(worst < 0.02, "worst copula cell gap {worst}");
    println!("fig3 n=0 empirical copula matches the Gaussian copula, worst cell gap {worst:.4}");
}

#[test]
fn csv_headers_are_stable() {
    let dir = tempfile::tempdir().unwrap();
    run_preset("fig8", dir.path(), &["--paths", "200", "--dt", "0.01"]);
    let survival = fs::read_to_string(dir.path().join("fig8_t1.csv")).unwrap();
    assert!(survival.starts_with("x,analytic,empirical,band_low,band_high\n"));

    run_preset("fig1", dir.path(), &[]);
    let surface = fs::read_to_string(dir.path().join("fig1_copula.csv")).unwrap();
    assert!(surface.starts_with("u,v,value\n"));

    run_preset("fig6", dir.path(), &["--paths", "3", "--dt", "0.01"]);
    let traj = fs::read_to_string(dir.path().join("fig6_n0.csv")).unwrap();
    assert!(traj.starts_with("t,p00,p01,p02\n"));
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();
    // unknown preset -> configuration error (2)
    let status = bin()
        .args(["reproduce", "--preset", "nope", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&status.stderr).contains("unknown preset"));

    // malformed config -> 2, with a field-precise message
    let cfg = dir.path().join("bad.json");
    fs::write(
        &cfg,
        r#"{"model": {"kind": "multi_barrier", "nu": 0.5, "eta": 0.5, "rho": 0.9},
           "grid": {"t_end": 1.0, "dt": 0.001}, "n_paths": 10, "seed": 1}"#,
    )
    .unwrap();
    let out = bin()
        .args(["survival", "--config"])
        .arg(&cfg)
        .args(["--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nu < eta"));

    // survival with a commodity model -> 2
    let cfg = dir.path().join("wrongkind.json");
    fs::write(
        &cfg,
        r#"{"model": {"kind": "commodity",
            "elec": {"sigma_s": 0.1, "alpha_s": 1.0, "sigma_l": 0.1},
            "coal": {"sigma_s": 0.1, "alpha_s": 1.0, "sigma_l": 0.1},
            "f0_elec": 100.0, "f0_coal": 100.0, "heat_rate": 1.0,
            "dependence": {"kind": "constant", "rho": 0.0},
            "product": "spot"},
           "grid": {"t_end": 0.5, "dt": 0.005}, "n_paths": 10, "seed": 1}"#,
    )
    .unwrap();
    let out = bin()
        .args(["survival", "--config"])
        .arg(&cfg)
        .args(["--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn price_json_is_reproducible_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("price.json");
    fs::write(
        &cfg,
        r#"{"model": {"kind": "commodity",
            "elec": {"sigma_s": 0.972925, "alpha_s": 17.0363, "sigma_l": 0.102555},
            "coal": {"sigma_s": 0.112134, "alpha_s": 2.07832, "sigma_l": 0.092602},
            "f0_elec": 100.0, "f0_coal": 100.0, "heat_rate": 1.0,
            "dependence": {"kind": "multi_barrier", "nu": 0.0, "eta": 0.5, "rho": 0.9},
            "product": {"months": 1, "resolution": 30}},
           "grid": {"t_end": 0.25, "dt": 0.00125}, "n_paths": 500, "seed": 4}"#,
    )
    .unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out_dir = tempfile::tempdir().unwrap();
        let out = bin()
            .args(["price", "--config"])
            .arg(&cfg)
            .args(["--out"])
            .arg(out_dir.path())
            .args(["--threads", threads])
            .output()
            .unwrap();
        assert!(out.status.success());
        outputs.push(fs::read(out_dir.path().join("price.json")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let parsed: serde_json::Value = serde_json::from_slice(&outputs[0]).unwrap();
    assert!(parsed["mean"].as_f64().unwrap() > 0.0);
    assert_eq!(parsed["n_paths"].as_u64(), Some(500));
}

#[test]
fn degenerate_price_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("degenerate.json");
    fs::write(
        &cfg,
        r#"{"model": {"kind": "commodity",
            "elec": {"sigma_s": 0.0, "alpha_s": 1.0, "sigma_l": 0.0},
            "coal": {"sigma_s": 0.0, "alpha_s": 1.0, "sigma_l": 0.0},
            "f0_elec": 100.0, "f0_coal": 120.0, "heat_rate": 1.0,
            "dependence": {"kind": "constant", "rho": 0.0},
            "product": "spot"},
           "grid": {"t_end": 0.5, "dt": 0.005}, "n_paths": 50, "seed": 1}"#,
    )
    .unwrap();
    let out = bin()
        .args(["price", "--config"])
        .arg(&cfg)
        .args(["--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let parsed: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("price.json")).unwrap()).unwrap();
    assert_eq!(parsed["mean"].as_f64(), Some(0.0));
    assert_eq!(parsed["stderr"].as_f64(), Some(0.0));
}

#[test]
fn survival_analytic_column_presence_follows_model() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("local.json");
    fs::write(
        &cfg,
        r#"{"model": {"kind": "local", "nu": 0.0, "eta": 0.5, "rho_min": -0.9, "rho_max": 0.9},
           "grid": {"t_end": 1.0, "dt": 0.01}, "n_paths": 4000, "seed": 2,
           "xs": [0.25]}"#,
    )
    .unwrap();
    let out = bin()
        .args(["survival", "--config"])
        .arg(&cfg)
        .args(["--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("survival.csv")).unwrap();
    let line = text.lines().nth(1).unwrap();
    let fields: Vec<&str> = line.split(',').collect();
    assert!(fields[1].is_empty(), "local model must have no analytic column");
    // the local-model bump at 0.25 clears one half with its band
    let band_low: f64 = fields[3].parse().unwrap();
    assert!(band_low > 0.5, "band low {band_low} does not exclude 0.5");

    let cfg = dir.path().join("mb.json");
    fs::write(
        &cfg,
        r#"{"model": {"kind": "multi_barrier", "nu": 0.0, "eta": 0.5, "rho": 0.9, "reflections": 0},
           "grid": {"t_end": 1.0, "dt": 0.01}, "n_paths": 100, "seed": 2,
           "xs": [0.0]}"#,
    )
    .unwrap();
    let out = bin()
        .args(["survival", "--config"])
        .arg(&cfg)
        .args(["--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("survival.csv")).unwrap();
    let line = text.lines().nth(1).unwrap();
    let analytic: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(analytic, 0.5, "n = 0 at x = 0 is exactly one half");
}
