//! Experiment runner: parses a JSON config, dispatches to the library, and
//! writes CSV/JSON reports with CI-friendly exit codes.
//!
//! Exit codes: 0 = all checks passed, 1 = an invariant or tolerance was
//! violated, 2 = configuration/schema errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;
use serde::Deserialize;
use serde_json::json;

use harmlab::measure::{
    self, ball_measure, ball_measure_closed, ball_measure_two_sided, doubling_scan,
    degree_classify, PolyMeasure,
};
use harmlab::metric::{separation_experiment, ConeSearchConfig, LpOptions};
use harmlab::particle::discretize;
use harmlab::poly::{harmonic_basis, lewy_polynomial, MultiIndex, Poly};
use harmlab::sphere::{build_rule, constants, derivative_bound_check, sup_norm_sphere};

#[derive(Parser)]
#[command(name = "harmlab", about = "Harmonic-measure laboratory experiment runner")]
struct Cli {
    /// Path to the JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for reports (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Rayon thread count (results are thread-count independent).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Config {
    command: String,
    #[serde(default)]
    polynomial: Option<serde_json::Value>,
    #[serde(default)]
    polynomial_text: Option<String>,
    #[serde(default)]
    dim: Option<usize>,
    #[serde(default)]
    out: Option<PathBuf>,
    #[serde(default = "default_seed")]
    seed: u64,
    #[serde(default)]
    rule_level: Option<u32>,
    #[serde(default)]
    radii: Option<Vec<f64>>,
    #[serde(default)]
    tau: Option<f64>,
    #[serde(default)]
    r_min: Option<f64>,
    #[serde(default)]
    r_max: Option<f64>,
    #[serde(default)]
    steps: Option<usize>,
    #[serde(default)]
    k: Option<u32>,
    #[serde(default)]
    restarts: Option<usize>,
    #[serde(default)]
    trials: Option<usize>,
    #[serde(default)]
    k_max: Option<u32>,
    #[serde(default)]
    grid_level: Option<u32>,
    #[serde(default)]
    r: Option<f64>,
}

fn default_seed() -> u64 {
    7
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let raw = match std::fs::read_to_string(&cli.config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: cannot read config {}: {e}", cli.config.display());
            return ExitCode::from(2);
        }
    };
    let mut config: Config = match serde_json::from_str(&raw) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: config schema: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = cli.out {
        config.out = Some(out);
    }
    let out_dir = config.out.clone().unwrap_or_else(|| PathBuf::from("."));
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!("error: cannot create output directory: {e}");
        return ExitCode::from(2);
    }
    match run(&config, &out_dir) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn parse_polynomial(config: &Config) -> anyhow::Result<Poly> {
    if let Some(v) = &config.polynomial {
        return Ok(serde_json::from_value(v.clone())?);
    }
    if let Some(text) = &config.polynomial_text {
        let dim = config.dim.unwrap_or(3);
        return Ok(Poly::parse(text, dim)?);
    }
    anyhow::bail!("config needs `polynomial` (JSON) or `polynomial_text`")
}

fn timestamp() -> String {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    format!("{secs}")
}

/// Reports carry the timestamp in one isolated header field/line so that
/// byte-identity modulo that line holds across runs.
fn write_json(path: &Path, body: serde_json::Value) -> anyhow::Result<()> {
    let wrapped = json!({
        "generated_at": timestamp(),
        "report": body,
    });
    std::fs::write(path, serde_json::to_string_pretty(&wrapped)?)?;
    Ok(())
}

fn write_csv(path: &Path, body: &str) -> anyhow::Result<()> {
    let content = format!("# generated_at {}\n{}", timestamp(), body);
    std::fs::write(path, content)?;
    Ok(())
}

fn run(config: &Config, out_dir: &Path) -> anyhow::Result<bool> {
    match config.command.as_str() {
        "verify-lemma-4-2" => verify_ball_formula(config, out_dir),
        "verify-section-3" => verify_inequalities(config, out_dir),
        "doubling-scan" => run_doubling_scan(config, out_dir),
        "cone-distance" => run_cone_distance(config, out_dir),
        "blowup" => run_blowup(config, out_dir),
        "lewy-demo" => run_lewy_demo(config, out_dir),
        "fr-metric" => run_fr_metric(config, out_dir),
        other => anyhow::bail!("unknown command '{other}'"),
    }
}

/// Ball-measure identity: quadrature vs closed form for homogeneous input,
/// plus-side vs minus-side surface integrals for any input.
fn verify_ball_formula(config: &Config, out_dir: &Path) -> anyhow::Result<bool> {
    let poly = parse_polynomial(config)?;
    let m = PolyMeasure::new(poly, 1.0)?;
    let rule = build_rule(m.dim(), config.rule_level.unwrap_or(0))?;
    let radii = config.radii.clone().unwrap_or_else(|| vec![0.5, 1.0, 2.0]);
    let mut rows = Vec::new();
    let mut max_rel_closed: f64 = 0.0;
    let mut max_rel_sides: f64 = 0.0;
    for &r in &radii {
        let (plus, minus) = ball_measure_two_sided(&m, r, &rule)?;
        let closed = ball_measure_closed(&m, r, &rule)?;
        let rel_sides = (plus - minus).abs() / plus.abs().max(minus.abs()).max(1e-300);
        max_rel_sides = max_rel_sides.max(rel_sides);
        let rel_closed = closed.map(|c| (plus - c).abs() / c.abs().max(1e-300));
        if let Some(rc) = rel_closed {
            max_rel_closed = max_rel_closed.max(rc);
        }
        rows.push(json!({
            "r": r,
            "plus_side": plus,
            "minus_side": minus,
            "closed_form": closed,
            "rel_err_sides": rel_sides,
            "rel_err_closed": rel_closed,
        }));
    }
    let pass = max_rel_closed <= 1e-6 && max_rel_sides <= 1e-8;
    write_json(
        &out_dir.join("ball_formula.json"),
        json!({
            "command": "verify-lemma-4-2",
            "poly_hash": format!("{:016x}", m.poly().content_hash()),
            "rows": rows,
            "max_rel_err_closed": max_rel_closed,
            "max_rel_err_sides": max_rel_sides,
            "pass": pass,
        }),
    )?;
    println!(
        "ball-formula: max closed-form error {max_rel_closed:.3e}, max side error {max_rel_sides:.3e} -> {}",
        if pass { "pass" } else { "FAIL" }
    );
    Ok(pass)
}

/// Randomized spherical-harmonic inequality suite: derivative bound,
/// Lipschitz, big piece, reverse Hoelder.
fn verify_inequalities(config: &Config, out_dir: &Path) -> anyhow::Result<bool> {
    use harmlab::sphere::{big_piece_measure, l1_norm_sphere};
    use rand::{Rng, SeedableRng};
    let k_max = config.k_max.unwrap_or(4);
    let trials = config.trials.unwrap_or(10_000);
    let seed = config.seed;
    let rule = build_rule(3, 1)?;
    let mut violations = 0usize;
    let mut checks = 0usize;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let polys_per_degree = 8;
    for k in 1..=k_max {
        let basis = harmonic_basis(3, k)?;
        let c = constants(3, k)?;
        for _ in 0..polys_per_degree {
            let p = basis.iter().fold(Poly::zero(3), |acc, b| {
                acc.add(&b.scale(rng.random_range(-1.0..1.0))).expect("dims")
            });
            if p.is_zero() {
                continue;
            }
            let sup = sup_norm_sphere(&p, &rule)?.value;
            let l1 = l1_norm_sphere(&p, &rule)?;
            checks += 1;
            if sup > c.b_nk * l1 * (1.0 + 1e-9) {
                violations += 1;
            }
            let bp = big_piece_measure(&p, &rule)?;
            checks += 1;
            if bp < c.l_nk {
                violations += 1;
            }
            // Lipschitz pairs.
            let pair_trials = trials / (k_max as usize * polys_per_degree);
            for _ in 0..pair_trials {
                let sample = |rng: &mut rand_chacha::ChaCha8Rng| {
                    let v: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0f64)).collect();
                    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-9);
                    vec![v[0] / n, v[1] / n, v[2] / n]
                };
                let t1 = sample(&mut rng);
                let t2 = sample(&mut rng);
                let lhs = (p.evaluate(&t1)? - p.evaluate(&t2)?).abs();
                let dist = t1
                    .iter()
                    .zip(&t2)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                checks += 1;
                if lhs > c.a_nk * sup * dist * (1.0 + 1e-9) {
                    violations += 1;
                }
            }
            // Derivative bound at a random point and multi-index.
            let theta = {
                let v: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0f64)).collect();
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-9);
                vec![v[0] / n, v[1] / n, v[2] / n]
            };
            let mut alpha = vec![0u32; 3];
            alpha[rng.random_range(0..3)] = rng.random_range(1..=k);
            checks += 1;
            if !derivative_bound_check(&p, &MultiIndex(alpha), &theta)? {
                violations += 1;
            }
        }
    }
    let pass = violations == 0;
    write_json(
        &out_dir.join("inequalities.json"),
        json!({
            "command": "verify-section-3",
            "k_max": k_max,
            "checks": checks,
            "violations": violations,
            "seed": seed,
            "pass": pass,
        }),
    )?;
    println!("inequality suite: {checks} checks, {violations} violations -> {}", if pass { "pass" } else { "FAIL" });
    Ok(pass)
}

fn run_doubling_scan(config: &Config, out_dir: &Path) -> anyhow::Result<bool> {
    let poly = parse_polynomial(config)?;
    let m = PolyMeasure::new(poly, 1.0)?;
    let rule = build_rule(m.dim(), config.rule_level.unwrap_or(0))?;
    let tau = config.tau.unwrap_or(2.0);
    let r_min = config.r_min.unwrap_or(1e-2);
    let r_max = config.r_max.unwrap_or(1e2);
    let steps = config.steps.unwrap_or(16);
    let scan = doubling_scan(&m, tau, r_min, r_max, steps, &rule)?;
    write_csv(&out_dir.join("doubling_scan.csv"), &scan.to_csv())?;
    let classification = degree_classify(&m, &rule)?;
    let pass = matches!(classification.status, measure::ClassifyStatus::Confirmed);
    write_json(
        &out_dir.join("doubling_scan.json"),
        json!({
            "command": "doubling-scan",
            "scan_exponents": [scan.exponent_at_zero, scan.exponent_at_infinity],
            "classification": classification,
            "pass": pass,
        }),
    )?;
    println!(
        "doubling-scan: exponents ({:.4}, {:.4}), classified (j, d) = ({}, {}) -> {}",
        scan.exponent_at_zero,
        scan.exponent_at_infinity,
        classification.j,
        classification.d,
        if pass { "pass" } else { "FAIL" }
    );
    Ok(pass)
}

fn run_cone_distance(config: &Config, out_dir: &Path) -> anyhow::Result<bool> {
    let poly = parse_polynomial(config)?;
    let k = config.k.unwrap_or(1);
    let radii = config.radii.clone().unwrap_or_else(|| vec![1.0]);
    let mut cfg = ConeSearchConfig { seed: config.seed, ..Default::default() };
    if let Some(restarts) = config.restarts {
        cfg.restarts = restarts;
    }
    let report = separation_experiment(&poly, k, &radii, &cfg)?;
    let pass = report.consistent;
    write_json(
        &out_dir.join("cone_distance.json"),
        json!({
            "command": "cone-distance",
            "report": report,
            "pass": pass,
        }),
    )?;
    println!("cone-distance: k={k}, consistent={pass}");
    Ok(pass)
}

fn run_blowup(config: &Config, out_dir: &Path) -> anyhow::Result<bool> {
    use harmlab::blowup::{blowup_sequence, hausdorff_distance, zero_set_blowup};
    use harmlab::metric::{f_r_distance, LpOptions};
    let poly = parse_polynomial(config)?;
    let m = PolyMeasure::new(poly.clone(), 1.0)?;
    let radii = config
        .radii
        .clone()
        .unwrap_or_else(|| vec![1.0, 0.3, 0.1, 0.03, 0.01, 3e-3, 1e-3]);
    let level = config.rule_level.unwrap_or(1);
    let rule = build_rule(m.dim(), level)?;
    let seq = blowup_sequence(&m, &radii, &rule, config.seed)?;
    // Limit candidate: the measure of the bottom homogeneous part.
    let bottom = m.decomp().part(m.bottom_degree()).expect("bottom part").clone();
    let limit_m = PolyMeasure::new(bottom.clone(), 1.0)?;
    let limit_seq = blowup_sequence(&limit_m, &[1.0], &rule, config.seed)?;
    let limit = limit_seq[0].consolidate_to(1500)?;
    let limit_zero = zero_set_blowup(&bottom, 1.0, 1.0, level, config.seed)?;
    let opts = LpOptions::default();
    let mut csv = String::from("r,f1_distance_to_limit,hausdorff_to_limit\n");
    let mut f1_values = Vec::new();
    for (nu, &r) in seq.iter().zip(&radii) {
        let nu_small = nu.consolidate_to(1500)?;
        let d = f_r_distance(&nu_small, &limit, 1.0, &opts)?;
        let zs = zero_set_blowup(&poly, r, 1.0, level, config.seed)?;
        let hd = hausdorff_distance(&zs, &limit_zero)?;
        csv.push_str(&format!("{r:.12e},{d:.12e},{hd:.12e}\n"));
        f1_values.push(d);
    }
    write_csv(&out_dir.join("blowup.csv"), &csv)?;
    let last = *f1_values.last().unwrap_or(&f64::NAN);
    let pass = last.is_finite();
    write_json(
        &out_dir.join("blowup.json"),
        json!({
            "command": "blowup",
            "radii": radii,
            "f1_distances": f1_values,
            "pass": pass,
        }),
    )?;
    println!("blowup: final F_1 distance to limit {last:.4}");
    Ok(pass)
}

fn run_lewy_demo(config: &Config, out_dir: &Path) -> anyhow::Result<bool> {
    use harmlab::blowup::nodal_components_s2;
    let lewy = lewy_polynomial();
    let grid_level = config.grid_level.unwrap_or(7);
    let components = nodal_components_s2(&lewy, grid_level)?;
    let harmonic = lewy.laplacian().is_zero();
    let m = PolyMeasure::new(lewy.clone(), 1.0)?;
    let rule = build_rule(3, config.rule_level.unwrap_or(0))?;
    let classification = degree_classify(&m, &rule)?;
    let pass = components == 2
        && harmonic
        && classification.j == 3
        && classification.d == 3;
    write_json(
        &out_dir.join("lewy_demo.json"),
        json!({
            "command": "lewy-demo",
            "nodal_components": components,
            "laplacian_is_zero": harmonic,
            "classification": classification,
            "pass": pass,
        }),
    )?;
    println!(
        "lewy-demo: components={components}, harmonic={harmonic}, degrees=({}, {}) -> {}",
        classification.j,
        classification.d,
        if pass { "pass" } else { "FAIL" }
    );
    Ok(pass)
}

fn run_fr_metric(config: &Config, out_dir: &Path) -> anyhow::Result<bool> {
    use harmlab::metric::{f_r_distance, f_r_single};
    let poly = parse_polynomial(config)?;
    let m = PolyMeasure::new(poly, 1.0)?;
    let r = config.r.unwrap_or(1.0);
    let level = config.rule_level.unwrap_or(1);
    let rule = build_rule(m.dim(), level)?;
    let cloud = discretize(&m, r, &rule, 2 + m.degree() as usize, config.seed)?
        .consolidate_to(1500)?;
    let quad_fr = measure::f_r(&m, r, &build_rule(m.dim(), 0)?)?;
    let direct = f_r_single(&cloud, r);
    let self_dist = {
        let other = discretize(&m, r, &rule, 2 + m.degree() as usize, config.seed ^ 0x77)?
            .consolidate_to(1500)?;
        f_r_distance(&cloud, &other, r, &LpOptions::default())?
    };
    let quad_ball = ball_measure(&m, r, &build_rule(m.dim(), 0)?)?;
    let mass = cloud.total_mass();
    let rel_fr = (direct - quad_fr).abs() / quad_fr.abs().max(1e-300);
    let rel_mass = (mass - quad_ball).abs() / quad_ball.abs().max(1e-300);
    let pass = rel_fr <= 0.03 && rel_mass <= 0.02;
    write_csv(&out_dir.join("fr_metric_cloud.csv"), &cloud.to_csv())?;
    std::fs::write(&out_dir.join("fr_metric_cloud_sidecar.json"), cloud.sidecar_json())?;
    write_json(
        &out_dir.join("fr_metric.json"),
        json!({
            "command": "fr-metric",
            "r": r,
            "f_r_particle": direct,
            "f_r_quadrature": quad_fr,
            "rel_err_f_r": rel_fr,
            "cloud_mass": mass,
            "ball_quadrature": quad_ball,
            "rel_err_mass": rel_mass,
            "self_distance_floor": self_dist,
            "pass": pass,
        }),
    )?;
    println!("fr-metric: F_r rel err {rel_fr:.3e}, mass rel err {rel_mass:.3e} -> {}", if pass { "pass" } else { "FAIL" });
    Ok(pass)
}
