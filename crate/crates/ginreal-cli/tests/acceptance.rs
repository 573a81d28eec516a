//! Acceptance criteria 1–10. One `PASS`/`FAIL` line per criterion, preceded
//! by indented detail lines.
//!
//! Pass `N …` arguments to run a subset. Monte Carlo ensembles are sampled
//! once and shared; the criterion that first needs an ensemble is charged
//! for sampling it. A criterion whose numerical checks pass but which
//! exceeds its wall-clock budget is reported as `FAIL (runtime)`; only
//! numerical failures make the process exit non-zero, since wall time
//! depends on the machine (trials are spread over every available core).

use ginreal::fredholm::{edge_cdf, origin_survival_with};
use ginreal::kernel::{
    i_kernel, i_kernel_direct, integral_identities, make_context, matrix_kernel, s_kernel_rep, IdentityQuadrature,
    KernelContext, OriginLimitKernel, Representation,
};
use ginreal::pfaffian::{cluster, correlation, partitions, pfaffian, SkewMatrix};
use ginreal::quad::GaussLegendre;
use ginreal::real::DoubleDouble;
use ginreal::special_fn::{erfc, WeightConfig};
use ginreal::statistics::{
    clustering_report, expected_count, finite_n_variance_over, truncation_region, variance_constant, VarianceRegime,
};
use ginreal_cli::asy::{asymptotics_table, edge_rows};
use ginreal_cli::clt::{clt_report_on, CltThresholds};
use ginreal_cli::montecarlo::{
    extremes, ks_distance, sample_ensemble, Ensemble, EnsembleSpec, Observable, SampleMoments, TestFn,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::collections::HashMap;
use std::error::Error;
use std::sync::{Arc, Mutex};
use std::time::Instant;

type Res<T> = Result<T, Box<dyn Error>>;

const TRIALS: u64 = 10_000;
const SEED: u64 = 20_240_607;

struct Outcome {
    checks: Vec<(String, bool)>,
    notes: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome { checks: Vec::new(), notes: Vec::new() }
    }

    fn check(&mut self, name: impl Into<String>, pass: bool) {
        self.checks.push((name.into(), pass));
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Ensembles keyed by `(N, m)`, sampled on first use.
struct Ensembles(Mutex<HashMap<(usize, u32), Arc<Ensemble>>>);

impl Ensembles {
    fn get(&self, n: usize, m: u32, out: &mut Outcome) -> Res<Arc<Ensemble>> {
        if let Some(e) = self.0.lock().unwrap().get(&(n, m)) {
            return Ok(e.clone());
        }
        let start = Instant::now();
        let spec = EnsembleSpec::new(n, m, TRIALS, SEED ^ ((n as u64) << 8) ^ m as u64, workers())?;
        let e = Arc::new(sample_ensemble(&spec)?);
        out.note(format!(
            "sampled N={n} m={m}: {TRIALS} trials in {:.1} s on {} worker(s), {} eigensolver failures",
            start.elapsed().as_secs_f64(),
            spec.workers,
            e.failures()
        ));
        self.0.lock().unwrap().insert((n, m), e.clone());
        Ok(e)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 { 0.0 } else { (a - b).abs() / s }
}

fn signed_pow(t: f64, m: u32) -> f64 {
    t.signum() * t.abs().powi(m as i32)
}

// 1. Exact moment identities.
fn identities(_: &Ensembles) -> Res<Outcome> {
    let mut out = Outcome::new();
    let (mut sign, mut moment) = (0.0f64, 0.0f64);
    for &x in &[0.3, 0.8] {
        for &n in &[20, 60] {
            for m in 1..=2 {
                let r = integral_identities::<DoubleDouble>(x, n, m, &IdentityQuadrature::new(m))?;
                sign = sign.max(r.sign_rel_err);
                moment = moment.max(r.moment_rel_err);
            }
        }
    }
    out.note(format!("max relative error: sign identity {sign:.2e}, moment identity {moment:.2e}"));
    out.check("sign identity ≤ 1e-6", sign <= 1e-6);
    out.check("moment identity ≤ 1e-6", moment <= 1e-6);
    Ok(out)
}

// 2. Equivalent integral forms of S and of I.
fn representations(_: &Ensembles) -> Res<Outcome> {
    let mut out = Outcome::new();
    let n = 50;
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    for m in 1..=3 {
        let ctx = make_context(n, m)?;
        let (mut worst_s, mut worst_i) = (0.0f64, 0.0f64);
        for _ in 0..20 {
            // root coordinates in the bulk, y within a few local spacings of x
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let tx = sign * rng.random_range(0.3..0.8);
            let ty = tx + rng.random_range(-2.0..2.0) / ((n * m as usize) as f64).sqrt();
            let (x, y) = (signed_pow(tx, m), signed_pow(ty, m));
            let vals: Vec<_> =
                Representation::ALL.iter().map(|&r| s_kernel_rep(x, y, &ctx, r)).collect::<Result<_, _>>()?;
            for a in &vals {
                for b in &vals {
                    worst_s = worst_s.max(a.rel_diff(*b));
                }
            }
            let (a, b) = (i_kernel(x, y, &ctx)?, i_kernel_direct(x, y, &ctx)?);
            worst_i = worst_i.max((a - b).abs() / a.abs().max(b.abs()).max(0.5));
        }
        out.note(format!("m={m}: max pairwise S discrepancy {worst_s:.2e}, I discrepancy {worst_i:.2e}"));
        out.check(format!("m={m} S forms agree ≤ 1e-5"), worst_s <= 1e-5);
        out.check(format!("m={m} I forms agree ≤ 1e-5"), worst_i <= 1e-5);
    }
    Ok(out)
}

/// Determinant by Gaussian elimination with partial pivoting (row-major).
fn lu_det(n: usize, mut a: Vec<f64>) -> f64 {
    let mut det = 1.0;
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs())).unwrap();
        if a[p * n + k] == 0.0 {
            return 0.0;
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            det = -det;
        }
        let piv = a[k * n + k];
        det *= piv;
        for i in k + 1..n {
            let f = a[i * n + k] / piv;
            for j in k..n {
                a[i * n + j] -= f * a[k * n + j];
            }
        }
    }
    det
}

/// Bell numbers from the Bell triangle.
fn bell(k: usize) -> usize {
    let mut row = vec![1usize];
    for _ in 1..k {
        let mut next = vec![*row.last().unwrap()];
        for v in &row {
            next.push(next.last().unwrap() + v);
        }
        row = next;
    }
    *row.last().unwrap()
}

// 3. Pfaffian algebra.
fn pfaffian_algebra(_: &Ensembles) -> Res<Outcome> {
    let mut out = Outcome::new();
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for t in 0..100 {
        let dim = 2 * (1 + t % 5);
        let a = SkewMatrix::from_upper(dim, |_, _| rng.random_range(-3.0..3.0))?;
        let pf = pfaffian(&a).to_real();
        worst = worst.max(rel(pf * pf, lu_det(dim, a.entries().to_vec())));
    }
    out.note(format!("max relative |Pf² − det| over 100 matrices (dim 2..10): {worst:.2e}"));
    out.check("Pf² = det ≤ 1e-9", worst <= 1e-9);
    for k in 1..=8 {
        let got = partitions(k)?.len();
        out.check(format!("partitions({k}) = Bell({k}) = {}", bell(k)), got == bell(k));
    }
    Ok(out)
}

/// `E N_ℝ` of a 2×2 real Gaussian matrix, `2 P(disc ≥ 0)` with
/// `P = ½ + 2 ∫∫_{b,c>0} φ(b)φ(c) erfc(√(bc))` (substituting `b = p²`, `c = q²`).
fn two_by_two_real_count() -> f64 {
    let gl = GaussLegendre::<f64>::new(40);
    let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let inner = |p: f64| gl.composite(|q| 4.0 * p * q * phi(p * p) * phi(q * q) * erfc(p * q), 0.0, 6.0, 12);
    2.0 * (0.5 + 2.0 * gl.composite(inner, 0.0, 6.0, 12))
}

fn counts(e: &Ensemble) -> Vec<f64> {
    e.samples.iter().map(|s| s.n_real as f64).collect()
}

// 4. Expected number of real eigenvalues.
fn expected(ens: &Ensembles) -> Res<Outcome> {
    let mut out = Outcome::new();
    let oracle = two_by_two_real_count();
    let q = expected_count(&make_context(2, 1)?, None)?;
    out.note(format!("N=2: quadrature {q:.12}, discriminant oracle {oracle:.12}, √2 = {:.12}", 2f64.sqrt()));
    out.check("N=2 quadrature = √2 ± 1e-6", (q - 2f64.sqrt()).abs() <= 1e-6);
    out.check("N=2 quadrature = discriminant oracle ± 1e-6", (q - oracle).abs() <= 1e-6);
    for &(n, m) in &[(50, 1), (100, 1), (100, 2), (100, 3)] {
        let e = ens.get(n, m, &mut out)?;
        let mo = SampleMoments::from_values(&counts(&e)).ok_or("no samples")?;
        let q = expected_count(&make_context(n, m)?, None)?;
        let z = (mo.mean - q) / mo.se_mean;
        out.note(format!("N={n} m={m}: quadrature {q:.5}, MC {:.5} ± {:.5} (z = {z:+.2})", mo.mean, mo.se_mean));
        out.check(format!("N={n} m={m} within 3 SE"), z.abs() <= 3.0);
    }
    Ok(out)
}

// 5. Variance of the count.
fn variance(ens: &Ensembles) -> Res<Outcome> {
    let mut out = Outcome::new();
    let n = 400;
    for m in 1..=2 {
        let e = ens.get(n, m, &mut out)?;
        let full = SampleMoments::from_values(&counts(&e)).ok_or("no samples")?;
        let k = variance_constant(m);
        let ratio = full.variance / (n as f64).sqrt() / k;
        out.note(format!(
            "m={m}: Var N_ℝ/√N = {:.4} ± {:.4}, constant {k:.5}, ratio {ratio:.4}",
            full.variance / 20.0,
            full.se_variance / 20.0
        ));
        out.check(format!("m={m} Var/√N within 15% of constant"), (ratio - 1.0).abs() <= 0.15);
        let region = truncation_region(n, m, 0.1)?;
        let intervals = region.intervals();
        let trunc = Observable::Truncated { intervals: intervals.clone(), inner: Box::new(Observable::Count) };
        let (values, _) = trunc.values(&e)?;
        let mo = SampleMoments::from_values(&values).ok_or("no samples")?;
        let start = Instant::now();
        let fin = finite_n_variance_over(|_| 1.0, &make_context(n, m)?, &intervals, 8)?;
        let z = (fin - mo.variance) / mo.se_variance;
        out.note(format!(
            "m={m}: truncated count variance MC {:.4} ± {:.4}, finite-N formula {fin:.4} ({:.1} s), z = {z:+.2}",
            mo.variance,
            mo.se_variance,
            start.elapsed().as_secs_f64()
        ));
        out.check(format!("m={m} finite-N variance within 3 SE"), z.abs() <= 3.0);
    }
    Ok(out)
}

fn bump() -> TestFn {
    Arc::new(|x| (2.0 / std::f64::consts::PI).powf(0.25) * (-x * x).exp())
}

// 6. Normal fluctuations.
fn clt(ens: &Ensembles) -> Res<Outcome> {
    let mut out = Outcome::new();
    let e = ens.get(400, 1, &mut out)?;
    let one: TestFn = Arc::new(|_| 1.0);
    let r = clt_report_on(&e, &one, VarianceRegime::Global, 16, CltThresholds::default())?;
    let mo = r.moments.ok_or("no samples")?;
    out.note(format!(
        "count N=400 m=1: skewness {:+.4} ± {:.4}, excess kurtosis {:+.4} ± {:.4}, KS {:.4} (lattice spacing {:?}), variance ratio {:.4}",
        mo.skewness, mo.se_skewness, mo.excess_kurtosis, mo.se_excess_kurtosis, r.ks_to_normal, r.lattice_spacing, r.variance_ratio
    ));
    out.check("|skewness| ≤ 0.1", r.skewness_ok);
    out.check("|excess kurtosis| ≤ 0.2", r.kurtosis_ok);
    out.check("KS to normal ≤ 0.02", r.ks_ok);
    let meso = VarianceRegime::MesoBulk { e: 0.5, tau: 0.2 };
    let r = clt_report_on(&e, &bump(), meso, 16, CltThresholds::default())?;
    out.note(format!(
        "mesoscopic bump E=0.5 τ=0.2, m=1: predicted σ² {:.5}, variance ratio {:.4}, skewness {:+.4}, KS {:.4}",
        r.predicted_sigma2,
        r.variance_ratio,
        r.moments.map_or(f64::NAN, |m| m.skewness),
        r.ks_to_normal
    ));
    out.check("mesoscopic variance ratio within 15%", r.variance_ok);
    if let Some(e2) = ens.0.lock().unwrap().get(&(400, 2)).cloned() {
        let r = clt_report_on(&e2, &bump(), meso, 16, CltThresholds::default())?;
        out.note(format!("mesoscopic bump, m=2 (informational): variance ratio {:.4}", r.variance_ratio));
    }
    Ok(out)
}

/// Piecewise-linear interpolation of a tabulated CDF, flat outside the table.
fn interpolate(table: &[(f64, f64)], s: f64) -> f64 {
    if s == f64::NEG_INFINITY {
        return 0.0;
    }
    if s == f64::INFINITY {
        return 1.0;
    }
    let k = table.partition_point(|&(x, _)| x <= s);
    if k == 0 {
        return table[0].1;
    }
    if k == table.len() {
        return table[k - 1].1;
    }
    let ((x0, y0), (x1, y1)) = (table[k - 1], table[k]);
    y0 + (y1 - y0) * (s - x0) / (x1 - x0)
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Two-sample Kolmogorov distance.
fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

// 7. Largest real eigenvalue.
fn edge_law(ens: &Ensembles) -> Res<Outcome> {
    let mut out = Outcome::new();
    let n = 200;
    let start = Instant::now();
    let order = 80;
    let mut table = Vec::new();
    for k in 0..=210 {
        let s = -16.0 + 0.1 * k as f64;
        let g = edge_cdf(s, order, 1e-10)?;
        if !g.converged {
            return Err(format!("edge series did not converge at s = {s}").into());
        }
        table.push((s, g.value));
    }
    out.note(format!(
        "edge CDF tabulated on [−16, 5] step 0.1 (order {order}) in {:.1} s; F(−16) = {:.2e}, F(5) = 1 − {:.2e}",
        start.elapsed().as_secs_f64(),
        table[0].1,
        1.0 - table[210].1
    ));
    let cdf = |s: f64| interpolate(&table, s);
    let mut scaled = Vec::new();
    for m in 1..=2 {
        let e = ens.get(n, m, &mut out)?;
        let a = (n as f64 / m as f64).sqrt();
        let z = sorted(e.samples.iter().map(|s| extremes(s).0.map_or(f64::NEG_INFINITY, |l| a * (l - 1.0))).collect());
        let d = ks_distance(&z, &cdf)?;
        out.note(format!("m={m}: KS({TRIALS} samples of √(N/m)(λ_max − 1), limit CDF) = {d:.4}"));
        out.check(format!("m={m} KS ≤ 0.05"), d <= 0.05);
        scaled.push(z);
    }
    out.note(format!("two-sample KS between m=1 and m=2 (informational): {:.4}", ks_two_sample(&scaled[0], &scaled[1])));
    Ok(out)
}

// 8. Smallest positive real eigenvalue.
fn origin_law(ens: &Ensembles) -> Res<Outcome> {
    let mut out = Outcome::new();
    let n = 200;
    for m in 1..=2 {
        let start = Instant::now();
        let kernel = OriginLimitKernel::new(WeightConfig::new(m))?;
        let (s_max, points, order) = if m == 1 { (20.0f64, 48, 32) } else { (150.0f64, 56, 32) };
        let s_min = 0.02f64;
        let mut table = vec![(0.0, 0.0)];
        for k in 0..points {
            let s = s_min * (s_max / s_min).powf(k as f64 / (points - 1) as f64);
            let g = origin_survival_with(&kernel, s, order, 1e-10, false)?;
            if !g.converged {
                return Err(format!("origin series did not converge at s = {s}").into());
            }
            table.push((s, 1.0 - g.value));
        }
        out.note(format!(
            "m={m}: origin CDF tabulated at {points} points on [{s_min}, {s_max}] (order {order}) in {:.1} s; survival({s_max}) = {:.2e}",
            start.elapsed().as_secs_f64(),
            1.0 - table[points].1
        ));
        let e = ens.get(n, m, &mut out)?;
        let a = (n as f64).powf(0.5 * m as f64);
        let z = sorted(e.samples.iter().map(|s| extremes(s).1.map_or(f64::INFINITY, |l| a * l)).collect());
        let d = ks_distance(&z, &|s| interpolate(&table, s))?;
        out.note(format!("m={m}: KS({TRIALS} samples of N^(m/2) λ_min, limit CDF) = {d:.4}"));
        out.check(format!("m={m} KS ≤ 0.05"), d <= 0.05);
    }
    Ok(out)
}

// 9. Leading-order asymptotics.
fn asymptotics(_: &Ensembles) -> Res<Outcome> {
    let mut out = Outcome::new();
    let rows = asymptotics_table(&[100, 400], &[10_000], &[1, 2, 3])?;
    let mut groups: Vec<(&str, usize, usize, f64)> = Vec::new();
    for r in &rows {
        let i = match groups.iter().position(|g| g.0 == r.check) {
            Some(i) => i,
            None => {
                groups.push((r.check, 0, 0, 0.0));
                groups.len() - 1
            }
        };
        let g = &mut groups[i];
        g.1 += 1;
        g.2 += r.pass() as usize;
        g.3 = g.3.max(r.rel_err / r.bound);
    }
    for (check, total, passed, worst) in groups {
        out.note(format!("{check}: {passed}/{total} rows within bound, worst error/bound {worst:.3}"));
        out.check(format!("{check} within bound"), passed == total);
    }
    for n in [100, 400] {
        let worst = (1..=3)
            .flat_map(|m| edge_rows(n, m).unwrap_or_default())
            .map(|r| r.rel_err)
            .fold(0.0, f64::max);
        out.note(format!("edge formula at N={n} (informational, error is O(N^(-1/2))): worst {:.1}%", 100.0 * worst));
    }
    Ok(out)
}

// 10. Clustering.
fn clustering(_: &Ensembles) -> Res<Outcome> {
    let mut out = Outcome::new();
    let n = 400;
    for m in 1..=2 {
        let ctx: KernelContext = make_context(n, m)?;
        let report = clustering_report(&ctx, &[6.0, 8.0, 10.0, 14.0, 17.0, -9.0, -12.0])?;
        out.note(format!(
            "m={m}: {} decay rows, all within surrogate bound: {}, fitted rate {:?}",
            report.rows.len(),
            report.all_within_bound(),
            report.fitted_rate
        ));
        out.check(format!("m={m} decay within surrogate bound"), report.all_within_bound());
        let k = |x: f64, y: f64| matrix_kernel(x, y, &ctx);
        let mut worst = 0.0f64;
        for &(a, b) in &[(0.3, 0.7), (-0.5, 0.4), (0.2, 0.6), (-0.8, -0.35)] {
            let (x, y) = (signed_pow(a, m), signed_pow(b, m));
            let prod = correlation(&[x], k)?.value * correlation(&[y], k)?.value;
            worst = worst.max(cluster(&[x, y], k)?.abs() / prod);
        }
        out.note(format!("m={m}: max |ρ₂ − ρ₁ρ₁|/ρ₁ρ₁ at separated points {worst:.2e}"));
        out.check(format!("m={m} two-point factorization ≤ 1e-4"), worst <= 1e-4);
    }
    Ok(out)
}

type Criterion = fn(&Ensembles) -> Res<Outcome>;

fn main() {
    let criteria: [(&str, f64, Criterion); 10] = [
        ("exact integral identities", 60.0, identities),
        ("representation equivalence", 120.0, representations),
        ("Pfaffian algebra", 10.0, pfaffian_algebra),
        ("expected count", 600.0, expected),
        ("variance constant", 1200.0, variance),
        ("central limit theorem", 1200.0, clt),
        ("edge law", 1800.0, edge_law),
        ("origin law", 1800.0, origin_law),
        ("asymptotics suite", 300.0, asymptotics),
        ("clustering", 120.0, clustering),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let ens = Ensembles(Mutex::new(HashMap::new()));
    let mut numerical_failure = false;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = run(&ens);
        let secs = start.elapsed().as_secs_f64();
        let (ok, summary) = match result {
            Ok(out) => {
                for n in &out.notes {
                    println!("    {n}");
                }
                for (c, pass) in &out.checks {
                    println!("    [{}] {c}", if *pass { "ok" } else { "FAIL" });
                }
                let failed = out.checks.iter().filter(|c| !c.1).count();
                (failed == 0 && !out.checks.is_empty(), format!("{}/{} checks", out.checks.len() - failed, out.checks.len()))
            }
            Err(e) => {
                println!("    error: {e}");
                (false, "error".to_string())
            }
        };
        numerical_failure |= !ok;
        let status = match (ok, secs <= *budget) {
            (true, true) => "PASS",
            (true, false) => "FAIL (runtime)",
            (false, _) => "FAIL",
        };
        println!("criterion {id:>2}: {status} — {name}: {summary}, {secs:.1} s (budget {budget:.0} s)");
    }
    if numerical_failure {
        std::process::exit(1);
    }
}
