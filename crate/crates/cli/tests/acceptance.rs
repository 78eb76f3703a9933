//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero on any failure.
//!
//! Corpus images are looked up by name (`lena`, `tank`, `boat`, `house`, as
//! `.pgm` or `.png`) in `GENRE_CORPUS_DIR`, falling back to `testdata/images`.
//! A missing corpus image fails every criterion that needs it.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use genre_cli::io::read_image;
use genre_cli::pipeline::{run_synthetic, Precision, RunOutcome, RunSpec};
use genre_core::costmodel::{additions_per_pixel, bram_count, format_ratio, CostQuery, Phase};
use genre_core::genre::{genre_gradient, solve_closed_form, solve_gradient_descent};
use genre_core::oracle::{build_dense, dense_denoise};
use genre_core::uwt::{analyse, decompose_counted, reconstruct_counted, AddTally};
use genre_core::{
    accumulate_gram, decompose, denoise, genre_risk, recompose, shrink_and_combine, trace_terms, Distribution, FilterRealization,
    GramSystem, Image, NoiseModel, SolverConfig,
};
use num_rational::Ratio;
use rayon::prelude::*;

const RECONSTRUCTION_TOL: f64 = 1e-9;
const ORACLE_TOL: f64 = 1e-6;
const TRACE_TOL: f64 = 1e-9;
const MONTE_CARLO_DRAWS: usize = 10_000;
const MONTE_CARLO_STDERRS: f64 = 3.0;
const OUTPUT_PSNR_TOL: f64 = 0.3;
const GAUSSIAN_INPUT_PSNR_TOL: f64 = 0.15;
const OTHER_INPUT_PSNR_TOL: f64 = 0.3;
const SSIM_TOL: f64 = 0.03;
const FIXED_PSNR_TOL: f64 = 0.3;
const FIXED_MAX_LOSS: f64 = 0.5;
const COUNTER_TOL: f64 = 0.1;
const SOLVER_TOL: f64 = 1e-3;
const RANDOM_SYSTEMS: usize = 50;
const GRADIENT_REL_TOL: f64 = 1e-5;
/// Plain descent needs about `kappa * ln(1/tol)` steps; the random systems reach kappa 1e5.
const GD_ITERATION_BUDGET: usize = 20_000_000;
const TIME_BUDGET: Duration = Duration::from_secs(2);

const SIGMA: f64 = 25.0;
const IMAGES: [&str; 4] = ["lena", "tank", "boat", "house"];
const DISTRIBUTIONS: [Distribution; 3] = [Distribution::Gaussian, Distribution::Uniform, Distribution::Laplacian];

/// Published figures for one image and noise law at sigma 25.
struct Row {
    image: &'static str,
    dist: Distribution,
    input_psnr: f64,
    float_psnr: f64,
    fpga_psnr: f64,
    float_ssim: f64,
}

const fn row(image: &'static str, dist: Distribution, v: [f64; 4]) -> Row {
    Row { image, dist, input_psnr: v[0], float_psnr: v[1], fpga_psnr: v[2], float_ssim: v[3] }
}

use Distribution::{Gaussian as G, Laplacian as L, Uniform as U};

const TABLE: [Row; 12] = [
    row("lena", G, [20.246, 29.204, 29.110, 0.7544]),
    row("tank", G, [20.171, 29.478, 29.274, 0.6859]),
    row("boat", G, [20.268, 27.621, 27.512, 0.7072]),
    row("house", G, [20.236, 28.194, 27.825, 0.7214]),
    row("lena", U, [20.172, 29.212, 29.114, 0.7530]),
    row("tank", U, [20.168, 29.453, 29.264, 0.6866]),
    row("boat", U, [20.237, 27.627, 27.525, 0.7060]),
    row("house", U, [20.244, 28.212, 27.848, 0.7213]),
    row("lena", L, [20.352, 29.186, 29.074, 0.7582]),
    row("tank", L, [20.239, 29.449, 29.281, 0.6866]),
    row("boat", L, [20.377, 27.631, 27.532, 0.7115]),
    row("house", L, [20.407, 28.167, 27.769, 0.7221]),
];

/// Additions per output pixel at level five, as printed.
const ADDITIONS: [(FilterRealization, &str, &str); 6] = [
    (FilterRealization::Uwt1d, "1.50", "6.00"),
    (FilterRealization::Uwt2d, "2.00", "12.00"),
    (FilterRealization::ConvCombined1d, "46.50", "62.00"),
    (FilterRealization::ConvCombined2d, "1023.00", "1023.00"),
    (FilterRealization::Ruwt1d, "3.75", "5.00"),
    (FilterRealization::Ruwt2d, "4.00", "7.00"),
];

/// `(numer, denom)` of a block count.
type Blocks = (u64, u64);

/// 36 Kb block RAMs at level five, 16-bit words, 512-wide rows.
const BRAMS: [(FilterRealization, Blocks, Blocks); 4] = [
    (FilterRealization::Uwt1d, (15, 2), (15, 1)),
    (FilterRealization::Uwt2d, (4, 1), (15, 1)),
    (FilterRealization::Ruwt1d, (17, 1), (32, 1)),
    (FilterRealization::Ruwt2d, (15, 1), (30, 1)),
];

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn random_image(width: usize, height: usize, seed: u64) -> Image {
    let v = NoiseModel::new(Distribution::Uniform, 60.0, seed).samples(width * height);
    Image::new(width, height, v.into_iter().map(|x| x + 128.0).collect()).unwrap()
}

fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn perfect_reconstruction() -> Verdict {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for size in [8, 16, 32] {
        for levels in (1..=4).filter(|&j| 1 << j <= size) {
            let y = random_image(size, size, (size * 10 + levels) as u64);
            for r in FilterRealization::ALL {
                let psis = analyse(&y, levels, r).unwrap();
                worst = worst.max(psis.sum().max_abs_diff(&y).unwrap());
                cases += 1;
            }
        }
    }
    Verdict::new(worst < RECONSTRUCTION_TOL, format!("max |sum psi - y| {worst:.2e} over {cases} cases (tol {RECONSTRUCTION_TOL:e})"))
}

fn oracle_equivalence() -> Verdict {
    let (mut band_err, mut psi_err, mut out_err, mut alpha_err, mut trace_err) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut exact_sum = true;
    for (w, h, max_levels) in [(8, 8, 3), (16, 16, 4), (16, 8, 3)] {
        for levels in 1..=max_levels {
            let ops = build_dense(w, h, levels).unwrap();
            let y = random_image(w, h, (w * 100 + h * 10 + levels) as u64);
            let dense_bands = ops.decompose(&y);
            let dense_psis = ops.synthesize(&y);
            for r in FilterRealization::ALL {
                let bands = decompose(&y, levels, r).unwrap();
                for (a, b) in bands.bands().iter().zip(&dense_bands) {
                    band_err = band_err.max(a.max_abs_diff(b).unwrap());
                }
                let psis = recompose(&bands, r).unwrap();
                for (a, b) in psis.psis().iter().zip(&dense_psis) {
                    psi_err = psi_err.max(a.max_abs_diff(b).unwrap());
                }
            }
            let (dense_out, dense_alpha) = dense_denoise(&y, 20.0, levels).unwrap();
            for r in [FilterRealization::Uwt2d, FilterRealization::Ruwt1d] {
                let d = denoise(&y, 20.0, levels, &SolverConfig::default(), r).unwrap();
                out_err = out_err.max(d.image.max_abs_diff(&dense_out).unwrap());
                alpha_err = alpha_err.max(max_abs(&d.diagnostics.alpha, &dense_alpha));
            }
            let traces = trace_terms(w, h, levels, 1.0).unwrap();
            for (i, t) in traces.iter().enumerate() {
                trace_err = trace_err.max((t - ops.trace(i)).abs());
            }
            exact_sum &= traces.iter().sum::<f64>() == (w * h) as f64;
        }
    }
    let worst = band_err.max(psi_err).max(out_err).max(alpha_err);
    Verdict::new(
        worst <= ORACLE_TOL && trace_err <= TRACE_TOL && exact_sum,
        format!(
            "bands {band_err:.1e}, psi {psi_err:.1e}, denoised {out_err:.1e}, alpha {alpha_err:.1e} (tol {ORACLE_TOL:e}); \
             traces {trace_err:.1e} (tol {TRACE_TOL:e}); sum of traces == N: {exact_sum}"
        ),
    )
}

fn unbiasedness() -> Verdict {
    let (w, h, levels) = (16, 16, 4);
    let clean = Image::from_fn(w, h, |r, c| 128.0 + 60.0 * ((r as f64) * 0.4).sin() * ((c as f64) * 0.3).cos() + 4.0 * c as f64);
    let alpha: Vec<f64> = (0..3 * levels + 1).map(|i| 0.3 + 0.05 * i as f64).collect();
    let trace = trace_terms(w, h, levels, SIGMA).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for dist in DISTRIBUTIONS {
        let (mut sum_d, mut sum_d2, mut sum_mse) = (0.0, 0.0, 0.0);
        for draw in 0..MONTE_CARLO_DRAWS {
            let noisy = clean.add_noise(&NoiseModel::new(dist, SIGMA, draw as u64)).unwrap();
            let psis = analyse(&noisy, levels, FilterRealization::Uwt2d).unwrap();
            let system = accumulate_gram(&psis, &noisy, &trace, SIGMA).unwrap();
            let mse = shrink_and_combine(&psis, &alpha).unwrap().mse(&clean).unwrap();
            let d = genre_risk(&system, &alpha) - mse;
            sum_d += d;
            sum_d2 += d * d;
            sum_mse += mse;
        }
        let n = MONTE_CARLO_DRAWS as f64;
        let mean = sum_d / n;
        let stderr = ((sum_d2 / n - mean * mean) * n / (n - 1.0)).sqrt() / n.sqrt();
        pass &= mean.abs() <= MONTE_CARLO_STDERRS * stderr;
        parts.push(format!("{dist}: mean MSE {:.3}, risk - MSE {mean:+.4} ({:.2} stderr)", sum_mse / n, mean.abs() / stderr));
    }
    Verdict::new(pass, format!("{} ({MONTE_CARLO_DRAWS} draws each, tol {MONTE_CARLO_STDERRS} stderr)", parts.join("; ")))
}

fn corpus_dir() -> PathBuf {
    std::env::var_os("GENRE_CORPUS_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../testdata/images"))
}

fn load(dir: &Path, name: &str) -> Option<Image> {
    ["pgm", "png"].iter().map(|ext| dir.join(format!("{name}.{ext}"))).find(|p| p.is_file()).map(|p| read_image(&p).unwrap())
}

struct CorpusRun {
    row: &'static Row,
    clean: Image,
    float: RunOutcome,
    fixed: RunOutcome,
}

fn run_corpus(dir: &Path) -> (Vec<CorpusRun>, Vec<&'static str>) {
    let mut runs = Vec::new();
    let mut missing = Vec::new();
    for name in IMAGES {
        let Some(clean) = load(dir, name) else {
            missing.push(name);
            continue;
        };
        for row in TABLE.iter().filter(|r| r.image == name) {
            let spec = |precision| RunSpec { distribution: row.dist, sigma: SIGMA, precision, ..RunSpec::default() };
            let float = run_synthetic(&clean, &spec(Precision::Float)).unwrap();
            let fixed = run_synthetic(&clean, &spec(Precision::Fixed)).unwrap();
            runs.push(CorpusRun { row, clean: clean.clone(), float, fixed });
        }
    }
    (runs, missing)
}

/// Checks every published row of `dists`; rows of missing images fail.
fn table_check(runs: &[CorpusRun], missing: &[&str], dists: &[Distribution], check: impl Fn(&CorpusRun) -> (bool, String)) -> Verdict {
    let mut pass = missing.is_empty();
    let mut parts = Vec::new();
    for run in runs.iter().filter(|r| dists.contains(&r.row.dist)) {
        let (ok, text) = check(run);
        pass &= ok;
        parts.push(format!("{} {}: {text}{}", run.row.image, run.row.dist, if ok { "" } else { " [out of tolerance]" }));
    }
    if !missing.is_empty() {
        parts.push(format!("missing corpus images: {}", missing.join(", ")));
    }
    Verdict::new(pass, parts.join("; "))
}

fn scores(o: &RunOutcome) -> &genre_cli::pipeline::Scores {
    o.scores.as_ref().expect("synthetic runs are scored")
}

fn cost_tables() -> Verdict {
    let mut golden = 0;
    let mut wrong = Vec::new();
    for (r, dec, rec) in ADDITIONS {
        for (phase, want) in [(Phase::Decomposition, dec), (Phase::Recomposition, rec)] {
            let got = format_ratio(additions_per_pixel(&CostQuery::new(r, phase, 5)).unwrap());
            golden += 1;
            if got != want {
                wrong.push(format!("{r} {phase:?} additions {got} != {want}"));
            }
        }
    }
    for (r, dec, rec) in BRAMS {
        for (phase, want) in [(Phase::Decomposition, dec), (Phase::Recomposition, rec)] {
            let got = bram_count(&CostQuery::new(r, phase, 5)).unwrap().blocks;
            golden += 1;
            if got != Ratio::new(want.0, want.1) {
                wrong.push(format!("{r} {phase:?} BRAM {got} != {}/{}", want.0, want.1));
            }
        }
    }
    let img = random_image(512, 512, 8);
    let mut counter = Vec::new();
    let mut worst = 0.0f64;
    for (r, dec, rec) in ADDITIONS {
        let mut t = AddTally::new();
        let bands = decompose_counted(&img, 5, r, &mut t).unwrap();
        let mut u = AddTally::new();
        reconstruct_counted(&bands, r, &mut u).unwrap();
        let (d, c) = (t.per_output(5).unwrap(), u.per_output(5).unwrap());
        worst = worst.max((d - dec.parse::<f64>().unwrap()).abs()).max((c - rec.parse::<f64>().unwrap()).abs());
        counter.push(format!("{r} {d:.3}/{c:.3}"));
    }
    let pass = wrong.is_empty() && worst <= COUNTER_TOL;
    Verdict::new(
        pass,
        format!(
            "{}/{golden} golden cells exact{}; instrumented counter on 512x512 (dec/rec): {}; max deviation {worst:.3} (tol {COUNTER_TOL})",
            golden - wrong.len(),
            if wrong.is_empty() { String::new() } else { format!(" ({})", wrong.join(", ")) },
            counter.join(", ")
        ),
    )
}

struct GdRun {
    gap: f64,
    converged: bool,
    iterations: usize,
    condition: f64,
}

fn gd_gap(system: &GramSystem) -> GdRun {
    let (closed, report) = solve_closed_form(system, &SolverConfig::default()).unwrap();
    let init = vec![1.0; system.bands];
    let config = SolverConfig { max_iters: GD_ITERATION_BUDGET, ..SolverConfig::gradient_descent() };
    let condition = report.condition.unwrap_or(f64::NAN);
    match solve_gradient_descent(system, &config, &init) {
        Ok((gd, r)) => GdRun { gap: max_abs(&closed, &gd), converged: r.converged, iterations: r.iterations, condition },
        Err(_) => GdRun { gap: f64::INFINITY, converged: false, iterations: GD_ITERATION_BUDGET, condition },
    }
}

fn random_system(seed: u64) -> (GramSystem, Vec<f64>) {
    let coeffs = NoiseModel::new(Distribution::Uniform, 1.0, 1000 + seed).samples(4);
    let clean = Image::from_fn(32, 32, |r, c| {
        128.0
            + 50.0 * coeffs[0] * (r as f64 * (0.2 + 0.1 * coeffs[1])).sin()
            + 40.0 * coeffs[2] * (c as f64 * 0.15).cos()
            + 20.0 * coeffs[3] * ((r + c) % 7) as f64
    });
    let sigma = 10.0 + 5.0 * (seed % 7) as f64;
    let noisy = clean.add_noise(&NoiseModel::new(Distribution::Gaussian, sigma, seed)).unwrap();
    let levels = 3;
    let psis = analyse(&noisy, levels, FilterRealization::Uwt2d).unwrap();
    let system = accumulate_gram(&psis, &noisy, &trace_terms(32, 32, levels, sigma).unwrap(), sigma).unwrap();
    let alpha = (0..system.bands).map(|i| 0.5 + 0.03 * i as f64 + 0.1 * coeffs[i % 4]).collect();
    (system, alpha)
}

/// Largest relative deviation of the analytic gradient from central differences.
fn gradient_error(system: &GramSystem, alpha: &[f64]) -> f64 {
    let g = genre_gradient(system, alpha);
    let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let h = 1e-3;
    (0..system.bands)
        .map(|i| {
            let (mut up, mut down) = (alpha.to_vec(), alpha.to_vec());
            up[i] += h;
            down[i] -= h;
            let fd = (genre_risk(system, &up) - genre_risk(system, &down)) / (2.0 * h);
            (fd - g[i]).abs() / scale
        })
        .fold(0.0, f64::max)
}

fn solver_agreement(runs: &[CorpusRun], missing: &[&str]) -> Verdict {
    let random: Vec<(GdRun, f64)> = (0..RANDOM_SYSTEMS as u64)
        .into_par_iter()
        .map(|seed| {
            let (system, alpha) = random_system(seed);
            (gd_gap(&system), gradient_error(&system, &alpha))
        })
        .collect();
    let corpus: Vec<GdRun> = runs
        .par_iter()
        .map(|run| {
            let (w, h) = (run.clean.width(), run.clean.height());
            let psis = analyse(&run.float.noisy, 5, FilterRealization::Uwt2d).unwrap();
            gd_gap(&accumulate_gram(&psis, &run.float.noisy, &trace_terms(w, h, 5, SIGMA).unwrap(), SIGMA).unwrap())
        })
        .collect();
    let gd_runs = || random.iter().map(|(g, _)| g).chain(&corpus);
    let random_gap = random.iter().map(|(g, _)| g.gap).fold(0.0, f64::max);
    let corpus_gap = corpus.iter().map(|g| g.gap).fold(0.0, f64::max);
    let grad_err = random.iter().map(|(_, e)| *e).fold(0.0, f64::max);
    let all_converged = gd_runs().all(|g| g.converged);
    let max_iters = gd_runs().map(|g| g.iterations).max().unwrap_or(0);
    let max_condition = gd_runs().map(|g| g.condition).fold(0.0, f64::max);
    let pass = random_gap <= SOLVER_TOL && corpus_gap <= SOLVER_TOL && all_converged && grad_err <= GRADIENT_REL_TOL && missing.is_empty();
    Verdict::new(
        pass,
        format!(
            "gd vs closed form: {RANDOM_SYSTEMS} random systems {random_gap:.1e}, {} corpus runs {corpus_gap:.1e} (tol {SOLVER_TOL:e}), all converged: {all_converged} \
             (at most {max_iters} iterations, condition up to {max_condition:.1e}); \
             gradient vs central differences {grad_err:.1e} relative (tol {GRADIENT_REL_TOL:e}){}",
            runs.len(),
            if missing.is_empty() { String::new() } else { format!("; missing corpus images: {}", missing.join(", ")) }
        ),
    )
}

fn performance(dir: &Path) -> Verdict {
    let (img, source) = match load(dir, "lena") {
        Some(clean) => (clean.add_noise(&NoiseModel::new(Distribution::Gaussian, SIGMA, 0)).unwrap(), "lena"),
        None => (random_image(512, 512, 10), "synthetic"),
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let times: Vec<Duration> = (0..3)
        .map(|_| {
            pool.install(|| {
                let t = Instant::now();
                denoise(&img, SIGMA, 5, &SolverConfig::default(), FilterRealization::Uwt2d).unwrap();
                t.elapsed()
            })
        })
        .collect();
    let worst = times.iter().max().unwrap();
    Verdict::new(
        *worst < TIME_BUDGET,
        format!(
            "{source} {}x{} on one thread: {} (budget {:?})",
            img.width(),
            img.height(),
            times.iter().map(|t| format!("{:.0} ms", t.as_secs_f64() * 1e3)).collect::<Vec<_>>().join(", "),
            TIME_BUDGET
        ),
    )
}

fn main() {
    let dir = corpus_dir();
    let mut failed = 0;
    let mut emit = |n: usize, name: &str, v: Verdict| {
        println!("{} {n:>2} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.pass);
    };
    emit(1, "perfect reconstruction", perfect_reconstruction());
    emit(2, "dense oracle equivalence", oracle_equivalence());
    emit(3, "risk unbiasedness", unbiasedness());

    let (runs, missing) = run_corpus(&dir);
    emit(
        4,
        "Gaussian PSNR table",
        table_check(&runs, &missing, &[G], |r| {
            let s = scores(&r.float);
            let ok = (s.output_psnr - r.row.float_psnr).abs() <= OUTPUT_PSNR_TOL
                && (s.input_psnr - r.row.input_psnr).abs() <= GAUSSIAN_INPUT_PSNR_TOL;
            (ok, format!("in {:.3}/{:.3}, out {:.3}/{:.3}", s.input_psnr, r.row.input_psnr, s.output_psnr, r.row.float_psnr))
        }),
    );
    emit(
        5,
        "uniform and Laplacian PSNR tables",
        table_check(&runs, &missing, &[U, L], |r| {
            let s = scores(&r.float);
            let ok = (s.output_psnr - r.row.float_psnr).abs() <= OUTPUT_PSNR_TOL
                && (s.input_psnr - r.row.input_psnr).abs() <= OTHER_INPUT_PSNR_TOL;
            (ok, format!("in {:.3}/{:.3}, out {:.3}/{:.3}", s.input_psnr, r.row.input_psnr, s.output_psnr, r.row.float_psnr))
        }),
    );
    emit(
        6,
        "SSIM tables",
        table_check(&runs, &missing, &DISTRIBUTIONS, |r| {
            let s = scores(&r.float);
            ((s.output_ssim - r.row.float_ssim).abs() <= SSIM_TOL, format!("{:.4}/{:.4}", s.output_ssim, r.row.float_ssim))
        }),
    );
    emit(
        7,
        "fixed-point fidelity",
        table_check(&runs, &missing, &DISTRIBUTIONS, |r| {
            let (fx, fl) = (scores(&r.fixed).output_psnr, scores(&r.float).output_psnr);
            let ok = (fx - r.row.fpga_psnr).abs() <= FIXED_PSNR_TOL && fx >= fl - FIXED_MAX_LOSS;
            (ok, format!("fixed {fx:.3}/{:.3}, float {fl:.3}", r.row.fpga_psnr))
        }),
    );
    emit(8, "cost tables", cost_tables());
    emit(9, "solver agreement", solver_agreement(&runs, &missing));
    emit(10, "performance smoke test", performance(&dir));

    println!("{} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
