//! The experiments behind each subcommand. Each returns the files it wrote,
//! together with the failure when it did not succeed.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::access::{accessibility_drift, holonomy as holonomy_step};
use crate::assembly::{band_stretch, birkhoff_profile, BandLayout, Observable};
use crate::cocycle::{expansion_integral, lyapunov_spectrum, LyapunovReport};
use crate::error::Error;
use crate::hyperbolic::surface_group;
use crate::perturb::{bumps, MapKind, OrbitData, System};
use crate::product::{ChartPoint, ProductPoint};

use super::config::LabConfig;
use super::output::{line_plot_svg, num, write_text, Table};
use super::Failure;

pub type Outcome = Result<Vec<PathBuf>, (Vec<PathBuf>, Failure)>;

fn fail<T>(f: Failure) -> Result<T, (Vec<PathBuf>, Failure)> {
    Err((Vec::new(), f))
}

fn build_system(cfg: &LabConfig) -> Result<System, (Vec<PathBuf>, Failure)> {
    System::build(&cfg.construction).or_else(|e| fail(e.into()))
}

fn write(table: &Table, out: &Path) -> Result<Vec<PathBuf>, (Vec<PathBuf>, Failure)> {
    table.write(out).or_else(|e| fail(e.into()))?;
    Ok(vec![out.to_path_buf()])
}

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

/// The invariant suite. Prints a table and fails if any check fails.
pub fn validate(cfg: &LabConfig) -> Result<(), Failure> {
    let c = &cfg.construction;
    let mut checks = Vec::new();
    let mut push = |name, passed, detail: String| checks.push(Check { name, passed, detail });

    let g = surface_group();
    let rel = g.relation_product();
    push("group relation", g.verify_relation(1e-10), format!("product {rel:?}"));

    let orbit = match OrbitData::build(c) {
        Ok(o) => Some(o),
        Err(e) => {
            push("orbit data", false, e.to_string());
            None
        }
    };
    let mut sys = None;
    if let Some(orbit) = orbit {
        let v = c.violations(orbit.delta);
        push(
            "parameter constraints",
            v.is_empty(),
            if v.is_empty() { format!("delta = {:.6}", orbit.delta) } else { v.join("; ") },
        );
        if v.is_empty() {
            match System::from_orbit(c, orbit) {
                Ok(s) => sys = Some(s),
                Err(e) => push("construction", false, e.to_string()),
            }
        }
    }

    if let Some(sys) = &sys {
        push("construction", true, format!("{} boxes", sys.boxes.len()));

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let chart = sys.h2.chart();
        let h = chart.half_widths();
        let factors: Vec<f64> = (0..200)
            .map(|_| {
                let p = ChartPoint::new(
                    rng.gen_range(-h[0]..h[0]),
                    rng.gen_range(-h[1]..h[1]),
                    rng.gen_range(-h[2]..h[2]),
                    0.0,
                );
                chart.measured_volume_factor(&p, 1e-5)
            })
            .collect();
        let mean = factors.iter().sum::<f64>() / factors.len() as f64;
        let spread = factors.iter().map(|f| (f / mean - 1.0).abs()).fold(0.0, f64::max);
        push("chart volume", spread <= 1e-4, format!("relative spread {spread:.2e}"));

        let s = &sys.suite;
        let bump_ok = s.psi(0.0) == 1.0
            && s.big_psi(0.0) == 0.0
            && s.xi(0.0) == 0.0
            && s.xi(1.0) == 0.0
            && s.phi(c.eps1) == 0.0
            && bumps::smooth_step(0.0) == 0.0
            && bumps::smooth_step(1.0) == 1.0;
        push(
            "bump conditions",
            bump_ok,
            format!("psi(0) = {}, Psi(0) = {}, xi(0) = {}, xi(1) = {}", s.psi(0.0), s.big_psi(0.0), s.xi(0.0), s.xi(1.0)),
        );

        let rep = sys.overlap_check(c.overlap_samples.max(10_000), c.setup_seed.wrapping_add(1));
        push(
            "support disjointness",
            rep.violations == 0,
            format!("{} samples, {} violations {}", rep.samples, rep.violations, rep.detail.join("; ")),
        );

        let mut worst = 0usize;
        let mut err = None;
        for i in 0..1000 {
            let mut w = ProductPoint::random(&mut rng);
            w.z = if i % 2 == 0 { 0.0 } else { 1.0 };
            match (sys.step(MapKind::P, &w), sys.step(MapKind::S, &w)) {
                (Ok(a), Ok(b)) if a == b => {}
                (Ok(_), Ok(_)) => worst += 1,
                (Err(e), _) | (_, Err(e)) => err = Some(e),
            }
        }
        push(
            "boundary fixing",
            worst == 0 && err.is_none(),
            match err {
                Some(e) => e.to_string(),
                None => format!("{worst} of 1000 boundary points moved"),
            },
        );
    }

    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for ch in &checks {
        println!("{:<width$}  {}  {}", ch.name, if ch.passed { "ok  " } else { "FAIL" }, ch.detail);
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Science(format!("failed checks: {}", failed.join(", "))))
    }
}

fn parse_map(s: &str) -> Result<Option<MapKind>, Failure> {
    if s == "f" || s == "F" {
        return Ok(None);
    }
    s.parse::<MapKind>().map(Some).map_err(|e| Failure::Usage(e.to_string()))
}

fn random_start(seed: u64, z: f64) -> ProductPoint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = ProductPoint::random(&mut rng);
    w.z = z;
    w
}

fn lyapunov_row(table: &mut Table, map: &str, band: &str, seed: u64, r: &Result<LyapunovReport, Error>) {
    match r {
        Ok(r) => {
            let mut row = vec![map.to_string(), band.to_string(), r.iterations.to_string()];
            row.extend(r.exponents.iter().map(|x| num(*x)));
            row.extend(r.std_errors.iter().map(|x| num(*x)));
            row.push(seed.to_string());
            table.push(row);
        }
        Err(e) => {
            let it = match e {
                Error::NumericalBlowup(i) => *i,
                _ => 0,
            };
            let mut row = vec![map.to_string(), band.to_string(), it.to_string()];
            row.extend(std::iter::repeat(num(f64::NAN)).take(8));
            row.push(seed.to_string());
            table.push(row);
        }
    }
}

pub fn lyapunov(cfg: &LabConfig, out: &Path) -> Outcome {
    let l = &cfg.lyapunov;
    let kind = parse_map(&l.map).or_else(fail)?;
    let sys = build_system(cfg)?;
    let seeds: Vec<u64> = (0..l.runs.max(1) as u64).map(|i| cfg.seed.wrapping_add(i)).collect();
    let mut table = Table::new(&[
        "map", "band", "iter_count", "lambda_u", "lambda_s", "lambda_c", "lambda_n", "se_u", "se_s", "se_c", "se_n",
        "seed",
    ]);
    let mut first_error = None;
    match kind {
        Some(kind) => {
            let z0 = if l.z0 >= 0.0 {
                l.z0
            } else if kind == MapKind::P {
                cfg.construction.box_z
            } else {
                cfg.construction.z_star
            };
            let results: Vec<_> = seeds
                .par_iter()
                .map(|&s| lyapunov_spectrum(&sys, kind, &random_start(s, z0), l.n_iters, l.qr_every, s))
                .collect();
            for (s, r) in seeds.iter().zip(&results) {
                lyapunov_row(&mut table, kind.name(), "-", *s, r);
                if let Err(e) = r {
                    first_error.get_or_insert_with(|| e.to_string());
                }
            }
        }
        None => {
            let layout = BandLayout::build(&sys, &cfg.assembly_config()).or_else(|e| fail(e.into()))?;
            let unit_z = if l.z0 > 0.0 && l.z0 < 1.0 { l.z0 } else { cfg.construction.box_z };
            let jobs: Vec<(usize, u64)> = l.bands.iter().flat_map(|&b| seeds.iter().map(move |&s| (b, s))).collect();
            let results: Vec<_> = jobs
                .par_iter()
                .map(|&(b, s)| {
                    let band = layout.band(b)?;
                    let w = random_start(s, band.lo + unit_z * band.len());
                    layout.lyapunov(&w, l.n_iters, l.qr_every, s)
                })
                .collect();
            for ((b, s), r) in jobs.iter().zip(&results) {
                if let Err(Error::BadIndex(_)) = r {
                    return fail(Failure::Usage(format!("band {b} is not retained (n_max = {})", layout.n_max)));
                }
                lyapunov_row(&mut table, "f", &b.to_string(), *s, r);
                if let Err(e) = r {
                    first_error.get_or_insert_with(|| e.to_string());
                }
            }
        }
    }
    let files = write(&table, out)?;
    match first_error {
        Some(e) => Err((files, Failure::Science(e))),
        None => Ok(files),
    }
}

pub fn prop51(cfg: &LabConfig, out: &Path, svg: Option<&Path>) -> Outcome {
    let p = &cfg.prop51;
    if p.alpha_grid.iter().any(|a| !(*a >= 0.0)) {
        return fail(Failure::Usage("alpha grid values must be non-negative".into()));
    }
    let sys = build_system(cfg)?;
    let mut table = Table::new(&["alpha", "L", "stderr", "excluded_fraction"]);
    let mut points = Vec::new();
    let mut excluded = Vec::new();
    for &a in &p.alpha_grid {
        let e = expansion_integral(&sys, a, p.n_samples, cfg.seed).or_else(|e| fail(e.into()))?;
        table.push(vec![num(a), num(e.value), num(e.std_error), num(e.excluded_fraction)]);
        points.push((a, e.value));
        if e.excluded_fraction > 0.01 {
            excluded.push(format!("alpha {a}: excluded fraction {:.3}", e.excluded_fraction));
        }
    }
    let mut files = write(&table, out)?;
    if let Some(svg) = svg {
        let text = line_plot_svg(&points, sys.delta, "alpha", "L(alpha)");
        write_text(svg, &text).map_err(|e| (files.clone(), e.into()))?;
        files.push(svg.to_path_buf());
    }
    if excluded.is_empty() {
        Ok(files)
    } else {
        Err((files, Failure::Science(excluded.join("; "))))
    }
}

pub fn drift(cfg: &LabConfig, out: &Path) -> Outcome {
    let d = &cfg.drift;
    let kind = match parse_map(&d.map).or_else(fail)? {
        Some(k) => k,
        None => return fail(Failure::Usage("drift runs on S, R, Q or P".into())),
    };
    if d.z0_grid.iter().any(|z| !(*z > 0.0 && *z < 1.0)) {
        return fail(Failure::Usage("z0 values must lie in (0, 1)".into()));
    }
    let sys = build_system(cfg)?;
    let results: Vec<_> = d.z0_grid.par_iter().map(|&z| accessibility_drift(&sys, kind, z)).collect();
    let mut table = Table::new(&["z0", "z1", "z2", "z3", "z4", "z5", "bound_rhs", "legs_ok"]);
    let mut errors = Vec::new();
    for (z0, r) in d.z0_grid.iter().zip(results) {
        match r {
            Ok(r) => {
                let mut row: Vec<String> = r.z.iter().map(|x| num(*x)).collect();
                row.push(num(r.bound_rhs));
                row.push(r.legs_ok.to_string());
                table.push(row);
            }
            Err(e) => errors.push(format!("z0 = {z0}: {e}")),
        }
    }
    let files = write(&table, out)?;
    if errors.is_empty() {
        Ok(files)
    } else {
        Err((files, Failure::Science(errors.join("; "))))
    }
}

pub fn birkhoff(cfg: &LabConfig, out: &Path) -> Outcome {
    let b = &cfg.birkhoff;
    let obs: Observable = b.observable.parse().or_else(|e: Error| fail(Failure::Usage(e.to_string())))?;
    if let Some(bad) = b.bands.iter().find(|&&n| n == 0 || n > cfg.assembly.n_max) {
        return fail(Failure::Usage(format!("band {bad} is not retained (n_max = {})", cfg.assembly.n_max)));
    }
    let sys = build_system(cfg)?;
    let layout = BandLayout::build(&sys, &cfg.assembly_config()).or_else(|e| fail(e.into()))?;
    let mut table = Table::new(&["band", "start_index", "observable", "average", "stderr"]);
    for &n in &b.bands {
        let band = layout.band(n).or_else(|e| fail(e.into()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(n as u64);
        let starts: Vec<ProductPoint> = (0..b.n_starts)
            .map(|_| {
                let mut w = ProductPoint::random(&mut rng);
                w.z = band.lo + rng.gen_range(0.05..0.95) * band.len();
                w
            })
            .collect();
        let avgs = birkhoff_profile(&layout, obs, &starts, b.n_iters).or_else(|e| fail(e.into()))?;
        for a in avgs {
            table.push(vec![n.to_string(), a.start_index.to_string(), obs.name().into(), num(a.average), num(a.std_error)]);
        }
    }
    write(&table, out)
}

pub fn holonomy(cfg: &LabConfig, out: &Path) -> Outcome {
    let c = &cfg.construction;
    let orbit = OrbitData::build(c).or_else(|e| fail(e.into()))?;
    let mut table = Table::new(&["k", "approximating_length", "displacement"]);
    let mut errors = Vec::new();
    for &k in &cfg.holonomy.k_grid {
        let r = orbit
            .c_prime
            .approximating(k, &c.companion_word)
            .and_then(|ce| Ok((ce.length(), holonomy_step(orbit.c_prime.lift(), &ce)?.displacement)));
        match r {
            Ok((len, d)) => table.push(vec![k.to_string(), num(len), num(d)]),
            Err(e) => errors.push(format!("k = {k}: {e}")),
        }
    }
    let files = write(&table, out)?;
    if errors.is_empty() {
        Ok(files)
    } else {
        Err((files, Failure::Science(errors.join("; "))))
    }
}

pub fn assemble_report(cfg: &LabConfig, out: &Path) -> Outcome {
    let sys = build_system(cfg)?;
    let acfg = cfg.assembly_config();
    let layout = BandLayout::build(&sys, &acfg).or_else(|e| fail(e.into()))?;
    let n = cfg.assembly.report_samples;
    let seed = cfg.seed.wrapping_add(1);
    let mut table = Table::new(&[
        "band", "lo", "hi", "stretch", "strength_scale", "fn_distance", "c0", "c1_analytic", "c1_fd", "bound",
    ]);
    let mut over = Vec::new();
    for b in &layout.bands {
        let d = layout.band_c1(b.index, n, seed, acfg.fd_step).or_else(|e| fail(e.into()))?;
        let bound = 5.0 * acfg.delta_prime / (b.index as f64).powi(2);
        let stretch = band_stretch(b.index as i64).or_else(|e| fail(e.into()))?;
        table.push(vec![
            b.index.to_string(),
            num(b.lo),
            num(b.hi),
            num(stretch),
            num(b.scale),
            num(b.measured.c1()),
            num(d.c0),
            num(d.c1_analytic),
            num(d.c1_fd),
            num(bound),
        ]);
        if d.c1() > bound * 1.01 {
            over.push(format!("band {}: {:.3e} > {:.3e}", b.index, d.c1(), bound));
        }
    }
    let g = layout.distance_from_identity(n, seed, acfg.fd_step).or_else(|e| fail(e.into()))?;
    let d0 = cfg.construction.delta0;
    table.push(vec![
        "-".into(),
        num(0.0),
        num(1.0),
        num(1.0),
        num(1.0),
        num(f64::NAN),
        num(g.c0),
        num(g.c1_analytic),
        num(g.c1_fd),
        num(d0),
    ]);
    if g.c1() > d0 {
        over.push(format!("distance from the identity {:.3e} > {d0}", g.c1()));
    }
    let files = write(&table, out)?;
    if over.is_empty() {
        Ok(files)
    } else {
        Err((files, Failure::Science(over.join("; "))))
    }
}
