//! Executes an experiment config and writes its output bundle.
//!
//! Every bundle holds the task outputs, `summary.json` with the numeric
//! results, and `manifest.json` with hashes, seed, version and runtimes. All
//! files except the manifest are a pure function of config and seed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::diffusion::{recover, solve_forward_diffusion, BoundaryData, DiffusionProblem};
use crate::error::{Error, Result};
use crate::geometry::{p3, planar_perpendicular, BoundaryPair, DomainGeometry, Point};
use crate::harness::{run_suite, seeded_pair, summary, write_reports_csv, HarnessOptions, KernelSampleSpec};
use crate::kernels::{alpha1_column, alpha2_with, Alpha2Options, KernelColumn, PointSet};
use crate::medium::GridField;
use crate::reconstruct::{anisotropy_pipeline, reconstruct_line, PipelineOptions, ReconstructionConfig};
use crate::singularity::{default_eps, expected_coefficient, singular_coefficient};
use crate::transport::{energy_map, solve_forward, Beam, BoundarySource, SolverOptions, SpatialGrid};
use crate::Dimension;

use super::config::{ExperimentConfig, SourceSpec, Task};
use super::{pgrid, selftest, tables};

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

/// What a run produced.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub out: PathBuf,
    pub files: Vec<PathBuf>,
    pub summary: Value,
    /// False when a check inside the task failed (selftest, stability).
    pub passed: bool,
}

/// Exit code for an error: 2 for input problems, 3 for numeric failures.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Io(_) | Error::Format { .. } => 2,
        _ => 3,
    }
}

struct Bundle {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Bundle {
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        self.files.push(path);
        Ok(())
    }

    fn csv(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(name, &buf)
    }

    fn grid(&mut self, name: &str, grid: &SpatialGrid, values: &[f64]) -> Result<()> {
        let field = GridField::new(vec![grid.n(), grid.n()], grid.extent().to_vec(), values.to_vec())?;
        self.write(name, &pgrid::encode(&field))
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Loads, validates and runs the config at `path`.
pub fn run_experiment(path: &Path, opts: &RunOptions) -> Result<RunReport> {
    let start = Instant::now();
    let raw = read(path)?;
    let config = ExperimentConfig::load(path)?;
    let seed = opts.seed.unwrap_or(config.seed);
    let dir = match (&opts.out, &config.output) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) => config.base.join(o),
        (None, None) => PathBuf::from("out"),
    };
    fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let mut bundle = Bundle { dir, files: Vec::new() };

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = opts.threads {
        if t == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;

    let task_start = Instant::now();
    let (result, passed) = pool.install(|| execute(&config, seed, &mut bundle))?;
    let task_time = task_start.elapsed().as_secs_f64();

    let summary = json!({
        "task": config.task.name(),
        "seed": seed,
        "passed": passed,
        "result": result,
    });
    let mut text = serde_json::to_vec_pretty(&summary).map_err(|e| Error::Numeric(e.to_string()))?;
    text.push(b'\n');
    bundle.write("summary.json", &text)?;

    let outputs: Vec<Value> = bundle
        .files
        .iter()
        .map(|f| {
            let bytes = read(f)?;
            Ok(json!({
                "file": f.file_name().map(|n| n.to_string_lossy().into_owned()),
                "bytes": bytes.len(),
                "sha256": sha256_hex(&bytes),
            }))
        })
        .collect::<Result<_>>()?;
    let manifest = json!({
        "crate": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "config": { "path": path.display().to_string(), "sha256": sha256_hex(&raw) },
        "task": config.task.name(),
        "seed": seed,
        "threads": pool.current_num_threads(),
        "outputs": outputs,
        "runtime_s": { "task": task_time, "total": start.elapsed().as_secs_f64() },
    });
    let mut file = fs::File::create(bundle.dir.join("manifest.json"))?;
    serde_json::to_writer_pretty(&mut file, &manifest).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(file)?;

    Ok(RunReport {
        out: bundle.dir.clone(),
        files: bundle.files,
        summary,
        passed,
    })
}

fn rel_l1(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
    let den: f64 = b.iter().map(|y| y.abs()).sum();
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

fn point(v: &[f64]) -> Point {
    let mut p = Point::zeros();
    for (i, x) in v.iter().enumerate() {
        p[i] = *x;
    }
    p
}

fn execute(config: &ExperimentConfig, seed: u64, out: &mut Bundle) -> Result<(Value, bool)> {
    match &config.task {
        Task::Forward {
            source,
            grid_n,
            angles,
            tol,
            max_orders,
        } => {
            let medium = config.medium()?;
            let source = match source {
                SourceSpec::Uniform(c) => BoundarySource::uniform(*c),
                SourceSpec::Beam { pair, width } => {
                    BoundarySource::Beam(Beam::new(config.pair(pair)?).with_widths(*width, *width))
                }
            };
            let opts = SolverOptions {
                grid_n: *grid_n,
                angles: *angles,
                tol: *tol,
                max_orders: *max_orders,
                ..Default::default()
            };
            let sol = solve_forward(&medium, &source, &opts)?;
            let h = energy_map(&medium, &sol.field)?;
            out.grid("H.pgrid", &h.grid, &h.values)?;
            let area = h.grid.cell_area();
            out.csv("orders.csv", |w| {
                tables::write_rows(
                    w,
                    &["order", "energy", "residual"],
                    sol.order_energy.iter().zip(&sol.residuals).enumerate().map(|(m, (e, r))| {
                        vec![m as f64, e.iter().sum::<f64>() * area, *r]
                    }),
                )
            })?;
            Ok((
                json!({
                    "integral_h": h.integral(),
                    "max_h": h.values.iter().copied().fold(0.0, f64::max),
                    "orders": sol.residuals.len(),
                    "final_residual": sol.residuals.last(),
                }),
                true,
            ))
        }
        Task::Kernel { pair, lattice, alpha2 } => {
            let medium = config.medium()?;
            let pair = config.pair(pair)?;
            let geom = medium.geometry();
            let points: Vec<Point> = PointSet::lattice(geom, *lattice)
                .points
                .into_iter()
                .filter(|x| pair.transverse_distance(x) > 1e-9)
                .collect();
            let col = alpha1_column(&medium, &pair, &points)?;
            let n = geom.n();
            out.csv("alpha1.csv", |w| tables::write_column(w, &col, n))?;
            let mut result = json!({
                "points": points.len(),
                "alpha1_max": col.values.iter().copied().fold(0.0, f64::max),
                "alpha1_sum": col.values.iter().sum::<f64>(),
            });
            if *alpha2 {
                use rayon::prelude::*;
                let values: Result<Vec<f64>> = points
                    .par_iter()
                    .map(|x| alpha2_with(&medium, x, &pair, Alpha2Options::coarse()))
                    .collect();
                let col2 = KernelColumn {
                    pair,
                    points: points.clone(),
                    values: values?,
                };
                out.csv("alpha2.csv", |w| tables::write_column(w, &col2, n))?;
                result["alpha2_max"] = json!(col2.values.iter().copied().fold(0.0, f64::max));
            }
            Ok((result, true))
        }
        Task::Asymfit { pair, t0_fraction, eps } => {
            let medium = config.medium()?;
            let pair = config.pair(pair)?;
            let geom = medium.geometry();
            let t0 = t0_fraction * pair.chord(geom);
            let x = pair.at(t0);
            let perp = match geom.dimension() {
                Dimension::Two => planar_perpendicular(&pair.direction),
                Dimension::Three => crate::geometry::orthonormal_pair(&pair.direction).0,
            };
            let eps = eps.clone().unwrap_or_else(|| default_eps(&medium, &x, &perp));
            let fit = singular_coefficient(&medium, &pair, t0, &eps, &perp)?;
            out.csv("fit.csv", |w| tables::write_fit(w, &fit))?;
            let expected = expected_coefficient(&medium, &x, &pair.direction);
            Ok((
                json!({
                    "law": format!("{:?}", fit.law),
                    "coefficient": fit.coefficient,
                    "expected": expected,
                    "relative_error": (fit.coefficient - expected).abs() / expected.abs().max(f64::MIN_POSITIVE),
                    "intercept": fit.intercept,
                    "residual": fit.residual,
                    "correction_order": fit.correction_order,
                }),
                true,
            ))
        }
        Task::ReconSigma {
            lines,
            samples,
            collar,
            known_collar,
            smoothing,
        } => {
            let medium = config.medium()?;
            let pairs: Vec<BoundaryPair> = lines.iter().map(|l| config.pair(l)).collect::<Result<_>>()?;
            let mut rc = ReconstructionConfig::new(*collar, pairs.clone())
                .map_err(|e| Error::Config(e.to_string()))?
                .with_smoothing(*smoothing);
            if *known_collar {
                rc = rc.with_known(medium.clone());
            }
            let mut per_line = Vec::new();
            for (i, pair) in pairs.iter().enumerate() {
                let line = reconstruct_line(&medium, pair, *samples, &rc)?;
                out.csv(&format!("line_{i}.csv"), |w| tables::write_line(w, &line))?;
                let (truth_s, truth_a): (Vec<f64>, Vec<f64>) = line
                    .ts
                    .iter()
                    .map(|t| {
                        let x = pair.at(*t);
                        (medium.sigma(&x, &pair.direction), medium.sigma_a(&x, &pair.direction))
                    })
                    .unzip();
                per_line.push(json!({
                    "line": i,
                    "sigma_rel_l1": rel_l1(&line.sigma, &truth_s),
                    "sigma_a_rel_l1": rel_l1(&line.sigma_a, &truth_a),
                    "pinned_by_collar": line.diagnostics.pinned_by_collar,
                    "warnings": line.diagnostics.warnings,
                }));
            }
            Ok((json!({ "lines": per_line }), true))
        }
        Task::ReconG { probes, samples, collar } => {
            let medium = config.medium()?;
            let geom = medium.geometry();
            let points: Vec<Point> = probes.iter().map(|p| point(p)).collect();
            let through = BoundaryPair::through(geom, &points[0], &crate::geometry::planar_direction(0.0))?;
            let rc = ReconstructionConfig::new(*collar, vec![through])
                .map_err(|e| Error::Config(e.to_string()))?
                .with_known(medium.clone());
            let opts = PipelineOptions {
                samples: *samples,
                ..Default::default()
            };
            let (est, _field) = anisotropy_pipeline(&medium, &points, &rc, &opts)?;
            out.csv("probes.csv", |w| tables::write_probes(w, &est, 2))?;
            let rows: Vec<Value> = est
                .iter()
                .map(|e| {
                    let truth = medium.anisotropy(&e.point);
                    json!({
                        "g": e.g,
                        "g_true": truth,
                        "sigma_g": e.sigma_g,
                        "sigma_g_true": medium.sigma_g(&e.point),
                    })
                })
                .collect();
            Ok((json!({ "probes": rows }), true))
        }
        Task::Diffusion {
            grid_n,
            diffusion,
            sigma_a,
            boundary,
        } => {
            let geom = config.domain()?;
            let d = config.field(diffusion)?;
            let sa = config.field(sigma_a)?;
            let phi = BoundaryData::constant(*boundary);
            let truth_i = solve_forward_diffusion(&geom, *grid_n, &d, &sa, &phi)?;
            let grid = truth_i.grid;
            let h: Vec<f64> = (0..grid.cells())
                .map(|c| {
                    if truth_i.mask[c] {
                        sa.value(&grid.center_of(c)) * truth_i.values[c]
                    } else {
                        0.0
                    }
                })
                .collect();
            let problem = DiffusionProblem::new(geom, *grid_n, d, phi, h.clone())?;
            let (intensity, map) = recover(&problem)?;
            out.grid("H.pgrid", &grid, &h)?;
            out.grid("intensity.pgrid", &grid, &intensity.values)?;
            out.grid("sigma_a.pgrid", &grid, &map.values)?;
            let (got, want): (Vec<f64>, Vec<f64>) = (0..grid.cells())
                .filter(|&c| intensity.mask[c] && !map.excluded.contains(&c))
                .map(|c| (map.values[c], sa.value(&grid.center_of(c))))
                .unzip();
            Ok((
                json!({
                    "sigma_a_rel_l1": rel_l1(&got, &want),
                    "excluded": map.excluded.len(),
                    "vanishing": map.vanishing.len(),
                    "iterations": intensity.iterations,
                    "residual": intensity.residual,
                }),
                true,
            ))
        }
        Task::Stability { pairs, bound_samples } => {
            let geom = config.domain()?;
            let mut all = Vec::new();
            for k in 0..*pairs as u64 {
                let s = seed.wrapping_add(k);
                let (a, b) = seeded_pair(geom, s)?;
                let (pair, probe) = stability_pair(&geom)?;
                let opts = HarnessOptions { seed: s, ..Default::default() };
                let spec = KernelSampleSpec {
                    samples: *bound_samples,
                    seed: s,
                };
                all.extend(run_suite(&a, &b, &pair, &probe, &opts, &spec)?);
            }
            out.csv("stability.csv", |w| write_reports_csv(&all, w))?;
            let passed = all.iter().all(|r| r.passed);
            Ok((
                json!({
                    "reports": all.len(),
                    "failed": all.iter().filter(|r| !r.passed).map(|r| r.id.clone()).collect::<Vec<_>>(),
                    "summary": summary(&all),
                }),
                passed,
            ))
        }
        Task::Selftest {} => {
            let checks = selftest::run_checks()?;
            out.csv("selftest.csv", |w| {
                let mut wr = csv::Writer::from_writer(w);
                for c in &checks {
                    wr.serialize(c).map_err(|e| Error::Io(e.to_string()))?;
                }
                wr.flush()?;
                Ok(())
            })?;
            let passed = checks.iter().all(|c| c.passed);
            Ok((json!({ "checks": checks }), passed))
        }
    }
}

/// Fixed probing chord for the stability task.
fn stability_pair(geom: &DomainGeometry) -> Result<(BoundaryPair, Point)> {
    let c = geom.center();
    let r = geom.radius();
    let pair = match geom.dimension() {
        Dimension::Two => BoundaryPair::planar(geom, 2.8, 0.15)?,
        Dimension::Three => BoundaryPair::new(
            geom,
            c + p3(0.0, 0.0, -r),
            p3(0.0, 0.1, 1.0).normalize(),
        )?,
    };
    let frac = match geom.dimension() {
        Dimension::Two => 0.6,
        Dimension::Three => 0.5,
    };
    Ok((pair, pair.at(frac * pair.chord(geom))))
}
