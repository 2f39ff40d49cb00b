//! Batch experiment driver: reads a TOML experiment, runs the requested
//! solves or diagnostics and writes CSV artifacts plus a JSON manifest.

pub mod config;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use csie_core::basis::RwgBasis;
use csie_core::formulations::{
    build_cfie, build_csie_j, build_csie_jm, build_efie, build_mfie, solve, FormulationKind, SystemMatrices, TestedFields,
};
use csie_core::linalg::LinearOperator;
use csie_core::mesh::{mesh_quality, Mesh};
use csie_core::operators::io::{cache_key, MatrixCache};
use csie_core::operators::{assemble, OperatorSet, QuadratureConfig, Request};
use csie_core::postproc::{
    bistatic_rcs, direction_grid, far_field, farfield_error_db, mie_far_field, singular_spectrum, FarFieldMeta,
    FarFieldSet,
};
use csie_core::{DenseComplexMatrix, PhysicalContext};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub use config::{ConfigError, ExperimentConfig, RunSpec};

/// Largest number of unknowns the spectrum command will densify.
pub const SPECTRUM_MAX_UNKNOWNS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Spectrum,
    MeshInfo,
    AlphaTradeoff,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Spectrum => "spectrum",
            Command::MeshInfo => "mesh-info",
            Command::AlphaTradeoff => "alpha-tradeoff",
        }
    }
}

/// Failures that stop the whole command.
#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => e.fmt(f),
            CliError::Io(m) => write!(f, "output error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

/// What a finished command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub runs: usize,
    pub failures: usize,
    pub manifest: PathBuf,
}

impl Outcome {
    /// 0 on full success, 2 when some runs failed.
    pub fn exit_code(&self) -> i32 {
        if self.failures == 0 {
            0
        } else {
            2
        }
    }
}

/// Writes files into the output folder and remembers their hashes.
struct Artifacts {
    dir: PathBuf,
    hashes: BTreeMap<String, String>,
}

impl Artifacts {
    fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Artifacts {
            dir: dir.to_path_buf(),
            hashes: BTreeMap::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<String, CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.hashes.insert(name.to_string(), sha256_hex(contents.as_bytes()));
        Ok(name.to_string())
    }

    fn finish(self, manifest: Value) -> Result<PathBuf, CliError> {
        let mut manifest = manifest;
        manifest["outputs"] = json!(self.hashes);
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises") + "\n";
        fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Shortest round-trip text of a float; empty for `None`.
fn num(x: Option<f64>) -> String {
    x.map(|v| format!("{v:?}")).unwrap_or_default()
}

/// Shared state of one command invocation.
struct Session<'a> {
    cfg: &'a ExperimentConfig,
    mesh: Mesh,
    basis: RwgBasis,
    quad: QuadratureConfig,
    cache: Option<MatrixCache>,
}

impl<'a> Session<'a> {
    fn new(cfg: &'a ExperimentConfig, cache: Option<&Path>) -> Result<Self, CliError> {
        let mesh = cfg.build_mesh()?;
        let basis = RwgBasis::new(&mesh).map_err(|e| ConfigError(e.to_string()))?;
        let cache = cache
            .map(MatrixCache::new)
            .transpose()
            .map_err(|e| CliError::Io(e.to_string()))?;
        Ok(Session {
            cfg,
            mesh,
            basis,
            quad: QuadratureConfig::default(),
            cache,
        })
    }

    /// Assembles what `kinds` need, reading and filling the cache.
    fn matrices(&self, ctx: &PhysicalContext, kinds: &[FormulationKind]) -> csie_core::Result<SystemMatrices> {
        let need = kinds.iter().fold(Request { t: false, k: false, k_nxb: false }, |acc, k| {
            let r = k.request();
            Request {
                t: acc.t || r.t,
                k: acc.k || r.k,
                k_nxb: acc.k_nxb || r.k_nxb,
            }
        });
        let Some(cache) = &self.cache else {
            return Ok(SystemMatrices::from_operators(&self.basis, assemble(&self.basis, ctx.k0, &self.quad, need)?));
        };
        let key = cache_key(&self.mesh, ctx.k0, &self.quad);
        let fetch = |wanted: bool, name: &str| wanted.then(|| cache.get(&key, name)).flatten();
        let mut ops = OperatorSet {
            t: fetch(need.t, "t"),
            k: fetch(need.k, "k"),
            k_nxb: fetch(need.k_nxb, "k_nxb"),
        };
        let missing = Request {
            t: need.t && ops.t.is_none(),
            k: need.k && ops.k.is_none(),
            k_nxb: need.k_nxb && ops.k_nxb.is_none(),
        };
        if missing.t || missing.k || missing.k_nxb {
            let fresh = assemble(&self.basis, ctx.k0, &self.quad, missing)?;
            let store = |m: &Option<DenseComplexMatrix>, name: &str| -> csie_core::Result<()> {
                m.as_ref().map_or(Ok(()), |m| cache.put(&key, name, m))
            };
            store(&fresh.t, "t")?;
            store(&fresh.k, "k")?;
            store(&fresh.k_nxb, "k_nxb")?;
            ops.t = ops.t.or(fresh.t);
            ops.k = ops.k.or(fresh.k);
            ops.k_nxb = ops.k_nxb.or(fresh.k_nxb);
        }
        Ok(SystemMatrices::from_operators(&self.basis, ops))
    }

    fn mesh_json(&self) -> Value {
        json!({
            "vertices": self.mesh.num_vertices(),
            "triangles": self.mesh.num_triangles(),
            "unknowns": self.basis.len(),
            "sha256": sha256_hex(self.mesh.to_off().as_bytes()),
        })
    }

    fn manifest(&self, command: Command, frequencies: &[f64], runs: Vec<Value>) -> Value {
        json!({
            "tool": "csie",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command.name(),
            "config": self.cfg,
            "mesh": self.mesh_json(),
            "frequencies_hz": frequencies,
            "runs": runs,
        })
    }
}

fn run_json(freq: f64, run: &RunSpec) -> Value {
    let f = &run.formulation;
    json!({
        "frequency_hz": freq,
        "label": run.label(),
        "formulation": f.kind.name(),
        "alpha": f.alpha,
        "comb": f.cfie_comb,
        "jm_weighting": f.jm_weighting,
        "inner_tol": f.inner_tol,
        "inner_max_iter": f.inner_max_iter,
        "tol": run.solver.tol,
        "max_iter": run.solver.max_iter,
        "restart": run.solver.restart,
        "preconditioner": format!("{:?}", run.preconditioner).to_ascii_lowercase(),
    })
}

/// Result of one solve with its far field.
struct Solved {
    iterations: usize,
    achieved: f64,
    converged: bool,
    inner_per_matvec: Option<f64>,
    history_csv: String,
    far_field: FarFieldSet,
}

fn solve_one(
    s: &Session,
    run: &RunSpec,
    mats: &SystemMatrices,
    fields: &TestedFields,
    ctx: &PhysicalContext,
    dirs: &[(f64, f64)],
) -> csie_core::Result<Solved> {
    let start = Instant::now();
    let sol = solve(&run.formulation, mats, fields, ctx, &run.solver, run.preconditioner)?;
    let mut ff = far_field(&s.basis, &sol.electric, sol.magnetic.as_deref(), ctx, dirs)?;
    ff.meta = FarFieldMeta {
        formulation: run.formulation.kind.name().into(),
        alpha: run.formulation.kind.has_magnetic_current().then_some(run.formulation.alpha),
        frequency: ctx.frequency,
        mesh_id: sha256_hex(s.mesh.to_off().as_bytes()),
        unknowns: s.basis.len(),
    };
    eprintln!(
        "  {} at {:.6e} Hz: {} iterations, residual {:.3e}, {:.2} s",
        run.label(),
        ctx.frequency,
        sol.report.iterations,
        sol.report.achieved,
        start.elapsed().as_secs_f64()
    );
    Ok(Solved {
        iterations: sol.report.iterations,
        achieved: sol.report.achieved,
        converged: sol.report.converged(),
        inner_per_matvec: sol.report.inner_per_matvec(),
        history_csv: sol.report.history_csv(),
        far_field: ff,
    })
}

fn kinds(runs: &[RunSpec]) -> Vec<FormulationKind> {
    runs.iter().map(|r| r.formulation.kind).collect()
}

/// Runs `command` for `cfg`, writing into `out`.
pub fn execute(command: Command, cfg: &ExperimentConfig, out: &Path, cache: Option<&Path>) -> Result<Outcome, CliError> {
    cfg.validate()?;
    match command {
        Command::Solve => cmd_solve(cfg, out, cache),
        Command::Spectrum => cmd_spectrum(cfg, out, cache),
        Command::MeshInfo => cmd_mesh_info(cfg, out),
        Command::AlphaTradeoff => cmd_alpha_tradeoff(cfg, out, cache),
    }
}

fn cmd_solve(cfg: &ExperimentConfig, out: &Path, cache: Option<&Path>) -> Result<Outcome, CliError> {
    let runs = cfg.runs()?;
    let freqs = cfg.frequencies()?;
    let pw = cfg.plane_wave()?;
    let rule = cfg.rhs_rule()?;
    let dirs = direction_grid(cfg.solver.far_field_step).map_err(|e| ConfigError(e.to_string()))?;
    let session = Session::new(cfg, cache)?;
    let mut art = Artifacts::new(out)?;
    let mut summary = String::from(
        "frequency_hz,label,formulation,alpha,comb,status,iterations,achieved_residual,inner_per_matvec,error_db\n",
    );
    let mut records = Vec::new();
    let mut failures = 0;

    for (fi, &freq) in freqs.iter().enumerate() {
        let ctx = PhysicalContext::from_frequency(freq).map_err(|e| ConfigError(e.to_string()))?;
        eprintln!("frequency {:.6e} Hz ({}/{})", freq, fi + 1, freqs.len());
        let mats = session.matrices(&ctx, &kinds(&runs));
        let fields = TestedFields::new(&session.basis, &pw, &ctx, rule);
        let reference = cfg.mie_diameter().map(|d| mie_far_field(d, &ctx, &pw, &dirs));
        for run in &runs {
            let f = &run.formulation;
            let mut record = run_json(freq, run);
            let result = mats
                .as_ref()
                .map_err(ToString::to_string)
                .and_then(|m| solve_one(&session, run, m, &fields, &ctx, &dirs).map_err(|e| e.to_string()));
            let mut row = |status: &str, solved: Option<(&Solved, Option<f64>)>| {
                let (iters, achieved, inner, err) = match solved {
                    Some((s, e)) => (s.iterations.to_string(), num(Some(s.achieved)), num(s.inner_per_matvec), num(e)),
                    None => Default::default(),
                };
                writeln!(
                    summary,
                    "{freq:?},{},{},{:?},{:?},{status},{iters},{achieved},{inner},{err}",
                    run.label(),
                    f.kind.name(),
                    f.alpha,
                    f.cfie_comb
                )
                .expect("write to string");
            };
            match result {
                Ok(solved) => {
                    let stem = format!("f{fi:03}-{}", run.label());
                    let err = match &reference {
                        Some(r) => farfield_error_db(&solved.far_field, r).ok(),
                        None => None,
                    };
                    let rcs = bistatic_rcs(&solved.far_field, &pw).map_err(|e| ConfigError(e.to_string()))?;
                    let files = vec![
                        art.write(&format!("{stem}-history.csv"), &solved.history_csv)?,
                        art.write(&format!("{stem}-farfield.csv"), &solved.far_field.to_csv())?,
                        art.write(&format!("{stem}-rcs.csv"), &csie_core::postproc::rcs_csv(&solved.far_field, &rcs))?,
                    ];
                    let status = if solved.converged { "converged" } else { "not-converged" };
                    if !solved.converged {
                        failures += 1;
                    }
                    row(status, Some((&solved, err)));
                    record["status"] = json!(status);
                    record["iterations"] = json!(solved.iterations);
                    record["achieved_residual"] = json!(solved.achieved);
                    record["error_db"] = json!(err);
                    record["files"] = json!(files);
                }
                Err(e) => {
                    eprintln!("  {} at {:.6e} Hz failed: {e}", run.label(), freq);
                    failures += 1;
                    row("failed", None);
                    record["status"] = json!("failed");
                    record["message"] = json!(e.to_string());
                }
            }
            records.push(record);
        }
    }
    art.write("summary.csv", &summary)?;
    let manifest = session.manifest(Command::Solve, &freqs, records);
    Ok(Outcome {
        runs: freqs.len() * runs.len(),
        failures,
        manifest: art.finish(manifest)?,
    })
}

/// Explicit matrix of the unpreconditioned system operator of `run`.
fn system_dense(run: &RunSpec, mats: &SystemMatrices, ctx: &PhysicalContext) -> csie_core::Result<DenseComplexMatrix> {
    let need = |m: &Option<DenseComplexMatrix>| m.clone().ok_or_else(|| csie_core::Error::InvalidArgument("matrix missing".into()));
    let cfg = &run.formulation;
    match cfg.kind {
        FormulationKind::Efie => build_efie(&need(&mats.t)?, ctx).0.to_dense(),
        FormulationKind::Mfie => build_mfie(&mats.a_prime, &need(&mats.k_nxb)?, ctx).0.to_dense(),
        FormulationKind::Cfie => {
            let t = need(&mats.t)?;
            let k_nxb = need(&mats.k_nxb)?;
            let (efie, _) = build_efie(&t, ctx);
            let (mfie, _) = build_mfie(&mats.a_prime, &k_nxb, ctx);
            build_cfie(efie, mfie, cfg.cfie_comb, ctx)?.0.to_dense()
        }
        FormulationKind::CsieJm => {
            let (t, k) = (need(&mats.t)?, need(&mats.k)?);
            build_csie_jm(&t, &k, &mats.a, &mats.a_prime, cfg, ctx)?.0.to_dense()
        }
        FormulationKind::CsieJ => {
            let (t, k) = (need(&mats.t)?, need(&mats.k)?);
            build_csie_j(&t, &k, &mats.a, &mats.a_prime, cfg, ctx)?.0.exact_dense()
        }
    }
}

fn cmd_spectrum(cfg: &ExperimentConfig, out: &Path, cache: Option<&Path>) -> Result<Outcome, CliError> {
    let runs = cfg.runs()?;
    let freqs = cfg.frequencies()?;
    let session = Session::new(cfg, cache)?;
    let n = session.basis.len();
    let mut art = Artifacts::new(out)?;
    let mut table = String::from("frequency_hz,label,formulation,alpha,comb,dimension,condition\n");
    let mut records = Vec::new();
    let mut failures = 0;
    for (fi, &freq) in freqs.iter().enumerate() {
        let ctx = PhysicalContext::from_frequency(freq).map_err(|e| ConfigError(e.to_string()))?;
        eprintln!("frequency {:.6e} Hz ({}/{})", freq, fi + 1, freqs.len());
        let mats = if n > SPECTRUM_MAX_UNKNOWNS {
            Err(csie_core::Error::InvalidArgument(format!(
                "{n} unknowns exceed the spectrum limit of {SPECTRUM_MAX_UNKNOWNS}"
            )))
        } else {
            session.matrices(&ctx, &kinds(&runs))
        };
        for run in &runs {
            let mut record = run_json(freq, run);
            let spectrum = mats
                .as_ref()
                .map_err(ToString::to_string)
                .and_then(|m| {
                    system_dense(run, m, &ctx)
                        .and_then(|d| singular_spectrum(&d))
                        .map_err(|e| e.to_string())
                });
            match spectrum {
                Ok(spec) => {
                    let f = &run.formulation;
                    writeln!(
                        table,
                        "{freq:?},{},{},{:?},{:?},{},{:?}",
                        run.label(),
                        f.kind.name(),
                        f.alpha,
                        f.cfie_comb,
                        spec.size,
                        spec.condition
                    )
                    .expect("write to string");
                    let file = art.write(&format!("f{fi:03}-{}-spectrum.csv", run.label()), &spec.to_csv())?;
                    record["status"] = json!("ok");
                    record["condition"] = json!(spec.condition);
                    record["files"] = json!([file]);
                }
                Err(e) => {
                    eprintln!("  {} at {:.6e} Hz failed: {e}", run.label(), freq);
                    failures += 1;
                    record["status"] = json!("failed");
                    record["message"] = json!(e.to_string());
                }
            }
            records.push(record);
        }
    }
    art.write("condition.csv", &table)?;
    let manifest = session.manifest(Command::Spectrum, &freqs, records);
    Ok(Outcome {
        runs: freqs.len() * runs.len(),
        failures,
        manifest: art.finish(manifest)?,
    })
}

/// Edge statistics against the shortest wavelength of the config.
fn cmd_mesh_info(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome, CliError> {
    let freqs = cfg.frequencies()?;
    let fmax = freqs.iter().copied().fold(0.0, f64::max);
    let session = Session::new(cfg, None)?;
    let ctx = PhysicalContext::from_frequency(fmax).map_err(|e| ConfigError(e.to_string()))?;
    let report = mesh_quality(&session.mesh, ctx.k0).map_err(|e| ConfigError(e.to_string()))?;
    let mut art = Artifacts::new(out)?;
    art.write("mesh_quality.csv", &report.to_csv())?;
    let mut manifest = session.manifest(Command::MeshInfo, &[fmax], Vec::new());
    manifest["unknowns"] = json!(session.basis.len());
    Ok(Outcome {
        runs: 1,
        failures: 0,
        manifest: art.finish(manifest)?,
    })
}

fn cmd_alpha_tradeoff(cfg: &ExperimentConfig, out: &Path, cache: Option<&Path>) -> Result<Outcome, CliError> {
    let (alphas, combs) = cfg.tradeoff_runs()?;
    let freqs = cfg.frequencies()?;
    let [freq] = freqs[..] else {
        return Err(ConfigError("alpha-tradeoff runs at a single frequency".into()).into());
    };
    let Some(diameter) = cfg.mie_diameter() else {
        return Err(ConfigError("alpha-tradeoff needs a Mie reference: an icosphere or [reference] mie_diameter".into()).into());
    };
    let pw = cfg.plane_wave()?;
    let rule = cfg.rhs_rule()?;
    let dirs = direction_grid(cfg.solver.far_field_step).map_err(|e| ConfigError(e.to_string()))?;
    let ctx = PhysicalContext::from_frequency(freq).map_err(|e| ConfigError(e.to_string()))?;
    let session = Session::new(cfg, cache)?;
    let mut art = Artifacts::new(out)?;
    let all: Vec<RunSpec> = alphas.iter().chain(&combs).cloned().collect();
    let mats = session.matrices(&ctx, &kinds(&all));
    let fields = TestedFields::new(&session.basis, &pw, &ctx, rule);
    let reference = mie_far_field(diameter, &ctx, &pw, &dirs);
    let mut records = Vec::new();
    let mut failures = 0;

    let mut table = |runs: &[RunSpec], column: &str, value: fn(&RunSpec) -> f64| -> String {
        let mut csv = format!("{column},iterations,error_db\n");
        for run in runs {
            let mut record = run_json(freq, run);
            let result = mats
                .as_ref()
                .map_err(ToString::to_string)
                .and_then(|m| {
                    let s = solve_one(&session, run, m, &fields, &ctx, &dirs).map_err(|e| e.to_string())?;
                    let err = farfield_error_db(&s.far_field, &reference).map_err(|e| e.to_string())?;
                    Ok((err, s))
                });
            match result {
                Ok((err, solved)) => {
                    let status = if solved.converged { "converged" } else { "not-converged" };
                    if !solved.converged {
                        failures += 1;
                    }
                    writeln!(csv, "{:?},{},{err:?}", value(run), solved.iterations).expect("write to string");
                    record["status"] = json!(status);
                    record["iterations"] = json!(solved.iterations);
                    record["error_db"] = json!(err);
                }
                Err(e) => {
                    eprintln!("  {} failed: {e}", run.label());
                    failures += 1;
                    writeln!(csv, "{:?},,", value(run)).expect("write to string");
                    record["status"] = json!("failed");
                    record["message"] = json!(e.to_string());
                }
            }
            records.push(record);
        }
        csv
    };
    let alpha_csv = table(&alphas, "alpha", |r| r.formulation.alpha);
    let comb_csv = (!combs.is_empty()).then(|| table(&combs, "comb", |r| r.formulation.cfie_comb));
    art.write("alpha_tradeoff.csv", &alpha_csv)?;
    if let Some(csv) = comb_csv {
        art.write("comb_tradeoff.csv", &csv)?;
    }
    let manifest = session.manifest(Command::AlphaTradeoff, &freqs, records);
    Ok(Outcome {
        runs: all.len(),
        failures,
        manifest: art.finish(manifest)?,
    })
}
