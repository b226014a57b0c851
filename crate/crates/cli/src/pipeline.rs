//! Command implementations: certify, reach, validate and the pendulum demo.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use stochreach::certify::{
    compute_dp, estimate_assumption2, search_certificate_report, verify_certificate, ContractionCertificate,
    Provenance, SearchOptions, VertexHull, DEFAULT_VERIFY_TOL,
};
use stochreach::dynamics::{integrate_ode, InputSignal, SystemModel};
use stochreach::pendulum;
use stochreach::probreach::{prob_reach_contraction, prob_reach_interval, IntervalReachSpec, ProbReachSet};
use stochreach::reach::InclusionFunction;
use stochreach::setcalc::{polygon_outline, ConvexSet, Ellipsoid, IntervalBox, Parallelotope};
use stochreach::terms::{Term, TermDrift};
use stochreach::validate::{aggregate, CoverageReport, InitialSampler, InputDraw, McSetup, PathOutcome, MIN_PATHS};
use stochreach::{Matrix, Vector};

use crate::config::{BoxSpec, CertificateMode, ExperimentConfig, InclusionMode, Method, RateMode, SamplerMode};
use crate::error::CliError;
use crate::formats::{self, CertificateFile, CoverageFile, Manifest, SetFile};

const DEFAULT_RATE_SAMPLES: usize = 10_000;
const MANIFEST: &str = "manifest.json";

enum Model {
    Pendulum,
    Terms(TermDrift),
}

/// A loaded configuration with its system model and output directory.
pub struct Run {
    cfg: ExperimentConfig,
    hash: String,
    out: PathBuf,
    model: Model,
    sys: SystemModel,
    sigma: Matrix,
    x0: IntervalBox,
    inputs: IntervalBox,
    u_nominal: Vector,
    written: BTreeSet<String>,
}

/// Sets of one method together with the initial set they start from.
pub struct MethodSets {
    pub method: Method,
    pub sets: Vec<ProbReachSet>,
    pub sampler: InitialSampler,
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Contraction => "contraction",
        Method::Interval => "interval",
        Method::Both => "both",
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn to_box(b: &BoxSpec, dim: usize, what: &str) -> Result<IntervalBox, CliError> {
    if b.lo.len() != dim || b.hi.len() != dim {
        return Err(config_err(format!("{what} must have {dim} components")));
    }
    IntervalBox::from_slices(&b.lo, &b.hi).map_err(|e| config_err(format!("{what}: {e}")))
}

fn square(rows: &[Vec<f64>], n: usize, what: &str) -> Result<Matrix, CliError> {
    let m = formats::matrix(rows, what)?;
    if m.nrows() != n || m.ncols() != n {
        return Err(config_err(format!("{what} must be {n} x {n}")));
    }
    Ok(m)
}

/// Interval hull of `{T x : x ∈ b}`.
fn image_hull(t: &Matrix, b: &IntervalBox) -> Result<IntervalBox, CliError> {
    let c = t * b.center();
    let h = t.abs() * (b.hi() - b.lo()) * 0.5;
    Ok(IntervalBox::new(&c - &h, &c + &h)?)
}

/// Largest `‖v − center‖` over the corners of `b`, for a norm convex in `v`.
fn corner_radius(
    b: &IntervalBox,
    center: &Vector,
    norm: impl Fn(&Vector) -> Result<f64, CliError>,
) -> Result<f64, CliError> {
    let n = b.dim();
    if n > 20 {
        return Err(config_err("explicit radii are needed above 20 dimensions"));
    }
    let mut r: f64 = 0.0;
    for mask in 0u32..(1u32 << n) {
        let corner = Vector::from_iterator(n, (0..n).map(|i| if mask >> i & 1 == 1 { b.hi()[i] } else { b.lo()[i] }));
        r = r.max(norm(&(corner - center))?);
    }
    Ok(r)
}

impl Run {
    pub fn new(cfg: ExperimentConfig) -> Result<Self, CliError> {
        let hash = cfg.hash();
        let out = PathBuf::from(&cfg.experiment.out);
        let s = &cfg.system;
        let (model, sys, sigma) = match s.builtin.as_deref() {
            Some("pendulum") => {
                if s.state_dim.is_some() || s.drift.is_some() || s.noise.is_some() || s.input_dim != 0 {
                    return Err(config_err("builtin systems take no state_dim, input_dim, drift or noise"));
                }
                (Model::Pendulum, pendulum::system(), pendulum::diffusion())
            }
            Some(other) => return Err(config_err(format!("unknown builtin system `{other}`"))),
            None => {
                let n = s.state_dim.ok_or_else(|| config_err("system.state_dim is required"))?;
                let drift = s.drift.as_ref().ok_or_else(|| config_err("system.drift is required"))?;
                let noise = s.noise.as_ref().ok_or_else(|| config_err("system.noise is required"))?;
                if drift.len() != n {
                    return Err(config_err(format!("system.drift needs {n} rows")));
                }
                let rows = drift
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|t| {
                                let f: Vec<&str> = t.factors.iter().map(String::as_str).collect();
                                Term::parse(t.coeff, &f).map_err(|e| config_err(format!("drift term: {e}")))
                            })
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let sigma = formats::matrix(noise, "system.noise")?;
                if sigma.nrows() != n || sigma.ncols() == 0 {
                    return Err(config_err(format!("system.noise needs {n} non-empty rows")));
                }
                let terms =
                    TermDrift::new(n, s.input_dim, rows).map_err(|e| config_err(format!("system.drift: {e}")))?;
                let sys = terms.clone().into_system(sigma.clone())?;
                (Model::Terms(terms), sys, sigma)
            }
        };
        let n = sys.state_dim();
        let p = sys.input_dim();
        let x0 = to_box(&cfg.initial, n, "initial")?;
        let (inputs, u_nominal) = match (&cfg.input, p) {
            (None, 0) => (IntervalBox::empty_dim(), Vector::zeros(0)),
            (None, _) => return Err(config_err("systems with inputs need an [input] table")),
            (Some(_), 0) => return Err(config_err("[input] given for a system without inputs")),
            (Some(i), _) => {
                let bx = to_box(&BoxSpec { lo: i.lo.clone(), hi: i.hi.clone() }, p, "input")?;
                let u = match &i.nominal {
                    Some(u) if u.len() == p => Vector::from_column_slice(u),
                    Some(_) => return Err(config_err(format!("input.nominal must have {p} components"))),
                    None => bx.center(),
                };
                (bx, u)
            }
        };
        let e = &cfg.experiment;
        if e.dt.is_nan() || e.dt <= 0.0 {
            return Err(config_err("experiment.dt must be positive"));
        }
        if e.times.is_empty() {
            return Err(config_err("experiment.times must not be empty"));
        }
        if e.noise_scale.is_nan() || e.noise_scale <= 0.0 {
            return Err(config_err("experiment.noise_scale must be positive"));
        }
        Ok(Self { cfg, hash, out, model, sys, sigma, x0, inputs, u_nominal, written: BTreeSet::new() })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn config_hash(&self) -> &str {
        &self.hash
    }

    pub fn system(&self) -> &SystemModel {
        &self.sys
    }

    fn path(&mut self, name: &str) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(&self.out)?;
        self.written.insert(name.to_string());
        Ok(self.out.join(name))
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        let p = self.path(name)?;
        std::fs::write(p, text)?;
        Ok(())
    }

    /// Writes `manifest.json`, merging the file list of an earlier run of the same config.
    pub fn write_manifest(&mut self, command: &str) -> Result<(), CliError> {
        let path = self.out.join(MANIFEST);
        let mut files = self.written.clone();
        if let Ok(text) = std::fs::read_to_string(&path) {
            if let Ok(old) = serde_json::from_str::<Manifest>(&text) {
                if old.config_hash == self.hash {
                    files.extend(old.files);
                }
            }
        }
        let m =
            Manifest { config_hash: self.hash.clone(), command: command.into(), files: files.into_iter().collect() };
        std::fs::create_dir_all(&self.out)?;
        std::fs::write(path, formats::to_json(&m))?;
        Ok(())
    }

    fn hull(&self) -> Result<Option<VertexHull>, CliError> {
        let n = self.sys.state_dim();
        match &self.cfg.certificate.hull {
            None => Ok(None),
            Some(vs) if vs.is_empty() => Err(config_err("certificate.hull must list at least one vertex")),
            Some(vs) => {
                let mats = vs.iter().map(|v| square(v, n, "hull vertex")).collect::<Result<Vec<_>, _>>()?;
                Ok(Some(VertexHull::new(mats)?))
            }
        }
    }

    /// Builds (inline), searches for, or loads the certificate and attaches `d_P` and `(c, ℓ)`.
    pub fn certificate(&self) -> Result<(ContractionCertificate, Option<(f64, f64)>), CliError> {
        let spec = &self.cfg.certificate;
        let n = self.sys.state_dim();
        let hull = self.hull()?;
        let tol = spec.verify_tol.unwrap_or(DEFAULT_VERIFY_TOL);
        let (cert, bracket) = match spec.mode {
            CertificateMode::Inline => {
                let p = spec.p.as_ref().ok_or_else(|| config_err("inline certificates need certificate.p"))?;
                let norm = stochreach::setcalc::WeightedNorm::new(square(p, n, "certificate.p")?)?;
                match &hull {
                    Some(h) => {
                        let c_p = match spec.c_p {
                            Some(c) => c,
                            None => h
                                .vertices()
                                .iter()
                                .map(|a| norm.matrix_measure(a))
                                .collect::<Result<Vec<_>, _>>()?
                                .into_iter()
                                .fold(f64::NEG_INFINITY, f64::max),
                        };
                        let rep = verify_certificate(h, &norm, c_p, tol);
                        if !rep.passed {
                            return Err(CliError::Infeasible(format!(
                                "the given P does not certify c_P = {c_p} on the hull (worst margin {:e})",
                                rep.worst_margin()
                            )));
                        }
                        (
                            ContractionCertificate::new(norm, c_p, 0.0, Provenance::Proven)?.with_margins(rep.margins),
                            None,
                        )
                    }
                    None => {
                        let c_p = spec.c_p.ok_or_else(|| config_err("inline certificates without a hull need c_p"))?;
                        (ContractionCertificate::new(norm, c_p, 0.0, Provenance::User)?, None)
                    }
                }
            }
            CertificateMode::Search => {
                let h = hull.as_ref().ok_or_else(|| config_err("search needs certificate.hull"))?;
                let mut opts = SearchOptions { bracket: spec.bracket.map(|[a, b]| (a, b)), ..Default::default() };
                if let Some(r) = spec.resolution {
                    opts.resolution = r;
                }
                let out = search_certificate_report(h, &opts)?;
                (out.certificate, Some(out.bracket))
            }
            CertificateMode::File => {
                let file = spec.file.as_ref().ok_or_else(|| config_err("file mode needs certificate.file"))?;
                let text = std::fs::read_to_string(file)
                    .map_err(|e| CliError::Usage(format!("cannot read certificate {file}: {e}")))?;
                let f: CertificateFile = serde_json::from_str(&text).map_err(|e| config_err(format!("{file}: {e}")))?;
                let cert = f.to_certificate()?;
                if cert.norm().dim() != n {
                    return Err(config_err("certificate dimension does not match the system"));
                }
                (cert, f.bracket.map(|[a, b]| (a, b)))
            }
        };
        let d_p = compute_dp(&self.sigma, cert.norm())?;
        let cert = cert.with_dp(d_p)?;
        let cert = match spec.rate {
            RateMode::FromHull => {
                if self.sys.input_dim() > 0 {
                    return Err(config_err("systems with inputs need rate = \"sampled\" or \"explicit\""));
                }
                let prov = cert.provenance();
                let c_p = cert.c_p();
                cert.with_rate(c_p, 0.0, prov)?
            }
            RateMode::Sampled => {
                let state_box = match &spec.rate_box {
                    Some(b) => to_box(b, n, "certificate.rate_box")?,
                    None => self.x0.clone(),
                };
                let samples = spec.rate_samples.unwrap_or(DEFAULT_RATE_SAMPLES);
                let est = estimate_assumption2(&self.sys, &state_box, &self.inputs, cert.norm(), samples)?;
                cert.with_rate(est.c, est.ell, Provenance::Sampled)?
            }
            RateMode::Explicit => {
                let (Some(c), Some(ell)) = (spec.c, spec.ell) else {
                    return Err(config_err("rate = \"explicit\" needs certificate.c and certificate.ell"));
                };
                cert.with_rate(c, ell, Provenance::User)?
            }
        };
        Ok((cert, bracket))
    }

    fn contraction_sets(&mut self, cert: &ContractionCertificate) -> Result<MethodSets, CliError> {
        let n = self.sys.state_dim();
        let spec = self.cfg.contraction.clone().unwrap_or_default();
        let center = match &spec.center {
            Some(c) if c.len() == n => Vector::from_column_slice(c),
            Some(_) => return Err(config_err(format!("contraction.center must have {n} components"))),
            None => self.x0.center(),
        };
        let r1 = match spec.r1 {
            Some(r) => r,
            None => corner_radius(&self.x0, &center, |v| Ok(cert.norm().norm(v)?))?,
        };
        let r2 = match spec.r2 {
            Some(r) => r,
            None if self.sys.input_dim() == 0 => 0.0,
            None => corner_radius(&self.inputs, &self.u_nominal, |v| Ok(v.norm()))?,
        };
        let u_star = InputSignal::constant(self.u_nominal.clone());
        let e = &self.cfg.experiment;
        let (delta, times, dt, mode) = (e.delta, e.times.clone(), e.dt, e.sampler);
        let sets = prob_reach_contraction(&self.sys, cert, &center, &u_star, r1, r2, delta, &times, dt)?;
        let t_end = times.iter().copied().fold(0.0, f64::max);
        let nominal = integrate_ode(&self.sys, &center, &u_star, t_end, dt)?;
        let p = self.path("nominal_contraction.csv")?;
        formats::write_trajectory_csv(&p, &nominal)?;
        let sampler = match mode {
            SamplerMode::ReachSet => InitialSampler::Ellipsoid(Ellipsoid::new(center, r1, cert.norm().clone())?),
            SamplerMode::InitialBox => InitialSampler::Box(self.x0.clone()),
        };
        Ok(MethodSets { method: Method::Contraction, sets, sampler })
    }

    fn interval_sets(&mut self, cert: &ContractionCertificate) -> Result<MethodSets, CliError> {
        let n = self.sys.state_dim();
        let spec = self.cfg.interval.clone().unwrap_or_default();
        let transform = spec.transform.as_ref().map(|t| square(t, n, "interval.transform")).transpose()?;
        let initial = match (&spec.initial, &transform) {
            (Some(b), _) => to_box(b, n, "interval.initial")?,
            (None, Some(t)) => image_hull(t, &self.x0)?,
            (None, None) => self.x0.clone(),
        };
        let mut rs = IntervalReachSpec::new(initial.clone(), self.inputs.clone());
        if let Some(t) = &transform {
            rs = rs.with_transform(t.clone());
        }
        if let Some(b) = &spec.invariant {
            rs = rs.with_invariant(to_box(b, n, "interval.invariant")?);
        }
        if let Some(k) = spec.monotone_samples {
            rs.monotone_samples = k;
        }
        if spec.inclusion == InclusionMode::Natural {
            if transform.is_some() {
                return Err(config_err("the natural inclusion is only available without a transform"));
            }
            let inc: InclusionFunction = match &self.model {
                Model::Pendulum => pendulum::natural_inclusion(),
                Model::Terms(t) => t.inclusion_function(),
            };
            rs = rs.with_inclusion(inc);
        }
        let e = &self.cfg.experiment;
        let (delta, times, dt, mode) = (e.delta, e.times.clone(), e.dt, e.sampler);
        let res = prob_reach_interval(&self.sys, cert, &rs, delta, &times, dt)?;
        let p = self.path("embedding_interval.csv")?;
        formats::write_embedding_csv(&p, &res.embedding)?;
        let sampler = match (mode, transform) {
            (SamplerMode::ReachSet, Some(t)) => InitialSampler::Parallelotope(Parallelotope::new(t, initial)?),
            (SamplerMode::ReachSet, None) => InitialSampler::Box(initial),
            (SamplerMode::InitialBox, _) => InitialSampler::Box(self.x0.clone()),
        };
        Ok(MethodSets { method: Method::Interval, sets: res.sets, sampler })
    }

    /// Computes the sets of every selected method and writes one JSON file
    /// (plus a polygon CSV for planar systems) per method and time.
    pub fn reach(&mut self, cert: &ContractionCertificate) -> Result<Vec<MethodSets>, CliError> {
        let method = self.cfg.experiment.method;
        let scale = self.cfg.experiment.noise_scale;
        let mut all = Vec::new();
        for m in [Method::Contraction, Method::Interval] {
            if !method.includes(m) {
                continue;
            }
            let mut ms = match m {
                Method::Contraction => self.contraction_sets(cert)?,
                _ => self.interval_sets(cert)?,
            };
            if scale != 1.0 {
                ms.sets = ms.sets.iter().map(|s| s.scale_noise(scale)).collect::<Result<_, _>>()?;
            }
            let name = method_name(m);
            for s in &ms.sets {
                let stem = format!("reach_{name}_t{}", s.t());
                let json = formats::to_json(&SetFile::new(s, name, &self.hash));
                self.write_text(&format!("{stem}.json"), &json)?;
                if s.dim() == 2 {
                    let poly = polygon_outline(s, self.cfg.experiment.polygon_dirs)?;
                    let p = self.path(&format!("{stem}.csv"))?;
                    formats::write_polygon_csv(&p, &poly)?;
                }
            }
            all.push(ms);
        }
        Ok(all)
    }

    /// Monte Carlo coverage of each method's sets, with paths simulated in parallel.
    pub fn validate(&mut self, methods: &[MethodSets]) -> Result<Vec<(Method, CoverageReport)>, CliError> {
        let e = &self.cfg.experiment;
        let (n_paths, dt, seed) = (e.n_paths, e.dt, e.seed);
        if n_paths < MIN_PATHS {
            return Err(config_err(format!("at least {MIN_PATHS} paths are required")));
        }
        let inputs = if self.sys.input_dim() == 0 {
            InputDraw::Nominal(InputSignal::none())
        } else {
            InputDraw::UniformConstant(self.inputs.clone())
        };
        let mut reports = Vec::new();
        for ms in methods {
            let setup = McSetup { sys: &self.sys, sets: &ms.sets, sampler: &ms.sampler, inputs: &inputs, dt, seed };
            setup.validate()?;
            let outcomes: Vec<PathOutcome> =
                (0..n_paths as u64).into_par_iter().map(|k| setup.simulate_path(k)).collect::<Result<_, _>>()?;
            let report = aggregate(&setup, &outcomes)?;
            let name = method_name(ms.method);
            let json = formats::to_json(&CoverageFile::new(&report, name, &self.hash));
            self.write_text(&format!("coverage_{name}.json"), &json)?;
            let p = self.path(&format!("endpoints_{name}.csv"))?;
            formats::write_endpoints_csv(&p, &ms.sets, &outcomes)?;
            reports.push((ms.method, report));
        }
        Ok(reports)
    }

    pub fn write_certificate(
        &mut self,
        cert: &ContractionCertificate,
        bracket: Option<(f64, f64)>,
    ) -> Result<(), CliError> {
        let json = formats::to_json(&CertificateFile::new(cert, &self.hash, bracket));
        self.write_text("certificate.json", &json)
    }
}

fn print_certificate(cert: &ContractionCertificate) {
    let rate = cert
        .rate()
        .map_or(String::new(), |r| format!(", c = {:.6}, ell = {:.6} ({})", r.c, r.ell, r.provenance.as_str()));
    println!("certificate: c_P = {:.6}, d_P = {:.6} ({}){rate}", cert.c_p(), cert.d_p(), cert.provenance().as_str());
}

fn print_sets(methods: &[MethodSets]) {
    for ms in methods {
        for s in &ms.sets {
            println!("reach {} t = {}: base {}, rho = {:.6}", method_name(ms.method), s.t(), s.base().kind(), s.rho());
        }
    }
}

fn coverage_verdict(reports: &[(Method, CoverageReport)]) -> Result<(), CliError> {
    let mut failures = Vec::new();
    for (m, r) in reports {
        for c in &r.checkpoints {
            println!(
                "coverage {} t = {}: {:.4} (target {:.4}, slack {:.4}) {}",
                method_name(*m),
                c.t,
                c.coverage,
                c.target,
                c.slack,
                if c.passed { "ok" } else { "FAIL" }
            );
            if !c.passed {
                failures.push(format!(
                    "{} at t = {}: {:.4} < {:.4}",
                    method_name(*m),
                    c.t,
                    c.coverage,
                    c.target - c.slack
                ));
            }
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Coverage(failures.join("; ")))
    }
}

pub fn cmd_certify(cfg: ExperimentConfig) -> Result<(), CliError> {
    let mut run = Run::new(cfg)?;
    let (cert, bracket) = run.certificate()?;
    run.write_certificate(&cert, bracket)?;
    run.write_manifest("certify")?;
    print_certificate(&cert);
    Ok(())
}

pub fn cmd_reach(cfg: ExperimentConfig) -> Result<(), CliError> {
    let mut run = Run::new(cfg)?;
    let (cert, bracket) = run.certificate()?;
    run.write_certificate(&cert, bracket)?;
    let result = run.reach(&cert);
    run.write_manifest("reach")?;
    print_certificate(&cert);
    print_sets(&result?);
    Ok(())
}

pub fn cmd_validate(cfg: ExperimentConfig) -> Result<(), CliError> {
    let mut run = Run::new(cfg)?;
    let (cert, bracket) = run.certificate()?;
    run.write_certificate(&cert, bracket)?;
    let methods = run.reach(&cert)?;
    let reports = run.validate(&methods)?;
    run.write_manifest("validate")?;
    print_certificate(&cert);
    print_sets(&methods);
    coverage_verdict(&reports)
}

/// Writes the reference configuration to `<out>/config.toml` and runs the full pipeline on it.
pub fn cmd_demo_pendulum(cfg: ExperimentConfig) -> Result<(), CliError> {
    let out = Path::new(&cfg.experiment.out).to_path_buf();
    std::fs::create_dir_all(&out)?;
    std::fs::write(out.join("config.toml"), cfg.to_toml())?;
    let mut run = Run::new(cfg)?;
    run.written.insert("config.toml".into());
    let (cert, bracket) = run.certificate()?;
    run.write_certificate(&cert, bracket)?;
    let methods = run.reach(&cert)?;
    let reports = run.validate(&methods)?;
    run.write_manifest("demo-pendulum")?;
    print_certificate(&cert);
    print_sets(&methods);
    coverage_verdict(&reports)
}
