//! On-disk formats.
//!
//! JSON floats are written with 17 significant digits (`{:.16e}`) so identical
//! inputs give byte-identical files. CSV files carry a header row and numbers
//! in the same format.

use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use stochreach::certify::{ContractionCertificate, Provenance};
use stochreach::dynamics::Trajectory;
use stochreach::probreach::ProbReachSet;
use stochreach::reach::EmbeddingTrajectory;
use stochreach::setcalc::{Ellipsoid, IntervalBox, Parallelotope, ReachSet, WeightedNorm};
use stochreach::validate::{CoverageReport, PathOutcome};
use stochreach::{Matrix, Vector};

use crate::error::CliError;

struct SigFigs;

impl serde_json::ser::Formatter for SigFigs {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
}

/// Compact JSON with fixed-precision floats and a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigFigs);
    value.serialize(&mut ser).expect("in-memory serialization cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

pub fn matrix(rows: &[Vec<f64>], what: &str) -> Result<Matrix, CliError> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(CliError::Config(format!("{what}: rows have different lengths")));
    }
    Ok(Matrix::from_row_iterator(n, m, rows.iter().flatten().copied()))
}

pub fn vector(v: &[f64]) -> Vector {
    Vector::from_column_slice(v)
}

fn vec_of(v: &Vector) -> Vec<f64> {
    v.iter().copied().collect()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CertificateFile {
    pub config_hash: String,
    /// `P` as a list of rows.
    pub p: Vec<Vec<f64>>,
    pub c_p: f64,
    pub d_p: f64,
    pub c: Option<f64>,
    pub ell: Option<f64>,
    pub provenance: String,
    pub rate_provenance: Option<String>,
    pub margins: Vec<f64>,
    pub bracket: Option<[f64; 2]>,
}

impl CertificateFile {
    pub fn new(cert: &ContractionCertificate, config_hash: &str, bracket: Option<(f64, f64)>) -> Self {
        let rate = cert.rate();
        Self {
            config_hash: config_hash.into(),
            p: rows(cert.norm().matrix()),
            c_p: cert.c_p(),
            d_p: cert.d_p(),
            c: rate.map(|r| r.c),
            ell: rate.map(|r| r.ell),
            provenance: cert.provenance().as_str().into(),
            rate_provenance: rate.map(|r| r.provenance.as_str().into()),
            margins: cert.margins().to_vec(),
            bracket: bracket.map(|(a, b)| [a, b]),
        }
    }

    pub fn to_certificate(&self) -> Result<ContractionCertificate, CliError> {
        let parse = |s: &str| Provenance::parse(s).ok_or_else(|| CliError::Config(format!("unknown provenance `{s}`")));
        let norm = WeightedNorm::new(matrix(&self.p, "certificate P")?)?;
        let mut cert = ContractionCertificate::new(norm, self.c_p, self.d_p, parse(&self.provenance)?)?
            .with_margins(self.margins.clone());
        match (self.c, self.ell) {
            (Some(c), Some(ell)) => {
                let prov = parse(self.rate_provenance.as_deref().unwrap_or("USER"))?;
                cert = cert.with_rate(c, ell, prov)?;
            }
            (None, None) => {}
            _ => return Err(CliError::Config("certificate needs both c and ell, or neither".into())),
        }
        Ok(cert)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase", deny_unknown_fields)]
pub enum BaseFile {
    Ellipsoid { center: Vec<f64>, radius: f64, p: Vec<Vec<f64>> },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Parallelotope { transform: Vec<Vec<f64>>, lo: Vec<f64>, hi: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SetFile {
    pub config_hash: String,
    pub method: String,
    pub t: f64,
    pub delta: f64,
    pub base: BaseFile,
    pub rho: f64,
    /// Norm of the noise ball.
    pub noise_p: Vec<Vec<f64>>,
}

impl SetFile {
    pub fn new(set: &ProbReachSet, method: &str, config_hash: &str) -> Self {
        let base = match set.base() {
            ReachSet::Ellipsoid(e) => {
                BaseFile::Ellipsoid { center: vec_of(e.center_ref()), radius: e.radius(), p: rows(e.norm().matrix()) }
            }
            ReachSet::Box(b) => BaseFile::Box { lo: vec_of(b.lo()), hi: vec_of(b.hi()) },
            ReachSet::Parallelotope(p) => BaseFile::Parallelotope {
                transform: rows(p.transform()),
                lo: vec_of(p.bounds().lo()),
                hi: vec_of(p.bounds().hi()),
            },
        };
        Self {
            config_hash: config_hash.into(),
            method: method.into(),
            t: set.t(),
            delta: set.delta(),
            base,
            rho: set.rho(),
            noise_p: rows(set.noise_ball().norm().matrix()),
        }
    }

    pub fn to_set(&self) -> Result<ProbReachSet, CliError> {
        let base: ReachSet = match &self.base {
            BaseFile::Ellipsoid { center, radius, p } => {
                Ellipsoid::new(vector(center), *radius, WeightedNorm::new(matrix(p, "ellipsoid P")?)?)?.into()
            }
            BaseFile::Box { lo, hi } => IntervalBox::from_slices(lo, hi)?.into(),
            BaseFile::Parallelotope { transform, lo, hi } => {
                Parallelotope::new(matrix(transform, "transform")?, IntervalBox::from_slices(lo, hi)?)?.into()
            }
        };
        let noise = Ellipsoid::centered(self.rho, WeightedNorm::new(matrix(&self.noise_p, "noise P")?)?)?;
        Ok(ProbReachSet::from_parts(self.t, self.delta, base, noise)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CheckpointFile {
    pub t: f64,
    pub delta: f64,
    pub n_paths: usize,
    pub n_inside: usize,
    pub n_diverged: usize,
    pub coverage: f64,
    pub target: f64,
    pub slack: f64,
    pub passed: bool,
    pub worst_outlier_distance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CoverageFile {
    pub config_hash: String,
    pub method: String,
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub sampler: String,
    pub passed: bool,
    pub checkpoints: Vec<CheckpointFile>,
}

impl CoverageFile {
    pub fn new(rep: &CoverageReport, method: &str, config_hash: &str) -> Self {
        Self {
            config_hash: config_hash.into(),
            method: method.into(),
            n_paths: rep.n_paths,
            dt: rep.dt,
            seed: rep.seed,
            sampler: rep.sampler.clone(),
            passed: rep.passed(),
            checkpoints: rep
                .checkpoints
                .iter()
                .map(|c| CheckpointFile {
                    t: c.t,
                    delta: c.delta,
                    n_paths: c.n_paths,
                    n_inside: c.n_inside,
                    n_diverged: c.n_diverged,
                    coverage: c.coverage,
                    target: c.target,
                    slack: c.slack,
                    passed: c.passed,
                    worst_outlier_distance: c.worst_outlier_distance,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub config_hash: String,
    pub command: String,
    pub files: Vec<String>,
}

fn indexed(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{prefix}{i}"))
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>, CliError> {
    Ok(csv::Writer::from_path(path)?)
}

/// `t,x1..xn`.
pub fn write_trajectory_csv(path: &Path, tr: &Trajectory) -> Result<(), CliError> {
    let n = tr.states().first().map_or(0, |x| x.len());
    let mut w = writer(path)?;
    w.write_record(std::iter::once("t".to_string()).chain(indexed("x", n)))?;
    for (t, x) in tr.times().iter().zip(tr.states()) {
        w.write_record(std::iter::once(num(*t)).chain(x.iter().map(|v| num(*v))))?;
    }
    w.flush()?;
    Ok(())
}

/// `t,lo1..lon,hi1..hin`.
pub fn write_embedding_csv(path: &Path, e: &EmbeddingTrajectory) -> Result<(), CliError> {
    let n = e.lo_states().first().map_or(0, |x| x.len());
    let mut w = writer(path)?;
    w.write_record(std::iter::once("t".to_string()).chain(indexed("lo", n)).chain(indexed("hi", n)))?;
    for k in 0..e.len() {
        let row = std::iter::once(num(e.times()[k]))
            .chain(e.lo_states()[k].iter().map(|v| num(*v)))
            .chain(e.hi_states()[k].iter().map(|v| num(*v)));
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// `x,y` vertices in counterclockwise order.
pub fn write_polygon_csv(path: &Path, vertices: &[[f64; 2]]) -> Result<(), CliError> {
    let mut w = writer(path)?;
    w.write_record(["x", "y"])?;
    for v in vertices {
        w.write_record([num(v[0]), num(v[1])])?;
    }
    w.flush()?;
    Ok(())
}

/// `path,t,x1..xn,inside`, one row per path and checkpoint; diverged paths are omitted.
pub fn write_endpoints_csv(path: &Path, sets: &[ProbReachSet], outcomes: &[PathOutcome]) -> Result<(), CliError> {
    use stochreach::setcalc::ConvexSet;
    let n = sets.first().map_or(0, |s| s.dim());
    let mut w = writer(path)?;
    w.write_record(
        ["path".to_string(), "t".to_string()]
            .into_iter()
            .chain(indexed("x", n))
            .chain(std::iter::once("inside".into())),
    )?;
    for o in outcomes {
        let Some(states) = &o.states else { continue };
        for (s, x) in sets.iter().zip(states) {
            let inside = s.contains(x, stochreach::DEFAULT_TOL)?;
            let row = [o.path.to_string(), num(s.t())]
                .into_iter()
                .chain(x.iter().map(|v| num(*v)))
                .chain(std::iter::once(u8::from(inside).to_string()));
            w.write_record(row)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use stochreach::pendulum;

    #[test]
    fn floats_have_seventeen_digits() {
        let s = to_json(&vec![0.1, -2.5, 0.0, 1e-300]);
        assert_eq!(s, "[1.0000000000000001e-1,-2.5000000000000000e0,0.0000000000000000e0,1.0000000000000000e-300]\n");
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![0.1, -2.5, 0.0, 1e-300]);
    }

    #[test]
    fn certificate_round_trip() {
        let cert = ContractionCertificate::new(pendulum::reference_norm(), -0.5, 0.0127, Provenance::Proven)
            .unwrap()
            .with_rate(-0.49, 0.0, Provenance::Sampled)
            .unwrap()
            .with_margins(vec![-0.4, -0.3]);
        let f = CertificateFile::new(&cert, "abc", Some((-0.6, -0.4)));
        let parsed: CertificateFile = serde_json::from_str(&to_json(&f)).unwrap();
        assert_eq!(parsed, f);
        assert_eq!(parsed.to_certificate().unwrap(), cert);
    }

    #[test]
    fn set_round_trip_all_kinds() {
        let cert = ContractionCertificate::new(pendulum::reference_norm(), -0.5, 0.0127, Provenance::Proven).unwrap();
        let bases: Vec<ReachSet> = vec![
            Ellipsoid::new(vector(&[0.1, 0.2]), 0.7, pendulum::reference_norm()).unwrap().into(),
            pendulum::initial_box().into(),
            Parallelotope::new(pendulum::transform(), pendulum::transformed_box()).unwrap().into(),
        ];
        for b in bases {
            let s = ProbReachSet::new(1.0, 0.01, b, &cert).unwrap();
            let f = SetFile::new(&s, "m", "h");
            let json = to_json(&f);
            assert!(json.contains("\"kind\":"));
            let back: SetFile = serde_json::from_str(&json).unwrap();
            assert_eq!(back.to_set().unwrap(), s);
        }
    }
}
