//! Sampled closed-loop time series and its CSV form.
//!
//! The file starts with a `#schema=dobac-runlog/1` line followed by a header
//! row; vector signals are expanded one column per component (`x1`, `x2`,
//! ...). Floats are written with 17 significant digits so a round trip is
//! exact.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{DobacError, Result};
use crate::linalg::Vector;
use crate::rejection::RejectionCase;

pub const SCHEMA: &str = "dobac-runlog/1";

/// One logged instant: state after any reset, plus diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub x: Vector,
    pub x_r: Vector,
    pub e: Vector,
    pub k_x: Vector,
    pub k_r: f64,
    pub v: Vector,
    pub w: Vector,
    pub r: f64,
    pub u: f64,
    /// `u_drj` before the rejection law was evaluated.
    pub u_drj_prev: f64,
    pub u_drj: f64,
    pub mode: RejectionCase,
    pub d: f64,
    /// True lumped disturbance.
    pub d_u: Vector,
    pub d_u_hat: Vector,
    pub e_du: Vector,
    pub d_hat: f64,
    pub e_d: f64,
    pub eta: f64,
    pub phi_drj: f64,
    pub f_drj: f64,
    pub d_hat_dot_star: f64,
    /// `row . e_du`, the modeled error of `d_hat_dot*`.
    pub e_dhatdot_model: f64,
    /// True adaptive-control error `u_adp_tilde`.
    pub u_adp_err: f64,
    pub lyapunov: f64,
    pub beta_adp: f64,
    pub f_kx: f64,
    pub f_kr: f64,
    pub f_v: f64,
    pub f_w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Field {
    Num(f64),
    Mode(RejectionCase),
}

/// Column group: a name and a width (1 for scalars).
fn layout(n: usize, m_v: usize, m_w: usize) -> Vec<(&'static str, usize)> {
    vec![
        ("t", 1),
        ("x", n),
        ("xr", n),
        ("e", n),
        ("kx", n),
        ("kr", 1),
        ("v", m_v),
        ("w", m_w),
        ("r", 1),
        ("u", 1),
        ("u_drj_prev", 1),
        ("u_drj", 1),
        ("mode", 1),
        ("d", 1),
        ("du", n),
        ("du_hat", n),
        ("e_du", n),
        ("d_hat", 1),
        ("e_d", 1),
        ("eta", 1),
        ("phi_drj", 1),
        ("f_drj", 1),
        ("d_hat_dot_star", 1),
        ("e_dhatdot_model", 1),
        ("u_adp_err", 1),
        ("lyapunov", 1),
        ("beta_adp", 1),
        ("f_kx", 1),
        ("f_kr", 1),
        ("f_v", 1),
        ("f_w", 1),
    ]
}

const VECTOR_GROUPS: [&str; 9] = ["x", "xr", "e", "kx", "v", "w", "du", "du_hat", "e_du"];

fn header(n: usize, m_v: usize, m_w: usize) -> Vec<String> {
    let mut out = Vec::new();
    for (name, width) in layout(n, m_v, m_w) {
        if VECTOR_GROUPS.contains(&name) {
            out.extend((1..=width).map(|i| format!("{name}{i}")));
        } else {
            out.push(name.to_string());
        }
    }
    out
}

impl Sample {
    fn fields(&self) -> Vec<Field> {
        let mut out = Vec::new();
        let mut num = |v: f64| out.push(Field::Num(v));
        num(self.t);
        for block in [&self.x, &self.x_r, &self.e, &self.k_x] {
            block.iter().for_each(|v| num(*v));
        }
        num(self.k_r);
        self.v.iter().for_each(|v| num(*v));
        self.w.iter().for_each(|v| num(*v));
        num(self.r);
        num(self.u);
        num(self.u_drj_prev);
        num(self.u_drj);
        out.push(Field::Mode(self.mode));
        let mut num = |v: f64| out.push(Field::Num(v));
        num(self.d);
        for block in [&self.d_u, &self.d_u_hat, &self.e_du] {
            block.iter().for_each(|v| num(*v));
        }
        for v in [
            self.d_hat,
            self.e_d,
            self.eta,
            self.phi_drj,
            self.f_drj,
            self.d_hat_dot_star,
            self.e_dhatdot_model,
            self.u_adp_err,
            self.lyapunov,
            self.beta_adp,
            self.f_kx,
            self.f_kr,
            self.f_v,
            self.f_w,
        ] {
            num(v);
        }
        out
    }

    fn from_fields(fields: &[Field], n: usize, m_v: usize, m_w: usize) -> Result<Self> {
        let mut it = fields.iter();
        let mut scalar = || match it.next() {
            Some(Field::Num(v)) => Ok(*v),
            _ => Err(DobacError::SchemaMismatch("expected a numeric field".into())),
        };
        let t = scalar()?;
        let vector = |len: usize, scalar: &mut dyn FnMut() -> Result<f64>| -> Result<Vector> {
            let vals = (0..len).map(|_| scalar()).collect::<Result<Vec<_>>>()?;
            Ok(Vector::from_vec(vals))
        };
        let x = vector(n, &mut scalar)?;
        let x_r = vector(n, &mut scalar)?;
        let e = vector(n, &mut scalar)?;
        let k_x = vector(n, &mut scalar)?;
        let k_r = scalar()?;
        let v = vector(m_v, &mut scalar)?;
        let w = vector(m_w, &mut scalar)?;
        let r = scalar()?;
        let u = scalar()?;
        let u_drj_prev = scalar()?;
        let u_drj = scalar()?;
        let mode = match it.next() {
            Some(Field::Mode(m)) => *m,
            _ => return Err(DobacError::SchemaMismatch("expected the mode field".into())),
        };
        let mut scalar = || match it.next() {
            Some(Field::Num(v)) => Ok(*v),
            _ => Err(DobacError::SchemaMismatch("expected a numeric field".into())),
        };
        let d = scalar()?;
        let d_u = vector(n, &mut scalar)?;
        let d_u_hat = vector(n, &mut scalar)?;
        let e_du = vector(n, &mut scalar)?;
        Ok(Sample {
            t,
            x,
            x_r,
            e,
            k_x,
            k_r,
            v,
            w,
            r,
            u,
            u_drj_prev,
            u_drj,
            mode,
            d,
            d_u,
            d_u_hat,
            e_du,
            d_hat: scalar()?,
            e_d: scalar()?,
            eta: scalar()?,
            phi_drj: scalar()?,
            f_drj: scalar()?,
            d_hat_dot_star: scalar()?,
            e_dhatdot_model: scalar()?,
            u_adp_err: scalar()?,
            lyapunov: scalar()?,
            beta_adp: scalar()?,
            f_kx: scalar()?,
            f_kr: scalar()?,
            f_v: scalar()?,
            f_w: scalar()?,
        })
    }
}

/// Uniformly sampled run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    n: usize,
    m_v: usize,
    m_w: usize,
    samples: Vec<Sample>,
}

impl RunLog {
    pub fn new(n: usize, m_v: usize, m_w: usize) -> Self {
        RunLog { n, m_v, m_w, samples: Vec::new() }
    }

    pub fn from_samples(n: usize, m_v: usize, m_w: usize, samples: Vec<Sample>) -> Self {
        RunLog { n, m_v, m_w, samples }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n, self.m_v, self.m_w)
    }

    pub fn push(&mut self, s: Sample) {
        self.samples.push(s);
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn columns(&self) -> Vec<String> {
        header(self.n, self.m_v, self.m_w)
    }

    /// Numeric column by header name, e.g. `x1`, `u_drj`, `eta`.
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self
            .columns()
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| DobacError::SchemaMismatch(format!("no column `{name}`")))?;
        self.samples
            .iter()
            .map(|s| match s.fields()[idx] {
                Field::Num(v) => Ok(v),
                Field::Mode(_) => Err(DobacError::SchemaMismatch(format!("column `{name}` is not numeric"))),
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut out = BufWriter::new(out);
        writeln!(out, "#schema={SCHEMA}").map_err(io)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.columns()).map_err(csv_err)?;
        for s in &self.samples {
            let rec: Vec<String> = s
                .fields()
                .into_iter()
                .map(|f| match f {
                    Field::Num(v) => format!("{v:.16e}"),
                    Field::Mode(m) => m.name().to_string(),
                })
                .collect();
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(io)
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = BufReader::new(input);
        let mut first = String::new();
        reader.read_line(&mut first).map_err(io)?;
        match first.trim().strip_prefix("#schema=") {
            Some(SCHEMA) => {}
            Some(other) => {
                return Err(DobacError::SchemaMismatch(format!("expected {SCHEMA}, found {other}")))
            }
            None => return Err(DobacError::SchemaMismatch("missing schema line".into())),
        }
        let mut r = csv::Reader::from_reader(reader);
        let cols: Vec<String> = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
        let count = |prefix: &str| {
            cols.iter()
                .filter(|c| c.strip_prefix(prefix).is_some_and(|i| !i.is_empty() && i.bytes().all(|b| b.is_ascii_digit())))
                .count()
        };
        let (n, m_v, m_w) = (count("x"), count("v"), count("w"));
        if cols != header(n, m_v, m_w) {
            return Err(DobacError::SchemaMismatch("column layout does not match the schema".into()));
        }
        let mode_idx = cols.iter().position(|c| c == "mode").expect("checked above");
        let mut log = RunLog::new(n, m_v, m_w);
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            let fields = rec
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    if i == mode_idx {
                        v.parse::<RejectionCase>().map(Field::Mode)
                    } else {
                        v.parse::<f64>()
                            .map(Field::Num)
                            .map_err(|_| DobacError::SchemaMismatch(format!("bad number `{v}` in column {}", cols[i])))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            log.push(Sample::from_fields(&fields, n, m_v, m_w)?);
        }
        Ok(log)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(File::create(path).map_err(io)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(File::open(path).map_err(io)?)
    }

    /// Samples with `t0 <= t <= t1`.
    pub fn window(&self, t0: f64, t1: f64) -> Result<&[Sample]> {
        let (start, end) = match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => (a.t, b.t),
            _ => return Err(DobacError::WindowOutOfRange { t0, t1, start: f64::NAN, end: f64::NAN }),
        };
        let slack = 1e-9 * end.abs().max(1.0);
        if !(t0 <= t1 && t0 >= start - slack && t1 <= end + slack) {
            return Err(DobacError::WindowOutOfRange { t0, t1, start, end });
        }
        let lo = self.samples.partition_point(|s| s.t < t0 - slack);
        let hi = self.samples.partition_point(|s| s.t <= t1 + slack);
        Ok(&self.samples[lo..hi])
    }
}

fn io(e: std::io::Error) -> DobacError {
    DobacError::Io(e.to_string())
}

fn csv_err(e: csv::Error) -> DobacError {
    if e.is_io_error() {
        DobacError::Io(e.to_string())
    } else {
        DobacError::SchemaMismatch(e.to_string())
    }
}

#[cfg(test)]
pub(crate) mod tests_support {
    use super::*;

    /// All-zero sample of a two-state, one-V-term run at time `t`.
    pub(crate) fn blank(t: f64) -> Sample {
        let z2 = || Vector::zeros(2);
        Sample {
            t,
            x: z2(),
            x_r: z2(),
            e: z2(),
            k_x: z2(),
            k_r: 0.0,
            v: Vector::zeros(1),
            w: Vector::zeros(0),
            r: 0.0,
            u: 0.0,
            u_drj_prev: 0.0,
            u_drj: 0.0,
            mode: RejectionCase::Integrate,
            d: 0.0,
            d_u: z2(),
            d_u_hat: z2(),
            e_du: z2(),
            d_hat: 0.0,
            e_d: 0.0,
            eta: 0.0,
            phi_drj: 0.0,
            f_drj: 0.0,
            d_hat_dot_star: 0.0,
            e_dhatdot_model: 0.0,
            u_adp_err: 0.0,
            lyapunov: 0.0,
            beta_adp: 0.0,
            f_kx: 0.0,
            f_kr: 0.0,
            f_v: 0.0,
            f_w: 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn synthetic(t: f64, seed: f64) -> Sample {
        let v2 = |a: f64, b: f64| Vector::from_vec(vec![a, b]);
        Sample {
            t,
            x: v2(seed, -seed / 3.0),
            x_r: v2(0.1 + seed, 1e-300),
            e: v2(seed * 7.0, f64::MIN_POSITIVE),
            k_x: v2(-5.0 / 12.0, 0.1),
            k_r: 0.8571428571428571,
            v: Vector::from_vec(vec![std::f64::consts::PI * seed]),
            w: Vector::zeros(0),
            r: seed.sin(),
            u: -seed,
            u_drj_prev: 0.0,
            u_drj: -0.0,
            mode: RejectionCase::ResetToNegDhat,
            d: 5.0 * (0.5 * t).sin(),
            d_u: v2(0.0, seed.exp()),
            d_u_hat: v2(1e-17, 2.0),
            e_du: v2(-1e17, 3.0),
            d_hat: 1.0 / 3.0,
            e_d: 2.0 / 3.0,
            eta: seed * 1e-9,
            phi_drj: -8.0,
            f_drj: 5.0,
            d_hat_dot_star: 0.125,
            e_dhatdot_model: seed.cos(),
            u_adp_err: seed.tan(),
            lyapunov: 1.5,
            beta_adp: 34.0,
            f_kx: -1.0,
            f_kr: 0.999,
            f_v: 1.0000001,
            f_w: -1.0,
        }
    }

    #[test]
    fn header_layout() {
        let cols = header(2, 1, 0);
        assert_eq!(&cols[..6], &["t", "x1", "x2", "xr1", "xr2", "e1"]);
        assert!(cols.contains(&"v1".to_string()));
        assert!(!cols.iter().any(|c| c.starts_with('w') && c != "w"));
        assert_eq!(cols.len(), Sample::fields(&synthetic(0.0, 1.0)).len());
    }

    #[test]
    fn rejects_wrong_schema() {
        let text = "#schema=dobac-runlog/0\nt\n";
        assert!(matches!(RunLog::read_csv(text.as_bytes()), Err(DobacError::SchemaMismatch(_))));
        assert!(matches!(RunLog::read_csv("t,x1\n".as_bytes()), Err(DobacError::SchemaMismatch(_))));
    }

    #[test]
    fn column_lookup() {
        let log = RunLog::from_samples(2, 1, 0, vec![synthetic(0.0, 1.0), synthetic(0.1, 2.0)]);
        assert_eq!(log.column("x1").unwrap(), vec![1.0, 2.0]);
        assert!(log.column("mode").is_err());
        assert!(log.column("nope").is_err());
    }

    #[test]
    fn window_bounds() {
        let samples = (0..=10).map(|k| synthetic(k as f64 * 0.1, 1.0)).collect();
        let log = RunLog::from_samples(2, 1, 0, samples);
        assert_eq!(log.window(0.3, 0.5).unwrap().len(), 3);
        assert_eq!(log.window(0.0, 1.0).unwrap().len(), 11);
        assert!(matches!(log.window(0.5, 2.0), Err(DobacError::WindowOutOfRange { .. })));
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(seeds in proptest::collection::vec(-1e6f64..1e6, 1..20)) {
            let samples = seeds.iter().enumerate().map(|(k, s)| synthetic(k as f64 * 1e-3, *s)).collect();
            let log = RunLog::from_samples(2, 1, 0, samples);
            let mut buf = Vec::new();
            log.write_csv(&mut buf).unwrap();
            let back = RunLog::read_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back.len(), log.len());
            for (a, b) in log.samples().iter().zip(back.samples()) {
                let (fa, fb) = (a.fields(), b.fields());
                for (x, y) in fa.iter().zip(&fb) {
                    match (x, y) {
                        (Field::Num(p), Field::Num(q)) => prop_assert_eq!(p.to_bits(), q.to_bits()),
                        _ => prop_assert_eq!(x, y),
                    }
                }
            }
        }
    }
}
