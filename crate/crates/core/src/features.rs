//! Path functionals `Φ_j = ∫_0^{T∧τ} φ_j(s, z_s) ds` and
//! `Ψ_j = ∫_0^{T∧τ} φ_j(s, z_s) dx_s`, and the design matrix built from them.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{BasisEvaluator, Dictionary};
use crate::paths::{CountingPath, CovariatePath, Label, LabeledSample};
use crate::quadrature::SegmentQuadrature;

pub fn compute_phi_with(
    quad: &SegmentQuadrature,
    j: usize,
    x: &CountingPath,
    z: &CovariatePath,
    dict: &dyn Dictionary,
) -> f64 {
    quad.integrate(z, x.tau(), |s, zs| dict.eval(j, s, zs))
}

pub fn compute_phi(j: usize, x: &CountingPath, z: &CovariatePath, dict: &dyn Dictionary) -> f64 {
    compute_phi_with(&SegmentQuadrature::for_horizon(x.horizon()), j, x, z, dict)
}

/// Exact jump sum; no quadrature involved.
pub fn compute_psi(j: usize, x: &CountingPath, z: &CovariatePath, dict: &dyn Dictionary) -> f64 {
    let window = x.tau();
    x.jump_times()
        .iter()
        .take_while(|&&t| t <= window)
        .map(|&t| dict.eval(j, t, z.value_at(t)))
        .sum()
}

/// `Φ_1..Φ_count` and `Ψ_1..Ψ_count` of one path, written into `phi`/`psi`.
pub fn path_features(
    quad: &SegmentQuadrature,
    evaluator: &mut dyn BasisEvaluator,
    x: &CountingPath,
    z: &CovariatePath,
    phi: &mut [f64],
    psi: &mut [f64],
) {
    let count = phi.len();
    let mut buf = vec![0.0; count];
    phi.iter_mut().for_each(|v| *v = 0.0);
    psi.iter_mut().for_each(|v| *v = 0.0);
    quad.for_each_point(z, x.tau(), |t, zs, w| {
        evaluator.eval_into(t, zs, &mut buf);
        for (p, b) in phi.iter_mut().zip(&buf) {
            *p += w * b;
        }
    });
    let window = x.tau();
    for &t in x.jump_times().iter().take_while(|&&t| t <= window) {
        evaluator.eval_into(t, z.value_at(t), &mut buf);
        for (p, b) in psi.iter_mut().zip(&buf) {
            *p += b;
        }
    }
}

/// Row-major `n × B` blocks of `Φ` and `Ψ` values plus labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n: usize,
    b: usize,
    phi: Vec<f64>,
    psi: Vec<f64>,
    labels: Vec<Label>,
    /// `U = 1 + (T + u) L`; unknown for matrices loaded from CSV.
    bound: Option<f64>,
}

impl FeatureMatrix {
    pub fn from_parts(
        b: usize,
        phi: Vec<f64>,
        psi: Vec<f64>,
        labels: Vec<Label>,
        bound: Option<f64>,
    ) -> Result<Self> {
        let n = labels.len();
        if b == 0 {
            return Err(Error::DimensionMismatch("B must be at least 1".into()));
        }
        if phi.len() != n * b || psi.len() != n * b {
            return Err(Error::DimensionMismatch(format!(
                "expected {n} x {b} feature blocks, got {} and {} entries",
                phi.len(),
                psi.len()
            )));
        }
        Ok(Self {
            n,
            b,
            phi,
            psi,
            labels,
            bound,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn bound(&self) -> Option<f64> {
        self.bound
    }

    pub fn phi_row(&self, i: usize) -> &[f64] {
        &self.phi[i * self.b..(i + 1) * self.b]
    }

    pub fn psi_row(&self, i: usize) -> &[f64] {
        &self.psi[i * self.b..(i + 1) * self.b]
    }

    /// Left `b`-column block of both feature groups.
    pub fn prefix(&self, b: usize) -> Result<Self> {
        if b == 0 || b > self.b {
            return Err(Error::DimensionMismatch(format!(
                "cannot take {b} columns out of {}",
                self.b
            )));
        }
        let take = |m: &[f64]| -> Vec<f64> {
            m.chunks(self.b).flat_map(|row| row[..b].iter().copied()).collect()
        };
        Ok(Self {
            n: self.n,
            b,
            phi: take(&self.phi),
            psi: take(&self.psi),
            labels: self.labels.clone(),
            bound: self.bound,
        })
    }

    /// Rows `range` as a new matrix.
    pub fn rows(&self, range: std::ops::Range<usize>) -> Self {
        let (s, e) = (range.start * self.b, range.end * self.b);
        Self {
            n: range.len(),
            b: self.b,
            phi: self.phi[s..e].to_vec(),
            psi: self.psi[s..e].to_vec(),
            labels: self.labels[range].to_vec(),
            bound: self.bound,
        }
    }

    /// Each row repeated `times` times in place.
    pub fn repeated(&self, times: usize) -> Self {
        let mut phi = Vec::with_capacity(self.phi.len() * times);
        let mut psi = Vec::with_capacity(self.psi.len() * times);
        let mut labels = Vec::with_capacity(self.n * times);
        for i in 0..self.n {
            for _ in 0..times {
                phi.extend_from_slice(self.phi_row(i));
                psi.extend_from_slice(self.psi_row(i));
                labels.push(self.labels[i]);
            }
        }
        Self {
            n: self.n * times,
            b: self.b,
            phi,
            psi,
            labels,
            bound: self.bound,
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut header = String::from("i,y");
        for j in 1..=self.b {
            write!(header, ",Phi_{j}").unwrap();
        }
        for j in 1..=self.b {
            write!(header, ",Psi_{j}").unwrap();
        }
        writeln!(out, "{header}")?;
        for i in 0..self.n {
            let mut line = format!("{},{}", i, if self.labels[i] == Label::Plus { 1 } else { -1 });
            for v in self.phi_row(i).iter().chain(self.psi_row(i)) {
                write!(line, ",{v:.16e}").unwrap();
            }
            writeln!(out, "{line}")?;
        }
        out.flush()
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = match lines.next() {
            Some(h) => h.map_err(|e| Error::Parse {
                line: 1,
                message: e.to_string(),
            })?,
            None => {
                return Err(Error::Parse {
                    line: 1,
                    message: "missing header".into(),
                })
            }
        };
        let cols: Vec<&str> = header.trim().split(',').collect();
        if cols.len() < 4 || cols[0] != "i" || cols[1] != "y" || !(cols.len() - 2).is_multiple_of(2) {
            return Err(Error::Parse {
                line: 1,
                message: "header must be `i,y,Phi_1..Phi_B,Psi_1..Psi_B`".into(),
            });
        }
        let b = (cols.len() - 2) / 2;
        for j in 1..=b {
            if cols[1 + j] != format!("Phi_{j}") || cols[1 + b + j] != format!("Psi_{j}") {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("unexpected column names around index {j}"),
                });
            }
        }
        let (mut phi, mut psi, mut labels) = (Vec::new(), Vec::new(), Vec::new());
        for (k, line) in lines.enumerate() {
            let line_no = k + 2;
            let line = line.map_err(|e| Error::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.trim().split(',').collect();
            if fields.len() != 2 + 2 * b {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected {} fields, found {}", 2 + 2 * b, fields.len()),
                });
            }
            labels.push(match fields[1] {
                "1" | "+1" => Label::Plus,
                "-1" => Label::Minus,
                other => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("bad label `{other}`"),
                    })
                }
            });
            for (c, f) in fields[2..].iter().enumerate() {
                let v: f64 = f.parse().map_err(|e| Error::Parse {
                    line: line_no,
                    message: format!("column {}: {e}", c + 3),
                })?;
                if c < b {
                    phi.push(v);
                } else {
                    psi.push(v);
                }
            }
        }
        Self::from_parts(b, phi, psi, labels, None)
    }

    pub fn write_csv_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }

    pub fn read_csv_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(BufReader::new(file))
    }
}

/// `U = 1 + (T + u) L`.
pub fn class_bound(horizon: f64, cap: u32, sup_norm: f64) -> f64 {
    1.0 + (horizon + cap as f64) * sup_norm
}

/// Features `φ_1..φ_b` for every sample. Rows are computed in parallel and
/// written to their own slots, so the result does not depend on scheduling.
/// For an empty dataset `U` is reported as `1`.
pub fn feature_matrix(
    dataset: &[LabeledSample],
    dict: &dyn Dictionary,
    b: usize,
) -> Result<FeatureMatrix> {
    if b == 0 {
        return Err(Error::DimensionMismatch("B must be at least 1".into()));
    }
    if let Some(s) = dataset.iter().find(|s| s.z.dim() != dict.dim()) {
        return Err(Error::DimensionMismatch(format!(
            "covariate dimension {} but dictionary dimension {}",
            s.z.dim(),
            dict.dim()
        )));
    }
    let n = dataset.len();
    let mut phi = vec![0.0; n * b];
    let mut psi = vec![0.0; n * b];
    phi.par_chunks_mut(b)
        .zip(psi.par_chunks_mut(b))
        .zip(dataset.par_iter())
        .for_each_init(
            || dict.prefix_evaluator(b),
            |evaluator, ((phi_row, psi_row), s)| {
                let quad = SegmentQuadrature::for_horizon(s.x.horizon());
                path_features(&quad, evaluator.as_mut(), &s.x, &s.z, phi_row, psi_row);
            },
        );
    let horizon = dataset.iter().map(|s| s.x.horizon()).fold(0.0, f64::max);
    let cap = dataset.iter().map(|s| s.x.cap()).max().unwrap_or(0);
    let bound = class_bound(horizon, cap, dict.sup_bound(b));
    let labels = dataset.iter().map(|s| s.y).collect();
    FeatureMatrix::from_parts(b, phi, psi, labels, Some(bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{cosine_dictionary, FnDictionary};
    use std::f64::consts::PI;

    fn fn_dict(f: fn(f64, &[f64]) -> f64) -> FnDictionary {
        FnDictionary::new(1, 1.0, 1.0, 1, "test", move |_, t, z| f(t, z)).unwrap()
    }

    fn constant_z() -> CovariatePath {
        CovariatePath::new(vec![0.0, 0.25, 0.5, 1.0], vec![0.1, 0.4, 0.9], 1).unwrap()
    }

    #[test]
    fn phi_examples() {
        let one = fn_dict(|_, _| 1.0);
        let z = constant_z();
        let x = CountingPath::new(1.0, vec![0.2], 5).unwrap();
        assert!((compute_phi(1, &x, &z, &one) - 1.0).abs() < 1e-15);
        let stopped = CountingPath::new(1.0, vec![0.2, 0.7], 2).unwrap();
        let (_, zs) = crate::paths::stop_pair(&stopped, &z).unwrap();
        assert!((compute_phi(1, &stopped, &zs, &one) - 0.7).abs() < 1e-15);
        let cos = fn_dict(|s, _| (PI * s).cos());
        assert!(compute_phi(1, &x, &z, &cos).abs() < 1e-12);
    }

    #[test]
    fn psi_examples() {
        let one = fn_dict(|_, _| 1.0);
        let z = constant_z();
        let x = CountingPath::new(1.0, vec![0.2, 0.5, 0.9], 5).unwrap();
        assert_eq!(compute_psi(1, &x, &z, &one), 3.0);
        let empty = CountingPath::new(1.0, vec![], 5).unwrap();
        assert_eq!(compute_psi(1, &empty, &z, &one), 0.0);
        let ident = fn_dict(|s, _| s);
        let two = CountingPath::new(1.0, vec![0.2, 0.5], 5).unwrap();
        assert!((compute_psi(1, &two, &z, &ident) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn psi_reads_right_continuous_covariate() {
        let zval = fn_dict(|_, z| z[0]);
        let z = constant_z();
        let x = CountingPath::new(1.0, vec![0.25], 5).unwrap();
        assert_eq!(compute_psi(1, &x, &z, &zval), 0.4);
    }

    #[test]
    fn psi_is_additive_over_time_split() {
        let d = cosine_dictionary(1, 1.0);
        let z = constant_z();
        let jumps = vec![0.1, 0.3, 0.45, 0.8];
        let x = CountingPath::new(1.0, jumps.clone(), 10).unwrap();
        let early = CountingPath::new(1.0, jumps[..2].to_vec(), 10).unwrap();
        let late = CountingPath::new(1.0, jumps[2..].to_vec(), 10).unwrap();
        for j in 1..6 {
            let whole = compute_psi(j, &x, &z, &d);
            let parts = compute_psi(j, &early, &z, &d) + compute_psi(j, &late, &z, &d);
            assert!((whole - parts).abs() < 1e-14);
        }
    }

    #[test]
    fn doubling_nodes_changes_phi_negligibly() {
        let d = cosine_dictionary(1, 1.0);
        let z = constant_z();
        let x = CountingPath::new(1.0, vec![0.3, 0.77], 2).unwrap();
        let (_, zs) = crate::paths::stop_pair(&x, &z).unwrap();
        let q16 = SegmentQuadrature::new(16, 1.0 / 16.0);
        let q32 = SegmentQuadrature::new(32, 1.0 / 16.0);
        for j in 1..=30 {
            let a = compute_phi_with(&q16, j, &x, &zs, &d);
            let b = compute_phi_with(&q32, j, &x, &zs, &d);
            assert!((a - b).abs() < 1e-10, "j={j}: {a} vs {b}");
        }
    }

    fn sample(jumps: Vec<f64>, y: Label) -> LabeledSample {
        let x = CountingPath::new(1.0, jumps, 3).unwrap();
        LabeledSample::stopped(x, constant_z(), y).unwrap()
    }

    #[test]
    fn matrix_matches_scalar_functionals() {
        let d = cosine_dictionary(1, 1.0);
        let ds = vec![
            sample(vec![0.1, 0.6], Label::Plus),
            sample(vec![0.2, 0.3, 0.4], Label::Minus),
            sample(vec![], Label::Plus),
        ];
        let fm = feature_matrix(&ds, &d, 6).unwrap();
        assert_eq!(fm.n(), 3);
        for (i, s) in ds.iter().enumerate() {
            for j in 1..=6 {
                assert!((fm.phi_row(i)[j - 1] - compute_phi(j, &s.x, &s.z, &d)).abs() < 1e-13);
                assert!((fm.psi_row(i)[j - 1] - compute_psi(j, &s.x, &s.z, &d)).abs() < 1e-13);
            }
        }
        let l = d.sup_bound(6);
        assert_eq!(fm.bound(), Some(1.0 + (1.0 + 3.0) * l));
    }

    #[test]
    fn matrix_edge_cases() {
        let d = cosine_dictionary(1, 1.0);
        assert!(feature_matrix(&[], &d, 0).is_err());
        let empty = feature_matrix(&[], &d, 4).unwrap();
        assert_eq!(empty.n(), 0);
        let one = feature_matrix(&[sample(vec![0.5], Label::Plus)], &d, 1).unwrap();
        assert_eq!(one.b(), 1);
        let d2 = cosine_dictionary(2, 1.0);
        assert!(feature_matrix(&[sample(vec![0.5], Label::Plus)], &d2, 1).is_err());
    }

    #[test]
    fn nested_prefix_is_exact() {
        let d = cosine_dictionary(1, 1.0);
        let ds = vec![
            sample(vec![0.15, 0.6], Label::Plus),
            sample(vec![0.2, 0.3, 0.4], Label::Minus),
        ];
        let small = feature_matrix(&ds, &d, 3).unwrap();
        let large = feature_matrix(&ds, &d, 7).unwrap();
        let cut = large.prefix(3).unwrap();
        assert_eq!(small.phi, cut.phi);
        assert_eq!(small.psi, cut.psi);
    }

    #[test]
    fn csv_round_trip() {
        let d = cosine_dictionary(1, 1.0);
        let ds = vec![
            sample(vec![0.15, 0.6], Label::Plus),
            sample(vec![0.2], Label::Minus),
        ];
        let fm = feature_matrix(&ds, &d, 3).unwrap();
        let mut buf = Vec::new();
        fm.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("i,y,Phi_1,Phi_2,Phi_3,Psi_1,Psi_2,Psi_3\n"));
        let back = FeatureMatrix::read_csv(&buf[..]).unwrap();
        assert_eq!(back.phi, fm.phi);
        assert_eq!(back.psi, fm.psi);
        assert_eq!(back.labels, fm.labels);
    }
}
