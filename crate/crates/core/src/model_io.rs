//! Versioned text format for trained models.
//!
//! ```text
//! TSLLSR-MODEL v1
//! [dims]
//! d 20
//! p 3
//! c 3
//! [hyperparams]
//! alpha 1.0000000000000001e-1
//! ...
//! [classes 3]
//! 5 9 11
//! [W 3 20]
//! <3 lines of 20 values>
//! [Q 3 3]
//! <3 lines of 3 values>
//! [features 3 90]      optional, together with [labels]
//! [labels 90]
//! [end]
//! ```
//!
//! Matrices are written row-major, one row per line, with 17 significant
//! digits so every `f64` survives the round trip exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::types::{Hyperparams, Model, StoredFeatures};

pub const MAGIC: &str = "TSLLSR-MODEL v1";

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_matrix(out: &mut String, name: &str, m: &DMatrix<f64>) {
    let _ = writeln!(out, "[{name} {} {}]", m.nrows(), m.ncols());
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

pub fn model_to_string(model: &Model) -> String {
    let (d, p, c) = model.dims();
    let hp = model.hyperparams();
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "[dims]\nd {d}\np {p}\nc {c}");
    let _ = writeln!(out, "[hyperparams]");
    for (key, v) in [
        ("alpha", hp.alpha()),
        ("beta", hp.beta()),
        ("lambda1", hp.lambda1()),
        ("lambda2", hp.lambda2()),
        ("mu0", hp.mu0()),
        ("rho", hp.rho()),
        ("mu_max", hp.mu_max()),
        ("tol", hp.tol()),
    ] {
        let _ = writeln!(out, "{key} {}", fmt_f64(v));
    }
    let _ = writeln!(out, "max_iters {}", hp.max_iters());
    let _ = writeln!(out, "[classes {c}]\n{}", join(model.class_names()));
    write_matrix(&mut out, "W", model.w());
    write_matrix(&mut out, "Q", model.q());
    if let Some(stored) = model.stored() {
        write_matrix(&mut out, "features", stored.features());
        let _ = writeln!(out, "[labels {}]\n{}", stored.labels().len(), join(stored.labels()));
    }
    let _ = writeln!(out, "[end]");
    out
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, model_to_string(model))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    model_from_str(&fs::read_to_string(path)?)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str> {
        match self.inner.next() {
            Some((i, l)) => {
                self.line = i + 1;
                Ok(l.trim())
            }
            None => Err(Error::format(self.line + 1, "unexpected end of file")),
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::format(self.line, msg)
    }

    /// Reads a `[name args...]` header and returns its numeric arguments.
    fn section(&mut self, name: &str) -> Result<Vec<usize>> {
        let l = self.next()?;
        let args = self.try_section(l, name)?;
        args.ok_or_else(|| self.err(format!("expected section [{name}], found {l:?}")))
    }

    fn try_section(&self, l: &str, name: &str) -> Result<Option<Vec<usize>>> {
        let Some(inner) = l.strip_prefix('[').and_then(|s| s.strip_suffix(']')) else {
            return Ok(None);
        };
        let mut parts = inner.split_whitespace();
        if parts.next() != Some(name) {
            return Ok(None);
        }
        parts
            .map(|p| p.parse().map_err(|_| self.err(format!("bad size {p:?} in [{name}]"))))
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    fn key<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let l = self.next()?;
        let mut parts = l.split_whitespace();
        if parts.next() != Some(key) {
            return Err(self.err(format!("expected {key:?}, found {l:?}")));
        }
        let (Some(v), None) = (parts.next(), parts.next()) else {
            return Err(self.err(format!("expected a single value for {key:?}")));
        };
        v.parse().map_err(|_| self.err(format!("cannot parse {v:?} for {key:?}")))
    }

    fn values<T: std::str::FromStr>(&mut self, expected: usize) -> Result<Vec<T>> {
        let l = self.next()?;
        let vals = l
            .split_whitespace()
            .map(|v| v.parse().map_err(|_| self.err(format!("cannot parse {v:?}"))))
            .collect::<Result<Vec<T>>>()?;
        if vals.len() != expected {
            return Err(self.err(format!("expected {expected} values, found {}", vals.len())));
        }
        Ok(vals)
    }

    fn matrix(&mut self, name: &str, shape: (usize, usize)) -> Result<DMatrix<f64>> {
        let args = self.section(name)?;
        self.matrix_body(name, &args, shape)
    }

    fn matrix_body(&mut self, name: &str, args: &[usize], shape: (usize, usize)) -> Result<DMatrix<f64>> {
        if args != [shape.0, shape.1] {
            return Err(self.err(format!(
                "[{name}] declares {args:?}, dims require {} x {}",
                shape.0, shape.1
            )));
        }
        let mut data = Vec::with_capacity(shape.0 * shape.1);
        for _ in 0..shape.0 {
            data.extend(self.values::<f64>(shape.1)?);
        }
        Ok(DMatrix::from_row_slice(shape.0, shape.1, &data))
    }
}

pub fn model_from_str(text: &str) -> Result<Model> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    let header = lines.next()?;
    if header != MAGIC {
        return Err(lines.err(format!("unsupported header {header:?}, expected {MAGIC:?}")));
    }

    lines.section("dims")?;
    let d: usize = lines.key("d")?;
    let p: usize = lines.key("p")?;
    let c: usize = lines.key("c")?;

    lines.section("hyperparams")?;
    let hp = Hyperparams::builder()
        .alpha(lines.key("alpha")?)
        .beta(lines.key("beta")?)
        .lambda1(lines.key("lambda1")?)
        .lambda2(lines.key("lambda2")?)
        .mu0(lines.key("mu0")?)
        .rho(lines.key("rho")?)
        .mu_max(lines.key("mu_max")?)
        .tol(lines.key("tol")?)
        .max_iters(lines.key("max_iters")?)
        .p(Some(p))
        .build()
        .map_err(|e| lines.err(e.to_string()))?;

    let args = lines.section("classes")?;
    if args != [c] {
        return Err(lines.err(format!("[classes] declares {args:?}, dims require {c}")));
    }
    let class_names: Vec<u64> = lines.values(c)?;

    let w = lines.matrix("W", (p, d))?;
    let q = lines.matrix("Q", (c, p))?;

    let next = lines.next()?;
    let stored = if let Some(args) = lines.try_section(next, "features")? {
        let n = args.get(1).copied().unwrap_or(0);
        let features = lines.matrix_body("features", &args, (c, n))?;
        let largs = lines.section("labels")?;
        if largs != [n] {
            return Err(lines.err(format!("[labels] declares {largs:?}, features have {n} columns")));
        }
        let labels: Vec<usize> = lines.values(n)?;
        let stored = StoredFeatures::new(features, labels).map_err(|e| lines.err(e.to_string()))?;
        lines.section("end")?;
        Some(stored)
    } else if lines.try_section(next, "end")?.is_some() {
        None
    } else {
        return Err(lines.err(format!("expected [features] or [end], found {next:?}")));
    };

    Model::new(w, q, hp, stored, class_names).map_err(|e| lines.err(e.to_string()))
}
