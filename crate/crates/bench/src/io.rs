//! Text formats for problems and direction caches.
//!
//! Both formats are line oriented. `#` starts a comment, blank lines are
//! ignored. Scalar fields are `key value` lines; array fields are a line with
//! the key alone followed by the rows of the array, one row per line.
//! Numbers are written with 17 significant digits so a write/read cycle is
//! exact; `inf` and `-inf` are accepted for bounds.
//!
//! Problem file:
//!
//! ```text
//! # cdqp problem
//! name example
//! n 2
//! m 1
//! P
//! 2 0
//! 0 1
//! q
//! 1 1
//! A
//! 1 1
//! l
//! -inf
//! u
//! 3
//! ```
//!
//! Cache file: header lines `n`, `m`, `sigma`, `fingerprint`, `strategy`
//! (`pencil` or `fallback`), then the `rho_base` row, `directions` (one row
//! per direction), `t1` and `t2` rows.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use cdqp::{AugmentationMatrix, ConjugateDirectionSet, DirectionStrategy, Matrix, QpProblem};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid {what}: {source}")]
    Validation {
        what: &'static str,
        #[source]
        source: cdqp::Error,
    },
}

fn parse_err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Parse {
        line,
        message: message.into(),
    }
}

/// Formats with 17 significant digits.
pub fn fmt_num(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:.16e}")
    }
}

fn fmt_row(out: &mut String, row: &[f64]) {
    let cells: Vec<String> = row.iter().map(|&v| fmt_num(v)).collect();
    out.push_str(&cells.join(" "));
    out.push('\n');
}

struct Lines<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
    last_line: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let lines: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        let last_line = text.lines().count();
        Self {
            lines,
            pos: 0,
            last_line,
        }
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let item = self.lines.get(self.pos).copied();
        self.pos += 1;
        item
    }

    fn expect_row(&mut self, field: &str, len: usize) -> Result<Vec<f64>, FormatError> {
        let (line, text) = self.next().ok_or_else(|| {
            parse_err(
                self.last_line + 1,
                format!("unexpected end of file in {field}"),
            )
        })?;
        let row = text
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| parse_err(line, format!("{field}: cannot parse number {tok:?}")))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        if row.len() != len {
            return Err(parse_err(
                line,
                format!("{field}: expected {len} values, found {}", row.len()),
            ));
        }
        Ok(row)
    }

    fn expect_block(
        &mut self,
        field: &str,
        rows: usize,
        cols: usize,
    ) -> Result<Vec<f64>, FormatError> {
        let mut out = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            out.extend(self.expect_row(field, cols)?);
        }
        Ok(out)
    }
}

fn parse_usize(line: usize, key: &str, v: Option<&str>) -> Result<usize, FormatError> {
    v.and_then(|s| s.parse().ok())
        .ok_or_else(|| parse_err(line, format!("{key}: expected a non-negative integer")))
}

fn parse_f64(line: usize, key: &str, v: Option<&str>) -> Result<f64, FormatError> {
    v.and_then(|s| s.parse().ok())
        .ok_or_else(|| parse_err(line, format!("{key}: expected a number")))
}

/// Raw problem fields before validation.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemDocument {
    pub name: Option<String>,
    pub n: usize,
    pub m: usize,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub a: Vec<f64>,
    pub l: Vec<f64>,
    pub u: Vec<f64>,
}

impl ProblemDocument {
    pub fn from_problem(problem: &QpProblem<f64>, name: Option<&str>) -> Self {
        Self {
            name: name.map(str::to_string),
            n: problem.n(),
            m: problem.m(),
            p: problem.p().as_slice().to_vec(),
            q: problem.q().to_vec(),
            a: problem.a().as_slice().to_vec(),
            l: problem.l().to_vec(),
            u: problem.u().to_vec(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, FormatError> {
        let mut lines = Lines::new(text);
        let mut name = None;
        let mut n = None;
        let mut m = None;
        let (mut p, mut q, mut a, mut l, mut u) = (None, None, None, None, None);

        while let Some((line, text)) = lines.next() {
            let mut parts = text.splitn(2, char::is_whitespace);
            let key = parts.next().unwrap_or("");
            let value = parts.next().map(str::trim);
            let need = |dim: Option<usize>, which: &str| {
                dim.ok_or_else(|| parse_err(line, format!("{key} appears before {which}")))
            };
            match key {
                "name" => name = value.map(str::to_string),
                "n" => n = Some(parse_usize(line, key, value)?),
                "m" => m = Some(parse_usize(line, key, value)?),
                "P" => {
                    let n = need(n, "n")?;
                    p = Some(lines.expect_block("P", n, n)?);
                }
                "q" => q = Some(lines.expect_row("q", need(n, "n")?)?),
                "A" => {
                    let (n, m) = (need(n, "n")?, need(m, "m")?);
                    a = Some(lines.expect_block("A", m, n)?);
                }
                "l" => l = Some(lines.expect_row("l", need(m, "m")?)?),
                "u" => u = Some(lines.expect_row("u", need(m, "m")?)?),
                other => return Err(parse_err(line, format!("unknown field {other:?}"))),
            }
        }
        let eof = lines.last_line + 1;
        let missing = |f: &str| parse_err(eof, format!("missing field {f}"));
        Ok(Self {
            name,
            n: n.ok_or_else(|| missing("n"))?,
            m: m.ok_or_else(|| missing("m"))?,
            p: p.ok_or_else(|| missing("P"))?,
            q: q.ok_or_else(|| missing("q"))?,
            a: a.ok_or_else(|| missing("A"))?,
            l: l.ok_or_else(|| missing("l"))?,
            u: u.ok_or_else(|| missing("u"))?,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# cdqp problem\n");
        if let Some(name) = &self.name {
            let _ = writeln!(out, "name {name}");
        }
        let _ = writeln!(out, "n {}\nm {}", self.n, self.m);
        out.push_str("P\n");
        for row in self.p.chunks(self.n.max(1)) {
            fmt_row(&mut out, row);
        }
        out.push_str("q\n");
        fmt_row(&mut out, &self.q);
        out.push_str("A\n");
        for row in self.a.chunks(self.n.max(1)) {
            fmt_row(&mut out, row);
        }
        out.push_str("l\n");
        fmt_row(&mut out, &self.l);
        out.push_str("u\n");
        fmt_row(&mut out, &self.u);
        out
    }

    pub fn into_problem(self) -> Result<QpProblem<f64>, FormatError> {
        let wrap = |source| FormatError::Validation {
            what: "problem",
            source,
        };
        let p = Matrix::from_row_major(self.n, self.n, self.p).map_err(wrap)?;
        let a = Matrix::from_row_major(self.m, self.n, self.a).map_err(wrap)?;
        QpProblem::new(p, self.q, a, self.l, self.u).map_err(wrap)
    }
}

fn read(path: &Path) -> Result<String, FormatError> {
    fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), FormatError> {
    fs::write(path, text).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_problem(path: &Path) -> Result<QpProblem<f64>, FormatError> {
    ProblemDocument::parse(&read(path)?)?.into_problem()
}

pub fn save_problem(
    path: &Path,
    problem: &QpProblem<f64>,
    name: Option<&str>,
) -> Result<(), FormatError> {
    write_text(
        path,
        &ProblemDocument::from_problem(problem, name).to_text(),
    )
}

/// Direction cache plus the augmentation matrix it was built for.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheDocument {
    pub directions: ConjugateDirectionSet<f64>,
    pub rho: AugmentationMatrix<f64>,
}

impl CacheDocument {
    pub fn to_text(&self) -> String {
        let dirs = &self.directions;
        let mut out = String::from("# cdqp direction cache\n");
        let _ = writeln!(out, "n {}", dirs.len());
        let _ = writeln!(out, "m {}", self.rho.m());
        let _ = writeln!(out, "sigma {}", fmt_num(dirs.sigma()));
        let _ = writeln!(out, "fingerprint {}", dirs.fingerprint());
        let _ = writeln!(out, "strategy {}", dirs.strategy().as_str());
        out.push_str("rho_base\n");
        fmt_row(&mut out, self.rho.rho_base());
        out.push_str("directions\n");
        for d in dirs.directions() {
            fmt_row(&mut out, d);
        }
        out.push_str("t1\n");
        fmt_row(&mut out, dirs.t1());
        out.push_str("t2\n");
        fmt_row(&mut out, dirs.t2());
        out
    }

    pub fn parse(text: &str) -> Result<Self, FormatError> {
        let mut lines = Lines::new(text);
        let (mut n, mut m, mut sigma, mut fp, mut strategy) = (None, None, None, None, None);
        let (mut rho, mut dirs, mut t1, mut t2) = (None, None, None, None);
        while let Some((line, text)) = lines.next() {
            let mut parts = text.splitn(2, char::is_whitespace);
            let key = parts.next().unwrap_or("");
            let value = parts.next().map(str::trim);
            let need = |dim: Option<usize>, which: &str| {
                dim.ok_or_else(|| parse_err(line, format!("{key} appears before {which}")))
            };
            match key {
                "n" => n = Some(parse_usize(line, key, value)?),
                "m" => m = Some(parse_usize(line, key, value)?),
                "sigma" => sigma = Some(parse_f64(line, key, value)?),
                "fingerprint" => {
                    fp = Some(
                        value
                            .ok_or_else(|| parse_err(line, "fingerprint: missing value"))?
                            .to_string(),
                    )
                }
                "strategy" => {
                    strategy =
                        Some(value.and_then(DirectionStrategy::parse).ok_or_else(|| {
                            parse_err(line, "strategy: expected pencil or fallback")
                        })?)
                }
                "rho_base" => rho = Some(lines.expect_row("rho_base", need(m, "m")?)?),
                "directions" => {
                    let n = need(n, "n")?;
                    let flat = lines.expect_block("directions", n, n)?;
                    dirs = Some(
                        flat.chunks(n.max(1))
                            .map(<[f64]>::to_vec)
                            .collect::<Vec<_>>(),
                    );
                }
                "t1" => t1 = Some(lines.expect_row("t1", need(n, "n")?)?),
                "t2" => t2 = Some(lines.expect_row("t2", need(n, "n")?)?),
                other => return Err(parse_err(line, format!("unknown field {other:?}"))),
            }
        }
        let eof = lines.last_line + 1;
        let missing = |f: &str| parse_err(eof, format!("missing field {f}"));
        let wrap = |source| FormatError::Validation {
            what: "cache",
            source,
        };
        let directions = ConjugateDirectionSet::from_parts(
            dirs.ok_or_else(|| missing("directions"))?,
            t1.ok_or_else(|| missing("t1"))?,
            t2.ok_or_else(|| missing("t2"))?,
            sigma.ok_or_else(|| missing("sigma"))?,
            fp.ok_or_else(|| missing("fingerprint"))?,
            strategy.ok_or_else(|| missing("strategy"))?,
        )
        .map_err(wrap)?;
        let rho =
            AugmentationMatrix::new(rho.ok_or_else(|| missing("rho_base"))?, 1.0).map_err(wrap)?;
        let _ = n.ok_or_else(|| missing("n"))?;
        Ok(Self { directions, rho })
    }
}

pub fn load_cache(path: &Path) -> Result<CacheDocument, FormatError> {
    CacheDocument::parse(&read(path)?)
}

pub fn save_cache(path: &Path, cache: &CacheDocument) -> Result<(), FormatError> {
    write_text(path, &cache.to_text())
}
