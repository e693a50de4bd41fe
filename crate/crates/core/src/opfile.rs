//! Plain-text operator files.
//!
//! ```text
//! # optional comments
//! dim 2 count 2 kind pvm
//! op 0
//! 1.0000000000000000e0+0.0000000000000000e0j 0.0000000000000000e0+0.0000000000000000e0j
//! 0.0000000000000000e0+0.0000000000000000e0j 0.0000000000000000e0+0.0000000000000000e0j
//! op 1
//! ...
//! ```
//!
//! Entries are written with 17 significant digits, which round-trips every
//! `f64` exactly.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matcore::{CMatrix, HermitianMatrix};
use crate::measure::{DensityOperator, Povm};

/// Largest `|P² − P|` accepted for elements of a `pvm` file.
pub const PROJECTOR_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    Povm,
    Pvm,
    State,
}

impl OperatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OperatorKind::Povm => "povm",
            OperatorKind::Pvm => "pvm",
            OperatorKind::State => "state",
        }
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OperatorKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "povm" => Ok(OperatorKind::Povm),
            "pvm" => Ok(OperatorKind::Pvm),
            "state" => Ok(OperatorKind::State),
            other => Err(format!(
                "unknown kind `{other}` (expected povm, pvm or state)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorFile {
    pub dim: usize,
    pub kind: OperatorKind,
    pub operators: Vec<CMatrix>,
}

impl OperatorFile {
    pub fn from_povm(p: &Povm, kind: OperatorKind) -> Self {
        OperatorFile {
            dim: p.dim(),
            kind,
            operators: p.elements().iter().map(|e| e.as_matrix().clone()).collect(),
        }
    }

    pub fn from_state(rho: &DensityOperator) -> Self {
        OperatorFile {
            dim: rho.dim(),
            kind: OperatorKind::State,
            operators: vec![rho.matrix().as_matrix().clone()],
        }
    }

    /// Validates as a POVM; `pvm` files must also hold projectors.
    pub fn to_povm(&self) -> Result<Povm> {
        if self.kind == OperatorKind::State {
            return Err(Error::ConfigInvalid(
                "file holds a state, not a POVM".into(),
            ));
        }
        let elements = self
            .operators
            .iter()
            .map(|m| HermitianMatrix::new(m.clone()))
            .collect::<Result<Vec<_>>>()?;
        if self.kind == OperatorKind::Pvm {
            for e in &elements {
                let m = e.as_matrix();
                let defect = (m * m).max_abs_diff(m);
                if defect > PROJECTOR_TOL {
                    return Err(Error::NotProjective { defect });
                }
            }
        }
        Povm::new(elements)
    }

    pub fn to_state(&self) -> Result<DensityOperator> {
        if self.kind != OperatorKind::State || self.operators.len() != 1 {
            return Err(Error::ConfigInvalid(
                "expected a state file with exactly one operator".into(),
            ));
        }
        DensityOperator::new(HermitianMatrix::new(self.operators[0].clone())?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        std::fs::read_to_string(path)?.parse()
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_string())?;
        Ok(())
    }
}

fn format_entry(out: &mut String, z: Complex64) {
    write!(out, "{:.16e}{:+.16e}j", z.re, z.im).expect("writing to a String");
}

impl fmt::Display for OperatorFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "dim {} count {} kind {}",
            self.dim,
            self.operators.len(),
            self.kind
        )?;
        let mut line = String::new();
        for (k, m) in self.operators.iter().enumerate() {
            writeln!(f, "op {k}")?;
            for i in 0..m.rows() {
                line.clear();
                for j in 0..m.cols() {
                    if j > 0 {
                        line.push(' ');
                    }
                    format_entry(&mut line, m[(i, j)]);
                }
                writeln!(f, "{line}")?;
            }
        }
        Ok(())
    }
}

/// Parses `re+imj` / `re-imj`. The split is at the last sign that is not
/// the leading character and does not follow an exponent marker.
pub fn parse_complex(token: &str) -> std::result::Result<Complex64, String> {
    let body = token
        .strip_suffix('j')
        .ok_or_else(|| format!("entry `{token}` does not end in `j`"))?;
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'))
        .ok_or_else(|| format!("entry `{token}` has no imaginary part"))?;
    let parse = |s: &str| {
        s.parse::<f64>()
            .map_err(|e| format!("entry `{token}`: {e}"))
            .and_then(|x| {
                if x.is_finite() {
                    Ok(x)
                } else {
                    Err(format!("entry `{token}` is not finite"))
                }
            })
    };
    Ok(Complex64::new(
        parse(&body[..split])?,
        parse(&body[split..])?,
    ))
}

impl FromStr for OperatorFile {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let err = |line: usize, message: String| Error::Parse { line, message };

        let (hline, header) = lines
            .next()
            .ok_or_else(|| err(1, "missing header `dim N count M kind K`".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let (dim, count, kind) = match fields.as_slice() {
            ["dim", n, "count", m, "kind", k] => {
                let dim: usize = n
                    .parse()
                    .map_err(|_| err(hline, format!("bad dimension `{n}`")))?;
                let count: usize = m
                    .parse()
                    .map_err(|_| err(hline, format!("bad count `{m}`")))?;
                let kind: OperatorKind = k.parse().map_err(|e| err(hline, e))?;
                (dim, count, kind)
            }
            _ => {
                return Err(err(
                    hline,
                    format!("expected `dim N count M kind K`, found `{header}`"),
                ))
            }
        };
        if dim == 0 || count == 0 {
            return Err(err(hline, "dimension and count must be positive".into()));
        }

        let mut operators = Vec::with_capacity(count);
        for k in 0..count {
            let (ln, l) = lines
                .next()
                .ok_or_else(|| err(hline, format!("expected {count} operators, found {k}")))?;
            match l.split_whitespace().collect::<Vec<_>>().as_slice() {
                ["op", idx] if idx.parse::<usize>() == Ok(k) => {}
                _ => return Err(err(ln, format!("expected `op {k}`, found `{l}`"))),
            }
            let mut data = Vec::with_capacity(dim * dim);
            for row in 0..dim {
                let (ln, l) = lines
                    .next()
                    .ok_or_else(|| err(ln, format!("operator {k} ends after {row} rows")))?;
                let before = data.len();
                for tok in l.split_whitespace() {
                    data.push(parse_complex(tok).map_err(|m| err(ln, m))?);
                }
                if data.len() - before != dim {
                    return Err(err(
                        ln,
                        format!("expected {dim} entries, found {}", data.len() - before),
                    ));
                }
            }
            operators.push(CMatrix::new(dim, dim, data)?);
        }
        if let Some((ln, l)) = lines.next() {
            return Err(err(ln, format!("unexpected trailing content `{l}`")));
        }
        Ok(OperatorFile {
            dim,
            kind,
            operators,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randgen::{
        random_mixed_state, random_povm, random_pvm, MixedStateMethod, RngStream,
    };
    use proptest::prelude::*;

    #[test]
    fn complex_tokens() {
        assert_eq!(parse_complex("1+2j").unwrap(), Complex64::new(1.0, 2.0));
        assert_eq!(
            parse_complex("-1e-3-2.5E+2j").unwrap(),
            Complex64::new(-1e-3, -250.0)
        );
        assert!(parse_complex("0e0+-0e0j").is_err());
        assert!(parse_complex("1+2").is_err());
        assert!(parse_complex("3j").is_err());
        assert!(parse_complex("nan+0j").is_err());
    }

    #[test]
    fn pvm_round_trip() {
        let p = random_pvm(3, &mut RngStream::new(7, 0));
        let file = OperatorFile::from_povm(&p, OperatorKind::Pvm);
        let back: OperatorFile = file.to_string().parse().unwrap();
        assert_eq!(back, file);
        let q = back.to_povm().unwrap();
        assert_eq!(q.len(), 3);
        assert!(q.validation().passed);
    }

    #[test]
    fn povm_round_trip_through_disk() {
        let p = random_povm(3, 5, &mut RngStream::new(7, 0));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.ops");
        OperatorFile::from_povm(&p, OperatorKind::Povm)
            .write(&path)
            .unwrap();
        let q = OperatorFile::read(&path).unwrap().to_povm().unwrap();
        assert!(q.validation().completeness_deviation <= 1e-9);
        for (x, y) in p.elements().iter().zip(q.elements()) {
            assert_eq!(x.as_matrix(), y.as_matrix());
        }
    }

    #[test]
    fn state_round_trip() {
        let rho = random_mixed_state(4, MixedStateMethod::Spectral, &mut RngStream::new(9, 0));
        let back: OperatorFile = OperatorFile::from_state(&rho).to_string().parse().unwrap();
        let s = back.to_state().unwrap();
        assert!((s.matrix().as_matrix().trace().re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# two outcomes\n\ndim 1 count 2 kind povm  # header\nop 0\n0.25+0j\n# mid\nop 1\n0.75+0j\n";
        let f: OperatorFile = text.parse().unwrap();
        assert_eq!(f.operators.len(), 2);
        assert!(f.to_povm().is_ok());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("dim 2 count 1\n", 1),
            ("dim 2 count 1 kind povm\nop 0\n1+0j 0+0j\n0+0j\n", 4),
            ("dim 2 count 1 kind povm\nop 3\n", 2),
            ("dim 2 count 1 kind povm\nop 0\n1+0j x\n0+0j 1+0j\n", 3),
            ("dim 1 count 1 kind povm\nop 0\n1+0j\nop 1\n", 4),
        ];
        for (text, line) in cases {
            match text.parse::<OperatorFile>() {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn incomplete_povm_names_deviation() {
        let text = "dim 2 count 2 kind povm\nop 0\n0.5+0j 0+0j\n0+0j 0.5+0j\nop 1\n0.4+0j 0+0j\n0+0j 0.4+0j\n";
        match text.parse::<OperatorFile>().unwrap().to_povm() {
            Err(Error::InvalidPovm(v)) => assert!((v.completeness_deviation - 0.1).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn pvm_kind_requires_projectors() {
        let p = random_povm(2, 2, &mut RngStream::new(1, 0));
        let f = OperatorFile::from_povm(&p, OperatorKind::Pvm);
        assert!(matches!(f.to_povm(), Err(Error::NotProjective { .. })));
    }

    proptest! {
        #[test]
        fn entries_round_trip_exactly(re in proptest::num::f64::NORMAL | proptest::num::f64::ZERO,
                                      im in proptest::num::f64::NORMAL | proptest::num::f64::ZERO) {
            let mut s = String::new();
            format_entry(&mut s, Complex64::new(re, im));
            let z = parse_complex(&s).unwrap();
            prop_assert_eq!(z.re.to_bits(), re.to_bits());
            prop_assert_eq!(z.im.to_bits(), im.to_bits());
        }

        #[test]
        fn generated_files_round_trip(seed in any::<u64>(), n in 2usize..5, m in 2usize..6) {
            let p = random_povm(n, m, &mut RngStream::new(seed, 0));
            let f = OperatorFile::from_povm(&p, OperatorKind::Povm);
            let back: OperatorFile = f.to_string().parse().unwrap();
            prop_assert_eq!(back, f);
        }
    }
}
