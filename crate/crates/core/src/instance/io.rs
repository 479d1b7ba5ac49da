//! Line-oriented text format for instances.
//!
//! ```text
//! sparse N M E            | dense N M
//! mu i value   (E lines)  | v_1 ... v_N   (M lines)
//! signal N rho
//! x_1                     (N lines)
//! measurements M
//! y_1                     (M lines)
//! ```
//!
//! Indices are 0-based. Floats are written in Rust's shortest round-trip
//! form, so a save/load cycle is bit-exact. Blank lines are ignored.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use super::{
    DenseMeasurementMatrix, Edge, InstanceError, MeasurementMatrix, MeasurementVector,
    SignalVector, SparseMeasurementMatrix,
};

/// A matrix, the signal it measured, and the measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub matrix: MeasurementMatrix,
    pub signal: SignalVector,
    pub measurements: MeasurementVector,
}

impl Instance {
    /// Builds an instance with `y = F x⁰`.
    pub fn measured(matrix: MeasurementMatrix, signal: SignalVector) -> Result<Self, InstanceError> {
        let measurements = matrix.measure(&signal)?;
        Ok(Self {
            matrix,
            signal,
            measurements,
        })
    }

    fn check_dimensions(&self) -> Result<(), InstanceError> {
        if self.signal.len() != self.matrix.n() {
            return Err(InstanceError::DimensionMismatch {
                what: "signal",
                expected: self.matrix.n(),
                found: self.signal.len(),
            });
        }
        if self.measurements.len() != self.matrix.m() {
            return Err(InstanceError::DimensionMismatch {
                what: "measurements",
                expected: self.matrix.m(),
                found: self.measurements.len(),
            });
        }
        Ok(())
    }
}

pub fn write_instance<W: Write>(mut w: W, inst: &Instance) -> Result<(), InstanceError> {
    inst.check_dimensions()?;
    match &inst.matrix {
        MeasurementMatrix::Sparse(f) => {
            writeln!(w, "sparse {} {} {}", f.n(), f.m(), f.nnz())?;
            for e in f.edges() {
                writeln!(w, "{} {} {}", e.row, e.col, e.value)?;
            }
        }
        MeasurementMatrix::Dense(f) => {
            writeln!(w, "dense {} {}", f.n(), f.m())?;
            for mu in 0..f.m() {
                let line: Vec<String> = f.row(mu).iter().map(f64::to_string).collect();
                writeln!(w, "{}", line.join(" "))?;
            }
        }
    }
    writeln!(w, "signal {} {}", inst.signal.len(), inst.signal.density())?;
    for v in inst.signal.values() {
        writeln!(w, "{v}")?;
    }
    writeln!(w, "measurements {}", inst.measurements.len())?;
    for v in inst.measurements.values() {
        writeln!(w, "{v}")?;
    }
    Ok(())
}

pub fn save_instance(path: impl AsRef<Path>, inst: &Instance) -> Result<(), InstanceError> {
    let mut buf = Vec::new();
    write_instance(&mut buf, inst)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance, InstanceError> {
    let text = fs::read_to_string(path)?;
    parse_instance(&text)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            inner: text.lines().enumerate(),
            last: 0,
        }
    }

    fn next_fields(&mut self, expecting: &str) -> Result<(usize, Vec<&'a str>), InstanceError> {
        for (idx, line) in self.inner.by_ref() {
            self.last = idx + 1;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if !fields.is_empty() {
                return Ok((idx + 1, fields));
            }
        }
        Err(InstanceError::Parse {
            line: self.last + 1,
            msg: format!("unexpected end of input, expected {expecting}"),
        })
    }

    fn expect_end(&mut self) -> Result<(), InstanceError> {
        for (idx, line) in self.inner.by_ref() {
            if !line.trim().is_empty() {
                return Err(InstanceError::Parse {
                    line: idx + 1,
                    msg: "trailing content after measurements".into(),
                });
            }
        }
        Ok(())
    }
}

fn field<T: FromStr>(line: usize, raw: &str, what: &str) -> Result<T, InstanceError> {
    raw.parse().map_err(|_| InstanceError::Parse {
        line,
        msg: format!("cannot parse {what} from `{raw}`"),
    })
}

fn arity(line: usize, fields: &[&str], n: usize, shape: &str) -> Result<(), InstanceError> {
    if fields.len() != n {
        return Err(InstanceError::Parse {
            line,
            msg: format!("expected `{shape}`, found {} fields", fields.len()),
        });
    }
    Ok(())
}

fn header<'a>(
    lines: &mut Lines<'a>,
    keyword: &str,
    shape: &str,
    n: usize,
) -> Result<(usize, Vec<&'a str>), InstanceError> {
    let (line, fields) = lines.next_fields(&format!("`{shape}` header"))?;
    if fields[0] != keyword {
        return Err(InstanceError::Parse {
            line,
            msg: format!("expected `{shape}`, found `{}`", fields[0]),
        });
    }
    arity(line, &fields, n, shape)?;
    Ok((line, fields))
}

fn scalar_block(lines: &mut Lines<'_>, count: usize, what: &str) -> Result<Vec<f64>, InstanceError> {
    (0..count)
        .map(|t| {
            let (line, fields) = lines.next_fields(&format!("{what} value {} of {count}", t + 1))?;
            arity(line, &fields, 1, "value")?;
            field(line, fields[0], what)
        })
        .collect()
}

pub fn parse_instance(text: &str) -> Result<Instance, InstanceError> {
    let mut lines = Lines::new(text);
    let (line, first) = lines.next_fields("matrix header")?;
    let matrix = match first[0] {
        "sparse" => {
            arity(line, &first, 4, "sparse N M E")?;
            let n: usize = field(line, first[1], "N")?;
            let m: usize = field(line, first[2], "M")?;
            let count: usize = field(line, first[3], "E")?;
            let mut edges = Vec::with_capacity(count);
            for t in 0..count {
                let (line, f) = lines.next_fields(&format!("edge {} of {count}", t + 1))?;
                arity(line, &f, 3, "mu i value")?;
                edges.push(Edge {
                    row: field(line, f[0], "row index")?,
                    col: field(line, f[1], "column index")?,
                    value: field(line, f[2], "edge value")?,
                });
            }
            let f = SparseMeasurementMatrix::from_edges(n, m, edges).map_err(|e| {
                InstanceError::Parse {
                    line,
                    msg: format!("invalid edge list: {e}"),
                }
            })?;
            MeasurementMatrix::Sparse(f)
        }
        "dense" => {
            arity(line, &first, 3, "dense N M")?;
            let n: usize = field(line, first[1], "N")?;
            let m: usize = field(line, first[2], "M")?;
            let mut values = Vec::with_capacity(n * m);
            for mu in 0..m {
                let (line, f) = lines.next_fields(&format!("matrix row {} of {m}", mu + 1))?;
                if f.len() != n {
                    return Err(InstanceError::Parse {
                        line,
                        msg: format!("expected {n} values in matrix row, found {}", f.len()),
                    });
                }
                for raw in f {
                    values.push(field(line, raw, "matrix entry")?);
                }
            }
            let f = DenseMeasurementMatrix::new(n, m, values).map_err(|e| InstanceError::Parse {
                line,
                msg: e.to_string(),
            })?;
            MeasurementMatrix::Dense(f)
        }
        other => {
            return Err(InstanceError::Parse {
                line,
                msg: format!("expected `sparse` or `dense`, found `{other}`"),
            })
        }
    };

    let (line, sig) = header(&mut lines, "signal", "signal N rho", 3)?;
    let n: usize = field(line, sig[1], "N")?;
    let rho: f64 = field(line, sig[2], "rho")?;
    if n != matrix.n() {
        return Err(InstanceError::Parse {
            line,
            msg: format!("signal length {n} does not match matrix N = {}", matrix.n()),
        });
    }
    let signal = SignalVector::new(scalar_block(&mut lines, n, "signal")?, rho);

    let (line, meas) = header(&mut lines, "measurements", "measurements M", 2)?;
    let m: usize = field(line, meas[1], "M")?;
    if m != matrix.m() {
        return Err(InstanceError::Parse {
            line,
            msg: format!("measurement count {m} does not match matrix M = {}", matrix.m()),
        });
    }
    let measurements = MeasurementVector::new(scalar_block(&mut lines, m, "measurement")?);
    lines.expect_end()?;

    Ok(Instance {
        matrix,
        signal,
        measurements,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{
        gen_dense_matrix, gen_regular_sparse_matrix, gen_signal, EnsembleSpec, RngSeed,
    };

    fn sparse_instance() -> Instance {
        let spec = EnsembleSpec::regular(40, 20, 4, 8).unwrap();
        let f = gen_regular_sparse_matrix(&spec, RngSeed::new(1, 0)).unwrap();
        let x = gen_signal(40, 0.2, RngSeed::new(1, 1)).unwrap();
        Instance::measured(f.into(), x).unwrap()
    }

    #[test]
    fn sparse_round_trip_is_bit_exact() {
        let inst = sparse_instance();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("inst.txt");
        save_instance(&path, &inst).unwrap();
        assert_eq!(load_instance(&path).unwrap(), inst);
    }

    #[test]
    fn dense_round_trip_is_bit_exact() {
        let spec = EnsembleSpec::dense(13, 6).unwrap();
        let f = gen_dense_matrix(&spec, RngSeed::new(2, 0)).unwrap();
        let x = gen_signal(13, 0.3, RngSeed::new(2, 1)).unwrap();
        let inst = Instance::measured(f.into(), x).unwrap();
        let mut buf = Vec::new();
        write_instance(&mut buf, &inst).unwrap();
        let back = parse_instance(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, inst);
        for (a, b) in back.signal.values().iter().zip(inst.signal.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn hand_written_sparse_file() {
        let text = "sparse 3 2 4\n0 0 1.5\n0 2 -2\n1 1 0.25\n1 2 3\nsignal 3 0.5\n1\n0\n2\nmeasurements 2\n5.5\n6\n";
        let inst = parse_instance(text).unwrap();
        let MeasurementMatrix::Sparse(f) = &inst.matrix else {
            panic!("expected sparse");
        };
        let mut got: Vec<(usize, usize, f64)> =
            f.edges().iter().map(|e| (e.row, e.col, e.value)).collect();
        got.sort_by_key(|a| (a.0, a.1));
        assert_eq!(
            got,
            vec![(0, 0, 1.5), (0, 2, -2.0), (1, 1, 0.25), (1, 2, 3.0)]
        );
        assert_eq!(inst.measurements.values(), &[5.5, 6.0]);
        assert_eq!(inst.signal.density(), 0.5);
    }

    #[test]
    fn truncated_file_names_the_line() {
        let text = "sparse 3 2 4\n0 0 1.5\n0 2 -2\n";
        match parse_instance(text) {
            Err(InstanceError::Parse { line, msg }) => {
                assert_eq!(line, 4);
                assert!(msg.contains("edge 3 of 4"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
        let mut full = Vec::new();
        write_instance(&mut full, &sparse_instance()).unwrap();
        let full = String::from_utf8(full).unwrap();
        let cut: String = full.lines().take(50).map(|l| format!("{l}\n")).collect();
        assert!(matches!(parse_instance(&cut), Err(InstanceError::Parse { line: 51, .. })));
    }

    #[test]
    fn malformed_values_are_reported() {
        let bad_value = "dense 2 1\n1 x\nsignal 2 0\n0\n0\nmeasurements 1\n0\n";
        assert!(matches!(parse_instance(bad_value), Err(InstanceError::Parse { line: 2, .. })));
        let bad_dims = "dense 2 1\n1 2\nsignal 3 0\n0\n0\n0\nmeasurements 1\n0\n";
        assert!(matches!(parse_instance(bad_dims), Err(InstanceError::Parse { line: 3, .. })));
        let dup = "sparse 2 1 2\n0 1 1\n0 1 2\nsignal 2 0\n0\n0\nmeasurements 1\n0\n";
        assert!(parse_instance(dup).is_err());
        let trailing = "dense 2 1\n1 2\nsignal 2 0\n0\n0\nmeasurements 1\n0\n7\n";
        assert!(matches!(parse_instance(trailing), Err(InstanceError::Parse { line: 8, .. })));
    }
}
