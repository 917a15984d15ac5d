//! Complex tables in CSV: every complex column is stored as two adjacent
//! real columns `<name>.re` and `<name>.im`.

use std::io::{Read, Write};
use std::path::Path;

use ctrex_core::{Complex64, ComplexMatrix};

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: malformed CSV: {message}")]
    Csv { path: String, message: String },
    #[error("{path}: column {column} ('{name}') has no matching partner; expected '<name>.re' followed by '<name>.im'")]
    UnpairedColumn {
        path: String,
        column: usize,
        name: String,
    },
    #[error("{path}: row {row}, column '{name}': '{cell}' is not a finite number")]
    NonNumericCell {
        path: String,
        row: usize,
        name: String,
        cell: String,
    },
    #[error("{path}: row {row} has {found} cells, header has {expected}")]
    RaggedRows {
        path: String,
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("{path}: table has no data rows")]
    Empty { path: String },
}

/// Column names (base names, without `.re`/`.im`) and the data.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTable {
    pub names: Vec<String>,
    pub data: ComplexMatrix,
}

pub fn parse_complex_csv(path: impl AsRef<Path>) -> Result<ComplexTable, TableError> {
    let path = path.as_ref();
    let label = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|source| TableError::Io {
        path: label.clone(),
        source,
    })?;
    read_complex_csv(file, &label)
}

/// Parses a complex table; `label` names the source in diagnostics.
pub fn read_complex_csv<R: Read>(reader: R, label: &str) -> Result<ComplexTable, TableError> {
    let csv_err = |e: csv::Error| TableError::Csv {
        path: label.to_string(),
        message: e.to_string(),
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(str::to_string).collect();

    let mut names = Vec::with_capacity(header.len() / 2);
    for (pair, chunk) in header.chunks(2).enumerate() {
        let re_col = 2 * pair;
        let base = chunk[0].strip_suffix(".re").ok_or_else(|| TableError::UnpairedColumn {
            path: label.to_string(),
            column: re_col,
            name: chunk[0].clone(),
        })?;
        let im_ok = chunk
            .get(1)
            .and_then(|im| im.strip_suffix(".im"))
            .is_some_and(|b| b == base);
        if !im_ok {
            let (column, name) = match chunk.get(1) {
                Some(im) => (re_col + 1, im.clone()),
                None => (re_col, chunk[0].clone()),
            };
            return Err(TableError::UnpairedColumn {
                path: label.to_string(),
                column,
                name,
            });
        }
        names.push(base.to_string());
    }

    let p = names.len();
    let mut columns: Vec<Vec<Complex64>> = vec![Vec::new(); p];
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_err)?;
        // header is line 1
        let row = i + 2;
        if record.len() != header.len() {
            return Err(TableError::RaggedRows {
                path: label.to_string(),
                row,
                found: record.len(),
                expected: header.len(),
            });
        }
        let cell = |c: usize| -> Result<f64, TableError> {
            let text = &record[c];
            match text.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(TableError::NonNumericCell {
                    path: label.to_string(),
                    row,
                    name: header[c].clone(),
                    cell: text.to_string(),
                }),
            }
        };
        for (j, col) in columns.iter_mut().enumerate() {
            col.push(Complex64::new(cell(2 * j)?, cell(2 * j + 1)?));
        }
    }
    if columns.first().is_none_or(|c| c.is_empty()) {
        return Err(TableError::Empty {
            path: label.to_string(),
        });
    }
    let data = ComplexMatrix::from_columns(&columns).expect("columns have equal length");
    Ok(ComplexTable { names, data })
}

/// Writes a complex table; values use shortest round-trip formatting so a
/// re-read is bit-exact.
pub fn write_complex_csv<W: Write>(
    writer: W,
    names: &[String],
    data: &ComplexMatrix,
) -> csv::Result<()> {
    assert_eq!(names.len(), data.ncols(), "one name per column");
    let mut w = csv::Writer::from_writer(writer);
    let header: Vec<String> = names
        .iter()
        .flat_map(|n| [format!("{n}.re"), format!("{n}.im")])
        .collect();
    w.write_record(&header)?;
    for i in 0..data.nrows() {
        let row: Vec<String> = (0..data.ncols())
            .flat_map(|j| {
                let z = data.get(i, j);
                [z.re.to_string(), z.im.to_string()]
            })
            .collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_complex_csv(
    path: impl AsRef<Path>,
    names: &[String],
    data: &ComplexMatrix,
) -> Result<(), TableError> {
    let path = path.as_ref();
    let label = path.display().to_string();
    let file = std::fs::File::create(path).map_err(|source| TableError::Io {
        path: label.clone(),
        source,
    })?;
    write_complex_csv(std::io::BufWriter::new(file), names, data).map_err(|e| TableError::Csv {
        path: label,
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ComplexTable, TableError> {
        read_complex_csv(text.as_bytes(), "mem.csv")
    }

    #[test]
    fn direct_encoding() {
        let t = parse("x1.re,x1.im\n1,0\n0,1\n").unwrap();
        assert_eq!(t.names, vec!["x1"]);
        assert_eq!(t.data.nrows(), 2);
        assert_eq!(t.data.get(0, 0), Complex64::new(1.0, 0.0));
        assert_eq!(t.data.get(1, 0), Complex64::new(0.0, 1.0));
    }

    #[test]
    fn mismatched_base_names() {
        let err = parse("x1.re,x2.im\n1,0\n").unwrap_err();
        match &err {
            TableError::UnpairedColumn { column, name, .. } => {
                assert_eq!((*column, name.as_str()), (1, "x2.im"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains("x2.im"));
        assert!(matches!(
            parse("x1.re,x1.im,x2.re\n1,0,1\n"),
            Err(TableError::UnpairedColumn { column: 2, .. })
        ));
        assert!(matches!(
            parse("a,b\n1,0\n"),
            Err(TableError::UnpairedColumn { column: 0, .. })
        ));
    }

    #[test]
    fn bad_cells_and_rows() {
        let err = parse("x.re,x.im\n1,zz\n").unwrap_err();
        assert!(matches!(&err, TableError::NonNumericCell { row: 2, name, .. } if name == "x.im"));
        assert!(matches!(
            parse("x.re,x.im\n1,2\n3\n"),
            Err(TableError::RaggedRows { row: 3, found: 1, expected: 2, .. })
        ));
        assert!(matches!(
            parse("x.re,x.im\nNaN,2\n"),
            Err(TableError::NonNumericCell { .. })
        ));
        assert!(matches!(parse("x.re,x.im\n"), Err(TableError::Empty { .. })));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn write_then_parse_is_bit_exact(
                vals in proptest::collection::vec((-1e300f64..1e300, -1e-300f64..1e-300), 1..40),
                cols in 1usize..5,
            ) {
                let rows = vals.len();
                let data = ComplexMatrix::from_fn(rows, cols, |i, j| {
                    let (a, b) = vals[(i + j) % rows];
                    Complex64::new(a / (j as f64 + 1.0), b * 3.0 + a * 1e-17)
                });
                let names: Vec<String> = (0..cols).map(|j| format!("v{j}")).collect();
                let mut buf = Vec::new();
                write_complex_csv(&mut buf, &names, &data).unwrap();
                let back = read_complex_csv(buf.as_slice(), "buf").unwrap();
                prop_assert_eq!(back.names, names);
                for (a, b) in back.data.as_slice().iter().zip(data.as_slice()) {
                    prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
                    prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
                }
            }
        }
    }
}
