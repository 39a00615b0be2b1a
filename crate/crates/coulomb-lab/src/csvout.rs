//! Deterministic CSV emission.
//!
//! Every file opens with a `# key=value` metadata block echoing the full
//! configuration in sorted order, then a header row. Floats are printed with
//! the shortest round-trip representation, so identical runs produce
//! byte-identical files.

use crate::energy::EnergyReport;
use crate::error::Result;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

pub struct CsvWriter {
    out: std::io::BufWriter<std::fs::File>,
}

impl CsvWriter {
    pub fn create(path: &Path, metadata: &BTreeMap<String, String>, header: &[&str]) -> Result<Self> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        for (k, v) in metadata {
            writeln!(out, "# {k}={v}")?;
        }
        writeln!(out, "{}", header.join(","))?;
        Ok(Self { out })
    }

    pub fn row(&mut self, values: &[f64]) -> Result<()> {
        let mut first = true;
        for v in values {
            if !first {
                write!(self.out, ",")?;
            }
            write!(self.out, "{v}")?;
            first = false;
        }
        writeln!(self.out)?;
        Ok(())
    }

    pub fn row_strings(&mut self, values: &[String]) -> Result<()> {
        writeln!(self.out, "{}", values.join(","))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// The evolve subcommand's ledger schema.
pub const EVOLVE_HEADER: [&str; 9] = [
    "t",
    "E",
    "E_minus",
    "E_plus",
    "Eprime_integral",
    "center_u0",
    "morawetz_accum",
    "shell_frac_inner",
    "shell_frac_outer",
];

pub fn write_ledger_rows(
    path: &Path,
    metadata: &BTreeMap<String, String>,
    rows: &[EnergyReport],
) -> Result<()> {
    let mut w = CsvWriter::create(path, metadata, &EVOLVE_HEADER)?;
    for r in rows {
        w.row(&[
            r.t,
            r.e_total,
            r.e_minus,
            r.e_plus,
            r.eprime_integral,
            r.center_u0,
            r.morawetz_accum,
            r.shell_frac_inner,
            r.shell_frac_outer,
        ])?;
    }
    w.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metadata_block_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        let mut meta = BTreeMap::new();
        meta.insert("grid.d".to_string(), "3".to_string());
        meta.insert("a.z".to_string(), "1".to_string());
        let mut w = CsvWriter::create(&path, &meta, &["t", "E"]).unwrap();
        w.row(&[0.5, 1.25]).unwrap();
        w.finish().unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        // Sorted metadata, then header, then the row.
        assert_eq!(text, "# a.z=1\n# grid.d=3\nt,E\n0.5,1.25\n");
    }

    #[test]
    fn repeated_writes_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let meta = BTreeMap::new();
        let rows = vec![crate::energy::EnergyReport {
            t: 1.0 / 3.0,
            e_total: 117.35049678,
            e_minus: 58.1,
            e_plus: 59.2,
            eprime_integral: 0.1,
            center_u0: -0.25,
            center_integral_accum: 0.0,
            morawetz_accum: 1e-17,
            shell_frac_inner: 0.5,
            shell_frac_outer: 0.25,
        }];
        let p1 = dir.path().join("a.csv");
        let p2 = dir.path().join("b.csv");
        write_ledger_rows(&p1, &meta, &rows).unwrap();
        write_ledger_rows(&p2, &meta, &rows).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }
}
