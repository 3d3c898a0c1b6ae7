//! Whitespace-tolerant PQR reader and writer.
//!
//! Only `ATOM`/`HETATM` records are consumed. Field positions vary between
//! PQR flavors (chain identifiers may or may not be present), so the charge
//! and radius are taken as the last two fields and the coordinates as the
//! three fields before them.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{ChargeSet, GeomError, Vec3};

fn io_err(path: &Path, source: std::io::Error) -> GeomError {
    GeomError::Io { path: path.display().to_string(), source }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> GeomError {
    GeomError::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Read the point charges of a PQR file. Non-ATOM records are skipped.
pub fn load_pqr(path: impl AsRef<Path>) -> Result<ChargeSet, GeomError> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path).map_err(|e| io_err(path, e))?);

    let mut set = ChargeSet::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.first() {
            Some(&"ATOM") | Some(&"HETATM") => {}
            _ => continue,
        }
        if fields.len() < 9 {
            return Err(parse_err(
                path,
                lineno,
                format!("ATOM record has {} fields, expected at least 9", fields.len()),
            ));
        }
        let tail: Result<Vec<f64>, _> = fields[fields.len() - 5..]
            .iter()
            .map(|f| f.parse::<f64>())
            .collect();
        let tail = tail.map_err(|_| {
            parse_err(path, lineno, "non-numeric coordinate/charge/radius field")
        })?;
        set.positions.push(Vec3::new(tail[0], tail[1], tail[2]));
        set.charges.push(tail[3]);
        set.radii.push(tail[4]);
    }
    Ok(set)
}

/// Write a charge set as a minimal PQR file (one ATOM record per charge).
pub fn write_pqr(charges: &ChargeSet, path: impl AsRef<Path>) -> Result<(), GeomError> {
    let path = path.as_ref();
    let mut out = String::new();
    for i in 0..charges.len() {
        let p = charges.positions[i];
        out.push_str(&format!(
            "ATOM {:6} Q   UNK {:5} {:12.6} {:12.6} {:12.6} {:10.6} {:8.4}\n",
            i + 1,
            i + 1,
            p.x,
            p.y,
            p.z,
            charges.charges[i],
            charges.radii[i]
        ));
    }
    File::create(path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(|e| io_err(path, e))
}
