//! MSMS surface mesh reader and writer.
//!
//! `.vert` layout: three header lines, then one vertex per line with at
//! least `x y z` (columns 4-6 read as the vertex normal when present).
//! `.face` layout: three header lines, then one face per line with three
//! 1-based vertex indices; extra columns are ignored.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{GeomError, SurfaceMesh, Vec3};

const HEADER_LINES: usize = 3;

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

fn parse_f64(path: &Path, line: usize, field: &str, what: &str) -> Result<f64, GeomError> {
    field
        .parse::<f64>()
        .map_err(|_| parse_err(path, line, format!("non-numeric {what} field {field:?}")))
}

/// Read an MSMS `.vert`/`.face` pair into a mesh with 0-based indices.
pub fn load_msms(
    vert_path: impl AsRef<Path>,
    face_path: impl AsRef<Path>,
) -> Result<SurfaceMesh, GeomError> {
    let vert_path = vert_path.as_ref();
    let face_path = face_path.as_ref();

    let mut vertices = Vec::new();
    let mut normals = Vec::new();
    let mut have_normals = true;

    let reader = BufReader::new(File::open(vert_path).map_err(|e| io_err(vert_path, e))?);
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(vert_path, e))?;
        let lineno = idx + 1;
        if idx < HEADER_LINES {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() < 3 {
            return Err(parse_err(
                vert_path,
                lineno,
                format!("vertex row has {} fields, expected at least 3", fields.len()),
            ));
        }
        let x = parse_f64(vert_path, lineno, fields[0], "coordinate")?;
        let y = parse_f64(vert_path, lineno, fields[1], "coordinate")?;
        let z = parse_f64(vert_path, lineno, fields[2], "coordinate")?;
        vertices.push(Vec3::new(x, y, z));
        if fields.len() >= 6 {
            let nx = parse_f64(vert_path, lineno, fields[3], "normal")?;
            let ny = parse_f64(vert_path, lineno, fields[4], "normal")?;
            let nz = parse_f64(vert_path, lineno, fields[5], "normal")?;
            normals.push(Vec3::new(nx, ny, nz));
        } else {
            have_normals = false;
        }
    }

    let mut triangles = Vec::new();
    let reader = BufReader::new(File::open(face_path).map_err(|e| io_err(face_path, e))?);
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(face_path, e))?;
        let lineno = idx + 1;
        if idx < HEADER_LINES {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() < 3 {
            return Err(parse_err(
                face_path,
                lineno,
                format!("face row has {} fields, expected at least 3", fields.len()),
            ));
        }
        let mut tri = [0usize; 3];
        for (k, f) in fields[..3].iter().enumerate() {
            let one_based: i64 = f
                .parse()
                .map_err(|_| parse_err(face_path, lineno, format!("non-numeric index {f:?}")))?;
            if one_based < 1 || one_based as usize > vertices.len() {
                return Err(parse_err(
                    face_path,
                    lineno,
                    format!(
                        "vertex index {one_based} out of range 1..={}",
                        vertices.len()
                    ),
                ));
            }
            tri[k] = (one_based - 1) as usize;
        }
        triangles.push(tri);
    }

    Ok(SurfaceMesh {
        vertices,
        triangles,
        vertex_normals: if have_normals && !normals.is_empty() {
            Some(normals)
        } else {
            None
        },
    })
}

/// Write a mesh as an MSMS-compatible `.vert`/`.face` pair (1-based indices,
/// three header lines per file). Vertex normals are written when present,
/// zero normals otherwise so the column layout stays fixed.
pub fn write_msms(
    mesh: &SurfaceMesh,
    vert_path: impl AsRef<Path>,
    face_path: impl AsRef<Path>,
) -> Result<(), GeomError> {
    let vert_path = vert_path.as_ref();
    let face_path = face_path.as_ref();

    let mut out = String::new();
    out.push_str("# vertex file\n#\n");
    out.push_str(&format!("{} 0 0.00 0.00\n", mesh.n_vertices()));
    for (i, v) in mesh.vertices.iter().enumerate() {
        let n = mesh
            .vertex_normals
            .as_ref()
            .map(|ns| ns[i])
            .unwrap_or(Vec3::ZERO);
        out.push_str(&format!(
            "{:.6} {:.6} {:.6} {:.6} {:.6} {:.6}\n",
            v.x, v.y, v.z, n.x, n.y, n.z
        ));
    }
    File::create(vert_path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(|e| io_err(vert_path, e))?;

    let mut out = String::new();
    out.push_str("# face file\n#\n");
    out.push_str(&format!("{} 0 0.00 0.00\n", mesh.n_triangles()));
    for t in &mesh.triangles {
        out.push_str(&format!("{} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1));
    }
    File::create(face_path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(|e| io_err(face_path, e))?;
    Ok(())
}
