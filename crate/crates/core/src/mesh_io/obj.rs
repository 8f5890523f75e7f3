//! Wavefront OBJ subset: `v`, `vn` and `f` records.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::Vector3;

use super::{normalize_or_default, Mesh};
use crate::error::{Error, Result};

/// Bookkeeping from a parse.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ObjStats {
    /// Records other than `v`/`vn`/`f` (and comments) that were skipped.
    pub ignored_records: usize,
    /// Faces with three identical indices that were dropped.
    pub degenerate_faces: usize,
}

pub fn load_obj(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let (mesh, stats) = parse_obj(BufReader::new(file), path)?;
    if stats.ignored_records > 0 {
        log_warning(path, stats.ignored_records);
    }
    Ok(mesh)
}

fn log_warning(path: &Path, ignored: usize) {
    eprintln!("warning: {}: ignored {ignored} unsupported records", path.display());
}

struct Corner {
    vertex: u32,
    normal: Option<usize>,
}

/// Parses OBJ text. `path` is only used in error messages.
pub fn parse_obj(reader: impl BufRead, path: &Path) -> Result<(Mesh, ObjStats)> {
    let mut positions = Vec::new();
    let mut file_normals = Vec::new();
    let mut triangles = Vec::new();
    let mut corner_normals: Vec<[Option<usize>; 3]> = Vec::new();
    let mut stats = ObjStats::default();

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let tag = fields.next().unwrap_or_default();
        match tag {
            "v" => positions.push(parse_vec3(fields, path, lineno, "v")?),
            "vn" => file_normals.push(parse_vec3(fields, path, lineno, "vn")?),
            "f" => {
                let corners = fields
                    .map(|tok| parse_corner(tok, positions.len(), file_normals.len(), path, lineno))
                    .collect::<Result<Vec<_>>>()?;
                if corners.len() < 3 {
                    return Err(Error::parse(
                        path,
                        lineno,
                        format!("face needs at least 3 vertices, found {}", corners.len()),
                    ));
                }
                // fan triangulation around the first corner
                for k in 1..corners.len() - 1 {
                    let tri = [&corners[0], &corners[k], &corners[k + 1]];
                    let ids = tri.map(|c| c.vertex);
                    if ids[0] == ids[1] && ids[1] == ids[2] {
                        stats.degenerate_faces += 1;
                        continue;
                    }
                    triangles.push(ids);
                    corner_normals.push(tri.map(|c| c.normal));
                }
            }
            _ => stats.ignored_records += 1,
        }
    }

    if positions.is_empty() {
        return Err(Error::Format(format!("{}: no vertices", path.display())));
    }
    if triangles.is_empty() {
        return Err(Error::Format(format!("{}: no faces", path.display())));
    }

    let mut mesh = Mesh::new(positions, triangles);
    mesh.normals = gather_normals(&mesh, &corner_normals, &file_normals);
    Ok((mesh, stats))
}

/// Per-vertex normals from `f v//vn` pairings, or empty unless every vertex
/// received one. The first pairing seen for a vertex wins.
fn gather_normals(
    mesh: &Mesh,
    corner_normals: &[[Option<usize>; 3]],
    file_normals: &[Vector3<f64>],
) -> Vec<Vector3<f64>> {
    if file_normals.is_empty() {
        return Vec::new();
    }
    let mut normals: Vec<Option<Vector3<f64>>> = vec![None; mesh.vertices.len()];
    for (tri, cn) in mesh.triangles.iter().zip(corner_normals) {
        for (&v, n) in tri.iter().zip(cn) {
            match n {
                Some(n) => {
                    let slot = &mut normals[v as usize];
                    if slot.is_none() {
                        *slot = Some(normalize_or_default(file_normals[*n]));
                    }
                }
                None => return Vec::new(),
            }
        }
    }
    normals.into_iter().collect::<Option<Vec<_>>>().unwrap_or_default()
}

fn parse_vec3<'a>(
    mut fields: impl Iterator<Item = &'a str>,
    path: &Path,
    lineno: usize,
    tag: &str,
) -> Result<Vector3<f64>> {
    let mut out = [0.0; 3];
    for c in &mut out {
        let tok = fields
            .next()
            .ok_or_else(|| Error::parse(path, lineno, format!("`{tag}` needs 3 coordinates")))?;
        *c = tok
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Error::parse(path, lineno, format!("bad number `{tok}`")))?;
    }
    Ok(Vector3::from(out))
}

/// Resolves a 1-based (or negative, relative) OBJ index.
fn resolve_index(tok: &str, count: usize, path: &Path, lineno: usize) -> Result<usize> {
    let raw: i64 = tok
        .parse()
        .map_err(|_| Error::parse(path, lineno, format!("bad index `{tok}`")))?;
    let idx = match raw {
        r if r > 0 => r - 1,
        r if r < 0 => count as i64 + r,
        _ => -1,
    };
    if idx < 0 || idx as usize >= count {
        return Err(Error::parse(
            path,
            lineno,
            format!("index {raw} out of range (have {count})"),
        ));
    }
    Ok(idx as usize)
}

fn parse_corner(tok: &str, n_pos: usize, n_norm: usize, path: &Path, lineno: usize) -> Result<Corner> {
    let mut parts = tok.split('/');
    let vertex = resolve_index(parts.next().unwrap_or_default(), n_pos, path, lineno)? as u32;
    let _texcoord = parts.next();
    let normal = match parts.next() {
        Some(s) if !s.is_empty() => Some(resolve_index(s, n_norm, path, lineno)?),
        _ => None,
    };
    Ok(Corner { vertex, normal })
}

/// Writes `v`, optional `vn`, and `f` records (with `//` normal indices when normals exist).
pub fn save_obj(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_obj(mesh, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_obj(mesh: &Mesh, w: &mut impl Write) -> std::io::Result<()> {
    for v in &mesh.vertices {
        writeln!(w, "v {} {} {}", v.x, v.y, v.z)?;
    }
    let with_normals = mesh.has_normals();
    if with_normals {
        for n in &mesh.normals {
            writeln!(w, "vn {} {} {}", n.x, n.y, n.z)?;
        }
    }
    for t in &mesh.triangles {
        let [a, b, c] = t.map(|i| i + 1);
        if with_normals {
            writeln!(w, "f {a}//{a} {b}//{b} {c}//{c}")?;
        } else {
            writeln!(w, "f {a} {b} {c}")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<(Mesh, ObjStats)> {
        parse_obj(text.as_bytes(), Path::new("test.obj"))
    }

    #[test]
    fn single_triangle() {
        let (m, _) = parse("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n").unwrap();
        assert_eq!(m.vertices.len(), 3);
        assert_eq!(m.triangles, vec![[0, 1, 2]]);
        assert!(m.normals.is_empty());
        assert_eq!(m.albedo, vec![[1.0; 3]; 3]);
    }

    #[test]
    fn normals_from_file() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 2\nvn 0 0 1\nvn 0 1 0\nf 1//1 2//2 3//3\n";
        let (m, _) = parse(text).unwrap();
        assert_eq!(m.normals[0], Vector3::new(0.0, 0.0, 1.0));
        assert_eq!(m.normals[2], Vector3::new(0.0, 1.0, 0.0));
    }

    #[test]
    fn partial_normal_pairing_is_dropped() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nvn 0 0 1\nf 1//1 2//1 3//1\nf 2 4 3\n";
        let (m, _) = parse(text).unwrap();
        assert!(m.normals.is_empty());
    }

    #[test]
    fn two_gon_names_line() {
        let err = parse("v 0 0 0\nv 1 0 0\n# c\nf 1 2\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn polygon_is_fan_triangulated() {
        let (m, _) = parse("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nv -1 1 0\nf 1/1 2/2 3/3 4/4 5/5\n").unwrap();
        assert_eq!(m.triangles, vec![[0, 1, 2], [0, 2, 3], [0, 3, 4]]);
    }

    #[test]
    fn negative_indices_and_ignored_records() {
        let (m, s) = parse("o thing\nv 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nusemtl x\nf -3 -2 -1\n").unwrap();
        assert_eq!(m.triangles, vec![[0, 1, 2]]);
        assert_eq!(s.ignored_records, 3);
    }

    #[test]
    fn empty_inputs_rejected() {
        assert!(matches!(parse("# nothing\n"), Err(Error::Format(_))));
        assert!(matches!(parse("v 0 0 0\n"), Err(Error::Format(_))));
    }

    #[test]
    fn out_of_range_and_garbage() {
        assert!(matches!(parse("v 0 0 0\nf 1 2 3\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse("v 0 x 0\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn degenerate_face_dropped() {
        let (m, s) = parse("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 1 1\nf 1 2 3\n").unwrap();
        assert_eq!(m.triangles.len(), 1);
        assert_eq!(s.degenerate_faces, 1);
    }

    #[test]
    fn save_then_load_preserves_mesh() {
        let mesh = super::super::shapes::torus(1.0, 0.25, 8, 6).with_normals();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.obj");
        save_obj(&mesh, &p).unwrap();
        let back = load_obj(&p).unwrap();
        assert_eq!(back.vertices, mesh.vertices);
        assert_eq!(back.triangles, mesh.triangles);
        for (a, b) in back.normals.iter().zip(&mesh.normals) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
