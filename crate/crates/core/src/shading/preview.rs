use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh_io::Mesh;

use super::VertexColors;

/// Flat-shaded orthographic render looking down `-z`, fitted to the mesh
/// bounds. Triangles take the mean of their vertex colors, clamped to [0,1].
pub fn render_preview(mesh: &Mesh, colors: &VertexColors, width: usize, height: usize) -> Result<Vec<u8>> {
    if colors.len() != mesh.vertex_count() {
        return Err(Error::Contract(format!(
            "{} colors for {} vertices",
            colors.len(),
            mesh.vertex_count()
        )));
    }
    if width == 0 || height == 0 {
        return Err(Error::Contract("preview needs a non-empty image".into()));
    }
    let mut rgb = vec![0u8; width * height * 3];
    let Some((lo, hi)) = mesh.bounds() else {
        return Ok(rgb);
    };
    let span = (hi.x - lo.x).max(hi.y - lo.y).max(1e-12) * 1.05;
    let (cx, cy) = ((lo.x + hi.x) / 2.0, (lo.y + hi.y) / 2.0);
    let px = |x: f64| ((x - cx) / span + 0.5) * width as f64;
    let py = |y: f64| (0.5 - (y - cy) / span) * height as f64;
    let mut depth = vec![f64::NEG_INFINITY; width * height];

    for tri in &mesh.triangles {
        let v = tri.map(|i| mesh.vertices[i as usize]);
        let s = v.map(|p| (px(p.x), py(p.y), p.z));
        let area = (s[1].0 - s[0].0) * (s[2].1 - s[0].1) - (s[2].0 - s[0].0) * (s[1].1 - s[0].1);
        if area == 0.0 {
            continue;
        }
        let mut color = [0.0; 3];
        for &i in tri {
            for (c, v) in color.iter_mut().zip(colors.rows[i as usize]) {
                *c += v / 3.0;
            }
        }
        let color = color.map(|c| (c.clamp(0.0, 1.0) * 255.0).round() as u8);
        let xmin = s.iter().map(|p| p.0).fold(f64::INFINITY, f64::min).floor().max(0.0) as usize;
        let xmax = (s.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max).ceil() as usize).min(width);
        let ymin = s.iter().map(|p| p.1).fold(f64::INFINITY, f64::min).floor().max(0.0) as usize;
        let ymax = (s.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max).ceil() as usize).min(height);
        for y in ymin..ymax {
            for x in xmin..xmax {
                let (qx, qy) = (x as f64 + 0.5, y as f64 + 0.5);
                let edge = |a: (f64, f64, f64), b: (f64, f64, f64)| (b.0 - a.0) * (qy - a.1) - (qx - a.0) * (b.1 - a.1);
                let w = [edge(s[1], s[2]), edge(s[2], s[0]), edge(s[0], s[1])].map(|e| e / area);
                if w.iter().any(|&e| e < 0.0) {
                    continue;
                }
                let z = w[0] * s[0].2 + w[1] * s[1].2 + w[2] * s[2].2;
                let at = y * width + x;
                if z > depth[at] {
                    depth[at] = z;
                    rgb[3 * at..3 * at + 3].copy_from_slice(&color);
                }
            }
        }
    }
    Ok(rgb)
}

/// Binary PPM (P6).
pub fn write_ppm(path: impl AsRef<Path>, width: usize, height: usize, rgb: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let mut data = format!("P6\n{width} {height}\n255\n").into_bytes();
    data.extend_from_slice(rgb);
    fs::write(path, data).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_covers_its_half() {
        let tri = Mesh::new(
            vec![
                nalgebra::Vector3::new(-1.0, -1.0, 0.0),
                nalgebra::Vector3::new(1.0, -1.0, 0.0),
                nalgebra::Vector3::new(-1.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        );
        let colors = VertexColors {
            rows: vec![[1.0, 0.5, 2.0]; 3],
        };
        let img = render_preview(&tri, &colors, 20, 20).unwrap();
        let at = |x: usize, y: usize| &img[3 * (y * 20 + x)..3 * (y * 20 + x) + 3];
        assert_eq!(at(5, 15), &[255, 128, 255]);
        assert_eq!(at(18, 1), &[0, 0, 0]);
    }
}
