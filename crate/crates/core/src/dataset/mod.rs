//! Training corpora: oracle coefficient files for a directory of meshes,
//! a manifest tying them together, and motor/target pairs.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cga::{blade_order_hash, encode_vertex_normal, Multivector32};
use crate::error::{Error, Result};
use crate::mesh_io::{load_obj, normalize_or_default, Mesh};
use crate::prt_oracle::{
    compute_transfer, read_transfer_file, write_transfer_file, PrtConfig, TransferMeta, TransferSource, ROW,
};

pub const FORMAT: &str = "ngash-dataset-1";
pub const MANIFEST: &str = "manifest.txt";

/// A motor and its 27 transfer coefficients.
pub type Pair = (Multivector32, [f64; ROW]);

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetEntry {
    pub mesh: PathBuf,
    pub coeffs: PathBuf,
    pub vertices: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub prt: PrtConfig,
    pub albedo: [f64; 3],
    pub split_seed: u64,
    pub split_fraction: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            prt: PrtConfig::default(),
            albedo: [1.0; 3],
            split_seed: 0,
            split_fraction: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub entries: Vec<DatasetEntry>,
    pub config: DatasetConfig,
    pub blade_order_hash: String,
}

impl DatasetManifest {
    pub fn to_text(&self) -> String {
        let c = &self.config;
        let mut s = format!(
            "format={FORMAT}\nsqrt_n={}\nmode={}\nshadowed={}\nseed={}\nalbedo={},{},{}\nblade_order_hash={}\n\
             split_seed={}\nsplit_fraction={}\n",
            c.prt.sqrt_n,
            c.prt.mode,
            c.prt.shadowed,
            c.prt.seed,
            c.albedo[0],
            c.albedo[1],
            c.albedo[2],
            self.blade_order_hash,
            c.split_seed,
            c.split_fraction
        );
        for e in &self.entries {
            s.push_str(&format!(
                "mesh={}|{}|{}\n",
                e.mesh.display(),
                e.coeffs.display(),
                e.vertices
            ));
        }
        s
    }

    /// Sampling metadata shared by every coefficient file listed.
    pub fn transfer_meta(&self) -> TransferMeta {
        let c = &self.config;
        TransferMeta {
            bands: 3,
            mode: c.prt.mode,
            sqrt_n: c.prt.sqrt_n,
            seed: c.prt.seed,
            shadowed: c.prt.shadowed,
            source: TransferSource::Oracle,
            albedo: match c.albedo {
                [1.0, 1.0, 1.0] => "white".into(),
                [r, g, b] => format!("{r},{g},{b}"),
            },
        }
    }

    /// Parses a manifest; relative paths are resolved against `base`.
    pub fn from_text(text: &str, path: &Path, base: &Path) -> Result<Self> {
        let mut m = DatasetManifest {
            entries: Vec::new(),
            config: DatasetConfig::default(),
            blade_order_hash: String::new(),
        };
        let mut format = None;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: &str| Error::parse(path, i + 1, msg.to_string());
            let (k, v) = line.split_once('=').ok_or_else(|| err("expected key=value"))?;
            let num = |v: &str| v.parse::<f64>().map_err(|_| err("bad number"));
            let int = |v: &str| v.parse::<u64>().map_err(|_| err("bad integer"));
            match k {
                "format" => format = Some(v.to_string()),
                "sqrt_n" => m.config.prt.sqrt_n = int(v)? as usize,
                "mode" => m.config.prt.mode = v.parse()?,
                "shadowed" => m.config.prt.shadowed = v.parse().map_err(|_| err("bad flag"))?,
                "seed" => m.config.prt.seed = int(v)?,
                "albedo" => {
                    let a: Vec<f64> = v.split(',').map(num).collect::<Result<_>>()?;
                    m.config.albedo = a.try_into().map_err(|_| err("albedo needs 3 values"))?;
                }
                "blade_order_hash" => m.blade_order_hash = v.to_string(),
                "split_seed" => m.config.split_seed = int(v)?,
                "split_fraction" => m.config.split_fraction = num(v)?,
                "mesh" => {
                    let parts: Vec<&str> = v.split('|').collect();
                    let [mesh, coeffs, count] = parts[..] else {
                        return Err(err("mesh entries are `mesh|coeffs|count`"));
                    };
                    m.entries.push(DatasetEntry {
                        mesh: base.join(mesh),
                        coeffs: base.join(coeffs),
                        vertices: int(count)? as usize,
                    });
                }
                _ => {}
            }
        }
        if format.as_deref() != Some(FORMAT) {
            return Err(Error::Format(format!("{}: not a dataset manifest", path.display())));
        }
        Ok(m)
    }
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    DatasetManifest::from_text(&text, path, base)
}

/// Outcome of [`generate`]: the manifest plus meshes that were skipped.
#[derive(Debug)]
pub struct GenerateReport {
    pub manifest: DatasetManifest,
    pub manifest_path: PathBuf,
    pub failures: Vec<(PathBuf, Error)>,
}

/// Runs the oracle for every `.obj` in `mesh_dir` (name order), writing one
/// coefficient file per mesh into `out_dir` and the manifest last.
pub fn generate(mesh_dir: &Path, out_dir: &Path, config: &DatasetConfig) -> Result<GenerateReport> {
    let listing = fs::read_dir(mesh_dir).map_err(|e| Error::io(mesh_dir, e))?;
    let mut meshes: Vec<PathBuf> = listing
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("obj")))
        .collect();
    meshes.sort();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut entries = Vec::new();
    let mut failures = Vec::new();
    for path in meshes {
        match generate_one(&path, out_dir, config) {
            Ok(entry) => entries.push(entry),
            Err(e) => failures.push((path, e)),
        }
    }
    if entries.is_empty() {
        let detail = failures
            .iter()
            .map(|(p, e)| format!("{}: {e}", p.display()))
            .collect::<Vec<_>>();
        return Err(Error::Validation(if detail.is_empty() {
            vec![format!("{}: no .obj meshes found", mesh_dir.display())]
        } else {
            detail
        }));
    }
    let manifest = DatasetManifest {
        entries,
        config: config.clone(),
        blade_order_hash: blade_order_hash(),
    };
    let manifest_path = out_dir.join(MANIFEST);
    fs::write(&manifest_path, manifest.to_text()).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(GenerateReport {
        manifest,
        manifest_path,
        failures,
    })
}

fn generate_one(path: &Path, out_dir: &Path, config: &DatasetConfig) -> Result<DatasetEntry> {
    let mut mesh = load_obj(path)?.with_normals();
    mesh.set_albedo(config.albedo);
    let transfer = compute_transfer(&mesh, &config.prt)?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("mesh");
    let name = format!("{stem}.coeffs.txt");
    write_transfer_file(out_dir.join(&name), &transfer)?;
    let mesh_ref = fs::canonicalize(path).map_err(|e| Error::io(path, e))?;
    Ok(DatasetEntry {
        mesh: mesh_ref,
        coeffs: PathBuf::from(name),
        vertices: mesh.vertex_count(),
    })
}

/// Motor inputs for a mesh, one per vertex in vertex order.
pub fn mesh_motors(mesh: &Mesh) -> Vec<Multivector32> {
    mesh.vertices
        .iter()
        .enumerate()
        .map(|(i, v)| {
            encode_vertex_normal(
                *v,
                normalize_or_default(mesh.normals.get(i).copied().unwrap_or_default()),
            )
        })
        .collect()
}

/// Pairs every vertex motor with its coefficient row, mesh by mesh.
pub fn load_pairs(manifest: &DatasetManifest) -> Result<Vec<Pair>> {
    if manifest.blade_order_hash != blade_order_hash() {
        return Err(Error::Incompatible(format!(
            "dataset built with blade order {}, this build uses {}",
            manifest.blade_order_hash,
            blade_order_hash()
        )));
    }
    let mut pairs = Vec::new();
    for e in &manifest.entries {
        let mesh = load_obj(&e.mesh)?.with_normals();
        let t = read_transfer_file(&e.coeffs)?;
        if t.len() != mesh.vertex_count() || e.vertices != mesh.vertex_count() {
            return Err(Error::Integrity(format!(
                "{}: {} coefficient rows, mesh {} has {} vertices (manifest says {})",
                e.coeffs.display(),
                t.len(),
                e.mesh.display(),
                mesh.vertex_count(),
                e.vertices
            )));
        }
        pairs.extend(mesh_motors(&mesh).into_iter().zip(t.rows));
    }
    Ok(pairs)
}

/// Seeded shuffle, then the first `round(fraction·n)` items train and the rest validate.
pub fn split<T: Clone>(items: &[T], fraction: f64, seed: u64) -> (Vec<T>, Vec<T>) {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = ((fraction * items.len() as f64).round() as usize).min(items.len());
    let pick = |ix: &[usize]| ix.iter().map(|&i| items[i].clone()).collect();
    (pick(&order[..cut]), pick(&order[cut..]))
}
