use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};

use ngash::bench::{residual_stats, run_bench};
use ngash::bundle::{write_bundle, ViewerBundle};
use ngash::cga::Quaternion;
use ngash::dataset::{self, DatasetConfig};
use ngash::lightprobe::{self, load_hdr};
use ngash::mesh_io::{load_obj, save_obj, shapes, Mesh};
use ngash::neural::{
    load_weights, pairs_to_arrays, predict_mesh, save_weights, train_with_progress, Arch, TrainConfig,
};
use ngash::parallel::with_pool;
use ngash::prt_oracle::{compute_transfer, read_transfer_file, write_transfer_file, PrtConfig};
use ngash::sh::{generate_samples, read_light_file, rotate_sh, write_light_file, LightCoefficients, SampleMode};
use ngash::shading::{render_preview, shade_with, write_colors, write_ppm};

use super::{
    BenchArgs, DatasetArgs, ExportBundleArgs, MakeMeshArgs, OracleArgs, PartialFailure, PrecomputeArgs, PredictArgs,
    ProjectLightArgs, RotateLightArgs, ShadeArgs, Shape, TrainArgs, UsageError,
};

fn prt_config(a: &OracleArgs) -> PrtConfig {
    PrtConfig {
        sqrt_n: a.sqrt_n,
        seed: a.seed,
        mode: a.mode.into(),
        shadowed: a.shadowed,
    }
}

fn load_mesh(path: &Path, albedo: Option<[f64; 3]>) -> Result<Mesh> {
    let mut mesh = load_obj(path).with_context(|| format!("loading mesh {}", path.display()))?;
    if let Some(rgb) = albedo {
        mesh.set_albedo(rgb);
    }
    Ok(mesh.with_normals())
}

fn flush() {
    let _ = std::io::stdout().flush();
}

pub fn precompute(a: PrecomputeArgs) -> Result<()> {
    let start = Instant::now();
    let mesh = load_mesh(&a.mesh, a.oracle.albedo)?;
    let config = prt_config(&a.oracle);
    let core = Instant::now();
    let transfer = with_pool(|| compute_transfer(&mesh, &config))??;
    let core = core.elapsed().as_secs_f64();
    write_transfer_file(&a.out, &transfer)?;
    println!(
        "vertices={} triangles={} samples={} mode={} shadowed={}",
        mesh.vertex_count(),
        mesh.triangles.len(),
        config.sqrt_n * config.sqrt_n,
        config.mode,
        config.shadowed
    );
    println!("core_seconds={core:.6}");
    println!("inclusive_seconds={:.6}", start.elapsed().as_secs_f64());
    Ok(())
}

pub fn project_light(a: ProjectLightArgs) -> Result<()> {
    if a.sqrt_n == 0 {
        bail!(UsageError("--samples must be at least 1".into()));
    }
    let map = load_hdr(&a.hdr)?;
    let samples = generate_samples(a.sqrt_n, a.seed);
    let light = lightprobe::project_light(&map, &samples, 3)?;
    let comments = vec![
        format!(
            "probe={}",
            a.hdr.file_name().map(|n| n.to_string_lossy()).unwrap_or_default()
        ),
        format!("samples={}", samples.len()),
        format!("seed={}", a.seed),
    ];
    write_light_file(&a.out, &light, &comments)?;
    println!("samples={} dc={:?}", samples.len(), light.values[0]);
    Ok(())
}

pub fn rotate_light(a: RotateLightArgs) -> Result<()> {
    let [w, x, y, z] = a.quat[..] else {
        bail!(UsageError("--quat takes four numbers w x y z".into()));
    };
    let q = Quaternion::new(w, x, y, z);
    let norm = q.norm();
    if !norm.is_finite() || (norm - 1.0).abs() > 1e-3 {
        bail!(UsageError(format!(
            "quaternion ({w} {x} {y} {z}) has norm {norm}; normalize it to unit length first"
        )));
    }
    let light = read_light_file(&a.coeffs)?;
    let rotated = rotate_sh(&light, &q)?;
    write_light_file(&a.out, &rotated, &[format!("rotated_by={w} {x} {y} {z}")])?;
    for (l, (before, after)) in light.band_norms().iter().zip(rotated.band_norms()).enumerate() {
        println!("band {l}: norm {before:.9} -> {after:.9}");
    }
    Ok(())
}

pub fn dataset(a: DatasetArgs) -> Result<()> {
    let config = DatasetConfig {
        prt: prt_config(&a.oracle),
        albedo: a.oracle.albedo.unwrap_or([1.0; 3]),
        split_seed: a.split_seed,
        split_fraction: a.split_fraction,
    };
    let report = with_pool(|| dataset::generate(&a.mesh_dir, &a.out, &config))??;
    for e in &report.manifest.entries {
        println!("{} vertices={}", e.mesh.display(), e.vertices);
    }
    println!("manifest={}", report.manifest_path.display());
    if !report.failures.is_empty() {
        for (p, e) in &report.failures {
            eprintln!("skipped {}: {e}", p.display());
        }
        bail!(PartialFailure(format!(
            "{} of {} meshes failed; the manifest lists the rest",
            report.failures.len(),
            report.failures.len() + report.manifest.entries.len()
        )));
    }
    Ok(())
}

pub fn train(a: TrainArgs) -> Result<()> {
    let manifest = dataset::read_manifest(&a.manifest)?;
    let pairs = dataset::load_pairs(&manifest)?;
    let mut arch = Arch::default();
    if let Some(h) = &a.hidden {
        arch.dims = std::iter::once(arch.dims[0])
            .chain(h.iter().copied())
            .chain([*arch.dims.last().unwrap()])
            .collect();
        if a.dropout.is_none() {
            arch.dropout = vec![0.0; h.len()];
        }
    }
    if let Some(d) = &a.dropout {
        arch.dropout = d.clone();
    }
    let config = TrainConfig {
        arch,
        learning_rate: a.learning_rate,
        batch_size: a.batch_size,
        epochs: a.epochs,
        seed: a.seed,
        split_fraction: a.split_fraction.unwrap_or(manifest.config.split_fraction),
        split_seed: a.split_seed.unwrap_or(manifest.config.split_seed),
        ..TrainConfig::default()
    };
    config.validate().map_err(|e| UsageError(e.to_string()))?;
    println!(
        "pairs={} epochs={} batch_size={}",
        pairs.len(),
        config.epochs,
        config.batch_size
    );
    flush();
    let start = Instant::now();
    let log_every = a.log_every;
    let outcome = with_pool(|| {
        train_with_progress(&pairs, &config, |epoch, loss, val| {
            if log_every > 0 && ((epoch + 1) % log_every == 0 || epoch == 0) {
                println!("epoch {:>4} train_loss={loss:.6e} val_mse={val:.6e}", epoch + 1);
                flush();
            }
        })
    })??;
    let seconds = start.elapsed().as_secs_f64();

    let meta = manifest.transfer_meta();
    let mut final_w = outcome.weights;
    let mut best_w = outcome.best;
    final_w.sampling = Some(meta.clone());
    best_w.sampling = Some(meta);
    save_weights(&final_w, &a.out)?;
    save_weights(&best_w, a.out.join("best"))?;

    let (x, y) = pairs_to_arrays(&pairs);
    let all = ngash::neural::mse(&final_w, x.view(), y.view())?;
    let h = &outcome.history;
    println!(
        "best_epoch={} best_val_mse={:.6e} final_val_mse={:.6e}",
        h.best_epoch + 1,
        h.val_mse[h.best_epoch],
        h.val_mse.last().copied().unwrap_or(f64::NAN)
    );
    println!("mse={all:.6e}");
    println!("train_seconds={seconds:.3}");
    Ok(())
}

pub fn predict(a: PredictArgs) -> Result<()> {
    let start = Instant::now();
    let weights = load_weights(&a.weights).with_context(|| format!("loading weights {}", a.weights.display()))?;
    let mesh = load_mesh(&a.mesh, None)?;
    let core = Instant::now();
    let predicted = with_pool(|| predict_mesh(&weights, &mesh))??;
    let core = core.elapsed().as_secs_f64();
    write_transfer_file(&a.out, &predicted)?;
    println!("vertices={}", mesh.vertex_count());
    println!("predict_seconds={core:.6}");
    println!("inclusive_seconds={:.6}", start.elapsed().as_secs_f64());
    if let Some(r) = &a.reference {
        let reference = read_transfer_file(r)?;
        let (mse, std) = residual_stats(&reference, &predicted).context("comparing with the reference")?;
        println!("mse={mse:.6e} std={std:.6e}");
    }
    Ok(())
}

pub fn shade(a: ShadeArgs) -> Result<()> {
    let transfer = read_transfer_file(&a.coeffs)?;
    let light = read_light_file(&a.light)?;
    if a.divisor == 0.0 || !a.divisor.is_finite() || !a.intensity.is_finite() {
        bail!(UsageError(
            "--intensity and --divisor must be finite and the divisor nonzero".into()
        ));
    }
    let colors = with_pool(|| shade_with(&transfer, &light, a.intensity, a.divisor))??;
    if let Some(out) = &a.out {
        write_colors(out, &colors)?;
    }
    if let (Some(ppm), Some(mesh_path)) = (&a.ppm, &a.mesh) {
        let mesh = load_mesh(mesh_path, None)?;
        if mesh.vertex_count() != colors.len() {
            return Err(ngash::Error::Integrity(format!(
                "{} has {} vertices but {} has {} rows",
                mesh_path.display(),
                mesh.vertex_count(),
                a.coeffs.display(),
                colors.len()
            ))
            .into());
        }
        let rgb = render_preview(&mesh, &colors, a.width, a.height)?;
        write_ppm(ppm, a.width, a.height, &rgb)?;
    }
    println!("vertices={}", colors.len());
    Ok(())
}

pub fn bench(a: BenchArgs) -> Result<()> {
    let weights = load_weights(&a.weights).with_context(|| format!("loading weights {}", a.weights.display()))?;
    let mesh = load_mesh(&a.mesh, None)?;
    let trained = weights.sampling.clone();
    let config = PrtConfig {
        sqrt_n: a.sqrt_n.or(trained.as_ref().map(|m| m.sqrt_n)).unwrap_or(5),
        seed: a.seed.or(trained.as_ref().map(|m| m.seed)).unwrap_or(0),
        mode: a
            .mode
            .map(Into::into)
            .or(trained.as_ref().map(|m| m.mode))
            .unwrap_or(SampleMode::Sphere),
        shadowed: if a.shadowed {
            true
        } else if a.unshadowed {
            false
        } else {
            trained.as_ref().is_none_or(|m| m.shadowed)
        },
    };
    let (report, _, _) = with_pool(|| run_bench(&mesh, &weights, &config))??;
    let json = serde_json::to_string_pretty(&report)?;
    if let Some(out) = &a.out {
        fs::write(out, format!("{json}\n")).with_context(|| format!("writing {}", out.display()))?;
    }
    println!("{json}");
    Ok(())
}

fn parse_light_arg(spec: &str) -> Result<(String, LightCoefficients)> {
    let (name, path) = match spec.split_once('=') {
        Some((n, p)) if !n.is_empty() => (n.to_string(), Path::new(p).to_path_buf()),
        _ => {
            let p = Path::new(spec).to_path_buf();
            let stem = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| spec.to_string());
            (stem, p)
        }
    };
    let light = read_light_file(&path)?;
    Ok((name, light))
}

pub fn export_bundle(a: ExportBundleArgs) -> Result<()> {
    let mesh = load_mesh(&a.mesh, None)?;
    let weights = match &a.weights {
        Some(dir) => Some(load_weights(dir).with_context(|| format!("loading weights {}", dir.display()))?),
        None => None,
    };
    let transfer = match (&a.coeffs, &weights) {
        (Some(path), _) => read_transfer_file(path)?,
        (None, Some(w)) => with_pool(|| predict_mesh(w, &mesh))??,
        (None, None) => bail!(UsageError("need --coeffs or --weights".into())),
    };
    let lights = a
        .lights
        .iter()
        .map(|s| parse_light_arg(s))
        .collect::<Result<Vec<_>>>()?;
    let bundle = ViewerBundle::new(&mesh, &transfer, &lights, weights.as_ref(), a.intensity)?;
    write_bundle(&a.out, &bundle)?;
    println!(
        "vertices={} lights={} weights={}",
        mesh.vertex_count(),
        lights.len(),
        if weights.is_some() { "embedded" } else { "none" }
    );
    Ok(())
}

pub fn make_mesh(a: MakeMeshArgs) -> Result<()> {
    let valid = a.size.is_finite()
        && a.size > 0.0
        && match a.shape {
            Shape::Torus => a.rings >= 3 && a.sides >= 3 && a.minor > 0.0 && a.minor < a.size,
            Shape::Sphere => a.rings >= 2 && a.sides >= 3,
            Shape::Cube => true,
            Shape::Plane => a.rings >= 1,
        };
    if !valid {
        bail!(UsageError(
            format!("invalid parameters for {:?}", a.shape).to_lowercase()
        ));
    }
    let mesh = match a.shape {
        Shape::Torus => shapes::torus(a.size, a.minor, a.rings, a.sides),
        Shape::Sphere => shapes::uv_sphere(a.size, a.rings, a.sides),
        Shape::Cube => shapes::cube(a.size),
        Shape::Plane => shapes::grid_plane(a.size, a.rings),
    };
    let mesh = mesh.with_normals();
    save_obj(&mesh, &a.out)?;
    println!("vertices={} triangles={}", mesh.vertex_count(), mesh.triangles.len());
    Ok(())
}
