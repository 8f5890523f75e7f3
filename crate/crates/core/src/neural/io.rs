use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::cga::{blade_names, blade_order_hash};
use crate::error::{Error, Result};
use crate::prt_oracle::{TransferMeta, TransferSource};

use super::model::{init_model_with, Arch, ModelWeights, BN_EPS, BN_MOMENTUM, OUTPUT};
use super::TrainConfig;

pub const MANIFEST: &str = "manifest.txt";
pub const FORMAT: &str = "ngash-weights-1";

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

/// The key-value manifest; tensor lines list name, shape and blob file in storage order.
pub fn manifest_text(w: &ModelWeights) -> String {
    let mut lines = vec![
        format!("format={FORMAT}"),
        format!("arch={}", join(&w.arch.dims)),
        "activation=silu".into(),
        format!("dropout={}", join(&w.arch.dropout)),
        format!("bn_eps={BN_EPS}"),
        format!("bn_momentum={BN_MOMENTUM}"),
        format!("init_seed={}", w.init_seed),
        format!("blade_order_hash={}", blade_order_hash()),
        format!("blades={}", blade_names().join(",")),
        "output_layout=3j+k".into(),
        format!("target_mean={}", join(&w.target_mean)),
        format!("target_std={}", join(&w.target_std)),
    ];
    if let Some(t) = &w.train {
        lines.extend([
            format!("train.learning_rate={}", t.learning_rate),
            format!("train.batch_size={}", t.batch_size),
            format!("train.epochs={}", t.epochs),
            format!("train.seed={}", t.seed),
            format!("train.beta1={}", t.beta1),
            format!("train.beta2={}", t.beta2),
            format!("train.adam_eps={}", t.adam_eps),
            format!("train.split_fraction={}", t.split_fraction),
            format!("train.split_seed={}", t.split_seed),
        ]);
    }
    if let Some(d) = &w.sampling {
        lines.extend([
            format!("data.mode={}", d.mode),
            format!("data.sqrt_n={}", d.sqrt_n),
            format!("data.seed={}", d.seed),
            format!("data.shadowed={}", d.shadowed),
            format!("data.albedo={}", d.albedo),
        ]);
    }
    for (name, shape, _) in w.tensors() {
        let dims = shape.iter().map(ToString::to_string).collect::<Vec<_>>().join("x");
        lines.push(format!("tensor={name} {dims} {name}.bin"));
    }
    lines.join("\n") + "\n"
}

/// Little-endian `f32` encoding of a tensor.
pub fn tensor_blob(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|&v| (v as f32).to_le_bytes()).collect()
}

/// Writes the manifest and one blob per tensor into `dir`.
pub fn save_weights(w: &ModelWeights, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, _, values) in w.tensors() {
        let p = dir.join(format!("{name}.bin"));
        fs::write(&p, tensor_blob(values)).map_err(|e| Error::io(&p, e))?;
    }
    let p = dir.join(MANIFEST);
    fs::write(&p, manifest_text(w)).map_err(|e| Error::io(&p, e))
}

pub fn load_weights(dir: impl AsRef<Path>) -> Result<ModelWeights> {
    let dir = dir.as_ref();
    let mp = dir.join(MANIFEST);
    let text = fs::read_to_string(&mp).map_err(|e| Error::io(&mp, e))?;
    weights_from_parts(&text, |file| {
        let p = dir.join(file);
        fs::read(&p).map_err(|e| Error::io(&p, e))
    })
}

struct Manifest {
    keys: BTreeMap<String, String>,
    tensors: Vec<(String, String, String)>,
}

fn parse_manifest(text: &str) -> Result<Manifest> {
    let mut keys = BTreeMap::new();
    let mut tensors = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(MANIFEST, i + 1, "expected key=value"))?;
        if k == "tensor" {
            let parts: Vec<&str> = v.split_whitespace().collect();
            let [name, shape, file] = parts[..] else {
                return Err(Error::parse(MANIFEST, i + 1, "tensor lines are `name shape file`"));
            };
            tensors.push((name.to_string(), shape.to_string(), file.to_string()));
        } else {
            keys.insert(k.to_string(), v.to_string());
        }
    }
    Ok(Manifest { keys, tensors })
}

/// Rebuilds weights from a manifest and a blob reader (directory or bundle).
pub fn weights_from_parts(text: &str, mut read_blob: impl FnMut(&str) -> Result<Vec<u8>>) -> Result<ModelWeights> {
    let m = parse_manifest(text)?;
    let get = |k: &str| {
        m.keys
            .get(k)
            .map(String::as_str)
            .ok_or_else(|| Error::Format(format!("weights manifest lacks `{k}`")))
    };
    let num = |k: &str| -> Result<f64> {
        get(k)?
            .parse()
            .map_err(|_| Error::Format(format!("weights manifest: bad number in `{k}`")))
    };
    let list = |k: &str| -> Result<Vec<f64>> {
        get(k)?
            .split(',')
            .map(|t| {
                t.parse()
                    .map_err(|_| Error::Format(format!("weights manifest: bad list `{k}`")))
            })
            .collect()
    };
    if get("format")? != FORMAT {
        return Err(Error::Format(format!(
            "unsupported weights format `{}`",
            get("format")?
        )));
    }
    if get("blade_order_hash")? != blade_order_hash() {
        return Err(Error::Incompatible(format!(
            "weights use blade order {}, this build uses {}",
            get("blade_order_hash")?,
            blade_order_hash()
        )));
    }
    let arch = Arch {
        dims: list("arch")?.into_iter().map(|v| v as usize).collect(),
        dropout: list("dropout")?,
    };
    let mut w = init_model_with(&arch, num("init_seed")? as u64).map_err(|e| Error::Incompatible(e.to_string()))?;
    w.target_mean = list("target_mean")?;
    w.target_std = list("target_std")?;
    if w.target_mean.len() != OUTPUT || w.target_std.len() != OUTPUT {
        return Err(Error::Integrity(format!(
            "target statistics must have {OUTPUT} entries"
        )));
    }
    if m.keys.contains_key("train.learning_rate") {
        w.train = Some(TrainConfig {
            arch: arch.clone(),
            learning_rate: num("train.learning_rate")?,
            batch_size: num("train.batch_size")? as usize,
            epochs: num("train.epochs")? as usize,
            seed: get("train.seed")?
                .parse()
                .map_err(|_| Error::Format("bad train.seed".into()))?,
            beta1: num("train.beta1")?,
            beta2: num("train.beta2")?,
            adam_eps: num("train.adam_eps")?,
            split_fraction: num("train.split_fraction")?,
            split_seed: get("train.split_seed")?
                .parse()
                .map_err(|_| Error::Format("bad train.split_seed".into()))?,
        });
    }
    if m.keys.contains_key("data.mode") {
        w.sampling = Some(TransferMeta {
            bands: 3,
            mode: get("data.mode")?.parse()?,
            sqrt_n: num("data.sqrt_n")? as usize,
            seed: get("data.seed")?
                .parse()
                .map_err(|_| Error::Format("bad data.seed".into()))?,
            shadowed: get("data.shadowed")? == "true",
            source: TransferSource::Oracle,
            albedo: get("data.albedo")?.to_string(),
        });
    }

    let expected: Vec<(String, Vec<usize>)> = w.tensors().into_iter().map(|(n, s, _)| (n, s)).collect();
    if expected.len() != m.tensors.len() {
        return Err(Error::Integrity(format!(
            "manifest lists {} tensors, architecture needs {}",
            m.tensors.len(),
            expected.len()
        )));
    }
    let mut blobs = Vec::with_capacity(expected.len());
    for ((name, shape), (mname, mshape, file)) in expected.iter().zip(&m.tensors) {
        let dims = shape.iter().map(ToString::to_string).collect::<Vec<_>>().join("x");
        if name != mname || &dims != mshape {
            return Err(Error::Integrity(format!(
                "tensor `{mname}` ({mshape}) found where `{name}` ({dims}) was expected"
            )));
        }
        let bytes = read_blob(file)?;
        let count: usize = shape.iter().product();
        if bytes.len() != 4 * count {
            return Err(Error::Integrity(format!(
                "{file}: {} bytes, expected {}",
                bytes.len(),
                4 * count
            )));
        }
        blobs.push(bytes);
    }
    for (t, bytes) in w.tensors_mut().into_iter().zip(&blobs) {
        for (v, c) in t.iter_mut().zip(bytes.chunks_exact(4)) {
            *v = f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]]));
        }
    }
    let bad_var = std::iter::once(&w.input_bn)
        .chain(w.hidden.iter().map(|h| &h.bn))
        .any(|b| b.var.iter().any(|&v| v.is_nan() || v <= 0.0));
    let non_finite = w.tensors().iter().any(|(_, _, t)| t.iter().any(|v| !v.is_finite()));
    if bad_var || non_finite {
        return Err(Error::Integrity(
            "weights contain non-finite values or non-positive variances".into(),
        ));
    }
    Ok(w)
}
