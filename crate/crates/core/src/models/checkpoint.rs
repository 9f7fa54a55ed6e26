//! Text checkpoints: `#key=value` header lines, then one line per tensor.
//!
//! Tensor lines read `param|buffer,<name>,<d0>x<d1>...,<hex> <hex> ...` where
//! each value is the `0x`-prefixed bit pattern of an `f64`, so loading is exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndiff::Tensor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Model, ModelError, ModelKind, ModelSpec, ParamStore, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

fn hex_values(t: &Tensor) -> String {
    let mut s = String::with_capacity(t.len() * 19);
    for (i, v) in t.data().iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{:#018x}", v.to_bits());
    }
    s
}

fn shape_str(shape: &[usize]) -> String {
    shape.iter().map(usize::to_string).collect::<Vec<_>>().join("x")
}

impl Model {
    pub fn to_checkpoint(&self) -> String {
        let s = &self.spec;
        let mut out = String::new();
        let _ = writeln!(out, "#checkpoint={CHECKPOINT_VERSION}");
        let _ = writeln!(out, "#model={}", s.kind);
        let _ = writeln!(out, "#window={}", s.window);
        let _ = writeln!(out, "#k_max={}", s.k_max);
        let _ = writeln!(out, "#hidden_dim={}", s.hidden_dim);
        let _ = writeln!(out, "#width={}", s.width);
        let _ = writeln!(out, "#dropout={}", s.dropout);
        let _ = writeln!(out, "#reset_absent={}", s.reset_absent);
        for (name, t) in self.params.iter() {
            let _ = writeln!(out, "param,{name},{},{}", shape_str(t.shape()), hex_values(t));
        }
        for (k, bn) in self.bn.iter().enumerate() {
            for (what, v) in [("running_mean", &bn.running_mean), ("running_var", &bn.running_var)] {
                let t = Tensor::vector(v.clone());
                let _ = writeln!(
                    out,
                    "buffer,{}/block{k}/{what},{},{}",
                    s.kind,
                    shape_str(t.shape()),
                    hex_values(&t)
                );
            }
        }
        out
    }

    pub fn from_checkpoint(text: &str) -> Result<Model> {
        let err = |line: usize, msg: String| ModelError::Checkpoint { line, msg };
        let mut header: Vec<(usize, String, String)> = Vec::new();
        let mut params = ParamStore::new();
        let mut buffers: Vec<(usize, String, Vec<f64>)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let n = i + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(kv) = line.strip_prefix('#') {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| err(n, format!("expected #key=value, found '{line}'")))?;
                header.push((n, k.to_string(), v.to_string()));
                continue;
            }
            let mut parts = line.splitn(4, ',');
            let (kind, name, shape, values) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
                _ => return Err(err(n, "expected kind,name,shape,values".into())),
            };
            let shape = if shape.is_empty() {
                Vec::new()
            } else {
                shape
                    .split('x')
                    .map(|d| d.parse::<usize>().map_err(|e| err(n, format!("bad shape '{shape}': {e}"))))
                    .collect::<Result<Vec<_>>>()?
            };
            let data = values
                .split(' ')
                .filter(|v| !v.is_empty())
                .map(|v| {
                    let hex = v.strip_prefix("0x").ok_or_else(|| err(n, format!("value '{v}' lacks 0x prefix")))?;
                    u64::from_str_radix(hex, 16)
                        .map(f64::from_bits)
                        .map_err(|e| err(n, format!("bad value '{v}': {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            let tensor = Tensor::new(&shape, data).map_err(|e| err(n, e.to_string()))?;
            match kind {
                "param" => {
                    if params.get(name).is_some() {
                        return Err(err(n, format!("duplicate tensor '{name}'")));
                    }
                    params.push(name, tensor)
                }
                "buffer" => buffers.push((n, name.to_string(), tensor.into_data())),
                other => return Err(err(n, format!("unknown line kind '{other}'"))),
            }
        }

        let get = |key: &str| -> Result<(usize, &str)> {
            header
                .iter()
                .find(|(_, k, _)| k == key)
                .map(|(l, _, v)| (*l, v.as_str()))
                .ok_or_else(|| err(0, format!("missing header key '{key}'")))
        };
        fn parse<T: std::str::FromStr>(key: &str, (line, v): (usize, &str)) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            v.parse().map_err(|e: T::Err| ModelError::Checkpoint {
                line,
                msg: format!("{key}: cannot parse '{v}': {e}"),
            })
        }
        let version: u32 = parse("checkpoint", get("checkpoint")?)?;
        if version != CHECKPOINT_VERSION {
            return Err(err(0, format!("unsupported checkpoint version {version}")));
        }
        let (l, kind) = get("model")?;
        let kind: ModelKind = kind.parse().map_err(|e: String| err(l, e))?;
        let spec = ModelSpec {
            kind,
            window: parse("window", get("window")?)?,
            k_max: parse("k_max", get("k_max")?)?,
            hidden_dim: parse("hidden_dim", get("hidden_dim")?)?,
            width: parse("width", get("width")?)?,
            dropout: parse("dropout", get("dropout")?)?,
            reset_absent: parse("reset_absent", get("reset_absent")?)?,
        };
        spec.validate()?;

        // Shapes and names must match a fresh instance of the same architecture.
        let template = Model::new(spec, &mut ChaCha8Rng::seed_from_u64(0))?;
        if template.params.names() != params.names() {
            return Err(err(0, format!("tensor names do not match a {kind} model")));
        }
        for ((name, want), got) in template.params.iter().zip(params.tensors()) {
            if want.shape() != got.shape() {
                return Err(err(
                    0,
                    format!("tensor '{name}' has shape {:?}, expected {:?}", got.shape(), want.shape()),
                ));
            }
        }
        let mut bn = template.bn;
        for (k, stats) in bn.iter_mut().enumerate() {
            for what in ["running_mean", "running_var"] {
                let name = format!("{kind}/block{k}/{what}");
                let (line, _, data) = buffers
                    .iter()
                    .find(|(_, n, _)| *n == name)
                    .ok_or_else(|| err(0, format!("missing buffer '{name}'")))?;
                if data.len() != stats.running_mean.len() {
                    return Err(err(*line, format!("buffer '{name}' has {} entries", data.len())));
                }
                match what {
                    "running_mean" => stats.running_mean = data.clone(),
                    _ => stats.running_var = data.clone(),
                }
            }
        }
        if buffers.len() != 2 * bn.len() {
            return Err(err(0, format!("{} buffers for {} batch-norm layers", buffers.len(), bn.len())));
        }
        Ok(Model { spec, params, bn })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let io = |source| ModelError::Io {
            path: path.to_path_buf(),
            source,
        };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(io)?;
        }
        fs::write(path, self.to_checkpoint()).map_err(io)
    }

    pub fn load(path: &Path) -> Result<Model> {
        let text = fs::read_to_string(path).map_err(|source| ModelError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_checkpoint(&text)
    }
}
