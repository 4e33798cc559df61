use std::path::Path;

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::model::{build_model, RpMixer};
use crate::tensor::Tensor;
use crate::training::{AdamW, AdamWConfig};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"RPCK";
pub const CHECKPOINT_VERSION: u16 = 1;

/// A trained model with the configuration that produced it.
///
/// Layout: `RPCK` | version u16 | config length u32 | config text |
/// nodes u32 | features u32 | tensor count u32 | tensors | optimizer flag u8
/// [hyper-parameters 5×f64 | step u64 | count u32 | first moments | second
/// moments] | best-metric flag u8 [f64]. Each tensor is rank u32, dims u32…,
/// then f32 values; every integer and float is little-endian.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub config: ExperimentConfig,
    pub nodes: usize,
    pub features: usize,
    pub tensors: Vec<Tensor<f32>>,
    pub optimizer: Option<AdamW<f32>>,
    pub best_val: Option<f64>,
}

impl Checkpoint {
    pub fn from_model(
        config: &ExperimentConfig,
        model: &RpMixer<f32>,
        optimizer: Option<&AdamW<f32>>,
        best_val: Option<f64>,
    ) -> Self {
        let mc = model.config();
        Self {
            config: config.clone(),
            nodes: mc.nodes,
            features: mc.features,
            tensors: model.tensors().into_iter().cloned().collect(),
            optimizer: optimizer.cloned(),
            best_val,
        }
    }

    /// Rebuilds the model; its outputs match the saved one bit for bit.
    pub fn model(&self) -> Result<RpMixer<f32>> {
        let mut model = build_model(&self.config.model_config(self.nodes, self.features))?;
        model.load_tensors(self.tensors.clone())?;
        Ok(model)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        let text = self.config.to_text();
        put_u32(&mut out, text.len());
        out.extend_from_slice(text.as_bytes());
        put_u32(&mut out, self.nodes);
        put_u32(&mut out, self.features);
        put_u32(&mut out, self.tensors.len());
        for t in &self.tensors {
            put_tensor(&mut out, t);
        }
        match &self.optimizer {
            Some(opt) => {
                out.push(1);
                let c = opt.config;
                for v in [c.lr, c.beta1, c.beta2, c.eps, c.weight_decay] {
                    out.extend_from_slice(&v.to_le_bytes());
                }
                out.extend_from_slice(&opt.steps().to_le_bytes());
                put_u32(&mut out, opt.first_moments().len());
                for t in opt.first_moments().iter().chain(opt.second_moments()) {
                    put_tensor(&mut out, t);
                }
            }
            None => out.push(0),
        }
        match self.best_val {
            Some(v) => {
                out.push(1);
                out.extend_from_slice(&v.to_le_bytes());
            }
            None => out.push(0),
        }
        out
    }

    pub fn decode(bytes: &[u8], path: &Path) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0, path };
        if r.take(4)? != CHECKPOINT_MAGIC {
            return Err(r.bad("missing RPCK magic"));
        }
        let version = u16::from_le_bytes(r.take(2)?.try_into().expect("2 bytes"));
        if version != CHECKPOINT_VERSION {
            return Err(r.bad(&format!("unsupported version {version}")));
        }
        let len = r.u32()?;
        let text = std::str::from_utf8(r.take(len)?).map_err(|_| r.bad("configuration is not UTF-8"))?;
        let config = ExperimentConfig::parse(text)?;
        let nodes = r.u32()?;
        let features = r.u32()?;
        let count = r.u32()?;
        let tensors = (0..count).map(|_| r.tensor()).collect::<Result<Vec<_>>>()?;
        let optimizer = match r.u8()? {
            0 => None,
            1 => {
                let mut h = [0.0f64; 5];
                for v in h.iter_mut() {
                    *v = r.f64()?;
                }
                let step = u64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes"));
                let n = r.u32()?;
                let m = (0..n).map(|_| r.tensor()).collect::<Result<Vec<_>>>()?;
                let v = (0..n).map(|_| r.tensor()).collect::<Result<Vec<_>>>()?;
                let config = AdamWConfig {
                    lr: h[0],
                    beta1: h[1],
                    beta2: h[2],
                    eps: h[3],
                    weight_decay: h[4],
                };
                Some(AdamW::from_state(config, step, m, v)?)
            }
            _ => return Err(r.bad("bad optimizer flag")),
        };
        let best_val = match r.u8()? {
            0 => None,
            1 => Some(r.f64()?),
            _ => return Err(r.bad("bad metric flag")),
        };
        if r.pos != bytes.len() {
            return Err(r.bad("trailing bytes"));
        }
        Ok(Self {
            config,
            nodes,
            features,
            tensors,
            optimizer,
            best_val,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes, path)
    }
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

fn put_tensor(out: &mut Vec<u8>, t: &Tensor<f32>) {
    put_u32(out, t.rank());
    for &d in t.shape() {
        put_u32(out, d);
    }
    for v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn bad(&self, message: &str) -> Error {
        Error::Format {
            path: self.path.to_path_buf(),
            message: format!("{message} (at byte {})", self.pos),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| self.bad("unexpected end of file"))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn tensor(&mut self) -> Result<Tensor<f32>> {
        let rank = self.u32()?;
        if rank > 8 {
            return Err(self.bad(&format!("implausible tensor rank {rank}")));
        }
        let shape = (0..rank).map(|_| self.u32()).collect::<Result<Vec<_>>>()?;
        let count = shape.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
        let count = count.ok_or_else(|| self.bad("tensor size overflows"))?;
        let raw = self.take(count.checked_mul(4).ok_or_else(|| self.bad("tensor size overflows"))?)?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        Tensor::new(shape, data)
    }
}
