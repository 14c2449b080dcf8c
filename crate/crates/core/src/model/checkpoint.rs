//! Binary checkpoint container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic   b"HYPERIM\0"
//! u32     format version
//! u8 x4   mode, GRU nonlinearity, prediction nonlinearity, matvec mode
//! u64 x3  F, b, T
//! strings vocabulary, then labels   (u64 count, then u64 len + UTF-8 bytes each)
//! edges   u64 count, then u64 parent + u64 child each
//! tensors u64 count, then per tensor:
//!         name string, u8 manifold (0 Euclidean, 1 hyperbolic), u64 ball dim,
//!         u64 rank, u64 per axis, f64 values
//! ```
//!
//! Optimizer moments are not stored.

use std::io::{Read, Write};
use std::path::Path;

use super::{HyperIMParams, ModelConfig};
use crate::ball::ops::ProductMatvec;
use crate::diff::{Manifold, ParamTensor};
use crate::embed::Vocabulary;
use crate::encoder::{GruParams, Mode, Nonlinearity};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"HYPERIM\0";
pub const FORMAT_VERSION: u32 = 1;

pub fn to_bytes(params: &HyperIMParams) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.0.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    let c = &params.config;
    w.0.push(match c.mode {
        Mode::Hyperbolic => 0,
        Mode::Euclidean => 1,
    });
    w.0.push(c.gru_phi.code());
    w.0.push(c.pred_phi.code());
    w.0.push(match c.matvec {
        ProductMatvec::Full => 0,
        ProductMatvec::BlockDiagonal => 1,
    });
    w.u64(c.num_factors);
    w.u64(c.ball_dim);
    w.u64(c.seq_len);
    w.strings(params.vocab.words());
    w.strings(params.labels.words());
    w.u64(params.label_edges.len());
    for &(p, q) in &params.label_edges {
        w.u64(p);
        w.u64(q);
    }
    let tensors = params.tensors();
    w.u64(tensors.len());
    for t in tensors {
        w.string(&t.name);
        match t.manifold {
            Manifold::Euclidean => {
                w.0.push(0);
                w.u64(0);
            }
            Manifold::Hyperbolic { ball_dim } => {
                w.0.push(1);
                w.u64(ball_dim);
            }
        }
        w.u64(t.shape.len());
        for &s in &t.shape {
            w.u64(s);
        }
        for v in &t.values {
            w.0.extend_from_slice(&v.to_le_bytes());
        }
    }
    w.0
}

pub fn from_bytes(bytes: &[u8]) -> Result<HyperIMParams> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(bad("not a checkpoint (bad magic)"));
    }
    let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(bad(&format!("unsupported format version {version}")));
    }
    let codes = r.take(4)?.to_vec();
    let mode = match codes[0] {
        0 => Mode::Hyperbolic,
        1 => Mode::Euclidean,
        x => return Err(bad(&format!("unknown mode code {x}"))),
    };
    let phi = |c: u8| Nonlinearity::from_code(c).ok_or_else(|| bad(&format!("unknown nonlinearity code {c}")));
    let gru_phi = phi(codes[1])?;
    let pred_phi = phi(codes[2])?;
    let matvec = match codes[3] {
        0 => ProductMatvec::Full,
        1 => ProductMatvec::BlockDiagonal,
        x => return Err(bad(&format!("unknown matvec code {x}"))),
    };
    let config = ModelConfig {
        mode,
        num_factors: r.u64()?,
        ball_dim: r.u64()?,
        seq_len: r.u64()?,
        gru_phi,
        pred_phi,
        matvec,
    };
    config.validate()?;
    let vocab = vocabulary(r.strings()?)?;
    let labels = vocabulary(r.strings()?)?;
    let n_edges = r.u64()?;
    let mut label_edges = Vec::with_capacity(n_edges.min(1 << 20));
    for _ in 0..n_edges {
        let (p, q) = (r.u64()?, r.u64()?);
        if p >= labels.len() || q >= labels.len() {
            return Err(bad("edge refers to a missing label"));
        }
        label_edges.push((p, q));
    }

    let n_tensors = r.u64()?;
    if n_tensors != 13 {
        return Err(bad(&format!("expected 13 tensors, found {n_tensors}")));
    }
    let mut tensors = Vec::with_capacity(13);
    for _ in 0..n_tensors {
        let name = r.string()?;
        let tag = r.take(1)?[0];
        let ball_dim = r.u64()?;
        let manifold = match tag {
            0 => Manifold::Euclidean,
            1 if ball_dim > 0 => Manifold::Hyperbolic { ball_dim },
            _ => return Err(bad(&format!("tensor {name}: bad manifold tag"))),
        };
        let rank = r.u64()?;
        let shape = (0..rank).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
        let n = shape
            .iter()
            .try_fold(1usize, |a, &b| a.checked_mul(b))
            .ok_or_else(|| bad("tensor too large"))?;
        let raw = r.take(n.checked_mul(8).ok_or_else(|| bad("tensor too large"))?)?;
        let values: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if matches!(manifold, Manifold::Hyperbolic { ball_dim } if n % ball_dim != 0) {
            return Err(bad(&format!("tensor {name}: size not divisible by ball dimension")));
        }
        tensors.push(ParamTensor::new(name, shape, values, manifold));
    }
    if r.pos != bytes.len() {
        return Err(bad("trailing bytes"));
    }

    let (k, t) = (config.dim(), config.seq_len);
    let expect = |i: usize, name: &str, shape: &[usize]| -> Result<()> {
        let got = &tensors[i];
        if got.name != name || got.shape != shape {
            return Err(bad(&format!(
                "tensor {i}: expected {name} {shape:?}, found {} {:?}",
                got.name, got.shape
            )));
        }
        Ok(())
    };
    expect(0, "word_embeddings", &[vocab.len(), k])?;
    expect(1, "label_embeddings", &[labels.len(), k])?;
    for (i, name) in crate::encoder::GRU_TENSORS.iter().enumerate() {
        let shape: &[usize] = if i < 6 { &[k, k] } else { &[k] };
        expect(2 + i, name, shape)?;
    }
    expect(11, "w_f", &[t / 2, t])?;
    expect(12, "w_e", &[1, t / 2])?;

    let mut it = tensors.into_iter();
    let word_emb = it.next().unwrap();
    let label_emb = it.next().unwrap();
    let gru_tensors: Vec<ParamTensor> = it.by_ref().take(9).collect();
    let w_f = it.next().unwrap();
    let w_e = it.next().unwrap();
    let params = HyperIMParams {
        config,
        vocab,
        labels,
        label_edges,
        word_emb,
        label_emb,
        gru: GruParams {
            tensors: gru_tensors,
            dim: k,
            ball_dim: config.ball_dim,
            mode,
            phi: gru_phi,
            matvec,
        },
        w_f,
        w_e,
    };
    if !params.is_valid() {
        return Err(bad("parameters contain non-finite values or points outside the ball"));
    }
    Ok(params)
}

pub fn save(params: &HyperIMParams, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&to_bytes(params))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<HyperIMParams> {
    let mut buf = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut buf)?;
    from_bytes(&buf).map_err(|e| match e {
        Error::Checkpoint(m) => Error::Checkpoint(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn bad(msg: &str) -> Error {
    Error::Checkpoint(msg.to_string())
}

fn vocabulary(words: Vec<String>) -> Result<Vocabulary> {
    let n = words.len();
    let v = Vocabulary::from_words(words);
    if v.len() != n {
        return Err(bad("duplicate id in id map"));
    }
    Ok(v)
}

struct Writer(Vec<u8>);

impl Writer {
    fn u64(&mut self, x: usize) {
        self.0.extend_from_slice(&(x as u64).to_le_bytes());
    }

    fn string(&mut self, s: &str) {
        self.u64(s.len());
        self.0.extend_from_slice(s.as_bytes());
    }

    fn strings(&mut self, xs: &[String]) {
        self.u64(xs.len());
        xs.iter().for_each(|s| self.string(s));
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| bad("truncated file"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<usize> {
        let x = u64::from_le_bytes(self.take(8)?.try_into().unwrap());
        usize::try_from(x).map_err(|_| bad("integer overflow"))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u64()?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| bad("invalid UTF-8"))
    }

    fn strings(&mut self) -> Result<Vec<String>> {
        let n = self.u64()?;
        (0..n).map(|_| self.string()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::forward;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model(mode: Mode) -> HyperIMParams {
        let config = ModelConfig {
            mode,
            seq_len: 4,
            ..ModelConfig::default()
        };
        HyperIMParams::new(
            config,
            Vocabulary::from_words(["<pad>", "<unk>", "a", "b"]),
            Vocabulary::from_words(["x", "y", "z"]),
            vec![(0, 1), (0, 2)],
            None,
            None,
            &mut ChaCha8Rng::seed_from_u64(4),
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        for mode in [Mode::Hyperbolic, Mode::Euclidean] {
            let p = model(mode);
            let bytes = to_bytes(&p);
            let q = from_bytes(&bytes).unwrap();
            assert_eq!(to_bytes(&q), bytes);
            for (a, b) in p.tensors().iter().zip(q.tensors()) {
                assert_eq!(a.values, b.values);
            }
            let doc = [2, 3, 0, 0];
            let (fa, fb) = (forward(&doc, &p), forward(&doc, &q));
            assert!(fa.iter().zip(&fb).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn rejects_corruption() {
        let bytes = to_bytes(&model(Mode::Hyperbolic));
        assert!(matches!(
            from_bytes(&bytes[..bytes.len() - 3]),
            Err(Error::Checkpoint(_))
        ));
        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(from_bytes(&bad_magic).is_err());
        let mut bad_version = bytes.clone();
        bad_version[8] = 9;
        assert!(from_bytes(&bad_version).is_err());
        let mut extra = bytes;
        extra.push(0);
        assert!(from_bytes(&extra).is_err());
    }
}
