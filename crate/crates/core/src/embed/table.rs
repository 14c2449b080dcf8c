use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use super::Vocabulary;
use crate::ball::{ProductPoint, MAX_NORM};
use crate::diff::{Manifold, ParamTensor};
use crate::error::{Error, Result};

/// Radius of the ball that fresh embeddings are drawn from.
pub const INIT_RADIUS: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingRole {
    Label,
    WordTarget,
    WordContext,
    Word,
}

/// One product-ball point per id, stored row-major in a hyperbolic tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub ids: Vocabulary,
    pub num_factors: usize,
    pub ball_dim: usize,
    pub role: EmbeddingRole,
    pub values: ParamTensor,
}

impl EmbeddingTable {
    /// Each factor is drawn uniformly from the ball of radius [`INIT_RADIUS`].
    pub fn random(
        ids: Vocabulary,
        num_factors: usize,
        ball_dim: usize,
        role: EmbeddingRole,
        rng: &mut impl Rng,
    ) -> Self {
        assert!(
            num_factors >= 1 && ball_dim >= 1,
            "embedding dimension must be positive"
        );
        let dim = num_factors * ball_dim;
        let mut values = Vec::with_capacity(ids.len() * dim);
        for _ in 0..ids.len() * num_factors {
            values.extend(uniform_in_ball(ball_dim, INIT_RADIUS, rng));
        }
        Self::from_values(ids, num_factors, ball_dim, role, values)
    }

    pub fn from_values(
        ids: Vocabulary,
        num_factors: usize,
        ball_dim: usize,
        role: EmbeddingRole,
        values: Vec<f64>,
    ) -> Self {
        let dim = num_factors * ball_dim;
        let tensor = ParamTensor::new(
            role_name(role),
            vec![ids.len(), dim],
            values,
            Manifold::Hyperbolic { ball_dim },
        );
        Self {
            ids,
            num_factors,
            ball_dim,
            role,
            values: tensor,
        }
    }

    pub fn dim(&self) -> usize {
        self.num_factors * self.ball_dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let k = self.dim();
        &self.values.values[i * k..(i + 1) * k]
    }

    pub fn get(&self, id: &str) -> Option<ProductPoint> {
        self.ids.get(id).map(|i| self.point(i))
    }

    pub fn point(&self, i: usize) -> ProductPoint {
        ProductPoint::from_flat(self.row(i), self.ball_dim).expect("stored embeddings are finite")
    }

    /// `dim k factors F` header, then `id v1 ... vk` per line.
    pub fn to_text(&self) -> Result<String> {
        let mut out = format!("dim {} factors {}\n", self.dim(), self.num_factors);
        for (i, id) in self.ids.words().iter().enumerate() {
            if id.is_empty() || id.chars().any(char::is_whitespace) {
                return Err(Error::InvalidValue(format!(
                    "id {id:?} cannot be written to an embedding file"
                )));
            }
            out.push_str(id);
            for v in self.row(i) {
                write!(out, " {v}").unwrap();
            }
            out.push('\n');
        }
        Ok(out)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()?)?;
        Ok(())
    }

    pub fn parse(text: &str, path: &Path, role: EmbeddingRole) -> Result<Self> {
        let bad = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| bad(1, "missing header".into()))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        let (dim, factors) = match h.as_slice() {
            ["dim", k, "factors", f] => (
                k.parse::<usize>().map_err(|e| bad(1, e.to_string()))?,
                f.parse::<usize>().map_err(|e| bad(1, e.to_string()))?,
            ),
            _ => return Err(bad(1, "expected `dim k factors F`".into())),
        };
        if factors == 0 || dim == 0 || dim % factors != 0 {
            return Err(bad(
                1,
                format!("dim {dim} is not a positive multiple of {factors} factors"),
            ));
        }
        let ball_dim = dim / factors;
        let mut ids = Vocabulary::new();
        let mut values = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let id = parts.next().unwrap();
            let row: Vec<f64> = parts
                .map(|s| s.parse::<f64>().map_err(|e| bad(i + 1, e.to_string())))
                .collect::<Result<_>>()?;
            if row.len() != dim {
                return Err(bad(i + 1, format!("expected {dim} values, found {}", row.len())));
            }
            let before = ids.len();
            if ids.insert(id.to_string()) != before {
                return Err(bad(i + 1, format!("duplicate id {id}")));
            }
            let p = ProductPoint::from_flat(&row, ball_dim).map_err(|e| bad(i + 1, e.to_string()))?;
            values.extend(p.flat());
        }
        Ok(Self::from_values(ids, factors, ball_dim, role, values))
    }

    pub fn read(path: &Path, role: EmbeddingRole) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, path, role)
    }
}

fn role_name(role: EmbeddingRole) -> &'static str {
    match role {
        EmbeddingRole::Label => "label_embeddings",
        EmbeddingRole::WordTarget => "word_target",
        EmbeddingRole::WordContext => "word_context",
        EmbeddingRole::Word => "word_embeddings",
    }
}

/// Uniform sample from the ball of radius `r` (rejection from the cube).
pub fn uniform_in_ball(dim: usize, r: f64, rng: &mut impl Rng) -> Vec<f64> {
    debug_assert!(r < MAX_NORM);
    loop {
        let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-r..r)).collect();
        let n = crate::scalar::norm(&x);
        if n <= r && n >= crate::ball::MIN_NORM {
            return x;
        }
    }
}
