//! Binary model payload: `AMIM`, a version byte, then little-endian fields.

use crate::ingest::{Attribute, AttributeSet};

use super::{LeafModel, LinearModel, ModelError, ModelKind, Node, Result, Split, SplitTest, TrainingMeta, TreeModel, LINEAR_FEATURES};

pub const MAGIC: &[u8; 4] = b"AMIM";
pub const VERSION: u8 = 1;

pub fn serialize(m: &TreeModel) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + m.nodes.len() * 24);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(match m.kind {
        ModelKind::RepTree => 0,
        ModelKind::ModelTree => 1,
    });
    out.push(m.attributes.bits());
    out.push(u8::from(m.smoothing));
    out.extend_from_slice(&m.trained_rmse.to_le_bytes());
    out.extend_from_slice(&m.trained_mae.to_le_bytes());
    for v in [m.meta.rows, m.meta.holdout_rows, m.meta.singular_fits] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    out.extend_from_slice(&(m.nodes.len() as u32).to_le_bytes());
    for n in &m.nodes {
        out.extend_from_slice(&(n.count as u64).to_le_bytes());
        match n.model {
            LeafModel::Constant(c) => {
                out.push(0);
                out.extend_from_slice(&c.to_le_bytes());
            }
            LeafModel::Linear(lm) => {
                out.push(1);
                out.extend_from_slice(&lm.intercept.to_le_bytes());
                for c in lm.coefficients {
                    out.extend_from_slice(&c.to_le_bytes());
                }
            }
        }
        match n.split {
            None => out.push(0),
            Some(s) => {
                out.push(1);
                out.push(s.attribute as u8);
                match s.test {
                    SplitTest::AtMost(t) => {
                        out.push(0);
                        out.push(t);
                    }
                    SplitTest::InSet { left, right } => {
                        out.push(1);
                        out.push(left);
                        out.push(right);
                    }
                }
                out.extend_from_slice(&(s.left as u32).to_le_bytes());
                out.extend_from_slice(&(s.right as u32).to_le_bytes());
            }
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let Some(end) = end else {
            return Err(ModelError::Decode(format!("truncated at byte {}", self.pos)));
        };
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

fn bad(msg: impl Into<String>) -> ModelError {
    ModelError::Decode(msg.into())
}

pub fn deserialize(bytes: &[u8]) -> Result<TreeModel> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(bad("missing AMIM header"));
    }
    let version = r.u8()?;
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let kind = match r.u8()? {
        0 => ModelKind::RepTree,
        1 => ModelKind::ModelTree,
        k => return Err(bad(format!("unknown model kind {k}"))),
    };
    let attributes = AttributeSet::from_bits(r.u8()?).ok_or_else(|| bad("invalid attribute set"))?;
    let smoothing = match r.u8()? {
        0 => false,
        1 => true,
        v => return Err(bad(format!("invalid smoothing flag {v}"))),
    };
    let trained_rmse = r.f64()?;
    let trained_mae = r.f64()?;
    let rows = r.u64()? as usize;
    let holdout_rows = r.u64()? as usize;
    let singular_fits = r.u64()? as usize;
    let count = r.u32()? as usize;
    if count == 0 {
        return Err(bad("model has no nodes"));
    }
    let mut nodes = Vec::with_capacity(count.min(1 << 16));
    for at in 0..count {
        let n = r.u64()? as usize;
        let model = match r.u8()? {
            0 => LeafModel::Constant(r.f64()?),
            1 => {
                let intercept = r.f64()?;
                let mut coefficients = [0.0; LINEAR_FEATURES];
                for c in &mut coefficients {
                    *c = r.f64()?;
                }
                LeafModel::Linear(LinearModel { intercept, coefficients })
            }
            t => return Err(bad(format!("node {at}: unknown model tag {t}"))),
        };
        let split = match r.u8()? {
            0 => None,
            1 => {
                let attribute = Attribute::from_code(r.u8()?).ok_or_else(|| bad(format!("node {at}: bad attribute")))?;
                let test = match r.u8()? {
                    0 => SplitTest::AtMost(r.u8()?),
                    1 => SplitTest::InSet { left: r.u8()?, right: r.u8()? },
                    t => return Err(bad(format!("node {at}: unknown test tag {t}"))),
                };
                let left = r.u32()? as usize;
                let right = r.u32()? as usize;
                if left <= at || right <= at || left >= count || right >= count || left == right {
                    return Err(bad(format!("node {at}: child index out of range")));
                }
                Some(Split { attribute, test, left, right })
            }
            t => return Err(bad(format!("node {at}: unknown split tag {t}"))),
        };
        nodes.push(Node { count: n, model, split });
    }
    if r.pos != bytes.len() {
        return Err(bad(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(TreeModel {
        kind,
        attributes,
        nodes,
        smoothing,
        trained_rmse,
        trained_mae,
        meta: TrainingMeta {
            rows,
            holdout_rows,
            singular_fits,
            train_seconds: 0.0,
            prune_trace: Vec::new(),
        },
    })
}
