//! Binary checkpoint container, little-endian throughout:
//!
//! ```text
//! magic "RVCK" | version u32 | seed u64
//! n_meta u32   | (key str, value str)*
//! n_params u32 | (name str, rows u64, cols u64, f64 * rows*cols)*
//! str := len u32, utf-8 bytes
//! ```

use super::{NumericError, ParamStore, Tensor};

const MAGIC: &[u8; 4] = b"RVCK";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub seed: u64,
    /// Free-form key/value block (hyperparameters, vocabulary, ...).
    pub meta: Vec<(String, String)>,
    pub params: ParamStore,
}

fn err(msg: impl Into<String>) -> NumericError {
    NumericError::Checkpoint(msg.into())
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NumericError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| err("truncated"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, NumericError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, NumericError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn str(&mut self) -> Result<String, NumericError> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| err("invalid utf-8"))
    }
}

impl Checkpoint {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&(self.meta.len() as u32).to_le_bytes());
        for (k, v) in &self.meta {
            put_str(&mut out, k);
            put_str(&mut out, v);
        }
        out.extend_from_slice(&(self.params.len() as u32).to_le_bytes());
        for (name, t) in self.params.named() {
            put_str(&mut out, name);
            out.extend_from_slice(&(t.rows() as u64).to_le_bytes());
            out.extend_from_slice(&(t.cols() as u64).to_le_bytes());
            for x in t.data() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, NumericError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(err("bad magic"));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(err(format!("unsupported version {version}")));
        }
        let seed = r.u64()?;
        let n_meta = r.u32()?;
        let mut meta = Vec::new();
        for _ in 0..n_meta {
            meta.push((r.str()?, r.str()?));
        }
        let n_params = r.u32()?;
        let mut params = ParamStore::new();
        for _ in 0..n_params {
            let name = r.str()?;
            let rows = r.u64()? as usize;
            let cols = r.u64()? as usize;
            let len = rows
                .checked_mul(cols)
                .ok_or_else(|| err("shape overflow"))?;
            let raw = r.take(len.checked_mul(8).ok_or_else(|| err("shape overflow"))?)?;
            let data = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            if params.id(&name).is_some() {
                return Err(err(format!("duplicate parameter `{name}`")));
            }
            params.add(&name, Tensor::new(rows, cols, data));
        }
        if r.pos != bytes.len() {
            return Err(err("trailing bytes"));
        }
        Ok(Checkpoint { seed, meta, params })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        let mut params = ParamStore::new();
        params.add(
            "a",
            Tensor::new(2, 2, vec![1.0, -0.0, f64::MIN_POSITIVE, 1e300]),
        );
        params.add("b", Tensor::row(vec![0.1]));
        Checkpoint {
            seed: 42,
            meta: vec![
                ("k".into(), "16".into()),
                ("vocab".into(), "on,clear".into()),
            ],
            params,
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let c = sample();
        let bytes = c.to_bytes();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back.to_bytes(), bytes);
        assert_eq!(back.meta("k"), Some("16"));
        let a = back.params.value(back.params.id("a").unwrap());
        assert_eq!(a.data()[1].to_bits(), (-0.0f64).to_bits());
    }

    #[test]
    fn corruption_is_reported() {
        let bytes = sample().to_bytes();
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(Checkpoint::from_bytes(&bad).is_err());
    }
}
