use std::fs;
use std::path::Path;

use super::Tensor;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"KPPARAM1";

/// Index of a parameter inside its [`ParamStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub usize);

#[derive(Clone, Debug, PartialEq)]
struct Param {
    name: String,
    value: Tensor,
    grad: Tensor,
}

/// Named parameters in insertion order, each with a gradient buffer of the
/// same shape.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    params: Vec<Param>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a parameter. Names must be unique.
    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        let name = name.into();
        assert!(self.id(&name).is_none(), "duplicate parameter {name}");
        let grad = Tensor::zeros(value.shape());
        self.params.push(Param { name, value, grad });
        ParamId(self.params.len() - 1)
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.params[id.0].name
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.params[id.0].value
    }

    pub fn grad(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].grad
    }

    /// Total number of scalar parameters.
    pub fn scalar_count(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    /// Euclidean norm over all parameter values.
    pub fn norm(&self) -> f64 {
        self.params.iter().map(|p| p.value.sum_squares()).sum::<f64>().sqrt()
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.fill(0.0);
        }
    }

    pub fn accumulate(&mut self, grads: &Gradients) {
        assert_eq!(grads.0.len(), self.params.len(), "gradient set from another store");
        for (p, g) in self.params.iter_mut().zip(&grads.0) {
            p.grad.add_assign(g);
        }
    }

    /// Sets every parameter value to `v`.
    pub fn fill(&mut self, v: f64) {
        for p in &mut self.params {
            p.value.fill(v);
        }
    }

    pub(crate) fn grads_mut(&mut self) -> impl Iterator<Item = (&mut Tensor, &Tensor)> {
        self.params.iter_mut().map(|p| (&mut p.value, &p.grad))
    }

    /// Binary encoding: magic, parameter count, then per parameter the name
    /// length, name bytes, rank, dims and little-endian `f64` values.
    pub fn encode(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&(self.params.len() as u64).to_le_bytes());
        for p in &self.params {
            buf.extend_from_slice(&(p.name.len() as u32).to_le_bytes());
            buf.extend_from_slice(p.name.as_bytes());
            buf.extend_from_slice(&(p.value.shape().len() as u32).to_le_bytes());
            for &d in p.value.shape() {
                buf.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for v in p.value.data() {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        buf
    }

    /// Decodes a store written by [`ParamStore::encode`]; returns it with the
    /// number of bytes consumed.
    pub fn decode(bytes: &[u8]) -> std::result::Result<(ParamStore, usize), String> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err("bad parameter magic".into());
        }
        let count = r.u64()? as usize;
        let mut store = ParamStore::new();
        for _ in 0..count {
            let len = r.u32()? as usize;
            let name = String::from_utf8(r.take(len)?.to_vec()).map_err(|_| "parameter name is not UTF-8")?;
            let rank = r.u32()? as usize;
            let shape = (0..rank)
                .map(|_| r.u64().map(|d| d as usize))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let n: usize = shape.iter().product();
            let data = (0..n).map(|_| r.f64()).collect::<std::result::Result<Vec<_>, _>>()?;
            if store.id(&name).is_some() {
                return Err(format!("duplicate parameter {name}"));
            }
            store.add(name, Tensor::new(shape, data));
        }
        Ok((store, r.pos))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ParamStore> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let (store, used) = ParamStore::decode(&bytes).map_err(|message| Error::Binary {
            path: path.to_path_buf(),
            message,
        })?;
        if used != bytes.len() {
            return Err(Error::Binary {
                path: path.to_path_buf(),
                message: "trailing bytes after parameters".into(),
            });
        }
        Ok(store)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or("truncated parameter data")?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> std::result::Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> std::result::Result<f64, String> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// One gradient tensor per parameter of a store, in store order.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients(pub(crate) Vec<Tensor>);

impl Gradients {
    pub fn zeros_like(store: &ParamStore) -> Self {
        Gradients(store.params.iter().map(|p| Tensor::zeros(p.value.shape())).collect())
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.0[id.0]
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            a.add_assign(b);
        }
    }

    pub fn scale(&mut self, f: f64) {
        self.0.iter_mut().for_each(|t| t.scale(f));
    }

    pub fn all_finite(&self) -> bool {
        self.0.iter().all(Tensor::all_finite)
    }

    /// Sums gradient sets in the given order.
    pub fn sum_ordered<I: IntoIterator<Item = Gradients>>(store: &ParamStore, items: I) -> Gradients {
        let mut total = Gradients::zeros_like(store);
        for g in items {
            total.add_assign(&g);
        }
        total
    }
}
