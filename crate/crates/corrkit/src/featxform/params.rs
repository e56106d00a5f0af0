//! Parameter blocks and their on-disk container.
//!
//! A [`ParamStore`] serializes to two artifacts: a JSON manifest listing
//! entry names, shapes, and element offsets, and a flat binary blob of
//! little-endian f64 values in manifest order. The pair round-trips bit for
//! bit.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense affine map `y = W x + b` with `W` stored row-major
/// (`out_dim x in_dim`).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    in_dim: usize,
    out_dim: usize,
    w: Vec<f64>,
    b: Vec<f64>,
}

impl LinearMap {
    pub fn new(in_dim: usize, out_dim: usize, w: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::Construction(format!(
                "linear map dimensions must be nonzero, got {out_dim}x{in_dim}"
            )));
        }
        if w.len() != in_dim * out_dim || b.len() != out_dim {
            return Err(Error::Construction(format!(
                "weight/bias lengths ({}, {}) do not match {out_dim}x{in_dim}",
                w.len(),
                b.len()
            )));
        }
        if w.iter().chain(b.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Construction(
                "linear map contains non-finite parameters".into(),
            ));
        }
        Ok(Self {
            in_dim,
            out_dim,
            w,
            b,
        })
    }

    /// Square identity map with zero bias.
    pub fn identity(dim: usize) -> Self {
        let mut w = vec![0.0; dim * dim];
        for i in 0..dim {
            w[i * dim + i] = 1.0;
        }
        Self::new(dim, dim, w, vec![0.0; dim]).unwrap()
    }

    /// Weights drawn uniformly from `+-sqrt(3 / in_dim)` (unit fan-in
    /// variance), zero bias. Consumes exactly one draw per weight, so layer
    /// order fixes the stream.
    pub fn seeded<R: Rng>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        let a = (3.0 / in_dim as f64).sqrt();
        let w = (0..in_dim * out_dim)
            .map(|_| rng.gen_range(-a..=a))
            .collect();
        Self::new(in_dim, out_dim, w, vec![0.0; out_dim]).unwrap()
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn bias(&self) -> &[f64] {
        &self.b
    }

    /// Applies the map into a caller-provided buffer of length `out_dim`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.in_dim);
        debug_assert_eq!(out.len(), self.out_dim);
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.w[i * self.in_dim..(i + 1) * self.in_dim];
            *o = self.b[i] + row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>();
        }
    }

    pub fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.out_dim];
        self.apply(x, &mut out);
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ManifestEntry {
    name: String,
    shape: Vec<usize>,
    /// Offset into the blob, in f64 elements.
    offset: usize,
    len: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    dtype: String,
    entries: Vec<ManifestEntry>,
}

/// Named, shaped f64 tensors, ordered by name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    entries: BTreeMap<String, (Vec<usize>, Vec<f64>)>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, shape: Vec<usize>, data: Vec<f64>) -> Result<()> {
        let n: usize = shape.iter().product();
        if shape.is_empty() || n != data.len() {
            return Err(Error::Construction(format!(
                "entry {name:?}: shape {shape:?} does not match {} elements",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Construction(format!(
                "entry {name:?} contains non-finite values"
            )));
        }
        if self.entries.contains_key(name) {
            return Err(Error::Construction(format!("duplicate entry {name:?}")));
        }
        self.entries.insert(name.to_string(), (shape, data));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<(&[usize], &[f64])> {
        self.entries
            .get(name)
            .map(|(shape, data)| (shape.as_slice(), data.as_slice()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Stores a linear map as `<prefix>.w` (shape `[out, in]`) and
    /// `<prefix>.b` (shape `[out]`).
    pub fn insert_linear(&mut self, prefix: &str, map: &LinearMap) -> Result<()> {
        self.insert(
            &format!("{prefix}.w"),
            vec![map.out_dim(), map.in_dim()],
            map.weights().to_vec(),
        )?;
        self.insert(
            &format!("{prefix}.b"),
            vec![map.out_dim()],
            map.bias().to_vec(),
        )
    }

    /// Reassembles a linear map stored by [`ParamStore::insert_linear`].
    pub fn linear(&self, prefix: &str) -> Result<LinearMap> {
        let (wshape, w) = self
            .get(&format!("{prefix}.w"))
            .ok_or_else(|| Error::InvalidArgument(format!("missing entry {prefix}.w")))?;
        let (_, b) = self
            .get(&format!("{prefix}.b"))
            .ok_or_else(|| Error::InvalidArgument(format!("missing entry {prefix}.b")))?;
        if wshape.len() != 2 {
            return Err(Error::InvalidArgument(format!(
                "entry {prefix}.w has shape {wshape:?}, expected rank 2"
            )));
        }
        LinearMap::new(wshape[1], wshape[0], w.to_vec(), b.to_vec())
    }

    /// Serializes to a JSON manifest plus a little-endian f64 blob.
    pub fn serialize(&self) -> (String, Vec<u8>) {
        let mut manifest = Manifest {
            dtype: "f64-le".into(),
            entries: Vec::with_capacity(self.entries.len()),
        };
        let mut blob = Vec::new();
        let mut offset = 0;
        for (name, (shape, data)) in &self.entries {
            manifest.entries.push(ManifestEntry {
                name: name.clone(),
                shape: shape.clone(),
                offset,
                len: data.len(),
            });
            for x in data {
                blob.extend_from_slice(&x.to_le_bytes());
            }
            offset += data.len();
        }
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        (text, blob)
    }

    /// Rebuilds a store from its manifest and blob.
    pub fn deserialize(manifest: &str, blob: &[u8]) -> Result<Self> {
        let manifest: Manifest = serde_json::from_str(manifest)
            .map_err(|e| Error::parse(e.line(), format!("manifest: {e}")))?;
        if manifest.dtype != "f64-le" {
            return Err(Error::parse(
                1,
                format!("unsupported dtype {:?}", manifest.dtype),
            ));
        }
        let mut store = Self::new();
        for e in &manifest.entries {
            let start = e.offset * 8;
            let end = start + e.len * 8;
            if end > blob.len() {
                return Err(Error::format(
                    blob.len(),
                    format!("entry {:?} extends past the blob", e.name),
                ));
            }
            let data = blob[start..end]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            store.insert(&e.name, e.shape.clone(), data)?;
        }
        Ok(store)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn identity_map_is_identity() {
        let m = LinearMap::identity(3);
        assert_eq!(m.apply_vec(&[1.0, -2.0, 0.5]), vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn apply_matches_manual_product() {
        let m = LinearMap::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], vec![0.1, 0.2, 0.3])
            .unwrap();
        let y = m.apply_vec(&[10.0, 1.0]);
        assert_eq!(y, vec![12.1, 34.2, 56.3]);
    }

    #[test]
    fn seeded_maps_are_deterministic() {
        let mut r1 = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut r2 = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        assert_eq!(LinearMap::seeded(4, 6, &mut r1), LinearMap::seeded(4, 6, &mut r2));
    }

    #[test]
    fn store_round_trip_is_bit_exact() {
        let mut store = ParamStore::new();
        store
            .insert("alpha", vec![2, 2], vec![1.0, -2.5, 3.25, 1e-300])
            .unwrap();
        store
            .insert_linear("proj", &LinearMap::identity(3))
            .unwrap();
        let (manifest, blob) = store.serialize();
        let back = ParamStore::deserialize(&manifest, &blob).unwrap();
        assert_eq!(back, store);
        let lin = back.linear("proj").unwrap();
        assert_eq!(lin, LinearMap::identity(3));
    }

    #[test]
    fn malformed_containers_rejected() {
        assert!(ParamStore::deserialize("not json", &[]).is_err());
        let (manifest, blob) = {
            let mut s = ParamStore::new();
            s.insert("x", vec![2], vec![1.0, 2.0]).unwrap();
            s.serialize()
        };
        assert!(ParamStore::deserialize(&manifest, &blob[..8]).is_err());
        let mut s = ParamStore::new();
        s.insert("x", vec![1], vec![0.0]).unwrap();
        assert!(s.insert("x", vec![1], vec![0.0]).is_err());
        assert!(s.insert("y", vec![2], vec![0.0]).is_err());
    }
}
