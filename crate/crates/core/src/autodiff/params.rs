use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::{Graph, Tensor, Var};
use crate::hash::sha256_hex;
use crate::{Error, Result};

/// Ordered collection of named parameter tensors.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    entries: Vec<(String, Tensor)>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Replaces an existing entry of the same name.
    pub fn insert(&mut self, name: &str, t: Tensor) {
        match self.position(name) {
            Some(i) => self.entries[i].1 = t,
            None => self.entries.push((name.to_string(), t)),
        }
    }

    fn position(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|(n, _)| n == name)
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.position(name)
            .map(|i| &self.entries[i].1)
            .ok_or_else(|| Error::UnknownParam(name.to_string()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor> {
        match self.position(name) {
            Some(i) => Ok(&mut self.entries[i].1),
            None => Err(Error::UnknownParam(name.to_string())),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor)> {
        self.entries.iter_mut().map(|(n, t)| (n.as_str(), t))
    }

    pub fn num_values(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|(_, t)| t.is_finite())
    }

    /// Adds every tensor to `g` as a leaf, in insertion order.
    pub fn bind(&self, g: &mut Graph, trainable: bool) -> Vec<Var> {
        self.entries
            .iter()
            .map(|(_, t)| g.leaf(t.clone(), trainable))
            .collect()
    }

    /// The entry of `bound` (as returned by [`ParamSet::bind`]) that holds
    /// parameter `name`.
    pub fn bound_var(&self, bound: &[Var], name: &str) -> Result<Var> {
        self.position(name)
            .and_then(|i| bound.get(i).copied())
            .ok_or_else(|| Error::UnknownParam(name.to_string()))
    }

    /// Canonical little-endian encoding of names, shapes and values.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.num_values() * 8 + 64);
        for (name, t) in &self.entries {
            out.extend_from_slice(&(name.len() as u64).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(t.shape().len() as u64).to_le_bytes());
            for &d in t.shape() {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for &x in t.data() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn fingerprint(&self) -> String {
        sha256_hex(&self.to_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn fingerprint_tracks_values() {
        let mut p = ParamSet::new();
        p.insert("w", Tensor::vector(vec![1.0, 2.0]));
        let a = p.fingerprint();
        p.get_mut("w").unwrap().data_mut()[1] = 2.0 + 1e-15;
        assert_ne!(a, p.fingerprint());
        assert!(p.get("missing").is_err());
    }
}
