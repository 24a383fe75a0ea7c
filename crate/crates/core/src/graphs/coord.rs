use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use std::fmt;

/// Coordinates of a vertex: a tuple of integers (lattice, cycle or horocycle
/// axes) followed by a finite address word (tree-based families).
///
/// The derived ordering agrees with the lexicographic ordering of
/// [`VertexCoord::key_bytes`], so sorting coordinates or sorting their byte
/// keys gives the same order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexCoord {
    pub ints: SmallVec<[i64; 4]>,
    pub word: SmallVec<[u8; 16]>,
}

impl VertexCoord {
    pub fn from_ints(ints: &[i64]) -> Self {
        VertexCoord { ints: SmallVec::from_slice(ints), word: SmallVec::new() }
    }

    pub fn new(ints: &[i64], word: &[u8]) -> Self {
        VertexCoord { ints: SmallVec::from_slice(ints), word: SmallVec::from_slice(word) }
    }

    /// Order-preserving byte encoding: each integer as 8 big-endian bytes with
    /// the sign bit flipped, then the raw word. Within one family instance the
    /// number of integers is fixed, which makes the encoding injective.
    pub fn key_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.ints.len() * 8 + self.word.len());
        for &x in &self.ints {
            out.extend_from_slice(&((x as u64) ^ (1 << 63)).to_be_bytes());
        }
        out.extend_from_slice(&self.word);
        out
    }

    /// Inverse of [`key_bytes`](Self::key_bytes) given the number of integers.
    pub fn from_key_bytes(bytes: &[u8], n_ints: usize) -> Option<Self> {
        if bytes.len() < n_ints * 8 {
            return None;
        }
        let mut ints = SmallVec::new();
        for i in 0..n_ints {
            let mut buf = [0u8; 8];
            buf.copy_from_slice(&bytes[i * 8..i * 8 + 8]);
            ints.push((u64::from_be_bytes(buf) ^ (1 << 63)) as i64);
        }
        Some(VertexCoord { ints, word: SmallVec::from_slice(&bytes[n_ints * 8..]) })
    }

    #[inline]
    pub(crate) fn absorb_into(&self, prf: &mut crate::rng::Prf) {
        prf.absorb(self.ints.len() as u64);
        for &x in &self.ints {
            prf.absorb(x as u64);
        }
        prf.absorb_bytes(&self.word);
    }
}

impl fmt::Display for VertexCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.ints.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        if !self.word.is_empty() || self.ints.is_empty() {
            if !self.ints.is_empty() {
                write!(f, ";")?;
            }
            for (i, a) in self.word.iter().enumerate() {
                if i > 0 {
                    write!(f, ".")?;
                }
                write!(f, "{a}")?;
            }
        }
        write!(f, ")")
    }
}

/// Unordered edge, endpoints stored in increasing order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeId {
    pub lo: VertexCoord,
    pub hi: VertexCoord,
}

impl EdgeId {
    pub fn new(u: VertexCoord, v: VertexCoord) -> Self {
        if u <= v {
            EdgeId { lo: u, hi: v }
        } else {
            EdgeId { lo: v, hi: u }
        }
    }

    pub fn key_bytes(&self) -> Vec<u8> {
        let mut out = self.lo.key_bytes();
        out.push(b'|');
        out.extend(self.hi.key_bytes());
        out
    }

    pub fn other(&self, v: &VertexCoord) -> Option<&VertexCoord> {
        if &self.lo == v {
            Some(&self.hi)
        } else if &self.hi == v {
            Some(&self.lo)
        } else {
            None
        }
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.lo, self.hi)
    }
}
