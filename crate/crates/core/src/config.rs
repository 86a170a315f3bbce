//! Bond configurations: sampling, hand construction and the `PERC1` file format.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lattice::{Lattice, LatticeSpec};
use crate::{par, rng};

const MAGIC: &[u8; 5] = b"PERC1";

/// Open/closed state of every edge of `B(n)`, in canonical edge order.
#[derive(Clone, Debug)]
pub struct BondConfiguration {
    spec: LatticeSpec,
    lattice: Arc<Lattice>,
    words: Vec<u64>,
}

impl PartialEq for BondConfiguration {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec && self.words == other.words
    }
}

/// Samples every edge independently: edge `e` is open iff
/// `uniform(seed, e) < p`. Raising `p` with the same seed only opens edges.
pub fn sample_configuration(spec: LatticeSpec) -> Result<BondConfiguration> {
    spec.validate()?;
    let lattice = Arc::new(Lattice::from_spec(&spec));
    Ok(sample_on(spec, lattice))
}

pub(crate) fn sample_on(spec: LatticeSpec, lattice: Arc<Lattice>) -> BondConfiguration {
    let edges = lattice.edge_count();
    let mut words = vec![0u64; edges.div_ceil(64)];
    const WORDS_PER_TASK: usize = 256;
    par::for_each_chunk_mut(&mut words, WORDS_PER_TASK, |chunk_idx, chunk| {
        for (k, word) in chunk.iter_mut().enumerate() {
            let base = (chunk_idx * WORDS_PER_TASK + k) * 64;
            let mut w = 0u64;
            for bit in 0..64 {
                let e = base + bit;
                if e < edges && rng::uniform(spec.seed, e as u64) < spec.p {
                    w |= 1 << bit;
                }
            }
            *word = w;
        }
    });
    BondConfiguration {
        spec,
        lattice,
        words,
    }
}

impl BondConfiguration {
    /// All edges closed.
    pub fn empty(spec: LatticeSpec) -> Result<Self> {
        spec.validate()?;
        let lattice = Arc::new(Lattice::from_spec(&spec));
        let words = vec![0u64; lattice.edge_count().div_ceil(64)];
        Ok(BondConfiguration {
            spec,
            lattice,
            words,
        })
    }

    /// All edges open.
    pub fn full(spec: LatticeSpec) -> Result<Self> {
        let mut cfg = Self::empty(spec)?;
        for e in 0..cfg.edge_count() {
            cfg.set(e, true);
        }
        Ok(cfg)
    }

    /// Builds a configuration whose open edges are exactly the listed
    /// nearest-neighbour pairs.
    pub fn from_open_pairs<'a, I>(spec: LatticeSpec, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a [i64], &'a [i64])>,
    {
        let mut cfg = Self::empty(spec)?;
        for (a, b) in pairs {
            cfg.set_pair(a, b, true)?;
        }
        Ok(cfg)
    }

    pub fn set_pair(&mut self, a: &[i64], b: &[i64], open: bool) -> Result<()> {
        let lat = &self.lattice;
        let (u, v) = match (lat.rank(a), lat.rank(b)) {
            (Some(u), Some(v)) => (u, v),
            _ => return Err(Error::Domain(format!("{a:?}-{b:?} leaves the box"))),
        };
        let e = lat
            .edge_between(u, v)
            .ok_or_else(|| Error::Domain(format!("{a:?} and {b:?} are not neighbours")))?;
        self.set(e, open);
        Ok(())
    }

    pub fn set(&mut self, e: usize, open: bool) {
        if open {
            self.words[e / 64] |= 1 << (e % 64);
        } else {
            self.words[e / 64] &= !(1 << (e % 64));
        }
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn lattice_arc(&self) -> Arc<Lattice> {
        Arc::clone(&self.lattice)
    }

    pub fn edge_count(&self) -> usize {
        self.lattice.edge_count()
    }

    #[inline]
    pub fn is_open(&self, e: usize) -> bool {
        self.words[e / 64] >> (e % 64) & 1 == 1
    }

    pub fn is_open_between(&self, u: usize, v: usize) -> bool {
        self.lattice
            .edge_between(u, v)
            .is_some_and(|e| self.is_open(e))
    }

    /// Neighbours of `v` across open edges.
    pub fn open_neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.lattice
            .neighbors(v)
            .filter(|&(_, e)| self.is_open(e))
            .map(|(w, _)| w)
    }

    pub fn open_degree(&self, v: usize) -> usize {
        self.open_neighbors(v).count()
    }

    pub fn open_count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn open_fraction(&self) -> f64 {
        self.open_count() as f64 / self.edge_count() as f64
    }

    /// Raw bitset, 64 edges per word, least significant bit first.
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.spec.d as u32).to_le_bytes())?;
        w.write_all(&(self.spec.n as u32).to_le_bytes())?;
        w.write_all(&self.spec.p.to_le_bytes())?;
        w.write_all(&self.spec.seed.to_le_bytes())?;
        let nbytes = self.edge_count().div_ceil(8);
        let bytes: Vec<u8> = self
            .words
            .iter()
            .flat_map(|w| w.to_le_bytes())
            .take(nbytes)
            .collect();
        w.write_all(&bytes)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 5];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("missing PERC1 magic".into()));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        let d = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b4)?;
        let n = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b8)?;
        let p = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let seed = u64::from_le_bytes(b8);
        let spec = LatticeSpec::new(d, n, p, seed)?;
        let mut cfg = Self::empty(spec)?;
        let edges = cfg.edge_count();
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != edges.div_ceil(8) {
            return Err(Error::Format(format!(
                "expected {} bitset bytes, found {}",
                edges.div_ceil(8),
                bytes.len()
            )));
        }
        for (i, chunk) in bytes.chunks(8).enumerate() {
            let mut word = [0u8; 8];
            word[..chunk.len()].copy_from_slice(chunk);
            cfg.words[i] = u64::from_le_bytes(word);
        }
        if edges % 64 != 0 && cfg.words.last().unwrap() >> (edges % 64) != 0 {
            return Err(Error::Format("nonzero padding bits".into()));
        }
        Ok(cfg)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn p_one_and_zero() {
        let full = sample_configuration(LatticeSpec::new(2, 1, 1.0, 9).unwrap()).unwrap();
        assert_eq!(full.open_count(), 12);
        let none = sample_configuration(LatticeSpec::new(2, 1, 0.0, 9).unwrap()).unwrap();
        assert_eq!(none.open_count(), 0);
    }

    #[test]
    fn deterministic_and_schedule_free() {
        let spec = LatticeSpec::new(3, 6, 0.4, 1234).unwrap();
        let a = sample_configuration(spec).unwrap();
        let b = par::sequential(|| sample_configuration(spec).unwrap());
        assert_eq!(a, b);
        let c = sample_configuration(spec.with_seed(1235)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn coupling_is_monotone() {
        let spec = LatticeSpec::new(2, 10, 0.3, 5).unwrap();
        let lo = sample_configuration(spec).unwrap();
        let hi = sample_configuration(spec.with_p(0.6)).unwrap();
        for e in 0..lo.edge_count() {
            assert!(!lo.is_open(e) || hi.is_open(e));
        }
    }

    #[test]
    fn rejects_bad_files() {
        assert!(BondConfiguration::read_from(&b"PERC2"[..]).is_err());
        let cfg = sample_configuration(LatticeSpec::new(2, 2, 0.5, 1).unwrap()).unwrap();
        let mut buf = Vec::new();
        cfg.write_to(&mut buf).unwrap();
        buf.push(0);
        assert!(BondConfiguration::read_from(&buf[..]).is_err());
        buf.pop();
        // 40 edges -> 5 bytes, no padding; use n = 1 (12 edges) for padding
        let cfg = BondConfiguration::empty(LatticeSpec::new(2, 1, 0.5, 1).unwrap()).unwrap();
        let mut buf = Vec::new();
        cfg.write_to(&mut buf).unwrap();
        *buf.last_mut().unwrap() = 0xF0;
        assert!(BondConfiguration::read_from(&buf[..]).is_err());
    }

    proptest! {
        #[test]
        fn file_roundtrip(d in 2usize..4, n in 1usize..4, p in 0.0f64..=1.0, seed: u64) {
            let cfg = sample_configuration(LatticeSpec::new(d, n, p, seed).unwrap()).unwrap();
            let mut buf = Vec::new();
            cfg.write_to(&mut buf).unwrap();
            prop_assert_eq!(buf.len(), 5 + 4 + 4 + 8 + 8 + cfg.edge_count().div_ceil(8));
            let back = BondConfiguration::read_from(&buf[..]).unwrap();
            prop_assert_eq!(back, cfg);
        }
    }
}
