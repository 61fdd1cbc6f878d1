//! Persistent source of uniform random reals.
//!
//! A [`LambdaFile`] is a fixed sequence of 64-bit words. Streams read words
//! sequentially and map each to a real in `[0,1)`. Any stream can be split
//! into fixed-size blocks: substream `i` owns words `[i*B, (i+1)*B)` of its
//! parent, so the values of a substream depend only on the source and the
//! index, never on what else has been read.
//!
//! Binary layout (all integers little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "LMDA"
//! 4       1     version (1)
//! 5       8     word count
//! 13      8     generator seed the payload was produced from
//! 21      8*n   payload words
//! ```

use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"LMDA";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 4 + 1 + 8 + 8;
pub const DEFAULT_BLOCK: u64 = 64;

/// Maps a word to `[0,1)` using its top 53 bits, so `2^63` maps to `0.5`
/// exactly and `u64::MAX` stays below 1.
pub fn word_to_real(w: u64) -> f64 {
    (w >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// The word at `index` of the generator seeded with `seed`.
fn generator_at(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos(2 * index as u128);
    rng
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LambdaFile {
    seed: u64,
    words: Vec<u64>,
}

impl LambdaFile {
    /// Deterministic in `(seed, count)`; word `i` equals word `i` of
    /// `LambdaSource::generator(seed, _)`.
    pub fn generate(seed: u64, count: u64) -> Result<Self> {
        if count == 0 {
            return Err(Error::EmptyLambdaFile);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let words = (0..count).map(|_| rng.next_u64()).collect();
        Ok(LambdaFile { seed, words })
    }

    /// Wraps explicit words. `seed` is recorded as provenance only.
    pub fn from_words(seed: u64, words: Vec<u64>) -> Result<Self> {
        if words.is_empty() {
            return Err(Error::EmptyLambdaFile);
        }
        Ok(LambdaFile { seed, words })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn len(&self) -> u64 {
        self.words.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * self.words.len());
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&(self.words.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        for w in &self.words {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::MalformedLambdaFile(format!(
                "{} bytes is shorter than the {HEADER_LEN}-byte header",
                bytes.len()
            )));
        }
        if &bytes[0..4] != MAGIC {
            return Err(Error::MalformedLambdaFile("bad magic".into()));
        }
        if bytes[4] != VERSION {
            return Err(Error::MalformedLambdaFile(format!("unsupported version {}", bytes[4])));
        }
        let le = |s: &[u8]| u64::from_le_bytes(s.try_into().expect("8-byte slice"));
        let count = le(&bytes[5..13]);
        let seed = le(&bytes[13..21]);
        let payload = &bytes[HEADER_LEN..];
        if payload.len() as u64 != count.saturating_mul(8) {
            return Err(Error::MalformedLambdaFile(format!(
                "header declares {count} words but payload holds {} bytes",
                payload.len()
            )));
        }
        if count == 0 {
            return Err(Error::EmptyLambdaFile);
        }
        let words = payload.chunks_exact(8).map(le).collect();
        Ok(LambdaFile { seed, words })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        LambdaFile::from_bytes(&fs::read(path)?)
    }
}

#[derive(Clone, Debug)]
enum Backing {
    File(Arc<LambdaFile>),
    Generator { seed: u64, capacity: u64 },
}

/// A shareable, immutable origin of words: a loaded file, or the generator a
/// file would have been produced from.
#[derive(Clone, Debug)]
pub struct LambdaSource {
    backing: Backing,
    block: u64,
}

impl LambdaSource {
    pub fn file(file: LambdaFile) -> Self {
        LambdaSource {
            backing: Backing::File(Arc::new(file)),
            block: DEFAULT_BLOCK,
        }
    }

    /// Generator-backed source holding `capacity` words.
    pub fn generator(seed: u64, capacity: u64) -> Self {
        LambdaSource {
            backing: Backing::Generator { seed, capacity },
            block: DEFAULT_BLOCK,
        }
    }

    pub fn with_block_size(mut self, block: u64) -> Result<Self> {
        if block == 0 {
            return Err(Error::Parameter("block size must be positive".into()));
        }
        self.block = block;
        Ok(self)
    }

    pub fn block_size(&self) -> u64 {
        self.block
    }

    pub fn capacity(&self) -> u64 {
        match &self.backing {
            Backing::File(f) => f.len(),
            Backing::Generator { capacity, .. } => *capacity,
        }
    }

    fn name(&self) -> String {
        match &self.backing {
            Backing::File(f) => format!("file(seed={})", f.seed()),
            Backing::Generator { seed, .. } => format!("gen(seed={seed})"),
        }
    }

    /// A stream over every word of the source.
    pub fn stream(&self) -> LambdaStream {
        LambdaStream::new(self.clone(), 0, self.capacity(), self.name())
    }

    /// Shorthand for `self.stream().split(index)`.
    pub fn split(&self, index: u64) -> Result<LambdaStream> {
        self.stream().split(index)
    }
}

/// Single-owner cursor over a contiguous range of a [`LambdaSource`].
#[derive(Clone, Debug)]
pub struct LambdaStream {
    source: LambdaSource,
    start: u64,
    end: u64,
    cursor: u64,
    label: String,
    rng: Option<ChaCha8Rng>,
}

impl LambdaStream {
    fn new(source: LambdaSource, start: u64, end: u64, label: String) -> Self {
        LambdaStream {
            source,
            start,
            end,
            cursor: start,
            label,
            rng: None,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Values read since construction or the last rewind.
    pub fn consumed(&self) -> u64 {
        self.cursor - self.start
    }

    pub fn remaining(&self) -> u64 {
        self.end - self.cursor
    }

    /// Absolute word range `[start, end)` within the source.
    pub fn range(&self) -> (u64, u64) {
        (self.start, self.end)
    }

    pub fn rewind(&mut self) {
        self.cursor = self.start;
        self.rng = None;
    }

    pub fn next_word(&mut self) -> Result<u64> {
        if self.cursor >= self.end {
            return Err(Error::StreamExhausted {
                label: self.label.clone(),
                consumed: self.consumed(),
            });
        }
        let w = match &self.source.backing {
            Backing::File(f) => f.words()[self.cursor as usize],
            Backing::Generator { seed, .. } => {
                let cursor = self.cursor;
                self.rng.get_or_insert_with(|| generator_at(*seed, cursor)).next_u64()
            }
        };
        self.cursor += 1;
        Ok(w)
    }

    /// Next value in `[0,1)`. Never wraps around.
    pub fn next_real(&mut self) -> Result<f64> {
        self.next_word().map(word_to_real)
    }

    /// Block `index` of this stream's range, independent of the cursor.
    pub fn split(&self, index: u64) -> Result<LambdaStream> {
        let block = self.source.block;
        let capacity = self.end - self.start;
        let lo = index.checked_mul(block);
        let hi = index.checked_add(1).and_then(|k| k.checked_mul(block));
        match (lo, hi) {
            (Some(lo), Some(hi)) if hi <= capacity => Ok(LambdaStream::new(
                self.source.clone(),
                self.start + lo,
                self.start + hi,
                format!("{}/{}", self.label, index),
            )),
            _ => Err(Error::Capacity { index, capacity }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic_and_seed_sensitive() {
        let a = LambdaFile::generate(1, 10).unwrap();
        let b = LambdaFile::generate(1, 10).unwrap();
        let c = LambdaFile::generate(2, 10).unwrap();
        assert_eq!(a.to_bytes(), b.to_bytes());
        assert_ne!(a.words(), c.words());
        assert_eq!(LambdaFile::generate(1, 0), Err(Error::EmptyLambdaFile));
    }

    #[test]
    fn header_layout() {
        let f = LambdaFile::from_words(9, vec![1, 2]).unwrap();
        let bytes = f.to_bytes();
        assert_eq!(&bytes[..4], b"LMDA");
        assert_eq!(bytes[4], 1);
        assert_eq!(&bytes[5..13], &2u64.to_le_bytes());
        assert_eq!(&bytes[13..21], &9u64.to_le_bytes());
        assert_eq!(&bytes[21..29], &1u64.to_le_bytes());
        assert_eq!(bytes.len(), 37);
        assert_eq!(LambdaFile::from_bytes(&bytes).unwrap(), f);
    }

    #[test]
    fn malformed_files_rejected() {
        let good = LambdaFile::from_words(0, vec![5]).unwrap().to_bytes();
        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            LambdaFile::from_bytes(&bad_magic),
            Err(Error::MalformedLambdaFile(_))
        ));
        assert!(LambdaFile::from_bytes(&good[..good.len() - 1]).is_err());
        assert!(LambdaFile::from_bytes(&good[..10]).is_err());
        let mut bad_version = good;
        bad_version[4] = 2;
        assert!(LambdaFile::from_bytes(&bad_version).is_err());
    }

    #[test]
    fn word_mapping_endpoints() {
        let mut s = LambdaSource::file(LambdaFile::from_words(0, vec![0, 1 << 63, u64::MAX]).unwrap()).stream();
        assert_eq!(s.next_real().unwrap(), 0.0);
        assert_eq!(s.next_real().unwrap(), 0.5);
        let top = s.next_real().unwrap();
        assert!(top < 1.0 && top > 0.999_999);
    }

    #[test]
    fn exhaustion_is_an_error() {
        let mut s = LambdaSource::file(LambdaFile::from_words(0, vec![7]).unwrap()).stream();
        s.next_real().unwrap();
        assert!(matches!(s.next_real(), Err(Error::StreamExhausted { consumed: 1, .. })));
        s.rewind();
        assert!(s.next_real().is_ok());
    }

    #[test]
    fn generator_matches_file_and_random_access() {
        let f = LambdaFile::generate(42, 300).unwrap();
        let src = LambdaSource::generator(42, 300);
        let mut s = src.stream();
        let seq: Vec<u64> = (0..300).map(|_| s.next_word().unwrap()).collect();
        assert_eq!(seq, f.words());
        let mut sub = src.split(3).unwrap();
        assert_eq!(sub.next_word().unwrap(), f.words()[192]);
        assert!(matches!(
            src.split(4),
            Err(Error::Capacity {
                index: 4,
                capacity: 300
            })
        ));
    }

    #[test]
    fn splits_are_disjoint_and_order_independent() {
        let src = LambdaSource::file(LambdaFile::generate(3, 640).unwrap());
        let read = |s: &mut LambdaStream| (0..5).map(|_| s.next_word().unwrap()).collect::<Vec<_>>();
        let root = src.stream();
        let (mut s5, mut s3) = (root.split(5).unwrap(), root.split(3).unwrap());
        let first = (read(&mut s5), read(&mut s3));
        let (mut t3, mut t5) = (root.split(3).unwrap(), root.split(5).unwrap());
        let second = (read(&mut t5), read(&mut t3));
        assert_eq!(first, second);
        let (a, b) = (s5.range(), s3.range());
        assert!(a.1 <= b.0 || b.1 <= a.0);
    }

    #[test]
    fn nested_split_is_relative_to_parent() {
        let src = LambdaSource::generator(1, 1 << 20).with_block_size(4).unwrap();
        let child = src.split(2).unwrap();
        assert_eq!(child.range(), (8, 12));
        let grandchild = child.split(0).unwrap();
        assert_eq!(grandchild.range(), (8, 12));
        assert!(child.split(1).is_err());
    }
}
