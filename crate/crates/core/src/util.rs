//! Stable hashing and a small fixed-length bitset.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a. Stable across runs, platforms and compiler versions.
pub fn stable_hash(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Sixteen lowercase hex digits of [`stable_hash`].
pub fn hash16(text: &str) -> String {
    format!("{:016x}", stable_hash(text.as_bytes()))
}

/// Derive a seed from a base seed and a list of string parts.
pub fn mix_seed<S: AsRef<str>>(seed: u64, parts: &[S]) -> u64 {
    let mut buf = seed.to_le_bytes().to_vec();
    for p in parts {
        buf.push(0x1f);
        buf.extend_from_slice(p.as_ref().as_bytes());
    }
    // splitmix finalizer on top of FNV so that nearby seeds diverge
    let mut z = stable_hash(&buf).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct BitSet {
    words: Vec<u64>,
    len: usize,
}

impl BitSet {
    pub fn new(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        let (w, b) = (i / 64, i % 64);
        if value {
            self.words[w] |= 1 << b;
        } else {
            self.words[w] &= !(1 << b);
        }
    }

    pub fn get(&self, i: usize) -> bool {
        i < self.len && self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn intersection_count(&self, other: &BitSet) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn union_count(&self, other: &BitSet) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a | b).count_ones() as usize)
            .sum()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }

    /// Jaccard index of two equal-length sets; two empty sets are identical.
    pub fn jaccard(&self, other: &BitSet) -> f64 {
        debug_assert_eq!(self.len, other.len);
        let union = self.union_count(other);
        if union == 0 {
            1.0
        } else {
            self.intersection_count(other) as f64 / union as f64
        }
    }
}
