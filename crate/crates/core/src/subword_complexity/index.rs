//! Distinct-factor queries over one sequence for many window lengths.
//!
//! When `k_max` symbols fit in 64 bits every position gets a packed code of
//! the next `k_max` symbols (stored as `symbol + 1`, with `0` padding past the
//! end, most significant first). After sorting, windows sharing a length-`k`
//! prefix are contiguous, so every `k ≤ k_max` is answered from one sort.
//! Otherwise windows are deduplicated per `k` by a rolling hash, with slice
//! comparison against stored exemplars to rule out collisions.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::certified_eval::Residue;
use crate::error::{Error, Result};

pub struct WindowIndex<'a> {
    seq: &'a [Residue],
    k_max: usize,
    packed: Option<Packed>,
}

struct Packed {
    /// `(code, position)` sorted.
    entries: Vec<(u64, u32)>,
    /// `lcp[i]`: common prefix length (in symbols) of entries `i-1` and `i`.
    lcp: Vec<u8>,
}

impl<'a> WindowIndex<'a> {
    pub fn build(seq: &'a [Residue], m: u64, k_max: usize) -> Result<Self> {
        if k_max == 0 {
            return Err(Error::ZeroBlockLength);
        }
        if seq.len() < k_max {
            return Err(Error::WindowTooShort { len: seq.len(), k: k_max });
        }
        if let Some(index) = seq.iter().position(|&s| u64::from(s) >= m) {
            return Err(Error::SymbolOutOfRange {
                index,
                symbol: seq[index],
                m,
            });
        }
        let bits = 64 - m.leading_zeros();
        let packed = (u64::from(bits) * k_max as u64 <= 64 && seq.len() <= u32::MAX as usize)
            .then(|| Packed::build(seq, bits, k_max));
        Ok(WindowIndex { seq, k_max, packed })
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn is_packed(&self) -> bool {
        self.packed.is_some()
    }

    /// Number of distinct windows of each length `1..=k_max`.
    pub fn complexities(&self) -> Vec<u64> {
        match &self.packed {
            Some(p) => {
                let mut hist = vec![0u64; self.k_max + 1];
                for &l in &p.lcp[1..] {
                    hist[l as usize] += 1;
                }
                let len = self.seq.len() as u64;
                let mut below = 0u64;
                (1..=self.k_max)
                    .map(|k| {
                        below += hist[k - 1];
                        // Distinct prefixes, minus the k-1 that run off the end.
                        1 + below - (k as u64 - 1).min(len)
                    })
                    .collect()
            }
            None => (1..=self.k_max)
                .map(|k| hashed_first_positions(self.seq, k).len() as u64)
                .collect(),
        }
    }

    /// First-occurrence position of every distinct length-`k` window.
    pub fn first_positions(&self, k: usize) -> Vec<u32> {
        assert!(k >= 1 && k <= self.k_max);
        let Some(p) = &self.packed else {
            return hashed_first_positions(self.seq, k);
        };
        let last_start = self.seq.len() - k;
        let mut out = Vec::new();
        let mut best = u32::MAX;
        for (i, &(_, pos)) in p.entries.iter().enumerate() {
            if i > 0 && (p.lcp[i] as usize) < k {
                if best != u32::MAX {
                    out.push(best);
                }
                best = u32::MAX;
            }
            // Windows running off the end form singleton groups; skip them.
            if pos as usize <= last_start {
                best = best.min(pos);
            }
        }
        if best != u32::MAX {
            out.push(best);
        }
        out
    }
}

impl Packed {
    fn build(seq: &[Residue], bits: u32, k: usize) -> Packed {
        let width = bits * k as u32;
        let mask = if width == 64 { u64::MAX } else { (1u64 << width) - 1 };
        let sym = |i: usize| seq.get(i).map_or(0, |&s| u64::from(s) + 1);
        const CHUNK: usize = 1 << 16;
        let mut entries: Vec<(u64, u32)> = vec![(0, 0); seq.len()];
        entries
            .par_chunks_mut(CHUNK)
            .enumerate()
            .for_each(|(c, out)| {
                let start = c * CHUNK;
                let mut code = 0u64;
                for j in 0..k - 1 {
                    code = (code << bits) | sym(start + j);
                }
                for (i, slot) in out.iter_mut().enumerate() {
                    code = ((code << bits) | sym(start + i + k - 1)) & mask;
                    *slot = (code, (start + i) as u32);
                }
            });
        entries.par_sort_unstable();
        let shift = 64 - width;
        let mut lcp = vec![0u8; entries.len()];
        lcp.par_iter_mut().enumerate().skip(1).for_each(|(i, l)| {
            let x = entries[i - 1].0 ^ entries[i].0;
            *l = if x == 0 {
                k as u8
            } else {
                ((x << shift).leading_zeros() / bits) as u8
            };
        });
        Packed { entries, lcp }
    }
}

/// Rolling-hash deduplication of the length-`k` windows, in order of first
/// occurrence.
fn hashed_first_positions(seq: &[Residue], k: usize) -> Vec<u32> {
    const BASE: u64 = 0x100000001b3;
    let windows = seq.len() + 1 - k;
    let pow = (0..k).fold(1u64, |a, _| a.wrapping_mul(BASE));
    let mut h = 0u64;
    let mut buckets: HashMap<u64, Vec<u32>> = HashMap::new();
    let mut out = Vec::new();
    for (i, &s) in seq.iter().enumerate() {
        h = h.wrapping_mul(BASE).wrapping_add(u64::from(s) + 1);
        if i >= k {
            h = h.wrapping_sub(pow.wrapping_mul(u64::from(seq[i - k]) + 1));
        }
        if i + 1 < k {
            continue;
        }
        let start = i + 1 - k;
        if start >= windows {
            break;
        }
        let reps = buckets.entry(h).or_default();
        let w = &seq[start..start + k];
        if !reps.iter().any(|&r| &seq[r as usize..r as usize + k] == w) {
            reps.push(start as u32);
            out.push(start as u32);
        }
    }
    out
}
