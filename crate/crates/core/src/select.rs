//! Randomized selection of order statistics in expected linear time.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Seed used when callers do not supply their own generator.
pub const DEFAULT_SEED: u64 = 0x5eed_0f5e_1ec7;

/// The `rank`-th smallest value (one-based) of `values`. The input is not
/// reordered; selection runs on a scratch copy.
pub fn kth_smallest(values: &[u32], rank: usize) -> Result<u32> {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    kth_smallest_with(values, rank, &mut rng)
}

pub fn kth_smallest_with<R: Rng + ?Sized>(values: &[u32], rank: usize, rng: &mut R) -> Result<u32> {
    if rank == 0 || rank > values.len() {
        return Err(Error::invalid(format!("rank {rank} outside 1..={}", values.len())));
    }
    let mut scratch = values.to_vec();
    Ok(select_in_place(&mut scratch, rank - 1, rng))
}

/// Quickselect with a three-way partition around a random pivot, so runs
/// of equal values (all-zero demand, for instance) cost linear time.
/// `index` is zero-based; `buf` is permuted.
pub(crate) fn select_in_place<R: Rng + ?Sized>(buf: &mut [u32], index: usize, rng: &mut R) -> u32 {
    debug_assert!(index < buf.len());
    let mut lo = 0;
    let mut hi = buf.len();
    let mut index = index;
    loop {
        let part = &mut buf[lo..hi];
        if part.len() == 1 {
            return part[0];
        }
        let pivot = part[rng.random_range(0..part.len())];
        // [0, lt) < pivot, [lt, i) == pivot, (gt, len) > pivot
        let (mut lt, mut i, mut gt) = (0, 0, part.len());
        while i < gt {
            if part[i] < pivot {
                part.swap(lt, i);
                lt += 1;
                i += 1;
            } else if part[i] > pivot {
                gt -= 1;
                part.swap(i, gt);
            } else {
                i += 1;
            }
        }
        if index < lt {
            hi = lo + lt;
        } else if index < gt {
            return pivot;
        } else {
            index -= gt;
            lo += gt;
        }
    }
}
