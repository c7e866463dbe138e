//! Stream compaction of the candidate mask.
//!
//! The inclusive prefix sum is computed in three levels:
//!
//! 1. every 256-element tile is scanned on its own,
//! 2. tile totals are scanned within each group of 32 tiles (8192 elements),
//! 3. group totals are scanned sequentially,
//!
//! and a final downsweep adds the group and tile offsets back into each
//! element. All sums are exact 64-bit integers.

use rayon::prelude::*;
use thiserror::Error;

use crate::cloud::PointCloud;
use crate::geom::Point3;
use crate::raycast::CandidateMask;

pub const TILE_SIZE: usize = 256;
pub const TILES_PER_GROUP: usize = 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CompactError {
    #[error("mask length {mask} does not match cloud length {cloud}")]
    LengthMismatch { mask: usize, cloud: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScanConfig {
    pub tile_size: usize,
    pub tiles_per_group: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            tile_size: TILE_SIZE,
            tiles_per_group: TILES_PER_GROUP,
        }
    }
}

impl ScanConfig {
    pub fn group_size(&self) -> usize {
        self.tile_size * self.tiles_per_group
    }
}

/// Partial sums kept by the hierarchical scan.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ScanTree {
    pub tile_sums: Vec<u64>,
    /// Exclusive scan of `tile_sums` restarted at every group boundary.
    pub tile_offsets: Vec<u64>,
    pub group_sums: Vec<u64>,
    /// Inclusive scan of `group_sums`.
    pub group_prefix: Vec<u64>,
}

pub fn hierarchical_scan(flags: &[u8]) -> Vec<u64> {
    hierarchical_scan_with(flags, ScanConfig::default()).0
}

/// Levels 1 to 3: tile totals, their offsets within each group, and the
/// group totals and their inclusive scan.
pub fn scan_tree(flags: &[u8], cfg: ScanConfig) -> ScanTree {
    let tile = cfg.tile_size.max(1);
    let per_group = cfg.tiles_per_group.max(1);
    let tile_sums: Vec<u64> = flags.par_chunks(tile).map(|src| src.iter().map(|&s| s as u64).sum()).collect();
    let (tile_offsets, group_sums): (Vec<Vec<u64>>, Vec<u64>) = tile_sums
        .par_chunks(per_group)
        .map(|sums| {
            let mut acc = 0u64;
            let offsets = sums
                .iter()
                .map(|&s| {
                    let before = acc;
                    acc += s;
                    before
                })
                .collect();
            (offsets, acc)
        })
        .unzip();
    let tile_offsets: Vec<u64> = tile_offsets.into_iter().flatten().collect();
    let group_prefix: Vec<u64> = group_sums
        .iter()
        .scan(0u64, |acc, &s| {
            *acc += s;
            Some(*acc)
        })
        .collect();
    ScanTree {
        tile_sums,
        tile_offsets,
        group_sums,
        group_prefix,
    }
}

impl ScanTree {
    /// Number of flags before tile `t`.
    #[inline]
    pub fn tile_base(&self, t: usize, tiles_per_group: usize) -> u64 {
        let g = t / tiles_per_group.max(1);
        self.group_prefix[g] - self.group_sums[g] + self.tile_offsets[t]
    }

    pub fn total(&self) -> u64 {
        self.group_prefix.last().copied().unwrap_or(0)
    }
}

/// Inclusive prefix sum of `flags` plus the intermediate tree.
pub fn hierarchical_scan_with(flags: &[u8], cfg: ScanConfig) -> (Vec<u64>, ScanTree) {
    let tile = cfg.tile_size.max(1);
    let mut out = vec![0u64; flags.len()];
    if flags.is_empty() {
        return (out, ScanTree::default());
    }
    let tree = scan_tree(flags, cfg);
    // level 4: downsweep, each tile rescanned from its base
    out.par_chunks_mut(tile).zip(flags.par_chunks(tile)).enumerate().for_each(|(t, (dst, src))| {
        let mut acc = tree.tile_base(t, cfg.tiles_per_group);
        for (d, &s) in dst.iter_mut().zip(src) {
            acc += s as u64;
            *d = acc;
        }
    });
    (out, tree)
}

/// Splits `out` into one slice per tile, sized by the tile totals.
fn tile_slices<'a, T>(mut rest: &'a mut [T], tree: &ScanTree) -> Vec<&'a mut [T]> {
    let mut slices = Vec::with_capacity(tree.tile_sums.len());
    for &count in &tree.tile_sums {
        let (head, tail) = rest.split_at_mut(count as usize);
        slices.push(head);
        rest = tail;
    }
    slices
}

/// Stable selection of the flagged elements: element `i` with flag 1 goes
/// to `scan[i] - 1`. The downsweep is fused into the scatter, so each tile
/// counts from its base instead of reading a materialized scan.
pub fn compact_with<T: Copy + Default + Send + Sync>(items: &[T], mask: &CandidateMask) -> Result<Vec<T>, CompactError> {
    check_len(items.len(), mask)?;
    let tree = scan_tree(&mask.flags, ScanConfig::default());
    let mut out = vec![T::default(); tree.total() as usize];
    tile_slices(&mut out, &tree)
        .into_par_iter()
        .zip(items.par_chunks(TILE_SIZE))
        .zip(mask.flags.par_chunks(TILE_SIZE))
        .for_each(|((dst, src), flags)| {
            let mut k = 0;
            for (&item, &flag) in src.iter().zip(flags) {
                if flag == 1 {
                    dst[k] = item;
                    k += 1;
                }
            }
        });
    Ok(out)
}

/// Compacted points together with their original indices, in one pass.
pub fn compact_points_indexed(points: &[Point3], mask: &CandidateMask) -> Result<(Vec<Point3>, Vec<usize>), CompactError> {
    check_len(points.len(), mask)?;
    let tree = scan_tree(&mask.flags, ScanConfig::default());
    let total = tree.total() as usize;
    let mut out = vec![Point3::default(); total];
    let mut idx = vec![0usize; total];
    tile_slices(&mut out, &tree)
        .into_par_iter()
        .zip(tile_slices(&mut idx, &tree))
        .zip(points.par_chunks(TILE_SIZE))
        .zip(mask.flags.par_chunks(TILE_SIZE))
        .enumerate()
        .for_each(|(t, (((dst, dst_idx), src), flags))| {
            let mut k = 0;
            for (i, (&p, &flag)) in src.iter().zip(flags).enumerate() {
                if flag == 1 {
                    dst[k] = p;
                    dst_idx[k] = t * TILE_SIZE + i;
                    k += 1;
                }
            }
        });
    Ok((out, idx))
}

fn check_len(items: usize, mask: &CandidateMask) -> Result<(), CompactError> {
    if items != mask.len() {
        return Err(CompactError::LengthMismatch {
            mask: mask.len(),
            cloud: items,
        });
    }
    Ok(())
}

pub fn compact_points(cloud: &PointCloud, mask: &CandidateMask) -> Result<PointCloud, CompactError> {
    let points: Vec<Point3> = compact_with(cloud.points(), mask)?;
    Ok(PointCloud::with_meta(points, *cloud.meta()))
}

/// Cloud indices of the flagged points, in increasing order.
pub fn compact_indices(mask: &CandidateMask) -> Vec<usize> {
    let idx: Vec<usize> = (0..mask.len()).collect();
    compact_with(&idx, mask).expect("lengths match by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sequential(flags: &[u8]) -> Vec<u64> {
        let mut acc = 0;
        flags
            .iter()
            .map(|&f| {
                acc += f as u64;
                acc
            })
            .collect()
    }

    fn random_flags(n: usize, seed: u64) -> Vec<u8> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(0..2u8)).collect()
    }

    #[test]
    fn all_ones_and_all_zeros() {
        let ones = vec![1u8; 20_000];
        assert_eq!(hierarchical_scan(&ones), (1..=20_000u64).collect::<Vec<_>>());
        assert!(hierarchical_scan(&vec![0u8; 20_000]).iter().all(|&s| s == 0));
        assert!(hierarchical_scan(&[]).is_empty());
    }

    #[test]
    fn boundary_lengths() {
        for n in [0usize, 1, 255, 256, 257, 8191, 8192, 8193, 100_003] {
            let flags = random_flags(n, n as u64);
            assert_eq!(hierarchical_scan(&flags), sequential(&flags), "n = {n}");
        }
    }

    #[test]
    fn tree_invariants() {
        let flags = random_flags(50_000, 3);
        let (_, tree) = hierarchical_scan_with(&flags, ScanConfig::default());
        let ones: u64 = flags.iter().map(|&f| f as u64).sum();
        assert_eq!(tree.tile_sums.iter().sum::<u64>(), ones);
        assert_eq!(tree.tile_sums.len(), 50_000usize.div_ceil(TILE_SIZE));
        assert_eq!(tree.group_sums.len(), 50_000usize.div_ceil(TILE_SIZE * TILES_PER_GROUP));
        assert_eq!(tree.group_prefix, sequential_u64(&tree.group_sums));
    }

    fn sequential_u64(v: &[u64]) -> Vec<u64> {
        let mut acc = 0;
        v.iter()
            .map(|&x| {
                acc += x;
                acc
            })
            .collect()
    }

    #[test]
    fn custom_tile_sizes() {
        let flags = random_flags(10_000, 4);
        for (tile, per_group) in [(1, 1), (3, 5), (64, 2), (1000, 7)] {
            let cfg = ScanConfig {
                tile_size: tile,
                tiles_per_group: per_group,
            };
            assert_eq!(hierarchical_scan_with(&flags, cfg).0, sequential(&flags));
        }
    }

    #[test]
    fn compaction_edge_cases() {
        let cloud = PointCloud::new((0..1000).map(|i| Point3::new(i as f32, 0., 0.)).collect());
        let all = compact_points(&cloud, &CandidateMask::all_candidates(1000)).unwrap();
        assert_eq!(all.points(), cloud.points());
        let none = compact_points(&cloud, &CandidateMask { flags: vec![0; 1000] }).unwrap();
        assert!(none.is_empty());
        assert_eq!(
            compact_points(&cloud, &CandidateMask { flags: vec![1; 3] }),
            Err(CompactError::LengthMismatch { mask: 3, cloud: 1000 })
        );
    }

    #[test]
    fn compaction_matches_sequential_filter() {
        let n = 100_000;
        let cloud = PointCloud::new((0..n).map(|i| Point3::new(i as f32, 1.0, 2.0)).collect());
        let mask = CandidateMask { flags: random_flags(n, 9) };
        let got = compact_points(&cloud, &mask).unwrap();
        let want: Vec<Point3> = cloud.iter().zip(&mask.flags).filter(|(_, &f)| f == 1).map(|(p, _)| *p).collect();
        assert_eq!(got.points(), &want[..]);
        let idx = compact_indices(&mask);
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(idx.len(), want.len());
        let (pts, idx2) = compact_points_indexed(cloud.points(), &mask).unwrap();
        assert_eq!(pts, want);
        assert_eq!(idx2, idx);
        let scan = hierarchical_scan(&mask.flags);
        for (k, &i) in idx.iter().enumerate() {
            assert_eq!(scan[i] - 1, k as u64);
        }
    }
}
