//! Window-count law, natural-randomness identities, and BDM laws.

use std::collections::BTreeMap;

use scenestat_core::complexity::{bdm, bdm_pattern, BdmParams, CtmMeta, CtmTable};
use scenestat_core::grid::{
    extract_patches, natural_randomness, window_count, BitGrid, ExtractionMode, FrequencyTable,
};
use scenestat_core::{rng, Pattern};

fn random_grid(r: &mut rng::Rng, w: usize, h: usize) -> BitGrid {
    BitGrid::new(w, h, (0..w * h).map(|_| rng::below(r, 2) as u8).collect()).unwrap()
}

/// Every window position by brute force, with its packed contents when the
/// side fits in a pattern.
fn naive_windows(g: &BitGrid, k: usize, stride: usize) -> Vec<Option<u64>> {
    let mut out = Vec::new();
    let mut top = 0;
    while top + k <= g.height() {
        let mut left = 0;
        while left + k <= g.width() {
            out.push((k <= 8).then(|| {
                let mut bits = 0u64;
                for r in 0..k {
                    for c in 0..k {
                        bits |= (g.get(top + r, left + c) as u64) << (r * k + c);
                    }
                }
                bits
            }));
            left += stride;
        }
        top += stride;
    }
    out
}

#[test]
fn window_counts_match_nested_loops() {
    let start = std::time::Instant::now();
    let mut r = rng::seeded(404);
    for _ in 0..200 {
        let w = 1 + rng::below(&mut r, 64) as usize;
        let h = 1 + rng::below(&mut r, 64) as usize;
        let g = random_grid(&mut r, w, h);
        for k in 1..=w.min(h) {
            for (mode, stride) in [(ExtractionMode::Tiled, k), (ExtractionMode::Sliding, 1)] {
                let naive = naive_windows(&g, k, stride);
                assert_eq!(window_count(w, h, k, mode), naive.len());
                let law = match mode {
                    ExtractionMode::Tiled => (w / k) * (h / k),
                    ExtractionMode::Sliding => (w - k + 1) * (h - k + 1),
                };
                assert_eq!(naive.len(), law);
                if k <= 8 {
                    let got: Vec<Option<u64>> = extract_patches(&g, k, mode)
                        .unwrap()
                        .iter()
                        .map(|p| Some(p.bits()))
                        .collect();
                    assert_eq!(got, naive, "{w}x{h} k={k} {mode}");
                }
            }
        }
    }
    assert!(start.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn uniform_table_scores_zero() {
    for k in 2..=4usize {
        for c in [1u64, 3, 7] {
            let table = FrequencyTable::from_counts(
                k,
                ExtractionMode::Tiled,
                1,
                (0..1u64 << (k * k)).map(|b| (b, c)),
            )
            .unwrap();
            for b in 0..1u64 << (k * k) {
                let p = Pattern::new(k, b).unwrap();
                assert_eq!(natural_randomness(&p, &table, 0.0).unwrap(), 0.0);
            }
        }
    }
}

#[test]
fn direct_formula_examples() {
    let x = Pattern::new(4, 0x1234).unwrap();
    let other = Pattern::new(4, 0x0001).unwrap();
    let table = |n: u64| {
        FrequencyTable::from_counts(4, ExtractionMode::Tiled, 1, [(x.bits(), n), (other.bits(), 65536 - n)])
            .unwrap()
    };
    assert_eq!(natural_randomness(&x, &table(1), 0.0).unwrap(), 0.0);
    let v = natural_randomness(&x, &table(3), 0.0).unwrap();
    assert!((v - (1.0f64 / 3.0).log2()).abs() < 1e-15);
    assert!((v + 1.584_96).abs() < 1e-5);
    let empty = FrequencyTable::new(4, ExtractionMode::Tiled).unwrap();
    assert_eq!(natural_randomness(&x, &empty, 1.0).unwrap(), 0.0);
}

fn ctm_table() -> CtmTable {
    let freqs: BTreeMap<u64, u64> = [(0, 900), (1, 120), (3, 80), (6, 7), (7, 60), (0xf, 500)]
        .into_iter()
        .collect();
    CtmTable::from_frequencies(
        2,
        &freqs,
        CtmMeta {
            n_states: 4,
            n_samples: 10_000,
            max_steps: 100,
            seed: 3,
            n_halting: 5000,
            n_hits: 0,
            ceiling: 0.0,
        },
    )
    .unwrap()
}

#[test]
fn identical_blocks() {
    let t = ctm_table();
    for bits in 0..16u64 {
        let block = Pattern::new(2, bits).unwrap();
        let ctm = t.get(&block).unwrap();
        for (w, h) in [(2, 2), (4, 4), (8, 2), (6, 10), (16, 16)] {
            let cells: Vec<u8> = (0..w * h).map(|i| block.get((i / w) % 2, (i % w) % 2)).collect();
            let g = BitGrid::new(w, h, cells).unwrap();
            let n = (w / 2 * h / 2) as f64;
            let got = bdm(&g, &t, BdmParams::default()).unwrap();
            assert!((got - (ctm + n.log2())).abs() < 1e-12);
        }
    }
}

/// Swaps whole 2x2 blocks of a 4x4 pattern.
fn permute_blocks(p: &Pattern, order: &[usize; 4]) -> Pattern {
    let mut cells = vec![0u8; 16];
    for (dst, &src) in order.iter().enumerate() {
        let (sr, sc) = (src / 2 * 2, src % 2 * 2);
        let (dr, dc) = (dst / 2 * 2, dst % 2 * 2);
        for r in 0..2 {
            for c in 0..2 {
                cells[(dr + r) * 4 + dc + c] = p.get(sr + r, sc + c);
            }
        }
    }
    Pattern::from_cells(4, &cells).unwrap()
}

#[test]
fn block_permutations_preserve_bdm() {
    let t = ctm_table();
    let min = t.min_entry().unwrap().1;
    let mut r = rng::seeded(88);
    for _ in 0..1000 {
        let p = Pattern::new(4, rng::below(&mut r, 1 << 16)).unwrap();
        let base = bdm_pattern(&p, &t, BdmParams::default()).unwrap();
        assert!(base >= min);
        let mut order = [0, 1, 2, 3];
        rng::shuffle(&mut r, &mut order);
        let q = permute_blocks(&p, &order);
        assert_eq!(bdm_pattern(&q, &t, BdmParams::default()).unwrap(), base);
    }
}
