//! Seeded random instance generators shared by the test and acceptance
//! suites. Everything is deterministic in the seed (ChaCha8).

use num_traits::Zero;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::fg::{FgGroup, FgSubgroup};
use crate::{Int, IntMatrix};

/// Random matrix with entries uniform in `[-magnitude, magnitude]`.
pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, magnitude: i64) -> IntMatrix {
    let data: Vec<Int> = (0..rows * cols)
        .map(|_| Int::from(rng.gen_range(-magnitude..=magnitude)))
        .collect();
    IntMatrix::from_shape(rows, cols, data)
}

/// Random unimodular matrix: a product of elementary row operations.
pub fn random_unimodular(rng: &mut ChaCha8Rng, n: usize, ops: usize) -> IntMatrix {
    let mut m = IntMatrix::identity(n);
    if n < 2 {
        return m;
    }
    for _ in 0..ops {
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n);
        while j == i {
            j = rng.gen_range(0..n);
        }
        match rng.gen_range(0..3) {
            0 => {
                let q = Int::from(rng.gen_range(-3..=3i64));
                m.row_axpy(i, j, &q);
            }
            1 => m.swap_rows(i, j),
            _ => m.negate_row(i),
        }
    }
    m
}

/// Random fg group with free rank at most `max_free` and at most
/// `max_torsion` elements of torsion, all torsion factors drawn from small
/// chains.
pub fn random_fg_group(rng: &mut ChaCha8Rng, max_free: usize, max_torsion: i64) -> FgGroup {
    let free = rng.gen_range(0..=max_free);
    let chains: &[&[i64]] = &[
        &[],
        &[2],
        &[3],
        &[4],
        &[6],
        &[2, 2],
        &[2, 4],
        &[2, 6],
        &[3, 3],
        &[2, 2, 2],
        &[5],
        &[2, 10],
        &[12],
        &[4, 4],
        &[3, 6],
    ];
    let mut pick;
    loop {
        pick = chains[rng.gen_range(0..chains.len())];
        let card: i64 = pick.iter().product::<i64>().max(1);
        if card <= max_torsion {
            break;
        }
    }
    FgGroup::from_invariants(free, pick.iter().map(|&d| Int::from(d)).collect())
        .expect("chains are valid invariant factor lists")
}

/// Random subgroup of `g` with up to `max_gens` generators of small
/// magnitude.
pub fn random_subgroup(rng: &mut ChaCha8Rng, g: &FgGroup, max_gens: usize, magnitude: i64) -> FgSubgroup {
    let count = rng.gen_range(0..=max_gens);
    let gens: Vec<Vec<Int>> = (0..count)
        .map(|_| {
            (0..g.dim())
                .map(|_| Int::from(rng.gen_range(-magnitude..=magnitude)))
                .collect()
        })
        .collect();
    FgSubgroup::new(g.clone(), gens).expect("generated coordinates have the right length")
}

/// Random nonzero coordinate vector in `g`.
pub fn random_element(rng: &mut ChaCha8Rng, g: &FgGroup, magnitude: i64) -> Vec<Int> {
    loop {
        let x: Vec<Int> = (0..g.dim())
            .map(|_| Int::from(rng.gen_range(-magnitude..=magnitude)))
            .collect();
        let x = g.reduce(&x).expect("right length");
        if !x.iter().all(Zero::is_zero) || g.dim() == 0 {
            return x;
        }
    }
}
