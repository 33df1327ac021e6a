//! Seeded generators for random group elements, built as elementary words.

use num_bigint::BigInt;
use num_traits::One;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::elwords::{ElemFactor, Level, Side, Word};
use crate::ring::{Mat, Ring};

pub const DEFAULT_SEED: u64 = 0x5eed_e1e4;

/// Number of small candidates tried before a constructive fallback.
pub(crate) const SMALL_TRIALS: u64 = 48;

/// Candidate `trial` of a deterministic sequence of small integer matrices,
/// entries in `[-b, b]` with `b` growing slowly with `trial`.
pub(crate) fn small_candidate(trial: u64, rows: usize, cols: usize) -> Mat {
    let mut g = rng(trial.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let b = 1 + (trial / 16) as i64;
    let mut m = Mat::zeros(Ring::Integers, rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m.set(i, j, BigInt::from(g.gen_range(-b..=b)));
        }
    }
    m
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn coeff(rng: &mut impl Rng, bound: i64) -> BigInt {
    let x = rng.gen_range(1..=bound);
    BigInt::from(if rng.gen_bool(0.5) { x } else { -x })
}

fn indices(rng: &mut impl Rng, size: usize) -> (usize, usize) {
    let i = rng.gen_range(1..=size);
    let mut j = rng.gen_range(1..size);
    if j >= i {
        j += 1;
    }
    (i, j)
}

/// `len` random `e_ij(r)` over `Z`, `0 < |r| <= bound`.
pub fn base_word(rng: &mut impl Rng, size: usize, len: usize, bound: i64) -> Word {
    let mut w = Word::new(Ring::Integers, size);
    for _ in 0..len {
        let (i, j) = indices(rng, size);
        w.push(ElemFactor::base(i, j, coeff(rng, bound), size).expect("valid"));
    }
    w
}

pub fn sl(rng: &mut impl Rng, size: usize, len: usize) -> Mat {
    base_word(rng, size, len, 3).eval()
}

/// Random nonzero `n x n` integer block with small entries.
pub fn block_entry(rng: &mut impl Rng, n: usize, bound: i64) -> Mat {
    loop {
        let data = (0..n * n).map(|_| BigInt::from(rng.gen_range(-bound..=bound))).collect();
        let m = Mat::from_flat(Ring::Integers, n, n, data).expect("square");
        if !m.is_zero() {
            return m;
        }
    }
}

/// `len` random block elementary factors of size `size` over `M_n(Z)`.
pub fn block_word(rng: &mut impl Rng, n: usize, size: usize, len: usize) -> Word {
    let mut w = Word::new(Ring::zn(n), size);
    for _ in 0..len {
        let (i, j) = indices(rng, size);
        let r = block_entry(rng, n, 2);
        w.push(ElemFactor::new(i, j, r, size, Level::Block(n), Side::Left).expect("valid"));
    }
    w
}

/// Random element of `GL_size(Z)`: an elementary word times a random sign
/// on the first coordinate.
pub fn gl(rng: &mut impl Rng, size: usize, len: usize) -> Mat {
    let mut m = sl(rng, size, len);
    if rng.gen_bool(0.5) {
        for j in 0..size {
            let x = -m[(0, j)].clone();
            m.set(0, j, x);
        }
    }
    m
}

/// `GL_4(M_n(Z))` element as a block word, with a random sign flip.
pub fn gl4_blocks(rng: &mut impl Rng, n: usize, len: usize) -> Mat {
    let mut m = block_word(rng, n, 4, len).eval();
    if rng.gen_bool(0.5) {
        let mut s = Mat::identity(Ring::Integers, 4 * n);
        s.set(0, 0, -BigInt::one());
        m = (&s * &m.flatten()).with_ring(Ring::zn(n));
    }
    m
}
