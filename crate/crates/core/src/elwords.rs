//! Elementary matrices `e_ij(r)`, words in them, and the generating sets
//! `S_d(R)`, the generators of `M_n(R)`, and the uniform set for `SL_m(Z)`.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ring::{Mat, Ring};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Base,
    Block(usize),
}

impl Level {
    pub fn block(self) -> usize {
        match self {
            Level::Base => 1,
            Level::Block(n) => n,
        }
    }
}

/// `e_ij(r)` of `size x size` (in ring units). Indices are 1-based; `r` is a
/// `b x b` matrix over the scalar ring, `b` being the level's block size.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ElemFactor {
    pub i: usize,
    pub j: usize,
    pub r: Mat,
    pub size: usize,
    pub level: Level,
    pub side: Side,
}

impl ElemFactor {
    pub fn new(i: usize, j: usize, r: Mat, size: usize, level: Level, side: Side) -> Result<ElemFactor> {
        if i == j {
            return Err(Error::InvalidIndex(format!("e_{i}{j} needs distinct indices")));
        }
        if i == 0 || j == 0 || i > size || j > size {
            return Err(Error::InvalidIndex(format!("({i}, {j}) outside 1..={size}")));
        }
        let b = level.block();
        if r.flat_rows() != b || r.flat_cols() != b || matches!(r.ring(), Ring::Matrix { .. }) {
            return Err(Error::DimensionMismatch(format!("entry must be {b}x{b} over the scalar ring")));
        }
        if r.is_zero() {
            return Err(Error::MalformedInput("zero elementary entry".into()));
        }
        Ok(ElemFactor { i, j, r, size, level, side })
    }

    /// Base-level `e_ij(x)` over `Z`.
    pub fn base(i: usize, j: usize, x: impl Into<BigInt>, size: usize) -> Result<ElemFactor> {
        let r = Mat::from_flat(Ring::Integers, 1, 1, vec![x.into()])?;
        ElemFactor::new(i, j, r, size, Level::Base, Side::Left)
    }

    pub fn with_side(mut self, side: Side) -> ElemFactor {
        self.side = side;
        self
    }

    pub fn ring(&self) -> Ring {
        match self.level {
            Level::Base => self.r.ring().clone(),
            Level::Block(n) => Ring::Matrix { base: Box::new(self.r.ring().clone()), n },
        }
    }

    pub fn inverse(&self) -> ElemFactor {
        ElemFactor { r: self.r.neg(), ..self.clone() }
    }

    pub fn to_mat(&self) -> Mat {
        let mut m = Mat::identity(self.ring(), self.size);
        let b = self.level.block();
        m.set_sub((self.i - 1) * b, (self.j - 1) * b, &self.r);
        m
    }
}

/// `m <- m * f`: block column `j` gains block column `i` times `r`.
pub fn apply_right(m: &mut Mat, f: &ElemFactor) {
    let b = f.level.block();
    assert_eq!(m.flat_cols(), f.size * b, "factor size");
    let (rows, cols) = (m.flat_rows(), m.flat_cols());
    let (ci, cj) = ((f.i - 1) * b, (f.j - 1) * b);
    let modulus = m.ring().modulus();
    let data = m.data_mut();
    for p in 0..rows {
        let row = &mut data[p * cols..(p + 1) * cols];
        for c in 0..b {
            let mut acc = BigInt::zero();
            for t in 0..b {
                let rv = &f.r[(t, c)];
                if !rv.is_zero() && !row[ci + t].is_zero() {
                    acc += &row[ci + t] * rv;
                }
            }
            if !acc.is_zero() {
                row[cj + c] += acc;
                if let Some(q) = &modulus {
                    row[cj + c] = num_integer::Integer::mod_floor(&row[cj + c], q);
                }
            }
        }
    }
}

/// `m <- f * m`: block row `i` gains `r` times block row `j`.
pub fn apply_left(f: &ElemFactor, m: &mut Mat) {
    let b = f.level.block();
    assert_eq!(m.flat_rows(), f.size * b, "factor size");
    let cols = m.flat_cols();
    let (ri, rj) = ((f.i - 1) * b, (f.j - 1) * b);
    let modulus = m.ring().modulus();
    let data = m.data_mut();
    for t in 0..b {
        let mut add = vec![BigInt::zero(); cols];
        for s in 0..b {
            let rv = &f.r[(t, s)];
            if rv.is_zero() {
                continue;
            }
            for (col, a) in add.iter_mut().enumerate() {
                let x = &data[(rj + s) * cols + col];
                if !x.is_zero() {
                    *a += rv * x;
                }
            }
        }
        for (col, a) in add.into_iter().enumerate() {
            if !a.is_zero() {
                let e = &mut data[(ri + t) * cols + col];
                *e += a;
                if let Some(q) = &modulus {
                    *e = num_integer::Integer::mod_floor(&*e, q);
                }
            }
        }
    }
}

pub fn elem(i: usize, j: usize, r: &Mat, size: usize, ring: &Ring) -> Result<Mat> {
    let level = match ring {
        Ring::Matrix { n, .. } => Level::Block(*n),
        _ => Level::Base,
    };
    Ok(ElemFactor::new(i, j, r.clone(), size, level, Side::Left)?.to_mat())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Word {
    pub ring: Ring,
    pub size: usize,
    pub factors: Vec<ElemFactor>,
}

impl Word {
    pub fn new(ring: Ring, size: usize) -> Word {
        Word { ring, size, factors: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn push(&mut self, f: ElemFactor) {
        debug_assert_eq!(f.size, self.size);
        self.factors.push(f);
    }

    /// Product of the factors in stored order.
    pub fn eval(&self) -> Mat {
        let mut m = Mat::identity(self.ring.clone(), self.size);
        for f in &self.factors {
            apply_right(&mut m, f);
        }
        m
    }

    pub fn check(&self) -> Result<()> {
        for f in &self.factors {
            if f.size != self.size || f.ring() != self.ring {
                return Err(Error::MalformedInput("word factors disagree on ring or size".into()));
            }
            ElemFactor::new(f.i, f.j, f.r.clone(), f.size, f.level, f.side)?;
        }
        Ok(())
    }
}

pub fn eval_word(w: &Word) -> Mat {
    w.eval()
}

pub fn invert_word(w: &Word) -> Word {
    Word { ring: w.ring.clone(), size: w.size, factors: w.factors.iter().rev().map(ElemFactor::inverse).collect() }
}

/// Base-level word for one block elementary factor: one base factor per
/// nonzero entry of the block. The factors commute.
pub fn expand_block_elementary(f: &ElemFactor) -> Word {
    let n = f.level.block();
    let ring = f.r.ring().clone();
    let size = f.size * n;
    let mut w = Word::new(ring.clone(), size);
    for s in 0..n {
        for t in 0..n {
            let x = &f.r[(s, t)];
            if x.is_zero() {
                continue;
            }
            let r = Mat::from_flat(ring.clone(), 1, 1, vec![x.clone()]).expect("1x1");
            w.push(ElemFactor {
                i: (f.i - 1) * n + s + 1,
                j: (f.j - 1) * n + t + 1,
                r,
                size,
                level: Level::Base,
                side: f.side,
            });
        }
    }
    w
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenMeta {
    pub d: usize,
    pub l: usize,
    pub n: usize,
    pub size: usize,
    pub distinct: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenSet {
    pub name: String,
    pub matrices: Vec<Mat>,
    pub metadata: GenMeta,
}

fn distinct(ms: &[Mat]) -> usize {
    ms.iter().collect::<HashSet<_>>().len()
}

/// `S_d(R)`: every `e_ij(+-1)`, then `e_ij(+-a_m)` for `|i - j| = 1`.
///
/// Emitted as a multiset. Over `Z` the second family repeats members of the
/// first; `metadata.distinct` gives the deduplicated count.
pub fn gen_set_s_d(ring: &Ring, d: usize) -> Result<GenSet> {
    if d < 3 {
        return Err(Error::InvalidIndex(format!("S_d needs d >= 3, got {d}")));
    }
    let b = ring.block();
    let scalar = ring.scalar();
    let one = Mat::identity(scalar.clone(), b);
    let level = if b > 1 || matches!(ring, Ring::Matrix { .. }) { Level::Block(b) } else { Level::Base };
    let gens = ring.generators();
    let mut matrices = Vec::new();
    let mut push = |i: usize, j: usize, r: &Mat| {
        let f = ElemFactor::new(i, j, r.clone(), d, level, Side::Left).expect("valid generator");
        matrices.push(f.to_mat());
    };
    for i in 1..=d {
        for j in 1..=d {
            if i != j {
                push(i, j, &one);
                push(i, j, &one.neg());
            }
        }
    }
    for a in &gens {
        for i in 1..=d {
            for j in 1..=d {
                if i.abs_diff(j) == 1 {
                    push(i, j, a);
                    push(i, j, &a.neg());
                }
            }
        }
    }
    let size = matrices.len();
    debug_assert_eq!(size, 2 * (d * d - d) + 4 * gens.len() * (d - 1));
    let metadata = GenMeta { d, l: gens.len(), n: b, size, distinct: distinct(&matrices), notes: Vec::new() };
    Ok(GenSet { name: "S_d".into(), matrices, metadata })
}

/// `A_i = a_i E_11` for each generator `a_i` of `base`, then the cyclic
/// shift `B` with `1` on the superdiagonal and `(-1)^(n-1)` in the corner.
pub fn matring_generators(base: &Ring, n: usize) -> GenSet {
    assert!(n >= 1);
    let mut matrices = Vec::new();
    for a in base.generators() {
        let mut m = Mat::zeros(base.clone(), n, n);
        m.set(0, 0, a[(0, 0)].clone());
        matrices.push(m);
    }
    let mut b = Mat::zeros(base.clone(), n, n);
    for i in 0..n - 1 {
        b.set(i, i + 1, BigInt::one());
    }
    b.set(n - 1, 0, if n % 2 == 1 { BigInt::one() } else { -BigInt::one() });
    matrices.push(b);
    let size = matrices.len();
    let metadata = GenMeta { d: n, l: size, n, size, distinct: distinct(&matrices), notes: Vec::new() };
    GenSet { name: "matring_gens".into(), matrices, metadata }
}

/// Signed cyclic shift `e_i -> e_{i+1}`, `e_m -> (-1)^(m-1) e_1`, in `SL_m(Z)`.
pub fn signed_cycle(m: usize) -> Mat {
    let mut c = Mat::zeros(Ring::Integers, m, m);
    for i in 0..m - 1 {
        c.set(i + 1, i, BigInt::one());
    }
    c.set(0, m - 1, if m % 2 == 1 { BigInt::one() } else { -BigInt::one() });
    c
}

/// `F` (the `e_ij(+-1)` of `SL_d(Z)`, top-left) together with
/// `S_4(M_n(Z))` flattened, `n = floor(m / 4)`.
///
/// When `4` does not divide `m` both families sit in the top-left
/// `4n x 4n` corner and the signed cycle and its inverse are appended so the
/// set still generates `SL_m(Z)`; this is recorded in the notes.
pub fn uniform_set(m: usize, d: usize) -> Result<GenSet> {
    if d < 3 || m < d {
        return Err(Error::InvalidIndex(format!("uniform set needs m >= d >= 3, got m={m}, d={d}")));
    }
    let n = m / 4;
    let mut matrices = Vec::new();
    let mut notes = Vec::new();
    for i in 1..=d {
        for j in 1..=d {
            if i != j {
                for s in [1i64, -1] {
                    matrices.push(ElemFactor::base(i, j, s, d).expect("valid").to_mat().embed(m));
                }
            }
        }
    }
    let mut l = 0;
    if n >= 1 {
        let s4 = gen_set_s_d(&Ring::zn(n), 4)?;
        l = s4.metadata.l;
        if n == 1 {
            notes.push("n = 1: M_1(Z) = Z has the single generator 1, so l = 1".into());
        }
        matrices.extend(s4.matrices.iter().map(|g| g.flatten().embed(m)));
    } else {
        notes.push("m < 4: no block part".into());
    }
    if m % 4 != 0 {
        let c = signed_cycle(m);
        let cinv = c.transpose();
        matrices.push(c);
        matrices.push(cinv);
        notes.push(format!("m mod 4 = {}: block part embedded in the top-left {}x{}, signed cycle and inverse appended", m % 4, 4 * n, 4 * n));
    }
    let size = matrices.len();
    let metadata = GenMeta { d, l, n, size, distinct: distinct(&matrices), notes };
    Ok(GenSet { name: "uniform".into(), matrices, metadata })
}
