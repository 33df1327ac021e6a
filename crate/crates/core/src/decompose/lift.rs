//! Elementary words for small residues, and lifting `SL_m(Z/q)` to `SL_m(Z)`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::elwords::{invert_word, ElemFactor, Word};
use crate::error::{Error, Result};
use crate::ring::{det, Mat, Ring};
use crate::unimodular::coprime_shift;

struct Reducer {
    t: Mat,
    ops: Vec<ElemFactor>,
}

impl Reducer {
    /// Row `i` += `r` row `j` (0-based).
    fn add(&mut self, i: usize, j: usize, r: BigInt) {
        if r.is_zero() {
            return;
        }
        let m = self.t.flat_rows();
        for c in 0..self.t.flat_cols() {
            let v = &self.t[(i, c)] + &r * &self.t[(j, c)];
            self.t.set(i, c, v);
        }
        self.ops.push(ElemFactor::base(i + 1, j + 1, r, m).expect("valid"));
    }

    /// Euclid on column `c` below the diagonal, leaving the gcd at `(c, c)`.
    fn gather(&mut self, c: usize) {
        let m = self.t.flat_rows();
        loop {
            let nz: Vec<usize> = (c..m).filter(|&i| !self.t[(i, c)].is_zero()).collect();
            if nz.len() <= 1 {
                if let Some(&p) = nz.first() {
                    if p != c {
                        self.add(c, p, BigInt::one());
                        let x = -(&self.t[(p, c)] / &self.t[(c, c)]);
                        self.add(p, c, x);
                    }
                }
                return;
            }
            let p = *nz.iter().min_by_key(|&&i| self.t[(i, c)].magnitude().clone()).expect("nonempty");
            for &i in &nz {
                if i != p {
                    let q = self.t[(i, c)].div_floor(&self.t[(p, c)]);
                    self.add(i, p, -q);
                }
            }
        }
    }

    /// `-1` at `(c, c)` with zeros below becomes `1` in three operations.
    fn fix_sign(&mut self, c: usize) {
        self.add(c + 1, c, -BigInt::one());
        self.add(c, c + 1, BigInt::from(2));
        self.add(c + 1, c, -BigInt::one());
    }

    fn clear(&mut self, c: usize) {
        for i in 0..self.t.flat_rows() {
            if i != c {
                let x = -self.t[(i, c)].clone();
                self.add(i, c, x);
            }
        }
    }
}

/// Base-level word over `Z` with product `s`, for `s` in `SL_k(Z)`.
pub fn elementary_word_of(s: &Mat) -> Result<Word> {
    if !s.is_square() || !det(s).is_one() {
        return Err(Error::NotInSL);
    }
    let k = s.flat_rows();
    let mut r = Reducer { t: s.lift(), ops: Vec::new() };
    for c in 0..k {
        r.gather(c);
        if r.t[(c, c)].is_negative() && c + 1 < k {
            r.fix_sign(c);
        }
        r.clear(c);
    }
    debug_assert!(r.t.is_identity());
    // ops_t ... ops_1 s = I, so s = ops_1^-1 ... ops_t^-1.
    let forward = Word { ring: Ring::Integers, size: k, factors: r.ops };
    Ok(invert_word(&Word { factors: forward.factors.into_iter().rev().collect(), ..forward }))
}

/// Integer matrix of determinant 1 reducing to `s` modulo `q`.
pub fn lift_sl(s: &Mat) -> Result<Mat> {
    let q = match s.ring() {
        Ring::Modular(q) => BigInt::from(*q),
        Ring::Integers => return if det(s).is_one() { Ok(s.clone()) } else { Err(Error::NotInSL) },
        Ring::Matrix { .. } => return Err(Error::RingMismatch("lift expects Z/q entries".into())),
    };
    if !s.is_square() || !det(s).is_one() {
        return Err(Error::NotInSL);
    }
    let k = s.flat_rows();
    let mut r = Reducer { t: s.lift(), ops: Vec::new() };
    for c in 0..k {
        // Replace representatives so the integer column below c is primitive.
        if c + 1 < k {
            let rest = (c + 1..k).fold(BigInt::zero(), |g, i| g.gcd(&r.t[(i, c)]));
            if rest.is_zero() {
                r.t.set(c + 1, c, q.clone());
            } else {
                let a = r.t[(c, c)].clone();
                let shift = coprime_shift(&a, &q, &rest);
                r.t.set(c, c, &a + &shift * &q);
            }
        }
        r.gather(c);
        if r.t[(c, c)].is_negative() && c + 1 < k {
            r.fix_sign(c);
        }
        r.clear(c);
        for i in 0..k {
            for j in 0..k {
                let v = r.t[(i, j)].mod_floor(&q);
                r.t.set(i, j, v);
            }
        }
    }
    // Every op applied to the representatives; undo them over Z.
    let ops = Word { ring: Ring::Integers, size: k, factors: r.ops.into_iter().rev().collect() };
    let lifted = invert_word(&ops).eval();
    debug_assert_eq!(lifted.reduce_mod(q.try_into().expect("small modulus")), *s);
    Ok(lifted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;

    #[test]
    fn residue_words() {
        let mut g = random::rng(2);
        for k in 2..=5 {
            for _ in 0..10 {
                let s = random::sl(&mut g, k, 15);
                assert_eq!(elementary_word_of(&s).unwrap().eval(), s);
            }
        }
        let s = Mat::z(&[&[-1, 0], &[0, -1]]);
        assert_eq!(elementary_word_of(&s).unwrap().eval(), s);
        assert!(elementary_word_of(&Mat::z(&[&[-1, 0], &[0, 1]])).is_err());
    }

    #[test]
    fn modular_lift() {
        let s = Mat::z(&[&[2, 0, 0], &[0, 3, 0], &[0, 0, 1]]).reduce_mod(5);
        let l = lift_sl(&s).unwrap();
        assert!(det(&l).is_one());
        assert_eq!(l.reduce_mod(5), s);
        let mut g = random::rng(8);
        for q in [2u64, 6, 12, 7] {
            for _ in 0..10 {
                let t = random::sl(&mut g, 4, 12).reduce_mod(q);
                let l = lift_sl(&t).unwrap();
                assert!(det(&l).is_one());
                assert_eq!(l.reduce_mod(q), t);
            }
        }
    }
}
