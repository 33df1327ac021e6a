//! Two-sided reduction of `GL_4(M_n(Z))` to `diag(W, I_2)` with at most 20
//! block elementary factors.

use num_traits::{One, Signed};

use crate::elwords::{apply_left, apply_right, ElemFactor, Level, Side, Word};
use crate::error::{Error, Result};
use crate::normal_form::{is_primitive_frame, left_inverse};
use crate::random;
use crate::ring::{det, mat_inv_exact, Mat, Ring};
use crate::unimodular::shift_to_frame;

pub const CORNER_MAX: usize = 20;

pub const SIGN_NOTE: &str =
    "pivot row operation uses coefficient (1 - a_4) x_i so the corner entry becomes exactly 1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CornerResult {
    /// Product order: `eval(left) = L_k ... L_1`.
    pub left: Word,
    /// Product order: `eval(right) = R_1 ... R_j`.
    pub right: Word,
    /// `2 x 2` over `M_n(Z)`.
    pub w: Mat,
}

impl CornerResult {
    pub fn len(&self) -> usize {
        self.left.len() + self.right.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

struct State {
    m: Mat,
    n: usize,
    left: Vec<ElemFactor>,
    right: Vec<ElemFactor>,
}

impl State {
    fn row_op(&mut self, i: usize, j: usize, r: Mat) {
        if r.is_zero() {
            return;
        }
        let f = ElemFactor::new(i, j, r, 4, Level::Block(self.n), Side::Left).expect("valid factor");
        apply_left(&f, &mut self.m);
        self.left.push(f);
    }

    fn col_op(&mut self, i: usize, j: usize, r: Mat) {
        if r.is_zero() {
            return;
        }
        let f = ElemFactor::new(i, j, r, 4, Level::Block(self.n), Side::Right).expect("valid factor");
        apply_right(&mut self.m, &f);
        self.right.push(f);
    }

    fn blk(&self, i: usize, j: usize) -> Mat {
        let n = self.n;
        self.m.sub((i - 1) * n, (j - 1) * n, n, n)
    }

    /// Add multiples of rows `3..k` to rows 1 and 2 until the top two blocks
    /// of column `k` form a primitive frame.
    fn make_head_primitive(&mut self, k: usize) -> Result<()> {
        let n = self.n;
        let head = Mat::vstack(&self.blk(1, k), &self.blk(2, k));
        if is_primitive_frame(&head) {
            return Ok(());
        }
        let a: Vec<Mat> = (3..=k).map(|i| self.blk(i, k)).collect();
        for trial in 0..random::SMALL_TRIALS {
            let c = random::small_candidate(trial, 2 * n, (k - 2) * n);
            let mut shifted = head.clone();
            for (idx, ai) in a.iter().enumerate() {
                shifted = &shifted + &(&c.sub(0, idx * n, 2 * n, n) * ai);
            }
            if is_primitive_frame(&shifted) {
                for (idx, row) in (3..=k).enumerate() {
                    self.row_op(1, row, c.sub(0, idx * n, n, n));
                    self.row_op(2, row, c.sub(n, idx * n, n, n));
                }
                return Ok(());
            }
        }
        // b_i: row k of the inverse; s = sum_{i >= 3} b_i a_i.
        let lead = self.m.sub(0, 0, k * n, k * n);
        let inv = mat_inv_exact(&lead).map_err(|_| Error::NotInvertible)?;
        let b: Vec<Mat> = (0..k).map(|i| inv.sub((k - 1) * n, i * n, n, n)).collect();
        let mut s = Mat::zeros(Ring::Integers, n, n);
        for i in 2..k {
            s = &s + &(&b[i] * &a[i - 2]);
        }
        let t = shift_to_frame(&head, &s)?;
        for (row, ti) in [(1, t.sub(0, 0, n, n)), (2, t.sub(n, 0, n, n))] {
            for col in (3..=k).rev() {
                self.row_op(row, col, &ti * &b[col - 1]);
            }
        }
        Ok(())
    }

    /// Make block `(k, k)` the identity and clear row and column `k` inside
    /// the leading `k x k` block matrix, `k` in `{3, 4}`.
    fn reduce_index(&mut self, k: usize) -> Result<()> {
        let n = self.n;
        let id = Mat::zi(n);
        if !self.blk(k, k).is_identity() {
            self.make_head_primitive(k)?;
            let head = Mat::vstack(&self.blk(1, k), &self.blk(2, k));
            let x = left_inverse(&head).ok_or(Error::NotInvertible)?;
            let corr = &id - &self.blk(k, k);
            self.row_op(k, 1, &corr * &x.sub(0, 0, n, n));
            self.row_op(k, 2, &corr * &x.sub(0, n, n, n));
            debug_assert!(self.blk(k, k).is_identity());
        }
        for i in 1..k {
            let a = self.blk(i, k);
            self.row_op(i, k, a.neg());
        }
        for j in 1..k {
            let r = self.blk(k, j);
            self.col_op(k, j, r.neg());
        }
        Ok(())
    }
}

/// `eval(left) * m * eval(right) = diag(W, I_2)` for `m` in `GL_4(M_n(Z))`.
pub fn corner_reduce_gl4(m: &Mat) -> Result<CornerResult> {
    let n = match m.ring() {
        Ring::Matrix { base, n } if **base == Ring::Integers => *n,
        _ => return Err(Error::RingMismatch("corner reduction expects a matrix over M_n(Z)".into())),
    };
    if m.rows() != 4 || m.cols() != 4 {
        return Err(Error::DimensionMismatch("corner reduction expects a 4 x 4 block matrix".into()));
    }
    if !det(&m.flatten()).abs().is_one() {
        return Err(Error::NotInvertible);
    }
    let mut st = State { m: m.flatten(), n, left: Vec::new(), right: Vec::new() };
    st.reduce_index(4)?;
    st.reduce_index(3)?;
    let ring = Ring::zn(n);
    let left = Word { ring: ring.clone(), size: 4, factors: st.left.into_iter().rev().collect() };
    let right = Word { ring, size: 4, factors: st.right };
    let w = st.m.sub(0, 0, 2 * n, 2 * n).with_ring(Ring::zn(n));
    debug_assert!(st.m.sub(2 * n, 2 * n, 2 * n, 2 * n).is_identity());
    Ok(CornerResult { left, right, w })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use crate::ring::block_view;

    fn check(m: &Mat) -> CornerResult {
        let r = corner_reduce_gl4(m).unwrap();
        let out = &(&r.left.eval().flatten() * &m.flatten()) * &r.right.eval().flatten();
        let n = m.ring().block();
        let expect = r.w.flatten().embed(4 * n);
        assert_eq!(out, expect);
        assert!(r.len() <= CORNER_MAX, "{} factors", r.len());
        r
    }

    #[test]
    fn identity_needs_nothing() {
        let r = check(&Mat::identity(Ring::zn(2), 4));
        assert!(r.is_empty());
        assert!(r.w.flatten().is_identity());
    }

    #[test]
    fn already_reduced() {
        let w0 = Mat::z(&[&[2, 1, 0, 0], &[1, 1, 0, 0], &[0, 0, 1, 3], &[0, 0, 0, 1]]);
        let m = block_view(&w0.embed(8), 2).unwrap();
        let r = check(&m);
        assert!(r.is_empty());
        assert_eq!(r.w.flatten(), w0);
    }

    #[test]
    fn random_block_words() {
        let mut g = random::rng(11);
        for n in 1..=3 {
            for _ in 0..20 {
                check(&random::gl4_blocks(&mut g, n, 30));
            }
        }
    }

    #[test]
    fn rejects_singular() {
        let m = block_view(&Mat::z(&[&[2, 0, 0, 0], &[0, 1, 0, 0], &[0, 0, 1, 0], &[0, 0, 0, 1]]), 1).unwrap();
        assert_eq!(corner_reduce_gl4(&m), Err(Error::NotInvertible));
    }
}
