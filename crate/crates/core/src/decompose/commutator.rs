//! Block unitriangular matrices as single commutators, and commutators of
//! `GL_2(M_n(Z))` as words of at most 40 block elementary factors.

use crate::elwords::{ElemFactor, Level, Side, Word};
use crate::error::{Error, Result};
use crate::ring::{mat_inv_exact, Mat, Ring};

use super::ulul::{lower, unitriangular_block, upper};

pub const EXPAND_MAX: usize = 40;

/// `[g, h] = g h g^-1 h^-1`.
pub fn commutator(g: &Mat, h: &Mat) -> Result<Mat> {
    let gi = mat_inv_exact(g)?;
    let hi = mat_inv_exact(h)?;
    Ok(&(&(g * h) * &gi) * &hi)
}

/// Direct sum of `[[0,1],[1,1]]` blocks, with one `[[0,0,1],[1,0,1],[0,1,0]]`
/// block when `s` is odd. Both it and itself minus `I` lie in `GL_s(Z)`.
pub fn h_unit(s: usize) -> Mat {
    assert!(s >= 2, "h_unit needs size >= 2");
    let mut m = Mat::zeros(Ring::Integers, s, s);
    let mut at = 0;
    if s % 2 == 1 {
        m.set_sub(0, 0, &Mat::z(&[&[0, 0, 1], &[1, 0, 1], &[0, 1, 0]]));
        at = 3;
    }
    while at < s {
        m.set_sub(at, at, &Mat::z(&[&[0, 1], &[1, 1]]));
        at += 2;
    }
    m
}

/// `(g, h)` with `[g, h] = v` for `v = [I B; 0 I]` or `[I 0; B I]` in the
/// `(s1, s2)` split, `g = diag(h_unit, I)`.
pub fn block_unitriangular_to_commutator(v: &Mat, split: (usize, usize)) -> Result<(Mat, Mat)> {
    let (s1, s2) = split;
    if s1 < 2 || s1 + s2 != v.flat_rows() {
        return Err(Error::MalformedInput(format!("split {split:?} unusable for a {}x{} matrix", v.flat_rows(), v.flat_cols())));
    }
    let (is_upper, b) =
        unitriangular_block(v, s1).ok_or_else(|| Error::MalformedInput("not block unitriangular".into()))?;
    let s = s1 + s2;
    if b.is_zero() {
        return Ok((Mat::zi(s), Mat::zi(s)));
    }
    let hu = h_unit(s1);
    let g = hu.embed(s);
    let id = Mat::zi(s1);
    let h = if is_upper {
        let c = &mat_inv_exact(&(&hu - &id))? * &b;
        upper(s1, &c)
    } else {
        let c = &(&b * &mat_inv_exact(&(&id - &hu))?) * &hu;
        lower(s1, &c)
    };
    debug_assert_eq!(&commutator(&g, &h)?, v);
    Ok((g, h))
}

fn block_upper(x: &Mat) -> Mat {
    upper(x.flat_rows(), x)
}

fn block_lower(x: &Mat) -> Mat {
    lower(x.flat_rows(), x)
}

/// `diag(h, h^-1)` as `[I h][I 0; -h^-1 I][I h-I][I 0; I I][I -I]`.
pub fn whitehead_diag5(h: &Mat) -> Result<Vec<Mat>> {
    let hi = mat_inv_exact(h)?;
    let id = Mat::zi(h.flat_rows());
    Ok(vec![
        block_upper(h),
        block_lower(&hi.neg()),
        block_upper(&(h - &id)),
        block_lower(&id),
        block_upper(&id.neg()),
    ])
}

/// `[0 h; -h^-1 0]` as `[I h][I 0; -h^-1 I][I h]`.
pub fn antidiag3(h: &Mat) -> Result<Vec<Mat>> {
    let hi = mat_inv_exact(h)?;
    Ok(vec![block_upper(h), block_lower(&hi.neg()), block_upper(h)])
}

/// Block elementary factors in `EL_4(M_n(Z))` for one `2n`-block
/// unitriangular factor: one per nonzero `n x n` sub-block.
fn split_unitriangular(v: &Mat, n: usize, out: &mut Word) {
    let (is_upper, x) = unitriangular_block(v, 2 * n).expect("unitriangular factor");
    for a in 0..2 {
        for b in 0..2 {
            let r = x.sub(a * n, b * n, n, n);
            if r.is_zero() {
                continue;
            }
            let (i, j) = if is_upper { (a + 1, b + 3) } else { (a + 3, b + 1) };
            out.push(ElemFactor::new(i, j, r, 4, Level::Block(n), Side::Left).expect("valid factor"));
        }
    }
}

/// Word over `M_n(Z)` of size 4 whose product is `diag([g, h], I_2)`, for
/// `g, h` in `GL_2n(Z)`: `antidiag(g) antidiag(-h^-1) diag((hg)^-1, hg)`.
pub fn commutator_expand40(g: &Mat, h: &Mat) -> Result<Word> {
    let s = g.flat_rows();
    if s % 2 != 0 || !g.is_square() || h.flat_rows() != s || !h.is_square() {
        return Err(Error::DimensionMismatch("commutator entries must be 2n x 2n".into()));
    }
    let n = s / 2;
    let mut w = Word::new(Ring::zn(n), 4);
    if g.is_identity() || h.is_identity() {
        return Ok(w);
    }
    let hi = mat_inv_exact(h)?;
    let hg_inv = mat_inv_exact(&(h * g))?;
    let mut chain = antidiag3(g)?;
    chain.extend(antidiag3(&hi.neg())?);
    chain.extend(whitehead_diag5(&hg_inv)?);
    for v in &chain {
        split_unitriangular(v, n, &mut w);
    }
    debug_assert!(w.len() <= EXPAND_MAX);
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use crate::ring::det;
    use num_traits::{One, Signed};

    fn prod(ms: &[Mat]) -> Mat {
        ms.iter().skip(1).fold(ms[0].clone(), |acc, m| &acc * m)
    }

    #[test]
    fn unit_family() {
        for s in 2..=9 {
            let hu = h_unit(s);
            assert!(det(&hu).abs().is_one());
            assert!(det(&(&hu - &Mat::zi(s))).abs().is_one());
        }
        assert_eq!(det(&Mat::z(&[&[0, 1], &[1, 1]])), (-1).into());
        assert_eq!(det(&Mat::z(&[&[0, 0, 1], &[1, 0, 1], &[0, 1, 0]])), 1.into());
    }

    #[test]
    fn five_seven_example() {
        let v = upper(2, &Mat::z(&[&[5], &[7]]));
        let (g, h) = block_unitriangular_to_commutator(&v, (2, 1)).unwrap();
        assert_eq!(g.sub(0, 0, 2, 2), Mat::z(&[&[0, 1], &[1, 1]]));
        assert_eq!(h.sub(0, 2, 2, 1), Mat::z(&[&[7], &[12]]));
        assert_eq!(commutator(&g, &h).unwrap(), v);
    }

    #[test]
    fn lower_and_zero_cases() {
        let v = lower(3, &Mat::z(&[&[1, -4, 2], &[0, 3, 9]]));
        let (g, h) = block_unitriangular_to_commutator(&v, (3, 2)).unwrap();
        assert_eq!(commutator(&g, &h).unwrap(), v);
        let (g, h) = block_unitriangular_to_commutator(&Mat::zi(5), (3, 2)).unwrap();
        assert!(g.is_identity() && h.is_identity());
        assert!(block_unitriangular_to_commutator(&Mat::z(&[&[2, 0], &[0, 1]]), (1, 1)).is_err());
    }

    #[test]
    fn whitehead_examples() {
        for h in [Mat::zi(2), Mat::z(&[&[0, 1], &[1, 1]]), Mat::zi(2).neg()] {
            let p = prod(&whitehead_diag5(&h).unwrap());
            let mut expect = Mat::zi(4);
            expect.set_sub(0, 0, &h);
            expect.set_sub(2, 2, &mat_inv_exact(&h).unwrap());
            assert_eq!(p, expect);
        }
    }

    #[test]
    fn antidiag_examples() {
        let p = prod(&antidiag3(&Mat::zi(2)).unwrap());
        assert_eq!(p, Mat::z(&[&[0, 0, 1, 0], &[0, 0, 0, 1], &[-1, 0, 0, 0], &[0, -1, 0, 0]]));
        let h = Mat::z(&[&[0, 1], &[1, 1]]);
        let p = prod(&antidiag3(&h).unwrap());
        let mut expect = Mat::zeros(Ring::Integers, 4, 4);
        expect.set_sub(0, 2, &h);
        expect.set_sub(2, 0, &mat_inv_exact(&h).unwrap().neg());
        assert_eq!(p, expect);
    }

    #[test]
    fn expand_small() {
        let g = Mat::z(&[&[1, 1], &[0, 1]]);
        let h = Mat::z(&[&[1, 0], &[1, 1]]);
        let w = commutator_expand40(&g, &h).unwrap();
        assert!(w.len() <= EXPAND_MAX);
        assert_eq!(w.eval().flatten(), commutator(&g, &h).unwrap().embed(4));
        assert!(commutator_expand40(&Mat::zi(2), &Mat::zi(2)).unwrap().is_empty());
    }

    #[test]
    fn expand_random_n2() {
        let mut r = random::rng(9);
        for _ in 0..10 {
            let g = random::gl(&mut r, 4, 12);
            let h = random::gl(&mut r, 4, 12);
            let w = commutator_expand40(&g, &h).unwrap();
            assert!(w.len() <= EXPAND_MAX);
            assert_eq!(w.eval().flatten(), commutator(&g, &h).unwrap().embed(8));
        }
    }
}
