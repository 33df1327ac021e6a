//! `W = U_1 L_1 U_2 L_2 diag(W', I)` for `W` in `GL_s(Z)` and a block split
//! `s = s_1 + s_2`.

use crate::error::{Error, Result};
use crate::normal_form::left_inverse;
use crate::ring::{mat_inv_exact, Mat};
use crate::unimodular::shift_to_frame;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UlulResult {
    pub u1: Mat,
    pub l1: Mat,
    pub u2: Mat,
    pub l2: Mat,
    pub w_prime: Mat,
}

impl UlulResult {
    pub fn factors(&self) -> [&Mat; 4] {
        [&self.u1, &self.l1, &self.u2, &self.l2]
    }
}

pub fn upper(s1: usize, b: &Mat) -> Mat {
    let s2 = b.flat_cols();
    let mut m = Mat::zi(s1 + s2);
    m.set_sub(0, s1, b);
    m
}

pub fn lower(s1: usize, c: &Mat) -> Mat {
    let s2 = c.flat_rows();
    let mut m = Mat::zi(s1 + s2);
    m.set_sub(s1, 0, c);
    m
}

/// Off-diagonal block of `[I B; 0 I]` (`upper = true`) or `[I 0; B I]`, or
/// `None` if `v` has neither shape for this split.
pub fn unitriangular_block(v: &Mat, s1: usize) -> Option<(bool, Mat)> {
    let s = v.flat_rows();
    if !v.is_square() || s1 == 0 || s1 >= s {
        return None;
    }
    let s2 = s - s1;
    let diag_ok = v.sub(0, 0, s1, s1).is_identity() && v.sub(s1, s1, s2, s2).is_identity();
    if !diag_ok {
        return None;
    }
    let ur = v.sub(0, s1, s1, s2);
    let ll = v.sub(s1, 0, s2, s1);
    match (ur.is_zero(), ll.is_zero()) {
        (_, true) => Some((true, ur)),
        (true, false) => Some((false, ll)),
        _ => None,
    }
}

pub fn block_ulul(w: &Mat, split: (usize, usize)) -> Result<UlulResult> {
    let (s1, s2) = split;
    let s = w.flat_rows();
    if !w.is_square() || s1 + s2 != s || s2 == 0 || s1 < s2 {
        return Err(Error::DimensionMismatch(format!("split {split:?} does not fit a {s}x{s} matrix")));
    }
    let a = w.sub(0, 0, s1, s1);
    let b = w.sub(0, s1, s1, s2);
    let c = w.sub(s1, 0, s2, s1);
    let d = w.sub(s1, s1, s2, s2);
    mat_inv_exact(w).map_err(|_| Error::NotInvertible)?;
    // B + x D is a primitive frame; then c = (I - D) Y with Y a left
    // inverse of it puts I in the lower right corner.
    let (x, cc) = if d.is_identity() {
        (Mat::zeros(d.ring().clone(), s1, s2), Mat::zeros(d.ring().clone(), s2, s1))
    } else {
        let x = shift_to_frame(&b, &d)?;
        let bp = &b + &(&x * &d);
        let y = left_inverse(&bp).ok_or(Error::NotInvertible)?;
        (x, &(&Mat::zi(s2) - &d) * &y)
    };
    let ap = &a + &(&x * &c);
    let bp = &b + &(&x * &d);
    let r = &c + &(&cc * &ap);
    let w_prime = &ap - &(&bp * &r);
    let w_inv = mat_inv_exact(&w_prime)?;
    Ok(UlulResult {
        u1: upper(s1, &x.neg()),
        l1: lower(s1, &cc.neg()),
        u2: upper(s1, &bp),
        l2: lower(s1, &(&r * &w_inv)),
        w_prime,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use crate::ring::det;

    fn check(w: &Mat, split: (usize, usize)) -> UlulResult {
        let r = block_ulul(w, split).unwrap();
        let prod = &(&(&(&r.u1 * &r.l1) * &r.u2) * &r.l2) * &r.w_prime.embed(w.flat_rows());
        assert_eq!(&prod, w);
        for (k, f) in r.factors().into_iter().enumerate() {
            let (up, _) = unitriangular_block(f, split.0).expect("unitriangular");
            assert!(f.is_identity() || up == (k % 2 == 0));
        }
        r
    }

    #[test]
    fn reduced_input_gives_identities() {
        let w0 = Mat::z(&[&[2, 1], &[1, 1]]);
        let r = check(&w0.embed(4), (2, 2));
        assert!(r.factors().iter().all(|f| f.is_identity()));
        assert_eq!(r.w_prime, w0);
    }

    #[test]
    fn single_elementary() {
        let mut e = Mat::zi(4);
        e.set(0, 3, 5.into());
        check(&e, (2, 2));
    }

    #[test]
    fn random_gl6() {
        let mut g = random::rng(5);
        for _ in 0..30 {
            let w = random::gl(&mut g, 6, 25);
            let r = check(&w, (4, 2));
            assert_eq!(det(&r.w_prime), det(&w));
        }
    }

    #[test]
    fn rejects_bad_split() {
        assert!(block_ulul(&Mat::zi(4), (1, 3)).is_err());
        assert!(block_ulul(&Mat::zi(4), (2, 1)).is_err());
    }
}
