//! Peeling one dimension at a time: `T = (product of factors) diag(T', 1)`,
//! each factor in the copy `G_B` of `EL_{m-1}` on coordinates `2..m` or in
//! its conjugate `G_P = P G_B P^-1` on coordinates `1, 3..m`.
//!
//! `P` is the signed swap of the first two coordinates. The choice is ours;
//! any element moving `e_1` into the span of `e_2..e_m` would do.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal_form::complete_frame;
use crate::ring::{det, mat_inv_exact, Mat};
use crate::unimodular::coprime_shift;

pub const B_PEEL: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subgroup {
    B,
    P,
}

/// One factor `conjugator * element * conjugator^-1` of size `size`, with
/// `element = diag(1, X)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeelFactor {
    pub size: usize,
    pub copy: Subgroup,
    pub element: Mat,
}

impl PeelFactor {
    pub fn conjugator(&self) -> Mat {
        match self.copy {
            Subgroup::B => Mat::zi(self.size),
            Subgroup::P => swap(self.size),
        }
    }

    pub fn value(&self) -> Mat {
        match self.copy {
            Subgroup::B => self.element.clone(),
            Subgroup::P => {
                let p = swap(self.size);
                &(&p * &self.element) * &p.transpose()
            }
        }
    }

    /// Whether `element` lies in the copy of `SL_{size-1}` fixing `e_1`.
    pub fn in_copy(&self) -> bool {
        let e = &self.element;
        e.is_square()
            && e.flat_rows() == self.size
            && e[(0, 0)].is_one()
            && (1..self.size).all(|k| e[(0, k)].is_zero() && e[(k, 0)].is_zero())
            && det(e).is_one()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeelCertificate {
    pub factors: Vec<PeelFactor>,
    /// Factors used for each peeled size, largest first.
    pub per_index: Vec<usize>,
    pub residue: Mat,
}

impl PeelCertificate {
    /// `product of embedded factors * diag(residue, I)`.
    pub fn reconstruct(&self, m: usize) -> Mat {
        let mut acc = Mat::zi(m);
        for f in &self.factors {
            acc = &acc * &f.value().embed(m);
        }
        &acc * &self.residue.embed(m)
    }
}

/// `[[0, -1], [1, 0]]` in the top-left corner.
pub fn swap(m: usize) -> Mat {
    let mut p = Mat::zi(m);
    p.set(0, 0, BigInt::zero());
    p.set(1, 1, BigInt::zero());
    p.set(0, 1, -BigInt::one());
    p.set(1, 0, BigInt::one());
    p
}

fn row_add(t: &mut Mat, dst: usize, src: usize, r: &BigInt) {
    for c in 0..t.flat_cols() {
        let v = &t[(dst, c)] + r * &t[(src, c)];
        t.set(dst, c, v);
    }
}

fn elementary(m: usize, i: usize, j: usize, r: &BigInt) -> Mat {
    let mut e = Mat::zi(m);
    e.set(i, j, r.clone());
    e
}

/// `g` in `SL_k(Z)` with `g v = e_k`, for a primitive integer vector `v`.
fn to_last_basis_vector(v: &[BigInt]) -> Mat {
    let k = v.len();
    let col = Mat::from_columns(k, &[v.to_vec()]);
    let basis = complete_frame(&col).expect("primitive vector");
    // complete_frame puts the given column first; rotate it to the end.
    let mut cols: Vec<Vec<BigInt>> = (1..k).map(|j| basis.column(j)).collect();
    cols.push(basis.column(0));
    let mut kmat = Mat::from_columns(k, &cols);
    if !det(&kmat).is_one() {
        for i in 0..k {
            let x = -kmat[(i, 0)].clone();
            kmat.set(i, 0, x);
        }
    }
    mat_inv_exact(&kmat).expect("unimodular")
}

/// Peel the last index of `t` (`det t = 1`, size `m >= 4`).
fn peel_once(t: &Mat) -> (Vec<PeelFactor>, Mat) {
    let m = t.flat_rows();
    let last = m - 1;
    let col = t.column(last);
    if col.iter().enumerate().all(|(i, x)| if i == last { x.is_one() } else { x.is_zero() })
        && (0..last).all(|j| t[(last, j)].is_zero())
    {
        return (Vec::new(), t.sub(0, 0, last, last));
    }
    let mut cur = t.clone();
    let mut ops: Vec<(Subgroup, Mat)> = Vec::new();
    let p = swap(m);

    // Step 1, in G_P: make the tail a_2..a_m primitive.
    let tail_gcd = |c: &Mat| (1..m).fold(BigInt::zero(), |g, i| g.gcd(&c[(i, last)]));
    if !tail_gcd(&cur).is_one() {
        let mut g1 = Mat::zi(m);
        let mid = (1..last).fold(BigInt::zero(), |g, i| g.gcd(&cur[(i, last)]));
        if mid.is_zero() {
            // Only a_1 and a_m are nonzero and coprime: copy a_1 into row 3.
            let e = elementary(m, 2, 0, &BigInt::one());
            cur = &e * &cur;
            g1 = &e * &g1;
        } else {
            let r = coprime_shift(&cur[(last, last)], &cur[(0, last)], &mid);
            row_add(&mut cur, last, 0, &r);
            g1 = &elementary(m, last, 0, &r) * &g1;
        }
        ops.push((Subgroup::P, g1));
    }
    debug_assert!(tail_gcd(&cur).is_one());

    // Step 2, in G_B: send (a_2..a_m) to e_m.
    let v: Vec<BigInt> = (1..m).map(|i| cur[(i, last)].clone()).collect();
    if !(v[..v.len() - 1].iter().all(Zero::is_zero) && v[v.len() - 1].is_one()) {
        let g2 = to_last_basis_vector(&v).embed_shift();
        cur = &g2 * &cur;
        ops.push((Subgroup::B, g2));
    }

    // Step 3, in G_P: clear a_1.
    let a1 = cur[(0, last)].clone();
    if !a1.is_zero() {
        let g3 = elementary(m, 0, last, &-a1);
        cur = &g3 * &cur;
        ops.push((Subgroup::P, g3));
    }

    // Now cur = [[T', 0], [r, 1]] = [[I, 0], [r T'^-1, 1]] diag(T', 1).
    let tp = cur.sub(0, 0, last, last);
    let r = cur.sub(last, 0, 1, last);
    let v = &r * &mat_inv_exact(&tp).expect("unimodular residue");
    let mut factors: Vec<PeelFactor> = Vec::new();
    for (copy, g) in ops.iter() {
        let gi = mat_inv_exact(g).expect("unimodular step");
        factors.push(to_factor(*copy, gi, &p));
    }
    if !v[(0, 0)].is_zero() {
        factors.push(to_factor(Subgroup::P, elementary(m, last, 0, &v[(0, 0)]), &p));
    }
    if (1..last).any(|j| !v[(0, j)].is_zero()) {
        let mut e = Mat::zi(m);
        for j in 1..last {
            e.set(last, j, v[(0, j)].clone());
        }
        factors.push(to_factor(Subgroup::B, e, &p));
    }
    (factors, tp)
}

trait EmbedShift {
    fn embed_shift(&self) -> Mat;
}

impl EmbedShift for Mat {
    /// `diag(1, self)`.
    fn embed_shift(&self) -> Mat {
        let k = self.flat_rows();
        let mut out = Mat::zi(k + 1);
        out.set_sub(1, 1, self);
        out
    }
}

fn to_factor(copy: Subgroup, value: Mat, p: &Mat) -> PeelFactor {
    let size = value.flat_rows();
    let element = match copy {
        Subgroup::B => value,
        Subgroup::P => &(&p.transpose() * &value) * p,
    };
    let f = PeelFactor { size, copy, element };
    debug_assert!(f.in_copy());
    f
}

/// Peel `t` down to size `target`.
pub fn peel_dimension(t: &Mat, target: usize) -> Result<PeelCertificate> {
    let m = t.flat_rows();
    if !t.is_square() {
        return Err(Error::DimensionMismatch("peeling needs a square matrix".into()));
    }
    if target < 3 || m < target {
        return Err(Error::DimensionMismatch(format!("cannot peel {m}x{m} down to {target}")));
    }
    if !det(t).is_one() {
        return Err(Error::NotInSL);
    }
    let mut cur = t.lift();
    let mut factors = Vec::new();
    let mut per_index = Vec::new();
    while cur.flat_rows() > target {
        let (fs, next) = peel_once(&cur);
        per_index.push(fs.len());
        factors.extend(fs);
        cur = next;
    }
    Ok(PeelCertificate { factors, per_index, residue: cur })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;

    #[test]
    fn already_peeled() {
        let t = Mat::z(&[&[2, 1, 0], &[1, 1, 0], &[0, 0, 1]]).embed(4);
        let c = peel_dimension(&t, 3).unwrap();
        assert!(c.factors.is_empty());
        assert_eq!(c.residue, t.sub(0, 0, 3, 3));
    }

    #[test]
    fn random_inputs_reconstruct() {
        let mut g = random::rng(4);
        for m in [4, 5, 7, 9] {
            for _ in 0..10 {
                let t = random::sl(&mut g, m, 30);
                let c = peel_dimension(&t, 3).unwrap();
                assert_eq!(c.reconstruct(m), t);
                assert!(c.per_index.iter().all(|&k| k <= B_PEEL));
                assert!(c.factors.iter().all(PeelFactor::in_copy));
            }
        }
    }

    #[test]
    fn awkward_columns() {
        // Last column (a, 0, .., 0, b) with gcd(b, ...) != 1 forces the row-3 copy.
        let mut t = Mat::zi(4);
        t.set(0, 0, 3.into());
        t.set(0, 3, 2.into());
        t.set(3, 0, 4.into());
        t.set(3, 3, 3.into());
        let c = peel_dimension(&t, 3).unwrap();
        assert_eq!(c.reconstruct(4), t);
    }

    #[test]
    fn rejects_non_sl() {
        assert_eq!(peel_dimension(&Mat::z(&[&[-1, 0, 0, 0], &[0, 1, 0, 0], &[0, 0, 1, 0], &[0, 0, 0, 1]]), 3), Err(Error::NotInSL));
    }
}
