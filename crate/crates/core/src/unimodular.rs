//! Unimodular sequences: membership tests, stable-range reductions, Bezout
//! solvers, and block pivot completion over `Z`, `Z/q` and `M_n(Z)`.
//!
//! Left unimodularity of `(a_1, ..., a_k)` in `M_n(Z)` is the statement that
//! the stacked `(k n) x n` integer matrix has a left inverse, i.e. its columns
//! form a primitive frame. Reductions over matrix rings are therefore solved
//! as frame-extension problems: pick shifts column by column so the columns
//! stay primitive, working through the Smith form of the block being added.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal_form::{complete_frame_with_inverse, is_primitive_frame, left_inverse, snf};
use crate::random;
use crate::ring::{det, Mat, Ring};

/// Ordered ring elements; every element is a `block x block` matrix over the
/// scalar ring (`1 x 1` for `Z` and `Z/q`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniSeq {
    pub ring: Ring,
    pub elements: Vec<Mat>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reduction {
    /// `r_1 .. r_{k-1}` with `reduced_i = a_i + r_i a_k`.
    pub coefficients: Vec<Mat>,
    pub reduced: UniSeq,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bezout {
    /// `x_i` with `sum x_i a_i = 1`.
    pub coefficients: Vec<Mat>,
}

fn scalar(x: BigInt, ring: &Ring) -> Mat {
    Mat::from_flat(ring.scalar(), 1, 1, vec![x]).expect("1x1")
}

impl UniSeq {
    pub fn new(ring: Ring, elements: Vec<Mat>) -> Result<UniSeq> {
        if elements.is_empty() {
            return Err(Error::MalformedInput("empty sequence".into()));
        }
        let b = ring.block();
        for e in &elements {
            if e.flat_rows() != b || e.flat_cols() != b || *e.ring() != ring.scalar() {
                return Err(Error::RingMismatch(format!("element is not in {ring:?}")));
            }
        }
        Ok(UniSeq { ring, elements })
    }

    pub fn integers(xs: &[i64]) -> UniSeq {
        UniSeq { ring: Ring::Integers, elements: xs.iter().map(|&x| scalar(BigInt::from(x), &Ring::Integers)).collect() }
    }

    pub fn integers_big(xs: &[BigInt]) -> UniSeq {
        UniSeq { ring: Ring::Integers, elements: xs.iter().map(|x| scalar(x.clone(), &Ring::Integers)).collect() }
    }

    pub fn modular(q: u64, xs: &[i64]) -> Result<UniSeq> {
        let ring = Ring::modular(q)?;
        let elements = xs.iter().map(|&x| scalar(BigInt::from(x), &ring)).collect();
        Ok(UniSeq { ring, elements })
    }

    pub fn blocks(n: usize, elements: Vec<Mat>) -> Result<UniSeq> {
        UniSeq::new(Ring::zn(n), elements)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Scalar entries, for sequences over `Z` or `Z/q`.
    pub fn scalars(&self) -> Vec<BigInt> {
        self.elements.iter().map(|e| e[(0, 0)].clone()).collect()
    }

    /// All elements stacked vertically, lifted to the integers.
    pub fn stack(&self) -> Mat {
        let mut it = self.elements.iter();
        let first = it.next().expect("nonempty").lift();
        it.fold(first, |acc, e| Mat::vstack(&acc, &e.lift()))
    }
}

fn gcd_all(xs: &[BigInt]) -> BigInt {
    xs.iter().fold(BigInt::zero(), |g, x| g.gcd(x))
}

pub fn is_unimodular(s: &UniSeq) -> bool {
    match &s.ring {
        Ring::Integers => gcd_all(&s.scalars()).is_one(),
        Ring::Modular(q) => {
            let mut xs = s.scalars();
            xs.push(BigInt::from(*q));
            gcd_all(&xs).is_one()
        }
        Ring::Matrix { base, n } => {
            let mut stack = s.stack();
            if let Ring::Modular(q) = **base {
                stack = Mat::vstack(&stack, &Mat::zi(*n).scale(&BigInt::from(q)));
            }
            is_primitive_frame(&stack)
        }
    }
}

/// Smallest `r` in a short window with `gcd(a + r c, b) = 1`, falling back to
/// a factoring-free construction. Requires `gcd(a, b, c) = 1`.
pub(crate) fn coprime_shift(a: &BigInt, c: &BigInt, b: &BigInt) -> BigInt {
    const WINDOW: i64 = 64;
    let b = b.abs();
    if b.is_one() {
        return BigInt::zero();
    }
    for r in 0..WINDOW {
        let r = BigInt::from(r);
        if (a + &r * c).gcd(&b).is_one() {
            return r;
        }
    }
    // b = b1 * b2, b1 coprime to a and every prime of b2 dividing a.
    let mut b1 = b.clone();
    loop {
        let g = b1.gcd(a);
        if g.is_one() {
            break;
        }
        b1 /= g;
    }
    debug_assert!((a + &b1 * c).gcd(&b).is_one());
    b1
}

/// Reduction over `Z` of `(a_1, ..., a_k)`, `k >= 3`, gcd 1.
pub(crate) fn reduce_integers(a: &[BigInt]) -> Vec<BigInt> {
    let k = a.len();
    debug_assert!(k >= 3);
    let last = &a[k - 1];
    let mut r = vec![BigInt::zero(); k - 1];
    if gcd_all(&a[..k - 1]).is_one() {
        return r;
    }
    let mut rest = gcd_all(&a[1..k - 1]);
    if rest.is_zero() {
        // a_2 .. a_{k-1} vanish; shift a_2 onto the last element.
        r[1] = BigInt::one();
        rest = last.abs();
    }
    r[0] = coprime_shift(&a[0], last, &rest);
    r
}

/// Reduction over `Z/q` of `(a_1, ..., a_k)`, `k >= 2`.
fn reduce_modular(a: &[BigInt], q: &BigInt) -> Vec<BigInt> {
    let k = a.len();
    let mut r = vec![BigInt::zero(); k - 1];
    let mut head = a[..k - 1].to_vec();
    head.push(q.clone());
    if gcd_all(&head).is_one() {
        return r;
    }
    let mut rest: Vec<BigInt> = a[1..k - 1].to_vec();
    rest.push(q.clone());
    r[0] = coprime_shift(&a[0], &a[k - 1], &gcd_all(&rest)).mod_floor(q);
    r
}

/// Shift `b` (length `m`) by multiples of `g` into a primitive vector.
fn primitive_shift(b: &[BigInt], g: &BigInt) -> Result<Vec<BigInt>> {
    let m = b.len();
    if g.is_zero() {
        return if gcd_all(b).is_one() { Ok(vec![BigInt::zero(); m]) } else { Err(Error::NotUnimodular) };
    }
    if m == 1 {
        for target in [BigInt::one(), -BigInt::one()] {
            let diff = &target - &b[0];
            if diff.is_multiple_of(g) {
                return Ok(vec![diff / g]);
            }
        }
        return Err(Error::NotReducible(format!("{} is not congruent to +-1 modulo {}", b[0], g)));
    }
    let mut seq = b.to_vec();
    seq.push(g.clone());
    if !gcd_all(&seq).is_one() {
        return Err(Error::NotUnimodular);
    }
    Ok(reduce_integers(&seq))
}

/// Choose `z_j` so that the columns `bases_j + moduli_j * z_j` form a
/// primitive frame. `moduli` must be a divisibility chain in index order
/// followed by zeros (as produced by a Smith form); columns with modulus
/// zero are fixed.
fn extend_frame(bases: &Mat, moduli: &[BigInt]) -> Result<Vec<Vec<BigInt>>> {
    let (n, k) = (bases.flat_rows(), bases.flat_cols());
    assert_eq!(moduli.len(), k);
    let mut shifts = vec![vec![BigInt::zero(); n]; k];
    let mut chosen: Vec<Vec<BigInt>> = Vec::new();
    let fixed: Vec<usize> = (0..k).filter(|&j| moduli[j].is_zero()).collect();
    for &j in &fixed {
        chosen.push(bases.column(j));
    }
    if !chosen.is_empty() && !is_primitive_frame(&Mat::from_columns(n, &chosen)) {
        return Err(Error::NotUnimodular);
    }
    for j in (0..k).rev().filter(|j| !moduli[*j].is_zero()) {
        let f = chosen.len();
        let (basis, basis_inv) = if f == 0 {
            (Mat::zi(n), Mat::zi(n))
        } else {
            complete_frame_with_inverse(&Mat::from_columns(n, &chosen)).ok_or(Error::NotUnimodular)?
        };
        let b = bases.column(j);
        let coords = &basis_inv * &Mat::from_columns(n, &[b.clone()]);
        let tail: Vec<BigInt> = (f..n).map(|i| coords[(i, 0)].clone()).collect();
        let z_tail = primitive_shift(&tail, &moduli[j])?;
        let mut z_coords = vec![BigInt::zero(); n];
        z_coords[f..].clone_from_slice(&z_tail);
        let z = &basis * &Mat::from_columns(n, &[z_coords]);
        let z = z.column(0);
        let col: Vec<BigInt> = b.iter().zip(&z).map(|(x, y)| x + &moduli[j] * y).collect();
        chosen.push(col);
        shifts[j] = z;
    }
    Ok(shifts)
}

/// `x` (`N x k`) such that `b + x d` is a primitive frame, given that the
/// stack `[b; d]` is one (`b` is `N x k`, `d` is `k x k`).
///
/// Always solvable when `N > k`; the square case can be obstructed.
pub fn shift_to_frame(b: &Mat, d: &Mat) -> Result<Mat> {
    let (n, k) = (b.flat_rows(), b.flat_cols());
    if d.flat_rows() != k || d.flat_cols() != k {
        return Err(Error::DimensionMismatch("shift block must be k x k".into()));
    }
    if is_primitive_frame(b) {
        return Ok(Mat::zeros(Ring::Integers, n, k));
    }
    // Small shifts usually work and keep later coefficients small.
    if n > k {
        for trial in 0..random::SMALL_TRIALS {
            let x = random::small_candidate(trial, n, k);
            if is_primitive_frame(&(b + &(&x * d))) {
                return Ok(x);
            }
        }
    }
    let s = snf(d);
    let b0 = b * &s.v;
    let moduli: Vec<BigInt> = (0..k).map(|i| s.d[(i, i)].clone()).collect();
    let shifts = extend_frame(&b0, &moduli)?;
    let y = Mat::from_columns(n, &shifts);
    let x = &y * &s.u;
    debug_assert!(is_primitive_frame(&(b + &(&x * d))));
    Ok(x)
}

pub fn reduce_unimodular(s: &UniSeq) -> Result<Reduction> {
    let sr = s.ring.declared_stable_range();
    if s.len() <= sr || s.len() < 2 {
        return Err(Error::LengthTooShort { len: s.len(), stable_range: sr });
    }
    if !is_unimodular(s) {
        return Err(Error::NotUnimodular);
    }
    let k = s.len();
    let coefficients: Vec<Mat> = match &s.ring {
        Ring::Integers => reduce_integers(&s.scalars()).into_iter().map(|r| scalar(r, &s.ring)).collect(),
        Ring::Modular(q) => {
            reduce_modular(&s.scalars(), &BigInt::from(*q)).into_iter().map(|r| scalar(r, &s.ring)).collect()
        }
        Ring::Matrix { base, n } => {
            if **base != Ring::Integers {
                return Err(Error::InvalidRing("reductions over M_n are implemented for M_n(Z)".into()));
            }
            let n = *n;
            let head = UniSeq { ring: s.ring.clone(), elements: s.elements[..k - 1].to_vec() }.stack();
            let x = shift_to_frame(&head, &s.elements[k - 1])?;
            (0..k - 1).map(|i| x.sub(i * n, 0, n, n)).collect()
        }
    };
    let last = &s.elements[k - 1];
    let reduced = s.elements[..k - 1]
        .iter()
        .zip(&coefficients)
        .map(|(a, r)| a + &(r * last))
        .collect();
    let reduced = UniSeq { ring: s.ring.clone(), elements: reduced };
    debug_assert!(is_unimodular(&reduced));
    Ok(Reduction { coefficients, reduced })
}

/// Bezout coefficients over `Z`: `sum x_i a_i = 1`.
pub(crate) fn bezout_integers(a: &[BigInt]) -> Result<Vec<BigInt>> {
    if a[0].abs().is_one() {
        let mut x = vec![BigInt::zero(); a.len()];
        x[0] = a[0].clone();
        return Ok(x);
    }
    let mut g = a[0].clone();
    let mut x = vec![BigInt::one()];
    for ai in &a[1..] {
        let e = g.extended_gcd(ai);
        for c in x.iter_mut() {
            *c *= &e.x;
        }
        x.push(e.y);
        g = e.gcd;
    }
    if (-&g).is_one() {
        x.iter_mut().for_each(|c| *c = -&*c);
        g = -g;
    }
    if !g.is_one() {
        return Err(Error::NotUnimodular);
    }
    Ok(x)
}

pub fn bezout(s: &UniSeq) -> Result<Bezout> {
    if !is_unimodular(s) {
        return Err(Error::NotUnimodular);
    }
    let coefficients = match &s.ring {
        Ring::Integers => bezout_integers(&s.scalars())?.into_iter().map(|x| scalar(x, &s.ring)).collect(),
        Ring::Modular(q) => {
            let mut xs = s.scalars();
            xs.push(BigInt::from(*q));
            let mut x = bezout_integers(&xs)?;
            x.pop();
            x.into_iter().map(|c| scalar(c, &s.ring)).collect()
        }
        Ring::Matrix { base, n } => {
            let n = *n;
            let mut stack = s.stack();
            if let Ring::Modular(q) = **base {
                stack = Mat::vstack(&stack, &Mat::zi(n).scale(&BigInt::from(q)));
            }
            let y = left_inverse(&stack).ok_or(Error::NotUnimodular)?;
            (0..s.len())
                .map(|i| {
                    let blk = y.sub(0, i * n, n, n);
                    match **base {
                        Ring::Modular(q) => blk.reduce_mod(q),
                        _ => blk,
                    }
                })
                .collect()
        }
    };
    Ok(Bezout { coefficients })
}

/// Integer `c` (`s2 x s1`) with `d + c b` in `GL_{s2}(Z)`, for `b` of size
/// `s1 x s2` and `d` of size `s2 x s2` whose stack `[b; d]` is unimodular.
///
/// Existence is not automatic: with `b = [5; 10]`, `d = [2]` every value of
/// `d + c b` is `2 mod 5`. Such inputs report [`Error::PivotUnavailable`].
pub fn complete_block_pivot(b: &Mat, d: &Mat) -> Result<Mat> {
    let (s1, s2) = (b.flat_rows(), b.flat_cols());
    if d.flat_rows() != s2 || d.flat_cols() != s2 {
        return Err(Error::DimensionMismatch("pivot block must be s2 x s2".into()));
    }
    if !is_primitive_frame(&Mat::vstack(b, d)) {
        return Err(Error::StackNotUnimodular);
    }
    if det(d).abs().is_one() {
        return Ok(Mat::zeros(Ring::Integers, s2, s1));
    }
    // u b v = diag(g); (d + c b) v = d v + (c u^-1) diag(g)
    let s = snf(b);
    let e = d * &s.v;
    let moduli: Vec<BigInt> = (0..s2).map(|j| if j < s1 { s.d[(j, j)].clone() } else { BigInt::zero() }).collect();
    let shifts = extend_frame(&e, &moduli).map_err(|err| match err {
        Error::NotReducible(why) => Error::PivotUnavailable(why),
        other => other,
    })?;
    let mut cp = Mat::zeros(Ring::Integers, s2, s1);
    for (j, z) in shifts.iter().enumerate() {
        if j < s1 && !moduli[j].is_zero() {
            for (i, x) in z.iter().enumerate() {
                cp.set(i, j, x.clone());
            }
        }
    }
    let c = &cp * &s.u;
    debug_assert!(det(&(d + &(&c * b))).abs().is_one());
    Ok(c)
}
