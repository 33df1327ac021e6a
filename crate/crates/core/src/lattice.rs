//! Exact LLL reduction and nearest-plane size reduction on integer row
//! vectors, used to keep transforms small.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// Nearest integer to `a / b` (`b > 0`), halves rounded up.
pub(crate) fn round_div(a: &BigInt, b: &BigInt) -> BigInt {
    (a * 2u32 + b).div_floor(&(b * 2u32))
}

fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).filter(|(x, y)| !x.is_zero() && !y.is_zero()).map(|(x, y)| x * y).sum()
}

fn axpy(dst: &mut [BigInt], q: &BigInt, src: &[BigInt]) {
    for (d, s) in dst.iter_mut().zip(src) {
        if !s.is_zero() {
            *d -= q * s;
        }
    }
}

/// Fraction-free Gram-Schmidt data: `d[i]` is the Gram determinant of the
/// first `i` rows and `lam[i][j] = d[j + 1] mu[i][j]`.
pub(crate) struct Gso {
    d: Vec<BigInt>,
    lam: Vec<Vec<BigInt>>,
}

/// Fraction-free coefficients of `v` against rows `0..=k` of a basis. With
/// `own`, `v` is row `k` itself and the last entry is `d[k + 1]`.
fn coeffs(v: &[BigInt], b: &[Vec<BigInt>], g: &Gso, k: usize, own: bool) -> Vec<BigInt> {
    let mut out: Vec<BigInt> = Vec::with_capacity(k + 1);
    for j in 0..=k {
        let mut u = dot(v, &b[j]);
        for i in 0..j {
            let lji = if own && j == k { &out[i] } else { &g.lam[j][i] };
            u = (&g.d[i + 1] * &u - &out[i] * lji) / &g.d[i];
        }
        out.push(u);
    }
    out
}

pub(crate) fn gso(b: &[Vec<BigInt>]) -> Gso {
    let n = b.len();
    let mut g = Gso { d: vec![BigInt::one(); n + 1], lam: vec![vec![BigInt::zero(); n]; n] };
    for k in 0..n {
        let c = coeffs(&b[k], b, &g, k, true);
        for (j, x) in c.into_iter().enumerate() {
            if j < k {
                g.lam[k][j] = x;
            } else {
                assert!(!x.is_zero(), "rows must be independent");
                g.d[k + 1] = x;
            }
        }
    }
    g
}

/// Size-reduce row `k` against row `l`.
fn redi(b: &mut [Vec<BigInt>], g: &mut Gso, k: usize, l: usize) {
    let dl = &g.d[l + 1];
    if (&g.lam[k][l] * 2u32).abs() <= *dl {
        return;
    }
    let q = round_div(&g.lam[k][l], dl);
    let bl = b[l].clone();
    axpy(&mut b[k], &q, &bl);
    let t = &q * dl;
    g.lam[k][l] -= t;
    for i in 0..l {
        let t = &q * &g.lam[l][i];
        g.lam[k][i] -= t;
    }
}

fn swapi(b: &mut [Vec<BigInt>], g: &mut Gso, k: usize) {
    let n = b.len();
    b.swap(k, k - 1);
    for j in 0..k - 1 {
        let t = g.lam[k][j].clone();
        g.lam[k][j] = std::mem::replace(&mut g.lam[k - 1][j], t);
    }
    let lam = g.lam[k][k - 1].clone();
    let (dkm2, dkm1, dk) = (g.d[k - 1].clone(), g.d[k].clone(), g.d[k + 1].clone());
    let bb = (&dkm2 * &dk + &lam * &lam) / &dkm1;
    for i in k + 1..n {
        let t = g.lam[i][k].clone();
        let new_k = (&dk * &g.lam[i][k - 1] - &lam * &t) / &dkm1;
        g.lam[i][k - 1] = (&bb * &t + &lam * &new_k) / &dk;
        g.lam[i][k] = new_k;
    }
    g.d[k] = bb;
}

/// LLL with `delta = 3/4` on linearly independent rows.
pub(crate) fn lll(mut b: Vec<Vec<BigInt>>) -> Vec<Vec<BigInt>> {
    let n = b.len();
    if n <= 1 {
        return b;
    }
    let mut g = gso(&b);
    let mut k = 1;
    while k < n {
        redi(&mut b, &mut g, k, k - 1);
        let lhs = &g.d[k + 1] * &g.d[k - 1] * 4;
        let rhs = &g.d[k] * &g.d[k] * 3 - &g.lam[k][k - 1] * &g.lam[k][k - 1] * 4;
        if lhs < rhs {
            swapi(&mut b, &mut g, k);
            k = (k - 1).max(1);
        } else {
            for l in (0..k - 1).rev() {
                redi(&mut b, &mut g, k, l);
            }
            k += 1;
        }
    }
    b
}

/// Reduce `v` modulo the lattice spanned by `basis` (nearest plane).
pub(crate) fn reduce_against(v: &mut [BigInt], basis: &[Vec<BigInt>], g: &Gso) {
    let n = basis.len();
    if n == 0 {
        return;
    }
    let mut lam = coeffs(v, basis, g, n - 1, false);
    for j in (0..n).rev() {
        let dj = &g.d[j + 1];
        if (&lam[j] * 2u32).abs() <= *dj {
            continue;
        }
        let q = round_div(&lam[j], dj);
        axpy(v, &q, &basis[j]);
        let t = &q * dj;
        lam[j] -= t;
        for i in 0..j {
            let t = &q * &g.lam[j][i];
            lam[i] -= t;
        }
    }
}
