//! Smith and Hermite normal forms over `Z` with exact unimodular transforms.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::lattice;
use crate::ring::{mat_inv_exact, Mat, Ring};

type Rows = Vec<Vec<BigInt>>;

fn ident(n: usize) -> Rows {
    (0..n).map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect()).collect()
}

fn to_mat(rows: Rows, nr: usize, nc: usize) -> Mat {
    let data = rows.into_iter().flatten().collect();
    Mat::from_flat(Ring::Integers, nr, nc, data).expect("shape")
}

fn row_axpy(m: &mut Rows, dst: usize, q: &BigInt, src: usize) {
    // row[dst] += q * row[src]
    if q.is_zero() {
        return;
    }
    let (a, b) = if dst < src {
        let (l, r) = m.split_at_mut(src);
        (&mut l[dst], &r[0])
    } else {
        let (l, r) = m.split_at_mut(dst);
        (&mut r[0], &l[src])
    };
    for (x, y) in a.iter_mut().zip(b.iter()) {
        if !y.is_zero() {
            *x += q * y;
        }
    }
}

fn col_axpy(m: &mut Rows, dst: usize, q: &BigInt, src: usize) {
    if q.is_zero() {
        return;
    }
    for row in m.iter_mut() {
        if !row[src].is_zero() {
            let t = q * &row[src];
            row[dst] += t;
        }
    }
}

fn col_swap(m: &mut Rows, a: usize, b: usize) {
    for row in m.iter_mut() {
        row.swap(a, b);
    }
}

fn col_neg(m: &mut Rows, a: usize) {
    for row in m.iter_mut() {
        row[a] = -&row[a];
    }
}

/// Result of [`snf`]: `u * m * v = d` with `u`, `v` unimodular.
#[derive(Clone, Debug)]
pub struct SnfResult {
    pub u: Mat,
    pub u_inv: Mat,
    pub v: Mat,
    pub v_inv: Mat,
    pub d: Mat,
}

impl SnfResult {
    /// Nonzero diagonal entries `d_1 | d_2 | ...`, all positive.
    pub fn invariant_factors(&self) -> Vec<BigInt> {
        let k = self.d.rows().min(self.d.cols());
        (0..k).map(|i| self.d[(i, i)].clone()).filter(|x| !x.is_zero()).collect()
    }

    pub fn rank(&self) -> usize {
        self.invariant_factors().len()
    }
}

/// Smith normal form with pivoting on the smallest absolute value.
pub fn snf(m: &Mat) -> SnfResult {
    let m = m.flatten();
    assert!(m.ring().modulus().is_none(), "snf is defined over the integers");
    let (nr, nc) = (m.rows(), m.cols());
    let mut a = m.to_rows();
    let mut u = ident(nr);
    let mut ui = ident(nr);
    let mut v = ident(nc);
    let mut vi = ident(nc);

    // Elementary moves, each applied to `a` and mirrored on the transforms.
    macro_rules! row_add {
        ($dst:expr, $q:expr, $src:expr) => {{
            let q: BigInt = $q;
            row_axpy(&mut a, $dst, &q, $src);
            row_axpy(&mut u, $dst, &q, $src);
            col_axpy(&mut ui, $src, &(-&q), $dst);
        }};
    }
    macro_rules! col_add {
        ($dst:expr, $q:expr, $src:expr) => {{
            let q: BigInt = $q;
            col_axpy(&mut a, $dst, &q, $src);
            col_axpy(&mut v, $dst, &q, $src);
            row_axpy(&mut vi, $src, &(-&q), $dst);
        }};
    }

    for t in 0..nr.min(nc) {
        loop {
            let mut best: Option<(usize, usize)> = None;
            for i in t..nr {
                for j in t..nc {
                    if !a[i][j].is_zero() {
                        let better = match best {
                            None => true,
                            Some((bi, bj)) => a[i][j].abs() < a[bi][bj].abs(),
                        };
                        if better {
                            best = Some((i, j));
                        }
                    }
                }
            }
            let Some((pi, pj)) = best else { break };
            if pi != t {
                a.swap(pi, t);
                u.swap(pi, t);
                col_swap(&mut ui, pi, t);
            }
            if pj != t {
                col_swap(&mut a, pj, t);
                col_swap(&mut v, pj, t);
                vi.swap(pj, t);
            }
            let mut clean = true;
            for i in t + 1..nr {
                if !a[i][t].is_zero() {
                    let q = a[i][t].div_floor(&a[t][t]);
                    row_add!(i, -q, t);
                    if !a[i][t].is_zero() {
                        clean = false;
                    }
                }
            }
            for j in t + 1..nc {
                if !a[t][j].is_zero() {
                    let q = a[t][j].div_floor(&a[t][t]);
                    col_add!(j, -q, t);
                    if !a[t][j].is_zero() {
                        clean = false;
                    }
                }
            }
            if !clean {
                continue;
            }
            let bad = (t + 1..nr).find(|&i| (t + 1..nc).any(|j| !a[i][j].is_multiple_of(&a[t][t])));
            match bad {
                Some(i) => row_add!(t, BigInt::one(), i),
                None => break,
            }
        }
        if t < nr && t < nc && a[t][t].is_negative() {
            for x in a[t].iter_mut() {
                *x = -&*x;
            }
            for x in u[t].iter_mut() {
                *x = -&*x;
            }
            col_neg(&mut ui, t);
        }
    }
    SnfResult {
        u: to_mat(u, nr, nr),
        u_inv: to_mat(ui, nr, nr),
        v: to_mat(v, nc, nc),
        v_inv: to_mat(vi, nc, nc),
        d: to_mat(a, nr, nc),
    }
}

/// Row Hermite normal form: `u * m = h`, `h` in row echelon form with positive
/// pivots and entries above each pivot reduced into `[0, pivot)`.
#[derive(Clone, Debug)]
pub struct HnfResult {
    pub u: Mat,
    pub h: Mat,
    pub pivots: Vec<(usize, usize)>,
}

pub fn hnf(m: &Mat) -> HnfResult {
    let m = m.flatten();
    let (nr, nc) = (m.rows(), m.cols());
    let mut a = m.to_rows();
    let mut u = ident(nr);
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..nc {
        if row == nr {
            break;
        }
        loop {
            let best = (row..nr).filter(|&i| !a[i][col].is_zero()).min_by_key(|&i| a[i][col].abs());
            let Some(p) = best else { break };
            a.swap(p, row);
            u.swap(p, row);
            let mut done = true;
            for i in row + 1..nr {
                if !a[i][col].is_zero() {
                    let q = -a[i][col].div_floor(&a[row][col]);
                    row_axpy(&mut a, i, &q, row);
                    row_axpy(&mut u, i, &q, row);
                    if !a[i][col].is_zero() {
                        done = false;
                    }
                }
            }
            if done {
                break;
            }
        }
        if a[row][col].is_zero() {
            continue;
        }
        if a[row][col].is_negative() {
            for x in a[row].iter_mut() {
                *x = -&*x;
            }
            for x in u[row].iter_mut() {
                *x = -&*x;
            }
        }
        for k in 0..row {
            let q = -a[k][col].div_floor(&a[row][col]);
            row_axpy(&mut a, k, &q, row);
            row_axpy(&mut u, k, &q, row);
        }
        pivots.push((row, col));
        row += 1;
    }
    HnfResult { u: to_mat(u, nr, nr), h: to_mat(a, nr, nc), pivots }
}

/// True iff the columns of `m` form a primitive frame: rank equals the
/// column count and every invariant factor is 1.
pub fn is_primitive_frame(m: &Mat) -> bool {
    let r = snf(m);
    let f = r.invariant_factors();
    f.len() == m.flat_cols() && f.iter().all(One::is_one)
}

/// Unimodular `N x N` matrix whose first `k` columns are the primitive frame
/// `f` (`N x k`). `None` if the frame is not primitive.
pub fn complete_frame(f: &Mat) -> Option<Mat> {
    complete_frame_with_inverse(f).map(|(k, _)| k)
}

/// [`complete_frame`] together with the inverse of the completed basis.
///
/// The added columns are LLL-reduced and size-reduced against `f`.
pub fn complete_frame_with_inverse(f: &Mat) -> Option<(Mat, Mat)> {
    let (n, k) = (f.flat_rows(), f.flat_cols());
    if k == 0 {
        return Some((Mat::zi(n), Mat::zi(n)));
    }
    let r = snf(f);
    let inv = r.invariant_factors();
    if inv.len() != k || !inv.iter().all(One::is_one) {
        return None;
    }
    // f = u_inv [v_inv; 0], so the last n - k columns of u_inv complete it.
    let frame: Vec<Vec<BigInt>> = (0..k).map(|j| f.column(j)).collect();
    let fg = lattice::gso(&frame);
    let mut extra: Vec<Vec<BigInt>> = (k..n).map(|j| r.u_inv.column(j)).collect();
    for c in extra.iter_mut() {
        lattice::reduce_against(c, &frame, &fg);
    }
    let mut extra = lattice::lll(extra);
    for c in extra.iter_mut() {
        lattice::reduce_against(c, &frame, &fg);
    }
    let mut cols = frame;
    cols.extend(extra);
    let basis = Mat::from_columns(n, &cols);
    let basis_inv = mat_inv_exact(&basis).ok()?;
    Some((basis, basis_inv))
}

/// Left inverse `y` (`k x N`) of a primitive frame `f` (`N x k`): `y f = I`,
/// size-reduced against the left kernel of `f`.
pub fn left_inverse(f: &Mat) -> Option<Mat> {
    let (n, k) = (f.flat_rows(), f.flat_cols());
    let r = snf(f);
    let inv = r.invariant_factors();
    if inv.len() != k || !inv.iter().all(One::is_one) {
        return None;
    }
    // u f v = [I; 0]  =>  (v [I 0] u) f = I, and rows k.. of u kill f.
    let head = r.u.sub(0, 0, k, n);
    let y = &r.v * &head;
    if k == n {
        return Some(y);
    }
    let kernel = lattice::lll((k..n).map(|i| r.u.sub(i, 0, 1, n).data().to_vec()).collect());
    let g = lattice::gso(&kernel);
    let mut out = Mat::zeros(Ring::Integers, k, n);
    for i in 0..k {
        let mut row = y.sub(i, 0, 1, n).data().to_vec();
        lattice::reduce_against(&mut row, &kernel, &g);
        for (j, x) in row.into_iter().enumerate() {
            out.set(i, j, x);
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::det;

    fn check_snf(m: &Mat) -> SnfResult {
        let r = snf(m);
        assert_eq!(&(&r.u * m) * &r.v, r.d);
        assert!((&r.u * &r.u_inv).is_identity());
        assert!((&r.v * &r.v_inv).is_identity());
        let f = r.invariant_factors();
        for w in f.windows(2) {
            assert!(w[1].is_multiple_of(&w[0]));
        }
        for i in 0..r.d.rows() {
            for j in 0..r.d.cols() {
                if i != j {
                    assert!(r.d[(i, j)].is_zero());
                }
            }
        }
        r
    }

    #[test]
    fn diagonal_is_fixed() {
        let r = check_snf(&Mat::z(&[&[2, 0], &[0, 4]]));
        assert_eq!(r.invariant_factors(), vec![BigInt::from(2), BigInt::from(4)]);
    }

    #[test]
    fn two_four_six_eight() {
        let r = check_snf(&Mat::z(&[&[2, 4], &[6, 8]]));
        assert_eq!(r.invariant_factors(), vec![BigInt::from(2), BigInt::from(4)]);
    }

    #[test]
    fn unimodular_has_trivial_factors() {
        let r = check_snf(&Mat::z(&[&[2, 3], &[1, 2]]));
        assert_eq!(r.invariant_factors(), vec![BigInt::one(), BigInt::one()]);
    }

    #[test]
    fn rectangular_and_rank_deficient() {
        let r = check_snf(&Mat::z(&[&[2, 4, 6], &[4, 8, 12]]));
        assert_eq!(r.rank(), 1);
        let r = check_snf(&Mat::z(&[&[6], &[10], &[15]]));
        assert_eq!(r.invariant_factors(), vec![BigInt::one()]);
    }

    #[test]
    fn hnf_shape_and_transform() {
        let m = Mat::z(&[&[3, 5, 1], &[1, 2, 7], &[4, 1, 0]]);
        let h = hnf(&m);
        assert_eq!(&h.u * &m, h.h);
        assert!(det(&h.u).abs().is_one());
        for (k, &(r, c)) in h.pivots.iter().enumerate() {
            assert_eq!(r, k);
            assert!(h.h[(r, c)].is_positive());
            for i in r + 1..3 {
                assert!(h.h[(i, c)].is_zero());
            }
            for i in 0..r {
                assert!(h.h[(i, c)] >= BigInt::zero() && h.h[(i, c)] < h.h[(r, c)]);
            }
        }
    }

    #[test]
    fn frame_completion() {
        let f = Mat::z(&[&[2], &[3], &[5]]);
        let (k, kinv) = complete_frame_with_inverse(&f).unwrap();
        assert!(det(&k).abs().is_one());
        assert!((&k * &kinv).is_identity());
        assert_eq!(k.column(0), f.column(0));
        let y = left_inverse(&f).unwrap();
        assert!((&y * &f).is_identity());
        assert!(complete_frame(&Mat::z(&[&[2], &[4]])).is_none());
    }
}
