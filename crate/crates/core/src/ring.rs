//! Exact matrices over the supported ring tower: the integers, the integers
//! modulo `q`, and `n x n` matrix rings over either.
//!
//! A [`Mat`] over a matrix ring is stored flat, as a base-ring matrix of
//! size `(rows * n) x (cols * n)`, together with its block shape. Crossing
//! between the block picture and the flat picture is just a relabelling of
//! the ring tag, so block views never copy entries.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Ring {
    Integers,
    Modular(u64),
    Matrix { base: Box<Ring>, n: usize },
}

impl Ring {
    pub fn modular(q: u64) -> Result<Ring> {
        if q < 2 {
            return Err(Error::InvalidRing(format!("modulus must be >= 2, got {q}")));
        }
        Ok(Ring::Modular(q))
    }

    pub fn matrix(base: Ring, n: usize) -> Result<Ring> {
        if n == 0 {
            return Err(Error::InvalidRing("matrix ring size must be >= 1".into()));
        }
        if matches!(base, Ring::Matrix { .. }) {
            return Err(Error::InvalidRing("matrix rings nest at most one level".into()));
        }
        Ok(Ring::Matrix { base: Box::new(base), n })
    }

    /// `M_n(Z)`; panics on `n == 0`.
    pub fn zn(n: usize) -> Ring {
        Ring::matrix(Ring::Integers, n).expect("block size must be positive")
    }

    /// Side length of one ring element in the flat representation.
    pub fn block(&self) -> usize {
        match self {
            Ring::Matrix { n, .. } => *n,
            _ => 1,
        }
    }

    /// The scalar ring underneath (itself for scalar rings).
    pub fn scalar(&self) -> Ring {
        match self {
            Ring::Matrix { base, .. } => (**base).clone(),
            r => r.clone(),
        }
    }

    pub fn modulus(&self) -> Option<BigInt> {
        match self.scalar() {
            Ring::Modular(q) => Some(BigInt::from(q)),
            _ => None,
        }
    }

    fn check(&self) -> Result<()> {
        match self {
            Ring::Integers => Ok(()),
            Ring::Modular(q) => Ring::modular(*q).map(|_| ()),
            Ring::Matrix { base, n } => Ring::matrix((**base).clone(), *n).map(|_| ()),
        }
    }

    /// Ring generators as `block x block` matrices over the scalar ring.
    ///
    /// Scalar rings are generated by `1`. `M_n(R)` is generated by
    /// `A_i = a_i E_11` for each generator `a_i` of `R` together with the
    /// signed cyclic shift `B`; for `n = 1` both collapse to `1` and only one
    /// generator is kept.
    pub fn generators(&self) -> Vec<Mat> {
        match self {
            Ring::Integers | Ring::Modular(_) => vec![Mat::identity(self.clone(), 1)],
            Ring::Matrix { base, n } => {
                if *n == 1 {
                    vec![Mat::identity((**base).clone(), 1)]
                } else {
                    let mut gens = crate::elwords::matring_generators(base, *n).matrices;
                    for g in gens.iter_mut() {
                        g.ring = (**base).clone();
                    }
                    gens
                }
            }
        }
    }

    /// Declared stable range: 2 for `Z`, 1 for `Z/q`, and
    /// `1 + floor((sr(base) - 1) / n)` for `M_n(base)`.
    pub fn declared_stable_range(&self) -> usize {
        match self {
            Ring::Integers => 2,
            Ring::Modular(_) => 1,
            Ring::Matrix { base, n } => stable_range_matrix(base.declared_stable_range(), *n),
        }
    }

    fn reduce(&self, x: BigInt) -> BigInt {
        match self {
            Ring::Modular(q) => x.mod_floor(&BigInt::from(*q)),
            Ring::Matrix { base, .. } => base.reduce(x),
            Ring::Integers => x,
        }
    }
}

/// `1 + floor((k - 1) / n)` for a base ring of stable range `k`.
pub fn stable_range_matrix(k: usize, n: usize) -> usize {
    assert!(k >= 1 && n >= 1, "stable range and block size must be positive");
    1 + (k - 1) / n
}

/// Dense matrix with exact entries; see the module docs for the layout.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Mat {
    ring: Ring,
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat<{:?}> {}x{}", self.ring, self.rows, self.cols)?;
        for i in 0..self.flat_rows() {
            let row: Vec<String> = (0..self.flat_cols()).map(|j| self[(i, j)].to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = BigInt;
    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        &self.data[i * self.flat_cols() + j]
    }
}

impl Mat {
    pub fn zeros(ring: Ring, rows: usize, cols: usize) -> Mat {
        let b = ring.block();
        Mat { ring, rows, cols, data: vec![BigInt::zero(); rows * cols * b * b] }
    }

    pub fn identity(ring: Ring, n: usize) -> Mat {
        let mut m = Mat::zeros(ring, n, n);
        for i in 0..m.flat_rows() {
            m.set(i, i, BigInt::one());
        }
        m
    }

    /// Integer matrix from flat row-major entries.
    pub fn from_flat(ring: Ring, rows: usize, cols: usize, data: Vec<BigInt>) -> Result<Mat> {
        ring.check()?;
        let b = ring.block();
        if data.len() != rows * cols * b * b {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for {rows}x{cols} over block {b}, got {}",
                rows * cols * b * b,
                data.len()
            )));
        }
        let data = data.into_iter().map(|x| ring.reduce(x)).collect();
        Ok(Mat { ring, rows, cols, data })
    }

    /// Integer matrix from small rows; panics on ragged input.
    pub fn z(rows: &[&[i64]]) -> Mat {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let data = rows
            .iter()
            .flat_map(|row| {
                assert_eq!(row.len(), c, "ragged rows");
                row.iter().map(|&x| BigInt::from(x))
            })
            .collect();
        Mat { ring: Ring::Integers, rows: r, cols: c, data }
    }

    pub fn zi(n: usize) -> Mat {
        Mat::identity(Ring::Integers, n)
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }
    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }
    pub fn flat_rows(&self) -> usize {
        self.rows * self.ring.block()
    }
    pub fn flat_cols(&self) -> usize {
        self.cols * self.ring.block()
    }
    pub fn data(&self) -> &[BigInt] {
        &self.data
    }

    /// Flat entries for in-place kernels; callers keep entries reduced.
    pub(crate) fn data_mut(&mut self) -> &mut [BigInt] {
        &mut self.data
    }

    pub fn set(&mut self, i: usize, j: usize, x: BigInt) {
        let c = self.flat_cols();
        self.data[i * c + j] = self.ring.reduce(x);
    }

    /// Relabel the ring without touching the flat entries.
    pub(crate) fn with_ring(mut self, ring: Ring) -> Mat {
        let b_old = self.ring.block();
        let b_new = ring.block();
        let (fr, fc) = (self.rows * b_old, self.cols * b_old);
        assert!(fr % b_new == 0 && fc % b_new == 0);
        self.rows = fr / b_new;
        self.cols = fc / b_new;
        self.ring = ring;
        self
    }

    /// The same matrix viewed over the scalar ring (flat base-level matrix).
    pub fn flatten(&self) -> Mat {
        let scalar = self.ring.scalar();
        self.clone().with_ring(scalar)
    }

    pub fn is_identity(&self) -> bool {
        self.is_square()
            && (0..self.flat_rows()).all(|i| {
                (0..self.flat_cols()).all(|j| {
                    let x = &self[(i, j)];
                    if i == j {
                        x.is_one()
                    } else {
                        x.is_zero()
                    }
                })
            })
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    fn same_shape(&self, other: &Mat) -> Result<()> {
        if self.ring != other.ring {
            return Err(Error::RingMismatch(format!("{:?} vs {:?}", self.ring, other.ring)));
        }
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Mat) -> Result<Mat> {
        self.same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| self.ring.reduce(a + b)).collect();
        Ok(Mat { data, ..self.clone_shape() })
    }

    pub fn try_sub(&self, other: &Mat) -> Result<Mat> {
        self.same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| self.ring.reduce(a - b)).collect();
        Ok(Mat { data, ..self.clone_shape() })
    }

    pub fn neg(&self) -> Mat {
        let data = self.data.iter().map(|a| self.ring.reduce(-a)).collect();
        Mat { data, ..self.clone_shape() }
    }

    pub fn scale(&self, s: &BigInt) -> Mat {
        let data = self.data.iter().map(|a| self.ring.reduce(a * s)).collect();
        Mat { data, ..self.clone_shape() }
    }

    fn clone_shape(&self) -> Mat {
        Mat { ring: self.ring.clone(), rows: self.rows, cols: self.cols, data: Vec::new() }
    }

    pub fn try_mul(&self, other: &Mat) -> Result<Mat> {
        if self.ring != other.ring {
            return Err(Error::RingMismatch(format!("{:?} vs {:?}", self.ring, other.ring)));
        }
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let (n, k, m) = (self.flat_rows(), self.flat_cols(), other.flat_cols());
        let mut data = vec![BigInt::zero(); n * m];
        for i in 0..n {
            for t in 0..k {
                let a = &self.data[i * k + t];
                if a.is_zero() {
                    continue;
                }
                let brow = &other.data[t * m..(t + 1) * m];
                let out = &mut data[i * m..(i + 1) * m];
                for (o, b) in out.iter_mut().zip(brow) {
                    if !b.is_zero() {
                        *o += a * b;
                    }
                }
            }
        }
        let data = data.into_iter().map(|x| self.ring.reduce(x)).collect();
        Ok(Mat { ring: self.ring.clone(), rows: self.rows, cols: other.cols, data })
    }

    pub fn transpose(&self) -> Mat {
        let f = self.flatten();
        let (r, c) = (f.rows, f.cols);
        let mut data = Vec::with_capacity(r * c);
        for j in 0..c {
            for i in 0..r {
                data.push(f.data[i * c + j].clone());
            }
        }
        Mat { ring: f.ring, rows: c, cols: r, data }
    }

    /// Flat sub-matrix `[r0, r0 + nr) x [c0, c0 + nc)` over the scalar ring.
    pub fn sub(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Mat {
        let fc = self.flat_cols();
        let mut data = Vec::with_capacity(nr * nc);
        for i in r0..r0 + nr {
            data.extend_from_slice(&self.data[i * fc + c0..i * fc + c0 + nc]);
        }
        Mat { ring: self.ring.scalar(), rows: nr, cols: nc, data }
    }

    /// Overwrite a flat sub-matrix starting at `(r0, c0)`.
    pub fn set_sub(&mut self, r0: usize, c0: usize, m: &Mat) {
        let (nr, nc) = (m.flat_rows(), m.flat_cols());
        for i in 0..nr {
            for j in 0..nc {
                self.set(r0 + i, c0 + j, m[(i, j)].clone());
            }
        }
    }

    /// Block `(i, j)` (0-based) of a matrix over `M_n`, as an `n x n` matrix over the base.
    pub fn block(&self, i: usize, j: usize) -> Mat {
        let b = self.ring.block();
        self.sub(i * b, j * b, b, b)
    }

    pub fn set_block(&mut self, i: usize, j: usize, m: &Mat) {
        let b = self.ring.block();
        self.set_sub(i * b, j * b, m);
    }

    /// `diag(self, I)` of flat size `size`, self placed top-left.
    pub fn embed(&self, size: usize) -> Mat {
        assert!(self.is_square() && self.flat_rows() <= size);
        let mut out = Mat::identity(self.ring.scalar(), size);
        out.set_sub(0, 0, self);
        out
    }

    pub fn vstack(top: &Mat, bottom: &Mat) -> Mat {
        assert_eq!(top.flat_cols(), bottom.flat_cols());
        let mut data = top.flatten().data;
        data.extend(bottom.flatten().data);
        Mat { ring: top.ring.scalar(), rows: top.flat_rows() + bottom.flat_rows(), cols: top.flat_cols(), data }
    }

    pub fn hstack(left: &Mat, right: &Mat) -> Mat {
        Mat::vstack(&left.transpose(), &right.transpose()).transpose()
    }

    pub fn column(&self, j: usize) -> Vec<BigInt> {
        (0..self.flat_rows()).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn from_columns(nrows: usize, cols: &[Vec<BigInt>]) -> Mat {
        let mut m = Mat::zeros(Ring::Integers, nrows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            for (i, x) in c.iter().enumerate() {
                m.set(i, j, x.clone());
            }
        }
        m
    }

    /// Largest entry bit length, reported in certificates.
    pub fn max_bits(&self) -> u64 {
        self.data.iter().map(|x| x.bits()).max().unwrap_or(0)
    }

    pub fn to_rows(&self) -> Vec<Vec<BigInt>> {
        let fc = self.flat_cols();
        self.data.chunks(fc.max(1)).map(|c| c.to_vec()).collect()
    }

    /// Reduce entries modulo `q` and relabel as a matrix over `Z/q`.
    pub fn reduce_mod(&self, q: u64) -> Mat {
        let ring = match &self.ring {
            Ring::Matrix { n, .. } => Ring::Matrix { base: Box::new(Ring::Modular(q)), n: *n },
            _ => Ring::Modular(q),
        };
        let data = self.data.iter().map(|x| ring.reduce(x.clone())).collect();
        Mat { ring, rows: self.rows, cols: self.cols, data }
    }

    /// Integer representatives of a modular matrix.
    pub fn lift(&self) -> Mat {
        let ring = match &self.ring {
            Ring::Matrix { n, .. } => Ring::zn(*n),
            _ => Ring::Integers,
        };
        Mat { ring, rows: self.rows, cols: self.cols, data: self.data.clone() }
    }
}

impl std::ops::Mul for &Mat {
    type Output = Mat;
    fn mul(self, rhs: &Mat) -> Mat {
        self.try_mul(rhs).expect("matrix product shape")
    }
}

impl std::ops::Add for &Mat {
    type Output = Mat;
    fn add(self, rhs: &Mat) -> Mat {
        self.try_add(rhs).expect("matrix sum shape")
    }
}

impl std::ops::Sub for &Mat {
    type Output = Mat;
    fn sub(self, rhs: &Mat) -> Mat {
        self.try_sub(rhs).expect("matrix difference shape")
    }
}

pub fn mat_mul(a: &Mat, b: &Mat) -> Result<Mat> {
    a.try_mul(b)
}

/// View an integer matrix as a matrix over `M_n(Z)`.
pub fn block_view(m: &Mat, n: usize) -> Result<Mat> {
    if n == 0 || m.flat_rows() % n != 0 || m.flat_cols() % n != 0 {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} is not divisible into {n}x{n} blocks",
            m.flat_rows(),
            m.flat_cols()
        )));
    }
    let ring = Ring::matrix(m.ring.scalar(), n)?;
    Ok(m.clone().with_ring(ring))
}

/// Inverse of [`block_view`].
pub fn block_join(m: &Mat) -> Mat {
    m.flatten()
}

/// Exact determinant of the flat matrix (fraction-free Bareiss elimination).
pub fn det(m: &Mat) -> BigInt {
    assert!(m.is_square(), "determinant of a non-square matrix");
    let n = m.flat_rows();
    if n == 0 {
        return BigInt::one();
    }
    let mut a: Vec<Vec<BigInt>> = m.to_rows();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(p) => {
                    a.swap(k, p);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
            a[i][k] = BigInt::zero();
        }
        prev = a[k][k].clone();
    }
    m.ring.reduce(sign * &a[n - 1][n - 1])
}

/// `det = 1` and size at least 3: membership in `EL_m(Z) = SL_m(Z)`.
pub fn is_in_el(m: &Mat) -> bool {
    m.is_square() && m.flat_rows() >= 3 && det(m).is_one()
}

/// Inverse over `Q` of an integer matrix, `None` if singular.
fn rational_inverse(m: &Mat) -> Option<Vec<Vec<BigRational>>> {
    let n = m.flat_rows();
    let mut a: Vec<Vec<BigRational>> = m
        .to_rows()
        .into_iter()
        .map(|r| r.into_iter().map(BigRational::from_integer).collect())
        .collect();
    let mut inv: Vec<Vec<BigRational>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }).collect())
        .collect();
    for k in 0..n {
        let p = (k..n).find(|&i| !a[i][k].is_zero())?;
        a.swap(k, p);
        inv.swap(k, p);
        let piv = a[k][k].clone();
        for j in 0..n {
            a[k][j] = &a[k][j] / &piv;
            inv[k][j] = &inv[k][j] / &piv;
        }
        for i in 0..n {
            if i != k && !a[i][k].is_zero() {
                let f = a[i][k].clone();
                for j in 0..n {
                    let t = &f * &a[k][j];
                    a[i][j] -= t;
                    let t = &f * &inv[k][j];
                    inv[i][j] -= t;
                }
            }
        }
    }
    Some(inv)
}

/// Exact inverse in the same ring.
///
/// Over `Z` (and `M_n(Z)`) this succeeds iff the determinant is `+-1`; over
/// `Z/q` iff the determinant is a unit mod `q`.
pub fn mat_inv_exact(m: &Mat) -> Result<Mat> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch("inverse of a non-square matrix".into()));
    }
    let n = m.flat_rows();
    let lifted = m.lift().flatten();
    let d = det(&lifted);
    match m.ring.modulus() {
        None => {
            if !(d.is_one() || (-&d).is_one()) {
                return Err(Error::NotInvertible);
            }
        }
        Some(q) => {
            if !d.gcd(&q).is_one() {
                return Err(Error::NotInvertible);
            }
        }
    }
    let inv = rational_inverse(&lifted).ok_or(Error::NotInvertible)?;
    let mut data = Vec::with_capacity(n * n);
    match m.ring.modulus() {
        None => {
            for row in inv {
                for x in row {
                    if !x.is_integer() {
                        return Err(Error::NotInvertible);
                    }
                    data.push(x.to_integer());
                }
            }
        }
        Some(q) => {
            let dinv = mod_inverse(&d, &q).ok_or(Error::NotInvertible)?;
            for row in inv {
                for x in row {
                    let adj = x * BigRational::from_integer(d.clone());
                    data.push((adj.to_integer() * &dinv).mod_floor(&q));
                }
            }
        }
    }
    Mat::from_flat(m.ring.scalar(), n, n, data).map(|f| f.with_ring(m.ring.clone()))
}

/// Inverse of `a` modulo `q`.
pub fn mod_inverse(a: &BigInt, q: &BigInt) -> Option<BigInt> {
    let e = a.mod_floor(q).extended_gcd(q);
    if e.gcd.is_one() {
        Some(e.x.mod_floor(q))
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// JSON

pub(crate) mod bigint_str {
    use num_bigint::BigInt;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        S(String),
        I(i64),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        match Repr::deserialize(d)? {
            Repr::S(s) => s.trim().parse().map_err(de::Error::custom),
            Repr::I(i) => Ok(BigInt::from(i)),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct BigStr(#[serde(with = "bigint_str")] BigInt);

#[derive(Serialize, Deserialize)]
struct RingJson {
    kind: KindJson,
}

#[derive(Serialize, Deserialize)]
enum KindJson {
    Z,
    #[serde(rename = "mod")]
    Mod(u64),
    #[serde(rename = "matrix")]
    Matrix { base: Box<RingJson>, n: usize },
}

impl From<&Ring> for RingJson {
    fn from(r: &Ring) -> Self {
        let kind = match r {
            Ring::Integers => KindJson::Z,
            Ring::Modular(q) => KindJson::Mod(*q),
            Ring::Matrix { base, n } => KindJson::Matrix { base: Box::new((&**base).into()), n: *n },
        };
        RingJson { kind }
    }
}

impl TryFrom<RingJson> for Ring {
    type Error = Error;
    fn try_from(j: RingJson) -> Result<Ring> {
        match j.kind {
            KindJson::Z => Ok(Ring::Integers),
            KindJson::Mod(q) => Ring::modular(q),
            KindJson::Matrix { base, n } => Ring::matrix(Ring::try_from(*base)?, n),
        }
    }
}

impl Serialize for Ring {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RingJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Ring {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Ring, D::Error> {
        Ring::try_from(RingJson::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// One matrix entry: a scalar string, or an `n x n` nested array over a matrix ring.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum EntryJson {
    Scalar(BigStr),
    Block(Vec<Vec<BigStr>>),
}

#[derive(Serialize, Deserialize)]
struct MatJson {
    ring: Ring,
    rows: usize,
    cols: usize,
    entries: Vec<Vec<EntryJson>>,
}

impl Serialize for Mat {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let b = self.ring.block();
        let entries = (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| {
                        if matches!(self.ring, Ring::Matrix { .. }) {
                            EntryJson::Block(
                                (0..b)
                                    .map(|a| (0..b).map(|c| BigStr(self[(i * b + a, j * b + c)].clone())).collect())
                                    .collect(),
                            )
                        } else {
                            EntryJson::Scalar(BigStr(self[(i, j)].clone()))
                        }
                    })
                    .collect()
            })
            .collect();
        MatJson { ring: self.ring.clone(), rows: self.rows, cols: self.cols, entries }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Mat {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Mat, D::Error> {
        use serde::de::Error as _;
        let j = MatJson::deserialize(d)?;
        let b = j.ring.block();
        if j.entries.len() != j.rows || j.entries.iter().any(|r| r.len() != j.cols) {
            return Err(D::Error::custom("entries do not match rows/cols"));
        }
        let mut m = Mat::zeros(j.ring.clone(), j.rows, j.cols);
        for (i, row) in j.entries.into_iter().enumerate() {
            for (c, e) in row.into_iter().enumerate() {
                match (e, b) {
                    (EntryJson::Scalar(x), 1) if !matches!(j.ring, Ring::Matrix { .. }) => m.set(i, c, x.0),
                    (EntryJson::Block(blk), _) if matches!(j.ring, Ring::Matrix { .. }) => {
                        if blk.len() != b || blk.iter().any(|r| r.len() != b) {
                            return Err(D::Error::custom("block entry has the wrong size"));
                        }
                        for (a, r) in blk.into_iter().enumerate() {
                            for (cc, x) in r.into_iter().enumerate() {
                                m.set(i * b + a, c * b + cc, x.0);
                            }
                        }
                    }
                    _ => return Err(D::Error::custom("entry shape does not match the ring")),
                }
            }
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_times_m() {
        let m = Mat::z(&[&[1, 2, 3], &[4, 5, 6], &[7, 8, 10]]);
        assert_eq!(&Mat::zi(3) * &m, m);
    }

    #[test]
    fn fibonacci_pair_multiplies_to_identity() {
        let a = Mat::z(&[&[0, 1], &[1, 1]]);
        let b = Mat::z(&[&[-1, 1], &[1, 0]]);
        assert!((&a * &b).is_identity());
    }

    #[test]
    fn block_product_matches_flat_product() {
        let a = Mat::z(&[&[1, 2, 0, 1], &[0, 1, 3, 0], &[2, 0, 1, 1], &[1, 1, 0, 1]]);
        let b = Mat::z(&[&[0, 1, 1, 0], &[1, 0, 2, 1], &[0, 3, 1, 1], &[1, 1, 1, 0]]);
        let ab = &block_view(&a, 2).unwrap() * &block_view(&b, 2).unwrap();
        assert_eq!(block_join(&ab), &a * &b);
    }

    #[test]
    fn mismatched_product_errors() {
        let a = Mat::zi(2);
        let b = Mat::zi(3);
        assert!(matches!(mat_mul(&a, &b), Err(Error::DimensionMismatch(_))));
        let c = Mat::identity(Ring::Modular(5), 2);
        assert!(matches!(mat_mul(&a, &c), Err(Error::RingMismatch(_))));
    }

    #[test]
    fn inverses() {
        assert!(mat_inv_exact(&Mat::zi(3)).unwrap().is_identity());
        let a = Mat::z(&[&[0, 1], &[1, 1]]);
        assert_eq!(mat_inv_exact(&a).unwrap(), Mat::z(&[&[-1, 1], &[1, 0]]));
        assert_eq!(mat_inv_exact(&Mat::z(&[&[2, 0], &[0, 1]])), Err(Error::NotInvertible));
    }

    #[test]
    fn modular_inverse_uses_units() {
        let m = Mat::z(&[&[2, 0], &[0, 1]]).reduce_mod(9);
        let inv = mat_inv_exact(&m).unwrap();
        assert!((&m * &inv).is_identity());
        let m6 = Mat::z(&[&[2, 0], &[0, 1]]).reduce_mod(6);
        assert_eq!(mat_inv_exact(&m6), Err(Error::NotInvertible));
    }

    #[test]
    fn determinants() {
        assert_eq!(det(&Mat::zi(4)), BigInt::one());
        assert_eq!(det(&Mat::z(&[&[0, 1], &[1, 1]])), BigInt::from(-1));
        let mut e = Mat::zi(5);
        e.set(1, 3, BigInt::from(17));
        assert_eq!(det(&e), BigInt::one());
        assert!(is_in_el(&e));
        assert!(!is_in_el(&Mat::zi(2)));
        assert_eq!(det(&Mat::z(&[&[0, 0, 1], &[0, 1, 0], &[1, 0, 0]])), BigInt::from(-1));
    }

    #[test]
    fn stable_range_formula() {
        assert_eq!(stable_range_matrix(2, 1), 2);
        assert_eq!(stable_range_matrix(2, 2), 1);
        assert_eq!(stable_range_matrix(5, 2), 3);
        for n in 2..10 {
            assert_eq!(stable_range_matrix(2, n), 1);
        }
        assert_eq!(Ring::Integers.declared_stable_range(), 2);
        assert_eq!(Ring::zn(3).declared_stable_range(), 1);
        assert_eq!(Ring::zn(1).declared_stable_range(), 2);
    }

    #[test]
    fn block_view_identity_and_elementary() {
        let v = block_view(&Mat::zi(8), 2).unwrap();
        assert_eq!(v.rows(), 4);
        assert!(v.is_identity());
        let mut e = Mat::zi(8);
        e.set(0, 4, BigInt::from(3));
        let v = block_view(&e, 2).unwrap();
        let nonzero: Vec<_> = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j && !v.block(i, j).is_zero())
            .collect();
        assert_eq!(nonzero, vec![(0, 2)]);
        assert!(block_view(&Mat::zi(5), 2).is_err());
    }

    #[test]
    fn nested_matrix_rings_rejected() {
        assert!(Ring::matrix(Ring::zn(2), 2).is_err());
        assert!(Ring::modular(1).is_err());
    }

    #[test]
    fn json_round_trip_big_entries() {
        let mut m = Mat::zi(2);
        m.set(0, 1, "123456789012345678901234567890".parse().unwrap());
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"123456789012345678901234567890\""));
        let back: Mat = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        let blk = block_view(&Mat::zi(4), 2).unwrap();
        let s = serde_json::to_string(&blk).unwrap();
        assert!(s.contains("\"matrix\""));
        let back: Mat = serde_json::from_str(&s).unwrap();
        assert_eq!(back, blk);
        let modm: Mat = serde_json::from_str(
            r#"{"ring":{"kind":{"mod":7}},"rows":1,"cols":2,"entries":[["9","-1"]]}"#,
        )
        .unwrap();
        assert_eq!(modm.data(), &[BigInt::from(2), BigInt::from(6)]);
    }
}
