//! Schreier graphs of `SL_n(Z/q)` acting on vectors or projective points,
//! and spectral gaps of their random walks.
//!
//! This is a desk-scale probe: the gap of an action graph says nothing
//! certified about Kazhdan constants.

use nalgebra::{DMatrix, SymmetricEigen};
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elwords::{uniform_set, GenMeta, GenSet};
use crate::error::{Error, Result};
use crate::ring::Mat;

pub const MAX_VERTICES: usize = 1 << 21;
pub const ORACLE_LIMIT: usize = 2000;
pub const MAX_ITER: usize = 500_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Projective,
    Vectors,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Elementary,
    Uniform,
}

/// Regular symmetric multigraph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchreierGraph {
    pub vertices: usize,
    /// `perms[k][v]`: the `k`-th neighbour of `v`. For a Schreier graph this
    /// is the image of `v` under generator `k`.
    pub perms: Vec<Vec<usize>>,
}

fn is_prime(q: u64) -> bool {
    q >= 2 && (2..).take_while(|d| d * d <= q).all(|d| q % d != 0)
}

fn inv_mod(a: u64, q: u64) -> u64 {
    (1..q).find(|x| a * x % q == 1).expect("unit")
}

fn inverse_perm(p: &[usize]) -> Vec<usize> {
    let mut out = vec![0; p.len()];
    for (v, &w) in p.iter().enumerate() {
        out[w] = v;
    }
    out
}

impl SchreierGraph {
    pub fn degree(&self) -> usize {
        self.perms.len()
    }

    /// Graph from symmetric neighbour lists, every list of the same length.
    pub fn from_neighbours(nbrs: &[Vec<usize>]) -> Result<SchreierGraph> {
        let n = nbrs.len();
        let deg = nbrs.first().map_or(0, Vec::len);
        if nbrs.iter().any(|l| l.len() != deg) {
            return Err(Error::MalformedInput("graph is not regular".into()));
        }
        let perms = (0..deg).map(|k| (0..n).map(|v| nbrs[v][k]).collect()).collect();
        let g = SchreierGraph { vertices: n, perms };
        if !g.is_symmetric() {
            return Err(Error::MalformedInput("graph is not symmetric".into()));
        }
        Ok(g)
    }

    /// Multiset of neighbours of `v`.
    pub fn neighbours(&self, v: usize) -> Vec<usize> {
        self.perms.iter().map(|p| p[v]).collect()
    }

    /// Every edge `v -> w` is matched by an edge `w -> v` of equal multiplicity.
    pub fn is_symmetric(&self) -> bool {
        let mut count = std::collections::HashMap::new();
        for p in &self.perms {
            for (v, &w) in p.iter().enumerate() {
                *count.entry((v, w)).or_insert(0i64) += 1;
                *count.entry((w, v)).or_insert(0i64) -= 1;
            }
        }
        count.values().all(|&c| c == 0)
    }

    pub fn is_connected(&self) -> bool {
        if self.vertices == 0 {
            return true;
        }
        let mut seen = vec![false; self.vertices];
        let mut stack = vec![0];
        seen[0] = true;
        let mut reached = 1;
        while let Some(v) = stack.pop() {
            for p in &self.perms {
                let w = p[v];
                if !seen[w] {
                    seen[w] = true;
                    reached += 1;
                    stack.push(w);
                }
            }
        }
        reached == self.vertices
    }

    /// `(P x)(v) = mean over generators of x(g v)`. Each entry sums in
    /// generator order, so the result does not depend on the thread count.
    pub fn walk(&self, x: &[f64], parallel: bool) -> Vec<f64> {
        let d = self.degree() as f64;
        let entry = |v: usize| self.perms.iter().map(|p| x[p[v]]).sum::<f64>() / d;
        if parallel {
            (0..self.vertices).into_par_iter().map(entry).collect()
        } else {
            (0..self.vertices).map(entry).collect()
        }
    }

    /// Dense walk operator.
    pub fn dense(&self) -> DMatrix<f64> {
        let n = self.vertices;
        let d = self.degree() as f64;
        let mut m = DMatrix::zeros(n, n);
        for p in &self.perms {
            for v in 0..n {
                m[(v, p[v])] += 1.0 / d;
            }
        }
        m
    }
}

/// Vertices of the action, encoded as base-`q` integers.
fn action_points(n: usize, q: u64, action: Action) -> Result<(Vec<Vec<u64>>, Vec<usize>)> {
    let total = (q as u128).pow(n as u32);
    if total > MAX_VERTICES as u128 * q as u128 {
        return Err(Error::SizeOverflow(format!("{q}^{n} points")));
    }
    let total = total as usize;
    let mut index = vec![usize::MAX; total];
    let mut points = Vec::new();
    for code in 1..total {
        let mut v = Vec::with_capacity(n);
        let mut c = code as u64;
        for _ in 0..n {
            v.push(c % q);
            c /= q;
        }
        let keep = match action {
            Action::Vectors => true,
            Action::Projective => v.iter().find(|&&x| x != 0) == Some(&1),
        };
        if keep {
            index[code] = points.len();
            points.push(v);
        }
    }
    if points.len() > MAX_VERTICES {
        return Err(Error::SizeOverflow(format!("{} vertices", points.len())));
    }
    Ok((points, index))
}

fn encode(v: &[u64], q: u64) -> usize {
    v.iter().rev().fold(0u64, |acc, &x| acc * q + x) as usize
}

fn to_small(m: &Mat, q: u64) -> Vec<Vec<u64>> {
    let r = m.lift().reduce_mod(q).lift();
    (0..r.flat_rows()).map(|i| (0..r.flat_cols()).map(|j| r[(i, j)].to_u64().expect("reduced")).collect()).collect()
}

/// Schreier graph of the group generated by `gens` (reduced mod `q`) acting
/// on nonzero vectors or on projective points. Inverses are added for
/// members whose inverse is not already present.
pub fn schreier_graph(n: usize, q: u64, gens: &[Mat], action: Action) -> Result<SchreierGraph> {
    if !is_prime(q) {
        return Err(Error::NotPrime(q));
    }
    if gens.iter().any(|g| g.flat_rows() != n || g.flat_cols() != n) {
        return Err(Error::DimensionMismatch(format!("generators must be {n}x{n}")));
    }
    let (points, index) = action_points(n, q, action)?;
    let mut perms: Vec<Vec<usize>> = Vec::new();
    for g in gens {
        let g = to_small(g, q);
        let perm: Vec<usize> = points
            .iter()
            .map(|v| {
                let mut w: Vec<u64> = g.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum::<u64>() % q).collect();
                match w.iter().find(|&&x| x != 0) {
                    None => return usize::MAX,
                    Some(&lead) if action == Action::Projective => {
                        let s = inv_mod(lead, q);
                        w.iter_mut().for_each(|x| *x = *x * s % q);
                    }
                    Some(_) => {}
                }
                index[encode(&w, q)]
            })
            .collect();
        if perm.iter().any(|&i| i == usize::MAX) {
            return Err(Error::NotInvertible);
        }
        perms.push(perm);
    }
    let closure: Vec<Vec<usize>> = perms.iter().map(|p| inverse_perm(p)).filter(|inv| !perms.contains(inv)).collect();
    perms.extend(closure);
    Ok(SchreierGraph { vertices: points.len(), perms })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Second-largest eigenvalue of the walk operator.
    pub lambda2: f64,
    pub gap: f64,
    /// Largest `|lambda|` off the constants, and `1 -` that.
    pub lambda_abs: f64,
    pub gap_abs: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub connected: bool,
}

fn unit_start(n: usize) -> Vec<f64> {
    let mut x: Vec<f64> = (0..n).map(|v| ((v as f64 + 1.0) * 0.618_033_988_749_894_8).fract() - 0.5).collect();
    deflate(&mut x);
    normalize(&mut x);
    x
}

fn deflate(x: &mut [f64]) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|e| *e -= mean);
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(x: &mut [f64]) -> f64 {
    let n = dot(x, x).sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|e| *e /= n);
    }
    n
}

/// Power iteration for the top eigenvalue of `op` on the complement of the
/// constants. Returns `(value, residual, iterations, converged)`.
fn power(n: usize, tol: f64, op: impl Fn(&[f64]) -> Vec<f64>) -> (f64, f64, usize, bool) {
    let mut x = unit_start(n);
    let (mut rho, mut res) = (0.0, f64::INFINITY);
    for it in 1..=MAX_ITER {
        let mut y = op(&x);
        deflate(&mut y);
        rho = dot(&x, &y);
        res = y.iter().zip(&x).map(|(a, b)| (a - rho * b).powi(2)).sum::<f64>().sqrt();
        if res < tol {
            return (rho, res, it, true);
        }
        if normalize(&mut y) == 0.0 {
            return (0.0, 0.0, it, true);
        }
        x = y;
    }
    (rho, res, MAX_ITER, false)
}

/// `1 - lambda_2` of the walk operator by power iteration on the shifted
/// operator `(P + I) / 2`, and the absolute variant from `P^2`. The residual
/// `|A x - rho x|` is below `tol` on return unless `converged` is false.
pub fn spectral_gap(g: &SchreierGraph, tol: f64, parallel: bool) -> Spectrum {
    let n = g.vertices;
    let connected = g.is_connected();
    if n <= 1 {
        return Spectrum { lambda2: 0.0, gap: 1.0, lambda_abs: 0.0, gap_abs: 1.0, residual: 0.0, iterations: 0, converged: true, connected };
    }
    let (shifted, r1, i1, c1) = power(n, tol, |x| g.walk(x, parallel).iter().zip(x).map(|(a, b)| 0.5 * (a + b)).collect());
    let (sq, r2, i2, c2) = power(n, tol, |x| g.walk(&g.walk(x, parallel), parallel));
    let lambda2 = 2.0 * shifted - 1.0;
    let lambda_abs = sq.max(0.0).sqrt();
    let (gap, gap_abs) = if connected { (1.0 - lambda2, 1.0 - lambda_abs) } else { (0.0, 0.0) };
    Spectrum { lambda2, gap, lambda_abs, gap_abs, residual: r1.max(r2), iterations: i1 + i2, converged: c1 && c2, connected }
}

/// Eigenvalues of the walk operator in decreasing order (dense solver).
pub fn dense_spectrum(g: &SchreierGraph) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(g.dense()).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    ev
}

/// `(lambda_2, max |lambda| off the top)` from the dense solver.
pub fn dense_gap(g: &SchreierGraph) -> (f64, f64) {
    let ev = dense_spectrum(g);
    let l2 = ev.get(1).copied().unwrap_or(0.0);
    let abs = ev.iter().skip(1).map(|x| x.abs()).fold(0.0, f64::max);
    (l2, abs)
}

pub fn family_gens(family: Family, n: usize) -> Result<GenSet> {
    match family {
        Family::Elementary => {
            let mut matrices = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        for s in [1i64, -1] {
                            let mut e = Mat::zi(n);
                            e.set(i, j, s.into());
                            matrices.push(e);
                        }
                    }
                }
            }
            let size = matrices.len();
            let metadata = GenMeta { d: n, l: 1, n: 1, size, distinct: size, notes: vec!["all e_ij(+-1)".into()] };
            Ok(GenSet { name: "elementary".into(), matrices, metadata })
        }
        Family::Uniform => uniform_set(n, 3),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub n: usize,
    pub family: Family,
    pub gens: usize,
    pub degree: usize,
    pub vertices: usize,
    pub lambda2: f64,
    pub gap: f64,
    pub gap_abs: f64,
    pub residual: f64,
    pub converged: bool,
    pub connected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapTable {
    pub v: u32,
    pub q: u64,
    pub action: Action,
    pub tol: f64,
    pub rows: Vec<GapRow>,
}

/// One row per `(n, family)`, in the given order.
pub fn gap_table(ns: &[usize], q: u64, families: &[Family], action: Action, tol: f64, parallel: bool) -> Result<GapTable> {
    let mut rows = Vec::new();
    for &n in ns {
        for &family in families {
            let set = family_gens(family, n)?;
            let g = schreier_graph(n, q, &set.matrices, action)?;
            let s = spectral_gap(&g, tol, parallel);
            rows.push(GapRow {
                n,
                family,
                gens: set.matrices.len(),
                degree: g.degree(),
                vertices: g.vertices,
                lambda2: s.lambda2,
                gap: s.gap,
                gap_abs: s.gap_abs,
                residual: s.residual,
                converged: s.converged,
                connected: s.connected,
            });
        }
    }
    Ok(GapTable { v: 1, q, action, tol, rows })
}

impl GapTable {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("n\tfamily\tgens\tdegree\tvertices\tlambda2\tgap\tgap_abs\n");
        for r in &self.rows {
            let fam = match r.family {
                Family::Elementary => "elementary",
                Family::Uniform => "uniform",
            };
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{:.12}\t{:.12}\t{:.12}\n",
                r.n, fam, r.gens, r.degree, r.vertices, r.lambda2, r.gap, r.gap_abs
            ));
        }
        out
    }
}
