//! Building certificates: the `EL_4(M_n(Z))` pipeline and the full
//! decomposition of `SL_m` elements.

use num_traits::One;

use crate::elwords::Side;
use crate::error::{Error, Result};
use crate::ring::{block_view, det, Mat, Ring};

use super::certificate::{Bounds, Certificate, Counts, Mode, Stage, Strategy, COMPOSITION, VERSION};
use super::commutator::{block_unitriangular_to_commutator, commutator_expand40};
use super::corner::{corner_reduce_gl4, SIGN_NOTE};
use super::lift::{elementary_word_of, lift_sl};
use super::peel::peel_dimension;
use super::ulul::block_ulul;

pub const SPLIT_NOTE: &str = "ulul levels split s as (floor(s/2) + 1, s - floor(s/2) - 1)";
pub const PEEL_NOTE: &str = "peel conjugator is the signed swap [[0,-1],[1,0]] of the first two coordinates";

/// Stages for `t` in `SL_4n(Z)`, plus the `d x d` residue.
fn pipeline_stages(t: &Mat, d: usize) -> Result<(usize, Vec<Stage>, Mat)> {
    let p = t.flat_rows();
    let n = p / 4;
    let corner = corner_reduce_gl4(&block_view(t, n)?)?;
    let mut stages = vec![
        Stage::Corner { side: Side::Left, factors: corner.left },
        Stage::Corner { side: Side::Right, factors: corner.right },
    ];
    let two_n = 2 * n;
    let mut x = corner.w.flatten();
    let mut level = 0;
    while x.flat_rows() > d {
        let s = x.flat_rows();
        let s1 = s / 2 + 1;
        let split = (s1, s - s1);
        let r = block_ulul(&x, split)?;
        let factors: Vec<Mat> = r.factors().into_iter().cloned().collect();
        let mut comms = Vec::new();
        for (index, f) in factors.iter().enumerate() {
            if f.is_identity() {
                continue;
            }
            let (g, h) = block_unitriangular_to_commutator(f, split)?;
            let (g, h) = (g.embed(two_n), h.embed(two_n));
            let word = commutator_expand40(&g, &h)?;
            comms.push(Stage::Commutator { level, index, g, h, factors: word });
        }
        stages.push(Stage::Ulul { level, split: [split.0, split.1], input: x, factors, output: r.w_prime.clone() });
        stages.extend(comms);
        x = r.w_prime;
        level += 1;
    }
    Ok((n, stages, x.embed(d)))
}

fn finish(mut c: Certificate) -> Certificate {
    c.counts = c.recount();
    c.bounds = c.recompute_bounds();
    c.max_bits = max_bits(&c);
    c
}

fn max_bits(c: &Certificate) -> u64 {
    let mut b = c.residue.max_bits();
    for s in &c.stages {
        b = b.max(match s {
            Stage::Peel { factor, sub, .. } => factor.element.max_bits().max(sub.as_ref().map_or(0, |s| s.max_bits)),
            Stage::Corner { factors, .. } | Stage::Commutator { factors, .. } => {
                factors.factors.iter().map(|f| f.r.max_bits()).max().unwrap_or(0)
            }
            Stage::Ulul { factors, .. } => factors.iter().map(Mat::max_bits).max().unwrap_or(0),
        });
    }
    b
}

fn empty(input: &Mat, d: usize, mode: Mode, residue: Mat) -> Result<Certificate> {
    let residue_word = elementary_word_of(&residue)?;
    Ok(Certificate {
        v: VERSION,
        input: input.clone(),
        lifted: None,
        target_d: d,
        strategy: Strategy::Recursive,
        mode,
        block_n: 0,
        stages: Vec::new(),
        residue,
        residue_word,
        counts: Counts::default(),
        bounds: Bounds::default(),
        max_bits: 0,
        composition: COMPOSITION.into(),
        notes: Vec::new(),
    })
}

fn check_strategy(strategy: Strategy) -> Result<()> {
    match strategy {
        Strategy::Recursive => Ok(()),
        Strategy::Dv2 => Err(Error::StrategyUnavailable(
            "dv2 needs a two-commutator construction that this build does not provide".into(),
        )),
    }
}

/// Certificate for `t` in `SL_4n(Z)` with a `d x d` residue.
pub fn pipeline_el4n(t: &Mat, d: usize, strategy: Strategy) -> Result<Certificate> {
    check_strategy(strategy)?;
    let p = t.flat_rows();
    if !t.is_square() || p % 4 != 0 || p == 0 {
        return Err(Error::DimensionMismatch(format!("pipeline needs a 4n x 4n matrix, got {p}x{}", t.flat_cols())));
    }
    if d < 3 || p <= d {
        return Err(Error::DimensionMismatch(format!("pipeline needs 4n > d >= 3, got 4n = {p}, d = {d}")));
    }
    if *t.ring() != Ring::Integers {
        return Err(Error::RingMismatch("pipeline input must be an integer matrix".into()));
    }
    if !det(t).is_one() {
        return Err(Error::NotInSL);
    }
    let (n, stages, residue) = pipeline_stages(t, d)?;
    let mut c = empty(t, d, Mode::Shallow, residue)?;
    c.block_n = n;
    c.stages = stages;
    c.notes = vec![SIGN_NOTE.into(), SPLIT_NOTE.into()];
    Ok(finish(c))
}

/// Peel to `4 floor(m / 4)` (or to `d`), then run the pipeline. In deep mode
/// every peel factor is decomposed recursively.
pub fn decompose_full(t: &Mat, d: usize, mode: Mode, strategy: Strategy) -> Result<Certificate> {
    check_strategy(strategy)?;
    let m = t.flat_rows();
    if !t.is_square() {
        return Err(Error::DimensionMismatch("input must be square".into()));
    }
    if d < 3 || m < d {
        return Err(Error::DimensionMismatch(format!("need m >= d >= 3, got m = {m}, d = {d}")));
    }
    if matches!(t.ring(), Ring::Matrix { .. }) {
        return Err(Error::RingMismatch("decompose expects a scalar matrix".into()));
    }
    if !det(t).is_one() {
        return Err(Error::NotInSL);
    }
    if let Ring::Modular(_) = t.ring() {
        let lifted = lift_sl(t)?;
        let mut c = decompose_full(&lifted, d, mode, strategy)?;
        c.input = t.clone();
        c.lifted = Some(lifted);
        c.notes.push("modular input: factors reproduce an integer lift of determinant 1".into());
        return Ok(c);
    }
    let t4 = 4 * (m / 4);
    let target = if t4 > d { t4 } else { d };
    let peel = peel_dimension(t, target)?;
    let mut stages = Vec::new();
    for f in peel.factors {
        let sub = match mode {
            Mode::Deep => {
                let x = f.element.sub(1, 1, f.size - 1, f.size - 1);
                Some(Box::new(decompose_full(&x, d, mode, strategy)?))
            }
            Mode::Shallow => None,
        };
        stages.push(Stage::Peel { index: f.size, factor: f, sub });
    }
    let mut notes = Vec::new();
    if !stages.is_empty() {
        notes.push(PEEL_NOTE.to_string());
    }
    let mut c = if target > d {
        let (n, pipe, residue) = pipeline_stages(&peel.residue, d)?;
        stages.extend(pipe);
        notes.push(SIGN_NOTE.into());
        notes.push(SPLIT_NOTE.into());
        let mut c = empty(t, d, mode, residue)?;
        c.block_n = n;
        c
    } else {
        empty(t, d, mode, peel.residue)?
    };
    c.stages = stages;
    c.notes = notes;
    Ok(finish(c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::certificate::{check_certificate, verify_certificate};
    use crate::random;

    #[test]
    fn identity_is_empty() {
        let c = pipeline_el4n(&Mat::zi(8), 3, Strategy::Recursive).unwrap();
        assert_eq!(c.counts.elementary_block, 0);
        assert!(c.residue.is_identity());
        check_certificate(&c).unwrap();
    }

    #[test]
    fn reduced_input_keeps_residue() {
        let s0 = Mat::z(&[&[2, 1, 0], &[1, 1, 1], &[0, 0, 1]]);
        let s0 = &s0 * &Mat::z(&[&[1, 0, 0], &[0, 1, 0], &[0, 1, 1]]);
        assert!(det(&s0).is_one());
        let c = pipeline_el4n(&s0.embed(8), 3, Strategy::Recursive).unwrap();
        check_certificate(&c).unwrap();
        assert_eq!(c.reconstruct(), s0.embed(8));
    }

    #[test]
    fn random_sl8_and_sl12() {
        let mut g = random::rng(21);
        for size in [8, 12] {
            for _ in 0..5 {
                let t = random::sl(&mut g, size, 40);
                let c = pipeline_el4n(&t, 3, Strategy::Recursive).unwrap();
                check_certificate(&c).unwrap();
                assert!(c.counts.commutators <= c.bounds.commutators);
            }
        }
    }

    #[test]
    fn dv2_is_an_extension_point() {
        assert!(matches!(pipeline_el4n(&Mat::zi(8), 3, Strategy::Dv2), Err(Error::StrategyUnavailable(_))));
    }

    #[test]
    fn full_shallow_and_deep() {
        let mut g = random::rng(1);
        for m in [3, 5, 8, 9] {
            let t = random::sl(&mut g, m, 25);
            for mode in [Mode::Shallow, Mode::Deep] {
                let c = decompose_full(&t, 3, mode, Strategy::Recursive).unwrap();
                check_certificate(&c).unwrap();
            }
        }
    }

    #[test]
    fn modular_input() {
        let mut g = random::rng(6);
        let t = random::sl(&mut g, 5, 20).reduce_mod(6);
        let c = decompose_full(&t, 3, Mode::Shallow, Strategy::Recursive).unwrap();
        check_certificate(&c).unwrap();
    }

    #[test]
    fn tampering_is_detected() {
        let mut g = random::rng(3);
        let t = random::sl(&mut g, 8, 30);
        let c = decompose_full(&t, 3, Mode::Shallow, Strategy::Recursive).unwrap();
        assert!(verify_certificate(&c));
        let mut bad = c.clone();
        if let Some(Stage::Commutator { factors, .. }) = bad.stages.iter_mut().find(|s| matches!(s, Stage::Commutator { .. })) {
            let r = factors.factors[0].r.clone();
            factors.factors[0].r = &r + &r;
        }
        assert!(!verify_certificate(&bad));
        let mut bad = c.clone();
        bad.counts.elementary_block += 1;
        assert!(!verify_certificate(&bad));
        let mut bad = c;
        let x = bad.input[(0, 0)].clone() + 1;
        bad.input.set(0, 0, x);
        assert!(!verify_certificate(&bad));
    }
}
