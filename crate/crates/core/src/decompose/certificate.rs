//! Certificate format and its verifier.
//!
//! For an `m x m` input with pipeline size `p = 4n` the recorded factors
//! compose as
//!
//! ```text
//! input = (peel factors, in order) * diag(core, I_{m-p})
//! core  = eval(left)^-1 * (commutator words, in order) * diag(residue, I) * eval(right)^-1
//! ```
//!
//! and without a pipeline part `input = (peel factors) * diag(residue, I)`.
//! For `Z/q` inputs the composition yields `lifted`, which must reduce to
//! `input` modulo `q`.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::elwords::{invert_word, Side, Word};
use crate::error::Result;
use crate::ring::{det, Mat, Ring};

use super::commutator::{commutator, EXPAND_MAX};
use super::corner::CORNER_MAX;
use super::peel::{PeelFactor, B_PEEL};
use super::ulul::unitriangular_block;

pub const VERSION: u32 = 1;
pub const TWO_COMMUTATOR_TOTAL: usize = 340;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Recursive,
    Dv2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Shallow,
    Deep,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Stage {
    Peel {
        index: usize,
        factor: PeelFactor,
        /// Certificate for the lower-right block of `factor.element` (deep mode).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sub: Option<Box<Certificate>>,
    },
    Corner {
        side: Side,
        factors: Word,
    },
    Ulul {
        level: usize,
        split: [usize; 2],
        input: Mat,
        /// `U_1, L_1, U_2, L_2`.
        factors: Vec<Mat>,
        output: Mat,
    },
    Commutator {
        level: usize,
        index: usize,
        g: Mat,
        h: Mat,
        factors: Word,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub elementary_block: usize,
    pub elementary_base: usize,
    pub commutators: usize,
    pub peel_factors: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bounds {
    pub corner: usize,
    pub commutator_word: usize,
    /// `20 + 40 K`.
    pub elementary_block: usize,
    /// `4 ceil(log2(2n / d_hat)) + 4` for the recursive strategy.
    pub commutators: usize,
    pub peel_per_index: usize,
    pub residue_size: usize,
    /// `elementary_block - 340`; positive values are the excess over the
    /// two-commutator budget.
    pub gap_to_340: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub v: u32,
    pub input: Mat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lifted: Option<Mat>,
    pub target_d: usize,
    pub strategy: Strategy,
    pub mode: Mode,
    /// Block size `n` of the pipeline part, `0` when there is none.
    pub block_n: usize,
    pub stages: Vec<Stage>,
    pub residue: Mat,
    pub residue_word: Word,
    pub counts: Counts,
    pub bounds: Bounds,
    pub max_bits: u64,
    pub composition: String,
    #[serde(default)]
    pub notes: Vec<String>,
}

pub const COMPOSITION: &str =
    "input = peel factors * diag(eval(left)^-1 * commutator words * diag(residue, I) * eval(right)^-1, I)";

/// Smallest `k >= 0` with `b 2^k >= a`.
pub fn ceil_log2_ratio(a: usize, b: usize) -> usize {
    let mut k = 0;
    while b << k < a {
        k += 1;
    }
    k
}

pub fn commutator_bound(two_n: usize, d_hat: usize) -> usize {
    4 * ceil_log2_ratio(two_n, d_hat) + 4
}

impl Certificate {
    pub fn to_json(&self, pretty: bool) -> Result<String> {
        Ok(if pretty { serde_json::to_string_pretty(self)? } else { serde_json::to_string(self)? })
    }

    pub fn from_json(s: &str) -> Result<Certificate> {
        Ok(serde_json::from_str(s)?)
    }

    fn words(&self) -> impl Iterator<Item = &Word> {
        self.stages.iter().filter_map(|s| match s {
            Stage::Corner { factors, .. } | Stage::Commutator { factors, .. } => Some(factors),
            _ => None,
        })
    }

    pub fn recount(&self) -> Counts {
        let mut c = Counts::default();
        for w in self.words() {
            c.elementary_block += w.len();
            c.elementary_base += w.factors.iter().map(|f| f.r.data().iter().filter(|x| !x.is_zero()).count()).sum::<usize>();
        }
        for s in &self.stages {
            match s {
                Stage::Commutator { .. } => c.commutators += 1,
                Stage::Peel { .. } => c.peel_factors += 1,
                _ => {}
            }
        }
        c
    }

    pub fn residue_size(&self) -> usize {
        let last = self.stages.iter().rev().find_map(|s| match s {
            Stage::Ulul { output, .. } => Some(output.flat_rows()),
            _ => None,
        });
        last.unwrap_or_else(|| if self.block_n > 0 { (2 * self.block_n).min(self.target_d) } else { self.residue.flat_rows() })
    }

    pub fn recompute_bounds(&self) -> Bounds {
        let k = self.recount().commutators;
        let d_hat = self.residue_size();
        let elementary_block = CORNER_MAX + EXPAND_MAX * k;
        Bounds {
            corner: CORNER_MAX,
            commutator_word: EXPAND_MAX,
            elementary_block,
            commutators: if self.block_n > 0 { commutator_bound(2 * self.block_n, d_hat) } else { 0 },
            peel_per_index: B_PEEL,
            residue_size: d_hat,
            gap_to_340: elementary_block as i64 - TWO_COMMUTATOR_TOTAL as i64,
        }
    }

    /// Product of all recorded factors.
    pub fn reconstruct(&self) -> Mat {
        let m = self.input.flat_rows();
        let mut acc = Mat::zi(m);
        for s in &self.stages {
            if let Stage::Peel { factor, .. } = s {
                acc = &acc * &factor.value().embed(m);
            }
        }
        if self.block_n == 0 {
            return &acc * &self.residue.embed(m);
        }
        let p = 4 * self.block_n;
        let mut core = Mat::zi(p);
        let mut right = Mat::zi(p);
        for s in &self.stages {
            match s {
                Stage::Corner { side: Side::Left, factors } => core = &core * &invert_word(factors).eval().flatten(),
                Stage::Corner { side: Side::Right, factors } => right = invert_word(factors).eval().flatten(),
                Stage::Commutator { factors, .. } => core = &core * &factors.eval().flatten(),
                _ => {}
            }
        }
        core = &(&core * &self.residue.embed(p)) * &right;
        &acc * &core.embed(m)
    }
}

fn fail<T>(msg: impl Into<String>) -> std::result::Result<T, String> {
    Err(msg.into())
}

fn check_word(w: &Word, ring: &Ring, size: usize, what: &str) -> std::result::Result<(), String> {
    if w.ring != *ring || w.size != size {
        return fail(format!("{what}: word has ring {:?} size {}, expected {ring:?} size {size}", w.ring, w.size));
    }
    w.check().map_err(|e| format!("{what}: {e}"))
}

/// Full check with a reason on failure.
pub fn check_certificate(c: &Certificate) -> std::result::Result<(), String> {
    if c.v != VERSION {
        return fail(format!("unsupported version {}", c.v));
    }
    if c.strategy != Strategy::Recursive {
        return fail("only the recursive strategy is produced by this build");
    }
    let m = c.input.flat_rows();
    if !c.input.is_square() || c.target_d < 3 || m < c.target_d {
        return fail("input shape or target dimension");
    }
    let d = c.target_d;
    if c.residue.flat_rows() != d.min(m) || !c.residue.is_square() || !det(&c.residue).is_one() {
        return fail("residue is not in SL_d(Z)");
    }
    if *c.residue.ring() != Ring::Integers {
        return fail("residue must be an integer matrix");
    }
    check_word(&c.residue_word, &Ring::Integers, c.residue.flat_rows(), "residue word")?;
    if c.residue_word.eval() != c.residue {
        return fail("residue word does not evaluate to the residue");
    }

    // Peel stages: membership in the copies, per-index bound, sub-certificates.
    let mut per_index = std::collections::BTreeMap::<usize, usize>::new();
    for s in &c.stages {
        if let Stage::Peel { index, factor, sub } = s {
            if factor.size != *index || factor.size > m || !factor.in_copy() {
                return fail(format!("peel factor at index {index} is not in the embedded copy"));
            }
            *per_index.entry(*index).or_default() += 1;
            if let Some(sub) = sub {
                let x = factor.element.sub(1, 1, factor.size - 1, factor.size - 1);
                if sub.input != x {
                    return fail(format!("sub-certificate at index {index} certifies a different element"));
                }
                check_certificate(sub).map_err(|e| format!("sub-certificate at index {index}: {e}"))?;
            }
        }
    }
    if let Some((i, k)) = per_index.iter().find(|(_, &k)| k > B_PEEL) {
        return fail(format!("{k} peel factors at index {i} exceed {B_PEEL}"));
    }

    if c.block_n > 0 {
        check_pipeline(c)?;
    } else if c.stages.iter().any(|s| !matches!(s, Stage::Peel { .. })) {
        return fail("pipeline stages recorded without a pipeline block size");
    }

    if c.counts != c.recount() {
        return fail(format!("recorded counts {:?} differ from recount {:?}", c.counts, c.recount()));
    }
    let bounds = c.recompute_bounds();
    if c.bounds != bounds {
        return fail("recorded bounds differ from recomputed bounds");
    }
    if c.block_n > 0 {
        if c.counts.elementary_block > bounds.elementary_block {
            return fail("elementary count exceeds 20 + 40 K");
        }
        if c.counts.commutators > bounds.commutators {
            return fail("commutator count exceeds the recursive bound");
        }
    }

    let product = c.reconstruct();
    match (c.input.ring(), &c.lifted) {
        (Ring::Integers, None) => {
            if product != c.input {
                return fail("factors do not reproduce the input");
            }
        }
        (Ring::Modular(q), Some(l)) => {
            if !det(l).is_one() || product != *l || l.reduce_mod(*q) != c.input {
                return fail("factors do not reproduce a lift of the input");
            }
        }
        _ => return fail("input ring and lift disagree"),
    }
    Ok(())
}

fn check_pipeline(c: &Certificate) -> std::result::Result<(), String> {
    let n = c.block_n;
    let ring = Ring::zn(n);
    let two_n = 2 * n;
    let mut corners = 0;
    let mut ululs: Vec<(&usize, &[usize; 2], &Mat, &Vec<Mat>, &Mat)> = Vec::new();
    let mut comms: Vec<(usize, usize, &Mat, &Mat, &Word)> = Vec::new();
    for s in &c.stages {
        match s {
            Stage::Corner { side, factors } => {
                check_word(factors, &ring, 4, "corner")?;
                if factors.factors.iter().any(|f| f.side != *side) {
                    return fail("corner factor side tags disagree with the stage");
                }
                corners += factors.len();
            }
            Stage::Ulul { level, split, input, factors, output } => ululs.push((level, split, input, factors, output)),
            Stage::Commutator { level, index, g, h, factors } => comms.push((*level, *index, g, h, factors)),
            Stage::Peel { .. } => {}
        }
    }
    if corners > CORNER_MAX {
        return fail(format!("corner words use {corners} > {CORNER_MAX} factors"));
    }
    let mut expected_input: Option<Mat> = None;
    let mut last_output: Option<&Mat> = None;
    for (k, (level, split, input, factors, output)) in ululs.iter().enumerate() {
        if **level != k || factors.len() != 4 {
            return fail(format!("ulul stage {k} malformed"));
        }
        let s = input.flat_rows();
        let [s1, s2] = **split;
        if k == 0 && s != two_n.min(s) {
            return fail("first ulul level must act on the 2n block");
        }
        if let Some(e) = &expected_input {
            if e != *input {
                return fail(format!("ulul level {k} input is not the previous output"));
            }
        }
        if s1 + s2 != s || s1 < 2 || output.flat_rows() != s1 {
            return fail(format!("ulul level {k} split"));
        }
        let mut prod = Mat::zi(s);
        for (i, f) in factors.iter().enumerate() {
            match unitriangular_block(f, s1) {
                Some((up, _)) if f.is_identity() || up == (i % 2 == 0) => {}
                _ => return fail(format!("ulul level {k} factor {i} has the wrong shape")),
            }
            prod = &prod * f;
        }
        if &(&prod * &output.embed(s)) != *input {
            return fail(format!("ulul level {k} does not multiply out"));
        }
        for (i, f) in factors.iter().enumerate() {
            let matching: Vec<_> = comms.iter().filter(|c| c.0 == k && c.1 == i).collect();
            match (f.is_identity(), matching.len()) {
                (true, 0) => {}
                (false, 1) => {
                    let (_, _, g, h, w) = matching[0];
                    let gh = commutator(g, h).map_err(|e| format!("commutator {k}/{i}: {e}"))?;
                    if g.flat_rows() != two_n || gh != f.embed(two_n) {
                        return fail(format!("commutator {k}/{i} does not equal its ulul factor"));
                    }
                    check_word(w, &ring, 4, "commutator")?;
                    if w.len() > EXPAND_MAX || w.eval().flatten() != gh.embed(4 * n) {
                        return fail(format!("commutator word {k}/{i} is wrong or too long"));
                    }
                }
                _ => return fail(format!("ulul level {k} factor {i} has no unique commutator")),
            }
        }
        expected_input = Some((*output).clone());
        last_output = Some(output);
    }
    if comms.iter().any(|c| c.0 >= ululs.len()) {
        return fail("commutator refers to a missing ulul level");
    }
    if let Some(out) = last_output {
        if out.flat_rows() > c.target_d || out.embed(c.target_d.max(out.flat_rows())) != c.residue {
            return fail("residue is not the last ulul output");
        }
    }
    // Commutator stages must appear in level/index order.
    let order: Vec<(usize, usize)> = comms.iter().map(|c| (c.0, c.1)).collect();
    if order.windows(2).any(|w| w[0] >= w[1]) {
        return fail("commutator stages out of order");
    }
    if !c.residue.is_square() || c.residue.flat_rows() > 4 * n {
        return fail("residue larger than the pipeline block");
    }
    Ok(())
}

pub fn verify_certificate(c: &Certificate) -> bool {
    check_certificate(c).is_ok()
}
