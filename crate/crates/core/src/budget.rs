//! Certified interval arithmetic for the scalar bounds of the property (T)
//! argument: `M(l)`, invariance amplification, and the `eps_1` threshold.
//!
//! Values are expression trees over rationals and square roots of
//! naturals. Every value carries a rational enclosure `[lower, upper]` that
//! can be shrunk on demand; decisions only ever compare enclosures.

use std::fmt;
use std::ops::{Add, Div, Mul, Sub};
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type Q = BigRational;

/// Default enclosure width for constructed values.
pub const DEFAULT_WIDTH: f64 = 1e-12;
/// Precision doublings allowed before a comparison is declared undecidable.
pub const MAX_REFINEMENTS: u32 = 8;
const START_PREC: u32 = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Rat(Q),
    Sqrt(u64),
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
}

fn imin(a: &[Q]) -> Q {
    a.iter().min().expect("nonempty").clone()
}

fn imax(a: &[Q]) -> Q {
    a.iter().max().expect("nonempty").clone()
}

impl Expr {
    /// Enclosure with square roots truncated to `prec` bits; `None` when a
    /// divisor enclosure still contains zero.
    fn enclose(&self, prec: u32) -> Option<(Q, Q)> {
        Some(match self {
            Expr::Rat(q) => (q.clone(), q.clone()),
            Expr::Sqrt(n) => {
                let scale = BigInt::one() << (2 * prec as usize);
                let s = (BigInt::from(*n) * scale).sqrt();
                let den = BigInt::one() << prec as usize;
                let lo = Q::new(s.clone(), den.clone());
                let hi = if &lo * &lo == Q::from_integer(BigInt::from(*n)) { lo.clone() } else { Q::new(s + 1, den) };
                (lo, hi)
            }
            Expr::Add(a, b) => {
                let (a, b) = (a.enclose(prec)?, b.enclose(prec)?);
                (a.0 + b.0, a.1 + b.1)
            }
            Expr::Sub(a, b) => {
                let (a, b) = (a.enclose(prec)?, b.enclose(prec)?);
                (a.0 - b.1, a.1 - b.0)
            }
            Expr::Mul(a, b) => {
                let (a, b) = (a.enclose(prec)?, b.enclose(prec)?);
                let p = [&a.0 * &b.0, &a.0 * &b.1, &a.1 * &b.0, &a.1 * &b.1];
                (imin(&p), imax(&p))
            }
            Expr::Div(a, b) => {
                let (a, b) = (a.enclose(prec)?, b.enclose(prec)?);
                if !b.0.is_positive() && !b.1.is_negative() {
                    return None;
                }
                let p = [&a.0 / &b.0, &a.0 / &b.1, &a.1 / &b.0, &a.1 / &b.1];
                (imin(&p), imax(&p))
            }
        })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Rat(q) if q.is_integer() => write!(f, "{}", q.numer()),
            Expr::Rat(q) => write!(f, "({q})"),
            Expr::Sqrt(n) => write!(f, "sqrt({n})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "{a}*{b}"),
            Expr::Div(a, b) => write!(f, "{a}/{b}"),
        }
    }
}

/// An exact real given by an expression, with a certified enclosure.
#[derive(Clone, Debug)]
pub struct BoundScalar {
    expr: Arc<Expr>,
    lower: Q,
    upper: Q,
    prec: u32,
}

impl PartialEq for BoundScalar {
    fn eq(&self, other: &Self) -> bool {
        self.expr == other.expr
    }
}

impl BoundScalar {
    fn from_expr(expr: Expr) -> BoundScalar {
        let mut prec = START_PREC;
        loop {
            if let Some((lower, upper)) = expr.enclose(prec) {
                return BoundScalar { expr: Arc::new(expr), lower, upper, prec };
            }
            // A divisor that is exactly zero never separates from zero.
            assert!(prec < START_PREC << MAX_REFINEMENTS, "division by zero in bound expression");
            prec *= 2;
        }
    }

    pub fn rational(q: Q) -> BoundScalar {
        BoundScalar::from_expr(Expr::Rat(q))
    }

    pub fn int(x: i64) -> BoundScalar {
        BoundScalar::rational(Q::from_integer(x.into()))
    }

    pub fn ratio(p: i64, q: i64) -> BoundScalar {
        BoundScalar::rational(Q::new(p.into(), q.into()))
    }

    pub fn sqrt(n: u64) -> BoundScalar {
        BoundScalar::from_expr(Expr::Sqrt(n))
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn lower(&self) -> &Q {
        &self.lower
    }

    pub fn upper(&self) -> &Q {
        &self.upper
    }

    pub fn width(&self) -> Q {
        &self.upper - &self.lower
    }

    /// Double the working precision once.
    pub fn refine_once(&mut self) {
        let prec = self.prec * 2;
        if let Some((lo, hi)) = self.expr.enclose(prec) {
            // Enclosures from different precisions are both valid; intersect.
            self.lower = self.lower.clone().max(lo);
            self.upper = self.upper.clone().min(hi);
        }
        self.prec = prec;
    }

    /// Refine until the enclosure width is at most `width`.
    pub fn refined(mut self, width: &Q) -> BoundScalar {
        let mut steps = 0;
        while &self.width() > width && steps < 4 * MAX_REFINEMENTS {
            self.refine_once();
            steps += 1;
        }
        self
    }

    /// Certified `self < other`. `Err(Undecidable)` when the enclosures do not
    /// separate, which happens for equal values.
    pub fn lt(&self, other: &BoundScalar) -> Result<bool> {
        let (mut a, mut b) = (self.clone(), other.clone());
        for _ in 0..=MAX_REFINEMENTS {
            if a.upper < b.lower {
                return Ok(true);
            }
            if a.lower >= b.upper {
                return Ok(false);
            }
            a.refine_once();
            b.refine_once();
        }
        Err(Error::Undecidable(MAX_REFINEMENTS))
    }

    /// Certified sign: `Ok(true)` if positive, `Ok(false)` if negative.
    pub fn is_positive(&self) -> Result<bool> {
        BoundScalar::int(0).lt(self)
    }

    /// Midpoint as a float, for display only.
    pub fn approx(&self) -> f64 {
        ((&self.lower + &self.upper) / Q::from_integer(2.into())).to_f64().unwrap_or(f64::NAN)
    }

    pub fn report(&self) -> ScalarReport {
        ScalarReport {
            expr: self.expr.to_string(),
            lower: self.lower.to_string(),
            upper: self.upper.to_string(),
            approx: self.approx(),
            width: self.width().to_f64().unwrap_or(f64::NAN),
        }
    }
}

/// Parse `"p/q"`, an integer, or a decimal such as `"0.25"`.
pub fn parse_rational(s: &str) -> Result<Q> {
    let s = s.trim();
    if let Some((int, frac)) = s.split_once('.') {
        if !frac.chars().all(|c| c.is_ascii_digit()) || frac.is_empty() {
            return Err(Error::MalformedInput(format!("bad decimal {s:?}")));
        }
        let neg = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches('-'), frac);
        let num = BigInt::from_str(&digits).map_err(|_| Error::MalformedInput(format!("bad decimal {s:?}")))?;
        let q = Q::new(num, BigInt::from(10).pow(frac.len() as u32));
        return Ok(if neg { -q } else { q });
    }
    Q::from_str(s).map_err(|_| Error::MalformedInput(format!("bad rational {s:?}")))
}

impl FromStr for BoundScalar {
    type Err = Error;

    fn from_str(s: &str) -> Result<BoundScalar> {
        parse_rational(s).map(BoundScalar::rational)
    }
}

macro_rules! binop {
    ($tr:ident, $f:ident, $v:ident) => {
        impl $tr<&BoundScalar> for &BoundScalar {
            type Output = BoundScalar;
            fn $f(self, rhs: &BoundScalar) -> BoundScalar {
                BoundScalar::from_expr(Expr::$v(self.expr.clone(), rhs.expr.clone()))
            }
        }
        impl $tr<BoundScalar> for BoundScalar {
            type Output = BoundScalar;
            fn $f(self, rhs: BoundScalar) -> BoundScalar {
                (&self).$f(&rhs)
            }
        }
    };
}

binop!(Add, add, Add);
binop!(Sub, sub, Sub);
binop!(Mul, mul, Mul);
binop!(Div, div, Div);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarReport {
    pub expr: String,
    pub lower: String,
    pub upper: String,
    pub approx: f64,
    pub width: f64,
}

fn default_width() -> Q {
    // 10^-12 as an exact rational.
    Q::new(BigInt::one(), BigInt::from(10).pow(12))
}

/// `3 sqrt(2) (sqrt(l) + 3)`.
pub fn m_bound(l: u64) -> BoundScalar {
    assert!(l >= 1, "m_bound needs l >= 1");
    let e = &(&BoundScalar::int(3) * &BoundScalar::sqrt(2)) * &(&BoundScalar::sqrt(l) + &BoundScalar::int(3));
    e.refined(&default_width())
}

/// `2 M(l) eps`: displacement of any elementary matrix when every generator
/// moves the vector by at most `eps`.
pub fn elementary_invariance(eps: &BoundScalar, l: u64) -> BoundScalar {
    (&(&BoundScalar::int(2) * &m_bound(l)) * eps).refined(&default_width())
}

/// `2 delta / eps`, for `0 <= delta < eps`.
pub fn subgroup_invariance(delta: &BoundScalar, eps: &BoundScalar) -> Result<BoundScalar> {
    if delta.lt(&BoundScalar::int(0))? || !delta.lt(eps)? {
        return Err(Error::DeltaNotBelowEpsilon);
    }
    Ok((&(&BoundScalar::int(2) * delta) / eps).refined(&default_width()))
}

/// `eps0 sqrt(2) / (680 M(l + 1) + 2)`.
pub fn epsilon1_threshold(eps0: &BoundScalar, l: u64) -> BoundScalar {
    let den = &(&BoundScalar::int(680) * &m_bound(l + 1)) + &BoundScalar::int(2);
    (&(eps0 * &BoundScalar::sqrt(2)) / &den).refined(&default_width())
}

/// `sqrt(2) eps0 / (2k)`: chaining the subgroup-invariance step through `k`
/// factors and closing with the `sqrt(2)` criterion. This constant is our
/// own derivation, not a quoted value.
pub fn bounded_product_epsilon(eps0: &BoundScalar, k: u64) -> BoundScalar {
    assert!(k >= 1, "need at least one factor");
    (&(&BoundScalar::sqrt(2) * eps0) / &BoundScalar::int(2 * k as i64)).refined(&default_width())
}

/// `|S_4(M_n(R))|` for `R` generated by `l` elements: `M_n(R)` has `l + 1`
/// generators.
pub fn s4_size(l: u64) -> u64 {
    2 * (16 - 4) + 4 * (l + 1) * 3
}

pub const DEFAULT_K0: u64 = 12;
pub const ELEMENTARY_COUNT: u64 = 340;

#[derive(Clone, Debug)]
pub struct Budget {
    pub l: u64,
    pub k0: u64,
    pub c_el: u64,
    pub eps0: BoundScalar,
    pub eps1: BoundScalar,
    pub k: u64,
}

impl Budget {
    pub fn new(l: u64, k0: u64, c_el: u64, eps0: BoundScalar, eps1: BoundScalar) -> Budget {
        Budget { l, k0, c_el, eps0, eps1, k: k0 + s4_size(l) }
    }

    /// `c_el 2 M(l + 1) eps1 + 2 eps1 / eps0`.
    pub fn displacement(&self) -> BoundScalar {
        let el = &BoundScalar::int(self.c_el as i64) * &elementary_invariance(&self.eps1, self.l + 1);
        let two = BoundScalar::int(2);
        &el + &(&(&two * &self.eps1) / &self.eps0)
    }
}

/// Certified check that the displacement stays below `sqrt(2)`.
pub fn budget_verify(b: &Budget) -> Result<bool> {
    b.displacement().lt(&BoundScalar::sqrt(2))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub v: u32,
    pub l: u64,
    pub k0: u64,
    pub count: u64,
    pub k: u64,
    pub m_bound: ScalarReport,
    pub threshold: ScalarReport,
    pub eps1: ScalarReport,
    pub displacement: ScalarReport,
    pub below_sqrt2: bool,
    pub eps1_below_eps0: bool,
    pub verified: bool,
}

/// Evaluate a budget with `eps1` defaulting to `(1 - 10^-6)` times the
/// threshold.
pub fn budget_report(l: u64, k0: u64, count: u64, eps0: &BoundScalar, eps1: Option<BoundScalar>) -> Result<BudgetReport> {
    if !eps0.is_positive()? {
        return Err(Error::MalformedInput("eps0 must be positive".into()));
    }
    let threshold = epsilon1_threshold(eps0, l);
    let eps1 = eps1.unwrap_or_else(|| &threshold * &BoundScalar::ratio(999_999, 1_000_000));
    let b = Budget::new(l, k0, count, eps0.clone(), eps1.clone());
    let below_sqrt2 = budget_verify(&b)?;
    let eps1_below_eps0 = eps1.lt(eps0)?;
    Ok(BudgetReport {
        v: 1,
        l,
        k0,
        count,
        k: b.k,
        m_bound: m_bound(l + 1).report(),
        threshold: threshold.report(),
        eps1: eps1.report(),
        displacement: b.displacement().refined(&default_width()).report(),
        below_sqrt2,
        eps1_below_eps0,
        verified: below_sqrt2 && eps1_below_eps0,
    })
}
