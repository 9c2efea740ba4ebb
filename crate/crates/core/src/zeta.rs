//! Bivariate Laurent expansions in (zeta, q) and the constant-term
//! machinery.
//!
//! A [`ZetaLaurent`] maps zeta-exponents (stored in 1/2-units, so the same
//! type carries t-expansions on the half-integer grid) to truncated
//! q-series. In the fixed expansion region 1 > |zeta| > |q^{1/2}| every
//! zeta-exponent of absolute value w carries q-valuation >= w/2 - B for a
//! tracked slack B, so for a fixed q-order only finitely many
//! zeta-exponents are ever present.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::One;

use crate::exp::Exp8;
use crate::series::{euler_pochhammer, QSeries};
use crate::{Error, Result};

/// A finite map from zeta-exponents (1/2-units) to q-series, all truncated
/// at a common order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZetaLaurent {
    terms: BTreeMap<i64, QSeries>,
    order: Exp8,
    /// Support slack in Exp8 units: every term at zeta-exponent w (in
    /// 1/2-units) satisfies valuation8 >= 2|w| - slack8. `None` when no
    /// bound is claimed (e.g. bilateral t-expansions of the n-point
    /// function, whose negative coefficients have valuation 0).
    slack8: Option<i64>,
}

impl ZetaLaurent {
    pub fn zero(order: Exp8) -> ZetaLaurent {
        ZetaLaurent { terms: BTreeMap::new(), order, slack8: Some(0) }
    }

    /// Builds from (zeta-exponent in 1/2-units, series) pairs.
    pub fn from_terms(terms: impl IntoIterator<Item = (i64, QSeries)>, order: Exp8, slack8: Option<i64>) -> ZetaLaurent {
        let mut map = BTreeMap::new();
        for (w, s) in terms {
            let s = s.truncate(Exp8(s.order().0.min(order.0)));
            if s.is_zero() {
                continue;
            }
            debug_assert!(s.order() == order, "term order below the declared order");
            if let Some(b) = slack8 {
                debug_assert!(s.valuation().0 >= 2 * w.abs() - b, "support bound violated at zeta-exp {w}");
            }
            map.entry(w)
                .and_modify(|acc: &mut QSeries| *acc = acc.add(&s))
                .or_insert(s);
        }
        map.retain(|_, s| !s.is_zero());
        ZetaLaurent { terms: map, order, slack8 }
    }

    pub fn order(&self) -> Exp8 {
        self.order
    }

    pub fn support(&self) -> impl Iterator<Item = i64> + '_ {
        self.terms.keys().copied()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn slack8(&self) -> Option<i64> {
        self.slack8
    }

    /// The series at zeta-exponent `w` (1/2-units); zero series if absent.
    pub fn term(&self, w: i64) -> QSeries {
        self.terms.get(&w).cloned().unwrap_or_else(|| QSeries::zero(self.order))
    }

    /// Constant term with respect to zeta: the series stored at exponent 0.
    pub fn ct_zeta(&self) -> QSeries {
        self.term(0)
    }

    /// Product, order = min of operand orders, pruning terms whose
    /// q-valuation reaches the order.
    pub fn mul(&self, rhs: &ZetaLaurent) -> ZetaLaurent {
        self.mul_windowed(rhs, i64::MIN, i64::MAX)
    }

    /// Product restricted to result zeta-exponents in `[lo, hi]`
    /// (1/2-units). Exponents outside the window are simply not computed;
    /// the caller is responsible for certifying which cells the window
    /// determines.
    pub fn mul_windowed(&self, rhs: &ZetaLaurent, lo: i64, hi: i64) -> ZetaLaurent {
        let order = Exp8(self.order.0.min(rhs.order.0));
        let mut acc: BTreeMap<i64, QSeries> = BTreeMap::new();
        for (&w1, s1) in &self.terms {
            if s1.valuation().0 >= order.0 {
                continue;
            }
            for (&w2, s2) in &rhs.terms {
                let w = w1 + w2;
                if w < lo || w > hi {
                    continue;
                }
                if s1.valuation().0 + s2.valuation().0 >= order.0 {
                    continue;
                }
                let prod = s1.mul(s2).truncate(order);
                if prod.is_zero() {
                    continue;
                }
                acc.entry(w)
                    .and_modify(|t| *t = t.add(&prod))
                    .or_insert(prod);
            }
        }
        acc.retain(|_, s| !s.is_zero());
        for s in acc.values_mut() {
            if s.order() != order {
                *s = s.truncate(order);
            }
        }
        let slack8 = match (self.slack8, rhs.slack8) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
        if let Some(b) = slack8 {
            for (&w, s) in &acc {
                debug_assert!(s.valuation().0 >= 2 * w.abs() - b, "support bound violated at zeta-exp {w}");
            }
        }
        ZetaLaurent { terms: acc, order, slack8 }
    }

    pub fn add(&self, rhs: &ZetaLaurent) -> ZetaLaurent {
        let order = Exp8(self.order.0.min(rhs.order.0));
        let mut acc = BTreeMap::new();
        for (&w, s) in self.terms.iter().chain(rhs.terms.iter()) {
            let s = s.truncate(order);
            acc.entry(w)
                .and_modify(|t: &mut QSeries| *t = t.add(&s))
                .or_insert(s);
        }
        acc.retain(|_, s: &mut QSeries| !s.is_zero());
        let slack8 = match (self.slack8, rhs.slack8) {
            (Some(a), Some(b)) => Some(a.max(b)),
            _ => None,
        };
        ZetaLaurent { terms: acc, order, slack8 }
    }
}

/// The theta kernel sum_{l in Z} zeta^l q^{l^2/2}, truncated at `order`.
pub fn theta_kernel(order: Exp8) -> ZetaLaurent {
    let mut terms = Vec::new();
    let mut l = 0i64;
    loop {
        let e = Exp8(4 * l * l); // l^2/2 in grid units
        if e.0 >= order.0 {
            break;
        }
        terms.push((2 * l, QSeries::monomial(e, BigInt::one(), order)));
        if l > 0 {
            terms.push((-2 * l, QSeries::monomial(e, BigInt::one(), order)));
        }
        l += 1;
    }
    ZetaLaurent::from_terms(terms, order, Some(0))
}

/// Terms of Theta(t) = sum_l (-1)^l q^{(2l+1)^2/8} t^{l+1/2} for t-exponents
/// l+1/2 in the window `[w_lo, w_hi]` (1/2-units, odd values), each a
/// single monomial truncated at `order`.
pub fn theta_t(w_lo: i64, w_hi: i64, order: Exp8) -> ZetaLaurent {
    let mut terms = Vec::new();
    let mut l = -(w_lo.abs() / 2 + 1);
    while 2 * l + 1 <= w_hi {
        let w = 2 * l + 1;
        if w >= w_lo {
            let e = Exp8((2 * l + 1) * (2 * l + 1));
            let sign = if l.rem_euclid(2) == 0 { BigInt::one() } else { -BigInt::one() };
            terms.push((w, QSeries::monomial(e, sign, order)));
        }
        l += 1;
    }
    ZetaLaurent::from_terms(terms, order, Some(1))
}

/// Which geometric factor of the constant-term integrand to expand.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeomKind {
    /// zeta^{-1} q^{r+1/2} / (1 + zeta^{-1} q^{r+1/2})
    ///   = sum_{l>=0} (-1)^l zeta^{-l-1} q^{(l+1)(r+1/2)}
    Pos { r: u32 },
    /// 1 / (1 + zeta q^{s+1/2}) = sum_{l>=0} (-1)^l zeta^l q^{l(s+1/2)}
    Neg { s: u32 },
}

/// Geometric expansion of one integrand factor in the region
/// 1 > |zeta| > |q^{1/2}| (the only expansion region supported).
pub fn geometric_factor(kind: GeomKind, order: Exp8) -> ZetaLaurent {
    let mut terms = Vec::new();
    match kind {
        GeomKind::Pos { r } => {
            let step = 4 * (2 * r as i64 + 1); // (r+1/2) in grid units
            let mut l = 0i64;
            loop {
                let e = Exp8((l + 1) * step);
                if e.0 >= order.0 {
                    break;
                }
                let sign = if l % 2 == 0 { BigInt::one() } else { -BigInt::one() };
                terms.push((-2 * (l + 1), QSeries::monomial(e, sign, order)));
                l += 1;
            }
        }
        GeomKind::Neg { s } => {
            let step = 4 * (2 * s as i64 + 1);
            let mut l = 0i64;
            loop {
                let e = Exp8(l * step);
                if e.0 >= order.0 {
                    break;
                }
                let sign = if l % 2 == 0 { BigInt::one() } else { -BigInt::one() };
                terms.push((2 * l, QSeries::monomial(e, sign, order)));
                l += 1;
            }
        }
    }
    ZetaLaurent::from_terms(terms, order, Some(0))
}

/// One mismatching cell of a bivariate comparison.
#[derive(Clone, Debug)]
pub struct CellMismatch {
    /// zeta- or t-exponent in 1/2-units.
    pub w_half: i64,
    /// q-exponent.
    pub exp: Exp8,
    pub lhs: BigInt,
    pub rhs: BigInt,
}

/// Compares two bivariate expansions on a zeta-window, coefficientwise for
/// all q-exponents below the common order; returns the first mismatch in
/// (zeta, q) lexicographic order.
pub fn first_mismatch(a: &ZetaLaurent, b: &ZetaLaurent, w_lo: i64, w_hi: i64) -> Option<CellMismatch> {
    let order = Exp8(a.order().0.min(b.order().0));
    for w in w_lo..=w_hi {
        let sa = a.term(w);
        let sb = b.term(w);
        for e in 0.max(sa.valuation().0.min(sb.valuation().0))..order.0 {
            let (ca, cb) = (sa.coeff(Exp8(e)), sb.coeff(Exp8(e)));
            if ca != cb {
                return Some(CellMismatch { w_half: w, exp: Exp8(e), lhs: ca, rhs: cb });
            }
        }
    }
    None
}

/// Checks the Jacobi triple product identity
/// (q;q)_inf (-q^{1/2} zeta; q)_inf (-q^{1/2} zeta^{-1}; q)_inf
///   = sum_l zeta^l q^{l^2/2}
/// coefficientwise for zeta-exponents in `[-window, window]` and
/// q-exponents below `order`. Returns the first mismatching cell, if any.
pub fn jtp_check(order: Exp8, window: i64) -> std::result::Result<(), CellMismatch> {
    let lhs = jtp_product(order);
    let rhs = theta_kernel(order);
    match first_mismatch(&lhs, &rhs, -2 * window, 2 * window) {
        None => Ok(()),
        Some(m) => Err(m),
    }
}

/// The product side of the Jacobi triple product, expanded directly from
/// its factors (no theta input).
pub fn jtp_product(order: Exp8) -> ZetaLaurent {
    let pochhammer = euler_pochhammer(order);
    let up = half_pochhammer_product(order, true);
    let down = half_pochhammer_product(order, false);
    let scalar = ZetaLaurent::from_terms([(0i64, pochhammer)], order, Some(0));
    scalar.mul(&up.mul(&down))
}

/// Prod_{l>=0} (1 + zeta^{+-1} q^{l+1/2}) truncated at `order`.
fn half_pochhammer_product(order: Exp8, positive: bool) -> ZetaLaurent {
    let dir = if positive { 2 } else { -2 };
    let mut acc = ZetaLaurent::from_terms([(0i64, QSeries::one(order))], order, Some(0));
    let mut l = 0i64;
    loop {
        let e = Exp8(4 * (2 * l + 1)); // l + 1/2 in grid units
        if e.0 >= order.0 {
            break;
        }
        let factor = ZetaLaurent::from_terms(
            [
                (0i64, QSeries::one(order)),
                (dir, QSeries::monomial(e, BigInt::one(), order)),
            ],
            order,
            Some(0),
        );
        acc = acc.mul(&factor);
        l += 1;
    }
    acc
}

/// Builds the full constant-term integrand for mode lists `pos` (extract
/// t^{r+1/2}) and `neg` (extract t^{-s-1/2}): the product of the geometric
/// factors with the theta kernel. Collisions (same index in both lists) are
/// accepted and expanded literally.
pub fn ct_integrand(pos: &[u32], neg: &[u32], order: Exp8) -> ZetaLaurent {
    let mut acc = theta_kernel(order);
    for &r in pos {
        acc = acc.mul(&geometric_factor(GeomKind::Pos { r }, order));
    }
    for &s in neg {
        acc = acc.mul(&geometric_factor(GeomKind::Neg { s }, order));
    }
    acc
}

/// Validates that a geometric-factor index is admissible.
pub fn check_mode_index(x: i64) -> Result<u32> {
    u32::try_from(x).map_err(|_| Error::MalformedQuery(format!("negative mode index {x}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    #[test]
    fn theta_t_first_terms() {
        let th = theta_t(-5, 5, Exp8::int(4));
        assert_eq!(th.term(1), QSeries::monomial(Exp8(1), BigInt::one(), Exp8::int(4)));
        assert_eq!(th.term(-1), QSeries::monomial(Exp8(1), -BigInt::one(), Exp8::int(4)));
        assert_eq!(th.term(3), QSeries::monomial(Exp8(9), -BigInt::one(), Exp8::int(4)));
        assert_eq!(th.term(-3), QSeries::monomial(Exp8(9), BigInt::one(), Exp8::int(4)));
        assert!(th.term(0).is_zero());
        assert!(th.term(2).is_zero());
    }

    #[test]
    fn geometric_factor_leading_terms() {
        let order = Exp8::int(8);
        let pos = geometric_factor(GeomKind::Pos { r: 0 }, order);
        assert_eq!(pos.term(-2), QSeries::monomial(Exp8::half(1), BigInt::one(), order));
        let neg0 = geometric_factor(GeomKind::Neg { s: 0 }, order);
        assert_eq!(neg0.term(0), QSeries::one(order));
        let neg1 = geometric_factor(GeomKind::Neg { s: 1 }, order);
        assert_eq!(neg1.term(4), QSeries::monomial(Exp8::int(3), BigInt::one(), order));
    }

    #[test]
    fn kernel_ct_is_one() {
        let k = theta_kernel(Exp8::int(10));
        assert_eq!(k.ct_zeta(), QSeries::one(Exp8::int(10)));
    }

    #[test]
    fn jtp_holds_small() {
        assert!(jtp_check(Exp8::int(20), 6).is_ok());
    }

    #[test]
    fn jtp_perturbation_is_caught() {
        let order = Exp8::int(12);
        let mut lhs = jtp_product(order);
        // perturb the (zeta^0, q^1) cell
        let bump = ZetaLaurent::from_terms(
            [(0i64, QSeries::monomial(Exp8::int(1), BigInt::one(), order))],
            order,
            Some(0),
        );
        lhs = lhs.add(&bump);
        let m = first_mismatch(&lhs, &theta_kernel(order), -4, 4).expect("mismatch expected");
        assert_eq!(m.w_half, 0);
        assert_eq!(m.exp, Exp8::int(1));
        assert_eq!(m.lhs - m.rhs, BigInt::one());
    }

    #[test]
    fn integrand_support_is_small() {
        // the full integrand touches O(sqrt(N) + n) zeta-exponents
        let order = Exp8::int(40);
        let z = ct_integrand(&[3, 1], &[0], order);
        let touched = z.num_terms() as i64;
        assert!(touched <= 2 * ((2 * 40f64).sqrt() as i64 + 3) + 1, "support {touched} too large");
        assert!(z.slack8().is_some());
    }

    #[test]
    fn ct_zeta_of_kernel_example() {
        // CT of the n=1, r=0 integrand to order q^10: q - q^3 + q^6
        let order = Exp8::int(10);
        let ct = ct_integrand(&[0], &[], order).ct_zeta();
        let mut expect = QSeries::zero(order);
        for (e, c) in [(1, 1), (3, -1), (6, 1)] {
            expect = expect.add(&QSeries::monomial(Exp8::int(e), BigInt::from(c), order));
        }
        assert_eq!(ct, expect);
        assert!(ct.coeff_int(0).is_zero());
    }
}
