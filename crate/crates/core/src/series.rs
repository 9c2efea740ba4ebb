//! Truncated q-series with exact integer coefficients.
//!
//! A [`QSeries`] is a dense coefficient vector on the 1/8-exponent grid with
//! a declared exclusive truncation `order`: coefficients are guaranteed
//! correct strictly below it and are never reported at or beyond it. Orders
//! are propagated pessimistically (minimum of operand orders, adjusted by
//! valuations under multiplication); no operation silently extends validity.
//!
//! The module also hosts the standard number-theoretic series used
//! everywhere else: the Euler product (q;q)_inf via the pentagonal number
//! theorem, and the partition numbers p(0..N) via the matching recurrence.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::exp::Exp8;

/// A truncated formal q-series on the 1/8-exponent grid, with
/// arbitrary-precision integer coefficients.
///
/// Canonical form: the leading stored coefficient is nonzero, or the series
/// is the zero series (empty storage, `valuation == order`). Storage is
/// dense from `valuation` up to (exclusive) `order`.
#[derive(Clone, PartialEq, Eq)]
pub struct QSeries {
    valuation: i64,
    coeffs: Vec<BigInt>,
    order: i64,
}

impl QSeries {
    /// The zero series with the given declared order.
    pub fn zero(order: Exp8) -> QSeries {
        QSeries { valuation: order.0, coeffs: Vec::new(), order: order.0 }
    }

    /// The constant series 1, truncated at `order`.
    pub fn one(order: Exp8) -> QSeries {
        QSeries::monomial(Exp8::ZERO, BigInt::one(), order)
    }

    /// c * q^e truncated at `order` (zero series if e >= order).
    pub fn monomial(e: Exp8, c: BigInt, order: Exp8) -> QSeries {
        if e.0 >= order.0 || c.is_zero() {
            return QSeries::zero(order);
        }
        let mut coeffs = vec![BigInt::zero(); (order.0 - e.0) as usize];
        coeffs[0] = c;
        QSeries { valuation: e.0, coeffs, order: order.0 }
    }

    /// Builds from a dense coefficient slice starting at `valuation`;
    /// normalizes to canonical form.
    pub fn from_dense(valuation: Exp8, coeffs: Vec<BigInt>, order: Exp8) -> QSeries {
        assert!(valuation.0 + coeffs.len() as i64 <= order.0, "coefficients beyond order");
        let mut s = QSeries { valuation: valuation.0, coeffs, order: order.0 };
        s.coeffs.resize((s.order - s.valuation) as usize, BigInt::zero());
        s.normalize();
        s
    }

    /// Builds from sparse (exponent, coefficient) terms, summing duplicates
    /// and dropping terms at or beyond `order`.
    pub fn from_terms(terms: impl IntoIterator<Item = (Exp8, BigInt)>, order: Exp8) -> QSeries {
        let mut kept: Vec<(i64, BigInt)> = terms
            .into_iter()
            .filter(|(e, c)| e.0 < order.0 && !c.is_zero())
            .map(|(e, c)| (e.0, c))
            .collect();
        if kept.is_empty() {
            return QSeries::zero(order);
        }
        kept.sort_by_key(|t| t.0);
        let val = kept[0].0;
        let mut coeffs = vec![BigInt::zero(); (order.0 - val) as usize];
        for (e, c) in kept {
            coeffs[(e - val) as usize] += c;
        }
        let mut s = QSeries { valuation: val, coeffs, order: order.0 };
        s.normalize();
        s
    }

    fn normalize(&mut self) {
        let lead = self.coeffs.iter().position(|c| !c.is_zero());
        match lead {
            None => {
                self.coeffs.clear();
                self.valuation = self.order;
            }
            Some(k) if k > 0 => {
                self.coeffs.drain(..k);
                self.valuation += k as i64;
            }
            _ => {}
        }
    }

    /// Declared exclusive truncation order.
    pub fn order(&self) -> Exp8 {
        Exp8(self.order)
    }

    /// Exponent of the leading nonzero coefficient; equals `order` for the
    /// zero series.
    pub fn valuation(&self) -> Exp8 {
        Exp8(self.valuation)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient at exponent `e`. Panics at or beyond the truncation
    /// order: such a read is always a caller bug.
    pub fn coeff(&self, e: Exp8) -> BigInt {
        assert!(e.0 < self.order, "coefficient read at {} >= order {}", e, Exp8(self.order));
        if e.0 < self.valuation {
            return BigInt::zero();
        }
        self.coeffs[(e.0 - self.valuation) as usize].clone()
    }

    /// Coefficient at the integer exponent n (panics beyond order).
    pub fn coeff_int(&self, n: i64) -> BigInt {
        self.coeff(Exp8::int(n))
    }

    /// Iterates nonzero (exponent, coefficient) pairs in increasing order.
    pub fn iter_nonzero(&self) -> impl Iterator<Item = (Exp8, &BigInt)> + '_ {
        let val = self.valuation;
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(move |(k, c)| (Exp8(val + k as i64), c))
    }

    pub fn num_nonzero(&self) -> usize {
        self.coeffs.iter().filter(|c| !c.is_zero()).count()
    }

    /// Re-truncates to a lower (or equal) order.
    pub fn truncate(&self, order: Exp8) -> QSeries {
        if order.0 >= self.order {
            assert!(order.0 <= self.order, "truncate cannot extend order");
            return self.clone();
        }
        let keep = (order.0 - self.valuation).max(0) as usize;
        let mut s = QSeries {
            valuation: self.valuation.min(order.0),
            coeffs: self.coeffs[..keep.min(self.coeffs.len())].to_vec(),
            order: order.0,
        };
        s.coeffs.resize((s.order - s.valuation) as usize, BigInt::zero());
        s.normalize();
        s
    }

    /// Multiplies by q^e (shifts every exponent; order shifts with it).
    pub fn shift(&self, e: Exp8) -> QSeries {
        QSeries { valuation: self.valuation + e.0, coeffs: self.coeffs.clone(), order: self.order + e.0 }
    }

    pub fn neg(&self) -> QSeries {
        let coeffs = self.coeffs.iter().map(|c| -c).collect();
        QSeries { valuation: self.valuation, coeffs, order: self.order }
    }

    pub fn scalar_mul(&self, c: &BigInt) -> QSeries {
        if c.is_zero() {
            return QSeries::zero(Exp8(self.order));
        }
        let coeffs = self.coeffs.iter().map(|x| x * c).collect();
        QSeries { valuation: self.valuation, coeffs, order: self.order }
    }

    /// Sum, truncated at the minimum of the operand orders.
    pub fn add(&self, rhs: &QSeries) -> QSeries {
        let order = self.order.min(rhs.order);
        let val = self.valuation.min(rhs.valuation).min(order);
        let mut coeffs = vec![BigInt::zero(); (order - val) as usize];
        for s in [self, rhs] {
            let top = s.order.min(order);
            for (k, c) in s.coeffs.iter().enumerate() {
                let e = s.valuation + k as i64;
                if e >= top {
                    break;
                }
                if !c.is_zero() {
                    coeffs[(e - val) as usize] += c;
                }
            }
        }
        let mut out = QSeries { valuation: val, coeffs, order };
        out.normalize();
        out
    }

    pub fn sub(&self, rhs: &QSeries) -> QSeries {
        self.add(&rhs.neg())
    }

    /// Product, truncated at min(a.order + b.valuation, b.order + a.valuation).
    ///
    /// Schoolbook over the nonzero entries of the sparser operand; the dense
    /// scans to q^4000 never multiply two large dense series.
    pub fn mul(&self, rhs: &QSeries) -> QSeries {
        let order = (self.order + rhs.valuation).min(rhs.order + self.valuation);
        if self.is_zero() || rhs.is_zero() {
            return QSeries::zero(Exp8(order));
        }
        let (small, big) = if self.num_nonzero() <= rhs.num_nonzero() { (self, rhs) } else { (rhs, self) };
        let val = self.valuation + rhs.valuation;
        let mut coeffs = vec![BigInt::zero(); (order - val).max(0) as usize];
        for (es, cs) in small.iter_nonzero() {
            let lim = order - es.0;
            for (k, cb) in big.coeffs.iter().enumerate() {
                let eb = big.valuation + k as i64;
                if eb >= lim {
                    break;
                }
                if !cb.is_zero() {
                    coeffs[(es.0 + eb - val) as usize] += cs * cb;
                }
            }
        }
        let mut out = QSeries { valuation: val, coeffs, order };
        out.normalize();
        out
    }

    /// Exact quotient self / rhs for a unit divisor (leading coefficient
    /// +-1). Always exact over the integers; the quotient order is
    /// min(self.order, self.valuation - 2 rhs.valuation + rhs.order).
    pub fn div_unit(&self, rhs: &QSeries) -> QSeries {
        assert!(!rhs.is_zero(), "division by zero series");
        let lead = &rhs.coeffs[0];
        assert!(lead.abs().is_one(), "div_unit requires a +-1 leading coefficient");
        let val = self.valuation - rhs.valuation;
        let order = self.order.min(val + (rhs.order - rhs.valuation));
        if self.is_zero() || order <= val {
            return QSeries::zero(Exp8(order.max(val.min(order))));
        }
        let n = (order - val) as usize;
        let mut out = vec![BigInt::zero(); n];
        let divisor_tail: Vec<(usize, &BigInt)> = rhs
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, c)| !c.is_zero())
            .collect();
        for k in 0..n {
            let mut acc = if (self.valuation + k as i64) < self.order && k < (self.order - self.valuation) as usize
            {
                self.coeffs.get(k).cloned().unwrap_or_else(BigInt::zero)
            } else {
                BigInt::zero()
            };
            for (j, c) in &divisor_tail {
                if *j > k {
                    break;
                }
                acc -= *c * &out[k - j];
            }
            out[k] = if lead.is_one() { acc } else { -acc };
        }
        let mut s = QSeries { valuation: val, coeffs: out, order };
        s.normalize();
        s
    }

    /// JSON object in the on-disk schema:
    /// `{"scale":8,"valuation":v,"order":o,"coeffs":["...", ...]}` with
    /// decimal-string coefficients, dense from the valuation. Byte-exact
    /// across runs.
    pub fn to_json(&self) -> SeriesJson {
        SeriesJson {
            scale: 8,
            valuation: self.valuation,
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c.to_string()).collect(),
        }
    }

    /// Parses the schema produced by [`QSeries::to_json`].
    pub fn from_json(j: &SeriesJson) -> crate::Result<QSeries> {
        if j.scale != 8 {
            return Err(crate::Error::MalformedQuery(format!("unsupported scale {}", j.scale)));
        }
        let coeffs: Vec<BigInt> = j
            .coeffs
            .iter()
            .map(|s| s.parse::<BigInt>().map_err(|e| crate::Error::MalformedQuery(e.to_string())))
            .collect::<crate::Result<_>>()?;
        Ok(QSeries::from_dense(Exp8(j.valuation), coeffs, Exp8(j.order)))
    }
}

/// Serde mirror of the series JSON schema.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct SeriesJson {
    pub scale: u8,
    pub valuation: i64,
    pub order: i64,
    pub coeffs: Vec<String>,
}

impl fmt::Display for QSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "O(q^{})", Exp8(self.order));
        }
        let mut first = true;
        let mut shown = 0usize;
        for (e, c) in self.iter_nonzero() {
            if shown == 12 {
                write!(f, " + ...")?;
                break;
            }
            if first {
                write!(f, "{}", term(c, e))?;
                first = false;
            } else if c.is_negative() {
                write!(f, " - {}", term(&c.abs(), e))?;
            } else {
                write!(f, " + {}", term(c, e))?;
            }
            shown += 1;
        }
        write!(f, " + O(q^{})", Exp8(self.order))
    }
}

impl fmt::Debug for QSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn term(c: &BigInt, e: Exp8) -> String {
    if e.0 == 0 {
        format!("{}", c)
    } else if c.abs().is_one() {
        format!("{}q^{}", if c.is_negative() { "-" } else { "" }, e)
    } else {
        format!("{}*q^{}", c, e)
    }
}

/// Generalized pentagonal exponents g_k = k(3k-1)/2 for k = 1, -1, 2, -2, ...
/// paired with the sign (-1)^k, while g_k < `limit` (integer exponents).
pub fn pentagonal_terms(limit: i64) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    let mut k = 1i64;
    loop {
        let g1 = k * (3 * k - 1) / 2;
        let g2 = k * (3 * k + 1) / 2;
        let sign = if k % 2 == 1 { -1 } else { 1 };
        if g1 >= limit && g2 >= limit {
            break;
        }
        if g1 < limit {
            out.push((g1, sign));
        }
        if g2 < limit {
            out.push((g2, sign));
        }
        k += 1;
    }
    out
}

/// The Euler product (q;q)_inf truncated at `order`, via the pentagonal
/// number theorem: 1 + sum_{k>=1} (-1)^k (q^{k(3k-1)/2} + q^{k(3k+1)/2}).
pub fn euler_pochhammer(order: Exp8) -> QSeries {
    assert!(order.0 > 0, "euler_pochhammer needs a positive order");
    let limit = order.0 / 8 + 1;
    let mut terms = vec![(Exp8::ZERO, BigInt::one())];
    for (g, s) in pentagonal_terms(limit) {
        terms.push((Exp8::int(g), BigInt::from(s)));
    }
    QSeries::from_terms(terms, order)
}

/// Partition numbers p(0..=n) by the pentagonal recurrence
/// p(n) = sum_{k>=1} (-1)^{k+1} (p(n - k(3k-1)/2) + p(n - k(3k+1)/2)).
pub fn partition_numbers(n: usize) -> Vec<BigInt> {
    let mut p = Vec::with_capacity(n + 1);
    p.push(BigInt::one());
    let pent = pentagonal_terms(n as i64 + 1);
    for m in 1..=n as i64 {
        let mut acc = BigInt::zero();
        for &(g, s) in &pent {
            if g > m {
                break;
            }
            // recurrence sign is opposite to the series sign
            if s < 0 {
                acc += &p[(m - g) as usize];
            } else {
                acc -= &p[(m - g) as usize];
            }
        }
        p.push(acc);
    }
    p
}

/// Exact quotient of `a` by the Euler product (q;q)_inf, using the sparse
/// pentagonal form of the divisor: O(N sqrt N) big-integer operations.
pub fn div_by_pochhammer(a: &QSeries, order: Exp8) -> QSeries {
    let a = a.truncate(Exp8(order.0.min(a.order().0)));
    let order = a.order();
    if a.is_zero() {
        return QSeries::zero(order);
    }
    let val = a.valuation();
    let n = (order.0 - val.0) as usize;
    let pent: Vec<(i64, i64)> = pentagonal_terms(order.0 / 8 + 1)
        .into_iter()
        .map(|(g, s)| (8 * g, s))
        .collect();
    let mut out = vec![BigInt::zero(); n];
    for k in 0..n as i64 {
        // (q;q)_inf * out = a, i.e. out_k = a_k - sum_{g} sign_g out_{k-g}
        let mut acc = a.coeff(Exp8(val.0 + k));
        for &(g, s) in &pent {
            if g > k {
                break;
            }
            if s < 0 {
                acc += &out[(k - g) as usize];
            } else {
                acc -= &out[(k - g) as usize];
            }
        }
        out[k as usize] = acc;
    }
    QSeries::from_dense(val, out, order)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qs(terms: &[(i64, i64)], order: i64) -> QSeries {
        QSeries::from_terms(
            terms.iter().map(|&(e, c)| (Exp8::int(e), BigInt::from(c))),
            Exp8::int(order),
        )
    }

    #[test]
    fn telescoping_product() {
        // (1 - q)(1 + q + q^2 + ...) = 1 below the truncation order
        let a = qs(&[(0, 1), (1, -1)], 4);
        let b = qs(&[(0, 1), (1, 1), (2, 1), (3, 1)], 4);
        let prod = a.mul(&b);
        assert_eq!(prod.order(), Exp8::int(4));
        assert_eq!(prod, qs(&[(0, 1)], 4));
    }

    #[test]
    fn shift_moves_grid_units() {
        let a = qs(&[(0, 1), (1, -1)], 5);
        let shifted = a.shift(Exp8::half(1));
        assert_eq!(shifted.valuation(), Exp8::half(1));
        assert_eq!(shifted.coeff(Exp8(4 + 8)), BigInt::from(-1));
        assert_eq!(shifted.order(), Exp8(40 + 4));
    }

    #[test]
    fn pochhammer_small() {
        // direct finite product (1-q)(1-q^2)...(1-q^5) truncated at q^6
        let order = Exp8::int(6);
        let mut prod = QSeries::one(order);
        for m in 1..=5 {
            let f = qs(&[(0, 1), (m, -1)], 6);
            prod = prod.mul(&f).truncate(order);
        }
        let fast = euler_pochhammer(order);
        assert_eq!(fast, prod);
        assert_eq!(fast.coeff_int(0), BigInt::from(1));
        assert_eq!(fast.coeff_int(5), BigInt::from(1));
        assert_eq!(fast, qs(&[(0, 1), (1, -1), (2, -1), (5, 1)], 6));
    }

    #[test]
    fn pochhammer_pentagonal_exponents() {
        let s = euler_pochhammer(Exp8::int(30));
        for (e, expect) in [(7, 1), (12, 1), (15, 1), (22, -1), (26, -1)] {
            assert_eq!(s.coeff_int(e), BigInt::from(expect), "coefficient of q^{e}");
        }
        // cross-check the whole range against the finite product
        let mut prod = QSeries::one(Exp8::int(30));
        for m in 1..30 {
            prod = prod.mul(&qs(&[(0, 1), (m, -1)], 30)).truncate(Exp8::int(30));
        }
        assert_eq!(s, prod);
    }

    #[test]
    fn partitions_small() {
        let p = partition_numbers(12);
        let expect = [1i64, 1, 2, 3, 5, 7, 11, 15, 22, 30, 42, 56, 77];
        for (n, e) in expect.iter().enumerate() {
            assert_eq!(p[n], BigInt::from(*e), "p({n})");
        }
    }

    /// Brute-force partition count, the independent oracle for the
    /// pentagonal recurrence.
    fn count_partitions(n: i64, max_part: i64) -> i64 {
        if n == 0 {
            return 1;
        }
        if n < 0 || max_part == 0 {
            return 0;
        }
        count_partitions(n - max_part, max_part) + count_partitions(n, max_part - 1)
    }

    #[test]
    fn partitions_match_enumeration() {
        let p = partition_numbers(30);
        for n in 0..=30i64 {
            assert_eq!(p[n as usize], BigInt::from(count_partitions(n, n)), "p({n})");
        }
    }

    #[test]
    fn pochhammer_inverse_is_partition_series() {
        let order = Exp8::int(40);
        let inv = QSeries::one(order).div_unit(&euler_pochhammer(order));
        let p = partition_numbers(39);
        for n in 0..40 {
            assert_eq!(inv.coeff_int(n), p[n as usize]);
        }
        // and multiplying back gives 1
        let back = inv.mul(&euler_pochhammer(order)).truncate(Exp8::int(39));
        assert_eq!(back, QSeries::one(Exp8::int(39)));
    }

    #[test]
    fn sparse_pochhammer_division_agrees() {
        let order = Exp8::int(60);
        let f = qs(&[(2, 3), (5, -1), (9, 7)], 60);
        let d1 = f.div_unit(&euler_pochhammer(order));
        let d2 = div_by_pochhammer(&f, order);
        assert_eq!(d1, d2);
        assert_eq!(d2.mul(&euler_pochhammer(order)).truncate(Exp8::int(52)), f.truncate(Exp8::int(52)));
    }

    #[test]
    fn order_propagation_mul() {
        let a = qs(&[(1, 1)], 5); // q + O(q^5)
        let b = qs(&[(2, 1)], 7); // q^2 + O(q^7)
        let prod = a.mul(&b);
        // min(5*8 + 2*8, 7*8 + 1*8) = 56
        assert_eq!(prod.order(), Exp8::int(7));
        assert_eq!(prod.coeff_int(3), BigInt::one());
    }

    #[test]
    #[should_panic(expected = "coefficient read at")]
    fn reading_beyond_order_panics() {
        let a = qs(&[(0, 1)], 3);
        let _ = a.coeff_int(3);
    }

    #[test]
    fn json_roundtrip() {
        let a = qs(&[(0, 1), (3, -214748364712345i64)], 6).shift(Exp8::half(1));
        let j = a.to_json();
        let s = serde_json::to_string(&j).unwrap();
        let back: SeriesJson = serde_json::from_str(&s).unwrap();
        assert_eq!(QSeries::from_json(&back).unwrap(), a);
    }
}
