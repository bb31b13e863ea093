//! Traced integers: arbitrary-precision non-negative integers stored as
//! base-10 digits, plus the digit accumulator used by the grade-school
//! algorithms to build results one digit at a time.

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TIntError {
    #[error("empty digit sequence")]
    Empty,
    #[error("invalid digit {0:?}")]
    InvalidDigit(char),
    #[error("subtraction underflow")]
    Underflow,
    #[error("division by zero")]
    DivisionByZero,
}

/// Anything that can appear on the right-hand side of a trace assignment.
pub trait Render {
    fn render(&self) -> String;
}

/// Non-negative integer as a digit vector, least-significant digit first.
///
/// Canonical form: no most-significant zero unless the value is zero, which
/// is the single digit `0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TInt {
    digits: Vec<u8>,
}

impl TInt {
    pub fn zero() -> Self {
        TInt { digits: vec![0] }
    }

    pub fn digit(d: u8) -> Self {
        debug_assert!(d < 10);
        TInt { digits: vec![d] }
    }

    /// Builds a TInt from digits given most-significant first.
    pub fn from_digits(msb_first: &[u8]) -> Result<Self, TIntError> {
        if msb_first.is_empty() {
            return Err(TIntError::Empty);
        }
        if let Some(&bad) = msb_first.iter().find(|&&d| d > 9) {
            return Err(TIntError::InvalidDigit(char::from(b'0'.wrapping_add(bad))));
        }
        Ok(Self::from_lsb_vec(msb_first.iter().rev().copied().collect()))
    }

    /// Takes ownership of least-significant-first digits and canonicalizes.
    pub(crate) fn from_lsb_vec(mut digits: Vec<u8>) -> Self {
        while digits.len() > 1 && *digits.last().unwrap() == 0 {
            digits.pop();
        }
        if digits.is_empty() {
            digits.push(0);
        }
        TInt { digits }
    }

    pub fn from_u64(mut v: u64) -> Self {
        let mut digits = Vec::new();
        loop {
            digits.push((v % 10) as u8);
            v /= 10;
            if v == 0 {
                break;
            }
        }
        TInt { digits }
    }

    /// Parses either compact (`192`) or spaced (`1 9 2`) decimal text.
    pub fn parse(text: &str) -> Result<Self, TIntError> {
        let mut msb = Vec::new();
        for c in text.chars() {
            match c {
                '0'..='9' => msb.push(c as u8 - b'0'),
                ' ' => {}
                other => return Err(TIntError::InvalidDigit(other)),
            }
        }
        Self::from_digits(&msb)
    }

    /// Value as u64 when it fits.
    pub fn to_u64(&self) -> Option<u64> {
        let mut v: u64 = 0;
        for &d in self.digits.iter().rev() {
            v = v.checked_mul(10)?.checked_add(d as u64)?;
        }
        Some(v)
    }

    /// Digits least-significant first.
    pub fn lsb_digits(&self) -> &[u8] {
        &self.digits
    }

    pub fn msb_digits(&self) -> Vec<u8> {
        self.digits.iter().rev().copied().collect()
    }

    pub fn compact(&self) -> String {
        self.digits.iter().rev().map(|&d| char::from(b'0' + d)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.digits == [0]
    }

    /// Number of digits; zero has length 1, so there is no `is_empty`.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn lsd(&self) -> TInt {
        TInt::digit(self.digits[0])
    }

    /// Drops the least significant digit (`x // 10`); `strip_lsd(0) = 0`.
    pub fn strip_lsd(&self) -> TInt {
        if self.digits.len() == 1 {
            TInt::zero()
        } else {
            TInt { digits: self.digits[1..].to_vec() }
        }
    }

    /// `x * 10 + d`.
    pub fn append_lsd(&self, d: u8) -> TInt {
        debug_assert!(d < 10);
        let mut digits = Vec::with_capacity(self.digits.len() + 1);
        digits.push(d);
        digits.extend_from_slice(&self.digits);
        Self::from_lsb_vec(digits)
    }

    /// `x * 10^k`.
    pub fn shift_left(&self, k: usize) -> TInt {
        if self.is_zero() || k == 0 {
            return self.clone();
        }
        let mut digits = vec![0; k];
        digits.extend_from_slice(&self.digits);
        TInt { digits }
    }

    pub fn checked_add(&self, other: &TInt) -> TInt {
        let n = self.digits.len().max(other.digits.len());
        let mut out = Vec::with_capacity(n + 1);
        let mut carry = 0u8;
        for i in 0..n {
            let s = self.digits.get(i).copied().unwrap_or(0)
                + other.digits.get(i).copied().unwrap_or(0)
                + carry;
            out.push(s % 10);
            carry = s / 10;
        }
        if carry > 0 {
            out.push(carry);
        }
        Self::from_lsb_vec(out)
    }

    pub fn checked_sub(&self, other: &TInt) -> Result<TInt, TIntError> {
        if self < other {
            return Err(TIntError::Underflow);
        }
        let mut out = Vec::with_capacity(self.digits.len());
        let mut borrow = 0i8;
        for i in 0..self.digits.len() {
            let mut d = self.digits[i] as i8 - other.digits.get(i).copied().unwrap_or(0) as i8 - borrow;
            if d < 0 {
                d += 10;
                borrow = 1;
            } else {
                borrow = 0;
            }
            out.push(d as u8);
        }
        Ok(Self::from_lsb_vec(out))
    }

    pub fn mul_small(&self, m: u32) -> TInt {
        if m == 0 {
            return TInt::zero();
        }
        let mut out = Vec::with_capacity(self.digits.len() + 10);
        let mut carry: u64 = 0;
        for &d in &self.digits {
            let p = d as u64 * m as u64 + carry;
            out.push((p % 10) as u8);
            carry = p / 10;
        }
        while carry > 0 {
            out.push((carry % 10) as u8);
            carry /= 10;
        }
        Self::from_lsb_vec(out)
    }

    /// Schoolbook product.
    pub fn checked_mul(&self, other: &TInt) -> TInt {
        let mut acc = vec![0u32; self.digits.len() + other.digits.len()];
        for (i, &a) in self.digits.iter().enumerate() {
            for (j, &b) in other.digits.iter().enumerate() {
                acc[i + j] += a as u32 * b as u32;
            }
        }
        let mut out = Vec::with_capacity(acc.len() + 1);
        let mut carry = 0u32;
        for v in acc {
            let s = v + carry;
            out.push((s % 10) as u8);
            carry = s / 10;
        }
        while carry > 0 {
            out.push((carry % 10) as u8);
            carry /= 10;
        }
        Self::from_lsb_vec(out)
    }

    /// Short division by a small divisor, returning (quotient, remainder).
    pub fn div_small(&self, m: u32) -> Result<(TInt, u32), TIntError> {
        if m == 0 {
            return Err(TIntError::DivisionByZero);
        }
        let mut q = vec![0u8; self.digits.len()];
        let mut rem: u64 = 0;
        for i in (0..self.digits.len()).rev() {
            let cur = rem * 10 + self.digits[i] as u64;
            q[i] = (cur / m as u64) as u8;
            rem = cur % m as u64;
        }
        Ok((Self::from_lsb_vec(q), rem as u32))
    }
}

impl Ord for TInt {
    fn cmp(&self, other: &Self) -> Ordering {
        self.digits
            .len()
            .cmp(&other.digits.len())
            .then_with(|| self.digits.iter().rev().cmp(other.digits.iter().rev()))
    }
}

impl PartialOrd for TInt {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Render for TInt {
    /// Most-significant first, single spaces between digits.
    fn render(&self) -> String {
        spaced(self.digits.iter().rev())
    }
}

impl fmt::Display for TInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl From<u64> for TInt {
    fn from(v: u64) -> Self {
        TInt::from_u64(v)
    }
}

pub(crate) fn spaced<'a>(msb_first: impl Iterator<Item = &'a u8>) -> String {
    let mut out = String::new();
    for d in msb_first {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push(char::from(b'0' + d));
    }
    out
}

// Pure primitives. They never touch a trace, so they are invisible by construction.

pub fn eq(a: &TInt, b: &TInt) -> bool {
    a == b
}

pub fn is_zero(t: &TInt) -> bool {
    t.is_zero()
}

pub fn less_than(a: &TInt, b: &TInt) -> bool {
    a < b
}

pub fn lsd(t: &TInt) -> TInt {
    t.lsd()
}

pub fn strip_lsd(t: &TInt) -> TInt {
    t.strip_lsd()
}

pub fn append_lsd(t: &TInt, d: u8) -> TInt {
    t.append_lsd(d)
}

pub fn length(t: &TInt) -> usize {
    t.len()
}

/// A result under construction, grown at its most-significant end.
///
/// Unlike [`TInt`] it keeps positional zeros (`0 5` while computing
/// `105`), so the partial result shows exactly which places are filled.
/// An empty buffer renders as `0`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DigitBuf {
    lsb: Vec<u8>,
}

impl DigitBuf {
    pub fn new() -> Self {
        DigitBuf::default()
    }

    pub fn is_empty(&self) -> bool {
        self.lsb.is_empty()
    }

    pub fn push_msd(&mut self, d: u8) {
        debug_assert!(d < 10);
        self.lsb.push(d);
    }

    /// Pushes every digit of `t` above the current most-significant digit.
    pub fn push_tint(&mut self, t: &TInt) {
        self.lsb.extend_from_slice(t.lsb_digits());
    }

    pub fn to_tint(&self) -> TInt {
        TInt::from_lsb_vec(self.lsb.clone())
    }

    /// True when the rendering would carry a most-significant zero.
    pub fn has_leading_zero(&self) -> bool {
        self.lsb.len() > 1 && *self.lsb.last().unwrap() == 0
    }
}

impl From<TInt> for DigitBuf {
    /// Zero maps to the empty buffer.
    fn from(t: TInt) -> Self {
        if t.is_zero() {
            DigitBuf::new()
        } else {
            DigitBuf { lsb: t.digits }
        }
    }
}

impl Render for DigitBuf {
    fn render(&self) -> String {
        if self.lsb.is_empty() {
            "0".to_string()
        } else {
            spaced(self.lsb.iter().rev())
        }
    }
}

/// Renders a list as `[ 1 , 2 3 , 4 ]`.
impl Render for [TInt] {
    fn render(&self) -> String {
        let items: Vec<String> = self.iter().map(Render::render).collect();
        if items.is_empty() {
            "[ ]".to_string()
        } else {
            format!("[ {} ]", items.join(" , "))
        }
    }
}

impl Render for Vec<TInt> {
    fn render(&self) -> String {
        self.as_slice().render()
    }
}

/// Parses a list rendered by [`Render`] for `[TInt]`.
pub fn parse_list(text: &str) -> Result<Vec<TInt>, TIntError> {
    let inner = text
        .trim()
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or(TIntError::InvalidDigit('['))?;
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    inner.split(',').map(|item| TInt::parse(item.trim())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn from_digits_canonicalizes() {
        assert_eq!(TInt::from_digits(&[0, 0, 7]).unwrap(), TInt::from_u64(7));
        assert_eq!(TInt::from_digits(&[0]).unwrap(), TInt::zero());
        assert_eq!(TInt::from_digits(&[0, 0, 0]).unwrap().render(), "0");
        assert_eq!(TInt::from_digits(&[1, 9, 2]).unwrap().to_u64(), Some(192));
        assert_eq!(TInt::from_digits(&[]), Err(TIntError::Empty));
        assert!(TInt::from_digits(&[1, 12]).is_err());
    }

    #[test]
    fn render_is_spaced_msb_first() {
        assert_eq!(TInt::from_u64(192).render(), "1 9 2");
        assert_eq!(TInt::zero().render(), "0");
        assert_eq!(TInt::from_u64(11).render(), "1 1");
    }

    #[test]
    fn primitives() {
        let t = TInt::from_u64(24);
        assert_eq!(strip_lsd(&t), TInt::from_u64(2));
        assert_eq!(lsd(&t), TInt::from_u64(4));
        assert_eq!(strip_lsd(&TInt::from_u64(5)), TInt::zero());
        assert_eq!(strip_lsd(&TInt::zero()), TInt::zero());
        assert_eq!(append_lsd(&TInt::zero(), 0), TInt::zero());
        assert_eq!(append_lsd(&TInt::from_u64(2), 4), t);
        assert_eq!(length(&TInt::from_u64(1000)), 4);
        assert!(less_than(&TInt::from_u64(99), &TInt::from_u64(100)));
        assert!(eq(&TInt::from_u64(7), &TInt::parse("7").unwrap()));
        assert!(is_zero(&TInt::parse("0 0").unwrap()));
    }

    #[test]
    fn digit_buf_keeps_positional_zeros() {
        let mut b = DigitBuf::new();
        assert_eq!(b.render(), "0");
        b.push_msd(5);
        b.push_msd(0);
        assert_eq!(b.render(), "0 5");
        assert!(b.has_leading_zero());
        b.push_msd(1);
        assert_eq!(b.render(), "1 0 5");
        assert_eq!(b.to_tint().to_u64(), Some(105));
        assert!(DigitBuf::from(TInt::zero()).is_empty());
    }

    #[test]
    fn list_render_and_parse() {
        let xs = vec![TInt::from_u64(3), TInt::from_u64(12), TInt::zero()];
        assert_eq!(xs.render(), "[ 3 , 1 2 , 0 ]");
        assert_eq!(parse_list("[ 3 , 1 2 , 0 ]").unwrap(), xs);
    }

    fn arb_tint() -> impl Strategy<Value = TInt> {
        prop::collection::vec(0u8..10, 1..40).prop_map(|d| TInt::from_digits(&d).unwrap())
    }

    proptest! {
        #[test]
        fn render_parse_round_trip(t in arb_tint()) {
            prop_assert_eq!(TInt::parse(&t.render()).unwrap(), t.clone());
            prop_assert_eq!(TInt::parse(&t.compact()).unwrap(), t);
        }

        #[test]
        fn canonical_form_holds(d in prop::collection::vec(0u8..10, 1..40)) {
            let t = TInt::from_digits(&d).unwrap();
            let msb = t.msb_digits();
            prop_assert!(msb.len() == 1 || msb[0] != 0);
            prop_assert!(msb.iter().all(|&x| x < 10));
        }

        #[test]
        fn arithmetic_matches_u64(a in 0u64..1_000_000_000, b in 0u64..1_000_000_000, m in 1u32..1000) {
            let (ta, tb) = (TInt::from_u64(a), TInt::from_u64(b));
            prop_assert_eq!(ta.checked_add(&tb).to_u64(), Some(a + b));
            prop_assert_eq!(ta.cmp(&tb), a.cmp(&b));
            if a >= b {
                prop_assert_eq!(ta.checked_sub(&tb).unwrap().to_u64(), Some(a - b));
            } else {
                prop_assert!(ta.checked_sub(&tb).is_err());
            }
            prop_assert_eq!(ta.mul_small(m).to_u64(), Some(a * m as u64));
            prop_assert_eq!(ta.checked_mul(&TInt::from_u64(m as u64)).to_u64(), Some(a * m as u64));
            let (q, r) = ta.div_small(m).unwrap();
            prop_assert_eq!((q.to_u64(), r), (Some(a / m as u64), (a % m as u64) as u32));
            prop_assert_eq!(ta.shift_left(3).to_u64(), Some(a * 1000));
        }
    }
}
