//! Digit arithmetic for the field `K = F^(s)` of characteristic `p`.
//!
//! An element of `K` is a sequence of digit blocks `a_n ∈ GF(p)^s` with
//! finitely many nonzero blocks at negative indices. Only the additive
//! structure is needed: blocks add componentwise mod `p`, and the pairing
//! between a character and an element reduces to the mod-`p` dot product
//! of matching blocks.
//!
//! Elements are stored sparsely (index → nonzero block), so that both field
//! elements and deep shifts of `H_0` share one canonical representation and
//! equality is structural.

use std::collections::BTreeMap;
use std::fmt;

use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Largest prime that fits a `u8` digit.
pub const MAX_PRIME: u32 = 251;

fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// The pair `(p, s)`: characteristic and block width.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GfParams {
    p: u32,
    s: u32,
}

impl GfParams {
    pub fn new(p: u32, s: u32) -> Result<Self> {
        if !is_prime(p) || p > MAX_PRIME {
            return Err(Error::InvalidParams(format!(
                "p = {p} must be a prime <= {MAX_PRIME}"
            )));
        }
        if s == 0 || s > 16 {
            return Err(Error::InvalidParams(format!("s = {s} must be in 1..=16")));
        }
        Ok(Self { p, s })
    }

    #[inline]
    pub fn p(&self) -> u32 {
        self.p
    }

    #[inline]
    pub fn s(&self) -> u32 {
        self.s
    }

    /// `q = p^s`, the number of distinct blocks.
    pub fn q(&self) -> usize {
        (self.p as usize).pow(self.s)
    }

    /// `p^(s·k)` as a float; `k` may be negative.
    pub fn q_pow(&self, k: i32) -> f64 {
        (self.p as f64).powi(self.s as i32 * k)
    }

    pub fn check(&self, other: &GfParams) -> Result<()> {
        if self != other {
            return Err(Error::ParamMismatch {
                p1: self.p,
                s1: self.s,
                p2: other.p,
                s2: other.s,
            });
        }
        Ok(())
    }

    /// Every block in lexicographic order (component 0 most significant).
    pub fn blocks(&self) -> impl Iterator<Item = GfBlock> + '_ {
        (0..self.q()).map(move |c| GfBlock::from_code(*self, c))
    }
}

/// One digit block: an element of `GF(p)^s`, used additively.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GfBlock {
    p: u8,
    digits: SmallVec<[u8; 4]>,
}

impl GfBlock {
    pub fn zero(params: GfParams) -> Self {
        Self {
            p: params.p as u8,
            digits: SmallVec::from_elem(0, params.s as usize),
        }
    }

    /// The block `(1, 0, …, 0)`.
    pub fn unit(params: GfParams) -> Self {
        let mut b = Self::zero(params);
        b.digits[0] = 1;
        b
    }

    pub fn new(params: GfParams, digits: &[u32]) -> Result<Self> {
        if digits.len() != params.s as usize {
            return Err(Error::InvalidParams(format!(
                "block has {} digits, expected s = {}",
                digits.len(),
                params.s
            )));
        }
        if let Some(d) = digits.iter().find(|&&d| d >= params.p) {
            return Err(Error::InvalidParams(format!(
                "digit {d} out of range for p = {}",
                params.p
            )));
        }
        Ok(Self {
            p: params.p as u8,
            digits: digits.iter().map(|&d| d as u8).collect(),
        })
    }

    /// Inverse of [`GfBlock::code`].
    pub fn from_code(params: GfParams, mut code: usize) -> Self {
        let p = params.p as usize;
        let mut digits: SmallVec<[u8; 4]> = SmallVec::from_elem(0, params.s as usize);
        for d in digits.iter_mut().rev() {
            *d = (code % p) as u8;
            code /= p;
        }
        Self {
            p: params.p as u8,
            digits,
        }
    }

    /// Position in the lexicographic enumeration of `GF(p)^s`.
    pub fn code(&self) -> usize {
        self.digits
            .iter()
            .fold(0usize, |acc, &d| acc * self.p as usize + d as usize)
    }

    pub fn params(&self) -> GfParams {
        GfParams {
            p: self.p as u32,
            s: self.digits.len() as u32,
        }
    }

    pub fn digits(&self) -> impl Iterator<Item = u32> + '_ {
        self.digits.iter().map(|&d| d as u32)
    }

    pub fn is_zero(&self) -> bool {
        self.digits.iter().all(|&d| d == 0)
    }

    pub fn add(&self, other: &GfBlock) -> Result<GfBlock> {
        self.params().check(&other.params())?;
        Ok(self.add_unchecked(other))
    }

    pub(crate) fn add_unchecked(&self, other: &GfBlock) -> GfBlock {
        let p = self.p as u16;
        GfBlock {
            p: self.p,
            digits: self
                .digits
                .iter()
                .zip(&other.digits)
                .map(|(&a, &b)| ((a as u16 + b as u16) % p) as u8)
                .collect(),
        }
    }

    pub fn neg(&self) -> GfBlock {
        let p = self.p;
        GfBlock {
            p,
            digits: self
                .digits
                .iter()
                .map(|&a| if a == 0 { 0 } else { p - a })
                .collect(),
        }
    }

    pub fn sub(&self, other: &GfBlock) -> Result<GfBlock> {
        self.add(&other.neg())
    }

    /// Mod-`p` dot product; the exponent of the pairing between `r_k^a` and `b·g_k`.
    pub fn dot(&self, other: &GfBlock) -> Result<u32> {
        self.params().check(&other.params())?;
        Ok(self.dot_unchecked(other))
    }

    pub(crate) fn dot_unchecked(&self, other: &GfBlock) -> u32 {
        let sum: u32 = self
            .digits
            .iter()
            .zip(&other.digits)
            .map(|(&a, &b)| a as u32 * b as u32)
            .sum();
        sum % self.p as u32
    }
}

impl fmt::Debug for GfBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, d) in self.digits.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for GfBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Componentwise sum of two blocks.
pub fn gf_add(a: &GfBlock, b: &GfBlock) -> Result<GfBlock> {
    a.add(b)
}

/// Dot pairing of two blocks, mod `p`.
pub fn gf_dot(a: &GfBlock, b: &GfBlock) -> Result<u32> {
    a.dot(b)
}

/// An element `Σ λ_n g_n` of `K` with finitely many nonzero blocks.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldElement {
    params: GfParams,
    blocks: BTreeMap<i32, GfBlock>,
}

impl FieldElement {
    pub fn zero(params: GfParams) -> Self {
        Self {
            params,
            blocks: BTreeMap::new(),
        }
    }

    /// The basic-sequence element `g_n`.
    pub fn basis(params: GfParams, n: i32) -> Self {
        Self::single(n, GfBlock::unit(params))
    }

    /// `b · g_n` for an arbitrary block `b`.
    pub fn single(n: i32, block: GfBlock) -> Self {
        let params = block.params();
        let mut blocks = BTreeMap::new();
        if !block.is_zero() {
            blocks.insert(n, block);
        }
        Self { params, blocks }
    }

    pub fn from_blocks(
        params: GfParams,
        blocks: impl IntoIterator<Item = (i32, GfBlock)>,
    ) -> Result<Self> {
        let mut out = Self::zero(params);
        for (n, b) in blocks {
            params.check(&b.params())?;
            out.add_block(n, &b);
        }
        Ok(out)
    }

    pub fn params(&self) -> GfParams {
        self.params
    }

    pub fn blocks(&self) -> &BTreeMap<i32, GfBlock> {
        &self.blocks
    }

    pub fn block(&self, n: i32) -> GfBlock {
        self.blocks
            .get(&n)
            .cloned()
            .unwrap_or_else(|| GfBlock::zero(self.params))
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Index of the first nonzero block, `None` for zero.
    pub fn valuation(&self) -> Option<i32> {
        self.blocks.keys().next().copied()
    }

    pub(crate) fn add_block(&mut self, n: i32, b: &GfBlock) {
        if b.is_zero() {
            return;
        }
        let sum = match self.blocks.get(&n) {
            Some(old) => old.add_unchecked(b),
            None => b.clone(),
        };
        if sum.is_zero() {
            self.blocks.remove(&n);
        } else {
            self.blocks.insert(n, sum);
        }
    }

    pub fn add(&self, other: &FieldElement) -> Result<FieldElement> {
        self.params.check(&other.params)?;
        let mut out = self.clone();
        for (&n, b) in &other.blocks {
            out.add_block(n, b);
        }
        Ok(out)
    }

    pub fn neg(&self) -> FieldElement {
        FieldElement {
            params: self.params,
            blocks: self.blocks.iter().map(|(&n, b)| (n, b.neg())).collect(),
        }
    }

    pub fn sub(&self, other: &FieldElement) -> Result<FieldElement> {
        self.add(&other.neg())
    }

    /// `𝒜^n x`: every block index decreases by `n`.
    pub fn dilate(&self, n: i32) -> FieldElement {
        FieldElement {
            params: self.params,
            blocks: self.blocks.iter().map(|(&k, b)| (k - n, b.clone())).collect(),
        }
    }

    /// `‖x‖ = p^(-s·n)` for the first nonzero block index `n`; `0` for zero.
    pub fn norm(&self) -> f64 {
        match self.valuation() {
            Some(n) => self.params.q_pow(-n),
            None => 0.0,
        }
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.blocks.is_empty() {
            return write!(f, "0");
        }
        for (i, (n, b)) in self.blocks.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{b:?}g[{n}]")?;
        }
        Ok(())
    }
}

pub fn field_dilate(x: &FieldElement, n: i32) -> FieldElement {
    x.dilate(n)
}

pub fn field_norm(x: &FieldElement) -> f64 {
    x.norm()
}

/// An element of `H_0`: blocks only at negative indices.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct ShiftH0(FieldElement);

impl ShiftH0 {
    pub fn new(x: FieldElement) -> Result<Self> {
        match x.blocks.keys().next_back() {
            Some(&n) if n >= 0 => Err(Error::InvalidParams(format!(
                "shift has a block at non-negative index {n}"
            ))),
            _ => Ok(Self(x)),
        }
    }

    pub fn zero(params: GfParams) -> Self {
        Self(FieldElement::zero(params))
    }

    /// `ν = -(smallest index)`, `0` for the zero shift.
    pub fn depth(&self) -> u32 {
        self.0.valuation().map_or(0, |n| (-n) as u32)
    }

    pub fn element(&self) -> &FieldElement {
        &self.0
    }

    pub fn into_element(self) -> FieldElement {
        self.0
    }
}

/// All `p^(sν)` elements of `H_0^(ν)`, lexicographic with index `-1` most significant.
pub fn h0_enumerate(params: GfParams, depth: i32) -> Result<Vec<ShiftH0>> {
    if depth < 0 {
        return Err(Error::NegativeDepth(depth));
    }
    let q = params.q();
    let total = q.pow(depth as u32);
    let mut out = Vec::with_capacity(total);
    for mut code in 0..total {
        let mut x = FieldElement::zero(params);
        for k in (1..=depth).rev() {
            let b = GfBlock::from_code(params, code % q);
            code /= q;
            x.add_block(-k, &b);
        }
        out.push(ShiftH0(x));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(p: u32, s: u32) -> GfParams {
        GfParams::new(p, s).unwrap()
    }

    fn block(p: u32, digits: &[u32]) -> GfBlock {
        GfBlock::new(params(p, digits.len() as u32), digits).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(GfParams::new(4, 1).is_err());
        assert!(GfParams::new(1, 1).is_err());
        assert!(GfParams::new(2, 0).is_err());
        assert!(GfParams::new(257, 1).is_err());
        assert!(GfParams::new(251, 2).is_ok());
    }

    #[test]
    fn block_addition() {
        assert_eq!(
            gf_add(&block(2, &[1, 0]), &block(2, &[1, 1])).unwrap(),
            block(2, &[0, 1])
        );
        assert_eq!(gf_add(&block(3, &[2]), &block(3, &[2])).unwrap(), block(3, &[1]));
        let a = block(5, &[3, 4, 1]);
        assert_eq!(a.add(&GfBlock::zero(params(5, 3))).unwrap(), a);
    }

    #[test]
    fn block_mismatch_is_rejected() {
        let a = block(2, &[1, 0]);
        assert!(matches!(
            a.add(&block(3, &[1, 0])),
            Err(Error::ParamMismatch { .. })
        ));
        assert!(a.dot(&block(2, &[1])).is_err());
    }

    #[test]
    fn block_dot() {
        assert_eq!(gf_dot(&block(2, &[1, 1]), &block(2, &[0, 1])).unwrap(), 1);
        assert_eq!(block(3, &[1, 2]).dot(&block(3, &[2, 2])).unwrap(), 0);
        assert_eq!(block(7, &[6, 5]).dot(&GfBlock::zero(params(7, 2))).unwrap(), 0);
    }

    #[test]
    fn block_codes_round_trip() {
        let pr = params(3, 2);
        let all: Vec<_> = pr.blocks().collect();
        assert_eq!(all.len(), 9);
        assert_eq!(all[1], block(3, &[0, 1]));
        assert_eq!(all[3], block(3, &[1, 0]));
        for (i, b) in all.iter().enumerate() {
            assert_eq!(b.code(), i);
        }
    }

    #[test]
    fn dilation_shifts_indices() {
        let pr = params(2, 1);
        let g = |n| FieldElement::basis(pr, n);
        assert_eq!(field_dilate(&g(0), 1), g(-1));
        assert_eq!(field_dilate(&g(-1), -1), g(0));
        let x = g(-1).add(&g(2)).unwrap();
        assert_eq!(x.dilate(1), g(-2).add(&g(1)).unwrap());
    }

    #[test]
    fn norms() {
        assert_eq!(field_norm(&FieldElement::basis(params(2, 1), 3)), 0.125);
        assert_eq!(field_norm(&FieldElement::zero(params(2, 1))), 0.0);
        assert_eq!(field_norm(&FieldElement::basis(params(3, 2), -2)), 81.0);
        let x = FieldElement::basis(params(3, 1), 2);
        assert_eq!(x.dilate(1).norm(), 3.0 * x.norm());
    }

    #[test]
    fn sum_cancels_to_canonical_zero() {
        let pr = params(3, 1);
        let x = FieldElement::basis(pr, -1);
        let y = x.add(&x).unwrap().add(&x).unwrap();
        assert!(y.is_zero());
        assert_eq!(y, FieldElement::zero(pr));
    }

    #[test]
    fn h0_small_cases() {
        let pr = params(2, 1);
        let h = h0_enumerate(pr, 0).unwrap();
        assert_eq!(h, vec![ShiftH0::zero(pr)]);

        let h = h0_enumerate(pr, 2).unwrap();
        let g = |n| FieldElement::basis(pr, n);
        let expected = vec![
            FieldElement::zero(pr),
            g(-2),
            g(-1),
            g(-1).add(&g(-2)).unwrap(),
        ];
        assert_eq!(
            h.into_iter().map(ShiftH0::into_element).collect::<Vec<_>>(),
            expected
        );
        assert_eq!(h0_enumerate(params(3, 2), 1).unwrap().len(), 9);
        assert!(matches!(h0_enumerate(pr, -1), Err(Error::NegativeDepth(-1))));
    }

    #[test]
    fn shift_rejects_non_negative_index() {
        let pr = params(2, 1);
        assert!(ShiftH0::new(FieldElement::basis(pr, 0)).is_err());
        assert_eq!(ShiftH0::new(FieldElement::basis(pr, -3)).unwrap().depth(), 3);
    }
}
