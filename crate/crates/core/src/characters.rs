//! Cosets of annihilators in the character group `X`.
//!
//! Every character factors as `χ = Π r_k^{a_k}` with finitely many factors at
//! non-negative indices. The annihilator `(K_f^+)^⊥` consists of the
//! characters whose exponents live at indices `< f`, so a coset of it is fixed
//! by the exponents at indices `>= f`. A [`CosetAddress`] stores exactly those
//! exponents, together with the floor `f`.
//!
//! The Haar measure of `(K_f^+)^⊥` is `p^(s·f)`; `(K_0^+)^⊥` has measure one.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::algebra::{FieldElement, GfBlock, GfParams};
use crate::error::{Error, Result};

/// `exp(2πi·e/p)`.
pub fn root_of_unity(p: u32, e: u32) -> Complex64 {
    let e = e % p;
    // exact values for the common small cases
    if e == 0 {
        return Complex64::new(1.0, 0.0);
    }
    if p == 2 {
        return Complex64::new(-1.0, 0.0);
    }
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * e as f64 / p as f64)
}

/// A coset `(K_floor^+)^⊥ · Π_{j >= floor} r_j^{d_j}`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CosetAddress {
    params: GfParams,
    floor: i32,
    digits: BTreeMap<i32, GfBlock>,
}

impl CosetAddress {
    /// The annihilator `(K_floor^+)^⊥` itself.
    pub fn identity(params: GfParams, floor: i32) -> Self {
        Self {
            params,
            floor,
            digits: BTreeMap::new(),
        }
    }

    /// Builds an address; digits below `floor` are absorbed by the annihilator
    /// and zero blocks are pruned.
    pub fn new(
        params: GfParams,
        floor: i32,
        digits: impl IntoIterator<Item = (i32, GfBlock)>,
    ) -> Result<Self> {
        let mut out = Self::identity(params, floor);
        for (j, b) in digits {
            params.check(&b.params())?;
            if j >= floor {
                out.add_digit(j, &b);
            }
        }
        Ok(out)
    }

    /// Shorthand for tests and fixtures: unit-style digits `(index, code)`.
    pub fn from_codes(params: GfParams, floor: i32, codes: &[(i32, usize)]) -> Self {
        Self::new(
            params,
            floor,
            codes
                .iter()
                .map(|&(j, c)| (j, GfBlock::from_code(params, c))),
        )
        .expect("codes share params")
    }

    pub fn params(&self) -> GfParams {
        self.params
    }

    pub fn floor(&self) -> i32 {
        self.floor
    }

    pub fn digits(&self) -> &BTreeMap<i32, GfBlock> {
        &self.digits
    }

    pub fn digit(&self, j: i32) -> GfBlock {
        self.digits
            .get(&j)
            .cloned()
            .unwrap_or_else(|| GfBlock::zero(self.params))
    }

    pub fn is_identity(&self) -> bool {
        self.digits.is_empty()
    }

    /// Highest index carrying a nonzero digit.
    pub fn top_index(&self) -> Option<i32> {
        self.digits.keys().next_back().copied()
    }

    /// `ν((K_floor^+)^⊥) = p^(s·floor)`.
    pub fn measure(&self) -> f64 {
        self.params.q_pow(self.floor)
    }

    pub(crate) fn add_digit(&mut self, j: i32, b: &GfBlock) {
        if b.is_zero() || j < self.floor {
            return;
        }
        let sum = match self.digits.get(&j) {
            Some(old) => old.add_unchecked(b),
            None => b.clone(),
        };
        if sum.is_zero() {
            self.digits.remove(&j);
        } else {
            self.digits.insert(j, sum);
        }
    }

    /// Sets the digit at `j` (must be `>= floor`).
    pub(crate) fn set_digit(&mut self, j: i32, b: GfBlock) {
        debug_assert!(j >= self.floor);
        if b.is_zero() {
            self.digits.remove(&j);
        } else {
            self.digits.insert(j, b);
        }
    }

    /// Multiplication by `r_j^b`.
    pub fn translate(&self, j: i32, b: &GfBlock) -> CosetAddress {
        let mut out = self.clone();
        out.add_digit(j, b);
        out
    }

    /// Group product: exponent-wise block addition.
    pub fn mul(&self, other: &CosetAddress) -> Result<CosetAddress> {
        self.params.check(&other.params)?;
        if self.floor != other.floor {
            return Err(Error::FloorMismatch(self.floor, other.floor));
        }
        let mut out = self.clone();
        for (&j, b) in &other.digits {
            out.add_digit(j, b);
        }
        Ok(out)
    }

    pub fn inverse(&self) -> CosetAddress {
        CosetAddress {
            params: self.params,
            floor: self.floor,
            digits: self.digits.iter().map(|(&j, b)| (j, b.neg())).collect(),
        }
    }

    /// The `p^(s·(floor - new_floor))` sub-cosets with floor `new_floor`.
    pub fn refine(&self, new_floor: i32) -> Result<Vec<CosetAddress>> {
        if new_floor > self.floor {
            return Err(Error::RefineCoarser {
                from: self.floor,
                to: new_floor,
            });
        }
        let width = (self.floor - new_floor) as u32;
        let q = self.params.q();
        let total = q.pow(width);
        let mut out = Vec::with_capacity(total);
        for mut code in 0..total {
            let mut a = CosetAddress {
                params: self.params,
                floor: new_floor,
                digits: self.digits.clone(),
            };
            // most significant digit at index floor - 1
            for j in new_floor..self.floor {
                let b = GfBlock::from_code(self.params, code % q);
                code /= q;
                a.set_digit(j, b);
            }
            out.push(a);
        }
        out.sort();
        Ok(out)
    }

    /// The enclosing coset with floor `new_floor >= floor`.
    pub fn coarsen(&self, new_floor: i32) -> Result<CosetAddress> {
        if new_floor < self.floor {
            return Err(Error::RefineCoarser {
                from: new_floor,
                to: self.floor,
            });
        }
        Ok(self.coarsen_unchecked(new_floor))
    }

    pub(crate) fn coarsen_unchecked(&self, new_floor: i32) -> CosetAddress {
        CosetAddress {
            params: self.params,
            floor: new_floor,
            digits: self
                .digits
                .range(new_floor..)
                .map(|(&j, b)| (j, b.clone()))
                .collect(),
        }
    }

    /// `χ ↦ χ𝒜^n`: every index moves up by `n`, and so does the floor.
    pub fn dilate(&self, n: i32) -> CosetAddress {
        CosetAddress {
            params: self.params,
            floor: self.floor + n,
            digits: self.digits.iter().map(|(&j, b)| (j + n, b.clone())).collect(),
        }
    }

    /// Exponent `e` with `(χ, x) = exp(2πi·e/p)` for every `χ` in the coset.
    pub fn pairing_exponent(&self, x: &FieldElement) -> Result<u32> {
        self.params.check(&x.params())?;
        if let Some(n) = x.valuation() {
            if n < self.floor {
                return Err(Error::NonConstantPairing {
                    index: n,
                    floor: self.floor,
                });
            }
        }
        Ok(self.pairing_exponent_unchecked(x))
    }

    pub(crate) fn pairing_exponent_unchecked(&self, x: &FieldElement) -> u32 {
        let p = self.params.p();
        let mut e = 0u32;
        // iterate the sparser side
        if self.digits.len() <= x.blocks().len() {
            for (j, a) in &self.digits {
                if let Some(b) = x.blocks().get(j) {
                    e = (e + a.dot_unchecked(b)) % p;
                }
            }
        } else {
            for (j, b) in x.blocks() {
                if let Some(a) = self.digits.get(j) {
                    e = (e + a.dot_unchecked(b)) % p;
                }
            }
        }
        e
    }

    pub fn pairing(&self, x: &FieldElement) -> Result<Complex64> {
        Ok(root_of_unity(self.params.p(), self.pairing_exponent(x)?))
    }
}

/// Orders by parameters, floor, then digits read as a number with the highest
/// index most significant.
impl Ord for CosetAddress {
    fn cmp(&self, other: &Self) -> Ordering {
        self.params
            .cmp(&other.params)
            .then(self.floor.cmp(&other.floor))
            .then_with(|| {
                let mut a = self.digits.iter().rev().peekable();
                let mut b = other.digits.iter().rev().peekable();
                loop {
                    match (a.peek(), b.peek()) {
                        (None, None) => return Ordering::Equal,
                        (Some(_), None) => return Ordering::Greater,
                        (None, Some(_)) => return Ordering::Less,
                        (Some((ja, da)), Some((jb, db))) => match ja.cmp(jb) {
                            Ordering::Greater => return Ordering::Greater,
                            Ordering::Less => return Ordering::Less,
                            Ordering::Equal => match da.cmp(db) {
                                Ordering::Equal => {
                                    a.next();
                                    b.next();
                                }
                                o => return o,
                            },
                        },
                    }
                }
            })
    }
}

impl PartialOrd for CosetAddress {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for CosetAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[floor {}]{{", self.floor)?;
        for (i, (j, b)) in self.digits.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{j}:{b:?}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Display for CosetAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

pub fn addr_mul(a: &CosetAddress, b: &CosetAddress) -> Result<CosetAddress> {
    a.mul(b)
}

pub fn addr_refine(a: &CosetAddress, new_floor: i32) -> Result<Vec<CosetAddress>> {
    a.refine(new_floor)
}

pub fn addr_dilate(a: &CosetAddress, n: i32) -> CosetAddress {
    a.dilate(n)
}

pub fn char_pairing(a: &CosetAddress, x: &FieldElement) -> Result<Complex64> {
    a.pairing(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pr(p: u32, s: u32) -> GfParams {
        GfParams::new(p, s).unwrap()
    }

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn product_has_order_p() {
        let p2 = pr(2, 1);
        let a = CosetAddress::from_codes(p2, -2, &[(-1, 1)]);
        assert!(a.mul(&a).unwrap().is_identity());

        let b = CosetAddress::from_codes(p2, -2, &[(-2, 1)]);
        assert_eq!(
            b.mul(&a).unwrap(),
            CosetAddress::from_codes(p2, -2, &[(-2, 1), (-1, 1)])
        );
        let id = CosetAddress::identity(p2, -2);
        assert_eq!(a.mul(&id).unwrap(), a);
        assert!(matches!(
            a.mul(&CosetAddress::identity(p2, -3)),
            Err(Error::FloorMismatch(-2, -3))
        ));
    }

    #[test]
    fn refinement() {
        let p2 = pr(2, 1);
        let a = CosetAddress::from_codes(p2, -2, &[(-2, 1)]);
        let subs = a.refine(-3).unwrap();
        assert_eq!(
            subs,
            vec![
                CosetAddress::from_codes(p2, -3, &[(-2, 1)]),
                CosetAddress::from_codes(p2, -3, &[(-3, 1), (-2, 1)]),
            ]
        );
        assert_eq!(a.refine(-2).unwrap(), vec![a.clone()]);
        assert_eq!(
            CosetAddress::identity(pr(3, 1), 0).refine(-1).unwrap().len(),
            3
        );
        assert!(a.refine(-1).is_err());
        for sub in &subs {
            assert_eq!(sub.coarsen(-2).unwrap(), a);
        }
    }

    #[test]
    fn refinement_preserves_measure() {
        let p = pr(3, 2);
        let a = CosetAddress::from_codes(p, -1, &[(-1, 4), (0, 7)]);
        let total: f64 = a.refine(-3).unwrap().iter().map(|c| c.measure()).sum();
        assert!((total - a.measure()).abs() < 1e-15);
    }

    #[test]
    fn dilation() {
        let p2 = pr(2, 1);
        let a = CosetAddress::from_codes(p2, -2, &[(-2, 1)]);
        assert_eq!(a.dilate(1), CosetAddress::from_codes(p2, -1, &[(-1, 1)]));
        assert_eq!(
            CosetAddress::identity(p2, 0).dilate(-1),
            CosetAddress::identity(p2, -1)
        );
        assert_eq!(a.dilate(1).dilate(-1), a);
    }

    #[test]
    fn pairing_values() {
        let p2 = pr(2, 1);
        let r = CosetAddress::from_codes(p2, -2, &[(-1, 1)]);
        let g = |n| FieldElement::basis(p2, n);
        assert!(close(char_pairing(&r, &g(-1)).unwrap(), Complex64::new(-1.0, 0.0)));
        assert!(close(char_pairing(&r, &g(-2)).unwrap(), Complex64::new(1.0, 0.0)));

        let p3 = pr(3, 2);
        let b = GfBlock::new(p3, &[1, 1]).unwrap();
        let r = CosetAddress::new(p3, -1, [(-1, b.clone())]).unwrap();
        let x = FieldElement::single(-1, b);
        let expected = Complex64::from_polar(1.0, 4.0 * std::f64::consts::PI / 3.0);
        assert!(close(char_pairing(&r, &x).unwrap(), expected));
    }

    #[test]
    fn pairing_rejects_fine_elements() {
        let p2 = pr(2, 1);
        let r = CosetAddress::identity(p2, -1);
        assert!(matches!(
            r.pairing(&FieldElement::basis(p2, -2)),
            Err(Error::NonConstantPairing { index: -2, floor: -1 })
        ));
    }

    #[test]
    fn dilation_is_adjoint() {
        let p = pr(3, 1);
        let a = CosetAddress::from_codes(p, -2, &[(-2, 1), (-1, 2), (1, 1)]);
        let x = FieldElement::from_blocks(
            p,
            [
                (-1, GfBlock::from_code(p, 2)),
                (0, GfBlock::from_code(p, 1)),
                (2, GfBlock::from_code(p, 1)),
            ],
        )
        .unwrap();
        // (χ𝒜, x) = (χ, 𝒜x)
        assert!(close(a.dilate(1).pairing(&x).unwrap(), a.pairing(&x.dilate(1)).unwrap()));
    }
}
