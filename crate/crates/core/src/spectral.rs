//! Step functions on the character group and elementary sets.
//!
//! A [`SpectralStepFunction`] is finitely supported and constant on the cosets
//! of `(K_floor^+)^⊥`. Integrals are finite sums with coset measure
//! `p^(s·floor)`; every quantity is invariant under refinement of the floor.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;

use crate::algebra::{FieldElement, GfParams};
use crate::characters::{root_of_unity, CosetAddress};
use crate::error::{Error, Result};
use crate::trees::Tree;

/// Neumaier-compensated complex accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: Complex64,
    carry: Complex64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: Complex64) {
        self.sum.re = neumaier(self.sum.re, x.re, &mut self.carry.re);
        self.sum.im = neumaier(self.sum.im, x.im, &mut self.carry.im);
    }

    pub fn value(&self) -> Complex64 {
        self.sum + self.carry
    }
}

fn neumaier(sum: f64, x: f64, carry: &mut f64) -> f64 {
    let t = sum + x;
    if sum.abs() >= x.abs() {
        *carry += (sum - t) + x;
    } else {
        *carry += (x - t) + sum;
    }
    t
}

impl FromIterator<Complex64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = Complex64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralStepFunction {
    params: GfParams,
    floor: i32,
    values: BTreeMap<CosetAddress, Complex64>,
}

impl SpectralStepFunction {
    pub fn zero(params: GfParams, floor: i32) -> Self {
        Self {
            params,
            floor,
            values: BTreeMap::new(),
        }
    }

    /// Collects values on cosets of one floor; repeated addresses accumulate.
    pub fn from_values(
        params: GfParams,
        floor: i32,
        values: impl IntoIterator<Item = (CosetAddress, Complex64)>,
    ) -> Result<Self> {
        let mut out = Self::zero(params, floor);
        for (a, v) in values {
            params.check(&a.params())?;
            if a.floor() != floor {
                return Err(Error::FloorMismatch(a.floor(), floor));
            }
            *out.values.entry(a).or_default() += v;
        }
        out.values.retain(|_, v| *v != Complex64::new(0.0, 0.0));
        Ok(out)
    }

    /// Indicator of a union of cosets sharing `floor`.
    pub fn indicator<'a>(
        params: GfParams,
        floor: i32,
        cosets: impl IntoIterator<Item = &'a CosetAddress>,
    ) -> Result<Self> {
        Self::from_values(
            params,
            floor,
            cosets.into_iter().map(|a| (a.clone(), Complex64::new(1.0, 0.0))),
        )
    }

    pub fn params(&self) -> GfParams {
        self.params
    }

    pub fn floor(&self) -> i32 {
        self.floor
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CosetAddress, &Complex64)> {
        self.values.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &CosetAddress> {
        self.values.keys()
    }

    pub fn get(&self, a: &CosetAddress) -> Complex64 {
        self.values.get(a).copied().unwrap_or_default()
    }

    /// Value on a coset of floor `<= self.floor` (any finer coset sits inside one of ours).
    pub fn value(&self, a: &CosetAddress) -> Result<Complex64> {
        if a.floor() > self.floor {
            return Err(Error::CoarseAddress {
                addr_floor: a.floor(),
                floor: self.floor,
            });
        }
        if a.floor() == self.floor {
            return Ok(self.get(a));
        }
        Ok(self.get(&a.coarsen_unchecked(self.floor)))
    }

    /// Highest index carrying a nonzero digit over the support.
    pub fn max_digit_index(&self) -> Option<i32> {
        self.values.keys().filter_map(CosetAddress::top_index).max()
    }

    /// The same function on the finer floor `new_floor`.
    pub fn refine(&self, new_floor: i32) -> Result<Self> {
        if new_floor > self.floor {
            return Err(Error::RefineCoarser {
                from: self.floor,
                to: new_floor,
            });
        }
        let mut values = BTreeMap::new();
        for (a, &v) in &self.values {
            for sub in a.refine(new_floor)? {
                values.insert(sub, v);
            }
        }
        Ok(Self {
            params: self.params,
            floor: new_floor,
            values,
        })
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        let mut values = BTreeMap::new();
        for (a, &v) in &self.values {
            let w = f(v);
            if w != Complex64::new(0.0, 0.0) {
                values.insert(a.clone(), w);
            }
        }
        Self {
            params: self.params,
            floor: self.floor,
            values,
        }
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|v| v * c)
    }

    pub fn abs_sq(&self) -> Self {
        self.map(|v| Complex64::new(v.norm_sqr(), 0.0))
    }

    /// Pointwise product, on the finer of the two floors.
    pub fn product(&self, other: &Self) -> Result<Self> {
        self.params.check(&other.params)?;
        let (fine, coarse, fine_first) = if self.floor <= other.floor {
            (self, other, true)
        } else {
            (other, self, false)
        };
        let mut values = BTreeMap::new();
        for (a, &v) in &fine.values {
            let w = coarse.value(a)?;
            if w != Complex64::new(0.0, 0.0) {
                let prod = if fine_first { v * w } else { w * v };
                values.insert(a.clone(), prod);
            }
        }
        Ok(Self {
            params: self.params,
            floor: fine.floor,
            values,
        })
    }

    /// Pointwise sum, on the finer of the two floors.
    pub fn sum(&self, other: &Self) -> Result<Self> {
        self.params.check(&other.params)?;
        let floor = self.floor.min(other.floor);
        let a = self.refine(floor)?;
        let b = other.refine(floor)?;
        let mut values = a.values;
        for (k, v) in b.values {
            *values.entry(k).or_default() += v;
        }
        values.retain(|_, v| *v != Complex64::new(0.0, 0.0));
        Ok(Self {
            params: self.params,
            floor,
            values,
        })
    }

    /// `g(χ) = f(χ𝒜^{-n})`; support addresses move by `addr_dilate(·, n)`.
    pub fn dilate(&self, n: i32) -> Self {
        Self {
            params: self.params,
            floor: self.floor + n,
            values: self.values.iter().map(|(a, &v)| (a.dilate(n), v)).collect(),
        }
    }

    pub fn integral(&self) -> Complex64 {
        let mu = self.params.q_pow(self.floor);
        self.values
            .values()
            .map(|&v| v * mu)
            .collect::<CompensatedSum>()
            .value()
    }

    /// `∫ f · conj(g) dν`.
    pub fn inner_product(&self, other: &Self) -> Result<Complex64> {
        Ok(self.product(&other.conj())?.integral())
    }

    /// `∫ f(χ) (χ, x) dν(χ)`.
    ///
    /// Over a coset of `(K_floor^+)^⊥` the character `(·, x)` integrates to zero
    /// unless `x ∈ K_floor^+`, so no refinement is needed.
    pub fn character_integral(&self, x: &FieldElement) -> Result<Complex64> {
        self.params.check(&x.params())?;
        if let Some(n) = x.valuation() {
            if n < self.floor {
                return Ok(Complex64::new(0.0, 0.0));
            }
        }
        let mu = self.params.q_pow(self.floor);
        let p = self.params.p();
        Ok(self
            .values
            .iter()
            .map(|(a, &v)| v * mu * root_of_unity(p, a.pairing_exponent_unchecked(x)))
            .collect::<CompensatedSum>()
            .value())
    }

    /// `sup |f - g|`, compared on a common floor.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.params.check(&other.params)?;
        let floor = self.floor.min(other.floor);
        let a = self.refine(floor)?;
        let b = other.refine(floor)?;
        let keys: BTreeSet<_> = a.values.keys().chain(b.values.keys()).collect();
        Ok(keys
            .into_iter()
            .map(|k| (a.get(k) - b.get(k)).norm())
            .fold(0.0, f64::max))
    }

    /// `(min, max)` of `|f|²` over the support.
    pub fn modulus_sq_range(&self) -> Option<(f64, f64)> {
        let mut it = self.values.values().map(|v| v.norm_sqr());
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), x| (lo.min(x), hi.max(x))))
    }
}

pub fn spectral_integral(f: &SpectralStepFunction) -> Complex64 {
    f.integral()
}

pub fn spectral_inner_product(f: &SpectralStepFunction, g: &SpectralStepFunction) -> Result<Complex64> {
    f.inner_product(g)
}

pub fn spectral_dilate(f: &SpectralStepFunction, n: i32) -> SpectralStepFunction {
    f.dilate(n)
}

/// Value of the periodic extension of a mask at `a`.
///
/// The mask lives on cosets of `(K_{-N}^+)^⊥` with digits on `[-N, 0]`; the
/// extension ignores digits at indices `>= 1`. Digits below `-N` are a caller
/// error.
pub fn periodized_eval(mask: &SpectralStepFunction, a: &CosetAddress) -> Result<Complex64> {
    let floor = mask.floor();
    if a.floor() > floor {
        return Err(Error::CoarseAddress {
            addr_floor: a.floor(),
            floor,
        });
    }
    if let Some((&j, _)) = a.digits().iter().next() {
        if j < floor {
            return Err(Error::OutsideMaskWindow {
                index: j,
                lo: floor,
                hi: 0,
            });
        }
    }
    Ok(periodized_value(mask, a))
}

/// Like [`periodized_eval`] but coarsens finer addresses first.
pub(crate) fn periodized_value(mask: &SpectralStepFunction, a: &CosetAddress) -> Complex64 {
    let floor = mask.floor();
    let mut key = CosetAddress::identity(a.params(), floor);
    for (&j, b) in a.digits().range(floor..=0) {
        key.set_digit(j, b.clone());
    }
    mask.get(&key)
}

/// Multiplies a step function by the periodic extension of a mask.
pub(crate) fn periodized_product(
    mask: &SpectralStepFunction,
    g: &SpectralStepFunction,
) -> Result<SpectralStepFunction> {
    let g = if g.floor() > mask.floor() {
        g.refine(mask.floor())?
    } else {
        g.clone()
    };
    let values = g
        .iter()
        .map(|(a, &v)| (a.clone(), v * periodized_value(mask, a)));
    SpectralStepFunction::from_values(g.params(), g.floor(), values)
}

/// A union of `p^(sN)` cosets of `(K_{-N}^+)^⊥`.
#[derive(Clone, Debug, PartialEq)]
pub struct ElementarySet {
    params: GfParams,
    n: u32,
    m: u32,
    cosets: Vec<CosetAddress>,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ElementaryReport {
    pub n: u32,
    pub m: u32,
    pub count_ok: bool,
    pub floors_ok: bool,
    pub within_window: bool,
    pub disjoint: bool,
    pub xi_exhaustive: bool,
    pub xi_zero_trivial: bool,
    /// Shell `l` is hit when some member has its top digit at `-N + l`.
    pub shells: Vec<bool>,
    /// The largest `M` for which the cosets qualify, if any.
    pub max_m: Option<u32>,
}

impl ElementaryReport {
    pub fn is_valid(&self) -> bool {
        self.count_ok
            && self.floors_ok
            && self.within_window
            && self.disjoint
            && self.xi_exhaustive
            && self.xi_zero_trivial
            && self.shells.iter().all(|&b| b)
    }
}

impl ElementarySet {
    pub fn new(params: GfParams, n: u32, m: u32, cosets: Vec<CosetAddress>) -> Self {
        Self {
            params,
            n,
            m,
            cosets,
        }
    }

    pub fn params(&self) -> GfParams {
        self.params
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn cosets(&self) -> &[CosetAddress] {
        &self.cosets
    }

    pub fn floor(&self) -> i32 {
        -(self.n as i32)
    }

    pub fn validate(&self, n: u32, m: u32) -> ElementaryReport {
        validate_elementary(self.params, &self.cosets, n, m)
    }

    pub fn indicator(&self) -> Result<SpectralStepFunction> {
        SpectralStepFunction::indicator(self.params, self.floor(), &self.cosets)
    }
}

/// Checks the `(N, M)`-elementary conditions on a list of cosets.
pub fn validate_elementary(
    params: GfParams,
    cosets: &[CosetAddress],
    n: u32,
    m: u32,
) -> ElementaryReport {
    let floor = -(n as i32);
    let expected = (params.q() as u128).checked_pow(n);
    let count_ok = expected == Some(cosets.len() as u128);
    let floors_ok = cosets.iter().all(|a| a.floor() == floor);
    let within_window = cosets
        .iter()
        .all(|a| a.top_index().map_or(true, |t| t < m as i32));
    let distinct: BTreeSet<_> = cosets.iter().collect();
    let disjoint = floors_ok && distinct.len() == cosets.len();

    let xi = |a: &CosetAddress| a.coarsen_unchecked(floor).digits().range(..0).map(|(j, b)| (*j, b.clone())).collect::<Vec<_>>();
    let xis: BTreeSet<_> = cosets.iter().map(xi).collect();
    let xi_exhaustive = floors_ok && count_ok && xis.len() == cosets.len();
    let xi_zero_trivial = cosets
        .iter()
        .filter(|a| xi(a).is_empty())
        .all(CosetAddress::is_identity)
        && cosets.iter().any(|a| xi(a).is_empty());

    let tops: BTreeSet<i32> = cosets.iter().filter_map(CosetAddress::top_index).collect();
    let shells = (0..(m + n) as i32).map(|l| tops.contains(&(floor + l))).collect();

    // digits must stay below M and every shell up to M-1 must be hit
    let max_m = {
        let top = tops.iter().next_back().copied().unwrap_or(floor - 1);
        let candidate = (top + 1).max(0);
        let gapless = (floor..candidate).all(|j| tops.contains(&j));
        let structural = count_ok && floors_ok && disjoint && xi_exhaustive && xi_zero_trivial;
        (structural && gapless).then_some(candidate as u32)
    };

    ElementaryReport {
        n,
        m,
        count_ok,
        floors_ok,
        within_window,
        disjoint,
        xi_exhaustive,
        xi_zero_trivial,
        shells,
        max_m,
    }
}

/// The cosets generated by sliding `(N+1)`-windows over an N-valid tree.
///
/// For a node `v` of depth `>= N-1` the digit at index `-N + j` is the label of
/// the `j`-th ancestor of `v` (zero above the root).
pub fn elementary_from_tree(t: &Tree) -> Result<ElementarySet> {
    let report = t.ensure_valid()?;
    let params = t.params();
    let n = t.n() as usize;
    let floor = -(n as i32);
    let mut cosets = Vec::with_capacity(report.windows.len());
    for (_, id) in &report.windows {
        let w = t.window(*id, n + 1);
        let digits = (0..=n).map(|j| (floor + j as i32, w[n - j].clone()));
        cosets.push(CosetAddress::new(params, floor, digits)?);
    }
    let m = if cosets.iter().any(|a| a.top_index() == Some(0)) {
        1
    } else {
        0
    };
    Ok(ElementarySet::new(params, t.n(), m, cosets))
}
