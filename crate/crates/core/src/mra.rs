//! Masks on tree-generated elementary sets and the scaling functions they refine.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{h0_enumerate, GfBlock, GfParams, ShiftH0};
use crate::characters::CosetAddress;
use crate::error::{Error, Result};
use crate::spectral::{
    periodized_product, validate_elementary, CompensatedSum, ElementarySet, SpectralStepFunction,
};
use crate::trees::Tree;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Relative slack when checking `|m|²` against `[A, B]`.
const BOUND_SLACK: f64 = 1e-12;

/// The mask `m_0`: one value per coset of an `(N, M)`-elementary set with `M <= 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mask {
    n: u32,
    lower: f64,
    upper: f64,
    values: SpectralStepFunction,
    provenance: Option<String>,
}

impl Mask {
    /// Checks every mask invariant on raw parts.
    pub fn from_parts(
        n: u32,
        lower: f64,
        upper: f64,
        values: SpectralStepFunction,
        provenance: Option<String>,
    ) -> Result<Self> {
        check_bounds_params(lower, upper)?;
        let floor = -(n as i32);
        if values.floor() != floor {
            return Err(Error::FloorMismatch(values.floor(), floor));
        }
        let cosets: Vec<_> = values.support().cloned().collect();
        check_mask_support(values.params(), &cosets, n)?;
        let mask = Self {
            n,
            lower,
            upper,
            values,
            provenance,
        };
        mask.check_values()?;
        Ok(mask)
    }

    fn check_values(&self) -> Result<()> {
        let identity = CosetAddress::identity(self.params(), self.floor());
        let unit = self.values.get(&identity);
        if unit != ONE {
            return Err(Error::ZeroAddressNotUnit(format!("{unit}")));
        }
        for (a, v) in self.values.iter() {
            let m2 = v.norm_sqr();
            let slack = BOUND_SLACK * self.upper.max(1.0);
            if !(m2 >= self.lower - slack && m2 <= self.upper + slack) {
                return Err(Error::BoundViolation {
                    coset: a.to_string(),
                    value: m2,
                    lower: self.lower,
                    upper: self.upper,
                });
            }
        }
        Ok(())
    }

    pub fn params(&self) -> GfParams {
        self.values.params()
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn floor(&self) -> i32 {
        -(self.n as i32)
    }

    /// Riesz floor `A`.
    pub fn lower(&self) -> f64 {
        self.lower
    }

    /// Riesz ceiling `B`.
    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn values(&self) -> &SpectralStepFunction {
        &self.values
    }

    pub fn provenance(&self) -> Option<&str> {
        self.provenance.as_deref()
    }

    pub fn with_provenance(mut self, id: impl Into<String>) -> Self {
        self.provenance = Some(id.into());
        self
    }

    /// Value of the periodic extension at any address of floor `<= -N`.
    pub fn eval(&self, a: &CosetAddress) -> Result<Complex64> {
        crate::spectral::periodized_eval(&self.values, a)
    }

    fn window_table(&self) -> HashMap<Vec<usize>, Complex64> {
        let floor = self.floor();
        self.values
            .iter()
            .map(|(a, &v)| {
                let key = (floor..=0).map(|j| a.digit(j).code()).collect();
                (key, v)
            })
            .collect()
    }
}

fn check_bounds_params(lower: f64, upper: f64) -> Result<()> {
    if !(lower > 0.0 && lower <= 1.0 && upper >= 1.0 && upper.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "Riesz bounds need 0 < A <= 1 <= B, got A={lower}, B={upper}"
        )));
    }
    Ok(())
}

/// The support must be `p^(sN)` cosets on `[-N, 0]` whose `[-N, -1]` parts are
/// all distinct, with the identity among them.
fn check_mask_support(params: GfParams, cosets: &[CosetAddress], n: u32) -> Result<()> {
    let r = validate_elementary(params, cosets, n, 1);
    let ok = r.count_ok
        && r.floors_ok
        && r.within_window
        && r.disjoint
        && r.xi_exhaustive
        && r.xi_zero_trivial;
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidElementarySet(format!(
            "mask support is not a window set: {r:?}"
        )))
    }
}

/// Builds `m_0` from values on the cosets of an elementary set.
pub fn build_mask(
    set: &ElementarySet,
    assignment: &BTreeMap<CosetAddress, Complex64>,
    lower: f64,
    upper: f64,
) -> Result<Mask> {
    check_bounds_params(lower, upper)?;
    check_mask_support(set.params(), set.cosets(), set.n())?;
    let mut values = Vec::with_capacity(set.cosets().len());
    for c in set.cosets() {
        match assignment.get(c) {
            Some(&v) => values.push((c.clone(), v)),
            None => return Err(Error::MissingCoset(c.to_string())),
        }
    }
    if let Some(extra) = assignment.keys().find(|a| !set.cosets().contains(a)) {
        return Err(Error::InvalidElementarySet(format!(
            "assignment has coset {extra} outside the set"
        )));
    }
    for (c, v) in &values {
        let m2 = v.norm_sqr();
        let slack = BOUND_SLACK * upper.max(1.0);
        if !(m2 >= lower - slack && m2 <= upper + slack) {
            return Err(Error::BoundViolation {
                coset: c.to_string(),
                value: m2,
                lower,
                upper,
            });
        }
    }
    let values = SpectralStepFunction::from_values(set.params(), set.floor(), values)?;
    Mask::from_parts(set.n(), lower, upper, values, None)
}

/// Deterministic mask values: modulus uniform in `[√A, √B]`, phase zero unless
/// `phases` is set; the identity coset gets 1.
pub fn seeded_assignment(
    set: &ElementarySet,
    lower: f64,
    upper: f64,
    seed: u64,
    phases: bool,
) -> BTreeMap<CosetAddress, Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (lower.sqrt(), upper.sqrt());
    set.cosets()
        .iter()
        .map(|c| {
            let r: f64 = rng.gen_range(0.0..=1.0);
            let theta: f64 = if phases {
                rng.gen_range(0.0..std::f64::consts::TAU)
            } else {
                0.0
            };
            let v = if c.is_identity() {
                ONE
            } else {
                Complex64::from_polar(lo + r * (hi - lo), theta)
            };
            (c.clone(), v)
        })
        .collect()
}

/// Unit mask on a set: every value 1.
pub fn unit_assignment(set: &ElementarySet) -> BTreeMap<CosetAddress, Complex64> {
    set.cosets().iter().map(|c| (c.clone(), ONE)).collect()
}

/// `φ̂ = Π_{n=0}^{H-N+1} m_0(χ𝒜^{-n})` on `(K_{H-2N+1}^+)^⊥`.
pub fn scaling_hat(mask: &Mask, h: u32) -> SpectralStepFunction {
    let n = mask.n() as i32;
    let h = h as i32;
    scaling_product(mask, h - 2 * n + 1, h - n + 2)
}

/// `φ̂` with `extra` additional factors, over a domain widened by `extra` digits.
pub fn scaling_hat_with_factors(mask: &Mask, h: u32, extra: u32) -> SpectralStepFunction {
    let n = mask.n() as i32;
    let h = h as i32;
    let extra = extra as i32;
    scaling_product(mask, h - 2 * n + 1 + extra, h - n + 2 + extra)
}

/// Product of the first `factors` dilated masks on cosets with digits on `[-N, top]`.
///
/// Digits are chosen from the top down; choosing digit `j` completes the window
/// `[j, j+N]` read by factor `j + N`, so a zero mask value prunes the branch.
fn scaling_product(mask: &Mask, top: i32, factors: i32) -> SpectralStepFunction {
    let params = mask.params();
    let n = mask.n() as i32;
    let floor = -n;
    let table = mask.window_table();
    let top = top.max(floor);
    let width = (top - floor + 1) as usize;
    let mut search = Dfs {
        params,
        n,
        floor,
        top,
        factors,
        table: &table,
        digits: vec![0; width],
        out: Vec::new(),
    };
    search.descend(top, ONE);
    SpectralStepFunction::from_values(params, floor, search.out)
        .expect("addresses share the mask floor")
}

struct Dfs<'a> {
    params: GfParams,
    n: i32,
    floor: i32,
    top: i32,
    factors: i32,
    table: &'a HashMap<Vec<usize>, Complex64>,
    digits: Vec<usize>,
    out: Vec<(CosetAddress, Complex64)>,
}

impl Dfs<'_> {
    fn digit(&self, j: i32) -> usize {
        if j > self.top {
            0
        } else {
            self.digits[(j - self.floor) as usize]
        }
    }

    fn descend(&mut self, j: i32, acc: Complex64) {
        for code in 0..self.params.q() {
            self.digits[(j - self.floor) as usize] = code;
            let mut val = acc;
            let factor = j + self.n;
            if factor < self.factors {
                let key: Vec<usize> = (j..=j + self.n).map(|i| self.digit(i)).collect();
                val *= self.table.get(&key).copied().unwrap_or(ZERO);
                if val == ZERO {
                    continue;
                }
            }
            if j == self.floor {
                let digits = (self.floor..=self.top)
                    .map(|i| (i, GfBlock::from_code(self.params, self.digit(i))));
                let a = CosetAddress::new(self.params, self.floor, digits)
                    .expect("digits carry the mask parameters");
                self.out.push((a, val));
            } else {
                self.descend(j - 1, val);
            }
        }
    }
}

/// `φ̂` read off the tree: the node `v` at depth `>= N-1` names the coset whose
/// digit at `-N + k` is the label of the `k`-th ancestor of `v`, and the value
/// is the product of the mask over the `(N+1)`-windows ending at `v` and its
/// ancestors.
pub fn scaling_hat_paths(tree: &Tree, mask: &Mask) -> Result<SpectralStepFunction> {
    let params = tree.params();
    params.check(&mask.params())?;
    let n = tree.n() as usize;
    let floor = -(n as i32);
    let depths = tree.depths();
    let window_addr = |id| {
        let w = tree.window(id, n + 1);
        CosetAddress::new(params, floor, (0..=n).map(|j| (floor + j as i32, w[n - j].clone())))
    };
    let mut out = Vec::new();
    for v in 0..tree.len() {
        if (depths[v] as usize) + 1 < n {
            continue;
        }
        let mut digits = Vec::new();
        let mut value = ONE;
        let mut cur = Some(v);
        let mut k = 0;
        while let Some(u) = cur {
            digits.push((floor + k, tree.node(u).label.clone()));
            if depths[u] as usize >= n {
                value *= mask.values().get(&window_addr(u)?);
            }
            cur = tree.node(u).parent;
            k += 1;
        }
        if value != ZERO {
            out.push((CosetAddress::new(params, floor, digits)?, value));
        }
    }
    SpectralStepFunction::from_values(params, floor, out)
}

/// `m̃_0 = 1 / conj(m_0)` on the support; bounds become `(1/B, 1/A)`.
pub fn dual_mask(mask: &Mask) -> Mask {
    Mask {
        n: mask.n,
        lower: 1.0 / mask.upper,
        upper: 1.0 / mask.lower,
        values: mask.values.map(|v| ONE / v.conj()),
        provenance: mask.provenance.clone(),
    }
}

/// A mask, its dual and the two scaling spectra.
#[derive(Clone, Debug, PartialEq)]
pub struct MraFamily {
    height: u32,
    mask: Mask,
    dual: Mask,
    phi_hat: SpectralStepFunction,
    dual_phi_hat: SpectralStepFunction,
}

impl MraFamily {
    /// Assembles a family from stored parts without recomputing anything.
    pub fn from_parts(
        height: u32,
        mask: Mask,
        dual: Mask,
        phi_hat: SpectralStepFunction,
        dual_phi_hat: SpectralStepFunction,
    ) -> Result<Self> {
        let p = mask.params();
        for q in [dual.params(), phi_hat.params(), dual_phi_hat.params()] {
            p.check(&q)?;
        }
        if dual.n() != mask.n() {
            return Err(Error::InvalidParams("mask and dual differ in N".into()));
        }
        if height + 1 < 2 * mask.n() {
            return Err(Error::InvalidParams(format!(
                "height {height} is below 2N-1 for N={}",
                mask.n()
            )));
        }
        Ok(Self {
            height,
            mask,
            dual,
            phi_hat,
            dual_phi_hat,
        })
    }

    pub fn params(&self) -> GfParams {
        self.mask.params()
    }

    pub fn n(&self) -> u32 {
        self.mask.n()
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    pub fn dual_mask(&self) -> &Mask {
        &self.dual
    }

    pub fn phi_hat(&self) -> &SpectralStepFunction {
        &self.phi_hat
    }

    pub fn dual_phi_hat(&self) -> &SpectralStepFunction {
        &self.dual_phi_hat
    }

    /// Exponent `H - N + 2` of the Riesz envelope.
    pub fn envelope_exponent(&self) -> i32 {
        self.height as i32 - self.n() as i32 + 2
    }

    /// `[A^(H-N+2), B^(H-N+2)]`.
    pub fn envelope(&self) -> (f64, f64) {
        let e = self.envelope_exponent();
        (self.mask.lower().powi(e), self.mask.upper().powi(e))
    }

    /// Replaces `φ̂`; used for fault injection.
    pub fn with_phi_hat(mut self, phi_hat: SpectralStepFunction) -> Self {
        self.phi_hat = phi_hat;
        self
    }

    /// Replaces the dual mask values as stored, leaving `φ̃̂` untouched.
    pub fn with_dual_mask(mut self, dual: Mask) -> Self {
        self.dual = dual;
        self
    }
}

/// Builds the family of a tree: the mask support must be the tree's coset set.
pub fn build_family(tree: &Tree, mask: &Mask) -> Result<MraFamily> {
    let set = crate::spectral::elementary_from_tree(tree)?;
    let mut want: Vec<_> = set.cosets().to_vec();
    want.sort();
    let have: Vec<_> = mask.values().support().cloned().collect();
    if want != have || tree.n() != mask.n() {
        return Err(Error::InvalidElementarySet(
            "mask support is not the coset set of the tree".into(),
        ));
    }
    let mask = mask
        .clone()
        .with_provenance(crate::json::tree_fingerprint(tree));
    Ok(build_family_with_height(&mask, tree.height()))
}

/// Builds a family from a mask and an explicit tree height.
pub fn build_family_with_height(mask: &Mask, height: u32) -> MraFamily {
    let dual = dual_mask(mask);
    let phi_hat = scaling_hat(mask, height);
    let dual_phi_hat = scaling_hat(&dual, height);
    MraFamily {
        height,
        mask: mask.clone(),
        dual,
        phi_hat,
        dual_phi_hat,
    }
}

pub fn dual_scaling_hat(family: &MraFamily) -> SpectralStepFunction {
    scaling_hat(family.dual_mask(), family.height())
}

/// `β_h = p^(-sN) Σ_c m_0(c) (c, 𝒜^{-1}h)` for `h ∈ H_0^(N+1)`, in enumeration order.
pub fn mask_coefficients(mask: &Mask) -> Vec<(ShiftH0, Complex64)> {
    let params = mask.params();
    let n = mask.n() as i32;
    let scale = params.q_pow(-n);
    h0_enumerate(params, n + 1)
        .expect("N + 1 >= 1")
        .into_iter()
        .map(|h| {
            let x = h.element().dilate(-1);
            let beta = mask
                .values()
                .iter()
                .map(|(c, &v)| v * c.pairing(&x).expect("x lives on [-N, 0]"))
                .collect::<CompensatedSum>()
                .value();
            (h, beta * scale)
        })
        .collect()
}

/// `m(χ) = p^(-s) Σ_h β_h conj((χ𝒜^{-1}, h))` on every coset with digits on `[-N, 0]`.
pub fn mask_from_coefficients(
    params: GfParams,
    n: u32,
    coeffs: &[(ShiftH0, Complex64)],
) -> Result<SpectralStepFunction> {
    let floor = -(n as i32);
    let scale = params.q_pow(-1);
    let points: Vec<_> = coeffs.iter().map(|(h, b)| (h.element().dilate(-1), *b)).collect();
    let mut values = Vec::new();
    for c in CosetAddress::identity(params, 1).refine(floor)? {
        let mut acc = CompensatedSum::new();
        for (x, b) in &points {
            acc.add(*b * c.pairing(x)?.conj());
        }
        values.push((c, acc.value() * scale));
    }
    SpectralStepFunction::from_values(params, floor, values)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefinementReport {
    /// `sup |φ̂ - m_0 · φ̂(·𝒜^{-1})|`.
    pub max_deviation: f64,
    /// Same identity for `(m̃_0, φ̃̂)`.
    pub dual_max_deviation: f64,
}

impl RefinementReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_deviation < tol && self.dual_max_deviation < tol
    }
}

/// Deviation from `φ̂(χ) = m_0(χ) φ̂(χ𝒜^{-1})`.
pub fn refinement_deviation(mask: &Mask, phi_hat: &SpectralStepFunction) -> Result<f64> {
    let rhs = periodized_product(mask.values(), &phi_hat.dilate(1))?;
    phi_hat.max_abs_diff(&rhs)
}

pub fn check_refinement(family: &MraFamily) -> Result<RefinementReport> {
    Ok(RefinementReport {
        max_deviation: refinement_deviation(family.mask(), family.phi_hat())?,
        dual_max_deviation: refinement_deviation(family.dual_mask(), family.dual_phi_hat())?,
    })
}

/// `(min, max)` of `|φ̂|²` over its support.
pub fn riesz_bounds(family: &MraFamily) -> (f64, f64) {
    family.phi_hat().modulus_sq_range().unwrap_or((0.0, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::elementary_from_tree;
    use crate::trees::{build_basic_tree, chain_tree};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn p21() -> GfParams {
        GfParams::new(2, 1).unwrap()
    }

    fn chain() -> (Tree, Mask) {
        let t = chain_tree(p21(), 2, &[0, 0, 1, 1, 0]).unwrap();
        let set = elementary_from_tree(&t).unwrap();
        let vals = [c(1.0), c(0.8), c(1.2), c(0.9)];
        let assignment = set.cosets().iter().cloned().zip(vals).collect();
        (t, build_mask(&set, &assignment, 0.5, 1.6).unwrap())
    }

    fn addr(codes: &[(i32, usize)]) -> CosetAddress {
        CosetAddress::from_codes(p21(), -2, codes)
    }

    #[test]
    fn chain_scaling_hat_table() {
        let (t, mask) = chain();
        let phi = scaling_hat(&mask, t.height());
        assert_eq!(phi.len(), 4);
        let want = [
            (addr(&[]), 1.0),
            (addr(&[(-2, 1)]), 0.8),
            (addr(&[(-2, 1), (-1, 1)]), 0.96),
            (addr(&[(-1, 1), (0, 1)]), 0.864),
        ];
        for (a, v) in want {
            assert!((phi.get(&a) - c(v)).norm() < 1e-15, "{a}");
        }
        let paths = scaling_hat_paths(&t, &mask).unwrap();
        assert!(phi.max_abs_diff(&paths).unwrap() < 1e-15);
        let (lo, hi) = build_family(&t, &mask).map(|f| riesz_bounds(&f)).unwrap();
        assert!((lo - 0.64).abs() < 1e-15 && (hi - 1.0).abs() < 1e-15);
    }

    #[test]
    fn haar_scaling_hat_is_indicator() {
        let t = build_basic_tree(2, 1, 2).unwrap();
        let set = elementary_from_tree(&t).unwrap();
        let mask = build_mask(&set, &unit_assignment(&set), 1.0, 1.0).unwrap();
        let phi = scaling_hat(&mask, t.height());
        let one = SpectralStepFunction::indicator(p21(), 0, [&CosetAddress::identity(p21(), 0)])
            .unwrap();
        assert_eq!(phi.max_abs_diff(&one).unwrap(), 0.0);
        assert_eq!(dual_mask(&mask), mask);
    }

    #[test]
    fn stabilization() {
        let (t, mask) = chain();
        let phi = scaling_hat(&mask, t.height());
        for extra in 1..4 {
            let wider = scaling_hat_with_factors(&mask, t.height(), extra);
            assert_eq!(wider, phi);
        }
    }

    #[test]
    fn mask_errors() {
        let t = chain_tree(p21(), 2, &[0, 0, 1, 1, 0]).unwrap();
        let set = elementary_from_tree(&t).unwrap();
        let mut a: BTreeMap<_, _> = unit_assignment(&set);
        a.insert(addr(&[(-2, 1)]), c(0.0));
        assert!(matches!(build_mask(&set, &a, 0.5, 1.6), Err(Error::BoundViolation { .. })));
        let mut a = unit_assignment(&set);
        a.remove(&addr(&[(-2, 1)]));
        assert!(matches!(build_mask(&set, &a, 0.5, 1.6), Err(Error::MissingCoset(_))));
        let mut a = unit_assignment(&set);
        a.insert(addr(&[]), c(0.9));
        assert!(matches!(build_mask(&set, &a, 0.5, 1.6), Err(Error::ZeroAddressNotUnit(_))));
    }

    #[test]
    fn dual_values_and_biorthogonal_product() {
        let (t, mask) = chain();
        let d = dual_mask(&mask);
        assert!((d.values().get(&addr(&[(-2, 1)])) - c(1.25)).norm() < 1e-15);
        assert_eq!((d.lower(), d.upper()), (1.0 / 1.6, 2.0));
        let fam = build_family(&t, &mask).unwrap();
        let prod = fam.phi_hat().product(&fam.dual_phi_hat().conj()).unwrap();
        assert_eq!(prod.len(), 4);
        assert!(prod.iter().all(|(_, v)| (v - c(1.0)).norm() < 1e-12));
    }

    #[test]
    fn coefficients_round_trip() {
        let (_, mask) = chain();
        let beta = mask_coefficients(&mask);
        assert_eq!(beta.len(), 8);
        let back = mask_from_coefficients(p21(), 2, &beta).unwrap();
        assert!(back.max_abs_diff(mask.values()).unwrap() < 1e-12);
        assert!(back.get(&addr(&[(-1, 1)])).norm() < 1e-12);
    }

    #[test]
    fn refinement_identity() {
        let (t, mask) = chain();
        let fam = build_family(&t, &mask).unwrap();
        let r = check_refinement(&fam).unwrap();
        assert!(r.max_deviation < 1e-12 && r.dual_max_deviation < 1e-12);

        let a = addr(&[(-2, 1), (-1, 1)]);
        let phi = fam.phi_hat();
        let bumped = SpectralStepFunction::from_values(
            phi.params(),
            phi.floor(),
            phi.iter().map(|(b, &v)| (b.clone(), if *b == a { v + 1e-3 } else { v })),
        )
        .unwrap();
        let r = check_refinement(&fam.clone().with_phi_hat(bumped)).unwrap();
        assert!((r.max_deviation - 1e-3).abs() < 1e-4, "{}", r.max_deviation);
    }

    #[test]
    fn seeded_assignment_is_deterministic_and_in_range() {
        let t = build_basic_tree(2, 2, 2).unwrap();
        let set = elementary_from_tree(&t).unwrap();
        let a = seeded_assignment(&set, 0.5, 1.6, 7, true);
        assert_eq!(a, seeded_assignment(&set, 0.5, 1.6, 7, true));
        assert_ne!(a, seeded_assignment(&set, 0.5, 1.6, 8, true));
        let mask = build_mask(&set, &a, 0.5, 1.6).unwrap();
        assert_eq!(mask.values().len(), 16);
    }
}
