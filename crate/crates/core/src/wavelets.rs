//! Shifted masks `m_l`, wavelet spectra and the checks that certify them.

use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::Serialize;

use crate::algebra::GfBlock;
use crate::characters::CosetAddress;
use crate::error::{Error, Result};
use crate::mra::MraFamily;
use crate::spectral::{periodized_product, periodized_value, CompensatedSum, SpectralStepFunction};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// One wavelet index `l ∈ GF(p)^s` with its masks and spectra.
#[derive(Clone, Debug, PartialEq)]
pub struct Wavelet {
    pub l: GfBlock,
    pub mask: SpectralStepFunction,
    pub dual_mask: SpectralStepFunction,
    pub psi_hat: SpectralStepFunction,
    pub dual_psi_hat: SpectralStepFunction,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WaveletSystem {
    family: MraFamily,
    wavelets: Vec<Wavelet>,
}

impl WaveletSystem {
    /// Wraps stored parts; `wavelets` must list every `l` once, in code order.
    pub fn from_parts(family: MraFamily, wavelets: Vec<Wavelet>) -> Result<Self> {
        let params = family.params();
        let codes: Vec<usize> = wavelets.iter().map(|w| w.l.code()).collect();
        if codes != (0..params.q()).collect::<Vec<_>>() {
            return Err(Error::Schema(format!(
                "wavelet indices must be 0..{} in order, got {codes:?}",
                params.q()
            )));
        }
        for w in &wavelets {
            for f in [&w.mask, &w.dual_mask, &w.psi_hat, &w.dual_psi_hat] {
                params.check(&f.params())?;
            }
            if w.mask.floor() != family.mask().floor() || w.dual_mask.floor() != family.mask().floor() {
                return Err(Error::FloorMismatch(w.mask.floor(), family.mask().floor()));
            }
        }
        Ok(Self { family, wavelets })
    }

    pub fn family(&self) -> &MraFamily {
        &self.family
    }

    pub fn wavelets(&self) -> &[Wavelet] {
        &self.wavelets
    }

    pub fn wavelet(&self, l: &GfBlock) -> &Wavelet {
        &self.wavelets[l.code()]
    }

    /// Wavelets with `l != 0`.
    pub fn nonzero(&self) -> impl Iterator<Item = &Wavelet> {
        self.wavelets.iter().filter(|w| !w.l.is_zero())
    }

    pub fn with_wavelets(mut self, wavelets: Vec<Wavelet>) -> Self {
        self.wavelets = wavelets;
        self
    }
}

/// `m_l(χ) = m(χ r_0^{-l})`: every support address gains `l` at index 0.
pub fn shift_mask(m: &SpectralStepFunction, l: &GfBlock) -> SpectralStepFunction {
    SpectralStepFunction::from_values(
        m.params(),
        m.floor(),
        m.iter().map(|(a, &v)| (a.translate(0, l), v)),
    )
    .expect("translation keeps the floor")
}

/// `m_l` for every `l`, in code order.
pub fn wavelet_masks(family: &MraFamily) -> Vec<(GfBlock, SpectralStepFunction)> {
    family
        .params()
        .blocks()
        .map(|l| {
            let m = shift_mask(family.mask().values(), &l);
            (l, m)
        })
        .collect()
}

/// `m(χ) φ̂(χ𝒜^{-1})` with `m` periodized.
pub fn wavelet_spectrum(
    m: &SpectralStepFunction,
    phi_hat: &SpectralStepFunction,
) -> Result<SpectralStepFunction> {
    periodized_product(m, &phi_hat.dilate(1))
}

pub fn build_wavelets(family: &MraFamily) -> Result<WaveletSystem> {
    let mut wavelets = Vec::new();
    for l in family.params().blocks() {
        let mask = shift_mask(family.mask().values(), &l);
        let dual_mask = shift_mask(family.dual_mask().values(), &l);
        let psi_hat = wavelet_spectrum(&mask, family.phi_hat())?;
        let dual_psi_hat = wavelet_spectrum(&dual_mask, family.dual_phi_hat())?;
        wavelets.push(Wavelet {
            l,
            mask,
            dual_mask,
            psi_hat,
            dual_psi_hat,
        });
    }
    WaveletSystem::from_parts(family.clone(), wavelets)
}

pub fn wavelet_hat<'a>(system: &'a WaveletSystem, l: &GfBlock) -> &'a SpectralStepFunction {
    &system.wavelet(l).psi_hat
}

pub fn dual_wavelet_hat<'a>(system: &'a WaveletSystem, l: &GfBlock) -> &'a SpectralStepFunction {
    &system.wavelet(l).dual_psi_hat
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaskPropertiesReport {
    /// `m_l` and `m̃_l` are nonzero on every coset of the set shifted by `r_0^l`.
    pub nonzero_on_own_shift: bool,
    /// `m_l` and `m̃_l` vanish on the set shifted by `r_0^a`, `a != l`.
    pub zero_on_other_shifts: bool,
    /// `m_l` and `m̃_l` vanish on `supp φ̂` for `l != 0`.
    pub zero_on_scaling_support: bool,
    /// `m_l m_k = m̃_l m̃_k = 0` for `k != l`.
    pub disjoint_supports: bool,
}

impl MaskPropertiesReport {
    pub fn passes(&self) -> bool {
        self.nonzero_on_own_shift
            && self.zero_on_other_shifts
            && self.zero_on_scaling_support
            && self.disjoint_supports
    }
}

/// Support checks on the shifted masks. Exact set operations.
pub fn check_mask_properties(system: &WaveletSystem) -> MaskPropertiesReport {
    let base: Vec<&CosetAddress> = system.family().mask().values().support().collect();
    let e: Vec<&CosetAddress> = system.family().phi_hat().support().collect();
    let mut own = true;
    let mut other = true;
    let mut on_e = true;
    for w in system.wavelets() {
        for m in [&w.mask, &w.dual_mask] {
            for a in system.family().params().blocks() {
                for c in &base {
                    let nonzero = periodized_value(m, &c.translate(0, &a)) != ZERO;
                    if a == w.l {
                        own &= nonzero;
                    } else {
                        other &= !nonzero;
                    }
                }
            }
            if !w.l.is_zero() {
                on_e &= e.iter().all(|c| periodized_value(m, c) == ZERO);
            }
        }
    }
    let mut disjoint = true;
    let ws = system.wavelets();
    for (i, a) in ws.iter().enumerate() {
        for b in &ws[i + 1..] {
            for (x, y) in [(&a.mask, &b.mask), (&a.dual_mask, &b.dual_mask)] {
                let sx: BTreeSet<_> = x.support().collect();
                disjoint &= y.support().all(|c| !sx.contains(c));
            }
        }
    }
    MaskPropertiesReport {
        nonzero_on_own_shift: own,
        zero_on_other_shifts: other,
        zero_on_scaling_support: on_e,
        disjoint_supports: disjoint,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatrixConditionReport {
    /// `max |Σ_{a_0} m_k conj(m̃_l) - δ_{k,l}|` over all `k, l` and digit strings.
    pub max_deviation: f64,
    /// Every diagonal sum has exactly one nonzero term.
    pub single_term: bool,
    pub sums: usize,
}

impl MatrixConditionReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_deviation < tol && self.single_term
    }
}

/// Evaluates `Σ_{a_0} m_k(ξ r_0^{a_0}) conj(m̃_l(ξ r_0^{a_0}))` for every
/// digit string `ξ` on `[-N, -1]` and every `k, l`.
pub fn check_matrix_condition(system: &WaveletSystem) -> Result<MatrixConditionReport> {
    let family = system.family();
    let params = family.params();
    let floor = family.mask().floor();
    let mut max_deviation: f64 = 0.0;
    let mut single_term = true;
    let mut sums = 0;
    for xi in CosetAddress::identity(params, 0).refine(floor)? {
        let column: Vec<CosetAddress> = params.blocks().map(|a0| xi.translate(0, &a0)).collect();
        for k in system.wavelets() {
            for l in system.wavelets() {
                let mut acc = CompensatedSum::new();
                let mut nonzero = 0;
                for c in &column {
                    let t = k.mask.get(c) * l.dual_mask.get(c).conj();
                    if t != ZERO {
                        nonzero += 1;
                    }
                    acc.add(t);
                }
                let delta = if k.l == l.l { 1.0 } else { 0.0 };
                max_deviation = max_deviation.max((acc.value() - Complex64::new(delta, 0.0)).norm());
                if k.l == l.l && nonzero != 1 {
                    single_term = false;
                }
                sums += 1;
            }
        }
    }
    Ok(MatrixConditionReport {
        max_deviation,
        single_term,
        sums,
    })
}

/// Suprema of one spectrum over the shells `(K_n^+)^⊥ \ (K_{n-1}^+)^⊥`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShellTable {
    /// `(n, sup)` for every nonempty shell, ascending in `n`.
    pub shells: Vec<(i32, f64)>,
    /// Sup over the annihilator `(K_floor^+)^⊥`, which holds every shell `n <= floor`.
    pub core: f64,
    pub floor: i32,
}

/// Shell `n` holds the cosets whose top digit sits at `n - 1`.
pub fn shell_table(f: &SpectralStepFunction) -> ShellTable {
    let mut shells: std::collections::BTreeMap<i32, f64> = Default::default();
    let mut core: f64 = 0.0;
    for (a, v) in f.iter() {
        match a.top_index() {
            Some(t) => {
                let e = shells.entry(t + 1).or_default();
                *e = e.max(v.norm());
            }
            None => core = core.max(v.norm()),
        }
    }
    ShellTable {
        shells: shells.into_iter().collect(),
        core,
        floor: f.floor(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayWitness {
    pub name: String,
    pub c: f64,
    pub epsilon: f64,
    pub table: ShellTable,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayReport {
    pub witnesses: Vec<DecayWitness>,
    /// Every `ψ̂^(l)`, `l != 0`, vanishes on `(K_{-N}^+)^⊥`.
    pub wavelets_vanish_near_identity: bool,
}

impl DecayReport {
    pub fn passes(&self) -> bool {
        self.wavelets_vanish_near_identity
            && self.witnesses.iter().all(|w| w.c.is_finite() && w.c > 0.0)
    }
}

const DECAY_EPSILON: f64 = 1.0;

/// Smallest `C` with `sup_shell |f| <= C / (1 + p^(ns))^(1/2 + ε)` on every shell.
///
/// The annihilator core spans all shells `n <= floor`; the bound is tightest
/// at `n = floor` there.
fn scaling_witness(name: &str, f: &SpectralStepFunction) -> DecayWitness {
    let t = shell_table(f);
    let q = f.params();
    let weight = |n: i32| (1.0 + q.q_pow(n)).powf(0.5 + DECAY_EPSILON);
    let mut c = t.core * weight(t.floor);
    for &(n, sup) in &t.shells {
        c = c.max(sup * weight(n));
    }
    DecayWitness {
        name: name.into(),
        c: c.max(f64::MIN_POSITIVE),
        epsilon: DECAY_EPSILON,
        table: t,
    }
}

/// Smallest `C` with `sup_{(K_n^+)^⊥} |ψ̂| <= C p^(ns)` for every `n`; needs
/// `ψ̂ = 0` on the core.
fn wavelet_witness(name: &str, f: &SpectralStepFunction) -> DecayWitness {
    let t = shell_table(f);
    let q = f.params();
    let mut c: f64 = if t.core > 0.0 { f64::INFINITY } else { 0.0 };
    // sup over the ball (K_n)^⊥ is the running max over shells <= n
    let mut running: f64 = 0.0;
    for &(n, sup) in &t.shells {
        running = running.max(sup);
        c = c.max(running / q.q_pow(n));
    }
    DecayWitness {
        name: name.into(),
        c: c.max(f64::MIN_POSITIVE),
        epsilon: DECAY_EPSILON,
        table: t,
    }
}

pub fn check_decay_hypotheses(system: &WaveletSystem) -> DecayReport {
    let family = system.family();
    let mut witnesses = vec![
        scaling_witness("phi_hat", family.phi_hat()),
        scaling_witness("dual_phi_hat", family.dual_phi_hat()),
    ];
    let mut vanish = true;
    for w in system.nonzero() {
        let code = w.l.code();
        for (name, f) in [("psi_hat", &w.psi_hat), ("dual_psi_hat", &w.dual_psi_hat)] {
            let wit = wavelet_witness(&format!("{name}[{code}]"), f);
            vanish &= wit.table.core == 0.0;
            witnesses.push(wit);
        }
    }
    DecayReport {
        witnesses,
        wavelets_vanish_near_identity: vanish,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::GfParams;
    use crate::mra::{build_family, build_mask, unit_assignment};
    use crate::spectral::elementary_from_tree;
    use crate::trees::{build_basic_tree, chain_tree, Tree};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn p21() -> GfParams {
        GfParams::new(2, 1).unwrap()
    }

    fn system(t: &Tree, vals: Option<&[f64]>) -> WaveletSystem {
        let set = elementary_from_tree(t).unwrap();
        let assignment = match vals {
            Some(v) => set.cosets().iter().cloned().zip(v.iter().map(|&x| c(x))).collect(),
            None => unit_assignment(&set),
        };
        let mask = build_mask(&set, &assignment, 0.5, 1.6).unwrap();
        build_wavelets(&build_family(t, &mask).unwrap()).unwrap()
    }

    fn chain() -> WaveletSystem {
        system(&chain_tree(p21(), 2, &[0, 0, 1, 1, 0]).unwrap(), Some(&[1.0, 0.8, 1.2, 0.9]))
    }

    fn addr(codes: &[(i32, usize)]) -> CosetAddress {
        CosetAddress::from_codes(p21(), -2, codes)
    }

    #[test]
    fn shifted_chain_mask() {
        let s = chain();
        let one = GfBlock::from_code(p21(), 1);
        let m1 = &s.wavelet(&one).mask;
        let want: BTreeSet<_> = [
            addr(&[(0, 1)]),
            addr(&[(-2, 1), (0, 1)]),
            addr(&[(-2, 1), (-1, 1), (0, 1)]),
            addr(&[(-1, 1)]),
        ]
        .into_iter()
        .collect();
        assert_eq!(m1.support().cloned().collect::<BTreeSet<_>>(), want);
        assert_eq!(&s.wavelets()[0].mask, s.family().mask().values());
    }

    #[test]
    fn chain_wavelet_value() {
        let s = chain();
        let one = GfBlock::from_code(p21(), 1);
        let v = wavelet_hat(&s, &one).get(&addr(&[(-1, 1)]));
        assert!((v - c(0.72)).norm() < 1e-15);
    }

    #[test]
    fn zero_index_reproduces_scaling_spectrum() {
        let s = chain();
        let psi0 = &s.wavelets()[0].psi_hat;
        assert!(psi0.max_abs_diff(s.family().phi_hat()).unwrap() < 1e-15);
    }

    #[test]
    fn properties_and_matrix_condition() {
        for s in [chain(), system(&build_basic_tree(2, 2, 2).unwrap(), None)] {
            assert!(check_mask_properties(&s).passes());
            let r = check_matrix_condition(&s).unwrap();
            assert!(r.passes(1e-12), "{r:?}");
            let q = s.family().params().q();
            assert_eq!(r.sums, q.pow(s.family().n()) * q * q);
        }
    }

    #[test]
    fn haar_decay() {
        let s = system(&build_basic_tree(2, 1, 2).unwrap(), None);
        let r = check_decay_hypotheses(&s);
        assert!(r.passes());
        let phi = &r.witnesses[0];
        assert_eq!(phi.table.shells, vec![(-1, 1.0), (0, 1.0)]);
        assert!(chain_decay_passes());
    }

    fn chain_decay_passes() -> bool {
        check_decay_hypotheses(&chain()).passes()
    }
}
