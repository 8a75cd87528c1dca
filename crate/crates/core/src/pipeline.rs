//! Verification reports over stored families and systems, and grid export.

use std::ops::RangeInclusive;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::algebra::h0_enumerate;
use crate::error::Result;
use crate::mra::{
    check_refinement, mask_coefficients, mask_from_coefficients, riesz_bounds, scaling_hat,
    MraFamily,
};
use crate::spectral::{validate_elementary, SpectralStepFunction};
use crate::transform::{
    biorthogonality_report, forward_fourier, gram_matrix, hermitian_eigenvalues, inverse_fourier,
    periodization_diagnostic, scaling_function, spatial_refinement_deviation, EIGEN_METHOD,
};
use crate::wavelets::{
    check_decay_hypotheses, check_mask_properties, check_matrix_condition, shift_mask,
    wavelet_spectrum, WaveletSystem,
};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub witness: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub format: String,
    pub tolerance: f64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl Report {
    fn new(tolerance: f64) -> Self {
        Self {
            format: crate::json::FORMAT.into(),
            tolerance,
            passed: true,
            checks: Vec::new(),
        }
    }

    fn push(&mut self, name: &str, passed: bool, witness: Value) {
        self.passed &= passed;
        self.checks.push(Check {
            name: name.into(),
            passed,
            witness,
        });
    }

    pub fn failing(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Largest `|f - 1|` over the support, plus whether the supports agree.
fn product_is_one(f: &SpectralStepFunction, g: &SpectralStepFunction) -> Result<(f64, bool)> {
    let prod = f.product(&g.conj())?;
    let same = prod.len() == f.len() && prod.len() == g.len();
    let dev = prod
        .iter()
        .map(|(_, v)| (v - Complex64::new(1.0, 0.0)).norm())
        .fold(0.0, f64::max);
    Ok((dev, same))
}

fn family_checks(family: &MraFamily, tol: f64, report: &mut Report) -> Result<()> {
    let params = family.params();
    let n = family.n() as i32;
    let h = family.height() as i32;
    let mask = family.mask();

    let (m_lo, m_hi) = mask.values().modulus_sq_range().unwrap_or((0.0, 0.0));
    report.push(
        "mask.bounds",
        true,
        json!({"A": mask.lower(), "B": mask.upper(), "min_sq": m_lo, "max_sq": m_hi}),
    );

    let expected_dual = mask.values().map(|v| Complex64::new(1.0, 0.0) / v.conj());
    let dual_dev = expected_dual.max_abs_diff(family.dual_mask().values())?;
    report.push("mask.dual", dual_dev < tol, json!({"max_deviation": dual_dev}));

    let beta = mask_coefficients(mask);
    let back = mask_from_coefficients(params, family.n(), &beta)?;
    let coeff_dev = back.max_abs_diff(mask.values())?;
    report.push(
        "mask.coefficients",
        coeff_dev < tol,
        json!({"count": beta.len(), "round_trip_deviation": coeff_dev}),
    );

    let recomputed = scaling_hat(mask, family.height());
    let phi_dev = recomputed.max_abs_diff(family.phi_hat())?;
    let dual_recomputed = scaling_hat(family.dual_mask(), family.height());
    let dual_phi_dev = dual_recomputed.max_abs_diff(family.dual_phi_hat())?;
    report.push(
        "scaling.product",
        phi_dev < tol && dual_phi_dev < tol,
        json!({"max_deviation": phi_dev, "dual_max_deviation": dual_phi_dev}),
    );

    let r = check_refinement(family)?;
    report.push(
        "scaling.refinement",
        r.passes(tol),
        json!({"max_deviation": r.max_deviation, "dual_max_deviation": r.dual_max_deviation}),
    );

    let identity = crate::characters::CosetAddress::identity(params, -n);
    let at_identity = family.phi_hat().value(&identity)?;
    report.push(
        "scaling.identity",
        (at_identity - Complex64::new(1.0, 0.0)).norm() < tol,
        json!({"re": at_identity.re, "im": at_identity.im}),
    );

    let support: Vec<_> = family.phi_hat().support().cloned().collect();
    let m = (h - 2 * n + 1).max(0) as u32;
    let er = validate_elementary(params, &support, family.n(), m);
    report.push(
        "scaling.support",
        er.is_valid() && er.within_window,
        json!({"cosets": support.len(), "N": family.n(), "M": m, "max_M": er.max_m}),
    );

    let (dev, same) = product_is_one(family.phi_hat(), family.dual_phi_hat())?;
    report.push(
        "scaling.biorthogonal",
        same && dev < tol,
        json!({"max_deviation": dev, "same_support": same}),
    );

    let (lo, hi) = riesz_bounds(family);
    let (env_lo, env_hi) = family.envelope();
    report.push(
        "riesz.envelope",
        lo >= env_lo - tol && hi <= env_hi + tol && lo > 0.0,
        json!({"min_sq": lo, "max_sq": hi, "envelope": [env_lo, env_hi]}),
    );
    Ok(())
}

pub fn verify_family(family: &MraFamily, tol: f64) -> Result<Report> {
    let mut report = Report::new(tol);
    family_checks(family, tol, &mut report)?;
    Ok(report)
}

fn system_checks(system: &WaveletSystem, tol: f64, report: &mut Report) -> Result<()> {
    let family = system.family();
    family_checks(family, tol, report)?;

    let mut spectra_dev: f64 = 0.0;
    for w in system.wavelets() {
        let m = shift_mask(family.mask().values(), &w.l);
        let md = shift_mask(family.dual_mask().values(), &w.l);
        spectra_dev = spectra_dev
            .max(m.max_abs_diff(&w.mask)?)
            .max(md.max_abs_diff(&w.dual_mask)?)
            .max(wavelet_spectrum(&w.mask, family.phi_hat())?.max_abs_diff(&w.psi_hat)?)
            .max(wavelet_spectrum(&w.dual_mask, family.dual_phi_hat())?.max_abs_diff(&w.dual_psi_hat)?);
    }
    report.push("wavelets.spectra", spectra_dev < tol, json!({"max_deviation": spectra_dev}));

    let props = check_mask_properties(system);
    report.push("wavelets.mask_properties", props.passes(), serde_json::to_value(&props)?);

    let mc = check_matrix_condition(system)?;
    report.push("wavelets.matrix_condition", mc.passes(tol), serde_json::to_value(&mc)?);

    let top = family.height() as i32 - 2 * family.n() as i32 + 1;
    let mut inside = true;
    let mut dual_dev: f64 = 0.0;
    let mut same = true;
    for w in system.nonzero() {
        for f in [&w.psi_hat, &w.dual_psi_hat] {
            inside &= f.max_digit_index().map_or(true, |t| t <= top);
        }
        let (dev, s) = product_is_one(&w.psi_hat, &w.dual_psi_hat)?;
        dual_dev = dual_dev.max(dev);
        same &= s;
    }
    report.push(
        "wavelets.support",
        inside,
        json!({"max_digit_index_allowed": top}),
    );
    report.push(
        "wavelets.biorthogonal_spectra",
        same && dual_dev < tol,
        json!({"max_deviation": dual_dev, "same_support": same}),
    );

    let decay = check_decay_hypotheses(system);
    let witnesses: Vec<Value> = decay
        .witnesses
        .iter()
        .map(|w| json!({"name": w.name, "C": w.c, "epsilon": w.epsilon}))
        .collect();
    report.push(
        "wavelets.decay",
        decay.passes(),
        json!({"witnesses": witnesses, "vanish_near_identity": decay.wavelets_vanish_near_identity}),
    );
    Ok(())
}

pub fn verify_system(system: &WaveletSystem, tol: f64) -> Result<Report> {
    let mut report = Report::new(tol);
    system_checks(system, tol, &mut report)?;
    Ok(report)
}

/// Every check, including the finite sections over shifts `H_0^(depth)` and
/// dilation levels `levels`.
pub fn verify_all(
    system: &WaveletSystem,
    depth: u32,
    levels: RangeInclusive<i32>,
    tol: f64,
) -> Result<Report> {
    let mut report = Report::new(tol);
    system_checks(system, tol, &mut report)?;
    let family = system.family();
    let params = family.params();

    let bio = biorthogonality_report(system, depth, levels.clone())?;
    report.push(
        "biorthogonality",
        bio.passes(tol),
        json!({
            "depth": depth,
            "levels": [levels.start(), levels.end()],
            "scaling_max_deviation": bio.scaling_max_deviation,
            "wavelet_max_deviation": bio.wavelet_max_deviation,
            "entries": bio.entries,
        }),
    );

    let shifts = h0_enumerate(params, depth as i32)?;
    let gram = gram_matrix(family.phi_hat(), &shifts)?;
    let ev = hermitian_eigenvalues(&gram);
    let (lo, hi) = riesz_bounds(family);
    let (ev_lo, ev_hi) = (ev[0], ev[ev.len() - 1]);
    report.push(
        "gram.eigenvalues",
        ev_lo >= lo - tol && ev_hi <= hi + tol,
        json!({"min": ev_lo, "max": ev_hi, "bounds": [lo, hi], "size": shifts.len(), "method": EIGEN_METHOD}),
    );

    let one = family.phi_hat().product(&family.dual_phi_hat().conj())?;
    let mut char_dev: f64 = 0.0;
    for h in &shifts {
        for g in &shifts {
            let v = one.character_integral(&h.element().sub(g.element())?)?;
            let delta = if h == g { 1.0 } else { 0.0 };
            char_dev = char_dev.max((v - Complex64::new(delta, 0.0)).norm());
        }
    }
    report.push("characters.orthonormal", char_dev < tol, json!({"max_deviation": char_dev}));

    let mut rt_dev: f64 = 0.0;
    let mut pl_dev: f64 = 0.0;
    let mut spectra = vec![family.phi_hat(), family.dual_phi_hat()];
    for w in system.nonzero() {
        spectra.push(&w.psi_hat);
        spectra.push(&w.dual_psi_hat);
    }
    for f in spectra {
        let g = inverse_fourier(f)?;
        rt_dev = rt_dev.max(forward_fourier(&g)?.max_abs_diff(f)?);
        pl_dev = pl_dev.max((g.norm_sq() - f.abs_sq().integral().re).abs());
    }
    report.push(
        "fourier.round_trip",
        rt_dev < tol && pl_dev < tol,
        json!({"max_deviation": rt_dev, "plancherel_deviation": pl_dev}),
    );

    let phi = scaling_function(family.phi_hat(), family.mask())?;
    let beta = mask_coefficients(family.mask());
    let sr = spatial_refinement_deviation(&phi, &beta)?;
    let at_zero = phi.value_at(&crate::algebra::FieldElement::zero(params));
    report.push(
        "spatial.refinement",
        sr < tol,
        json!({"max_deviation": sr, "grid": phi.values().len(), "phi_at_zero": [at_zero.re, at_zero.im]}),
    );

    let pd = periodization_diagnostic(family.phi_hat(), depth.max(family.n()))?;
    let (pmin, pmax) = pd
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (_, v)| (a.min(*v), b.max(*v)));
    report.push(
        "periodization",
        pmin >= lo - tol && pmax <= hi + tol,
        json!({"min": pmin, "max": pmax, "entries": pd.len()}),
    );
    Ok(report)
}

/// CSV of `φ`, `φ̃` and every `ψ^(l)`, `ψ̃^(l)` over their grids.
pub fn export_grid_csv(system: &WaveletSystem) -> Result<String> {
    let family = system.family();
    let mut out = String::from("function,point,re,im\n");
    let mut emit = |name: &str, f: &SpectralStepFunction| -> Result<()> {
        for row in inverse_fourier(f)?.to_csv_rows(name) {
            out.push_str(&row);
            out.push('\n');
        }
        Ok(())
    };
    emit("phi", family.phi_hat())?;
    emit("dual_phi", family.dual_phi_hat())?;
    for w in system.nonzero() {
        let code = w.l.code();
        emit(&format!("psi[{code}]"), &w.psi_hat)?;
        emit(&format!("dual_psi[{code}]"), &w.dual_psi_hat)?;
    }
    Ok(out)
}
