//! Fourier transforms between spectral and spatial step functions, and the
//! finite-section diagnostics built on them.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::algebra::{FieldElement, GfBlock, GfParams, ShiftH0};
use crate::characters::{root_of_unity, CosetAddress};
use crate::error::{Error, Result};
use crate::mra::Mask;
use crate::spectral::SpectralStepFunction;
use crate::wavelets::WaveletSystem;

/// A function on `K` constant on cosets of `K_R^+` and supported in `K_{-ρ}^+`.
///
/// `values[i]` belongs to the coset whose blocks on `[-ρ, R-1]` spell `i` in
/// base `q`, highest index most significant.
#[derive(Clone, Debug, PartialEq)]
pub struct SpatialStepFunction {
    params: GfParams,
    resolution: i32,
    radius: i32,
    values: Vec<Complex64>,
}

impl SpatialStepFunction {
    pub fn new(params: GfParams, resolution: i32, radius: i32, values: Vec<Complex64>) -> Result<Self> {
        let len = grid_len(params, resolution + radius)?;
        if values.len() != len {
            return Err(Error::InvalidParams(format!(
                "grid needs {len} values, got {}",
                values.len()
            )));
        }
        Ok(Self {
            params,
            resolution,
            radius,
            values,
        })
    }

    pub fn params(&self) -> GfParams {
        self.params
    }

    pub fn resolution(&self) -> i32 {
        self.resolution
    }

    pub fn radius(&self) -> i32 {
        self.radius
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Lowest block index of the grid.
    pub fn low(&self) -> i32 {
        -self.radius
    }

    /// Representative of grid cell `i`.
    pub fn point(&self, i: usize) -> FieldElement {
        let q = self.params.q();
        let mut code = i;
        let mut blocks = Vec::new();
        for j in self.low()..self.resolution {
            blocks.push((j, GfBlock::from_code(self.params, code % q)));
            code /= q;
        }
        FieldElement::from_blocks(self.params, blocks).expect("blocks carry the grid parameters")
    }

    pub fn points(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.values.len()).map(|i| self.point(i))
    }

    /// `f(x)`; zero outside `K_{-ρ}^+`.
    pub fn value_at(&self, x: &FieldElement) -> Complex64 {
        if let Some(v) = x.valuation() {
            if v < self.low() {
                return Complex64::new(0.0, 0.0);
            }
        }
        let q = self.params.q();
        let mut code = 0usize;
        for j in (self.low()..self.resolution).rev() {
            code = code * q + x.block(j).code();
        }
        self.values[code]
    }

    /// `‖f‖² = Σ |f|² p^(-sR)`.
    pub fn norm_sq(&self) -> f64 {
        let mu = self.params.q_pow(-self.resolution);
        let mut acc = crate::spectral::CompensatedSum::new();
        for v in &self.values {
            acc.add(Complex64::new(v.norm_sqr() * mu, 0.0));
        }
        acc.value().re
    }

    /// `sup |f - g|` over the union of both grids.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.params.check(&other.params)?;
        let r = self.resolution.max(other.resolution);
        let rho = self.radius.max(other.radius);
        let grid = Self::new(self.params, r, rho, vec![Complex64::new(0.0, 0.0); grid_len(self.params, r + rho)?])?;
        Ok(grid
            .points()
            .map(|x| (self.value_at(&x) - other.value_at(&x)).norm())
            .fold(0.0, f64::max))
    }

    /// CSV rows `index,re,im` with the point spelled as `j:code` pairs.
    pub fn to_csv_rows(&self, name: &str) -> Vec<String> {
        self.points()
            .zip(&self.values)
            .map(|(x, v)| {
                let point: Vec<String> = (self.low()..self.resolution)
                    .map(|j| format!("{}:{}", j, x.block(j).code()))
                    .collect();
                format!("{name},{},{:e},{:e}", point.join(" "), v.re, v.im)
            })
            .collect()
    }
}

const MAX_GRID_DIGITS: i32 = 26;
const ROUNDOFF: f64 = 1e-14;

fn grid_len(params: GfParams, width: i32) -> Result<usize> {
    if width < 0 {
        return Err(Error::InvalidParams(format!("negative grid width {width}")));
    }
    let digits = width as f64 * (params.q() as f64).log2();
    if digits > MAX_GRID_DIGITS as f64 {
        return Err(Error::InvalidParams(format!(
            "grid of q^{width} cells exceeds 2^{MAX_GRID_DIGITS}"
        )));
    }
    Ok(params.q().pow(width as u32))
}

/// In-place separable DFT over `axes` base-`p` digit positions:
/// `out[a] = Σ_x in[x] ω^(sign · a·x)` with `ω = e^(2πi/p)`.
fn vilenkin_dft(data: &mut [Complex64], p: usize, axes: usize, sign: i32) {
    let roots: Vec<Complex64> = (0..p)
        .map(|e| {
            let e = if sign < 0 { (p - e) % p } else { e };
            root_of_unity(p as u32, e as u32)
        })
        .collect();
    let mut buf = vec![Complex64::new(0.0, 0.0); p];
    let mut stride = 1;
    for _ in 0..axes {
        let block = stride * p;
        for start in (0..data.len()).step_by(block) {
            for off in 0..stride {
                let base = start + off;
                for (a, slot) in buf.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for x in 0..p {
                        acc += data[base + x * stride] * roots[(a * x) % p];
                    }
                    *slot = acc;
                }
                for (a, v) in buf.iter().enumerate() {
                    data[base + a * stride] = *v;
                }
            }
        }
        stride = block;
    }
}

/// Grid range `[floor, top]` of a spectrum; `top < floor` means a single cell.
fn spectral_window(f: &SpectralStepFunction) -> (i32, i32) {
    let floor = f.floor();
    let top = f.max_digit_index().unwrap_or(floor - 1).max(floor - 1);
    (floor, top)
}

fn address_code(a: &CosetAddress, floor: i32, q: usize) -> usize {
    let mut code = 0usize;
    for (&j, b) in a.digits() {
        code += b.code() * q.pow((j - floor) as u32);
    }
    code
}

/// `f(x) = ∫ f̂(χ) (χ, x) dν(χ)`, exact on step functions.
pub fn inverse_fourier(f_hat: &SpectralStepFunction) -> Result<SpatialStepFunction> {
    let params = f_hat.params();
    let (floor, top) = spectral_window(f_hat);
    let width = top - floor + 1;
    let q = params.q();
    let mut data = vec![Complex64::new(0.0, 0.0); grid_len(params, width)?];
    for (a, &v) in f_hat.iter() {
        data[address_code(a, floor, q)] = v;
    }
    vilenkin_dft(&mut data, params.p() as usize, (width as usize) * params.s() as usize, 1);
    let mu = params.q_pow(floor);
    for v in &mut data {
        *v *= mu;
    }
    SpatialStepFunction::new(params, top + 1, -floor, data)
}

/// `f̂(χ) = ∫ f(x) conj((χ, x)) dμ(x)`, exact on step functions.
pub fn forward_fourier(f: &SpatialStepFunction) -> Result<SpectralStepFunction> {
    let params = f.params();
    let width = f.resolution + f.radius;
    let mut data = f.values.clone();
    vilenkin_dft(&mut data, params.p() as usize, (width as usize) * params.s() as usize, -1);
    let mu = params.q_pow(-f.resolution);
    let floor = f.low();
    let q = params.q();
    // cancellation leaves roundoff where the spectrum is exactly zero
    let cutoff = ROUNDOFF * data.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut values = Vec::new();
    for (i, v) in data.into_iter().enumerate() {
        if v.norm() <= cutoff {
            continue;
        }
        let mut code = i;
        let mut digits = Vec::new();
        for j in floor..f.resolution {
            digits.push((j, GfBlock::from_code(params, code % q)));
            code /= q;
        }
        values.push((CosetAddress::new(params, floor, digits)?, v * mu));
    }
    SpectralStepFunction::from_values(params, floor, values)
}

/// `G_{h,g} = ∫ |f̂|² (χ, g ∸ h) dν`, rows and columns in `shifts` order.
pub fn gram_matrix(f_hat: &SpectralStepFunction, shifts: &[ShiftH0]) -> Result<DMatrix<Complex64>> {
    let w = f_hat.abs_sq();
    let n = shifts.len();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let x = shifts[j].element().sub(shifts[i].element())?;
            let v = w.character_integral(&x)?;
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
    }
    Ok(g)
}

/// Ascending eigenvalues of a Hermitian matrix (nalgebra's symmetric QR iteration).
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub const EIGEN_METHOD: &str = "Hermitian QR iteration (nalgebra SymmetricEigen)";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BiorthogonalityReport {
    /// `max |⟨φ(·∸h), φ̃(·∸g)⟩ - δ_{h,g}|`.
    pub scaling_max_deviation: f64,
    /// `max |⟨ψ^(k)_{n,h}, ψ̃^(l)_{m,g}⟩ - δδδ|` over `k, l != 0`.
    pub wavelet_max_deviation: f64,
    pub entries: usize,
}

impl BiorthogonalityReport {
    pub fn max_deviation(&self) -> f64 {
        self.scaling_max_deviation.max(self.wavelet_max_deviation)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_deviation() < tol
    }
}

/// Inner products of the dilated and shifted systems through Plancherel.
///
/// The spectrum of `p^(ns/2) ψ(𝒜^n x ∸ h)` is
/// `p^(-ns/2) conj((χ, 𝒜^{-n}h)) ψ̂(χ𝒜^{-n})`.
pub fn biorthogonality_report(
    system: &WaveletSystem,
    depth: u32,
    levels: std::ops::RangeInclusive<i32>,
) -> Result<BiorthogonalityReport> {
    let family = system.family();
    let params = family.params();
    let shifts = crate::algebra::h0_enumerate(params, depth as i32)?;
    let mut entries = 0;

    let pair = family.phi_hat().product(&family.dual_phi_hat().conj())?;
    let mut scaling_max: f64 = 0.0;
    for h in &shifts {
        for g in &shifts {
            let x = g.element().sub(h.element())?;
            let v = pair.character_integral(&x)?;
            let delta = if h == g { 1.0 } else { 0.0 };
            scaling_max = scaling_max.max((v - Complex64::new(delta, 0.0)).norm());
            entries += 1;
        }
    }

    let mut wavelet_max: f64 = 0.0;
    for k in system.nonzero() {
        for l in system.nonzero() {
            for n in levels.clone() {
                let dk = k.psi_hat.dilate(n);
                for m in levels.clone() {
                    let dl = l.dual_psi_hat.dilate(m);
                    let prod = dk.product(&dl.conj())?;
                    let norm = params.q_pow(-(n + m)).sqrt();
                    for h in &shifts {
                        let hn = h.element().dilate(-n);
                        for g in &shifts {
                            let x = g.element().dilate(-m).sub(&hn)?;
                            let v = prod.character_integral(&x)? * norm;
                            let delta = if k.l == l.l && n == m && h == g { 1.0 } else { 0.0 };
                            wavelet_max = wavelet_max.max((v - Complex64::new(delta, 0.0)).norm());
                            entries += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(BiorthogonalityReport {
        scaling_max_deviation: scaling_max,
        wavelet_max_deviation: wavelet_max,
        entries,
    })
}

/// `Σ_u |f̂(ξu)|²` over the translates `u` with digits at indices `>= 0`, for
/// every `ξ` with digits on `[-L, -1]`, in enumeration order.
pub fn periodization_diagnostic(f_hat: &SpectralStepFunction, depth: u32) -> Result<Vec<(CosetAddress, f64)>> {
    let floor = -(depth as i32);
    let params = f_hat.params();
    let fine = if f_hat.floor() > floor {
        f_hat.refine(floor)?
    } else if f_hat.floor() < floor {
        return Err(Error::CoarseAddress {
            addr_floor: floor,
            floor: f_hat.floor(),
        });
    } else {
        f_hat.clone()
    };
    let xis = CosetAddress::identity(params, 0).refine(floor)?;
    let mut sums: std::collections::BTreeMap<CosetAddress, crate::spectral::CompensatedSum> =
        xis.iter().map(|x| (x.clone(), Default::default())).collect();
    for (a, v) in fine.iter() {
        let low = CosetAddress::new(params, floor, a.digits().range(..0).map(|(j, b)| (*j, b.clone())))?;
        sums.get_mut(&low)
            .expect("low part lies in the enumeration")
            .add(Complex64::new(v.norm_sqr(), 0.0));
    }
    Ok(xis
        .into_iter()
        .map(|x| {
            let s = sums[&x].value().re;
            (x, s)
        })
        .collect())
}

/// `max_x |φ(x) - Σ_h β_h φ(𝒜x ∸ h)|` over the grid of `φ`.
pub fn spatial_refinement_deviation(
    phi: &SpatialStepFunction,
    coeffs: &[(ShiftH0, Complex64)],
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (i, x) in phi.points().enumerate() {
        let ax = x.dilate(1);
        let mut acc = crate::spectral::CompensatedSum::new();
        for (h, b) in coeffs {
            acc.add(*b * phi.value_at(&ax.sub(h.element())?));
        }
        worst = worst.max((phi.values()[i] - acc.value()).norm());
    }
    Ok(worst)
}

/// Inverse transform of `φ̂` refined so the grid covers the refinement equation.
pub fn scaling_function(phi_hat: &SpectralStepFunction, mask: &Mask) -> Result<SpatialStepFunction> {
    let f = if phi_hat.floor() > mask.floor() {
        phi_hat.refine(mask.floor())?
    } else {
        phi_hat.clone()
    };
    inverse_fourier(&f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::h0_enumerate;

    fn naive_inverse(f: &SpectralStepFunction) -> SpatialStepFunction {
        let (floor, top) = spectral_window(f);
        let params = f.params();
        let len = params.q().pow((top - floor + 1) as u32);
        let mut g = SpatialStepFunction::new(params, top + 1, -floor, vec![Complex64::new(0.0, 0.0); len]).unwrap();
        let pts: Vec<_> = g.points().collect();
        for (i, x) in pts.iter().enumerate() {
            g.values[i] = f.character_integral(x).unwrap();
        }
        g
    }

    #[test]
    fn unit_ball() {
        let p = GfParams::new(2, 1).unwrap();
        let f = SpectralStepFunction::indicator(p, 0, [&CosetAddress::identity(p, 0)]).unwrap();
        let g = inverse_fourier(&f).unwrap();
        assert_eq!((g.resolution(), g.radius()), (0, 0));
        assert_eq!(g.values(), &[Complex64::new(1.0, 0.0)]);
        assert_eq!(forward_fourier(&g).unwrap(), f);
    }

    #[test]
    fn single_coset() {
        let p = GfParams::new(3, 1).unwrap();
        let a = CosetAddress::from_codes(p, -1, &[(-1, 1)]);
        let f = SpectralStepFunction::indicator(p, -1, [&a]).unwrap();
        let g = inverse_fourier(&f).unwrap();
        for x in g.points() {
            let want = a.pairing(&x).unwrap() / 3.0;
            assert!((g.value_at(&x) - want).norm() < 1e-15);
        }
        assert_eq!(g.value_at(&FieldElement::basis(p, -2)), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn fast_matches_naive_and_round_trips() {
        let p = GfParams::new(2, 2).unwrap();
        let f = SpectralStepFunction::from_values(
            p,
            -2,
            [
                (CosetAddress::from_codes(p, -2, &[(-2, 3)]), Complex64::new(0.5, -1.0)),
                (CosetAddress::from_codes(p, -2, &[(-1, 2), (0, 1)]), Complex64::new(2.0, 0.0)),
                (CosetAddress::from_codes(p, -2, &[]), Complex64::new(1.0, 0.0)),
            ],
        )
        .unwrap();
        let fast = inverse_fourier(&f).unwrap();
        assert!(fast.max_abs_diff(&naive_inverse(&f)).unwrap() < 1e-14);
        let back = forward_fourier(&fast).unwrap();
        assert!(back.max_abs_diff(&f).unwrap() < 1e-14);
        let energy = f.abs_sq().integral().re;
        assert!((fast.norm_sq() - energy).abs() < 1e-14);
    }

    #[test]
    fn gram_single_shift() {
        let p = GfParams::new(2, 1).unwrap();
        let f = SpectralStepFunction::from_values(
            p,
            -1,
            [(CosetAddress::from_codes(p, -1, &[(-1, 1)]), Complex64::new(0.0, 3.0))],
        )
        .unwrap();
        let g = gram_matrix(&f, &h0_enumerate(p, 0).unwrap()).unwrap();
        assert_eq!(g.shape(), (1, 1));
        assert!((g[(0, 0)] - Complex64::new(4.5, 0.0)).norm() < 1e-15);
    }
}
