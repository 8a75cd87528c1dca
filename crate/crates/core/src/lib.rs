//! Riesz multiresolution analyses and biorthogonal wavelets on local fields of
//! positive characteristic, built from N-valid trees.
//!
//! The pipeline runs tree → elementary set → mask → scaling spectrum → wavelet
//! spectra, with exact finite-sum verification at every stage.

pub mod algebra;
pub mod characters;
pub mod error;
pub mod json;
pub mod mra;
pub mod pipeline;
pub mod spectral;
pub mod transform;
pub mod trees;
pub mod wavelets;

pub use num_complex::Complex64;

pub use algebra::{
    field_dilate, field_norm, gf_add, gf_dot, h0_enumerate, FieldElement, GfBlock, GfParams,
    ShiftH0,
};
pub use characters::{addr_dilate, addr_mul, addr_refine, char_pairing, root_of_unity, CosetAddress};
pub use error::{Error, Result};
pub use mra::{
    build_family, build_family_with_height, build_mask, check_refinement, dual_mask,
    dual_scaling_hat, mask_coefficients, mask_from_coefficients, riesz_bounds, scaling_hat,
    scaling_hat_paths, scaling_hat_with_factors, seeded_assignment, unit_assignment, Mask,
    MraFamily, RefinementReport,
};
pub use pipeline::{export_grid_csv, verify_all, verify_family, verify_system, Check, Report};
pub use spectral::{
    elementary_from_tree, periodized_eval, spectral_dilate, spectral_inner_product,
    spectral_integral, validate_elementary, CompensatedSum, ElementaryReport, ElementarySet,
    SpectralStepFunction,
};
pub use transform::{
    biorthogonality_report, forward_fourier, gram_matrix, hermitian_eigenvalues, inverse_fourier,
    periodization_diagnostic, spatial_refinement_deviation, BiorthogonalityReport,
    SpatialStepFunction,
};
pub use trees::{
    basic_step, build_basic_tree, chain_tree, enumerate_windows, validate_tree, Node, NodeId, Tree,
    TreeReport,
};
pub use wavelets::{
    build_wavelets, check_decay_hypotheses, check_mask_properties, check_matrix_condition,
    dual_wavelet_hat, wavelet_hat, wavelet_masks, DecayReport, MaskPropertiesReport,
    MatrixConditionReport, Wavelet, WaveletSystem,
};
