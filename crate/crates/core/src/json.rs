//! JSON interchange. Every top-level document carries `"format": "lfwave/1"`.
//!
//! Coset addresses are written as `{"base": floor, "digits": {"j": [..]}}`
//! where `base` is the lowest digit index (the coset is one of
//! `(K_base^+)^⊥`), so `base = -L` for a function constant on cosets of
//! `(K_{-L}^+)^⊥`. Spectra use the same sign.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algebra::{FieldElement, GfBlock, GfParams};
use crate::characters::CosetAddress;
use crate::error::{Error, Result};
use crate::mra::{Mask, MraFamily};
use crate::spectral::{ElementarySet, SpectralStepFunction};
use crate::trees::{Node, Tree, TreeReport};
use crate::wavelets::{Wavelet, WaveletSystem};

pub const FORMAT: &str = "lfwave/1";

fn check_format(found: &str) -> Result<()> {
    if found != FORMAT {
        return Err(Error::Schema(format!(
            "unsupported format {found:?}, expected {FORMAT:?}"
        )));
    }
    Ok(())
}

fn block_from(params: GfParams, digits: &[u32]) -> Result<GfBlock> {
    GfBlock::new(params, digits).map_err(|e| Error::Schema(e.to_string()))
}

fn params_from(p: u32, s: u32) -> Result<GfParams> {
    GfParams::new(p, s).map_err(|e| Error::Schema(e.to_string()))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AddressJson {
    pub base: i32,
    pub digits: BTreeMap<i32, Vec<u32>>,
}

impl AddressJson {
    pub fn from_address(a: &CosetAddress) -> Self {
        Self {
            base: a.floor(),
            digits: a
                .digits()
                .iter()
                .map(|(&j, b)| (j, b.digits().collect()))
                .collect(),
        }
    }

    pub fn to_address(&self, params: GfParams) -> Result<CosetAddress> {
        let mut digits = Vec::new();
        for (&j, d) in &self.digits {
            if j < self.base {
                return Err(Error::Schema(format!(
                    "digit at index {j} below base {}",
                    self.base
                )));
            }
            digits.push((j, block_from(params, d)?));
        }
        CosetAddress::new(params, self.base, digits)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ElementJson {
    pub blocks: BTreeMap<i32, Vec<u32>>,
}

impl ElementJson {
    pub fn from_element(x: &FieldElement) -> Self {
        Self {
            blocks: x
                .blocks()
                .iter()
                .map(|(&j, b)| (j, b.digits().collect()))
                .collect(),
        }
    }

    pub fn to_element(&self, params: GfParams) -> Result<FieldElement> {
        let mut blocks = Vec::new();
        for (&j, d) in &self.blocks {
            blocks.push((j, block_from(params, d)?));
        }
        FieldElement::from_blocks(params, blocks)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ValueJson {
    pub addr: AddressJson,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectrumJson {
    pub base: i32,
    pub values: Vec<ValueJson>,
}

impl SpectrumJson {
    pub fn from_function(f: &SpectralStepFunction) -> Self {
        Self {
            base: f.floor(),
            values: f
                .iter()
                .map(|(a, v)| ValueJson {
                    addr: AddressJson::from_address(a),
                    re: v.re,
                    im: v.im,
                })
                .collect(),
        }
    }

    pub fn to_function(&self, params: GfParams) -> Result<SpectralStepFunction> {
        let mut values = Vec::with_capacity(self.values.len());
        for v in &self.values {
            let a = v.addr.to_address(params)?;
            if a.floor() != self.base {
                return Err(Error::Schema(format!(
                    "address base {} differs from spectrum base {}",
                    a.floor(),
                    self.base
                )));
            }
            values.push((a, Complex64::new(v.re, v.im)));
        }
        SpectralStepFunction::from_values(params, self.base, values)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NodeJson {
    pub id: usize,
    pub label: Vec<u32>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TreeJson {
    pub format: String,
    pub p: u32,
    pub s: u32,
    #[serde(rename = "N")]
    pub n: u32,
    pub nodes: Vec<NodeJson>,
}

pub fn tree_to_json(t: &Tree) -> TreeJson {
    TreeJson {
        format: FORMAT.into(),
        p: t.params().p(),
        s: t.params().s(),
        n: t.n(),
        nodes: t
            .nodes()
            .iter()
            .map(|v| NodeJson {
                id: v.id,
                label: v.label.digits().collect(),
                parent: v.parent,
                children: v.children.clone(),
            })
            .collect(),
    }
}

pub fn tree_from_json(j: &TreeJson) -> Result<Tree> {
    check_format(&j.format)?;
    let params = params_from(j.p, j.s)?;
    let mut nodes = Vec::with_capacity(j.nodes.len());
    for v in &j.nodes {
        nodes.push(Node {
            id: v.id,
            label: block_from(params, &v.label)?,
            parent: v.parent,
            children: v.children.clone(),
        });
    }
    Tree::from_nodes(params, j.n, nodes)
}

/// SHA-256 of the tree's JSON, used as mask provenance.
pub fn tree_fingerprint(t: &Tree) -> String {
    let text = serde_json::to_string(&tree_to_json(t)).expect("tree JSON is serializable");
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Validation summary of a tree; words are written as label-digit lists.
pub fn tree_report_json(r: &TreeReport) -> serde_json::Value {
    let words: Vec<Vec<Vec<u32>>> = r
        .duplicate_words
        .iter()
        .map(|w| w.iter().map(|b| b.digits().collect()).collect())
        .collect();
    serde_json::json!({
        "format": FORMAT,
        "valid": r.is_valid(),
        "root_zero": r.root_zero,
        "zero_spine": r.zero_spine,
        "windows_complete": r.windows_complete,
        "windows_unique": r.windows_unique,
        "height": r.height,
        "node_count": r.node_count,
        "expected_node_count": r.expected_node_count,
        "duplicate_words": words,
    })
}

/// `k`-windows as `{"node": id, "word": [[..], ..]}` records.
pub fn windows_json(windows: &[(Vec<GfBlock>, usize)]) -> serde_json::Value {
    let rows: Vec<serde_json::Value> = windows
        .iter()
        .map(|(w, id)| {
            let word: Vec<Vec<u32>> = w.iter().map(|b| b.digits().collect()).collect();
            serde_json::json!({"node": id, "word": word})
        })
        .collect();
    serde_json::json!({"format": FORMAT, "windows": rows})
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SetJson {
    pub format: String,
    pub p: u32,
    pub s: u32,
    #[serde(rename = "N")]
    pub n: u32,
    #[serde(rename = "M")]
    pub m: u32,
    pub cosets: Vec<AddressJson>,
}

pub fn set_to_json(set: &ElementarySet) -> SetJson {
    SetJson {
        format: FORMAT.into(),
        p: set.params().p(),
        s: set.params().s(),
        n: set.n(),
        m: set.m(),
        cosets: set.cosets().iter().map(AddressJson::from_address).collect(),
    }
}

pub fn set_from_json(j: &SetJson) -> Result<ElementarySet> {
    check_format(&j.format)?;
    let params = params_from(j.p, j.s)?;
    let cosets = j
        .cosets
        .iter()
        .map(|a| a.to_address(params))
        .collect::<Result<Vec<_>>>()?;
    Ok(ElementarySet::new(params, j.n, j.m, cosets))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MaskJson {
    pub format: String,
    pub p: u32,
    pub s: u32,
    #[serde(rename = "N")]
    pub n: u32,
    #[serde(rename = "A")]
    pub lower: f64,
    #[serde(rename = "B")]
    pub upper: f64,
    pub provenance: Option<String>,
    pub values: SpectrumJson,
}

pub fn mask_to_json(m: &Mask) -> MaskJson {
    MaskJson {
        format: FORMAT.into(),
        p: m.params().p(),
        s: m.params().s(),
        n: m.n(),
        lower: m.lower(),
        upper: m.upper(),
        provenance: m.provenance().map(str::to_owned),
        values: SpectrumJson::from_function(m.values()),
    }
}

/// Reads the raw assignment and bounds of a mask file without validating it.
pub fn mask_assignment_from_json(
    j: &MaskJson,
) -> Result<(GfParams, BTreeMap<CosetAddress, Complex64>, f64, f64)> {
    check_format(&j.format)?;
    let params = params_from(j.p, j.s)?;
    let mut map = BTreeMap::new();
    for v in &j.values.values {
        map.insert(v.addr.to_address(params)?, Complex64::new(v.re, v.im));
    }
    Ok((params, map, j.lower, j.upper))
}

pub fn mask_from_json(j: &MaskJson) -> Result<Mask> {
    check_format(&j.format)?;
    let params = params_from(j.p, j.s)?;
    let values = j.values.to_function(params)?;
    Mask::from_parts(j.n, j.lower, j.upper, values, j.provenance.clone())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FamilyJson {
    pub format: String,
    pub p: u32,
    pub s: u32,
    #[serde(rename = "N")]
    pub n: u32,
    #[serde(rename = "H")]
    pub height: u32,
    pub mask: MaskJson,
    pub dual_mask: MaskJson,
    pub phi_hat: SpectrumJson,
    pub dual_phi_hat: SpectrumJson,
}

pub fn family_to_json(f: &MraFamily) -> FamilyJson {
    FamilyJson {
        format: FORMAT.into(),
        p: f.params().p(),
        s: f.params().s(),
        n: f.n(),
        height: f.height(),
        mask: mask_to_json(f.mask()),
        dual_mask: mask_to_json(f.dual_mask()),
        phi_hat: SpectrumJson::from_function(f.phi_hat()),
        dual_phi_hat: SpectrumJson::from_function(f.dual_phi_hat()),
    }
}

/// Loads a family as stored. Mask invariants are schema-level; identities
/// between the parts are left to verification.
pub fn family_from_json(j: &FamilyJson) -> Result<MraFamily> {
    check_format(&j.format)?;
    let params = params_from(j.p, j.s)?;
    let mask = mask_from_json(&j.mask)?;
    let dual = mask_from_json(&j.dual_mask)?;
    if mask.params() != params || mask.n() != j.n {
        return Err(Error::Schema("mask parameters differ from the family".into()));
    }
    MraFamily::from_parts(
        j.height,
        mask,
        dual,
        j.phi_hat.to_function(params)?,
        j.dual_phi_hat.to_function(params)?,
    )
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WaveletJson {
    pub l: Vec<u32>,
    pub mask: SpectrumJson,
    pub dual_mask: SpectrumJson,
    pub psi_hat: SpectrumJson,
    pub dual_psi_hat: SpectrumJson,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SystemJson {
    pub format: String,
    pub family: FamilyJson,
    pub wavelets: Vec<WaveletJson>,
}

pub fn system_to_json(s: &WaveletSystem) -> SystemJson {
    SystemJson {
        format: FORMAT.into(),
        family: family_to_json(s.family()),
        wavelets: s
            .wavelets()
            .iter()
            .map(|w| WaveletJson {
                l: w.l.digits().collect(),
                mask: SpectrumJson::from_function(&w.mask),
                dual_mask: SpectrumJson::from_function(&w.dual_mask),
                psi_hat: SpectrumJson::from_function(&w.psi_hat),
                dual_psi_hat: SpectrumJson::from_function(&w.dual_psi_hat),
            })
            .collect(),
    }
}

pub fn system_from_json(j: &SystemJson) -> Result<WaveletSystem> {
    check_format(&j.format)?;
    let family = family_from_json(&j.family)?;
    let params = family.params();
    let mut wavelets = Vec::with_capacity(j.wavelets.len());
    for w in &j.wavelets {
        wavelets.push(Wavelet {
            l: block_from(params, &w.l)?,
            mask: w.mask.to_function(params)?,
            dual_mask: w.dual_mask.to_function(params)?,
            psi_hat: w.psi_hat.to_function(params)?,
            dual_psi_hat: w.dual_psi_hat.to_function(params)?,
        });
    }
    WaveletSystem::from_parts(family, wavelets)
}

/// Pretty JSON with a trailing newline.
pub fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents are serializable");
    s.push('\n');
    s
}

pub fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mra::{build_family, build_mask, seeded_assignment};
    use crate::spectral::elementary_from_tree;
    use crate::trees::{build_basic_tree, chain_tree};
    use crate::wavelets::build_wavelets;

    #[test]
    fn address_shape() {
        let p = GfParams::new(2, 1).unwrap();
        let a = CosetAddress::from_codes(p, -2, &[(-2, 1), (0, 1)]);
        let text = serde_json::to_string(&AddressJson::from_address(&a)).unwrap();
        assert_eq!(text, r#"{"base":-2,"digits":{"-2":[1],"0":[1]}}"#);
        let back: AddressJson = parse(&text).unwrap();
        assert_eq!(back.to_address(p).unwrap(), a);
    }

    #[test]
    fn tree_round_trip() {
        let t = build_basic_tree(3, 1, 2).unwrap();
        let j = to_pretty(&tree_to_json(&t));
        let back = tree_from_json(&parse(&j).unwrap()).unwrap();
        assert_eq!(back, t);
        assert_eq!(tree_fingerprint(&back), tree_fingerprint(&t));
        let chain = chain_tree(GfParams::new(2, 1).unwrap(), 2, &[0, 0, 1, 1, 0]).unwrap();
        assert_ne!(tree_fingerprint(&chain), tree_fingerprint(&build_basic_tree(2, 1, 2).unwrap()));
    }

    #[test]
    fn system_round_trip() {
        let t = build_basic_tree(2, 2, 2).unwrap();
        let set = elementary_from_tree(&t).unwrap();
        let mask = build_mask(&set, &seeded_assignment(&set, 0.5, 1.6, 3, true), 0.5, 1.6).unwrap();
        let s = build_wavelets(&build_family(&t, &mask).unwrap()).unwrap();
        let text = to_pretty(&system_to_json(&s));
        let back = system_from_json(&parse(&text).unwrap()).unwrap();
        assert_eq!(back, s);
        assert_eq!(to_pretty(&system_to_json(&back)), text);
    }

    #[test]
    fn wrong_format_is_schema_error() {
        let t = build_basic_tree(2, 1, 2).unwrap();
        let mut j = tree_to_json(&t);
        j.format = "lfwave/0".into();
        assert!(matches!(tree_from_json(&j), Err(Error::Schema(_))));
        assert!(matches!(parse::<TreeJson>("{"), Err(Error::Schema(_))));
    }
}
