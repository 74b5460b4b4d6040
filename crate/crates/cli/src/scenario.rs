//! Scenario file schema (versioned, JSON) and the embedded corpus.
//!
//! Steps are declared in topological order: every reference points to an
//! earlier declaration, so executing in file order respects the DAG.

use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub schema: u32,
    pub name: String,
    /// Which computation this encodes, surfaced in the report header.
    pub source: String,
    /// Characteristic; an integer expression, overridable with --param p=..
    pub p: String,
    /// Integer parameters, in declaration order; later ones may reference
    /// earlier ones and `p`.
    #[serde(default)]
    pub params: Vec<ParamDecl>,
    /// Variables of the main ring.
    pub vars: Vec<VarDecl>,
    #[serde(default)]
    pub reserved: Vec<String>,
    /// Named derivations over the main ring.
    #[serde(default)]
    pub derivations: Vec<DerivDecl>,
    /// Chart declarations, in order; sources may reference earlier charts.
    #[serde(default)]
    pub charts: Vec<ChartDecl>,
    pub steps: Vec<StepDecl>,
    #[serde(default)]
    pub expect: Vec<Expectation>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamDecl {
    pub name: String,
    pub value: String,
}

/// A variable declaration: a plain name, or an indexed family
/// `{"family": "x", "to": "n"}` producing x1..x<n> (`from` defaults to 1).
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum VarDecl {
    Plain(String),
    Family {
        family: String,
        #[serde(default)]
        from: Option<String>,
        to: String,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DerivDecl {
    pub name: String,
    pub expr: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartDecl {
    pub id: String,
    pub kind: ChartKind,
    /// Ring the chart maps from: "main" (default) or an earlier chart id,
    /// meaning that chart's target ring.
    #[serde(default)]
    pub source: Option<String>,
    #[serde(default)]
    pub target_vars: Vec<VarDecl>,
    #[serde(default)]
    pub target_reserved: Vec<String>,
    /// standard/weighted: blow-up center (template-expanded names).
    #[serde(default)]
    pub center: Vec<VarDecl>,
    /// standard/weighted: the chart variable.
    #[serde(default)]
    pub chart: Option<String>,
    /// weighted: weights aligned with the center.
    #[serde(default)]
    pub weights: Vec<WeightDecl>,
    /// explicit: forward images; unmapped variables stay fixed.
    #[serde(default)]
    pub map: Vec<MapEntry>,
    /// compose: earlier chart ids, applied left to right.
    #[serde(default)]
    pub charts: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartKind {
    Standard,
    Weighted,
    Explicit,
    Compose,
}

/// A weight, or a run of equal weights: `{"value": "p-1", "count": "n-1"}`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum WeightDecl {
    Plain(String),
    Run { value: String, count: String },
}

/// Forward image of one variable, or of an indexed family via `for`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapEntry {
    pub var: String,
    pub image: String,
    /// Range like "i=1..N-2"; `var` and `image` may mention {i}.
    #[serde(default)]
    pub r#for: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DivisorDecl {
    pub name: String,
    pub coeff: String,
    pub poly: String,
}

/// One executable step. `op` selects the operation; the other fields are
/// operation-specific. String arguments referencing earlier values use the
/// bare id (optionally dotted into record fields); numeric arguments are
/// expressions unless they start with `@`, which dereferences a step value.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepDecl {
    Pullback { id: String, derivation: String, chart: String },
    Saturate { id: String, derivation: String, var: String },
    PPower { id: String, derivation: String },
    IsPClosed { id: String, derivation: String },
    Multiplicativity {
        id: String,
        derivation: String,
        #[serde(default)]
        units: Vec<String>,
    },
    IsInvariant { id: String, derivation: String, var: String },
    Apply { id: String, derivation: String, poly: String },
    Bracket { id: String, d1: String, d2: String },
    Poly { id: String, value: String, #[serde(default)] ring: Option<String> },
    Jacobian { id: String, chart: String },
    ChartDiscrepancy {
        id: String,
        chart: String,
        #[serde(default)]
        divisors: Vec<DivisorDecl>,
        exceptional: String,
    },
    StrictTransform { id: String, chart: String, poly: String, exceptional: String },
    Kernel { id: String, derivation: String, #[serde(default)] dmax: Option<String> },
    HilbertMatch {
        id: String,
        derivation: String,
        gens: Vec<String>,
        #[serde(default)]
        dmax: Option<String>,
    },
    Lift {
        id: String,
        derivation: String,
        target: String,
        param: String,
        #[serde(default)]
        dmax: Option<String>,
    },
    Mprimary { id: String, derivation: String, vars: Vec<VarDecl> },
    QuotientDiscrepancy { id: String, a_pair: String, a_fol: String, invariant: bool },
    ImageCoefficient { id: String, coeff: String, invariant: bool },
    Classify { id: String, #[serde(default)] n: Option<String> },
    FamilyCascade {
        id: String,
        #[serde(default)]
        n: Option<String>,
        #[serde(default)]
        m: Option<String>,
    },
    Char3Cascade { id: String, #[serde(default)] r: Option<String> },
    StableVolume { id: String, n: String, r: String, s: String },
    VolumeMonotone { id: String, n: String, samples: String },
    FpPow { id: String, base: String, exp: String },
    IsInteger { id: String, value: String },
}

impl StepDecl {
    pub fn id(&self) -> &str {
        match self {
            StepDecl::Pullback { id, .. }
            | StepDecl::Saturate { id, .. }
            | StepDecl::PPower { id, .. }
            | StepDecl::IsPClosed { id, .. }
            | StepDecl::Multiplicativity { id, .. }
            | StepDecl::IsInvariant { id, .. }
            | StepDecl::Apply { id, .. }
            | StepDecl::Bracket { id, .. }
            | StepDecl::Poly { id, .. }
            | StepDecl::Jacobian { id, .. }
            | StepDecl::ChartDiscrepancy { id, .. }
            | StepDecl::StrictTransform { id, .. }
            | StepDecl::Kernel { id, .. }
            | StepDecl::HilbertMatch { id, .. }
            | StepDecl::Lift { id, .. }
            | StepDecl::Mprimary { id, .. }
            | StepDecl::QuotientDiscrepancy { id, .. }
            | StepDecl::ImageCoefficient { id, .. }
            | StepDecl::Classify { id, .. }
            | StepDecl::FamilyCascade { id, .. }
            | StepDecl::Char3Cascade { id, .. }
            | StepDecl::StableVolume { id, .. }
            | StepDecl::VolumeMonotone { id, .. }
            | StepDecl::FpPow { id, .. }
            | StepDecl::IsInteger { id, .. } => id,
        }
    }

    pub fn op_name(&self) -> &'static str {
        match self {
            StepDecl::Pullback { .. } => "pullback",
            StepDecl::Saturate { .. } => "saturate",
            StepDecl::PPower { .. } => "p_power",
            StepDecl::IsPClosed { .. } => "is_p_closed",
            StepDecl::Multiplicativity { .. } => "multiplicativity",
            StepDecl::IsInvariant { .. } => "is_invariant",
            StepDecl::Apply { .. } => "apply",
            StepDecl::Bracket { .. } => "bracket",
            StepDecl::Poly { .. } => "poly",
            StepDecl::Jacobian { .. } => "jacobian",
            StepDecl::ChartDiscrepancy { .. } => "chart_discrepancy",
            StepDecl::StrictTransform { .. } => "strict_transform",
            StepDecl::Kernel { .. } => "kernel",
            StepDecl::HilbertMatch { .. } => "hilbert_match",
            StepDecl::Lift { .. } => "lift",
            StepDecl::Mprimary { .. } => "mprimary",
            StepDecl::QuotientDiscrepancy { .. } => "quotient_discrepancy",
            StepDecl::ImageCoefficient { .. } => "image_coefficient",
            StepDecl::Classify { .. } => "classify",
            StepDecl::FamilyCascade { .. } => "family_cascade",
            StepDecl::Char3Cascade { .. } => "char3_cascade",
            StepDecl::StableVolume { .. } => "stable_volume",
            StepDecl::VolumeMonotone { .. } => "volume_monotone",
            StepDecl::FpPow { .. } => "fp_pow",
            StepDecl::IsInteger { .. } => "is_integer",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    /// Step id, optionally dotted into a record field, e.g. "sat.k".
    pub step: String,
    /// Expected value as a template; its parse depends on the value type.
    pub value: String,
    /// Optional guard: the expectation only applies when this condition
    /// (an expression over the parameters) is nonzero.
    #[serde(default)]
    pub when: Option<String>,
}

pub fn parse_scenario(text: &str) -> Result<ScenarioDoc, CliError> {
    let doc: ScenarioDoc =
        serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))?;
    if doc.schema != 1 {
        return Err(CliError::Schema(format!("unsupported schema version {}", doc.schema)));
    }
    Ok(doc)
}

/// The embedded scenario corpus, keyed by scenario name.
pub const CORPUS: &[(&str, &str)] = &[
    ("non-s3-quotient", include_str!("../scenarios/non-s3-quotient.json")),
    ("weighted-chart-gorenstein", include_str!("../scenarios/weighted-chart-gorenstein.json")),
    ("degree-reduction-blowup", include_str!("../scenarios/degree-reduction-blowup.json")),
    ("family-cascade", include_str!("../scenarios/family-cascade.json")),
    ("inseparable-node-family", include_str!("../scenarios/inseparable-node-family.json")),
    ("scalar-multiplicative", include_str!("../scenarios/scalar-multiplicative.json")),
    ("cubic-derivation-charts", include_str!("../scenarios/cubic-derivation-charts.json")),
    ("cubic-family-cascade", include_str!("../scenarios/cubic-family-cascade.json")),
    ("projective-chart-change", include_str!("../scenarios/projective-chart-change.json")),
    ("stable-volume", include_str!("../scenarios/stable-volume.json")),
];

pub fn corpus_lookup(name: &str) -> Option<&'static str> {
    CORPUS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}
