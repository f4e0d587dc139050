use serde::{Deserialize, Serialize};

/// On-disk description of a pool-based learning problem.
///
/// All distributions are given as plain numeric arrays indexed by the
/// position of the symbol in the matching alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemInstance {
    pub x_alphabet: Vec<String>,
    pub y_alphabet: Vec<String>,
    pub w_alphabet: Vec<String>,
    pub h_alphabet: Vec<String>,
    pub p_w: Vec<f64>,
    /// Rows indexed by w, columns by x.
    pub p_x_given_w: Vec<Vec<f64>>,
    /// Rows indexed by x, columns by y.
    pub p_y_given_x: Vec<Vec<f64>>,
    pub hypotheses: Vec<HypothesisSpec>,
    pub algorithm: AlgorithmSpec,
    #[serde(default)]
    pub loss: LossSpec,
    #[serde(default)]
    pub distortion_mode: DistortionMode,
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default)]
    pub selection_mode: SelectionMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum HypothesisSpec {
    /// Deterministic predictor: one y symbol per x.
    Map(Vec<String>),
    /// Conditional distribution of y given x, rows indexed by x.
    Table(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmKind {
    Explicit,
    Erm,
    Gibbs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSpec {
    pub kind: AlgorithmKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explicit_table: Option<Vec<ExplicitRow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

/// One row of an explicit learner: a dataset given as `[x, y]` symbol pairs
/// and the hypothesis distribution it produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitRow {
    pub dataset: Vec<[String; 2]>,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(try_from = "LossRepr", into = "LossRepr")]
pub enum LossSpec {
    #[default]
    ZeroOne,
    /// `table[y][y_hat]`.
    Table(Vec<Vec<f64>>),
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum LossRepr {
    Name(String),
    Table { table: Vec<Vec<f64>> },
}

impl TryFrom<LossRepr> for LossSpec {
    type Error = String;

    fn try_from(r: LossRepr) -> Result<Self, String> {
        match r {
            LossRepr::Name(s) if s == "zero-one" => Ok(LossSpec::ZeroOne),
            LossRepr::Name(s) => Err(format!("unknown loss `{s}`, expected \"zero-one\" or {{\"table\": ...}}")),
            LossRepr::Table { table } => Ok(LossSpec::Table(table)),
        }
    }
}

impl From<LossSpec> for LossRepr {
    fn from(l: LossSpec) -> Self {
        match l {
            LossSpec::ZeroOne => LossRepr::Name("zero-one".into()),
            LossSpec::Table(table) => LossRepr::Table { table },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DistortionMode {
    #[default]
    ExpectedLoss,
    Kl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionMode {
    #[default]
    FixedN,
    AnySubset,
}
