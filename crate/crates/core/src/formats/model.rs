use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::classifier::{BinarySvm, Kernel, PairModel, Standardizer, SvmModel};
use crate::error::{Error, Result};

pub const MODEL_VERSION: u64 = 1;
const FORMAT: &str = "model";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    version: u64,
    feature_layout_id: String,
    class_names: Vec<String>,
    standardizer: StandardizerDoc,
    pairwise: Vec<PairDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StandardizerDoc {
    means: Vec<f64>,
    stds: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairDoc {
    class_a: String,
    class_b: String,
    kernel: String,
    params: ParamsDoc,
    support_vectors: Vec<Vec<f64>>,
    coefficients: Vec<f64>,
    bias: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsDoc {
    c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
}

/// Serializes a model as pretty JSON with sorted keys.
pub fn write_model(model: &SvmModel) -> Result<String> {
    let doc = ModelDoc {
        version: MODEL_VERSION,
        feature_layout_id: model.feature_layout_id.clone(),
        class_names: model.class_names.clone(),
        standardizer: StandardizerDoc {
            means: model.standardizer.means.clone(),
            stds: model.standardizer.stds.clone(),
        },
        pairwise: model
            .pairwise
            .iter()
            .map(|p| PairDoc {
                class_a: model.class_names[p.class_a].clone(),
                class_b: model.class_names[p.class_b].clone(),
                kernel: p.svm.kernel.name().to_string(),
                params: ParamsDoc {
                    c: p.svm.c,
                    gamma: match p.svm.kernel {
                        Kernel::Rbf { gamma } => Some(gamma),
                        Kernel::Linear => None,
                    },
                },
                support_vectors: p.svm.support_vectors.clone(),
                coefficients: p.svm.coefficients.clone(),
                bias: p.svm.bias,
            })
            .collect(),
    };
    // Going through `Value` sorts object keys.
    let value = serde_json::to_value(doc)?;
    let mut text = serde_json::to_string_pretty(&value)?;
    text.push('\n');
    Ok(text)
}

pub fn read_model(text: &str) -> Result<SvmModel> {
    let value: Value = serde_json::from_str(text)?;
    let version = value
        .get("version")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::Parse {
            format: FORMAT,
            line: 1,
            message: "missing integer `version`".into(),
        })?;
    if version == 0 || version > MODEL_VERSION {
        return Err(Error::UnsupportedVersion {
            format: FORMAT,
            found: version,
            supported: MODEL_VERSION,
        });
    }
    let doc: ModelDoc = serde_json::from_value(value)?;
    let invalid = |msg: String| Error::InvalidInput(format!("model: {msg}"));

    let standardizer = Standardizer::from_parts(doc.standardizer.means, doc.standardizer.stds)?;
    let d = standardizer.dimension();
    let k = doc.class_names.len();
    if k < 2 {
        return Err(invalid(format!("needs at least 2 classes, found {k}")));
    }
    if doc.pairwise.len() != k * (k - 1) / 2 {
        return Err(invalid(format!(
            "{} pairwise classifiers for {k} classes; expected {}",
            doc.pairwise.len(),
            k * (k - 1) / 2
        )));
    }
    let index = |name: &str| {
        doc.class_names
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| invalid(format!("pair refers to unknown class `{name}`")))
    };
    let mut pairwise = Vec::with_capacity(doc.pairwise.len());
    for p in doc.pairwise {
        let kernel = match (p.kernel.as_str(), p.params.gamma) {
            ("linear", None) => Kernel::Linear,
            ("rbf", Some(gamma)) if gamma.is_finite() && gamma > 0.0 => Kernel::Rbf { gamma },
            (k, _) => return Err(invalid(format!("bad kernel `{k}` or parameters"))),
        };
        if p.support_vectors.len() != p.coefficients.len() {
            return Err(invalid("support vector and coefficient counts differ".into()));
        }
        if p.support_vectors.iter().any(|sv| sv.len() != d) {
            return Err(invalid(format!("support vector length differs from {d}")));
        }
        let all_finite = p
            .support_vectors
            .iter()
            .flatten()
            .chain(&p.coefficients)
            .chain([&p.bias, &p.params.c])
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(invalid("non-finite parameter".into()));
        }
        pairwise.push(PairModel {
            class_a: index(&p.class_a)?,
            class_b: index(&p.class_b)?,
            svm: BinarySvm {
                kernel,
                support_vectors: p.support_vectors,
                coefficients: p.coefficients,
                bias: p.bias,
                c: p.params.c,
            },
        });
    }
    Ok(SvmModel {
        standardizer,
        class_names: doc.class_names,
        pairwise,
        feature_layout_id: doc.feature_layout_id,
    })
}
