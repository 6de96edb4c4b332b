//! On-disk formats.
//!
//! Text formats render every real with 17 significant digits
//! (`{:.16e}`), which reproduces the exact `f64` on reading, so
//! write -> read -> write is byte-identical. JSON documents carry a
//! `version` field and are written with sorted keys.
//!
//! | format        | shape |
//! |---------------|-------|
//! | dataset CSV   | `# sample_rate_hz=<f>`, optional `# label=<s>`, header `t,ch1,ch2,ch3`, one row per sample |
//! | feature CSV   | `# feature_layout_id=<id>`, header of feature names plus optional `label`, one row per window |
//! | model JSON    | `{version, feature_layout_id, class_names, standardizer{means,stds}, pairwise[...]}` |
//! | profile JSON  | `{version, name, band_rms, tonal_components, impulse_rate_hz, impulse_amplitude, noise_floor_rms, channel_band_gains}` |
//! | confusion CSV | `class,<names>` header, one row per true class, trailing `# accuracy=<f>` |
//! | distance CSV  | `class,euclidean,mahalanobis`, trailing `# nearest_euclidean=`, `# nearest_mahalanobis=`, `# metric_divergence=` |
//! | eigen CSV     | `window_index,lambda1,lambda2,lambda3,label` |
//! | spectrum CSV  | `frequency_hz,magnitude` |

mod dataset;
mod feature_table;
mod model;
mod profile;
mod reports;

pub use dataset::{read_dataset, write_dataset};
pub use feature_table::{read_features, write_features, FeatureTable};
pub use model::{read_model, write_model, MODEL_VERSION};
pub use profile::{read_profile, write_profile, PROFILE_VERSION};
pub use reports::{
    write_confusion, write_distance_report, write_eigen_report, write_predictions, write_spectrum,
    EigenRow, PredictionRow,
};

/// Fixed 17-significant-digit rendering.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_real(field: &str, format: &'static str, line: usize, column: &str) -> crate::Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| crate::Error::Parse {
        format,
        line,
        message: format!("column `{column}`: `{field}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(crate::Error::Parse {
            format,
            line,
            message: format!("column `{column}`: non-finite value `{field}`"),
        });
    }
    Ok(v)
}

/// Rejects label text that would break the line-oriented formats.
fn check_label(label: &str) -> crate::Result<()> {
    if label.is_empty() || label.contains([',', '\n', '\r', '#']) {
        return Err(crate::Error::InvalidInput(format!(
            "label `{label}` must be non-empty and free of commas, '#' and newlines"
        )));
    }
    Ok(())
}
