use std::fmt::Write as _;

use super::{check_label, fmt_real};
use crate::classifier::ConfusionMatrix;
use crate::eigen::EigenSignature;
use crate::error::{Error, Result};
use crate::signal::Spectrum;
use crate::similarity::DistanceReport;

/// One line of the eigen report.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenRow {
    pub window_index: usize,
    pub signature: EigenSignature,
    pub label: String,
}

/// One line of the predictions report.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub window_index: usize,
    pub start_sample: usize,
    pub predicted: String,
    /// Label of the source record, if it had one.
    pub label: Option<String>,
}

/// Counts with true classes as rows and predicted classes as columns.
pub fn write_confusion(confusion: &ConfusionMatrix) -> Result<String> {
    for name in &confusion.class_names {
        check_label(name)?;
    }
    let mut out = String::from("class");
    for name in &confusion.class_names {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (name, row) in confusion.class_names.iter().zip(&confusion.counts) {
        out.push_str(name);
        for count in row {
            let _ = write!(out, ",{count}");
        }
        out.push('\n');
    }
    let _ = writeln!(out, "# accuracy={}", fmt_real(confusion.accuracy()));
    Ok(out)
}

pub fn write_distance_report(report: &DistanceReport) -> Result<String> {
    let mut out = String::from("class,euclidean,mahalanobis\n");
    for e in &report.entries {
        check_label(&e.class)?;
        let _ = writeln!(out, "{},{},{}", e.class, fmt_real(e.euclidean), fmt_real(e.mahalanobis));
    }
    let _ = writeln!(out, "# nearest_euclidean={}", report.nearest_euclidean);
    let _ = writeln!(out, "# nearest_mahalanobis={}", report.nearest_mahalanobis);
    let _ = writeln!(out, "# metric_divergence={}", report.metric_divergence);
    Ok(out)
}

pub fn write_eigen_report(rows: &[EigenRow]) -> Result<String> {
    let mut out = String::from("window_index,lambda1,lambda2,lambda3,label\n");
    for r in rows {
        check_label(&r.label)?;
        let [l1, l2, l3] = r.signature.0;
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.window_index,
            fmt_real(l1),
            fmt_real(l2),
            fmt_real(l3),
            r.label
        );
    }
    Ok(out)
}

pub fn write_spectrum(spectrum: &Spectrum) -> Result<String> {
    if spectrum.magnitudes.is_empty() {
        return Err(Error::EmptyInput("spectrum has no bins".into()));
    }
    let mut out = String::from("frequency_hz,magnitude\n");
    for (k, m) in spectrum.magnitudes.iter().enumerate() {
        let _ = writeln!(out, "{},{}", fmt_real(spectrum.frequency(k)), fmt_real(*m));
    }
    Ok(out)
}

pub fn write_predictions(rows: &[PredictionRow]) -> Result<String> {
    let mut out = String::from("window_index,start_sample,predicted,label\n");
    for r in rows {
        check_label(&r.predicted)?;
        if let Some(l) = &r.label {
            check_label(l)?;
        }
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.window_index,
            r.start_sample,
            r.predicted,
            r.label.as_deref().unwrap_or("")
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::ClassDistance;

    #[test]
    fn confusion_layout() {
        let mut c = ConfusionMatrix::new(vec!["a".into(), "b".into()]);
        c.record(0, 0);
        c.record(0, 1);
        c.record(1, 1);
        c.record(1, 1);
        let text = write_confusion(&c).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "class,a,b");
        assert_eq!(lines[1], "a,1,1");
        assert_eq!(lines[2], "b,0,2");
        assert_eq!(lines[3], format!("# accuracy={}", fmt_real(0.75)));
    }

    #[test]
    fn distance_layout() {
        let report = DistanceReport {
            entries: vec![
                ClassDistance { class: "x".into(), euclidean: 1.0, mahalanobis: 3.0 },
                ClassDistance { class: "y".into(), euclidean: 2.0, mahalanobis: 0.5 },
            ],
            nearest_euclidean: "x".into(),
            nearest_mahalanobis: "y".into(),
            metric_divergence: true,
        };
        let text = write_distance_report(&report).unwrap();
        assert!(text.starts_with("class,euclidean,mahalanobis\nx,1.0000000000000000e0,"));
        assert!(text.ends_with("# nearest_euclidean=x\n# nearest_mahalanobis=y\n# metric_divergence=true\n"));
    }

    #[test]
    fn spectrum_and_rows() {
        let s = Spectrum { bin_resolution_hz: 0.5, magnitudes: vec![1.0, 2.0] };
        let text = write_spectrum(&s).unwrap();
        assert_eq!(text.lines().nth(2).unwrap(), "5.0000000000000000e-1,2.0000000000000000e0");

        let eig = write_eigen_report(&[EigenRow {
            window_index: 3,
            signature: EigenSignature([3.0, 2.0, 1.0]),
            label: "flat".into(),
        }])
        .unwrap();
        assert!(eig.lines().nth(1).unwrap().starts_with("3,3.0"));
        assert!(eig.ends_with(",flat\n"));

        let pred = write_predictions(&[PredictionRow {
            window_index: 0,
            start_sample: 1080,
            predicted: "mixture".into(),
            label: None,
        }])
        .unwrap();
        assert_eq!(pred, "window_index,start_sample,predicted,label\n0,1080,mixture,\n");
        let bad = PredictionRow { window_index: 0, start_sample: 0, predicted: "a,b".into(), label: None };
        assert!(write_predictions(&[bad]).is_err());
    }
}
