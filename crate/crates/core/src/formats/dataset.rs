use std::fmt::Write as _;

use super::{check_label, fmt_real, parse_real};
use crate::error::{Error, Result};
use crate::signal::TimeSeries;

const FORMAT: &str = "dataset";
const HEADER: &str = "t,ch1,ch2,ch3";
const COLUMNS: [&str; 4] = ["t", "ch1", "ch2", "ch3"];

pub fn write_dataset(series: &TimeSeries) -> Result<String> {
    let mut out = String::with_capacity(series.len() * 96 + 64);
    let fs = series.sample_rate_hz();
    let _ = writeln!(out, "# sample_rate_hz={}", fmt_real(fs));
    if let Some(label) = series.label() {
        check_label(label)?;
        let _ = writeln!(out, "# label={label}");
    }
    out.push_str(HEADER);
    out.push('\n');
    let [a, b, c] = series.channels();
    for i in 0..series.len() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_real(i as f64 / fs),
            fmt_real(a[i]),
            fmt_real(b[i]),
            fmt_real(c[i])
        );
    }
    Ok(out)
}

pub fn read_dataset(text: &str) -> Result<TimeSeries> {
    let err = |line: usize, message: String| Error::Parse {
        format: FORMAT,
        line,
        message,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));

    let (no, first) = lines
        .next()
        .ok_or_else(|| Error::EmptyInput("dataset file is empty".into()))?;
    let rate = first
        .strip_prefix("# sample_rate_hz=")
        .ok_or_else(|| err(no, "first line must be `# sample_rate_hz=<float>`".into()))?;
    let fs = parse_real(rate, FORMAT, no, "sample_rate_hz")?;
    if fs <= 0.0 {
        return Err(err(no, format!("sample rate must be positive, got {fs}")));
    }

    let mut label = None;
    let mut header_seen = false;
    let mut channels: [Vec<f64>; 3] = Default::default();
    for (no, line) in lines {
        if !header_seen {
            if let Some(l) = line.strip_prefix("# label=") {
                if label.is_some() {
                    return Err(err(no, "duplicate label line".into()));
                }
                check_label(l).map_err(|e| err(no, e.to_string()))?;
                label = Some(l.to_string());
                continue;
            }
            if line.trim() != HEADER {
                return Err(err(no, format!("expected header `{HEADER}`, found `{line}`")));
            }
            header_seen = true;
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != COLUMNS.len() {
            return Err(err(
                no,
                format!("expected {} columns, found {}", COLUMNS.len(), fields.len()),
            ));
        }
        parse_real(fields[0], FORMAT, no, COLUMNS[0])?;
        for (c, ch) in channels.iter_mut().enumerate() {
            ch.push(parse_real(fields[c + 1], FORMAT, no, COLUMNS[c + 1])?);
        }
    }
    if !header_seen {
        return Err(Error::EmptyInput(format!("dataset has no `{HEADER}` header")));
    }
    if channels[0].is_empty() {
        return Err(Error::EmptyInput("dataset has no samples".into()));
    }
    TimeSeries::new(fs, channels, label)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TimeSeries {
        TimeSeries::new(
            720.0,
            [vec![0.1, -0.2, 0.3], vec![1.0 / 3.0, 0.0, -1e-9], vec![5.0, 6.0, 7.0]],
            Some("fine_sand".into()),
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let s = sample();
        let text = write_dataset(&s).unwrap();
        assert!(text.starts_with("# sample_rate_hz=7.2000000000000000e2\n# label=fine_sand\nt,ch1,ch2,ch3\n"));
        let back = read_dataset(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(write_dataset(&back).unwrap(), text);
    }

    #[test]
    fn nan_cell_names_row_and_column() {
        let text = "# sample_rate_hz=100\nt,ch1,ch2,ch3\n0,1,2,3\n0.01,1,NaN,3\n";
        match read_dataset(text) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 4);
                assert!(message.contains("ch2"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_files() {
        assert!(matches!(read_dataset(""), Err(Error::EmptyInput(_))));
        assert!(read_dataset("t,ch1,ch2,ch3\n0,1,2,3\n").is_err());
        assert!(read_dataset("# sample_rate_hz=abc\nt,ch1,ch2,ch3\n").is_err());
        assert!(read_dataset("# sample_rate_hz=-5\nt,ch1,ch2,ch3\n0,1,2,3\n").is_err());
        assert!(matches!(
            read_dataset("# sample_rate_hz=10\nt,ch1,ch2,ch3\n"),
            Err(Error::EmptyInput(_))
        ));
        let short = "# sample_rate_hz=10\nt,ch1,ch2,ch3\n0,1,2\n";
        assert!(matches!(read_dataset(short), Err(Error::Parse { line: 3, .. })));
        assert!(read_dataset("# sample_rate_hz=10\nx,y\n0,1\n").is_err());
        assert!(read_dataset("# sample_rate_hz=10\nt,ch1,ch2,ch3\n0,1,2,inf\n").is_err());
    }

    #[test]
    fn unlabeled_round_trip() {
        let s = TimeSeries::new(10.0, [vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]], None).unwrap();
        let text = write_dataset(&s).unwrap();
        assert!(!text.contains("label"));
        assert_eq!(read_dataset(&text).unwrap(), s);
    }
}
