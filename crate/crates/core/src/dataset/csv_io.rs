//! Dataset CSV: `subject_id,timestamp,label,d_0_1,...` with one row per
//! sample and distances in meters to six decimals. Lines starting with `#`
//! are comments and may carry provenance metadata.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Dataset, PostureClass};
use crate::ranging::{canonical_pairs, node_count_for_pairs, RangeSample};
use crate::{Error, Real, Result};

const FIXED_COLUMNS: [&str; 3] = ["subject_id", "timestamp", "label"];

fn header(node_count: usize) -> Result<Vec<String>> {
    let mut cols: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    cols.extend(canonical_pairs(node_count)?.iter().map(|p| p.column_name()));
    Ok(cols)
}

pub fn save_csv<T: Real>(dataset: &Dataset<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_csv(dataset, &mut w).map_err(|e| match e {
        Error::Serialization(m) => Error::io(path, std::io::Error::other(m)),
        other => other,
    })?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_csv<T: Real, W: Write>(dataset: &Dataset<T>, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let ser = |e: csv::Error| Error::Serialization(e.to_string());
    w.write_record(header(dataset.node_count())?).map_err(ser)?;
    let mut row = Vec::with_capacity(3 + dataset.feature_dim());
    for s in dataset.samples() {
        row.clear();
        row.push(s.subject.clone());
        row.push(format!("{:.6}", s.timestamp));
        row.push(s.label.map_or(String::new(), |c| c.index().to_string()));
        row.extend(s.distances.iter().map(|d| format!("{d:.6}")));
        w.write_record(&row).map_err(ser)?;
    }
    w.flush().map_err(|e| Error::Serialization(e.to_string()))
}

pub fn load_csv<T: Real>(path: impl AsRef<Path>) -> Result<Dataset<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(BufReader::new(file))
}

/// Parses a dataset. Errors carry the 1-based line number of the offending
/// row, counting comment lines.
pub fn read_csv<T: Real, R: Read>(input: R) -> Result<Dataset<T>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(input);
    let mut records = r.records();

    let head = match records.next() {
        Some(rec) => rec.map_err(|e| parse_err(1, e.to_string()))?,
        None => return Err(parse_err(1, "missing header row")),
    };
    let head_line = head.position().map_or(1, |p| p.line() as usize);
    let distance_cols = head.len().saturating_sub(FIXED_COLUMNS.len());
    let node_count = node_count_for_pairs(distance_cols).ok_or_else(|| {
        parse_err(
            head_line,
            format!("{distance_cols} distance columns do not match any supported node count"),
        )
    })?;
    let expected = header(node_count)?;
    if head
        .iter()
        .map(str::trim)
        .ne(expected.iter().map(String::as_str))
    {
        return Err(parse_err(
            head_line,
            format!("header must be `{}`", expected.join(",")),
        ));
    }

    let mut dataset = Dataset::empty(node_count)?;
    for rec in records {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != expected.len() {
            return Err(parse_err(
                line,
                format!("expected {} columns, found {}", expected.len(), rec.len()),
            ));
        }
        let subject = rec[0].trim().to_string();
        if subject.is_empty() {
            return Err(parse_err(line, "empty subject_id"));
        }
        let timestamp: f64 = rec[1]
            .trim()
            .parse()
            .ok()
            .filter(|t: &f64| t.is_finite())
            .ok_or_else(|| parse_err(line, format!("bad timestamp `{}`", &rec[1])))?;
        let label = rec[2]
            .trim()
            .parse::<i64>()
            .ok()
            .and_then(|v| usize::try_from(v).ok())
            .and_then(|v| PostureClass::from_index(v).ok())
            .ok_or_else(|| parse_err(line, format!("label `{}` is not in 0..=8", &rec[2])))?;
        let mut distances = Vec::with_capacity(distance_cols);
        for (field, name) in rec.iter().skip(3).zip(&expected[3..]) {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| parse_err(line, format!("{name}: `{field}` is not a number")))?;
            if !v.is_finite() || v < 0.0 {
                return Err(parse_err(
                    line,
                    format!("{name}: distance {v} must be finite and nonnegative"),
                ));
            }
            distances.push(T::lit(v));
        }
        dataset.push(RangeSample {
            timestamp,
            distances,
            subject,
            label: Some(label),
        })?;
    }
    Ok(dataset)
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, SkeletonParams};
    use crate::ranging::RangingErrorModel;

    const HEADER: &str =
        "subject_id,timestamp,label,d_0_1,d_0_2,d_0_3,d_0_4,d_1_2,d_1_3,d_1_4,d_2_3,d_2_4,d_3_4";

    fn rounded(d: &Dataset<f64>) -> Dataset<f64> {
        let mut buf = Vec::new();
        write_csv(d, &mut buf).unwrap();
        read_csv(buf.as_slice()).unwrap()
    }

    #[test]
    fn round_trip_through_file() {
        let d = generate_synthetic(
            2,
            3,
            &SkeletonParams::<f64>::default(),
            &RangingErrorModel::default(),
        )
        .unwrap();
        let d6 = rounded(&d);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        save_csv(&d6, &path).unwrap();
        let back: Dataset<f64> = load_csv(&path).unwrap();
        assert_eq!(back, d6);
        // six-decimal quantisation is the only difference from the source
        for (a, b) in d.samples().zip(back.samples()) {
            for (x, y) in a.distances.iter().zip(&b.distances) {
                assert!((x - y).abs() <= 5e-7);
            }
        }
    }

    #[test]
    fn empty_dataset_writes_header_only() {
        let mut buf = Vec::new();
        write_csv(&Dataset::<f64>::empty(5).unwrap(), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{HEADER}\n"));
    }

    #[test]
    fn line_count_is_samples_plus_header() {
        let d = generate_synthetic(
            1,
            1,
            &SkeletonParams::<f64>::default(),
            &RangingErrorModel::default(),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_csv(&d, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 10);
    }

    #[test]
    fn short_row_names_its_line() {
        let text = format!("{HEADER}\nS1,0.0,0,1,1,1,1,1,1,1,1,1,1\nS1,0.1,0,1,1,1,1,1,1,1,1,1\n");
        match read_csv::<f64, _>(text.as_bytes()) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("columns"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn comment_lines_are_skipped_but_counted() {
        let text = format!("# {{\"seed\":3}}\n{HEADER}\nS1,0.0,0,1,1,1,1,1,1,1,1,1,1\nS1,0.1,x,1,1,1,1,1,1,1,1,1,1\n");
        match read_csv::<f64, _>(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
        let ok = format!("# meta\n{HEADER}\nS1,0.0,0,1,1,1,1,1,1,1,1,1,1\n");
        assert_eq!(read_csv::<f64, _>(ok.as_bytes()).unwrap().len(), 1);
    }

    #[test]
    fn rejects_bad_fields() {
        let cases = [
            ("S1,0.0,9,1,1,1,1,1,1,1,1,1,1", "label"),
            ("S1,0.0,-1,1,1,1,1,1,1,1,1,1,1", "label"),
            ("S1,0.0,2,1,x,1,1,1,1,1,1,1,1", "not a number"),
            ("S1,0.0,2,1,-0.5,1,1,1,1,1,1,1,1", "nonnegative"),
            ("S1,abc,2,1,1,1,1,1,1,1,1,1,1", "timestamp"),
        ];
        for (row, needle) in cases {
            let text = format!("{HEADER}\n{row}\n");
            match read_csv::<f64, _>(text.as_bytes()) {
                Err(Error::Parse { line: 2, message }) => {
                    assert!(message.contains(needle), "{message}")
                }
                other => panic!("{row}: {other:?}"),
            }
        }
    }

    #[test]
    fn smaller_node_counts_are_accepted() {
        let text = "subject_id,timestamp,label,d_0_1,d_0_2,d_1_2\nA,0,1,1.0,2.0,3.0\n";
        let d: Dataset<f64> = read_csv(text.as_bytes()).unwrap();
        assert_eq!(d.node_count(), 3);
        let bad = "subject_id,timestamp,label,d_0_1,d_1_2,d_0_2\n";
        assert!(matches!(
            read_csv::<f64, _>(bad.as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_csv::<f64>("/nonexistent/dir/data.csv"),
            Err(Error::Io { .. })
        ));
    }
}
