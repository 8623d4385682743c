//! Line-oriented text format for cut files.
//!
//! Header: `cuts v1 dim=<d> n=<N>` with an optional
//! ` conditional x̃=<comma-separated reals>` suffix, then one line per
//! cut: `intercept slope_1 ... slope_d`. Floats are written in
//! round-trip decimal so import(export(set)) is bit-exact.

use super::{Cut, CutSet};
use crate::{Error, Result};
use std::path::Path;

pub(crate) fn format_cuts(set: &CutSet) -> String {
    let mut out = format!("cuts v1 dim={} n={}", set.dim(), set.len());
    if let Some(cond) = set.conditioning() {
        out.push_str(" conditional x̃=");
        let joined: Vec<String> = cond.iter().map(|v| format!("{v}")).collect();
        out.push_str(&joined.join(","));
    }
    out.push('\n');
    for cut in set.cuts() {
        out.push_str(&format!("{}", cut.intercept));
        for s in &cut.slope {
            out.push_str(&format!(" {s}"));
        }
        out.push('\n');
    }
    out
}

pub(crate) fn parse_cuts(text: &str) -> Result<CutSet> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty cut file".into(),
    })?;
    let parse_err = |line: usize, msg: String| Error::Parse { line, msg };

    let mut tokens = header.split_whitespace();
    if tokens.next() != Some("cuts") || tokens.next() != Some("v1") {
        return Err(parse_err(1, format!("expected `cuts v1` header, got `{header}`")));
    }
    let dim_tok = tokens.next().ok_or_else(|| parse_err(1, "missing dim= field".into()))?;
    let dim: usize = dim_tok
        .strip_prefix("dim=")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| parse_err(1, format!("invalid dim field `{dim_tok}`")))?;
    let n_tok = tokens.next().ok_or_else(|| parse_err(1, "missing n= field".into()))?;
    let n: usize = n_tok
        .strip_prefix("n=")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| parse_err(1, format!("invalid n field `{n_tok}`")))?;

    let conditioning = match tokens.next() {
        None => None,
        Some("conditional") => {
            let cond_tok =
                tokens.next().ok_or_else(|| parse_err(1, "missing x̃= values".into()))?;
            let values = cond_tok
                .strip_prefix("x̃=")
                .ok_or_else(|| parse_err(1, format!("invalid conditional field `{cond_tok}`")))?;
            let parsed: std::result::Result<Vec<f64>, _> =
                values.split(',').map(str::parse).collect();
            Some(parsed.map_err(|_| parse_err(1, format!("invalid conditional values `{values}`")))?)
        }
        Some(other) => return Err(parse_err(1, format!("unexpected header token `{other}`"))),
    };

    let mut cuts = Vec::with_capacity(n);
    for _ in 0..n {
        let (idx, line) = lines
            .next()
            .ok_or_else(|| parse_err(n + 1, format!("expected {n} cut lines")))?;
        let line_no = idx + 1;
        let mut values = line.split_whitespace().map(str::parse::<f64>);
        let intercept = values
            .next()
            .and_then(|v| v.ok())
            .ok_or_else(|| parse_err(line_no, "missing or invalid intercept".into()))?;
        let slope: std::result::Result<Vec<f64>, _> = values.collect();
        let slope =
            slope.map_err(|_| parse_err(line_no, "invalid slope entry".into()))?;
        if slope.len() != dim {
            return Err(parse_err(
                line_no,
                format!("expected {dim} slope entries, got {}", slope.len()),
            ));
        }
        cuts.push(
            Cut::new(slope, intercept).map_err(|e| parse_err(line_no, e.to_string()))?,
        );
    }
    if let Some((idx, extra)) = lines.next() {
        if !extra.trim().is_empty() {
            return Err(parse_err(idx + 1, format!("trailing content `{extra}`")));
        }
    }

    let mut set = CutSet::new(dim, cuts)?;
    if let Some(c) = conditioning {
        set = set.with_conditioning(c);
    }
    Ok(set)
}

/// Writes a cut file atomically.
pub fn save_cuts(path: impl AsRef<Path>, set: &CutSet) -> Result<()> {
    crate::fsio::write_atomic(path.as_ref(), format_cuts(set).as_bytes())?;
    Ok(())
}

/// Reads a cut file.
pub fn load_cuts(path: impl AsRef<Path>) -> Result<CutSet> {
    let text = std::fs::read_to_string(path)?;
    parse_cuts(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = crate::seeded_rng(81);
        for _ in 0..50 {
            let d = rng.gen_range(1..5);
            let n = rng.gen_range(1..10);
            let cuts: Vec<Cut> = (0..n)
                .map(|_| Cut {
                    slope: (0..d).map(|_| rng.gen_range(-10.0..10.0)).collect(),
                    intercept: rng.gen_range(-10.0..10.0),
                })
                .collect();
            let mut set = CutSet::new(d, cuts).unwrap();
            if rng.gen_bool(0.5) {
                set = set
                    .with_conditioning((0..2).map(|_| rng.gen_range(-3.0..3.0)).collect());
            }
            let text = format_cuts(&set);
            let back = parse_cuts(&text).unwrap();
            assert_eq!(back, set);
            // And the text itself is a fixed point.
            assert_eq!(format_cuts(&back), text);
        }
    }

    #[test]
    fn golden_absolute_value_file() {
        let set = CutSet::new(
            1,
            vec![
                Cut::new(vec![1.0], 0.0).unwrap(),
                Cut::new(vec![-1.0], 0.0).unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(format_cuts(&set), "cuts v1 dim=1 n=2\n0 1\n0 -1\n");
        let parsed = parse_cuts("cuts v1 dim=1 n=2\n0 1\n0 -1\n").unwrap();
        assert_eq!(parsed, set);
    }

    #[test]
    fn empty_file_is_a_parse_error() {
        match parse_cuts("") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_line_reports_its_number() {
        let text = "cuts v1 dim=2 n=2\n0 1 2\n0 nope 2\n";
        match parse_cuts(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cuts.txt");
        let set = CutSet::new(2, vec![Cut::new(vec![0.5, -0.25], 1.75).unwrap()])
            .unwrap()
            .with_conditioning(vec![0.125]);
        save_cuts(&path, &set).unwrap();
        assert_eq!(load_cuts(&path).unwrap(), set);
    }
}
