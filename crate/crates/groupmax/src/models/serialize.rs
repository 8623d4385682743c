//! Versioned text serialization of models: architecture constants
//! followed by every weight entry in round-trip decimal precision.

use super::{Activation, GroupMaxNet, Icnn, MaxAffineNet, Mlp, Model, PartialGroupMaxNet, PartialIcnn};
use crate::diffcore::{NodeId, Tape};
use crate::{Error, Result};
use std::path::Path;

/// A model of any architecture, as loaded from a model file.
#[derive(Debug, Clone)]
pub enum LoadedModel {
    GroupMax(GroupMaxNet),
    PartialGroupMax(PartialGroupMaxNet),
    MaxAffine(MaxAffineNet),
    Icnn(Icnn),
    PartialIcnn(PartialIcnn),
    Mlp(Mlp),
}

impl LoadedModel {
    pub fn kind(&self) -> &'static str {
        match self {
            LoadedModel::GroupMax(_) => "groupmax",
            LoadedModel::PartialGroupMax(_) => "partial_groupmax",
            LoadedModel::MaxAffine(_) => "maxaffine",
            LoadedModel::Icnn(_) => "icnn",
            LoadedModel::PartialIcnn(_) => "partial_icnn",
            LoadedModel::Mlp(_) => "mlp",
        }
    }

    pub fn as_model(&self) -> &dyn Model {
        match self {
            LoadedModel::GroupMax(m) => m,
            LoadedModel::PartialGroupMax(m) => m,
            LoadedModel::MaxAffine(m) => m,
            LoadedModel::Icnn(m) => m,
            LoadedModel::PartialIcnn(m) => m,
            LoadedModel::Mlp(m) => m,
        }
    }

    pub fn as_model_mut(&mut self) -> &mut dyn Model {
        match self {
            LoadedModel::GroupMax(m) => m,
            LoadedModel::PartialGroupMax(m) => m,
            LoadedModel::MaxAffine(m) => m,
            LoadedModel::Icnn(m) => m,
            LoadedModel::PartialIcnn(m) => m,
            LoadedModel::Mlp(m) => m,
        }
    }

    fn header_lines(&self) -> Vec<String> {
        let join = |v: &[usize]| {
            v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
        };
        match self {
            LoadedModel::GroupMax(m) => vec![
                format!("input_dim {}", m.input_dim()),
                format!("group_size {}", m.group_size()),
                format!("widths {}", join(&m.widths())),
            ],
            LoadedModel::PartialGroupMax(m) => vec![
                format!("input_dim {}", m.input_dim()),
                format!("convex_dim {}", m.convex_dim()),
                format!("feed_width {}", m.feed_width()),
                format!("convex_width {}", m.convex_width()),
                format!("group_size {}", m.group_size()),
                format!("depth {}", m.layer_count()),
                format!("activation {}", m.feed_activation().name()),
            ],
            LoadedModel::MaxAffine(m) => vec![
                format!("input_dim {}", m.input_dim()),
                format!("cuts {}", m.cut_count()),
            ],
            LoadedModel::Icnn(m) => vec![
                format!("input_dim {}", m.input_dim()),
                format!("hidden {}", join(&m.hidden_widths())),
            ],
            LoadedModel::PartialIcnn(m) => vec![
                format!("input_dim {}", m.input_dim()),
                format!("convex_dim {}", m.convex_dim()),
                format!("feed_width {}", m.feed_width()),
                format!("convex_width {}", m.convex_width()),
                format!("depth {}", m.layer_count()),
            ],
            LoadedModel::Mlp(m) => vec![
                format!("input_dim {}", m.input_dim()),
                format!("hidden {}", join(&m.hidden_widths())),
            ],
        }
    }
}

impl Model for LoadedModel {
    fn input_dim(&self) -> usize {
        self.as_model().input_dim()
    }

    fn convex_split(&self) -> usize {
        self.as_model().convex_split()
    }

    fn param_count(&self) -> usize {
        self.as_model().param_count()
    }

    fn params(&self) -> Vec<f64> {
        self.as_model().params()
    }

    fn set_params(&mut self, p: &[f64]) {
        self.as_model_mut().set_params(p)
    }

    fn param_leaves(&self) -> usize {
        self.as_model().param_leaves()
    }

    fn forward_on(&self, tape: &mut Tape, x: &[f64]) -> NodeId {
        self.as_model().forward_on(tape, x)
    }
}

macro_rules! impl_from {
    ($variant:ident, $ty:ty) => {
        impl From<$ty> for LoadedModel {
            fn from(m: $ty) -> Self {
                LoadedModel::$variant(m)
            }
        }
    };
}
impl_from!(GroupMax, GroupMaxNet);
impl_from!(PartialGroupMax, PartialGroupMaxNet);
impl_from!(MaxAffine, MaxAffineNet);
impl_from!(Icnn, Icnn);
impl_from!(PartialIcnn, PartialIcnn);
impl_from!(Mlp, Mlp);

/// Renders a model to the `model v1` text format.
pub(crate) fn format_model(model: &LoadedModel) -> String {
    let params = model.params();
    let mut out = String::new();
    out.push_str("model v1\n");
    out.push_str(&format!("kind {}\n", model.kind()));
    for line in model.header_lines() {
        out.push_str(&line);
        out.push('\n');
    }
    out.push_str(&format!("params {}\n", params.len()));
    for p in &params {
        out.push_str(&format!("{p}\n"));
    }
    out.push_str("end\n");
    out
}

/// Line-by-line reader that tracks 1-based line numbers for error
/// reporting.
pub(crate) struct LineCursor<'a> {
    lines: std::str::Lines<'a>,
    pub line_no: usize,
}

impl<'a> LineCursor<'a> {
    pub fn new(text: &'a str) -> Self {
        Self { lines: text.lines(), line_no: 0 }
    }

    pub fn next_line(&mut self) -> Option<&'a str> {
        self.line_no += 1;
        self.lines.next()
    }

    pub fn expect_line(&mut self) -> Result<&'a str> {
        self.next_line().ok_or(Error::Parse {
            line: self.line_no,
            msg: "unexpected end of file".into(),
        })
    }

    pub fn error(&self, msg: impl Into<String>) -> Error {
        Error::Parse { line: self.line_no, msg: msg.into() }
    }
}

impl<'a> LineCursor<'a> {
    fn str_field(&mut self, key: &str) -> Result<&'a str> {
        let line = self.expect_line()?;
        line.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .ok_or_else(|| self.error(format!("expected `{key} ...`, got `{line}`")))
    }

    fn usize_field(&mut self, key: &str) -> Result<usize> {
        let tok = self.str_field(key)?.trim();
        tok.parse().map_err(|_| self.error(format!("invalid count `{tok}`")))
    }

    fn usize_list_field(&mut self, key: &str) -> Result<Vec<usize>> {
        let raw = self.str_field(key)?;
        raw.split_whitespace()
            .map(|t| t.parse().map_err(|_| self.error(format!("invalid count `{t}`"))))
            .collect()
    }
}

/// Parses a model starting at the cursor's current position; leaves the
/// cursor just past the closing `end` line.
pub(crate) fn parse_model_from(cursor: &mut LineCursor) -> Result<LoadedModel> {
    let first = cursor.expect_line()?;
    if first.trim() != "model v1" {
        return Err(cursor.error(format!("expected `model v1` header, got `{first}`")));
    }
    let kind = cursor.str_field("kind")?.trim().to_string();

    let mut model: LoadedModel = match kind.as_str() {
        "groupmax" => {
            let input_dim = cursor.usize_field("input_dim")?;
            let group_size = cursor.usize_field("group_size")?;
            let widths = cursor.usize_list_field("widths")?;
            GroupMaxNet::new(input_dim, &widths, group_size, 0)
                .map_err(|e| cursor.error(e.to_string()))?
                .into()
        }
        "partial_groupmax" => {
            let input_dim = cursor.usize_field("input_dim")?;
            let convex_dim = cursor.usize_field("convex_dim")?;
            let feed_width = cursor.usize_field("feed_width")?;
            let convex_width = cursor.usize_field("convex_width")?;
            let group_size = cursor.usize_field("group_size")?;
            let depth = cursor.usize_field("depth")?;
            let act_name = cursor.str_field("activation")?.trim().to_string();
            let activation = Activation::from_name(&act_name)
                .ok_or_else(|| cursor.error(format!("unknown activation `{act_name}`")))?;
            PartialGroupMaxNet::new(
                input_dim,
                convex_dim,
                feed_width,
                convex_width,
                group_size,
                depth,
                0,
                activation,
            )
            .map_err(|e| cursor.error(e.to_string()))?
            .into()
        }
        "maxaffine" => {
            let input_dim = cursor.usize_field("input_dim")?;
            let cuts = cursor.usize_field("cuts")?;
            MaxAffineNet::new(input_dim, cuts, 0)
                .map_err(|e| cursor.error(e.to_string()))?
                .into()
        }
        "icnn" => {
            let input_dim = cursor.usize_field("input_dim")?;
            let hidden = cursor.usize_list_field("hidden")?;
            Icnn::new(input_dim, &hidden, 0).map_err(|e| cursor.error(e.to_string()))?.into()
        }
        "partial_icnn" => {
            let input_dim = cursor.usize_field("input_dim")?;
            let convex_dim = cursor.usize_field("convex_dim")?;
            let feed_width = cursor.usize_field("feed_width")?;
            let convex_width = cursor.usize_field("convex_width")?;
            let depth = cursor.usize_field("depth")?;
            PartialIcnn::new(input_dim, convex_dim, feed_width, convex_width, depth, 0)
                .map_err(|e| cursor.error(e.to_string()))?
                .into()
        }
        "mlp" => {
            let input_dim = cursor.usize_field("input_dim")?;
            let hidden = cursor.usize_list_field("hidden")?;
            Mlp::new(input_dim, &hidden, 0).map_err(|e| cursor.error(e.to_string()))?.into()
        }
        other => return Err(cursor.error(format!("unknown model kind `{other}`"))),
    };

    let count = cursor.usize_field("params")?;
    if count != model.param_count() {
        return Err(cursor.error(format!(
            "architecture has {} parameters but file declares {count}",
            model.param_count()
        )));
    }
    let mut params = Vec::with_capacity(count);
    for _ in 0..count {
        let line = cursor.expect_line()?;
        let v: f64 =
            line.trim().parse().map_err(|_| cursor.error(format!("invalid number `{line}`")))?;
        if !v.is_finite() {
            return Err(cursor.error("parameter is not finite"));
        }
        params.push(v);
    }
    let end = cursor.expect_line()?;
    if end.trim() != "end" {
        return Err(cursor.error(format!("expected `end`, got `{end}`")));
    }
    model.set_params(&params);
    Ok(model)
}

/// Writes a model file (atomically: temp file plus rename).
pub fn save_model(path: impl AsRef<Path>, model: &LoadedModel) -> Result<()> {
    crate::fsio::write_atomic(path.as_ref(), format_model(model).as_bytes())?;
    Ok(())
}

/// Reads a model file.
pub fn load_model(path: impl AsRef<Path>) -> Result<LoadedModel> {
    let text = std::fs::read_to_string(path)?;
    let mut cursor = LineCursor::new(&text);
    parse_model_from(&mut cursor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn round_trip_every_kind() {
        let dir = tempdir().unwrap();
        let models: Vec<LoadedModel> = vec![
            GroupMaxNet::new(2, &[6, 6], 3, 1).unwrap().into(),
            PartialGroupMaxNet::new(3, 1, 4, 6, 2, 3, 2, Activation::Relu).unwrap().into(),
            MaxAffineNet::new(2, 5, 3).unwrap().into(),
            Icnn::new(2, &[5, 5], 4).unwrap().into(),
            PartialIcnn::new(3, 2, 4, 5, 2, 5).unwrap().into(),
            Mlp::new(2, &[7], 6).unwrap().into(),
        ];
        for (i, model) in models.iter().enumerate() {
            let path = dir.path().join(format!("m{i}.model"));
            save_model(&path, model).unwrap();
            let back = load_model(&path).unwrap();
            assert_eq!(back.kind(), model.kind());
            assert_eq!(back.params(), model.params(), "kind {}", model.kind());
            // Same function, spot check.
            let x: Vec<f64> = (0..model.input_dim()).map(|j| 0.3 * j as f64 - 0.7).collect();
            assert_eq!(back.eval(&x).to_bits(), model.eval(&x).to_bits());
        }
    }

    #[test]
    fn parse_error_carries_line_number() {
        let text = "model v1\nkind groupmax\ninput_dim 1\ngroup_size 1\nwidths 2\nparams 4\n1.0\nnot_a_number\n";
        let mut cursor = LineCursor::new(text);
        match parse_model_from(&mut cursor) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 8),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
