//! Plain-text space documents.
//!
//! ```text
//! # comments and blank lines are ignored
//! name: line3
//! kind: metric
//! points: a b c
//! remote: c            (metric only, optional)
//! K: 2                 (quasi only, required)
//! remoteSet: c         (quasi only, optional; `remote_set` also accepted)
//! basepoint: a         (optional)
//! matrix:
//! 0 1 inf
//! 1 0 inf
//! inf inf 0
//! ```

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::space::{AnySpace, ExtendedMetricSpace, FiniteSpace, PointId, QuasiMetricSpace, SpaceError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DocumentError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing `{0}`")]
    Missing(&'static str),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("{0}")]
    Inconsistent(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

impl DocumentError {
    /// Whether the document text itself is malformed (as opposed to
    /// describing a space that fails validation).
    pub fn is_parse_error(&self) -> bool {
        !matches!(
            self,
            DocumentError::Space(
                SpaceError::Invalid(_) | SpaceError::TooFewPoints(_) | SpaceError::InvalidConstant(_)
            )
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DocumentKind {
    Metric,
    Quasi,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpaceDocument {
    pub name: String,
    pub kind: DocumentKind,
    pub points: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub remote: Option<String>,
    pub k: Option<f64>,
    pub remote_set: Vec<String>,
    pub basepoint: Option<String>,
}

fn parse_number(tok: &str, line: usize) -> Result<f64, DocumentError> {
    let v = match tok {
        "inf" | "+inf" => f64::INFINITY,
        _ => tok.parse::<f64>().map_err(|_| DocumentError::Parse {
            line,
            msg: format!("`{tok}` is not a number"),
        })?,
    };
    if v.is_nan() {
        return Err(DocumentError::Parse {
            line,
            msg: "NaN is not a distance".into(),
        });
    }
    Ok(v)
}

pub fn format_number(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == 0.0 {
        "0".into()
    } else {
        format!("{v:.16e}")
    }
}

impl SpaceDocument {
    pub fn parse(text: &str) -> Result<Self, DocumentError> {
        let mut name = None;
        let mut kind = None;
        let mut points: Option<Vec<String>> = None;
        let mut remote = None;
        let mut k = None;
        let mut remote_set = Vec::new();
        let mut basepoint = None;
        let mut rows: Option<Vec<Vec<f64>>> = None;

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            if let Some(rows) = rows.as_mut() {
                let row = content
                    .split_whitespace()
                    .map(|t| parse_number(t, line))
                    .collect::<Result<Vec<_>, _>>()?;
                rows.push(row);
                continue;
            }
            let Some((key, value)) = content.split_once(':') else {
                return Err(DocumentError::Parse {
                    line,
                    msg: format!("expected `key: value`, got `{content}`"),
                });
            };
            let value = value.trim();
            let words = || value.split_whitespace().map(String::from).collect::<Vec<_>>();
            match key.trim() {
                "name" => name = Some(value.to_string()),
                "kind" => {
                    kind = Some(match value {
                        "metric" => DocumentKind::Metric,
                        "quasi" => DocumentKind::Quasi,
                        other => {
                            return Err(DocumentError::Parse {
                                line,
                                msg: format!("kind must be metric or quasi, got `{other}`"),
                            })
                        }
                    })
                }
                "points" => points = Some(words()),
                "remote" => remote = Some(value.to_string()),
                "K" => k = Some(parse_number(value, line)?),
                "remoteSet" | "remote_set" => remote_set = words(),
                "basepoint" => basepoint = Some(value.to_string()),
                "matrix" => {
                    if !value.is_empty() {
                        return Err(DocumentError::Parse {
                            line,
                            msg: "matrix rows start on the next line".into(),
                        });
                    }
                    rows = Some(Vec::new());
                }
                other => {
                    return Err(DocumentError::Parse {
                        line,
                        msg: format!("unknown key `{other}`"),
                    })
                }
            }
        }

        let kind = kind.ok_or(DocumentError::Missing("kind"))?;
        let points = points.ok_or(DocumentError::Missing("points"))?;
        let rows = rows.ok_or(DocumentError::Missing("matrix"))?;
        let n = points.len();
        if rows.len() != n {
            return Err(DocumentError::Inconsistent(format!(
                "{} matrix rows for {n} points",
                rows.len()
            )));
        }
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(DocumentError::Inconsistent(format!(
                "matrix row {} has {} entries, expected {n}",
                i + 1,
                row.len()
            )));
        }
        match kind {
            DocumentKind::Metric if k.is_some() || !remote_set.is_empty() => {
                return Err(DocumentError::Inconsistent(
                    "K and remoteSet are only allowed for quasi documents".into(),
                ))
            }
            DocumentKind::Quasi if k.is_none() => return Err(DocumentError::Missing("K")),
            DocumentKind::Quasi if remote.is_some() => {
                return Err(DocumentError::Inconsistent(
                    "quasi documents list remote points under remoteSet".into(),
                ))
            }
            _ => {}
        }
        Ok(SpaceDocument {
            name: name.unwrap_or_default(),
            kind,
            points,
            rows,
            remote,
            k,
            remote_set,
            basepoint,
        })
    }

    fn index_of(&self, label: &str) -> Result<PointId, DocumentError> {
        self.points
            .iter()
            .position(|l| l == label)
            .map(PointId)
            .ok_or_else(|| DocumentError::UnknownLabel(label.to_string()))
    }

    /// Validates the described space.
    pub fn to_space(&self) -> Result<AnySpace, DocumentError> {
        match self.kind {
            DocumentKind::Metric => {
                let remote = self.remote.as_deref().map(|l| self.index_of(l)).transpose()?;
                Ok(AnySpace::Metric(ExtendedMetricSpace::new(
                    self.points.clone(),
                    &self.rows,
                    remote,
                )?))
            }
            DocumentKind::Quasi => {
                let set = self
                    .remote_set
                    .iter()
                    .map(|l| self.index_of(l))
                    .collect::<Result<BTreeSet<_>, _>>()?;
                Ok(AnySpace::Quasi(QuasiMetricSpace::new(
                    self.points.clone(),
                    &self.rows,
                    self.k.expect("checked at parse time"),
                    set,
                )?))
            }
        }
    }

    pub fn basepoint_id(&self) -> Result<Option<PointId>, DocumentError> {
        self.basepoint.as_deref().map(|l| self.index_of(l)).transpose()
    }

    pub fn from_metric(name: &str, space: &ExtendedMetricSpace) -> Self {
        SpaceDocument {
            name: name.to_string(),
            kind: DocumentKind::Metric,
            points: space.labels().to_vec(),
            rows: space.matrix().to_rows(),
            remote: space.remote().map(|p| space.label(p).to_string()),
            k: None,
            remote_set: Vec::new(),
            basepoint: None,
        }
    }

    pub fn from_quasi(name: &str, space: &QuasiMetricSpace) -> Self {
        SpaceDocument {
            name: name.to_string(),
            kind: DocumentKind::Quasi,
            points: space.labels().to_vec(),
            rows: space.matrix().to_rows(),
            remote: None,
            k: Some(space.k()),
            remote_set: space
                .remote_set()
                .iter()
                .map(|&p| space.label(p).to_string())
                .collect(),
            basepoint: None,
        }
    }

    pub fn from_space(name: &str, space: &AnySpace) -> Self {
        match space {
            AnySpace::Metric(s) => Self::from_metric(name, s),
            AnySpace::Quasi(q) => Self::from_quasi(name, q),
        }
    }

    pub fn with_basepoint(mut self, label: impl Into<String>) -> Self {
        self.basepoint = Some(label.into());
        self
    }
}

impl fmt::Display for SpaceDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.name.is_empty() {
            writeln!(f, "name: {}", self.name)?;
        }
        let kind = match self.kind {
            DocumentKind::Metric => "metric",
            DocumentKind::Quasi => "quasi",
        };
        writeln!(f, "kind: {kind}")?;
        writeln!(f, "points: {}", self.points.join(" "))?;
        if let Some(r) = &self.remote {
            writeln!(f, "remote: {r}")?;
        }
        if let Some(k) = self.k {
            writeln!(f, "K: {}", format_number(k))?;
        }
        if !self.remote_set.is_empty() {
            writeln!(f, "remoteSet: {}", self.remote_set.join(" "))?;
        }
        if let Some(p) = &self.basepoint {
            writeln!(f, "basepoint: {p}")?;
        }
        writeln!(f, "matrix:")?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| format_number(v)).collect();
            writeln!(f, "{}", cells.join(" "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINE: &str = "name: line\nkind: metric\npoints: a b c\nmatrix:\n0 1 2\n1 0 1\n2 1 0\n";

    #[test]
    fn parses_and_reprints() {
        let doc = SpaceDocument::parse(LINE).unwrap();
        assert_eq!(doc.points, vec!["a", "b", "c"]);
        let space = doc.to_space().unwrap();
        assert_eq!(space.dist(PointId(0), PointId(2)), 2.0);
        let again = SpaceDocument::parse(&doc.to_string()).unwrap();
        assert_eq!(again, doc);
    }

    #[test]
    fn remote_and_inf_token() {
        let text = "kind: metric\npoints: a b c w\nremote: w\nmatrix:\n0 1 2 inf\n1 0 1 inf\n2 1 0 inf\ninf inf inf 0\n";
        let doc = SpaceDocument::parse(text).unwrap();
        let AnySpace::Metric(s) = doc.to_space().unwrap() else { panic!() };
        assert_eq!(s.remote(), Some(PointId(3)));
        assert!(doc.to_string().contains("inf inf inf 0"));
    }

    #[test]
    fn quasi_documents() {
        let text = "kind: quasi\nK: 3\npoints: a b c\nmatrix:\n0 1 3\n1 0 1\n3 1 0\n";
        let doc = SpaceDocument::parse(text).unwrap();
        let AnySpace::Quasi(q) = doc.to_space().unwrap() else { panic!() };
        assert_eq!(q.k(), 3.0);
        let missing_k = "kind: quasi\npoints: a b c\nmatrix:\n0 1 3\n1 0 1\n3 1 0\n";
        assert_eq!(SpaceDocument::parse(missing_k), Err(DocumentError::Missing("K")));
    }

    #[test]
    fn parse_errors() {
        let ragged = "kind: metric\npoints: a b c\nmatrix:\n0 1 2\n1 0\n2 1 0\n";
        let err = SpaceDocument::parse(ragged).unwrap_err();
        assert!(matches!(err, DocumentError::Inconsistent(_)) && err.is_parse_error());
        assert!(SpaceDocument::parse("kind: metric\npoints: a\nmatrix:\nx\n").is_err());
        assert!(SpaceDocument::parse("kind: other\n").is_err());
        assert!(SpaceDocument::parse("nonsense\n").is_err());
    }

    #[test]
    fn validation_failures_are_not_parse_errors() {
        let text = "kind: metric\npoints: a b c\nmatrix:\n0 1 3\n1 0 1\n3 1 0\n";
        let err = SpaceDocument::parse(text).unwrap().to_space().unwrap_err();
        assert!(!err.is_parse_error());
    }

    #[test]
    fn numbers_round_trip_exactly() {
        for v in [0.1, 1.0 / 3.0, 2f64.sqrt(), 1e-300, 123456.789] {
            assert_eq!(format_number(v).parse::<f64>().unwrap(), v);
        }
    }
}
