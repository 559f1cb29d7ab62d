//! The JSON metric-spec file.
//!
//! ```json
//! {"dim": 2,
//!  "metric": [["1", "0"], ["0", "exp(2*x1)"]],
//!  "domain": [[-1, 1], [0, 6.283185307179586]],
//!  "periodic": [false, true],
//!  "potential": "x1", "lambda": "0", "k": 2, "l": 1}
//! ```

use serde::Deserialize;
use sigmaflow::curvature::{Domain, GeometryError, MetricChart};
use sigmaflow::expr::{parse, Expr, ParseError};
use sigmaflow::models::ModelManifold;
use sigmaflow::soliton::{SolitonError, SolitonField, SolitonSpec};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("malformed JSON at byte offset {offset} (line {line}, column {column}): {message}")]
    Json {
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{field}: {source}")]
    Expr { field: String, source: ParseError },
    #[error("{0}")]
    Shape(String),
    #[error("indices (k, l) = ({k}, {l}) invalid for dimension {n}: {reason}")]
    Indices {
        n: usize,
        k: usize,
        l: usize,
        reason: &'static str,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    dim: usize,
    metric: Vec<Vec<String>>,
    domain: Vec<[f64; 2]>,
    #[serde(default)]
    periodic: Option<Vec<bool>>,
    #[serde(default)]
    potential: Option<String>,
    #[serde(default)]
    vector_field: Option<Vec<String>>,
    #[serde(default)]
    lambda: Option<String>,
    k: usize,
    l: usize,
}

/// Decoded and validated spec.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpecFile {
    pub chart: MetricChart,
    pub potential: Option<Expr>,
    pub vector_field: Option<Vec<Expr>>,
    pub lambda: Option<Expr>,
    pub k: usize,
    pub l: usize,
}

fn byte_offset(source: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let start: usize = source
        .split_inclusive('\n')
        .take(line - 1)
        .map(str::len)
        .sum();
    (start + column.saturating_sub(1)).min(source.len())
}

fn expr(field: String, s: &str) -> Result<Expr, SpecError> {
    parse(s).map_err(|source| SpecError::Expr { field, source })
}

/// Parses and validates a spec document.
pub fn decode(source: &str) -> Result<MetricSpecFile, SpecError> {
    let raw: RawSpec = serde_json::from_str(source).map_err(|e| SpecError::Json {
        offset: byte_offset(source, e.line(), e.column()),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let n = raw.dim;
    if !(2..=sigmaflow::taylor::MAX_DIM).contains(&n) {
        return Err(SpecError::Shape(format!(
            "dim must lie in 2..={}, got {n}",
            sigmaflow::taylor::MAX_DIM
        )));
    }
    if raw.metric.len() != n || raw.metric.iter().any(|r| r.len() != n) {
        return Err(SpecError::Shape(format!("metric must be a {n}x{n} array")));
    }
    if raw.domain.len() != n {
        return Err(SpecError::Shape(format!(
            "domain needs {n} intervals, got {}",
            raw.domain.len()
        )));
    }
    let periodic = raw.periodic.unwrap_or_else(|| vec![false; n]);
    if periodic.len() != n {
        return Err(SpecError::Shape(format!(
            "periodic needs {n} entries, got {}",
            periodic.len()
        )));
    }
    if raw.k > n || raw.l > n || raw.k == 0 {
        return Err(SpecError::Indices {
            n,
            k: raw.k,
            l: raw.l,
            reason: "need 1 <= k <= n and l <= n",
        });
    }
    if raw.l > raw.k {
        return Err(SpecError::Indices {
            n,
            k: raw.k,
            l: raw.l,
            reason: "need l <= k",
        });
    }
    let metric = raw
        .metric
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, s)| expr(format!("metric[{i}][{j}]"), s))
                .collect()
        })
        .collect::<Result<Vec<Vec<Expr>>, _>>()?;
    let potential = raw
        .potential
        .as_deref()
        .map(|s| expr("potential".into(), s))
        .transpose()?;
    let vector_field = match &raw.vector_field {
        Some(v) if v.len() != n => {
            return Err(SpecError::Shape(format!(
                "vector_field needs {n} components, got {}",
                v.len()
            )));
        }
        Some(v) => Some(
            v.iter()
                .enumerate()
                .map(|(i, s)| expr(format!("vector_field[{i}]"), s))
                .collect::<Result<Vec<_>, _>>()?,
        ),
        None => None,
    };
    let lambda = raw
        .lambda
        .as_deref()
        .map(|s| expr("lambda".into(), s))
        .transpose()?;
    let intervals = raw.domain.iter().map(|&[lo, hi]| (lo, hi)).collect();
    let chart = MetricChart::new(metric, Domain::new(intervals, periodic)?)?;
    Ok(MetricSpecFile {
        chart,
        potential,
        vector_field,
        lambda,
        k: raw.k,
        l: raw.l,
    })
}

impl MetricSpecFile {
    pub fn from_model(m: &ModelManifold) -> Self {
        MetricSpecFile {
            chart: m.chart.clone(),
            potential: m.potential.clone(),
            vector_field: m.vector_field.clone(),
            lambda: m.lambda.clone(),
            k: m.k,
            l: m.l,
        }
    }

    /// Soliton data; a vector field wins over a potential when both are given.
    pub fn soliton(&self, name: &str) -> Result<SolitonSpec, SolitonError> {
        let lambda = self
            .lambda
            .clone()
            .ok_or_else(|| SolitonError::NoSolitonData(name.to_string()))?;
        let field = match (&self.vector_field, &self.potential) {
            (Some(x), _) => SolitonField::Vector(x.clone()),
            (None, Some(f)) => SolitonField::Gradient(f.clone()),
            (None, None) => return Err(SolitonError::NoSolitonData(name.to_string())),
        };
        SolitonSpec::new(self.chart.clone(), field, lambda, self.k, self.l)
    }
}
