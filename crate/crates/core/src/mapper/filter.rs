use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numkit::{ensure_finite, pca, Matrix};

type FilterFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A user-supplied lens evaluated on each instance's feature row.
#[derive(Clone)]
pub struct CustomFilter {
    name: String,
    func: Arc<FilterFn>,
}

impl CustomFilter {
    pub fn new(name: impl Into<String>, func: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            func: Arc::new(func),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Built-in named lenses usable from configuration files.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "norm" => Some(Self::new("norm", |row| row.iter().map(|v| v * v).sum::<f64>().sqrt())),
            "mean" => Some(Self::new("mean", |row| row.iter().sum::<f64>() / row.len() as f64)),
            _ => None,
        }
    }
}

impl fmt::Debug for CustomFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("CustomFilter").field(&self.name).finish()
    }
}

impl PartialEq for CustomFilter {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}

/// The lens that orders instances before they are sliced into bins.
#[derive(Debug, Clone, PartialEq)]
pub enum FilterSpec {
    /// Score on the given principal component, 1-based.
    PrincipalComponent(usize),
    /// A raw feature column, 0-based.
    Coordinate(usize),
    Custom(CustomFilter),
}

impl fmt::Display for FilterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterSpec::PrincipalComponent(i) => write!(f, "pc:{i}"),
            FilterSpec::Coordinate(i) => write!(f, "coord:{i}"),
            FilterSpec::Custom(c) => write!(f, "custom:{}", c.name),
        }
    }
}

impl FromStr for FilterSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s
            .split_once(':')
            .ok_or_else(|| Error::validation(format!("filter '{s}' should look like pc:1, coord:0 or custom:norm")))?;
        let index = || {
            arg.trim()
                .parse::<usize>()
                .map_err(|_| Error::validation(format!("filter index '{arg}' is not a non-negative integer")))
        };
        match kind.trim() {
            "pc" => {
                let i = index()?;
                if i == 0 {
                    return Err(Error::validation("principal components are numbered from 1"));
                }
                Ok(FilterSpec::PrincipalComponent(i))
            }
            "coord" => Ok(FilterSpec::Coordinate(index()?)),
            "custom" => CustomFilter::builtin(arg.trim())
                .map(FilterSpec::Custom)
                .ok_or_else(|| Error::validation(format!("unknown custom filter '{arg}'"))),
            other => Err(Error::validation(format!("unknown filter kind '{other}'"))),
        }
    }
}

/// Evaluates the lens on every instance (row) of `x`.
pub fn compute_filter(x: &Matrix, filter: &FilterSpec) -> Result<Vec<f64>> {
    let (n, m) = x.shape();
    if n == 0 || m == 0 {
        return Err(Error::validation("filter input is empty"));
    }
    ensure_finite(x, "filter input")?;
    let values: Vec<f64> = match filter {
        FilterSpec::Coordinate(j) => {
            if *j >= m {
                return Err(Error::validation(format!("coordinate {j} out of range for {m} features")));
            }
            x.column(*j).iter().copied().collect()
        }
        FilterSpec::PrincipalComponent(i) => {
            let max = n.saturating_sub(1).min(m);
            if *i == 0 || *i > max {
                return Err(Error::validation(format!(
                    "principal component {i} out of range (1..={max} for {n} instances, {m} features)"
                )));
            }
            let p = pca(x, *i)?;
            p.scores.column(i - 1).iter().copied().collect()
        }
        FilterSpec::Custom(c) => x
            .row_iter()
            .map(|r| {
                let row: Vec<f64> = r.iter().copied().collect();
                (c.func)(&row)
            })
            .collect(),
    };
    if let Some(p) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::validation(format!("filter produced a non-finite value for instance {p}")));
    }
    Ok(values)
}
