//! Named, unit-annotated parameter sets and their log-space transforms.
//!
//! A [`ParameterSpec`] lists every parameter a model knows about. The entries
//! flagged `estimated` form the inference vector; their order in the spec is the
//! coordinate order of every [`ParameterVector`], covariance and sensitivity
//! matrix built from it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterEntry {
    pub name: String,
    pub unit: String,
    #[serde(rename = "reference")]
    pub reference_value: f64,
    pub estimated: bool,
}

impl ParameterEntry {
    pub fn new(name: &str, unit: &str, reference_value: f64, estimated: bool) -> Self {
        Self {
            name: name.to_string(),
            unit: unit.to_string(),
            reference_value,
            estimated,
        }
    }
}

/// Ordered parameter list; serialises as a plain JSON array of entries.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ParameterSpec {
    entries: Vec<ParameterEntry>,
}

impl<'de> Deserialize<'de> for ParameterSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let entries = Vec::<ParameterEntry>::deserialize(d)?;
        ParameterSpec::new(entries).map_err(serde::de::Error::custom)
    }
}

impl ParameterSpec {
    pub fn new(entries: Vec<ParameterEntry>) -> Result<Self> {
        for (i, e) in entries.iter().enumerate() {
            if entries[..i].iter().any(|o| o.name == e.name) {
                return Err(Error::Validation(format!(
                    "duplicate parameter name `{}`",
                    e.name
                )));
            }
            if !(e.reference_value > 0.0) || !e.reference_value.is_finite() {
                return Err(Error::domain(
                    &e.name,
                    format!("reference value {} must be positive", e.reference_value),
                ));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[ParameterEntry] {
        &self.entries
    }

    pub fn estimated(&self) -> impl Iterator<Item = &ParameterEntry> {
        self.entries.iter().filter(|e| e.estimated)
    }

    /// Inference dimension.
    pub fn dim(&self) -> usize {
        self.estimated().count()
    }

    pub fn estimated_names(&self) -> Vec<String> {
        self.estimated().map(|e| e.name.clone()).collect()
    }

    /// Coordinate of a parameter within the estimated subset.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.estimated().position(|e| e.name == name)
    }

    pub fn entry(&self, name: &str) -> Option<&ParameterEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Reference value by name, estimated or fixed.
    pub fn value(&self, name: &str) -> Result<f64> {
        self.entry(name)
            .map(|e| e.reference_value)
            .ok_or_else(|| Error::Validation(format!("unknown parameter `{name}`")))
    }

    pub fn set_reference(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::domain(name, format!("value {value} must be positive")));
        }
        let e = self
            .entries
            .iter_mut()
            .find(|e| e.name == name)
            .ok_or_else(|| Error::Validation(format!("unknown parameter `{name}`")))?;
        e.reference_value = value;
        Ok(())
    }

    /// Reference values of the estimated subset.
    pub fn reference_vector(&self) -> ParameterVector {
        ParameterVector(self.estimated().map(|e| e.reference_value).collect())
    }

    /// Returns a copy with `entry` appended as the last estimated coordinate.
    pub fn with_appended(&self, entry: ParameterEntry) -> Result<Self> {
        let mut entries = self.entries.clone();
        entries.push(entry);
        Self::new(entries)
    }
}

/// Parameter values in natural space, aligned with a spec's estimated subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterVector(pub Vec<f64>);

impl ParameterVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Checks strict positivity, naming the first offending coordinate.
    pub fn validate(&self, names: &[String]) -> Result<()> {
        for (i, &v) in self.0.iter().enumerate() {
            if !(v > 0.0) || !v.is_finite() {
                let name = names.get(i).cloned().unwrap_or_else(|| format!("#{i}"));
                return Err(Error::domain(name, format!("value {v} is not strictly positive")));
            }
        }
        Ok(())
    }
}

impl std::ops::Index<usize> for ParameterVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Element-wise natural logarithm.
pub fn to_log_space(theta: &ParameterVector) -> Result<Vec<f64>> {
    theta
        .0
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if v > 0.0 && v.is_finite() {
                Ok(v.ln())
            } else {
                Err(Error::domain(format!("#{i}"), format!("cannot take log of {v}")))
            }
        })
        .collect()
}

/// Same as [`to_log_space`] but names the offending parameter from `names`.
pub fn to_log_space_named(theta: &ParameterVector, names: &[String]) -> Result<Vec<f64>> {
    theta.validate(names)?;
    to_log_space(theta)
}

/// Element-wise exponential.
pub fn from_log_space(log_theta: &[f64]) -> Result<ParameterVector> {
    log_theta
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            if x.is_finite() {
                Ok(x.exp())
            } else {
                Err(Error::domain(format!("#{i}"), format!("non-finite log value {x}")))
            }
        })
        .collect::<Result<Vec<_>>>()
        .map(ParameterVector)
}
