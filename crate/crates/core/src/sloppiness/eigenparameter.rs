//! Eigenvectors rendered as products and quotients of bare parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub name: String,
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenparameter {
    /// 1-based, 1 = stiffest.
    pub rank: usize,
    pub lambda: f64,
    pub lambda_rel: f64,
    /// Sorted by |exponent| (one decimal) descending, then parameter order;
    /// the largest is exactly +1.
    pub terms: Vec<Term>,
    pub display: String,
}

impl Eigenparameter {
    pub fn exponent(&self, name: &str) -> f64 {
        self.terms.iter().find(|t| t.name == name).map_or(0.0, |t| t.exponent)
    }

    /// Exponents over `names`, zero where the parameter was dropped.
    pub fn exponent_vector(&self, names: &[&str]) -> Vec<f64> {
        names.iter().map(|n| self.exponent(n)).collect()
    }

    pub fn involves(&self, name: &str) -> bool {
        self.terms.iter().any(|t| t.name == name)
    }
}

/// Thresholds, rescales and sign-normalises one eigenvector.
pub fn eigenparameter_terms(v: &[f64], names: &[String], threshold: f64, rank: usize) -> Result<Vec<Term>> {
    if v.len() != names.len() {
        return Err(Error::Validation(format!("{} loadings for {} names", v.len(), names.len())));
    }
    let mut kept: Vec<(usize, f64)> = v.iter().cloned().enumerate().filter(|(_, x)| x.abs() >= threshold).collect();
    if kept.is_empty() {
        return Err(Error::EmptyEigenparameter { rank, threshold });
    }
    let lead = kept.iter().map(|k| k.1).fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    // Ties at display precision keep parameter order.
    kept.sort_by(|a, b| display_abs(b.1 / lead).total_cmp(&display_abs(a.1 / lead)).then(a.0.cmp(&b.0)));
    Ok(kept
        .into_iter()
        .map(|(j, x)| Term {
            name: names[j].clone(),
            exponent: x / lead.abs() * lead.signum(),
        })
        .collect())
}

fn display_abs(e: f64) -> f64 {
    (e.abs() * 10.0).round() / 10.0
}

fn format_factor(t: &Term) -> String {
    let e = display_abs(t.exponent);
    if e == 1.0 {
        t.name.clone()
    } else {
        format!("{}^{{{e:.1}}}", t.name)
    }
}

/// `a·b^{0.4}/c` style rendering; exponents shown to one decimal.
pub fn format_terms(terms: &[Term]) -> String {
    let num: Vec<String> = terms.iter().filter(|t| t.exponent > 0.0).map(format_factor).collect();
    let den: Vec<String> = terms.iter().filter(|t| t.exponent < 0.0).map(format_factor).collect();
    let mut s = if num.is_empty() { "1".to_string() } else { num.join("·") };
    match den.len() {
        0 => {}
        1 => {
            s.push('/');
            s.push_str(&den[0]);
        }
        _ => {
            s.push_str("/(");
            s.push_str(&den.join("·"));
            s.push(')');
        }
    }
    s
}

/// Inverse of [`format_terms`], giving exponents at display precision.
pub fn parse_display(s: &str) -> Result<Vec<Term>> {
    let bad = |r: &str| Error::Parse { line: 1, reason: format!("`{s}`: {r}") };
    let (num, den) = match s.find('/') {
        Some(i) => (&s[..i], Some(&s[i + '/'.len_utf8()..])),
        None => (s, None),
    };
    let factor = |f: &str, sign: f64| -> Result<Term> {
        if f.is_empty() {
            return Err(bad("empty factor"));
        }
        match f.find("^{") {
            Some(i) => {
                let rest = &f[i + 2..];
                let body = rest.strip_suffix('}').ok_or_else(|| bad("unclosed exponent"))?;
                let e: f64 = body.parse().map_err(|_| bad("bad exponent"))?;
                Ok(Term { name: f[..i].to_string(), exponent: sign * e })
            }
            None => Ok(Term { name: f.to_string(), exponent: sign }),
        }
    };
    let mut terms = Vec::new();
    if num != "1" {
        for f in num.split('·') {
            terms.push(factor(f, 1.0)?);
        }
    }
    if let Some(d) = den {
        let inner = match d.strip_prefix('(') {
            Some(r) => r.strip_suffix(')').ok_or_else(|| bad("unbalanced parenthesis"))?,
            None => d,
        };
        for f in inner.split('·') {
            terms.push(factor(f, -1.0)?);
        }
    }
    Ok(terms)
}

/// Builds eigenparameters for every eigenvector (columns of `vectors`).
///
/// Vectors whose loadings all fall below `threshold` are skipped with a
/// warning; the caller sees them as missing ranks.
pub fn extract_eigenparameters(
    vectors: &[Vec<f64>],
    values: &[f64],
    names: &[String],
    threshold: f64,
) -> Result<Vec<Eigenparameter>> {
    if vectors.len() != values.len() {
        return Err(Error::Validation("eigenvector and eigenvalue counts differ".into()));
    }
    let l1 = values.first().copied().unwrap_or(0.0);
    let mut out = Vec::with_capacity(values.len());
    for (k, (v, &lambda)) in vectors.iter().zip(values).enumerate() {
        match eigenparameter_terms(v, names, threshold, k + 1) {
            Ok(terms) => out.push(Eigenparameter {
                rank: k + 1,
                lambda,
                lambda_rel: if l1 != 0.0 { lambda / l1 } else { f64::NAN },
                display: format_terms(&terms),
                terms,
            }),
            Err(e @ Error::EmptyEigenparameter { .. }) => log::warn!("{e}"),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// L∞ distance between two exponent vectors, minimised over a global sign flip.
pub fn exponent_distance(a: &[f64], b: &[f64]) -> f64 {
    let d = |s: f64| a.iter().zip(b).map(|(x, y)| (x - s * y).abs()).fold(0.0, f64::max);
    d(1.0).min(d(-1.0))
}
