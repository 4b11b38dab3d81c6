//! Symbols m(x, ν) of pseudo-multipliers: builtin families, expressions and tables.

mod expr;
mod table;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::lambda_of_order;
use crate::multiindex::MultiIndex;

pub use expr::{parse_expr, BinOp, Bindings, Expr, Func, Var};
pub use table::{TableDocument, TableEntry, TabulatedSymbol};

/// Builtin symbol families. All are x-independent and positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Builtin {
    /// (2|ν| + n)^(−σ), the symbol of H^(−σ).
    Power { sigma: f64 },
    /// e^(−t(2|ν| + n)), the heat semigroup e^(−tH).
    Heat { t: f64 },
    /// 1 if |ν| ≤ cutoff, else 0.
    Bandlimit { cutoff: usize },
}

impl Builtin {
    pub fn from_params(family: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let get = |key: &str| -> Result<f64> {
            let v = *params.get(key).ok_or_else(|| {
                Error::InvalidArgument(format!("builtin `{family}` needs parameter `{key}`"))
            })?;
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("parameter `{key}` must be finite")));
            }
            Ok(v)
        };
        let check_keys = |allowed: &[&str]| -> Result<()> {
            match params.keys().find(|k| !allowed.contains(&k.as_str())) {
                Some(k) => Err(Error::InvalidArgument(format!(
                    "builtin `{family}` has no parameter `{k}`"
                ))),
                None => Ok(()),
            }
        };
        match family {
            "power" => {
                check_keys(&["sigma"])?;
                Ok(Builtin::Power { sigma: get("sigma")? })
            }
            "heat" => {
                check_keys(&["t"])?;
                let t = get("t")?;
                if t < 0.0 {
                    return Err(Error::InvalidArgument("heat time t must be >= 0".into()));
                }
                Ok(Builtin::Heat { t })
            }
            "bandlimit" => {
                check_keys(&["M"])?;
                let m = get("M")?;
                if m < 0.0 || m.fract() != 0.0 {
                    return Err(Error::InvalidArgument(
                        "bandlimit cutoff M must be a non-negative integer".into(),
                    ));
                }
                Ok(Builtin::Bandlimit { cutoff: m as usize })
            }
            other => Err(Error::InvalidArgument(format!(
                "unknown builtin family `{other}` (expected power, heat or bandlimit)"
            ))),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Builtin::Power { .. } => "power",
            Builtin::Heat { .. } => "heat",
            Builtin::Bandlimit { .. } => "bandlimit",
        }
    }

    pub fn params(&self) -> BTreeMap<String, f64> {
        let (k, v) = match *self {
            Builtin::Power { sigma } => ("sigma", sigma),
            Builtin::Heat { t } => ("t", t),
            Builtin::Bandlimit { cutoff } => ("M", cutoff as f64),
        };
        BTreeMap::from([(k.to_string(), v)])
    }

    pub fn value(&self, order: usize, dim: usize) -> f64 {
        let lam = lambda_of_order(order, dim);
        match *self {
            // powf(_, 1.0) is exact, so σ = 1 gives the correctly rounded 1/λ
            Builtin::Power { sigma } => lam.powf(sigma).recip(),
            Builtin::Heat { t } => (-t * lam).exp(),
            Builtin::Bandlimit { cutoff } => {
                if order <= cutoff {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SymbolKind {
    Builtin(Builtin),
    Expression(Expr),
    Table(TabulatedSymbol),
}

/// A symbol m(x, ν) in dimension n.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolSpec {
    kind: SymbolKind,
    dim: usize,
    is_multiplier: bool,
    claims_positive_selfadjoint: bool,
}

impl SymbolSpec {
    /// A builtin family. The family definition makes it a positive multiplier,
    /// so the positivity claim is set (and still verified where it matters).
    pub fn builtin(builtin: Builtin, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            kind: SymbolKind::Builtin(builtin),
            dim,
            is_multiplier: true,
            claims_positive_selfadjoint: true,
        })
    }

    pub fn builtin_named(family: &str, params: &BTreeMap<String, f64>, dim: usize) -> Result<Self> {
        Self::builtin(Builtin::from_params(family, params)?, dim)
    }

    pub fn expression(expr: Expr, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let is_multiplier = !expr.depends_on_x();
        Ok(Self {
            kind: SymbolKind::Expression(expr),
            dim,
            is_multiplier,
            claims_positive_selfadjoint: false,
        })
    }

    pub fn table(table: TabulatedSymbol, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let is_multiplier = table.is_x_independent();
        Ok(Self {
            kind: SymbolKind::Table(table),
            dim,
            is_multiplier,
            claims_positive_selfadjoint: false,
        })
    }

    pub fn with_positive_selfadjoint_claim(mut self, claim: bool) -> Self {
        self.claims_positive_selfadjoint = claim;
        self
    }

    pub fn kind(&self) -> &SymbolKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// m does not depend on x.
    pub fn is_multiplier(&self) -> bool {
        self.is_multiplier
    }

    pub fn claims_positive_selfadjoint(&self) -> bool {
        self.claims_positive_selfadjoint
    }

    fn eval_raw(&self, x: &[f64], nu: &MultiIndex) -> std::result::Result<f64, String> {
        match &self.kind {
            SymbolKind::Builtin(b) => Ok(b.value(nu.order(), self.dim)),
            SymbolKind::Expression(e) => e.eval(&Bindings {
                x,
                nu: nu.entries(),
                order: nu.order(),
            }),
            SymbolKind::Table(t) => t.eval(x, nu.entries()),
        }
    }

    fn check_args(&self, x_len: usize, nu: &MultiIndex) -> Result<()> {
        for got in [x_len, nu.dim()] {
            if got != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got,
                });
            }
        }
        Ok(())
    }

    /// m(x, ν).
    pub fn eval(&self, x: &[f64], nu: &MultiIndex) -> Result<f64> {
        self.check_args(x.len(), nu)?;
        self.eval_raw(x, nu).map_err(|msg| Error::Evaluation {
            x: x.to_vec(),
            nu: nu.entries().to_vec(),
            msg,
        })
    }

    /// m(ν) for a multiplier, without choosing an x.
    pub fn multiplier_value(&self, nu: &MultiIndex) -> Result<f64> {
        if !self.is_multiplier {
            return Err(Error::InvalidArgument(
                "symbol depends on x; it has no multiplier value".into(),
            ));
        }
        let origin = vec![0.0; self.dim];
        self.check_args(self.dim, nu)?;
        let v = match &self.kind {
            SymbolKind::Table(t) => t.constant_value(nu.entries()),
            _ => self.eval_raw(&origin, nu),
        };
        v.map_err(|msg| Error::Evaluation {
            x: Vec::new(),
            nu: nu.entries().to_vec(),
            msg,
        })
    }

    pub fn to_document(&self) -> SymbolDocument {
        let mut doc = SymbolDocument {
            kind: String::new(),
            dim: self.dim,
            expr: None,
            family: None,
            params: None,
            table: None,
            multiplier: Some(self.is_multiplier),
            positive_selfadjoint: Some(self.claims_positive_selfadjoint),
        };
        match &self.kind {
            SymbolKind::Builtin(b) => {
                doc.kind = "builtin".into();
                doc.family = Some(b.family().into());
                doc.params = Some(b.params());
            }
            SymbolKind::Expression(e) => {
                doc.kind = "expression".into();
                doc.expr = Some(e.to_string());
            }
            SymbolKind::Table(t) => {
                doc.kind = "table".into();
                doc.table = Some(t.to_document());
            }
        }
        doc
    }

    pub fn from_document(doc: &SymbolDocument) -> Result<Self> {
        let spec = match doc.kind.as_str() {
            "expression" => {
                let text = doc
                    .expr
                    .as_deref()
                    .ok_or_else(|| Error::SymbolFile("kind `expression` needs field `expr`".into()))?;
                Self::expression(parse_expr(text, doc.dim)?, doc.dim)?
            }
            "builtin" => {
                let family = doc
                    .family
                    .as_deref()
                    .ok_or_else(|| Error::SymbolFile("kind `builtin` needs field `family`".into()))?;
                let params = doc.params.clone().unwrap_or_default();
                Self::builtin_named(family, &params, doc.dim)?
            }
            "table" => {
                let table = doc
                    .table
                    .as_ref()
                    .ok_or_else(|| Error::SymbolFile("kind `table` needs field `table`".into()))?;
                Self::table(TabulatedSymbol::from_document(table, doc.dim)?, doc.dim)?
            }
            other => {
                return Err(Error::SymbolFile(format!(
                    "unknown kind `{other}` (expected expression, builtin or table)"
                )))
            }
        };
        if doc.multiplier == Some(true) && !spec.is_multiplier {
            return Err(Error::SymbolFile(
                "file declares a multiplier but the symbol depends on x".into(),
            ));
        }
        Ok(match doc.positive_selfadjoint {
            Some(claim) => spec.with_positive_selfadjoint_claim(claim),
            None => spec,
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: SymbolDocument =
            serde_json::from_str(text).map_err(|e| Error::SymbolFile(e.to_string()))?;
        Self::from_document(&doc)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::SymbolFile(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        Err(Error::InvalidArgument("symbol dimension must be at least 1".into()))
    } else {
        Ok(())
    }
}

impl fmt::Display for SymbolSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            SymbolKind::Builtin(b) => {
                write!(f, "{}(", b.family())?;
                for (i, (k, v)) in b.params().iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{k}={v}")?;
                }
                write!(f, ")")
            }
            SymbolKind::Expression(e) => write!(f, "{e}"),
            SymbolKind::Table(_) => write!(f, "table"),
        }
    }
}

/// Parses an expression-kind symbol.
pub fn parse_symbol(text: &str, dim: usize) -> Result<SymbolSpec> {
    SymbolSpec::expression(parse_expr(text, dim)?, dim)
}

/// m(x, ν).
pub fn eval_symbol(s: &SymbolSpec, x: &[f64], nu: &MultiIndex) -> Result<f64> {
    s.eval(x, nu)
}

/// On-disk symbol description (JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolDocument {
    pub kind: String,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expr: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<TableDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiplier: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positive_selfadjoint: Option<bool>,
}
