//! Finite-dimensional stand-ins `E = R^d` for the target Banach space.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A norm on `R^d` supplied by the caller.
pub trait VectorNorm: Send + Sync {
    fn name(&self) -> &str;
    fn norm(&self, x: &[f64]) -> f64;
}

#[derive(Clone)]
pub enum Norm {
    L1,
    L2,
    Linf,
    Custom(Arc<dyn VectorNorm>),
}

impl Norm {
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Norm::L1 => x.iter().map(|v| v.abs()).sum(),
            Norm::L2 => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            Norm::Linf => x.iter().fold(0.0, |m, v| m.max(v.abs())),
            Norm::Custom(n) => n.norm(x),
        }
    }

    pub fn is_hilbert(&self) -> bool {
        matches!(self, Norm::L2)
    }

    /// Norm of `E*` under the dot-product duality. Custom norms have no known dual.
    pub fn dual(&self) -> Option<Norm> {
        match self {
            Norm::L1 => Some(Norm::Linf),
            Norm::L2 => Some(Norm::L2),
            Norm::Linf => Some(Norm::L1),
            Norm::Custom(_) => None,
        }
    }

    pub fn tag(&self) -> &str {
        match self {
            Norm::L1 => "l1",
            Norm::L2 => "l2",
            Norm::Linf => "linf",
            Norm::Custom(n) => n.name(),
        }
    }
}

impl fmt::Debug for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Norm({})", self.tag())
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl PartialEq for Norm {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Norm::Custom(a), Norm::Custom(b)) => Arc::ptr_eq(a, b),
            (Norm::Custom(_), _) | (_, Norm::Custom(_)) => false,
            _ => self.tag() == other.tag(),
        }
    }
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "l1" => Ok(Norm::L1),
            "l2" => Ok(Norm::L2),
            "linf" | "l_inf" | "max" => Ok(Norm::Linf),
            other => Err(Error::Parse(format!("unknown norm tag {other:?} (expected l1, l2 or linf)"))),
        }
    }
}

impl Serialize for Norm {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.tag())
    }
}

impl<'de> Deserialize<'de> for Norm {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `E = R^d` with one of the supported norms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BanachSpace {
    pub dim: usize,
    pub norm: Norm,
}

impl BanachSpace {
    pub fn new(dim: usize, norm: Norm) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("space dimension must be >= 1".into()));
        }
        Ok(Self { dim, norm })
    }

    /// The scalar field with the absolute value.
    pub fn scalar() -> Self {
        Self { dim: 1, norm: Norm::L2 }
    }

    pub fn l2(dim: usize) -> Self {
        Self { dim, norm: Norm::L2 }
    }

    pub fn linf(dim: usize) -> Self {
        Self { dim, norm: Norm::Linf }
    }

    pub fn l1(dim: usize) -> Self {
        Self { dim, norm: Norm::L1 }
    }

    #[inline]
    pub fn norm_of(&self, x: &[f64]) -> f64 {
        self.norm.eval(x)
    }

    pub fn dual(&self) -> Option<BanachSpace> {
        self.norm.dual().map(|norm| Self { dim: self.dim, norm })
    }

    pub(crate) fn require_hilbert(&self) -> Result<()> {
        if self.norm.is_hilbert() {
            Ok(())
        } else {
            Err(Error::UnsupportedNorm(self.norm.tag().to_string()))
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
