//! Hilbert-space factor registry and tensor signatures.
//!
//! A [`SpaceRegistry`] names the tensor factors of the underlying initial
//! space. Registration order is global: every operator signature and every
//! embedding normalizes its factors to that order, which removes any
//! tensor-order ambiguity from products of operators living on different
//! subsystems.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// How a factor's basis is interpreted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FactorKind {
    /// Truncated oscillator: levels `0..dim-1`, `dim` is the Fock cutoff.
    Fock,
    /// An unstructured `dim`-level system (qubit, grid, ...).
    Generic,
}

impl fmt::Display for FactorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactorKind::Fock => write!(f, "fock"),
            FactorKind::Generic => write!(f, "generic"),
        }
    }
}

/// One tensor factor of the initial space.
#[derive(Debug, PartialEq, Eq, Hash)]
pub struct SpaceFactor {
    index: usize,
    label: String,
    dim: usize,
    kind: FactorKind,
}

impl SpaceFactor {
    /// Position in global registration order.
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> FactorKind {
        self.kind
    }
}

#[derive(Debug, Error)]
pub enum HilbertError {
    #[error("space label `{0}` is already registered")]
    DuplicateLabel(String),
    #[error("space dimension must be at least 1, got {0}")]
    InvalidDim(usize),
    #[error("unknown space `{0}`")]
    UnknownSpace(String),
    #[error("operator on `{op}` cannot be embedded into signature `{target}`: missing factor `{missing}`")]
    MissingFactor {
        op: String,
        target: String,
        missing: String,
    },
    #[error("signatures `{0}` and `{1}` come from different registries")]
    IncompatibleSignatures(String, String),
    #[error("operator is not a fock-space operator: `{0}` is {1}")]
    NotFock(String, FactorKind),
    #[error("operator matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("operator is not hermitian (deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix dimension mismatch: {0}")]
    Shape(String),
}

/// Append-only registry of tensor factors.
///
/// Cloning a handle to a factor is cheap (`Arc`); the registry itself is a
/// plain value, so concurrent registration must go through a single owner.
#[derive(Debug, Default)]
pub struct SpaceRegistry {
    factors: Vec<Arc<SpaceFactor>>,
}

impl SpaceRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register a new factor. Labels must be unique and `dim >= 1`.
    pub fn register(
        &mut self,
        label: &str,
        kind: FactorKind,
        dim: usize,
    ) -> Result<Arc<SpaceFactor>, HilbertError> {
        if dim < 1 {
            return Err(HilbertError::InvalidDim(dim));
        }
        if self.factors.iter().any(|f| f.label == label) {
            return Err(HilbertError::DuplicateLabel(label.to_string()));
        }
        let factor = Arc::new(SpaceFactor {
            index: self.factors.len(),
            label: label.to_string(),
            dim,
            kind,
        });
        self.factors.push(factor.clone());
        Ok(factor)
    }

    /// Register a truncated fock space with `cutoff` levels `0..cutoff-1`.
    pub fn fock(&mut self, label: &str, cutoff: usize) -> Result<Arc<SpaceFactor>, HilbertError> {
        self.register(label, FactorKind::Fock, cutoff)
    }

    /// Register a generic `dim`-level factor.
    pub fn generic(&mut self, label: &str, dim: usize) -> Result<Arc<SpaceFactor>, HilbertError> {
        self.register(label, FactorKind::Generic, dim)
    }

    pub fn get(&self, label: &str) -> Result<Arc<SpaceFactor>, HilbertError> {
        self.factors
            .iter()
            .find(|f| f.label == label)
            .cloned()
            .ok_or_else(|| HilbertError::UnknownSpace(label.to_string()))
    }

    pub fn factors(&self) -> &[Arc<SpaceFactor>] {
        &self.factors
    }

    /// Signature spanning every registered factor.
    pub fn full_signature(&self) -> Signature {
        Signature {
            factors: self.factors.clone(),
        }
    }
}

/// Ordered set of tensor factors an operator acts on.
///
/// Factors are kept sorted by registration index; the empty signature is the
/// scalar (1-dimensional) space.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Signature {
    factors: Vec<Arc<SpaceFactor>>,
}

impl Signature {
    /// The scalar signature (no factors, total dimension 1).
    pub fn scalar() -> Self {
        Signature { factors: vec![] }
    }

    /// Signature over a single factor.
    pub fn single(factor: &Arc<SpaceFactor>) -> Self {
        Signature {
            factors: vec![factor.clone()],
        }
    }

    /// Signature over several factors (sorted and deduplicated internally).
    pub fn of(factors: &[Arc<SpaceFactor>]) -> Self {
        let mut fs: Vec<Arc<SpaceFactor>> = factors.to_vec();
        fs.sort_by_key(|f| f.index);
        fs.dedup_by_key(|f| f.index);
        Signature { factors: fs }
    }

    pub fn factors(&self) -> &[Arc<SpaceFactor>] {
        &self.factors
    }

    pub fn is_scalar(&self) -> bool {
        self.factors.is_empty()
    }

    /// Total dimension (product of factor dimensions; 1 for the scalar).
    pub fn dim(&self) -> usize {
        self.factors.iter().map(|f| f.dim).product()
    }

    pub fn contains(&self, factor: &SpaceFactor) -> bool {
        self.factors.iter().any(|f| f.index == factor.index)
    }

    pub fn is_subset_of(&self, other: &Signature) -> bool {
        self.factors.iter().all(|f| other.contains(f))
    }

    /// Union of two signatures, ordered by registration index.
    ///
    /// Fails if the signatures disagree on a factor index (which only happens
    /// when operators from different registries are mixed).
    pub fn union(&self, other: &Signature) -> Result<Signature, HilbertError> {
        let mut fs = self.factors.clone();
        for f in &other.factors {
            match fs.iter().find(|g| g.index == f.index) {
                Some(g) if g == f => {}
                Some(_) => {
                    return Err(HilbertError::IncompatibleSignatures(
                        self.to_string(),
                        other.to_string(),
                    ))
                }
                None => fs.push(f.clone()),
            }
        }
        fs.sort_by_key(|f| f.index);
        Ok(Signature { factors: fs })
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "scalar");
        }
        let labels: Vec<&str> = self.factors.iter().map(|x| x.label.as_str()).collect();
        write!(f, "{}", labels.join("*"))
    }
}
