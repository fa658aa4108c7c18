//! Reducible networks: components, series connections, direct couplings.
//!
//! A network is a set of named components, a list of field connections
//! `src -> dst` (all channels of `src` feed all channels of `dst`), and a
//! list of direct-coupling operator pairs `(M_k, N_k)` contributing the
//! interaction Hamiltonian `K = i Σ_k (N_k† M_k − M_k† N_k)`.
//!
//! Each component may be a source at most once and a target at most once,
//! and the connection digraph must be acyclic; algebraic loops fall outside
//! the reducible class and are rejected. Reduction concatenates the
//! unconnected components (in registration order), then the maximal series
//! chains (ordered by the registration order of their most-upstream member,
//! each folded upstream-to-downstream with the series product), then a
//! zero-channel component carrying `K`.

use std::collections::HashMap;

use num_complex::Complex64;
use thiserror::Error;

use crate::operator::Operator;
use crate::slh::{SlhError, SlhTriple};

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("component `{0}` is already defined")]
    DuplicateName(String),
    #[error("unknown component `{0}`")]
    UnknownComponent(String),
    #[error("channel mismatch connecting `{src}` ({src_n} channels) to `{dst}` ({dst_n} channels)")]
    ChannelMismatch {
        src: String,
        src_n: usize,
        dst: String,
        dst_n: usize,
    },
    #[error("output of `{0}` is already connected")]
    SourceReused(String),
    #[error("input of `{0}` is already connected")]
    TargetReused(String),
    #[error("connecting `{src}` to `{dst}` closes a field loop; algebraic feedback loops are not reducible")]
    Cycle { src: String, dst: String },
    #[error(transparent)]
    Slh(#[from] SlhError),
}

/// Components plus wiring, prior to reduction.
#[derive(Debug, Default)]
pub struct NetworkSpec {
    names: Vec<String>,
    triples: Vec<SlhTriple>,
    index: HashMap<String, usize>,
    /// (source, target) component indices.
    connections: Vec<(usize, usize)>,
    couplings: Vec<(Operator, Operator)>,
}

/// Reduction output: the single triple plus a report of the chosen ordering.
#[derive(Clone, Debug)]
pub struct ReducedNetwork {
    pub triple: SlhTriple,
    pub report: ChainReport,
}

/// Which components ended up where during reduction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainReport {
    /// Components not involved in any series connection, registration order.
    pub unconnected: Vec<String>,
    /// Maximal chains, upstream to downstream.
    pub chains: Vec<Vec<String>>,
    /// Whether a direct-coupling Hamiltonian block was appended.
    pub direct_coupling: bool,
}

impl NetworkSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_component(&mut self, name: &str, triple: SlhTriple) -> Result<(), NetworkError> {
        if self.index.contains_key(name) {
            return Err(NetworkError::DuplicateName(name.to_string()));
        }
        self.index.insert(name.to_string(), self.names.len());
        self.names.push(name.to_string());
        self.triples.push(triple);
        Ok(())
    }

    pub fn component(&self, name: &str) -> Result<&SlhTriple, NetworkError> {
        let &i = self
            .index
            .get(name)
            .ok_or_else(|| NetworkError::UnknownComponent(name.to_string()))?;
        Ok(&self.triples[i])
    }

    pub fn component_names(&self) -> &[String] {
        &self.names
    }

    /// Wire all outputs of `src` into the inputs of `dst`.
    pub fn add_connection(&mut self, src: &str, dst: &str) -> Result<(), NetworkError> {
        let &s = self
            .index
            .get(src)
            .ok_or_else(|| NetworkError::UnknownComponent(src.to_string()))?;
        let &d = self
            .index
            .get(dst)
            .ok_or_else(|| NetworkError::UnknownComponent(dst.to_string()))?;
        let (src_n, dst_n) = (self.triples[s].channels(), self.triples[d].channels());
        if src_n != dst_n {
            return Err(NetworkError::ChannelMismatch {
                src: src.to_string(),
                src_n,
                dst: dst.to_string(),
                dst_n,
            });
        }
        if self.connections.iter().any(|&(a, _)| a == s) {
            return Err(NetworkError::SourceReused(src.to_string()));
        }
        if self.connections.iter().any(|&(_, b)| b == d) {
            return Err(NetworkError::TargetReused(dst.to_string()));
        }
        // walking downstream from dst must not reach src (self-loops included)
        let mut cursor = Some(d);
        while let Some(k) = cursor {
            if k == s {
                return Err(NetworkError::Cycle {
                    src: src.to_string(),
                    dst: dst.to_string(),
                });
            }
            cursor = self
                .connections
                .iter()
                .find(|&&(a, _)| a == k)
                .map(|&(_, b)| b);
        }
        self.connections.push((s, d));
        Ok(())
    }

    /// Add a direct bidirectional coupling term `(M, N)`.
    pub fn add_direct_coupling(&mut self, m: Operator, n: Operator) {
        self.couplings.push((m, n));
    }

    /// The direct-connection Hamiltonian `K = i Σ_k (N_k† M_k − M_k† N_k)`
    /// (self-adjoint by construction for any operator pairs).
    pub fn direct_hamiltonian(&self) -> Option<Operator> {
        let mut acc: Option<Operator> = None;
        for (m, n) in &self.couplings {
            let term = (&(&n.dagger() * m) - &(&m.dagger() * n)).scale(Complex64::new(0.0, 1.0));
            acc = Some(match acc {
                Some(a) => &a + &term,
                None => term,
            });
        }
        acc
    }

    /// Reduce to a single triple and report the ordering used.
    pub fn reduce(&self) -> Result<ReducedNetwork, NetworkError> {
        let n = self.names.len();
        let mut downstream: HashMap<usize, usize> = HashMap::new();
        let mut has_upstream = vec![false; n];
        let mut in_chain = vec![false; n];
        for &(s, d) in &self.connections {
            downstream.insert(s, d);
            has_upstream[d] = true;
            in_chain[s] = true;
            in_chain[d] = true;
        }

        let mut report = ChainReport {
            unconnected: Vec::new(),
            chains: Vec::new(),
            direct_coupling: !self.couplings.is_empty(),
        };

        let mut pieces: Vec<SlhTriple> = Vec::new();
        for (k, chained) in in_chain.iter().enumerate() {
            if !chained {
                report.unconnected.push(self.names[k].clone());
                pieces.push(self.triples[k].clone());
            }
        }
        // chain heads in registration order (head = most-upstream member)
        for head in 0..n {
            if !in_chain[head] || has_upstream[head] {
                continue;
            }
            let mut members = vec![head];
            let mut cursor = head;
            while let Some(&next) = downstream.get(&cursor) {
                members.push(next);
                cursor = next;
            }
            let mut acc = self.triples[members[0]].clone();
            for &m in &members[1..] {
                acc = self.triples[m].series(&acc)?;
            }
            report
                .chains
                .push(members.iter().map(|&m| self.names[m].clone()).collect());
            pieces.push(acc);
        }

        if let Some(k) = self.direct_hamiltonian() {
            pieces.push(SlhTriple::hamiltonian_only(k)?);
        }

        let mut iter = pieces.into_iter();
        let mut triple = match iter.next() {
            Some(t) => t,
            None => SlhTriple::hamiltonian_only(Operator::scalar_re(0.0))
                .expect("zero hamiltonian is valid"),
        };
        for p in iter {
            triple = triple.concatenate(&p)?;
        }
        Ok(ReducedNetwork { triple, report })
    }
}
