//! JSON encoding of reduced triples and Heisenberg coefficients.
//!
//! Complex entries are `[re, im]` pairs, matrices row-major nested arrays.
//! The signature travels with the triple so a file can be re-imported into a
//! fresh registry with bit-identical entries.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use slhnet_core::dynamics::HeisenbergCoefficients;
use slhnet_core::network::ChainReport;
use slhnet_core::{
    FactorKind, Operator, OperatorMatrix, Signature, SlhTriple, SpaceRegistry,
};

pub type MatrixJson = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FactorJson {
    pub label: String,
    pub kind: String,
    pub dim: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainReportJson {
    pub unconnected: Vec<String>,
    pub chains: Vec<Vec<String>>,
    pub direct_coupling: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TripleJson {
    pub channels: usize,
    pub signature: Vec<FactorJson>,
    #[serde(rename = "S")]
    pub s: Vec<Vec<MatrixJson>>,
    #[serde(rename = "L")]
    pub l: Vec<MatrixJson>,
    #[serde(rename = "H")]
    pub h: MatrixJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chain_report: Option<ChainReportJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HeisenbergJson {
    pub channels: usize,
    pub signature: Vec<FactorJson>,
    pub drift: MatrixJson,
    #[serde(rename = "dA_dagger_coeff")]
    pub da_dagger_coeff: Vec<MatrixJson>,
    #[serde(rename = "dA_coeff")]
    pub da_coeff: Vec<MatrixJson>,
    pub gauge_coeff: Vec<Vec<MatrixJson>>,
}

fn matrix_json(m: &DMatrix<Complex64>) -> MatrixJson {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect()
}

fn operator_json(op: &Operator) -> MatrixJson {
    matrix_json(op.matrix())
}

fn signature_json(sig: &Signature) -> Vec<FactorJson> {
    sig.factors()
        .iter()
        .map(|f| FactorJson {
            label: f.label().to_string(),
            kind: match f.kind() {
                FactorKind::Fock => "fock".to_string(),
                FactorKind::Generic => "generic".to_string(),
            },
            dim: f.dim(),
        })
        .collect()
}

pub fn triple_to_json(triple: &SlhTriple, report: Option<&ChainReport>) -> TripleJson {
    let n = triple.channels();
    TripleJson {
        channels: n,
        signature: signature_json(triple.signature()),
        s: (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| operator_json(triple.scattering().entry(i, j)))
                    .collect()
            })
            .collect(),
        l: (0..n)
            .map(|i| operator_json(triple.coupling().entry(i, 0)))
            .collect(),
        h: operator_json(triple.hamiltonian()),
        chain_report: report.map(|r| ChainReportJson {
            unconnected: r.unconnected.clone(),
            chains: r.chains.clone(),
            direct_coupling: r.direct_coupling,
        }),
    }
}

fn matrix_from_json(m: &MatrixJson, what: &str) -> Result<DMatrix<Complex64>, String> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    if m.iter().any(|r| r.len() != cols) {
        return Err(format!("{what}: ragged matrix"));
    }
    Ok(DMatrix::from_fn(rows, cols, |r, c| {
        Complex64::new(m[r][c][0], m[r][c][1])
    }))
}

/// Rebuild a triple (and the registry housing its signature) from JSON.
///
/// Entries are taken as-is; the exporter already validated the triple, so
/// import does not re-check unitarity.
pub fn triple_from_json(json: &TripleJson) -> Result<(SpaceRegistry, SlhTriple), String> {
    let mut registry = SpaceRegistry::new();
    let mut factors = Vec::new();
    for f in &json.signature {
        let kind = match f.kind.as_str() {
            "fock" => FactorKind::Fock,
            "generic" => FactorKind::Generic,
            other => return Err(format!("unknown factor kind `{other}`")),
        };
        factors.push(
            registry
                .register(&f.label, kind, f.dim)
                .map_err(|e| e.to_string())?,
        );
    }
    let sig = Signature::of(&factors);
    let n = json.channels;
    if json.s.len() != n || json.s.iter().any(|row| row.len() != n) || json.l.len() != n {
        return Err("S/L shapes do not match the channel count".to_string());
    }
    let op = |m: &MatrixJson, what: &str| -> Result<Operator, String> {
        let mat = matrix_from_json(m, what)?;
        Operator::new(sig.clone(), mat).map_err(|e| e.to_string())
    };
    let s = if n == 0 {
        OperatorMatrix::zeros(0, 0, &sig)
    } else {
        let mut rows = Vec::with_capacity(n);
        for (i, row) in json.s.iter().enumerate() {
            let mut ops = Vec::with_capacity(n);
            for (j, entry) in row.iter().enumerate() {
                ops.push(op(entry, &format!("S[{i}][{j}]"))?);
            }
            rows.push(ops);
        }
        OperatorMatrix::from_rows(rows).map_err(|e| e.to_string())?
    };
    let l = if n == 0 {
        OperatorMatrix::zeros(0, 1, &sig)
    } else {
        let mut ops = Vec::with_capacity(n);
        for (i, entry) in json.l.iter().enumerate() {
            ops.push(op(entry, &format!("L[{i}]"))?);
        }
        OperatorMatrix::column(ops).map_err(|e| e.to_string())?
    };
    let h = op(&json.h, "H")?;
    let triple = SlhTriple::new_unchecked(s, l, h).map_err(|e| e.to_string())?;
    Ok((registry, triple))
}

pub fn heisenberg_to_json(
    coeff: &HeisenbergCoefficients,
    sig: &Signature,
    channels: usize,
) -> HeisenbergJson {
    HeisenbergJson {
        channels,
        signature: signature_json(sig),
        drift: operator_json(&coeff.drift),
        da_dagger_coeff: (0..channels)
            .map(|i| operator_json(coeff.da_dagger_coeff.entry(i, 0)))
            .collect(),
        da_coeff: (0..channels)
            .map(|j| operator_json(coeff.da_coeff.entry(0, j)))
            .collect(),
        gauge_coeff: (0..channels)
            .map(|i| {
                (0..channels)
                    .map(|j| operator_json(coeff.gauge_coeff.entry(i, j)))
                    .collect()
            })
            .collect(),
    }
}
