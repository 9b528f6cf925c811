//! On-disk formats: invariant sets, Bloch grids and reconstructed states.
//!
//! # Bloch-grid files
//!
//! A Bloch grid starts with a JSON header object:
//!
//! ```text
//! {"d": 2, "sizes": [N1, N2], "n": 3, "band_index": 0,
//!  "periods": [6.283.., 6.283..], "payload": "json" | "binary"}
//! ```
//!
//! `sizes` counts distinct nodes per axis, `n` is the projective dimension
//! (each state has `n + 1` amplitudes) and `periods` defaults to `2 pi` per
//! axis. The payload covers the closed grid, `N_a + 1` nodes per axis, in
//! row-major order with the last axis fastest, so the closing nodes can be
//! checked against the first ones on load.
//!
//! With `"payload": "json"` the header object also carries `"amplitudes"`:
//! one `[re, im]` pair per amplitude, states concatenated. With
//! `"payload": "binary"` the header ends at the first newline and is followed
//! by the amplitudes as little-endian `f64` pairs `re, im`, 16 bytes each,
//! with nothing after the last pair.

use std::fs;
use std::path::Path;

use bargmann_core::band::BzGrid;
use bargmann_core::invariants::{InvariantSet, TripleRecord};
use bargmann_core::states::{self, StateVector};
use bargmann_core::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Layout(String),
    #[error("payload holds {found} values, expected {expected}")]
    Truncated { expected: usize, found: usize },
    #[error(transparent)]
    Contract(#[from] bargmann_core::Error),
}

fn read(path: &Path) -> Result<Vec<u8>, FormatError> {
    fs::read(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write(path: &Path, bytes: &[u8]) -> Result<(), FormatError> {
    fs::write(path, bytes).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TripleJson {
    i: usize,
    j: usize,
    k: usize,
    re: f64,
    im: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InvariantSetJson {
    labels: Vec<String>,
    two_point: Vec<f64>,
    three_point: Vec<TripleJson>,
}

pub fn invariants_to_json(set: &InvariantSet) -> String {
    let doc = InvariantSetJson {
        labels: set.labels().to_vec(),
        two_point: set.two_point().to_vec(),
        three_point: set
            .records()
            .map(|r| TripleJson {
                i: r.i,
                j: r.j,
                k: r.k,
                re: r.value.re,
                im: r.value.im,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("invariant sets serialize")
}

pub fn invariants_from_json(text: &str) -> Result<InvariantSet, FormatError> {
    let doc: InvariantSetJson = serde_json::from_str(text)?;
    let n = doc.labels.len();
    if doc.two_point.len() != n * n {
        return Err(FormatError::Truncated {
            expected: n * n,
            found: doc.two_point.len(),
        });
    }
    if let Some(t) = doc
        .three_point
        .iter()
        .find(|t| t.i >= n || t.j >= n || t.k >= n)
    {
        return Err(FormatError::Layout(format!(
            "triple ({}, {}, {}) indexes past {n} points",
            t.i, t.j, t.k
        )));
    }
    let records: Vec<TripleRecord> = doc
        .three_point
        .iter()
        .map(|t| TripleRecord {
            i: t.i,
            j: t.j,
            k: t.k,
            value: Complex64::new(t.re, t.im),
        })
        .collect();
    Ok(InvariantSet::new(doc.labels, doc.two_point, &records)?)
}

pub fn read_invariants(path: &Path) -> Result<InvariantSet, FormatError> {
    let bytes = read(path)?;
    invariants_from_json(
        std::str::from_utf8(&bytes).map_err(|e| FormatError::Layout(e.to_string()))?,
    )
}

/// Parameter points as a JSON array of coordinate arrays.
pub fn read_points(path: &Path) -> Result<Vec<Vec<f64>>, FormatError> {
    let points: Vec<Vec<f64>> = serde_json::from_slice(&read(path)?)?;
    if points.is_empty() {
        return Err(FormatError::Layout("point list is empty".into()));
    }
    if points.iter().any(|p| p.len() != points[0].len()) {
        return Err(FormatError::Layout(
            "points have different dimensions".into(),
        ));
    }
    Ok(points)
}

/// States as a JSON array of `[re, im]` pair arrays.
pub fn states_to_json(states: &[StateVector]) -> String {
    serde_json::to_string_pretty(&bargmann_core::tomography::states_as_pairs(states))
        .expect("states serialize")
}

pub fn states_from_json(text: &str) -> Result<Vec<StateVector>, FormatError> {
    let raw: Vec<Vec<[f64; 2]>> = serde_json::from_str(text)?;
    raw.iter()
        .map(|s| {
            let amps: Vec<Complex64> = s.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
            Ok(states::normalize(&amps)?)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Payload {
    Json,
    Binary,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridHeader {
    d: usize,
    sizes: Vec<usize>,
    n: usize,
    band_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    periods: Option<Vec<f64>>,
    payload: Payload,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    amplitudes: Option<Vec<[f64; 2]>>,
}

pub fn grid_to_bytes(grid: &BzGrid, payload: Payload) -> Vec<u8> {
    let closed = grid.closed_states();
    let width = closed[0].len();
    let pairs: Vec<[f64; 2]> = closed
        .iter()
        .flat_map(|s| s.amplitudes().iter().map(|a| [a.re, a.im]))
        .collect();
    let mut header = GridHeader {
        d: grid.dim(),
        sizes: grid.sizes().to_vec(),
        n: width - 1,
        band_index: grid.band_index(),
        periods: Some(grid.periods().to_vec()),
        payload,
        amplitudes: None,
    };
    match payload {
        Payload::Json => {
            header.amplitudes = Some(pairs);
            serde_json::to_vec_pretty(&header).expect("grid header serializes")
        }
        Payload::Binary => {
            let mut out = serde_json::to_vec(&header).expect("grid header serializes");
            out.push(b'\n');
            for [re, im] in pairs {
                out.extend_from_slice(&re.to_le_bytes());
                out.extend_from_slice(&im.to_le_bytes());
            }
            out
        }
    }
}

pub fn grid_from_bytes(bytes: &[u8]) -> Result<BzGrid, FormatError> {
    let split = bytes
        .iter()
        .position(|&b| b == b'\n')
        .unwrap_or(bytes.len());
    let header: GridHeader = match serde_json::from_slice(&bytes[..split]) {
        Ok(h) => h,
        Err(_) => serde_json::from_slice(bytes)?,
    };
    if header.d == 0 || header.sizes.len() != header.d || header.n == 0 {
        return Err(FormatError::Layout(
            "header needs d >= 1, n >= 1 and d sizes".into(),
        ));
    }
    let periods = header
        .periods
        .clone()
        .unwrap_or_else(|| vec![2.0 * std::f64::consts::PI; header.d]);
    if periods.len() != header.d {
        return Err(FormatError::Layout(format!(
            "{} periods for d = {}",
            periods.len(),
            header.d
        )));
    }
    let nodes: usize = header.sizes.iter().map(|n| n + 1).product();
    let expected = nodes * (header.n + 1);
    let pairs = match header.payload {
        Payload::Json => header
            .amplitudes
            .ok_or_else(|| FormatError::Layout("missing amplitudes".into()))?,
        Payload::Binary => {
            if header.amplitudes.is_some() {
                return Err(FormatError::Layout(
                    "binary payload with inline amplitudes".into(),
                ));
            }
            let body = bytes.get(split + 1..).unwrap_or(&[]);
            if body.len() % 16 != 0 {
                return Err(FormatError::Truncated {
                    expected,
                    found: body.len() / 16,
                });
            }
            body.chunks_exact(16)
                .map(|c| {
                    let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
                    let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
                    [re, im]
                })
                .collect()
        }
    };
    if pairs.len() != expected {
        return Err(FormatError::Truncated {
            expected,
            found: pairs.len(),
        });
    }
    let states = pairs
        .chunks_exact(header.n + 1)
        .enumerate()
        .map(|(index, c)| {
            StateVector::new(c.iter().map(|[re, im]| Complex64::new(*re, *im)).collect()).map_err(
                |e| match e {
                    bargmann_core::Error::NormalizationViolation { norm, .. } => {
                        bargmann_core::Error::NormalizationViolation { index, norm }
                    }
                    e => e,
                },
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BzGrid::from_closed(
        &header.sizes,
        &periods,
        header.band_index,
        states,
    )?)
}

pub fn load_bloch_grid(path: &Path) -> Result<BzGrid, FormatError> {
    grid_from_bytes(&read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use bargmann_core::models::veronese;

    #[test]
    fn grid_round_trip_both_payloads() {
        let g = BzGrid::sample(&veronese::veronese(2, 1), &[4, 3]).unwrap();
        for payload in [Payload::Json, Payload::Binary] {
            let back = grid_from_bytes(&grid_to_bytes(&g, payload)).unwrap();
            assert_eq!(back, g);
        }
    }

    #[test]
    fn truncated_binary_is_rejected() {
        let g = BzGrid::sample(&veronese::veronese(1, 1), &[3, 3]).unwrap();
        let bytes = grid_to_bytes(&g, Payload::Binary);
        let cut = &bytes[..bytes.len() - 16];
        assert!(matches!(
            grid_from_bytes(cut),
            Err(FormatError::Truncated { .. })
        ));
        assert!(matches!(
            grid_from_bytes(&bytes[..bytes.len() - 5]),
            Err(FormatError::Truncated { .. })
        ));
    }

    #[test]
    fn unnormalized_state_is_rejected() {
        let g = BzGrid::sample(&veronese::veronese(1, 1), &[3, 3]).unwrap();
        let text = String::from_utf8(grid_to_bytes(&g, Payload::Json)).unwrap();
        let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        doc["amplitudes"][0][0] = serde_json::json!(2.0);
        let err = grid_from_bytes(doc.to_string().as_bytes()).unwrap_err();
        assert!(
            matches!(
                err,
                FormatError::Contract(bargmann_core::Error::NormalizationViolation { .. })
            ),
            "{err}"
        );
    }

    #[test]
    fn invariant_json_round_trip() {
        let fam = bargmann_core::models::spin_half::family();
        let pts = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.3, -0.7]];
        let set = InvariantSet::from_family(&fam, &pts, (0..4).map(|i| format!("p{i}")).collect())
            .unwrap();
        let back = invariants_from_json(&invariants_to_json(&set)).unwrap();
        assert_eq!(back, set);
        assert!(invariants_from_json("{\"labels\": [\"a\"]}").is_err());
    }
}
