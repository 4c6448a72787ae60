//! JSON instance files: schema, validation and conversion into solver inputs.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::VectorSet;
use crate::matroids::{IndependenceOracle, Matroid, MatroidSpec};

pub const SCHEMA_VERSION: u32 = 1;

/// On-disk instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub schema_version: u32,
    pub dimension: usize,
    /// One row per ground element.
    pub vectors: Vec<Vec<f64>>,
    pub matroid: MatroidFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_basis: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MatroidFile {
    Partition {
        blocks: Vec<Vec<usize>>,
    },
    Uniform {
        rank: usize,
    },
    Graphic {
        vertices: usize,
        edges: Vec<[usize; 2]>,
    },
    Linear {
        /// Row count of the representation matrix.
        dimension: usize,
        /// One column per ground element.
        columns: Vec<Vec<f64>>,
    },
}

/// Validated solver input.
#[derive(Debug, Clone)]
pub struct Instance {
    pub vectors: VectorSet,
    pub matroid: Matroid,
    pub start_basis: Option<Vec<usize>>,
}

impl Instance {
    pub fn rank(&self) -> usize {
        self.matroid.rank()
    }

    pub fn dim(&self) -> usize {
        self.vectors.dim()
    }

    pub fn to_file(&self) -> InstanceFile {
        let matroid = match self.matroid.spec() {
            MatroidSpec::Partition { blocks } => MatroidFile::Partition {
                blocks: blocks.clone(),
            },
            MatroidSpec::Uniform { rank, .. } => MatroidFile::Uniform { rank: *rank },
            MatroidSpec::Graphic { vertices, edges } => MatroidFile::Graphic {
                vertices: *vertices,
                edges: edges.iter().map(|&(a, b)| [a, b]).collect(),
            },
            MatroidSpec::Linear { representation } => MatroidFile::Linear {
                dimension: representation.dim(),
                columns: representation.columns().to_vec(),
            },
        };
        InstanceFile {
            schema_version: SCHEMA_VERSION,
            dimension: self.vectors.dim(),
            vectors: self.vectors.columns().to_vec(),
            matroid,
            start_basis: self.start_basis.clone(),
        }
    }
}

/// Outcome of schema and invariant checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub ok: bool,
    pub rank: Option<usize>,
    pub violations: Vec<String>,
}

impl Diagnostics {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("diagnostics serialize");
        s.push('\n');
        s
    }
}

impl InstanceFile {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance serializes");
        s.push('\n');
        s
    }

    fn matroid_spec(&self) -> std::result::Result<MatroidSpec, String> {
        let n = self.vectors.len();
        Ok(match &self.matroid {
            MatroidFile::Partition { blocks } => MatroidSpec::Partition {
                blocks: blocks.clone(),
            },
            MatroidFile::Uniform { rank } => MatroidSpec::Uniform { size: n, rank: *rank },
            MatroidFile::Graphic { vertices, edges } => {
                if edges.len() != n {
                    return Err(format!(
                        "graphic matroid has {} edges but there are {n} vectors",
                        edges.len()
                    ));
                }
                MatroidSpec::Graphic {
                    vertices: *vertices,
                    edges: edges.iter().map(|e| (e[0], e[1])).collect(),
                }
            }
            MatroidFile::Linear { dimension, columns } => {
                if columns.len() != n {
                    return Err(format!(
                        "linear matroid has {} columns but there are {n} vectors",
                        columns.len()
                    ));
                }
                let representation = VectorSet::new(*dimension, columns.clone())
                    .map_err(|e| format!("linear representation: {e}"))?;
                MatroidSpec::Linear { representation }
            }
        })
    }

    /// Schema and invariant checks, without solving.
    pub fn validate(&self) -> Diagnostics {
        let mut violations = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            violations.push(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if let Err(e) = VectorSet::new(self.dimension, self.vectors.clone()) {
            violations.push(format!("vectors: {e}"));
        }
        let mut rank = None;
        match self.matroid_spec() {
            Err(msg) => violations.push(msg),
            Ok(spec) => match Matroid::new(spec) {
                Err(e) => violations.push(e.to_string()),
                Ok(m) => {
                    if m.ground_size() != self.vectors.len() {
                        violations.push(format!(
                            "matroid ground set has {} elements but there are {} vectors",
                            m.ground_size(),
                            self.vectors.len()
                        ));
                    }
                    if m.rank() > self.dimension {
                        violations.push(format!(
                            "matroid rank {} exceeds dimension {}",
                            m.rank(),
                            self.dimension
                        ));
                    }
                    if m.rank() == 0 {
                        violations.push("matroid rank is zero".to_string());
                    }
                    if let Some(start) = &self.start_basis {
                        let distinct: BTreeSet<_> = start.iter().collect();
                        if distinct.len() != start.len() {
                            violations.push("start_basis has repeated indices".into());
                        } else if start.iter().any(|&i| i >= self.vectors.len()) {
                            violations.push("start_basis index out of range".into());
                        } else if start.len() != m.rank() {
                            violations.push(format!(
                                "start_basis has {} elements, matroid rank is {}",
                                start.len(),
                                m.rank()
                            ));
                        } else if !m.is_independent(start).unwrap_or(false) {
                            violations.push("start_basis is not independent in the matroid".into());
                        }
                    }
                    rank = Some(m.rank());
                }
            },
        }
        Diagnostics {
            ok: violations.is_empty(),
            rank,
            violations,
        }
    }

    pub fn into_instance(self) -> Result<Instance> {
        let diag = self.validate();
        if !diag.ok {
            return Err(Error::InvalidInstance(diag.violations.join("; ")));
        }
        let spec = self.matroid_spec().map_err(Error::InvalidInstance)?;
        Ok(Instance {
            vectors: VectorSet::new(self.dimension, self.vectors)?,
            matroid: Matroid::new(spec)?,
            start_basis: self.start_basis,
        })
    }
}

/// Bit length of the canonical serialized instance.
pub fn encoding_bits(vs: &VectorSet, m: &Matroid) -> usize {
    let inst = Instance {
        vectors: vs.clone(),
        matroid: m.clone(),
        start_basis: None,
    };
    let compact = serde_json::to_string(&inst.to_file()).expect("instance serializes");
    8 * compact.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    const THREE: &str = r#"{
        "schema_version": 1,
        "dimension": 2,
        "vectors": [[1, 0], [3, 0], [0, 1]],
        "matroid": {"kind": "partition", "blocks": [[0, 1], [2]]}
    }"#;

    #[test]
    fn parses_and_validates() {
        let f = InstanceFile::from_json(THREE).unwrap();
        let d = f.validate();
        assert!(d.ok, "{:?}", d.violations);
        assert_eq!(d.rank, Some(2));
        let inst = f.into_instance().unwrap();
        assert_eq!(inst.vectors.len(), 3);
    }

    #[test]
    fn named_violations() {
        let mut f = InstanceFile::from_json(THREE).unwrap();
        f.matroid = MatroidFile::Partition {
            blocks: vec![vec![0, 1], vec![1, 2]],
        };
        let d = f.validate();
        assert!(!d.ok);
        assert!(d.violations[0].contains("overlapping partition blocks"));

        let mut f = InstanceFile::from_json(THREE).unwrap();
        f.matroid = MatroidFile::Uniform { rank: 3 };
        let d = f.validate();
        assert!(d.violations.iter().any(|v| v.contains("exceeds dimension")));

        let mut f = InstanceFile::from_json(THREE).unwrap();
        f.vectors[1] = vec![1.0];
        assert!(!f.validate().ok);
    }

    #[test]
    fn start_basis_checks() {
        let mut f = InstanceFile::from_json(THREE).unwrap();
        f.start_basis = Some(vec![0, 1]);
        let d = f.validate();
        assert!(d.violations.iter().any(|v| v.contains("not independent")));
        f.start_basis = Some(vec![0, 2]);
        assert!(f.validate().ok);
    }

    #[test]
    fn rejects_unknown_fields_and_kinds() {
        assert!(InstanceFile::from_json(r#"{"schema_version":1,"dimension":1,"vectors":[[1]],"matroid":{"kind":"gammoid"}}"#).is_err());
        assert!(InstanceFile::from_json("{ not json").is_err());
    }

    #[test]
    fn file_round_trip() {
        let f = InstanceFile::from_json(THREE).unwrap();
        let back = f.clone().into_instance().unwrap().to_file();
        assert_eq!(back, f);
        assert_eq!(InstanceFile::from_json(&f.to_json()).unwrap(), f);
    }
}
