//! JSON model files.
//!
//! ```json
//! {
//!   "schema": "ffgap-model",
//!   "version": 1,
//!   "axis_lengths": [3],
//!   "site_dims": [2, 2, 2],
//!   "boundary": ["open"],
//!   "terms": [
//!     { "support": [[1], [2]], "matrix": [[0.0, 0.0], ...], "projector": true }
//!   ]
//! }
//! ```
//!
//! `site_dims` holds one entry per site in row-major order, or a single entry
//! applied to every site. `matrix` lists the local matrix row-major as
//! `[re, im]` pairs. Unknown keys are rejected.

use std::path::Path;

use faer::Mat;
use serde::{Deserialize, Serialize};

use super::{Boundary, LatticeHamiltonian, LocalTerm, SiteIndex};
use crate::{Error, Result, C64};

pub const SCHEMA: &str = "ffgap-model";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub schema: String,
    pub version: u32,
    pub axis_lengths: Vec<usize>,
    pub site_dims: Vec<usize>,
    pub boundary: Vec<Boundary>,
    pub terms: Vec<TermRecord>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermRecord {
    pub support: Vec<SiteIndex>,
    pub matrix: Vec<[f64; 2]>,
    pub projector: bool,
}

impl ModelFile {
    pub fn from_lattice(h: &LatticeHamiltonian) -> Self {
        let terms = h
            .terms()
            .iter()
            .map(|t| {
                let m = &t.matrix;
                let mut flat = Vec::with_capacity(m.nrows() * m.ncols());
                for i in 0..m.nrows() {
                    for j in 0..m.ncols() {
                        flat.push([m[(i, j)].re, m[(i, j)].im]);
                    }
                }
                TermRecord {
                    support: t.support.clone(),
                    matrix: flat,
                    projector: t.is_projector,
                }
            })
            .collect();
        Self {
            schema: SCHEMA.into(),
            version: VERSION,
            axis_lengths: h.axis_lengths().to_vec(),
            site_dims: h.site_dims().to_vec(),
            boundary: h.boundary().to_vec(),
            terms,
        }
    }

    pub fn into_lattice(self) -> Result<LatticeHamiltonian> {
        if self.schema != SCHEMA {
            return Err(Error::ModelFile(format!("unknown schema `{}`", self.schema)));
        }
        if self.version != VERSION {
            return Err(Error::ModelFile(format!(
                "unsupported version {} (expected {VERSION})",
                self.version
            )));
        }
        let sites: usize = self.axis_lengths.iter().product();
        let site_dims = match self.site_dims.len() {
            1 => vec![self.site_dims[0]; sites],
            _ => self.site_dims,
        };
        let mut h = LatticeHamiltonian::empty(self.axis_lengths, site_dims, self.boundary)?;
        for (k, rec) in self.terms.into_iter().enumerate() {
            let n = (rec.matrix.len() as f64).sqrt().round() as usize;
            if n * n != rec.matrix.len() {
                return Err(Error::ModelFile(format!(
                    "term {k}: {} matrix entries is not a square",
                    rec.matrix.len()
                )));
            }
            let m = Mat::from_fn(n, n, |i, j| {
                let [re, im] = rec.matrix[i * n + j];
                C64::new(re, im)
            });
            let term = LocalTerm::new(rec.support, m, rec.projector)
                .map_err(|e| Error::ModelFile(format!("term {k}: {e}")))?;
            h.push_term(term)
                .map_err(|e| Error::ModelFile(format!("term {k}: {e}")))?;
        }
        Ok(h)
    }
}

pub fn from_json(text: &str) -> Result<LatticeHamiltonian> {
    let file: ModelFile = serde_json::from_str(text)?;
    file.into_lattice()
}

pub fn to_json(h: &LatticeHamiltonian) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ModelFile::from_lattice(h))?)
}

pub fn load(path: &Path) -> Result<LatticeHamiltonian> {
    from_json(&std::fs::read_to_string(path)?)
}

pub fn save(h: &LatticeHamiltonian, path: &Path) -> Result<()> {
    std::fs::write(path, to_json(h)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const NON_HERMITIAN: &str = r#"{
        "schema": "ffgap-model", "version": 1,
        "axis_lengths": [1], "site_dims": [2], "boundary": ["open"],
        "terms": [{"support": [[1]], "matrix": [[0,0],[1,0],[0,0],[0,0]], "projector": false}]
    }"#;

    #[test]
    fn non_hermitian_rejected() {
        let err = from_json(NON_HERMITIAN).unwrap_err();
        assert!(err.to_string().contains("not Hermitian"), "{err}");
    }

    #[test]
    fn unknown_key_rejected() {
        let text = NON_HERMITIAN.replace("\"version\": 1,", "\"version\": 1, \"extra\": 0,");
        assert!(matches!(from_json(&text), Err(Error::Json(_))));
    }

    #[test]
    fn roundtrip() {
        let text = r#"{
            "schema": "ffgap-model", "version": 1,
            "axis_lengths": [2], "site_dims": [2], "boundary": ["open"],
            "terms": [{"support": [[2]], "matrix": [[1,0],[0,0],[0,0],[0,0]], "projector": true}]
        }"#;
        let h = from_json(text).unwrap();
        assert_eq!(h.site_dims(), &[2, 2]);
        let back = from_json(&to_json(&h).unwrap()).unwrap();
        assert_eq!(h, back);
    }
}
