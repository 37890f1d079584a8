//! Gains file: controller gains, the certificate that backs them and a
//! summary of the synthesis run.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{matrix, rows_of, Rows};
use crate::error::{Error, Result};
use crate::lmi::Certificate;
use crate::model::ControllerGains;
use crate::synthesis::{SynthesisResult, TraceRow};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsFile {
    #[serde(rename = "K1")]
    pub k1: Rows,
    #[serde(rename = "K2")]
    pub k2: Rows,
    /// Orthonormal-basis coordinates.
    #[serde(rename = "K3")]
    pub k3: Rows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthesis: Option<RunSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateFile {
    #[serde(rename = "P")]
    pub p: Rows,
    #[serde(rename = "Q")]
    pub q: Rows,
    #[serde(rename = "R")]
    pub r: Rows,
    #[serde(rename = "S")]
    pub s: Rows,
    #[serde(rename = "U")]
    pub u: Rows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSummary {
    pub gamma0: Option<f64>,
    pub gamma1: Option<f64>,
    pub stop: String,
    pub post_check_status: String,
    pub post_check_gamma: Option<f64>,
    pub trace: Vec<TraceEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceEntry {
    pub iteration: usize,
    pub gamma: f64,
    pub status: String,
    pub accepted: bool,
    pub rel_change: f64,
}

impl From<&TraceRow> for TraceEntry {
    fn from(r: &TraceRow) -> Self {
        TraceEntry {
            iteration: r.iteration,
            gamma: finite_or_zero(r.gamma),
            status: r.status.clone(),
            accepted: r.accepted,
            rel_change: finite_or_zero(r.rel_change),
        }
    }
}

/// JSON has no representation for NaN or infinity.
fn finite_or_zero(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

impl CertificateFile {
    pub fn from_certificate(c: &Certificate) -> Self {
        CertificateFile {
            p: rows_of(&c.p),
            q: rows_of(&c.q),
            r: rows_of(&c.r),
            s: rows_of(&c.s),
            u: rows_of(&c.u),
        }
    }

    pub fn certificate(&self) -> Result<Certificate> {
        Ok(Certificate {
            p: matrix("certificate.P", &self.p)?,
            q: matrix("certificate.Q", &self.q)?,
            r: matrix("certificate.R", &self.r)?,
            s: matrix("certificate.S", &self.s)?,
            u: matrix("certificate.U", &self.u)?,
        })
    }
}

impl GainsFile {
    pub fn from_gains(g: &ControllerGains, gamma: Option<f64>, cert: Option<&Certificate>) -> Self {
        GainsFile {
            k1: rows_of(&g.k1),
            k2: rows_of(&g.k2),
            k3: rows_of(&g.k3),
            gamma,
            certificate: cert.map(CertificateFile::from_certificate),
            synthesis: None,
        }
    }

    pub fn from_result(res: &SynthesisResult) -> Self {
        let mut f = GainsFile::from_gains(&res.gains, res.gamma_final, Some(&res.certificate));
        f.synthesis = Some(RunSummary {
            gamma0: res.init.gamma0,
            gamma1: res.init.gamma1,
            stop: res.stop.to_string(),
            post_check_status: res.post_check.status.to_string(),
            post_check_gamma: res.post_check.gamma,
            trace: res.trace.iter().map(TraceEntry::from).collect(),
        });
        f
    }

    pub fn gains(&self) -> Result<ControllerGains> {
        Ok(ControllerGains {
            k1: matrix("K1", &self.k1)?,
            k2: matrix("K2", &self.k2)?,
            k3: matrix("K3", &self.k3)?,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("<file>", format!("cannot read {}: {e}", path.display())))?;
        GainsFile::parse(&text)
    }
}
