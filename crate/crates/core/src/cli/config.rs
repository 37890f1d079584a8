//! JSON run configuration.
//!
//! Matrices are nested row arrays. Shape problems are reported with the JSON
//! path of the offending field, e.g. `plant.C1`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::error::{Error, Result};
use crate::lmi::SupplyEmbedding;
use crate::matfun::{Matrix, Vector};
use crate::model::{supply_from_template, PlantModel, SupplyKind, SupplyRate};
use crate::solver::SolverOptions;
use crate::synthesis::{AlgorithmConfig, LoopObjective};
use crate::verify::DEFAULT_N_LIST;

pub type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub plant: PlantBlock,
    pub basis: BasisBlock,
    pub supply: SupplyBlock,
    #[serde(default)]
    pub algorithm: AlgorithmBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default)]
    pub verify: VerifyBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantBlock {
    #[serde(rename = "A")]
    pub a: Rows,
    #[serde(rename = "B")]
    pub b: Rows,
    #[serde(rename = "D1")]
    pub d1: Rows,
    #[serde(rename = "C1")]
    pub c1: Rows,
    /// Zero when omitted.
    #[serde(rename = "C2", default, skip_serializing_if = "Option::is_none")]
    pub c2: Option<Rows>,
    /// Plain-basis coefficients, `m × dν`; zero when omitted.
    #[serde(rename = "C3bar", default, skip_serializing_if = "Option::is_none")]
    pub c3bar: Option<Rows>,
    #[serde(rename = "D2", default, skip_serializing_if = "Option::is_none")]
    pub d2: Option<Rows>,
    #[serde(rename = "D3", default, skip_serializing_if = "Option::is_none")]
    pub d3: Option<Rows>,
    pub r: f64,
}

/// Either `Pi` with `f0`, or `rates` for `f_i(τ) = e^{λ_i τ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisBlock {
    #[serde(rename = "Pi", default, skip_serializing_if = "Option::is_none")]
    pub pi: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Template {
    L2Gain,
    Passivity,
    Sector,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupplyBlock {
    pub template: Template,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(rename = "J1", default, skip_serializing_if = "Option::is_none")]
    pub j1: Option<Rows>,
    #[serde(rename = "Jtilde", default, skip_serializing_if = "Option::is_none")]
    pub jtilde: Option<Rows>,
    #[serde(rename = "J2", default, skip_serializing_if = "Option::is_none")]
    pub j2: Option<Rows>,
    #[serde(rename = "J3", default, skip_serializing_if = "Option::is_none")]
    pub j3: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_role: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveName {
    #[default]
    GammaPlusProximal,
    ProximalOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingName {
    #[default]
    Derived,
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlgorithmBlock {
    pub rho1: f64,
    pub rho2: f64,
    pub eps: f64,
    pub max_iter: usize,
    pub max_rejections: usize,
    #[serde(rename = "X", skip_serializing_if = "Option::is_none")]
    pub x: Option<Rows>,
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub k: Option<Rows>,
    pub objective: ObjectiveName,
    pub embedding: EmbeddingName,
}

impl Default for AlgorithmBlock {
    fn default() -> Self {
        let d = AlgorithmConfig::default();
        AlgorithmBlock {
            rho1: d.rho1,
            rho2: d.rho2,
            eps: d.eps,
            max_iter: d.max_iter,
            max_rejections: d.max_rejections,
            x: None,
            k: None,
            objective: ObjectiveName::default(),
            embedding: EmbeddingName::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverBlock {
    pub tol: f64,
    pub iter_cap: usize,
}

impl Default for SolverBlock {
    fn default() -> Self {
        let d = SolverOptions::default();
        SolverBlock {
            tol: d.tol_feas,
            iter_cap: d.max_iter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyBlock {
    pub n_list: Vec<usize>,
    /// Simulation step; `r/100` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    /// Dissipation horizon in multiples of `r`.
    pub dissipation_horizon: f64,
    /// Frequency of the sinusoidal disturbance of the dissipation run.
    pub dissipation_omega: f64,
    /// L2 horizon in multiples of `r`.
    pub l2_horizon: f64,
    /// Allowed ratio of empirical gain to certified γ.
    pub l2_slack: f64,
}

impl Default for VerifyBlock {
    fn default() -> Self {
        VerifyBlock {
            n_list: DEFAULT_N_LIST.to_vec(),
            step: None,
            dissipation_horizon: 20.0,
            dissipation_omega: 1.0,
            l2_horizon: 60.0,
            l2_slack: 1.05,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gains: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<String>,
}

/// Everything the pipeline needs, checked for consistency.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub plant: PlantModel,
    pub spec: BasisSpec,
    pub supply: SupplyRate,
    pub algorithm: AlgorithmConfig,
    pub verify: VerifyBlock,
    pub output: OutputBlock,
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(path, e.into_inner().to_string())
    })
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config("<file>", format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn matrix(path: &str, rows: &Rows) -> Result<Matrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != ncols {
            return Err(Error::config(
                format!("{path}[{i}]"),
                format!("row has {} entries, expected {ncols}", row.len()),
            ));
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::config(format!("{path}[{i}][{j}]"), "entry is not finite"));
        }
    }
    Ok(Matrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn rows_of(m: &Matrix) -> Rows {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn need<'a>(name: &str, v: &'a Option<Rows>) -> Result<&'a Rows> {
    v.as_ref()
        .ok_or_else(|| Error::config(format!("supply.{name}"), "required by the custom template"))
}

fn shaped(path: &str, rows: Option<&Rows>, shape: (usize, usize)) -> Result<Matrix> {
    let m = match rows {
        Some(r) => matrix(path, r)?,
        None => return Ok(Matrix::zeros(shape.0, shape.1)),
    };
    // An empty array stands for a matrix with a zero dimension.
    if m.nrows() == 0 && (shape.0 == 0 || shape.1 == 0) {
        return Ok(Matrix::zeros(shape.0, shape.1));
    }
    if m.shape() != shape {
        return Err(Error::config(
            path,
            format!(
                "is {}x{}, expected {}x{}",
                m.nrows(),
                m.ncols(),
                shape.0,
                shape.1
            ),
        ));
    }
    Ok(m)
}

impl BasisBlock {
    pub fn spec(&self, r: f64) -> Result<BasisSpec> {
        let spec = match (&self.pi, &self.f0, &self.rates) {
            (None, None, Some(rates)) => {
                if rates.is_empty() {
                    return Err(Error::config("basis.rates", "needs at least one rate"));
                }
                BasisSpec::exponentials(rates, r)
            }
            (Some(pi), Some(f0), None) => {
                let pi_m = matrix("basis.Pi", pi)?;
                if !pi_m.is_square() || pi_m.nrows() == 0 {
                    return Err(Error::config("basis.Pi", "must be a non-empty square matrix"));
                }
                if f0.len() != pi_m.nrows() {
                    return Err(Error::config(
                        "basis.f0",
                        format!("has {} entries, expected {}", f0.len(), pi_m.nrows()),
                    ));
                }
                BasisSpec::new(pi_m, Vector::from_column_slice(f0), r)
            }
            _ => {
                return Err(Error::config(
                    "basis",
                    "give either `Pi` together with `f0`, or `rates`",
                ))
            }
        };
        spec.map_err(|e| Error::config("basis", e.to_string()))
    }
}

impl PlantBlock {
    pub fn model(&self, d: usize) -> Result<PlantModel> {
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::config("plant.r", format!("must be positive, got {}", self.r)));
        }
        let a = matrix("plant.A", &self.a)?;
        let n = a.nrows();
        if n == 0 || !a.is_square() {
            return Err(Error::config("plant.A", "must be a non-empty square matrix"));
        }
        let b = matrix("plant.B", &self.b)?;
        if b.nrows() != n || b.ncols() == 0 {
            return Err(Error::config(
                "plant.B",
                format!("is {}x{}, expected {n} rows and at least one column", b.nrows(), b.ncols()),
            ));
        }
        let p = b.ncols();
        let d1 = matrix("plant.D1", &self.d1)?;
        if d1.nrows() != n {
            return Err(Error::config(
                "plant.D1",
                format!("has {} rows, expected {n}", d1.nrows()),
            ));
        }
        let q = d1.ncols();
        let c1 = matrix("plant.C1", &self.c1)?;
        let nu = n + p;
        if c1.ncols() != nu || c1.nrows() == 0 {
            return Err(Error::config(
                "plant.C1",
                format!("is {}x{}, expected m x {nu}", c1.nrows(), c1.ncols()),
            ));
        }
        let m = c1.nrows();
        Ok(PlantModel {
            a,
            b,
            d1,
            c1,
            c2: shaped("plant.C2", self.c2.as_ref(), (m, nu))?,
            c3bar: shaped("plant.C3bar", self.c3bar.as_ref(), (m, d * nu))?,
            d2: shaped("plant.D2", self.d2.as_ref(), (p, q))?,
            d3: shaped("plant.D3", self.d3.as_ref(), (m, q))?,
            r: self.r,
        })
    }
}

impl SupplyBlock {
    pub fn rate(&self, m: usize, q: usize) -> Result<SupplyRate> {
        let kind = match self.template {
            Template::L2Gain => SupplyKind::L2Gain,
            Template::Passivity => SupplyKind::Passivity,
            Template::Sector => {
                let alpha = self
                    .alpha
                    .ok_or_else(|| Error::config("supply.alpha", "required by the sector template"))?;
                let beta = self
                    .beta
                    .ok_or_else(|| Error::config("supply.beta", "required by the sector template"))?;
                SupplyKind::Sector { alpha, beta }
            }
            Template::Custom => {
                let rate = SupplyRate {
                    j1: shaped("supply.J1", Some(need("J1", &self.j1)?), (m, m))?,
                    jtilde: shaped("supply.Jtilde", Some(need("Jtilde", &self.jtilde)?), (m, m))?,
                    j2: shaped("supply.J2", Some(need("J2", &self.j2)?), (m, q))?,
                    j3: shaped("supply.J3", Some(need("J3", &self.j3)?), (q, q))?,
                    gamma_role: self.gamma_role.unwrap_or(false),
                };
                rate.validate().map_err(|e| Error::config("supply", e.to_string()))?;
                return Ok(rate);
            }
        };
        supply_from_template(kind, m, q).map_err(|e| Error::config("supply.template", e.to_string()))
    }
}

impl RunConfig {
    pub fn resolve(&self) -> Result<Resolved> {
        let spec = self.basis.spec(self.plant.r)?;
        let plant = self.plant.model(spec.dim())?;
        let (n, p) = (plant.n(), plant.p());
        crate::model::validate_plant(&plant, &spec)
            .into_result()
            .map_err(|e| Error::config("plant", e.to_string()))?;
        let supply = self.supply.rate(plant.m(), plant.q())?;

        let alg = &self.algorithm;
        let x = alg
            .x
            .as_ref()
            .map(|x| shaped("algorithm.X", Some(x), (p, p)))
            .transpose()?;
        let k = alg
            .k
            .as_ref()
            .map(|k| shaped("algorithm.K", Some(k), (p, n)))
            .transpose()?;
        if !(self.solver.tol > 0.0) {
            return Err(Error::config("solver.tol", "must be positive"));
        }
        if self.solver.iter_cap == 0 {
            return Err(Error::config("solver.iter_cap", "must be positive"));
        }
        let algorithm = AlgorithmConfig {
            rho1: alg.rho1,
            rho2: alg.rho2,
            eps: alg.eps,
            max_iter: alg.max_iter,
            x,
            k,
            r: None,
            objective: match alg.objective {
                ObjectiveName::GammaPlusProximal => LoopObjective::GammaPlusProximal,
                ObjectiveName::ProximalOnly => LoopObjective::ProximalOnly,
            },
            embedding: match alg.embedding {
                EmbeddingName::Derived => SupplyEmbedding::Derived,
                EmbeddingName::Literal => SupplyEmbedding::Literal,
            },
            solver: SolverOptions {
                tol_feas: self.solver.tol,
                tol_gap: self.solver.tol,
                max_iter: self.solver.iter_cap,
                ..SolverOptions::default()
            },
            max_rejections: alg.max_rejections,
        };
        algorithm
            .validate()
            .map_err(|e| Error::config("algorithm", e.to_string()))?;

        let v = &self.verify;
        if v.n_list.is_empty() || v.n_list.iter().any(|&n| n < 5) {
            return Err(Error::config("verify.n_list", "needs sizes of at least 5"));
        }
        for (name, val) in [
            ("dissipation_horizon", v.dissipation_horizon),
            ("l2_horizon", v.l2_horizon),
            ("l2_slack", v.l2_slack),
            ("dissipation_omega", v.dissipation_omega),
        ] {
            if !(val > 0.0 && val.is_finite()) {
                return Err(Error::config(format!("verify.{name}"), "must be positive"));
            }
        }
        if v.dissipation_horizon < 2.0 {
            return Err(Error::config("verify.dissipation_horizon", "must cover at least two delays"));
        }
        if let Some(step) = v.step {
            if !(step > 0.0 && step <= plant.r / 10.0) {
                return Err(Error::config("verify.step", "must lie in (0, r/10]"));
            }
        }

        Ok(Resolved {
            plant,
            spec,
            supply,
            algorithm,
            verify: v.clone(),
            output: self.output.clone(),
        })
    }
}

impl Resolved {
    pub fn step(&self) -> f64 {
        self.verify.step.unwrap_or(self.plant.r / 100.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "plant": {"A": [[0.5]], "B": [[1.0]], "D1": [[1.0]], "C1": [[1.0, 3.0]], "r": 1.0},
        "basis": {"rates": [-0.5]},
        "supply": {"template": "l2_gain"}
    }"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        let res = cfg.resolve().unwrap();
        assert_eq!(res.plant.c2.shape(), (1, 2));
        assert_eq!(res.plant.c3bar.shape(), (1, 2));
        assert_eq!(res.plant.d2.shape(), (1, 1));
        assert_eq!(res.algorithm.max_iter, 100);
        assert!((res.step() - 0.01).abs() < 1e-15);
        assert!(res.supply.gamma_role);
    }

    #[test]
    fn type_errors_name_the_path() {
        let text = MINIMAL.replace(r#""r": 1.0"#, r#""r": "one""#);
        match parse_config(&text).unwrap_err() {
            Error::Config { path, .. } => assert_eq!(path, "plant.r"),
            e => panic!("{e}"),
        }
        let text = MINIMAL.replace(r#""template": "l2_gain""#, r#""template": "l2_gain", "gain": 2"#);
        assert!(matches!(parse_config(&text).unwrap_err(), Error::Config { .. }));
    }

    #[test]
    fn shape_errors_name_the_field() {
        let text = MINIMAL.replace(r#""C1": [[1.0, 3.0]]"#, r#""C1": [[1.0, 3.0]], "D3": [[1.0, 2.0]]"#);
        match parse_config(&text).unwrap().resolve().unwrap_err() {
            Error::Config { path, .. } => assert_eq!(path, "plant.D3"),
            e => panic!("{e}"),
        }
        let text = MINIMAL.replace(r#""A": [[0.5]]"#, r#""A": [[0.5, 1.0], [2.0]]"#);
        match parse_config(&text).unwrap().resolve().unwrap_err() {
            Error::Config { path, .. } => assert_eq!(path, "plant.A[1]"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn basis_needs_one_form() {
        let text = MINIMAL.replace(r#"{"rates": [-0.5]}"#, r#"{"rates": [-0.5], "Pi": [[1.0]], "f0": [1.0]}"#);
        match parse_config(&text).unwrap().resolve().unwrap_err() {
            Error::Config { path, .. } => assert_eq!(path, "basis"),
            e => panic!("{e}"),
        }
        let text = MINIMAL.replace(r#"{"rates": [-0.5]}"#, r#"{"Pi": [[-0.5]], "f0": [1.0]}"#);
        let res = parse_config(&text).unwrap().resolve().unwrap();
        assert_eq!(res.spec.dim(), 1);
    }

    #[test]
    fn sector_requires_bounds() {
        let text = MINIMAL
            .replace(r#""template": "l2_gain""#, r#""template": "sector", "alpha": 0.1"#);
        match parse_config(&text).unwrap().resolve().unwrap_err() {
            Error::Config { path, .. } => assert_eq!(path, "supply.beta"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn serialization_round_trips() {
        let cfg = parse_config(MINIMAL).unwrap();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(parse_config(&text).unwrap(), cfg);
    }
}
