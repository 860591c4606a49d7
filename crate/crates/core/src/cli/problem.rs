//! Problem files: TOML documents tagged `format = "nijenhuis-problem/1"`.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dsl::{Coords, Expr};
use crate::error::{Error, Result};
use crate::fibration::SplitFibration;
use crate::geometry::{NOperatorField, StructureKind, VectorField};
use crate::jets::DiffConfig;
use crate::liealg::{HomogeneousDatum, LieAlgebra};
use crate::sampling::Sampler;

pub const FORMAT_TAG: &str = "nijenhuis-problem/1";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub format: Option<String>,
    pub name: Option<String>,
    #[serde(default)]
    pub description: Option<String>,
    pub chart: Option<ChartSpec>,
    #[serde(default)]
    pub operators: BTreeMap<String, OperatorSpec>,
    #[serde(default)]
    pub fields: BTreeMap<String, FieldSpec>,
    pub fibration: Option<FibrationSpec>,
    pub algebra: Option<AlgebraSpec>,
    #[serde(default)]
    pub sampler: SamplerSpec,
    #[serde(default)]
    pub tolerances: ToleranceSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub coords: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Number(f64),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub matrix: Vec<Vec<Entry>>,
    /// Declared algebraic type: `almost_complex`, `almost_product` or
    /// `almost_tangent`.
    pub structure: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub components: Vec<Entry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FibrationSpec {
    pub base_dim: usize,
    pub anchor: Option<Vec<f64>>,
    #[serde(default)]
    pub check_complex: bool,
    /// Operators to test; all declared operators when absent.
    pub operators: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraSpec {
    pub catalogue: Option<String>,
    /// `structure_constants[k][i][j] = c^k_ij`.
    pub structure_constants: Option<Vec<Vec<Vec<f64>>>>,
    pub operator: Vec<Vec<f64>>,
    #[serde(default)]
    pub k_basis: Vec<Vec<f64>>,
    #[serde(default)]
    pub ad_samples: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    pub check_complex: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Bound {
    Scalar(f64),
    PerAxis(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerSpec {
    pub lo: Bound,
    pub hi: Bound,
    pub count: usize,
    pub seed: u64,
}

impl Default for SamplerSpec {
    fn default() -> Self {
        Self {
            lo: Bound::Scalar(-1.0),
            hi: Bound::Scalar(1.0),
            count: Sampler::DEFAULT_COUNT,
            seed: Sampler::DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceSpec {
    pub torsion_tol: f64,
    pub fd_step: f64,
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        Self {
            torsion_tol: 1e-9,
            fd_step: DiffConfig::default().fd_step,
        }
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Operator {
    pub field: NOperatorField,
    pub structure: Option<StructureKind>,
}

#[derive(Debug, Clone)]
pub struct Fibration {
    pub split: SplitFibration,
    pub check_complex: bool,
    pub operators: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Algebra {
    pub datum: HomogeneousDatum,
    pub operator: DMatrix<f64>,
    pub check_complex: bool,
}

/// Tolerances and sampling actually in force, echoed in every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub torsion_tol: f64,
    pub fd_step: f64,
    pub seed: u64,
    pub samples: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// A validated problem with every name resolved.
#[derive(Debug, Clone)]
pub struct Problem {
    pub name: String,
    pub coords: Option<Arc<Coords>>,
    pub operators: BTreeMap<String, Operator>,
    pub fields: BTreeMap<String, VectorField>,
    pub fibration: Option<Fibration>,
    pub algebra: Option<Algebra>,
    pub sampler: Option<Sampler>,
    pub settings: Settings,
}

fn problem_err(msg: impl Into<String>) -> Error {
    Error::Problem(msg.into())
}

fn in_context(ctx: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| problem_err(format!("{ctx}: {e}"))
}

fn entry_expr(coords: &Coords, e: &Entry) -> Result<Expr> {
    match e {
        Entry::Number(v) if v.is_finite() => Ok(Expr::Const(*v)),
        Entry::Number(v) => Err(problem_err(format!("non-finite constant {v}"))),
        Entry::Text(s) => coords.parse(s),
    }
}

fn broadcast(b: &Bound, dim: usize, what: &str) -> Result<Vec<f64>> {
    match b {
        Bound::Scalar(v) => Ok(vec![*v; dim]),
        Bound::PerAxis(v) if v.len() == dim => Ok(v.clone()),
        Bound::PerAxis(v) => Err(problem_err(format!(
            "sampler.{what} has {} entries for a {dim}-dimensional chart",
            v.len()
        ))),
    }
}

fn dense(rows: &[Vec<f64>], n: usize, ctx: &str) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(problem_err(format!("{ctx} must be a {n}x{n} matrix")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(problem_err(format!("{ctx} has a non-finite entry")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

impl Problem {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| problem_err(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text, overrides)
    }

    pub fn from_toml(text: &str, overrides: &Overrides) -> Result<Self> {
        let file: ProblemFile =
            toml::from_str(text).map_err(|e| problem_err(e.to_string().trim_end().to_string()))?;
        Self::resolve(file, overrides)
    }

    pub fn resolve(file: ProblemFile, overrides: &Overrides) -> Result<Self> {
        match file.format.as_deref() {
            Some(FORMAT_TAG) => {}
            Some(other) => {
                return Err(problem_err(format!(
                    "unsupported format '{other}', expected '{FORMAT_TAG}'"
                )))
            }
            None => {
                return Err(problem_err(format!(
                    "missing format tag, expected format = \"{FORMAT_TAG}\""
                )))
            }
        }
        let name = file
            .name
            .ok_or_else(|| problem_err("missing problem name"))?;

        let torsion_tol = overrides.tol.unwrap_or(file.tolerances.torsion_tol);
        if !(torsion_tol.is_finite() && torsion_tol >= 0.0) {
            return Err(problem_err(format!(
                "torsion_tol must be finite and non-negative, got {torsion_tol}"
            )));
        }
        let fd_step = file.tolerances.fd_step;
        DiffConfig::new(fd_step, DiffConfig::default().fd_step_second)
            .map_err(in_context("tolerances"))?;

        let coords = match &file.chart {
            Some(c) => Some(Coords::new(c.coords.iter().cloned()).map_err(in_context("chart"))?),
            None => None,
        };
        let need_chart =
            !file.operators.is_empty() || !file.fields.is_empty() || file.fibration.is_some();
        if need_chart && coords.is_none() {
            return Err(problem_err(
                "operators, fields and fibrations need a [chart] section",
            ));
        }

        let mut operators = BTreeMap::new();
        for (key, spec) in &file.operators {
            let c = coords.as_ref().expect("checked above");
            let ctx = format!("operators.{key}");
            let n = c.dim();
            if spec.matrix.len() != n || spec.matrix.iter().any(|r| r.len() != n) {
                return Err(problem_err(format!("{ctx}: matrix must be {n}x{n}")));
            }
            let mut entries = Vec::with_capacity(n);
            for (i, row) in spec.matrix.iter().enumerate() {
                let mut out = Vec::with_capacity(n);
                for (j, e) in row.iter().enumerate() {
                    out.push(
                        entry_expr(c, e).map_err(in_context(&format!("{ctx}.matrix[{i}][{j}]")))?,
                    );
                }
                entries.push(out);
            }
            let field = NOperatorField::new(c.clone(), entries).map_err(in_context(&ctx))?;
            let structure = match &spec.structure {
                Some(s) => Some(StructureKind::from_name(s).ok_or_else(|| {
                    problem_err(format!(
                        "{ctx}: unknown structure '{s}' (known: almost_complex, almost_product, almost_tangent)"
                    ))
                })?),
                None => None,
            };
            operators.insert(key.clone(), Operator { field, structure });
        }

        let mut fields = BTreeMap::new();
        for (key, spec) in &file.fields {
            let c = coords.as_ref().expect("checked above");
            let ctx = format!("fields.{key}");
            if spec.components.len() != c.dim() {
                return Err(problem_err(format!(
                    "{ctx}: expected {} components",
                    c.dim()
                )));
            }
            let comps = spec
                .components
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    entry_expr(c, e).map_err(in_context(&format!("{ctx}.components[{i}]")))
                })
                .collect::<Result<Vec<_>>>()?;
            fields.insert(
                key.clone(),
                VectorField::new(c.clone(), comps).map_err(in_context(&ctx))?,
            );
        }

        let fibration = match &file.fibration {
            Some(f) => {
                let n = coords.as_ref().expect("checked above").dim();
                if f.base_dim == 0 || f.base_dim >= n {
                    return Err(problem_err(format!(
                        "fibration.base_dim must lie in 1..{n}, got {}",
                        f.base_dim
                    )));
                }
                let anchor = f
                    .anchor
                    .clone()
                    .unwrap_or_else(|| vec![0.0; n - f.base_dim]);
                if anchor.len() != n - f.base_dim {
                    return Err(problem_err(format!(
                        "fibration.anchor needs {} entries, got {}",
                        n - f.base_dim,
                        anchor.len()
                    )));
                }
                let split = SplitFibration::with_anchor(f.base_dim, anchor)
                    .map_err(in_context("fibration"))?;
                let names = f
                    .operators
                    .clone()
                    .unwrap_or_else(|| operators.keys().cloned().collect());
                if let Some(missing) = names.iter().find(|n| !operators.contains_key(*n)) {
                    return Err(problem_err(format!(
                        "fibration.operators: unknown operator '{missing}'"
                    )));
                }
                Some(Fibration {
                    split,
                    check_complex: f.check_complex,
                    operators: names,
                })
            }
            None => None,
        };

        let algebra = match &file.algebra {
            Some(a) => Some(resolve_algebra(a)?),
            None => None,
        };

        let count = overrides.samples.unwrap_or(file.sampler.count);
        let seed = overrides.seed.unwrap_or(file.sampler.seed);
        let dim = coords.as_ref().map_or(0, |c| c.dim());
        let lo = broadcast(&file.sampler.lo, dim, "lo")?;
        let hi = broadcast(&file.sampler.hi, dim, "hi")?;
        let sampler = match &coords {
            Some(_) => Some(
                Sampler::new(lo.clone(), hi.clone(), count, seed).map_err(in_context("sampler"))?,
            ),
            None if count == 0 => return Err(problem_err("sampler count must be at least 1")),
            None => None,
        };

        Ok(Problem {
            name,
            coords,
            operators,
            fields,
            fibration,
            algebra,
            sampler,
            settings: Settings {
                torsion_tol,
                fd_step,
                seed,
                samples: count,
                lo,
                hi,
            },
        })
    }

    pub fn operator(&self, name: Option<&str>) -> Result<(&str, &Operator)> {
        match name {
            Some(n) => self
                .operators
                .get_key_value(n)
                .map(|(k, v)| (k.as_str(), v))
                .ok_or_else(|| problem_err(format!("unknown operator '{n}'"))),
            None if self.operators.len() == 1 => {
                let (k, v) = self.operators.iter().next().expect("one operator");
                Ok((k.as_str(), v))
            }
            None if self.operators.is_empty() => Err(problem_err("problem declares no operators")),
            None => Err(problem_err(format!(
                "problem declares several operators ({}); choose one with --operator",
                self.operators
                    .keys()
                    .cloned()
                    .collect::<Vec<_>>()
                    .join(", ")
            ))),
        }
    }

    /// The chart sampler; present whenever a chart is declared.
    pub fn sampler(&self) -> Result<&Sampler> {
        self.sampler
            .as_ref()
            .ok_or_else(|| problem_err("problem declares no chart"))
    }
}

fn resolve_algebra(a: &AlgebraSpec) -> Result<Algebra> {
    let ctx = in_context("algebra");
    let alg = match (&a.catalogue, &a.structure_constants) {
        (Some(name), None) => LieAlgebra::catalogue(name).map_err(&ctx)?,
        (None, Some(c)) => LieAlgebra::new("custom", c).map_err(&ctx)?,
        (Some(_), Some(_)) => {
            return Err(problem_err(
                "algebra: give either catalogue or structure_constants, not both",
            ))
        }
        (None, None) => {
            return Err(problem_err(
                "algebra: need catalogue or structure_constants",
            ))
        }
    };
    let n = alg.dim();
    let operator = dense(&a.operator, n, "algebra.operator")?;
    let mut k_basis = Vec::with_capacity(a.k_basis.len());
    for (i, v) in a.k_basis.iter().enumerate() {
        if v.len() != n || v.iter().any(|x| !x.is_finite()) {
            return Err(problem_err(format!(
                "algebra.k_basis[{i}] must be {n} finite numbers"
            )));
        }
        k_basis.push(DVector::from_column_slice(v));
    }
    let ad_samples = a
        .ad_samples
        .iter()
        .enumerate()
        .map(|(i, m)| dense(m, n, &format!("algebra.ad_samples[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    let datum = HomogeneousDatum::new(alg, k_basis, ad_samples).map_err(&ctx)?;
    Ok(Algebra {
        datum,
        operator,
        check_complex: a.check_complex,
    })
}
