//! Vector fields, N-operators and their Nijenhuis torsion on a chart.
//!
//! Torsion is available along two independent routes:
//!
//! * [`torsion_definition`] evaluates `[NX,NY] - N([NX,Y] + [X,NY] - N[X,Y])`
//!   from brackets of genuine fields, using 1-jets of `N`, `X`, `Y`;
//! * [`torsion_tensor`] evaluates the pointwise tensor
//!   `DN(u,Nv) - DN(v,Nu) - N(DN(u,v) - DN(v,u))` on two tangent vectors.
//!
//! Throughout, `DN(a, b)` denotes the derivative of `N` along `b` applied to
//! `a`; with that convention the two routes agree for every pair of fields.

mod fields;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

pub use fields::{FieldGerm, NOperatorField, OperatorGerm, VectorField};

use crate::error::{check_dim, Result};
use crate::sampling::Sampler;

fn vector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

fn check_fields(n: &NOperatorField, x: &VectorField, y: &VectorField) -> Result<()> {
    check_dim("operator/field dimension", n.dim(), x.dim())?;
    check_dim("operator/field dimension", n.dim(), y.dim())
}

/// `[X, Y]_p = D_pX(Y_p) - D_pY(X_p)`.
pub fn lie_bracket(x: &VectorField, y: &VectorField, p: &[f64]) -> Result<DVector<f64>> {
    check_dim("vector field dimension", x.dim(), y.dim())?;
    Ok(x.germ(p)?.bracket(&y.germ(p)?))
}

/// `N_p v`.
pub fn apply_n(n: &NOperatorField, v: &[f64], p: &[f64]) -> Result<DVector<f64>> {
    check_dim("operator/vector dimension", n.dim(), v.len())?;
    Ok(n.eval(p)? * vector(v))
}

/// Torsion of `N` at `p` on the tangent vectors `u`, `v`, from the tensor
/// formula.
pub fn torsion_tensor(n: &NOperatorField, u: &[f64], v: &[f64], p: &[f64]) -> Result<DVector<f64>> {
    check_dim("operator/vector dimension", n.dim(), u.len())?;
    check_dim("operator/vector dimension", n.dim(), v.len())?;
    Ok(torsion_from_germ(&n.germ(p)?, &vector(u), &vector(v)))
}

pub(crate) fn torsion_from_germ(
    g: &OperatorGerm,
    u: &DVector<f64>,
    v: &DVector<f64>,
) -> DVector<f64> {
    let nu = &g.value * u;
    let nv = &g.value * v;
    g.dn(u, &nv) - g.dn(v, &nu) - &g.value * (g.dn(u, v) - g.dn(v, u))
}

/// Torsion of `N` on the fields `X`, `Y` at `p`, from Lie brackets.
pub fn torsion_definition(
    n: &NOperatorField,
    x: &VectorField,
    y: &VectorField,
    p: &[f64],
) -> Result<DVector<f64>> {
    check_fields(n, x, y)?;
    let g = n.germ(p)?;
    let (xg, yg) = (x.germ(p)?, y.germ(p)?);
    let (nx, ny) = (g.apply_germ(&xg), g.apply_germ(&yg));
    let contracted = nx.bracket(&yg) + xg.bracket(&ny) - &g.value * xg.bracket(&yg);
    Ok(nx.bracket(&ny) - &g.value * contracted)
}

/// `[X, Y]_N = [NX, Y] + [X, NY] - N[X, Y]` at `p`.
pub fn contracted_bracket(
    n: &NOperatorField,
    x: &VectorField,
    y: &VectorField,
    p: &[f64],
) -> Result<DVector<f64>> {
    check_fields(n, x, y)?;
    let g = n.germ(p)?;
    let (xg, yg) = (x.germ(p)?, y.germ(p)?);
    Ok(
        g.apply_germ(&xg).bracket(&yg) + xg.bracket(&g.apply_germ(&yg))
            - &g.value * xg.bracket(&yg),
    )
}

/// The contracted bracket as a field, so it can be bracketed again.
pub fn contracted_bracket_field(
    n: &NOperatorField,
    x: &VectorField,
    y: &VectorField,
) -> Result<VectorField> {
    check_fields(n, x, y)?;
    let (nx, ny) = (n.apply_field(x)?, n.apply_field(y)?);
    nx.bracket_field(y)?
        .add(&x.bracket_field(&ny)?)?
        .sub(&n.apply_field(&x.bracket_field(y)?)?)
}

/// `T_N(X, Y)` as a field, built symbolically from brackets.
pub fn torsion_field(n: &NOperatorField, x: &VectorField, y: &VectorField) -> Result<VectorField> {
    let (nx, ny) = (n.apply_field(x)?, n.apply_field(y)?);
    nx.bracket_field(&ny)?
        .sub(&n.apply_field(&contracted_bracket_field(n, x, y)?)?)
}

/// Cyclic sum `[[X,Y]_N, Z]_N + [[Y,Z]_N, X]_N + [[Z,X]_N, Y]_N` at `p`.
pub fn jacobi_residual(
    n: &NOperatorField,
    x: &VectorField,
    y: &VectorField,
    z: &VectorField,
    p: &[f64],
) -> Result<DVector<f64>> {
    let mut total = DVector::zeros(n.dim());
    for (a, b, c) in [(x, y, z), (y, z, x), (z, x, y)] {
        let inner = contracted_bracket_field(n, a, b)?;
        total += contracted_bracket(n, &inner, c, p)?;
    }
    Ok(total)
}

/// `N([X,Y] - [NX,NY]) - [NX,Y] - [X,NY]` at `p`; vanishes exactly when the
/// bracket of `X + iNX` and `Y + iNY` is again of that form.
pub fn complex_involutivity_defect(
    n: &NOperatorField,
    x: &VectorField,
    y: &VectorField,
    p: &[f64],
) -> Result<DVector<f64>> {
    check_fields(n, x, y)?;
    let g = n.germ(p)?;
    let (xg, yg) = (x.germ(p)?, y.germ(p)?);
    let (nx, ny) = (g.apply_germ(&xg), g.apply_germ(&yg));
    Ok(&g.value * (xg.bracket(&yg) - nx.bracket(&ny)) - nx.bracket(&yg) - xg.bracket(&ny))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TorsionMethod {
    Definition,
    Tensor,
}

/// One torsion evaluation with its inputs; `norm` is the max-norm of
/// `torsion_value`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TorsionReport {
    pub point: Vec<f64>,
    pub pair: (Vec<f64>, Vec<f64>),
    pub basis_pair: Option<(usize, usize)>,
    pub torsion_value: Vec<f64>,
    pub method: TorsionMethod,
    pub norm: f64,
}

impl TorsionReport {
    fn from_tensor(p: &[f64], i: usize, j: usize, value: DVector<f64>) -> Self {
        let n = p.len();
        let e = |k: usize| {
            let mut v = vec![0.0; n];
            v[k] = 1.0;
            v
        };
        Self {
            point: p.to_vec(),
            pair: (e(i), e(j)),
            basis_pair: Some((i, j)),
            norm: value.amax(),
            torsion_value: value.as_slice().to_vec(),
            method: TorsionMethod::Tensor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NijenhuisVerdict {
    pub holds: bool,
    pub tol: f64,
    /// Largest torsion norm seen on each basis pair `(i, j)`, `i < j`.
    pub pair_max: Vec<((usize, usize), f64)>,
    /// Report with the largest norm; `None` on a one-dimensional chart.
    pub worst: Option<TorsionReport>,
}

impl NijenhuisVerdict {
    pub fn worst_norm(&self) -> f64 {
        self.worst.as_ref().map_or(0.0, |w| w.norm)
    }
}

/// Torsion on every basis pair `(e_i, e_j)`, `i < j`, at every sample. Basis
/// pairs suffice since the torsion is bilinear and antisymmetric.
pub fn is_nijenhuis(n: &NOperatorField, sampler: &Sampler, tol: f64) -> Result<NijenhuisVerdict> {
    check_dim("sampler dimension", n.dim(), sampler.dim())?;
    let dim = n.dim();
    let mut pair_max: Vec<((usize, usize), f64)> = (0..dim)
        .flat_map(|i| (i + 1..dim).map(move |j| ((i, j), 0.0)))
        .collect();
    let mut worst: Option<TorsionReport> = None;
    for p in sampler.points() {
        let g = n.germ(&p)?;
        for ((i, j), best) in pair_max.iter_mut() {
            let (ei, ej) = (basis(dim, *i), basis(dim, *j));
            let t = torsion_from_germ(&g, &ei, &ej);
            let norm = t.amax();
            *best = best.max(norm);
            if worst.as_ref().is_none_or(|w| norm > w.norm) {
                worst = Some(TorsionReport::from_tensor(&p, *i, *j, t));
            }
        }
    }
    let holds = worst.as_ref().is_none_or(|w| w.norm <= tol);
    Ok(NijenhuisVerdict {
        holds,
        tol,
        pair_max,
        worst,
    })
}

pub(crate) fn basis(n: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    v[i] = 1.0;
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureKind {
    /// `N² = -id`
    AlmostComplex,
    /// `N² = id`
    AlmostProduct,
    /// `N² = 0`
    AlmostTangent,
}

impl StructureKind {
    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "almost_complex" => Some(Self::AlmostComplex),
            "almost_product" => Some(Self::AlmostProduct),
            "almost_tangent" => Some(Self::AlmostTangent),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::AlmostComplex => "almost_complex",
            Self::AlmostProduct => "almost_product",
            Self::AlmostTangent => "almost_tangent",
        }
    }

    /// `N² - target` for this structure.
    pub fn defect(self, n: &DMatrix<f64>) -> DMatrix<f64> {
        let sq = n * n;
        let id = DMatrix::identity(n.nrows(), n.ncols());
        match self {
            Self::AlmostComplex => sq + id,
            Self::AlmostProduct => sq - id,
            Self::AlmostTangent => sq,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureVerdict {
    pub kind: StructureKind,
    pub holds: bool,
    pub tol: f64,
    pub worst: f64,
    pub witness: Vec<f64>,
}

/// Checks `N² = ∓id` or `N² = 0` at every sample, in the max-norm.
pub fn check_structure(
    n: &NOperatorField,
    kind: StructureKind,
    sampler: &Sampler,
    tol: f64,
) -> Result<StructureVerdict> {
    check_dim("sampler dimension", n.dim(), sampler.dim())?;
    let mut worst = 0.0;
    let mut witness = Vec::new();
    for p in sampler.points() {
        let d = kind.defect(&n.eval(&p)?).amax();
        if witness.is_empty() || d > worst {
            worst = d;
            witness = p;
        }
    }
    Ok(StructureVerdict {
        kind,
        holds: worst <= tol,
        tol,
        worst,
        witness,
    })
}
