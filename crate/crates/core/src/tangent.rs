//! Tangent (complete) lifts to `TM`.
//!
//! A lifted object lives on the doubled chart with coordinates
//! `x1..xn, v1..vn` (position, then velocity), independent of the names used
//! on the base chart. Lifts are built symbolically, so a lifted field or
//! operator is an ordinary [`VectorField`] / [`NOperatorField`] and can be
//! bracketed, tested for torsion, or lifted again.

use std::sync::Arc;

use nalgebra::DVector;
use serde::Serialize;

use crate::dsl::{Coords, Expr};
use crate::error::{check_dim, Result};
use crate::geometry::{self, NOperatorField, VectorField};
use crate::sampling::Sampler;

/// A point of `TTM` in local coordinates `(x, ẋ, δx, δẋ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TT2Point {
    pub x: Vec<f64>,
    pub xdot: Vec<f64>,
    pub deltax: Vec<f64>,
    pub deltaxdot: Vec<f64>,
}

impl TT2Point {
    pub fn new(x: Vec<f64>, xdot: Vec<f64>, deltax: Vec<f64>, deltaxdot: Vec<f64>) -> Result<Self> {
        let n = x.len();
        check_dim("TT point block", n, xdot.len())?;
        check_dim("TT point block", n, deltax.len())?;
        check_dim("TT point block", n, deltaxdot.len())?;
        Ok(Self {
            x,
            xdot,
            deltax,
            deltaxdot,
        })
    }
}

/// `κ(x, ẋ, δx, δẋ) = (x, δx, ẋ, δẋ)`.
pub fn canonical_flip(w: &TT2Point) -> TT2Point {
    TT2Point {
        x: w.x.clone(),
        xdot: w.deltax.clone(),
        deltax: w.xdot.clone(),
        deltaxdot: w.deltaxdot.clone(),
    }
}

/// Coordinates `x1..xn, v1..vn` of the doubled chart.
pub fn lifted_coords(n: usize) -> Result<Arc<Coords>> {
    Coords::new(
        (1..=n)
            .map(|i| format!("x{i}"))
            .chain((1..=n).map(|i| format!("v{i}"))),
    )
}

/// `Σ_k v_k ∂_k e` on the doubled chart of a base of dimension `n`.
fn velocity_derivative(e: &Expr, n: usize) -> Expr {
    Expr::sum((0..n).map(|k| Expr::mul(Expr::Var(n + k), e.derivative(k))))
}

/// `dT(X)(x, v) = (X_x, D_xX(v))`.
pub fn complete_lift_vf(x: &VectorField) -> Result<VectorField> {
    let n = x.dim();
    let comps = x
        .components()
        .iter()
        .cloned()
        .chain(x.components().iter().map(|c| velocity_derivative(c, n)))
        .collect();
    VectorField::new(lifted_coords(n)?, comps)
}

/// `dT(N)`: the block operator `[[N, 0], [∂_v N, N]]` on the doubled chart,
/// i.e. `(δx, δẋ) ↦ (N δx, (D_xN · v) δx + N δẋ)` at `(x, v)`.
pub fn tangent_lift_n(n_op: &NOperatorField) -> Result<NOperatorField> {
    let n = n_op.dim();
    let mut entries = vec![vec![Expr::zero(); 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            let e = n_op.entry(i, j);
            entries[i][j] = e.clone();
            entries[n + i][n + j] = e.clone();
            entries[n + i][j] = velocity_derivative(e, n);
        }
    }
    NOperatorField::new(lifted_coords(n)?, entries)
}

/// Sampler on the doubled chart: positions from `base`, velocities uniform
/// in `[-1, 1]^n`.
pub fn lifted_sampler(base: &Sampler) -> Sampler {
    base.product(&Sampler::cube(base.dim(), -1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residual {
    pub value: f64,
    pub witness: Vec<f64>,
}

impl Residual {
    fn new() -> Self {
        Self {
            value: 0.0,
            witness: Vec::new(),
        }
    }

    fn record(&mut self, r: f64, w: &[f64]) {
        if self.witness.is_empty() || r > self.value {
            self.value = r;
            self.witness = w.to_vec();
        }
    }
}

/// Worst residuals of the three lift identities over a sample set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiftVerdict {
    /// `[dT X, dT Y] - dT[X, Y]`
    pub bracket: Residual,
    /// `dT(N)(dT X) - dT(NX)`
    pub operator: Residual,
    /// `T_{dT N}(dT X, dT Y) - dT(T_N(X, Y))`
    pub torsion: Residual,
    pub tol: f64,
    pub holds: bool,
}

impl LiftVerdict {
    pub fn worst(&self) -> f64 {
        self.bracket
            .value
            .max(self.operator.value)
            .max(self.torsion.value)
    }
}

/// Checks the bracket, operator and torsion lift identities for `(N, X, Y)`
/// at every sample of `sampler`, which must live on the doubled chart.
pub fn verify_lift_identities(
    n_op: &NOperatorField,
    x: &VectorField,
    y: &VectorField,
    sampler: &Sampler,
    tol: f64,
) -> Result<LiftVerdict> {
    let n = n_op.dim();
    check_dim("lifted sampler dimension", 2 * n, sampler.dim())?;
    let (lx, ly) = (complete_lift_vf(x)?, complete_lift_vf(y)?);
    let ln = tangent_lift_n(n_op)?;
    let lift_bracket = complete_lift_vf(&x.bracket_field(y)?)?;
    let lift_nx = complete_lift_vf(&n_op.apply_field(x)?)?;
    let lift_torsion = complete_lift_vf(&geometry::torsion_field(n_op, x, y)?)?;

    let (mut bracket, mut operator, mut torsion) =
        (Residual::new(), Residual::new(), Residual::new());
    for w in sampler.points() {
        let lhs = geometry::lie_bracket(&lx, &ly, &w)?;
        bracket.record((lhs - lift_bracket.eval(&w)?).amax(), &w);

        let lhs: DVector<f64> = ln.eval(&w)? * lx.eval(&w)?;
        operator.record((lhs - lift_nx.eval(&w)?).amax(), &w);

        let lhs = geometry::torsion_definition(&ln, &lx, &ly, &w)?;
        torsion.record((lhs - lift_torsion.eval(&w)?).amax(), &w);
    }
    let holds = bracket.value <= tol && operator.value <= tol && torsion.value <= tol;
    Ok(LiftVerdict {
        bracket,
        operator,
        torsion,
        tol,
        holds,
    })
}
