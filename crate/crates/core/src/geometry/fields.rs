use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::dsl::{Coords, Expr};
use crate::error::{check_dim, Error, Result};

fn check_vars(coords: &Coords, e: &Expr) -> Result<()> {
    match e.max_var() {
        Some(i) if i >= coords.dim() => Err(Error::IndexOutOfRange {
            index: i,
            dim: coords.dim(),
        }),
        _ => Ok(()),
    }
}

/// A vector field on a chart, one expression per component.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    coords: Arc<Coords>,
    components: Vec<Expr>,
}

/// Value and Jacobian of a vector field at one point; `jac[(i, k)] = ∂_k X_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGerm {
    pub value: DVector<f64>,
    pub jac: DMatrix<f64>,
}

impl FieldGerm {
    /// `[A, B]_p = D_pA(B_p) - D_pB(A_p)`.
    pub fn bracket(&self, other: &FieldGerm) -> DVector<f64> {
        &self.jac * &other.value - &other.jac * &self.value
    }

    pub fn constant(value: DVector<f64>) -> Self {
        let n = value.len();
        Self {
            value,
            jac: DMatrix::zeros(n, n),
        }
    }
}

impl VectorField {
    pub fn new(coords: Arc<Coords>, components: Vec<Expr>) -> Result<Self> {
        check_dim("vector field components", coords.dim(), components.len())?;
        for c in &components {
            check_vars(&coords, c)?;
        }
        Ok(Self { coords, components })
    }

    pub fn parse<S: AsRef<str>>(coords: Arc<Coords>, components: &[S]) -> Result<Self> {
        let exprs = components
            .iter()
            .map(|s| coords.parse(s.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(coords, exprs)
    }

    pub fn constant(coords: Arc<Coords>, values: &[f64]) -> Result<Self> {
        Self::new(coords, values.iter().map(|&v| Expr::Const(v)).collect())
    }

    /// The coordinate field `e_i`.
    pub fn basis(coords: Arc<Coords>, i: usize) -> Result<Self> {
        let n = coords.dim();
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, dim: n });
        }
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        Self::constant(coords, &v)
    }

    pub fn zero(coords: Arc<Coords>) -> Self {
        let n = coords.dim();
        Self {
            coords,
            components: vec![Expr::zero(); n],
        }
    }

    pub fn coords(&self) -> &Arc<Coords> {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn eval(&self, p: &[f64]) -> Result<DVector<f64>> {
        let vals = self
            .components
            .iter()
            .map(|c| self.coords.eval_real(c, p))
            .collect::<Result<Vec<_>>>()?;
        Ok(DVector::from_vec(vals))
    }

    pub fn germ(&self, p: &[f64]) -> Result<FieldGerm> {
        let n = self.dim();
        let mut value = DVector::zeros(n);
        let mut jac = DMatrix::zeros(n, n);
        for (i, c) in self.components.iter().enumerate() {
            let j = self.coords.eval_jet(c, p)?;
            value[i] = j.value;
            jac.row_mut(i).copy_from(&j.grad.transpose());
        }
        Ok(FieldGerm { value, jac })
    }

    fn same_chart(&self, other: &VectorField) -> Result<()> {
        check_dim("vector field dimension", self.dim(), other.dim())?;
        if self.coords != other.coords {
            return Err(Error::Precondition(
                "vector fields live on different charts".into(),
            ));
        }
        Ok(())
    }

    fn zip_with(&self, other: &VectorField, f: impl Fn(Expr, Expr) -> Expr) -> Result<Self> {
        self.same_chart(other)?;
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| f(a.clone(), b.clone()))
            .collect();
        Ok(Self {
            coords: self.coords.clone(),
            components,
        })
    }

    pub fn add(&self, other: &VectorField) -> Result<Self> {
        self.zip_with(other, Expr::add)
    }

    pub fn sub(&self, other: &VectorField) -> Result<Self> {
        self.zip_with(other, Expr::sub)
    }

    /// `f·X` for a scalar expression `f` on the same chart.
    pub fn scaled(&self, f: &Expr) -> Result<Self> {
        check_vars(&self.coords, f)?;
        Ok(Self {
            coords: self.coords.clone(),
            components: self
                .components
                .iter()
                .map(|c| Expr::mul(f.clone(), c.clone()))
                .collect(),
        })
    }

    /// The bracket `[X, Y]` as a field, built by symbolic differentiation:
    /// `[X, Y]_i = Σ_k ∂_k X_i Y_k - ∂_k Y_i X_k`.
    pub fn bracket_field(&self, other: &VectorField) -> Result<Self> {
        self.same_chart(other)?;
        let n = self.dim();
        let components = (0..n)
            .map(|i| {
                Expr::sum((0..n).map(|k| {
                    Expr::sub(
                        Expr::mul(
                            self.components[i].derivative(k),
                            other.components[k].clone(),
                        ),
                        Expr::mul(
                            other.components[i].derivative(k),
                            self.components[k].clone(),
                        ),
                    )
                }))
            })
            .collect();
        Ok(Self {
            coords: self.coords.clone(),
            components,
        })
    }

    pub fn display(&self) -> Vec<String> {
        self.components
            .iter()
            .map(|c| c.display(&self.coords).to_string())
            .collect()
    }
}

/// A (1,1)-tensor field on a chart: entry `(i, j)` is the `i`-th component of
/// `N(e_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NOperatorField {
    coords: Arc<Coords>,
    entries: Vec<Vec<Expr>>,
}

/// `N_p` together with its coordinate partials `∂_k N` at `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorGerm {
    pub value: DMatrix<f64>,
    pub partials: Vec<DMatrix<f64>>,
}

impl OperatorGerm {
    /// `Σ_k dir_k ∂_k N`, the derivative of `N` along `dir`.
    pub fn directional(&self, dir: &DVector<f64>) -> DMatrix<f64> {
        let n = self.value.nrows();
        self.partials
            .iter()
            .zip(dir.iter())
            .fold(DMatrix::zeros(n, n), |acc, (d, &w)| acc + d * w)
    }

    /// `DN(a, b)`: the derivative of `N` along `b`, applied to `a`.
    pub fn dn(&self, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        self.directional(b) * a
    }

    /// 1-jet of the field `N X` from the 1-jets of `N` and `X`.
    pub fn apply_germ(&self, x: &FieldGerm) -> FieldGerm {
        let n = self.value.nrows();
        let value = &self.value * &x.value;
        let mut jac = &self.value * &x.jac;
        for (k, d) in self.partials.iter().enumerate() {
            let col = d * &x.value;
            for i in 0..n {
                jac[(i, k)] += col[i];
            }
        }
        FieldGerm { value, jac }
    }
}

impl NOperatorField {
    pub fn new(coords: Arc<Coords>, entries: Vec<Vec<Expr>>) -> Result<Self> {
        let n = coords.dim();
        check_dim("operator rows", n, entries.len())?;
        for row in &entries {
            check_dim("operator columns", n, row.len())?;
            for e in row {
                check_vars(&coords, e)?;
            }
        }
        Ok(Self { coords, entries })
    }

    pub fn parse<S: AsRef<str>>(coords: Arc<Coords>, rows: &[Vec<S>]) -> Result<Self> {
        let entries = rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|s| coords.parse(s.as_ref()))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(coords, entries)
    }

    pub fn constant(coords: Arc<Coords>, m: &DMatrix<f64>) -> Result<Self> {
        let n = coords.dim();
        check_dim("operator rows", n, m.nrows())?;
        check_dim("operator columns", n, m.ncols())?;
        let entries = (0..n)
            .map(|i| (0..n).map(|j| Expr::Const(m[(i, j)])).collect())
            .collect();
        Ok(Self { coords, entries })
    }

    pub fn identity(coords: Arc<Coords>) -> Self {
        let n = coords.dim();
        let entries = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| Expr::Const(if i == j { 1.0 } else { 0.0 }))
                    .collect()
            })
            .collect();
        Self { coords, entries }
    }

    pub fn coords(&self) -> &Arc<Coords> {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> &Expr {
        &self.entries[i][j]
    }

    pub fn entries(&self) -> &[Vec<Expr>] {
        &self.entries
    }

    pub fn eval(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = self.coords.eval_real(&self.entries[i][j], p)?;
            }
        }
        Ok(m)
    }

    pub fn germ(&self, p: &[f64]) -> Result<OperatorGerm> {
        let n = self.dim();
        let mut value = DMatrix::zeros(n, n);
        let mut partials = vec![DMatrix::zeros(n, n); n];
        for i in 0..n {
            for j in 0..n {
                let jet = self.coords.eval_jet(&self.entries[i][j], p)?;
                value[(i, j)] = jet.value;
                for (k, d) in partials.iter_mut().enumerate() {
                    d[(i, j)] = jet.grad[k];
                }
            }
        }
        Ok(OperatorGerm { value, partials })
    }

    /// The field `N X`, symbolically.
    pub fn apply_field(&self, x: &VectorField) -> Result<VectorField> {
        check_dim("operator/field dimension", self.dim(), x.dim())?;
        if self.coords != *x.coords() {
            return Err(Error::Precondition(
                "operator and field live on different charts".into(),
            ));
        }
        let components = self
            .entries
            .iter()
            .map(|row| {
                Expr::sum(
                    row.iter()
                        .zip(x.components())
                        .map(|(a, b)| Expr::mul(a.clone(), b.clone())),
                )
            })
            .collect();
        VectorField::new(self.coords.clone(), components)
    }

    /// Column `j` of the matrix, i.e. the field `N(e_j)`.
    pub fn column(&self, j: usize) -> Result<VectorField> {
        if j >= self.dim() {
            return Err(Error::IndexOutOfRange {
                index: j,
                dim: self.dim(),
            });
        }
        VectorField::new(
            self.coords.clone(),
            self.entries.iter().map(|row| row[j].clone()).collect(),
        )
    }

    /// `a·self + b·other`, entrywise.
    pub fn linear_combination(&self, a: f64, other: &NOperatorField, b: f64) -> Result<Self> {
        check_dim("operator dimension", self.dim(), other.dim())?;
        if self.coords != other.coords {
            return Err(Error::Precondition(
                "operators live on different charts".into(),
            ));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(r1, r2)| {
                r1.iter()
                    .zip(r2)
                    .map(|(x, y)| {
                        Expr::add(
                            Expr::mul(Expr::Const(a), x.clone()),
                            Expr::mul(Expr::Const(b), y.clone()),
                        )
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            coords: self.coords.clone(),
            entries,
        })
    }

    pub fn display(&self) -> Vec<Vec<String>> {
        self.entries
            .iter()
            .map(|row| {
                row.iter()
                    .map(|e| e.display(&self.coords).to_string())
                    .collect()
            })
            .collect()
    }
}
