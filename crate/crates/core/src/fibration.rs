//! Fibrations in adapted coordinates `(x, y) ↦ x`.
//!
//! The first `base_dim` chart coordinates are base coordinates, the remaining
//! ones fiber coordinates. The vertical subbundle is the set of vectors whose
//! base block vanishes. An operator written in blocks
//!
//! ```text
//! N = [[A(x, y), B(x, y)],
//!      [C(x, y), D(x, y)]]
//! ```
//!
//! is projectable iff `B = 0` and `A` does not depend on `y`; it then
//! projects to `N₀ = A`.

use std::sync::Arc;

use nalgebra::DVector;
use serde::Serialize;

use crate::dsl::{Coords, Expr};
use crate::error::{check_dim, Error, Result};
use crate::geometry::{self, FieldGerm, NOperatorField, StructureKind, VectorField};
use crate::sampling::Sampler;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitFibration {
    base_dim: usize,
    fiber_dim: usize,
    /// Fiber point used to read off the projected operator.
    anchor: Vec<f64>,
}

impl SplitFibration {
    pub fn new(base_dim: usize, fiber_dim: usize) -> Result<Self> {
        Self::with_anchor(base_dim, vec![0.0; fiber_dim])
    }

    pub fn with_anchor(base_dim: usize, anchor: Vec<f64>) -> Result<Self> {
        let fiber_dim = anchor.len();
        if base_dim == 0 || fiber_dim == 0 {
            return Err(Error::Config(format!(
                "fibration needs base and fiber of positive dimension, got {base_dim} + {fiber_dim}"
            )));
        }
        Ok(Self {
            base_dim,
            fiber_dim,
            anchor,
        })
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }

    pub fn dim(&self) -> usize {
        self.base_dim + self.fiber_dim
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    /// `Tτ`: the base block of a tangent vector (also `τ` on points).
    pub fn project<'a>(&self, v: &'a [f64]) -> &'a [f64] {
        &v[..self.base_dim]
    }
}

/// `re + i·im` in the complexified tangent space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexTangent {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl ComplexTangent {
    pub fn new(re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        check_dim("complex tangent parts", re.len(), im.len())?;
        Ok(Self { re, im })
    }
}

/// True iff the base block of `v` is within `tol` of zero.
pub fn is_vertical(v: &[f64], fib: &SplitFibration, tol: f64) -> Result<bool> {
    check_dim("vector length", fib.dim(), v.len())?;
    Ok(fib.project(v).iter().all(|c| c.abs() <= tol))
}

fn check_chart(n: &NOperatorField, fib: &SplitFibration, sampler: &Sampler) -> Result<()> {
    check_dim("operator/fibration dimension", fib.dim(), n.dim())?;
    check_dim("sampler dimension", fib.dim(), sampler.dim())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockWitness {
    pub value: f64,
    pub point: Vec<f64>,
    pub entry: (usize, usize),
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectabilityVerdict {
    pub holds: bool,
    pub tol: f64,
    /// Largest `|B_ij|` over samples.
    pub base_from_fiber: Option<BlockWitness>,
    /// Largest `|∂A_ij/∂y_b|` over samples.
    pub fiber_dependence: Option<BlockWitness>,
    /// `A(x, y₀)` on the base chart, present when `holds`.
    #[serde(skip)]
    pub projected: Option<NOperatorField>,
}

fn bump(slot: &mut Option<BlockWitness>, value: f64, p: &[f64], entry: (usize, usize)) {
    if slot.as_ref().is_none_or(|w| value > w.value) {
        *slot = Some(BlockWitness {
            value,
            point: p.to_vec(),
            entry,
        });
    }
}

/// Base block `A(x, y₀)` of `N` as an operator on the base chart.
pub fn base_block(n: &NOperatorField, fib: &SplitFibration) -> Result<NOperatorField> {
    let m = fib.base_dim;
    let coords = Coords::new(n.coords().names()[..m].iter().cloned())?;
    let anchor = &fib.anchor;
    let subst = |i: usize| {
        if i < m {
            Expr::Var(i)
        } else {
            Expr::Const(anchor[i - m])
        }
    };
    let entries = (0..m)
        .map(|i| (0..m).map(|j| n.entry(i, j).map_vars(&subst)).collect())
        .collect();
    NOperatorField::new(coords, entries)
}

/// Block criterion for projectability at every sample.
pub fn check_projectable(
    n: &NOperatorField,
    fib: &SplitFibration,
    sampler: &Sampler,
    tol: f64,
) -> Result<ProjectabilityVerdict> {
    check_chart(n, fib, sampler)?;
    let (m, dim) = (fib.base_dim, fib.dim());
    let coords = n.coords();
    let (mut b_worst, mut dy_worst) = (None, None);
    for p in sampler.points() {
        for i in 0..m {
            for j in m..dim {
                let v = coords.eval_real(n.entry(i, j), &p)?.abs();
                bump(&mut b_worst, v, &p, (i, j));
            }
            for j in 0..m {
                let jet = coords.eval_jet(n.entry(i, j), &p)?;
                let v = jet.grad.rows(m, dim - m).amax();
                bump(&mut dy_worst, v, &p, (i, j));
            }
        }
    }
    let ok = |w: &Option<BlockWitness>| w.as_ref().is_none_or(|w| w.value <= tol);
    let holds = ok(&b_worst) && ok(&dy_worst);
    let projected = if holds {
        Some(base_block(n, fib)?)
    } else {
        None
    };
    Ok(ProjectabilityVerdict {
        holds,
        tol,
        base_from_fiber: b_worst,
        fiber_dependence: dy_worst,
        projected,
    })
}

fn require_projection(
    n: &NOperatorField,
    fib: &SplitFibration,
    sampler: &Sampler,
    tol: f64,
) -> Result<NOperatorField> {
    let v = check_projectable(n, fib, sampler, tol)?;
    v.projected.ok_or_else(|| {
        Error::Precondition(format!(
            "operator is not projectable (worst |B| = {:e}, worst |dA/dy| = {:e})",
            v.base_from_fiber.map_or(0.0, |w| w.value),
            v.fiber_dependence.map_or(0.0, |w| w.value)
        ))
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremMainReport {
    /// Worst `|Tτ(T_N(e_i, e_j)) - T_{N₀}(Tτ e_i, Tτ e_j)|`.
    pub identity_residual: f64,
    pub identity_witness: Option<(Vec<f64>, (usize, usize))>,
    /// Worst norm of the base block of `T_N`.
    pub vertical_defect: f64,
    /// Worst torsion norm of `N₀` on the projected samples.
    pub base_torsion: f64,
    pub torsion_vertical: bool,
    pub base_nijenhuis: bool,
    /// `torsion_vertical == base_nijenhuis`.
    pub iff_agrees: bool,
    pub tol: f64,
    #[serde(skip)]
    pub projected: NOperatorField,
}

/// Compares `Tτ ∘ T_N` with `T_{N₀} ∘ (Tτ ∧ Tτ)` on all basis pairs and
/// derives both sides of the verticality/Nijenhuis equivalence.
pub fn check_theorem_main(
    n: &NOperatorField,
    fib: &SplitFibration,
    sampler: &Sampler,
    tol: f64,
) -> Result<TheoremMainReport> {
    let n0 = require_projection(n, fib, sampler, tol)?;
    let (m, dim) = (fib.base_dim, fib.dim());
    let mut report = TheoremMainReport {
        identity_residual: 0.0,
        identity_witness: None,
        vertical_defect: 0.0,
        base_torsion: 0.0,
        torsion_vertical: true,
        base_nijenhuis: true,
        iff_agrees: true,
        tol,
        projected: n0.clone(),
    };
    for p in sampler.points() {
        let g = n.germ(&p)?;
        let g0 = n0.germ(fib.project(&p))?;
        for i in 0..dim {
            for j in i + 1..dim {
                let t = geometry::torsion_from_germ(
                    &g,
                    &geometry::basis(dim, i),
                    &geometry::basis(dim, j),
                );
                let upstairs = t.rows(0, m).into_owned();
                let proj = |k: usize| {
                    if k < m {
                        geometry::basis(m, k)
                    } else {
                        DVector::zeros(m)
                    }
                };
                let downstairs = geometry::torsion_from_germ(&g0, &proj(i), &proj(j));
                let r = (&upstairs - &downstairs).amax();
                if report.identity_witness.is_none() || r > report.identity_residual {
                    report.identity_residual = r;
                    report.identity_witness = Some((p.clone(), (i, j)));
                }
                report.vertical_defect = report.vertical_defect.max(upstairs.amax());
                report.base_torsion = report.base_torsion.max(downstairs.amax());
            }
        }
    }
    report.torsion_vertical = report.vertical_defect <= tol;
    report.base_nijenhuis = report.base_torsion <= tol;
    report.iff_agrees = report.torsion_vertical == report.base_nijenhuis;
    Ok(report)
}

/// Sign selecting `Ẑ₊` or `Ẑ₋`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZSign {
    Plus,
    Minus,
}

impl ZSign {
    fn factor(self) -> f64 {
        match self {
            ZSign::Plus => 1.0,
            ZSign::Minus => -1.0,
        }
    }
}

/// Max-norm of the base block of `im ∓ N(re)` at `p`; zero iff `w ∈ Ẑ±`.
pub fn zhat_residual(
    w: &ComplexTangent,
    n: &NOperatorField,
    fib: &SplitFibration,
    p: &[f64],
    sign: ZSign,
) -> Result<f64> {
    check_dim("complex tangent length", fib.dim(), w.re.len())?;
    check_dim("complex tangent length", fib.dim(), w.im.len())?;
    let nre = n.eval(p)? * DVector::from_column_slice(&w.re);
    let m = fib.base_dim;
    Ok((0..m)
        .map(|i| (w.im[i] - sign.factor() * nre[i]).abs())
        .fold(0.0, f64::max))
}

fn square_plus_id_defect(
    n: &NOperatorField,
    fib: &SplitFibration,
    sampler: &Sampler,
) -> Result<(f64, Vec<f64>)> {
    let m = fib.base_dim;
    let mut worst = (0.0, Vec::new());
    for p in sampler.points() {
        let d = StructureKind::AlmostComplex.defect(&n.eval(&p)?);
        let v = d.rows(0, m).amax();
        if worst.1.is_empty() || v > worst.0 {
            worst = (v, p);
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvolutivityVerdict {
    /// `N² + id` takes vertical values at every sample.
    pub square_vertical: bool,
    pub square_defect: f64,
    /// Worst `Ẑ₊` residual over brackets of frame pairs; not evaluated when
    /// the square precheck fails.
    pub bracket_residual: f64,
    pub witness: Option<(Vec<f64>, (usize, usize))>,
    pub holds: bool,
    pub tol: f64,
}

struct ComplexGerm {
    re: FieldGerm,
    im: FieldGerm,
}

impl ComplexGerm {
    /// Complex-bilinear extension of the bracket.
    fn bracket(&self, other: &ComplexGerm) -> (DVector<f64>, DVector<f64>) {
        let re = self.re.bracket(&other.re) - self.im.bracket(&other.im);
        let im = self.re.bracket(&other.im) + self.im.bracket(&other.re);
        (re, im)
    }
}

/// Involutivity of `Ẑ₊` on the frame `{E_a + i·N(E_a)} ∪ {W_b} ∪ {i·W_b}`,
/// where `E_a` are base coordinate fields and `W_b` fiber coordinate fields.
pub fn check_involutivity_zhat(
    n: &NOperatorField,
    fib: &SplitFibration,
    sampler: &Sampler,
    tol: f64,
) -> Result<InvolutivityVerdict> {
    require_projection(n, fib, sampler, tol)?;
    let (square_defect, _) = square_plus_id_defect(n, fib, sampler)?;
    let mut verdict = InvolutivityVerdict {
        square_vertical: square_defect <= tol,
        square_defect,
        bracket_residual: 0.0,
        witness: None,
        holds: false,
        tol,
    };
    if !verdict.square_vertical {
        return Ok(verdict);
    }
    let (m, dim) = (fib.base_dim, fib.dim());
    let coords: &Arc<Coords> = n.coords();
    let zero = VectorField::zero(coords.clone());
    let mut frame: Vec<(VectorField, VectorField)> = Vec::new();
    for a in 0..m {
        frame.push((VectorField::basis(coords.clone(), a)?, n.column(a)?));
    }
    for b in m..dim {
        let w = VectorField::basis(coords.clone(), b)?;
        frame.push((w.clone(), zero.clone()));
        frame.push((zero.clone(), w));
    }
    for p in sampler.points() {
        let germs = frame
            .iter()
            .map(|(re, im)| {
                Ok(ComplexGerm {
                    re: re.germ(&p)?,
                    im: im.germ(&p)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        for s in 0..germs.len() {
            for t in s + 1..germs.len() {
                let (re, im) = germs[s].bracket(&germs[t]);
                let w = ComplexTangent {
                    re: re.as_slice().to_vec(),
                    im: im.as_slice().to_vec(),
                };
                let r = zhat_residual(&w, n, fib, &p, ZSign::Plus)?;
                if verdict.witness.is_none() || r > verdict.bracket_residual {
                    verdict.bracket_residual = r;
                    verdict.witness = Some((p.clone(), (s, t)));
                }
            }
        }
    }
    verdict.holds = verdict.bracket_residual <= tol;
    Ok(verdict)
}

#[derive(Debug, Clone, Serialize)]
pub struct ComplexProjectionVerdict {
    /// `N² + id` vertical and `Ẑ₊` involutive.
    pub fibered: InvolutivityVerdict,
    /// `N₀² = -id` on the base.
    pub base_almost_complex: bool,
    /// `N₀` has vanishing torsion.
    pub base_nijenhuis: bool,
    pub holds: bool,
    /// Both routes return the same verdict.
    pub routes_agree: bool,
}

/// Whether `N` projects onto a complex structure, decided on the total space
/// and cross-checked directly on the base.
pub fn check_complex_projection(
    n: &NOperatorField,
    fib: &SplitFibration,
    sampler: &Sampler,
    tol: f64,
) -> Result<ComplexProjectionVerdict> {
    let n0 = require_projection(n, fib, sampler, tol)?;
    let fibered = check_involutivity_zhat(n, fib, sampler, tol)?;
    let base_sampler = sampler.leading(fib.base_dim);
    let base_almost_complex =
        geometry::check_structure(&n0, StructureKind::AlmostComplex, &base_sampler, tol)?.holds;
    let base_nijenhuis = geometry::is_nijenhuis(&n0, &base_sampler, tol)?.holds;
    let direct = base_almost_complex && base_nijenhuis;
    Ok(ComplexProjectionVerdict {
        routes_agree: fibered.holds == direct,
        holds: fibered.holds && direct,
        fibered,
        base_almost_complex,
        base_nijenhuis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tangent;

    fn xyz() -> Arc<Coords> {
        Coords::new(["x", "y", "z"]).unwrap()
    }

    fn op(c: Arc<Coords>, rows: &[&[&str]]) -> NOperatorField {
        let rows: Vec<Vec<&str>> = rows.iter().map(|r| r.to_vec()).collect();
        NOperatorField::parse(c, &rows).unwrap()
    }

    fn fib21() -> SplitFibration {
        SplitFibration::new(2, 1).unwrap()
    }

    fn sampler3() -> Sampler {
        Sampler::cube(3, -1.5, 1.5).with_count(24)
    }

    #[test]
    fn verticality() {
        let f = fib21();
        assert!(is_vertical(&[0.0, 0.0, 1.0], &f, 1e-12).unwrap());
        assert!(!is_vertical(&[1.0, 0.0, 0.0], &f, 1e-12).unwrap());
        assert!(is_vertical(&[0.0, 0.0, 0.0], &f, 0.0).unwrap());
        assert!(is_vertical(&[1.0], &f, 0.0).is_err());
        assert!(SplitFibration::new(2, 0).is_err());
    }

    #[test]
    fn block_diagonal_is_projectable() {
        let n = op(
            xyz(),
            &[
                &["x", "1", "0"],
                &["0", "y^2", "0"],
                &["z", "x*z", "sin(z)"],
            ],
        );
        let v = check_projectable(&n, &fib21(), &sampler3(), 1e-12).unwrap();
        assert!(v.holds);
        let n0 = v.projected.unwrap();
        assert_eq!(n0.coords().names(), &["x", "y"]);
        assert_eq!(n0.display(), vec![vec!["x", "1"], vec!["0", "y^2"]]);
    }

    #[test]
    fn fiber_entry_in_base_rows_blocks_projection() {
        let n = op(
            xyz(),
            &[&["1", "0", "z"], &["0", "1", "0"], &["0", "0", "1"]],
        );
        let v = check_projectable(&n, &fib21(), &sampler3(), 1e-12).unwrap();
        assert!(!v.holds && v.projected.is_none());
        let w = v.base_from_fiber.unwrap();
        assert_eq!(w.entry, (0, 2));
        assert_eq!(w.value, w.point[2].abs());
        assert!(w.value > 0.0);

        let n = op(
            xyz(),
            &[&["z", "0", "0"], &["0", "1", "0"], &["0", "0", "1"]],
        );
        let v = check_projectable(&n, &fib21(), &sampler3(), 1e-12).unwrap();
        assert!(!v.holds);
        assert_eq!(v.fiber_dependence.unwrap().value, 1.0);
        assert!(check_theorem_main(&n, &fib21(), &sampler3(), 1e-12).is_err());
    }

    #[test]
    fn tangent_lift_projects_onto_base_operator() {
        let c = Coords::new(["x", "y"]).unwrap();
        let n = op(c, &[&["x*y", "sin(x)"], &["1", "y^2"]]);
        let lifted = tangent::tangent_lift_n(&n).unwrap();
        let s = tangent::lifted_sampler(&Sampler::cube(2, -1.0, 1.0).with_count(16));
        let v = check_projectable(&lifted, &SplitFibration::new(2, 2).unwrap(), &s, 1e-12).unwrap();
        assert!(v.holds);
        let n0 = v.projected.unwrap();
        for p in Sampler::cube(2, -1.0, 1.0).points() {
            assert!((n0.eval(&p).unwrap() - n.eval(&p).unwrap()).amax() <= 1e-12);
        }
    }

    #[test]
    fn theorem_main_shear_extension() {
        let n = op(
            xyz(),
            &[&["0", "1", "0"], &["x", "0", "0"], &["0", "0", "1"]],
        );
        let r = check_theorem_main(&n, &fib21(), &sampler3(), 1e-9).unwrap();
        assert!(r.identity_residual <= 1e-12);
        assert_eq!(r.vertical_defect, 1.0);
        assert_eq!(r.base_torsion, 1.0);
        assert!(!r.torsion_vertical && !r.base_nijenhuis && r.iff_agrees);
    }

    #[test]
    fn theorem_main_constant_base() {
        let n = op(
            xyz(),
            &[&["0", "-1", "0"], &["1", "0", "0"], &["x", "y*z", "z^2"]],
        );
        let r = check_theorem_main(&n, &fib21(), &sampler3(), 1e-9).unwrap();
        assert_eq!(r.base_torsion, 0.0);
        assert!(r.torsion_vertical && r.base_nijenhuis && r.iff_agrees);
    }

    #[test]
    fn theorem_main_vertical_nonzero_torsion() {
        // Nijenhuis base block diag(x, y); fiber rows depend on x so that T_N is
        // nonzero but vertical.
        let n = op(
            xyz(),
            &[&["x", "0", "0"], &["0", "y", "0"], &["z", "x", "x*z"]],
        );
        let r = check_theorem_main(&n, &fib21(), &sampler3(), 1e-9).unwrap();
        let t = geometry::torsion_tensor(&n, &[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0], &[0.5, 0.2, 0.7])
            .unwrap();
        assert!(t[2].abs() > 0.1);
        assert_eq!((t[0], t[1]), (0.0, 0.0));
        assert!(r.torsion_vertical && r.base_nijenhuis && r.iff_agrees);
    }

    #[test]
    fn zhat_membership() {
        let f = fib21();
        let n = op(
            xyz(),
            &[&["0", "-1", "0"], &["1", "0", "0"], &["x", "0", "2"]],
        );
        let p = [0.3, -0.2, 0.9];
        let u = [0.4, 1.1, -0.6];
        let nu = n.eval(&p).unwrap() * DVector::from_column_slice(&u);
        let w = ComplexTangent::new(u.to_vec(), nu.as_slice().to_vec()).unwrap();
        let r0 = zhat_residual(&w, &n, &f, &p, ZSign::Plus).unwrap();
        assert_eq!(r0, 0.0);
        let mut shifted = w.clone();
        shifted.im[2] += 5.0;
        assert_eq!(
            zhat_residual(&shifted, &n, &f, &p, ZSign::Plus)
                .unwrap()
                .to_bits(),
            r0.to_bits()
        );
        let e1 = ComplexTangent::new(vec![1.0, 0.0, 0.0], vec![0.0; 3]).unwrap();
        assert!(zhat_residual(&e1, &n, &f, &p, ZSign::Plus).unwrap() > 0.0);
        assert_eq!(
            zhat_residual(&w, &n, &f, &p, ZSign::Minus).unwrap(),
            2.0 * nu.rows(0, 2).amax()
        );
    }

    #[test]
    fn flat_complex_structure_is_involutive() {
        let n = op(
            xyz(),
            &[&["0", "-1", "0"], &["1", "0", "0"], &["0", "0", "3"]],
        );
        let v = check_involutivity_zhat(&n, &fib21(), &sampler3(), 1e-12).unwrap();
        assert!(v.square_vertical && v.holds);
        assert_eq!(v.bracket_residual, 0.0);
    }

    #[test]
    fn square_precheck_reported_before_involutivity() {
        let n = op(
            xyz(),
            &[&["0", "1", "0"], &["x", "0", "0"], &["0", "0", "1"]],
        );
        let v = check_involutivity_zhat(&n, &fib21(), &sampler3(), 1e-9).unwrap();
        assert!(!v.square_vertical && !v.holds);
        assert!(v.witness.is_none());
    }

    #[test]
    fn complex_projection_examples() {
        let n = op(
            xyz(),
            &[&["0", "-1", "0"], &["1", "0", "0"], &["x", "y", "z^2 + 1"]],
        );
        let v = check_complex_projection(&n, &fib21(), &sampler3(), 1e-9).unwrap();
        assert!(v.holds && v.routes_agree);

        let n = op(
            xyz(),
            &[&["0", "-2", "0"], &["2", "0", "0"], &["0", "0", "1"]],
        );
        let v = check_complex_projection(&n, &fib21(), &sampler3(), 1e-9).unwrap();
        assert!(!v.holds && v.routes_agree);
        assert_eq!(v.fibered.square_defect, 3.0);
    }

    #[test]
    fn vertical_brackets_with_frame_stay_in_zhat() {
        // non-constant complex base structure on R^2 pulled up to R^3
        let n = op(
            xyz(),
            &[
                &["x", "-(1 + x^2)", "0"],
                &["1", "-x", "0"],
                &["z", "y", "x"],
            ],
        );
        let v = check_involutivity_zhat(&n, &fib21(), &sampler3(), 1e-9).unwrap();
        assert!(v.holds, "{v:?}");
    }
}
