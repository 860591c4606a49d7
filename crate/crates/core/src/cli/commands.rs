use serde_json::json;

use super::problem::{Operator, Problem};
use super::report::{fmt_vec, Check, Role};
use crate::dsl::Expr;
use crate::error::{Error, Result};
use crate::fibration::{self, SplitFibration};
use crate::geometry::{self, VectorField};
use crate::liealg;
use crate::tangent;

fn nijenhuis_check(
    suite: &'static str,
    subject: &str,
    name: &str,
    role: Role,
    v: &geometry::NijenhuisVerdict,
) -> Check {
    let witness = v.worst.as_ref().filter(|w| w.norm > 0.0).map(|w| {
        let (i, j) = w.basis_pair.unwrap_or((0, 0));
        format!(
            "T(e{}, e{}) = {} at {}",
            i + 1,
            j + 1,
            fmt_vec(&w.torsion_value),
            fmt_vec(&w.point)
        )
    });
    Check::new(suite, subject, name, role, v.holds)
        .value(v.worst_norm(), v.tol)
        .witness(witness)
        .detail(v)
}

/// Vanishing torsion at every sample, plus the declared algebraic type.
pub fn cmd_torsion(p: &Problem, name: &str, op: &Operator) -> Result<Vec<Check>> {
    let tol = p.settings.torsion_tol;
    let sampler = p.sampler()?;
    let v = geometry::is_nijenhuis(&op.field, sampler, tol)?;
    let mut checks = vec![nijenhuis_check(
        "torsion",
        name,
        "nijenhuis",
        Role::Verdict,
        &v,
    )];
    if let Some(kind) = op.structure {
        let s = geometry::check_structure(&op.field, kind, sampler, tol)?;
        let witness = (!s.holds).then(|| fmt_vec(&s.witness));
        checks.push(
            Check::new("torsion", name, kind.name(), Role::Verdict, s.holds)
                .value(s.worst, tol)
                .witness(witness)
                .detail(&s),
        );
    }
    Ok(checks)
}

/// Declared fields, or `e_i` and `x_i·e_{i+1}` when fewer than two are declared.
fn lift_test_fields(p: &Problem) -> Result<Vec<(String, VectorField)>> {
    if p.fields.len() >= 2 {
        return Ok(p
            .fields
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect());
    }
    let coords = p
        .coords
        .clone()
        .ok_or_else(|| Error::Problem("problem declares no chart".into()))?;
    let n = coords.dim();
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        out.push((
            format!("e{}", i + 1),
            VectorField::basis(coords.clone(), i)?,
        ));
    }
    for i in 0..n {
        let j = (i + 1) % n;
        let name = format!("{}*e{}", coords.names()[i], j + 1);
        out.push((
            name,
            VectorField::basis(coords.clone(), j)?.scaled(&Expr::Var(i))?,
        ));
    }
    Ok(out)
}

/// Lift identities for all test-field pairs, projectability of the lift onto
/// the base operator, and agreement of base and lift Nijenhuis verdicts.
pub fn cmd_lift(p: &Problem, name: &str, op: &Operator) -> Result<Vec<Check>> {
    let tol = p.settings.torsion_tol;
    let base = p.sampler()?;
    let lifted = tangent::lifted_sampler(base);
    let n = op.field.dim();
    let mut checks = Vec::new();

    let fields = lift_test_fields(p)?;
    for a in 0..fields.len() {
        for b in a + 1..fields.len() {
            let (xa, x) = &fields[a];
            let (yb, y) = &fields[b];
            let v = tangent::verify_lift_identities(&op.field, x, y, &lifted, tol)?;
            let witness = (v.worst() > 0.0).then(|| {
                let r = [&v.bracket, &v.operator, &v.torsion]
                    .into_iter()
                    .fold(&v.bracket, |m, r| if r.value > m.value { r } else { m });
                fmt_vec(&r.witness)
            });
            checks.push(
                Check::new(
                    "lift",
                    name,
                    format!("lift_identities({xa}, {yb})"),
                    Role::Verdict,
                    v.holds,
                )
                .value(v.worst(), tol)
                .witness(witness)
                .detail(&v),
            );
        }
    }

    let lift_op = tangent::tangent_lift_n(&op.field)?;
    let fib = SplitFibration::new(n, n)?;
    let proj = fibration::check_projectable(&lift_op, &fib, &lifted, tol)?;
    checks.push(
        Check::new("lift", name, "lift_projectable", Role::Verdict, proj.holds)
            .value(
                proj.base_from_fiber
                    .as_ref()
                    .map_or(0.0, |w| w.value)
                    .max(proj.fiber_dependence.as_ref().map_or(0.0, |w| w.value)),
                tol,
            )
            .detail(&proj),
    );
    if let Some(n0) = &proj.projected {
        let mut worst = 0.0_f64;
        for q in base.points() {
            worst = worst.max((n0.eval(&q)? - op.field.eval(&q)?).amax());
        }
        checks.push(
            Check::new(
                "lift",
                name,
                "lift_projects_to_operator",
                Role::Verdict,
                worst <= tol,
            )
            .value(worst, tol)
            .detail(&json!({ "projected": n0.display() })),
        );
    }

    let base_v = geometry::is_nijenhuis(&op.field, base, tol)?;
    let lift_v = geometry::is_nijenhuis(&lift_op, &lifted, tol)?;
    let agree = base_v.holds == lift_v.holds;
    checks.push(nijenhuis_check(
        "lift",
        name,
        "base_nijenhuis",
        Role::Info,
        &base_v,
    ));
    checks.push(nijenhuis_check(
        "lift",
        name,
        "lift_nijenhuis",
        Role::Info,
        &lift_v,
    ));
    checks.push(
        Check::new(
            "lift",
            name,
            "lift_nijenhuis_iff_base",
            Role::Verdict,
            agree,
        )
        .detail(&json!({ "base": base_v.holds, "lift": lift_v.holds })),
    );
    Ok(checks)
}

/// Projectability, the torsion projection identity with its equivalence,
/// and optionally the complex-structure criterion.
pub fn cmd_project(p: &Problem, name: &str, op: &Operator) -> Result<Vec<Check>> {
    let tol = p.settings.torsion_tol;
    let sampler = p.sampler()?;
    let fib = p
        .fibration
        .as_ref()
        .ok_or_else(|| Error::Problem("problem declares no fibration".into()))?;
    let proj = fibration::check_projectable(&op.field, &fib.split, sampler, tol)?;
    let worst_block = [&proj.base_from_fiber, &proj.fiber_dependence]
        .into_iter()
        .flatten()
        .fold(None::<&fibration::BlockWitness>, |m, w| match m {
            Some(m) if m.value >= w.value => Some(m),
            _ => Some(w),
        });
    let witness = worst_block.filter(|_| !proj.holds).map(|w| {
        format!(
            "entry ({}, {}) = {:e} at {}",
            w.entry.0 + 1,
            w.entry.1 + 1,
            w.value,
            fmt_vec(&w.point)
        )
    });
    let mut detail = serde_json::to_value(&proj).unwrap_or_default();
    if let (Some(n0), Some(obj)) = (&proj.projected, detail.as_object_mut()) {
        obj.insert("projected".into(), json!(n0.display()));
    }
    let mut checks = vec![
        Check::new("project", name, "projectable", Role::Verdict, proj.holds)
            .value(worst_block.map_or(0.0, |w| w.value), tol)
            .witness(witness)
            .detail(&detail),
    ];
    if !proj.holds {
        return Ok(checks);
    }

    let t = fibration::check_theorem_main(&op.field, &fib.split, sampler, tol)?;
    let witness = t
        .identity_witness
        .as_ref()
        .filter(|_| t.identity_residual > 0.0)
        .map(|(q, (i, j))| format!("(e{}, e{}) at {}", i + 1, j + 1, fmt_vec(q)));
    checks.push(
        Check::new(
            "project",
            name,
            "projection_identity",
            Role::Verdict,
            t.identity_residual <= tol,
        )
        .value(t.identity_residual, tol)
        .witness(witness)
        .detail(&t),
    );
    checks.push(
        Check::new(
            "project",
            name,
            "torsion_vertical",
            Role::Info,
            t.torsion_vertical,
        )
        .value(t.vertical_defect, tol),
    );
    checks.push(
        Check::new(
            "project",
            name,
            "base_nijenhuis",
            Role::Info,
            t.base_nijenhuis,
        )
        .value(t.base_torsion, tol),
    );
    checks.push(Check::new(
        "project",
        name,
        "vertical_iff_base_nijenhuis",
        Role::Verdict,
        t.iff_agrees,
    ));

    if fib.check_complex {
        let c = fibration::check_complex_projection(&op.field, &fib.split, sampler, tol)?;
        checks.push(
            Check::new("project", name, "projects_to_complex", Role::Info, c.holds).detail(&c),
        );
        checks.push(Check::new(
            "project",
            name,
            "complex_routes_agree",
            Role::Verdict,
            c.routes_agree,
        ));
    }
    Ok(checks)
}

/// Nijenhuis condition on the Lie algebra (or modulo the isotropy algebra),
/// invariance under the isotropy, and optionally the complex criteria.
pub fn cmd_liealg(p: &Problem) -> Result<Vec<Check>> {
    let tol = p.settings.torsion_tol;
    let a = p
        .algebra
        .as_ref()
        .ok_or_else(|| Error::Problem("problem declares no algebra".into()))?;
    let datum = &a.datum;
    let subject = datum.algebra.name();
    let isotropy = !datum.k_basis.is_empty();
    let mut checks = Vec::new();

    let v = liealg::alg_is_nijenhuis(&datum.algebra, &a.operator, tol)?;
    let witness = v
        .witness
        .as_ref()
        .filter(|_| v.worst_norm > 0.0)
        .map(|((i, j), t)| format!("T(e{}, e{}) = {}", i + 1, j + 1, fmt_vec(t)));
    let role = if isotropy { Role::Info } else { Role::Verdict };
    checks.push(
        Check::new("liealg", subject, "nijenhuis", role, v.holds)
            .value(v.worst_norm, tol)
            .witness(witness)
            .detail(&v),
    );
    if v.holds {
        checks.push(
            Check::new(
                "liealg",
                subject,
                "contracted_bracket_is_lie",
                Role::Verdict,
                v.contracted_is_lie,
            )
            .value(v.contracted_jacobi, liealg::DATUM_TOL),
        );
    }

    let proj = liealg::check_homogeneous_projectable(datum, &a.operator, tol)?;
    let worst = [&proj.preserves_k, &proj.ad_condition, &proj.infinitesimal]
        .into_iter()
        .find(|m| !m.holds)
        .and_then(|m| m.witness.clone());
    checks.push(
        Check::new(
            "liealg",
            subject,
            "homogeneous_projectable",
            Role::Verdict,
            proj.holds,
        )
        .value(
            proj.preserves_k
                .worst_residual
                .max(proj.ad_condition.worst_residual)
                .max(proj.infinitesimal.worst_residual),
            tol,
        )
        .witness(worst)
        .detail(&proj),
    );
    if !proj.holds {
        return Ok(checks);
    }
    if isotropy {
        let m = liealg::check_torsion_in_k(datum, &a.operator, tol)?;
        checks.push(
            Check::new("liealg", subject, "torsion_in_k", Role::Verdict, m.holds)
                .value(m.worst_residual, tol)
                .witness(m.witness.clone().filter(|_| !m.holds))
                .detail(&m),
        );
    }
    if a.check_complex {
        let c = liealg::check_homogeneous_complex(datum, &a.operator, tol)?;
        let witness = [&c.k_valued.square, &c.k_valued.torsion, &c.z_plus.closure]
            .into_iter()
            .find(|m| !m.holds)
            .and_then(|m| m.witness.clone());
        checks.push(
            Check::new(
                "liealg",
                subject,
                "homogeneous_complex",
                Role::Verdict,
                c.holds,
            )
            .witness(witness)
            .detail(&c),
        );
        checks.push(Check::new(
            "liealg",
            subject,
            "complex_routes_agree",
            Role::Verdict,
            c.routes_agree,
        ));
    }
    Ok(checks)
}
