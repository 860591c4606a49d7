//! Finite-dimensional real Lie algebras given by structure constants, and the
//! algebraic criteria for invariant operators on homogeneous spaces `G/K`.
//!
//! `[e_i, e_j] = Σ_k c^k_ij e_k`. Complex vectors are pairs of real vectors;
//! the bracket is extended complex-bilinearly.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{check_dim, Error, Result};

/// Antisymmetry and Jacobi tolerance for structure constants.
pub const STRUCTURE_TOL: f64 = 1e-12;
/// Tolerance for datum invariants and the Jacobi check of contracted brackets.
pub const DATUM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LieAlgebra {
    name: String,
    dim: usize,
    /// `c[k][i][j]` flattened as `k·n² + i·n + j`.
    constants: Vec<f64>,
}

impl LieAlgebra {
    /// Validates antisymmetry and the Jacobi identity on all basis triples.
    pub fn new(name: impl Into<String>, c: &[Vec<Vec<f64>>]) -> Result<Self> {
        let n = c.len();
        if n == 0 {
            return Err(Error::InvalidAlgebra(
                "algebra must have positive dimension".into(),
            ));
        }
        let mut constants: Vec<f64> = Vec::with_capacity(n * n * n);
        for (k, slab) in c.iter().enumerate() {
            if slab.len() != n || slab.iter().any(|row| row.len() != n) {
                return Err(Error::InvalidAlgebra(format!(
                    "structure constants must be {n}x{n}x{n}; slab {} has the wrong shape",
                    k + 1
                )));
            }
            constants.extend(slab.iter().flatten());
        }
        if let Some(v) = constants.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidAlgebra(format!(
                "non-finite structure constant {v}"
            )));
        }
        let alg = Self {
            name: name.into(),
            dim: n,
            constants,
        };
        alg.validate()?;
        Ok(alg)
    }

    /// Builds from the nonzero brackets `[e_i, e_j] = Σ coef·e_k`, `i < j`,
    /// with 0-based indices.
    pub fn from_brackets(
        name: impl Into<String>,
        n: usize,
        brackets: &[(usize, usize, &[(usize, f64)])],
    ) -> Result<Self> {
        let mut c = vec![vec![vec![0.0; n]; n]; n];
        for &(i, j, terms) in brackets {
            for &(k, coef) in terms {
                if i >= n || j >= n || k >= n {
                    return Err(Error::IndexOutOfRange {
                        index: i.max(j).max(k),
                        dim: n,
                    });
                }
                c[k][i][j] += coef;
                c[k][j][i] -= coef;
            }
        }
        Self::new(name, &c)
    }

    fn validate(&self) -> Result<()> {
        let n = self.dim;
        let cmax = self.constants.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let s = self.c(k, i, j) + self.c(k, j, i);
                    if s.abs() > STRUCTURE_TOL * cmax {
                        return Err(Error::InvalidAlgebra(format!(
                            "antisymmetry fails: c^{}_{{{}{}}} + c^{}_{{{}{}}} = {s:e}",
                            k + 1,
                            i + 1,
                            j + 1,
                            k + 1,
                            j + 1,
                            i + 1
                        )));
                    }
                }
            }
        }
        let (r, triple) = jacobi_defect(n, |x, y| self.bracket_unchecked(x, y));
        if r > STRUCTURE_TOL * cmax * cmax {
            let (i, j, l) = triple.expect("defect implies a triple");
            return Err(Error::InvalidAlgebra(format!(
                "Jacobi identity fails on (e{}, e{}, e{}) by {r:e}",
                i + 1,
                j + 1,
                l + 1
            )));
        }
        Ok(())
    }

    pub fn abelian(n: usize) -> Result<Self> {
        Self::from_brackets(format!("abelian_{n}"), n, &[])
    }

    /// `[e1, e2] = e2`, the Lie algebra of `x ↦ ax + b`.
    pub fn affine_2d() -> Self {
        Self::from_brackets("affine_2d", 2, &[(0, 1, &[(1, 1.0)])]).expect("valid constants")
    }

    /// `[e_i, e_j] = ε_ijk e_k`.
    pub fn so3() -> Self {
        Self::from_brackets(
            "so3",
            3,
            &[
                (0, 1, &[(2, 1.0)]),
                (1, 2, &[(0, 1.0)]),
                (0, 2, &[(1, -1.0)]),
            ],
        )
        .expect("valid constants")
    }

    /// `[e1, e2] = e3`, `e3` central.
    pub fn heisenberg_3() -> Self {
        Self::from_brackets("heisenberg_3", 3, &[(0, 1, &[(2, 1.0)])]).expect("valid constants")
    }

    /// Catalogue lookup: `abelian_<n>`, `affine_2d`, `so3`, `heisenberg_3`.
    pub fn catalogue(name: &str) -> Result<Self> {
        match name {
            "affine_2d" => Ok(Self::affine_2d()),
            "so3" => Ok(Self::so3()),
            "heisenberg_3" => Ok(Self::heisenberg_3()),
            _ => match name.strip_prefix("abelian_").and_then(|d| d.parse::<usize>().ok()) {
                Some(n) if (1..=crate::jets::MAX_DIM).contains(&n) => Self::abelian(n),
                _ => Err(Error::InvalidAlgebra(format!(
                    "unknown catalogue algebra '{name}' (known: abelian_<n>, affine_2d, so3, heisenberg_3)"
                ))),
            },
        }
    }

    /// `self ⊕ other`, with the basis of `other` appended.
    pub fn direct_sum(&self, other: &LieAlgebra) -> LieAlgebra {
        let (a, b) = (self.dim, other.dim);
        let n = a + b;
        let mut c = vec![vec![vec![0.0; n]; n]; n];
        for k in 0..a {
            for i in 0..a {
                for j in 0..a {
                    c[k][i][j] = self.c(k, i, j);
                }
            }
        }
        for k in 0..b {
            for i in 0..b {
                for j in 0..b {
                    c[a + k][a + i][a + j] = other.c(k, i, j);
                }
            }
        }
        LieAlgebra {
            name: format!("{}+{}", self.name, other.name),
            dim: n,
            constants: c.into_iter().flatten().flatten().collect(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `c^k_ij`.
    pub fn c(&self, k: usize, i: usize, j: usize) -> f64 {
        let n = self.dim;
        self.constants[k * n * n + i * n + j]
    }

    pub fn structure_constants(&self) -> Vec<Vec<Vec<f64>>> {
        let n = self.dim;
        (0..n)
            .map(|k| {
                (0..n)
                    .map(|i| (0..n).map(|j| self.c(k, i, j)).collect())
                    .collect()
            })
            .collect()
    }

    pub fn basis(&self, i: usize) -> DVector<f64> {
        let mut e = DVector::zeros(self.dim);
        e[i] = 1.0;
        e
    }

    fn bracket_unchecked(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let n = self.dim;
        let mut out = DVector::zeros(n);
        for i in 0..n {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                let w = x[i] * y[j];
                if w == 0.0 {
                    continue;
                }
                for k in 0..n {
                    out[k] += self.c(k, i, j) * w;
                }
            }
        }
        out
    }

    fn check_vec(&self, v: &DVector<f64>) -> Result<()> {
        check_dim("algebra vector length", self.dim, v.len())
    }

    fn check_op(&self, m: &DMatrix<f64>) -> Result<()> {
        check_dim("algebra operator rows", self.dim, m.nrows())?;
        check_dim("algebra operator columns", self.dim, m.ncols())
    }
}

fn jacobi_defect(
    n: usize,
    br: impl Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64>,
) -> (f64, Option<(usize, usize, usize)>) {
    let e = |i: usize| {
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        v
    };
    let mut worst = (0.0, None);
    for i in 0..n {
        for j in i + 1..n {
            for l in j + 1..n {
                let (a, b, c) = (e(i), e(j), e(l));
                let s = br(&a, &br(&b, &c)) + br(&b, &br(&c, &a)) + br(&c, &br(&a, &b));
                let r = s.amax();
                if r > worst.0 {
                    worst = (r, Some((i, j, l)));
                }
            }
        }
    }
    worst
}

/// `[X, Y]`.
pub fn alg_bracket(alg: &LieAlgebra, x: &DVector<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    alg.check_vec(x)?;
    alg.check_vec(y)?;
    Ok(alg.bracket_unchecked(x, y))
}

fn contracted(
    alg: &LieAlgebra,
    n: &DMatrix<f64>,
    x: &DVector<f64>,
    y: &DVector<f64>,
) -> DVector<f64> {
    let (nx, ny) = (n * x, n * y);
    alg.bracket_unchecked(&nx, y) + alg.bracket_unchecked(x, &ny) - n * alg.bracket_unchecked(x, y)
}

fn torsion(alg: &LieAlgebra, n: &DMatrix<f64>, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
    alg.bracket_unchecked(&(n * x), &(n * y)) - n * contracted(alg, n, x, y)
}

/// `[NX, Y] + [X, NY] - N[X, Y]`.
pub fn alg_contracted_bracket(
    alg: &LieAlgebra,
    n: &DMatrix<f64>,
    x: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<DVector<f64>> {
    alg.check_op(n)?;
    alg.check_vec(x)?;
    alg.check_vec(y)?;
    Ok(contracted(alg, n, x, y))
}

/// `[NX, NY] - N([NX, Y] + [X, NY] - N[X, Y])`.
pub fn alg_torsion(
    alg: &LieAlgebra,
    n: &DMatrix<f64>,
    x: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<DVector<f64>> {
    alg.check_op(n)?;
    alg.check_vec(x)?;
    alg.check_vec(y)?;
    Ok(torsion(alg, n, x, y))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgNijenhuisVerdict {
    pub holds: bool,
    pub tol: f64,
    pub worst_norm: f64,
    /// Basis pair `(i, j)`, 0-based, with the largest torsion and its value.
    pub witness: Option<((usize, usize), Vec<f64>)>,
    /// Worst Jacobi defect of the contracted bracket over basis triples.
    pub contracted_jacobi: f64,
    /// `contracted_jacobi ≤ 1e-10`.
    pub contracted_is_lie: bool,
}

/// Exhaustive torsion check over basis pairs `i < j`.
pub fn alg_is_nijenhuis(
    alg: &LieAlgebra,
    n: &DMatrix<f64>,
    tol: f64,
) -> Result<AlgNijenhuisVerdict> {
    alg.check_op(n)?;
    let d = alg.dim;
    let mut worst: (f64, Option<((usize, usize), Vec<f64>)>) = (0.0, None);
    for i in 0..d {
        for j in i + 1..d {
            let t = torsion(alg, n, &alg.basis(i), &alg.basis(j));
            let r = t.amax();
            if worst.1.is_none() || r > worst.0 {
                worst = (r, Some(((i, j), t.as_slice().to_vec())));
            }
        }
    }
    let (contracted_jacobi, _) = jacobi_defect(d, |x, y| contracted(alg, n, x, y));
    Ok(AlgNijenhuisVerdict {
        holds: worst.0 <= tol,
        tol,
        worst_norm: worst.0,
        witness: worst.1,
        contracted_jacobi,
        contracted_is_lie: contracted_jacobi <= DATUM_TOL,
    })
}

/// Orthonormal basis of a real subspace, built by twice-iterated Gram–Schmidt.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    ambient: usize,
    basis: Vec<DVector<f64>>,
}

impl Subspace {
    pub fn zero(ambient: usize) -> Self {
        Self {
            ambient,
            basis: Vec::new(),
        }
    }

    /// Span of `vectors`; a vector is dropped as dependent when its residual
    /// is at most `tol·(1 + |v|)`.
    pub fn span<'a>(
        ambient: usize,
        vectors: impl IntoIterator<Item = &'a DVector<f64>>,
        tol: f64,
    ) -> Self {
        let mut s = Self::zero(ambient);
        for v in vectors {
            s.push(v, tol);
        }
        s
    }

    /// Adds `v` if independent; returns whether it was added.
    pub fn push(&mut self, v: &DVector<f64>, tol: f64) -> bool {
        let r = self.reject(v);
        let norm = r.norm();
        if norm <= tol * (1.0 + v.norm()) {
            return false;
        }
        self.basis.push(r / norm);
        true
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    /// Component of `v` orthogonal to the subspace.
    pub fn reject(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut r = v.clone();
        for _ in 0..2 {
            for q in &self.basis {
                let c = q.dot(&r);
                r.axpy(-c, q, 1.0);
            }
        }
        r
    }

    /// Least-squares distance from `v` to the subspace.
    pub fn residual(&self, v: &DVector<f64>) -> f64 {
        self.reject(v).norm()
    }

    pub fn contains(&self, v: &DVector<f64>, tol: f64) -> bool {
        self.residual(v) <= tol * (1.0 + v.norm())
    }
}

/// `re + i·im` realified as `[re; im]`.
fn realify(re: &DVector<f64>, im: &DVector<f64>) -> DVector<f64> {
    let n = re.len();
    let mut out = DVector::zeros(2 * n);
    out.rows_mut(0, n).copy_from(re);
    out.rows_mut(n, n).copy_from(im);
    out
}

#[derive(Debug, Clone)]
pub struct HomogeneousDatum {
    pub algebra: LieAlgebra,
    /// Spanning vectors of the isotropy subalgebra `𝔨`.
    pub k_basis: Vec<DVector<f64>>,
    /// Matrices of `Ad_k` for sampled elements of `K`.
    pub ad_samples: Vec<DMatrix<f64>>,
}

impl HomogeneousDatum {
    /// Checks that `𝔨` is a subalgebra with independent spanning vectors and
    /// that every `Ad` sample is an automorphism preserving `𝔨`.
    pub fn new(
        algebra: LieAlgebra,
        k_basis: Vec<DVector<f64>>,
        ad_samples: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        let n = algebra.dim;
        for v in &k_basis {
            algebra.check_vec(v)?;
        }
        let k = Subspace::span(n, &k_basis, DATUM_TOL);
        if k.dim() < k_basis.len() {
            return Err(Error::InvalidAlgebra(format!(
                "k_basis is rank-deficient: {} vectors span a {}-dimensional subspace",
                k_basis.len(),
                k.dim()
            )));
        }
        for (a, u) in k_basis.iter().enumerate() {
            for (b, v) in k_basis.iter().enumerate().skip(a + 1) {
                if !k.contains(&algebra.bracket_unchecked(u, v), DATUM_TOL) {
                    return Err(Error::InvalidAlgebra(format!(
                        "k is not a subalgebra: [k{}, k{}] leaves span(k)",
                        a + 1,
                        b + 1
                    )));
                }
            }
        }
        for (s, ad) in ad_samples.iter().enumerate() {
            algebra.check_op(ad)?;
            let name = format!("ad_samples[{s}]");
            if Subspace::span(
                n,
                ad.column_iter()
                    .map(|c| c.into_owned())
                    .collect::<Vec<_>>()
                    .iter(),
                DATUM_TOL,
            )
            .dim()
                < n
            {
                return Err(Error::InvalidAlgebra(format!("{name} is singular")));
            }
            let scale = 1.0 + ad.amax() * ad.amax();
            for i in 0..n {
                for j in i + 1..n {
                    let (ei, ej) = (algebra.basis(i), algebra.basis(j));
                    let lhs = ad * algebra.bracket_unchecked(&ei, &ej);
                    let rhs = algebra.bracket_unchecked(&(ad * &ei), &(ad * &ej));
                    if (lhs - rhs).amax() > DATUM_TOL * scale {
                        return Err(Error::InvalidAlgebra(format!(
                            "{name} is not an automorphism on (e{}, e{})",
                            i + 1,
                            j + 1
                        )));
                    }
                }
            }
            for (a, v) in k_basis.iter().enumerate() {
                if !k.contains(&(ad * v), DATUM_TOL) {
                    return Err(Error::InvalidAlgebra(format!(
                        "{name} maps k{} out of k",
                        a + 1
                    )));
                }
            }
        }
        Ok(Self {
            algebra,
            k_basis,
            ad_samples,
        })
    }

    /// Trivial isotropy: `K = {e}`.
    pub fn group(algebra: LieAlgebra) -> Self {
        Self {
            algebra,
            k_basis: Vec::new(),
            ad_samples: Vec::new(),
        }
    }

    pub fn k_subspace(&self) -> Subspace {
        Subspace::span(self.algebra.dim, &self.k_basis, DATUM_TOL)
    }
}

/// Worst membership residual over a family of vectors tested against a
/// subspace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MembershipCheck {
    pub holds: bool,
    pub worst_residual: f64,
    pub witness: Option<String>,
}

impl MembershipCheck {
    fn new() -> Self {
        Self {
            holds: true,
            worst_residual: 0.0,
            witness: None,
        }
    }

    fn test(&mut self, s: &Subspace, v: &DVector<f64>, tol: f64, label: impl FnOnce() -> String) {
        let r = s.residual(v);
        let ok = r <= tol * (1.0 + v.norm());
        if (!ok && self.holds)
            || (ok == self.holds && (self.witness.is_none() || r > self.worst_residual))
        {
            self.witness = Some(label());
        }
        self.worst_residual = self.worst_residual.max(r);
        self.holds &= ok;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomogeneousProjectability {
    pub holds: bool,
    pub tol: f64,
    /// `N v ∈ 𝔨` for `v` in `k_basis`.
    pub preserves_k: MembershipCheck,
    /// `(N·Ad - Ad·N) e_i ∈ 𝔨` for every sample.
    pub ad_condition: MembershipCheck,
    /// `[Z, N e_i] - N[Z, e_i] ∈ 𝔨` for `Z` in `k_basis`: the derivative of
    /// the Ad-condition along the identity component of `K`.
    pub infinitesimal: MembershipCheck,
}

pub fn check_homogeneous_projectable(
    datum: &HomogeneousDatum,
    n: &DMatrix<f64>,
    tol: f64,
) -> Result<HomogeneousProjectability> {
    let alg = &datum.algebra;
    alg.check_op(n)?;
    let k = datum.k_subspace();
    let mut preserves_k = MembershipCheck::new();
    for (a, v) in datum.k_basis.iter().enumerate() {
        preserves_k.test(&k, &(n * v), tol, || format!("N k{}", a + 1));
    }
    let mut ad_condition = MembershipCheck::new();
    for (s, ad) in datum.ad_samples.iter().enumerate() {
        let comm = n * ad - ad * n;
        for i in 0..alg.dim {
            ad_condition.test(&k, &comm.column(i).into_owned(), tol, || {
                format!("(N Ad{s} - Ad{s} N) e{}", i + 1)
            });
        }
    }
    let mut infinitesimal = MembershipCheck::new();
    for (a, z) in datum.k_basis.iter().enumerate() {
        for i in 0..alg.dim {
            let e = alg.basis(i);
            let v = alg.bracket_unchecked(z, &(n * &e)) - n * alg.bracket_unchecked(z, &e);
            infinitesimal.test(&k, &v, tol, || {
                format!("[k{0}, N e{1}] - N[k{0}, e{1}]", a + 1, i + 1)
            });
        }
    }
    Ok(HomogeneousProjectability {
        holds: preserves_k.holds && ad_condition.holds && infinitesimal.holds,
        tol,
        preserves_k,
        ad_condition,
        infinitesimal,
    })
}

fn torsion_in_k(datum: &HomogeneousDatum, n: &DMatrix<f64>, tol: f64) -> MembershipCheck {
    let alg = &datum.algebra;
    let k = datum.k_subspace();
    let mut check = MembershipCheck::new();
    for i in 0..alg.dim {
        for j in i + 1..alg.dim {
            let t = torsion(alg, n, &alg.basis(i), &alg.basis(j));
            check.test(&k, &t, tol, || format!("T(e{}, e{})", i + 1, j + 1));
        }
    }
    check
}

/// `T_N(e_i, e_j) ∈ 𝔨` for all basis pairs: the torsion of the operator
/// induced on `G/K` vanishes.
pub fn check_torsion_in_k(
    datum: &HomogeneousDatum,
    n: &DMatrix<f64>,
    tol: f64,
) -> Result<MembershipCheck> {
    datum.algebra.check_op(n)?;
    Ok(torsion_in_k(datum, n, tol))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KValuedRoute {
    /// `(N² + id) e_i ∈ 𝔨`.
    pub square: MembershipCheck,
    /// `T_N(e_i, e_j) ∈ 𝔨`.
    pub torsion: MembershipCheck,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZPlusRoute {
    /// Real dimension of `{X + iY : Y - NX ∈ 𝔨}`, which is `n + dim 𝔨`.
    pub real_dim: usize,
    /// Real dimension of the complex span of its generators.
    pub complex_span_real_dim: usize,
    /// The real subspace is closed under multiplication by `i`.
    pub complex_subspace: bool,
    /// Brackets of generators lie in their complex span.
    pub closure: MembershipCheck,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomogeneousComplexVerdict {
    pub k_valued: KValuedRoute,
    pub z_plus: ZPlusRoute,
    pub holds: bool,
    pub routes_agree: bool,
}

/// Whether `N` induces a complex structure on `G/K`, decided twice: by the
/// `𝔨`-valuedness of `N² + id` and `T_N`, and by `𝒵₊` being a complex Lie
/// subalgebra of `𝔤^ℂ`.
pub fn check_homogeneous_complex(
    datum: &HomogeneousDatum,
    n: &DMatrix<f64>,
    tol: f64,
) -> Result<HomogeneousComplexVerdict> {
    let proj = check_homogeneous_projectable(datum, n, tol)?;
    if !proj.holds {
        return Err(Error::Precondition(format!(
            "operator is not projectable to G/K (worst residual {:e})",
            proj.preserves_k
                .worst_residual
                .max(proj.ad_condition.worst_residual)
                .max(proj.infinitesimal.worst_residual)
        )));
    }
    let alg = &datum.algebra;
    let d = alg.dim;
    let k = datum.k_subspace();

    let mut square = MembershipCheck::new();
    let sq = n * n + DMatrix::identity(d, d);
    for i in 0..d {
        square.test(&k, &sq.column(i).into_owned(), tol, || {
            format!("(N^2 + id) e{}", i + 1)
        });
    }
    let tors = torsion_in_k(datum, n, tol);
    let k_valued = KValuedRoute {
        holds: square.holds && tors.holds,
        square,
        torsion: tors,
    };

    let zero = DVector::zeros(d);
    let mut gens: Vec<(DVector<f64>, DVector<f64>, String)> = Vec::new();
    for a in 0..d {
        let e = alg.basis(a);
        let ne = n * &e;
        gens.push((e, ne, format!("e{0} + iNe{0}", a + 1)));
    }
    for (b, v) in datum.k_basis.iter().enumerate() {
        gens.push((v.clone(), zero.clone(), format!("k{}", b + 1)));
        gens.push((zero.clone(), v.clone(), format!("ik{}", b + 1)));
    }
    let real_dim = d + k.dim();
    let mut span = Subspace::zero(2 * d);
    for (re, im, _) in &gens {
        span.push(&realify(re, im), tol);
        span.push(&realify(&-im, re), tol);
    }
    let complex_subspace = span.dim() == real_dim;
    let mut closure = MembershipCheck::new();
    for s in 0..gens.len() {
        for t in s + 1..gens.len() {
            let (a, b, _) = &gens[s];
            let (c, dd, _) = &gens[t];
            let br = |x: &DVector<f64>, y: &DVector<f64>| alg.bracket_unchecked(x, y);
            let re = br(a, c) - br(b, dd);
            let im = br(a, dd) + br(b, c);
            closure.test(&span, &realify(&re, &im), tol, || {
                format!("[{}, {}]", gens[s].2, gens[t].2)
            });
        }
    }
    let z_plus = ZPlusRoute {
        real_dim,
        complex_span_real_dim: span.dim(),
        complex_subspace,
        holds: complex_subspace && closure.holds,
        closure,
    };
    Ok(HomogeneousComplexVerdict {
        holds: k_valued.holds && z_plus.holds,
        routes_agree: k_valued.holds == z_plus.holds,
        k_valued,
        z_plus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::Coords;
    use crate::geometry::{lie_bracket, VectorField};

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn diag(xs: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&v(xs))
    }

    fn rot() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])
    }

    fn block(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        let n = a.nrows() + b.nrows();
        let mut m = DMatrix::zeros(n, n);
        m.view_mut((0, 0), a.shape()).copy_from(a);
        m.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
        m
    }

    #[test]
    fn brackets() {
        let so3 = LieAlgebra::so3();
        assert_eq!(
            alg_bracket(&so3, &so3.basis(0), &so3.basis(1)).unwrap(),
            so3.basis(2)
        );
        let x = v(&[0.3, -1.2, 2.0]);
        assert_eq!(alg_bracket(&so3, &x, &x).unwrap().amax(), 0.0);
        let aff = LieAlgebra::affine_2d();
        assert_eq!(
            alg_bracket(&aff, &aff.basis(1), &aff.basis(0)).unwrap(),
            v(&[0.0, -1.0])
        );
        assert!(alg_bracket(&aff, &v(&[1.0]), &aff.basis(0)).is_err());
    }

    #[test]
    fn invalid_constants_name_the_triple() {
        let mut c = vec![vec![vec![0.0; 2]; 2]; 2];
        c[1][0][1] = 1.0;
        let err = LieAlgebra::new("bad", &c).unwrap_err().to_string();
        assert!(err.contains("antisymmetry"), "{err}");
        // [e1,e2] = e3, [e2,e3] = e1, [e1,e3] = e3 breaks Jacobi
        let err = LieAlgebra::from_brackets(
            "bad",
            3,
            &[
                (0, 1, &[(2, 1.0)]),
                (1, 2, &[(0, 1.0)]),
                (0, 2, &[(2, 1.0)]),
            ],
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("(e1, e2, e3)"), "{err}");
        assert!(LieAlgebra::catalogue("abelian_4").unwrap().dim() == 4);
        assert!(LieAlgebra::catalogue("sl2").is_err());
    }

    #[test]
    fn so3_torsion_values() {
        let so3 = LieAlgebra::so3();
        let n = diag(&[1.0, 1.0, 2.0]);
        let e = |i| so3.basis(i);
        assert_eq!(alg_torsion(&so3, &n, &e(0), &e(1)).unwrap(), e(2));
        assert_eq!(alg_torsion(&so3, &n, &e(1), &e(2)).unwrap().amax(), 0.0);
        assert_eq!(alg_torsion(&so3, &n, &e(0), &e(2)).unwrap().amax(), 0.0);
        assert_eq!(
            alg_contracted_bracket(&so3, &n, &e(0), &e(1))
                .unwrap()
                .amax(),
            0.0
        );
        let verdict = alg_is_nijenhuis(&so3, &n, 1e-12).unwrap();
        assert!(!verdict.holds);
        assert_eq!(verdict.witness, Some(((0, 1), vec![0.0, 0.0, 1.0])));
    }

    #[test]
    fn contracted_bracket_extremes() {
        let h = LieAlgebra::heisenberg_3();
        let (x, y) = (v(&[1.0, 2.0, 0.5]), v(&[-0.5, 1.0, 3.0]));
        let id = DMatrix::identity(3, 3);
        assert_eq!(
            alg_contracted_bracket(&h, &id, &x, &y).unwrap(),
            alg_bracket(&h, &x, &y).unwrap()
        );
        assert_eq!(
            alg_contracted_bracket(&h, &DMatrix::zeros(3, 3), &x, &y)
                .unwrap()
                .amax(),
            0.0
        );
        assert_eq!(alg_torsion(&h, &(id * 2.5), &x, &y).unwrap().amax(), 0.0);
    }

    #[test]
    fn diagonal_on_affine_and_polynomials_in_ad() {
        let aff = LieAlgebra::affine_2d();
        for (a, b) in [(1.0, 2.0), (-3.0, 0.5), (0.0, 7.0)] {
            let verdict = alg_is_nijenhuis(&aff, &diag(&[a, b]), 1e-13).unwrap();
            assert!(verdict.holds && verdict.contracted_is_lie);
        }
        let z = v(&[0.7, -1.3]);
        let ad = DMatrix::from_fn(2, 2, |k, j| (0..2).map(|i| z[i] * aff.c(k, i, j)).sum());
        let n = &ad * &ad * 2.0 - &ad + DMatrix::identity(2, 2) * 0.5;
        assert!(alg_is_nijenhuis(&aff, &n, 1e-12).unwrap().holds);
        let abelian = LieAlgebra::abelian(3).unwrap();
        assert!(
            alg_is_nijenhuis(
                &abelian,
                &DMatrix::from_fn(3, 3, |i, j| (i * 3 + j) as f64),
                0.0
            )
            .unwrap()
            .holds
        );
    }

    #[test]
    fn subspace_membership() {
        let s = Subspace::span(
            3,
            &[
                v(&[1.0, 1.0, 0.0]),
                v(&[2.0, 2.0, 0.0]),
                v(&[0.0, 1.0, 0.0]),
            ],
            1e-12,
        );
        assert_eq!(s.dim(), 2);
        assert!(s.contains(&v(&[3.0, -2.0, 0.0]), 1e-12));
        assert!((s.residual(&v(&[0.0, 5.0, 2.0])) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn datum_validation() {
        let a3 = LieAlgebra::abelian(3).unwrap();
        let err = HomogeneousDatum::new(
            a3.clone(),
            vec![v(&[0.0, 0.0, 1.0]), v(&[0.0, 0.0, 2.0])],
            vec![],
        )
        .unwrap_err();
        assert!(err.to_string().contains("rank-deficient"));
        let so3 = LieAlgebra::so3();
        assert!(HomogeneousDatum::new(
            so3.clone(),
            vec![v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0])],
            vec![]
        )
        .is_err());
        assert!(HomogeneousDatum::new(so3.clone(), vec![], vec![diag(&[1.0, 1.0, 2.0])]).is_err());
        let swap = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(HomogeneousDatum::new(a3, vec![v(&[1.0, 0.0, 0.0])], vec![swap]).is_err());
    }

    #[test]
    fn ad_condition_failure_on_swap() {
        let swap = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let datum = HomogeneousDatum::new(
            LieAlgebra::abelian(3).unwrap(),
            vec![v(&[0.0, 0.0, 1.0])],
            vec![swap],
        )
        .unwrap();
        let verdict =
            check_homogeneous_projectable(&datum, &diag(&[1.0, 2.0, 5.0]), 1e-10).unwrap();
        assert!(!verdict.holds && verdict.preserves_k.holds);
        assert_eq!(
            verdict.ad_condition.witness.as_deref(),
            Some("(N Ad0 - Ad0 N) e1")
        );
        assert_eq!(verdict.ad_condition.worst_residual, 1.0);
        let id = DMatrix::identity(3, 3);
        assert!(
            check_homogeneous_projectable(&datum, &id, 1e-12)
                .unwrap()
                .holds
        );
        assert!(check_homogeneous_complex(&datum, &diag(&[1.0, 2.0, 5.0]), 1e-10).is_err());
    }

    #[test]
    fn flat_complex_on_vector_group() {
        let datum = HomogeneousDatum::group(LieAlgebra::abelian(2).unwrap());
        let verdict = check_homogeneous_complex(&datum, &rot(), 1e-12).unwrap();
        assert!(verdict.holds && verdict.routes_agree);
        let verdict = check_homogeneous_complex(&datum, &(rot() * 2.0), 1e-12).unwrap();
        assert!(!verdict.holds && verdict.routes_agree);
        assert!(!verdict.z_plus.complex_subspace);
    }

    #[test]
    fn complex_modulo_isotropy() {
        // so(3)/so(2) = S^2 with the rotation-invariant complex structure
        let so3 = LieAlgebra::so3();
        let (c, s) = (0.6_f64, 0.8_f64);
        let about_e3 = DMatrix::from_row_slice(3, 3, &[c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0]);
        let datum = HomogeneousDatum::new(so3, vec![v(&[0.0, 0.0, 1.0])], vec![about_e3]).unwrap();
        let n = block(&rot(), &diag(&[4.0]));
        let verdict = check_homogeneous_complex(&datum, &n, 1e-10).unwrap();
        assert!(verdict.holds && verdict.routes_agree, "{verdict:?}");
        assert_eq!(verdict.z_plus.real_dim, 4);
        // the k-component of N^2 + id is not seen by the base
        assert!(!alg_is_nijenhuis(&datum.algebra, &n, 1e-10).unwrap().holds);
    }

    #[test]
    fn isotropy_mismatch_fails_both_routes() {
        let h = LieAlgebra::heisenberg_3().direct_sum(&LieAlgebra::abelian(1).unwrap());
        let mut n = DMatrix::zeros(4, 4);
        n[(2, 0)] = 1.0;
        n[(0, 2)] = -1.0;
        n[(3, 1)] = 1.0;
        n[(1, 3)] = -1.0;
        let datum = HomogeneousDatum::group(h);
        let verdict = check_homogeneous_complex(&datum, &n, 1e-10).unwrap();
        assert!(!verdict.holds && verdict.routes_agree);
        assert!(verdict.k_valued.square.holds && !verdict.k_valued.torsion.holds);
        assert!(verdict.z_plus.complex_subspace && !verdict.z_plus.closure.holds);
    }

    #[test]
    fn left_and_right_invariant_frames_on_affine_group() {
        // g = (a, b) acting by x ↦ a x + b; e1 = d/da at the identity, e2 = d/db
        let coords = Coords::new(["a", "b"]).unwrap();
        let left = [
            VectorField::parse(coords.clone(), &["a", "0"]).unwrap(),
            VectorField::parse(coords.clone(), &["0", "a"]).unwrap(),
        ];
        let right = [
            VectorField::parse(coords.clone(), &["a", "b"]).unwrap(),
            VectorField::parse(coords, &["0", "1"]).unwrap(),
        ];
        let aff = LieAlgebra::affine_2d();
        let expected = alg_bracket(&aff, &aff.basis(0), &aff.basis(1)).unwrap();
        for p in [[1.3, -0.4], [0.2, 2.0], [-2.5, 0.7]] {
            let fields = |frame: &[VectorField; 2], w: &DVector<f64>| {
                &frame[0].eval(&p).unwrap() * w[0] + &frame[1].eval(&p).unwrap() * w[1]
            };
            let br_r = lie_bracket(&right[0], &right[1], &p).unwrap();
            assert!((br_r - fields(&right, &expected)).amax() <= 1e-8);
            let br_l = lie_bracket(&left[0], &left[1], &p).unwrap();
            assert!((br_l + fields(&left, &expected)).amax() <= 1e-8);
        }
    }
}
