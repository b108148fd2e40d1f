//! Completely positive maps on algebras and on modules, covariance, and a
//! seeded generator of covariant module CP maps obtained by compressing
//! amplified covariant representations.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cstar::{choi_blocks, labelled_images, unlabel_images, AlgebraElement, CStarAlgebra};
use crate::error::{Error, Result};
use crate::hilbmod::representation::{
    check_images, combine, labelled_module_images, unlabel_module_images,
};
use crate::hilbmod::{
    group_average, CovariantRepresentation, HilbertModule, ModuleDynamicalSystem,
    ModuleRepresentation, StandardAction, UnitaryRep,
};
use crate::numkernel::{
    dist, eye, fro, hermitian_eigendecomposition, least_squares_solve, op_norm, r, relative,
    unvec_row_major, vec_row_major, zeros, Mat, MatJson, Residual, Vector, C64,
};
use crate::rng::{ginibre, random_unitary, SeedStream};

/// Linear map `phi: A -> L(H)` stored on the matrix-unit basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CPMapAlgebra {
    pub algebra: CStarAlgebra,
    pub space_dim: usize,
    pub images: Vec<Mat>,
}

impl CPMapAlgebra {
    pub fn new(algebra: CStarAlgebra, space_dim: usize, images: Vec<Mat>) -> Result<Self> {
        if images.len() != algebra.dim()
            || images.iter().any(|m| m.shape() != (space_dim, space_dim))
        {
            return Err(Error::ShapeMismatch(format!(
                "algebra map needs {} images of size {space_dim}x{space_dim}",
                algebra.dim()
            )));
        }
        Ok(Self {
            algebra,
            space_dim,
            images,
        })
    }

    pub fn zero(algebra: &CStarAlgebra, space_dim: usize) -> Self {
        Self {
            algebra: algebra.clone(),
            space_dim,
            images: vec![zeros(space_dim, space_dim); algebra.dim()],
        }
    }

    /// `a -> sum_k K_k* a K_k` with each `K_k: H -> C^E`.
    pub fn from_kraus(algebra: &CStarAlgebra, kraus: &[Mat]) -> Result<Self> {
        let e = algebra.embed_dim();
        let h = kraus.first().map(|k| k.ncols()).unwrap_or(0);
        if kraus.iter().any(|k| k.shape() != (e, h)) {
            return Err(Error::ShapeMismatch(format!(
                "Kraus operators must be {e}x{h}"
            )));
        }
        let images = (0..algebra.dim())
            .map(|k| {
                let a = algebra.basis_element(k).embed();
                kraus
                    .iter()
                    .fold(zeros(h, h), |acc, kk| acc + kk.adjoint() * &a * kk)
            })
            .collect();
        Self::new(algebra.clone(), h, images)
    }

    pub fn apply_coords(&self, coords: &[C64]) -> Mat {
        let mut out = zeros(self.space_dim, self.space_dim);
        for (img, &w) in self.images.iter().zip(coords) {
            if w != C64::new(0.0, 0.0) {
                out += img * w;
            }
        }
        out
    }

    pub fn apply(&self, a: &AlgebraElement) -> Mat {
        self.apply_coords(a.coords().as_slice())
    }

    pub fn to_json(&self) -> AlgebraMapJson {
        AlgebraMapJson {
            space_dim: self.space_dim,
            images: labelled_images(&self.algebra, &self.images),
        }
    }
}

/// `{"space_dim": h, "images": {"b:i:j": Mat}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraMapJson {
    pub space_dim: usize,
    pub images: BTreeMap<String, MatJson>,
}

impl AlgebraMapJson {
    pub fn to_map(&self, alg: &CStarAlgebra) -> Result<CPMapAlgebra> {
        let images = unlabel_images(alg, &self.images, (self.space_dim, self.space_dim))?;
        CPMapAlgebra::new(alg.clone(), self.space_dim, images)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpReport {
    pub cp: bool,
    pub choi_min_eig: f64,
    /// `max |phi(a*) - phi(a)*|` over the basis.
    pub hermiticity: f64,
}

pub fn check_cp_map(phi: &CPMapAlgebra, tol: f64) -> CpReport {
    let choi = choi_blocks(&phi.algebra, &phi.images, tol);
    let alg = &phi.algebra;
    let mut herm = Residual::new();
    for k in 0..alg.dim() {
        let (b, i, j) = alg.basis_entry(k);
        herm.add(
            &phi.images[alg.basis_index(b, j, i)],
            &phi.images[k].adjoint(),
        );
    }
    CpReport {
        cp: choi.cp,
        choi_min_eig: choi.min_eig,
        hermiticity: herm.value(),
    }
}

/// `Phi: X -> L(H, K)` with companion `phi` such that
/// `Phi(x)* Phi(y) = phi(<x, y>)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModuleCPMap {
    pub module: HilbertModule,
    pub h_dim: usize,
    pub k_dim: usize,
    /// `K x H` per module basis element.
    pub images: Vec<Mat>,
    pub companion: CPMapAlgebra,
}

impl ModuleCPMap {
    pub fn new(
        module: HilbertModule,
        k_dim: usize,
        images: Vec<Mat>,
        companion: CPMapAlgebra,
    ) -> Result<Self> {
        if companion.algebra != *module.algebra() {
            return Err(Error::ShapeMismatch(
                "companion acts on a different algebra".into(),
            ));
        }
        let h_dim = companion.space_dim;
        check_images(&module, &images, (k_dim, h_dim))?;
        Ok(Self {
            module,
            h_dim,
            k_dim,
            images,
            companion,
        })
    }

    /// Builds `Phi` from its images, recovering `phi` through fullness.
    pub fn from_images(
        module: HilbertModule,
        h_dim: usize,
        k_dim: usize,
        images: Vec<Mat>,
        tol: f64,
    ) -> Result<Self> {
        check_images(&module, &images, (k_dim, h_dim))?;
        let (companion, _) = induced_algebra_cp(&module, &images, h_dim, tol)?;
        Self::new(module, k_dim, images, companion)
    }

    pub fn zero(module: &HilbertModule, h_dim: usize, k_dim: usize) -> Self {
        Self {
            module: module.clone(),
            h_dim,
            k_dim,
            images: vec![zeros(k_dim, h_dim); module.dim()],
            companion: CPMapAlgebra::zero(module.algebra(), h_dim),
        }
    }

    pub fn apply(&self, x: &Vector) -> Mat {
        combine(&self.images, x, (self.k_dim, self.h_dim))
    }

    pub fn to_json(&self) -> ModuleCpMapJson {
        ModuleCpMapJson {
            h_dim: self.h_dim,
            k_dim: self.k_dim,
            images: labelled_module_images(&self.module, &self.images),
            companion: Some(self.companion.to_json()),
        }
    }
}

/// `{"h_dim", "k_dim", "images": {"x:i": Mat}, "companion": {...}}`; a
/// missing companion is recovered from the images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleCpMapJson {
    pub h_dim: usize,
    pub k_dim: usize,
    pub images: BTreeMap<String, MatJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub companion: Option<AlgebraMapJson>,
}

impl ModuleCpMapJson {
    pub fn to_map(&self, module: &HilbertModule, tol: f64) -> Result<ModuleCPMap> {
        let images = unlabel_module_images(module, &self.images, (self.k_dim, self.h_dim))?;
        match &self.companion {
            Some(c) => {
                let companion = c.to_map(module.algebra())?;
                if companion.space_dim != self.h_dim {
                    return Err(Error::ShapeMismatch(
                        "companion space does not match h_dim".into(),
                    ));
                }
                ModuleCPMap::new(module.clone(), self.k_dim, images, companion)
            }
            None => ModuleCPMap::from_images(module.clone(), self.h_dim, self.k_dim, images, tol),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InducedCpReport {
    /// Relative least-squares residual of `phi S = T`.
    pub consistency: f64,
    pub choi_min_eig: f64,
}

/// Solves `phi` from `phi(<x_i, x_j>) = Phi(x_i)* Phi(x_j)` over the
/// spanning set of inner-product values.
pub fn induced_algebra_cp(
    module: &HilbertModule,
    images: &[Mat],
    h_dim: usize,
    tol: f64,
) -> Result<(CPMapAlgebra, InducedCpReport)> {
    let k_dim = images.first().map(|m| m.nrows()).unwrap_or(0);
    check_images(module, images, (k_dim, h_dim))?;
    module.require_full()?;
    let m = module.dim();
    let n = module.algebra().dim();
    let s = module.fullness_system();
    let mut target = zeros(h_dim * h_dim, m * m);
    for i in 0..m {
        for j in 0..m {
            target.set_column(
                i * m + j,
                &vec_row_major(&(images[i].adjoint() * &images[j])),
            );
        }
    }
    // Columns of `sol` are vec(phi(E_k)): sol S = T.
    let sol = least_squares_solve(&s.transpose(), &target.transpose())?.transpose();
    let consistency = relative(dist(&(&sol * &s), &target), fro(&target));
    if consistency > tol {
        return Err(Error::Inconsistent {
            residual: consistency,
        });
    }
    let phi_images = (0..n)
        .map(|k| unvec_row_major(sol.column(k).as_slice(), h_dim, h_dim))
        .collect();
    let phi = CPMapAlgebra::new(module.algebra().clone(), h_dim, phi_images)?;
    let rep = check_cp_map(&phi, tol);
    if !rep.cp {
        return Err(Error::NotCp {
            min_eig: rep.choi_min_eig,
        });
    }
    Ok((
        phi,
        InducedCpReport {
            consistency,
            choi_min_eig: rep.choi_min_eig,
        },
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModuleCpReport {
    /// `max |Phi(x_i)* Phi(x_j) - phi(<x_i, x_j>)|`.
    pub identity: f64,
    pub cp: bool,
    pub choi_min_eig: f64,
    pub hermiticity: f64,
}

impl ModuleCpReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.cp && self.identity <= tol && self.hermiticity <= tol
    }

    pub fn require(&self, tol: f64) -> Result<()> {
        if !self.cp {
            return Err(Error::NotCp {
                min_eig: self.choi_min_eig,
            });
        }
        if self.identity > tol || self.hermiticity > tol {
            return Err(Error::Inconsistent {
                residual: self.identity.max(self.hermiticity),
            });
        }
        Ok(())
    }
}

pub fn check_module_cp(phi: &ModuleCPMap, tol: f64) -> Result<ModuleCpReport> {
    check_images(&phi.module, &phi.images, (phi.k_dim, phi.h_dim))?;
    if phi.companion.space_dim != phi.h_dim || phi.companion.algebra != *phi.module.algebra() {
        return Err(Error::ShapeMismatch(
            "companion does not match the module map".into(),
        ));
    }
    let m = phi.module.dim();
    let mut identity = Residual::new();
    for i in 0..m {
        for j in 0..m {
            let lhs = phi.images[i].adjoint() * &phi.images[j];
            identity.add(&lhs, &phi.companion.apply(phi.module.inner_basis(i, j)));
        }
    }
    let cp = check_cp_map(&phi.companion, tol);
    Ok(ModuleCpReport {
        identity: identity.value(),
        cp: cp.cp,
        choi_min_eig: cp.choi_min_eig,
        hermiticity: cp.hermiticity,
    })
}

/// `Phi(x) = W* pi_X(x) V`, `phi(a) = V* pi_A(a) V`, for `V: H -> H'` and a
/// coisometry `W: K -> K'`.
pub fn cp_from_representation(pi: &ModuleRepresentation, v: &Mat, w: &Mat) -> Result<ModuleCPMap> {
    if v.nrows() != pi.h_dim() || w.nrows() != pi.k_dim {
        return Err(Error::ShapeMismatch(format!(
            "V must map into H' ({}) and W into K' ({}); got {}x{} and {}x{}",
            pi.h_dim(),
            pi.k_dim,
            v.nrows(),
            v.ncols(),
            w.nrows(),
            w.ncols()
        )));
    }
    let coiso = relative(
        dist(&(w * w.adjoint()), &eye(w.nrows())),
        (w.nrows() as f64).sqrt(),
    );
    if coiso > 1e-10 {
        return Err(Error::NotCoisometry { residual: coiso });
    }
    let images = pi.images.iter().map(|x| w.adjoint() * x * v).collect();
    let companion_images = pi
        .companion
        .images
        .iter()
        .map(|a| v.adjoint() * a * v)
        .collect();
    let companion = CPMapAlgebra::new(pi.module.algebra().clone(), v.ncols(), companion_images)?;
    ModuleCPMap::new(pi.module.clone(), w.ncols(), images, companion)
}

/// A module CP map with `Phi(eta_t x) = u'_t Phi(x) u_t*`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariantCPMap {
    pub base: ModuleCPMap,
    pub system: ModuleDynamicalSystem,
    pub u: UnitaryRep,
    pub u_prime: UnitaryRep,
}

impl CovariantCPMap {
    /// Shape- and group-checked wrapper; audit with [`check_covariance`].
    pub fn new(
        base: ModuleCPMap,
        system: ModuleDynamicalSystem,
        u: UnitaryRep,
        u_prime: UnitaryRep,
    ) -> Result<Self> {
        if base.module != *system.module() {
            return Err(Error::ShapeMismatch(
                "map and system use different modules".into(),
            ));
        }
        if u.group() != system.group() || u_prime.group() != system.group() {
            return Err(Error::GroupMismatch);
        }
        if u.dim() != base.h_dim || u_prime.dim() != base.k_dim {
            return Err(Error::ShapeMismatch(format!(
                "u must act on H ({}) and u' on K ({}); got {} and {}",
                base.h_dim,
                base.k_dim,
                u.dim(),
                u_prime.dim()
            )));
        }
        Ok(Self {
            base,
            system,
            u,
            u_prime,
        })
    }

    /// Any module CP map is covariant for the trivial group.
    pub fn trivial(base: ModuleCPMap) -> Self {
        let g = crate::hilbmod::FiniteGroup::trivial();
        let system = ModuleDynamicalSystem::trivial(g.clone(), base.module.clone());
        Self {
            u: UnitaryRep::trivial(&g, base.h_dim),
            u_prime: UnitaryRep::trivial(&g, base.k_dim),
            system,
            base,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceReport {
    /// `max |Phi(eta_t x_i) - u'_t Phi(x_i) u_t*|`.
    pub covariance: f64,
    /// `max |phi(alpha_t a_k) - u_t phi(a_k) u_t*|`.
    pub companion_covariance: f64,
    /// Ratio of largest to smallest nonzero singular value of the fullness
    /// system; the companion residual is bounded by a multiple of it times
    /// the module residual.
    pub conditioning: f64,
    pub u_residual: f64,
    pub u_prime_residual: f64,
}

impl CovarianceReport {
    pub fn max_residual(&self) -> f64 {
        self.covariance
            .max(self.companion_covariance)
            .max(self.u_residual)
            .max(self.u_prime_residual)
    }
}

pub fn check_covariance(
    phi: &ModuleCPMap,
    sys: &ModuleDynamicalSystem,
    u: &UnitaryRep,
    u_prime: &UnitaryRep,
    _tol: f64,
) -> Result<CovarianceReport> {
    if phi.module != *sys.module() {
        return Err(Error::ShapeMismatch(
            "map and system use different modules".into(),
        ));
    }
    if u.dim() != phi.h_dim || u_prime.dim() != phi.k_dim {
        return Err(Error::ShapeMismatch("u / u' do not act on H / K".into()));
    }
    if u.group() != sys.group() || u_prime.group() != sys.group() {
        return Err(Error::GroupMismatch);
    }
    let alg = sys.module().algebra();
    let mut cov = Residual::new();
    let mut comp = Residual::new();
    for t in sys.group().elements() {
        let (ut, upt) = (u.mat(t), u_prime.mat(t));
        for i in 0..sys.module().dim() {
            let lhs = phi.apply(&sys.eta(t).column(i).clone_owned());
            cov.add(&lhs, &(upt * &phi.images[i] * ut.adjoint()));
        }
        for k in 0..alg.dim() {
            let lhs = phi
                .companion
                .apply_coords(sys.alpha(t).column(k).clone_owned().as_slice());
            comp.add(&lhs, &(ut * &phi.companion.images[k] * ut.adjoint()));
        }
    }
    let sv = phi.module.fullness_system().singular_values();
    let smax = sv.max();
    let smin = sv
        .iter()
        .copied()
        .filter(|&s| s > 1e-10 * smax)
        .fold(f64::INFINITY, f64::min);
    Ok(CovarianceReport {
        covariance: cov.value(),
        companion_covariance: comp.value(),
        conditioning: if smax > 0.0 {
            smax / smin
        } else {
            f64::INFINITY
        },
        u_residual: u.check().max_residual(),
        u_prime_residual: u_prime.check().max_residual(),
    })
}

pub fn check_covariant_cp(phi: &CovariantCPMap, tol: f64) -> Result<CovarianceReport> {
    check_covariance(&phi.base, &phi.system, &phi.u, &phi.u_prime, tol)
}

/// Compresses a covariant representation by intertwiners `V` (from `u` to
/// `v`) and `W` (from `u'` to `w`).
pub fn covariant_cp_from_representation(
    covrep: &CovariantRepresentation,
    v_op: &Mat,
    w_op: &Mat,
    u: &UnitaryRep,
    u_prime: &UnitaryRep,
    tol: f64,
) -> Result<CovariantCPMap> {
    let base = cp_from_representation(&covrep.rep, v_op, w_op)?;
    if u.dim() != v_op.ncols() || u_prime.dim() != w_op.ncols() {
        return Err(Error::ShapeMismatch(
            "u / u' do not act on the domains of V / W".into(),
        ));
    }
    for t in covrep.system.group().elements() {
        let mut rv = Residual::new();
        rv.add(&(covrep.v.mat(t) * v_op), &(v_op * u.mat(t)));
        if rv.value() > tol {
            return Err(Error::NotIntertwining {
                relation: "v_t V = V u_t",
                element: t,
                residual: rv.value(),
            });
        }
        let mut rw = Residual::new();
        rw.add(&(covrep.w.mat(t) * w_op), &(w_op * u_prime.mat(t)));
        if rw.value() > tol {
            return Err(Error::NotIntertwining {
                relation: "w_t W = W u'_t",
                element: t,
                residual: rw.value(),
            });
        }
    }
    CovariantCPMap::new(base, covrep.system.clone(), u.clone(), u_prime.clone())
}

/// A generated covariant map together with the data that witnesses it.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomCovariantCp {
    pub map: CovariantCPMap,
    pub rep: CovariantRepresentation,
    pub v_op: Mat,
    pub w_op: Mat,
    /// Smallest eigenvalue of `YY*` before the polar correction, with `Y`
    /// normalized to unit operator norm.
    pub min_eig: f64,
}

/// Cutoff on `min eig(YY*)` for the polar correction.
pub const POLAR_CUTOFF: f64 = 1e-6;

const STREAM_SIGMA: u64 = 0;
const STREAM_DIMS: u64 = 1;
const STREAM_U: u64 = 2;
const STREAM_U_PRIME: u64 = 3;
const STREAM_Z: u64 = 4;
const STREAM_Z_PRIME: u64 = 5;

/// Seeded covariant module CP map over a standard action.
///
/// `sigma` is `floor(m/|G|)` copies of the regular representation padded by
/// trivial summands, conjugated by a seeded unitary. The covariant
/// representation is `pi_X(x) = x (x) I_m` with `v = delta (x) sigma`,
/// `w = gamma (x) sigma`. `u = Q(delta (+) 1^a)Q*` on `H` and
/// `u' = R((gamma (x) sigma) (+) 1^b)R*` on `K`, with seeded `a, b` in `{0, 1}`
/// and seeded unitaries `Q, R`. `V` and `W` come from group averaging seeded
/// Gaussian matrices, `W` after polar correction.
pub fn random_covariant_cp(sa: &StandardAction, m: usize, seed: u64) -> Result<RandomCovariantCp> {
    let (extra_h, extra_k) = {
        let mut rng = SeedStream::new(seed).stream(STREAM_DIMS);
        (rng.random_range(0..=1usize), rng.random_range(0..=1usize))
    };
    random_covariant_cp_with(sa, m, extra_h, extra_k, seed)
}

/// [`random_covariant_cp`] with the trivial padding of `H` and `K` fixed.
pub fn random_covariant_cp_with(
    sa: &StandardAction,
    m: usize,
    extra_h: usize,
    extra_k: usize,
    seed: u64,
) -> Result<RandomCovariantCp> {
    if m == 0 {
        return Err(Error::Bounds("amplification must be at least 1".into()));
    }
    let streams = SeedStream::new(seed);
    let g = sa.system.group();
    let order = g.order();
    let (p, n) = (sa.gamma.dim(), sa.delta.dim());

    let mut sigma = UnitaryRep::trivial(g, 0);
    for _ in 0..m / order {
        sigma = sigma.direct_sum(&UnitaryRep::regular(g))?;
    }
    sigma = sigma.direct_sum(&UnitaryRep::trivial(g, m % order))?;
    let sigma = sigma.conjugate(&random_unitary(m, &mut streams.stream(STREAM_SIGMA)));

    let pi = ModuleRepresentation::concrete_standard(p, n).amplify(m);
    let v = sa.delta.tensor(&sigma)?;
    let w = sa.gamma.tensor(&sigma)?;
    let covrep = CovariantRepresentation::new(pi, sa.system.clone(), v, w)?;

    let u = sa
        .delta
        .direct_sum(&UnitaryRep::trivial(g, extra_h))?
        .conjugate(&random_unitary(n + extra_h, &mut streams.stream(STREAM_U)));
    let k_dim = p * m + extra_k;
    let u_prime = covrep
        .w
        .direct_sum(&UnitaryRep::trivial(g, extra_k))?
        .conjugate(&random_unitary(k_dim, &mut streams.stream(STREAM_U_PRIME)));

    let z = ginibre(n * m, u.dim(), &mut streams.stream(STREAM_Z));
    let mut v_op = group_average(&covrep.v, &z, &u)?;
    let vn = op_norm(&v_op);
    if vn > 0.0 {
        v_op /= r(vn);
    }

    let z_prime = ginibre(p * m, k_dim, &mut streams.stream(STREAM_Z_PRIME));
    let mut y = group_average(&covrep.w, &z_prime, &u_prime)?;
    let yn = op_norm(&y);
    if yn > 0.0 {
        y /= r(yn);
    }
    let (w_op, min_eig) = polar_coisometry(&y)?;

    let map = covariant_cp_from_representation(&covrep, &v_op, &w_op, &u, &u_prime, 1e-8)?;
    Ok(RandomCovariantCp {
        map,
        rep: covrep,
        v_op,
        w_op,
        min_eig,
    })
}

/// `(YY*)^{-1/2} Y`, refusing when `YY*` is numerically singular.
pub fn polar_coisometry(y: &Mat) -> Result<(Mat, f64)> {
    let yy = y * y.adjoint();
    let eig = hermitian_eigendecomposition(&yy, 1e-8)?;
    let min_eig = eig.values.last().copied().unwrap_or(1.0);
    if min_eig < POLAR_CUTOFF {
        return Err(Error::DegenerateAverage { min_eig });
    }
    let inv_sqrt = eig
        .values
        .iter()
        .map(|&l| r(1.0 / l.sqrt()))
        .collect::<Vec<_>>();
    let d = Mat::from_diagonal(&Vector::from_vec(inv_sqrt));
    let root = &eig.vectors * d * eig.vectors.adjoint();
    Ok((root * y, min_eig))
}

/// Seeded module CP map `Phi(x) = W* (x (x) I_m) V` without group structure:
/// `V` is Gaussian `nm x h` and `W` a random coisometry `pm x k`, `k >= pm`.
pub fn random_module_cp(
    p: usize,
    n: usize,
    m: usize,
    h: usize,
    k: usize,
    seed: u64,
) -> Result<ModuleCPMap> {
    if k < p * m {
        return Err(Error::ShapeMismatch(format!(
            "a coisometry onto C^{} needs k >= {}",
            p * m,
            p * m
        )));
    }
    let streams = SeedStream::new(seed);
    let pi = ModuleRepresentation::concrete_standard(p, n).amplify(m);
    let v = ginibre(n * m, h, &mut streams.stream(STREAM_Z));
    let u = random_unitary(k, &mut streams.stream(STREAM_Z_PRIME));
    let w = u.rows(0, p * m).into_owned();
    cp_from_representation(&pi, &(v / r(((n * m) as f64).sqrt())), &w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbmod::{standard_action, FiniteGroup};
    use crate::numkernel::{c, diag_real};

    fn z2_diag() -> StandardAction {
        let g = FiniteGroup::cyclic(2);
        let delta = UnitaryRep::new(g.clone(), vec![eye(2), diag_real(&[1.0, -1.0])]).unwrap();
        standard_action(&UnitaryRep::trivial(&g, 1), &delta).unwrap()
    }

    #[test]
    fn scalar_identity_induces_identity() {
        let x = HilbertModule::standard(1, 1);
        let (phi, rep) = induced_algebra_cp(&x, &[eye(1)], 1, 1e-10).unwrap();
        assert_eq!(phi.images[0], eye(1));
        assert!(rep.consistency < 1e-14);
    }

    #[test]
    fn concrete_row_module_induces_identity_on_m2() {
        let pi = ModuleRepresentation::concrete_standard(1, 2);
        let (phi, _) = induced_algebra_cp(&pi.module, &pi.images, 2, 1e-10).unwrap();
        for (k, img) in phi.images.iter().enumerate() {
            assert!(dist(img, &phi.algebra.basis_element(k).embed()) < 1e-12);
        }
    }

    #[test]
    fn compression_by_t_induces_t_star_a_t() {
        let t = Mat::from_row_slice(2, 2, &[c(1.0, 0.5), r(2.0), r(-0.3), c(0.0, 1.0)]);
        let pi = ModuleRepresentation::concrete_standard(1, 2);
        let images: Vec<Mat> = pi.images.iter().map(|x| x * &t).collect();
        let (phi, rep) = induced_algebra_cp(&pi.module, &images, 2, 1e-10).unwrap();
        assert!(rep.choi_min_eig > -1e-12);
        for (k, img) in phi.images.iter().enumerate() {
            let a = phi.algebra.basis_element(k).embed();
            assert!(dist(img, &(t.adjoint() * a * &t)) < 1e-12);
        }
    }

    #[test]
    fn non_full_module_is_rejected() {
        let x = HilbertModule::standard(1, 2);
        let inner = (0..4)
            .map(|ij| {
                let a = x.inner_basis(ij / 2, ij % 2);
                AlgebraElement {
                    blocks: vec![Mat::from_diagonal(&a.blocks[0].diagonal())],
                }
            })
            .collect();
        let diag = HilbertModule::new(x.algebra().clone(), 2, x.action_matrices().to_vec(), inner)
            .unwrap();
        assert!(matches!(
            induced_algebra_cp(&diag, &[zeros(1, 2), zeros(1, 2)], 2, 1e-9),
            Err(Error::NotFull { .. })
        ));
    }

    #[test]
    fn check_module_cp_examples() {
        let pi = ModuleRepresentation::concrete_standard(2, 2);
        let phi = cp_from_representation(&pi, &eye(2), &eye(2)).unwrap();
        let rep = check_module_cp(&phi, 1e-12).unwrap();
        assert_eq!(rep.identity, 0.0);
        assert!(rep.passes(1e-12));

        let zero = ModuleCPMap::zero(&pi.module, 2, 2);
        let rep = check_module_cp(&zero, 1e-12).unwrap();
        assert_eq!(rep.identity, 0.0);
        assert!(rep.passes(1e-12));

        // Companion replaced by the transpose.
        let alg = pi.module.algebra().clone();
        let transpose = (0..4)
            .map(|k| alg.basis_element(k).embed().transpose())
            .collect();
        let bad = ModuleCPMap::new(
            pi.module.clone(),
            2,
            phi.images.clone(),
            CPMapAlgebra::new(alg, 2, transpose).unwrap(),
        )
        .unwrap();
        let rep = check_module_cp(&bad, 1e-12).unwrap();
        assert!(!rep.cp);
        assert!((rep.choi_min_eig + 1.0).abs() < 1e-12);
        assert!(matches!(rep.require(1e-9), Err(Error::NotCp { .. })));
    }

    #[test]
    fn cp_from_representation_examples() {
        let pi = ModuleRepresentation::concrete_standard(2, 1);
        let phi = cp_from_representation(&pi, &eye(1), &eye(2)).unwrap();
        assert_eq!(phi.images, pi.images);
        let zero = cp_from_representation(&pi, &zeros(1, 1), &eye(2)).unwrap();
        assert!(zero.images.iter().all(|m| m.norm() == 0.0));
        let bad_w = eye(2) * r(2.0);
        assert!(matches!(
            cp_from_representation(&pi, &eye(1), &bad_w),
            Err(Error::NotCoisometry { .. })
        ));
    }

    #[test]
    fn amplified_compression_is_cp() {
        for seed in 0..10 {
            let phi = random_module_cp(2, 2, 2, 3, 5, seed).unwrap();
            let rep = check_module_cp(&phi, 1e-10).unwrap();
            assert!(rep.passes(1e-10), "{rep:?}");
        }
    }

    #[test]
    fn standard_covariant_compression() {
        let sa = z2_diag();
        let covrep = CovariantRepresentation::new(
            ModuleRepresentation::concrete_standard(1, 2),
            sa.system.clone(),
            sa.delta.clone(),
            sa.gamma.clone(),
        )
        .unwrap();
        let phi = covariant_cp_from_representation(
            &covrep,
            &eye(2),
            &eye(1),
            &sa.delta,
            &sa.gamma,
            1e-10,
        )
        .unwrap();
        let rep = check_covariant_cp(&phi, 1e-10).unwrap();
        assert_eq!(rep.covariance, 0.0);
        assert_eq!(rep.companion_covariance, 0.0);
    }

    #[test]
    fn mismatched_u_prime_breaks_covariance() {
        let sa = z2_diag();
        let pi = ModuleRepresentation::concrete_standard(1, 2);
        let phi = cp_from_representation(&pi, &eye(2), &eye(1)).unwrap();
        let rep = check_covariance(
            &phi,
            &sa.system,
            &sa.delta,
            &UnitaryRep::trivial(sa.system.group(), 1),
            1e-10,
        )
        .unwrap();
        assert_eq!(rep.covariance, 0.0);
        // With u trivial on H as well, eta_1 is visible.
        let rep = check_covariance(
            &phi,
            &sa.system,
            &UnitaryRep::trivial(sa.system.group(), 2),
            &UnitaryRep::trivial(sa.system.group(), 1),
            1e-10,
        )
        .unwrap();
        assert!(rep.covariance > 0.5);
    }

    #[test]
    fn non_intertwining_v_is_named() {
        let sa = z2_diag();
        let covrep = CovariantRepresentation::new(
            ModuleRepresentation::concrete_standard(1, 2),
            sa.system.clone(),
            sa.delta.clone(),
            sa.gamma.clone(),
        )
        .unwrap();
        let err = covariant_cp_from_representation(
            &covrep,
            &eye(2),
            &eye(1),
            &UnitaryRep::trivial(sa.system.group(), 2),
            &sa.gamma,
            1e-10,
        )
        .unwrap_err();
        assert!(
            matches!(
                err,
                Error::NotIntertwining {
                    relation: "v_t V = V u_t",
                    element: 1,
                    ..
                }
            ),
            "{err:?}"
        );
    }

    #[test]
    fn random_covariant_examples() {
        let g = FiniteGroup::trivial();
        let sa = standard_action(&UnitaryRep::trivial(&g, 2), &UnitaryRep::trivial(&g, 2)).unwrap();
        let out = random_covariant_cp(&sa, 1, 5).unwrap();
        assert!(check_covariant_cp(&out.map, 1e-10).unwrap().max_residual() < 1e-10);

        let sa = z2_diag();
        let delta = sa.delta.clone();
        let sa22 = standard_action(&delta, &delta).unwrap();
        let out = random_covariant_cp(&sa22, 2, 7).unwrap();
        assert!(check_covariant_cp(&out.map, 1e-9).unwrap().max_residual() < 1e-9);
        assert!(check_module_cp(&out.map.base, 1e-9).unwrap().passes(1e-9));

        let s3 = FiniteGroup::symmetric(3);
        let perm = UnitaryRep::permutation(&s3, 3).unwrap();
        let sa = standard_action(&UnitaryRep::trivial(&s3, 1), &perm).unwrap();
        let out = random_covariant_cp_with(&sa, 6, 1, 1, 3).unwrap();
        assert!(check_covariant_cp(&out.map, 1e-9).unwrap().max_residual() < 1e-9);
        assert!(check_module_cp(&out.map.base, 1e-9).unwrap().passes(1e-9));
    }

    #[test]
    fn averaged_intertwiner_is_exact() {
        let s3 = FiniteGroup::symmetric(3);
        let perm = UnitaryRep::permutation(&s3, 3).unwrap();
        let sa = standard_action(&perm, &perm).unwrap();
        let out = random_covariant_cp(&sa, 6, 11).unwrap();
        for t in s3.elements() {
            let lhs = out.rep.v.mat(t) * &out.v_op;
            assert!(dist(&lhs, &(&out.v_op * out.map.u.mat(t))) < 1e-12);
            let lhs = out.rep.w.mat(t) * &out.w_op;
            assert!(dist(&lhs, &(&out.w_op * out.map.u_prime.mat(t))) < 1e-9);
        }
        assert!(dist(&(&out.w_op * out.w_op.adjoint()), &eye(out.w_op.nrows())) < 1e-10);
    }

    #[test]
    fn singular_average_is_refused() {
        let y = Mat::from_row_slice(2, 2, &[r(1.0), r(0.0), r(0.0), r(1e-5)]);
        assert!(matches!(
            polar_coisometry(&y),
            Err(Error::DegenerateAverage { .. })
        ));
    }

    #[test]
    fn kraus_map_is_cp() {
        let alg = CStarAlgebra::new(vec![1, 2]).unwrap();
        let k = ginibre(3, 2, &mut SeedStream::new(4).stream(0));
        let phi = CPMapAlgebra::from_kraus(&alg, &[k]).unwrap();
        let rep = check_cp_map(&phi, 1e-12);
        assert!(rep.cp && rep.hermiticity < 1e-14);
    }

    #[test]
    fn module_cp_json_round_trip() {
        let phi = random_module_cp(1, 2, 1, 2, 2, 3).unwrap();
        let j = serde_json::to_string(&phi.to_json()).unwrap();
        let back: ModuleCpMapJson = serde_json::from_str(&j).unwrap();
        assert_eq!(back.to_map(&phi.module, 1e-9).unwrap(), phi);
        let mut no_companion = back.clone();
        no_companion.companion = None;
        let recovered = no_companion.to_map(&phi.module, 1e-9).unwrap();
        for (a, b) in recovered.companion.images.iter().zip(&phi.companion.images) {
            assert!(dist(a, b) < 1e-10);
        }
    }
}
