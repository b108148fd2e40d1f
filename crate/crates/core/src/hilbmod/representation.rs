//! Representations `pi_X: X -> L(H, K)` of a module, with their companion
//! `*`-representation `pi_A` on `H`, and covariant representations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cstar::{
    check_representation, AlgebraElement, AlgebraRepresentation, RepresentationJson,
    RepresentationReport,
};
use crate::error::{Error, Result};
use crate::numkernel::{
    eye, gram_factor, hstack, span_rank, zeros, Mat, MatJson, RankProfile, Residual, Vector, C64,
    DEFAULT_REL_TOL,
};

use super::dynamics::ModuleDynamicalSystem;
use super::group::UnitaryRep;
use super::module::HilbertModule;

#[derive(Debug, Clone, PartialEq)]
pub struct ModuleRepresentation {
    pub module: HilbertModule,
    pub companion: AlgebraRepresentation,
    pub k_dim: usize,
    /// `K x H` per module basis element.
    pub images: Vec<Mat>,
}

impl ModuleRepresentation {
    pub fn new(
        module: HilbertModule,
        companion: AlgebraRepresentation,
        k_dim: usize,
        images: Vec<Mat>,
    ) -> Result<Self> {
        if companion.algebra != *module.algebra() {
            return Err(Error::ShapeMismatch(
                "companion acts on a different algebra".into(),
            ));
        }
        check_images(&module, &images, (k_dim, companion.space_dim))?;
        Ok(Self {
            module,
            companion,
            k_dim,
            images,
        })
    }

    pub fn h_dim(&self) -> usize {
        self.companion.space_dim
    }

    /// `pi_X(x) = x` on `M_{p,n}`, `H = C^n`, `K = C^p`.
    pub fn concrete_standard(p: usize, n: usize) -> Self {
        let module = HilbertModule::standard(p, n);
        let images = (0..p * n)
            .map(|i| {
                let mut e = zeros(p, n);
                e[(i / n, i % n)] = C64::new(1.0, 0.0);
                e
            })
            .collect();
        Self {
            companion: AlgebraRepresentation::embedding(module.algebra()),
            module,
            k_dim: p,
            images,
        }
    }

    /// The representation of `X` on `X (x)_A C^E`, realized by factoring the
    /// Gram super-matrix. Faithful and nondegenerate for definite full modules.
    pub fn canonical(module: &HilbertModule) -> Result<Self> {
        let e = module.algebra().embed_dim();
        let gf = gram_factor(&module.gram_supermatrix(), DEFAULT_REL_TOL)?;
        let images = (0..module.dim())
            .map(|i| gf.f.columns(i * e, e).into_owned())
            .collect();
        Ok(Self {
            module: module.clone(),
            companion: AlgebraRepresentation::embedding(module.algebra()),
            k_dim: gf.rank,
            images,
        })
    }

    /// `x -> pi_X(x) (x) I_m` with companion `a -> pi_A(a) (x) I_m`.
    pub fn amplify(&self, m: usize) -> Self {
        Self {
            module: self.module.clone(),
            companion: self.companion.amplify(m),
            k_dim: self.k_dim * m,
            images: self.images.iter().map(|x| x.kronecker(&eye(m))).collect(),
        }
    }

    /// The zero representation between spaces of the given sizes.
    pub fn zero(module: &HilbertModule, h_dim: usize, k_dim: usize) -> Self {
        let alg = module.algebra();
        Self {
            module: module.clone(),
            companion: AlgebraRepresentation {
                algebra: alg.clone(),
                space_dim: h_dim,
                images: vec![zeros(h_dim, h_dim); alg.dim()],
            },
            k_dim,
            images: vec![zeros(k_dim, h_dim); module.dim()],
        }
    }

    pub fn apply(&self, x: &Vector) -> Mat {
        combine(&self.images, x, (self.k_dim, self.h_dim()))
    }

    pub fn to_json(&self) -> ModuleRepresentationJson {
        ModuleRepresentationJson {
            k_dim: self.k_dim,
            images: labelled_module_images(&self.module, &self.images),
            companion: self.companion.to_json(),
        }
    }
}

pub(crate) fn check_images(
    module: &HilbertModule,
    images: &[Mat],
    shape: (usize, usize),
) -> Result<()> {
    if images.len() != module.dim() {
        return Err(Error::ShapeMismatch(format!(
            "need {} module images, got {}",
            module.dim(),
            images.len()
        )));
    }
    if let Some(bad) = images.iter().find(|m| m.shape() != shape) {
        return Err(Error::ShapeMismatch(format!(
            "module image is {}x{}, expected {}x{}",
            bad.nrows(),
            bad.ncols(),
            shape.0,
            shape.1
        )));
    }
    Ok(())
}

/// `sum_i x[i] images[i]`.
pub(crate) fn combine(images: &[Mat], x: &Vector, shape: (usize, usize)) -> Mat {
    let mut out = zeros(shape.0, shape.1);
    for (img, &w) in images.iter().zip(x.iter()) {
        if w != C64::new(0.0, 0.0) {
            out += img * w;
        }
    }
    out
}

pub(crate) fn labelled_module_images(
    module: &HilbertModule,
    images: &[Mat],
) -> BTreeMap<String, MatJson> {
    images
        .iter()
        .enumerate()
        .map(|(i, m)| (module.basis_label(i), MatJson::from(m)))
        .collect()
}

pub(crate) fn unlabel_module_images(
    module: &HilbertModule,
    images: &BTreeMap<String, MatJson>,
    shape: (usize, usize),
) -> Result<Vec<Mat>> {
    let mut out: Vec<Option<Mat>> = vec![None; module.dim()];
    for (label, m) in images {
        let i = module.parse_label(label)?;
        out[i] = Some(Mat::try_from(m)?);
    }
    let images = out
        .into_iter()
        .enumerate()
        .map(|(i, m)| {
            m.ok_or_else(|| {
                Error::ShapeMismatch(format!("missing image for {}", module.basis_label(i)))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    check_images(module, &images, shape)?;
    Ok(images)
}

/// `{"k_dim": K, "images": {"x:i": Mat}, "companion": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleRepresentationJson {
    pub k_dim: usize,
    pub images: BTreeMap<String, MatJson>,
    pub companion: RepresentationJson,
}

impl ModuleRepresentationJson {
    pub fn to_representation(&self, module: &HilbertModule) -> Result<ModuleRepresentation> {
        let companion = self.companion.to_representation(module.algebra())?;
        let images =
            unlabel_module_images(module, &self.images, (self.k_dim, companion.space_dim))?;
        ModuleRepresentation::new(module.clone(), companion, self.k_dim, images)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModuleRepresentationReport {
    /// `max |pi_X(x_i)* pi_X(x_j) - pi_A(<x_i, x_j>)|`.
    pub identity: f64,
    /// `max |pi_X(x_i a_k) - pi_X(x_i) pi_A(a_k)|`.
    pub action: f64,
    pub companion: RepresentationReport,
    /// Rank of `{pi_X(x_i) h_j}` against `dim K`.
    pub range: RankProfile,
    /// Rank of `{pi_X(x_i)* k_j}` against `dim H`.
    pub corange: RankProfile,
    /// Rank of `{pi_A(a_k) pi_X(x_i)* k_j}`; equals `corange` whenever the
    /// companion acts on the nondegenerate part.
    pub companion_corange: usize,
    pub dims: (usize, usize),
}

impl ModuleRepresentationReport {
    pub fn nondegenerate(&self) -> bool {
        self.range.rank == self.dims.1 && self.corange.rank == self.dims.0
    }

    pub fn max_residual(&self) -> f64 {
        self.identity
            .max(self.action)
            .max(self.companion.max_residual())
    }
}

/// Columns `{images[i] e_j}` for all `i, j`.
pub(crate) fn span_columns(images: &[Mat], rows: usize) -> Mat {
    hstack(rows, images)
}

pub fn check_module_representation(
    pi: &ModuleRepresentation,
    tol: f64,
) -> Result<ModuleRepresentationReport> {
    let x = &pi.module;
    let (h, k) = (pi.h_dim(), pi.k_dim);
    check_images(x, &pi.images, (k, h))?;
    let companion = check_representation(&pi.companion, tol)?;
    let m = x.dim();
    let mut identity = Residual::new();
    for i in 0..m {
        for j in 0..m {
            let lhs = pi.images[i].adjoint() * &pi.images[j];
            identity.add(&lhs, &pi.companion.apply(x.inner_basis(i, j)));
        }
    }
    let mut action = Residual::new();
    for (kk, act) in x.action_matrices().iter().enumerate() {
        for i in 0..m {
            let xa = act.column(i).clone_owned();
            let lhs = pi.apply(&xa);
            action.add(&lhs, &(&pi.images[i] * &pi.companion.images[kk]));
        }
    }
    let range = span_rank(&span_columns(&pi.images, k), DEFAULT_REL_TOL);
    let adjoints: Vec<Mat> = pi.images.iter().map(|m| m.adjoint()).collect();
    let co = span_columns(&adjoints, h);
    let corange = span_rank(&co, DEFAULT_REL_TOL);
    let moved: Vec<Mat> = pi.companion.images.iter().map(|a| a * &co).collect();
    let companion_corange = span_rank(&span_columns(&moved, h), DEFAULT_REL_TOL).rank;
    Ok(ModuleRepresentationReport {
        identity: identity.value(),
        action: action.value(),
        companion,
        range,
        corange,
        companion_corange,
        dims: (h, k),
    })
}

/// `(pi_X, v, w)` with `pi_X(eta_t x) = w_t pi_X(x) v_t*`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariantRepresentation {
    pub rep: ModuleRepresentation,
    pub system: ModuleDynamicalSystem,
    pub v: UnitaryRep,
    pub w: UnitaryRep,
}

impl CovariantRepresentation {
    pub fn new(
        rep: ModuleRepresentation,
        system: ModuleDynamicalSystem,
        v: UnitaryRep,
        w: UnitaryRep,
    ) -> Result<Self> {
        if rep.module != *system.module() {
            return Err(Error::ShapeMismatch(
                "representation and system use different modules".into(),
            ));
        }
        if v.group() != system.group() || w.group() != system.group() {
            return Err(Error::GroupMismatch);
        }
        if v.dim() != rep.h_dim() || w.dim() != rep.k_dim {
            return Err(Error::ShapeMismatch(format!(
                "v must act on H ({}) and w on K ({}); got {} and {}",
                rep.h_dim(),
                rep.k_dim,
                v.dim(),
                w.dim()
            )));
        }
        Ok(Self { rep, system, v, w })
    }

    /// Induces a covariant representation from any representation `pi0`:
    /// `pi_X(x) = sum_s e_ss (x) pi0(eta_{s^-1} x)` on `l2(G) (x) H`, with
    /// `v = lambda (x) I_H`, `w = lambda (x) I_K` for the left regular `lambda`.
    pub fn regular_induced(
        pi0: &ModuleRepresentation,
        system: &ModuleDynamicalSystem,
    ) -> Result<Self> {
        if pi0.module != *system.module() {
            return Err(Error::ShapeMismatch(
                "representation and system use different modules".into(),
            ));
        }
        let g = system.group();
        let order = g.order();
        let (h, k) = (pi0.h_dim(), pi0.k_dim);
        let alg = system.module().algebra();
        let block = |s: usize| {
            let mut e = zeros(order, order);
            e[(s, s)] = C64::new(1.0, 0.0);
            e
        };
        let images = (0..system.module().dim())
            .map(|i| {
                let mut out = zeros(order * k, order * h);
                for s in g.elements() {
                    let moved = system.eta(g.inv(s)).column(i).clone_owned();
                    out += block(s).kronecker(&pi0.apply(&moved));
                }
                out
            })
            .collect();
        let companion_images = (0..alg.dim())
            .map(|kk| {
                let mut out = zeros(order * h, order * h);
                for s in g.elements() {
                    let moved =
                        AlgebraElement::clone(&alg.from_coords(
                            system.alpha(g.inv(s)).column(kk).clone_owned().as_slice(),
                        ));
                    out += block(s).kronecker(&pi0.companion.apply(&moved));
                }
                out
            })
            .collect();
        let companion = AlgebraRepresentation::new(alg.clone(), order * h, companion_images)?;
        let rep = ModuleRepresentation::new(system.module().clone(), companion, order * k, images)?;
        let lambda = UnitaryRep::regular(g);
        let v = lambda.tensor(&UnitaryRep::trivial(g, h))?;
        let w = lambda.tensor(&UnitaryRep::trivial(g, k))?;
        Self::new(rep, system.clone(), v, w)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovariantRepresentationReport {
    pub base: ModuleRepresentationReport,
    /// `max |pi_X(eta_t x_i) - w_t pi_X(x_i) v_t*|`.
    pub covariance: f64,
    /// `max |pi_A(alpha_t a_k) - v_t pi_A(a_k) v_t*|`: the companion pair is
    /// covariant for `(G, alpha, A)`.
    pub companion_covariance: f64,
    pub v_residual: f64,
    pub w_residual: f64,
}

impl CovariantRepresentationReport {
    pub fn max_residual(&self) -> f64 {
        self.base
            .max_residual()
            .max(self.covariance)
            .max(self.companion_covariance)
            .max(self.v_residual)
            .max(self.w_residual)
    }
}

pub fn check_covariant_representation(
    c: &CovariantRepresentation,
    tol: f64,
) -> Result<CovariantRepresentationReport> {
    let base = check_module_representation(&c.rep, tol)?;
    let sys = &c.system;
    let alg = sys.module().algebra();
    let mut covariance = Residual::new();
    let mut companion_covariance = Residual::new();
    for t in sys.group().elements() {
        let (vt, wt) = (c.v.mat(t), c.w.mat(t));
        for i in 0..sys.module().dim() {
            let lhs = c.rep.apply(&sys.eta(t).column(i).clone_owned());
            covariance.add(&lhs, &(wt * &c.rep.images[i] * vt.adjoint()));
        }
        for k in 0..alg.dim() {
            let moved = alg.from_coords(sys.alpha(t).column(k).clone_owned().as_slice());
            let lhs = c.rep.companion.apply(&moved);
            companion_covariance.add(&lhs, &(vt * &c.rep.companion.images[k] * vt.adjoint()));
        }
    }
    Ok(CovariantRepresentationReport {
        base,
        covariance: covariance.value(),
        companion_covariance: companion_covariance.value(),
        v_residual: c.v.check().max_residual(),
        w_residual: c.w.check().max_residual(),
    })
}
