//! GNS construction for CP maps on algebras, the minimal dilation
//! `Phi(x) = W* pi_Phi(x) V` of a module CP map, its covariant version, the
//! unitaries relating two minimal dilations, and certificate verification.
//!
//! The quotient of `A (x) H` by null vectors is represented by coordinates:
//! `F` maps raw vectors to the quotient and `L` lifts back, so every map that
//! should descend is realized as `F * raw * L` and its failure to annihilate
//! the kernel is reported as a number.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cpmaps::{
    check_covariant_cp, check_cp_map, check_module_cp, CPMapAlgebra, CovariantCPMap, ModuleCPMap,
};
use crate::cstar::{check_representation, AlgebraRepresentation};
use crate::error::{Error, Result};
use crate::hilbmod::representation::combine;
use crate::hilbmod::{CovariantRepresentation, HilbertModule, ModuleRepresentation, UnitaryRep};
use crate::numkernel::{
    dist, eye, fro, gram_factor, hstack, least_squares_solve, range_basis, relative, span_rank,
    zeros, GramFactor, Mat, RankProfile, Residual, DEFAULT_REL_TOL,
};

/// `(pi_phi, H_phi, V_phi)` with the quotient factorization retained.
#[derive(Debug, Clone)]
pub struct GnsTriple {
    pub dim: usize,
    pub pi: AlgebraRepresentation,
    /// `dim x h`.
    pub v: Mat,
    pub factor: GramFactor,
    /// `max_a |F Left(a) (I - L F)|` relative to `|F Left(a)|`.
    pub descent: f64,
}

impl GnsTriple {
    pub fn h_dim(&self) -> usize {
        self.v.ncols()
    }
}

/// `D x D` Gram of `A (x) H`: entry `((k,j),(l,i))` is `phi(a_k* a_l)[j,i]`.
pub fn gns_gram(phi: &CPMapAlgebra) -> Mat {
    let alg = &phi.algebra;
    let (n, h) = (alg.dim(), phi.space_dim);
    let basis: Vec<_> = (0..n).map(|k| alg.basis_element(k)).collect();
    let mut g = zeros(n * h, n * h);
    for (k, bk) in basis.iter().enumerate() {
        let ks = bk.star();
        for (l, bl) in basis.iter().enumerate() {
            let block = phi.apply(&ks.mul(bl));
            g.view_mut((k * h, l * h), (h, h)).copy_from(&block);
        }
    }
    g
}

pub fn gns_construct(phi: &CPMapAlgebra, tol: f64) -> Result<GnsTriple> {
    let cp = check_cp_map(phi, tol);
    if !cp.cp {
        return Err(Error::NotCp {
            min_eig: cp.choi_min_eig,
        });
    }
    let alg = &phi.algebra;
    let (n, h) = (alg.dim(), phi.space_dim);
    let factor = match gram_factor(&gns_gram(phi), DEFAULT_REL_TOL) {
        Ok(f) => f,
        Err(Error::NotPsd { min_eig }) => return Err(Error::NotCp { min_eig }),
        Err(e) => return Err(e),
    };
    let r = factor.rank;
    let ih = eye(h);
    let kernel = eye(n * h) - factor.range_projector();
    let mut descent = Residual::new();
    let images = (0..n)
        .map(|k| {
            let left = alg.left_mult_matrix(&alg.basis_element(k)).kronecker(&ih);
            let fl = &factor.f * left;
            descent.add(&(&fl * &kernel), &zeros(r, n * h));
            descent.add_scale(fro(&fl));
            fl * &factor.l
        })
        .collect();
    let descent = descent.value();
    if descent > tol {
        return Err(Error::QuotientLeak {
            stage: "gns",
            residual: descent,
        });
    }
    let one = Mat::from_column_slice(n, 1, alg.unit().coords().as_slice());
    let v = &factor.f * one.kronecker(&ih);
    Ok(GnsTriple {
        dim: r,
        pi: AlgebraRepresentation::new(alg.clone(), r, images)?,
        v,
        factor,
        descent,
    })
}

/// `(pi_Phi, H_Phi, K_Phi, V_Phi, W_Phi)` for a module CP map.
#[derive(Debug, Clone)]
pub struct StinespringDilation {
    pub module: HilbertModule,
    pub gns: GnsTriple,
    pub k_dim: usize,
    /// Orthonormal basis of `K_Phi = span Phi(X) H` as columns of a `K x s` matrix.
    pub k_basis: Mat,
    /// `s x K` with orthonormal rows: `W_Phi = k_basis*`.
    pub w: Mat,
    /// `s x r` per module basis element.
    pub pi: Vec<Mat>,
    /// `max_x |T_x (I - L F)|` relative to `|T_x|`.
    pub descent: f64,
}

impl StinespringDilation {
    pub fn h_phi(&self) -> usize {
        self.gns.dim
    }

    pub fn k_phi(&self) -> usize {
        self.w.nrows()
    }

    pub fn h_dim(&self) -> usize {
        self.gns.h_dim()
    }

    pub fn v(&self) -> &Mat {
        &self.gns.v
    }

    /// `(pi_Phi, pi_phi)` as a module representation on `(H_Phi, K_Phi)`.
    pub fn representation(&self) -> ModuleRepresentation {
        ModuleRepresentation {
            module: self.module.clone(),
            companion: self.gns.pi.clone(),
            k_dim: self.k_phi(),
            images: self.pi.clone(),
        }
    }
}

pub fn dilate_module_cp(phi: &ModuleCPMap, tol: f64) -> Result<StinespringDilation> {
    check_module_cp(phi, tol)?.require(tol)?;
    let x = &phi.module;
    x.require_full()?;
    let gns = gns_construct(&phi.companion, tol)?;
    let (h, k) = (phi.h_dim, phi.k_dim);
    let alg = x.algebra();
    let n = alg.dim();

    let b = hstack(k, &phi.images);
    let (q, _) = range_basis(&(&b * b.adjoint()), DEFAULT_REL_TOL)?;
    let w = q.adjoint();

    let kernel = eye(n * h) - gns.factor.range_projector();
    let mut descent = Residual::new();
    let mut pi = Vec::with_capacity(x.dim());
    for i in 0..x.dim() {
        let mut t = zeros(k, n * h);
        for (kk, act) in x.action_matrices().iter().enumerate() {
            let xa = act.column(i).clone_owned();
            t.view_mut((0, kk * h), (k, h)).copy_from(&phi.apply(&xa));
        }
        descent.add(&(&t * &kernel), &zeros(k, n * h));
        descent.add_scale(fro(&t));
        pi.push(&w * &t * &gns.factor.l);
    }
    let descent = descent.value();
    if descent > tol {
        return Err(Error::QuotientLeak {
            stage: "module",
            residual: descent,
        });
    }
    Ok(StinespringDilation {
        module: x.clone(),
        gns,
        k_dim: k,
        k_basis: q,
        w,
        pi,
        descent,
    })
}

/// A module dilation with the unitary representations `v^Phi`, `w^Phi`.
#[derive(Debug, Clone)]
pub struct CovariantDilation {
    pub base: StinespringDilation,
    pub v: UnitaryRep,
    pub w: UnitaryRep,
    /// `max_t |R_t* G R_t - G|` for `R_t = alpha_t (x) u_t` on `A (x) H`.
    pub gram_preservation: f64,
    /// `max_t |F R_t (I - L F)|`, relative.
    pub v_descent: f64,
    /// `max_t |(I - Q Q*) u'_t Q|`, relative.
    pub invariance: f64,
}

impl CovariantDilation {
    pub fn covariant_representation(
        &self,
        phi: &CovariantCPMap,
    ) -> Result<CovariantRepresentation> {
        CovariantRepresentation::new(
            self.base.representation(),
            phi.system.clone(),
            self.v.clone(),
            self.w.clone(),
        )
    }
}

pub fn dilate_covariant(phi: &CovariantCPMap, tol: f64) -> Result<CovariantDilation> {
    let cov = check_covariant_cp(phi, tol)?;
    if cov.max_residual() > tol {
        return Err(Error::NotCovariant {
            residual: cov.max_residual(),
        });
    }
    let base = dilate_module_cp(&phi.base, tol)?;
    let sys = &phi.system;
    let g = sys.group();
    let h = phi.base.h_dim;
    let n = sys.module().algebra().dim();
    let f = &base.gns.factor;
    let gram = gns_gram(&phi.base.companion);
    let kernel = eye(n * h) - f.range_projector();
    let r = base.h_phi();

    let mut preservation = Residual::new();
    let mut descent = Residual::new();
    let mut v_mats = Vec::with_capacity(g.order());
    for t in g.elements() {
        let raw = sys.alpha(t).kronecker(phi.u.mat(t));
        preservation.add(&(raw.adjoint() * &gram * &raw), &gram);
        let fr = &f.f * &raw;
        descent.add(&(&fr * &kernel), &zeros(r, n * h));
        descent.add_scale(fro(&fr));
        v_mats.push(fr * &f.l);
    }
    let gram_preservation = preservation.value();
    let v_descent = descent.value();
    if gram_preservation > tol || v_descent > tol {
        return Err(Error::QuotientLeak {
            stage: "covariant gns",
            residual: gram_preservation.max(v_descent),
        });
    }

    let q = &base.k_basis;
    let proj_out = eye(base.k_dim) - q * q.adjoint();
    let mut leak = Residual::new();
    let mut w_mats = Vec::with_capacity(g.order());
    for t in g.elements() {
        let moved = phi.u_prime.mat(t) * q;
        leak.add(&(&proj_out * &moved), &zeros(base.k_dim, q.ncols()));
        leak.add_scale(fro(&moved));
        w_mats.push(q.adjoint() * moved);
    }
    let invariance = leak.value();
    if invariance > tol {
        return Err(Error::InvarianceLeak {
            residual: invariance,
        });
    }
    Ok(CovariantDilation {
        v: UnitaryRep::from_mats_unchecked(g.clone(), v_mats)?,
        w: UnitaryRep::from_mats_unchecked(g.clone(), w_mats)?,
        base,
        gram_preservation,
        v_descent,
        invariance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dims {
    pub h: usize,
    pub k: usize,
    pub h_phi: usize,
    pub k_phi: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankCheck {
    pub achieved: usize,
    pub required: usize,
}

/// Named residuals and rank checks, with the singular-value profile behind
/// every rank decision.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSet {
    pub residuals: BTreeMap<String, f64>,
    pub ranks: BTreeMap<String, RankCheck>,
    pub singular_values: BTreeMap<String, Vec<f64>>,
}

impl CheckSet {
    pub fn residual(&mut self, name: &str, value: f64) {
        self.residuals.insert(name.to_string(), value);
    }

    pub fn rank(&mut self, name: &str, profile: RankProfile, required: usize) {
        self.ranks.insert(
            name.to_string(),
            RankCheck {
                achieved: profile.rank,
                required,
            },
        );
        self.singular_values
            .insert(name.to_string(), profile.singular_values);
    }

    pub fn extend(&mut self, other: CheckSet) {
        self.residuals.extend(other.residuals);
        self.ranks.extend(other.ranks);
        self.singular_values.extend(other.singular_values);
    }

    /// Names of the checks that fail at `tol`.
    pub fn failures(&self, tol: f64) -> Vec<String> {
        let mut out: Vec<String> = self
            .residuals
            .iter()
            .filter(|(_, &v)| !(v.is_finite() && v >= 0.0 && v <= tol))
            .map(|(k, _)| k.clone())
            .collect();
        out.extend(
            self.ranks
                .iter()
                .filter(|(_, r)| r.achieved != r.required)
                .map(|(k, _)| k.clone()),
        );
        out
    }

    pub fn passed(&self, tol: f64) -> bool {
        self.failures(tol).is_empty()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.values().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DilationCertificate {
    pub dims: Dims,
    #[serde(flatten)]
    pub checks: CheckSet,
    pub tolerance: f64,
}

impl DilationCertificate {
    pub fn passed(&self) -> bool {
        self.checks.passed(self.tolerance)
    }
}

/// Recomputes every invariant of a module dilation from its matrices.
pub fn verify_dilation(
    phi: &ModuleCPMap,
    d: &StinespringDilation,
    tol: f64,
) -> Result<DilationCertificate> {
    let x = &phi.module;
    if d.module != *x || d.h_dim() != phi.h_dim || d.k_dim != phi.k_dim {
        return Err(Error::ShapeMismatch(
            "dilation does not belong to this map".into(),
        ));
    }
    let (h, k) = (phi.h_dim, phi.k_dim);
    let (r, s) = (d.h_phi(), d.k_phi());
    if d.w.ncols() != k || d.v().nrows() != r || d.pi.iter().any(|p| p.shape() != (s, r)) {
        return Err(Error::ShapeMismatch(
            "dilation matrices are inconsistent".into(),
        ));
    }
    let v = d.v();
    let mut checks = CheckSet::default();

    let mut recon = Residual::new();
    for (img, p) in phi.images.iter().zip(&d.pi) {
        recon.add(img, &(d.w.adjoint() * p * v));
    }
    checks.residual("reconstruction", recon.value());

    let mut ident = Residual::new();
    for i in 0..x.dim() {
        for j in 0..x.dim() {
            ident.add(
                &(d.pi[i].adjoint() * &d.pi[j]),
                &d.gns.pi.apply(x.inner_basis(i, j)),
            );
        }
    }
    checks.residual("representation_identity", ident.value());

    let mut action = Residual::new();
    for (kk, act) in x.action_matrices().iter().enumerate() {
        for i in 0..x.dim() {
            let lhs = combine(&d.pi, &act.column(i).clone_owned(), (s, r));
            action.add(&lhs, &(&d.pi[i] * &d.gns.pi.images[kk]));
        }
    }
    checks.residual("module_action", action.value());

    checks.residual(
        "coisometry",
        relative(dist(&(&d.w * d.w.adjoint()), &eye(s)), (s as f64).sqrt()),
    );

    let mut gns_recon = Residual::new();
    for (img, p) in phi.companion.images.iter().zip(&d.gns.pi.images) {
        gns_recon.add(img, &(v.adjoint() * p * v));
    }
    checks.residual("gns_reconstruction", gns_recon.value());
    checks.residual(
        "gns_representation",
        check_representation(&d.gns.pi, tol)?.max_residual(),
    );
    checks.residual("gns_descent", d.gns.descent);
    checks.residual("module_descent", d.descent);

    let pv: Vec<Mat> = d.pi.iter().map(|p| p * v).collect();
    checks.rank("range", span_rank(&hstack(s, &pv), DEFAULT_REL_TOL), s);
    let pw: Vec<Mat> = d.pi.iter().map(|p| p.adjoint() * &d.w).collect();
    checks.rank("corange", span_rank(&hstack(r, &pw), DEFAULT_REL_TOL), r);
    let av: Vec<Mat> = d.gns.pi.images.iter().map(|a| a * v).collect();
    checks.rank(
        "gns_minimality",
        span_rank(&hstack(r, &av), DEFAULT_REL_TOL),
        r,
    );

    Ok(DilationCertificate {
        dims: Dims {
            h,
            k,
            h_phi: r,
            k_phi: s,
        },
        checks,
        tolerance: tol,
    })
}

/// [`verify_dilation`] plus the intertwining relations `v_t V = V u_t` and
/// `w_t W = W u'_t`, the covariant-representation identities on module and
/// algebra level, and the covariance of the input map and its companion.
pub fn verify_covariant_dilation(
    phi: &CovariantCPMap,
    d: &CovariantDilation,
    tol: f64,
) -> Result<DilationCertificate> {
    let mut cert = verify_dilation(&phi.base, &d.base, tol)?;
    let sys = &phi.system;
    let base = &d.base;
    let v = base.v();
    let (r, s) = (base.h_phi(), base.k_phi());
    if d.v.dim() != r || d.w.dim() != s || d.v.group() != sys.group() || d.w.group() != sys.group()
    {
        return Err(Error::ShapeMismatch(
            "covariant dilation representations do not match".into(),
        ));
    }
    let alg = sys.module().algebra();
    let checks = &mut cert.checks;

    let mut iv = Residual::new();
    let mut iw = Residual::new();
    let mut cov = Residual::new();
    let mut comp = Residual::new();
    for t in sys.group().elements() {
        iv.add(&(d.v.mat(t) * v), &(v * phi.u.mat(t)));
        iw.add(&(d.w.mat(t) * &base.w), &(&base.w * phi.u_prime.mat(t)));
        for i in 0..sys.module().dim() {
            let lhs = combine(&base.pi, &sys.eta(t).column(i).clone_owned(), (s, r));
            cov.add(&lhs, &(d.w.mat(t) * &base.pi[i] * d.v.mat(t).adjoint()));
        }
        for k in 0..alg.dim() {
            let lhs = base
                .gns
                .pi
                .apply_coords(sys.alpha(t).column(k).clone_owned().as_slice());
            comp.add(
                &lhs,
                &(d.v.mat(t) * &base.gns.pi.images[k] * d.v.mat(t).adjoint()),
            );
        }
    }
    checks.residual("intertwining_v", iv.value());
    checks.residual("intertwining_w", iw.value());
    checks.residual("covariant_representation", cov.value());
    checks.residual("companion_covariant_representation", comp.value());
    checks.residual("v_unitary_rep", d.v.check().max_residual());
    checks.residual("w_unitary_rep", d.w.check().max_residual());
    checks.residual("gram_preservation", d.gram_preservation);
    checks.residual("v_descent", d.v_descent);
    checks.residual("invariance", d.invariance);
    let input = check_covariant_cp(phi, tol)?;
    checks.residual("input_covariance", input.covariance);
    checks.residual("companion_covariance", input.companion_covariance);
    Ok(cert)
}

/// A second dilation `(pi'_X, V', W')`, optionally with `(v, w)`.
#[derive(Debug, Clone)]
pub struct AltDilation {
    pub rep: ModuleRepresentation,
    /// `H' x H`.
    pub v_op: Mat,
    /// `K' x K`, a coisometry.
    pub w_op: Mat,
    pub covariant: Option<(UnitaryRep, UnitaryRep)>,
}

impl AltDilation {
    pub fn from_dilation(d: &StinespringDilation) -> Self {
        Self {
            rep: d.representation(),
            v_op: d.v().clone(),
            w_op: d.w.clone(),
            covariant: None,
        }
    }

    pub fn from_covariant(d: &CovariantDilation) -> Self {
        Self {
            covariant: Some((d.v.clone(), d.w.clone())),
            ..Self::from_dilation(&d.base)
        }
    }

    /// `(R2 pi R1*, R1 V, R2 W)` with companion `R1 pi_A R1*`, and `(R1 v R1*, R2 w R2*)`.
    pub fn conjugated(&self, r1: &Mat, r2: &Mat) -> Self {
        let rep = ModuleRepresentation {
            module: self.rep.module.clone(),
            companion: AlgebraRepresentation {
                algebra: self.rep.companion.algebra.clone(),
                space_dim: self.rep.companion.space_dim,
                images: self
                    .rep
                    .companion
                    .images
                    .iter()
                    .map(|a| r1 * a * r1.adjoint())
                    .collect(),
            },
            k_dim: self.rep.k_dim,
            images: self
                .rep
                .images
                .iter()
                .map(|p| r2 * p * r1.adjoint())
                .collect(),
        };
        Self {
            rep,
            v_op: r1 * &self.v_op,
            w_op: r2 * &self.w_op,
            covariant: self
                .covariant
                .as_ref()
                .map(|(v, w)| (v.conjugate(r1), w.conjugate(r2))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Uniqueness {
    pub u1: Mat,
    pub u2: Mat,
    pub checks: CheckSet,
}

fn unitarity_defect(u: &Mat) -> f64 {
    let d = u.nrows();
    let scale = (d as f64).sqrt();
    relative(dist(&(u.adjoint() * u), &eye(u.ncols())), scale)
        .max(relative(dist(&(u * u.adjoint()), &eye(d)), scale))
}

/// Solves `U S = S'` for `U` in the least-squares sense.
fn fit(s: &Mat, s_prime: &Mat) -> Result<(Mat, f64)> {
    let u = least_squares_solve(&s.adjoint(), &s_prime.adjoint())?.adjoint();
    let res = relative(dist(&(&u * s), s_prime), fro(s_prime));
    Ok((u, res))
}

/// The unitaries `U1: H_Phi -> H'`, `U2: K_Phi -> K'` relating a minimal
/// dilation to another minimal one.
pub fn uniqueness_intertwiners(
    d: &StinespringDilation,
    d_cov: Option<(&UnitaryRep, &UnitaryRep)>,
    alt: &AltDilation,
    tol: f64,
) -> Result<Uniqueness> {
    let rep = &alt.rep;
    let (hp, kp) = (rep.h_dim(), rep.k_dim);
    if rep.module != d.module
        || alt.v_op.shape() != (hp, d.h_dim())
        || alt.w_op.shape() != (kp, d.k_dim)
    {
        return Err(Error::ShapeMismatch(
            "alternative dilation has inconsistent shapes".into(),
        ));
    }
    let pv: Vec<Mat> = rep.images.iter().map(|p| p * &alt.v_op).collect();
    let range = span_rank(&hstack(kp, &pv), DEFAULT_REL_TOL).rank;
    let pw: Vec<Mat> = rep.images.iter().map(|p| p.adjoint() * &alt.w_op).collect();
    let corange = span_rank(&hstack(hp, &pw), DEFAULT_REL_TOL).rank;
    if range != kp || corange != hp {
        return Err(Error::NotMinimal(format!(
            "alternative dilation spans {range} of {kp} and {corange} of {hp} dimensions"
        )));
    }

    let v = d.v();
    let s1: Vec<Mat> = d.gns.pi.images.iter().map(|a| a * v).collect();
    let s1p: Vec<Mat> = rep.companion.images.iter().map(|a| a * &alt.v_op).collect();
    let (u1, fit1) = fit(&hstack(d.h_phi(), &s1), &hstack(hp, &s1p))?;
    let s2: Vec<Mat> = d.pi.iter().map(|p| p * v).collect();
    let (u2, fit2) = fit(&hstack(d.k_phi(), &s2), &hstack(kp, &pv))?;

    let unitary_tol = tol.max(1e-8);
    let d1 = if u1.is_square() {
        unitarity_defect(&u1)
    } else {
        f64::INFINITY
    };
    if d1 > unitary_tol {
        return Err(Error::NotUnitary {
            which: "U1",
            residual: d1,
        });
    }
    let d2 = if u2.is_square() {
        unitarity_defect(&u2)
    } else {
        f64::INFINITY
    };
    if d2 > unitary_tol {
        return Err(Error::NotUnitary {
            which: "U2",
            residual: d2,
        });
    }

    let mut checks = CheckSet::default();
    checks.residual("u1_fit", fit1);
    checks.residual("u2_fit", fit2);
    checks.residual("u1_unitary", d1);
    checks.residual("u2_unitary", d2);
    let mut inter = Residual::new();
    for (p, pp) in d.pi.iter().zip(&rep.images) {
        inter.add(&(&u2 * p), &(pp * &u1));
    }
    checks.residual("intertwines_representation", inter.value());
    let mut comp = Residual::new();
    for (a, ap) in d.gns.pi.images.iter().zip(&rep.companion.images) {
        comp.add(&(&u1 * a), &(ap * &u1));
    }
    checks.residual("intertwines_companion", comp.value());
    let mut vr = Residual::new();
    vr.add(&alt.v_op, &(&u1 * v));
    checks.residual("v_prime", vr.value());
    let mut wr = Residual::new();
    wr.add(&alt.w_op, &(&u2 * &d.w));
    checks.residual("w_prime", wr.value());

    if let (Some((vphi, wphi)), Some((va, wa))) = (d_cov, alt.covariant.as_ref()) {
        let mut iv = Residual::new();
        let mut iw = Residual::new();
        for t in vphi.group().elements() {
            iv.add(&(va.mat(t) * &u1), &(&u1 * vphi.mat(t)));
            iw.add(&(wa.mat(t) * &u2), &(&u2 * wphi.mat(t)));
        }
        checks.residual("intertwines_v", iv.value());
        checks.residual("intertwines_w", iw.value());
    }
    Ok(Uniqueness { u1, u2, checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpmaps::{cp_from_representation, random_module_cp};
    use crate::hilbmod::{standard_action, FiniteGroup};
    use crate::numkernel::{diag_real, eigenvalues_hermitian};

    #[test]
    fn scalar_identity() {
        let alg = crate::cstar::CStarAlgebra::matrix(1);
        let phi = CPMapAlgebra::new(alg, 1, vec![eye(1)]).unwrap();
        let g = gns_construct(&phi, 1e-10).unwrap();
        assert_eq!(g.dim, 1);
        assert!((g.v[(0, 0)].norm() - 1.0).abs() < 1e-14);
        assert!((g.pi.images[0][(0, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_map_has_empty_triple() {
        let alg = crate::cstar::CStarAlgebra::matrix(2);
        let g = gns_construct(&CPMapAlgebra::zero(&alg, 3), 1e-10).unwrap();
        assert_eq!(g.dim, 0);
        assert_eq!(g.v.shape(), (0, 3));
    }

    #[test]
    fn trace_map_gns_is_full_rank() {
        let alg = crate::cstar::CStarAlgebra::matrix(2);
        let images = (0..4)
            .map(|k| {
                let a = alg.basis_element(k).embed();
                eye(2) * a.trace()
            })
            .collect();
        let phi = CPMapAlgebra::new(alg, 2, images).unwrap();
        let gram = gns_gram(&phi);
        let spectrum = eigenvalues_hermitian(&gram);
        assert!(*spectrum.last().unwrap() > 0.1);
        let g = gns_construct(&phi, 1e-10).unwrap();
        assert_eq!(g.dim, 8);
        for (k, p) in g.pi.images.iter().enumerate() {
            let back = g.v.adjoint() * p * &g.v;
            assert!(dist(&back, &phi.images[k]) < 1e-10);
        }
    }

    #[test]
    fn transpose_is_refused() {
        let alg = crate::cstar::CStarAlgebra::matrix(2);
        let images = (0..4)
            .map(|k| alg.basis_element(k).embed().transpose())
            .collect();
        let phi = CPMapAlgebra::new(alg, 2, images).unwrap();
        assert!(matches!(
            gns_construct(&phi, 1e-10),
            Err(Error::NotCp { .. })
        ));
    }

    #[test]
    fn concrete_column_module_is_its_own_dilation() {
        let pi = ModuleRepresentation::concrete_standard(2, 1);
        let phi = cp_from_representation(&pi, &eye(1), &eye(2)).unwrap();
        let d = dilate_module_cp(&phi, 1e-12).unwrap();
        assert_eq!((d.h_phi(), d.k_phi()), (1, 2));
        let cert = verify_dilation(&phi, &d, 1e-12).unwrap();
        assert!(cert.passed(), "{cert:?}");
    }

    #[test]
    fn random_dilations_verify() {
        for seed in 0..8 {
            let phi = random_module_cp(2, 2, 2, 3, 5, seed).unwrap();
            let d = dilate_module_cp(&phi, 1e-9).unwrap();
            let cert = verify_dilation(&phi, &d, 1e-9).unwrap();
            assert!(
                cert.passed(),
                "seed {seed}: {:?}",
                cert.checks.failures(1e-9)
            );
        }
    }

    #[test]
    fn padded_dilation_fails_range_rank() {
        let phi = random_module_cp(1, 2, 1, 2, 2, 1).unwrap();
        let mut d = dilate_module_cp(&phi, 1e-9).unwrap();
        let s = d.k_phi();
        let mut w = zeros(s + 1, d.k_dim);
        w.view_mut((0, 0), (s, d.k_dim)).copy_from(&d.w);
        d.w = w;
        d.pi =
            d.pi.iter()
                .map(|p| {
                    let mut out = zeros(s + 1, p.ncols());
                    out.view_mut((0, 0), (s, p.ncols())).copy_from(p);
                    out
                })
                .collect();
        let cert = verify_dilation(&phi, &d, 1e-9).unwrap();
        assert!(cert.checks.residuals["reconstruction"] < 1e-9);
        let range = &cert.checks.ranks["range"];
        assert_eq!(range.required - range.achieved, 1);
    }

    #[test]
    fn z2_concrete_covariant_dilation() {
        let g = FiniteGroup::cyclic(2);
        let delta = UnitaryRep::new(g.clone(), vec![eye(2), diag_real(&[1.0, -1.0])]).unwrap();
        let gamma = UnitaryRep::trivial(&g, 1);
        let sa = standard_action(&gamma, &delta).unwrap();
        let pi = ModuleRepresentation::concrete_standard(1, 2);
        let base = cp_from_representation(&pi, &eye(2), &eye(1)).unwrap();
        let phi = CovariantCPMap::new(base, sa.system.clone(), delta, gamma).unwrap();
        let d = dilate_covariant(&phi, 1e-10).unwrap();
        let cert = verify_covariant_dilation(&phi, &d, 1e-10).unwrap();
        assert!(cert.passed(), "{:?}", cert.checks.failures(1e-10));
        assert_eq!((d.base.h_phi(), d.base.k_phi()), (2, 1));
        let mut ev = eigenvalues_hermitian(d.v.mat(1));
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] + 1.0).abs() < 1e-12 && (ev[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniqueness_recovers_conjugators() {
        let phi = random_module_cp(2, 2, 2, 3, 5, 4).unwrap();
        let d = dilate_module_cp(&phi, 1e-9).unwrap();
        let same =
            uniqueness_intertwiners(&d, None, &AltDilation::from_dilation(&d), 1e-9).unwrap();
        assert!(dist(&same.u1, &eye(d.h_phi())) < 1e-9);
        assert!(dist(&same.u2, &eye(d.k_phi())) < 1e-9);

        let mut rng = crate::rng::SeedStream::new(8).stream(0);
        let r1 = crate::rng::random_unitary(d.h_phi(), &mut rng);
        let r2 = crate::rng::random_unitary(d.k_phi(), &mut rng);
        let alt = AltDilation::from_dilation(&d).conjugated(&r1, &r2);
        let u = uniqueness_intertwiners(&d, None, &alt, 1e-9).unwrap();
        assert!(dist(&u.u1, &r1) < 1e-9 && dist(&u.u2, &r2) < 1e-9);
        assert!(u.checks.passed(1e-8), "{:?}", u.checks.failures(1e-8));
    }

    #[test]
    fn corrupted_w_is_detected() {
        let phi = random_module_cp(1, 2, 2, 2, 3, 2).unwrap();
        let d = dilate_module_cp(&phi, 1e-9).unwrap();
        let mut alt = AltDilation::from_dilation(&d);
        let mut rng = crate::rng::SeedStream::new(3).stream(1);
        let q = crate::rng::random_unitary(d.k_dim, &mut rng);
        alt.w_op = q.rows(0, d.k_phi()).into_owned();
        match uniqueness_intertwiners(&d, None, &alt, 1e-9) {
            Err(Error::NotUnitary { .. }) | Err(Error::NotMinimal(_)) => {}
            Ok(u) => assert!(!u.checks.passed(1e-8)),
            Err(e) => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn zero_map_dilation_is_vacuous() {
        let x = HilbertModule::standard(1, 2);
        let phi = ModuleCPMap::zero(&x, 2, 1);
        let d = dilate_module_cp(&phi, 1e-9).unwrap();
        assert_eq!((d.h_phi(), d.k_phi()), (0, 0));
        let cert = verify_dilation(&phi, &d, 1e-9).unwrap();
        assert!(cert.passed(), "{cert:?}");
    }

    #[test]
    fn certificate_json_round_trip() {
        let phi = random_module_cp(1, 2, 1, 2, 2, 5).unwrap();
        let d = dilate_module_cp(&phi, 1e-9).unwrap();
        let cert = verify_dilation(&phi, &d, 1e-9).unwrap();
        let s = serde_json::to_string(&cert).unwrap();
        let back: DilationCertificate = serde_json::from_str(&s).unwrap();
        assert_eq!(back, cert);
    }
}
