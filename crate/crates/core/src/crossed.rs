//! Finite-group crossed products `G x_alpha A` and `G x_eta X`, integral
//! forms of covariant representations, and the induced CP maps on them.
//!
//! Elements are functions on the group. With `N = dim A`, crossed-algebra
//! coordinates are indexed `t * N + k` for `delta_t (x) a_k`; crossed-module
//! coordinates are `t * m + i` for `delta_t (x) x_i`.
//!
//! ```text
//! (f g)(s)      = sum_t f(t) alpha_t(g(t^-1 s))
//! f*(s)         = alpha_s(f(s^-1)*)
//! (x f)(s)      = sum_t x(t) alpha_t(f(t^-1 s))
//! <x, y>(s)     = sum_t alpha_{t^-1}(<x(t), y(t s)>)
//! ```

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cpmaps::{check_covariant_cp, CovariantCPMap};
use crate::cstar::{check_automorphism, AlgebraElement, CStarAlgebra, ElementJson};
use crate::error::{Error, Result};
use crate::hilbmod::{
    check_covariant_representation, CovariantRepresentation, FiniteGroup, HilbertModule,
    ModuleDynamicalSystem, ModuleRepresentation,
};
use crate::numkernel::{
    c, hstack, least_squares_solve, psd_check, span_rank, unvec_row_major, vec_row_major, zeros,
    Mat, RankProfile, Residual, Vector, C64, DEFAULT_REL_TOL,
};
use crate::rng::{ginibre, SeedStream};
use crate::stinespring::{dilate_covariant, CheckSet, CovariantDilation};

/// Exhaustive basis-triple checks run when `dim^3` is at most this; larger
/// structures are checked on seeded random triples.
pub const EXHAUSTIVE_LIMIT: usize = 4096;
const RANDOM_TRIPLES: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct CrossedElement {
    pub entries: Vec<AlgebraElement>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossedModuleElement {
    pub entries: Vec<Vector>,
}

/// `{"entries": {"t": element}}`, zero entries omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossedElementJson {
    pub entries: BTreeMap<usize, ElementJson>,
}

fn group_law_residual(group: &FiniteGroup, maps: &[Mat]) -> f64 {
    let mut law = Residual::new();
    for s in group.elements() {
        for t in group.elements() {
            law.add(&(&maps[s] * &maps[t]), &maps[group.mul(s, t)]);
        }
    }
    law.value()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossedAlgebra {
    group: FiniteGroup,
    base: CStarAlgebra,
    alpha: Vec<Mat>,
}

impl CrossedAlgebra {
    pub fn new(group: FiniteGroup, base: CStarAlgebra, alpha: Vec<Mat>) -> Result<Self> {
        let n = base.dim();
        if alpha.len() != group.order() || alpha.iter().any(|a| a.shape() != (n, n)) {
            return Err(Error::ShapeMismatch(
                "one N x N alpha per group element is required".into(),
            ));
        }
        let law = group_law_residual(&group, &alpha);
        if law > 1e-9 {
            return Err(Error::NotAction(format!(
                "alpha fails the group law (residual {law:.2e})"
            )));
        }
        for (t, a) in alpha.iter().enumerate() {
            let rep = check_automorphism(&base, a);
            if !rep.bijective() || rep.multiplicativity > 1e-9 || rep.star > 1e-9 {
                return Err(Error::NotAction(format!(
                    "alpha for group element {t} is not a *-automorphism"
                )));
            }
        }
        Ok(Self { group, base, alpha })
    }

    pub fn from_system(sys: &ModuleDynamicalSystem) -> Result<Self> {
        Self::new(
            sys.group().clone(),
            sys.module().algebra().clone(),
            sys.alphas().to_vec(),
        )
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn base(&self) -> &CStarAlgebra {
        &self.base
    }

    pub fn dim(&self) -> usize {
        self.group.order() * self.base.dim()
    }

    fn alpha_apply(&self, t: usize, a: &AlgebraElement) -> AlgebraElement {
        self.base.apply_map(&self.alpha[t], a)
    }

    pub fn zero(&self) -> CrossedElement {
        CrossedElement {
            entries: vec![self.base.zero(); self.group.order()],
        }
    }

    /// `delta_e (x) 1`.
    pub fn unit(&self) -> CrossedElement {
        let mut z = self.zero();
        z.entries[self.group.identity()] = self.base.unit();
        z
    }

    pub fn basis_element(&self, idx: usize) -> CrossedElement {
        let n = self.base.dim();
        let mut z = self.zero();
        z.entries[idx / n] = self.base.basis_element(idx % n);
        z
    }

    pub fn basis_label(&self, idx: usize) -> String {
        let n = self.base.dim();
        format!("{}:{}", idx / n, self.base.basis_label(idx % n))
    }

    pub fn from_coords(&self, coords: &[C64]) -> CrossedElement {
        let n = self.base.dim();
        CrossedElement {
            entries: coords
                .chunks(n)
                .map(|ch| self.base.from_coords(ch))
                .collect(),
        }
    }

    pub fn coords(&self, f: &CrossedElement) -> Vector {
        let n = self.base.dim();
        let mut v = Vector::zeros(self.dim());
        for (t, a) in f.entries.iter().enumerate() {
            v.rows_mut(t * n, n).copy_from(&a.coords());
        }
        v
    }

    pub fn mul(&self, f: &CrossedElement, g: &CrossedElement) -> CrossedElement {
        let grp = &self.group;
        let mut out = self.zero();
        for t in grp.elements() {
            if f.entries[t].norm() == 0.0 {
                continue;
            }
            let ti = grp.inv(t);
            for s in grp.elements() {
                let gv = &g.entries[grp.mul(ti, s)];
                if gv.norm() == 0.0 {
                    continue;
                }
                let term = f.entries[t].mul(&self.alpha_apply(t, gv));
                out.entries[s] = out.entries[s].add(&term);
            }
        }
        out
    }

    pub fn star(&self, f: &CrossedElement) -> CrossedElement {
        let grp = &self.group;
        CrossedElement {
            entries: grp
                .elements()
                .map(|s| self.alpha_apply(s, &f.entries[grp.inv(s)].star()))
                .collect(),
        }
    }

    pub fn add(&self, f: &CrossedElement, g: &CrossedElement) -> CrossedElement {
        CrossedElement {
            entries: f
                .entries
                .iter()
                .zip(&g.entries)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn scale(&self, f: &CrossedElement, s: C64) -> CrossedElement {
        CrossedElement {
            entries: f.entries.iter().map(|a| a.scale(s)).collect(),
        }
    }

    pub fn dist(&self, f: &CrossedElement, g: &CrossedElement) -> f64 {
        (self.coords(f) - self.coords(g)).norm()
    }

    pub fn to_json(&self, f: &CrossedElement) -> CrossedElementJson {
        CrossedElementJson {
            entries: f
                .entries
                .iter()
                .enumerate()
                .filter(|(_, a)| a.norm() > 0.0)
                .map(|(t, a)| (t, ElementJson::from(a)))
                .collect(),
        }
    }

    pub fn from_json(&self, j: &CrossedElementJson) -> Result<CrossedElement> {
        let mut out = self.zero();
        for (&t, e) in &j.entries {
            if t >= self.group.order() {
                return Err(Error::ShapeMismatch(format!(
                    "group index {t} out of range"
                )));
            }
            out.entries[t] = e.to_element(&self.base)?;
        }
        Ok(out)
    }

    /// Nonzero products of basis pairs, for external inspection.
    pub fn structure_constants(&self) -> StructureDump {
        let d = self.dim();
        let mut products = Vec::new();
        for i in 0..d {
            let bi = self.basis_element(i);
            for j in 0..d {
                let p = self.coords(&self.mul(&bi, &self.basis_element(j)));
                let terms = nonzero_terms(&p, |k| self.basis_label(k));
                if !terms.is_empty() {
                    products.push(ProductEntry {
                        left: self.basis_label(i),
                        right: self.basis_label(j),
                        result: terms,
                    });
                }
            }
        }
        let involution = (0..d)
            .map(|i| {
                let p = self.coords(&self.star(&self.basis_element(i)));
                (
                    self.basis_label(i),
                    nonzero_terms(&p, |k| self.basis_label(k)),
                )
            })
            .collect();
        StructureDump {
            dim: d,
            products,
            involution,
        }
    }
}

fn nonzero_terms(v: &Vector, label: impl Fn(usize) -> String) -> BTreeMap<String, [f64; 2]> {
    v.iter()
        .enumerate()
        .filter(|(_, z)| z.norm() > 1e-14)
        .map(|(k, z)| (label(k), [z.re, z.im]))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductEntry {
    pub left: String,
    pub right: String,
    pub result: BTreeMap<String, [f64; 2]>,
}

/// Structure constants of a crossed algebra on the basis `"t:b:i:j"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureDump {
    pub dim: usize,
    pub products: Vec<ProductEntry>,
    pub involution: BTreeMap<String, BTreeMap<String, [f64; 2]>>,
}

/// Index triples to test: every triple when small, seeded random ones otherwise.
fn triples(dim: usize) -> Option<Vec<(usize, usize, usize)>> {
    if dim.pow(3) <= EXHAUSTIVE_LIMIT {
        let mut out = Vec::with_capacity(dim.pow(3));
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    out.push((i, j, k));
                }
            }
        }
        Some(out)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossedAlgebraReport {
    pub associativity: f64,
    /// `max |(fg)* - g* f*|`.
    pub anti_multiplicative: f64,
    /// `max |f** - f|`.
    pub involutive: f64,
    /// `max |(i f)* + i f*|`.
    pub conjugate_linear: f64,
    pub exhaustive: bool,
}

impl CrossedAlgebraReport {
    pub fn max_residual(&self) -> f64 {
        self.associativity
            .max(self.anti_multiplicative)
            .max(self.involutive)
            .max(self.conjugate_linear)
    }
}

fn random_crossed(ca: &CrossedAlgebra, rng: &mut impl Rng) -> CrossedElement {
    let v = ginibre(ca.dim(), 1, rng);
    ca.from_coords(v.as_slice())
}

pub fn check_crossed_algebra(ca: &CrossedAlgebra, seed: u64) -> CrossedAlgebraReport {
    let mut assoc = Residual::new();
    let mut anti = Residual::new();
    let mut invol = Residual::new();
    let mut conj = Residual::new();
    let emb = |f: &CrossedElement| Mat::from_column_slice(ca.dim(), 1, ca.coords(f).as_slice());
    let mut check_triple = |f: &CrossedElement, g: &CrossedElement, h: &CrossedElement| {
        let fg = ca.mul(f, g);
        assoc.add(&emb(&ca.mul(&fg, h)), &emb(&ca.mul(f, &ca.mul(g, h))));
        anti.add(&emb(&ca.star(&fg)), &emb(&ca.mul(&ca.star(g), &ca.star(f))));
    };
    let exhaustive = match triples(ca.dim()) {
        Some(ts) => {
            let basis: Vec<_> = (0..ca.dim()).map(|i| ca.basis_element(i)).collect();
            for (i, j, k) in ts {
                check_triple(&basis[i], &basis[j], &basis[k]);
            }
            for f in &basis {
                invol.add(&emb(&ca.star(&ca.star(f))), &emb(f));
                let i_f = ca.scale(f, c(0.0, 1.0));
                conj.add(
                    &emb(&ca.star(&i_f)),
                    &emb(&ca.scale(&ca.star(f), c(0.0, -1.0))),
                );
            }
            true
        }
        None => {
            let mut rng = SeedStream::new(seed).stream(0);
            for _ in 0..RANDOM_TRIPLES {
                let (f, g, h) = (
                    random_crossed(ca, &mut rng),
                    random_crossed(ca, &mut rng),
                    random_crossed(ca, &mut rng),
                );
                check_triple(&f, &g, &h);
                invol.add(&emb(&ca.star(&ca.star(&f))), &emb(&f));
                let i_f = ca.scale(&f, c(0.0, 1.0));
                conj.add(
                    &emb(&ca.star(&i_f)),
                    &emb(&ca.scale(&ca.star(&f), c(0.0, -1.0))),
                );
            }
            false
        }
    };
    CrossedAlgebraReport {
        associativity: assoc.value(),
        anti_multiplicative: anti.value(),
        involutive: invol.value(),
        conjugate_linear: conj.value(),
        exhaustive,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossedModule {
    system: ModuleDynamicalSystem,
    algebra: CrossedAlgebra,
}

impl CrossedModule {
    pub fn new(sys: &ModuleDynamicalSystem) -> Result<Self> {
        Ok(Self {
            algebra: CrossedAlgebra::from_system(sys)?,
            system: sys.clone(),
        })
    }

    pub fn algebra(&self) -> &CrossedAlgebra {
        &self.algebra
    }

    pub fn system(&self) -> &ModuleDynamicalSystem {
        &self.system
    }

    pub fn module(&self) -> &HilbertModule {
        self.system.module()
    }

    pub fn group(&self) -> &FiniteGroup {
        self.system.group()
    }

    pub fn dim(&self) -> usize {
        self.group().order() * self.module().dim()
    }

    pub fn zero(&self) -> CrossedModuleElement {
        CrossedModuleElement {
            entries: vec![Vector::zeros(self.module().dim()); self.group().order()],
        }
    }

    pub fn basis_element(&self, idx: usize) -> CrossedModuleElement {
        let m = self.module().dim();
        let mut z = self.zero();
        z.entries[idx / m][idx % m] = c(1.0, 0.0);
        z
    }

    pub fn basis_label(&self, idx: usize) -> String {
        let m = self.module().dim();
        format!("{}:{}", idx / m, self.module().basis_label(idx % m))
    }

    pub fn coords(&self, x: &CrossedModuleElement) -> Vector {
        let m = self.module().dim();
        let mut v = Vector::zeros(self.dim());
        for (t, e) in x.entries.iter().enumerate() {
            v.rows_mut(t * m, m).copy_from(e);
        }
        v
    }

    pub fn from_coords(&self, coords: &[C64]) -> CrossedModuleElement {
        let m = self.module().dim();
        CrossedModuleElement {
            entries: coords.chunks(m).map(Vector::from_column_slice).collect(),
        }
    }

    pub fn act(&self, x: &CrossedModuleElement, f: &CrossedElement) -> CrossedModuleElement {
        let g = self.group();
        let module = self.module();
        let mut out = self.zero();
        for t in g.elements() {
            if x.entries[t].norm() == 0.0 {
                continue;
            }
            let ti = g.inv(t);
            for s in g.elements() {
                let fv = &f.entries[g.mul(ti, s)];
                if fv.norm() == 0.0 {
                    continue;
                }
                out.entries[s] += module.act(&x.entries[t], &self.algebra.alpha_apply(t, fv));
            }
        }
        out
    }

    pub fn inner(&self, x: &CrossedModuleElement, y: &CrossedModuleElement) -> CrossedElement {
        let g = self.group();
        let module = self.module();
        let mut out = self.algebra.zero();
        for t in g.elements() {
            if x.entries[t].norm() == 0.0 {
                continue;
            }
            let ti = g.inv(t);
            for s in g.elements() {
                let yv = &y.entries[g.mul(t, s)];
                if yv.norm() == 0.0 {
                    continue;
                }
                let term = self
                    .algebra
                    .alpha_apply(ti, &module.inner(&x.entries[t], yv));
                out.entries[s] = out.entries[s].add(&term);
            }
        }
        out
    }

    /// Columns: crossed-algebra coordinates of `<e_i, e_j>` at `i * dim + j`.
    pub fn fullness_system(&self) -> Mat {
        let d = self.dim();
        let basis: Vec<_> = (0..d).map(|i| self.basis_element(i)).collect();
        let mut out = zeros(self.algebra.dim(), d * d);
        for i in 0..d {
            for j in 0..d {
                out.set_column(
                    i * d + j,
                    &self.algebra.coords(&self.inner(&basis[i], &basis[j])),
                );
            }
        }
        out
    }

    pub fn fullness(&self) -> RankProfile {
        span_rank(&self.fullness_system(), DEFAULT_REL_TOL)
    }
}

pub fn build_crossed_module(sys: &ModuleDynamicalSystem) -> Result<CrossedModule> {
    CrossedModule::new(sys)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossedModuleReport {
    /// `max |<x, y f> - <x, y> f|`.
    pub linearity: f64,
    /// `max |(x f) g - x (f g)|`.
    pub action: f64,
    pub symmetry: f64,
    /// Smallest eigenvalue of `[(pi_A x v)(<z_i, z_j>)]` for the faithful
    /// regular-induced representation, relative to its largest.
    pub positivity_min_eig: f64,
    pub positive: bool,
    pub fullness: (usize, usize),
    pub exhaustive: bool,
}

impl CrossedModuleReport {
    pub fn max_residual(&self) -> f64 {
        self.linearity.max(self.action).max(self.symmetry)
    }
}

fn random_module_element(cm: &CrossedModule, rng: &mut impl Rng) -> CrossedModuleElement {
    cm.from_coords(ginibre(cm.dim(), 1, rng).as_slice())
}

pub fn check_crossed_module(
    cm: &CrossedModule,
    tol: f64,
    seed: u64,
) -> Result<CrossedModuleReport> {
    let ca = &cm.algebra;
    let col = |f: &CrossedElement| Mat::from_column_slice(ca.dim(), 1, ca.coords(f).as_slice());
    let mcol =
        |x: &CrossedModuleElement| Mat::from_column_slice(cm.dim(), 1, cm.coords(x).as_slice());
    let mut lin = Residual::new();
    let mut act = Residual::new();
    let mut sym = Residual::new();

    let (xs, fs, exhaustive) = if cm.dim() * cm.dim() * ca.dim() <= EXHAUSTIVE_LIMIT {
        let xs: Vec<_> = (0..cm.dim()).map(|i| cm.basis_element(i)).collect();
        let fs: Vec<_> = (0..ca.dim()).map(|i| ca.basis_element(i)).collect();
        (xs, fs, true)
    } else {
        let mut rng = SeedStream::new(seed).stream(1);
        let xs: Vec<_> = (0..6)
            .map(|_| random_module_element(cm, &mut rng))
            .collect();
        let fs: Vec<_> = (0..4).map(|_| random_crossed(ca, &mut rng)).collect();
        (xs, fs, false)
    };
    for x in &xs {
        for y in &xs {
            let xy = cm.inner(x, y);
            sym.add(&col(&ca.star(&xy)), &col(&cm.inner(y, x)));
            for f in &fs {
                lin.add(&col(&cm.inner(x, &cm.act(y, f))), &col(&ca.mul(&xy, f)));
            }
        }
        for f in &fs {
            let xf = cm.act(x, f);
            for g in fs.iter().take(4) {
                act.add(&mcol(&cm.act(&xf, g)), &mcol(&cm.act(x, &ca.mul(f, g))));
            }
        }
    }

    let faithful = CovariantRepresentation::regular_induced(
        &ModuleRepresentation::canonical(cm.module())?,
        &cm.system,
    )?;
    let int = integral_form(&faithful, cm)?;
    let d = cm.dim();
    let h = faithful.rep.h_dim();
    let mut gram = zeros(d * h, d * h);
    let basis: Vec<_> = (0..d).map(|i| cm.basis_element(i)).collect();
    for i in 0..d {
        for j in 0..d {
            let val = int.apply_algebra(ca, &cm.inner(&basis[i], &basis[j]));
            gram.view_mut((i * h, j * h), (h, h)).copy_from(&val);
        }
    }
    let psd = psd_check(&gram, tol);
    Ok(CrossedModuleReport {
        linearity: lin.value(),
        action: act.value(),
        symmetry: sym.value(),
        positivity_min_eig: psd.min_eig,
        positive: psd.ok,
        fullness: (cm.fullness().rank, ca.dim()),
        exhaustive,
    })
}

/// `(pi_X x v)` on the crossed-module basis and `(pi_A x v)` on the
/// crossed-algebra basis.
#[derive(Debug, Clone)]
pub struct IntegralForm {
    pub h_dim: usize,
    pub k_dim: usize,
    /// `K x H` at index `t * m + i`: `pi_X(x_i) v_t`.
    pub images: Vec<Mat>,
    /// `H x H` at index `t * N + k`: `pi_A(a_k) v_t`.
    pub companion: Vec<Mat>,
}

impl IntegralForm {
    pub fn apply_module(&self, x: &Vector) -> Mat {
        crate::hilbmod::representation::combine(&self.images, x, (self.k_dim, self.h_dim))
    }

    pub fn apply_algebra(&self, ca: &CrossedAlgebra, f: &CrossedElement) -> Mat {
        let coords = ca.coords(f);
        let mut out = zeros(self.h_dim, self.h_dim);
        for (img, &w) in self.companion.iter().zip(coords.iter()) {
            if w != C64::new(0.0, 0.0) {
                out += img * w;
            }
        }
        out
    }
}

pub fn integral_form(covrep: &CovariantRepresentation, cm: &CrossedModule) -> Result<IntegralForm> {
    if covrep.system != cm.system {
        return Err(Error::ShapeMismatch(
            "representation and crossed module use different systems".into(),
        ));
    }
    let rep = &covrep.rep;
    let mut images = Vec::with_capacity(cm.dim());
    let mut companion = Vec::with_capacity(cm.algebra.dim());
    for t in cm.group().elements() {
        let vt = covrep.v.mat(t);
        images.extend(rep.images.iter().map(|p| p * vt));
        companion.extend(rep.companion.images.iter().map(|a| a * vt));
    }
    Ok(IntegralForm {
        h_dim: rep.h_dim(),
        k_dim: rep.k_dim,
        images,
        companion,
    })
}

/// Reason a nondegeneracy comparison was not made.
pub const SKIP_DEGENERATE: &str = "input covariant representation is degenerate";

#[derive(Debug, Clone)]
pub struct IntegralFormReport {
    pub form: IntegralForm,
    pub checks: CheckSet,
    /// `(rank of the range span, rank of the corange span)`, always computed.
    pub observed_ranks: (usize, usize),
    /// Set when the integral-form rank checks were skipped.
    pub skipped: Option<&'static str>,
}

/// Integral form with its representation identity, companion consistency
/// and, for nondegenerate inputs, nondegeneracy of the integral form.
pub fn check_integral_form(
    covrep: &CovariantRepresentation,
    cm: &CrossedModule,
    tol: f64,
) -> Result<IntegralFormReport> {
    let input = check_covariant_representation(covrep, tol)?;
    if input.max_residual() > tol {
        return Err(Error::NotCovariantRep {
            residual: input.max_residual(),
        });
    }
    let form = integral_form(covrep, cm)?;
    let ca = &cm.algebra;
    let d = cm.dim();
    let (h, k) = (form.h_dim, form.k_dim);
    let mut checks = CheckSet::default();

    let basis: Vec<_> = (0..d).map(|i| cm.basis_element(i)).collect();
    let mut ident = Residual::new();
    let mut targets = zeros(h * h, d * d);
    for i in 0..d {
        for j in 0..d {
            let lhs = form.images[i].adjoint() * &form.images[j];
            ident.add(
                &lhs,
                &form.apply_algebra(ca, &cm.inner(&basis[i], &basis[j])),
            );
            targets.set_column(i * d + j, &vec_row_major(&lhs));
        }
    }
    checks.residual("integral_identity", ident.value());

    // Companion recovered from the images alone, compared with pi_A x v.
    let sys_mat = cm.fullness_system();
    let full = span_rank(&sys_mat, DEFAULT_REL_TOL);
    if full.rank == ca.dim() {
        let sol = least_squares_solve(&sys_mat.transpose(), &targets.transpose())?.transpose();
        let mut agree = Residual::new();
        for (kk, img) in form.companion.iter().enumerate() {
            agree.add(&unvec_row_major(sol.column(kk).as_slice(), h, h), img);
        }
        checks.residual("integral_companion", agree.value());
    }

    let range = span_rank(&hstack(k, &form.images), DEFAULT_REL_TOL);
    let adj: Vec<Mat> = form.images.iter().map(|m| m.adjoint()).collect();
    let corange = span_rank(&hstack(h, &adj), DEFAULT_REL_TOL);
    let observed_ranks = (range.rank, corange.rank);
    let skipped = if input.base.nondegenerate() {
        checks.rank("integral_form_range", range, k);
        checks.rank("integral_form_corange", corange, h);
        None
    } else {
        Some(SKIP_DEGENERATE)
    };
    Ok(IntegralFormReport {
        form,
        checks,
        observed_ranks,
        skipped,
    })
}

/// `Phi_hat(x) = sum_t Phi(x(t)) u_t` and `phi_hat(f) = sum_t phi(f(t)) u_t`.
#[derive(Debug, Clone)]
pub struct InducedCp {
    /// `K x H` at crossed-module index `t * m + i`.
    pub phi_hat: Vec<Mat>,
    /// `H x H` at crossed-algebra index `t * N + k`.
    pub varphi_hat: Vec<Mat>,
    pub dilation: CovariantDilation,
    pub checks: CheckSet,
}

pub fn induced_cp(phi: &CovariantCPMap, cm: &CrossedModule, tol: f64) -> Result<InducedCp> {
    let cov = check_covariant_cp(phi, tol)?;
    if cov.max_residual() > tol {
        return Err(Error::NotCovariant {
            residual: cov.max_residual(),
        });
    }
    if phi.system != cm.system {
        return Err(Error::ShapeMismatch(
            "map and crossed module use different systems".into(),
        ));
    }
    let base = &phi.base;
    let h = base.h_dim;
    let mut phi_hat = Vec::with_capacity(cm.dim());
    let mut varphi_hat = Vec::with_capacity(cm.algebra.dim());
    for t in cm.group().elements() {
        let ut = phi.u.mat(t);
        phi_hat.extend(base.images.iter().map(|p| p * ut));
        varphi_hat.extend(base.companion.images.iter().map(|a| a * ut));
    }
    let ca = &cm.algebra;
    let apply_hat = |f: &CrossedElement| {
        let coords = ca.coords(f);
        let mut out = zeros(h, h);
        for (img, &w) in varphi_hat.iter().zip(coords.iter()) {
            if w != C64::new(0.0, 0.0) {
                out += img * w;
            }
        }
        out
    };

    let mut checks = CheckSet::default();
    let d = cm.dim();
    let basis: Vec<_> = (0..d).map(|i| cm.basis_element(i)).collect();
    let mut ident = Residual::new();
    let mut targets = zeros(h * h, d * d);
    for i in 0..d {
        for j in 0..d {
            let lhs = phi_hat[i].adjoint() * &phi_hat[j];
            ident.add(&lhs, &apply_hat(&cm.inner(&basis[i], &basis[j])));
            targets.set_column(i * d + j, &vec_row_major(&lhs));
        }
    }
    checks.residual("induced_identity", ident.value());

    let sys_mat = cm.fullness_system();
    if span_rank(&sys_mat, DEFAULT_REL_TOL).rank == ca.dim() {
        let sol = least_squares_solve(&sys_mat.transpose(), &targets.transpose())?.transpose();
        let mut agree = Residual::new();
        for (kk, img) in varphi_hat.iter().enumerate() {
            agree.add(&unvec_row_major(sol.column(kk).as_slice(), h, h), img);
        }
        checks.residual("induced_companion", agree.value());
    }

    let dilation = dilate_covariant(phi, tol)?;
    let covrep = dilation.covariant_representation(phi)?;
    let form = integral_form(&covrep, cm)?;
    let v = dilation.base.v();
    let w = &dilation.base.w;
    let mut fact = Residual::new();
    for (img, p) in phi_hat.iter().zip(&form.images) {
        fact.add(img, &(w.adjoint() * p * v));
    }
    checks.residual("factorization", fact.value());
    let mut cfact = Residual::new();
    for (img, p) in varphi_hat.iter().zip(&form.companion) {
        cfact.add(img, &(v.adjoint() * p * v));
    }
    checks.residual("companion_factorization", cfact.value());
    Ok(InducedCp {
        phi_hat,
        varphi_hat,
        dilation,
        checks,
    })
}

/// Reconstruction and minimality of `Phi_hat` realized through the integral form of
/// `(pi_Phi x v^Phi, H_Phi, K_Phi, V_Phi, W_Phi)`.
pub fn check_integral_stinespring(
    phi: &CovariantCPMap,
    d: &CovariantDilation,
    cm: &CrossedModule,
) -> Result<CheckSet> {
    let covrep = d.covariant_representation(phi)?;
    let form = integral_form(&covrep, cm)?;
    let base = &d.base;
    let v = base.v();
    let (r, s) = (base.h_phi(), base.k_phi());
    let mut checks = CheckSet::default();
    let mut recon = Residual::new();
    for t in cm.group().elements() {
        let ut = phi.u.mat(t);
        for (i, p) in phi.base.images.iter().enumerate() {
            let lhs = p * ut;
            recon.add(
                &lhs,
                &(base.w.adjoint() * &form.images[t * cm.module().dim() + i] * v),
            );
        }
    }
    checks.residual("integral_reconstruction", recon.value());
    let pv: Vec<Mat> = form.images.iter().map(|p| p * v).collect();
    checks.rank(
        "integral_range",
        span_rank(&hstack(s, &pv), DEFAULT_REL_TOL),
        s,
    );
    let pw: Vec<Mat> = form.images.iter().map(|p| p.adjoint() * &base.w).collect();
    checks.rank(
        "integral_corange",
        span_rank(&hstack(r, &pw), DEFAULT_REL_TOL),
        r,
    );
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpmaps::{cp_from_representation, random_covariant_cp, CPMapAlgebra, ModuleCPMap};
    use crate::hilbmod::{standard_action, UnitaryRep};
    use crate::numkernel::{diag_real, dist, eye, r};

    fn z2_m2_system() -> crate::hilbmod::StandardAction {
        let g = FiniteGroup::cyclic(2);
        let delta = UnitaryRep::new(g.clone(), vec![eye(2), diag_real(&[1.0, -1.0])]).unwrap();
        standard_action(&UnitaryRep::trivial(&g, 1), &delta).unwrap()
    }

    #[test]
    fn trivial_group_reduces_to_base() {
        let x = HilbertModule::standard(2, 2);
        let sys = ModuleDynamicalSystem::trivial(FiniteGroup::trivial(), x.clone());
        let cm = build_crossed_module(&sys).unwrap();
        let ca = cm.algebra();
        let alg = x.algebra();
        for i in 0..4 {
            for j in 0..4 {
                let p = ca.mul(&ca.basis_element(i), &ca.basis_element(j));
                let q = alg.basis_element(i).mul(&alg.basis_element(j));
                assert!(p.entries[0].dist(&q) < 1e-15);
            }
        }
        for i in 0..x.dim() {
            for j in 0..x.dim() {
                let ip = cm.inner(&cm.basis_element(i), &cm.basis_element(j));
                assert!(ip.entries[0].dist(x.inner_basis(i, j)) < 1e-15);
            }
        }
    }

    #[test]
    fn group_algebra_idempotents() {
        let g = FiniteGroup::cyclic(2);
        let ca = CrossedAlgebra::new(g, CStarAlgebra::matrix(1), vec![eye(1), eye(1)]).unwrap();
        for sign in [1.0, -1.0] {
            let p = ca.from_coords(&[r(0.5), r(0.5 * sign)]);
            assert!(ca.dist(&ca.mul(&p, &p), &p) < 1e-15);
            assert!(ca.dist(&ca.star(&p), &p) < 1e-15);
        }
    }

    #[test]
    fn z2_on_m2_is_associative_exhaustively() {
        let sa = z2_m2_system();
        let ca = CrossedAlgebra::from_system(&sa.system).unwrap();
        assert_eq!(ca.dim(), 8);
        let rep = check_crossed_algebra(&ca, 0);
        assert!(rep.exhaustive);
        assert!(rep.max_residual() <= 1e-12, "{rep:?}");
    }

    #[test]
    fn non_action_is_rejected() {
        let g = FiniteGroup::cyclic(2);
        let alg = CStarAlgebra::matrix(1);
        assert!(matches!(
            CrossedAlgebra::new(g, alg, vec![eye(1), eye(1) * r(2.0)]),
            Err(Error::NotAction(_))
        ));
    }

    #[test]
    fn scalar_correlation_inner_product() {
        let x = HilbertModule::standard(1, 1);
        let sys = ModuleDynamicalSystem::trivial(FiniteGroup::cyclic(2), x);
        let cm = build_crossed_module(&sys).unwrap();
        let a = cm.from_coords(&[c(1.0, 2.0), c(-0.5, 0.0)]);
        let b = cm.from_coords(&[c(0.0, 1.0), c(3.0, 1.0)]);
        let ip = cm.inner(&a, &b);
        // <a,b>(s) = sum_t conj(a(t)) b(ts).
        for s in 0..2 {
            let want: C64 = (0..2)
                .map(|t| a.entries[t][0].conj() * b.entries[(t + s) % 2][0])
                .sum();
            assert!((ip.entries[s].blocks[0][(0, 0)] - want).norm() < 1e-14);
        }
    }

    #[test]
    fn z2_crossed_module_axioms() {
        let sa = z2_m2_system();
        let cm = build_crossed_module(&sa.system).unwrap();
        let rep = check_crossed_module(&cm, 1e-10, 0).unwrap();
        assert!(rep.max_residual() <= 1e-10, "{rep:?}");
        assert!(rep.positive, "{rep:?}");
    }

    #[test]
    fn z2_concrete_integral_form() {
        let sa = z2_m2_system();
        let cm = build_crossed_module(&sa.system).unwrap();
        let covrep = CovariantRepresentation::new(
            ModuleRepresentation::concrete_standard(1, 2),
            sa.system.clone(),
            sa.delta.clone(),
            sa.gamma.clone(),
        )
        .unwrap();
        let rep = check_integral_form(&covrep, &cm, 1e-10).unwrap();
        assert!(rep.skipped.is_none());
        assert!(rep.checks.passed(1e-10), "{:?}", rep.checks);
        // Direct two-term sum for one element.
        let z = cm.from_coords(&[r(1.0), c(0.0, 2.0), r(-1.0), r(0.5)]);
        let direct = covrep.rep.apply(&z.entries[0]) * sa.delta.mat(0)
            + covrep.rep.apply(&z.entries[1]) * sa.delta.mat(1);
        assert!(dist(&rep.form.apply_module(&cm.coords(&z)), &direct) < 1e-14);
    }

    #[test]
    fn degenerate_input_skips_rank_checks() {
        let sa = z2_m2_system();
        let cm = build_crossed_module(&sa.system).unwrap();
        let zero = ModuleRepresentation::zero(sa.system.module(), 2, 1);
        let covrep = CovariantRepresentation::new(
            zero,
            sa.system.clone(),
            sa.delta.clone(),
            sa.gamma.clone(),
        )
        .unwrap();
        let rep = check_integral_form(&covrep, &cm, 1e-10).unwrap();
        assert_eq!(rep.skipped, Some(SKIP_DEGENERATE));
        assert_eq!(rep.observed_ranks, (0, 0));
        assert!(rep.form.images.iter().all(|m| m.norm() == 0.0));
    }

    #[test]
    fn scalar_sign_induced_map() {
        let g = FiniteGroup::cyclic(2);
        let x = HilbertModule::standard(1, 1);
        let sys = ModuleDynamicalSystem::trivial(g.clone(), x.clone());
        let sign = UnitaryRep::new(g.clone(), vec![eye(1), eye(1) * r(-1.0)]).unwrap();
        let base = ModuleCPMap::new(
            x,
            1,
            vec![eye(1)],
            CPMapAlgebra::new(CStarAlgebra::matrix(1), 1, vec![eye(1)]).unwrap(),
        )
        .unwrap();
        let phi = CovariantCPMap::new(base, sys.clone(), sign.clone(), sign).unwrap();
        let cm = build_crossed_module(&sys).unwrap();
        let ind = induced_cp(&phi, &cm, 1e-10).unwrap();
        assert!((ind.phi_hat[0][(0, 0)] - r(1.0)).norm() < 1e-15);
        assert!((ind.phi_hat[1][(0, 0)] - r(-1.0)).norm() < 1e-15);
        assert!(ind.checks.passed(1e-10), "{:?}", ind.checks);
    }

    #[test]
    fn random_z2_induced_map() {
        let sa = z2_m2_system();
        let delta = sa.delta.clone();
        let sa = standard_action(&delta, &delta).unwrap();
        let out = random_covariant_cp(&sa, 2, 3).unwrap();
        let cm = build_crossed_module(&sa.system).unwrap();
        let ind = induced_cp(&out.map, &cm, 1e-9).unwrap();
        assert!(ind.checks.passed(1e-9), "{:?}", ind.checks.failures(1e-9));
        let st = check_integral_stinespring(&out.map, &ind.dilation, &cm).unwrap();
        assert!(st.passed(1e-9), "{st:?}");
    }

    #[test]
    fn concrete_integral_stinespring_ranks() {
        let sa = z2_m2_system();
        let pi = ModuleRepresentation::concrete_standard(1, 2);
        let base = cp_from_representation(&pi, &eye(2), &eye(1)).unwrap();
        let phi = CovariantCPMap::new(base, sa.system.clone(), sa.delta.clone(), sa.gamma.clone())
            .unwrap();
        let d = dilate_covariant(&phi, 1e-10).unwrap();
        let cm = build_crossed_module(&sa.system).unwrap();
        let st = check_integral_stinespring(&phi, &d, &cm).unwrap();
        assert_eq!(st.ranks["integral_range"].achieved, d.base.k_phi());
        assert_eq!(st.ranks["integral_corange"].achieved, d.base.h_phi());
    }

    #[test]
    fn structure_dump_of_group_algebra() {
        let g = FiniteGroup::cyclic(2);
        let ca = CrossedAlgebra::new(g, CStarAlgebra::matrix(1), vec![eye(1), eye(1)]).unwrap();
        let dump = ca.structure_constants();
        assert_eq!(dump.products.len(), 4);
        let s = serde_json::to_string(&dump).unwrap();
        assert!(s.contains("\"1:0:0:0\""));
    }
}
