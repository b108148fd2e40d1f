//! Group actions `t -> eta_t` on a module by module isomorphisms, and the
//! action `alpha_t` they induce on the coefficient algebra through
//! `alpha_t(<x, y>) = <eta_t x, eta_t y>`.

use crate::cstar::{check_automorphism, AlgebraElement};
use crate::error::{Error, Result};
use crate::numkernel::{dist, eye, fro, least_squares_solve, relative, zeros, Mat, Residual};

use super::group::{FiniteGroup, UnitaryRep};
use super::module::{unit_vector, HilbertModule};

/// Consistency threshold for recovering `alpha` from `eta`.
pub const INDUCED_ACTION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ModuleDynamicalSystem {
    group: FiniteGroup,
    module: HilbertModule,
    /// `m x m` per group element, on module coordinates.
    eta: Vec<Mat>,
    /// `N x N` per group element, on algebra coordinates.
    alpha: Vec<Mat>,
}

impl ModuleDynamicalSystem {
    /// Stores the data as given; audit with [`check_dynamical_system`].
    pub fn new(
        group: FiniteGroup,
        module: HilbertModule,
        eta: Vec<Mat>,
        alpha: Vec<Mat>,
    ) -> Result<Self> {
        let (m, n) = (module.dim(), module.algebra().dim());
        if eta.len() != group.order() || alpha.len() != group.order() {
            return Err(Error::ShapeMismatch(
                "one eta and one alpha per group element are required".into(),
            ));
        }
        if eta.iter().any(|e| e.shape() != (m, m)) || alpha.iter().any(|a| a.shape() != (n, n)) {
            return Err(Error::ShapeMismatch(
                "eta must be m x m and alpha N x N".into(),
            ));
        }
        Ok(Self {
            group,
            module,
            eta,
            alpha,
        })
    }

    /// Builds the system from `eta` alone, solving for the induced action.
    pub fn from_eta(group: FiniteGroup, module: HilbertModule, eta: Vec<Mat>) -> Result<Self> {
        let (alpha, _) = induced_algebra_action(&group, &module, &eta, INDUCED_ACTION_TOL)?;
        Self::new(group, module, eta, alpha)
    }

    /// The trivial action of `group` on `module`.
    pub fn trivial(group: FiniteGroup, module: HilbertModule) -> Self {
        let g = group.order();
        let eta = vec![eye(module.dim()); g];
        let alpha = vec![eye(module.algebra().dim()); g];
        Self {
            group,
            module,
            eta,
            alpha,
        }
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn module(&self) -> &HilbertModule {
        &self.module
    }

    pub fn eta(&self, t: usize) -> &Mat {
        &self.eta[t]
    }

    pub fn alpha(&self, t: usize) -> &Mat {
        &self.alpha[t]
    }

    pub fn etas(&self) -> &[Mat] {
        &self.eta
    }

    pub fn alphas(&self) -> &[Mat] {
        &self.alpha
    }

    pub fn alpha_apply(&self, t: usize, a: &AlgebraElement) -> AlgebraElement {
        self.module.algebra().apply_map(&self.alpha[t], a)
    }
}

/// Diagnostics from solving `alpha_t S = T_t` over the inner-product values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InducedActionReport {
    /// Worst relative least-squares residual over `t`.
    pub consistency: f64,
    /// Smallest nonzero singular value of the fullness system over the
    /// largest; bounds how errors in `eta` propagate into `alpha`.
    pub conditioning: f64,
}

fn group_law_residual(group: &FiniteGroup, maps: &[Mat]) -> f64 {
    let mut law = Residual::new();
    for s in group.elements() {
        for t in group.elements() {
            law.add(&(&maps[s] * &maps[t]), &maps[group.mul(s, t)]);
        }
    }
    let d = maps.first().map(|m| m.nrows()).unwrap_or(0);
    law.add(&maps[group.identity()], &eye(d));
    law.value()
}

/// Solves `alpha_t` on the spanning set `{<x_i, x_j>}` and validates it.
pub fn induced_algebra_action(
    group: &FiniteGroup,
    module: &HilbertModule,
    eta: &[Mat],
    tol: f64,
) -> Result<(Vec<Mat>, InducedActionReport)> {
    let m = module.dim();
    if eta.len() != group.order() || eta.iter().any(|e| e.shape() != (m, m)) {
        return Err(Error::ShapeMismatch(
            "one m x m eta per group element is required".into(),
        ));
    }
    module.require_full()?;
    let law = group_law_residual(group, eta);
    if law > tol {
        return Err(Error::NotAction(format!(
            "eta fails the group law (residual {law:.2e})"
        )));
    }
    let s = module.fullness_system();
    let svals = s.singular_values();
    let smax = svals.max();
    let smin = svals
        .iter()
        .copied()
        .filter(|&v| v > 1e-10 * smax)
        .fold(f64::INFINITY, f64::min);
    let st = s.transpose();
    let mut alpha = Vec::with_capacity(group.order());
    let mut consistency: f64 = 0.0;
    for e in eta {
        let mut target = zeros(module.algebra().dim(), m * m);
        for i in 0..m {
            let xi = e.column(i).clone_owned();
            for j in 0..m {
                let xj = e.column(j).clone_owned();
                target.set_column(i * m + j, &module.inner(&xi, &xj).coords());
            }
        }
        // alpha S = T  <=>  S^T alpha^T = T^T.
        let a = least_squares_solve(&st, &target.transpose())?.transpose();
        let res = relative(dist(&(&a * &s), &target), fro(&target));
        consistency = consistency.max(res);
        alpha.push(a);
    }
    if consistency > tol {
        return Err(Error::Inconsistent {
            residual: consistency,
        });
    }
    for (t, a) in alpha.iter().enumerate() {
        let rep = check_automorphism(module.algebra(), a);
        if !rep.bijective() || rep.multiplicativity > tol || rep.star > tol {
            return Err(Error::NotAction(format!(
                "induced map for group element {t} is not a *-automorphism (multiplicativity {:.2e}, star {:.2e}, rank {}/{})",
                rep.multiplicativity, rep.star, rep.rank, rep.required_rank
            )));
        }
    }
    Ok((
        alpha,
        InducedActionReport {
            consistency,
            conditioning: if smax > 0.0 { smin / smax } else { 0.0 },
        },
    ))
}

/// `eta_t(x) = gamma_t x delta_t*` on `M_{p,n}`, with `alpha_t = Ad(delta_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardAction {
    pub system: ModuleDynamicalSystem,
    pub gamma: UnitaryRep,
    pub delta: UnitaryRep,
}

pub fn standard_action(gamma: &UnitaryRep, delta: &UnitaryRep) -> Result<StandardAction> {
    gamma.same_group(delta)?;
    let (p, n) = (gamma.dim(), delta.dim());
    if p == 0 || n == 0 {
        return Err(Error::ShapeMismatch(
            "standard action needs p, n >= 1".into(),
        ));
    }
    let module = HilbertModule::standard(p, n);
    // Row-major vec(A X B) = (A (x) B^T) vec(X), with B = delta*.
    let eta = gamma
        .mats()
        .iter()
        .zip(delta.mats())
        .map(|(g, d)| g.kronecker(&d.conjugate()))
        .collect();
    let alpha = delta
        .mats()
        .iter()
        .map(|d| d.kronecker(&d.conjugate()))
        .collect();
    Ok(StandardAction {
        system: ModuleDynamicalSystem::new(gamma.group().clone(), module, eta, alpha)?,
        gamma: gamma.clone(),
        delta: delta.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsReport {
    /// `max |eta_s eta_t - eta_st|`, with `|eta_e - I|`.
    pub group_law: f64,
    /// `max |<eta_t x_i, eta_t x_j> - alpha_t(<x_i, x_j>)|`.
    pub equivariance: f64,
    /// `max |eta_t(x_i a_k) - eta_t(x_i) alpha_t(a_k)|`.
    pub action: f64,
    /// Worst multiplicativity / star residual of the `alpha_t`.
    pub automorphism: f64,
    pub bijective: bool,
    /// `max |alpha_t - induced alpha_t|`; `None` when the module is not full.
    pub induced_agreement: Option<f64>,
    pub alpha_group_law: f64,
}

impl DynamicsReport {
    pub fn max_residual(&self) -> f64 {
        self.group_law
            .max(self.equivariance)
            .max(self.action)
            .max(self.automorphism)
            .max(self.alpha_group_law)
            .max(self.induced_agreement.unwrap_or(0.0))
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.bijective && self.max_residual() <= tol
    }
}

pub fn check_dynamical_system(sys: &ModuleDynamicalSystem, _tol: f64) -> Result<DynamicsReport> {
    let x = &sys.module;
    let g = &sys.group;
    let (m, n) = (x.dim(), x.algebra().dim());
    if sys.eta.len() != g.order() || sys.eta.iter().any(|e| e.shape() != (m, m)) {
        return Err(Error::ShapeMismatch("eta has the wrong shape".into()));
    }
    if sys.alpha.len() != g.order() || sys.alpha.iter().any(|a| a.shape() != (n, n)) {
        return Err(Error::ShapeMismatch("alpha has the wrong shape".into()));
    }
    let basis_a: Vec<AlgebraElement> = (0..n).map(|k| x.algebra().basis_element(k)).collect();

    let mut equivariance = Residual::new();
    let mut action = Residual::new();
    let mut automorphism: f64 = 0.0;
    let mut bijective = true;
    for t in g.elements() {
        let eta = &sys.eta[t];
        for i in 0..m {
            let ei = eta.column(i).clone_owned();
            for j in 0..m {
                let ej = eta.column(j).clone_owned();
                let lhs = x.inner(&ei, &ej);
                let rhs = sys.alpha_apply(t, x.inner_basis(i, j));
                equivariance.add(&lhs.embed(), &rhs.embed());
            }
            for (k, a) in basis_a.iter().enumerate() {
                let xa = &x.action_matrices()[k] * unit_vector(m, i);
                let lhs = eta * xa;
                let rhs = x.act(&ei, &sys.alpha_apply(t, a));
                action.add(
                    &Mat::from_column_slice(m, 1, lhs.as_slice()),
                    &Mat::from_column_slice(m, 1, rhs.as_slice()),
                );
            }
        }
        let rep = check_automorphism(x.algebra(), &sys.alpha[t]);
        automorphism = automorphism.max(rep.multiplicativity).max(rep.star);
        bijective &= rep.bijective();
    }

    let induced_agreement = if x.fullness().rank == n {
        match induced_algebra_action(g, x, &sys.eta, f64::INFINITY) {
            Ok((alpha, _)) => {
                let mut agree = Residual::new();
                for (a, b) in alpha.iter().zip(&sys.alpha) {
                    agree.add(a, b);
                }
                Some(agree.value())
            }
            // The group law or automorphism checks failed; those residuals
            // are already reported above.
            Err(_) => Some(f64::INFINITY),
        }
    } else {
        None
    };

    Ok(DynamicsReport {
        group_law: group_law_residual(g, &sys.eta),
        equivariance: equivariance.value(),
        action: action.value(),
        automorphism,
        bijective,
        induced_agreement,
        alpha_group_law: group_law_residual(g, &sys.alpha),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::{c, r};

    fn z2_delta() -> (FiniteGroup, UnitaryRep) {
        let g = FiniteGroup::cyclic(2);
        let d = UnitaryRep::new(
            g.clone(),
            vec![
                eye(2),
                Mat::from_diagonal(&crate::numkernel::Vector::from_vec(vec![r(1.0), r(-1.0)])),
            ],
        )
        .unwrap();
        (g, d)
    }

    #[test]
    fn identity_action_induces_identity() {
        let x = HilbertModule::standard(2, 2);
        let g = FiniteGroup::cyclic(3);
        let sys = ModuleDynamicalSystem::from_eta(g, x, vec![eye(4); 3]).unwrap();
        for a in sys.alphas() {
            assert!(dist(a, &eye(4)) < 1e-12);
        }
    }

    #[test]
    fn standard_action_matches_formula() {
        let (g, delta) = z2_delta();
        let gamma = UnitaryRep::trivial(&g, 1);
        let sa = standard_action(&gamma, &delta).unwrap();
        // x = [a, b] -> [a, -b].
        let eta1 = sa.system.eta(1);
        let expect = Mat::from_diagonal(&crate::numkernel::Vector::from_vec(vec![r(1.0), r(-1.0)]));
        assert!(dist(eta1, &expect) < 1e-15);
        let rep = check_dynamical_system(&sa.system, 1e-10).unwrap();
        assert!(rep.passes(1e-10), "{rep:?}");
        assert!(rep.induced_agreement.unwrap() < 1e-10);
    }

    #[test]
    fn symmetric_permutation_action_is_valid() {
        let g = FiniteGroup::symmetric(3);
        let p = UnitaryRep::permutation(&g, 3).unwrap();
        let sa = standard_action(&p, &p).unwrap();
        let rep = check_dynamical_system(&sa.system, 1e-10).unwrap();
        assert!(rep.passes(1e-10), "{rep:?}");
    }

    #[test]
    fn induced_action_of_standard_action_is_conjugation() {
        let (_, delta) = z2_delta();
        let gamma = UnitaryRep::trivial(delta.group(), 2);
        let sa = standard_action(&gamma, &delta).unwrap();
        let (alpha, rep) = induced_algebra_action(
            sa.system.group(),
            sa.system.module(),
            sa.system.etas(),
            1e-10,
        )
        .unwrap();
        assert!(rep.consistency < 1e-12);
        for (a, b) in alpha.iter().zip(sa.system.alphas()) {
            assert!(dist(a, b) < 1e-12);
        }
    }

    #[test]
    fn scaling_is_not_an_action() {
        let x = HilbertModule::standard(1, 1);
        let g = FiniteGroup::cyclic(2);
        let eta = vec![eye(1), eye(1) * r(2.0)];
        assert!(matches!(
            induced_algebra_action(&g, &x, &eta, 1e-9),
            Err(Error::NotAction(_))
        ));
    }

    #[test]
    fn negation_is_valid_with_trivial_alpha() {
        let x = HilbertModule::standard(1, 1);
        let g = FiniteGroup::cyclic(2);
        let sys = ModuleDynamicalSystem::from_eta(g, x, vec![eye(1), eye(1) * r(-1.0)]).unwrap();
        assert!(dist(sys.alpha(1), &eye(1)) < 1e-14);
        assert!(check_dynamical_system(&sys, 1e-10).unwrap().passes(1e-10));
    }

    #[test]
    fn non_isometric_eta_is_inconsistent() {
        // A shear on C^2 over C satisfies eta^2 = I only if it is an
        // involution; use the swap scaled on one side.
        let x = HilbertModule::standard(2, 1);
        let g = FiniteGroup::cyclic(2);
        let mut s = zeros(2, 2);
        s[(0, 1)] = r(2.0);
        s[(1, 0)] = r(0.5);
        let err = induced_algebra_action(&g, &x, &[eye(2), s], 1e-9).unwrap_err();
        assert!(matches!(err, Error::Inconsistent { .. }), "{err:?}");
    }

    #[test]
    fn perturbation_shows_in_equivariance() {
        let (_, delta) = z2_delta();
        let gamma = UnitaryRep::trivial(delta.group(), 1);
        let sa = standard_action(&gamma, &delta).unwrap();
        let mut eta = sa.system.etas().to_vec();
        eta[1][(0, 0)] += c(1e-3, 0.0);
        let bad = ModuleDynamicalSystem::new(
            sa.system.group().clone(),
            sa.system.module().clone(),
            eta,
            sa.system.alphas().to_vec(),
        )
        .unwrap();
        let rep = check_dynamical_system(&bad, 1e-10).unwrap();
        assert!(
            rep.equivariance > 3e-4 && rep.equivariance < 3e-3,
            "{}",
            rep.equivariance
        );
    }

    #[test]
    fn group_mismatch_is_rejected() {
        let a = UnitaryRep::trivial(&FiniteGroup::cyclic(2), 1);
        let b = UnitaryRep::trivial(&FiniteGroup::cyclic(3), 1);
        assert_eq!(standard_action(&a, &b).unwrap_err(), Error::GroupMismatch);
    }
}
