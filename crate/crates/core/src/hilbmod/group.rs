//! Finite groups by multiplication table, and their unitary representations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::{c, dist, eye, range_basis, zeros, Mat, Residual, DEFAULT_REL_TOL};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGroup {
    mult: Vec<Vec<usize>>,
    inv: Vec<usize>,
    identity: usize,
}

impl FiniteGroup {
    pub fn new(mult: Vec<Vec<usize>>, inv: Vec<usize>, identity: usize) -> Result<Self> {
        let g = mult.len();
        if g == 0 {
            return Err(Error::InvalidGroup("empty group".into()));
        }
        if mult
            .iter()
            .any(|row| row.len() != g || row.iter().any(|&x| x >= g))
        {
            return Err(Error::InvalidGroup(
                "multiplication table is not a g x g table over 0..g".into(),
            ));
        }
        if inv.len() != g || identity >= g {
            return Err(Error::InvalidGroup(
                "inverse table or identity out of range".into(),
            ));
        }
        let group = Self {
            mult,
            inv,
            identity,
        };
        group.validate()?;
        Ok(group)
    }

    /// Builds a group from its table alone, locating the identity and inverses.
    pub fn from_table(mult: Vec<Vec<usize>>) -> Result<Self> {
        let g = mult.len();
        let identity = (0..g)
            .find(|&e| (0..g).all(|t| mult.get(e).and_then(|r| r.get(t)) == Some(&t)))
            .ok_or_else(|| Error::InvalidGroup("no identity element".into()))?;
        let inv = (0..g)
            .map(|t| {
                (0..g)
                    .find(|&s| mult[t].get(s) == Some(&identity))
                    .ok_or_else(|| Error::InvalidGroup(format!("element {t} has no inverse")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(mult, inv, identity)
    }

    fn validate(&self) -> Result<()> {
        let g = self.order();
        for t in 0..g {
            if self.mul(self.identity, t) != t || self.mul(t, self.identity) != t {
                return Err(Error::InvalidGroup(format!("identity law fails at {t}")));
            }
            if self.mul(t, self.inv[t]) != self.identity
                || self.mul(self.inv[t], t) != self.identity
            {
                return Err(Error::InvalidGroup(format!("inverse law fails at {t}")));
            }
        }
        for a in 0..g {
            for b in 0..g {
                for cc in 0..g {
                    if self.mul(self.mul(a, b), cc) != self.mul(a, self.mul(b, cc)) {
                        return Err(Error::InvalidGroup(format!(
                            "associativity fails at ({a},{b},{cc})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn trivial() -> Self {
        Self::cyclic(1)
    }

    /// `Z_k` with element `t` standing for `t mod k`.
    pub fn cyclic(k: usize) -> Self {
        assert!(k >= 1);
        let mult = (0..k)
            .map(|a| (0..k).map(|b| (a + b) % k).collect())
            .collect();
        let inv = (0..k).map(|a| (k - a) % k).collect();
        Self {
            mult,
            inv,
            identity: 0,
        }
    }

    /// `S_n`, elements indexed by [`symmetric_permutations`], product is
    /// composition `(s t)(i) = s(t(i))`.
    pub fn symmetric(n: usize) -> Self {
        let perms = symmetric_permutations(n);
        let index = |p: &[usize]| perms.iter().position(|q| q == p).expect("closed");
        let mult: Vec<Vec<usize>> = perms
            .iter()
            .map(|s| {
                perms
                    .iter()
                    .map(|t| {
                        let comp: Vec<usize> = t.iter().map(|&i| s[i]).collect();
                        index(&comp)
                    })
                    .collect()
            })
            .collect();
        let inv = perms
            .iter()
            .map(|s| {
                let mut q = vec![0; n];
                for (i, &si) in s.iter().enumerate() {
                    q[si] = i;
                }
                index(&q)
            })
            .collect();
        Self {
            mult,
            inv,
            identity: 0,
        }
    }

    pub fn order(&self) -> usize {
        self.mult.len()
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mult[a][b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inv[a]
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    /// Finite groups are unimodular.
    pub fn modular_function(&self, _t: usize) -> f64 {
        1.0
    }

    pub fn elements(&self) -> std::ops::Range<usize> {
        0..self.order()
    }

    pub fn to_json(&self) -> GroupJson {
        GroupJson {
            order: self.order(),
            mult: self.mult.clone(),
            inv: self.inv.clone(),
            e: self.identity,
        }
    }
}

/// Permutations of `0..n` in lexicographic order; index 0 is the identity.
pub fn symmetric_permutations(n: usize) -> Vec<Vec<usize>> {
    fn extend(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        let n = used.len();
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for i in 0..n {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                extend(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

fn permutation_sign(p: &[usize]) -> f64 {
    let mut inversions = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupJson {
    pub order: usize,
    pub mult: Vec<Vec<usize>>,
    pub inv: Vec<usize>,
    pub e: usize,
}

impl GroupJson {
    pub fn to_group(&self) -> Result<FiniteGroup> {
        if self.mult.len() != self.order {
            return Err(Error::InvalidGroup(format!(
                "order {} but table has {} rows",
                self.order,
                self.mult.len()
            )));
        }
        FiniteGroup::new(self.mult.clone(), self.inv.clone(), self.e)
    }
}

/// Unitary representation `t -> u_t` of a finite group.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryRep {
    group: FiniteGroup,
    dim: usize,
    mats: Vec<Mat>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitaryRepReport {
    /// `max |u_s u_t - u_st|`.
    pub group_law: f64,
    /// `max |u_t* u_t - I|`.
    pub unitarity: f64,
    /// `|u_e - I|`.
    pub identity: f64,
}

impl UnitaryRepReport {
    pub fn max_residual(&self) -> f64 {
        self.group_law.max(self.unitarity).max(self.identity)
    }
}

impl UnitaryRep {
    /// Validated constructor: rejects matrices that are not a unitary
    /// representation within `1e-10`.
    pub fn new(group: FiniteGroup, mats: Vec<Mat>) -> Result<Self> {
        let rep = Self::from_mats_unchecked(group, mats)?;
        let report = rep.check();
        if report.max_residual() > 1e-10 {
            return Err(Error::NotAction(format!(
                "not a unitary representation (group law {:.2e}, unitarity {:.2e}, identity {:.2e})",
                report.group_law, report.unitarity, report.identity
            )));
        }
        Ok(rep)
    }

    /// Shape-checked only; use [`UnitaryRep::check`] to audit.
    pub fn from_mats_unchecked(group: FiniteGroup, mats: Vec<Mat>) -> Result<Self> {
        if mats.len() != group.order() {
            return Err(Error::ShapeMismatch(format!(
                "representation of a group of order {} needs that many matrices, got {}",
                group.order(),
                mats.len()
            )));
        }
        let dim = mats.first().map(|m| m.nrows()).unwrap_or(0);
        if mats.iter().any(|m| m.shape() != (dim, dim)) {
            return Err(Error::ShapeMismatch(
                "representation matrices must be square of equal size".into(),
            ));
        }
        Ok(Self { group, dim, mats })
    }

    pub fn trivial(group: &FiniteGroup, dim: usize) -> Self {
        Self {
            group: group.clone(),
            dim,
            mats: vec![eye(dim); group.order()],
        }
    }

    /// Left regular representation, `lambda_t e_s = e_{ts}`.
    pub fn regular(group: &FiniteGroup) -> Self {
        let g = group.order();
        let mats = group
            .elements()
            .map(|t| {
                let mut m = zeros(g, g);
                for s in group.elements() {
                    m[(group.mul(t, s), s)] = c(1.0, 0.0);
                }
                m
            })
            .collect();
        Self {
            group: group.clone(),
            dim: g,
            mats,
        }
    }

    fn require_symmetric(group: &FiniteGroup, n: usize) -> Result<Vec<Vec<usize>>> {
        if *group != FiniteGroup::symmetric(n) {
            return Err(Error::GroupMismatch);
        }
        Ok(symmetric_permutations(n))
    }

    /// Natural permutation representation of `S_n` on `C^n`.
    pub fn permutation(group: &FiniteGroup, n: usize) -> Result<Self> {
        let perms = Self::require_symmetric(group, n)?;
        let mats = perms
            .iter()
            .map(|p| {
                let mut m = zeros(n, n);
                for (i, &pi) in p.iter().enumerate() {
                    m[(pi, i)] = c(1.0, 0.0);
                }
                m
            })
            .collect();
        Ok(Self {
            group: group.clone(),
            dim: n,
            mats,
        })
    }

    pub fn sign(group: &FiniteGroup, n: usize) -> Result<Self> {
        let perms = Self::require_symmetric(group, n)?;
        let mats = perms
            .iter()
            .map(|p| eye(1) * c(permutation_sign(p), 0.0))
            .collect();
        Ok(Self {
            group: group.clone(),
            dim: 1,
            mats,
        })
    }

    /// Standard `(n-1)`-dimensional representation of `S_n`: the permutation
    /// representation restricted to the sum-zero subspace.
    pub fn standard(group: &FiniteGroup, n: usize) -> Result<Self> {
        let perm = Self::permutation(group, n)?;
        let ones = Mat::from_element(n, n, c(1.0 / n as f64, 0.0));
        let (q, _) = range_basis(&(eye(n) - ones), DEFAULT_REL_TOL)?;
        Ok(perm.restrict(&q))
    }

    /// One-dimensional character `t -> exp(2 pi i j t / k)` of `Z_k`.
    pub fn character(group: &FiniteGroup, k: usize, j: usize) -> Result<Self> {
        if *group != FiniteGroup::cyclic(k) {
            return Err(Error::GroupMismatch);
        }
        let mats = (0..k)
            .map(|t| {
                let theta = 2.0 * std::f64::consts::PI * ((j * t) % k) as f64 / k as f64;
                eye(1) * c(theta.cos(), theta.sin())
            })
            .collect();
        Ok(Self {
            group: group.clone(),
            dim: 1,
            mats,
        })
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mat(&self, t: usize) -> &Mat {
        &self.mats[t]
    }

    pub fn mats(&self) -> &[Mat] {
        &self.mats
    }

    pub fn same_group(&self, other: &UnitaryRep) -> Result<()> {
        if self.group == other.group {
            Ok(())
        } else {
            Err(Error::GroupMismatch)
        }
    }

    pub fn direct_sum(&self, other: &UnitaryRep) -> Result<Self> {
        self.same_group(other)?;
        Ok(Self {
            group: self.group.clone(),
            dim: self.dim + other.dim,
            mats: self
                .mats
                .iter()
                .zip(&other.mats)
                .map(|(a, b)| crate::numkernel::direct_sum(a, b))
                .collect(),
        })
    }

    pub fn tensor(&self, other: &UnitaryRep) -> Result<Self> {
        self.same_group(other)?;
        Ok(Self {
            group: self.group.clone(),
            dim: self.dim * other.dim,
            mats: self
                .mats
                .iter()
                .zip(&other.mats)
                .map(|(a, b)| a.kronecker(b))
                .collect(),
        })
    }

    /// `t -> q u_t q*` for a unitary `q`.
    pub fn conjugate(&self, q: &Mat) -> Self {
        Self {
            group: self.group.clone(),
            dim: self.dim,
            mats: self.mats.iter().map(|m| q * m * q.adjoint()).collect(),
        }
    }

    /// `t -> q* u_t q` for an isometry `q` whose range is invariant.
    pub fn restrict(&self, q: &Mat) -> Self {
        Self {
            group: self.group.clone(),
            dim: q.ncols(),
            mats: self.mats.iter().map(|m| q.adjoint() * m * q).collect(),
        }
    }

    pub fn check(&self) -> UnitaryRepReport {
        let g = &self.group;
        let mut law = Residual::new();
        let mut unitarity = Residual::new();
        let id = eye(self.dim);
        for s in g.elements() {
            for t in g.elements() {
                law.add(&(&self.mats[s] * &self.mats[t]), &self.mats[g.mul(s, t)]);
            }
            unitarity.add(&(self.mats[s].adjoint() * &self.mats[s]), &id);
        }
        UnitaryRepReport {
            group_law: law.value(),
            unitarity: unitarity.value(),
            identity: crate::numkernel::relative(dist(&self.mats[g.identity()], &id), id.norm()),
        }
    }
}

/// `(1/|G|) sum_t a_t z b_t*`: projects `z` onto the intertwiners from `b` to `a`.
pub fn group_average(a: &UnitaryRep, z: &Mat, b: &UnitaryRep) -> Result<Mat> {
    a.same_group(b)?;
    if z.shape() != (a.dim(), b.dim()) {
        return Err(Error::ShapeMismatch(format!(
            "averaged operator must be {}x{}, got {}x{}",
            a.dim(),
            b.dim(),
            z.nrows(),
            z.ncols()
        )));
    }
    let g = a.group().order();
    let mut acc = zeros(a.dim(), b.dim());
    for t in 0..g {
        acc += a.mat(t) * z * b.mat(t).adjoint();
    }
    Ok(acc / c(g as f64, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{ginibre, SeedStream};

    #[test]
    fn standard_groups_validate() {
        for g in [
            FiniteGroup::trivial(),
            FiniteGroup::cyclic(4),
            FiniteGroup::symmetric(3),
            FiniteGroup::symmetric(4),
        ] {
            g.validate().unwrap();
            assert_eq!(FiniteGroup::from_table(g.mult.clone()).unwrap(), g);
            assert_eq!(g.modular_function(g.order() - 1), 1.0);
        }
        assert_eq!(FiniteGroup::symmetric(3).order(), 6);
        assert_eq!(FiniteGroup::symmetric(4).order(), 24);
    }

    #[test]
    fn bad_tables_rejected() {
        assert!(FiniteGroup::from_table(vec![vec![0, 1], vec![1, 1]]).is_err());
        assert!(FiniteGroup::new(vec![vec![0, 1], vec![1, 0]], vec![0, 0], 0).is_err());
        let j = GroupJson {
            order: 3,
            mult: vec![vec![0, 1], vec![1, 0]],
            inv: vec![0, 1],
            e: 0,
        };
        assert!(j.to_group().is_err());
    }

    #[test]
    fn named_representations_are_unitary_reps() {
        let s3 = FiniteGroup::symmetric(3);
        let z4 = FiniteGroup::cyclic(4);
        let reps = vec![
            UnitaryRep::regular(&s3),
            UnitaryRep::permutation(&s3, 3).unwrap(),
            UnitaryRep::sign(&s3, 3).unwrap(),
            UnitaryRep::standard(&s3, 3).unwrap(),
            UnitaryRep::character(&z4, 4, 1).unwrap(),
            UnitaryRep::regular(&z4),
            UnitaryRep::trivial(&z4, 2),
        ];
        for rep in reps {
            assert!(rep.check().max_residual() < 1e-12, "{:?}", rep.check());
            UnitaryRep::new(rep.group().clone(), rep.mats().to_vec()).unwrap();
        }
        assert_eq!(UnitaryRep::standard(&s3, 3).unwrap().dim(), 2);
        assert!(UnitaryRep::permutation(&z4, 4).is_err());
    }

    #[test]
    fn invalid_rep_rejected() {
        let z2 = FiniteGroup::cyclic(2);
        let mats = vec![eye(1), eye(1) * c(2.0, 0.0)];
        assert!(matches!(
            UnitaryRep::new(z2, mats),
            Err(Error::NotAction(_))
        ));
    }

    #[test]
    fn averaging_yields_intertwiner() {
        let s3 = FiniteGroup::symmetric(3);
        let a = UnitaryRep::regular(&s3);
        let b = UnitaryRep::permutation(&s3, 3).unwrap();
        let z = ginibre(6, 3, &mut SeedStream::new(2).stream(0));
        let v = group_average(&a, &z, &b).unwrap();
        for t in 0..6 {
            assert!(dist(&(a.mat(t) * &v), &(&v * b.mat(t))) < 1e-12);
        }
    }
}
