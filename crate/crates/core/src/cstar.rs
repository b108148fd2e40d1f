//! Finite-dimensional C*-algebras `A = M_{n_1} (+) ... (+) M_{n_k}`.
//!
//! Elements are tuples of blocks. The canonical linear basis is the set of
//! matrix units `E^b_{ij}`, ordered by block, then row, then column; its
//! labels are `"b:i:j"`. Linear maps out of `A` are stored by their values on
//! this basis.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::{
    dist, eye, fro, psd_check, r, span_rank, zeros, Mat, MatJson, Residual, Vector, C64,
    DEFAULT_REL_TOL,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CStarAlgebra {
    blocks: Vec<usize>,
}

impl CStarAlgebra {
    pub fn new(blocks: Vec<usize>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidAlgebra(
                "at least one block is required".into(),
            ));
        }
        if blocks.contains(&0) {
            return Err(Error::InvalidAlgebra("block sizes must be positive".into()));
        }
        Ok(Self { blocks })
    }

    /// The full matrix algebra `M_n`.
    pub fn matrix(n: usize) -> Self {
        Self::new(vec![n]).expect("n >= 1")
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    /// Linear dimension `sum n_b^2`.
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|n| n * n).sum()
    }

    /// Size of the block-diagonal embedding, `sum n_b`.
    pub fn embed_dim(&self) -> usize {
        self.blocks.iter().sum()
    }

    fn basis_offset(&self, block: usize) -> usize {
        self.blocks[..block].iter().map(|n| n * n).sum()
    }

    pub fn basis_index(&self, block: usize, i: usize, j: usize) -> usize {
        self.basis_offset(block) + i * self.blocks[block] + j
    }

    /// `(block, row, col)` of basis element `k`.
    pub fn basis_entry(&self, mut k: usize) -> (usize, usize, usize) {
        for (b, &n) in self.blocks.iter().enumerate() {
            if k < n * n {
                return (b, k / n, k % n);
            }
            k -= n * n;
        }
        panic!("basis index out of range");
    }

    pub fn basis_label(&self, k: usize) -> String {
        let (b, i, j) = self.basis_entry(k);
        format!("{b}:{i}:{j}")
    }

    pub fn parse_label(&self, label: &str) -> Result<usize> {
        let parts: Vec<usize> = label
            .split(':')
            .map(|p| p.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::ShapeMismatch(format!("bad algebra basis label {label:?}")))?;
        match parts.as_slice() {
            [b, i, j] if *b < self.blocks.len() && *i < self.blocks[*b] && *j < self.blocks[*b] => {
                Ok(self.basis_index(*b, *i, *j))
            }
            _ => Err(Error::ShapeMismatch(format!(
                "algebra basis label {label:?} out of range"
            ))),
        }
    }

    pub fn zero(&self) -> AlgebraElement {
        AlgebraElement {
            blocks: self.blocks.iter().map(|&n| zeros(n, n)).collect(),
        }
    }

    pub fn unit(&self) -> AlgebraElement {
        AlgebraElement {
            blocks: self.blocks.iter().map(|&n| eye(n)).collect(),
        }
    }

    pub fn basis_element(&self, k: usize) -> AlgebraElement {
        let (b, i, j) = self.basis_entry(k);
        let mut e = self.zero();
        e.blocks[b][(i, j)] = r(1.0);
        e
    }

    pub fn from_coords(&self, coords: &[C64]) -> AlgebraElement {
        assert_eq!(coords.len(), self.dim());
        let mut at = 0;
        let blocks = self
            .blocks
            .iter()
            .map(|&n| {
                let m = Mat::from_row_slice(n, n, &coords[at..at + n * n]);
                at += n * n;
                m
            })
            .collect();
        AlgebraElement { blocks }
    }

    pub fn check_element(&self, a: &AlgebraElement) -> Result<()> {
        let ok = a.blocks.len() == self.blocks.len()
            && a.blocks
                .iter()
                .zip(&self.blocks)
                .all(|(m, &n)| m.shape() == (n, n));
        if ok {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(
                "element block shapes do not match the algebra".into(),
            ))
        }
    }

    /// `N x N` matrix of `b -> a b` on coordinates.
    pub fn left_mult_matrix(&self, a: &AlgebraElement) -> Mat {
        let n = self.dim();
        let mut m = zeros(n, n);
        for k in 0..n {
            let prod = a.mul(&self.basis_element(k));
            m.set_column(k, &prod.coords());
        }
        m
    }

    /// Applies a linear map `A -> A` given on coordinates.
    pub fn apply_map(&self, map: &Mat, a: &AlgebraElement) -> AlgebraElement {
        let v = map * a.coords();
        self.from_coords(v.as_slice())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    pub blocks: Vec<Mat>,
}

impl AlgebraElement {
    pub fn algebra(&self) -> CStarAlgebra {
        CStarAlgebra::new(self.blocks.iter().map(|b| b.nrows()).collect()).expect("nonempty")
    }

    pub fn mul(&self, other: &AlgebraElement) -> AlgebraElement {
        AlgebraElement {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }

    pub fn star(&self) -> AlgebraElement {
        AlgebraElement {
            blocks: self.blocks.iter().map(|a| a.adjoint()).collect(),
        }
    }

    pub fn add(&self, other: &AlgebraElement) -> AlgebraElement {
        AlgebraElement {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn scale(&self, s: C64) -> AlgebraElement {
        AlgebraElement {
            blocks: self.blocks.iter().map(|a| a * s).collect(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.norm_squared())
            .sum::<f64>()
            .sqrt()
    }

    pub fn dist(&self, other: &AlgebraElement) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| (a - b).norm_squared())
            .sum::<f64>()
            .sqrt()
    }

    pub fn coords(&self) -> Vector {
        let data: Vec<C64> = self
            .blocks
            .iter()
            .flat_map(|b| (0..b.nrows()).flat_map(move |i| (0..b.ncols()).map(move |j| b[(i, j)])))
            .collect();
        Vector::from_vec(data)
    }

    /// Block-diagonal matrix of size `embed_dim`.
    pub fn embed(&self) -> Mat {
        let e: usize = self.blocks.iter().map(|b| b.nrows()).sum();
        let mut m = zeros(e, e);
        let mut at = 0;
        for b in &self.blocks {
            m.view_mut((at, at), b.shape()).copy_from(b);
            at += b.nrows();
        }
        m
    }
}

/// JSON form of an element: the list of its blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ElementJson(pub Vec<MatJson>);

impl From<&AlgebraElement> for ElementJson {
    fn from(a: &AlgebraElement) -> Self {
        ElementJson(a.blocks.iter().map(MatJson::from).collect())
    }
}

impl ElementJson {
    pub fn to_element(&self, alg: &CStarAlgebra) -> Result<AlgebraElement> {
        let blocks = self
            .0
            .iter()
            .map(Mat::try_from)
            .collect::<Result<Vec<_>>>()?;
        let a = AlgebraElement { blocks };
        alg.check_element(&a)?;
        Ok(a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Positivity {
    pub ok: bool,
    pub min_eig: f64,
}

pub fn element_positive(a: &AlgebraElement, tol: f64) -> Result<Positivity> {
    let defect = a.dist(&a.star());
    if defect > tol * a.norm().max(1.0) {
        return Err(Error::NotHermitian { norm: defect });
    }
    let mut ok = true;
    let mut min_eig = f64::INFINITY;
    for b in &a.blocks {
        let rep = psd_check(b, tol);
        ok &= rep.ok;
        min_eig = min_eig.min(rep.min_eig);
    }
    Ok(Positivity { ok, min_eig })
}

/// `*`-representation `pi: A -> L(H)`, stored on the matrix-unit basis.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraRepresentation {
    pub algebra: CStarAlgebra,
    pub space_dim: usize,
    pub images: Vec<Mat>,
}

impl AlgebraRepresentation {
    pub fn new(algebra: CStarAlgebra, space_dim: usize, images: Vec<Mat>) -> Result<Self> {
        if images.len() != algebra.dim() {
            return Err(Error::ShapeMismatch(format!(
                "representation needs {} images, got {}",
                algebra.dim(),
                images.len()
            )));
        }
        if images.iter().any(|m| m.shape() != (space_dim, space_dim)) {
            return Err(Error::ShapeMismatch(format!(
                "representation images must be {space_dim}x{space_dim}"
            )));
        }
        Ok(Self {
            algebra,
            space_dim,
            images,
        })
    }

    /// `a -> a` on `C^E`, block diagonally.
    pub fn embedding(algebra: &CStarAlgebra) -> Self {
        let images = (0..algebra.dim())
            .map(|k| algebra.basis_element(k).embed())
            .collect();
        Self {
            algebra: algebra.clone(),
            space_dim: algebra.embed_dim(),
            images,
        }
    }

    /// `a -> pi(a) (x) I_m`.
    pub fn amplify(&self, m: usize) -> Self {
        Self {
            algebra: self.algebra.clone(),
            space_dim: self.space_dim * m,
            images: self.images.iter().map(|x| x.kronecker(&eye(m))).collect(),
        }
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

    pub fn to_json(&self) -> RepresentationJson {
        RepresentationJson {
            space_dim: self.space_dim,
            images: labelled_images(&self.algebra, &self.images),
        }
    }
}

pub(crate) fn labelled_images(alg: &CStarAlgebra, images: &[Mat]) -> BTreeMap<String, MatJson> {
    images
        .iter()
        .enumerate()
        .map(|(k, m)| (alg.basis_label(k), MatJson::from(m)))
        .collect()
}

pub(crate) fn unlabel_images(
    alg: &CStarAlgebra,
    images: &BTreeMap<String, MatJson>,
    shape: (usize, usize),
) -> Result<Vec<Mat>> {
    let mut out: Vec<Option<Mat>> = vec![None; alg.dim()];
    for (label, m) in images {
        let k = alg.parse_label(label)?;
        let m = Mat::try_from(m)?;
        if m.shape() != shape {
            return Err(Error::ShapeMismatch(format!(
                "image {label} is {}x{}, expected {}x{}",
                m.nrows(),
                m.ncols(),
                shape.0,
                shape.1
            )));
        }
        out[k] = Some(m);
    }
    out.into_iter()
        .enumerate()
        .map(|(k, m)| {
            m.ok_or_else(|| {
                Error::ShapeMismatch(format!("missing image for {}", alg.basis_label(k)))
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepresentationJson {
    pub space_dim: usize,
    pub images: BTreeMap<String, MatJson>,
}

impl RepresentationJson {
    pub fn to_representation(&self, alg: &CStarAlgebra) -> Result<AlgebraRepresentation> {
        let images = unlabel_images(alg, &self.images, (self.space_dim, self.space_dim))?;
        AlgebraRepresentation::new(alg.clone(), self.space_dim, images)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepresentationReport {
    /// `max |pi(ab) - pi(a) pi(b)|` over basis pairs, relative.
    pub multiplicativity: f64,
    /// `max |pi(a*) - pi(a)*|` over the basis, relative.
    pub star: f64,
    /// `|pi(1) - I|`, relative to `max(1, |I|)`.
    pub unit_residual: f64,
    pub unital: bool,
    /// `|pi(1)^2 - pi(1)|`: zero when `pi(1)` is a projection.
    pub unit_projection_residual: f64,
}

impl RepresentationReport {
    pub fn max_residual(&self) -> f64 {
        self.multiplicativity
            .max(self.star)
            .max(self.unit_projection_residual)
    }
}

pub fn check_representation(pi: &AlgebraRepresentation, tol: f64) -> Result<RepresentationReport> {
    let alg = &pi.algebra;
    if pi.images.len() != alg.dim()
        || pi
            .images
            .iter()
            .any(|m| m.shape() != (pi.space_dim, pi.space_dim))
    {
        return Err(Error::ShapeMismatch(
            "representation images do not match algebra".into(),
        ));
    }
    let n = alg.dim();
    let entries: Vec<_> = (0..n).map(|k| alg.basis_entry(k)).collect();
    let zero = zeros(pi.space_dim, pi.space_dim);
    let mut mult = Residual::new();
    for (k, &(b, i, j)) in entries.iter().enumerate() {
        for (l, &(b2, i2, j2)) in entries.iter().enumerate() {
            let lhs = if b == b2 && j == i2 {
                &pi.images[alg.basis_index(b, i, j2)]
            } else {
                &zero
            };
            let rhs = &pi.images[k] * &pi.images[l];
            mult.add(lhs, &rhs);
        }
    }
    let mut star = Residual::new();
    for (k, &(b, i, j)) in entries.iter().enumerate() {
        star.add(
            &pi.images[alg.basis_index(b, j, i)],
            &pi.images[k].adjoint(),
        );
    }
    let unit = pi.apply(&alg.unit());
    let id = eye(pi.space_dim);
    let unit_residual = dist(&unit, &id) / fro(&id).max(1.0);
    let unit_projection_residual = dist(&(&unit * &unit), &unit) / fro(&unit).max(1.0);
    Ok(RepresentationReport {
        multiplicativity: mult.value(),
        star: star.value(),
        unit_residual,
        unital: unit_residual <= tol,
        unit_projection_residual,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChoiReport {
    /// `sum_{ij} phi(E^b_ij) (x) e_ij`, one per block.
    pub choi: Vec<Mat>,
    pub cp: bool,
    pub min_eig: f64,
}

/// Complete positivity of a linear map `A -> L(H)` given on the basis.
///
/// A multi-matrix algebra is a direct sum of simple blocks, so CP reduces to
/// positivity of one Choi matrix per block.
pub fn choi_blocks(alg: &CStarAlgebra, images: &[Mat], tol: f64) -> ChoiReport {
    let h = images.first().map(|m| m.nrows()).unwrap_or(0);
    let mut cp = true;
    let mut min_eig = f64::INFINITY;
    let mut choi = Vec::with_capacity(alg.blocks().len());
    for (b, &n) in alg.blocks().iter().enumerate() {
        let mut cm = zeros(h * n, h * n);
        for i in 0..n {
            for j in 0..n {
                let img = &images[alg.basis_index(b, i, j)];
                let mut unit = zeros(n, n);
                unit[(i, j)] = r(1.0);
                cm += img.kronecker(&unit);
            }
        }
        let rep = psd_check(&cm, tol);
        cp &= rep.ok;
        min_eig = min_eig.min(rep.min_eig);
        choi.push(cm);
    }
    if h == 0 {
        min_eig = 0.0;
    }
    ChoiReport { choi, cp, min_eig }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutomorphismReport {
    pub multiplicativity: f64,
    pub star: f64,
    pub rank: usize,
    pub required_rank: usize,
}

impl AutomorphismReport {
    pub fn bijective(&self) -> bool {
        self.rank == self.required_rank
    }
}

/// Checks that a linear map `A -> A` (on coordinates) is a `*`-automorphism.
pub fn check_automorphism(alg: &CStarAlgebra, map: &Mat) -> AutomorphismReport {
    let n = alg.dim();
    let images: Vec<AlgebraElement> = (0..n)
        .map(|k| alg.from_coords(map.column(k).clone_owned().as_slice()))
        .collect();
    let mut mult = Residual::new();
    let mut star = Residual::new();
    for k in 0..n {
        let (b, i, j) = alg.basis_entry(k);
        for l in 0..n {
            let (b2, i2, j2) = alg.basis_entry(l);
            let lhs = if b == b2 && j == i2 {
                images[alg.basis_index(b, i, j2)].embed()
            } else {
                zeros(alg.embed_dim(), alg.embed_dim())
            };
            mult.add(&lhs, &images[k].mul(&images[l]).embed());
        }
        star.add(
            &images[alg.basis_index(b, j, i)].embed(),
            &images[k].star().embed(),
        );
    }
    AutomorphismReport {
        multiplicativity: mult.value(),
        star: star.value(),
        rank: span_rank(map, DEFAULT_REL_TOL).rank,
        required_rank: n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::c;
    use crate::rng::{ginibre, SeedStream};

    fn transpose_rep(alg: &CStarAlgebra) -> AlgebraRepresentation {
        let images = (0..alg.dim())
            .map(|k| alg.basis_element(k).embed().transpose())
            .collect();
        AlgebraRepresentation::new(alg.clone(), alg.embed_dim(), images).unwrap()
    }

    #[test]
    fn dims_and_labels() {
        let alg = CStarAlgebra::new(vec![2, 1, 3]).unwrap();
        assert_eq!(alg.dim(), 14);
        assert_eq!(alg.embed_dim(), 6);
        for k in 0..alg.dim() {
            assert_eq!(alg.parse_label(&alg.basis_label(k)).unwrap(), k);
        }
        assert_eq!(alg.basis_label(5), "2:0:0");
        assert!(CStarAlgebra::new(vec![]).is_err());
        assert!(CStarAlgebra::new(vec![2, 0]).is_err());
    }

    #[test]
    fn star_is_involutive() {
        let alg = CStarAlgebra::new(vec![2, 1]).unwrap();
        let mut rng = SeedStream::new(3).stream(0);
        let coords: Vec<C64> = ginibre(alg.dim(), 1, &mut rng).iter().copied().collect();
        let a = alg.from_coords(&coords);
        assert_eq!(a.star().star(), a);
    }

    #[test]
    fn positivity_examples() {
        let alg = CStarAlgebra::new(vec![2, 3]).unwrap();
        let p = element_positive(&alg.unit(), 1e-12).unwrap();
        assert!(p.ok && (p.min_eig - 1.0).abs() < 1e-14);

        let m2 = CStarAlgebra::matrix(2);
        let a = AlgebraElement {
            blocks: vec![crate::numkernel::diag_real(&[1.0, -1.0])],
        };
        let p = element_positive(&a, 1e-12).unwrap();
        assert!(!p.ok && (p.min_eig + 1.0).abs() < 1e-14);
        assert!(m2.check_element(&a).is_ok());

        let mut nh = m2.zero();
        nh.blocks[0][(0, 1)] = r(1.0);
        assert!(matches!(
            element_positive(&nh, 1e-12),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn standard_module_inner_products_are_positive() {
        // <x,x> = x* x for x in M_{3,2}.
        let mut rng = SeedStream::new(17).stream(0);
        for _ in 0..5 {
            let x = ginibre(3, 2, &mut rng);
            let a = AlgebraElement {
                blocks: vec![x.adjoint() * &x],
            };
            assert!(element_positive(&a, 1e-12).unwrap().ok);
        }
    }

    #[test]
    fn identity_and_double_representation_pass() {
        let m2 = CStarAlgebra::matrix(2);
        let id = AlgebraRepresentation::embedding(&m2);
        let rep = check_representation(&id, 1e-12).unwrap();
        assert_eq!(rep.max_residual(), 0.0);
        assert!(rep.unital);

        let double = id.amplify(2);
        let rep = check_representation(&double, 1e-12).unwrap();
        assert_eq!(rep.max_residual(), 0.0);
        assert!(rep.unital);
    }

    #[test]
    fn transpose_is_not_multiplicative() {
        let m2 = CStarAlgebra::matrix(2);
        let rep = check_representation(&transpose_rep(&m2), 1e-12).unwrap();
        // transpose(e12 e21) = e11 but transpose(e12) transpose(e21) = e22.
        assert!(rep.multiplicativity > 0.5, "{}", rep.multiplicativity);
    }

    #[test]
    fn non_unital_representation_is_projection() {
        let m2 = CStarAlgebra::matrix(2);
        let id = AlgebraRepresentation::embedding(&m2);
        let padded = AlgebraRepresentation::new(
            m2.clone(),
            3,
            id.images
                .iter()
                .map(|m| crate::numkernel::direct_sum(m, &zeros(1, 1)))
                .collect(),
        )
        .unwrap();
        let rep = check_representation(&padded, 1e-12).unwrap();
        assert!(!rep.unital);
        assert_eq!(rep.unit_projection_residual, 0.0);
    }

    #[test]
    fn choi_of_identity_transpose_and_trace() {
        let m2 = CStarAlgebra::matrix(2);
        let id: Vec<Mat> = (0..4).map(|k| m2.basis_element(k).embed()).collect();
        let rep = choi_blocks(&m2, &id, 1e-12);
        assert!(rep.cp);
        assert!((crate::numkernel::op_norm(&rep.choi[0]) - 2.0).abs() < 1e-12);

        let tr: Vec<Mat> = id.iter().map(|m| m.transpose()).collect();
        let rep = choi_blocks(&m2, &tr, 1e-12);
        assert!(!rep.cp);
        assert!((rep.min_eig + 1.0).abs() < 1e-12);

        let dep: Vec<Mat> = id.iter().map(|m| eye(2) * m.trace()).collect();
        let rep = choi_blocks(&m2, &dep, 1e-12);
        assert!(rep.cp);
        assert!(dist(&rep.choi[0], &eye(4)) < 1e-14);
    }

    #[test]
    fn kraus_maps_are_cp() {
        let alg = CStarAlgebra::new(vec![2, 1]).unwrap();
        let emb = AlgebraRepresentation::embedding(&alg);
        let mut rng = SeedStream::new(8).stream(0);
        for _ in 0..10 {
            let kraus: Vec<Mat> = (0..3)
                .map(|_| ginibre(alg.embed_dim(), 2, &mut rng))
                .collect();
            let images: Vec<Mat> = emb
                .images
                .iter()
                .map(|p| {
                    kraus
                        .iter()
                        .fold(zeros(2, 2), |acc, t| acc + t.adjoint() * p * t)
                })
                .collect();
            let rep = choi_blocks(&alg, &images, 1e-10);
            assert!(rep.cp && rep.min_eig >= -1e-10);
        }
    }

    #[test]
    fn embedding_passes_for_test_matrix() {
        for blocks in [vec![1], vec![3], vec![1, 1], vec![2, 1, 2]] {
            let alg = CStarAlgebra::new(blocks).unwrap();
            let rep = check_representation(&AlgebraRepresentation::embedding(&alg), 1e-12).unwrap();
            assert!(rep.max_residual() < 1e-14 && rep.unital);
        }
    }

    #[test]
    fn inner_automorphism_is_automorphism() {
        let m2 = CStarAlgebra::matrix(2);
        let d = crate::numkernel::diag_real(&[1.0, -1.0]);
        let mut map = zeros(4, 4);
        for k in 0..4 {
            let e = m2.basis_element(k);
            let img = AlgebraElement {
                blocks: vec![&d * &e.blocks[0] * d.adjoint()],
            };
            map.set_column(k, &img.coords());
        }
        let rep = check_automorphism(&m2, &map);
        assert!(rep.multiplicativity < 1e-14 && rep.star < 1e-14 && rep.bijective());
        // Scaling by 2 is not multiplicative.
        let rep = check_automorphism(&m2, &(map * c(2.0, 0.0)));
        assert!(rep.multiplicativity > 0.1);
    }

    #[test]
    fn representation_json_round_trip() {
        let alg = CStarAlgebra::new(vec![1, 2]).unwrap();
        let rep = AlgebraRepresentation::embedding(&alg);
        let j = serde_json::to_string(&rep.to_json()).unwrap();
        let back: RepresentationJson = serde_json::from_str(&j).unwrap();
        assert_eq!(back.to_representation(&alg).unwrap(), rep);
        assert!(j.contains("\"1:0:1\""));
    }
}
