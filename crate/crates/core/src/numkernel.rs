//! Dense complex linear algebra shared by every construction.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`. All rank decisions go through
//! the eigenvalues of a Gram matrix with a cutoff relative to the largest
//! eigenvalue, so that "quotient by the null space" has a single numerical
//! meaning across the crate.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Mat = DMatrix<C64>;
pub type Vector = DVector<C64>;

/// Eigenvalues at or below `DEFAULT_REL_TOL * max eigenvalue` count as zero.
pub const DEFAULT_REL_TOL: f64 = 1e-10;

/// Smallest scale any relative residual is normalized by.
pub const SCALE_FLOOR: f64 = 1e-12;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn r(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn zeros(rows: usize, cols: usize) -> Mat {
    Mat::zeros(rows, cols)
}

pub fn eye(n: usize) -> Mat {
    Mat::identity(n, n)
}

pub fn fro(m: &Mat) -> f64 {
    m.norm()
}

/// Frobenius norm of `a - b`; shapes must agree.
pub fn dist(a: &Mat, b: &Mat) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    (a - b).norm()
}

pub fn kron(a: &Mat, b: &Mat) -> Mat {
    a.kronecker(b)
}

pub fn direct_sum(a: &Mat, b: &Mat) -> Mat {
    let mut out = zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    out
}

/// Concatenates matrices with equal row counts left to right.
pub fn hstack(rows: usize, parts: &[Mat]) -> Mat {
    let cols = parts.iter().map(|p| p.ncols()).sum();
    let mut out = zeros(rows, cols);
    let mut at = 0;
    for p in parts {
        debug_assert_eq!(p.nrows(), rows);
        out.view_mut((0, at), p.shape()).copy_from(p);
        at += p.ncols();
    }
    out
}

pub fn diag_real(values: &[f64]) -> Mat {
    Mat::from_diagonal(&Vector::from_iterator(
        values.len(),
        values.iter().map(|&v| r(v)),
    ))
}

/// Spectral norm, via the largest eigenvalue of `M* M` (or `M M*`).
pub fn op_norm(m: &Mat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let g = if m.nrows() <= m.ncols() {
        m * m.adjoint()
    } else {
        m.adjoint() * m
    };
    eigenvalues_hermitian(&g)
        .first()
        .copied()
        .unwrap_or(0.0)
        .max(0.0)
        .sqrt()
}

/// Relative residual with the crate-wide scale floor.
pub fn relative(diff: f64, scale: f64) -> f64 {
    diff / scale.max(SCALE_FLOOR)
}

/// Running maximum of `|lhs - rhs|` normalized by the largest term seen.
///
/// Normalizing by the largest term over the whole check (rather than per
/// pair) keeps exact zeros from blowing up the ratio.
#[derive(Debug, Default, Clone, Copy)]
pub struct Residual {
    diff: f64,
    scale: f64,
}

impl Residual {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, lhs: &Mat, rhs: &Mat) {
        self.diff = self.diff.max(dist(lhs, rhs));
        self.scale = self.scale.max(fro(lhs)).max(fro(rhs));
    }

    pub fn add_scale(&mut self, s: f64) {
        self.scale = self.scale.max(s);
    }

    pub fn value(&self) -> f64 {
        relative(self.diff, self.scale)
    }
}

fn hermitian_defect(m: &Mat) -> f64 {
    (m - m.adjoint()).norm()
}

fn symmetrized(m: &Mat) -> Mat {
    (m + m.adjoint()) * r(0.5)
}

/// Eigenvalues of a Hermitian matrix, descending. Input is symmetrized.
pub fn eigenvalues_hermitian(m: &Mat) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut v: Vec<f64> = SymmetricEigen::new(symmetrized(m))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

#[derive(Debug, Clone)]
pub struct Eigh {
    /// Descending.
    pub values: Vec<f64>,
    /// Columns are the eigenvectors, in the order of `values`.
    pub vectors: Mat,
}

pub fn hermitian_eigendecomposition(m: &Mat, tol: f64) -> Result<Eigh> {
    if !m.is_square() {
        return Err(Error::ShapeMismatch(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let defect = hermitian_defect(m);
    if defect > tol * m.norm().max(1.0) {
        return Err(Error::NotHermitian { norm: defect });
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(Eigh {
            values: Vec::new(),
            vectors: zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::new(symmetrized(m));
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps the routine's order on ties.
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(Eigh { values, vectors })
}

/// Factorization `G = F* F` of a PSD Gram matrix through its numerical range.
///
/// `f` (r x D) maps raw vectors to quotient coordinates and is isometric for
/// the semi-inner product `xi* G zeta`; `l` (D x r) lifts coordinates back to
/// raw representatives, `f * l = I_r`.
#[derive(Debug, Clone)]
pub struct GramFactor {
    pub rank: usize,
    pub f: Mat,
    pub l: Mat,
    /// Full spectrum of `G`, descending.
    pub eigenvalues: Vec<f64>,
}

impl GramFactor {
    /// Orthogonal projector `L F` onto the retained eigenspace.
    pub fn range_projector(&self) -> Mat {
        &self.l * &self.f
    }

    pub fn raw_dim(&self) -> usize {
        self.f.ncols()
    }
}

pub fn gram_factor(g: &Mat, rel_tol: f64) -> Result<GramFactor> {
    let d = g.nrows();
    let eig = hermitian_eigendecomposition(g, 1e-8)?;
    let max = eig.values.first().copied().unwrap_or(0.0);
    let min = eig.values.last().copied().unwrap_or(0.0);
    if min < -rel_tol * max.max(SCALE_FLOOR) {
        return Err(Error::NotPsd { min_eig: min });
    }
    let cutoff = rel_tol * max;
    let rank = if max > 0.0 {
        eig.values.iter().take_while(|&&v| v > cutoff).count()
    } else {
        0
    };
    let mut f = zeros(rank, d);
    let mut l = zeros(d, rank);
    for k in 0..rank {
        let s = eig.values[k].sqrt();
        let col = eig.vectors.column(k);
        for i in 0..d {
            f[(k, i)] = col[i].conj() * s;
            l[(i, k)] = col[i] / s;
        }
    }
    Ok(GramFactor {
        rank,
        f,
        l,
        eigenvalues: eig.values,
    })
}

/// Orthonormal basis of the range of a PSD matrix, with the same cutoff
/// policy as [`gram_factor`]. Returns the basis as columns and the spectrum.
pub fn range_basis(psd: &Mat, rel_tol: f64) -> Result<(Mat, Vec<f64>)> {
    let eig = hermitian_eigendecomposition(psd, 1e-8)?;
    let max = eig.values.first().copied().unwrap_or(0.0);
    let rank = if max > 0.0 {
        eig.values
            .iter()
            .take_while(|&&v| v > rel_tol * max)
            .count()
    } else {
        0
    };
    let basis = eig.vectors.columns(0, rank).into_owned();
    Ok((basis, eig.values))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdReport {
    pub ok: bool,
    pub min_eig: f64,
    /// `|M - M*|_F`; nonzero means the input was symmetrized first.
    pub hermitian_defect: f64,
}

pub fn psd_check(m: &Mat, tol: f64) -> PsdReport {
    let defect = hermitian_defect(m);
    let values = eigenvalues_hermitian(m);
    let min_eig = values.last().copied().unwrap_or(0.0);
    let norm = values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    PsdReport {
        ok: min_eig >= -tol * norm.max(1.0),
        min_eig,
        hermitian_defect: defect,
    }
}

/// Numerical rank of the column span of `cols`, decided on the eigenvalues
/// of its Gram matrix with the crate-wide cutoff policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankProfile {
    pub rank: usize,
    /// Singular values of `cols`, descending.
    pub singular_values: Vec<f64>,
}

pub fn span_rank(cols: &Mat, rel_tol: f64) -> RankProfile {
    if cols.is_empty() {
        return RankProfile {
            rank: 0,
            singular_values: Vec::new(),
        };
    }
    let g = if cols.nrows() <= cols.ncols() {
        cols * cols.adjoint()
    } else {
        cols.adjoint() * cols
    };
    let values = eigenvalues_hermitian(&g);
    let max = values.first().copied().unwrap_or(0.0);
    let rank = if max > 0.0 {
        values.iter().filter(|&&v| v > rel_tol * max).count()
    } else {
        0
    };
    RankProfile {
        rank,
        singular_values: values.iter().map(|v| v.max(0.0).sqrt()).collect(),
    }
}

/// Minimum-norm least-squares solution of `A X = B` via the SVD.
pub fn least_squares_solve(a: &Mat, b: &Mat) -> Result<Mat> {
    if a.nrows() != b.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "least squares: A has {} rows, B has {}",
            a.nrows(),
            b.nrows()
        )));
    }
    if a.is_empty() || b.ncols() == 0 {
        return Ok(zeros(a.ncols(), b.ncols()));
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("requested U");
    let vt = svd.v_t.as_ref().expect("requested V^T");
    let smax = svd.singular_values.iter().fold(0.0_f64, |m, &s| m.max(s));
    let cutoff = smax * 1e-12 * (a.nrows().max(a.ncols()) as f64);
    let mut x = zeros(a.ncols(), b.ncols());
    let utb = u.adjoint() * b;
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            continue;
        }
        let coeff = utb.row(k) / r(s);
        x += vt.row(k).adjoint() * coeff;
    }
    Ok(x)
}

/// Row-major coordinates of a matrix as a column vector.
pub fn vec_row_major(m: &Mat) -> Vector {
    Vector::from_iterator(
        m.len(),
        (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)])),
    )
}

pub fn unvec_row_major(v: &[C64], rows: usize, cols: usize) -> Mat {
    Mat::from_row_slice(rows, cols, v)
}

/// JSON form of a matrix: explicit shape plus row-major `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatJson {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<[f64; 2]>,
}

impl From<&Mat> for MatJson {
    fn from(m: &Mat) -> Self {
        let entries = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
            .map(|(i, j)| [m[(i, j)].re, m[(i, j)].im])
            .collect();
        MatJson {
            rows: m.nrows(),
            cols: m.ncols(),
            entries,
        }
    }
}

impl TryFrom<&MatJson> for Mat {
    type Error = Error;

    fn try_from(j: &MatJson) -> Result<Mat> {
        if j.entries.len() != j.rows * j.cols {
            return Err(Error::ShapeMismatch(format!(
                "matrix declares {}x{} but has {} entries",
                j.rows,
                j.cols,
                j.entries.len()
            )));
        }
        let data: Vec<C64> = j.entries.iter().map(|[re, im]| c(*re, *im)).collect();
        Ok(Mat::from_row_slice(j.rows, j.cols, &data))
    }
}

/// `serde(with = ...)` adapter so domain types can hold `Mat` directly.
pub mod mat_serde {
    use super::{Mat, MatJson};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Mat, s: S) -> Result<S::Ok, S::Error> {
        MatJson::from(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Mat, D::Error> {
        let j = MatJson::deserialize(d)?;
        Mat::try_from(&j).map_err(serde::de::Error::custom)
    }
}

pub mod mat_vec_serde {
    use super::{Mat, MatJson};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(ms: &[Mat], s: S) -> Result<S::Ok, S::Error> {
        ms.iter()
            .map(MatJson::from)
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Mat>, D::Error> {
        let js = Vec::<MatJson>::deserialize(d)?;
        js.iter()
            .map(|j| Mat::try_from(j).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{random_hermitian, SeedStream};

    fn rebuild(e: &Eigh) -> Mat {
        &e.vectors * diag_real(&e.values) * e.vectors.adjoint()
    }

    #[test]
    fn eigh_identity_and_diagonal() {
        let e = hermitian_eigendecomposition(&eye(2), 1e-12).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0]);
        let d = diag_real(&[3.0, -1.0]);
        let e = hermitian_eigendecomposition(&d, 1e-12).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-14 && (e.values[1] + 1.0).abs() < 1e-14);
        // Eigenvectors are the standard basis up to phase.
        assert!((e.vectors[(0, 0)].norm() - 1.0).abs() < 1e-14);
        assert!((e.vectors[(1, 1)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eigh_seeded_reconstruction() {
        let mut rng = SeedStream::new(42).stream(0);
        let m = random_hermitian(6, &mut rng);
        let e = hermitian_eigendecomposition(&m, 1e-12).unwrap();
        assert!(dist(&m, &rebuild(&e)) <= 1e-12 * m.norm().max(1.0));
        let unit = e.vectors.adjoint() * &e.vectors;
        assert!(dist(&unit, &eye(6)) <= 1e-12);
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn eigh_rejects_non_hermitian() {
        let mut m = eye(2);
        m[(0, 1)] = r(1.0);
        match hermitian_eigendecomposition(&m, 1e-12) {
            Err(Error::NotHermitian { norm }) => assert!((norm - 2f64.sqrt()).abs() < 1e-12),
            other => panic!("expected NotHermitian, got {other:?}"),
        }
    }

    #[test]
    fn gram_factor_zero() {
        let gf = gram_factor(&zeros(3, 3), DEFAULT_REL_TOL).unwrap();
        assert_eq!(gf.rank, 0);
        assert_eq!(gf.f.shape(), (0, 3));
        assert_eq!(gf.l.shape(), (3, 0));
    }

    #[test]
    fn gram_factor_identity() {
        let gf = gram_factor(&eye(4), DEFAULT_REL_TOL).unwrap();
        assert_eq!(gf.rank, 4);
        assert!(dist(&(&gf.f * gf.f.adjoint()), &eye(4)) < 1e-12);
        assert!(dist(&gf.l, &gf.f.adjoint()) < 1e-12);
    }

    #[test]
    fn gram_factor_rank_one() {
        // Eigenvalues of [[2,2],[2,2]] are 4 and 0.
        let g = Mat::from_element(2, 2, r(2.0));
        let gf = gram_factor(&g, DEFAULT_REL_TOL).unwrap();
        assert_eq!(gf.rank, 1);
        assert!((gf.eigenvalues[0] - 4.0).abs() < 1e-12);
        assert!(dist(&(&gf.f * &gf.l), &eye(1)) < 1e-12);
        for i in 0..2 {
            for j in 0..2 {
                let fi = gf.f.column(i);
                let fj = gf.f.column(j);
                let lhs = g[(i, j)];
                let rhs = fi.dotc(&fj);
                assert!((lhs - rhs).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn gram_factor_rejects_indefinite() {
        assert!(matches!(
            gram_factor(&diag_real(&[1.0, -0.5]), DEFAULT_REL_TOL),
            Err(Error::NotPsd { .. })
        ));
    }

    #[test]
    fn psd_examples() {
        let rep = psd_check(&eye(3), 1e-12);
        assert!(rep.ok && (rep.min_eig - 1.0).abs() < 1e-14);
        let rep = psd_check(&diag_real(&[1.0, -0.5]), 1e-12);
        assert!(!rep.ok && (rep.min_eig + 0.5).abs() < 1e-14);
        // sum_ij e_ij (x) e_ij = 2 * projector onto (e00 + e11)/sqrt2.
        let mut choi = zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                choi[(i * 2 + i, j * 2 + j)] = r(1.0);
            }
        }
        let rep = psd_check(&choi, 1e-12);
        assert!(rep.ok && rep.min_eig.abs() < 1e-14);
        assert!((op_norm(&choi) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn psd_flags_non_hermitian_input() {
        let mut m = eye(2);
        m[(0, 1)] = r(0.1);
        let rep = psd_check(&m, 1e-12);
        assert!(rep.ok);
        assert!(rep.hermitian_defect > 0.0);
    }

    #[test]
    fn least_squares_examples() {
        let b = Mat::from_row_slice(2, 2, &[r(1.0), c(0.0, 2.0), r(-3.0), r(4.0)]);
        assert!(dist(&least_squares_solve(&eye(2), &b).unwrap(), &b) < 1e-14);
        let a = Mat::from_element(2, 1, r(1.0));
        let b = Mat::from_row_slice(2, 1, &[r(0.0), r(2.0)]);
        let x = least_squares_solve(&a, &b).unwrap();
        assert!((x[(0, 0)] - r(1.0)).norm() < 1e-14);
        assert!(matches!(
            least_squares_solve(&eye(3), &b),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn least_squares_overdetermined_normal_equations() {
        let mut rng = SeedStream::new(5).stream(1);
        let a = crate::rng::ginibre(8, 3, &mut rng);
        let b = crate::rng::ginibre(8, 2, &mut rng);
        let x = least_squares_solve(&a, &b).unwrap();
        // Normal equations: A*(AX - B) = 0.
        let resid = a.adjoint() * (&a * &x - &b);
        assert!(resid.norm() <= 1e-10 * a.norm() * b.norm());
    }

    #[test]
    fn least_squares_minimum_norm() {
        // Rank-deficient: both columns equal. Min-norm solution splits evenly.
        let a = Mat::from_element(2, 2, r(1.0));
        let b = Mat::from_element(2, 1, r(2.0));
        let x = least_squares_solve(&a, &b).unwrap();
        assert!((x[(0, 0)] - r(1.0)).norm() < 1e-12);
        assert!((x[(1, 0)] - r(1.0)).norm() < 1e-12);
    }

    #[test]
    fn mat_json_round_trip() {
        let m = Mat::from_row_slice(1, 2, &[c(1.0, -1.0), c(0.5, 2.0)]);
        let j = serde_json::to_string(&MatJson::from(&m)).unwrap();
        assert_eq!(j, r#"{"rows":1,"cols":2,"entries":[[1.0,-1.0],[0.5,2.0]]}"#);
        let back: MatJson = serde_json::from_str(&j).unwrap();
        assert_eq!(Mat::try_from(&back).unwrap(), m);
    }

    #[test]
    fn span_rank_matches_gram_factor() {
        let v = Mat::from_row_slice(2, 2, &[r(1.0), r(1.0), r(1.0), r(1.0)]);
        let p = span_rank(&v, DEFAULT_REL_TOL);
        assert_eq!(p.rank, 1);
        assert!((p.singular_values[0] - 2.0).abs() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn gram_factor_isometry(seed in any::<u64>(), d in 1usize..7, k in 1usize..7) {
                let mut rng = SeedStream::new(seed).stream(0);
                let m = crate::rng::ginibre(k, d, &mut rng);
                let g = m.adjoint() * &m;
                let gf = gram_factor(&g, DEFAULT_REL_TOL).unwrap();
                prop_assert_eq!(gf.rank, k.min(d));
                prop_assert!(dist(&(&gf.f * &gf.l), &eye(gf.rank)) <= 1e-10);
                let back = gf.f.adjoint() * &gf.f;
                prop_assert!(dist(&back, &g) <= 1e-10 * op_norm(&g).max(1.0));
                prop_assert!(psd_check(&g, 1e-12).ok);
            }

            #[test]
            fn adjoint_is_involutive(seed in any::<u64>(), rows in 0usize..5, cols in 0usize..5) {
                let mut rng = SeedStream::new(seed).stream(0);
                let m = crate::rng::ginibre(rows, cols, &mut rng);
                prop_assert_eq!(m.adjoint().adjoint(), m);
            }
        }
    }
}
