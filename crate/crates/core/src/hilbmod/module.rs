//! Hilbert modules stored by structure tensors on a chosen basis `x_0..x_{m-1}`.

use serde::{Deserialize, Serialize};

use crate::cstar::{AlgebraElement, CStarAlgebra, ElementJson};
use crate::error::{Error, Result};
use crate::numkernel::{
    gram_factor, psd_check, r, span_rank, vec_row_major, zeros, Mat, MatJson, RankProfile,
    Residual, Vector, C64, DEFAULT_REL_TOL,
};

#[derive(Debug, Clone, PartialEq)]
pub struct HilbertModule {
    algebra: CStarAlgebra,
    dim: usize,
    /// One `m x m` matrix per algebra basis element `a_k`: column `i` holds
    /// the coordinates of `x_i a_k`.
    action: Vec<Mat>,
    /// `<x_i, x_j>` at index `i * m + j`.
    inner: Vec<AlgebraElement>,
}

impl HilbertModule {
    pub fn new(
        algebra: CStarAlgebra,
        dim: usize,
        action: Vec<Mat>,
        inner: Vec<AlgebraElement>,
    ) -> Result<Self> {
        if action.len() != algebra.dim() || action.iter().any(|m| m.shape() != (dim, dim)) {
            return Err(Error::ShapeMismatch(format!(
                "module action needs {} matrices of size {dim}x{dim}",
                algebra.dim()
            )));
        }
        if inner.len() != dim * dim {
            return Err(Error::ShapeMismatch(format!(
                "module inner product needs {} values, got {}",
                dim * dim,
                inner.len()
            )));
        }
        for a in &inner {
            algebra.check_element(a)?;
        }
        Ok(Self {
            algebra,
            dim,
            action,
            inner,
        })
    }

    /// `X = M_{p,n}` over `A = M_n` with `<x,y> = x* y` and `x a` the matrix
    /// product. Basis `x_{r*n+c} = e_{rc}`.
    pub fn standard(p: usize, n: usize) -> Self {
        assert!(p >= 1 && n >= 1);
        let algebra = CStarAlgebra::matrix(n);
        let m = p * n;
        let basis: Vec<Mat> = (0..m)
            .map(|i| {
                let mut e = zeros(p, n);
                e[(i / n, i % n)] = r(1.0);
                e
            })
            .collect();
        let action = (0..algebra.dim())
            .map(|k| {
                let a = &algebra.basis_element(k).blocks[0];
                let mut mat = zeros(m, m);
                for (i, x) in basis.iter().enumerate() {
                    mat.set_column(i, &vec_row_major(&(x * a)));
                }
                mat
            })
            .collect();
        let inner = (0..m * m)
            .map(|ij| AlgebraElement {
                blocks: vec![basis[ij / m].adjoint() * &basis[ij % m]],
            })
            .collect();
        Self {
            algebra,
            dim: m,
            action,
            inner,
        }
    }

    pub fn algebra(&self) -> &CStarAlgebra {
        &self.algebra
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn action_matrices(&self) -> &[Mat] {
        &self.action
    }

    pub fn basis_label(&self, i: usize) -> String {
        format!("x:{i}")
    }

    pub fn parse_label(&self, label: &str) -> Result<usize> {
        label
            .strip_prefix("x:")
            .and_then(|s| s.parse::<usize>().ok())
            .filter(|&i| i < self.dim)
            .ok_or_else(|| Error::ShapeMismatch(format!("bad module basis label {label:?}")))
    }

    pub fn inner_basis(&self, i: usize, j: usize) -> &AlgebraElement {
        &self.inner[i * self.dim + j]
    }

    /// Matrix of `x -> x a` on module coordinates.
    pub fn right_mult(&self, a: &AlgebraElement) -> Mat {
        let mut out = zeros(self.dim, self.dim);
        for (w, m) in a.coords().iter().zip(&self.action) {
            if *w != C64::new(0.0, 0.0) {
                out += m * *w;
            }
        }
        out
    }

    pub fn act(&self, x: &Vector, a: &AlgebraElement) -> Vector {
        self.right_mult(a) * x
    }

    pub fn inner(&self, x: &Vector, y: &Vector) -> AlgebraElement {
        let mut acc = self.algebra.zero();
        for i in 0..self.dim {
            if x[i] == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..self.dim {
                let w = x[i].conj() * y[j];
                if w != C64::new(0.0, 0.0) {
                    acc = acc.add(&self.inner_basis(i, j).scale(w));
                }
            }
        }
        acc
    }

    /// `N x m^2` matrix whose column `i*m+j` holds the coordinates of
    /// `<x_i, x_j>`. Its rank decides fullness, and linear maps out of `A`
    /// are recovered from their values on inner products by solving against it.
    pub fn fullness_system(&self) -> Mat {
        let mut out = zeros(self.algebra.dim(), self.dim * self.dim);
        for (col, a) in self.inner.iter().enumerate() {
            out.set_column(col, &a.coords());
        }
        out
    }

    pub fn fullness(&self) -> RankProfile {
        span_rank(&self.fullness_system(), DEFAULT_REL_TOL)
    }

    pub fn require_full(&self) -> Result<()> {
        let rank = self.fullness().rank;
        if rank < self.algebra.dim() {
            return Err(Error::NotFull {
                rank,
                required: self.algebra.dim(),
            });
        }
        Ok(())
    }

    /// `[<x_i, x_j>]` as one `(m E) x (m E)` matrix over the embedding.
    pub fn gram_supermatrix(&self) -> Mat {
        let e = self.algebra.embed_dim();
        let m = self.dim;
        let mut out = zeros(m * e, m * e);
        for i in 0..m {
            for j in 0..m {
                out.view_mut((i * e, j * e), (e, e))
                    .copy_from(&self.inner_basis(i, j).embed());
            }
        }
        out
    }

    pub fn to_json(&self) -> ModuleJson {
        ModuleJson {
            algebra: self.algebra.clone(),
            dim: self.dim,
            action: self.action.iter().map(MatJson::from).collect(),
            inner: self.inner.iter().map(ElementJson::from).collect(),
        }
    }
}

/// `{"algebra":{"blocks":[..]}, "dim":m, "action":[N matrices m x m], "inner":[m*m elements]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleJson {
    pub algebra: CStarAlgebra,
    pub dim: usize,
    pub action: Vec<MatJson>,
    pub inner: Vec<ElementJson>,
}

impl ModuleJson {
    pub fn to_module(&self) -> Result<HilbertModule> {
        let algebra = CStarAlgebra::new(self.algebra.blocks().to_vec())?;
        let action = self
            .action
            .iter()
            .map(Mat::try_from)
            .collect::<Result<Vec<_>>>()?;
        let inner = self
            .inner
            .iter()
            .map(|e| e.to_element(&algebra))
            .collect::<Result<Vec<_>>>()?;
        HilbertModule::new(algebra, self.dim, action, inner)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModuleAxiomReport {
    /// `max |<x_i, x_j a_k> - <x_i, x_j> a_k|`.
    pub linearity: f64,
    /// `max |(x a) b - x (a b)|` and `|x 1 - x|`.
    pub action: f64,
    /// `max |<x_i, x_j>* - <x_j, x_i>|`.
    pub symmetry: f64,
    pub positive: bool,
    pub positivity_min_eig: f64,
    /// Rank of the trace form `tr <x, x>`; definite iff it equals `dim`.
    pub definiteness: (usize, usize),
    /// `(rank of span <X, X>, N)`.
    pub fullness: (usize, usize),
}

impl ModuleAxiomReport {
    pub fn definite(&self) -> bool {
        self.definiteness.0 == self.definiteness.1
    }

    pub fn full(&self) -> bool {
        self.fullness.0 == self.fullness.1
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.linearity <= tol
            && self.action <= tol
            && self.symmetry <= tol
            && self.positive
            && self.definite()
            && self.full()
    }
}

pub fn check_module_axioms(x: &HilbertModule, tol: f64) -> Result<ModuleAxiomReport> {
    let alg = &x.algebra;
    let m = x.dim;
    let n = alg.dim();
    if x.action.len() != n || x.inner.len() != m * m {
        return Err(Error::ShapeMismatch(
            "module structure tensors have the wrong size".into(),
        ));
    }
    let basis_a: Vec<AlgebraElement> = (0..n).map(|k| alg.basis_element(k)).collect();

    let mut linearity = Residual::new();
    for i in 0..m {
        for j in 0..m {
            let g = x.inner_basis(i, j);
            for (k, a) in basis_a.iter().enumerate() {
                let xja = x.action[k].column(j).clone_owned();
                let lhs = x.inner(&unit_vector(m, i), &xja);
                linearity.add(&lhs.embed(), &g.mul(a).embed());
            }
        }
    }

    let mut action = Residual::new();
    for k in 0..n {
        for l in 0..n {
            let prod = basis_a[k].mul(&basis_a[l]);
            let lhs = &x.action[l] * &x.action[k];
            action.add(&lhs, &x.right_mult(&prod));
        }
    }
    action.add(&x.right_mult(&alg.unit()), &Mat::identity(m, m));

    let mut symmetry = Residual::new();
    for i in 0..m {
        for j in 0..m {
            symmetry.add(
                &x.inner_basis(i, j).star().embed(),
                &x.inner_basis(j, i).embed(),
            );
        }
    }

    let psd = psd_check(&x.gram_supermatrix(), tol);

    let mut trace_form = zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            trace_form[(i, j)] = x.inner_basis(i, j).embed().trace();
        }
    }
    let definiteness = match gram_factor(&trace_form, DEFAULT_REL_TOL) {
        Ok(gf) => gf.rank,
        // An indefinite trace form is already a positivity failure.
        Err(_) => span_rank(&trace_form, DEFAULT_REL_TOL).rank,
    };

    Ok(ModuleAxiomReport {
        linearity: linearity.value(),
        action: action.value(),
        symmetry: symmetry.value(),
        positive: psd.ok,
        positivity_min_eig: psd.min_eig,
        definiteness: (definiteness, m),
        fullness: (x.fullness().rank, n),
    })
}

pub fn unit_vector(n: usize, i: usize) -> Vector {
    let mut v = Vector::zeros(n);
    v[i] = r(1.0);
    v
}
