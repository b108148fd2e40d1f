//! Independent numerics for the test suites: a cyclic Jacobi eigenvalue
//! solver on the real form of a Hermitian matrix, and Gram matrices built
//! from hand-written matrix-unit products rather than the library's algebra.

#![allow(dead_code)]

use cstar_dilation::numkernel::{Mat, C64};

/// Eigenvalues of a real symmetric matrix, ascending.
#[allow(clippy::needless_range_loop)]
pub fn jacobi_symmetric(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let total: f64 = a.iter().flatten().map(|x| x * x).sum();
        if off <= 1e-30 * total.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// Eigenvalues of a Hermitian matrix via `[[Re, -Im], [Im, Re]]`, whose
/// spectrum is that of `h` with every eigenvalue doubled.
pub fn hermitian_eigenvalues(h: &Mat) -> Vec<f64> {
    let n = h.nrows();
    let mut a = vec![vec![0.0; 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            let z = (h[(i, j)] + h[(j, i)].conj()) * 0.5;
            a[i][j] = z.re;
            a[i + n][j + n] = z.re;
            a[i][j + n] = -z.im;
            a[i + n][j] = z.im;
        }
    }
    let doubled = jacobi_symmetric(a);
    doubled.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}

/// Number of eigenvalues above `1e-10` times the largest.
pub fn oracle_rank(gram: &Mat) -> usize {
    if gram.nrows() == 0 {
        return 0;
    }
    let eig = hermitian_eigenvalues(gram);
    let top = eig.last().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return 0;
    }
    eig.iter().filter(|&&e| e > 1e-10 * top).count()
}

/// `[phi(a_k* a_l)]_{(k, j), (l, i)}` for `phi` on `M_n`, basis `E_ab` at `a n + b`,
/// using `E_ab* E_cd = delta_ac E_bd`.
pub fn gns_gram_oracle(phi: &[Mat], n: usize) -> Mat {
    let h = phi.first().map(|m| m.nrows()).unwrap_or(0);
    let nn = n * n;
    let mut g = Mat::zeros(nn * h, nn * h);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                if a != c {
                    continue;
                }
                for d in 0..n {
                    let img = &phi[b * n + d];
                    let (k, l) = (a * n + b, c * n + d);
                    for j in 0..h {
                        for i in 0..h {
                            g[(k * h + j, l * h + i)] = img[(j, i)];
                        }
                    }
                }
            }
        }
    }
    g
}

/// `[phi(<x_i, x_k>)]_{(i, j), (k, l)}` on `C^{p x n}` with basis `e_rc` at
/// `r n + c`, using `<e_rc, e_r'c'> = delta_rr' E_cc'`.
pub fn k_gram_oracle(phi: &[Mat], p: usize, n: usize) -> Mat {
    let h = phi.first().map(|m| m.nrows()).unwrap_or(0);
    let m = p * n;
    let mut g = Mat::zeros(m * h, m * h);
    for r in 0..p {
        for c in 0..n {
            for c2 in 0..n {
                let img = &phi[c * n + c2];
                let (i, k) = (r * n + c, r * n + c2);
                for j in 0..h {
                    for l in 0..h {
                        g[(i * h + j, k * h + l)] = img[(j, l)];
                    }
                }
            }
        }
    }
    g
}

pub fn fro(m: &Mat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `|a - b|_F / max(|a|_F, |b|_F, 1e-12)`.
pub fn rel(a: &Mat, b: &Mat) -> f64 {
    fro(&(a - b)) / fro(a).max(fro(b)).max(1e-12)
}

/// `|U* U - I|_F` and `|U U* - I|_F`, larger of the two.
pub fn unitarity(u: &Mat) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let id = Mat::identity(u.nrows(), u.ncols());
    fro(&(u.adjoint() * u - &id)).max(fro(&(u * u.adjoint() - id)))
}

/// `|U - e^{i theta} R|_F` minimized over the global phase.
pub fn phase_aligned_gap(u: &Mat, r: &Mat) -> f64 {
    let overlap: C64 = (r.adjoint() * u).trace();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    fro(&(u - r * phase))
}
