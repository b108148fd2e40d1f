mod support;

use cstar_dilation::numkernel::{c, Mat};
use support::{hermitian_eigenvalues, jacobi_symmetric, oracle_rank};

#[test]
fn jacobi_on_tridiagonal() {
    let a = vec![
        vec![2.0, 1.0, 0.0],
        vec![1.0, 2.0, 1.0],
        vec![0.0, 1.0, 2.0],
    ];
    let e = jacobi_symmetric(a);
    let s = 2f64.sqrt();
    for (x, y) in e.iter().zip([2.0 - s, 2.0, 2.0 + s]) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn complex_hermitian_pauli_y() {
    let y = Mat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]);
    let e = hermitian_eigenvalues(&y);
    assert!((e[0] + 1.0).abs() < 1e-12 && (e[1] - 1.0).abs() < 1e-12);
}

#[test]
fn rank_of_rank_one_projector() {
    let v = Mat::from_column_slice(3, 1, &[c(1.0, 0.0), c(0.0, 1.0), c(2.0, -1.0)]);
    assert_eq!(oracle_rank(&(&v * v.adjoint())), 1);
    assert_eq!(oracle_rank(&Mat::zeros(4, 4)), 0);
}
