mod common;

#[test]
fn jacobi_svd_matches_hand_values() {
    // [[3, 0], [4, 5]] has singular values sqrt(45) and sqrt(5)
    let sv = common::jacobi_singular_values(&[vec![3.0, 0.0], vec![4.0, 5.0]]);
    assert!((sv[0] - 45f64.sqrt()).abs() < 1e-14);
    assert!((sv[1] - 5f64.sqrt()).abs() < 1e-14);
    // orthogonal columns: singular values are the column norms
    let sv = common::jacobi_singular_values(&[vec![1.0, 0.0], vec![0.0, 2.0], vec![0.0, 0.0]]);
    assert_eq!(sv, vec![2.0, 1.0]);
}
