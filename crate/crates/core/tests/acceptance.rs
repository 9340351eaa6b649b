use dixlab_core::acceptance::run_criterion;

fn check(id: u8) {
    let r = run_criterion(id).expect("criterion exists");
    println!("{r}");
    assert!(r.passed, "{r}");
}

#[test]
fn jump_sum_identity_on_random_step_functions() {
    check(1);
}

#[test]
fn counterexample_norm_bound() {
    check(2);
}

#[test]
fn counterexample_window_gap() {
    check(3);
}

#[test]
fn adjusted_cutoff_sandwich() {
    check(4);
}

#[test]
fn weight_classifiers() {
    check(5);
}

#[test]
fn exp_sqrt_log_discrepancy() {
    check(6);
}

#[test]
fn heat_kernel_normalisation() {
    check(7);
}

#[test]
fn spectral_layer() {
    check(8);
}

#[test]
fn harmonic_matrix_comparison() {
    check(9);
}

#[test]
fn window_normalisation_and_dilation() {
    check(10);
}
