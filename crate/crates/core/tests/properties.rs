mod props;

fn run(name: &str) {
    let (_, f, cases) = props::SUITES.iter().find(|s| s.0 == name).unwrap();
    if let Err(e) = f(*cases) {
        panic!("{name}: {e}");
    }
}

#[test]
fn converged_fits_are_stationary() {
    run("stationarity");
}

#[test]
fn lasso_path_satisfies_kkt() {
    run("kkt");
}

#[test]
fn corrected_variance_is_below_jackknife_and_clamped_nonnegative() {
    run("variance ordering");
}

#[test]
fn single_row_contrast_is_squared_z() {
    run("wald reduction");
}

#[test]
fn smoothed_estimate_is_the_split_average() {
    run("averaging identity");
}

#[test]
fn serial_and_parallel_fits_are_bitwise_equal() {
    run("determinism");
}

#[test]
fn gaussian_fits_are_scale_equivariant() {
    run("scale equivariance");
}
