use std::ffi::CStr;
use std::ptr;

use phasemeter_ffi::*;

fn last_error() -> String {
    let n = unsafe { pm_last_error_message(ptr::null_mut(), 0) };
    let mut buf = vec![0 as std::ffi::c_char; n + 1];
    unsafe { pm_last_error_message(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn number_state(n: usize) -> *mut PmState {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { pm_state_number(n, 16, 1.0, &mut s) }, PM_OK);
    s
}

fn grid_values(g: *const PmGrid) -> (usize, usize, Vec<f64>) {
    let (mut start, mut step, mut nx, mut np) = (0.0, 0.0, 0usize, 0usize);
    unsafe {
        assert_eq!(pm_grid_axis(g, 0, &mut start, &mut step, &mut nx), PM_OK);
        assert_eq!(pm_grid_axis(g, 1, &mut start, &mut step, &mut np), PM_OK);
    }
    let mut v = vec![0.0; nx * np];
    assert_eq!(unsafe { pm_grid_values(g, v.as_mut_ptr(), v.len()) }, PM_OK);
    (nx, np, v)
}

#[test]
fn husimi_of_vacuum_through_the_abi() {
    let s = number_state(0);
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { pm_husimi(s, PM_PROFILE_DEFAULT, &mut g) }, PM_OK);
    let mut mass = 0.0;
    assert_eq!(unsafe { pm_grid_mass(g, &mut mass) }, PM_OK);
    assert!((mass - 1.0).abs() < 1e-6);
    let (nx, np, v) = grid_values(g);
    assert_eq!((nx, np), (161, 161));
    // peak 1/2π at the origin, the centre sample
    assert!((v[80 * np + 80] - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-12);
    assert_eq!(unsafe { pm_last_error_message(ptr::null_mut(), 0) }, 0);
    unsafe {
        pm_grid_free(g);
        pm_state_free(s);
    }
}

#[test]
fn optimal_process_reproduces_q_and_minimal_product() {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { pm_process_optimal(1.0, 1.0, PM_PROFILE_DEFAULT, &mut p) }, PM_OK);
    let s = number_state(1);
    let mut rho = ptr::null_mut();
    assert_eq!(unsafe { pm_pointer_distribution(p, s, &mut rho) }, PM_OK);

    let mut report = PmErrorSummary::default();
    assert_eq!(unsafe { pm_error_report(p, PM_RETRODICTIVE, 6, &mut report) }, PM_OK);
    assert!((report.product - 0.5).abs() < 1e-4, "{report:?}");
    assert!((report.resolution_lambda - 1.0).abs() < 1e-4);

    // the readout distribution compared against itself and against |0>'s
    let mut same = PmComparison::default();
    assert_eq!(unsafe { pm_compare_grids(rho, rho, 6, &mut same) }, PM_OK);
    assert_eq!(same.verdict, PM_VERDICT_EQUAL);
    let vac = number_state(0);
    let mut rho0 = ptr::null_mut();
    assert_eq!(unsafe { pm_pointer_distribution(p, vac, &mut rho0) }, PM_OK);
    let mut diff = PmComparison::default();
    assert_eq!(unsafe { pm_compare_grids(rho, rho0, 6, &mut diff) }, PM_OK);
    assert_eq!(diff.verdict, PM_VERDICT_UNEQUAL);
    assert!(diff.l1_distance > 0.1);
    unsafe {
        pm_grid_free(rho);
        pm_grid_free(rho0);
        pm_state_free(s);
        pm_state_free(vac);
        pm_process_free(p);
    }
}

#[test]
fn validation_errors_carry_messages() {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { pm_state_number(3, 16, -1.0, &mut s) }, PM_VALIDATION);
    assert!(s.is_null());
    assert!(last_error().contains("lambda") || last_error().contains("scale"), "{}", last_error());

    let re = [0.6, 0.0];
    let im = [0.0, 0.6];
    assert_eq!(unsafe { pm_state_from_amplitudes(re.as_ptr(), im.as_ptr(), 2, 1.0, &mut s) }, PM_OK);
    unsafe { pm_state_free(s) };
    let zeros = [0.0, 0.0];
    assert_eq!(unsafe { pm_state_from_amplitudes(zeros.as_ptr(), zeros.as_ptr(), 2, 1.0, &mut s) }, PM_VALIDATION);
    let nan = [f64::NAN, 0.0];
    assert_eq!(unsafe { pm_state_from_amplitudes(nan.as_ptr(), zeros.as_ptr(), 2, 1.0, &mut s) }, PM_VALIDATION);
    assert!(last_error().contains("amplitudes"));

    let mut p = ptr::null_mut();
    assert_eq!(unsafe { pm_process_optimal(1.0, 1.0, 7, &mut p) }, PM_VALIDATION);
    assert!(last_error().contains("profile"));

    // a short buffer gets a truncated, terminated message
    let full = unsafe { pm_last_error_message(ptr::null_mut(), 0) };
    let mut buf = [1 as std::ffi::c_char; 8];
    assert_eq!(unsafe { pm_last_error_message(buf.as_mut_ptr(), buf.len()) }, full);
    assert_eq!(buf[7], 0);
}

#[test]
fn null_handles_and_bad_buffers() {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { pm_husimi(ptr::null(), PM_PROFILE_DEFAULT, &mut g) }, PM_NULL);
    assert!(last_error().contains("state"));
    let s = number_state(0);
    assert_eq!(unsafe { pm_husimi(s, PM_PROFILE_DEFAULT, ptr::null_mut()) }, PM_NULL);
    assert_eq!(unsafe { pm_husimi(s, PM_PROFILE_DEFAULT, &mut g) }, PM_OK);
    let mut small = vec![0.0; 10];
    assert_eq!(unsafe { pm_grid_values(g, small.as_mut_ptr(), small.len()) }, PM_VALIDATION);
    let (mut a, mut b, mut n) = (0.0, 0.0, 0);
    assert_eq!(unsafe { pm_grid_axis(g, 2, &mut a, &mut b, &mut n) }, PM_VALIDATION);
    unsafe {
        pm_grid_free(g);
        pm_state_free(s);
        pm_state_free(ptr::null_mut());
        pm_grid_free(ptr::null_mut());
        pm_process_free(ptr::null_mut());
    }
}

#[test]
fn truncation_is_numerical() {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { pm_process_optimal(1.0, 1.0, PM_PROFILE_DEFAULT, &mut p) }, PM_OK);
    let mut r = PmErrorSummary::default();
    // number states up to 30 do not fit the default joint grid
    let code = unsafe { pm_error_report(p, PM_PREDICTIVE, 30, &mut r) };
    assert_eq!(code, PM_NUMERICAL, "{}", last_error());
    unsafe { pm_process_free(p) };
}

#[test]
fn header_is_valid_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/phasemeter.h");
    let dir = std::env::temp_dir().join(format!("pm-header-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("use.c");
    std::fs::write(
        &src,
        format!(
            "#include \"{header}\"\n\
             int main(void) {{ PmState *s = 0; PmGrid *g = 0; PmComparison c; \
             if (pm_state_number(0, 8, 1.0, &s) != PM_OK) return 1; \
             pm_husimi(s, PM_PROFILE_DEFAULT, &g); pm_compare_grids(g, g, 4, &c); \
             pm_grid_free(g); pm_state_free(s); return c.verdict; }}\n"
        ),
    )
    .unwrap();
    let Ok(status) = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"])
        .arg(&src)
        .status()
    else {
        eprintln!("no C compiler; header check skipped");
        return;
    };
    assert!(status.success());
}
