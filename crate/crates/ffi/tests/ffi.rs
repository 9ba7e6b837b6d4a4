use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use neariso_ffi::*;

fn new_model(data: &[f64], weights: Option<&[f64]>, family: i32, shape: f64, dir: i32) -> (NiStatus, *mut NiModel) {
    let mut m = ptr::null_mut();
    let w = weights.map_or(ptr::null(), |w| w.as_ptr());
    let s = unsafe { ni_model_new(data.as_ptr(), w, data.len(), family, shape, dir, NI_SCALE_DEFAULT, &mut m) };
    (s, m)
}

fn last_error() -> String {
    let p = ni_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

#[test]
fn three_point_path() {
    // 3 and 2 close at rate 1 each and meet at 2.5 when lambda = 0.5.
    let (s, m) = new_model(&[1.0, 3.0, 2.0], None, NI_FAMILY_NORMAL, 1.0, NI_INCREASING);
    assert_eq!(s, NiStatus::NI_OK);
    unsafe {
        assert_eq!(ni_model_len(m), 3);
        assert_eq!(ni_model_knot_count(m), 2);
        let mut k = [f64::NAN; 2];
        assert_eq!(ni_model_knots(m, k.as_mut_ptr(), 2), NiStatus::NI_OK);
        assert_eq!(k[0], 0.0);
        assert!((k[1] - 0.5).abs() < 1e-15);

        let mut eta = [0.0; 3];
        let mut theta = [0.0; 3];
        let mut pieces = 0;
        assert_eq!(ni_model_fit(m, 0.25, eta.as_mut_ptr(), theta.as_mut_ptr(), 3, &mut pieces), NiStatus::NI_OK);
        for (a, b) in eta.iter().zip([1.0, 2.75, 2.25]) {
            assert!((a - b).abs() < 1e-15, "{eta:?}");
        }
        assert_eq!(theta, eta);
        assert_eq!(pieces, 3);

        assert_eq!(ni_model_fit(m, 10.0, eta.as_mut_ptr(), ptr::null_mut(), 3, &mut pieces), NiStatus::NI_OK);
        assert_eq!(eta, [1.0, 2.5, 2.5]);
        assert_eq!(pieces, 2);

        assert_eq!(
            ni_model_fit_bounded(m, 10.0, 1.5, 2.0, eta.as_mut_ptr(), ptr::null_mut(), 3, ptr::null_mut()),
            NiStatus::NI_OK
        );
        assert_eq!(eta, [1.5, 2.0, 2.0]);
        ni_model_free(m);
    }
}

#[test]
fn matches_the_core_library() {
    let x = [0.2, 0.9, 0.4, 0.5, 0.1, 0.7, 0.6, 1.0, 0.8, 0.3];
    let w = [10.0; 10];
    let y: Vec<f64> = x.iter().map(|v| v * 10.0).collect();
    let (s, m) = new_model(&y, Some(&w), NI_FAMILY_BINOMIAL, 10.0, NI_INCREASING);
    assert_eq!(s, NiStatus::NI_OK);
    let core = neariso::GeneralizedModel::new(
        &y,
        Some(&w),
        neariso::Family::binomial(10),
        neariso::Direction::Increasing,
        neariso::PenaltyScale::MeanWeight,
    )
    .unwrap();
    let trace = neariso::select_lambda(&core, neariso::Criterion::Aic).unwrap();
    unsafe {
        let (mut lambda, mut knot, mut value) = (0.0, 0, 0.0);
        assert_eq!(ni_model_select(m, NI_CRITERION_AIC, 0.0, &mut lambda, &mut knot, &mut value), NiStatus::NI_OK);
        assert_eq!(lambda, trace.selected_lambda());
        assert_eq!(knot, trace.selected);
        assert_eq!(value, trace.selected_entry().criterion);

        let n = ni_model_knot_count(m);
        let mut k = vec![0.0; n];
        assert_eq!(ni_model_knots(m, k.as_mut_ptr(), n), NiStatus::NI_OK);
        assert_eq!(k, core.knots());

        let mut eta = [0.0; 10];
        ni_model_fit(m, lambda, eta.as_mut_ptr(), ptr::null_mut(), 10, ptr::null_mut());
        assert_eq!(eta.to_vec(), core.fit_at(lambda).unwrap().eta);
        ni_model_free(m);
    }
}

#[test]
fn error_codes_and_messages() {
    let (s, m) = new_model(&[1.0, -1.0], None, NI_FAMILY_POISSON, 1.0, NI_INCREASING);
    assert_eq!(s, NiStatus::NI_SUPPORT);
    assert!(m.is_null());
    assert!(last_error().contains("poisson"), "{}", last_error());

    let (s, _) = new_model(&[1.0, 2.0], Some(&[1.0, 0.0]), NI_FAMILY_NORMAL, 1.0, NI_INCREASING);
    assert_eq!(s, NiStatus::NI_NONPOSITIVE_WEIGHT);
    let (s, _) = new_model(&[], None, NI_FAMILY_NORMAL, 1.0, NI_INCREASING);
    assert_eq!(s, NiStatus::NI_EMPTY_INPUT);
    let (s, _) = new_model(&[1.0], None, 99, 1.0, NI_INCREASING);
    assert_eq!(s, NiStatus::NI_INVALID_ARGUMENT);
    let (s, _) = new_model(&[1.0], None, NI_FAMILY_BINOMIAL, 2.5, NI_INCREASING);
    assert_eq!(s, NiStatus::NI_INVALID_ARGUMENT);
    let (s, _) = new_model(&[1.0], None, NI_FAMILY_NORMAL, 1.0, 7);
    assert_eq!(s, NiStatus::NI_INVALID_ARGUMENT);
    assert!(last_error().contains("direction"));

    let (s, m) = new_model(&[1.0, 3.0, 2.0], None, NI_FAMILY_NORMAL, 1.0, NI_DECREASING);
    assert_eq!(s, NiStatus::NI_OK);
    unsafe {
        let mut small = [0.0; 2];
        assert_eq!(ni_model_fit(m, 1.0, small.as_mut_ptr(), ptr::null_mut(), 2, ptr::null_mut()), NiStatus::NI_BUFFER_TOO_SMALL);
        assert_eq!(small, [0.0; 2]);
        assert_eq!(ni_model_knots(m, ptr::null_mut(), 10), NiStatus::NI_NULL_POINTER);
        let mut eta = [0.0; 3];
        assert_eq!(
            ni_model_fit_bounded(m, 1.0, 2.0, 1.0, eta.as_mut_ptr(), ptr::null_mut(), 3, ptr::null_mut()),
            NiStatus::NI_INVALID_BOUNDS
        );
        let mut l = 0.0;
        assert_eq!(ni_model_select(m, NI_CRITERION_CP, -1.0, &mut l, ptr::null_mut(), ptr::null_mut()), NiStatus::NI_INVALID_ARGUMENT);
        assert_eq!(ni_model_select(ptr::null(), NI_CRITERION_AIC, 0.0, &mut l, ptr::null_mut(), ptr::null_mut()), NiStatus::NI_NULL_POINTER);
        assert_eq!(ni_model_knot_count(ptr::null()), 0);
        ni_model_free(m);
        ni_model_free(ptr::null_mut());
    }
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(ni_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include/neariso.h");
    assert!(header.exists());
    let tmp = std::env::temp_dir().join(format!("neariso_ffi_{}.c", std::process::id()));
    std::fs::write(
        &tmp,
        "#include \"neariso.h\"\n\
         int main(void) {\n\
           NiModel *m = 0; double x[2] = {1.0, 2.0};\n\
           NiStatus s = ni_model_new(x, 0, 2, NI_FAMILY_NORMAL, 1.0, NI_INCREASING, NI_SCALE_DEFAULT, &m);\n\
           ni_model_free(m);\n\
           return s == NI_OK ? 0 : 1;\n\
         }\n",
    )
    .unwrap();
    for lang in ["c", "c++"] {
        let status = match Command::new("cc")
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang, "-I"])
            .arg(dir.join("include"))
            .arg(&tmp)
            .status()
        {
            Ok(s) => s,
            Err(_) => {
                eprintln!("no C compiler; skipping header check");
                return;
            }
        };
        assert!(status.success(), "header does not compile as {lang}");
    }
    let _ = std::fs::remove_file(tmp);
}
