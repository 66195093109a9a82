use std::ffi::{CStr, CString};
use std::ptr;

use splitmin_ffi::*;

const G1: &str = "FGM 1\nvars 2\ncard 2 2\nphi 0 0 1\nphi 1 0 1\nfactor 2 0 1 0 0 0 1\n";
const G2: &str = "FGM 1\nvars 3\ncard 2 2 2\n\
                  factor 2 0 1 1 0 0 1\nfactor 2 1 2 1 0 0 1\nfactor 2 0 2 1 0 0 1\n";

fn parse(text: &str) -> *mut SmGraph {
    let c = CString::new(text).unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { sm_graph_parse(c.as_ptr(), &mut g) }, SmStatus::Ok);
    g
}

fn last_error() -> String {
    let p = sm_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

#[test]
fn solve_parsed_model() {
    unsafe {
        let g = parse(G1);
        assert_eq!(sm_graph_num_vars(g), 2);
        assert_eq!(sm_graph_num_factors(g), 1);
        let mut c = ptr::null_mut();
        assert_eq!(sm_params_uniform(g, &mut c), SmStatus::Ok);
        let mut opts = sm_solve_options_default();
        opts.schedule = 1;
        let mut r = ptr::null_mut();
        assert_eq!(sm_solve(g, c, &opts, &mut r), SmStatus::Ok);
        assert_eq!(sm_report_status(r), SmRunStatus::Converged);
        assert!(sm_report_unique(r));
        let mut x = [9usize; 2];
        let mut value = f64::NAN;
        assert_eq!(sm_report_estimate(r, x.as_mut_ptr(), 2, &mut value), SmStatus::Ok);
        assert_eq!((x, value), ([0, 0], 0.0));
        let mut lb = f64::NAN;
        assert_eq!(sm_report_lower_bound(r, &mut lb), SmStatus::Ok);
        assert!(lb.abs() < 1e-9);
        let mut b = [0.0; 2];
        assert_eq!(sm_report_var_belief(r, 0, b.as_mut_ptr(), 2), SmStatus::Ok);
        assert!(b[0] < b[1]);
        sm_report_free(r);
        sm_params_free(c);
        sm_graph_free(g);
    }
}

#[test]
fn build_graph_and_use_oracle() {
    unsafe {
        let cards = [2usize, 2, 2];
        let mut g = ptr::null_mut();
        assert_eq!(sm_graph_new(cards.as_ptr(), 3, &mut g), SmStatus::Ok);
        let eq = [1.0, 0.0, 0.0, 1.0];
        for scope in [[0usize, 1], [1, 2], [0, 2]] {
            let mut idx = usize::MAX;
            assert_eq!(
                sm_graph_add_factor(g, scope.as_ptr(), 2, eq.as_ptr(), 4, &mut idx),
                SmStatus::Ok
            );
            assert!(idx < 3);
        }
        let mut value = 0.0;
        let mut x = [0usize; 3];
        let mut count = 0;
        assert_eq!(
            sm_oracle_minimize(g, 1 << 10, &mut value, x.as_mut_ptr(), 3, &mut count),
            SmStatus::Ok
        );
        assert_eq!((value, count), (1.0, 6));
        let mut f = 0.0;
        assert_eq!(sm_graph_evaluate(g, x.as_ptr(), 3, &mut f), SmStatus::Ok);
        assert_eq!(f, 1.0);
        assert_eq!(
            sm_oracle_minimize(g, 4, &mut value, x.as_mut_ptr(), 3, &mut count),
            SmStatus::CapExceeded
        );
        sm_graph_free(g);
    }
}

#[test]
fn classification_and_unavailable_outputs() {
    unsafe {
        let g = parse(G2);
        let mut c = ptr::null_mut();
        assert_eq!(sm_params_ones(g, &mut c), SmStatus::Ok);
        let mut class = SmClass::None;
        assert_eq!(sm_params_classify(c, g, &mut class), SmStatus::Ok);
        assert_eq!(class, SmClass::LocalOnly);

        let mut r = ptr::null_mut();
        assert_eq!(sm_solve(g, c, ptr::null(), &mut r), SmStatus::Ok);
        let mut lb = 0.0;
        assert_eq!(sm_report_lower_bound(r, &mut lb), SmStatus::Unavailable);
        let mut x = [0usize; 3];
        assert_eq!(
            sm_report_estimate(r, x.as_mut_ptr(), 3, ptr::null_mut()),
            SmStatus::Unavailable
        );
        sm_report_free(r);

        for a in 0..3 {
            assert_eq!(sm_params_set_factor(c, a, 0.5), SmStatus::Ok);
        }
        assert_eq!(sm_params_classify(c, g, &mut class), SmStatus::Ok);
        assert_eq!(class, SmClass::GlobalSign);
        sm_params_free(c);
        sm_graph_free(g);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let bad = CString::new("FGM 1\nvars 2\ncard 2 2\nfactor 2 0 1 0 0 0\n").unwrap();
        let mut g = ptr::null_mut();
        assert_eq!(sm_graph_parse(bad.as_ptr(), &mut g), SmStatus::ParseError);
        assert!(g.is_null());
        assert!(last_error().contains("line 4"));

        assert_eq!(sm_graph_parse(ptr::null(), &mut g), SmStatus::NullPointer);

        let g = parse(G1);
        let text = CString::new("cvar 1 0\n").unwrap();
        let mut c = ptr::null_mut();
        assert_eq!(sm_params_parse(g, text.as_ptr(), &mut c), SmStatus::ParseError);
        assert_eq!(sm_params_ones(g, &mut c), SmStatus::Ok);
        assert_eq!(sm_params_set_var(c, 7, 1.0), SmStatus::InvalidArgument);
        assert_eq!(sm_params_set_var(c, 0, 0.0), SmStatus::Ok);
        let mut r = ptr::null_mut();
        assert_eq!(sm_solve(g, c, ptr::null(), &mut r), SmStatus::InvalidArgument);
        assert!(r.is_null());

        let mut opts = sm_solve_options_default();
        opts.schedule = 5;
        assert_eq!(sm_params_set_var(c, 0, 1.0), SmStatus::Ok);
        assert_eq!(sm_solve(g, c, &opts, &mut r), SmStatus::InvalidArgument);

        let mut x = [0usize; 1];
        opts.schedule = 0;
        assert_eq!(sm_solve(g, c, &opts, &mut r), SmStatus::Ok);
        assert_eq!(
            sm_report_estimate(r, x.as_mut_ptr(), 1, ptr::null_mut()),
            SmStatus::BufferTooSmall
        );
        sm_report_free(r);
        sm_params_free(c);
        sm_graph_free(g);
        sm_graph_free(ptr::null_mut());
    }
}

#[test]
fn infinite_message_still_yields_report() {
    unsafe {
        let g = parse("FGM 1\nvars 2\ncard 2 2\nfactor 2 0 1 0 0 inf inf\n");
        let mut c = ptr::null_mut();
        assert_eq!(sm_params_ones(g, &mut c), SmStatus::Ok);
        let mut r = ptr::null_mut();
        assert_eq!(sm_solve(g, c, ptr::null(), &mut r), SmStatus::Ok);
        assert_eq!(sm_report_status(r), SmRunStatus::InfiniteMessage);
        sm_report_free(r);
        sm_params_free(c);
        sm_graph_free(g);
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/splitmin.h")).unwrap();
    for name in [
        "typedef struct SmGraph SmGraph;",
        "SM_STATUS_OK = 0",
        "SmStatus sm_graph_parse(",
        "SmStatus sm_solve(",
        "void sm_report_free(",
        "const char *sm_last_error(",
        "SmSolveOptions sm_solve_options_default(",
    ] {
        assert!(header.contains(name), "missing `{name}`");
    }
}

#[test]
#[ignore = "needs a C compiler on PATH"]
fn c_client_links_and_runs() {
    let manifest = env!("CARGO_MANIFEST_DIR");
    let exe = std::env::current_exe().unwrap();
    let target = exe.parent().and_then(|d| d.parent()).unwrap();
    let out = std::env::temp_dir().join(format!("splitmin_smoke_{}", std::process::id()));
    let status = std::process::Command::new("cc")
        .arg(format!("{manifest}/examples/smoke.c"))
        .arg(format!("-I{manifest}/include"))
        .arg(target.join("libsplitmin_ffi.a"))
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let run = std::process::Command::new(&out).output().unwrap();
    let _ = std::fs::remove_file(&out);
    assert!(run.status.success());
    assert_eq!(
        String::from_utf8_lossy(&run.stdout),
        "status 0 estimate 0 0 objective 0\n"
    );
}
