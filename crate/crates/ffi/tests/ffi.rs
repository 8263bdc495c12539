use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::path::Path;
use std::process::Command;
use std::ptr;

use mvtsp::instances::{gen_metric_mvtsp, GeneratorConfig};
use mvtsp::mvtsp::tour_cost;
use mvtsp::oracles::{exact_mvtsp, OracleBudget};
use mvtsp::rational::format_rational;
use mvtsp_ffi::*;

unsafe fn take_string(p: *mut c_char) -> String {
    assert!(!p.is_null());
    let s = CStr::from_ptr(p).to_str().unwrap().to_string();
    mvtsp_string_free(p);
    s
}

fn last_error() -> String {
    unsafe { take_string(mvtsp_last_error_message()) }
}

unsafe fn generate(seed: u64, n: u32, r_max: i64) -> *mut MvtspInstance {
    let mut inst = ptr::null_mut();
    assert_eq!(mvtsp_instance_generate(seed, n, r_max, &mut inst), MvtspStatus::Ok);
    inst
}

#[test]
fn generate_solve_check() {
    unsafe {
        for seed in 0..5 {
            let inst = generate(seed, 4, 3);
            for alg in [MvtspAlgorithm::Apx15, MvtspAlgorithm::Apx25, MvtspAlgorithm::Exact] {
                let mut sol = ptr::null_mut();
                assert_eq!(mvtsp_solve(inst, alg, &mut sol), MvtspStatus::Ok);
                let mut ok = false;
                assert_eq!(mvtsp_solution_check(inst, sol, &mut ok), MvtspStatus::Ok);
                assert!(ok);
                mvtsp_solution_free(sol);
            }
            mvtsp_instance_free(inst);
        }
    }
}

#[test]
fn exact_cost_matches_library() {
    unsafe {
        let inst = generate(11, 4, 2);
        let mut sol = ptr::null_mut();
        assert_eq!(mvtsp_solve(inst, MvtspAlgorithm::Exact, &mut sol), MvtspStatus::Ok);
        let mut s = ptr::null_mut();
        assert_eq!(mvtsp_solution_cost(sol, &mut s), MvtspStatus::Ok);
        let core = gen_metric_mvtsp(&GeneratorConfig::new(11, 4, 2)).unwrap();
        let opt = exact_mvtsp(&core, &OracleBudget::default()).unwrap();
        assert_eq!(take_string(s), format_rational(&tour_cost(&core, &opt)));
        let mut k = -1;
        assert_eq!(mvtsp_solution_edge(sol, 0, 1, &mut k), MvtspStatus::Ok);
        assert_eq!(k, opt.get(0, 1));
        mvtsp_solution_free(sol);
        mvtsp_instance_free(inst);
    }
}

#[test]
fn json_round_trip_keeps_digest() {
    unsafe {
        let inst = generate(3, 3, 4);
        let (mut json, mut digest) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(mvtsp_instance_to_json(inst, &mut json), MvtspStatus::Ok);
        assert_eq!(mvtsp_instance_digest(inst, &mut digest), MvtspStatus::Ok);
        let json = take_string(json);
        let digest = take_string(digest);
        let c = CString::new(json).unwrap();
        let mut back = ptr::null_mut();
        assert_eq!(mvtsp_instance_from_json(c.as_ptr(), &mut back), MvtspStatus::Ok);
        let mut d2 = ptr::null_mut();
        assert_eq!(mvtsp_instance_digest(back, &mut d2), MvtspStatus::Ok);
        assert_eq!(take_string(d2), digest);

        // A solution serialized for one handle parses against the other.
        let mut sol = ptr::null_mut();
        assert_eq!(mvtsp_solve(inst, MvtspAlgorithm::Apx15, &mut sol), MvtspStatus::Ok);
        let mut sj = ptr::null_mut();
        assert_eq!(mvtsp_solution_to_json(sol, &mut sj), MvtspStatus::Ok);
        let sj = CString::new(take_string(sj)).unwrap();
        let mut sol2 = ptr::null_mut();
        assert_eq!(mvtsp_solution_from_json(back, sj.as_ptr(), &mut sol2), MvtspStatus::Ok);
        let mut ok = false;
        assert_eq!(mvtsp_solution_check(back, sol2, &mut ok), MvtspStatus::Ok);
        assert!(ok);
        for h in [sol, sol2] {
            mvtsp_solution_free(h);
        }
        mvtsp_instance_free(inst);
        mvtsp_instance_free(back);
    }
}

#[test]
fn bdgpe_rounding_through_handles() {
    unsafe {
        for regime in [MvtspRegime::Both, MvtspRegime::Lower, MvtspRegime::Upper] {
            let mut inst = ptr::null_mut();
            assert_eq!(mvtsp_bdgpe_generate(5, 4, regime, &mut inst), MvtspStatus::Ok);
            let mut sol = ptr::null_mut();
            assert_eq!(mvtsp_solve(inst, MvtspAlgorithm::Bdgpe, &mut sol), MvtspStatus::Ok);
            let mut ok = false;
            assert_eq!(mvtsp_solution_check(inst, sol, &mut ok), MvtspStatus::Ok);
            assert!(ok);
            let mut k = 0;
            assert_eq!(mvtsp_solution_edge(sol, 0, 0, &mut k), MvtspStatus::InvalidArgument);
            mvtsp_solution_free(sol);
            mvtsp_instance_free(inst);
        }
    }
}

#[test]
fn error_codes() {
    unsafe {
        let mut inst = ptr::null_mut();
        assert_eq!(mvtsp_instance_from_json(ptr::null(), &mut inst), MvtspStatus::NullPointer);
        assert!(last_error().contains("json"));

        let bad = CString::new("{\"kind\":\"nope\"}").unwrap();
        assert_eq!(mvtsp_instance_from_json(bad.as_ptr(), &mut inst), MvtspStatus::Parse);
        assert!(last_error().contains("nope"));

        assert_eq!(mvtsp_instance_generate(0, 0, 3, &mut inst), MvtspStatus::InvalidArgument);
        assert_eq!(mvtsp_bdgpe_generate(0, 9, MvtspRegime::Both, &mut inst), MvtspStatus::InvalidArgument);

        let big = generate(1, 7, 2);
        let mut sol = ptr::null_mut();
        assert_eq!(mvtsp_solve(big, MvtspAlgorithm::Exact, &mut sol), MvtspStatus::BudgetExceeded);
        assert_eq!(mvtsp_solve(big, MvtspAlgorithm::Apx15, &mut sol), MvtspStatus::BudgetExceeded);
        assert_eq!(mvtsp_solve(big, MvtspAlgorithm::Bdgpe, &mut sol), MvtspStatus::InvalidArgument);
        assert!(sol.is_null());

        // A solution for a different instance is rejected.
        let a = generate(1, 3, 2);
        let b = generate(2, 3, 2);
        assert_eq!(mvtsp_solve(a, MvtspAlgorithm::Apx25, &mut sol), MvtspStatus::Ok);
        let mut ok = true;
        assert_eq!(mvtsp_solution_check(b, sol, &mut ok), MvtspStatus::InvalidArgument);
        assert!(last_error().contains("different instance"));

        assert_eq!(mvtsp_solution_check(a, sol, &mut ok), MvtspStatus::Ok);
        assert!(mvtsp_last_error_message().is_null());

        mvtsp_solution_free(sol);
        for h in [big, a, b] {
            mvtsp_instance_free(h);
        }
        mvtsp_instance_free(ptr::null_mut());
        mvtsp_string_free(ptr::null_mut());
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(mvtsp_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/mvtsp.h")).unwrap();
    let src = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    let exported: Vec<&str> = src
        .lines()
        .filter_map(|l| l.trim().strip_prefix("pub unsafe extern \"C\" fn ").or_else(|| l.trim().strip_prefix("pub extern \"C\" fn ")))
        .map(|l| l.split('(').next().unwrap())
        .collect();
    assert!(exported.len() >= 15);
    for name in exported {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    for ty in ["typedef struct MvtspInstance MvtspInstance;", "typedef struct MvtspSolution MvtspSolution;", "MVTSP_STATUS_OK = 0"] {
        assert!(header.contains(ty), "{ty} missing");
    }
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/mvtsp.h");
    let dir = tempfile::tempdir().unwrap();
    let main = dir.path().join("use_header.c");
    std::fs::write(
        &main,
        format!(
            "#include \"{}\"\nint main(void) {{ MvtspInstance *i = 0; MvtspStatus s = MVTSP_STATUS_OK; (void)i; return (int)s; }}\n",
            header.display()
        ),
    )
    .unwrap();
    let Ok(out) = Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"]).arg(&main).output() else {
        eprintln!("no C compiler available, skipping");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
