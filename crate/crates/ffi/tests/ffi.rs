use std::ffi::{c_char, CString};
use std::path::PathBuf;
use std::ptr;

use ftform_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0u8; 512];
    let n = unsafe { ft_last_error_message(buf.as_mut_ptr() as *mut c_char, buf.len()) };
    String::from_utf8_lossy(&buf[..n.min(511)]).into_owned()
}

#[test]
fn chain_certificate_through_handles() {
    let text = CString::new("0 1 1\n1 2 1\n").unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { ft_graph_parse(text.as_ptr(), &mut g) }, FtStatus::Ok);
    assert_eq!(unsafe { ft_graph_followers(g) }, 2);
    let mut pi = [0.0; 2];
    let mut lam = 0.0;
    assert_eq!(unsafe { ft_graph_certificate(g, pi.as_mut_ptr(), 2, &mut lam) }, FtStatus::Ok);
    assert!((pi[0] - 2.0).abs() < 1e-12 && (pi[1] - 1.0).abs() < 1e-12);
    assert!((lam - (1.5 - 0.5 * 2f64.sqrt())).abs() < 1e-9);
    assert_eq!(unsafe { ft_graph_certificate(g, pi.as_mut_ptr(), 1, &mut lam) }, FtStatus::BufferTooSmall);
    unsafe { ft_graph_free(g) };
}

#[test]
fn unrooted_graph_reports_message() {
    let text = CString::new("1 2 1\n").unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { ft_graph_parse(text.as_ptr(), &mut g) }, FtStatus::Ok);
    let mut pi = [0.0; 2];
    let mut lam = 0.0;
    assert_eq!(unsafe { ft_graph_certificate(g, pi.as_mut_ptr(), 2, &mut lam) }, FtStatus::Graph);
    assert!(last_error().contains("spanning tree"));
    unsafe { ft_graph_free(g) };
}

#[test]
fn null_and_unknown_inputs() {
    let mut sc = ptr::null_mut();
    assert_eq!(unsafe { ft_scenario_preset(ptr::null(), &mut sc) }, FtStatus::NullPointer);
    let name = CString::new("paper-9z").unwrap();
    assert_eq!(unsafe { ft_scenario_preset(name.as_ptr(), &mut sc) }, FtStatus::Validation);
    assert!(last_error().contains("paper-9z"));
    assert!(sc.is_null());
    let bad = [0xffu8, 0];
    assert_eq!(unsafe { ft_scenario_preset(bad.as_ptr() as *const c_char, &mut sc) }, FtStatus::InvalidUtf8);
    unsafe {
        ft_scenario_free(ptr::null_mut());
        ft_run_free(ptr::null_mut());
        ft_graph_free(ptr::null_mut());
    }
    assert_eq!(unsafe { ft_run_samples(ptr::null()) }, 0);
}

#[test]
fn short_task_run_and_channels() {
    let name = CString::new("paper-5b").unwrap();
    let mut sc = ptr::null_mut();
    assert_eq!(unsafe { ft_scenario_preset(name.as_ptr(), &mut sc) }, FtStatus::Ok);
    assert_eq!(unsafe { ft_scenario_set_t_end(sc, 0.05) }, FtStatus::Ok);
    assert_eq!(unsafe { ft_scenario_set_step(sc, -1.0) }, FtStatus::Validation);

    let mut run = ptr::null_mut();
    assert_eq!(unsafe { ft_run(sc, &mut run) }, FtStatus::Ok);
    let mut status = FtRunStatus::Converged;
    assert_eq!(unsafe { ft_run_status(run, &mut status) }, FtStatus::Ok);
    assert_ne!(status, FtRunStatus::Diverged);

    let n = unsafe { ft_run_samples(run) };
    assert!(n > 10);
    let mut written = 0;
    let t = CString::new("t").unwrap();
    assert_eq!(unsafe { ft_run_channel(run, t.as_ptr(), ptr::null_mut(), 0, &mut written) }, FtStatus::BufferTooSmall);
    assert_eq!(written, n);
    let mut times = vec![0.0; n];
    assert_eq!(unsafe { ft_run_channel(run, t.as_ptr(), times.as_mut_ptr(), n, &mut written) }, FtStatus::Ok);
    assert_eq!(times[0], 0.0);
    assert!((times[n - 1] - 0.05).abs() < 1e-9);
    let missing = CString::new("agent9.nothing").unwrap();
    assert_eq!(
        unsafe { ft_run_channel(run, missing.as_ptr(), times.as_mut_ptr(), n, &mut written) },
        FtStatus::NotFound
    );

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("trace.csv").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { ft_run_export_csv(run, path.as_ptr()) }, FtStatus::Ok);
    let csv = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(csv.starts_with("t,"));

    unsafe {
        ft_run_free(run);
        ft_scenario_free(sc);
    }
}

#[test]
fn nussbaum_values() {
    assert_eq!(ft_nussbaum(0.0), 2.0);
    assert!((ft_nussbaum(2.0) - (1.0 - 4f64.exp())).abs() < 1e-9);
}

#[test]
fn header_declares_the_api_and_parses_as_c() {
    let header = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/ftform.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in [
        "ft_last_error_message",
        "ft_nussbaum",
        "ft_graph_parse",
        "ft_graph_certificate",
        "ft_graph_free",
        "ft_scenario_preset",
        "ft_scenario_load",
        "ft_run",
        "ft_run_channel",
        "ft_run_export_csv",
        "ft_run_free",
        "typedef struct FtRun FtRun",
    ] {
        assert!(text.contains(f), "header lacks {f}");
    }
    // a C compiler is optional in the build environment
    let Ok(out) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"])
        .arg(&header)
        .output()
    else {
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
