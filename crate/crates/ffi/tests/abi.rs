use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use confhor_ffi::*;

fn new_entry(metric: ConfhorMetric, mass: f64, charge: f64) -> *mut ConfhorEntry {
    let mut e = ptr::null_mut();
    let st = unsafe { confhor_entry_new(metric, mass, charge, 0.5, 0.1, &mut e) };
    assert_eq!(st, ConfhorStatus::Ok);
    assert!(!e.is_null());
    e
}

#[test]
fn mass_and_horizon_round_trip() {
    let e = new_entry(ConfhorMetric::Schwarzschild, 1.0, 0.0);
    let w1: f64 = 0.7;
    let mut lx = 0.0;
    assert_eq!(
        unsafe { confhor_horizon_log(e, w1, 1.0, &mut lx) },
        ConfhorStatus::Ok
    );
    let mut above = ConfhorMass::default();
    let mut below = ConfhorMass::default();
    unsafe {
        assert_eq!(
            confhor_mass(e, [(lx + 1e-3).exp(), w1, 1.0, 0.4].as_ptr(), &mut above),
            ConfhorStatus::Ok
        );
        assert_eq!(
            confhor_mass(e, [(lx - 1e-3).exp(), w1, 1.0, 0.4].as_ptr(), &mut below),
            ConfhorStatus::Ok
        );
        confhor_entry_free(e);
    }
    assert!(above.m < 0.0 && below.m > 0.0, "{above:?} {below:?}");
}

#[test]
fn errors_carry_codes_and_messages() {
    let mut e = ptr::null_mut();
    let st = unsafe {
        confhor_entry_new(
            ConfhorMetric::ReissnerNordstrom,
            1.0,
            f64::NAN,
            0.0,
            0.0,
            &mut e,
        )
    };
    assert_eq!(st, ConfhorStatus::InvalidParameter);
    assert!(e.is_null());
    let msg = unsafe { CStr::from_ptr(confhor_last_error()) }
        .to_str()
        .unwrap();
    assert!(!msg.is_empty());

    let e = new_entry(ConfhorMetric::Roberts, 1.0, 0.0);
    let mut m = ConfhorMass::default();
    assert_eq!(
        unsafe { confhor_mass(e, [2.0, 0.5, 1.0, 0.0].as_ptr(), &mut m) },
        ConfhorStatus::OutOfRange
    );
    assert_eq!(
        unsafe { confhor_mass(e, ptr::null(), &mut m) },
        ConfhorStatus::NullPointer
    );
    assert_eq!(
        unsafe { confhor_mass(ptr::null(), [0.5; 4].as_ptr(), &mut m) },
        ConfhorStatus::NullPointer
    );
    unsafe {
        confhor_entry_free(e);
        confhor_entry_free(ptr::null_mut());
    }
}

#[test]
fn verdicts_through_the_abi() {
    for (metric, mass, charge, want) in [
        (
            ConfhorMetric::ReissnerNordstrom,
            1.0,
            2.0,
            ConfhorOutcome::NotNaked,
        ),
        (
            ConfhorMetric::ReissnerNordstrom,
            2.0,
            1.0,
            ConfhorOutcome::Naked,
        ),
    ] {
        let e = new_entry(metric, mass, charge);
        let mut got = ConfhorOutcome::Inconclusive;
        assert_eq!(
            unsafe { confhor_naked_scan(e, &mut got) },
            ConfhorStatus::Ok
        );
        assert_eq!(got, want);
        unsafe { confhor_entry_free(e) };
    }
}

#[test]
fn penrose_summary() {
    let e = new_entry(ConfhorMetric::Synthetic, 0.0, 0.0);
    let mut b = ConfhorBound::default();
    assert_eq!(unsafe { confhor_penrose(e, 12, &mut b) }, ConfhorStatus::Ok);
    assert!(b.euler_residual < 1e-5);
    assert!(b.m_sq < 0.0 && !b.mass_converged);
    unsafe { confhor_entry_free(e) };
}

/// Compiles the C smoke program against the generated header and static
/// library.
#[test]
fn c_program_links_and_runs() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler on PATH, skipping");
        return;
    };
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let profile_dir = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let lib = profile_dir.join("libconfhor_ffi.a");
    assert!(lib.exists(), "{} missing", lib.display());
    let exe = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("confhor_smoke");
    let status = Command::new(cc)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok())
        .ok_or(())
}
