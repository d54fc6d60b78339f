use std::ffi::CStr;
use std::ptr;

use vqthermo_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as std::ffi::c_char; 256];
    unsafe {
        vq_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn machine() -> VqMachine {
    VqMachine { omega1: 2.5, omega2: 0.5, temp1: 3.1, temp2: 1.2, rate1: 70.0, rate2: 50.0, coupling: 1.2 }
}

#[test]
fn virtual_temperature_roundtrip() {
    let mut t = 0.0;
    assert_eq!(unsafe { vq_virtual_temperature(2.5, 0.5, 3.1, 1.2, &mut t) }, VqStatus::Ok);
    assert!((t - 2.0 / (2.5 / 3.1 - 0.5 / 1.2)).abs() < 1e-12);
    assert_eq!(unsafe { vq_virtual_temperature(2.5, 0.5, 3.1, 1.2, ptr::null_mut()) }, VqStatus::NullPointer);
    assert_eq!(unsafe { vq_virtual_temperature(2.0, 2.0, 3.1, 1.2, &mut t) }, VqStatus::InvalidArgument);
    assert!(last_error().contains("degenerate"));
}

#[test]
fn virtual_qubit_and_rate() {
    let m = machine();
    let mut vq = VqVirtualQubit { gap: 0.0, pop_ground: 0.0, pop_excited: 0.0, norm: 0.0, vtemp: 0.0 };
    assert_eq!(unsafe { vq_virtual_qubit(&m, &mut vq) }, VqStatus::Ok);
    assert_eq!(vq.gap, 2.0);
    assert!((vq.pop_ground + vq.pop_excited - 1.0).abs() < 1e-15);
    let mut q = 0.0;
    assert_eq!(unsafe { vq_effective_rate(&m, &mut q) }, VqStatus::Ok);
    assert!((q - 2.0 * 1.44 * vq.norm / 120.0).abs() < 1e-15);
    assert_eq!(unsafe { vq_effective_rate(ptr::null(), &mut q) }, VqStatus::NullPointer);
}

#[test]
fn effrme_handle_lifecycle() {
    let energies = [0.0, 2.0, 3.0];
    let mut h: *mut VqEffRme = ptr::null_mut();
    unsafe {
        assert_eq!(vq_effrme_new(energies.as_ptr(), 3, &mut h), VqStatus::Ok);
        assert!(!h.is_null());
        let mut p = [0.0; 3];
        assert_eq!(vq_effrme_add_channel(h, 0, 1, 1.0, 0.3), VqStatus::Ok);
        assert_eq!(vq_effrme_steady_state(h, p.as_mut_ptr(), 3), VqStatus::Underdetermined);
        assert!(last_error().contains("not connected"));
        assert_eq!(vq_effrme_add_channel(h, 1, 2, 2.0, 0.4), VqStatus::Ok);
        assert_eq!(vq_effrme_add_channel(h, 2, 1, 2.0, 0.4), VqStatus::InvalidArgument);
        assert_eq!(vq_effrme_add_channel(h, 0, 1, 2.0, 1.5), VqStatus::InvalidArgument);
        assert_eq!(vq_effrme_steady_state(h, p.as_mut_ptr(), 2), VqStatus::BufferTooSmall);
        assert_eq!(vq_effrme_steady_state(h, p.as_mut_ptr(), 3), VqStatus::Ok);
        // a chain of reset channels is a product of the two-level ratios
        assert!((p[1] / p[0] - 0.3 / 0.7).abs() < 1e-12);
        assert!((p[2] / p[1] - 0.4 / 0.6).abs() < 1e-12);
        vq_effrme_free(h);
        vq_effrme_free(ptr::null_mut());
    }
}

#[test]
fn laser_ratio() {
    let cfg = VqLaserConfig {
        energies: [0.0, 2.0, 3.0],
        omega_b1: 4.5,
        omega_c1: 1.3,
        t_hot: 5.0,
        t_cold: 1.2,
        t_env: 7.2,
        q_env: 0.1,
        q_hot: 2.0,
        q_cold: 1.5,
        lossless: true,
    };
    let mut r = 0.0;
    assert_eq!(unsafe { vq_laser_inversion_ratio(&cfg, VqScheme::Typical as u32, &mut r) }, VqStatus::Ok);
    assert!((r - (-3.0f64 / 5.0 + 1.0 / 1.2).exp()).abs() < 1e-12);
    assert_eq!(unsafe { vq_laser_inversion_ratio(&cfg, VqScheme::Virtual as u32, &mut r) }, VqStatus::Ok);
    assert!((r - 3.94849).abs() < 1e-5);
    assert_eq!(unsafe { vq_laser_inversion_ratio(&cfg, 9, &mut r) }, VqStatus::InvalidArgument);
}

#[test]
fn error_message_truncates() {
    let mut t = 0.0;
    unsafe { vq_virtual_temperature(1.0, 2.0, 3.1, 1.2, &mut t) };
    let mut buf = [1 as std::ffi::c_char; 4];
    let full = unsafe { vq_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(full > 3);
    assert_eq!(buf[3], 0);
    assert_eq!(unsafe { vq_last_error_message(ptr::null_mut(), 0) }, full);
}

#[test]
fn header_declares_every_symbol() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/vqthermo.h")).unwrap();
    for sym in [
        "vq_last_error_message",
        "vq_virtual_temperature",
        "vq_virtual_qubit",
        "vq_effective_rate",
        "vq_laser_inversion_ratio",
        "vq_effrme_new",
        "vq_effrme_add_channel",
        "vq_effrme_steady_state",
        "vq_effrme_free",
        "typedef struct VqEffRme VqEffRme;",
        "VQ_STATUS_BUFFER_TOO_SMALL = 6",
    ] {
        assert!(header.contains(sym), "{sym}");
    }
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/vqthermo.h");
    let status = std::process::Command::new(std::env::var("CC").unwrap_or_else(|_| "cc".into()))
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", header])
        .status();
    match status {
        Ok(s) => assert!(s.success(), "header does not compile"),
        Err(e) => eprintln!("skipping header compile check: {e}"),
    }
}
