//! C interface to the closed-form parts of vqthermo: virtual qubits,
//! effective reset master equations and the three-level laser.
//!
//! Every function returns a [`VqStatus`]. On failure the message is kept per
//! thread and can be copied out with [`vq_last_error_message`].

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use vqthermo::effrme::{steady_state_cramer, EffRmeSpec, ResetChannel};
use vqthermo::laser::{inversion_ratio, LaserConfig, Scheme};
use vqthermo::operator::PopPair;
use vqthermo::virtual_qubit::{effective_rate_qvir, virtual_qubit_of, virtual_temperature, TwoQubitMachine};
use vqthermo::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    EnergyConservation = 3,
    Underdetermined = 4,
    UndefinedQuantity = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VqMachine {
    pub omega1: f64,
    pub omega2: f64,
    pub temp1: f64,
    pub temp2: f64,
    pub rate1: f64,
    pub rate2: f64,
    pub coupling: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VqVirtualQubit {
    pub gap: f64,
    pub pop_ground: f64,
    pub pop_excited: f64,
    pub norm: f64,
    pub vtemp: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VqLaserConfig {
    pub energies: [f64; 3],
    pub omega_b1: f64,
    pub omega_c1: f64,
    pub t_hot: f64,
    pub t_cold: f64,
    pub t_env: f64,
    pub q_env: f64,
    pub q_hot: f64,
    pub q_cold: f64,
    pub lossless: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VqScheme {
    Typical = 0,
    Virtual = 1,
}

/// Opaque builder for an effective reset master equation.
pub struct VqEffRme {
    energies: Vec<f64>,
    channels: Vec<ResetChannel>,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> VqStatus {
    match err {
        Error::EnergyConservation(_) => VqStatus::EnergyConservation,
        Error::UnderdeterminedSteadyState(_) | Error::NonUniqueSteadyState { .. } => VqStatus::Underdetermined,
        Error::UndefinedVirtualQubit | Error::BosonicOccupationUndefined(_) => VqStatus::UndefinedQuantity,
        _ => VqStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (VqStatus, String)>) -> VqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            VqStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            VqStatus::Panic
        }
    }
}

fn lib<T>(r: vqthermo::Result<T>) -> Result<T, (VqStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (VqStatus, String) {
    (VqStatus::NullPointer, format!("{what} is null"))
}

fn machine(m: &VqMachine, gap_pair: (usize, usize)) -> Result<TwoQubitMachine, (VqStatus, String)> {
    lib(TwoQubitMachine::new(m.omega1, m.omega2, m.temp1, m.temp2, m.rate1, m.rate2, m.coupling, gap_pair))
}

/// Copies the last error message of this thread, NUL-terminated, into `buf`.
/// Returns the message length in bytes excluding the terminator; if that is
/// `>= len` the message was truncated.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn vq_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// `T_v = (Ω₁ − Ω₂)/(Ω₁/T₁ − Ω₂/T₂)`.
///
/// # Safety
/// `out` must be null or point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn vq_virtual_temperature(
    omega1: f64,
    omega2: f64,
    temp1: f64,
    temp2: f64,
    out: *mut f64,
) -> VqStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let m = lib(TwoQubitMachine::new(omega1, omega2, temp1, temp2, 1.0, 1.0, 0.0, (0, 1)))?;
        *out = lib(virtual_temperature(&m))?;
        Ok(())
    })
}

/// # Safety
/// `m` must be null or point to a valid `VqMachine`; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn vq_virtual_qubit(m: *const VqMachine, out: *mut VqVirtualQubit) -> VqStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| null("machine"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let vq = lib(virtual_qubit_of(&machine(m, (0, 1))?))?;
        *out = VqVirtualQubit {
            gap: vq.gap,
            pop_ground: vq.pop_ground,
            pop_excited: vq.pop_excited,
            norm: vq.norm,
            vtemp: vq.vtemp,
        };
        Ok(())
    })
}

/// Effective reset rate `2g²n/(rate₁ + rate₂)`.
///
/// # Safety
/// `m` must be null or point to a valid `VqMachine`; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn vq_effective_rate(m: *const VqMachine, out: *mut f64) -> VqStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| null("machine"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = lib(effective_rate_qvir(&machine(m, (0, 1))?))?;
        Ok(())
    })
}

/// Steady-state `p₁/p₀` of the three-level laser; `scheme` is a [`VqScheme`] value.
///
/// # Safety
/// `cfg` must be null or point to a valid `VqLaserConfig`; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn vq_laser_inversion_ratio(cfg: *const VqLaserConfig, scheme: u32, out: *mut f64) -> VqStatus {
    guard(|| {
        let c = cfg.as_ref().ok_or_else(|| null("config"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let cfg = LaserConfig {
            energies: c.energies,
            omega_b1: c.omega_b1,
            omega_c1: c.omega_c1,
            t_hot: c.t_hot,
            t_cold: c.t_cold,
            t_env: c.t_env,
            q_env: c.q_env,
            q_hot: c.q_hot,
            q_cold: c.q_cold,
            lossless: c.lossless,
        };
        let scheme = match scheme {
            s if s == VqScheme::Typical as u32 => Scheme::Typical,
            s if s == VqScheme::Virtual as u32 => Scheme::Virtual,
            s => return Err((VqStatus::InvalidArgument, format!("unknown scheme {s}"))),
        };
        *out = lib(inversion_ratio(&cfg, scheme))?;
        Ok(())
    })
}

/// Starts an effective model on `n` levels with the given energies.
///
/// # Safety
/// `energies` must be null or valid for `n` reads; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn vq_effrme_new(energies: *const f64, n: usize, out: *mut *mut VqEffRme) -> VqStatus {
    guard(|| {
        if energies.is_null() {
            return Err(null("energies"));
        }
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let energies = std::slice::from_raw_parts(energies, n).to_vec();
        lib(EffRmeSpec::new(energies.clone(), Vec::new()))?;
        *out = Box::into_raw(Box::new(VqEffRme { energies, channels: Vec::new() }));
        Ok(())
    })
}

/// Adds a reset channel on levels `(k, l)` towards the populations
/// `(1 − pop_excited, pop_excited)`.
///
/// # Safety
/// `h` must be null or a handle from [`vq_effrme_new`] that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn vq_effrme_add_channel(
    h: *mut VqEffRme,
    k: usize,
    l: usize,
    rate: f64,
    pop_excited: f64,
) -> VqStatus {
    guard(|| {
        let h = h.as_mut().ok_or_else(|| null("handle"))?;
        if l >= h.energies.len() {
            return Err((VqStatus::InvalidArgument, format!("level {l} out of range")));
        }
        if !(0.0..=1.0).contains(&pop_excited) {
            return Err((VqStatus::InvalidArgument, format!("pop_excited {pop_excited} outside [0, 1]")));
        }
        h.channels.push(lib(ResetChannel::new((k, l), rate, PopPair::from_excited(pop_excited)))?);
        Ok(())
    })
}

/// Writes the steady-state populations into `out[0..len]`; `len` must equal
/// the number of levels.
///
/// # Safety
/// `h` must be null or a live handle; `out` must be null or valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn vq_effrme_steady_state(h: *const VqEffRme, out: *mut f64, len: usize) -> VqStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null("handle"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let n = h.energies.len();
        if len < n {
            return Err((VqStatus::BufferTooSmall, format!("need {n} entries, got {len}")));
        }
        let spec = lib(EffRmeSpec::new(h.energies.clone(), h.channels.clone()))?;
        let p = lib(steady_state_cramer(&spec))?;
        std::slice::from_raw_parts_mut(out, n).copy_from_slice(p.probs());
        Ok(())
    })
}

/// # Safety
/// `h` must be null or a handle from [`vq_effrme_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vq_effrme_free(h: *mut VqEffRme) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}
