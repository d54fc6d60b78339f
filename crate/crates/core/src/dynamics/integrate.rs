//! Dormand–Prince 5(4) integration of `dρ/dt = L ρ` on the invariant
//! sector reachable from `ρ₀`.

use num_complex::Complex64;

use super::superop::{ReducedGenerator, Superoperator};
use crate::error::{Error, Result};
use crate::operator::{DensityMatrix, HilbertLayout};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Steps below `min_step · max(1, t)` abort with [`Error::StiffSystem`].
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-12, min_step: 1e-14, max_steps: 5_000_000 }
    }
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights minus fourth-order weights
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

struct Stepper<'a> {
    gen: &'a ReducedGenerator,
    opts: EvolveOptions,
    k: [Vec<Complex64>; 7],
    tmp: Vec<Complex64>,
    y_new: Vec<Complex64>,
    h: Option<f64>,
    fsal_valid: bool,
}

impl<'a> Stepper<'a> {
    fn new(gen: &'a ReducedGenerator, opts: EvolveOptions) -> Self {
        let m = gen.len();
        let z = vec![Complex64::new(0.0, 0.0); m];
        Self { gen, opts, k: std::array::from_fn(|_| z.clone()), tmp: z.clone(), y_new: z, h: None, fsal_valid: false }
    }

    fn initial_step(&self, y: &[Complex64], span: f64) -> f64 {
        let m = y.len().max(1) as f64;
        let sc = |i: usize| self.opts.atol + self.opts.rtol * y[i].norm();
        let d0 = (y.iter().enumerate().map(|(i, x)| (x.norm() / sc(i)).powi(2)).sum::<f64>() / m).sqrt();
        let d1 = (self.k[0].iter().enumerate().map(|(i, x)| (x.norm() / sc(i)).powi(2)).sum::<f64>() / m).sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0.min(span)
    }

    /// Advances `y` from `t` to `t_end`.
    fn run(&mut self, y: &mut [Complex64], mut t: f64, t_end: f64) -> Result<()> {
        let m = y.len();
        if !self.fsal_valid {
            self.gen.matvec(y, &mut self.k[0]);
            self.fsal_valid = true;
        }
        let mut h = match self.h {
            Some(h) => h,
            None => self.initial_step(y, t_end - t),
        };
        let mut steps = 0usize;
        while t < t_end {
            if steps >= self.opts.max_steps {
                return Err(Error::StiffSystem { step: h, time: t });
            }
            steps += 1;
            let last = t + h >= t_end;
            let h_step = if last { t_end - t } else { h };
            if h_step < self.opts.min_step * t_end.max(1.0) && !last {
                return Err(Error::StiffSystem { step: h_step, time: t });
            }
            for s in 1..7 {
                for i in 0..m {
                    let mut acc = y[i];
                    for (j, a) in A[s].iter().enumerate().take(s) {
                        if *a != 0.0 {
                            acc += self.k[j][i] * (h_step * a);
                        }
                    }
                    self.tmp[i] = acc;
                }
                self.gen.matvec(&self.tmp, &mut self.k[s]);
            }
            // the last stage row holds the fifth-order weights, so tmp is the new state
            self.y_new.copy_from_slice(&self.tmp);
            let mut err = 0.0;
            for i in 0..m {
                let mut e = Complex64::new(0.0, 0.0);
                for (s, w) in E.iter().enumerate() {
                    if *w != 0.0 {
                        e += self.k[s][i] * w;
                    }
                }
                let sc = self.opts.atol + self.opts.rtol * y[i].norm().max(self.y_new[i].norm());
                err += (e.norm() * h_step / sc).powi(2);
            }
            let err = (err / m.max(1) as f64).sqrt();
            if err <= 1.0 {
                t = if last { t_end } else { t + h_step };
                y.copy_from_slice(&self.y_new);
                self.k.swap(0, 6);
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last || factor < 1.0 {
                    h = h_step * factor;
                }
            } else {
                let factor = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.2, 1.0) } else { 0.2 };
                h = h_step * factor;
                if h < self.opts.min_step * t_end.max(1.0) {
                    return Err(Error::StiffSystem { step: h, time: t });
                }
            }
        }
        self.h = Some(h);
        Ok(())
    }
}

fn check_layout(gen: &Superoperator, rho0: &DensityMatrix) -> Result<HilbertLayout> {
    if rho0.dim() != gen.dim() {
        return Err(Error::DimensionMismatch { expected: gen.dim(), actual: rho0.dim() });
    }
    Ok(gen.layout().clone())
}

fn reduced_for(gen: &Superoperator, rho0: &DensityMatrix) -> Result<ReducedGenerator> {
    let s = rho0.matrix().as_slice();
    let seed: Vec<usize> = (0..s.len()).filter(|&i| s[i] != Complex64::new(0.0, 0.0)).collect();
    gen.restrict(&gen.closure(&seed))
}

/// `exp(L t) ρ₀`, symmetrised on output.
pub fn evolve(gen: &Superoperator, rho0: &DensityMatrix, t: f64, opts: &EvolveOptions) -> Result<DensityMatrix> {
    Ok(evolve_times(gen, rho0, &[t], opts)?.pop().expect("one time requested"))
}

/// States at each of the non-decreasing, non-negative `times`.
pub fn evolve_times(
    gen: &Superoperator,
    rho0: &DensityMatrix,
    times: &[f64],
    opts: &EvolveOptions,
) -> Result<Vec<DensityMatrix>> {
    let layout = check_layout(gen, rho0)?;
    if times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(Error::InvalidState("evolution times must be finite and non-negative".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidState("evolution times must be non-decreasing".into()));
    }
    let red = reduced_for(gen, rho0)?;
    let mut y: Vec<Complex64> = red.gather(rho0.matrix()).iter().copied().collect();
    let mut stepper = Stepper::new(&red, *opts);
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        if target > t {
            stepper.run(&mut y, t, target)?;
            t = target;
        }
        if t == 0.0 {
            out.push(rho0.clone());
        } else {
            out.push(DensityMatrix::from_hermitian_part(red.scatter(&y), layout.clone())?);
        }
    }
    Ok(out)
}
