//! Fits coupling and preparation efficiencies to target gate averages.
//!
//! Any noise acting only at preparation and detection pairs input mode `i`
//! with output mode `X^n i`; to first order each gate average is then the
//! mean over modes, the same for X, X^2 and X^dag. Gate-to-gate differences
//! come only from the second-order pairing of `f_i` with `eta_{X^n i}`, so
//! distinct targets are met in their mean, not individually.

use super::{detection_probabilities, NoiseModel};
use crate::circuit::{compile, GateKind, Setup};
use crate::error::{Error, Result};
use crate::gates;
use crate::hilbert::{BasisSpec, OpticalOperator, PureState, LOGICAL_DIM, LOGICAL_OAM};

/// Golden-section tolerance on a single parameter.
const LINE_TOL: f64 = 1e-10;
/// A sweep improving the objective by less than this ends the fit.
const SWEEP_TOL: f64 = 1e-9;
const MAX_SWEEPS: usize = 500;

/// Outcome of [`calibrate_noise`].
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub noise: NoiseModel,
    /// Expected averages for X, X^2, X^dag under `noise`.
    pub averages: [f64; 3],
    /// Sum of squared deviations from the targets.
    pub residual: f64,
    pub sweeps: usize,
}

/// Gate blocks on the bare qudit plus the computational basis.
struct Table1Model {
    ops: Vec<(GateKind, OpticalOperator)>,
    states: Vec<PureState>,
}

impl Table1Model {
    fn new() -> Result<Self> {
        let setup = Setup::single();
        let domain = setup.logical_domain()?;
        let ops = GateKind::ALL
            .iter()
            .map(|&kind| {
                let block = compile(&kind.circuit(&setup)?)?.restrict(&domain)?;
                Ok((kind, OpticalOperator::unitary(BasisSpec::logical(), block)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let states = gates::basis(1)?.into_iter().map(|s| s.state).collect();
        Ok(Self { ops, states })
    }

    /// `P(i, expected(i))` for each gate and computational input.
    fn expected_mode(&self, noise: &NoiseModel) -> Result<[[f64; LOGICAL_DIM]; 3]> {
        let mut out = [[0.0; LOGICAL_DIM]; 3];
        for (row, (kind, op)) in out.iter_mut().zip(&self.ops) {
            for (i, input) in self.states.iter().enumerate() {
                let p = detection_probabilities(op, input, &self.states, noise)?;
                row[i] = p[kind.expected_index(i)] / p.iter().sum::<f64>();
            }
        }
        Ok(out)
    }

    fn averages(&self, noise: &NoiseModel) -> Result<[f64; 3]> {
        Ok(self.expected_mode(noise)?.map(|row| row.iter().sum::<f64>() / LOGICAL_DIM as f64))
    }
}

/// Expected X, X^2, X^dag averages on computational inputs, no accidentals.
pub fn expected_averages(noise: &NoiseModel) -> Result<[f64; 3]> {
    Table1Model::new()?.averages(noise)
}

fn check_target(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 && t <= 1.0 {
        Ok(())
    } else {
        Err(Error::UnattainableTarget(t))
    }
}

fn model_from(x: &[f64; 2 * LOGICAL_DIM]) -> NoiseModel {
    NoiseModel {
        coupling_efficiency: LOGICAL_OAM.iter().copied().zip(x[..LOGICAL_DIM].iter().copied()).collect(),
        preparation_fidelity: LOGICAL_OAM.iter().copied().zip(x[LOGICAL_DIM..].iter().copied()).collect(),
        ..NoiseModel::ideal()
    }
}

/// Minimizes `f` on `[lo, hi]`.
fn golden_section(mut lo: f64, mut hi: f64, mut f: impl FnMut(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    while hi - lo > LINE_TOL {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a)?;
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b)?;
        }
    }
    Ok(if fa <= fb { (a, fa) } else { (b, fb) })
}

/// Fits `eta_l` and `f_l` to target averages for X, X^2 and X^dag.
///
/// Starts from the uniform coupling that matches the mean target and runs
/// coordinate descent over the eight efficiencies, each bounded to `[0, 1]`.
/// The fit is under-determined; the returned model is the one closest to
/// uniform that the descent reaches.
pub fn calibrate_noise(targets: [f64; 3]) -> Result<Calibration> {
    for &t in &targets {
        check_target(t)?;
    }
    let model = Table1Model::new()?;
    let objective = |x: &[f64; 2 * LOGICAL_DIM]| -> Result<f64> {
        let avg = model.averages(&model_from(x))?;
        Ok(avg.iter().zip(&targets).map(|(a, t)| (a - t).powi(2)).sum())
    };
    let mean = targets.iter().sum::<f64>() / targets.len() as f64;
    let mut x = [1.0; 2 * LOGICAL_DIM];
    x[..LOGICAL_DIM].fill(mean);
    let mut best = objective(&x)?;
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        let start = best;
        for k in 0..x.len() {
            let (v, fv) = golden_section(0.0, 1.0, |v| {
                let mut y = x;
                y[k] = v;
                objective(&y)
            })?;
            if fv < best {
                x[k] = v;
                best = fv;
            }
        }
        if start - best < SWEEP_TOL {
            break;
        }
    }
    let noise = model_from(&x);
    Ok(Calibration {
        averages: model.averages(&noise)?,
        residual: best,
        noise,
        sweeps,
    })
}

/// One coupling efficiency shared by every mode, chosen so the expected X
/// average equals `target`.
pub fn calibrate_uniform_coupling(target: f64) -> Result<NoiseModel> {
    check_target(target)?;
    let model = Table1Model::new()?;
    let avg = |eta: f64| -> Result<f64> { Ok(model.averages(&NoiseModel::uniform_coupling(eta))?[0]) };
    let (mut lo, mut hi) = (0.0, 1.0);
    if avg(lo)? > target {
        return Err(Error::UnattainableTarget(target));
    }
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if avg(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(NoiseModel::uniform_coupling(0.5 * (lo + hi)))
}
