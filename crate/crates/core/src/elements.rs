//! Operator factory for the optical elements used in the gate setups.
//!
//! Every factory returns a lossless [`OpticalOperator`] on the full
//! `port x polarization x OAM` basis. Elements act on one port, or on every
//! port when `path` is `None`. Dove prisms and mirrors are polarization
//! neutral; PBS reflections carry no OAM flip, mirrors are explicit stages.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, TAU};
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    BasisSpec, ModeLabel, OpticalOperator, Polarization, PureState, C64, EXACT_TOL, FIT_TOL,
    LOGICAL_OAM,
};

/// Serializable description of one optical element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ElementSpec {
    /// Spiral phase plate adding `k` to the OAM charge.
    Spp {
        k: i32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<u8>,
    },
    /// Dove prism rotated by `alpha` radians.
    DovePrism {
        alpha: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<u8>,
    },
    Mirror {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<u8>,
    },
    /// Half-wave plate, fast axis at `theta` radians from horizontal.
    Hwp {
        theta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<u8>,
    },
    /// Quarter-wave plate, fast axis at `theta` radians from horizontal.
    Qwp {
        theta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<u8>,
    },
    /// Polarizing beam splitter between two ports: H transmits, V swaps ports.
    Pbs { path_a: u8, path_b: u8 },
    PhaseShifter {
        phi: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<u8>,
    },
}

/// Wraps an angle into `[0, 2 pi)`.
pub fn normalize_angle(angle: f64) -> f64 {
    let a = angle.rem_euclid(TAU);
    if a >= TAU {
        0.0
    } else {
        a
    }
}

fn check_angle(name: &str, angle: f64) -> Result<()> {
    if angle.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite")))
    }
}

impl ElementSpec {
    pub fn spp(k: i32, path: u8) -> Self {
        Self::Spp {
            k,
            path: Some(path),
        }
    }

    pub fn dove_prism(alpha: f64, path: u8) -> Self {
        Self::DovePrism {
            alpha: normalize_angle(alpha),
            path: Some(path),
        }
    }

    pub fn mirror(path: u8) -> Self {
        Self::Mirror { path: Some(path) }
    }

    pub fn hwp(theta: f64, path: u8) -> Self {
        Self::Hwp {
            theta: normalize_angle(theta),
            path: Some(path),
        }
    }

    pub fn qwp(theta: f64, path: u8) -> Self {
        Self::Qwp {
            theta: normalize_angle(theta),
            path: Some(path),
        }
    }

    pub fn pbs(path_a: u8, path_b: u8) -> Self {
        Self::Pbs { path_a, path_b }
    }

    pub fn phase_shifter(phi: f64, path: u8) -> Self {
        Self::PhaseShifter {
            phi: normalize_angle(phi),
            path: Some(path),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Spp { k: 0, .. } => {
                Err(Error::InvalidParameter("SPP step must be nonzero".into()))
            }
            Self::DovePrism { alpha, .. } => check_angle("dove prism angle", alpha),
            Self::Hwp { theta, .. } | Self::Qwp { theta, .. } => {
                check_angle("wave-plate angle", theta)
            }
            Self::PhaseShifter { phi, .. } => check_angle("phase", phi),
            Self::Pbs { path_a, path_b } if path_a == path_b => Err(Error::InvalidParameter(
                "PBS needs two distinct ports".into(),
            )),
            _ => Ok(()),
        }
    }

    pub fn build(&self, basis: &BasisSpec) -> Result<OpticalOperator> {
        self.validate()?;
        match *self {
            Self::Spp { k, path } => spp(basis, k, path),
            Self::DovePrism { alpha, path } => dove_prism(basis, alpha, path),
            Self::Mirror { path } => mirror(basis, path),
            Self::Hwp { theta, path } => hwp(basis, theta, path),
            Self::Qwp { theta, path } => qwp(basis, theta, path),
            Self::Pbs { path_a, path_b } => pbs(basis, path_a, path_b),
            Self::PhaseShifter { phi, path } => phase_shifter(basis, phi, path),
        }
    }

    /// The element that exactly undoes this one.
    pub fn inverse(&self) -> Self {
        match self.clone() {
            Self::Spp { k, path } => Self::Spp { k: -k, path },
            Self::Qwp { theta, path } => Self::Qwp {
                theta: normalize_angle(theta + FRAC_PI_2),
                path,
            },
            Self::PhaseShifter { phi, path } => Self::PhaseShifter {
                phi: normalize_angle(-phi),
                path,
            },
            // Dove prisms, mirrors, half-wave plates and PBSs are involutions.
            other => other,
        }
    }
}

fn fmt_path(f: &mut fmt::Formatter<'_>, path: Option<u8>) -> fmt::Result {
    match path {
        Some(p) => write!(f, "@{p}"),
        None => Ok(()),
    }
}

impl fmt::Display for ElementSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Spp { k, path } => {
                write!(f, "SPP({k:+})")?;
                fmt_path(f, path)
            }
            Self::DovePrism { alpha, path } => {
                write!(f, "DP({:.2}deg)", alpha.to_degrees())?;
                fmt_path(f, path)
            }
            Self::Mirror { path } => {
                write!(f, "Mirror")?;
                fmt_path(f, path)
            }
            Self::Hwp { theta, path } => {
                write!(f, "HWP({:.2}deg)", theta.to_degrees())?;
                fmt_path(f, path)
            }
            Self::Qwp { theta, path } => {
                write!(f, "QWP({:.2}deg)", theta.to_degrees())?;
                fmt_path(f, path)
            }
            Self::Pbs { path_a, path_b } => write!(f, "PBS({path_a},{path_b})"),
            Self::PhaseShifter { phi, path } => {
                write!(f, "Phase({phi:.4}rad)")?;
                fmt_path(f, path)
            }
        }
    }
}

fn selected(path: Option<u8>, p: u8) -> bool {
    path.map_or(true, |t| t == p)
}

/// Builds a phased permutation of OAM values on the selected ports.
///
/// `map` must be injective. Inputs whose image falls outside the window are
/// paired, in ascending order, with the outputs nothing else reaches, and are
/// marked leaky.
fn oam_map(
    basis: &BasisSpec,
    path: Option<u8>,
    map: impl Fn(i32) -> (i32, C64),
) -> Result<OpticalOperator> {
    if let Some(p) = path {
        basis.require_port(p)?;
    }
    let n = basis.dim();
    let mut m = DMatrix::zeros(n, n);
    let mut leaky = vec![false; n];
    let window: Vec<i32> = (basis.oam_min()..=basis.oam_max()).collect();
    for p in 0..basis.paths() {
        for &pol in basis.polarizations() {
            let idx = |oam: i32| {
                basis
                    .index_of(&ModeLabel::new(pol, oam, p))
                    .expect("mode inside window")
            };
            if !selected(path, p) {
                for &l in &window {
                    m[(idx(l), idx(l))] = C64::new(1.0, 0.0);
                }
                continue;
            }
            let mut hit = vec![false; window.len()];
            let mut stray = Vec::new();
            for &l in &window {
                let (to, phase) = map(l);
                if basis.contains_oam(to) {
                    let slot = (to - basis.oam_min()) as usize;
                    debug_assert!(!hit[slot], "OAM map is not injective");
                    hit[slot] = true;
                    m[(idx(to), idx(l))] = phase;
                } else {
                    stray.push(l);
                }
            }
            let vacant = window.iter().zip(&hit).filter(|(_, &h)| !h).map(|(&l, _)| l);
            for (l, v) in stray.into_iter().zip(vacant) {
                m[(idx(v), idx(l))] = C64::new(1.0, 0.0);
                leaky[idx(l)] = true;
            }
        }
    }
    Ok(OpticalOperator::unitary(*basis, m)?.with_leaks(leaky))
}

/// Applies a 2x2 Jones matrix (rows/cols ordered H, V) on the selected ports.
fn jones_op(basis: &BasisSpec, path: Option<u8>, jm: [[C64; 2]; 2]) -> Result<OpticalOperator> {
    basis.require_polarization("wave plate")?;
    if let Some(p) = path {
        basis.require_port(p)?;
    }
    let n = basis.dim();
    let mut m = DMatrix::identity(n, n);
    for p in (0..basis.paths()).filter(|&p| selected(path, p)) {
        for l in basis.oam_min()..=basis.oam_max() {
            let h = basis.index_of(&ModeLabel::new(Polarization::H, l, p)).unwrap();
            let v = basis.index_of(&ModeLabel::new(Polarization::V, l, p)).unwrap();
            m[(h, h)] = jm[0][0];
            m[(h, v)] = jm[0][1];
            m[(v, h)] = jm[1][0];
            m[(v, v)] = jm[1][1];
        }
    }
    OpticalOperator::unitary(*basis, m)
}

/// Spiral phase plate: `|l> -> |l + k>`.
///
/// Fails if any logical mode would be pushed out of the window.
pub fn spp(basis: &BasisSpec, k: i32, path: Option<u8>) -> Result<OpticalOperator> {
    if k == 0 {
        return Err(Error::InvalidParameter("SPP step must be nonzero".into()));
    }
    for &l in LOGICAL_OAM.iter().filter(|&&l| basis.contains_oam(l)) {
        if !basis.contains_oam(l + k) {
            return Err(Error::Leakage {
                element: format!("SPP({k:+})"),
                mode: format!("|{l}>"),
            });
        }
    }
    oam_map(basis, path, |l| (l + k, C64::new(1.0, 0.0)))
}

/// Dove prism at angle `alpha`: `|l> -> e^{i 2 l alpha} |-l>`.
pub fn dove_prism(basis: &BasisSpec, alpha: f64, path: Option<u8>) -> Result<OpticalOperator> {
    check_angle("dove prism angle", alpha)?;
    oam_map(basis, path, |l| (-l, C64::from_polar(1.0, 2.0 * l as f64 * alpha)))
}

/// Mirror reflection: `|l> -> |-l>`.
pub fn mirror(basis: &BasisSpec, path: Option<u8>) -> Result<OpticalOperator> {
    oam_map(basis, path, |l| (-l, C64::new(1.0, 0.0)))
}

/// Half-wave plate `R(theta) diag(1, -1) R(-theta)`.
pub fn hwp(basis: &BasisSpec, theta: f64, path: Option<u8>) -> Result<OpticalOperator> {
    check_angle("wave-plate angle", theta)?;
    let (s, c) = (2.0 * theta).sin_cos();
    jones_op(
        basis,
        path,
        [
            [C64::new(c, 0.0), C64::new(s, 0.0)],
            [C64::new(s, 0.0), C64::new(-c, 0.0)],
        ],
    )
}

/// Quarter-wave plate `R(theta) diag(e^{-i pi/4}, e^{i pi/4}) R(-theta)`.
///
/// With this phase convention `qwp(theta + pi/2)` is exactly the inverse of
/// `qwp(theta)`.
pub fn qwp(basis: &BasisSpec, theta: f64, path: Option<u8>) -> Result<OpticalOperator> {
    check_angle("wave-plate angle", theta)?;
    let (s, c) = theta.sin_cos();
    let a = C64::from_polar(1.0, -FRAC_PI_4);
    let b = C64::from_polar(1.0, FRAC_PI_4);
    let off = (a - b) * c * s;
    jones_op(
        basis,
        path,
        [[a * c * c + b * s * s, off], [off, a * s * s + b * c * c]],
    )
}

/// Polarizing beam splitter: H stays on its port, V swaps between the two.
pub fn pbs(basis: &BasisSpec, path_a: u8, path_b: u8) -> Result<OpticalOperator> {
    basis.require_polarization("PBS")?;
    basis.require_port(path_a)?;
    basis.require_port(path_b)?;
    if path_a == path_b {
        return Err(Error::InvalidParameter("PBS needs two distinct ports".into()));
    }
    let n = basis.dim();
    let mut m = DMatrix::identity(n, n);
    for l in basis.oam_min()..=basis.oam_max() {
        let va = basis.index_of(&ModeLabel::new(Polarization::V, l, path_a)).unwrap();
        let vb = basis.index_of(&ModeLabel::new(Polarization::V, l, path_b)).unwrap();
        m[(va, va)] = C64::new(0.0, 0.0);
        m[(vb, vb)] = C64::new(0.0, 0.0);
        m[(va, vb)] = C64::new(1.0, 0.0);
        m[(vb, va)] = C64::new(1.0, 0.0);
    }
    OpticalOperator::unitary(*basis, m)
}

/// Uniform phase `e^{i phi}` on the selected ports.
pub fn phase_shifter(basis: &BasisSpec, phi: f64, path: Option<u8>) -> Result<OpticalOperator> {
    check_angle("phase", phi)?;
    if let Some(p) = path {
        basis.require_port(p)?;
    }
    let n = basis.dim();
    let phase = C64::from_polar(1.0, phi);
    let m = DMatrix::from_fn(n, n, |i, j| {
        if i != j {
            C64::new(0.0, 0.0)
        } else if selected(path, basis.label(i).unwrap().path) {
            phase
        } else {
            C64::new(1.0, 0.0)
        }
    });
    OpticalOperator::unitary(*basis, m)
}

/// An idealized projection analyzer: the state the detector projects onto.
#[derive(Debug, Clone, PartialEq)]
pub struct Analyzer {
    pub label: String,
    pub state: PureState,
}

/// Ideal state synthesis on the preparation SLM.
///
/// The target must be normalized, live on a single port and factor into a
/// polarization part times an OAM part.
pub fn slm_prepare(target: &PureState) -> Result<PureState> {
    target.require_normalized()?;
    let basis = target.basis();
    let support: Vec<ModeLabel> = basis
        .modes()
        .zip(target.amplitudes().iter())
        .filter(|(_, a)| a.norm() > EXACT_TOL)
        .map(|(m, _)| m)
        .collect();
    let path = support.first().map(|m| m.path).unwrap_or(0);
    if support.iter().any(|m| m.path != path) {
        return Err(Error::InvalidParameter(
            "prepared state must occupy a single port".into(),
        ));
    }
    if basis.include_polarization() {
        // Product form: the H and V OAM profiles must be proportional.
        let amp = |pol, l| target.amplitude(&ModeLabel::new(pol, l, path)).unwrap();
        for l1 in basis.oam_min()..=basis.oam_max() {
            for l2 in l1 + 1..=basis.oam_max() {
                let minor = amp(Polarization::H, l1) * amp(Polarization::V, l2)
                    - amp(Polarization::H, l2) * amp(Polarization::V, l1);
                if minor.norm() > FIT_TOL {
                    return Err(Error::InvalidParameter(
                        "prepared state must be a polarization x OAM product".into(),
                    ));
                }
            }
        }
    }
    Ok(target.clone())
}

/// Ideal projection on the analysis SLM and single-mode fiber.
pub fn slm_project(label: impl Into<String>, analyzer: &PureState) -> Result<Analyzer> {
    analyzer.require_normalized()?;
    Ok(Analyzer {
        label: label.into(),
        state: analyzer.clone(),
    })
}
