//! Mode bases, single-photon states and linear optical operators.
//!
//! A basis is the product of a truncated OAM window, an optional polarization
//! factor and a number of spatial ports. Modes are enumerated path-major, then
//! `H` before `V`, then OAM ascending, so the dense index of a mode is a pure
//! function of its label.
//!
//! The four logical qudit levels are the OAM values `-2, -1, 0, 1`, with the
//! logical index `k = l + 2`. Under that mapping the generalized Pauli `X`
//! acts as `k -> k + 1 mod 4`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance for exact linear-algebra identities.
pub const EXACT_TOL: f64 = 1e-12;

/// Tolerance for fitted, iterated or user-supplied quantities.
pub const FIT_TOL: f64 = 1e-9;

/// OAM values of the logical qudit levels in logical order.
pub const LOGICAL_OAM: [i32; 4] = [-2, -1, 0, 1];

pub const LOGICAL_DIM: usize = LOGICAL_OAM.len();

/// Logical index of an OAM value, `k = l + 2`.
pub fn logical_index(oam: i32) -> Option<usize> {
    LOGICAL_OAM.iter().position(|&l| l == oam)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub const ALL: [Polarization; 2] = [Polarization::H, Polarization::V];

    fn slot(self) -> usize {
        match self {
            Polarization::H => 0,
            Polarization::V => 1,
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Polarization::H => f.write_str("H"),
            Polarization::V => f.write_str("V"),
        }
    }
}

/// Jones vector `(H, V)` of a polarization state.
pub type Jones = [C64; 2];

pub mod jones {
    use super::{Jones, C64};
    use std::f64::consts::FRAC_1_SQRT_2;

    pub const H: Jones = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
    pub const V: Jones = [C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
    pub const D: Jones = [C64::new(FRAC_1_SQRT_2, 0.0), C64::new(FRAC_1_SQRT_2, 0.0)];
    pub const A: Jones = [C64::new(FRAC_1_SQRT_2, 0.0), C64::new(-FRAC_1_SQRT_2, 0.0)];
}

/// One basis mode: polarization, OAM charge and spatial port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeLabel {
    pub polarization: Polarization,
    pub oam: i32,
    pub path: u8,
}

impl ModeLabel {
    pub const fn new(polarization: Polarization, oam: i32, path: u8) -> Self {
        Self {
            polarization,
            oam,
            path,
        }
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}>@{}", self.polarization, self.oam, self.path)
    }
}

#[derive(Deserialize)]
struct RawBasis {
    oam_min: i32,
    oam_max: i32,
    paths: u8,
    include_polarization: bool,
}

impl TryFrom<RawBasis> for BasisSpec {
    type Error = Error;

    fn try_from(raw: RawBasis) -> Result<Self> {
        BasisSpec::new(raw.oam_min, raw.oam_max, raw.paths, raw.include_polarization)
    }
}

/// Product space `ports x polarization x OAM window`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawBasis")]
pub struct BasisSpec {
    oam_min: i32,
    oam_max: i32,
    paths: u8,
    include_polarization: bool,
}

impl Default for BasisSpec {
    /// Window `[-6, 5]`, two ports, with polarization.
    fn default() -> Self {
        Self {
            oam_min: -6,
            oam_max: 5,
            paths: 2,
            include_polarization: true,
        }
    }
}

impl BasisSpec {
    pub fn new(oam_min: i32, oam_max: i32, paths: u8, include_polarization: bool) -> Result<Self> {
        if oam_min > oam_max {
            return Err(Error::EmptyWindow {
                min: oam_min,
                max: oam_max,
            });
        }
        if paths == 0 {
            return Err(Error::NoPaths);
        }
        Ok(Self {
            oam_min,
            oam_max,
            paths,
            include_polarization,
        })
    }

    /// The bare four-level qudit: logical window, one port, no polarization.
    pub fn logical() -> Self {
        Self {
            oam_min: LOGICAL_OAM[0],
            oam_max: LOGICAL_OAM[LOGICAL_DIM - 1],
            paths: 1,
            include_polarization: false,
        }
    }

    pub fn oam_min(&self) -> i32 {
        self.oam_min
    }

    pub fn oam_max(&self) -> i32 {
        self.oam_max
    }

    pub fn paths(&self) -> u8 {
        self.paths
    }

    pub fn include_polarization(&self) -> bool {
        self.include_polarization
    }

    pub fn oam_count(&self) -> usize {
        (self.oam_max - self.oam_min) as usize + 1
    }

    pub fn polarizations(&self) -> &'static [Polarization] {
        if self.include_polarization {
            &Polarization::ALL
        } else {
            &Polarization::ALL[..1]
        }
    }

    pub fn dim(&self) -> usize {
        self.paths as usize * self.polarizations().len() * self.oam_count()
    }

    pub fn contains_oam(&self, oam: i32) -> bool {
        (self.oam_min..=self.oam_max).contains(&oam)
    }

    pub fn has_port(&self, port: u8) -> bool {
        port < self.paths
    }

    pub(crate) fn require_port(&self, port: u8) -> Result<()> {
        if self.has_port(port) {
            Ok(())
        } else {
            Err(Error::MissingPort {
                port,
                paths: self.paths,
            })
        }
    }

    pub(crate) fn require_polarization(&self, what: &str) -> Result<()> {
        if self.include_polarization {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "{what} needs a basis with polarization"
            )))
        }
    }

    pub fn index_of(&self, mode: &ModeLabel) -> Option<usize> {
        if !self.contains_oam(mode.oam) || !self.has_port(mode.path) {
            return None;
        }
        if !self.include_polarization && mode.polarization == Polarization::V {
            return None;
        }
        let per_path = self.polarizations().len() * self.oam_count();
        Some(
            mode.path as usize * per_path
                + mode.polarization.slot() * self.oam_count()
                + (mode.oam - self.oam_min) as usize,
        )
    }

    pub(crate) fn require_index(&self, mode: &ModeLabel) -> Result<usize> {
        self.index_of(mode)
            .ok_or_else(|| Error::UnknownMode(mode.to_string()))
    }

    pub fn label(&self, index: usize) -> Option<ModeLabel> {
        if index >= self.dim() {
            return None;
        }
        let noam = self.oam_count();
        let per_path = self.polarizations().len() * noam;
        let path = (index / per_path) as u8;
        let rem = index % per_path;
        Some(ModeLabel {
            polarization: self.polarizations()[rem / noam],
            oam: self.oam_min + (rem % noam) as i32,
            path,
        })
    }

    pub fn modes(&self) -> impl Iterator<Item = ModeLabel> + '_ {
        (0..self.dim()).map(|i| self.label(i).expect("index below dim"))
    }

    /// The four logical modes on one port and polarization, in logical order.
    pub fn logical_modes(&self, path: u8, polarization: Polarization) -> Result<Vec<ModeLabel>> {
        LOGICAL_OAM
            .iter()
            .map(|&oam| {
                let mode = ModeLabel::new(polarization, oam, path);
                self.require_index(&mode).map(|_| mode)
            })
            .collect()
    }
}

/// Ordered list of every mode in the basis.
pub fn enumerate_basis(spec: &BasisSpec) -> Vec<ModeLabel> {
    spec.modes().collect()
}

/// Complex amplitude vector of a single photon over a basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    basis: BasisSpec,
    amplitudes: DVector<C64>,
}

impl PureState {
    pub fn new(basis: BasisSpec, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                found: amplitudes.len(),
            });
        }
        let norm_sqr = amplitudes.norm_squared();
        if norm_sqr > 1.0 + FIT_TOL {
            return Err(Error::NormTooLarge { norm_sqr });
        }
        Ok(Self { basis, amplitudes })
    }

    pub fn from_modes(basis: BasisSpec, terms: &[(ModeLabel, C64)]) -> Result<Self> {
        let mut amplitudes = DVector::zeros(basis.dim());
        for (mode, amp) in terms {
            amplitudes[basis.require_index(mode)?] += amp;
        }
        Self::new(basis, amplitudes)
    }

    pub fn basis_state(basis: BasisSpec, mode: ModeLabel) -> Result<Self> {
        Self::from_modes(basis, &[(mode, C64::new(1.0, 0.0))])
    }

    /// State on the bare logical qudit from amplitudes in logical order.
    pub fn logical(amplitudes: [C64; LOGICAL_DIM]) -> Result<Self> {
        Self::new(BasisSpec::logical(), DVector::from_row_slice(&amplitudes))
    }

    pub fn basis(&self) -> &BasisSpec {
        &self.basis
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, mode: &ModeLabel) -> Result<C64> {
        Ok(self.amplitudes[self.basis.require_index(mode)?])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= FIT_TOL
    }

    pub(crate) fn require_normalized(&self) -> Result<()> {
        if self.is_normalized() {
            Ok(())
        } else {
            Err(Error::Unnormalized {
                norm_sqr: self.norm_sqr(),
            })
        }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if self.basis != other.basis {
            return Err(Error::BasisMismatch);
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// Places an OAM-only state onto one port of a larger basis with the given
    /// polarization, i.e. `|jones> (x) |self>` on `path`.
    pub fn embed(&self, target: BasisSpec, path: u8, polarization: Jones) -> Result<PureState> {
        if self.basis.include_polarization || self.basis.paths != 1 {
            return Err(Error::InvalidParameter(
                "only single-port, polarization-free states can be embedded".into(),
            ));
        }
        target.require_port(path)?;
        if !target.include_polarization && polarization[1].norm() > FIT_TOL {
            return Err(Error::InvalidParameter(
                "target basis has no polarization factor".into(),
            ));
        }
        let mut amplitudes = DVector::zeros(target.dim());
        for (i, amp) in self.amplitudes.iter().enumerate() {
            if amp.norm() == 0.0 {
                continue;
            }
            let oam = self.basis.label(i).expect("index in range").oam;
            for &pol in target.polarizations() {
                let idx = target.require_index(&ModeLabel::new(pol, oam, path))?;
                amplitudes[idx] += polarization[pol.slot()] * amp;
            }
        }
        PureState::new(target, amplitudes)
    }
}

/// Dense complex operator over a basis.
///
/// Elements that would push some modes past the edge of the OAM window still
/// produce a unitary matrix: the offending inputs are routed onto the vacated
/// outputs and flagged as leaky. Any attempt to propagate amplitude through a
/// leaky input is an error.
#[derive(Debug, Clone, PartialEq)]
pub struct OpticalOperator {
    basis: BasisSpec,
    matrix: DMatrix<C64>,
    lossless: bool,
    leaky: Vec<bool>,
}

impl OpticalOperator {
    pub fn unitary(basis: BasisSpec, matrix: DMatrix<C64>) -> Result<Self> {
        check_square(&basis, &matrix)?;
        let deviation = unitarity_deviation(&matrix);
        if deviation > EXACT_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self {
            leaky: vec![false; basis.dim()],
            basis,
            matrix,
            lossless: true,
        })
    }

    /// A sub-unitary (lossy) operator; all singular values must be at most one.
    pub fn lossy(basis: BasisSpec, matrix: DMatrix<C64>) -> Result<Self> {
        check_square(&basis, &matrix)?;
        let max_singular = matrix.singular_values().max();
        if max_singular > 1.0 + EXACT_TOL {
            return Err(Error::NotContractive { max_singular });
        }
        Ok(Self {
            leaky: vec![false; basis.dim()],
            basis,
            matrix,
            lossless: false,
        })
    }

    pub fn identity(basis: BasisSpec) -> Self {
        let n = basis.dim();
        Self {
            basis,
            matrix: DMatrix::identity(n, n),
            lossless: true,
            leaky: vec![false; n],
        }
    }

    pub(crate) fn with_leaks(mut self, leaky: Vec<bool>) -> Self {
        debug_assert_eq!(leaky.len(), self.basis.dim());
        self.leaky = leaky;
        self
    }

    pub fn basis(&self) -> &BasisSpec {
        &self.basis
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn is_lossless(&self) -> bool {
        self.lossless
    }

    pub fn is_leaky(&self, index: usize) -> bool {
        self.leaky[index]
    }

    pub fn leaky_inputs(&self) -> impl Iterator<Item = ModeLabel> + '_ {
        self.leaky
            .iter()
            .enumerate()
            .filter(|(_, &l)| l)
            .map(|(i, _)| self.basis.label(i).expect("index in range"))
    }

    /// `max |(M^dag M - I)_jk|`.
    pub fn unitarity_deviation(&self) -> f64 {
        unitarity_deviation(&self.matrix)
    }

    pub fn adjoint(&self) -> Self {
        let leaky = (0..self.basis.dim())
            .map(|i| {
                (0..self.basis.dim())
                    .any(|j| self.leaky[j] && self.matrix[(i, j)].norm() > EXACT_TOL)
            })
            .collect();
        Self {
            basis: self.basis,
            matrix: self.matrix.adjoint(),
            lossless: self.lossless,
            leaky,
        }
    }

    /// Sub-block with the given output rows and input columns.
    pub fn block(&self, rows: &[ModeLabel], cols: &[ModeLabel]) -> Result<DMatrix<C64>> {
        let r = rows
            .iter()
            .map(|m| self.basis.require_index(m))
            .collect::<Result<Vec<_>>>()?;
        let c = cols
            .iter()
            .map(|m| self.basis.require_index(m))
            .collect::<Result<Vec<_>>>()?;
        Ok(DMatrix::from_fn(r.len(), c.len(), |i, j| {
            self.matrix[(r[i], c[j])]
        }))
    }

    pub fn restrict(&self, subspace: &[ModeLabel]) -> Result<DMatrix<C64>> {
        self.block(subspace, subspace)
    }
}

fn check_square(basis: &BasisSpec, matrix: &DMatrix<C64>) -> Result<()> {
    let n = basis.dim();
    if matrix.nrows() != n || matrix.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: matrix.nrows().max(matrix.ncols()),
        });
    }
    Ok(())
}

/// `a * b`, iterating only over the nonzero entries of `a`.
///
/// Optical elements have at most two nonzeros per row, and dense complex
/// products dominate circuit compilation otherwise.
pub(crate) fn mul(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    assert_eq!(a.ncols(), b.nrows(), "shape mismatch");
    let nnz = a.iter().filter(|z| z.re != 0.0 || z.im != 0.0).count();
    if nnz * 4 > a.nrows() * a.ncols() {
        return a * b;
    }
    let mut out = DMatrix::zeros(a.nrows(), b.ncols());
    for k in 0..a.ncols() {
        for i in 0..a.nrows() {
            let v = a[(i, k)];
            if v.re != 0.0 || v.im != 0.0 {
                for j in 0..b.ncols() {
                    out[(i, j)] += v * b[(k, j)];
                }
            }
        }
    }
    out
}

pub(crate) fn unitarity_deviation(matrix: &DMatrix<C64>) -> f64 {
    let n = matrix.ncols();
    let gram = mul(&matrix.adjoint(), matrix);
    let mut worst = 0.0f64;
    for j in 0..n {
        for k in 0..n {
            let target = if j == k { 1.0 } else { 0.0 };
            worst = worst.max((gram[(j, k)] - C64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// Applies `op` to `state`. Fails if any amplitude sits on a leaky input.
pub fn apply(op: &OpticalOperator, state: &PureState) -> Result<PureState> {
    if op.basis != state.basis {
        return Err(Error::BasisMismatch);
    }
    for (i, amp) in state.amplitudes.iter().enumerate() {
        if op.leaky[i] && amp.norm() > EXACT_TOL {
            return Err(Error::Leakage {
                element: "operator".into(),
                mode: op.basis.label(i).expect("index in range").to_string(),
            });
        }
    }
    Ok(PureState {
        basis: state.basis,
        amplitudes: &op.matrix * &state.amplitudes,
    })
}

/// Composes operators listed in application order (first applied first).
pub fn compose(ops: &[OpticalOperator]) -> Result<OpticalOperator> {
    let (first, rest) = ops.split_first().ok_or(Error::EmptyComposition)?;
    let mut acc = first.clone();
    for op in rest {
        acc = then(&acc, op)?;
    }
    Ok(acc)
}

/// `second * first`, with leak flags carried through.
pub(crate) fn then(first: &OpticalOperator, second: &OpticalOperator) -> Result<OpticalOperator> {
    if first.basis != second.basis {
        return Err(Error::BasisMismatch);
    }
    let n = first.basis.dim();
    let leaky = (0..n)
        .map(|j| {
            first.leaky[j]
                || (0..n).any(|i| second.leaky[i] && first.matrix[(i, j)].norm() > EXACT_TOL)
        })
        .collect();
    Ok(OpticalOperator {
        basis: first.basis,
        matrix: mul(&second.matrix, &first.matrix),
        lossless: first.lossless && second.lossless,
        leaky,
    })
}

/// `|Tr(U^dag V)|^2 / d^2` over the subspace; one iff `U = e^{i phi} V` there.
pub fn fidelity_up_to_global_phase(
    u: &OpticalOperator,
    v: &OpticalOperator,
    subspace: &[ModeLabel],
) -> Result<f64> {
    if u.basis != v.basis {
        return Err(Error::BasisMismatch);
    }
    if subspace.is_empty() {
        return Err(Error::EmptySubspace);
    }
    let us = u.restrict(subspace)?;
    let vs = v.restrict(subspace)?;
    Ok(trace_fidelity(&us, &vs))
}

pub(crate) fn trace_fidelity(u: &DMatrix<C64>, v: &DMatrix<C64>) -> f64 {
    let d = u.ncols() as f64;
    let overlap: C64 = u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
    (overlap.norm_sqr() / (d * d)).clamp(0.0, 1.0)
}

/// Largest elementwise deviation `|A e^{-i phi} - B|` after removing the best
/// global phase `phi = arg Tr(B^dag A)`.
pub fn max_deviation_up_to_global_phase(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    let overlap: C64 = b.iter().zip(a.iter()).map(|(x, y)| x.conj() * y).sum();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x * phase.conj() - y).norm())
        .fold(0.0, f64::max)
}

/// Born probability `|<analyzer|state>|^2`.
pub fn project(state: &PureState, analyzer: &PureState) -> Result<f64> {
    analyzer.require_normalized()?;
    Ok(analyzer.inner(state)?.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    const I: C64 = C64::new(0.0, 1.0);

    fn max_abs(m: &DMatrix<C64>) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn cyclic_x(basis: BasisSpec) -> OpticalOperator {
        // Logical shift on a bare qudit basis; k -> k + 1 mod 4.
        let n = basis.dim();
        let m = DMatrix::from_fn(n, n, |i, j| if i == (j + 1) % n { c(1.0) } else { c(0.0) });
        OpticalOperator::unitary(basis, m).unwrap()
    }

    #[test]
    fn logical_enumeration_order() {
        let spec = BasisSpec::new(-2, 1, 1, false).unwrap();
        let modes = enumerate_basis(&spec);
        let oams: Vec<i32> = modes.iter().map(|m| m.oam).collect();
        assert_eq!(oams, vec![-2, -1, 0, 1]);
        for (i, m) in modes.iter().enumerate() {
            assert_eq!(spec.index_of(m), Some(i));
        }
    }

    #[test]
    fn polarization_blocks_are_h_then_v() {
        let spec = BasisSpec::new(-2, 1, 1, true).unwrap();
        let modes = enumerate_basis(&spec);
        assert_eq!(modes.len(), 8);
        assert!(modes[..4].iter().all(|m| m.polarization == Polarization::H));
        assert!(modes[4..].iter().all(|m| m.polarization == Polarization::V));
    }

    #[test]
    fn default_window_with_two_ports_has_48_modes() {
        // 2 ports x 2 polarizations x 12 OAM values, counted by brute force.
        let spec = BasisSpec::new(-6, 5, 2, true).unwrap();
        let mut count = 0;
        for _path in 0..2 {
            for _pol in 0..2 {
                for _l in -6..=5 {
                    count += 1;
                }
            }
        }
        assert_eq!(count, 48);
        assert_eq!(enumerate_basis(&spec).len(), 48);
        assert_eq!(spec, BasisSpec::default());
    }

    #[test]
    fn empty_window_and_zero_paths_rejected() {
        assert!(matches!(
            BasisSpec::new(2, 1, 1, false),
            Err(Error::EmptyWindow { .. })
        ));
        assert!(matches!(BasisSpec::new(0, 1, 0, false), Err(Error::NoPaths)));
    }

    #[test]
    fn basis_deserialization_validates() {
        let bad = r#"{"oam_min":3,"oam_max":1,"paths":1,"include_polarization":false}"#;
        assert!(serde_json::from_str::<BasisSpec>(bad).is_err());
        let good = serde_json::to_string(&BasisSpec::default()).unwrap();
        assert_eq!(
            serde_json::from_str::<BasisSpec>(&good).unwrap(),
            BasisSpec::default()
        );
    }

    #[test]
    fn x_shifts_and_wraps() {
        let basis = BasisSpec::logical();
        let x = cyclic_x(basis);
        let zero = PureState::basis_state(basis, ModeLabel::new(Polarization::H, 0, 0)).unwrap();
        let out = apply(&x, &zero).unwrap();
        assert!((out.amplitude(&ModeLabel::new(Polarization::H, 1, 0)).unwrap() - c(1.0)).norm() < EXACT_TOL);

        let one = PureState::basis_state(basis, ModeLabel::new(Polarization::H, 1, 0)).unwrap();
        let out = apply(&x, &one).unwrap();
        assert!((out.amplitude(&ModeLabel::new(Polarization::H, -2, 0)).unwrap() - c(1.0)).norm() < EXACT_TOL);
    }

    #[test]
    fn identity_leaves_state_alone() {
        let basis = BasisSpec::default();
        let state = PureState::from_modes(
            basis,
            &[
                (ModeLabel::new(Polarization::H, -2, 0), c(FRAC_1_SQRT_2)),
                (ModeLabel::new(Polarization::V, 3, 1), I * FRAC_1_SQRT_2),
            ],
        )
        .unwrap();
        let out = apply(&OpticalOperator::identity(basis), &state).unwrap();
        assert_eq!(out, state);
    }

    #[test]
    fn compose_powers_and_inverse() {
        let basis = BasisSpec::logical();
        let x = cyclic_x(basis);
        let x2 = compose(&[x.clone(), x.clone()]).unwrap();
        assert_eq!(x2.matrix(), &(x.matrix() * x.matrix()));
        let id = compose(&[x.clone(), x.adjoint()]).unwrap();
        assert!(max_abs(&(id.matrix() - DMatrix::identity(4, 4))) < EXACT_TOL);
    }

    #[test]
    fn compose_rejects_mixed_bases() {
        let a = OpticalOperator::identity(BasisSpec::logical());
        let b = OpticalOperator::identity(BasisSpec::default());
        assert!(matches!(compose(&[a, b]), Err(Error::BasisMismatch)));
        assert!(matches!(compose(&[]), Err(Error::EmptyComposition)));
    }

    #[test]
    fn fidelity_examples() {
        let basis = BasisSpec::logical();
        let modes = enumerate_basis(&basis);
        let x = cyclic_x(basis);
        let phase = C64::from_polar(1.0, PI / 7.0);
        let xp = OpticalOperator::unitary(basis, x.matrix() * phase).unwrap();
        assert!((fidelity_up_to_global_phase(&x, &xp, &modes).unwrap() - 1.0).abs() < EXACT_TOL);

        // Z = diag(1, i, -1, -i); Tr(X^dag Z) = 0 since X has an empty diagonal.
        let z = OpticalOperator::unitary(
            basis,
            DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0), I, c(-1.0), -I])),
        )
        .unwrap();
        assert!(fidelity_up_to_global_phase(&x, &z, &modes).unwrap() < EXACT_TOL);

        let x2 = compose(&[x.clone(), x.clone()]).unwrap();
        assert!(fidelity_up_to_global_phase(&x, &x2, &modes).unwrap() < EXACT_TOL);
        assert!(matches!(
            fidelity_up_to_global_phase(&x, &x2, &[]),
            Err(Error::EmptySubspace)
        ));
    }

    #[test]
    fn projection_examples() {
        let basis = BasisSpec::logical();
        let zero = PureState::logical([c(0.0), c(0.0), c(1.0), c(0.0)]).unwrap();
        assert!((project(&zero, &zero).unwrap() - 1.0).abs() < EXACT_TOL);

        let s = c(FRAC_1_SQRT_2);
        let x_plus = PureState::logical([s, s, c(0.0), c(0.0)]).unwrap();
        let minus_two = PureState::basis_state(basis, ModeLabel::new(Polarization::H, -2, 0)).unwrap();
        assert!((project(&minus_two, &x_plus).unwrap() - 0.5).abs() < EXACT_TOL);

        let y_plus = PureState::logical([s, I * s, c(0.0), c(0.0)]).unwrap();
        assert!((project(&y_plus, &y_plus).unwrap() - 1.0).abs() < EXACT_TOL);

        let half = PureState::logical([c(0.5), c(0.0), c(0.0), c(0.0)]).unwrap();
        assert!(matches!(
            project(&zero, &half),
            Err(Error::Unnormalized { .. })
        ));
    }

    #[test]
    fn leaky_inputs_block_propagation() {
        let basis = BasisSpec::logical();
        let x = cyclic_x(basis).with_leaks(vec![false, false, false, true]);
        let one = PureState::basis_state(basis, ModeLabel::new(Polarization::H, 1, 0)).unwrap();
        assert!(matches!(apply(&x, &one), Err(Error::Leakage { .. })));
        // The flag survives composition when a later stage is leaky.
        let y = cyclic_x(basis);
        let composed = compose(&[y, x]).unwrap();
        assert!(composed.is_leaky(2));
    }

    #[test]
    fn lossy_operator_requires_contraction() {
        let basis = BasisSpec::logical();
        let half = DMatrix::identity(4, 4) * c(0.5);
        let op = OpticalOperator::lossy(basis, half).unwrap();
        assert!(!op.is_lossless());
        let big = DMatrix::identity(4, 4) * c(1.5);
        assert!(matches!(
            OpticalOperator::lossy(basis, big),
            Err(Error::NotContractive { .. })
        ));
        assert!(matches!(
            OpticalOperator::unitary(basis, DMatrix::identity(4, 4) * c(0.5)),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn embed_places_product_state() {
        let s = c(FRAC_1_SQRT_2);
        let oam = PureState::logical([c(0.0), c(0.0), c(1.0), c(0.0)]).unwrap();
        let full = oam.embed(BasisSpec::default(), 1, jones::D).unwrap();
        assert!((full.amplitude(&ModeLabel::new(Polarization::H, 0, 1)).unwrap() - s).norm() < EXACT_TOL);
        assert!((full.amplitude(&ModeLabel::new(Polarization::V, 0, 1)).unwrap() - s).norm() < EXACT_TOL);
        assert!((full.norm_sqr() - 1.0).abs() < EXACT_TOL);
    }

    fn random_unitary(n: usize, seed: &[f64]) -> DMatrix<C64> {
        // QR of a seeded complex matrix gives a unitary Q.
        let m = DMatrix::from_fn(n, n, |i, j| {
            let k = (i * n + j) % seed.len();
            C64::new(seed[k] * (1.0 + i as f64), seed[(k + 1) % seed.len()] - j as f64)
        });
        m.qr().q()
    }

    proptest! {
        #[test]
        fn index_roundtrip(min in -8i32..3, width in 0i32..8, paths in 1u8..4, pol: bool) {
            let spec = BasisSpec::new(min, min + width, paths, pol).unwrap();
            for (i, mode) in enumerate_basis(&spec).into_iter().enumerate() {
                prop_assert_eq!(spec.index_of(&mode), Some(i));
                prop_assert_eq!(spec.label(i), Some(mode));
            }
        }

        #[test]
        fn lossless_apply_preserves_norm(seed in prop::collection::vec(-1.0f64..1.0, 8..16),
                                         amps in prop::collection::vec(-1.0f64..1.0, 8)) {
            let basis = BasisSpec::new(-2, 1, 1, true).unwrap();
            let u = OpticalOperator::unitary(basis, random_unitary(8, &seed)).unwrap();
            let v = DVector::from_iterator(8, amps.chunks(2).flat_map(|p| [C64::new(p[0], p[1]), C64::new(p[1], -p[0])]));
            let norm = v.norm();
            prop_assume!(norm > 1e-3);
            let state = PureState::new(basis, v / C64::new(norm, 0.0)).unwrap();
            let out = apply(&u, &state).unwrap();
            prop_assert!((out.norm_sqr() - state.norm_sqr()).abs() < EXACT_TOL);
            prop_assert!((fidelity_up_to_global_phase(&u, &u, &enumerate_basis(&basis)).unwrap() - 1.0).abs() < EXACT_TOL);
        }

        #[test]
        fn composition_is_associative(s1 in prop::collection::vec(-1.0f64..1.0, 5..9),
                                      s2 in prop::collection::vec(-1.0f64..1.0, 5..9),
                                      s3 in prop::collection::vec(-1.0f64..1.0, 5..9)) {
            let basis = BasisSpec::new(-1, 1, 1, true).unwrap();
            let ops: Vec<_> = [s1, s2, s3].iter()
                .map(|s| OpticalOperator::unitary(basis, random_unitary(6, s)).unwrap())
                .collect();
            let flat = compose(&ops).unwrap();
            let nested = compose(&[compose(&ops[..2]).unwrap(), ops[2].clone()]).unwrap();
            prop_assert!(max_abs(&(flat.matrix() - nested.matrix())) < EXACT_TOL);
        }
    }
}
