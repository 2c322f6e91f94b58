//! Composite devices and gate circuits built from [`ElementSpec`] stages.
//!
//! Port convention: `main` carries the photon in and out, `aux` is the second
//! Sagnac/Mach-Zehnder arm, and `control_arm` is the idle arm of a controlled
//! gate. Inputs are horizontally polarized on `main`.

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::elements::ElementSpec;
use crate::error::{Error, Result};
use crate::gates::{self, GateTarget};
use crate::hilbert::{
    self, BasisSpec, ModeLabel, OpticalOperator, Polarization, C64, EXACT_TOL, FIT_TOL,
};

/// One step of a circuit: an element or a nested sub-circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Stage {
    Element(ElementSpec),
    Nested(Circuit),
}

/// An ordered list of stages over a fixed basis.
///
/// `domain` lists the input modes the circuit is meant for; [`compile`]
/// rejects any stage that would push amplitude from those inputs out of the
/// OAM window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    name: String,
    basis: BasisSpec,
    stages: Vec<Stage>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    domain: Vec<ModeLabel>,
}

impl Circuit {
    pub fn new(name: impl Into<String>, basis: BasisSpec) -> Self {
        Self {
            name: name.into(),
            basis,
            stages: Vec::new(),
            domain: Vec::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn basis(&self) -> &BasisSpec {
        &self.basis
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn domain(&self) -> &[ModeLabel] {
        &self.domain
    }

    pub fn push(mut self, element: ElementSpec) -> Result<Self> {
        check_element(&self.basis, &element)?;
        self.stages.push(Stage::Element(element));
        Ok(self)
    }

    pub fn nest(mut self, inner: Circuit) -> Result<Self> {
        if inner.basis != self.basis {
            return Err(Error::BasisMismatch);
        }
        self.stages.push(Stage::Nested(inner));
        Ok(self)
    }

    pub fn with_domain(mut self, domain: Vec<ModeLabel>) -> Result<Self> {
        for m in &domain {
            if self.basis.index_of(m).is_none() {
                return Err(Error::UnknownMode(m.to_string()));
            }
        }
        self.domain = domain;
        Ok(self)
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Checks ports, parameters and nested bases after deserialization.
    pub fn validate(&self) -> Result<()> {
        for m in &self.domain {
            if self.basis.index_of(m).is_none() {
                return Err(Error::UnknownMode(m.to_string()));
            }
        }
        for stage in &self.stages {
            match stage {
                Stage::Element(e) => check_element(&self.basis, e)?,
                Stage::Nested(c) => {
                    if c.basis != self.basis {
                        return Err(Error::BasisMismatch);
                    }
                    c.validate()?;
                }
            }
        }
        Ok(())
    }

    /// All elements in application order, nesting flattened.
    pub fn elements(&self) -> Vec<&ElementSpec> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect<'a>(&'a self, out: &mut Vec<&'a ElementSpec>) {
        for stage in &self.stages {
            match stage {
                Stage::Element(e) => out.push(e),
                Stage::Nested(c) => c.collect(out),
            }
        }
    }

    /// The same structure with every element replaced by `f(element)`.
    pub fn map_elements(&self, f: &mut impl FnMut(&ElementSpec) -> ElementSpec) -> Circuit {
        Circuit {
            name: self.name.clone(),
            basis: self.basis,
            domain: self.domain.clone(),
            stages: self
                .stages
                .iter()
                .map(|s| match s {
                    Stage::Element(e) => Stage::Element(f(e)),
                    Stage::Nested(c) => Stage::Nested(c.map_elements(f)),
                })
                .collect(),
        }
    }

    /// Stages reversed, each element inverted. Domain is dropped.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            name: format!("{}^-1", self.name),
            basis: self.basis,
            domain: Vec::new(),
            stages: self
                .stages
                .iter()
                .rev()
                .map(|s| match s {
                    Stage::Element(e) => Stage::Element(e.inverse()),
                    Stage::Nested(c) => Stage::Nested(c.inverse()),
                })
                .collect(),
        }
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.name)?;
        for (i, e) in self.elements().iter().enumerate() {
            if i > 0 {
                f.write_str(" -> ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

fn check_element(basis: &BasisSpec, e: &ElementSpec) -> Result<()> {
    e.validate()?;
    let ports: Vec<u8> = match *e {
        ElementSpec::Pbs { path_a, path_b } => vec![path_a, path_b],
        ElementSpec::Spp { path, .. }
        | ElementSpec::DovePrism { path, .. }
        | ElementSpec::Mirror { path }
        | ElementSpec::Hwp { path, .. }
        | ElementSpec::Qwp { path, .. }
        | ElementSpec::PhaseShifter { path, .. } => path.into_iter().collect(),
    };
    for p in ports {
        basis.require_port(p)?;
    }
    Ok(())
}

/// Flattens and composes all stages in order.
///
/// Amplitude from the circuit's domain is tracked stage by stage; the first
/// element that sends any of it out of the window is named in the error.
pub fn compile(circuit: &Circuit) -> Result<OpticalOperator> {
    circuit.validate()?;
    let basis = circuit.basis;
    let idx: Vec<usize> = circuit
        .domain
        .iter()
        .map(|m| basis.index_of(m).expect("validated"))
        .collect();
    let n = basis.dim();
    let mut images = DMatrix::from_fn(n, idx.len(), |i, j| {
        if i == idx[j] {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let mut acc = OpticalOperator::identity(basis);
    for e in circuit.elements() {
        let op = e.build(&basis).map_err(|err| match err {
            Error::Leakage { mode, .. } => Error::Leakage {
                element: e.to_string(),
                mode,
            },
            other => other,
        })?;
        for i in (0..n).filter(|&i| op.is_leaky(i)) {
            if images.row(i).iter().any(|a| a.norm() > EXACT_TOL) {
                return Err(Error::Leakage {
                    element: e.to_string(),
                    mode: basis.label(i).expect("index in range").to_string(),
                });
            }
        }
        images = hilbert::mul(op.matrix(), &images);
        acc = hilbert::then(&acc, &op)?;
    }
    Ok(acc)
}

/// Ports and window shared by a family of circuits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Setup {
    pub basis: BasisSpec,
    pub main: u8,
    pub aux: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_arm: Option<u8>,
    /// Sagnac Dove-prism angle in radians; the sorter needs `pi/4`.
    pub dove_angle: f64,
}

impl Setup {
    /// Two ports, window `[-6, 5]`.
    pub fn single() -> Self {
        Self {
            basis: BasisSpec::default(),
            main: 0,
            aux: 1,
            control_arm: None,
            dove_angle: FRAC_PI_4,
        }
    }

    /// Three ports, window `[-6, 5]`; port 2 is the idle control arm.
    pub fn controlled() -> Self {
        Self {
            basis: BasisSpec::new(-6, 5, 3, true).expect("valid window"),
            control_arm: Some(2),
            ..Self::single()
        }
    }

    pub fn with_basis(self, basis: BasisSpec) -> Self {
        Self { basis, ..self }
    }

    fn check(&self) -> Result<()> {
        self.basis.require_polarization("parity sorter")?;
        self.basis.require_port(self.main)?;
        self.basis.require_port(self.aux)?;
        if self.main == self.aux {
            return Err(Error::InvalidParameter("main and aux ports coincide".into()));
        }
        Ok(())
    }

    /// Logical modes on `main` with H polarization.
    pub fn logical_domain(&self) -> Result<Vec<ModeLabel>> {
        self.basis.logical_modes(self.main, Polarization::H)
    }

    /// Logical modes on `main`, H block then V block.
    pub fn hybrid_domain(&self) -> Result<Vec<ModeLabel>> {
        gates::hybrid_subspace(&self.basis, self.main)
    }
}

impl Default for Setup {
    fn default() -> Self {
        Self::single()
    }
}

/// Polarization Sagnac sorter.
///
/// An H photon entering `main` with charge `l` leaves as
/// `(-i)^l |V, -l>` on `aux` for even `l` and `(-i)^l |H, l>` on `main` for
/// odd `l`. The half-wave plates at 22.5 and 67.5 degrees set the Sagnac to
/// diagonal input and map the parity-dependent output polarization back onto
/// H/V.
pub fn parity_sorter(setup: &Setup) -> Result<Circuit> {
    setup.check()?;
    let (a, b) = (setup.main, setup.aux);
    Circuit::new("parity_sorter", setup.basis)
        .push(ElementSpec::hwp(FRAC_PI_8, a))?
        .push(ElementSpec::pbs(a, b))?
        .push(ElementSpec::dove_prism(setup.dove_angle, a))?
        .push(ElementSpec::dove_prism(-setup.dove_angle, b))?
        .push(ElementSpec::mirror(a))?
        .push(ElementSpec::mirror(b))?
        .push(ElementSpec::pbs(a, b))?
        .push(ElementSpec::hwp(3.0 * FRAC_PI_8, a))?
        .push(ElementSpec::pbs(a, b))?
        .push(ElementSpec::mirror(b))?
        .with_domain(setup.logical_domain()?)
}

/// The sorter run backwards; undoes [`parity_sorter`] exactly.
pub fn parity_combiner(setup: &Setup) -> Result<Circuit> {
    Ok(parity_sorter(setup)?.inverse().renamed("parity_combiner"))
}

/// Cyclic shift `X`: `SPP(+1)`, then flip the sign of even charges.
pub fn x_gate_circuit(setup: &Setup) -> Result<Circuit> {
    let (a, b) = (setup.main, setup.aux);
    Circuit::new("X", setup.basis)
        .push(ElementSpec::spp(1, a))?
        .nest(parity_sorter(setup)?)?
        .push(ElementSpec::phase_shifter(0.0, b))?
        .push(ElementSpec::mirror(b))?
        .nest(parity_combiner(setup)?)?
        .with_domain(setup.logical_domain()?)
}

/// `X^2`: odd charges `l -> -l`, even charges `l -> -l - 2`.
pub fn x2_gate_circuit(setup: &Setup) -> Result<Circuit> {
    let (a, b) = (setup.main, setup.aux);
    Circuit::new("X2", setup.basis)
        .nest(parity_sorter(setup)?)?
        .push(ElementSpec::mirror(b))?
        .push(ElementSpec::spp(2, b))?
        .push(ElementSpec::mirror(a))?
        .push(ElementSpec::phase_shifter(0.0, b))?
        .nest(parity_combiner(setup)?)?
        .with_domain(setup.logical_domain()?)
}

/// `X^dag`: flip the sign of even charges, then `SPP(-1)`.
pub fn xdag_gate_circuit(setup: &Setup) -> Result<Circuit> {
    let (a, b) = (setup.main, setup.aux);
    Circuit::new("Xdag", setup.basis)
        .nest(parity_sorter(setup)?)?
        .push(ElementSpec::phase_shifter(0.0, b))?
        .push(ElementSpec::mirror(b))?
        .nest(parity_combiner(setup)?)?
        .push(ElementSpec::spp(-1, a))?
        .with_domain(setup.logical_domain()?)
}

/// The three cyclic gates of the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    X,
    X2,
    Xdag,
}

impl GateKind {
    pub const ALL: [GateKind; 3] = [GateKind::X, GateKind::X2, GateKind::Xdag];

    /// Exponent `n` in `X^n`.
    pub fn power(self) -> i64 {
        match self {
            GateKind::X => 1,
            GateKind::X2 => 2,
            GateKind::Xdag => -1,
        }
    }

    pub fn circuit(self, setup: &Setup) -> Result<Circuit> {
        match self {
            GateKind::X => x_gate_circuit(setup),
            GateKind::X2 => x2_gate_circuit(setup),
            GateKind::Xdag => xdag_gate_circuit(setup),
        }
    }

    pub fn target(self) -> GateTarget {
        gates::x_power(hilbert::LOGICAL_DIM, self.power()).expect("d = 4")
    }

    /// Logical index reached from logical index `k`.
    pub fn expected_index(self, k: usize) -> usize {
        let d = hilbert::LOGICAL_DIM as i64;
        (k as i64 + self.power()).rem_euclid(d) as usize
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GateKind::X => "X",
            GateKind::X2 => "X2",
            GateKind::Xdag => "Xdag",
        })
    }
}

impl std::str::FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(GateKind::X),
            "x2" | "x^2" => Ok(GateKind::X2),
            "xdag" | "x^dag" | "xdagger" => Ok(GateKind::Xdag),
            other => Err(Error::InvalidParameter(format!("unknown gate `{other}`"))),
        }
    }
}

/// `|H><H| (x) U + |V><V| (x) I` on `main`, with `inner` providing `U`.
///
/// PBS1 sends V to the control arm while `inner` acts on the H photon; a
/// trim phase on `main` cancels the global phase `inner` picks up, so the two
/// arms recombine in phase.
pub fn controlled_circuit(setup: &Setup, inner: Circuit) -> Result<Circuit> {
    let c = setup
        .control_arm
        .ok_or_else(|| Error::InvalidParameter("setup has no control arm".into()))?;
    setup.basis.require_port(c)?;
    if c == setup.main || c == setup.aux {
        return Err(Error::InvalidParameter("control arm must be a separate port".into()));
    }
    if inner.basis != setup.basis {
        return Err(Error::BasisMismatch);
    }
    let domain = setup.logical_domain()?;
    let op = compile(&inner.clone().with_domain(domain.clone())?)?;
    let block = op.restrict(&domain)?;
    let deviation = hilbert::unitarity_deviation(&block);
    if deviation > FIT_TOL {
        return Err(Error::InnerTouchesPolarization {
            name: inner.name.clone(),
        });
    }
    let trim = -dominant_phase(&block);
    let name = format!("C{}", inner.name);
    Circuit::new(name, setup.basis)
        .push(ElementSpec::pbs(setup.main, c))?
        .nest(inner)?
        .push(ElementSpec::phase_shifter(trim, setup.main))?
        .push(ElementSpec::phase_shifter(0.0, c))?
        .push(ElementSpec::pbs(setup.main, c))?
        .with_domain(setup.hybrid_domain()?)
}

/// Phase of the sum of each column's largest entry; the global phase of a
/// phased permutation with uniform phases.
fn dominant_phase(m: &DMatrix<C64>) -> f64 {
    let total: C64 = m
        .column_iter()
        .map(|col| {
            *col.iter()
                .max_by(|x, y| x.norm().total_cmp(&y.norm()))
                .expect("non-empty column")
        })
        .sum();
    total.arg()
}

/// Where the sorter sends one input charge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SorterRoute {
    pub oam: i32,
    /// Output mode the parity rule predicts.
    pub expected: ModeLabel,
    /// Probability found on `expected`; `None` when the input leaks.
    pub probability: Option<f64>,
}

impl SorterRoute {
    pub fn ok(&self) -> bool {
        self.probability.is_some_and(|p| (p - 1.0).abs() <= EXACT_TOL)
    }
}

/// Routes every charge in `oams` through the sorter.
///
/// Charges whose flip leaves the window are reported with no probability.
pub fn sorter_routes(setup: &Setup, oams: impl IntoIterator<Item = i32>) -> Result<Vec<SorterRoute>> {
    let sorter = Circuit {
        domain: Vec::new(),
        ..parity_sorter(setup)?
    };
    let op = compile(&sorter)?;
    oams.into_iter()
        .map(|l| {
            let input = ModeLabel::new(Polarization::H, l, setup.main);
            let expected = if l.rem_euclid(2) == 0 {
                ModeLabel::new(Polarization::V, -l, setup.aux)
            } else {
                ModeLabel::new(Polarization::H, l, setup.main)
            };
            let state = hilbert::PureState::basis_state(setup.basis, input)?;
            let probability = match hilbert::apply(&op, &state) {
                Ok(out) => match out.amplitude(&expected) {
                    Ok(a) => Some(a.norm_sqr()),
                    Err(Error::UnknownMode(_)) => None,
                    Err(e) => return Err(e),
                },
                Err(Error::Leakage { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(SorterRoute {
                oam: l,
                expected,
                probability,
            })
        })
        .collect()
}

/// `max |(combiner * sorter - I)_jk|` over the whole basis.
pub fn round_trip_deviation(setup: &Setup) -> Result<f64> {
    let strip = |c: Circuit| Circuit {
        domain: Vec::new(),
        ..c
    };
    let s = compile(&strip(parity_sorter(setup)?))?;
    let c = compile(&strip(parity_combiner(setup)?))?;
    let product = c.matrix() * s.matrix();
    let n = setup.basis.dim();
    Ok((product - DMatrix::<C64>::identity(n, n))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}
