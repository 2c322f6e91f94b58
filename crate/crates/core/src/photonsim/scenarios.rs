//! Measurement sets, Poisson counting and the scenario drivers.

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{detection_probabilities, expected_rates, rng::stream, NoiseModel, SourceSpec};
use crate::circuit::{compile, controlled_circuit, Circuit, GateKind, Setup};
use crate::elements::{normalize_angle, ElementSpec};
use crate::error::{Error, Result};
use crate::gates::{self, ConversionTable, LabeledState};
use crate::hilbert::{apply, jones, Jones, PureState};

/// Tag reserved for the per-input perturbation stream.
const PERTURB_TAG: u64 = u64::MAX;

/// One circuit measured with a set of inputs against a set of analyzers.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub name: String,
    /// Separates the RNG streams of experiments sharing a seed.
    pub tag: u64,
    pub circuit: Circuit,
    pub inputs: Vec<LabeledState>,
    pub analyzers: Vec<LabeledState>,
    /// Analyzer index each input should reach.
    pub expected: Vec<usize>,
}

impl Experiment {
    fn input_states(&self) -> Vec<&PureState> {
        self.inputs.iter().map(|s| &s.state).collect()
    }

    fn analyzer_states(&self) -> Vec<PureState> {
        self.analyzers.iter().map(|s| s.state.clone()).collect()
    }

    fn validate(&self) -> Result<()> {
        gates::require_orthonormal(&self.input_states())?;
        gates::require_orthonormal(&self.analyzers.iter().map(|s| &s.state).collect::<Vec<_>>())?;
        if self.expected.len() != self.inputs.len()
            || self.expected.iter().any(|&j| j >= self.analyzers.len())
        {
            return Err(Error::InvalidParameter(format!(
                "{}: expected map does not fit the analyzer set",
                self.name
            )));
        }
        Ok(())
    }

    /// Noise-averaged table with no accidentals and unperturbed elements.
    pub fn expected_table(&self, noise: &NoiseModel) -> Result<ConversionTable> {
        self.validate()?;
        let op = compile(&self.circuit)?;
        let analyzers = self.analyzer_states();
        let rows = self
            .inputs
            .iter()
            .map(|s| detection_probabilities(&op, &s.state, &analyzers, noise))
            .collect::<Result<Vec<_>>>()?;
        ConversionTable::from_weights(self.input_labels(), self.analyzer_labels(), &rows)
    }

    pub fn input_labels(&self) -> Vec<String> {
        self.inputs.iter().map(|s| s.label.clone()).collect()
    }

    pub fn analyzer_labels(&self) -> Vec<String> {
        self.analyzers.iter().map(|s| s.label.clone()).collect()
    }
}

/// Raw coincidence counts `N_ij` with everything needed to redraw them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountTable {
    pub name: String,
    pub inputs: Vec<String>,
    pub analyzers: Vec<String>,
    pub counts: Vec<Vec<u64>>,
    pub seed: u64,
    pub source: SourceSpec,
}

impl CountTable {
    /// `P(i, j) = N_ij / sum_k N_ik` on the raw counts.
    pub fn conversion_table(&self) -> Result<ConversionTable> {
        ConversionTable::from_counts(self.inputs.clone(), self.analyzers.clone(), &self.counts)
    }

    /// Same ratio after subtracting the mean accidental counts from every
    /// cell, clamped at zero.
    pub fn background_corrected(&self) -> Result<ConversionTable> {
        let bg = self.source.accidental_counts();
        let rows: Vec<Vec<f64>> = self
            .counts
            .iter()
            .map(|row| row.iter().map(|&n| (n as f64 - bg).max(0.0)).collect())
            .collect();
        ConversionTable::from_weights(self.inputs.clone(), self.analyzers.clone(), &rows)
    }
}

/// Redraws wave-plate, Dove-prism and arm-phase settings around their nominal values.
pub fn perturb(circuit: &Circuit, noise: &NoiseModel, rng: &mut impl Rng) -> Result<Circuit> {
    let normal = |sigma: f64| {
        Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(e.to_string()))
    };
    let wp = normal(noise.waveplate_angle_sigma)?;
    let dp = normal(noise.dp_angle_sigma)?;
    let ph = normal(noise.interferometer_phase_sigma)?;
    Ok(circuit.map_elements(&mut |e| match *e {
        ElementSpec::Hwp { theta, path } => ElementSpec::Hwp {
            theta: normalize_angle(theta + wp.sample(rng)),
            path,
        },
        ElementSpec::Qwp { theta, path } => ElementSpec::Qwp {
            theta: normalize_angle(theta + wp.sample(rng)),
            path,
        },
        ElementSpec::DovePrism { alpha, path } => ElementSpec::DovePrism {
            alpha: normalize_angle(alpha + dp.sample(rng)),
            path,
        },
        ElementSpec::PhaseShifter { phi, path } => ElementSpec::PhaseShifter {
            phi: normalize_angle(phi + ph.sample(rng)),
            path,
        },
        ref other => other.clone(),
    }))
}

fn poisson(mean: f64, rng: &mut impl Rng) -> Result<u64> {
    if mean <= 0.0 {
        return Ok(0);
    }
    let d = Poisson::new(mean).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(d.sample(rng) as u64)
}

/// Draws `N_ij ~ Poisson(rate_ij * T)` for every input/analyzer cell.
///
/// Element perturbations are drawn once per input; every cell has its own
/// stream, so the result does not depend on scheduling.
pub fn sample_counts(
    experiment: &Experiment,
    source: &SourceSpec,
    noise: &NoiseModel,
    seed: u64,
) -> Result<CountTable> {
    experiment.validate()?;
    source.validate()?;
    noise.validate()?;
    let nominal = compile(&experiment.circuit)?;
    let analyzers = experiment.analyzer_states();
    let tag = experiment.tag;
    let counts = experiment
        .inputs
        .par_iter()
        .enumerate()
        .map(|(i, input)| {
            let op = if noise.has_perturbations() {
                let mut rng = stream(seed, &[tag, i as u64, PERTURB_TAG]);
                compile(&perturb(&experiment.circuit, noise, &mut rng)?)?
            } else {
                nominal.clone()
            };
            let rates = expected_rates(&op, &input.state, &analyzers, source, noise)?;
            rates
                .iter()
                .enumerate()
                .map(|(j, &r)| {
                    let mut rng = stream(seed, &[tag, i as u64, j as u64]);
                    poisson(r * source.integration_time, &mut rng)
                })
                .collect::<Result<Vec<u64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CountTable {
        name: experiment.name.clone(),
        inputs: experiment.input_labels(),
        analyzers: experiment.analyzer_labels(),
        counts,
        seed,
        source: *source,
    })
}

/// Counts plus the background-corrected conversion table of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRun {
    pub name: String,
    pub counts: CountTable,
    pub table: ConversionTable,
    pub expected: Vec<usize>,
}

impl ScenarioRun {
    pub fn expected_probabilities(&self) -> Result<Vec<f64>> {
        self.table.expected_mode_probabilities(&self.expected)
    }

    pub fn efficiency(&self) -> Result<f64> {
        gates::summarize_efficiency(&self.table, &self.expected)
    }
}

pub fn run_experiment(
    experiment: &Experiment,
    source: &SourceSpec,
    noise: &NoiseModel,
    seed: u64,
) -> Result<ScenarioRun> {
    let counts = sample_counts(experiment, source, noise, seed)?;
    Ok(ScenarioRun {
        name: experiment.name.clone(),
        table: counts.background_corrected()?,
        counts,
        expected: experiment.expected.clone(),
    })
}

fn lift(states: Vec<LabeledState>, setup: &Setup, pol: Jones, prefix: &str) -> Result<Vec<LabeledState>> {
    states
        .into_iter()
        .map(|s| {
            Ok(LabeledState {
                label: format!("{prefix}{}", s.label),
                state: s.state.embed(setup.basis, setup.main, pol)?,
            })
        })
        .collect()
}

/// Ideal images `U b_i`, labelled `name*label`.
fn images(circuit: &Circuit, inputs: &[LabeledState]) -> Result<Vec<LabeledState>> {
    let op = compile(circuit)?;
    inputs
        .iter()
        .map(|s| {
            Ok(LabeledState {
                label: format!("{}*{}", circuit.name(), s.label),
                state: apply(&op, &s.state)?,
            })
        })
        .collect()
}

/// X, X^2 and X^dag on computational inputs with computational analyzers.
pub fn table1_experiments(setup: &Setup) -> Result<Vec<Experiment>> {
    GateKind::ALL
        .iter()
        .enumerate()
        .map(|(g, &kind)| {
            let b1 = lift(gates::basis(1)?, setup, jones::H, "")?;
            Ok(Experiment {
                name: format!("table1_{kind}"),
                tag: g as u64,
                circuit: kind.circuit(setup)?,
                inputs: b1.clone(),
                analyzers: b1,
                expected: (0..4).map(|k| kind.expected_index(k)).collect(),
            })
        })
        .collect()
}

/// Inputs from test basis `n`, analyzed in the basis of their ideal images.
///
/// Inputs enter `main` of `setup` horizontally polarized.
pub fn bases_experiment(circuit: &Circuit, setup: &Setup, n: usize) -> Result<Experiment> {
    if circuit.basis() != &setup.basis {
        return Err(Error::BasisMismatch);
    }
    let inputs = lift(gates::basis(n)?, setup, jones::H, "")?;
    let analyzers = images(circuit, &inputs)?;
    Ok(Experiment {
        name: format!("bases_{}_B{n}", circuit.name()),
        tag: 100 + n as u64,
        circuit: circuit.clone(),
        expected: (0..inputs.len()).collect(),
        inputs,
        analyzers,
    })
}

/// Control-qubit polarization of a controlled-gate run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Control {
    H,
    Diagonal,
}

impl std::str::FromStr for Control {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "h" | "horizontal" => Ok(Control::H),
            "d" | "diag" | "diagonal" => Ok(Control::Diagonal),
            other => Err(Error::InvalidParameter(format!("unknown control `{other}`"))),
        }
    }
}

impl std::fmt::Display for Control {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Control::H => "h",
            Control::Diagonal => "diagonal",
        })
    }
}

/// Controlled `inner` with computational targets.
///
/// With H control the analyzers are `H (x) |l>`; with diagonal control they
/// are the ideal hybrid images `(|H> U|k> + |V> |k>)/sqrt2`.
pub fn controlled_experiment(inner: GateKind, control: Control, setup: &Setup) -> Result<Experiment> {
    let circuit = controlled_circuit(setup, inner.circuit(setup)?)?;
    let (pol, prefix) = match control {
        Control::H => (jones::H, "H"),
        Control::Diagonal => (jones::D, "D"),
    };
    let inputs = lift(gates::basis(1)?, setup, pol, prefix)?;
    let tag = 200 + 10 * GateKind::ALL.iter().position(|&k| k == inner).expect("listed") as u64;
    let (analyzers, expected) = match control {
        Control::H => (
            lift(gates::basis(1)?, setup, jones::H, "H")?,
            (0..4).map(|k| inner.expected_index(k)).collect(),
        ),
        Control::Diagonal => {
            let mut imgs = images(&circuit, &inputs)?;
            for (k, img) in imgs.iter_mut().enumerate() {
                let l = crate::hilbert::LOGICAL_OAM;
                img.label = format!("H|{}>+V|{}>", l[inner.expected_index(k)], l[k]);
            }
            (imgs, (0..4).collect())
        }
    };
    Ok(Experiment {
        name: format!("controlled_{inner}_{control}"),
        tag: tag + if control == Control::H { 0 } else { 1 },
        circuit,
        inputs,
        analyzers,
        expected,
    })
}

pub fn run_table1_scenario(source: &SourceSpec, noise: &NoiseModel, seed: u64) -> Result<Vec<ScenarioRun>> {
    table1_experiments(&Setup::single())?
        .iter()
        .map(|e| run_experiment(e, source, noise, seed))
        .collect()
}

pub fn run_bases_scenario(
    circuit: &Circuit,
    setup: &Setup,
    n: usize,
    source: &SourceSpec,
    noise: &NoiseModel,
    seed: u64,
) -> Result<ScenarioRun> {
    run_experiment(&bases_experiment(circuit, setup, n)?, source, noise, seed)
}

pub fn run_controlled_scenario(
    inner: GateKind,
    control: Control,
    source: &SourceSpec,
    noise: &NoiseModel,
    seed: u64,
) -> Result<ScenarioRun> {
    run_experiment(&controlled_experiment(inner, control, &Setup::controlled())?, source, noise, seed)
}
