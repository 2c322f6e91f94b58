//! Heralded-photon counting model.
//!
//! A run prepares `rho = |psi><psi|`, passes it through an imperfect
//! preparation channel, the (possibly perturbed) circuit and an imperfect
//! detection channel, and reads Born probabilities off the analyzer set:
//!
//! * preparation: mode `l` survives with probability `f_l`, the rest is
//!   spread evenly over the other logical modes;
//! * detection: the same form with the coupling efficiencies `eta_l`;
//! * analysis SLM: a fraction `1 - s` of each analyzer's signal is replaced by
//!   the mean over the analyzer set.
//!
//! Both scatter channels act on OAM only and keep polarization and port
//! coherences intact.

mod calibrate;
mod rng;
mod scenarios;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::circuit::{compile, Circuit};
use crate::error::{Error, Result};
use crate::hilbert::{
    BasisSpec, ModeLabel, OpticalOperator, PureState, C64, EXACT_TOL, LOGICAL_DIM, LOGICAL_OAM,
};

pub use calibrate::{calibrate_noise, calibrate_uniform_coupling, expected_averages, Calibration};
pub use rng::stream;
pub use scenarios::{
    bases_experiment, controlled_experiment, perturb, run_bases_scenario, run_controlled_scenario,
    run_experiment, run_table1_scenario, sample_counts, table1_experiments, Control, CountTable,
    Experiment, ScenarioRun,
};

/// Photon-pair source and coincidence detection settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceSpec {
    /// Pair rate per milliwatt of pump, Hz/mW.
    pub pair_rate_per_mw: f64,
    /// Pump power, mW.
    pub pump_power: f64,
    /// Flat accidental coincidence rate per measurement, Hz.
    pub accidental_rate: f64,
    pub coincidence_efficiency: f64,
    /// Seconds per measurement.
    pub integration_time: f64,
}

impl Default for SourceSpec {
    fn default() -> Self {
        Self {
            pair_rate_per_mw: 9760.0,
            pump_power: 6.0,
            accidental_rate: 5.0,
            coincidence_efficiency: 0.232,
            integration_time: 1.0,
        }
    }
}

impl SourceSpec {
    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("pair_rate_per_mw", self.pair_rate_per_mw),
            ("pump_power", self.pump_power),
            ("accidental_rate", self.accidental_rate),
            ("integration_time", self.integration_time),
        ];
        for (name, v) in rates {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be >= 0")));
            }
        }
        check_unit("coincidence_efficiency", self.coincidence_efficiency)
    }

    /// Detected coincidence rate for unit detection probability, Hz.
    pub fn signal_rate(&self) -> f64 {
        self.pair_rate_per_mw * self.pump_power * self.coincidence_efficiency
    }

    /// Mean accidental counts per measurement.
    pub fn accidental_counts(&self) -> f64 {
        self.accidental_rate * self.integration_time
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {v} is outside [0, 1]")))
    }
}

/// Serializes an OAM-keyed map with string keys, which TOML requires.
mod mode_map {
    use std::collections::BTreeMap;

    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(map: &BTreeMap<i32, f64>, s: S) -> Result<S::Ok, S::Error> {
        let keyed: Vec<(String, f64)> = map.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        s.collect_map(keyed)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<i32, f64>, D::Error> {
        BTreeMap::<String, f64>::deserialize(d)?
            .into_iter()
            .map(|(k, v)| {
                k.trim()
                    .parse::<i32>()
                    .map(|k| (k, v))
                    .map_err(|_| D::Error::custom(format!("`{k}` is not an OAM charge")))
            })
            .collect()
    }
}

/// Imperfections of the optical setup. Missing map entries mean 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    /// Probability `eta_l` that output mode `l` couples into its own analyzer mode.
    #[serde(with = "mode_map")]
    pub coupling_efficiency: BTreeMap<i32, f64>,
    /// Probability `f_l` that the preparation SLM produces mode `l` cleanly.
    #[serde(with = "mode_map")]
    pub preparation_fidelity: BTreeMap<i32, f64>,
    /// Standard deviation of wave-plate angle errors, radians.
    pub waveplate_angle_sigma: f64,
    /// Standard deviation of Dove-prism angle errors, radians.
    pub dp_angle_sigma: f64,
    /// Standard deviation of interferometer arm-phase errors, radians.
    pub interferometer_phase_sigma: f64,
    pub slm_projection_efficiency: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::ideal()
    }
}

impl NoiseModel {
    pub fn ideal() -> Self {
        Self {
            coupling_efficiency: BTreeMap::new(),
            preparation_fidelity: BTreeMap::new(),
            waveplate_angle_sigma: 0.0,
            dp_angle_sigma: 0.0,
            interferometer_phase_sigma: 0.0,
            slm_projection_efficiency: 1.0,
        }
    }

    /// The same coupling efficiency for every logical mode.
    pub fn uniform_coupling(eta: f64) -> Self {
        Self {
            coupling_efficiency: LOGICAL_OAM.iter().map(|&l| (l, eta)).collect(),
            ..Self::ideal()
        }
    }

    pub fn coupling(&self, oam: i32) -> f64 {
        self.coupling_efficiency.get(&oam).copied().unwrap_or(1.0)
    }

    pub fn preparation(&self, oam: i32) -> f64 {
        self.preparation_fidelity.get(&oam).copied().unwrap_or(1.0)
    }

    pub fn has_perturbations(&self) -> bool {
        self.waveplate_angle_sigma > 0.0
            || self.dp_angle_sigma > 0.0
            || self.interferometer_phase_sigma > 0.0
    }

    pub fn validate(&self) -> Result<()> {
        for (name, map) in [
            ("coupling_efficiency", &self.coupling_efficiency),
            ("preparation_fidelity", &self.preparation_fidelity),
        ] {
            for (&l, &v) in map {
                if !LOGICAL_OAM.contains(&l) {
                    return Err(Error::InvalidParameter(format!(
                        "{name} key {l} is not a logical OAM mode"
                    )));
                }
                check_unit(name, v)?;
            }
        }
        for (name, v) in [
            ("waveplate_angle_sigma", self.waveplate_angle_sigma),
            ("dp_angle_sigma", self.dp_angle_sigma),
            ("interferometer_phase_sigma", self.interferometer_phase_sigma),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be >= 0")));
            }
        }
        check_unit("slm_projection_efficiency", self.slm_projection_efficiency)
    }
}

/// Index sets of the logical modes in every (port, polarization) block.
fn logical_blocks(basis: &BasisSpec) -> Vec<[usize; LOGICAL_DIM]> {
    let mut blocks = Vec::new();
    for path in 0..basis.paths() {
        for &pol in basis.polarizations() {
            let idx: Option<Vec<usize>> = LOGICAL_OAM
                .iter()
                .map(|&l| basis.index_of(&ModeLabel::new(pol, l, path)))
                .collect();
            if let Some(idx) = idx {
                blocks.push(idx.try_into().expect("four logical modes"));
            }
        }
    }
    blocks
}

/// OAM scatter channel: mode `l` survives with probability `keep(l)`; the rest
/// moves evenly onto the other three logical modes, coherently across blocks.
pub(crate) fn scatter(
    rho: &DMatrix<C64>,
    basis: &BasisSpec,
    keep: impl Fn(i32) -> f64,
) -> DMatrix<C64> {
    let blocks = logical_blocks(basis);
    let n = basis.dim();
    let mut amp = vec![1.0; n];
    for block in &blocks {
        for (k, &i) in block.iter().enumerate() {
            amp[i] = keep(LOGICAL_OAM[k]).sqrt();
        }
    }
    let mut out = DMatrix::from_fn(n, n, |i, j| rho[(i, j)] * (amp[i] * amp[j]));
    for (k, &l) in LOGICAL_OAM.iter().enumerate() {
        let w = (1.0 - keep(l)) / (LOGICAL_DIM - 1) as f64;
        if w <= 0.0 {
            continue;
        }
        for m in (0..LOGICAL_DIM).filter(|&m| m != k) {
            for b in &blocks {
                for b2 in &blocks {
                    out[(b[m], b2[m])] += rho[(b[k], b2[k])] * w;
                }
            }
        }
    }
    out
}

/// Absolute detection probability for each analyzer, crosstalk included.
pub fn detection_probabilities(
    op: &OpticalOperator,
    input: &PureState,
    analyzers: &[PureState],
    noise: &NoiseModel,
) -> Result<Vec<f64>> {
    noise.validate()?;
    input.require_normalized()?;
    let basis = op.basis();
    if input.basis() != basis {
        return Err(Error::BasisMismatch);
    }
    let psi = input.amplitudes();
    let rho = psi * psi.adjoint();
    let rho = scatter(&rho, basis, |l| noise.preparation(l));
    for i in 0..basis.dim() {
        if op.is_leaky(i) && rho[(i, i)].norm() > EXACT_TOL {
            return Err(Error::Leakage {
                element: "circuit".into(),
                mode: basis.label(i).expect("index in range").to_string(),
            });
        }
    }
    let u = op.matrix();
    // U rho U^dag = U (U rho)^dag for Hermitian rho; keeps U on the sparse side.
    let rho = crate::hilbert::mul(u, &crate::hilbert::mul(u, &rho).adjoint());
    let rho = scatter(&rho, basis, |l| noise.coupling(l));
    let q = analyzers
        .iter()
        .map(|a| {
            if a.basis() != basis {
                return Err(Error::BasisMismatch);
            }
            a.require_normalized()?;
            let v = a.amplitudes();
            Ok((v.adjoint() * &rho * v)[(0, 0)].re.max(0.0))
        })
        .collect::<Result<Vec<f64>>>()?;
    let s = noise.slm_projection_efficiency;
    let mean = q.iter().sum::<f64>() / q.len().max(1) as f64;
    Ok(q.iter().map(|&qj| s * qj + (1.0 - s) * mean).collect())
}

/// Coincidence rates in Hz for each analyzer of a measurement set.
pub fn expected_rates(
    op: &OpticalOperator,
    input: &PureState,
    analyzers: &[PureState],
    source: &SourceSpec,
    noise: &NoiseModel,
) -> Result<Vec<f64>> {
    source.validate()?;
    let r = source.signal_rate();
    Ok(detection_probabilities(op, input, analyzers, noise)?
        .into_iter()
        .map(|p| r * p + source.accidental_rate)
        .collect())
}

/// Coincidence rate in Hz for a single input/analyzer pair, unperturbed circuit.
pub fn expected_rate(
    circuit: &Circuit,
    input: &PureState,
    analyzer: &PureState,
    source: &SourceSpec,
    noise: &NoiseModel,
) -> Result<f64> {
    let op = compile(circuit)?;
    Ok(expected_rates(&op, input, std::slice::from_ref(analyzer), source, noise)?[0])
}
