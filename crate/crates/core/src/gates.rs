//! Ideal gate targets, the superposition test bases and conversion metrics.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    unitarity_deviation, BasisSpec, ModeLabel, OpticalOperator, Polarization, PureState, C64,
    EXACT_TOL, FIT_TOL, LOGICAL_DIM, LOGICAL_OAM,
};

/// An ideal `d x d` (or `2d x 2d` controlled) unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct GateTarget {
    name: String,
    matrix: DMatrix<C64>,
}

impl GateTarget {
    pub fn new(name: impl Into<String>, matrix: DMatrix<C64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let deviation = unitarity_deviation(&matrix);
        if deviation > EXACT_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self {
            name: name.into(),
            matrix,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn dagger(&self) -> GateTarget {
        GateTarget {
            name: format!("{}^dag", self.name),
            matrix: self.matrix.adjoint(),
        }
    }

    /// `self` after `first`, i.e. the matrix product `self * first`.
    pub fn after(&self, first: &GateTarget) -> Result<GateTarget> {
        if self.dimension() != first.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                found: first.dimension(),
            });
        }
        Ok(GateTarget {
            name: format!("{}*{}", self.name, first.name),
            matrix: &self.matrix * &first.matrix,
        })
    }

    /// Places the target on `modes` of a larger basis, identity elsewhere.
    pub fn embed(&self, basis: &BasisSpec, modes: &[ModeLabel]) -> Result<OpticalOperator> {
        if modes.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                found: modes.len(),
            });
        }
        let idx = modes
            .iter()
            .map(|m| basis.index_of(m).ok_or_else(|| Error::UnknownMode(m.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let n = basis.dim();
        let mut m = DMatrix::identity(n, n);
        for &i in &idx {
            m[(i, i)] = C64::new(0.0, 0.0);
        }
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                m[(i, j)] = self.matrix[(a, b)];
            }
        }
        OpticalOperator::unitary(*basis, m)
    }
}

fn require_dim(d: usize) -> Result<()> {
    if d < 2 {
        Err(Error::InvalidParameter(format!("qudit dimension {d} < 2")))
    } else {
        Ok(())
    }
}

/// `e^{i 2 pi / d}`.
pub fn omega(d: usize) -> C64 {
    C64::from_polar(1.0, TAU / d as f64)
}

/// Cyclic shift `|k> -> |k + 1 mod d>`.
pub fn pauli_x(d: usize) -> Result<GateTarget> {
    x_power(d, 1)
}

/// `diag(1, w, w^2, ..., w^{d-1})`.
pub fn pauli_z(d: usize) -> Result<GateTarget> {
    require_dim(d)?;
    let w = omega(d);
    let m = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            w.powu(i as u32)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    GateTarget::new("Z", m)
}

/// `X^n`; negative `n` counts backwards, so `x_power(d, -1)` is `X^dag`.
pub fn x_power(d: usize, n: i64) -> Result<GateTarget> {
    require_dim(d)?;
    let shift = n.rem_euclid(d as i64) as usize;
    let m = DMatrix::from_fn(d, d, |i, j| {
        if i == (j + shift) % d {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let name = match n {
        1 => "X".to_string(),
        -1 => "X^dag".to_string(),
        n => format!("X^{n}"),
    };
    GateTarget::new(name, m)
}

fn z_power(d: usize, n: i64) -> Result<GateTarget> {
    require_dim(d)?;
    let shift = n.rem_euclid(d as i64) as u32;
    let w = omega(d);
    let m = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            w.powu(i as u32 * shift)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    GateTarget::new(format!("Z^{n}"), m)
}

/// Weyl operator `X^a Z^b`.
pub fn weyl(d: usize, a: i64, b: i64) -> Result<GateTarget> {
    let m = x_power(d, a)?.matrix * z_power(d, b)?.matrix;
    GateTarget::new(format!("W({a},{b})"), m)
}

/// `|H><H| (x) U + |V><V| (x) I`, with the H block first.
pub fn controlled_target(u: &GateTarget) -> Result<GateTarget> {
    let d = u.dimension();
    let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0].map(|x| C64::new(x, 0.0)));
    let v = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0].map(|x| C64::new(x, 0.0)));
    let m = h.kronecker(&u.matrix) + v.kronecker(&DMatrix::identity(d, d));
    GateTarget::new(format!("C{}", u.name), m)
}

/// Logical modes on one port with horizontal polarization.
pub fn logical_subspace(basis: &BasisSpec, path: u8) -> Result<Vec<ModeLabel>> {
    basis.logical_modes(path, Polarization::H)
}

/// Logical modes on one port, H block then V block.
pub fn hybrid_subspace(basis: &BasisSpec, path: u8) -> Result<Vec<ModeLabel>> {
    let mut modes = basis.logical_modes(path, Polarization::H)?;
    modes.extend(basis.logical_modes(path, Polarization::V)?);
    Ok(modes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EigenKind {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

/// A state with the label it carries in tables.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledState {
    pub label: String,
    pub state: PureState,
}

impl fmt::Display for LabeledState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

/// `(|l1> +- |l2>)/sqrt2` or `(|l1> +- i|l2>)/sqrt2` on the bare qudit.
pub fn eigenbasis_state(kind: EigenKind, sign: Sign, l1: i32, l2: i32) -> Result<LabeledState> {
    if l1 == l2 {
        return Err(Error::InvalidParameter("eigenstate needs two distinct modes".into()));
    }
    let k1 = crate::hilbert::logical_index(l1).ok_or_else(|| Error::UnknownMode(format!("|{l1}>")))?;
    let k2 = crate::hilbert::logical_index(l2).ok_or_else(|| Error::UnknownMode(format!("|{l2}>")))?;
    let s = match sign {
        Sign::Plus => 1.0,
        Sign::Minus => -1.0,
    };
    let second = match kind {
        EigenKind::X => C64::new(s, 0.0),
        EigenKind::Y => C64::new(0.0, s),
    };
    let mut amps = [C64::new(0.0, 0.0); LOGICAL_DIM];
    amps[k1] = C64::new(FRAC_1_SQRT_2, 0.0);
    amps[k2] = second * FRAC_1_SQRT_2;
    let label = format!(
        "{}{}({l1},{l2})",
        match kind {
            EigenKind::X => "x",
            EigenKind::Y => "y",
        },
        match sign {
            Sign::Plus => "+",
            Sign::Minus => "-",
        }
    );
    Ok(LabeledState {
        label,
        state: PureState::logical(amps)?,
    })
}

/// Computational-basis state `|l>` on the bare qudit.
pub fn computational_state(l: i32) -> Result<LabeledState> {
    let k = crate::hilbert::logical_index(l).ok_or_else(|| Error::UnknownMode(format!("|{l}>")))?;
    let mut amps = [C64::new(0.0, 0.0); LOGICAL_DIM];
    amps[k] = C64::new(1.0, 0.0);
    Ok(LabeledState {
        label: format!("|{l}>"),
        state: PureState::logical(amps)?,
    })
}

/// Test basis `n` in `1..=7`; basis 1 is computational.
pub fn basis(n: usize) -> Result<Vec<LabeledState>> {
    let (kind, pairs) = match n {
        1 => return LOGICAL_OAM.iter().map(|&l| computational_state(l)).collect(),
        2 => (EigenKind::X, [(-2, -1), (0, 1)]),
        3 => (EigenKind::Y, [(-2, -1), (0, 1)]),
        4 => (EigenKind::X, [(-2, 0), (-1, 1)]),
        5 => (EigenKind::Y, [(-2, 0), (-1, 1)]),
        6 => (EigenKind::X, [(-2, 1), (-1, 0)]),
        7 => (EigenKind::Y, [(-2, 1), (-1, 0)]),
        other => return Err(Error::InvalidBasisIndex(other)),
    };
    let mut out = Vec::with_capacity(4);
    for (l1, l2) in pairs {
        out.push(eigenbasis_state(kind, Sign::Plus, l1, l2)?);
        out.push(eigenbasis_state(kind, Sign::Minus, l1, l2)?);
    }
    Ok(out)
}

/// `max |<s_i|s_j> - delta_ij|` over a set of states.
pub fn orthonormality_deviation(states: &[&PureState]) -> Result<f64> {
    let mut worst = 0.0f64;
    for (i, a) in states.iter().enumerate() {
        for (j, b) in states.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((a.inner(b)? - C64::new(target, 0.0)).norm());
        }
    }
    Ok(worst)
}

pub(crate) fn require_orthonormal(states: &[&PureState]) -> Result<()> {
    let deviation = orthonormality_deviation(states)?;
    if deviation > FIT_TOL {
        Err(Error::NotOrthonormal { deviation })
    } else {
        Ok(())
    }
}

/// Row-normalized detection probabilities `P(i, j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversionTable {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub probabilities: Vec<Vec<f64>>,
}

impl ConversionTable {
    pub fn new(inputs: Vec<String>, outputs: Vec<String>, probabilities: Vec<Vec<f64>>) -> Result<Self> {
        Self::new_with_tolerance(inputs, outputs, probabilities, FIT_TOL)
    }

    /// As [`ConversionTable::new`] with a caller-chosen row-sum tolerance,
    /// for tables read back from rounded text.
    pub fn new_with_tolerance(
        inputs: Vec<String>,
        outputs: Vec<String>,
        probabilities: Vec<Vec<f64>>,
        tolerance: f64,
    ) -> Result<Self> {
        if probabilities.len() != inputs.len() {
            return Err(Error::MalformedTable(format!(
                "{} rows for {} inputs",
                probabilities.len(),
                inputs.len()
            )));
        }
        for (i, row) in probabilities.iter().enumerate() {
            if row.len() != outputs.len() {
                return Err(Error::MalformedTable(format!(
                    "row {i} has {} entries for {} outputs",
                    row.len(),
                    outputs.len()
                )));
            }
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::MalformedTable(format!("row {i} has entries outside [0, 1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > tolerance {
                return Err(Error::MalformedTable(format!("row {i} sums to {sum}")));
            }
        }
        Ok(Self {
            inputs,
            outputs,
            probabilities,
        })
    }

    /// `P(i, j) = N_ij / sum_k N_ik`.
    pub fn from_counts(inputs: Vec<String>, outputs: Vec<String>, counts: &[Vec<u64>]) -> Result<Self> {
        let rows = counts
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let total: u64 = row.iter().sum();
                if total == 0 {
                    return Err(Error::ZeroCountRow { row: i });
                }
                Ok(row.iter().map(|&n| n as f64 / total as f64).collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Self::new(inputs, outputs, rows)
    }

    /// Normalizes non-negative weights row by row.
    pub fn from_weights(inputs: Vec<String>, outputs: Vec<String>, weights: &[Vec<f64>]) -> Result<Self> {
        let rows = weights
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let total: f64 = row.iter().sum();
                if total <= 0.0 || row.iter().any(|&w| w < 0.0) {
                    return Err(Error::ZeroCountRow { row: i });
                }
                Ok(row.iter().map(|&w| (w / total).min(1.0)).collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Self::new(inputs, outputs, rows)
    }

    pub fn get(&self, input: usize, output: usize) -> f64 {
        self.probabilities[input][output]
    }

    /// `P(i, expected(i))` for every input.
    pub fn expected_mode_probabilities(&self, expected: &[usize]) -> Result<Vec<f64>> {
        if expected.len() != self.inputs.len() {
            return Err(Error::DimensionMismatch {
                expected: self.inputs.len(),
                found: expected.len(),
            });
        }
        expected
            .iter()
            .enumerate()
            .map(|(i, &j)| {
                self.probabilities[i].get(j).copied().ok_or_else(|| {
                    Error::InvalidParameter(format!("expected output {j} out of range"))
                })
            })
            .collect()
    }

    /// Largest absolute entrywise difference to another table of the same shape.
    pub fn max_abs_difference(&self, other: &ConversionTable) -> f64 {
        self.probabilities
            .iter()
            .flatten()
            .zip(other.probabilities.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `P(i, j) = |<out_j|U|in_i>|^2`, renormalized over the listed outputs.
pub fn conversion_table(
    op: &OpticalOperator,
    inputs: &[LabeledState],
    outputs: &[LabeledState],
) -> Result<ConversionTable> {
    require_orthonormal(&inputs.iter().map(|s| &s.state).collect::<Vec<_>>())?;
    require_orthonormal(&outputs.iter().map(|s| &s.state).collect::<Vec<_>>())?;
    let weights = inputs
        .iter()
        .map(|input| {
            let image = crate::hilbert::apply(op, &input.state)?;
            outputs
                .iter()
                .map(|out| crate::hilbert::project(&image, &out.state))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    ConversionTable::from_weights(
        inputs.iter().map(|s| s.label.clone()).collect(),
        outputs.iter().map(|s| s.label.clone()).collect(),
        &weights,
    )
}

/// Mean of `P(i, expected(i))` over all inputs.
pub fn summarize_efficiency(table: &ConversionTable, expected: &[usize]) -> Result<f64> {
    let probs = table.expected_mode_probabilities(expected)?;
    if probs.is_empty() {
        return Err(Error::EmptySubspace);
    }
    Ok(probs.iter().sum::<f64>() / probs.len() as f64)
}
