//! `verify-gates`: compile every gate circuit and compare with its target.

use oamsim_core::circuit::{controlled_circuit, round_trip_deviation, sorter_routes};
use oamsim_core::gates::controlled_target;
use oamsim_core::hilbert::{fidelity_up_to_global_phase, EXACT_TOL, FIT_TOL};
use oamsim_core::{compile, Circuit, Error, GateKind, Setup};

use crate::config::RunConfig;
use crate::CliError;

/// One line of the verification report.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn pass(name: impl Into<String>, detail: String) -> Self {
        Self {
            name: name.into(),
            passed: true,
            detail,
        }
    }

    fn fail(name: impl Into<String>, detail: String) -> Self {
        Self {
            name: name.into(),
            passed: false,
            detail,
        }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {:<14} {}", self.name, self.detail)
    }
}

pub fn setups(cfg: &RunConfig) -> Result<(Setup, Setup), CliError> {
    let dove_angle = cfg.dove_angle_deg.to_radians();
    let single = Setup {
        basis: cfg.basis_spec(2)?,
        dove_angle,
        ..Setup::single()
    };
    let controlled = Setup {
        basis: cfg.basis_spec(3)?,
        dove_angle,
        ..Setup::controlled()
    };
    Ok((single, controlled))
}

fn sorter_check(setup: &Setup) -> Check {
    let b = setup.basis;
    let oams: Vec<i32> = (b.oam_min()..=b.oam_max()).filter(|&l| b.contains_oam(-l)).collect();
    let routes = match sorter_routes(setup, oams) {
        Ok(r) => r,
        Err(e) => return Check::fail("parity_sorter", e.to_string()),
    };
    let bad: Vec<i32> = routes.iter().filter(|r| !r.ok()).map(|r| r.oam).collect();
    let worst = routes.iter().filter_map(|r| r.probability).fold(1.0, f64::min);
    let round_trip = match round_trip_deviation(setup) {
        Ok(d) => d,
        Err(e) => return Check::fail("parity_sorter", e.to_string()),
    };
    let detail = format!(
        "{} charges routed, worst probability {worst:.12}, round trip {round_trip:.1e}",
        routes.len()
    );
    if bad.is_empty() && round_trip <= EXACT_TOL {
        Check::pass("parity_sorter", detail)
    } else {
        Check::fail("parity_sorter", format!("misrouted charges {bad:?}; {detail}"))
    }
}

/// Elements that cannot act on the logical modes at all within the window.
fn static_leak(circuit: &Circuit) -> Option<Error> {
    circuit.elements().into_iter().find_map(|e| match e.build(circuit.basis()) {
        Err(Error::Leakage { mode, .. }) => Some(Error::Leakage {
            element: e.to_string(),
            mode,
        }),
        _ => None,
    })
}

fn fidelity_check(name: &str, circuit: oamsim_core::Result<Circuit>, target: impl FnOnce(&Circuit) -> oamsim_core::Result<f64>) -> Check {
    let circuit = match circuit {
        Ok(c) => c,
        Err(e) => return Check::fail(name, e.to_string()),
    };
    if let Some(e) = static_leak(&circuit) {
        return Check::fail(name, e.to_string());
    }
    match target(&circuit) {
        Ok(f) if f >= 1.0 - FIT_TOL => Check::pass(name, format!("fidelity {f:.12}")),
        Ok(f) => Check::fail(name, format!("fidelity {f:.12} below {:.12}", 1.0 - FIT_TOL)),
        Err(e) => Check::fail(name, e.to_string()),
    }
}

/// Sorter routing plus the six gate fidelities, in report order.
pub fn verify_gates(cfg: &RunConfig) -> Result<Vec<Check>, CliError> {
    let (single, ctrl) = setups(cfg)?;
    let mut checks = vec![sorter_check(&single)];
    for kind in GateKind::ALL {
        checks.push(fidelity_check(&kind.to_string(), kind.circuit(&single), |c| {
            let domain = single.logical_domain()?;
            let op = compile(c)?;
            fidelity_up_to_global_phase(&op, &kind.target().embed(&single.basis, &domain)?, &domain)
        }));
    }
    for kind in GateKind::ALL {
        let circuit = kind.circuit(&ctrl).and_then(|inner| controlled_circuit(&ctrl, inner));
        checks.push(fidelity_check(&format!("C{kind}"), circuit, |c| {
            let domain = ctrl.hybrid_domain()?;
            let op = compile(c)?;
            let target = controlled_target(&kind.target())?.embed(&ctrl.basis, &domain)?;
            fidelity_up_to_global_phase(&op, &target, &domain)
        }));
    }
    Ok(checks)
}
