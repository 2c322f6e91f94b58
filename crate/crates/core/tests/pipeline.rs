use oamsim_core::circuit::x_gate_circuit;
use oamsim_core::gates::basis;
use oamsim_core::hilbert::max_deviation_up_to_global_phase;
use oamsim_core::io;
use oamsim_core::photonsim::{run_bases_scenario, run_controlled_scenario, run_table1_scenario, Control};
use oamsim_core::{compile, Circuit, GateKind, NoiseModel, Setup, SourceSpec};

#[test]
fn circuits_survive_json_and_compile_identically() {
    let setup = Setup::single();
    for kind in GateKind::ALL {
        let c = kind.circuit(&setup).unwrap();
        let back: Circuit = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        let (a, b) = (compile(&c).unwrap(), compile(&back).unwrap());
        assert_eq!(a.matrix(), b.matrix());
    }
}

#[test]
fn inverse_circuit_undoes_gate() {
    let setup = Setup::single();
    let x = x_gate_circuit(&setup).unwrap();
    let domain = setup.logical_domain().unwrap();
    let fwd = compile(&x).unwrap();
    let back = compile(&x.inverse()).unwrap();
    let product = back.matrix() * fwd.matrix();
    let idx: Vec<usize> = domain.iter().map(|m| setup.basis.index_of(m).unwrap()).collect();
    let block = product.select_rows(&idx).select_columns(&idx);
    let eye = nalgebra::DMatrix::identity(4, 4);
    assert!(max_deviation_up_to_global_phase(&block, &eye) < 1e-12);
}

#[test]
fn superposition_input_lands_on_its_image() {
    let setup = Setup::single();
    let x = x_gate_circuit(&setup).unwrap();
    let run = run_bases_scenario(&x, &setup, 2, &SourceSpec::default(), &NoiseModel::ideal(), 1).unwrap();
    assert_eq!(run.table.inputs[0], basis(2).unwrap()[0].label);
    assert!(run.table.get(0, 0) >= 0.999);
    for j in 1..4 {
        assert!(run.table.get(0, j) <= 0.001);
    }
}

#[test]
fn controlled_x_wraps_top_mode() {
    let run = run_controlled_scenario(GateKind::X, Control::H, &SourceSpec::default(), &NoiseModel::ideal(), 4).unwrap();
    let from = run.table.inputs.iter().position(|l| l == "H|1>").unwrap();
    let to = run.table.outputs.iter().position(|l| l == "H|-2>").unwrap();
    assert!(run.table.get(from, to) >= 0.999);
}

#[test]
fn scenario_tables_serialize_round_trip() {
    for run in run_table1_scenario(&SourceSpec::default(), &NoiseModel::uniform_coupling(0.95), 8).unwrap() {
        let json = io::count_table_to_json(&run.counts).unwrap();
        assert_eq!(io::count_table_from_json(&json).unwrap(), run.counts);
        let csv = io::conversion_table_to_csv(&run.table).unwrap();
        let back = io::conversion_table_from_csv(&csv).unwrap();
        assert!(back.max_abs_difference(&run.table) <= 5e-6);
        let json = io::conversion_table_to_json(&run.table).unwrap();
        assert_eq!(io::conversion_table_from_json(&json).unwrap(), run.table);
    }
}
