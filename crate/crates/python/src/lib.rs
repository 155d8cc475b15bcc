use std::path::PathBuf;

use fervor::app::convergence::SchemeResult;
use fervor::app::fractured2p::FracturedResult;
use fervor::app::rootsoil::RootSoilResult;
use fervor::app::{
    run_convergence, run_fractured2p, run_rootsoil, AuditTable, ParameterTree, SCENARIOS,
};
use fervor::error::{Error, Result};
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

enum Outcome {
    Convergence(Vec<SchemeResult>),
    Fractured(FracturedResult),
    RootSoil(RootSoilResult),
}

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyOSError::new_err(io.to_string()),
        e @ (Error::InvalidArgument(_)
        | Error::ParameterSyntax { .. }
        | Error::MissingParameter(_)
        | Error::ParameterType { .. }
        | Error::MshParse { .. }) => PyValueError::new_err(e.to_string()),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

fn build_tree(file: Option<PathBuf>, overrides: Vec<(String, String)>) -> Result<ParameterTree> {
    let mut tree = match file {
        Some(path) => ParameterTree::from_file(path)?,
        None => ParameterTree::new(),
    };
    for (key, value) in overrides {
        tree.set(&key, value);
    }
    Ok(tree)
}

fn execute(scenario: &str, tree: &ParameterTree) -> Result<Outcome> {
    match scenario {
        "convergence" => run_convergence(tree).map(Outcome::Convergence),
        "fractured2p" => run_fractured2p(tree).map(Outcome::Fractured),
        "rootsoil" => run_rootsoil(tree).map(Outcome::RootSoil),
        other => Err(Error::InvalidArgument(format!(
            "unknown scenario `{other}` (expected one of {})",
            SCENARIOS.join(", ")
        ))),
    }
}

fn audit_dict<'py>(py: Python<'py>, audit: &AuditTable) -> PyResult<Bound<'py, PyDict>> {
    let dict = PyDict::new(py);
    for (i, name) in audit.columns().iter().enumerate() {
        let column: Vec<f64> = audit.rows().iter().map(|row| row[i]).collect();
        dict.set_item(name, column)?;
    }
    Ok(dict)
}

/// Runs a scenario and returns its audit columns together with
/// scenario-specific results.
///
/// `params` maps `Group.Key` names to values; values are converted with
/// `str()` and override entries read from `file`.
#[pyfunction]
#[pyo3(signature = (scenario, params=None, file=None))]
fn run<'py>(
    py: Python<'py>,
    scenario: String,
    params: Option<Bound<'py, PyDict>>,
    file: Option<PathBuf>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut overrides = Vec::new();
    if let Some(params) = params {
        for (key, value) in params.iter() {
            overrides.push((key.str()?.to_string(), value.str()?.to_string()));
        }
    }
    let (outcome, unused) = py
        .detach(move || {
            let tree = build_tree(file, overrides)?;
            let outcome = execute(&scenario, &tree)?;
            Ok((outcome, tree.unused()))
        })
        .map_err(to_py_err)?;

    let result = PyDict::new(py);
    result.set_item("unused", unused)?;
    match outcome {
        Outcome::Convergence(schemes) => {
            let orders = PyDict::new(py);
            let errors = PyDict::new(py);
            for s in &schemes {
                orders.set_item(s.scheme.name(), s.orders())?;
                let e: Vec<f64> = s.levels.iter().map(|l| l.l2_error).collect();
                errors.set_item(s.scheme.name(), e)?;
            }
            result.set_item("orders", orders)?;
            result.set_item("l2_errors", errors)?;
        }
        Outcome::Fractured(r) => {
            result.set_item("audit", audit_dict(py, &r.audit)?)?;
            result.set_item("steps", r.steps)?;
            result.set_item("arrival_time", r.arrival_time)?;
        }
        Outcome::RootSoil(r) => {
            result.set_item("audit", audit_dict(py, &r.audit)?)?;
            result.set_item("steps", r.steps)?;
            result.set_item("soil_tracer", r.soil_tracer)?;
            result.set_item("soil_uptake", r.soil_uptake)?;
            result.set_item("segment_uptake", r.segment_uptake)?;
        }
    }
    Ok(result)
}

/// Reads an audit CSV written by a scenario into a dict of columns.
#[pyfunction]
fn read_audit<'py>(py: Python<'py>, path: PathBuf) -> PyResult<Bound<'py, PyDict>> {
    let text = std::fs::read_to_string(path)?;
    let audit = AuditTable::parse_csv(&text).map_err(to_py_err)?;
    audit_dict(py, &audit)
}

#[pymodule]
#[pyo3(name = "fervor")]
fn fervor_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SCENARIOS", SCENARIOS.to_vec())?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(read_audit, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet(dir: &std::path::Path) -> Vec<(String, String)> {
        vec![
            ("Output.Directory".into(), dir.to_str().unwrap().into()),
            ("Output.Verbose".into(), "false".into()),
            ("Output.Vtk".into(), "false".into()),
        ]
    }

    #[test]
    fn overrides_take_precedence_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("p.input");
        std::fs::write(&file, "[Convergence]\nLevels = 4\nSchemes = tpfa\n").unwrap();
        let tree = build_tree(
            Some(file),
            vec![("Convergence.Levels".into(), "4 8".into())],
        )
        .unwrap();
        assert_eq!(tree.raw("Convergence.Levels"), Some("4 8"));
        assert_eq!(tree.raw("Convergence.Schemes"), Some("tpfa"));
    }

    #[test]
    fn dispatches_scenarios_by_name() {
        let dir = tempfile::tempdir().unwrap();
        let mut overrides = quiet(dir.path());
        overrides.push(("Convergence.Levels".into(), "4 8".into()));
        let tree = build_tree(None, overrides).unwrap();
        match execute("convergence", &tree).unwrap() {
            Outcome::Convergence(s) => assert_eq!(s.len(), 2),
            _ => panic!("wrong scenario"),
        }
        assert!(matches!(
            execute("nonsense", &tree),
            Err(Error::InvalidArgument(_))
        ));
    }
}
