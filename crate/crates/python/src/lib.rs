//! Python bindings. Models, specs, paths and reports cross the boundary as
//! JSON strings in the same formats the command-line tool reads and writes;
//! counts come back as Python integers.

use num_bigint::BigUint;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lsym::combinatorics as comb;
use lsym::expansion::{self, ExpansionSpec, PiecewisePath};
use lsym::experiments::{self, ExperimentConfig};
use lsym::network::{Dataset, ModelFile, MultiLayerPoint, TwoLayerPoint};
use lsym::verification;

fn err(e: lsym::Error) -> PyErr {
    match e {
        lsym::Error::SizeGuard { .. } | lsym::Error::NonFinite(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn json_err(e: serde_json::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn two_layer(model_json: &str) -> PyResult<TwoLayerPoint> {
    ModelFile::from_json(model_json).and_then(|m| m.to_two_layer()).map_err(err)
}

fn multi_layer(model_json: &str) -> PyResult<MultiLayerPoint> {
    ModelFile::from_json(model_json).and_then(|m| m.to_multi_layer()).map_err(err)
}

fn to_json(p: &TwoLayerPoint) -> PyResult<String> {
    ModelFile::from(p).to_json().map_err(err)
}

fn dataset(inputs: Vec<Vec<f64>>, targets: Vec<Vec<f64>>) -> PyResult<Dataset> {
    let d_in = inputs.first().map_or(0, Vec::len);
    let d_out = targets.first().map_or(0, Vec::len);
    if inputs.iter().any(|x| x.len() != d_in) || targets.iter().any(|y| y.len() != d_out) {
        return Err(PyValueError::new_err("ragged inputs or targets"));
    }
    Dataset::new(d_in, d_out, inputs.concat(), targets.concat()).map_err(err)
}

/// G(r, m), the number of symmetry-induced critical subspaces.
#[pyfunction]
fn count_g(r: u32, m: u32) -> BigUint {
    comb::critical_subspace_count(r, m).into_inner()
}

/// T(r, m), the number of affine subspaces of the expansion manifold.
#[pyfunction]
fn count_t(r: u32, m: u32) -> PyResult<BigUint> {
    Ok(comb::minima_subspace_count(r, m).map_err(err)?.into_inner())
}

/// g(u), the number of ways to group u zero-type neurons.
#[pyfunction]
fn count_gu(u: u32) -> BigUint {
    comb::zero_type_groupings(u).into_inner()
}

/// R_k(r*, m) as an exact `(numerator, denominator)` pair.
#[pyfunction]
fn saddle_ratio(k: u32, r_star: u32, m: u32) -> PyResult<(BigUint, BigUint)> {
    let r = comb::saddle_ratio(k, r_star, m).map_err(err)?;
    Ok((r.numerator().into_inner(), r.denominator().into_inner()))
}

#[pyfunction]
#[pyo3(signature = (r_vec, m_vec, kind = "t"))]
fn multilayer_count(r_vec: Vec<u32>, m_vec: Vec<u32>, kind: &str) -> PyResult<BigUint> {
    let kind = match kind {
        "t" | "T" => comb::SubspaceKind::Minima,
        "g" | "G" => comb::SubspaceKind::Critical,
        other => return Err(PyValueError::new_err(format!("unknown kind {other:?}"))),
    };
    Ok(comb::multilayer_count(&r_vec, &m_vec, kind).map_err(err)?.into_inner())
}

/// The saddle-to-minima ratio table as CSV text.
#[pyfunction]
#[pyo3(signature = (r_star, m_max, k_max, digits = 12))]
fn ratio_table_csv(r_star: u32, m_max: u32, k_max: u32, digits: usize) -> PyResult<String> {
    let rows = comb::ratio_table(r_star, m_max, k_max, &comb::SaddleWeights::Unit).map_err(err)?;
    let mut buf = Vec::new();
    comb::write_ratio_table_csv(&rows, digits, &mut buf).map_err(err)?;
    Ok(String::from_utf8(buf).expect("csv is utf-8"))
}

#[pyfunction]
fn forward(model_json: &str, x: Vec<f64>) -> PyResult<Vec<f64>> {
    multi_layer(model_json)?.forward(&x).map_err(err)
}

/// Mean of `0.5 * |f(x) - y|^2` over the samples.
#[pyfunction]
fn loss(model_json: &str, inputs: Vec<Vec<f64>>, targets: Vec<Vec<f64>>) -> PyResult<f64> {
    multi_layer(model_json)?.loss(&dataset(inputs, targets)?).map_err(err)
}

/// Gradient of [`loss`] in the flat layout of the model (layer by layer, row-major).
#[pyfunction]
fn gradient(model_json: &str, inputs: Vec<Vec<f64>>, targets: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    multi_layer(model_json)?.gradient(&dataset(inputs, targets)?).map_err(err)
}

/// Ascending Hessian eigenvalues of a single-hidden-layer model.
#[pyfunction]
fn hessian_eigenvalues(model_json: &str, inputs: Vec<Vec<f64>>, targets: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    let r = verification::hessian_report(&two_layer(model_json)?, &dataset(inputs, targets)?, 1e-4).map_err(err)?;
    Ok(r.eigenvalues)
}

/// Random expansion to width `m`; returns `(model_json, spec_json)`.
#[pyfunction]
#[pyo3(signature = (model_json, m, seed = 0, tol = 1e-6))]
fn sample_expansion(model_json: &str, m: usize, seed: u64, tol: f64) -> PyResult<(String, String)> {
    let theta = two_layer(model_json)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (spec, point) = expansion::sample_expansion(&theta, m, tol, &mut rng).map_err(err)?;
    Ok((to_json(&point)?, serde_json::to_string(&spec).map_err(json_err)?))
}

#[pyfunction]
#[pyo3(signature = (model_json, spec_json, tol = 1e-6))]
fn expand(model_json: &str, spec_json: &str, tol: f64) -> PyResult<String> {
    let spec: ExpansionSpec = serde_json::from_str(spec_json).map_err(json_err)?;
    to_json(&expansion::expand_point(&two_layer(model_json)?, &spec, tol).map_err(err)?)
}

/// Merged model, or `None` when every neuron cancels.
#[pyfunction]
#[pyo3(signature = (model_json, tol = 1e-9))]
fn reduce(model_json: &str, tol: f64) -> PyResult<Option<String>> {
    two_layer(model_json)?.reduce(tol).map(|p| to_json(&p)).transpose()
}

/// Neuron labels of a student against a teacher, as JSON.
#[pyfunction]
#[pyo3(signature = (student_json, teacher_json, tol = 1e-3))]
fn classify(student_json: &str, teacher_json: &str, tol: f64) -> PyResult<String> {
    let c = expansion::classify_neurons(&two_layer(student_json)?, &two_layer(teacher_json)?, tol).map_err(err)?;
    let v = serde_json::json!({
        "consistent": c.consistent,
        "histogram": c.histogram(),
        "labels": c.labels,
    });
    Ok(v.to_string())
}

/// Piecewise-linear path between two expansions of `teacher`, as JSON.
#[pyfunction]
#[pyo3(signature = (a_json, b_json, teacher_json, tol = 1e-6))]
fn build_path(a_json: &str, b_json: &str, teacher_json: &str, tol: f64) -> PyResult<String> {
    let path = expansion::build_path(&two_layer(a_json)?, &two_layer(b_json)?, &two_layer(teacher_json)?, tol)
        .map_err(err)?;
    path.to_json().map_err(err)
}

/// Largest loss deviation from the path start over `samples` points per segment.
#[pyfunction]
#[pyo3(signature = (path_json, shape_json, inputs, targets, samples = 11))]
fn path_loss_deviation(
    path_json: &str,
    shape_json: &str,
    inputs: Vec<Vec<f64>>,
    targets: Vec<Vec<f64>>,
    samples: usize,
) -> PyResult<f64> {
    let path: PiecewisePath = serde_json::from_str(path_json).map_err(json_err)?;
    let p = verification::path_loss_profile(&path, &two_layer(shape_json)?, &dataset(inputs, targets)?, samples)
        .map_err(err)?;
    Ok(p.max_abs_deviation)
}

/// Runs an experiment config (JSON) and returns the report JSON.
#[pyfunction]
fn run_experiment(config_json: &str) -> PyResult<String> {
    let cfg = ExperimentConfig::from_json(config_json).map_err(err)?;
    experiments::run_experiment(&cfg).and_then(|r| r.to_json()).map_err(err)
}

/// Model JSON of the four-neuron reference teacher for an activation name
/// (`softplus`, `sigmoid`, `tanh` or `blended`).
#[pyfunction]
fn reference_teacher(activation: &str) -> PyResult<String> {
    let act = lsym::network::Activation::from_name(activation).map_err(err)?;
    to_json(&experiments::reference_teacher(act))
}

#[pymodule]
fn lsym_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(count_g, m)?)?;
    m.add_function(wrap_pyfunction!(count_t, m)?)?;
    m.add_function(wrap_pyfunction!(count_gu, m)?)?;
    m.add_function(wrap_pyfunction!(saddle_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(multilayer_count, m)?)?;
    m.add_function(wrap_pyfunction!(ratio_table_csv, m)?)?;
    m.add_function(wrap_pyfunction!(forward, m)?)?;
    m.add_function(wrap_pyfunction!(loss, m)?)?;
    m.add_function(wrap_pyfunction!(gradient, m)?)?;
    m.add_function(wrap_pyfunction!(hessian_eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(sample_expansion, m)?)?;
    m.add_function(wrap_pyfunction!(expand, m)?)?;
    m.add_function(wrap_pyfunction!(reduce, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(build_path, m)?)?;
    m.add_function(wrap_pyfunction!(path_loss_deviation, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(reference_teacher, m)?)?;
    Ok(())
}
