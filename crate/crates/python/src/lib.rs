//! Python bindings: device session, graph loading, tuning and aggregation.

use std::sync::Mutex;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use pimgnn::gnn::Tensor;
use pimgnn::mtx::load_matrix_market;
use pimgnn::normalize::{normalize_adjacency, GnnKind};
use pimgnn::partition::{even_split, LoadedGraph};
use pimgnn::sim::simulate_aggregation;
use pimgnn::tuner::tune_with_candidates;
use pimgnn::{BalanceMode, CostProfile, DenseMatrix, PafConfig, PimTopology, Scalar, SparseFormat, SparseMatrix, SyncMode, ValueKind};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse<T: std::str::FromStr<Err = String>>(s: &str) -> PyResult<T> {
    s.parse().map_err(PyValueError::new_err)
}

/// Simulated machine: topology, cluster grouping and cost profile.
#[pyclass(module = "pimgnn_py", frozen)]
pub struct Session {
    topology: PimTopology,
    groups: usize,
    profile: CostProfile,
}

#[pymethods]
impl Session {
    #[getter]
    fn n_devices(&self) -> usize {
        self.topology.n_devices
    }

    #[getter]
    fn groups_per_device(&self) -> usize {
        self.groups
    }

    #[getter]
    fn clusters(&self) -> usize {
        self.topology.n_devices * self.groups
    }

    fn __repr__(&self) -> String {
        format!(
            "Session(devices={}, groups_per_device={}, cores_per_device={})",
            self.topology.n_devices, self.groups, self.topology.cores_per_device
        )
    }
}

#[pyfunction]
#[pyo3(signature = (num_devices, groups_per_device, cores_per_device = 64, threads = 16, profile = None))]
pub fn pim_init_devices(
    num_devices: usize,
    groups_per_device: usize,
    cores_per_device: usize,
    threads: usize,
    profile: Option<String>,
) -> PyResult<Session> {
    if num_devices == 0 || groups_per_device == 0 {
        return Err(PyValueError::new_err("device and group counts must be at least 1"));
    }
    let topology = PimTopology {
        threads_per_core: threads,
        ..PimTopology::new(num_devices, cores_per_device).map_err(value_err)?
    };
    topology.validate().map_err(value_err)?;
    topology.regroup(groups_per_device).map_err(value_err)?;
    let profile = match profile {
        Some(p) => CostProfile::load(p).map_err(value_err)?,
        None => CostProfile::upmem_like(),
    };
    Ok(Session {
        topology,
        groups: groups_per_device,
        profile,
    })
}

enum SparseData {
    I32(SparseMatrix<i32>),
    F32(SparseMatrix<f32>),
}

macro_rules! each {
    ($enum:ident, $value:expr, $m:ident => $body:expr) => {
        match $value {
            $enum::I32($m) => $body,
            $enum::F32($m) => $body,
        }
    };
}

/// Sparse adjacency held on the host.
#[pyclass(module = "pimgnn_py", frozen)]
pub struct Graph {
    data: SparseData,
}

fn triplets<T: Scalar>(rows: &[usize], cols: &[usize], values: &[f64]) -> PyResult<Vec<(usize, usize, T)>> {
    if rows.len() != cols.len() || rows.len() != values.len() {
        return Err(PyValueError::new_err("rows, cols and values must have the same length"));
    }
    rows.iter()
        .zip(cols)
        .zip(values)
        .map(|((&r, &c), &v)| {
            T::from_f64_exact(v)
                .map(|v| (r, c, v))
                .ok_or_else(|| PyValueError::new_err(format!("{v} is not a valid {}", T::KIND)))
        })
        .collect()
}

#[pymethods]
impl Graph {
    #[new]
    #[pyo3(signature = (n_rows, n_cols, rows, cols, values, kind = "int32"))]
    fn new(n_rows: usize, n_cols: usize, rows: Vec<usize>, cols: Vec<usize>, values: Vec<f64>, kind: &str) -> PyResult<Self> {
        let data = match parse::<ValueKind>(kind)? {
            ValueKind::Int32 => SparseData::I32(
                SparseMatrix::from_triplets(n_rows, n_cols, triplets(&rows, &cols, &values)?).map_err(value_err)?,
            ),
            ValueKind::Float32 => SparseData::F32(
                SparseMatrix::from_triplets(n_rows, n_cols, triplets(&rows, &cols, &values)?).map_err(value_err)?,
            ),
            other => return Err(PyValueError::new_err(format!("unsupported value kind {other}"))),
        };
        Ok(Self { data })
    }

    #[staticmethod]
    #[pyo3(signature = (path, kind = "int32"))]
    fn from_mtx(path: &str, kind: &str) -> PyResult<Self> {
        let data = match parse::<ValueKind>(kind)? {
            ValueKind::Int32 => SparseData::I32(load_matrix_market(path).map_err(value_err)?),
            ValueKind::Float32 => SparseData::F32(load_matrix_market(path).map_err(value_err)?),
            other => return Err(PyValueError::new_err(format!("unsupported value kind {other}"))),
        };
        Ok(Self { data })
    }

    /// Aggregation matrix for `model` (gcn, gin or sage).
    #[pyo3(signature = (model, eps = 0.0, scale = 256))]
    fn normalize(&self, model: &str, eps: f64, scale: i64) -> PyResult<Self> {
        let kind: GnnKind = parse(model)?;
        let data = match &self.data {
            SparseData::I32(m) => SparseData::I32(normalize_adjacency(m, kind, eps, scale).map_err(value_err)?),
            SparseData::F32(m) => SparseData::F32(normalize_adjacency(m, kind, eps, scale).map_err(value_err)?),
        };
        Ok(Self { data })
    }

    #[getter]
    fn n(&self) -> usize {
        each!(SparseData, &self.data, m => m.n_rows())
    }

    #[getter]
    fn nnz(&self) -> usize {
        each!(SparseData, &self.data, m => m.nnz())
    }

    #[getter]
    fn kind(&self) -> &'static str {
        each!(SparseData, &self.data, m => m.value_kind().as_str())
    }
}

/// Partitioning configuration.
#[pyclass(module = "pimgnn_py", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
pub struct Config {
    inner: PafConfig,
}

#[pymethods]
impl Config {
    #[new]
    #[pyo3(signature = (sp, dp, grp = 1, format = "csr", cluster_scheme = "edg", core_scheme = "edg", sync = "lock-free"))]
    fn new(sp: usize, dp: usize, grp: usize, format: &str, cluster_scheme: &str, core_scheme: &str, sync: &str) -> PyResult<Self> {
        Ok(Self {
            inner: PafConfig {
                sp,
                dp,
                grp,
                format: parse::<SparseFormat>(format)?,
                cluster_scheme: parse::<BalanceMode>(cluster_scheme)?,
                core_scheme: parse::<BalanceMode>(core_scheme)?,
                sync: parse::<SyncMode>(sync)?,
            },
        })
    }

    /// Accepts a bare configuration or a tune outcome.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(value_err)?;
        let inner = value.get("config").cloned().unwrap_or(value);
        Ok(Self {
            inner: serde_json::from_value(inner).map_err(value_err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(value_err)
    }

    #[getter]
    fn sp(&self) -> usize {
        self.inner.sp
    }

    #[getter]
    fn dp(&self) -> usize {
        self.inner.dp
    }

    #[getter]
    fn grp(&self) -> usize {
        self.inner.grp
    }

    #[getter]
    fn format(&self) -> String {
        self.inner.format.to_string()
    }

    #[getter]
    fn cluster_scheme(&self) -> &'static str {
        self.inner.cluster_scheme.as_str()
    }

    #[getter]
    fn core_scheme(&self) -> &'static str {
        self.inner.core_scheme.as_str()
    }

    #[getter]
    fn sync(&self) -> String {
        self.inner.sync.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Config({})", self.inner)
    }
}

#[pyfunction]
#[pyo3(signature = (graph, hidden_size, device_info, format = "csr"))]
pub fn tune(graph: &Graph, hidden_size: usize, device_info: &Session, format: &str) -> PyResult<Config> {
    let format: SparseFormat = parse(format)?;
    let topo = &device_info.topology;
    let profile = &device_info.profile;
    let outcome = each!(SparseData, &graph.data, m => tune_with_candidates(m, hidden_size, topo, profile, format, m.value_kind()))
        .map_err(value_err)?;
    Ok(Config { inner: outcome.config })
}

enum DenseData {
    I32(DenseMatrix<i32>),
    F32(DenseMatrix<f32>),
}

/// Row-major dense matrix with an explicit value kind.
#[pyclass(module = "pimgnn_py", frozen)]
pub struct Dense {
    data: DenseData,
}

fn dense_from<T: Scalar>(rows: usize, cols: usize, values: &[f64]) -> PyResult<DenseMatrix<T>> {
    let v = values
        .iter()
        .map(|&x| T::from_f64_exact(x).ok_or_else(|| PyValueError::new_err(format!("{x} is not a valid {}", T::KIND))))
        .collect::<PyResult<Vec<T>>>()?;
    DenseMatrix::new(rows, cols, v).map_err(value_err)
}

#[pymethods]
impl Dense {
    #[new]
    #[pyo3(signature = (rows, cols, values, kind = "int32"))]
    fn new(rows: usize, cols: usize, values: Vec<f64>, kind: &str) -> PyResult<Self> {
        let data = match parse::<ValueKind>(kind)? {
            ValueKind::Int32 => DenseData::I32(dense_from(rows, cols, &values)?),
            ValueKind::Float32 => DenseData::F32(dense_from(rows, cols, &values)?),
            other => return Err(PyValueError::new_err(format!("unsupported value kind {other}"))),
        };
        Ok(Self { data })
    }

    /// Reads a tensor JSON file.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let t = Tensor::load(path).map_err(value_err)?;
        let data = match t.kind {
            ValueKind::Int32 => DenseData::I32(t.to_dense().map_err(value_err)?),
            ValueKind::Float32 => DenseData::F32(t.to_dense().map_err(value_err)?),
            other => return Err(PyValueError::new_err(format!("unsupported value kind {other}"))),
        };
        Ok(Self { data })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        each!(DenseData, &self.data, m => Tensor::from_dense(m).save(path)).map_err(value_err)
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        each!(DenseData, &self.data, m => m.shape())
    }

    #[getter]
    fn kind(&self) -> &'static str {
        each!(DenseData, &self.data, m => m.value_kind().as_str())
    }

    /// Row-major values.
    fn values(&self) -> Vec<f64> {
        each!(DenseData, &self.data, m => m.values().iter().map(|v| v.to_f64()).collect())
    }

    fn __eq__(&self, other: &Dense) -> bool {
        match (&self.data, &other.data) {
            (DenseData::I32(a), DenseData::I32(b)) => a == b,
            (DenseData::F32(a), DenseData::F32(b)) => a == b,
            _ => false,
        }
    }
}

/// Splits `dense` into `parts` column tiles the way the planner does.
#[pyfunction]
pub fn col_split(dense: &Dense, parts: usize) -> PyResult<Vec<Dense>> {
    let (rows, cols) = dense.shape();
    if parts == 0 || parts > cols.max(1) {
        return Err(PyValueError::new_err(format!("cannot split {cols} columns into {parts} tiles")));
    }
    Ok(even_split(cols, parts)
        .into_iter()
        .map(|r| Dense {
            data: match &dense.data {
                DenseData::I32(m) => DenseData::I32(m.block(0..rows, r)),
                DenseData::F32(m) => DenseData::F32(m.block(0..rows, r)),
            },
        })
        .collect())
}

enum LoadedData {
    I32(LoadedGraph<i32>),
    F32(LoadedGraph<f32>),
}

struct HandleState {
    graph: Option<LoadedData>,
    profile: CostProfile,
    last_report: Option<String>,
}

/// Graph resident in the simulated banks. Valid until `release`.
#[pyclass(module = "pimgnn_py")]
pub struct GraphHandle {
    state: Mutex<HandleState>,
}

fn released() -> PyErr {
    PyRuntimeError::new_err("graph handle has been released")
}

#[pymethods]
impl GraphHandle {
    fn release(&self) {
        self.state.lock().expect("handle lock").graph = None;
    }

    #[getter]
    fn released(&self) -> bool {
        self.state.lock().expect("handle lock").graph.is_none()
    }

    /// Column widths of the feature tiles expected by `pim_run_aggr`.
    fn tile_widths(&self) -> PyResult<Vec<usize>> {
        let st = self.state.lock().expect("handle lock");
        let g = st.graph.as_ref().ok_or_else(released)?;
        Ok(each!(LoadedData, g, l => l.plan.tile_cols.iter().map(|r| r.len()).collect()))
    }

    fn plan_json(&self) -> PyResult<String> {
        let st = self.state.lock().expect("handle lock");
        let g = st.graph.as_ref().ok_or_else(released)?;
        each!(LoadedData, g, l => l.plan.to_json()).map_err(value_err)
    }

    /// JSON report of the most recent aggregation.
    fn last_report(&self) -> Option<String> {
        self.state.lock().expect("handle lock").last_report.clone()
    }
}

#[pyfunction]
#[pyo3(signature = (graph, config, device_info, hidden_size))]
pub fn load_graph_pim(graph: &Graph, config: &Config, device_info: &Session, hidden_size: usize) -> PyResult<GraphHandle> {
    let cfg = &config.inner;
    if cfg.grp != device_info.groups {
        return Err(PyValueError::new_err(format!(
            "configuration uses {} groups per device but the session was initialized with {}",
            cfg.grp, device_info.groups
        )));
    }
    let topo = &device_info.topology;
    let graph = match &graph.data {
        SparseData::I32(m) => LoadedData::I32(LoadedGraph::load(m, hidden_size, cfg, topo).map_err(value_err)?),
        SparseData::F32(m) => LoadedData::F32(LoadedGraph::load(m, hidden_size, cfg, topo).map_err(value_err)?),
    };
    Ok(GraphHandle {
        state: Mutex::new(HandleState {
            graph: Some(graph),
            profile: device_info.profile.clone(),
            last_report: None,
        }),
    })
}

fn join_tiles<T: Scalar>(tiles: &[&DenseMatrix<T>], n: usize, widths: &[usize]) -> PyResult<DenseMatrix<T>> {
    if tiles.len() != widths.len() {
        return Err(PyValueError::new_err(format!("expected {} tiles, got {}", widths.len(), tiles.len())));
    }
    for (i, (t, &w)) in tiles.iter().zip(widths).enumerate() {
        if t.shape() != (n, w) {
            return Err(PyValueError::new_err(format!(
                "tile {i} is {}x{}, expected {n}x{w}",
                t.n_rows(),
                t.n_cols()
            )));
        }
    }
    let k = widths.iter().sum();
    let mut offsets = Vec::with_capacity(widths.len());
    let mut acc = 0;
    for &w in widths {
        offsets.push(acc);
        acc += w;
    }
    Ok(DenseMatrix::from_fn(n, k, |r, c| {
        let t = offsets.partition_point(|&o| o <= c) - 1;
        tiles[t].get(r, c - offsets[t])
    }))
}

/// Aggregates the column tiles of the feature matrix on the loaded graph.
#[pyfunction]
pub fn pim_run_aggr(graph_pim: &GraphHandle, dense_tiles: Vec<PyRef<'_, Dense>>) -> PyResult<Dense> {
    let mut st = graph_pim.state.lock().expect("handle lock");
    let profile = st.profile.clone();
    let g = st.graph.as_ref().ok_or_else(released)?;
    let (data, report) = match g {
        LoadedData::I32(l) => {
            let tiles = dense_tiles
                .iter()
                .map(|d| match &d.data {
                    DenseData::I32(m) => Ok(m),
                    _ => Err(PyValueError::new_err("tiles must match the graph value kind")),
                })
                .collect::<PyResult<Vec<_>>>()?;
            let widths: Vec<usize> = l.plan.tile_cols.iter().map(|r| r.len()).collect();
            let f = join_tiles(&tiles, l.n(), &widths)?;
            let (out, r) = simulate_aggregation(l, &f, &profile).map_err(value_err)?;
            (DenseData::I32(out), r)
        }
        LoadedData::F32(l) => {
            let tiles = dense_tiles
                .iter()
                .map(|d| match &d.data {
                    DenseData::F32(m) => Ok(m),
                    _ => Err(PyValueError::new_err("tiles must match the graph value kind")),
                })
                .collect::<PyResult<Vec<_>>>()?;
            let widths: Vec<usize> = l.plan.tile_cols.iter().map(|r| r.len()).collect();
            let f = join_tiles(&tiles, l.n(), &widths)?;
            let (out, r) = simulate_aggregation(l, &f, &profile).map_err(value_err)?;
            (DenseData::F32(out), r)
        }
    };
    st.last_report = Some(report.to_json().map_err(value_err)?);
    Ok(Dense { data })
}

#[pymodule]
fn pimgnn_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Session>()?;
    m.add_class::<Graph>()?;
    m.add_class::<Config>()?;
    m.add_class::<Dense>()?;
    m.add_class::<GraphHandle>()?;
    m.add_function(wrap_pyfunction!(pim_init_devices, m)?)?;
    m.add_function(wrap_pyfunction!(tune, m)?)?;
    m.add_function(wrap_pyfunction!(load_graph_pim, m)?)?;
    m.add_function(wrap_pyfunction!(col_split, m)?)?;
    m.add_function(wrap_pyfunction!(pim_run_aggr, m)?)?;
    Ok(())
}
