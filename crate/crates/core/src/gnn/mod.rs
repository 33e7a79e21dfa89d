//! Layer execution: aggregation on the simulated PIM machine, combination
//! (chained GEMMs with activations) on the host.

pub mod tensor;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use tensor::Tensor;

use crate::config::PafConfig;
use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, SparseFormat, SparseMatrix};
use crate::normalize::{normalize_adjacency, GnnKind};
use crate::oracle::{dense_matmul, dense_spmm_oracle};
use crate::partition::plan::{LoadedGraph, TilePlan};
use crate::profile::CostProfile;
use crate::scalar::Scalar;
use crate::sim::{simulate_plan, ExecutionReport};
use crate::topology::PimTopology;
use crate::tuner::tune;

pub const INFERENCE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    pub fn apply<T: Scalar>(self, m: DenseMatrix<T>) -> DenseMatrix<T> {
        match self {
            Activation::Relu => m.map(T::relu),
            Activation::Identity => m,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    /// Applied in order, each followed by the activation.
    pub weights: Vec<DenseMatrix<T>>,
    pub activation: Activation,
}

impl<T> Layer<T> {
    pub fn in_dim(&self) -> Option<usize> {
        self.weights.first().map(|w| w.n_rows())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnnModel<T> {
    pub kind: GnnKind,
    /// Self-loop weight offset for GIN.
    pub eps: f64,
    pub layers: Vec<Layer<T>>,
}

impl<T: Scalar> GnnModel<T> {
    /// Checks that weight shapes chain starting from `in_dim` input features.
    pub fn validate(&self, in_dim: usize) -> Result<()> {
        let mut dim = in_dim;
        for (l, layer) in self.layers.iter().enumerate() {
            if layer.weights.is_empty() {
                return Err(Error::Tensor(format!("layer {l} has no weights")));
            }
            for w in &layer.weights {
                if w.n_rows() != dim {
                    return Err(Error::DimensionMismatch {
                        op: "GnnModel::validate",
                        expected: format!("{dim} weight rows in layer {l}"),
                        found: w.n_rows().to_string(),
                    });
                }
                dim = w.n_cols();
            }
        }
        Ok(())
    }

    /// Widths of the feature matrices aggregated by each layer.
    pub fn aggregation_widths(&self, in_dim: usize) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.layers.len());
        let mut dim = in_dim;
        for layer in &self.layers {
            dims.push(dim);
            dim = layer.weights.last().map_or(dim, |w| w.n_cols());
        }
        dims
    }

    /// Layers of sparse small-integer weights (`-1, 0, 1`, about one in
    /// eight nonzero), ReLU everywhere but the last layer. GIN layers get a
    /// two-GEMM MLP.
    pub fn seeded(kind: GnnKind, dims: &[usize], seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::new();
        for (l, pair) in dims.windows(2).enumerate() {
            let mut draw = |r: usize, c: usize| -> Result<DenseMatrix<T>> {
                let mut values = Vec::with_capacity(r * c);
                for _ in 0..r * c {
                    let v = match rng.gen_range(0..16) {
                        0 => -1.0,
                        1 => 1.0,
                        _ => 0.0,
                    };
                    values.push(T::from_f64_exact(v).ok_or(Error::Overflow("seeded weight"))?);
                }
                DenseMatrix::new(r, c, values)
            };
            let weights = match kind {
                GnnKind::Gin => vec![draw(pair[0], pair[1])?, draw(pair[1], pair[1])?],
                _ => vec![draw(pair[0], pair[1])?],
            };
            let activation = if l + 2 == dims.len() {
                Activation::Identity
            } else {
                Activation::Relu
            };
            layers.push(Layer { weights, activation });
        }
        Ok(Self { kind, eps: 0.0, layers })
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            kind: self.kind,
            eps: self.eps,
            layers: self
                .layers
                .iter()
                .map(|l| LayerFile {
                    activation: l.activation,
                    weights: l.weights.iter().map(Tensor::from_dense).collect(),
                })
                .collect(),
        }
    }

    pub fn from_file(file: &ModelFile) -> Result<Self> {
        Ok(Self {
            kind: file.kind,
            eps: file.eps,
            layers: file
                .layers
                .iter()
                .map(|l| {
                    Ok(Layer {
                        activation: l.activation,
                        weights: l.weights.iter().map(Tensor::to_dense).collect::<Result<_>>()?,
                    })
                })
                .collect::<Result<_>>()?,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(&fs::read_to_string(path)?)?;
        Self::from_file(&file)
    }
}

/// On-disk model: kind, GIN epsilon and per-layer weight tensors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub kind: GnnKind,
    #[serde(default)]
    pub eps: f64,
    pub layers: Vec<LayerFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerFile {
    pub activation: Activation,
    pub weights: Vec<Tensor>,
}

/// Exact dense product on the host (wide accumulator for integer kinds).
pub fn host_gemm<T: Scalar>(f: &DenseMatrix<T>, w: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    dense_matmul(f, w, "host_gemm")
}

/// Chained GEMMs with the layer activation after each one.
pub fn combine<T: Scalar>(x: DenseMatrix<T>, layer: &Layer<T>) -> Result<DenseMatrix<T>> {
    let mut x = x;
    for w in &layer.weights {
        x = layer.activation.apply(host_gemm(&x, w)?);
    }
    Ok(x)
}

/// Modeled host time of the layer's GEMMs: `2 n k m / host_gemm_flops` each.
pub fn combination_seconds<T>(n: usize, in_dim: usize, layer: &Layer<T>, profile: &CostProfile) -> f64 {
    let mut dim = in_dim;
    let mut t = 0.0;
    for w in &layer.weights {
        t += 2.0 * n as f64 * dim as f64 * w.n_cols() as f64 / profile.host_gemm_flops;
        dim = w.n_cols();
    }
    t
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerReport {
    pub layer: usize,
    pub hidden: usize,
    pub aggregation: ExecutionReport,
    pub t_combination: f64,
}

/// Sums over all layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceTotals {
    pub t_host_pim: f64,
    pub t_kernel: f64,
    pub t_pim_host: f64,
    pub t_merge: f64,
    pub t_other: f64,
    pub t_aggregation: f64,
    pub t_combination: f64,
    pub t_total: f64,
    pub bytes_to_pim: u64,
    pub bytes_from_pim: u64,
    pub padding_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceReport {
    pub schema_version: u32,
    pub model: GnnKind,
    pub config: PafConfig,
    pub layers: Vec<LayerReport>,
    pub totals: InferenceTotals,
}

impl InferenceReport {
    fn new(model: GnnKind, config: PafConfig, layers: Vec<LayerReport>) -> Self {
        let sum = |f: fn(&LayerReport) -> f64| layers.iter().map(f).sum::<f64>();
        let t_aggregation = sum(|l| l.aggregation.t_total);
        let t_combination = sum(|l| l.t_combination);
        let totals = InferenceTotals {
            t_host_pim: sum(|l| l.aggregation.t_host_pim),
            t_kernel: sum(|l| l.aggregation.t_kernel),
            t_pim_host: sum(|l| l.aggregation.t_pim_host),
            t_merge: sum(|l| l.aggregation.t_merge),
            t_other: sum(|l| l.aggregation.t_other),
            t_aggregation,
            t_combination,
            t_total: t_aggregation + t_combination,
            bytes_to_pim: layers.iter().map(|l| l.aggregation.bytes_to_pim).sum(),
            bytes_from_pim: layers.iter().map(|l| l.aggregation.bytes_from_pim).sum(),
            padding_bytes: layers.iter().map(|l| l.aggregation.padding_bytes).sum(),
        };
        Self {
            schema_version: INFERENCE_SCHEMA_VERSION,
            model,
            config,
            layers,
            totals,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// One layer: `activation(aggregate(f) / scale * W ...)`.
pub fn run_layer<T: Scalar>(
    plan: &TilePlan,
    slices: &[SparseMatrix<T>],
    f: &DenseMatrix<T>,
    layer: &Layer<T>,
    scale: i64,
    profile: &CostProfile,
) -> Result<(DenseMatrix<T>, LayerReport)> {
    let (agg, report) = simulate_plan(plan, slices, f, profile)?;
    let agg = agg.map(|v| v.descale(scale));
    let t_combination = combination_seconds(f.n_rows(), f.n_cols(), layer, profile);
    let out = combine(agg, layer)?;
    Ok((
        out,
        LayerReport {
            layer: 0,
            hidden: f.n_cols(),
            aggregation: report,
            t_combination,
        },
    ))
}

/// How the aggregation configuration is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConfigChoice {
    Auto(SparseFormat),
    Fixed(PafConfig),
}

/// Tunes for the narrowest aggregated width so that `dp` is valid for every layer.
pub fn resolve_config<T: Scalar>(
    choice: ConfigChoice,
    normalized: &SparseMatrix<T>,
    widths: &[usize],
    topo: &PimTopology,
    profile: &CostProfile,
) -> Result<PafConfig> {
    match choice {
        ConfigChoice::Fixed(cfg) => Ok(cfg),
        ConfigChoice::Auto(format) => {
            let hidden = widths.iter().copied().min().unwrap_or(1);
            tune(normalized, hidden, topo, profile, format)
        }
    }
}

/// Normalizes the adjacency for the model, picks the configuration, loads
/// the graph once and runs every layer on it.
pub fn run_inference<T: Scalar>(
    model: &GnnModel<T>,
    graph: &SparseMatrix<T>,
    features: &DenseMatrix<T>,
    choice: ConfigChoice,
    scale: i64,
    topo: &PimTopology,
    profile: &CostProfile,
) -> Result<(DenseMatrix<T>, InferenceReport)> {
    if features.n_rows() != graph.n_rows() {
        return Err(Error::DimensionMismatch {
            op: "run_inference",
            expected: format!("{} feature rows", graph.n_rows()),
            found: features.n_rows().to_string(),
        });
    }
    model.validate(features.n_cols())?;
    let a = normalize_adjacency(graph, model.kind, model.eps, scale)?;
    let widths = model.aggregation_widths(features.n_cols());
    let cfg = resolve_config(choice, &a, &widths, topo, profile)?;
    if model.layers.is_empty() {
        return Ok((features.clone(), InferenceReport::new(model.kind, cfg, Vec::new())));
    }
    let loaded = LoadedGraph::load(&a, widths[0], &cfg, topo)?;
    let mut plans: BTreeMap<usize, TilePlan> = BTreeMap::new();
    let mut x = features.clone();
    let mut reports = Vec::with_capacity(model.layers.len());
    for (l, layer) in model.layers.iter().enumerate() {
        let k = x.n_cols();
        if let std::collections::btree_map::Entry::Vacant(e) = plans.entry(k) {
            e.insert(loaded.plan_for_hidden(k)?);
        }
        let (y, mut rep) = run_layer(&plans[&k], &loaded.slices, &x, layer, scale, profile)?;
        rep.layer = l;
        reports.push(rep);
        x = y;
    }
    Ok((x, InferenceReport::new(model.kind, cfg, reports)))
}

/// Single-threaded host-only forward pass used as the inference oracle.
pub fn host_reference<T: Scalar>(
    model: &GnnModel<T>,
    graph: &SparseMatrix<T>,
    features: &DenseMatrix<T>,
    scale: i64,
) -> Result<DenseMatrix<T>> {
    model.validate(features.n_cols())?;
    let a = normalize_adjacency(graph, model.kind, model.eps, scale)?;
    let mut x = features.clone();
    for layer in &model.layers {
        let agg = dense_spmm_oracle(&a, &x)?.map(|v| v.descale(scale));
        x = combine(agg, layer)?;
    }
    Ok(x)
}
