use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{init_glorot, init_glorot_two_layer, multilayer_teacher_dataset, reference_teacher, teacher_dataset, Grid};
use super::metrics::{saddle_trace_metrics, SaddleMetrics};
use super::train::{refine, refine_least_squares, refine_newton, train, Refinement, TrainingConfig, TrainingTrace};
use crate::error::{invalid, Result};
use crate::expansion::{classify_neurons, NeuronClassification, NeuronLabel};
use crate::network::{Activation, Dataset, ModelFile, MultiLayerPoint, TwoLayerPoint};

/// Irreducibility tolerance used when reporting narrow critical points.
pub const NARROW_IRREDUCIBLE_TOL: f64 = 1e-6;
/// Newton solves allowed after gradient descent stalls in [`find_critical_narrow`].
pub const NEWTON_POLISH_BUDGET: usize = 200;

/// Output of [`find_critical_narrow`].
#[derive(Clone, Debug, PartialEq)]
pub struct NarrowCritical {
    pub point: TwoLayerPoint,
    pub loss: f64,
    pub grad_norm: f64,
    pub irreducible: bool,
    /// False when the refinement budget ran out above the tolerance; the
    /// best point found is still returned.
    pub reached: bool,
    pub train_iters: usize,
    /// Gradient steps plus Newton solves.
    pub refine_iters: usize,
}

/// Trains a width-`r` student from a Glorot initialization seeded by
/// `cfg.seed`, then refines by gradient descent until `|grad|_inf <= refine_tol`.
/// If `refine_budget` gradient steps do not get there, a damped Newton
/// polish with at most [`NEWTON_POLISH_BUDGET`] solves takes over.
pub fn find_critical_narrow(
    r: usize,
    activation: Activation,
    data: &Dataset,
    cfg: &TrainingConfig,
    refine_tol: f64,
    refine_budget: usize,
) -> Result<NarrowCritical> {
    if r == 0 {
        return Err(invalid("width must be at least 1"));
    }
    if !(refine_tol > 0.0) {
        return Err(invalid("refine tolerance must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let init = init_glorot_two_layer(&mut rng, activation, data.d_in(), r, data.d_out())?;
    let obj = init.objective(data)?;
    let trace = train(&obj, &init.to_flat(), cfg)?;
    let mut rf = refine(&obj, &trace.final_params, refine_tol, refine_budget);
    if !rf.reached {
        let polished = refine_newton(&obj, &rf.params, refine_tol, NEWTON_POLISH_BUDGET)?;
        if polished.grad_norm < rf.grad_norm {
            rf = Refinement {
                iters: rf.iters + polished.iters,
                ..polished
            };
        }
    }
    let point = init.with_flat(&rf.params)?;
    Ok(NarrowCritical {
        irreducible: point.is_irreducible(NARROW_IRREDUCIBLE_TOL),
        point,
        loss: rf.loss,
        grad_norm: rf.grad_norm,
        reached: rf.reached,
        train_iters: trace.iters,
        refine_iters: rf.iters,
    })
}

/// [`classify_neurons`] plus its histogram row.
pub fn classify_run(
    trained: &TwoLayerPoint,
    teacher: &TwoLayerPoint,
    tol: f64,
) -> Result<(NeuronClassification, BTreeMap<String, usize>)> {
    let c = classify_neurons(trained, teacher, tol)?;
    let h = c.histogram();
    Ok((c, h))
}

/// Settings of the least-squares refinement and classification applied to
/// converged single-hidden-layer runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassificationConfig {
    pub tol: f64,
    pub refine_target_loss: f64,
    pub refine_budget: usize,
}

impl Default for ClassificationConfig {
    fn default() -> Self {
        ClassificationConfig {
            tol: 1e-3,
            refine_target_loss: 1e-28,
            refine_budget: 5000,
        }
    }
}

/// Experiment description read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub name: String,
    pub activation: Activation,
    pub grid: Grid,
    /// Student hidden widths; with `depth > 1` every hidden layer gets the width.
    pub widths: Vec<usize>,
    pub depth: usize,
    pub n_seeds: usize,
    pub base_seed: u64,
    /// Explicit teacher. Defaults to the four-neuron reference teacher for
    /// `depth == 1` and to a Glorot-random teacher with hidden widths 4
    /// drawn from `teacher_seed` otherwise.
    pub teacher: Option<ModelFile>,
    pub teacher_seed: u64,
    pub training: TrainingConfig,
    pub classification: Option<ClassificationConfig>,
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: "experiment".into(),
            activation: Activation::Sigmoid,
            grid: Grid::DESK,
            widths: vec![5, 45],
            depth: 1,
            n_seeds: 20,
            base_seed: 0,
            teacher: None,
            teacher_seed: 1000,
            training: TrainingConfig::default(),
            classification: None,
            threads: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.training.validate()?;
        if self.n_seeds == 0 {
            return Err(invalid("n_seeds must be at least 1"));
        }
        if self.widths.is_empty() || self.widths.contains(&0) {
            return Err(invalid("widths must be a non-empty list of positive integers"));
        }
        if self.depth == 0 {
            return Err(invalid("depth must be at least 1"));
        }
        if self.threads == 0 {
            return Err(invalid("threads must be at least 1"));
        }
        if self.classification.is_some() && self.depth != 1 {
            return Err(invalid("classification needs a single hidden layer"));
        }
        if let Some(c) = &self.classification {
            if !(c.tol > 0.0) {
                return Err(invalid("classification tol must be positive"));
            }
        }
        self.grid.points_per_axis()?;
        Ok(())
    }

    /// The teacher network as a layered point.
    pub fn teacher(&self) -> Result<MultiLayerPoint> {
        let t = match &self.teacher {
            Some(m) => m.to_multi_layer()?,
            None if self.depth == 1 => MultiLayerPoint::from_two_layer(&reference_teacher(self.activation)),
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.teacher_seed);
                init_glorot(&mut rng, self.activation, 2, &vec![4; self.depth], 1)?
            }
        };
        if t.depth() != self.depth + 1 {
            return Err(invalid(format!(
                "teacher has {} hidden layers, config asks for {}",
                t.depth() - 1,
                self.depth
            )));
        }
        if t.activation() != self.activation {
            return Err(invalid("teacher activation differs from the config activation"));
        }
        Ok(t)
    }
}

/// One training run of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub width: usize,
    pub seed: u64,
    pub converged: bool,
    pub final_loss: f64,
    pub final_grad_norm: f64,
    pub iters: usize,
    /// Present when the trace has at least three checkpoints.
    pub saddle: Option<SaddleMetrics>,
    pub classification: Option<RunClassification>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunClassification {
    pub refined_loss: f64,
    pub refined_grad_norm: f64,
    pub refine_iters: usize,
    pub consistent: bool,
    pub histogram: BTreeMap<String, usize>,
    pub neurons: Vec<NeuronRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeuronRecord {
    pub label: NeuronLabel,
    pub group_size: usize,
    /// Copy-group output deviation or zero-type residual of the neuron's group.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthSuccess {
    pub width: usize,
    pub runs: usize,
    pub converged: usize,
    pub success_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub dataset_size: usize,
    pub runs: Vec<RunRecord>,
    pub success: Vec<WidthSuccess>,
}

impl ExperimentReport {
    pub fn success_fraction(&self, width: usize) -> Option<f64> {
        self.success.iter().find(|s| s.width == width).map(|s| s.success_fraction)
    }

    /// Converged runs that were classified, and how many of them were consistent.
    pub fn consistency_counts(&self) -> (usize, usize) {
        let classified: Vec<_> = self.runs.iter().filter_map(|r| r.classification.as_ref()).collect();
        (classified.len(), classified.iter().filter(|c| c.consistent).count())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `width,seed,converged,final_loss,iters`
    pub fn success_csv(&self) -> String {
        let mut s = String::from("width,seed,converged,final_loss,iters\n");
        for r in &self.runs {
            let _ = writeln!(s, "{},{},{},{:e},{}", r.width, r.seed, r.converged, r.final_loss, r.iters);
        }
        s
    }

    /// `run,neuron,label,group_size,residual`, one row per neuron of each classified run.
    pub fn classification_csv(&self) -> String {
        let mut s = String::from("run,neuron,label,group_size,residual\n");
        for (run, r) in self.runs.iter().enumerate() {
            let Some(c) = &r.classification else { continue };
            for (i, n) in c.neurons.iter().enumerate() {
                let label = match n.label {
                    NeuronLabel::Copy { .. } => "copy",
                    NeuronLabel::ZeroType { .. } => "zero_type",
                };
                let _ = writeln!(s, "{run},{i},{label},{},{:e}", n.group_size, n.residual);
            }
        }
        s
    }

    /// Writes `report.json`, `success.csv` and `classification.csv` into `dir`.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json()?)?;
        std::fs::write(dir.join("success.csv"), self.success_csv())?;
        std::fs::write(dir.join("classification.csv"), self.classification_csv())?;
        Ok(())
    }
}

fn neuron_records(c: &NeuronClassification) -> Vec<NeuronRecord> {
    c.labels
        .iter()
        .enumerate()
        .map(|(i, &label)| NeuronRecord {
            label,
            group_size: c.group_size(i),
            residual: match label {
                NeuronLabel::Copy { teacher } => c.copies[teacher].deviation,
                NeuronLabel::ZeroType { group } => c.zero_type[group].residual,
            },
        })
        .collect()
}

fn summarize(width: usize, seed: u64, trace: &TrainingTrace, classification: Option<RunClassification>) -> RunRecord {
    RunRecord {
        width,
        seed,
        converged: trace.converged,
        final_loss: trace.final_loss,
        final_grad_norm: trace.final_grad_norm,
        iters: trace.iters,
        saddle: saddle_trace_metrics(trace).ok(),
        classification,
    }
}

fn run_one(cfg: &ExperimentConfig, teacher: &MultiLayerPoint, data: &Dataset, width: usize, seed: u64) -> Result<RunRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tcfg = TrainingConfig {
        seed,
        ..cfg.training.clone()
    };
    if cfg.depth == 1 {
        let init = init_glorot_two_layer(&mut rng, cfg.activation, data.d_in(), width, data.d_out())?;
        let obj = init.objective(data)?;
        let trace = train(&obj, &init.to_flat(), &tcfg)?;
        let classification = match &cfg.classification {
            Some(cc) if trace.converged => {
                let rf = refine_least_squares(&obj, &trace.final_params, cc.refine_target_loss, cc.refine_budget);
                let student = init.with_flat(&rf.params)?;
                let (c, histogram) = classify_run(&student, &teacher.hidden_block(1)?, cc.tol)?;
                Some(RunClassification {
                    refined_loss: rf.loss,
                    refined_grad_norm: rf.grad_norm,
                    refine_iters: rf.iters,
                    consistent: c.consistent,
                    histogram,
                    neurons: neuron_records(&c),
                })
            }
            _ => None,
        };
        Ok(summarize(width, seed, &trace, classification))
    } else {
        let hidden = vec![width; cfg.depth];
        let init = init_glorot(&mut rng, cfg.activation, data.d_in(), &hidden, data.d_out())?;
        let obj = init.objective(data)?;
        let trace = train(&obj, &init.to_flat(), &tcfg)?;
        Ok(summarize(width, seed, &trace, None))
    }
}

/// Trains every `(width, seed)` pair with seeds `base_seed + index`. Runs are
/// independent and may execute on `cfg.threads` workers; the report lists
/// them width by width in seed order regardless of scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let teacher = cfg.teacher()?;
    let data = if cfg.depth == 1 {
        teacher_dataset(&teacher.hidden_block(1)?, cfg.grid)?
    } else {
        multilayer_teacher_dataset(&teacher, cfg.grid)?
    };
    let jobs: Vec<(usize, u64)> = cfg
        .widths
        .iter()
        .flat_map(|&w| (0..cfg.n_seeds as u64).map(move |i| (w, cfg.base_seed + i)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| invalid(format!("thread pool: {e}")))?;
    let runs: Vec<RunRecord> = pool.install(|| {
        jobs.par_iter()
            .map(|&(w, seed)| run_one(cfg, &teacher, &data, w, seed))
            .collect::<Result<Vec<_>>>()
    })?;
    let success = cfg
        .widths
        .iter()
        .map(|&w| {
            let of_width: Vec<_> = runs.iter().filter(|r| r.width == w).collect();
            let converged = of_width.iter().filter(|r| r.converged).count();
            WidthSuccess {
                width: w,
                runs: of_width.len(),
                converged,
                success_fraction: converged as f64 / of_width.len() as f64,
            }
        })
        .collect();
    Ok(ExperimentReport {
        config: cfg.clone(),
        dataset_size: data.len(),
        runs,
        success,
    })
}

/// Success fractions for two-layer students of each width on `data`.
pub fn success_rate(
    activation: Activation,
    data: &Dataset,
    widths: &[usize],
    n_seeds: usize,
    base_seed: u64,
    cfg: &TrainingConfig,
) -> Result<Vec<WidthSuccess>> {
    if n_seeds == 0 {
        return Err(invalid("n_seeds must be at least 1"));
    }
    let mut out = Vec::with_capacity(widths.len());
    for &w in widths {
        let mut converged = 0;
        for i in 0..n_seeds as u64 {
            let seed = base_seed + i;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let init = init_glorot_two_layer(&mut rng, activation, data.d_in(), w, data.d_out())?;
            let obj = init.objective(data)?;
            let trace = train(&obj, &init.to_flat(), &TrainingConfig { seed, ..cfg.clone() })?;
            converged += trace.converged as usize;
        }
        out.push(WidthSuccess {
            width: w,
            runs: n_seeds,
            converged,
            success_fraction: converged as f64 / n_seeds as f64,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> ExperimentConfig {
        ExperimentConfig {
            grid: Grid {
                half_extent: 2.0,
                step: 1.0,
            },
            widths: vec![4, 6],
            n_seeds: 2,
            training: TrainingConfig {
                max_iters: 300,
                ..TrainingConfig::default()
            },
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn teacher_clone_converges_immediately() {
        let t = reference_teacher(Activation::Sigmoid);
        let data = teacher_dataset(&t, Grid::DESK).unwrap();
        let trace = train(&t.objective(&data).unwrap(), &t.to_flat(), &TrainingConfig::default()).unwrap();
        assert!(trace.converged);
        assert_eq!(trace.iters, 0);
        let (c, h) = classify_run(&t, &t, 1e-3).unwrap();
        assert!(c.consistent);
        assert_eq!(h.get("copy"), Some(&4));
        assert_eq!(h.len(), 1);
    }

    #[test]
    fn report_is_ordered_and_thread_independent() {
        let one = run_experiment(&tiny_config()).unwrap();
        let two = run_experiment(&ExperimentConfig {
            threads: 2,
            ..tiny_config()
        })
        .unwrap();
        assert_eq!(one.runs, two.runs);
        let keys: Vec<(usize, u64)> = one.runs.iter().map(|r| (r.width, r.seed)).collect();
        assert_eq!(keys, vec![(4, 0), (4, 1), (6, 0), (6, 1)]);
        assert_eq!(one.dataset_size, 25);
        for s in &one.success {
            assert!((0.0..=1.0).contains(&s.success_fraction));
        }
        let csv = one.success_csv();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.starts_with("width,seed,converged,final_loss,iters\n"));
    }

    #[test]
    fn success_rate_matches_runner() {
        let cfg = tiny_config();
        let data = teacher_dataset(&reference_teacher(cfg.activation), cfg.grid).unwrap();
        let direct = success_rate(cfg.activation, &data, &cfg.widths, cfg.n_seeds, 0, &cfg.training).unwrap();
        assert_eq!(direct, run_experiment(&cfg).unwrap().success);
    }

    #[test]
    fn config_json_and_validation() {
        let cfg = ExperimentConfig::from_json(
            r#"{"widths": [10], "activation": {"kind": "blended", "alpha": 1.0, "gamma": 4.0},
                "classification": {"tol": 0.001}}"#,
        )
        .unwrap();
        assert_eq!(cfg.n_seeds, 20);
        assert_eq!(cfg.classification.as_ref().unwrap().refine_budget, 5000);
        let back = ExperimentConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert!(ExperimentConfig::from_json(r#"{"n_seeds": 0}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"widths": []}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"depth": 3, "classification": {}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"grid": {"half_extent": 5, "step": 0.3}}"#).is_err());
    }

    #[test]
    fn deep_runs_use_generated_teacher() {
        let cfg = ExperimentConfig {
            depth: 3,
            widths: vec![3],
            n_seeds: 1,
            ..tiny_config()
        };
        let t = cfg.teacher().unwrap();
        assert_eq!(t.widths(), &[2, 4, 4, 4, 1]);
        let r = run_experiment(&cfg).unwrap();
        assert_eq!(r.runs.len(), 1);
        assert!(r.runs[0].classification.is_none());
    }

    #[test]
    fn narrow_critical_point_is_reported() {
        let t = reference_teacher(Activation::Sigmoid);
        let data = teacher_dataset(&t, Grid::DESK).unwrap();
        let cfg = TrainingConfig {
            max_iters: 2000,
            ..TrainingConfig::default()
        };
        let nc = find_critical_narrow(1, Activation::Sigmoid, &data, &cfg, 1e-10, 200_000).unwrap();
        assert_eq!(nc.point.width(), 1);
        assert!(nc.loss > 0.0);
        assert!(nc.reached, "grad norm {}", nc.grad_norm);
        assert!(nc.irreducible);
        assert!(find_critical_narrow(0, Activation::Sigmoid, &data, &cfg, 1e-10, 10).is_err());
    }
}
