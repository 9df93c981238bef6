use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use lsym::combinatorics::{
    critical_subspace_count, minima_subspace_count, multilayer_count, ratio_table, saddle_ratio,
    write_ratio_table_csv, zero_type_groupings, SaddleWeights, SubspaceKind,
};
use lsym::expansion::{
    build_path, expand_point, multilayer_expand, sample_expansion, sample_multilayer_expansion, ExpansionSpec,
    NeuronLabel, PiecewisePath,
};
use lsym::experiments::{classify_run, run_experiment, ExperimentConfig};
use lsym::network::{sup_dist, Dataset, ModelFile, MultiLayerPoint, TwoLayerPoint};
use lsym::verification::{
    check_zero_gradient, default_flow_step, gradient_flow, hessian_report, min_pairwise_distance, path_loss_profile,
    subspace_invariance_check, Integrator,
};

use crate::args::{
    ClassifyArgs, CountCmd, ExpandArgs, ExperimentArgs, FlowArgs, Format, Kind, ModelData, PathArgs, ReduceArgs,
    VerifyCmd, Weights,
};
use crate::output::{CmdResult, Ctx, Failure};

/// Number of random inputs used to compare network functions.
const PROBES: usize = 50;
/// Probe inputs are uniform on `[-PROBE_RANGE, PROBE_RANGE]^d_in`.
const PROBE_RANGE: f64 = 5.0;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn read_model(path: &Path) -> Result<ModelFile, Failure> {
    ModelFile::read(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn read_two_layer(path: &Path) -> Result<TwoLayerPoint, Failure> {
    let m = read_model(path)?;
    if !m.is_two_layer() {
        return Err(usage(format!("{}: expected a single hidden layer", path.display())));
    }
    Ok(m.to_two_layer()?)
}

fn read_data(path: &Path, d_in: usize) -> Result<Dataset, Failure> {
    let f = File::open(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    Dataset::read_csv(BufReader::new(f), d_in).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write_json(path: &Path, v: &impl serde::Serialize) -> Result<(), Failure> {
    std::fs::write(path, serde_json::to_string_pretty(v)? + "\n")?;
    Ok(())
}

fn probes(rng: &mut ChaCha8Rng, d_in: usize) -> Vec<Vec<f64>> {
    (0..PROBES)
        .map(|_| (0..d_in).map(|_| rng.random_range(-PROBE_RANGE..=PROBE_RANGE)).collect())
        .collect()
}

fn multilayer_distance(a: &MultiLayerPoint, b: &MultiLayerPoint, xs: &[Vec<f64>]) -> Result<f64, Failure> {
    let mut worst: f64 = 0.0;
    for x in xs {
        worst = worst.max(sup_dist(&a.forward(x)?, &b.forward(x)?));
    }
    Ok(worst)
}

// ---------------------------------------------------------------- count

pub fn count(ctx: &Ctx, cmd: &CountCmd) -> CmdResult {
    let (report, text) = match cmd {
        CountCmd::G(a) => {
            let v = critical_subspace_count(a.r, a.m);
            (json!({"quantity": "G", "r": a.r, "m": a.m, "value": v}), v.to_string())
        }
        CountCmd::T(a) => {
            let v = minima_subspace_count(a.r, a.m)?;
            (json!({"quantity": "T", "r": a.r, "m": a.m, "value": v}), v.to_string())
        }
        CountCmd::Gu { u } => {
            let v = zero_type_groupings(*u);
            (json!({"quantity": "g", "u": u, "value": v}), v.to_string())
        }
        CountCmd::Ratio { k, r_star, m, digits } => {
            let v = saddle_ratio(*k, *r_star, *m)?;
            let dec = v.to_decimal(*digits);
            (
                json!({
                    "quantity": "R", "k": k, "r_star": r_star, "m": m,
                    "numerator": v.numerator(), "denominator": v.denominator(), "decimal": dec,
                }),
                format!("{v} ({dec})"),
            )
        }
        CountCmd::Table {
            r_star,
            m_max,
            k_max,
            weights,
            digits,
        } => {
            let w = match weights {
                Weights::Unit => SaddleWeights::Unit,
                Weights::Binomial => SaddleWeights::BinomialBound,
            };
            let rows = ratio_table(*r_star, *m_max, *k_max, &w)?;
            let text = if ctx.format == Some(Format::Json) {
                serde_json::to_string_pretty(&rows)? + "\n"
            } else {
                let mut buf = Vec::new();
                write_ratio_table_csv(&rows, *digits, &mut buf)?;
                String::from_utf8(buf).expect("csv is utf-8")
            };
            ctx.emit(&text)?;
            return Ok(true);
        }
        CountCmd::Multilayer { r_vec, m_vec, kind } => {
            let k = match kind {
                Kind::T => SubspaceKind::Minima,
                Kind::G => SubspaceKind::Critical,
            };
            let v = multilayer_count(r_vec, m_vec, k)?;
            let name = if *kind == Kind::T { "T" } else { "G" };
            (
                json!({"quantity": name, "r_vec": r_vec, "m_vec": m_vec, "value": v}),
                v.to_string(),
            )
        }
    };
    let mut report = report;
    if ctx.format == Some(Format::Csv) {
        // Vector arguments do not fit a CSV cell as arrays.
        if let Some(obj) = report.as_object_mut() {
            for key in ["r_vec", "m_vec"] {
                if let Some(Value::Array(a)) = obj.get(key) {
                    let joined: Vec<String> = a.iter().map(|x| x.to_string()).collect();
                    obj.insert(key.into(), Value::String(joined.join(" ")));
                }
            }
        }
    }
    ctx.emit(&ctx.render(&report, &text))?;
    Ok(true)
}

// ---------------------------------------------------------------- expand / reduce

pub fn expand(ctx: &Ctx, a: &ExpandArgs) -> CmdResult {
    let model = read_model(&a.model)?;
    let tol = ctx.tol_or(1e-9);
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed.unwrap_or(0));
    let (specs, expanded): (Vec<ExpansionSpec>, ModelFile) = if model.is_two_layer() {
        let theta = model.to_two_layer()?;
        let (spec, point) = if let Some(p) = &a.spec {
            let spec: ExpansionSpec = serde_json::from_str(&std::fs::read_to_string(p)?)?;
            let point = expand_point(&theta, &spec, a.expand_tol)?;
            (spec, point)
        } else if a.sample {
            let [m] = a.target_width[..] else {
                return Err(usage("--target-width takes one width for a single hidden layer"));
            };
            sample_expansion(&theta, m, a.expand_tol, &mut rng)?
        } else {
            return Err(usage("give --spec or --target-width with --sample"));
        };
        (vec![spec], ModelFile::from(&point))
    } else {
        let theta = model.to_multi_layer()?;
        let (specs, point) = if let Some(p) = &a.spec {
            let specs: Vec<ExpansionSpec> = serde_json::from_str(&std::fs::read_to_string(p)?)?;
            let m_vec: Vec<usize> = specs.iter().map(|s| s.target_width()).collect();
            let point = multilayer_expand(&theta, &m_vec, &specs, a.expand_tol)?;
            (specs, point)
        } else if a.sample {
            sample_multilayer_expansion(&theta, &a.target_width, a.expand_tol, &mut rng)?
        } else {
            return Err(usage("give --spec or --target-width with --sample"));
        };
        (specs, ModelFile::from(&point))
    };
    let xs = probes(&mut rng, model.d_in);
    let residual = multilayer_distance(&model.to_multi_layer()?, &expanded.to_multi_layer()?, &xs)?;
    if let Some(out) = &ctx.out {
        expanded.write(out)?;
    }
    if let Some(p) = &a.spec_out {
        if specs.len() == 1 && model.is_two_layer() {
            write_json(p, &specs[0])?;
        } else {
            write_json(p, &specs)?;
        }
    }
    let pass = residual <= tol;
    let report = json!({
        "widths": expanded.widths, "residual": residual, "probes": PROBES, "tol": tol, "pass": pass,
    });
    ctx.print(&report, &format!("expanded to widths {:?}; residual {residual:e} over {PROBES} probes", expanded.widths));
    Ok(pass)
}

pub fn reduce(ctx: &Ctx, a: &ReduceArgs) -> CmdResult {
    let theta = read_two_layer(&a.model)?;
    let tol = ctx.tol_or(1e-9);
    if theta.is_irreducible(a.merge_tol) {
        if let Some(out) = &ctx.out {
            ModelFile::from(&theta).write(out)?;
        }
        let report = json!({"already_irreducible": true, "width": theta.width(), "residual": 0.0, "tol": tol, "pass": true});
        ctx.print(&report, "already irreducible");
        return Ok(true);
    }
    let Some(reduced) = theta.reduce(a.merge_tol) else {
        return Err(Failure::Internal("every neuron cancels; the model computes the zero function".into()));
    };
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed.unwrap_or(0));
    let residual = theta.function_distance(&reduced, &probes(&mut rng, theta.d_in()))?;
    if let Some(out) = &ctx.out {
        ModelFile::from(&reduced).write(out)?;
    }
    let pass = residual <= tol;
    let report = json!({
        "already_irreducible": false, "width": reduced.width(), "residual": residual, "tol": tol, "pass": pass,
    });
    ctx.print(
        &report,
        &format!("reduced width {} -> {}; residual {residual:e} over {PROBES} probes", theta.width(), reduced.width()),
    );
    Ok(pass)
}

// ---------------------------------------------------------------- verify

pub fn verify(ctx: &Ctx, cmd: &VerifyCmd) -> CmdResult {
    match cmd {
        VerifyCmd::Critical(md) => {
            let (theta, data) = load(md)?;
            let r = check_zero_gradient(&theta, &data, ctx.tol_or(1e-8))?;
            let text = format!("grad_norm {:e} (tol {:e}), loss {:e}: {}", r.grad_norm, r.tol, r.loss, verdict(r.pass));
            ctx.emit(&ctx.render(&serde_json::to_value(&r)?, &text))?;
            Ok(r.pass)
        }
        VerifyCmd::Hessian { md, min_null, eigen_csv } => {
            let (theta, data) = load(md)?;
            let r = hessian_report(&theta, &data, ctx.tol_or(1e-4))?;
            if let Some(p) = eigen_csv {
                r.write_csv(File::create(p)?)?;
            }
            let pass = min_null.is_none_or(|n| r.null_count >= n);
            let mut report = serde_json::to_value(&r)?;
            report["min_null"] = json!(min_null);
            report["pass"] = json!(pass);
            let text = format!(
                "{} eigenvalues, null {} (tol {:e}), negative {}, min {:e}, max {:e}: {}",
                r.eigenvalues.len(),
                r.null_count,
                r.tol,
                r.negative_count,
                r.min_eig,
                r.max_eig,
                verdict(pass)
            );
            ctx.emit(&ctx.render(&report, &text))?;
            Ok(pass)
        }
        VerifyCmd::Path(a) => verify_path(ctx, a),
        VerifyCmd::Flow(a) => verify_flow(ctx, a),
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "FAIL"
    }
}

fn load(md: &ModelData) -> Result<(TwoLayerPoint, Dataset), Failure> {
    let theta = read_two_layer(&md.model)?;
    let data = read_data(&md.data, theta.d_in())?;
    Ok((theta, data))
}

fn verify_path(ctx: &Ctx, a: &PathArgs) -> CmdResult {
    let tol = ctx.tol_or(1e-10);
    let (path, shape) = match (&a.path, &a.from) {
        (Some(p), _) => {
            let path: PiecewisePath = serde_json::from_str(&std::fs::read_to_string(p)?)?;
            let Some(model) = a.model.as_ref().or(a.teacher.as_ref()) else {
                return Err(usage("--path needs --model for the activation and dimensions"));
            };
            let shape = read_two_layer(model)?;
            (path, shape)
        }
        (None, Some(from)) => {
            let (Some(to), Some(teacher)) = (&a.to, &a.teacher) else {
                return Err(usage("--from needs --to and --teacher"));
            };
            let start = read_two_layer(from)?;
            let end = read_two_layer(to)?;
            let theta = read_two_layer(teacher)?;
            let path = build_path(&start, &end, &theta, a.match_tol)?;
            if let Some(p) = &a.path_out {
                std::fs::write(p, path.to_json()? + "\n")?;
            }
            (path, start)
        }
        (None, None) => return Err(usage("give --path or --from/--to/--teacher")),
    };
    let data = read_data(&a.data, shape.d_in())?;
    let profile = path_loss_profile(&path, &shape, &data, a.samples)?;
    if let Some(p) = &a.profile_csv {
        profile.write_csv(File::create(p)?)?;
    }
    let pass = profile.max_abs_deviation <= tol;
    let report = json!({
        "segments": path.len(), "samples_per_segment": a.samples,
        "max_abs_deviation": profile.max_abs_deviation, "tol": tol, "pass": pass,
    });
    let text = format!(
        "{} segments, max loss deviation {:e} (tol {tol:e}): {}",
        path.len(),
        profile.max_abs_deviation,
        verdict(pass)
    );
    ctx.emit(&ctx.render(&report, &text))?;
    Ok(pass)
}

fn verify_flow(ctx: &Ctx, a: &FlowArgs) -> CmdResult {
    let tol = ctx.tol_or(1e-12);
    let (theta, data) = load(&a.md)?;
    let integrator: Integrator = a.integrator.parse()?;
    let obj = theta.objective(&data)?;
    let x0 = theta.to_flat();
    let step = a.step.unwrap_or_else(|| default_flow_step(&obj, &x0));
    let traj = gradient_flow(&obj, &x0, step, a.horizon, integrator)?;
    if let Some(p) = &a.trajectory_csv {
        traj.write_csv(File::create(p)?)?;
    }
    let unit = theta.unit_dim();
    let deviation = if a.pairs.is_empty() {
        None
    } else {
        Some(subspace_invariance_check(&traj, unit, &a.pairs)?)
    };
    let min_dist = min_pairwise_distance(&traj, unit)?;
    let pass = deviation.is_none_or(|d| d <= tol);
    let report = json!({
        "steps": traj.len() - 1, "step": step, "horizon": a.horizon,
        "max_pair_deviation": deviation, "min_pairwise_distance": min_dist,
        "final_loss": theta.with_flat(traj.last())?.loss(&data)?, "tol": tol, "pass": pass,
    });
    let text = match deviation {
        Some(d) => format!("pair deviation {d:e} (tol {tol:e}), min pairwise distance {min_dist:e}: {}", verdict(pass)),
        None => format!("min pairwise distance {min_dist:e}"),
    };
    ctx.emit(&ctx.render(&report, &text))?;
    Ok(pass)
}

// ---------------------------------------------------------------- experiment / classify

pub fn experiment(ctx: &Ctx, a: &ExperimentArgs) -> CmdResult {
    let mut cfg = ExperimentConfig::read(&a.config).map_err(|e| usage(format!("{}: {e}", a.config.display())))?;
    if let Some(t) = ctx.threads {
        cfg.threads = t;
    }
    if let Some(s) = ctx.seed {
        cfg.base_seed = s;
    }
    let report = run_experiment(&cfg)?;
    let dir = ctx.out.clone().unwrap_or_else(|| cfg.name.clone().into());
    report.write_dir(&dir)?;
    let (classified, consistent) = report.consistency_counts();
    let pass = consistent == classified;
    let mut text = String::new();
    for s in &report.success {
        text += &format!("width {}: {}/{} converged ({})\n", s.width, s.converged, s.runs, s.success_fraction);
    }
    if cfg.classification.is_some() {
        text += &format!("classification: {consistent}/{classified} converged runs consistent\n");
    }
    text += &format!("outputs in {}", dir.display());
    let summary = json!({
        "success": report.success, "classified": classified, "consistent": consistent,
        "output_dir": dir, "pass": pass,
    });
    ctx.print(&summary, &text);
    Ok(pass)
}

pub fn classify(ctx: &Ctx, a: &ClassifyArgs) -> CmdResult {
    let student = read_two_layer(&a.student)?;
    let teacher = read_two_layer(&a.teacher)?;
    let tol = ctx.tol_or(1e-3);
    let (c, histogram) = classify_run(&student, &teacher, tol)?;
    let rows: Vec<(usize, &str, usize, f64)> = c
        .labels
        .iter()
        .enumerate()
        .map(|(i, l)| match *l {
            NeuronLabel::Copy { teacher } => (i, "copy", c.group_size(i), c.copies[teacher].deviation),
            NeuronLabel::ZeroType { group } => (i, "zero_type", c.group_size(i), c.zero_type[group].residual),
        })
        .collect();
    let text = match ctx.format {
        Some(Format::Csv) => {
            let mut s = String::from("run,neuron,label,group_size,residual\n");
            for (i, l, g, r) in &rows {
                s += &format!("0,{i},{l},{g},{r:e}\n");
            }
            s
        }
        Some(Format::Json) => {
            let report = json!({
                "tol": tol, "consistent": c.consistent, "histogram": histogram,
                "labels": c.labels, "copies": c.copies, "zero_type": c.zero_type,
            });
            serde_json::to_string_pretty(&report)? + "\n"
        }
        None => {
            let mut s = String::new();
            for (k, v) in &histogram {
                s += &format!("{k}: {v}\n");
            }
            s += &format!("consistent at tol {tol:e}: {}\n", c.consistent);
            s
        }
    };
    ctx.emit(&text)?;
    Ok(c.consistent)
}
