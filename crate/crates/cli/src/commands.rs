use std::fs;
use std::io::{self, BufRead, Write};
use std::path::Path;
use std::sync::Arc;
use std::thread;

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};

use uwb_posture::commander::{
    read_stream, FrameQueue, ReplayConfig, Replayer, SmootherConfig, StreamFrame,
};
use uwb_posture::dataset::{generate_synthetic, load_csv, write_csv};
use uwb_posture::evaluation::{
    class_metrics, node_ablation, noise_sweep, overall_accuracy, run_loocv, train_all,
    ConfusionMatrix,
};
use uwb_posture::{
    Dataset, ModelBundle, NoiseSpec, PostureClass, RangingErrorModel, SkeletonParams, Speeds,
};

use crate::args::{
    AblateArgs, Cli, Command, EvaluateArgs, Format, GenDataArgs, MetricsArgs, ReplayArgs,
    SweepArgs, TrainArgs,
};

const TOOL: &str = "uwbpose";

struct Run<'a> {
    seed: u64,
    command: &'a Command,
}

impl Run<'_> {
    /// Provenance header embedded in every output.
    fn meta(&self) -> Value {
        json!({
            "tool": TOOL,
            "version": env!("CARGO_PKG_VERSION"),
            "seed": self.seed,
            "command": self.command.name(),
            "config": self.command,
        })
    }

    fn meta_with_timing(&self, timing: Value) -> Value {
        let mut m = self.meta();
        m["timing"] = timing;
        m
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let run = Run {
        seed: cli.seed,
        command: &cli.command,
    };
    match &cli.command {
        Command::GenData(a) => gen_data(&run, a),
        Command::Train(a) => train(&run, a),
        Command::Evaluate(a) => evaluate(&run, a),
        Command::SweepNoise(a) => sweep(&run, a),
        Command::AblateNodes(a) => ablate(&run, a),
        Command::Replay(a) => replay(&run, a),
        Command::Metrics(a) => metrics(&run, a),
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn json_text(v: &Value) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn csv_comment(meta: &Value) -> String {
    format!("# {meta}\n")
}

fn load(path: &Path) -> Result<Dataset> {
    load_csv(path).with_context(|| format!("cannot load dataset {}", path.display()))
}

fn gen_data(run: &Run, a: &GenDataArgs) -> Result<()> {
    let params = SkeletonParams {
        per_subject_scale_jitter: a.scale_jitter,
        per_frame_pose_jitter: a.pose_jitter,
        seed: run.seed,
        ..SkeletonParams::default()
    };
    let error = RangingErrorModel::new(a.sigma, run.seed)?;
    let data = generate_synthetic(a.subjects, a.per_posture, &params, &error)?;
    let mut text = csv_comment(&run.meta()).into_bytes();
    write_csv(&data, &mut text)?;
    fs::write(&a.output, text).with_context(|| format!("cannot write {}", a.output.display()))?;
    eprintln!("wrote {} samples to {}", data.len(), a.output.display());
    Ok(())
}

fn train(run: &Run, a: &TrainArgs) -> Result<()> {
    let data = load(&a.data)?;
    let spec = a.model.spec_for(a.model.model, run.seed);
    let noise = NoiseSpec::new(a.noise.noise, a.noise.noise_magnitude, run.seed)?;
    let fold = train_all(&data, &spec, &noise, a.nodes)?;
    let bundle = ModelBundle::new(data.node_count(), a.nodes, fold.scaler, fold.model)?;
    let doc = json!({
        "meta": run.meta(),
        "hyperparameters": fold.params,
        "bundle": bundle,
    });
    emit(Some(&a.output), &json_text(&doc)?)
}

fn evaluate(run: &Run, a: &EvaluateArgs) -> Result<()> {
    let data = load(&a.data)?;
    let spec = a.model.spec_for(a.model.model, run.seed);
    let noise = NoiseSpec::new(a.noise.noise, a.noise.noise_magnitude, run.seed)?;
    let report = run_loocv(&data, &spec, &noise, a.nodes)?;
    let meta = run.meta_with_timing(json!({ "latency": report.latency }));
    let text = match a.format {
        Format::Json => json_text(&json!({ "meta": meta, "report": report.without_timing() }))?,
        Format::Csv => csv_comment(&meta) + &report.matrix.to_csv(),
    };
    emit(a.output.as_deref(), &text)
}

fn sweep(run: &Run, a: &SweepArgs) -> Result<()> {
    let data = load(&a.data)?;
    let specs: Vec<_> = a
        .models
        .iter()
        .map(|k| a.model.spec_for(*k, run.seed))
        .collect();
    let sweep = noise_sweep(&data, &specs, a.noise_magnitude, run.seed, a.nodes)?;
    let timing: Vec<Value> = sweep
        .cells
        .iter()
        .map(|c| json!({ "model": c.model, "scenario": c.scenario, "latency": c.report.latency }))
        .collect();
    let meta = run.meta_with_timing(Value::Array(timing));
    let text = match a.format {
        Format::Json => {
            let cells: Vec<Value> = sweep
                .cells
                .iter()
                .map(|c| json!({ "model": c.model, "scenario": c.scenario, "report": c.report.without_timing() }))
                .collect();
            json_text(&json!({ "meta": meta, "magnitude": sweep.magnitude, "cells": cells }))?
        }
        Format::Csv => {
            let mut s = csv_comment(&meta);
            s.push_str("model,scenario,overall_accuracy,mean_balanced_accuracy\n");
            for c in &sweep.cells {
                s.push_str(&format!(
                    "{},{},{:.6},{:.6}\n",
                    c.model,
                    c.scenario.name(),
                    c.report.overall_accuracy,
                    c.report.mean_balanced_accuracy
                ));
            }
            s
        }
    };
    emit(a.output.as_deref(), &text)
}

fn ablate(run: &Run, a: &AblateArgs) -> Result<()> {
    let data = load(&a.data)?;
    let specs: Vec<_> = a
        .models
        .iter()
        .map(|k| a.model.spec_for(*k, run.seed))
        .collect();
    let noise = NoiseSpec::new(a.noise.noise, a.noise.noise_magnitude, run.seed)?;
    let table = node_ablation(&data, &specs, &noise, a.policy)?;
    let text = match a.format {
        Format::Json => json_text(&json!({ "meta": run.meta(), "table": table }))?,
        Format::Csv => {
            let mut s = csv_comment(&run.meta());
            s.push_str("node_count,model,feature_dim,mean_balanced_accuracy\n");
            for c in &table.cells {
                s.push_str(&format!(
                    "{},{},{},{:.6}\n",
                    c.node_count, c.model, c.feature_dim, c.mean_balanced_accuracy
                ));
            }
            s
        }
    };
    emit(a.output.as_deref(), &text)
}

/// Accepts a file written by `train` or a bare bundle.
fn load_bundle(path: &Path) -> Result<ModelBundle> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let doc: Value =
        serde_json::from_str(&text).with_context(|| format!("{} is not JSON", path.display()))?;
    let bundle = match doc.get("bundle") {
        Some(b) => b.to_string(),
        None => text,
    };
    ModelBundle::from_json(&bundle).with_context(|| format!("bad model file {}", path.display()))
}

fn replay(run: &Run, a: &ReplayArgs) -> Result<()> {
    let bundle = load_bundle(&a.model)?;
    let cfg = ReplayConfig {
        robots: a.robots.clone(),
        smoother: SmootherConfig::new(a.window)?,
        speeds: Speeds {
            v_lin: a.v_lin,
            v_yaw: a.v_yaw,
            v_z: a.v_z,
        },
    };
    let mut replayer = Replayer::new(&bundle, cfg);
    let mut out: Box<dyn Write> = match &a.output {
        Some(p) => Box::new(io::BufWriter::new(
            fs::File::create(p).with_context(|| format!("cannot write {}", p.display()))?,
        )),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    };
    writeln!(out, "{}", json!({ "meta": run.meta() }))?;
    let mut write_frame = |frame: &StreamFrame<f64>, out: &mut dyn Write| -> Result<()> {
        let mut entry = replayer.step(frame)?;
        if a.omit_latency {
            entry = entry.without_timing();
        }
        writeln!(out, "{}", entry.to_json_line()?)?;
        Ok(())
    };

    if a.stream.as_os_str() == "-" {
        if a.queue == 0 {
            bail!("--queue must be at least 1");
        }
        let queue = Arc::new(FrameQueue::new(a.queue));
        let producer = Arc::clone(&queue);
        let reader = thread::spawn(move || {
            for (i, line) in io::stdin().lock().lines().enumerate() {
                let item = match line {
                    Ok(l) if l.trim().is_empty() => continue,
                    Ok(l) => StreamFrame::parse(&l, i + 1),
                    Err(e) => Err(uwb_posture::Error::Parse {
                        line: i + 1,
                        message: e.to_string(),
                    }),
                };
                producer.push(item);
            }
            producer.close();
        });
        while let Some(item) = queue.pop() {
            write_frame(&item?, &mut out)?;
        }
        reader
            .join()
            .map_err(|_| anyhow::anyhow!("stdin reader panicked"))?;
        if queue.dropped() > 0 {
            eprintln!("dropped {} stale frames", queue.dropped());
        }
    } else {
        let file = fs::File::open(&a.stream)
            .with_context(|| format!("cannot open {}", a.stream.display()))?;
        let frames = read_stream(io::BufReader::new(file))?;
        for f in &frames {
            write_frame(f, &mut out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn metrics(run: &Run, a: &MetricsArgs) -> Result<()> {
    let file =
        fs::File::open(&a.matrix).with_context(|| format!("cannot open {}", a.matrix.display()))?;
    let cm = ConfusionMatrix::from_csv(file)?;
    let classes: Vec<PostureClass> = match a.class {
        Some(c) => vec![PostureClass::from_index(c)?],
        None => PostureClass::ALL.to_vec(),
    };
    let rows = classes
        .iter()
        .map(|c| Ok((*c, class_metrics(&cm, *c)?)))
        .collect::<Result<Vec<_>>>()?;
    let accuracy = overall_accuracy(&cm)?;
    let text = match a.format {
        Format::Json => {
            let per_class: Vec<Value> = rows
                .iter()
                .map(|(c, m)| json!({ "class": c.index(), "name": c.name(), "metrics": m }))
                .collect();
            json_text(&json!({
                "meta": run.meta(),
                "overall_accuracy": accuracy,
                "classes": per_class,
            }))?
        }
        Format::Csv => {
            let mut s = csv_comment(&run.meta());
            s.push_str("class,recall,precision,specificity,balanced_accuracy,f1\n");
            for (c, m) in &rows {
                s.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    c.index(),
                    m.recall,
                    m.precision,
                    m.specificity,
                    m.balanced_accuracy,
                    m.f1
                ));
            }
            s
        }
    };
    emit(a.output.as_deref(), &text)
}
