//! Optimisation loop, loss log and checkpoints.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use lf_autodiff::{adam_step, AdamConfig, AdamState, Checkpoint, ParamStore, Tape, Tensor};
use mdfn::{forward, init_params, parse_pairs, Mdfn};

use crate::config::TrainConfig;
use crate::dataset::{cache_dir_from_env, ingest_dataset, Dataset};
use crate::error::{Result, TrainError};
use crate::sample::{sample_batch, step_rng, PatchSample};

pub const LOSS_LOG: &str = "loss.csv";
pub const LOSS_HEADER: &str = "step,loss,lr,elapsed_ms";
pub const FINAL_CHECKPOINT: &str = "final.mdfn";

pub fn checkpoint_name(step: u64) -> String {
    format!("ckpt_{step:08}.mdfn")
}

/// Mutable training state: parameters, optimizer moments and step counter.
#[derive(Clone, Debug)]
pub struct Trainer {
    pub cfg: TrainConfig,
    pub params: ParamStore<f32>,
    pub adam: AdamState<f32>,
    /// Number of completed optimisation steps.
    pub step: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub step: u64,
    pub loss: f64,
    pub lr: f64,
    pub elapsed_ms: u128,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub first_step: u64,
    pub last_step: u64,
    pub losses: Vec<f64>,
    pub log: PathBuf,
    pub final_checkpoint: PathBuf,
}

fn tensor(lf: &lf_core::LightField4D) -> Result<Tensor<f32>> {
    let d = lf.dims();
    Ok(Tensor::new(vec![d.u, d.v, d.x, d.y], lf.data().to_vec())?)
}

impl Trainer {
    pub fn new(cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let params = init_params::<f32>(&cfg.model)?;
        let adam = AdamState::new(&params, AdamConfig { lr: cfg.lr, ..AdamConfig::default() });
        Ok(Trainer { cfg, params, adam, step: 0 })
    }

    /// Restores the full training state written by [`Trainer::checkpoint`].
    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let cfg = TrainConfig::from_echo(&ckpt.config)?;
        let step = parse_pairs(&ckpt.config)?
            .into_iter()
            .find(|(k, _)| k == "step")
            .map(|(_, v)| v.parse::<u64>())
            .transpose()
            .map_err(|_| TrainError::config("checkpoint has a malformed step"))?
            .unwrap_or(0);
        let model = Mdfn::from_checkpoint(ckpt)?;
        let mut adam = AdamState::new(&model.params, AdamConfig { lr: cfg.lr, ..AdamConfig::default() });
        adam.step = step;
        for (i, (name, t)) in model.params.iter().enumerate() {
            for (prefix, dst) in [("adam.m.", &mut adam.first[i]), ("adam.v.", &mut adam.second[i])] {
                let key = format!("{prefix}{name}");
                let src = ckpt
                    .tensors
                    .get(&key)
                    .ok_or_else(|| TrainError::config(format!("checkpoint lacks optimizer state `{key}`")))?;
                if src.len() != t.len() {
                    return Err(TrainError::config(format!("optimizer state `{key}` has the wrong size")));
                }
                dst.copy_from_slice(src.data());
            }
        }
        Ok(Trainer { cfg, params: model.params, adam, step })
    }

    pub fn resume(path: &Path) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }

    /// Parameters, Adam moments and the config echo with the step count.
    pub fn checkpoint(&self) -> Checkpoint {
        let mut ckpt = self.model().to_checkpoint("");
        ckpt.config = format!("{}step={}\n", self.cfg.to_text(), self.step);
        for (i, (name, t)) in self.params.iter().enumerate() {
            for (prefix, src) in [("adam.m.", &self.adam.first[i]), ("adam.v.", &self.adam.second[i])] {
                let moment = Tensor::new(t.shape().to_vec(), src.clone()).expect("moment matches parameter");
                ckpt.tensors.insert(format!("{prefix}{name}"), moment);
            }
        }
        ckpt
    }

    pub fn model(&self) -> Mdfn {
        Mdfn { cfg: self.cfg.model.clone(), params: self.params.clone() }
    }

    /// Mean L1 over the batch, one backward pass per sample, then one Adam
    /// update. Returns the loss before the update.
    pub fn train_step(&mut self, batch: &[PatchSample], names: &[String]) -> Result<f64> {
        let scale = 1.0 / batch.len() as f32;
        let mut total = 0.0f64;
        self.params.zero_grads();
        for sample in batch {
            let mut tape = Tape::new();
            let x = tape.leaf(tensor(&sample.lr)?);
            let target = tape.leaf(tensor(&sample.hr)?);
            let binding = self.params.bind(&mut tape);
            let y = forward(&mut tape, x, &binding, &self.cfg.model)?;
            let l1 = tape.l1_loss(y, target)?;
            let loss = tape.value(l1)[0] as f64;
            if !loss.is_finite() {
                self.params.zero_grads();
                let source_name = names.get(sample.source).cloned().unwrap_or_else(|| sample.source.to_string());
                return Err(TrainError::NonFinite { step: self.step + 1, loss, source_name });
            }
            total += loss;
            let scaled = tape.scale(l1, scale);
            let grads = tape.backward(scaled)?;
            self.params.accumulate_grads(&binding, &grads)?;
        }
        adam_step(&mut self.params, &mut self.adam)?;
        self.step += 1;
        Ok(total / batch.len() as f64)
    }

    /// Trains up to `cfg.iterations`, writing the loss log and checkpoints
    /// into `out`. Resumed trainers continue the existing log.
    pub fn run(&mut self, ds: &Dataset, out: &Path, mut on_step: impl FnMut(&StepRecord)) -> Result<RunSummary> {
        let io = |step, what: &str, e| TrainError::io(step, what.to_string(), e);
        fs::create_dir_all(out).map_err(|e| io(self.step, "create output directory", e))?;
        let log_path = out.join(LOSS_LOG);
        let mut log = open_log(&log_path, self.step).map_err(|e| io(self.step, "open loss log", e))?;
        let names: Vec<String> = ds.items.iter().map(|i| i.name.clone()).collect();
        let start = Instant::now();
        let first_step = self.step + 1;
        let mut losses = Vec::new();
        while self.step < self.cfg.iterations {
            let mut rng = step_rng(self.cfg.seed, self.step + 1);
            let batch = sample_batch(ds, &self.cfg, &mut rng)?;
            let loss = self.train_step(&batch, &names)?;
            losses.push(loss);
            let elapsed_ms = if self.cfg.deterministic { 0 } else { start.elapsed().as_millis() };
            let rec = StepRecord { step: self.step, loss, lr: self.cfg.lr, elapsed_ms };
            writeln!(log, "{},{},{},{}", rec.step, rec.loss, rec.lr, rec.elapsed_ms)
                .and_then(|_| log.flush())
                .map_err(|e| io(self.step, "write loss log", e))?;
            on_step(&rec);
            if self.cfg.checkpoint_interval > 0 && self.step % self.cfg.checkpoint_interval == 0 {
                self.save(&out.join(checkpoint_name(self.step)))?;
            }
        }
        let final_checkpoint = out.join(FINAL_CHECKPOINT);
        self.save(&final_checkpoint)?;
        Ok(RunSummary { first_step, last_step: self.step, losses, log: log_path, final_checkpoint })
    }

    /// Writes the checkpoint through a temporary file.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("mdfn.tmp");
        let ckpt = self.checkpoint();
        let write = || -> std::io::Result<()> {
            ckpt.write_to(std::io::BufWriter::new(File::create(&tmp)?)).map_err(std::io::Error::other)?;
            fs::rename(&tmp, path)
        };
        write().map_err(|e| TrainError::io(self.step, format!("write checkpoint {}", path.display()), e))
    }
}

/// Opens the loss log for appending after `step`; rows beyond `step` left by
/// an interrupted run are dropped.
fn open_log(path: &Path, step: u64) -> std::io::Result<File> {
    let mut kept = vec![LOSS_HEADER.to_string()];
    if step > 0 && path.exists() {
        for line in BufReader::new(File::open(path)?).lines().skip(1) {
            let line = line?;
            match line.split(',').next().and_then(|s| s.parse::<u64>().ok()) {
                Some(s) if s <= step => kept.push(line),
                _ => {}
            }
        }
    }
    let mut f = OpenOptions::new().create(true).write(true).truncate(true).open(path)?;
    for line in kept {
        writeln!(f, "{line}")?;
    }
    Ok(f)
}

/// Ingests `cfg.dataset_root` and trains from scratch into `out`.
pub fn train_loop(cfg: &TrainConfig, out: &Path, on_step: impl FnMut(&StepRecord)) -> Result<RunSummary> {
    cfg.validate()?;
    let ds = ingest_dataset(&cfg.dataset_root, cfg.r(), cache_dir_from_env().as_deref())?;
    Trainer::new(cfg.clone())?.run(&ds, out, on_step)
}
