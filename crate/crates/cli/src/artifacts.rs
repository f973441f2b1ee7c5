use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use advray::attack::{AttackResult, AttackSink, Step};
use advray::formats::{encode_ppm, encode_texture_raw};
use advray::raytrace::Texture;
use advray::scenecfg::{serialize_scenario, Scenario};
use anyhow::{Context, Result};
use serde_json::{json, Value};

pub(crate) fn unix_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

fn write(path: &Path, bytes: &[u8]) -> advray::Result<()> {
    fs::write(path, bytes).map_err(|e| advray::Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Writes attack artifacts under one output directory:
/// `frames/iter_NNNN_view_VV.ppm`, `textures/iter_NNNN.{tex,ppm}`,
/// `log.jsonl`, and `manifest.json` once the run is over.
pub struct AttackWriter {
    out: PathBuf,
    log: BufWriter<File>,
    index: Vec<Value>,
}

impl AttackWriter {
    pub fn create(out: &Path) -> Result<Self> {
        for sub in ["frames", "textures"] {
            let d = out.join(sub);
            fs::create_dir_all(&d).with_context(|| format!("creating {}", d.display()))?;
        }
        let path = out.join("log.jsonl");
        let log = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(Self {
            out: out.to_path_buf(),
            log: BufWriter::new(log),
            index: Vec::new(),
        })
    }

    fn write_step(&mut self, step: &Step<'_>) -> advray::Result<()> {
        let iter = step.record.iter;
        let mut frames = Vec::with_capacity(step.frames.len());
        for (v, f) in step.frames.iter().enumerate() {
            let name = format!("frames/iter_{iter:04}_view_{v:02}.ppm");
            write(&self.out.join(&name), &encode_ppm(f.width, f.height, &f.data))?;
            frames.push(name);
        }
        let tex = format!("textures/iter_{iter:04}.tex");
        let preview = format!("textures/iter_{iter:04}.ppm");
        let t = step.texture;
        write(&self.out.join(&tex), &encode_texture_raw(t))?;
        write(&self.out.join(&preview), &encode_ppm(t.width, t.height, &t.data))?;
        let mut line = serde_json::to_value(step.record).expect("step record serializes");
        line["detections"] = serde_json::to_value(step.detections).expect("detections serialize");
        let io = |e| advray::Error::Io {
            path: self.out.join("log.jsonl").display().to_string(),
            source: e,
        };
        writeln!(self.log, "{line}").map_err(io)?;
        self.index.push(json!({
            "iter": iter,
            "frames": frames,
            "texture": tex,
            "texture_preview": preview,
        }));
        Ok(())
    }

    /// Flushes the log and writes `manifest.json`.
    pub fn finish(mut self, s: &Scenario, r: &AttackResult, t0: &Texture, weights: &Path, started_ms: u64) -> Result<()> {
        self.log.flush().context("flushing log.jsonl")?;
        let last = r.history.last().expect("at least the benign record");
        let means = |t: &Texture| (0..3).map(|c| t.channel_mean(c)).collect::<Vec<_>>();
        let manifest = json!({
            "tool": "advray",
            "version": env!("CARGO_PKG_VERSION"),
            "scenario": serialize_scenario(s),
            "seed": s.attack.seed,
            "victim_weights": weights.display().to_string(),
            "started_unix_ms": started_ms,
            "finished_unix_ms": unix_ms(),
            "stop_reason": r.stop_reason,
            "iterations": self.index,
            "summary": {
                "iterations": r.history.len() - 1,
                "final_loss": last.mean_loss,
                "best_loss": r.best_loss(),
                "final_argmax": last.view_argmax,
                "benign_labels": r.benign_labels,
                "delta_norm": last.delta_norm,
                "feasibility_violations": r.feasibility_violations,
                "initial_channel_means": means(t0),
                "final_channel_means": means(&r.final_texture),
            },
        });
        let path = self.out.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

impl AttackSink for AttackWriter {
    fn step(&mut self, step: &Step<'_>) -> advray::Result<()> {
        self.write_step(step)
    }
}
