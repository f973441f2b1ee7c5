//! The `advray` command: validate, render, attack and gradcheck runs over a
//! scenario file, writing frames, textures and logs to an output directory.

mod artifacts;
mod gradcheck;

use std::fs;
use std::path::{Path, PathBuf};

use advray::attack::{run_attack, Pipeline};
use advray::detect::{detect, DetectParams};
use advray::diff::clamp01_forward;
use advray::formats::encode_ppm;
use advray::scenecfg::{parse_with_overrides, serialize_scenario, Scenario, VictimKind};
use advray::victim::{init_random, load_weights, save_weights, Arch, VictimModel};
use advray::Exec;
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

pub use artifacts::AttackWriter;

#[derive(Debug, Parser)]
#[command(name = "advray", version, about = "Adversarial textures through a differentiable ray tracer")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Apply overrides, validate and print the canonical scenario.
    Validate(Common),
    /// Render every view of the benign scene and run detection on it.
    Render(Common),
    /// Run the PGD attack and write per-iteration artifacts.
    Attack(Common),
    /// Compare the pipeline gradient with central finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario file.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Dotted-path override such as `attack.epsilon=4`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Replaces `attack.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Generate victim weights from this seed instead of loading them.
    #[arg(long, value_name = "SEED")]
    pub gen_victim: Option<u64>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[command(flatten)]
    pub common: Common,
    /// Number of texture coordinates to probe.
    #[arg(long, default_value_t = 50)]
    pub probes: usize,
    /// Finite-difference step.
    #[arg(long, default_value_t = 1e-3)]
    pub h: f64,
}

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_FAULT: i32 = 1;
pub const EXIT_UNSUCCESSFUL: i32 = 2;

pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Validate(c) => cmd_validate(&c),
        Command::Render(c) => cmd_render(&c),
        Command::Attack(c) => cmd_attack(&c),
        Command::Gradcheck(g) => gradcheck::cmd_gradcheck(&g),
    }
}

/// Scenario text and its directory, which anchors relative paths.
fn read_scenario(c: &Common) -> Result<(Scenario, PathBuf)> {
    let text = fs::read_to_string(&c.scenario).with_context(|| format!("reading {}", c.scenario.display()))?;
    let mut overrides = c.overrides.clone();
    if let Some(seed) = c.seed {
        overrides.push(format!("attack.seed={seed}"));
    }
    let s = parse_with_overrides(&text, &overrides).with_context(|| format!("{}", c.scenario.display()))?;
    let dir = c.scenario.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((s, dir))
}

fn arch(kind: VictimKind) -> Arch {
    match kind {
        VictimKind::Cnn => Arch::TinyCnn,
        VictimKind::Linear => Arch::Linear,
    }
}

/// Loads the victim, or generates it and saves a copy to `<out>/victim.avw`.
fn victim(s: &Scenario, dir: &Path, c: &Common) -> Result<(VictimModel, PathBuf)> {
    let size = (s.victim.input_size.0 as usize, s.victim.input_size.1 as usize);
    if let Some(seed) = c.gen_victim {
        let model = init_random(arch(s.victim.kind), s.victim.classes.len(), size, seed)?;
        let path = match &c.out {
            Some(out) => {
                fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
                let p = out.join("victim.avw");
                fs::write(&p, save_weights(&model)).with_context(|| format!("writing {}", p.display()))?;
                p
            }
            None => PathBuf::new(),
        };
        return Ok((model, path));
    }
    let path = dir.join(&s.victim.weights_path);
    let bytes = fs::read(&path).with_context(|| format!("reading victim weights {}", path.display()))?;
    let model = load_weights(&bytes, size).with_context(|| format!("loading {}", path.display()))?;
    let has_conv = model.layers.iter().any(|l| matches!(l, advray::victim::Layer::Conv2d { .. }));
    if has_conv != (s.victim.kind == VictimKind::Cnn) {
        bail!("{}: weights do not match victim kind {:?}", path.display(), s.victim.kind);
    }
    Ok((model, path))
}

fn out_dir(c: &Common) -> Result<&Path> {
    match &c.out {
        Some(p) => Ok(p),
        None => bail!("--out is required for this command"),
    }
}

fn cmd_validate(c: &Common) -> Result<i32> {
    let (s, _) = read_scenario(c)?;
    print!("{}", serialize_scenario(&s));
    Ok(EXIT_OK)
}

fn cmd_render(c: &Common) -> Result<i32> {
    let out = out_dir(c)?;
    let (s, dir) = read_scenario(c)?;
    let (model, _) = victim(&s, &dir, c)?;
    let (pipeline, t0) = Pipeline::from_scenario(&s, &dir, model, Exec::default())?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut views = Vec::new();
    for v in 0..pipeline.views.len() {
        let frame = pipeline.render_view(v, &t0)?.frame;
        let path = out.join(format!("view_{v:02}.ppm"));
        fs::write(&path, encode_ppm(frame.width, frame.height, &frame.data))
            .with_context(|| format!("writing {}", path.display()))?;
        let detections = detect(
            &pipeline.model,
            &clamp01_forward(&frame.data),
            frame.width,
            frame.height,
            &s.victim.classes,
            &DetectParams::default(),
            Exec::default(),
        )?;
        views.push(serde_json::json!({ "view": v, "detections": detections }));
    }
    let path = out.join("detections.json");
    let json = serde_json::to_string_pretty(&serde_json::json!({ "views": views }))?;
    fs::write(&path, json + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(EXIT_OK)
}

fn cmd_attack(c: &Common) -> Result<i32> {
    let out = out_dir(c)?;
    let started = artifacts::unix_ms();
    let (s, dir) = read_scenario(c)?;
    let mut writer = AttackWriter::create(out)?;
    let (model, weights) = victim(&s, &dir, c)?;
    let (pipeline, t0) = Pipeline::from_scenario(&s, &dir, model, Exec::default())?;
    let result = run_attack(&pipeline, &s.attack, &t0, &s.victim.classes, &mut writer)?;
    writer.finish(&s, &result, &t0, &weights, started)?;
    eprintln!(
        "stop_reason={:?} iterations={} final_loss={:.6}",
        result.stop_reason,
        result.history.len() - 1,
        result.history.last().map_or(f64::NAN, |h| h.mean_loss)
    );
    Ok(if result.stop_reason.succeeded() {
        EXIT_OK
    } else {
        EXIT_UNSUCCESSFUL
    })
}
