//! Projected gradient descent on the attacked texture, averaged over views.

mod pipeline;

pub use pipeline::{Evaluation, Objective, Pipeline, ViewForward};

use std::time::Instant;

use serde::Serialize;

use crate::detect::{detect, DetectParams, Detection};
use crate::diff::clamp01_forward;
use crate::raytrace::{FrameBuffer, Texture};
use crate::scenecfg::{AttackMode, AttackSpec, Norm};
use crate::{Error, Result};

/// Gradients smaller than this end the attack.
pub const STALL_NORM: f64 = 1e-12;
/// Relative slack on the budget check, for rounding in the projection.
const BUDGET_SLACK: f64 = 1e-9;

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn linf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn norm(v: &[f64], n: Norm) -> f64 {
    match n {
        Norm::L2 => l2_norm(v),
        Norm::Linf => linf_norm(v),
    }
}

/// Scales `delta` onto the ℓ2 ball of radius `eps` if it lies outside.
pub fn project_l2(delta: &mut [f64], eps: f64) {
    let n = l2_norm(delta);
    if n > eps {
        let s = eps / n;
        delta.iter_mut().for_each(|d| *d *= s);
    }
}

pub fn project_linf(delta: &mut [f64], eps: f64) {
    delta.iter_mut().for_each(|d| *d = d.clamp(-eps, eps));
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PgdParams {
    pub norm: Norm,
    pub epsilon: f64,
    pub alpha: f64,
}

impl From<&AttackSpec> for PgdParams {
    fn from(a: &AttackSpec) -> Self {
        Self {
            norm: a.norm,
            epsilon: a.epsilon,
            alpha: a.alpha,
        }
    }
}

/// One descent step on `delta`, projected onto the budget and then repaired
/// so that `t0 + delta` stays in [0, 1].
pub fn pgd_step(delta: &[f64], grad: &[f64], t0: &[f64], p: &PgdParams) -> Vec<f64> {
    let mut next: Vec<f64> = match p.norm {
        Norm::L2 => {
            let s = p.alpha / l2_norm(grad).max(1e-12);
            delta.iter().zip(grad).map(|(d, g)| d - s * g).collect()
        }
        Norm::Linf => delta.iter().zip(grad).map(|(d, g)| d - p.alpha * sign(*g)).collect(),
    };
    match p.norm {
        Norm::L2 => project_l2(&mut next, p.epsilon),
        Norm::Linf => project_linf(&mut next, p.epsilon),
    }
    for (d, t) in next.iter_mut().zip(t0) {
        if t + *d > 1.0 {
            *d = 1.0 - t;
        } else if t + *d < 0.0 {
            *d = -t;
        }
    }
    next
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StopReason {
    TargetReached,
    LabelFlipped,
    MaxIters,
    Stalled,
}

impl StopReason {
    pub fn succeeded(self) -> bool {
        matches!(self, StopReason::TargetReached | StopReason::LabelFlipped)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    pub iter: usize,
    pub mean_loss: f64,
    pub view_losses: Vec<f64>,
    pub view_argmax: Vec<usize>,
    /// ℓ2 norm of the mean texture gradient at this iterate.
    pub grad_norm: f64,
    /// Perturbation size in the configured norm.
    pub delta_norm: f64,
    pub success: bool,
    #[serde(skip)]
    pub wall_ms: f64,
}

/// Everything emitted for one iteration.
pub struct Step<'a> {
    pub record: &'a StepRecord,
    pub texture: &'a Texture,
    pub frames: &'a [&'a FrameBuffer],
    /// Detections on view 0.
    pub detections: &'a [Detection],
}

pub trait AttackSink {
    fn step(&mut self, step: &Step<'_>) -> Result<()>;
}

impl<F: FnMut(&Step<'_>) -> Result<()>> AttackSink for F {
    fn step(&mut self, step: &Step<'_>) -> Result<()> {
        self(step)
    }
}

/// Discards everything.
pub struct NullSink;

impl AttackSink for NullSink {
    fn step(&mut self, _: &Step<'_>) -> Result<()> {
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct AttackResult {
    pub final_texture: Texture,
    pub stop_reason: StopReason,
    pub history: Vec<StepRecord>,
    pub benign_labels: Vec<usize>,
    /// Iterations where the budget or the value box was exceeded.
    pub feasibility_violations: usize,
}

impl AttackResult {
    pub fn best_loss(&self) -> f64 {
        self.history.iter().map(|r| r.mean_loss).fold(f64::INFINITY, f64::min)
    }
}

fn at_iter(iter: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Pipeline { view, source, .. } => Error::Pipeline { iter, view, source },
        other => other,
    }
}

fn texture_from(t0: &Texture, delta: &[f64]) -> Texture {
    Texture {
        data: t0.data.iter().zip(delta).map(|(t, d)| (t + d).clamp(0.0, 1.0)).collect(),
        ..t0.clone()
    }
}

/// Runs the attack from `t0`. Iteration 0 records the benign state; each
/// later iteration takes one PGD step with the previous gradient and
/// re-renders every view. The attack stops after `patience` consecutive
/// iterations that succeed in all views, when the gradient vanishes, or after
/// `spec.iterations` steps.
pub fn run_attack(
    pipeline: &Pipeline,
    spec: &AttackSpec,
    t0: &Texture,
    classes: &[String],
    sink: &mut dyn AttackSink,
) -> Result<AttackResult> {
    let params = PgdParams::from(spec);
    let detect_params = DetectParams::default();
    let mut delta = vec![0.0; t0.data.len()];
    let mut texture = t0.clone();
    let mut history = Vec::new();
    let mut violations = 0;
    let mut streak = 0u32;
    let mut objective = None;
    let mut benign_labels = Vec::new();
    let mut iter = 0usize;
    let stop_reason = loop {
        let started = Instant::now();
        let fwd = pipeline.forward(&texture).map_err(at_iter(iter))?;
        let obj = objective.get_or_insert_with(|| {
            benign_labels = fwd.iter().map(ViewForward::argmax).collect();
            match spec.mode {
                AttackMode::Targeted => Objective::Targeted(spec.target_class.expect("validated")),
                AttackMode::Untargeted => Objective::Untargeted(benign_labels.clone()),
            }
        });
        let eval = pipeline.loss_and_grad(&fwd, obj).map_err(at_iter(iter))?;
        let success = eval.view_argmax.iter().enumerate().all(|(v, p)| obj.hit(v, *p));
        let grad_norm = l2_norm(&eval.grad);
        let delta_norm = norm(&delta, params.norm);
        if delta_norm > params.epsilon * (1.0 + BUDGET_SLACK) || !texture.is_valid() {
            log::error!("iteration {iter}: infeasible perturbation, norm {delta_norm}");
            violations += 1;
        }
        let f0 = &fwd[0].render.frame;
        let detections = detect(
            &pipeline.model,
            &clamp01_forward(&f0.data),
            f0.width,
            f0.height,
            classes,
            &detect_params,
            pipeline.settings.exec,
        )
        .map_err(at_iter(iter))?;
        let record = StepRecord {
            iter,
            mean_loss: eval.mean_loss,
            view_losses: eval.view_losses,
            view_argmax: eval.view_argmax,
            grad_norm,
            delta_norm,
            success,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        };
        let frames: Vec<&FrameBuffer> = fwd.iter().map(|f| &f.render.frame).collect();
        sink.step(&Step {
            record: &record,
            texture: &texture,
            frames: &frames,
            detections: &detections,
        })?;
        log::info!(
            "iter {iter}: loss {:.6} grad {:.3e} argmax {:?}{}",
            record.mean_loss,
            grad_norm,
            record.view_argmax,
            if success { " success" } else { "" }
        );
        history.push(record);
        streak = if success { streak + 1 } else { 0 };
        if streak >= spec.patience.max(1) {
            break match spec.mode {
                AttackMode::Targeted => StopReason::TargetReached,
                AttackMode::Untargeted => StopReason::LabelFlipped,
            };
        }
        if iter >= spec.iterations as usize {
            break StopReason::MaxIters;
        }
        if grad_norm < STALL_NORM {
            break StopReason::Stalled;
        }
        delta = pgd_step(&delta, &eval.grad, &t0.data, &params);
        texture = texture_from(t0, &delta);
        iter += 1;
    };
    Ok(AttackResult {
        final_texture: texture,
        stop_reason,
        history,
        benign_labels,
        feasibility_violations: violations,
    })
}

#[cfg(test)]
mod tests;
