use std::path::Path;

use crate::diff::{chw_to_hwc, clamp01_backward, clamp01_forward, hwc_to_chw, Resize};
use crate::raytrace::{render, RenderOutput, RenderSettings, Texture};
use crate::rng::SplitMix64;
use crate::scene::Scene;
use crate::scenecfg::{expand_views, CameraSpec, Scenario};
use crate::victim::{argmax, cross_entropy, ForwardCache, Tensor, VictimModel};
use crate::{Error, Exec, Result};

/// What the attack minimizes in every view.
#[derive(Clone, Debug, PartialEq)]
pub enum Objective {
    /// Cross-entropy towards one class.
    Targeted(usize),
    /// Negated cross-entropy against the per-view benign labels.
    Untargeted(Vec<usize>),
}

impl Objective {
    fn class_and_sign(&self, view: usize) -> (usize, f64) {
        match self {
            Objective::Targeted(c) => (*c, 1.0),
            Objective::Untargeted(labels) => (labels[view], -1.0),
        }
    }

    /// Whether a view's prediction counts as a success.
    pub fn hit(&self, view: usize, predicted: usize) -> bool {
        match self {
            Objective::Targeted(c) => predicted == *c,
            Objective::Untargeted(labels) => predicted != labels[view],
        }
    }
}

/// Render and classifier state of one view.
#[derive(Clone, Debug)]
pub struct ViewForward {
    pub render: RenderOutput,
    pub logits: Vec<f64>,
    cache: ForwardCache,
    resize: Resize,
}

impl ViewForward {
    pub fn argmax(&self) -> usize {
        argmax(&self.logits)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub mean_loss: f64,
    /// Mean over views of the texture gradient.
    pub grad: Vec<f64>,
    pub view_losses: Vec<f64>,
    pub view_argmax: Vec<usize>,
}

/// Texture → render → clamp → resize → classifier, for every view.
#[derive(Clone, Debug)]
pub struct Pipeline {
    pub scene: Scene,
    pub views: Vec<CameraSpec>,
    pub model: VictimModel,
    pub settings: RenderSettings,
    pub seed: u64,
}

fn in_view(view: usize) -> impl FnOnce(Error) -> Error {
    move |e| Error::Pipeline {
        iter: 0,
        view,
        source: Box::new(e),
    }
}

impl Pipeline {
    pub fn new(
        scene: Scene,
        views: Vec<CameraSpec>,
        model: VictimModel,
        settings: RenderSettings,
        seed: u64,
    ) -> Result<Self> {
        if views.is_empty() {
            return Err(Error::Scene("attack needs at least one view".into()));
        }
        if scene.attacked.is_none() {
            return Err(Error::Scene("scene has no attacked object".into()));
        }
        Ok(Self {
            scene,
            views,
            model,
            settings,
            seed,
        })
    }

    /// Builds the scene and views of a scenario and returns the pipeline with
    /// the initial texture. Relative paths resolve against `base_dir`.
    pub fn from_scenario(s: &Scenario, base_dir: &Path, model: VictimModel, exec: Exec) -> Result<(Self, Texture)> {
        if model.class_count() != s.victim.classes.len() {
            return Err(Error::Shape(format!(
                "victim has {} outputs, scenario lists {} classes",
                model.class_count(),
                s.victim.classes.len()
            )));
        }
        let expected = (s.victim.input_size.0 as usize, s.victim.input_size.1 as usize);
        if model.input_size != expected {
            return Err(Error::Shape(format!(
                "victim input is {:?}, scenario declares {:?}",
                model.input_size, expected
            )));
        }
        let (scene, t0) = Scene::from_scenario(s, base_dir)?;
        let views = expand_views(&s.attack, &s.scene.camera)?;
        let settings = RenderSettings {
            exec,
            ..RenderSettings::from(&s.render)
        };
        Ok((Self::new(scene, views, model, settings, s.attack.seed)?, t0))
    }

    pub fn view_seed(&self, view: usize) -> u64 {
        SplitMix64::derive(self.seed, view as u64).next_u64()
    }

    pub fn render_view(&self, view: usize, tex: &Texture) -> Result<RenderOutput> {
        render(&self.scene, &self.views[view], &self.settings, Some(tex), self.view_seed(view))
    }

    fn forward_view(&self, view: usize, tex: &Texture) -> Result<ViewForward> {
        let render = self.render_view(view, tex)?;
        let cam = &self.views[view];
        let (h, w) = self.model.input_size;
        let resize = Resize::new(cam.height as usize, cam.width as usize, h, w);
        let pixels = resize.forward(&clamp01_forward(&render.frame.data));
        let input = Tensor::new(vec![3, h, w], hwc_to_chw(&pixels, h, w))?;
        let (logits, cache) = self.model.forward(&input)?;
        Ok(ViewForward {
            render,
            logits,
            cache,
            resize,
        })
    }

    /// Renders and classifies every view at `tex`.
    pub fn forward(&self, tex: &Texture) -> Result<Vec<ViewForward>> {
        self.settings
            .exec
            .try_map(self.views.len(), |v| self.forward_view(v, tex).map_err(in_view(v)))
    }

    /// Loss of one view and its texture gradient.
    pub fn view_loss_and_grad(&self, view: usize, f: &ViewForward, objective: &Objective) -> Result<(f64, Vec<f64>)> {
        let (class, sign) = objective.class_and_sign(view);
        let (ce, d_logits) = cross_entropy(&f.logits, class)?;
        let loss = sign * ce;
        if !loss.is_finite() {
            return Err(Error::NonFinite(loss));
        }
        let d_logits: Vec<f64> = d_logits.iter().map(|g| sign * g).collect();
        let d_input = self.model.backward_input(&f.cache, &d_logits)?;
        let (h, w) = self.model.input_size;
        let d_pixels = f.resize.backward(&chw_to_hwc(&d_input.data, h, w));
        let d_frame = clamp01_backward(&f.render.frame.data, &d_pixels);
        let grad = f.render.jacobian.backprop_to_texture(&d_frame, self.settings.exec)?;
        Ok((loss, grad))
    }

    /// Mean loss and mean texture gradient over views already forwarded.
    pub fn loss_and_grad(&self, fwd: &[ViewForward], objective: &Objective) -> Result<Evaluation> {
        let per_view = self.settings.exec.try_map(fwd.len(), |v| {
            self.view_loss_and_grad(v, &fwd[v], objective).map_err(in_view(v))
        })?;
        let k = fwd.len() as f64;
        let mut grad = vec![0.0; per_view[0].1.len()];
        let mut view_losses = Vec::with_capacity(fwd.len());
        for (loss, g) in per_view {
            view_losses.push(loss);
            for (a, b) in grad.iter_mut().zip(g) {
                *a += b;
            }
        }
        grad.iter_mut().for_each(|g| *g /= k);
        Ok(Evaluation {
            mean_loss: view_losses.iter().sum::<f64>() / k,
            grad,
            view_losses,
            view_argmax: fwd.iter().map(ViewForward::argmax).collect(),
        })
    }

    /// Expectation over views of the loss and its texture gradient.
    pub fn eot_loss_and_grad(&self, tex: &Texture, objective: &Objective) -> Result<Evaluation> {
        self.loss_and_grad(&self.forward(tex)?, objective)
    }

    /// Mean loss only.
    pub fn loss(&self, tex: &Texture, objective: &Objective) -> Result<f64> {
        let fwd = self.forward(tex)?;
        let mut total = 0.0;
        for (v, f) in fwd.iter().enumerate() {
            let (class, sign) = objective.class_and_sign(v);
            total += sign * cross_entropy(&f.logits, class)?.0;
        }
        let loss = total / fwd.len() as f64;
        if loss.is_finite() {
            Ok(loss)
        } else {
            Err(Error::NonFinite(loss))
        }
    }
}
