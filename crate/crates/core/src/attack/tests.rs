use super::*;
use crate::geom::{make_plane, vec3, Transform, Vec3};
use crate::raytrace::RenderSettings;
use crate::rng::SplitMix64;
use crate::scene::{Albedo, Material, PointLight, Scene};
use crate::scenecfg::{CameraSpec, ViewMode, ViewsSpec};
use crate::victim::{Layer, VictimModel};
use crate::Exec;
use proptest::prelude::*;

fn random_vec(rng: &mut SplitMix64, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.uniform(lo, hi)).collect()
}

fn channel_model(gain: f32) -> VictimModel {
    let mut w = vec![0.0; 9];
    for c in 0..3 {
        w[c * 3 + c] = gain;
    }
    VictimModel::new(
        vec![
            Layer::GlobalAvgPool,
            Layer::Dense {
                out: 3,
                inp: 3,
                weights: w,
                bias: vec![0.0; 3],
            },
        ],
        (8, 8),
    )
    .unwrap()
}

/// Attacked quad (8×8 texture) on a dark floor, lit from above.
fn quad_scene() -> Scene {
    let quad = make_plane(1.0)
        .unwrap()
        .transformed(&Transform::from_trs(vec3(0.0, 0.01, 0.0), Vec3::ZERO, Vec3::ONE));
    Scene::new(
        vec![
            ("quad".into(), quad, Material::Lambertian(Albedo::Attacked)),
            ("floor".into(), make_plane(6.0).unwrap(), Material::Lambertian(Albedo::Constant([0.2; 3]))),
        ],
        vec![PointLight {
            position: vec3(0.0, 2.0, 0.0),
            intensity: vec3(4.0, 4.0, 4.0),
        }],
        vec3(0.1, 0.1, 0.1),
    )
    .unwrap()
}

fn cam(eye: Vec3) -> CameraSpec {
    CameraSpec {
        eye,
        look_at: Vec3::ZERO,
        up: if eye.x == 0.0 && eye.z == 0.0 {
            vec3(0.0, 0.0, -1.0)
        } else {
            vec3(0.0, 1.0, 0.0)
        },
        fov_deg: 40.0,
        width: 24,
        height: 24,
    }
}

fn orbit(k: usize) -> Vec<CameraSpec> {
    (0..k)
        .map(|i| {
            let a = i as f64 * 2.0 * std::f64::consts::PI / k as f64;
            cam(vec3(1.2 * a.cos(), 2.0, 1.2 * a.sin()))
        })
        .collect()
}

fn pipeline(views: Vec<CameraSpec>, model: VictimModel) -> Pipeline {
    let settings = RenderSettings {
        exec: Exec::Parallel,
        ..RenderSettings::default()
    };
    Pipeline::new(quad_scene(), views, model, settings, 7).unwrap()
}

fn t0() -> Texture {
    Texture::uniform(8, 8, [0.45, 0.55, 0.3])
}

fn spec(mode: AttackMode, norm: Norm, epsilon: f64, alpha: f64, iterations: u32) -> AttackSpec {
    AttackSpec {
        attackable: "quad".into(),
        mode,
        target_class: (mode == AttackMode::Targeted).then_some(0),
        norm,
        epsilon,
        alpha,
        iterations,
        patience: 3,
        views: ViewsSpec {
            mode: ViewMode::Single,
            count: 1,
            radius: None,
            elevation_deg: None,
            center: None,
        },
        seed: 0,
    }
}

fn classes() -> Vec<String> {
    vec!["red".into(), "green".into(), "blue".into()]
}

#[test]
fn l2_projection_examples() {
    let mut d = vec![3.0, 4.0];
    project_l2(&mut d, 2.5);
    assert_eq!(d, vec![1.5, 2.0]);
    let mut inside = vec![0.1, -0.2];
    project_l2(&mut inside, 1.0);
    assert_eq!(inside, vec![0.1, -0.2]);
    let mut m = vec![0.5, -2.0, 0.1];
    project_linf(&mut m, 0.3);
    assert_eq!(m, vec![0.3, -0.3, 0.1]);
}

#[test]
fn zero_gradient_leaves_delta() {
    let delta = vec![0.1, -0.05, 0.0];
    let t0 = vec![0.5; 3];
    for norm in [Norm::L2, Norm::Linf] {
        let p = PgdParams {
            norm,
            epsilon: 1.0,
            alpha: 0.3,
        };
        assert_eq!(pgd_step(&delta, &[0.0; 3], &t0, &p), delta);
    }
}

#[test]
fn l2_step_is_normalized() {
    let g = vec![6.0, 0.0, -8.0];
    let p = PgdParams {
        norm: Norm::L2,
        epsilon: 10.0,
        alpha: 0.1,
    };
    let d = pgd_step(&[0.0; 3], &g, &[0.5; 3], &p);
    for (a, g) in d.iter().zip(&g) {
        assert!((a + 0.01 * g).abs() < 1e-15);
    }
}

#[test]
fn linf_step_uses_sign() {
    let p = PgdParams {
        norm: Norm::Linf,
        epsilon: 0.05,
        alpha: 0.02,
    };
    let d = pgd_step(&[0.04, 0.0, 0.0], &[-1.0, 3.0, 0.0], &[0.5; 3], &p);
    assert_eq!(d, vec![0.05, -0.02, 0.0]);
}

#[test]
fn box_repair_clips_to_unit_range() {
    let p = PgdParams {
        norm: Norm::L2,
        epsilon: 5.0,
        alpha: 1.0,
    };
    let d = pgd_step(&[0.0, 0.0], &[-1.0, 1.0], &[0.9, 0.1], &p);
    assert!((d[0] - 0.1).abs() < 1e-15 && (d[1] + 0.1).abs() < 1e-15);
}

#[test]
fn single_view_mean_is_the_view() {
    let p = pipeline(vec![cam(vec3(0.0, 2.0, 0.0))], channel_model(10.0));
    let e = p.eot_loss_and_grad(&t0(), &Objective::Targeted(0)).unwrap();
    let fwd = p.forward(&t0()).unwrap();
    let (l, g) = p.view_loss_and_grad(0, &fwd[0], &Objective::Targeted(0)).unwrap();
    assert_eq!(e.mean_loss, l);
    assert_eq!(e.grad, g);
    assert_eq!(p.loss(&t0(), &Objective::Targeted(0)).unwrap(), l);
}

#[test]
fn duplicated_view_has_same_gradient() {
    let c = cam(vec3(0.3, 2.0, 0.4));
    let one = pipeline(vec![c.clone()], channel_model(10.0));
    let two = Pipeline {
        views: vec![c.clone(), c],
        ..one.clone()
    };
    let a = one.eot_loss_and_grad(&t0(), &Objective::Targeted(1)).unwrap();
    let b = two.eot_loss_and_grad(&t0(), &Objective::Targeted(1)).unwrap();
    for (x, y) in a.grad.iter().zip(&b.grad) {
        assert!((x - y).abs() <= 1e-15 * x.abs().max(1e-300));
    }
    assert!((a.mean_loss - b.mean_loss).abs() < 1e-15);
}

#[test]
fn eot_gradient_is_mean_of_views() {
    // One sample per pixel, so view seeds do not matter.
    let views = orbit(4);
    let model = crate::victim::init_random(crate::victim::Arch::TinyCnn, 3, (8, 8), 3).unwrap();
    let p = pipeline(views.clone(), model);
    let mut rng = SplitMix64::new(5);
    let tex = Texture {
        data: random_vec(&mut rng, 192, 0.0, 1.0),
        ..t0()
    };
    let obj = Objective::Untargeted(vec![0, 1, 2, 0]);
    let e = p.eot_loss_and_grad(&tex, &obj).unwrap();
    let mut mean = vec![0.0; 192];
    for (v, c) in views.into_iter().enumerate() {
        let single = Pipeline {
            views: vec![c],
            ..p.clone()
        };
        let fwd = single.forward(&tex).unwrap();
        let per = Objective::Untargeted(vec![[0, 1, 2, 0][v]]);
        let (_, g) = single.view_loss_and_grad(0, &fwd[0], &per).unwrap();
        for (m, x) in mean.iter_mut().zip(g) {
            *m += x / 4.0;
        }
    }
    for (a, b) in e.grad.iter().zip(&mean) {
        assert!((a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-12), "{a} vs {b}");
    }
}

#[test]
fn no_budget_runs_out_of_iterations() {
    let p = pipeline(vec![cam(vec3(0.0, 2.0, 0.0))], channel_model(10.0));
    let s = spec(AttackMode::Targeted, Norm::L2, 1e-9, 1e-10, 4);
    // Green dominates the benign texture.
    let r = run_attack(&p, &s, &t0(), &classes(), &mut NullSink).unwrap();
    assert_eq!(r.stop_reason, StopReason::MaxIters);
    assert_eq!(r.history.len(), 5);
    let diff = l2_norm(&r.final_texture.data.iter().zip(&t0().data).map(|(a, b)| a - b).collect::<Vec<_>>());
    assert!(diff <= 1e-9 * (1.0 + 1e-9));
    assert_eq!(r.feasibility_violations, 0);
}

#[test]
fn red_target_is_reached_and_red_increases() {
    let p = pipeline(vec![cam(vec3(0.0, 2.0, 0.0))], channel_model(10.0));
    let s = spec(AttackMode::Targeted, Norm::L2, 4.0, 0.4, 100);
    let r = run_attack(&p, &s, &t0(), &classes(), &mut NullSink).unwrap();
    assert_eq!(r.stop_reason, StopReason::TargetReached);
    assert_eq!(r.benign_labels, vec![1]);
    assert!(r.final_texture.channel_mean(0) > t0().channel_mean(0));
    assert!(r.history.iter().rev().take(3).all(|h| h.success && h.view_argmax == [0]));
    assert_eq!(r.feasibility_violations, 0);
}

#[test]
fn untargeted_flips_the_label() {
    let p = pipeline(orbit(2), channel_model(10.0));
    let s = spec(AttackMode::Untargeted, Norm::Linf, 0.3, 0.05, 60);
    let r = run_attack(&p, &s, &t0(), &classes(), &mut NullSink).unwrap();
    assert_eq!(r.stop_reason, StopReason::LabelFlipped);
    assert_eq!(r.benign_labels, vec![1, 1]);
    assert!(!r.history[0].success);
    assert!(r.history.last().unwrap().view_argmax.iter().all(|c| *c != 1));
    let dmax = linf_norm(&r.final_texture.data.iter().zip(&t0().data).map(|(a, b)| a - b).collect::<Vec<_>>());
    assert!(dmax <= 0.3 + 1e-12);
}

#[test]
fn zero_model_stalls() {
    let p = pipeline(vec![cam(vec3(0.0, 2.0, 0.0))], channel_model(0.0));
    let s = spec(AttackMode::Targeted, Norm::L2, 1.0, 0.1, 10);
    let r = run_attack(&p, &s, &t0(), &classes(), &mut NullSink).unwrap();
    assert_eq!(r.stop_reason, StopReason::Stalled);
    assert_eq!(r.history.len(), 1);
}

#[test]
fn attack_is_deterministic_and_sinks_see_every_step() {
    let run = |exec: Exec| {
        let mut p = pipeline(orbit(3), channel_model(10.0));
        p.settings.exec = exec;
        let s = spec(AttackMode::Targeted, Norm::L2, 2.0, 0.2, 6);
        let mut seen = Vec::new();
        let mut sink = |st: &Step<'_>| {
            assert_eq!(st.frames.len(), 3);
            assert!(!st.detections.is_empty());
            seen.push((st.record.iter, st.texture.data.clone()));
            Ok(())
        };
        let r = run_attack(&p, &s, &t0(), &classes(), &mut sink).unwrap();
        assert_eq!(seen.len(), r.history.len());
        let strip = |h: &StepRecord| StepRecord { wall_ms: 0.0, ..h.clone() };
        (r.history.iter().map(strip).collect::<Vec<_>>(), r.final_texture, seen)
    };
    assert_eq!(run(Exec::Sequential), run(Exec::Parallel));
}

#[test]
fn texels_outside_every_view_stay_put() {
    // A narrow camera sees only the middle of the quad.
    let mut c = cam(vec3(0.0, 2.0, 0.0));
    c.fov_deg = 6.0;
    let p = pipeline(vec![c], channel_model(10.0));
    let s = spec(AttackMode::Targeted, Norm::L2, 3.0, 0.5, 5);
    let r = run_attack(&p, &s, &t0(), &classes(), &mut NullSink).unwrap();
    let fwd = p.forward(&t0()).unwrap();
    let support = fwd[0].render.jacobian.support();
    assert!(support.iter().any(|s| !s));
    for (i, s) in support.iter().enumerate() {
        if !s {
            assert_eq!(&r.final_texture.data[3 * i..3 * i + 3], &t0().data[3 * i..3 * i + 3]);
        }
    }
}

#[test]
fn pipeline_errors_carry_context() {
    let p = pipeline(orbit(2), channel_model(10.0));
    let mut s = spec(AttackMode::Targeted, Norm::L2, 1.0, 0.1, 3);
    s.target_class = Some(7);
    match run_attack(&p, &s, &t0(), &classes(), &mut NullSink) {
        Err(Error::Pipeline { iter: 0, view: 0, .. }) => {}
        other => panic!("{other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]
    #[test]
    fn steps_stay_feasible(seed in any::<u64>(), linf in any::<bool>(), eps in 1e-3f64..3.0, alpha in 1e-3f64..2.0) {
        let mut rng = SplitMix64::new(seed);
        let n = 1 + rng.below(40) as usize;
        let t0 = random_vec(&mut rng, n, 0.0, 1.0);
        let delta0 = random_vec(&mut rng, n, -0.2, 0.2);
        let g = random_vec(&mut rng, n, -5.0, 5.0);
        let norm = if linf { Norm::Linf } else { Norm::L2 };
        let p = PgdParams { norm, epsilon: eps, alpha };
        let d = pgd_step(&delta0, &g, &t0, &p);
        prop_assert!(super::norm(&d, norm) <= eps * (1.0 + 1e-12));
        for (t, x) in t0.iter().zip(&d) {
            let v = t + x;
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn projection_is_idempotent(seed in any::<u64>(), eps in 1e-3f64..3.0) {
        let mut rng = SplitMix64::new(seed);
        let x = random_vec(&mut rng, 20, -2.0, 2.0);
        let (mut a, mut b) = (x.clone(), x.clone());
        project_l2(&mut a, eps);
        let once = a.clone();
        project_l2(&mut a, eps);
        prop_assert!(once.iter().zip(&a).all(|(p, q)| (p - q).abs() <= 1e-15));
        project_linf(&mut b, eps);
        let once = b.clone();
        project_linf(&mut b, eps);
        prop_assert_eq!(once, b);
    }
}
