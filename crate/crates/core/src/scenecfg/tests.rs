use super::*;
use crate::geom::vec3;
use proptest::prelude::*;

const STREET: &str = "\
scene:
  background: [0.5, 0.6, 0.8]
  camera:
    eye: [0, 1, 4]
    look_at: [0, 0.5, 0]
    fov_deg: 40
    width: 64
    height: 48
  lights:
    - kind: point
      position: [2, 4, 3]
      intensity: [20, 20, 20]
  objects:
    - name: street
      geometry:
        primitive: plane
        extent: 10
      material:
        kind: lambertian
        albedo: [0.3, 0.3, 0.3]
    - name: mailbox
      geometry:
        primitive: box
        size: [0.5, 1, 0.5]
      transform:
        translate: [0, 0.5, 0]
      material:
        kind: lambertian
        albedo:
          init: [0.1, 0.2, 0.6]
          width: 16
          height: 16
attack:
  attackable: mailbox.texture
  mode: targeted
  target_class: stop sign
  epsilon: 8
  alpha: 0.5
  iterations: 50
victim:
  kind: cnn
  weights_path: weights/tiny.avw
  input_size: [32, 32]
  classes: [mailbox, stop sign, bus]
";

const MINIMAL: &str = "\
scene:
  camera:
    eye: [0, 0, 3]
    look_at: [0, 0, 0]
    fov_deg: 45
    width: 8
    height: 8
  lights:
    - position: [0, 0, 2]
      intensity: [1, 1, 1]
  objects:
    - name: cube
      geometry:
        primitive: box
        size: [1, 1, 1]
      material:
        kind: lambertian
        albedo:
          init: [0.5, 0.5, 0.5]
          width: 4
          height: 4
attack:
  attackable: cube.texture
  mode: untargeted
  epsilon: 1
  alpha: 0.1
  iterations: 3
victim:
  kind: linear
  weights_path: w.avw
  input_size: [8, 8]
  classes: [a, b]
";

#[test]
fn street_scene_with_named_target() {
    let s = parse_scenario(STREET).unwrap();
    assert_eq!(s.attack.attackable, "mailbox");
    assert_eq!(s.attack.mode, AttackMode::Targeted);
    assert_eq!(s.attack.target_class, Some(1));
    assert_eq!(s.victim.classes[1], "stop sign");
    assert_eq!(s.attacked_object().name, "mailbox");
    assert_eq!(s.scene.objects[1].transform.translate, vec3(0.0, 0.5, 0.0));
}

#[test]
fn minimal_document_gets_defaults() {
    let s = parse_scenario(MINIMAL).unwrap();
    assert_eq!(s.render, RenderSpec { max_depth: 4, samples_per_pixel: 1, shadows: true });
    assert_eq!(s.attack.views.mode, ViewMode::Single);
    assert_eq!(s.attack.views.count, 1);
    assert_eq!(s.attack.patience, 5);
    assert_eq!(s.attack.norm, Norm::L2);
    assert_eq!(s.scene.camera.up, vec3(0.0, 1.0, 0.0));
    assert_eq!(s.scene.objects[0].transform, TransformSpec::default());
}

#[test]
fn unknown_attackable_object() {
    let doc = MINIMAL.replace("attackable: cube.texture", "attackable: ghost.texture");
    match parse_scenario(&doc) {
        Err(ConfigError::Validation { path, msg }) => {
            assert_eq!(path, "attack.attackable");
            assert!(msg.contains("unknown attackable object"), "{msg}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn error_kinds_are_distinguishable() {
    let unknown = MINIMAL.replace("  iterations: 3\n", "  iterations: 3\n  iterationz: 3\n");
    assert!(matches!(parse_scenario(&unknown), Err(ConfigError::UnknownKey { ref path, .. }) if path == "attack.iterationz"));
    let missing = MINIMAL.replace("  epsilon: 1\n", "");
    assert!(matches!(parse_scenario(&missing), Err(ConfigError::MissingKey { ref path }) if path == "attack.epsilon"));
    let typed = MINIMAL.replace("epsilon: 1", "epsilon: lots");
    assert!(matches!(parse_scenario(&typed), Err(ConfigError::Type { ref path, line: 25, col: 12, .. }) if path == "attack.epsilon"));
    let syntax = MINIMAL.replace("epsilon: 1", "epsilon: [1");
    assert!(matches!(parse_scenario(&syntax), Err(ConfigError::Syntax { line: 25, .. })));
    let range = MINIMAL.replace("epsilon: 1", "epsilon: -1");
    assert!(matches!(parse_scenario(&range), Err(ConfigError::Validation { .. })));
}

#[test]
fn material_rules() {
    let no_ior = MINIMAL.replace(
        "  objects:\n",
        "  objects:\n    - name: glass\n      geometry:\n        primitive: box\n        size: [1, 1, 1]\n      material:\n        kind: dielectric\n",
    );
    assert!(matches!(parse_scenario(&no_ior), Err(ConfigError::MissingKey { .. })));
    let with_ior = no_ior.replace("        kind: dielectric\n", "        kind: dielectric\n        ior: 1.33\n");
    assert_eq!(parse_scenario(&with_ior).unwrap().scene.objects[0].material.ior, Some(1.33));
    let textured_mirror = MINIMAL.replace("kind: lambertian", "kind: mirror");
    assert!(matches!(parse_scenario(&textured_mirror), Err(ConfigError::Validation { .. })));
    let low_ior = with_ior.replace("ior: 1.33", "ior: 0.9");
    assert!(matches!(parse_scenario(&low_ior), Err(ConfigError::Validation { .. })));
    let constant = MINIMAL.replace(
        "albedo:\n          init: [0.5, 0.5, 0.5]\n          width: 4\n          height: 4",
        "albedo: [0.5, 0.5, 0.5]",
    );
    assert!(matches!(parse_scenario(&constant), Err(ConfigError::Validation { ref msg, .. }) if msg.contains("textured")));
}

#[test]
fn camera_and_victim_rules() {
    let degenerate = MINIMAL.replace("eye: [0, 0, 3]", "eye: [0, 0, 0]");
    assert!(matches!(parse_scenario(&degenerate), Err(ConfigError::Validation { .. })));
    let parallel_up = MINIMAL.replace("    fov_deg: 45\n", "    up: [0, 0, 1]\n    fov_deg: 45\n");
    assert!(matches!(parse_scenario(&parallel_up), Err(ConfigError::Validation { ref path, .. }) if path == "scene.camera.up"));
    let small = MINIMAL.replace("input_size: [8, 8]", "input_size: [8, 7]");
    assert!(matches!(parse_scenario(&small), Err(ConfigError::Validation { .. })));
    let targeted_no_class = MINIMAL.replace("mode: untargeted", "mode: targeted");
    assert!(matches!(parse_scenario(&targeted_no_class), Err(ConfigError::MissingKey { .. })));
    let out_of_range = targeted_no_class.replace("  epsilon: 1\n", "  target_class: 2\n  epsilon: 1\n");
    assert!(matches!(parse_scenario(&out_of_range), Err(ConfigError::Validation { .. })));
}

#[test]
fn shipped_style_documents_round_trip() {
    for doc in [STREET, MINIMAL] {
        let a = parse_scenario(doc).unwrap();
        let text = serialize_scenario(&a);
        let b = parse_scenario(&text).unwrap();
        assert_eq!(a, b);
        assert_eq!(serialize_scenario(&b), text);
    }
}

#[test]
fn epsilon_uses_shortest_form() {
    let mut s = parse_scenario(MINIMAL).unwrap();
    s.attack.epsilon = 8.0;
    s.attack.alpha = 0.1;
    let text = serialize_scenario(&s);
    assert!(text.contains("  epsilon: 8\n"), "{text}");
    assert!(text.contains("  alpha: 0.1\n"), "{text}");
    assert_eq!(parse_scenario(&text).unwrap().attack.epsilon, 8.0);
}

#[test]
fn unicode_names_serialize_idempotently() {
    let mut s = parse_scenario(MINIMAL).unwrap();
    s.scene.objects[0].name = "mésa".into();
    s.attack.attackable = "mésa".into();
    s.victim.classes = vec!["bus".into(), "\"quoted\" 8".into(), "8".into()];
    let first = serialize_scenario(&s);
    let back = parse_scenario(&first).unwrap();
    assert_eq!(back, s);
    assert_eq!(serialize_scenario(&back), first);
}

#[test]
fn overrides_are_typed_by_field() {
    let s = parse_with_overrides(
        MINIMAL,
        &[
            "attack.epsilon=4.0".into(),
            "render.shadows=false".into(),
            "attack.views.mode=orbit".into(),
            "attack.views.count=8".into(),
            "attack.views.radius=2".into(),
            "scene.objects.0.name=box".into(),
            "attack.attackable=box.texture".into(),
            "scene.background=[0.1, 0.2, 0.3]".into(),
        ],
    )
    .unwrap();
    assert_eq!(s.attack.epsilon, 4.0);
    assert!(!s.render.shadows);
    assert_eq!(s.attack.views.count, 8);
    assert_eq!(s.scene.objects[0].name, "box");
    assert_eq!(s.scene.background, [0.1, 0.2, 0.3]);
    assert!(matches!(
        parse_with_overrides(MINIMAL, &["attack.nope=1".into()]),
        Err(ConfigError::UnknownKey { ref path, .. }) if path == "attack.nope"
    ));
    assert!(parse_with_overrides(MINIMAL, &["render.shadows=maybe".into()]).is_err());
    assert!(parse_with_overrides(MINIMAL, &["no_equals".into()]).is_err());
}

fn orbit(count: u32, radius: f64, elevation: f64, center: Vec3) -> AttackSpec {
    let mut a = parse_scenario(MINIMAL).unwrap().attack;
    a.views = ViewsSpec {
        mode: ViewMode::Orbit,
        count,
        radius: Some(radius),
        elevation_deg: Some(elevation),
        center: Some(center),
    };
    a
}

use crate::geom::Vec3;

#[test]
fn quarter_orbit_positions() {
    let base = parse_scenario(MINIMAL).unwrap().scene.camera;
    let cams = expand_views(&orbit(4, 2.0, 0.0, Vec3::ZERO), &base).unwrap();
    let want = [vec3(2.0, 0.0, 0.0), vec3(0.0, 0.0, 2.0), vec3(-2.0, 0.0, 0.0), vec3(0.0, 0.0, -2.0)];
    for (c, w) in cams.iter().zip(want) {
        assert!((c.eye - w).length() < 1e-12, "{:?} vs {w:?}", c.eye);
        assert_eq!(c.look_at, Vec3::ZERO);
        assert_eq!(c.up, vec3(0.0, 1.0, 0.0));
        assert_eq!((c.width, c.height, c.fov_deg), (base.width, base.height, base.fov_deg));
    }
}

#[test]
fn single_orbit_view_and_single_mode() {
    let base = parse_scenario(MINIMAL).unwrap().scene.camera;
    let cams = expand_views(&orbit(1, 3.0, 30.0, vec3(1.0, 0.0, 0.0)), &base).unwrap();
    let phi = 30f64.to_radians();
    assert!((cams[0].eye - vec3(1.0 + 3.0 * phi.cos(), 3.0 * phi.sin(), 0.0)).length() < 1e-12);
    let single = parse_scenario(MINIMAL).unwrap().attack;
    assert_eq!(expand_views(&single, &base).unwrap(), vec![base]);
}

#[test]
fn elevated_orbit_distances() {
    let base = parse_scenario(MINIMAL).unwrap().scene.camera;
    let center = vec3(0.0, 1.0, 0.0);
    let cams = expand_views(&orbit(8, 3.0, 30.0, center), &base).unwrap();
    assert_eq!(cams.len(), 8);
    for c in &cams {
        assert!(((c.eye - center).length() - 3.0).abs() <= 3.0 * 1e-9);
        assert!((c.eye.y - 2.5).abs() < 1e-12);
    }
}

#[test]
fn orbit_errors() {
    let base = parse_scenario(MINIMAL).unwrap().scene.camera;
    assert!(expand_views(&orbit(0, 1.0, 0.0, Vec3::ZERO), &base).is_err());
    assert!(expand_views(&orbit(4, 0.0, 0.0, Vec3::ZERO), &base).is_err());
    assert!(expand_views(&orbit(4, -1.0, 0.0, Vec3::ZERO), &base).is_err());
}

fn arb_name() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-z][a-z0-9_]{0,8}",
        "[a-zA-Zé ,\"#:]{1,10}",
    ]
    .prop_filter("non-empty", |s| !s.is_empty())
}

fn arb_scenario() -> impl Strategy<Value = Scenario> {
    (
        arb_name(),
        prop::collection::vec(arb_name(), 1..4),
        -1e3f64..1e3,
        0.001f64..100.0,
        0.0001f64..10.0,
        1u32..500,
        any::<u64>(),
        prop::array::uniform3(0.0f64..1.0),
        (1u32..9, 0.1f64..10.0, -80.0f64..80.0),
        any::<bool>(),
    )
        .prop_map(|(name, classes, tz, eps, alpha, iters, seed, init, (k, r, el), shadows)| {
            let mut s = parse_scenario(MINIMAL).unwrap();
            s.scene.objects[0].name = name.clone();
            s.scene.objects[0].transform.translate = vec3(0.0, 0.0, tz);
            if let Some(AlbedoSpec::Texture(t)) = &mut s.scene.objects[0].material.albedo {
                t.source = TextureSource::Init(init);
            }
            s.attack.attackable = name;
            s.attack.epsilon = eps;
            s.attack.alpha = alpha;
            s.attack.iterations = iters;
            s.attack.seed = seed;
            s.attack.views = ViewsSpec {
                mode: ViewMode::Orbit,
                count: k,
                radius: Some(r),
                elevation_deg: Some(el),
                center: None,
            };
            s.victim.classes = classes;
            s.render.shadows = shadows;
            s
        })
}

proptest! {
    #[test]
    fn serialize_parse_round_trip(s in arb_scenario()) {
        validate(&s).unwrap();
        let text = serialize_scenario(&s);
        let back = parse_scenario(&text).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(serialize_scenario(&back), text);
    }

    #[test]
    fn parsing_never_panics(doc in "[a-z: \\[\\],\"'#&*\\-\n0-9.]{0,200}") {
        let _ = parse_scenario(&doc);
    }

    #[test]
    fn mutated_documents_never_panic(cut in 0usize..1200, insert in "[: \\-\\[\\]\"\n]{0,3}") {
        let mut doc = MINIMAL.to_string();
        let at = cut.min(doc.len());
        doc.insert_str(at, &insert);
        let _ = parse_scenario(&doc);
    }
}
