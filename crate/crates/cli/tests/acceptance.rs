//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use advray::attack::Pipeline;
use advray::formats::{decode_texture_raw, encode_texture_raw};
use advray::geom::{vec3, Bvh, Point3, Ray, Triangle, Vec3};
use advray::raytrace::{camera_ray, render, Texture};
use advray::rng::SplitMix64;
use advray::scenecfg::{parse_scenario, parse_with_overrides, serialize_scenario, Scenario};
use advray::victim::{init_random, load_weights, save_weights, Arch};
use advray::Exec;
use serde_json::Value;
use sha2::{Digest, Sha256};

type Outcome = Result<String, String>;

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn scenario(name: &str) -> String {
    scenarios().join(name).to_string_lossy().into_owned()
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
    secs: f64,
}

fn advray(args: &[&str], threads: &str) -> Run {
    let started = Instant::now();
    let o = Command::new(env!("CARGO_BIN_EXE_advray"))
        .args(args)
        .env("ADVRAY_THREADS", threads)
        .output()
        .expect("spawning advray");
    Run {
        code: o.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&o.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&o.stderr).into_owned(),
        secs: started.elapsed().as_secs_f64(),
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn gradcheck(name: &str, threads: &str) -> Result<(f64, f64), String> {
    let r = advray(&["gradcheck", "--scenario", &scenario(name), "--probes", "50", "--h", "1e-3"], threads);
    let err = r
        .stdout
        .trim_end()
        .strip_prefix("gradcheck max_rel_err=")
        .and_then(|rest| rest.split_once(" probes=50"))
        .and_then(|(e, _)| e.parse::<f64>().ok())
        .ok_or_else(|| format!("{name}: unexpected output {:?} {}", r.stdout, r.stderr))?;
    Ok((err, r.secs))
}

/// Runs an attack into `out` and returns the exit code with the parsed manifest.
fn attack(name: &str, out: &Path, sets: &[&str], threads: &str) -> Result<(i32, Value), String> {
    let mut args = vec!["attack", "--scenario"];
    let path = scenario(name);
    args.push(&path);
    let out_s = out.to_string_lossy().into_owned();
    args.extend(["--out", &out_s]);
    for s in sets {
        args.extend(["--set", s]);
    }
    let r = advray(&args, threads);
    let text = fs::read_to_string(out.join("manifest.json")).map_err(|e| format!("{name}: no manifest ({e}): {}", r.stderr))?;
    let manifest = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    Ok((r.code, manifest))
}

fn log_lines(out: &Path) -> Vec<Value> {
    fs::read_to_string(out.join("log.jsonl"))
        .unwrap_or_default()
        .lines()
        .map(|l| serde_json::from_str(l).expect("log line is JSON"))
        .collect()
}

fn load(name: &str, sets: &[&str]) -> Scenario {
    let text = fs::read_to_string(scenarios().join(name)).unwrap();
    let sets: Vec<String> = sets.iter().map(|s| s.to_string()).collect();
    parse_with_overrides(&text, &sets).unwrap()
}

fn pipeline(s: &Scenario) -> (Pipeline, Texture) {
    let bytes = fs::read(scenarios().join(&s.victim.weights_path)).unwrap();
    let size = (s.victim.input_size.0 as usize, s.victim.input_size.1 as usize);
    let model = load_weights(&bytes, size).unwrap();
    Pipeline::from_scenario(s, &scenarios(), model, Exec::default()).unwrap()
}

fn gradient_fidelity() -> Outcome {
    let (cnn, secs) = gradcheck("quad_cnn.yaml", "1")?;
    check(cnn < 1e-2, || format!("tiny-cnn max_rel_err {cnn:e} >= 1e-2"))?;
    check(secs < 60.0, || format!("tiny-cnn gradcheck took {secs:.1} s"))?;
    let (lin, _) = gradcheck("quad_linear.yaml", "1")?;
    check(lin < 1e-4, || format!("linear max_rel_err {lin:e} >= 1e-4"))?;
    Ok(format!("tiny-cnn {cnn:.2e} in {secs:.2} s, linear {lin:.2e}"))
}

fn renderer_linearity() -> Outcome {
    let s = load("quad_linear.yaml", &[]);
    let (p, _) = pipeline(&s);
    let mut rng = SplitMix64::new(1234);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let tex = Texture {
            width: 32,
            height: 32,
            data: (0..32 * 32 * 3).map(|_| rng.next_f64()).collect(),
        };
        let out = render(&p.scene, &p.views[0], &p.settings, Some(&tex), p.view_seed(0)).map_err(|e| e.to_string())?;
        let jt = out.jacobian.apply(&tex.data);
        for (i, &v) in out.frame.data.iter().enumerate() {
            let rel = (v - out.base.data[i] - jt[i]).abs() / v.abs().max(1e-12);
            worst = worst.max(rel);
        }
    }
    check(worst <= 1e-6, || format!("worst relative deviation {worst:e}"))?;
    Ok(format!("5 textures, worst relative deviation {worst:.1e}"))
}

fn red_means(m: &Value) -> (f64, f64) {
    let s = &m["summary"];
    (
        s["initial_channel_means"][0].as_f64().unwrap_or(f64::NAN),
        s["final_channel_means"][0].as_f64().unwrap_or(f64::NAN),
    )
}

fn targeted_linear(out: &Path) -> Outcome {
    let (code, m) = attack("quad_linear.yaml", out, &[], "0")?;
    check(code == 0, || format!("exit {code}"))?;
    check(m["stop_reason"] == "TargetReached", || format!("stop_reason {}", m["stop_reason"]))?;
    let iters = m["summary"]["iterations"].as_u64().unwrap_or(u64::MAX);
    check(iters <= 200, || format!("{iters} iterations"))?;
    let (benign, last) = red_means(&m);
    check(last > benign, || format!("red mean {last} not above benign {benign}"))?;
    Ok(format!("TargetReached after {iters} iterations, red mean {benign:.3} -> {last:.3}"))
}

fn multi_view(out: &Path) -> Outcome {
    let sets = ["attack.views.mode=orbit", "attack.views.count=4"];
    let (code, m) = attack("quad_linear.yaml", out, &sets, "0")?;
    check(code == 0, || format!("exit {code}"))?;
    check(m["stop_reason"] == "TargetReached", || format!("stop_reason {}", m["stop_reason"]))?;
    let log = log_lines(out);
    let last = log.last().ok_or("empty log")?;
    let argmax: Vec<u64> = last["view_argmax"]
        .as_array()
        .map(|a| a.iter().filter_map(Value::as_u64).collect())
        .unwrap_or_default();
    check(argmax.len() == 4 && argmax.iter().all(|&a| a == 0), || {
        format!("final view_argmax {argmax:?}")
    })?;
    Ok(format!("TargetReached after {} iterations, final view_argmax {argmax:?}", log.len() - 1))
}

fn refraction(out: &Path) -> Outcome {
    let s = load("slab_cube.yaml", &[]);
    let (p, t0) = pipeline(&s);
    let r = render(&p.scene, &p.views[0], &p.settings, Some(&t0), p.view_seed(0)).map_err(|e| e.to_string())?;
    let slab = p.scene.objects.iter().position(|o| o.name == "slab").ok_or("no slab")? as u32;
    let bvh = p.scene.bvh.as_ref().ok_or("empty scene")?;
    let mut pixels: Vec<u32> = r.jacobian.entries.iter().map(|e| e.pixel).collect();
    pixels.dedup();
    let w = p.views[0].width;
    let through = pixels
        .iter()
        .filter(|&&px| {
            let ray = camera_ray(&p.views[0], px % w, px / w, [0.5, 0.5]);
            bvh.intersect(&ray).is_some_and(|h| h.object_id == slab)
        })
        .count();
    check(through > 0, || "no jacobian pixel is seen through the slab".into())?;
    let (err, _) = gradcheck("slab_cube.yaml", "0")?;
    check(err < 1e-2, || format!("gradcheck {err:e}"))?;
    let (code, m) = attack("slab_cube.yaml", out, &[], "0")?;
    check(code == 0 && m["stop_reason"] == "TargetReached", || {
        format!("exit {code}, stop_reason {}", m["stop_reason"])
    })?;
    let iters = m["summary"]["iterations"].as_u64().unwrap_or(u64::MAX);
    check(iters <= 500, || format!("{iters} iterations"))?;
    Ok(format!(
        "{through} of {} jacobian pixels behind the slab, gradcheck {err:.2e}, TargetReached after {iters} iterations",
        pixels.len()
    ))
}

fn feasibility(runs: &[(&Path, f64)]) -> Outcome {
    let mut iterations = 0;
    for (out, eps) in runs {
        let m: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let v = m["summary"]["feasibility_violations"].as_u64();
        check(v == Some(0), || format!("{}: {v:?} in-loop violations", out.display()))?;
        for line in log_lines(out) {
            let d = line["delta_norm"].as_f64().unwrap_or(f64::NAN);
            check(d <= eps * (1.0 + 1e-9), || format!("{}: delta norm {d} above {eps}", out.display()))?;
            iterations += 1;
        }
        for entry in fs::read_dir(out.join("textures")).map_err(|e| e.to_string())? {
            let path = entry.map_err(|e| e.to_string())?.path();
            if path.extension().is_some_and(|e| e == "tex") {
                let t = decode_texture_raw(&fs::read(&path).unwrap()).map_err(|e| e.to_string())?;
                check(t.is_valid(), || format!("{} leaves [0, 1]", path.display()))?;
            }
        }
    }
    Ok(format!("{} runs, {iterations} iterations, zero violations", runs.len()))
}

/// Plane intersection followed by an inside test on edge cross products.
fn brute_hit(v: &[Point3; 3], o: Point3, d: Vec3) -> Option<f64> {
    let n = (v[1] - v[0]).cross(v[2] - v[0]);
    let denom = n.dot(d);
    if denom.abs() < 1e-15 {
        return None;
    }
    let t = n.dot(v[0] - o) / denom;
    let p = o + d * t;
    (0..3)
        .all(|i| (v[(i + 1) % 3] - v[i]).cross(p - v[i]).dot(n) >= 0.0)
        .then_some(t)
}

fn bvh_oracle() -> Outcome {
    let mut rng = SplitMix64::new(2000);
    let point = |rng: &mut SplitMix64, s: f64| vec3(rng.uniform(-s, s), rng.uniform(-s, s), rng.uniform(-s, s));
    let tris: Vec<Triangle> = (0..2000)
        .map(|i| {
            let c = point(&mut rng, 5.0);
            Triangle {
                v: [c + point(&mut rng, 0.5), c + point(&mut rng, 0.5), c + point(&mut rng, 0.5)],
                normals: None,
                uvs: None,
                object_id: 0,
                tri_id: i,
            }
        })
        .collect();
    let bvh = Bvh::from_triangles(tris.clone()).map_err(|e| e.to_string())?;
    let (mut hits, mut worst) = (0, 0.0f64);
    for k in 0..10_000 {
        let o = point(&mut rng, 8.0);
        let ray = Ray::new(o, point(&mut rng, 4.0) - o);
        let expected = tris
            .iter()
            .filter_map(|t| brute_hit(&t.v, ray.origin, ray.dir))
            .filter(|&t| t > ray.t_min)
            .min_by(f64::total_cmp);
        match (expected, bvh.intersect(&ray).map(|h| h.t)) {
            (Some(e), Some(g)) => {
                hits += 1;
                worst = worst.max((e - g).abs());
            }
            (None, None) => {}
            (e, g) => return Err(format!("ray {k}: brute force {e:?}, bvh {g:?}")),
        }
    }
    check(worst < 1e-9, || format!("|dt| up to {worst:e}"))?;
    Ok(format!("10000 rays, {hits} hits, max |dt| {worst:.1e}"))
}

fn tree_hashes(out: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut map = BTreeMap::new();
    for sub in ["frames", "textures"] {
        for entry in fs::read_dir(out.join(sub)).unwrap() {
            let path = entry.unwrap().path();
            let name = format!("{sub}/{}", path.file_name().unwrap().to_string_lossy());
            map.insert(name, Sha256::digest(fs::read(&path).unwrap()).to_vec());
        }
    }
    map.insert("log.jsonl".into(), Sha256::digest(fs::read(out.join("log.jsonl")).unwrap()).to_vec());
    map
}

fn determinism(root: &Path) -> Outcome {
    let a = root.join("threads_1");
    let b = root.join("threads_4");
    attack("quad_linear.yaml", &a, &[], "1")?;
    attack("quad_linear.yaml", &b, &[], "4")?;
    let (ha, hb) = (tree_hashes(&a), tree_hashes(&b));
    check(ha.len() > 2, || "no artifacts".into())?;
    check(ha.keys().eq(hb.keys()), || "file sets differ".into())?;
    if let Some(name) = ha.keys().find(|k| ha[*k] != hb[*k]) {
        return Err(format!("{name} differs between 1 and 4 threads"));
    }
    Ok(format!("{} files identical across 1 and 4 threads", ha.len()))
}

fn round_trips() -> Outcome {
    let mut n = 0;
    for entry in fs::read_dir(scenarios()).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        if path.extension().is_none_or(|e| e != "yaml") {
            continue;
        }
        let s = parse_scenario(&fs::read_to_string(&path).unwrap()).map_err(|e| e.to_string())?;
        let again = parse_scenario(&serialize_scenario(&s)).map_err(|e| e.to_string())?;
        check(s == again, || format!("{} changes on re-parse", path.display()))?;
        n += 1;
    }
    let mut weights = 0;
    for (arch, seed) in [(Arch::TinyCnn, 1), (Arch::Linear, 2)] {
        let m = init_random(arch, 4, (32, 32), seed).map_err(|e| e.to_string())?;
        let bytes = save_weights(&m);
        check(save_weights(&load_weights(&bytes, (32, 32)).unwrap()) == bytes, || format!("{arch:?} weights"))?;
        weights += 1;
    }
    for name in ["weights/linear_red.avw", "weights/tiny_cnn.avw"] {
        let bytes = fs::read(scenarios().join(name)).map_err(|e| e.to_string())?;
        check(save_weights(&load_weights(&bytes, (32, 32)).unwrap()) == bytes, || name.to_string())?;
        weights += 1;
    }
    let mut rng = SplitMix64::new(9);
    let tex = Texture {
        width: 7,
        height: 5,
        data: (0..7 * 5 * 3).map(|_| (rng.next_f64() as f32) as f64).collect(),
    };
    let bytes = encode_texture_raw(&tex);
    let back = decode_texture_raw(&bytes).map_err(|e| e.to_string())?;
    check(back == tex && encode_texture_raw(&back) == bytes, || "texture".into())?;
    let shipped = fs::read(scenarios().join("textures/mottled.tex")).map_err(|e| e.to_string())?;
    check(encode_texture_raw(&decode_texture_raw(&shipped).unwrap()) == shipped, || "mottled.tex".into())?;
    Ok(format!("{n} scenarios, {weights} weight files, 2 textures"))
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let linear = tmp.path().join("linear");
    let orbit = tmp.path().join("orbit");
    let slab = tmp.path().join("slab");
    let eps = |name: &str| load(name, &[]).attack.epsilon;

    let mut results: Vec<(u32, &str, Outcome)> = vec![
        (1, "gradient fidelity", gradient_fidelity()),
        (2, "renderer linearity", renderer_linearity()),
        (3, "targeted attack, linear victim", targeted_linear(&linear)),
        (4, "multi-view EoT attack", multi_view(&orbit)),
        (5, "attack through refraction", refraction(&slab)),
    ];
    let runs = [
        (linear.as_path(), eps("quad_linear.yaml")),
        (orbit.as_path(), eps("quad_linear.yaml")),
        (slab.as_path(), eps("slab_cube.yaml")),
    ];
    results.push((6, "feasibility invariants", feasibility(&runs)));
    results.push((7, "BVH oracle equivalence", bvh_oracle()));
    results.push((8, "determinism across thread counts", determinism(tmp.path())));
    results.push((9, "format round-trips", round_trips()));

    let mut failed = Vec::new();
    for (n, name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("criterion {n} PASS {name}: {detail}"),
            Err(why) => {
                println!("criterion {n} FAIL {name}: {why}");
                failed.push(*n);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
