use advray::attack::{Objective, Pipeline, ViewForward};
use advray::diff::finite_diff_gradcheck;
use advray::raytrace::Texture;
use advray::rng::SplitMix64;
use advray::scenecfg::AttackMode;
use advray::Exec;
use anyhow::{bail, Result};

use crate::{read_scenario, victim, GradcheckArgs, EXIT_OK, EXIT_UNSUCCESSFUL};

/// Pass threshold on the maximum relative error.
pub const THRESHOLD: f64 = 1e-2;

/// True when moving `param` by `h` can carry some pixel across 0 or 1,
/// where the clamp has a kink.
fn near_clamp(fwd: &[ViewForward], param: usize, h: f64) -> bool {
    let (texel, c) = ((param / 3) as u32, param % 3);
    fwd.iter().any(|f| {
        f.render.jacobian.entries.iter().any(|e| {
            if e.texel != texel {
                return false;
            }
            let v = f.render.frame.data[3 * e.pixel as usize + c];
            let reach = e.weight[c] * h;
            v.abs() <= reach || (v - 1.0).abs() <= reach
        })
    })
}

pub(crate) fn cmd_gradcheck(a: &GradcheckArgs) -> Result<i32> {
    if a.probes == 0 {
        bail!("--probes must be at least 1");
    }
    if !(a.h > 0.0 && a.h.is_finite()) {
        bail!("--h must be a positive number");
    }
    let (s, dir) = read_scenario(&a.common)?;
    let (model, _) = victim(&s, &dir, &a.common)?;
    let (pipeline, t0) = Pipeline::from_scenario(&s, &dir, model, Exec::default())?;
    let fwd = pipeline.forward(&t0)?;
    let objective = match s.attack.mode {
        AttackMode::Targeted => Objective::Targeted(s.attack.target_class.expect("validated")),
        AttackMode::Untargeted => Objective::Untargeted(fwd.iter().map(ViewForward::argmax).collect()),
    };
    let eval = pipeline.loss_and_grad(&fwd, &objective)?;

    // Probe texels that some view actually sees, in seeded random order.
    let mut seen = vec![false; t0.texel_count()];
    for f in &fwd {
        for (i, s) in f.render.jacobian.support().into_iter().enumerate() {
            seen[i] |= s;
        }
    }
    let mut candidates: Vec<usize> = (0..3 * t0.texel_count()).filter(|p| seen[p / 3]).collect();
    let mut rng = SplitMix64::new(s.attack.seed);
    for i in (1..candidates.len()).rev() {
        candidates.swap(i, rng.below(i as u64 + 1) as usize);
    }
    let (mut probes, mut skipped) = (Vec::new(), 0);
    for p in candidates {
        if probes.len() == a.probes {
            break;
        }
        if near_clamp(&fwd, p, a.h) {
            skipped += 1;
        } else {
            probes.push(p);
        }
    }
    if probes.is_empty() {
        bail!("no texel of the attacked texture is visible in any view");
    }
    if probes.len() < a.probes {
        log::warn!("only {} usable probes", probes.len());
    }
    if skipped > 0 {
        log::info!("skipped {skipped} probes next to a clamp boundary");
    }
    let loss = |x: &[f64]| {
        let tex = Texture {
            data: x.to_vec(),
            ..t0.clone()
        };
        pipeline.loss(&tex, &objective)
    };
    let report = finite_diff_gradcheck(loss, &t0.data, &eval.grad, &probes, a.h)?;
    for (i, p) in probes.iter().enumerate() {
        log::debug!(
            "probe {p}: fd {:e} analytic {:e} rel {:e}",
            report.finite_diff[i],
            report.analytic[i],
            report.rel_errs[i]
        );
    }
    println!("gradcheck max_rel_err={} probes={}", report.max_rel_err, probes.len());
    Ok(if report.max_rel_err < THRESHOLD {
        EXIT_OK
    } else {
        EXIT_UNSUCCESSFUL
    })
}
