use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct GradcheckReport {
    pub max_rel_err: f64,
    /// Per-probe relative errors, in probe order.
    pub rel_errs: Vec<f64>,
    pub finite_diff: Vec<f64>,
    pub analytic: Vec<f64>,
}

fn finite(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(v))
    }
}

/// Central differences of `loss` at each probe index of `params`, compared
/// with `analytic`. The error at a probe is `|fd − an| / max(|fd|, |an|, 1e-8)`.
pub fn finite_diff_gradcheck<F>(
    mut loss: F,
    params: &[f64],
    analytic: &[f64],
    probes: &[usize],
    h: f64,
) -> Result<GradcheckReport>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    assert!(h > 0.0, "gradcheck step must be positive");
    let mut x = params.to_vec();
    let mut rel_errs = Vec::with_capacity(probes.len());
    let (mut fds, mut ans) = (Vec::with_capacity(probes.len()), Vec::with_capacity(probes.len()));
    for &i in probes {
        x[i] = params[i] + h;
        let plus = finite(loss(&x)?)?;
        x[i] = params[i] - h;
        let minus = finite(loss(&x)?)?;
        x[i] = params[i];
        let fd = (plus - minus) / (2.0 * h);
        let an = analytic[i];
        rel_errs.push((fd - an).abs() / fd.abs().max(an.abs()).max(1e-8));
        fds.push(fd);
        ans.push(an);
    }
    Ok(GradcheckReport {
        max_rel_err: rel_errs.iter().copied().fold(0.0, f64::max),
        rel_errs,
        finite_diff: fds,
        analytic: ans,
    })
}
