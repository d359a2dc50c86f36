use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, Axis};

use crate::model::{gelu_grad, EncodedBatch, Mlp, MlpCache, NetworkParams, ALPHA_SPAN, RHO1_MAX};
use crate::scalar::{sigmoid, softplus, Scalar};

/// Probability clamp applied before the cross-entropy.
pub const P_CLAMP: f64 = 1e-7;

/// Batch-mean loss and its two parts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossParts {
    pub loss: f64,
    pub bce: f64,
    pub reg: f64,
}

/// Binary cross-entropy with `p` clamped to `[1e-7, 1 − 1e-7]`.
pub fn bce(p: f64, target: f64) -> f64 {
    bce_split(p, 1.0 - p, target)
}

/// Cross-entropy from `p` and a separately computed `q = 1 − p`.
fn bce_split(p: f64, q: f64, target: f64) -> f64 {
    let pc = p.clamp(P_CLAMP, 1.0 - P_CLAMP);
    let qc = q.clamp(P_CLAMP, 1.0 - P_CLAMP);
    -(target * pc.ln() + (1.0 - target) * qc.ln())
}

/// Shaping regularizer `|Δρ| + sigmoid(α¹Δρ/2) + sigmoid(−α²Δρ/2)`, `Δρ = ρ² − ρ¹`.
pub fn regularizer(alpha1: f64, alpha2: f64, rho1: f64, rho2: f64) -> f64 {
    let d = rho2 - rho1;
    d.abs() + sigmoid(alpha1 * d / 2.0) + sigmoid(-alpha2 * d / 2.0)
}

/// Per-record loss terms and the derivative of `bce + γ·reg` with respect
/// to the raw network outputs.
struct RecordTerms {
    bce: f64,
    reg: f64,
    d_zf: f64,
    d_z: [f64; 4],
}

fn record_terms(zf: f64, z: [f64; 4], dist: f64, target: f64, gamma: f64, need_grad: bool) -> RecordTerms {
    let f = sigmoid(zf);
    let g = [sigmoid(z[0]), sigmoid(z[1]), sigmoid(z[2])];
    let a1 = 1.0 + ALPHA_SPAN * g[0];
    let a2 = 1.0 + ALPHA_SPAN * g[1];
    let r1 = RHO1_MAX * g[2];
    let r2 = softplus(z[3]);
    let u1 = a1 * (r1 - dist);
    let u2 = -a2 * (r2 - dist);
    let (s1, c1) = (sigmoid(u1), sigmoid(-u1));
    let (s2, c2) = (sigmoid(u2), sigmoid(-u2));
    // 1 − p̂ is formed from the complements to avoid cancellation near p̂ = 1
    let p = c1 * c2 * f + s1;
    let q = c1 * (1.0 - f + s2 * f);
    let reg = regularizer(a1, a2, r1, r2);
    let mut t = RecordTerms {
        bce: bce_split(p, q, target),
        reg,
        d_zf: 0.0,
        d_z: [0.0; 4],
    };
    if !need_grad {
        return t;
    }

    // cross-entropy part; the clamp cuts the gradient outside its range
    let dp = if p >= P_CLAMP && q >= P_CLAMP {
        -target / p + (1.0 - target) / q
    } else {
        0.0
    };
    let df = dp * c1 * c2;
    let ds1 = dp * (1.0 - c2 * f);
    let ds2 = -dp * c1 * f;
    let du1 = ds1 * s1 * c1;
    let du2 = ds2 * s2 * c2;
    let mut da1 = du1 * (r1 - dist);
    let mut dr1 = du1 * a1;
    let mut da2 = -du2 * (r2 - dist);
    let mut dr2 = -du2 * a2;

    if gamma != 0.0 {
        let d = r2 - r1;
        let q1 = sigmoid(a1 * d / 2.0);
        let q2 = sigmoid(-a2 * d / 2.0);
        let dd = d.signum() * (d != 0.0) as u8 as f64 + q1 * (1.0 - q1) * a1 / 2.0 - q2 * (1.0 - q2) * a2 / 2.0;
        da1 += gamma * q1 * (1.0 - q1) * d / 2.0;
        da2 -= gamma * q2 * (1.0 - q2) * d / 2.0;
        dr2 += gamma * dd;
        dr1 -= gamma * dd;
    }

    t.d_zf = df * f * (1.0 - f);
    t.d_z = [
        da1 * ALPHA_SPAN * g[0] * (1.0 - g[0]),
        da2 * ALPHA_SPAN * g[1] * (1.0 - g[1]),
        dr1 * RHO1_MAX * g[2] * (1.0 - g[2]),
        dr2 * sigmoid(z[3]),
    ];
    t
}

fn check_batch<T: Scalar>(x: &EncodedBatch<T>, targets: &[f64]) {
    assert!(!x.is_empty(), "loss needs a nonempty batch");
    assert_eq!(x.len(), targets.len(), "one target per row");
}

/// Mean cross-entropy plus `γ` times the mean regularizer.
pub fn loss<T: Scalar>(params: &NetworkParams<T>, x: &EncodedBatch<T>, targets: &[f64], gamma: f64) -> LossParts {
    check_batch(x, targets);
    let raw = params.forward_raw(x);
    let mut out = LossParts::default();
    for (i, &y) in targets.iter().enumerate() {
        let z = raw.shaping.row(i);
        let t = record_terms(
            raw.main[[i, 0]].to_f64_lossless(),
            [0, 1, 2, 3].map(|k| z[k].to_f64_lossless()),
            x.dist[i].to_f64_lossless(),
            y,
            gamma,
            false,
        );
        out.bce += t.bce;
        out.reg += t.reg;
    }
    finish(out, targets.len(), gamma)
}

fn finish(mut out: LossParts, n: usize, gamma: f64) -> LossParts {
    out.bce /= n as f64;
    out.reg /= n as f64;
    out.loss = out.bce + gamma * out.reg;
    out
}

fn mlp_backward<T: Scalar>(mlp: &Mlp<T>, cache: &MlpCache<T>, d_out: Array2<T>, grad: &mut Mlp<T>) {
    let mut d = d_out;
    for l in (0..mlp.layers.len()).rev() {
        let g = &mut grad.layers[l];
        general_mat_mul(T::one(), &cache.inputs[l].t(), &d, T::zero(), &mut g.w);
        g.b.assign(&d.sum_axis(Axis(0)));
        if l > 0 {
            let mut da = d.dot(&mlp.layers[l].w.t());
            da.zip_mut_with(&cache.pre[l - 1], |v, &z| *v *= gelu_grad(z));
            d = da;
        }
    }
}

/// Loss and its exact gradient with respect to every weight.
pub fn loss_and_gradients<T: Scalar>(
    params: &NetworkParams<T>,
    x: &EncodedBatch<T>,
    targets: &[f64],
    gamma: f64,
) -> (LossParts, NetworkParams<T>) {
    let mut grad = params.zeros_like();
    let parts = loss_and_gradients_into(params, x, targets, gamma, &mut grad);
    (parts, grad)
}

/// As [`loss_and_gradients`], overwriting a preallocated gradient.
pub fn loss_and_gradients_into<T: Scalar>(
    params: &NetworkParams<T>,
    x: &EncodedBatch<T>,
    targets: &[f64],
    gamma: f64,
    grad: &mut NetworkParams<T>,
) -> LossParts {
    check_batch(x, targets);
    let n = targets.len();
    let (zf, main_cache) = params.main.forward_cached(&x.main);
    let (zs, shaping_cache) = params.shaping.forward_cached(&x.shaping);
    let mut d_main = Array2::<T>::zeros((n, 1));
    let mut d_shaping = Array2::<T>::zeros((n, 4));
    let scale = 1.0 / n as f64;
    let mut out = LossParts::default();
    for (i, &y) in targets.iter().enumerate() {
        let z = zs.row(i);
        let t = record_terms(
            zf[[i, 0]].to_f64_lossless(),
            [0, 1, 2, 3].map(|k| z[k].to_f64_lossless()),
            x.dist[i].to_f64_lossless(),
            y,
            gamma,
            true,
        );
        out.bce += t.bce;
        out.reg += t.reg;
        d_main[[i, 0]] = T::of(t.d_zf * scale);
        for k in 0..4 {
            d_shaping[[i, k]] = T::of(t.d_z[k] * scale);
        }
    }
    mlp_backward(&params.main, &main_cache, d_main, &mut grad.main);
    mlp_backward(&params.shaping, &shaping_cache, d_shaping, &mut grad.shaping);
    finish(out, n, gamma)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bce_examples() {
        assert!((bce(1.0 - 1e-7, 1.0) - 1e-7).abs() < 1e-12);
        assert!(bce(0.0, 1.0).is_finite() && bce(1.0, 0.0).is_finite());
        assert!((bce(0.0, 1.0) - (-(1e-7f64).ln())).abs() < 1e-9);
        assert!((bce(0.5, 0.3) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn regularizer_at_equal_thresholds() {
        assert!((regularizer(1.0, 1.0, 3.0, 3.0) - 1.0).abs() < 1e-15);
        // large α drives the sigmoid terms to a step
        assert!((regularizer(21.0, 21.0, 1.0, 3.0) - 3.0).abs() < 1e-6);
    }

    #[test]
    fn record_gradient_matches_fd() {
        let z = [0.3, -0.8, 0.1, 1.2];
        let (zf, dist, y, gamma) = (-0.4, 5.5, 0.3, 0.7);
        let t = record_terms(zf, z, dist, y, gamma, true);
        let total = |zf: f64, z: [f64; 4]| {
            let r = record_terms(zf, z, dist, y, gamma, false);
            r.bce + gamma * r.reg
        };
        let h = 1e-6;
        let fd = (total(zf + h, z) - total(zf - h, z)) / (2.0 * h);
        assert!((fd - t.d_zf).abs() < 1e-6 * fd.abs().max(1.0), "{fd} {}", t.d_zf);
        for k in 0..4 {
            let (mut a, mut b) = (z, z);
            a[k] += h;
            b[k] -= h;
            let fd = (total(zf, a) - total(zf, b)) / (2.0 * h);
            assert!((fd - t.d_z[k]).abs() < 1e-6 * fd.abs().max(1.0), "{k}: {fd} {}", t.d_z[k]);
        }
    }
}
