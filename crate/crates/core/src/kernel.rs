//! Four-lane evaluation of Monte-Carlo log-ratios.
//!
//! Lanes hold independent samples; coordinates are walked in order. Results
//! agree with the scalar density path to a few ulps.

use wide::f64x4;

use crate::relaxed::{gumbel_from_uniform, RelaxedCategorical, UNIFORM_HI, UNIFORM_LO};

const LANES: usize = 4;

/// Maps uniforms in `buf` to standard Gumbel noise in place.
pub(crate) fn uniforms_to_gumbel(buf: &mut [f64]) {
    let lo = f64x4::splat(UNIFORM_LO);
    let hi = f64x4::splat(UNIFORM_HI);
    let mut chunks = buf.chunks_exact_mut(LANES);
    for chunk in &mut chunks {
        let u = f64x4::new([chunk[0], chunk[1], chunk[2], chunk[3]])
            .max(lo)
            .min(hi);
        let g = -((-u.ln()).ln());
        chunk.copy_from_slice(&g.to_array());
    }
    for u in chunks.into_remainder() {
        *u = gumbel_from_uniform(*u);
    }
}

struct LaneParams {
    log_logits: Vec<f64x4>,
    temperature: f64x4,
    temperature_plus_one: f64x4,
    log_norm: f64x4,
    dim: f64x4,
}

impl LaneParams {
    fn new(params: &RelaxedCategorical) -> Self {
        let t = params.temperature();
        Self {
            log_logits: params
                .log_logits()
                .iter()
                .map(|&v| f64x4::splat(v))
                .collect(),
            temperature: f64x4::splat(t),
            temperature_plus_one: f64x4::splat(t + 1.0),
            log_norm: f64x4::splat(params.log_norm()),
            dim: f64x4::splat(params.dim() as f64),
        }
    }

    #[inline]
    fn log_density(&self, log_z: &[f64x4], scratch: &mut [f64x4]) -> f64x4 {
        let mut linear = f64x4::ZERO;
        let mut max = f64x4::splat(f64::NEG_INFINITY);
        for ((y, &la), &lz) in scratch.iter_mut().zip(&self.log_logits).zip(log_z) {
            linear += la - self.temperature_plus_one * lz;
            *y = la - self.temperature * lz;
            max = max.max(*y);
        }
        let mut sum = f64x4::ZERO;
        for &y in scratch.iter() {
            sum += (y - max).exp();
        }
        self.log_norm + linear - self.dim * (max + sum.ln())
    }
}

/// `log q(z_i) - log p(z_i)` for each sample `z_i` reparameterized under `q`
/// from the row-major Gumbel block `noise`; writes one value per sample.
pub(crate) fn log_ratios(
    q: &RelaxedCategorical,
    p: &RelaxedCategorical,
    noise: &[f64],
    out: &mut [f64],
) {
    let n = q.dim();
    debug_assert_eq!(noise.len(), out.len() * n);
    let lq = LaneParams::new(q);
    let lp = LaneParams::new(p);
    let inv_temp = f64x4::splat(1.0 / q.temperature());
    let mut log_z = vec![f64x4::ZERO; n];
    let mut scratch = vec![f64x4::ZERO; n];

    for (block, out) in out.chunks_mut(LANES).enumerate() {
        let lanes = out.len();
        let base = block * LANES * n;
        let mut max = f64x4::splat(f64::NEG_INFINITY);
        for (k, lz) in log_z.iter_mut().enumerate() {
            let mut g = [0.0; LANES];
            for (lane, gl) in g.iter_mut().enumerate().take(lanes) {
                *gl = noise[base + lane * n + k];
            }
            *lz = (lq.log_logits[k] + f64x4::new(g)) * inv_temp;
            max = max.max(*lz);
        }
        let mut sum = f64x4::ZERO;
        for &lz in log_z.iter() {
            sum += (lz - max).exp();
        }
        let lse = max + sum.ln();
        for lz in log_z.iter_mut() {
            *lz -= lse;
        }
        let ratio = lq.log_density(&log_z, &mut scratch) - lp.log_density(&log_z, &mut scratch);
        out.copy_from_slice(&ratio.to_array()[..lanes]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relaxed::{log_density_unchecked, log_reparameterize_into};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn vector_gumbel_matches_scalar() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut buf: Vec<f64> = (0..1003).map(|_| rng.random::<f64>()).collect();
        buf[0] = 0.0;
        buf[1] = 1.0;
        let expected: Vec<f64> = buf.iter().map(|&u| gumbel_from_uniform(u)).collect();
        uniforms_to_gumbel(&mut buf);
        for (a, e) in buf.iter().zip(&expected) {
            assert!((a - e).abs() <= 1e-13 * e.abs().max(1.0), "{a} vs {e}");
        }
    }

    #[test]
    fn lanes_match_scalar_density_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in [2usize, 3, 5, 10] {
            let logits =
                |rng: &mut ChaCha8Rng| (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let q = RelaxedCategorical::new(logits(&mut rng), rng.random_range(0.1..5.0)).unwrap();
            let p = RelaxedCategorical::new(logits(&mut rng), rng.random_range(0.1..5.0)).unwrap();
            let samples = 37;
            let mut noise: Vec<f64> = (0..samples * n).map(|_| rng.random::<f64>()).collect();
            uniforms_to_gumbel(&mut noise);
            let mut out = vec![0.0; samples];
            log_ratios(&q, &p, &noise, &mut out);
            let mut lz = vec![0.0; n];
            for (i, g) in noise.chunks_exact(n).enumerate() {
                log_reparameterize_into(&q, g, &mut lz);
                let scalar = log_density_unchecked(&q, &lz) - log_density_unchecked(&p, &lz);
                let scale = scalar.abs().max(1.0) * n as f64;
                assert!(
                    (out[i] - scalar).abs() <= 1e-11 * scale,
                    "n={n} i={i}: {} vs {scalar}",
                    out[i]
                );
            }
        }
    }
}
