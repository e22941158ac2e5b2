use serde::{Deserialize, Serialize};

use super::{LayerError, LayerParams, LayerValue, SpeedFunction};
use crate::loglog;

/// Critical layer indices at time `n`. Each is the largest `s` satisfying
/// its threshold; layer 0 counts as satisfying all of them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalLayers {
    pub n: u64,
    pub r: f64,
    /// `k_s <= |range(S_n)|`, when a range was supplied
    pub s0: Option<usize>,
    /// `k_s <= r sqrt(n / L)`
    pub s0_prime: usize,
    /// `k_s l_s <= sqrt(n)`
    pub s1: usize,
    /// `k_s l_s <= r sqrt(n / L)`
    pub s2: usize,
    /// `k_s l_s <= sqrt(n L)`
    pub s3: usize,
    /// `min(s0', s3)`
    pub s3_tilde: usize,
}

/// `max{s : pred(s)}` over a nondecreasing sequence, with layer 0 always
/// admitted. Fails when every layer passes and more could follow.
fn last_passing(p: &LayerParams, what: &str, pred: impl Fn(usize) -> bool) -> Result<usize, LayerError> {
    let mut s = 0;
    while s + 1 < p.len() && pred(s + 1) {
        s += 1;
    }
    if s + 1 == p.len() && !p.is_closed() && p.len() > 1 {
        return Err(LayerError::Horizon(format!(
            "all {} layers satisfy the {what} threshold",
            p.len()
        )));
    }
    Ok(s)
}

pub fn critical_layers(
    p: &LayerParams,
    n: u64,
    r: f64,
    range: Option<u64>,
) -> Result<CriticalLayers, LayerError> {
    if n < 16 {
        return Err(LayerError::SmallN(n));
    }
    if p.is_empty() {
        return Err(LayerError::Invalid("no layers".into()));
    }
    let nf = n as f64;
    let ll = loglog(nf);
    let band = r * (nf / ll).sqrt();
    let k = |s: usize| p.k[s].to_f64();
    let s0 = match range {
        Some(rg) => Some(last_passing(p, "range", |s| k(s) <= rg as f64)?),
        None => None,
    };
    let s0_prime = last_passing(p, "s0'", |s| k(s) <= band)?;
    let s1 = last_passing(p, "s1", |s| p.product(s) <= nf.sqrt())?;
    let s2 = last_passing(p, "s2", |s| p.product(s) <= band)?;
    let s3 = last_passing(p, "s3", |s| p.product(s) <= (nf * ll).sqrt())?;
    Ok(CriticalLayers {
        n,
        r,
        s0,
        s0_prime,
        s1,
        s2,
        s3,
        s3_tilde: s0_prime.min(s3),
    })
}

fn next_k(p: &LayerParams, s: usize) -> Result<&LayerValue, LayerError> {
    p.k.get(s + 1)
        .ok_or_else(|| LayerError::Horizon(format!("k_{} is not part of the model", s + 1)))
}

/// `n / k` with `n / inf = 0`.
fn over(n: f64, k: &LayerValue) -> f64 {
    match k {
        LayerValue::Infinite => 0.0,
        v => n / v.to_f64(),
    }
}

/// `g(n) = n / k_{s2+1} + sqrt(n L) l_{s2}`.
pub fn scaling_g(p: &LayerParams, n: u64, r: f64) -> Result<f64, LayerError> {
    let c = critical_layers(p, n, r, None)?;
    scaling_g_at(p, &c)
}

pub fn scaling_g_at(p: &LayerParams, c: &CriticalLayers) -> Result<f64, LayerError> {
    let nf = c.n as f64;
    let ll = loglog(nf);
    Ok(over(nf, next_k(p, c.s2)?) + (nf * ll).sqrt() * p.l[c.s2].to_f64())
}

/// `h(n)`: `n / k_{s3+1} + sqrt(n / L) l_{s3}` when `s3 < s0'`, otherwise
/// `sqrt(n / L) l_{s0'}`.
pub fn scaling_h(p: &LayerParams, n: u64, r: f64) -> Result<f64, LayerError> {
    let c = critical_layers(p, n, r, None)?;
    scaling_h_at(p, &c)
}

pub fn scaling_h_at(p: &LayerParams, c: &CriticalLayers) -> Result<f64, LayerError> {
    let nf = c.n as f64;
    let root = (nf / loglog(nf)).sqrt();
    if c.s3 < c.s0_prime {
        Ok(over(nf, next_k(p, c.s3)?) + root * p.l[c.s3].to_f64())
    } else {
        Ok(root * p.l[c.s0_prime].to_f64())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalingMode {
    Limsup,
    Liminf,
}

/// `L f(n / L)` (limsup) or `f(n L) / L` (liminf), with `L = ln ln n`.
pub fn scaling_from_f(f: &SpeedFunction, n: u64, mode: ScalingMode) -> Result<f64, LayerError> {
    if n < 16 {
        return Err(LayerError::SmallN(n));
    }
    let nf = n as f64;
    let ll = loglog(nf);
    Ok(match mode {
        ScalingMode::Limsup => ll * f.eval(nf / ll),
        ScalingMode::Liminf => f.eval(nf * ll) / ll,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers::tests::pow2_layers;

    #[test]
    fn s2_example() {
        let p = pow2_layers(20);
        let n = 1u64 << 20;
        let c = critical_layers(&p, n, 0.125, None).unwrap();
        assert_eq!(c.s2, 3);
        let ll = loglog(n as f64);
        let g = scaling_g(&p, n, 0.125).unwrap();
        let want = (n as f64) / 16.0 + ((n as f64) * ll).sqrt() * 8.0;
        assert!((g - want).abs() < 1e-9 * want);
    }

    #[test]
    fn base_layer_always_qualifies() {
        let p = pow2_layers(6);
        let c = critical_layers(&p, 16, 0.125, Some(1)).unwrap();
        assert_eq!((c.s0, c.s0_prime, c.s2), (Some(0), 0, 0));
        assert!(critical_layers(&p, 15, 0.125, None).is_err());
    }

    #[test]
    fn single_layer_model() {
        let p = LayerParams {
            m0: 2.0,
            k: vec![LayerValue::from_u64(1), LayerValue::Infinite],
            l: vec![LayerValue::from_u64(1), LayerValue::from_u64(2)],
            source: None,
            x_max: None,
        };
        let n = 1u64 << 12;
        let g = scaling_g(&p, n, 0.125).unwrap();
        let want = ((n as f64) * loglog(n as f64)).sqrt();
        assert!((g - want).abs() < 1e-9 * want);
    }

    #[test]
    fn h_second_case() {
        // tiny r pushes s0' to 0 while s3 stays larger
        let p = pow2_layers(20);
        let n = 1u64 << 20;
        let c = critical_layers(&p, n, 1e-6, None).unwrap();
        assert!(c.s3 >= c.s0_prime);
        let h = scaling_h(&p, n, 1e-6).unwrap();
        assert_eq!(h, ((n as f64) / loglog(n as f64)).sqrt());
    }

    #[test]
    fn horizon_errors() {
        let p = pow2_layers(3);
        assert!(matches!(
            critical_layers(&p, 1 << 30, 0.125, None),
            Err(LayerError::Horizon(_))
        ));
    }

    #[test]
    fn f_scalings() {
        let n = 1u64 << 20;
        let ll = loglog(n as f64);
        let f = SpeedFunction::power_law(0.75);
        let up = scaling_from_f(&f, n, ScalingMode::Limsup).unwrap();
        let lo = scaling_from_f(&f, n, ScalingMode::Liminf).unwrap();
        let nf = n as f64;
        assert!((up - nf.powf(0.75) * ll.powf(0.25)).abs() < 1e-9 * up);
        assert!((lo - nf.powf(0.75) / ll.powf(0.25)).abs() < 1e-9 * lo);
        let sq = scaling_from_f(&SpeedFunction::power_law(0.5), n, ScalingMode::Limsup).unwrap();
        assert!((sq - (nf * ll).sqrt()).abs() < 1e-9 * sq);
    }
}
