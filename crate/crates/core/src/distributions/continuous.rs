//! Continuous heavy-tailed families, all centered at the origin and scaled so
//! that their declared `(1 + alpha)` weak moment is at most 1.

use rand::Rng;
use rand_distr::{ChiSquared, Distribution as _};
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::points::Points;
use crate::rng::{gaussian, uniform};

/// `E|t_nu|^p` for `0 <= p < nu`.
pub fn student_t_abs_moment(nu: f64, p: f64) -> f64 {
    let log = 0.5 * p * nu.ln() + ln_gamma((p + 1.0) / 2.0) + ln_gamma((nu - p) / 2.0)
        - 0.5 * std::f64::consts::PI.ln()
        - ln_gamma(nu / 2.0);
    log.exp()
}

/// `E|N(0,1)|^p`.
pub fn gaussian_abs_moment(p: f64) -> f64 {
    (0.5 * p * 2f64.ln() + ln_gamma((p + 1.0) / 2.0) - 0.5 * std::f64::consts::PI.ln()).exp()
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::Domain(format!("alpha = {alpha} is outside [0, 1]")))
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        Err(Error::Domain("dimension must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// `c * G / sqrt(W / nu)` with `G ~ N(0, I_d)` and one shared `W ~ chi2(nu)`.
/// Every projection onto a unit vector is a scaled univariate t, so the
/// directional moment is the same in every direction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudentT {
    pub nu: f64,
    pub d: usize,
    pub alpha: f64,
    pub scale: f64,
}

impl StudentT {
    pub fn default_alpha(nu: f64) -> f64 {
        ((nu - 1.0) / 2.0).min(1.0)
    }

    pub fn new(nu: f64, d: usize, alpha: f64) -> Result<Self> {
        check_dim(d)?;
        check_alpha(alpha)?;
        if !(1.0 + alpha < nu) || !nu.is_finite() {
            return Err(Error::Domain(format!("Student-t needs 1 + alpha < nu (nu = {nu}, alpha = {alpha})")));
        }
        let p = 1.0 + alpha;
        let scale = student_t_abs_moment(nu, p).powf(-1.0 / p);
        Ok(StudentT { nu, d, alpha, scale })
    }

    /// `E|<v, X>|^p`, infinite once `p >= nu`.
    pub fn directional_moment(&self, v: &[f64], p: f64) -> f64 {
        if p >= self.nu {
            return f64::INFINITY;
        }
        crate::linalg::norm(v).powf(p) * self.scale.powf(p) * student_t_abs_moment(self.nu, p)
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Points {
        let chi = ChiSquared::new(self.nu).expect("nu validated at construction");
        let mut out = Points::new(self.d);
        let mut row = vec![0.0; self.d];
        for _ in 0..n {
            let w: f64 = chi.sample(rng);
            let f = self.scale / (w / self.nu).sqrt();
            for x in row.iter_mut() {
                *x = f * gaussian(rng);
            }
            out.push(&row);
        }
        out
    }
}

/// Independent coordinates `+-s * U^(-1/shape)` with a fair random sign.
///
/// For symmetric independent coordinates and `p <= 2`,
/// `E|<v, Y>|^p <= E (sum v_i^2 Y_i^2)^(p/2) <= m_p * sum |v_i|^p`, which over
/// the unit sphere peaks at `d^(1 - p/2) * m_p`. The scale sets that to 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetricPareto {
    pub shape: f64,
    pub d: usize,
    pub alpha: f64,
    pub scale: f64,
}

impl SymmetricPareto {
    pub fn default_alpha(shape: f64) -> f64 {
        ((shape - 1.0) / 2.0).min(1.0)
    }

    pub fn new(shape: f64, d: usize, alpha: f64) -> Result<Self> {
        check_dim(d)?;
        check_alpha(alpha)?;
        let p = 1.0 + alpha;
        if !(p < shape) || !shape.is_finite() {
            return Err(Error::Domain(format!("Pareto needs 1 + alpha < shape (shape = {shape}, alpha = {alpha})")));
        }
        let unit_moment = shape / (shape - p);
        let scale = ((d as f64).powf(p / 2.0 - 1.0) / unit_moment).powf(1.0 / p);
        Ok(SymmetricPareto { shape, d, alpha, scale })
    }

    /// `E|Y_1|^p`, infinite once `p >= shape`.
    pub fn coordinate_moment(&self, p: f64) -> f64 {
        if p >= self.shape {
            return f64::INFINITY;
        }
        self.scale.powf(p) * self.shape / (self.shape - p)
    }

    /// Upper bound `m_p * sum |v_i|^p` on `E|<v, Y>|^p`, valid for `p <= 2`.
    pub fn directional_moment(&self, v: &[f64], p: f64) -> f64 {
        self.coordinate_moment(p) * v.iter().map(|x| x.abs().powf(p)).sum::<f64>()
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Points {
        let mut out = Points::new(self.d);
        let mut row = vec![0.0; self.d];
        for _ in 0..n {
            for x in row.iter_mut() {
                let u = 1.0 - uniform(rng);
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                *x = sign * self.scale * u.powf(-1.0 / self.shape);
            }
            out.push(&row);
        }
        out
    }
}

/// Standard Gaussian `N(0, I_d)`; `E|N|^p <= 1` for every `p <= 2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gaussian {
    pub d: usize,
    pub alpha: f64,
}

impl Gaussian {
    pub fn new(d: usize, alpha: f64) -> Result<Self> {
        check_dim(d)?;
        check_alpha(alpha)?;
        Ok(Gaussian { d, alpha })
    }

    pub fn directional_moment(&self, v: &[f64], p: f64) -> f64 {
        crate::linalg::norm(v).powf(p) * gaussian_abs_moment(p)
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Points {
        let data = (0..n * self.d).map(|_| gaussian(rng)).collect();
        Points::from_flat(self.d, data).expect("buffer length is n * d")
    }
}
