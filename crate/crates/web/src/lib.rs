//! wasm-bindgen bindings behind `www/index.html`.
//!
//! Build with `wasm-pack build crates/web --target web --out-dir www/pkg`
//! and serve `crates/web/www` statically.

use cms_bnp::models::PypParams;
use cms_bnp::posterior::{dp_posterior_single, fit_theta_empirical_bayes, pyp_posterior_multi, PypPosteriorContext};
use cms_bnp::sketch::{cmm_estimate, cms_estimate, SketchMatrix};
use cms_bnp::{hashing, posterior, specialfn};
use wasm_bindgen::prelude::*;

fn js(e: cms_bnp::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Single-hash PYP posterior `p(l | c)` for `l = 0..=c`.
pub fn pyp_pmf(alpha: f64, theta: f64, j: u32, m: u32, c: u32) -> cms_bnp::Result<Vec<f64>> {
    let params = PypParams::new(alpha, theta)?;
    if alpha == 0.0 {
        return dp_pmf(theta, j, c);
    }
    let ctx = PypPosteriorContext::new(params, j as usize, m as u64)?;
    let row = cms_bnp::sketch::HashedRow::new(vec![c as u64]);
    Ok(pyp_posterior_multi(&ctx, &row)?.probs())
}

pub fn dp_pmf(theta: f64, j: u32, c: u32) -> cms_bnp::Result<Vec<f64>> {
    Ok(dp_posterior_single(theta, j as usize, c as u64)?.probs())
}

pub fn stable_densities(alpha: f64, xs: &[f64]) -> cms_bnp::Result<Vec<f64>> {
    let density = specialfn::StableDensity::new(alpha)?;
    xs.iter()
        .map(|&x| {
            if x > 0.0 {
                Ok(density.logpdf(x).exp())
            } else {
                Err(cms_bnp::Error::InvalidArgument(format!("density needs x > 0, got {x}")))
            }
        })
        .collect()
}

#[wasm_bindgen(js_name = pypPosterior)]
pub fn pyp_posterior(alpha: f64, theta: f64, j: u32, m: u32, c: u32) -> Result<Vec<f64>, JsError> {
    pyp_pmf(alpha, theta, j, m, c).map_err(js)
}

#[wasm_bindgen(js_name = dpPosterior)]
pub fn dp_posterior(theta: f64, j: u32, c: u32) -> Result<Vec<f64>, JsError> {
    dp_pmf(theta, j, c).map_err(js)
}

#[wasm_bindgen(js_name = stableDensity)]
pub fn stable_density(alpha: f64, xs: Vec<f64>) -> Result<Vec<f64>, JsError> {
    stable_densities(alpha, &xs).map_err(js)
}

/// A sketch fed from pasted text, split on whitespace.
#[wasm_bindgen]
pub struct DemoSketch {
    sketch: SketchMatrix,
    theta: Option<f64>,
}

impl DemoSketch {
    pub fn build(rows: u32, buckets: u32, seed: u32) -> cms_bnp::Result<DemoSketch> {
        let family = hashing::draw_family(rows as usize, buckets as usize, seed as u64)?;
        Ok(DemoSketch { sketch: SketchMatrix::new(family), theta: None })
    }

    /// `[cms, cmm, dp-mean, θ̂]` for one token.
    pub fn estimates(&mut self, token: &str) -> cms_bnp::Result<Vec<f64>> {
        if self.sketch.total() == 0 {
            return Err(cms_bnp::Error::InvalidArgument("the sketch is empty".into()));
        }
        let theta = match self.theta {
            Some(t) => t,
            None => *self.theta.insert(fit_theta_empirical_bayes(&self.sketch)?),
        };
        let row = self.sketch.hashed_row(hashing::tokenize(token.as_bytes()));
        let cmm = if self.sketch.buckets() >= 2 {
            cmm_estimate(&row, self.sketch.total(), self.sketch.buckets())?
        } else {
            f64::NAN
        };
        let dp = posterior::dp_posterior_multi(theta, self.sketch.buckets(), &row)?.mean();
        Ok(vec![cms_estimate(&row) as f64, cmm, dp, theta])
    }
}

#[wasm_bindgen]
impl DemoSketch {
    #[wasm_bindgen(constructor)]
    pub fn new(rows: u32, buckets: u32, seed: u32) -> Result<DemoSketch, JsError> {
        DemoSketch::build(rows, buckets, seed).map_err(js)
    }

    /// Adds every whitespace-separated word of `text`; returns the new stream length.
    pub fn ingest(&mut self, text: &str) -> f64 {
        self.sketch.extend(text.split_whitespace().map(|w| hashing::tokenize(w.as_bytes())));
        self.theta = None;
        self.sketch.total() as f64
    }

    pub fn total(&self) -> f64 {
        self.sketch.total() as f64
    }

    pub fn query(&mut self, token: &str) -> Result<Vec<f64>, JsError> {
        self.estimates(token).map_err(js)
    }
}
