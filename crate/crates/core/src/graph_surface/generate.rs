//! Smooth height fields: constants, cosine bumps and band-limited random
//! trigonometric polynomials. All are analytic, so the same surface can be
//! sampled at any resolution.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// One Fourier mode `amp · cos(2π(kx x/P_x + ky y/P_y) + phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub kx: i32,
    pub ky: i32,
    pub amp: f64,
    pub phase: f64,
}

/// `base + Σ modes`, periodic on `[0, P_x) × [0, P_y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolynomial {
    pub base: f64,
    pub modes: Vec<Mode>,
}

impl TrigPolynomial {
    pub fn constant(base: f64) -> Self {
        TrigPolynomial {
            base,
            modes: Vec::new(),
        }
    }

    pub fn eval(&self, x: f64, y: f64, px: f64, py: f64) -> f64 {
        let mut v = self.base;
        for m in &self.modes {
            v += m.amp * (2.0 * PI * (m.kx as f64 * x / px + m.ky as f64 * y / py) + m.phase).cos();
        }
        v
    }

    /// Upper bound on `|value − base|`.
    pub fn amplitude_bound(&self) -> f64 {
        self.modes.iter().map(|m| m.amp.abs()).sum()
    }

    /// Random modes with `max(|kx|, |ky|) ≤ bandlimit`, rescaled so the
    /// deviation from `base` never exceeds `amp`.
    pub fn random(base: f64, amp: f64, bandlimit: u32, seed: u64) -> Self {
        Self::random_filtered(base, amp, bandlimit, seed, |_, _| true)
    }

    /// Random modes depending on x only (`ky = 0`).
    pub fn random_in_x(base: f64, amp: f64, bandlimit: u32, seed: u64) -> Self {
        Self::random_filtered(base, amp, bandlimit, seed, |_, ky| ky == 0)
    }

    /// Random modes depending on y only (`kx = 0`).
    pub fn random_in_y(base: f64, amp: f64, bandlimit: u32, seed: u64) -> Self {
        Self::random_filtered(base, amp, bandlimit, seed, |kx, _| kx == 0)
    }

    fn random_filtered(
        base: f64,
        amp: f64,
        bandlimit: u32,
        seed: u64,
        keep: impl Fn(i32, i32) -> bool,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = bandlimit as i32;
        let mut modes = Vec::new();
        // Half-plane of wave vectors: each real mode once.
        for kx in 0..=l {
            for ky in -l..=l {
                if (kx == 0 && ky <= 0) || !keep(kx, ky) {
                    continue;
                }
                // Decay with frequency keeps the surface visibly smooth.
                let weight = 1.0 / (1.0 + (kx * kx + ky * ky) as f64);
                let a: f64 = rng.gen_range(-1.0..1.0) * weight;
                let phase: f64 = rng.gen_range(0.0..2.0 * PI);
                modes.push(Mode {
                    kx,
                    ky,
                    amp: a,
                    phase,
                });
            }
        }
        let mut poly = TrigPolynomial { base, modes };
        let bound = poly.amplitude_bound();
        if bound > 0.0 {
            for m in &mut poly.modes {
                m.amp *= amp / bound;
            }
        }
        poly
    }
}

/// Textual surface generators accepted on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum SurfaceGen {
    /// `const:r0`
    Const { r0: f64 },
    /// `cos:r0,ax,kx,ay,ky` → `r0 + ax cos(2π kx x/P_x) + ay cos(2π ky y/P_y)`
    Cos {
        r0: f64,
        ax: f64,
        kx: i32,
        ay: f64,
        ky: i32,
    },
    /// `random:r0,amp,bandlimit,seed`
    Random {
        r0: f64,
        amp: f64,
        bandlimit: u32,
        seed: u64,
    },
}

impl SurfaceGen {
    pub fn polynomial(&self) -> TrigPolynomial {
        match *self {
            SurfaceGen::Const { r0 } => TrigPolynomial::constant(r0),
            SurfaceGen::Cos { r0, ax, kx, ay, ky } => TrigPolynomial {
                base: r0,
                modes: vec![
                    Mode {
                        kx,
                        ky: 0,
                        amp: ax,
                        phase: 0.0,
                    },
                    Mode {
                        kx: 0,
                        ky,
                        amp: ay,
                        phase: 0.0,
                    },
                ],
            },
            SurfaceGen::Random {
                r0,
                amp,
                bandlimit,
                seed,
            } => TrigPolynomial::random(r0, amp, bandlimit, seed),
        }
    }
}

fn parse_list(body: &str, expected: usize, spec: &str) -> Result<Vec<String>> {
    let parts: Vec<String> = body.split(',').map(|p| p.trim().to_string()).collect();
    if parts.len() != expected {
        return Err(Error::config(format!(
            "generator '{spec}' needs {expected} comma-separated values"
        )));
    }
    Ok(parts)
}

fn num<T: FromStr>(s: &str, spec: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::config(format!("cannot parse '{s}' in generator '{spec}'")))
}

impl FromStr for SurfaceGen {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let (kind, body) = spec
            .split_once(':')
            .ok_or_else(|| Error::config(format!("generator '{spec}' must look like kind:args")))?;
        match kind {
            "const" => {
                let p = parse_list(body, 1, spec)?;
                Ok(SurfaceGen::Const {
                    r0: num(&p[0], spec)?,
                })
            }
            "cos" => {
                let p = parse_list(body, 5, spec)?;
                Ok(SurfaceGen::Cos {
                    r0: num(&p[0], spec)?,
                    ax: num(&p[1], spec)?,
                    kx: num(&p[2], spec)?,
                    ay: num(&p[3], spec)?,
                    ky: num(&p[4], spec)?,
                })
            }
            "random" => {
                let p = parse_list(body, 4, spec)?;
                Ok(SurfaceGen::Random {
                    r0: num(&p[0], spec)?,
                    amp: num(&p[1], spec)?,
                    bandlimit: num(&p[2], spec)?,
                    seed: num(&p[3], spec)?,
                })
            }
            other => Err(Error::config(format!(
                "unknown generator kind '{other}' (expected const, cos or random)"
            ))),
        }
    }
}
