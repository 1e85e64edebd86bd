// SPDX-License-Identifier: Apache-2.0

//! Worked examples with their closed forms attached.
//!
//! * `kolmogorov`: Brownian motion and its time integral.
//! * `ou_area`: an Ornstein–Uhlenbeck process paired with its area.
//! * `sec43`: `A = [[−1, 0], [1, 2]]`, same fluctuations but a different
//!   first-order correction of the minimal-like path.
//! * `iterated_kolmogorov:d`: Brownian motion with its first `d − 1`
//!   iterated time integrals, `2 ≤ d ≤ 8`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fluct::{hankel_v, hankel_v_inverse};
use crate::matcore::Matrix;
use crate::model::{ModelSpec, UBlocks};
use crate::scalar::Scalar;

pub const ITERATED_MIN_DIM: usize = 2;
pub const ITERATED_MAX_DIM: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PresetName {
    Kolmogorov,
    OuArea,
    Sec43,
    IteratedKolmogorov(usize),
}

impl PresetName {
    /// The three two-dimensional presets.
    pub const PLANAR: [PresetName; 3] = [PresetName::Kolmogorov, PresetName::OuArea, PresetName::Sec43];

    /// Every preset, with the iterated family at each supported dimension.
    pub fn all() -> Vec<PresetName> {
        let mut out = Self::PLANAR.to_vec();
        out.extend((ITERATED_MIN_DIM..=ITERATED_MAX_DIM).map(PresetName::IteratedKolmogorov));
        out
    }

    pub fn dim(&self) -> usize {
        match self {
            PresetName::IteratedKolmogorov(d) => *d,
            _ => 2,
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PresetName::Kolmogorov => f.write_str("kolmogorov"),
            PresetName::OuArea => f.write_str("ou_area"),
            PresetName::Sec43 => f.write_str("sec43"),
            PresetName::IteratedKolmogorov(d) => write!(f, "iterated_kolmogorov:{d}"),
        }
    }
}

impl FromStr for PresetName {
    type Err = Error;

    /// Accepts `kolmogorov`, `ou_area`, `sec43`, `iterated_kolmogorov:d` and
    /// `iterated_kolmogorov(d)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "kolmogorov" => return Ok(PresetName::Kolmogorov),
            "ou_area" => return Ok(PresetName::OuArea),
            "sec43" => return Ok(PresetName::Sec43),
            _ => {}
        }
        let arg = s
            .strip_prefix("iterated_kolmogorov:")
            .or_else(|| s.strip_prefix("iterated_kolmogorov(").and_then(|r| r.strip_suffix(')')))
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))?;
        let d: usize = arg.trim().parse().map_err(|_| Error::UnknownPreset(s.to_string()))?;
        if !(ITERATED_MIN_DIM..=ITERATED_MAX_DIM).contains(&d) {
            return Err(Error::UnsupportedDimension {
                preset: "iterated_kolmogorov",
                dim: d,
                min: ITERATED_MIN_DIM,
                max: ITERATED_MAX_DIM,
            });
        }
        Ok(PresetName::IteratedKolmogorov(d))
    }
}

/// One printed expansion coefficient: `α_ij ∋ value·ε^power`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpansionTerm<T> {
    pub row: usize,
    pub col: usize,
    pub power: i32,
    pub value: T,
}

#[derive(Clone, Debug)]
pub struct Preset<T> {
    name: PresetName,
    spec: ModelSpec<T>,
}

/// Looks up a preset by name.
pub fn preset<T: Scalar>(name: &str) -> Result<Preset<T>> {
    Ok(Preset::new(name.parse()?))
}

fn m2<T: Scalar>(a: T, b: T, c: T, d: T) -> Matrix<T> {
    Matrix::from_fn(2, 2, |i, j| [[a, b], [c, d]][i][j])
}

fn shift<T: Scalar>(d: usize) -> Matrix<T> {
    Matrix::from_fn(d, d, |i, j| if i == j + 1 { T::one() } else { T::zero() })
}

impl<T: Scalar> Preset<T> {
    pub fn new(name: PresetName) -> Self {
        let lit = T::lit;
        let (a, b) = match name {
            PresetName::Kolmogorov => (shift(2), Matrix::column(&[lit(1.0), lit(0.0)])),
            PresetName::OuArea => (m2(lit(-1.0), lit(0.0), lit(1.0), lit(0.0)), Matrix::column(&[lit(1.0), lit(0.0)])),
            PresetName::Sec43 => (m2(lit(-1.0), lit(0.0), lit(1.0), lit(2.0)), Matrix::column(&[lit(1.0), lit(0.0)])),
            PresetName::IteratedKolmogorov(d) => {
                let mut e1 = vec![T::zero(); d];
                e1[0] = T::one();
                (shift(d), Matrix::column(&e1))
            }
        };
        let spec = ModelSpec::new(a, b).expect("presets are controllable");
        Self { name, spec }
    }

    pub fn name(&self) -> PresetName {
        self.name
    }

    pub fn spec(&self) -> &ModelSpec<T> {
        &self.spec
    }

    pub fn into_spec(self) -> ModelSpec<T> {
        self.spec
    }

    /// `e^{εtA}`.
    pub fn exp_ta(&self, eps: T, t: T) -> Matrix<T> {
        let r = eps * t;
        let one = T::one();
        match self.name {
            PresetName::Kolmogorov => m2(one, T::zero(), r, one),
            PresetName::OuArea => m2((-r).exp(), T::zero(), one - (-r).exp(), one),
            PresetName::Sec43 => {
                let third = one / T::lit(3.0);
                m2((-r).exp(), T::zero(), third * ((r + r).exp() - (-r).exp()), (r + r).exp())
            }
            PresetName::IteratedKolmogorov(d) => Matrix::from_fn(d, d, |i, j| {
                if i >= j {
                    let k = (i - j) as i32;
                    r.powi(k) / T::lit((1..=k).map(f64::from).product())
                } else {
                    T::zero()
                }
            }),
        }
    }

    /// `Γ_t`, where printed.
    pub fn gamma(&self, eps: T, t: T) -> Option<Matrix<T>> {
        let lit = T::lit;
        match self.name {
            PresetName::Kolmogorov => {
                let off = -lit(0.5) * eps * t * t;
                Some(m2(t, off, off, eps * eps * t * t * t / lit(3.0)))
            }
            PresetName::OuArea => {
                let e = (eps * t).exp();
                let h = T::one() / (lit(2.0) * eps);
                let off = -h * (e - T::one()) * (e - T::one());
                Some(m2(h * (e * e - T::one()), off, off, h * (e * e - lit(4.0) * e + lit(2.0) * eps * t + lit(3.0))))
            }
            _ => None,
        }
    }

    /// `e^{εtA}Γ_t`, where printed.
    pub fn exp_gamma(&self, eps: T, t: T) -> Option<Matrix<T>> {
        let lit = T::lit;
        let r = eps * t;
        let (ep, em) = (r.exp(), (-r).exp());
        match self.name {
            PresetName::Kolmogorov => {
                let q = lit(0.5) * eps * t * t;
                Some(m2(t, -q, q, -eps * eps * t * t * t / lit(6.0)))
            }
            PresetName::OuArea => {
                let h = T::one() / (lit(2.0) * eps);
                let c = h * (ep + em - lit(2.0));
                Some(m2(h * (ep - em), -c, c, -h * (ep - em - lit(2.0) * r)))
            }
            PresetName::Sec43 => {
                let (e2p, e2m) = ((r + r).exp(), (-r - r).exp());
                let s = T::one() / (lit(6.0) * eps);
                Some(m2(
                    lit(3.0) * s * (ep - em),
                    -s * (lit(2.0) * e2m - lit(3.0) * em + ep),
                    s * (lit(2.0) * e2p - lit(3.0) * ep + em),
                    -lit(0.5) * s * (e2p - lit(2.0) * ep + lit(2.0) * em - e2m),
                ))
            }
            PresetName::IteratedKolmogorov(_) => None,
        }
    }

    /// `α_t`, where printed.
    pub fn alpha(&self, eps: T, t: T) -> Option<Matrix<T>> {
        let lit = T::lit;
        let one = T::one();
        match self.name {
            PresetName::Kolmogorov => Some(m2(
                lit(3.0) * t * t - lit(2.0) * t,
                (lit(6.0) * t - lit(6.0) * t * t) / eps,
                (t * t * t - t * t) * eps,
                lit(3.0) * t * t - lit(2.0) * t * t * t,
            )),
            PresetName::OuArea => {
                let e = |x: T| x.exp();
                let eps_t = eps * t;
                let den1 = (e(eps) - one) * ((eps - lit(2.0)) * e(eps) + eps + lit(2.0));
                let den2 = (eps + lit(2.0)) * e(-eps) + eps - lit(2.0);
                let a11 = (one - e(-eps_t))
                    * ((eps - one) * e(eps + eps_t) + e(eps_t) + (eps + one) * e(eps) - e(lit(2.0) * eps))
                    / den1;
                let a12 = (e(-eps) - e(-(eps - eps_t)) - e(-eps_t) + one) / den2;
                let a21 = (e(lit(2.0) * eps) - one + (eps + one) * e(eps - eps_t) + e(eps_t)
                    + (eps - one) * e(eps + eps_t)
                    - eps_t * (e(eps) - one) * (e(eps) - one)
                    - lit(2.0) * eps * e(eps)
                    - e(lit(2.0) * eps - eps_t))
                    / den1;
                let a22 = (e(-eps_t) - e(-(eps - eps_t)) + (eps_t + one) * e(-eps) + eps_t - one) / den2;
                Some(m2(a11, a12, a21, a22))
            }
            _ => None,
        }
    }

    /// Printed small-ε expansion terms of `α_t` beyond the limit: for `sec43`
    /// the first corrections, for `ou_area` and `kolmogorov` the leading
    /// terms.
    pub fn alpha_terms(&self, t: T) -> Option<Vec<ExpansionTerm<T>>> {
        let lit = T::lit;
        let (t2, t3) = (t * t, t * t * t);
        let term = |row, col, power, value| ExpansionTerm { row, col, power, value };
        match self.name {
            PresetName::Sec43 => Some(vec![
                term(0, 0, 1, lit(2.0) * t2 - lit(2.0) * t3),
                term(0, 1, 0, lit(4.0) * t3 - lit(4.0) * t),
                term(1, 0, 1, t3 - t2),
                term(1, 1, 1, lit(2.0) * t3 - lit(2.0) * t2),
            ]),
            PresetName::Kolmogorov | PresetName::OuArea => Some(vec![
                term(0, 0, 0, lit(3.0) * t2 - lit(2.0) * t),
                term(0, 1, -1, lit(6.0) * t - lit(6.0) * t2),
                term(1, 0, 1, t3 - t2),
                term(1, 1, 0, lit(3.0) * t2 - lit(2.0) * t3),
            ]),
            PresetName::IteratedKolmogorov(_) => None,
        }
    }

    /// Printed u-blocks.
    pub fn u_blocks(&self) -> UBlocks<T> {
        let d = self.name.dim();
        let blocks = match self.name {
            PresetName::IteratedKolmogorov(_) => (0..d)
                .map(|i| Matrix::from_diag(&[T::one() / T::lit((1..=i).map(|k| k as f64).product())]))
                .collect(),
            _ => vec![Matrix::identity(1), Matrix::identity(1)],
        };
        UBlocks::new(blocks).expect("printed u-blocks are valid")
    }

    /// `V`.
    pub fn v(&self) -> Matrix<T> {
        hankel_v(self.name.dim())
    }

    /// `V⁻¹`.
    pub fn v_inv(&self) -> Matrix<T> {
        match self.name {
            PresetName::IteratedKolmogorov(d) => hankel_v_inverse(d).expect("supported dimension"),
            _ => m2(T::lit(-2.0), T::lit(6.0), T::lit(-6.0), T::lit(12.0)),
        }
    }

    /// `M(t) = J_tVJ_tV⁻¹`.
    pub fn mean_map(&self, t: T) -> Matrix<T> {
        match self.name {
            PresetName::IteratedKolmogorov(d) => {
                let inv = crate::fluct::hankel_inverse_table(d);
                let fact = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
                Matrix::from_fn(d, d, |i, j| {
                    (0..d)
                        .map(|l| {
                            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
                            T::lit(sign * inv[l][j] as f64 / fact(i + l + 1)) * t.powi((i + l + 1) as i32)
                        })
                        .sum()
                })
            }
            _ => {
                let lit = T::lit;
                let (t2, t3) = (t * t, t * t * t);
                m2(
                    lit(3.0) * t2 - lit(2.0) * t,
                    lit(6.0) * t - lit(6.0) * t2,
                    t3 - t2,
                    lit(3.0) * t2 - lit(2.0) * t3,
                )
            }
        }
    }
}
