use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_open_unit, Error, Result};
use crate::sprt::Observation;

/// Population the sample is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LotModel {
    /// `size` items of which `defectives` are defective, drawn without
    /// replacement.
    Finite { size: u64, defectives: u64 },
    /// Independent items, each defective with probability `rate`.
    Infinite { rate: f64 },
}

impl LotModel {
    pub fn finite(size: u64, defectives: u64) -> Result<Self> {
        let lot = LotModel::Finite { size, defectives };
        lot.validate()?;
        Ok(lot)
    }

    /// Finite lot with `round(size · rate)` defectives.
    pub fn finite_from_rate(size: u64, rate: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rate) {
            return Err(Error::invalid("rate", format!("must lie in [0, 1], got {rate}")));
        }
        Self::finite(size, (size as f64 * rate).round() as u64)
    }

    pub fn infinite(rate: f64) -> Result<Self> {
        let lot = LotModel::Infinite { rate };
        lot.validate()?;
        Ok(lot)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LotModel::Finite { size, defectives } => {
                if size == 0 {
                    return Err(Error::invalid("lot_size", "must be at least 1"));
                }
                if defectives > size {
                    return Err(Error::invalid(
                        "defectives",
                        format!("{defectives} exceeds lot size {size}"),
                    ));
                }
                Ok(())
            }
            LotModel::Infinite { rate } => check_open_unit("rate", rate),
        }
    }

    /// Fails when `n` items cannot be drawn from this lot.
    pub fn check_sample(&self, n: u64) -> Result<()> {
        match *self {
            LotModel::Finite { size, .. } if n > size => {
                Err(Error::SampleExceedsLot { n, lot_size: size })
            }
            _ => Ok(()),
        }
    }

    /// Expected defective fraction.
    pub fn rate(&self) -> f64 {
        match *self {
            LotModel::Finite { size, defectives } => defectives as f64 / size as f64,
            LotModel::Infinite { rate } => rate,
        }
    }

    pub fn sampler(&self) -> LotSampler {
        match *self {
            LotModel::Finite { size, defectives } => LotSampler::Finite {
                items_left: size,
                defects_left: defectives,
            },
            LotModel::Infinite { rate } => LotSampler::Infinite { rate },
        }
    }
}

/// Draws one item at a time from a lot, tracking what remains of a finite
/// lot.
#[derive(Debug, Clone)]
pub enum LotSampler {
    Finite { items_left: u64, defects_left: u64 },
    Infinite { rate: f64 },
}

impl LotSampler {
    pub fn next_item<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Observation> {
        match self {
            LotSampler::Finite {
                items_left,
                defects_left,
            } => {
                if *items_left == 0 {
                    return Err(Error::SampleExceedsLot {
                        n: 1,
                        lot_size: 0,
                    });
                }
                let defect = rng.random_range(0..*items_left) < *defects_left;
                *items_left -= 1;
                if defect {
                    *defects_left -= 1;
                    Ok(Observation::Defect)
                } else {
                    Ok(Observation::Pass)
                }
            }
            LotSampler::Infinite { rate } => Ok(if rng.random_bool(*rate) {
                Observation::Defect
            } else {
                Observation::Pass
            }),
        }
    }
}

/// Number of defectives among `n` items: hypergeometric for finite lots,
/// binomial for infinite ones.
pub fn draw_defects<R: Rng + ?Sized>(rng: &mut R, lot: &LotModel, n: u64) -> Result<u64> {
    lot.validate()?;
    lot.check_sample(n)?;
    let mut sampler = lot.sampler();
    let mut defects = 0;
    for _ in 0..n {
        if sampler.next_item(rng)? == Observation::Defect {
            defects += 1;
        }
    }
    Ok(defects)
}
