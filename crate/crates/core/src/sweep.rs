//! Factorial embed/extract sweeps producing one row per trial.

use rayon::prelude::*;

use crate::analysis::{sig12, CorrelationReport};
use crate::error::Result;
use crate::prng::{splitmix64, XorShift64Star};
use crate::synth::SynthSpec;
use crate::watermark::{self, BitMatrix, GrayImage, ShiftMode, SpreadCode, WatermarkPlan};

pub const CSV_HEADER: &str = "q,period,shift_mode,gain_k,trial,noise_pixels,mean_abs_autocorr";

#[derive(Debug, Clone)]
pub enum CoverSource {
    Image(GrayImage),
    /// Seeded kinds are re-rendered for every trial with the trial key.
    Synth(SynthSpec),
}

impl CoverSource {
    pub fn dims(&self) -> (usize, usize) {
        match self {
            CoverSource::Image(img) => (img.width(), img.height()),
            CoverSource::Synth(s) => (s.width, s.height),
        }
    }

    fn for_trial(&self, trial_key: u64) -> Result<GrayImage> {
        match self {
            CoverSource::Image(img) => Ok(img.clone()),
            CoverSource::Synth(s) if s.kind.is_random() => s.with_seed(trial_key).render(),
            CoverSource::Synth(s) => s.render(),
        }
    }
}

#[derive(Debug, Clone)]
pub enum MarkSource {
    Fixed(BitMatrix),
    /// A fresh mark per trial with 15-85% black bits.
    Random {
        cols: usize,
        rows: usize,
    },
}

impl MarkSource {
    pub fn dims(&self) -> (usize, usize) {
        match self {
            MarkSource::Fixed(m) => (m.cols(), m.rows()),
            MarkSource::Random { cols, rows } => (*cols, *rows),
        }
    }

    fn for_trial(&self, trial_key: u64) -> Result<BitMatrix> {
        match self {
            MarkSource::Fixed(m) => Ok(m.clone()),
            &MarkSource::Random { cols, rows } => {
                let n = cols * rows;
                let lo = (n * 15).div_ceil(100);
                let hi = (n * 85 / 100).max(lo);
                let mut rng = XorShift64Star::new(trial_key ^ 0x6D61_726B);
                let black = rng.range_inclusive(lo as i64, hi as i64) as usize;
                BitMatrix::random(cols, rows, black, rng.next_u64())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub cover: CoverSource,
    pub mark: MarkSource,
    pub codes: Vec<SpreadCode>,
    pub gains: Vec<u32>,
    pub modes: Vec<ShiftMode>,
    pub trials: usize,
    pub key: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub code: SpreadCode,
    pub period: usize,
    pub shift_mode: ShiftMode,
    pub gain_k: u32,
    pub trial: usize,
    pub noise_pixels: usize,
    /// Mean `|autocorrelation|` over the plan's per-bit shifts.
    pub mean_abs_autocorr: f64,
}

impl SweepRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.code,
            self.period,
            self.shift_mode,
            self.gain_k,
            self.trial,
            self.noise_pixels,
            sig12(self.mean_abs_autocorr)
        )
    }
}

/// Key for trial `trial`; shared by every (code, mode, gain) cell so that they
/// see identical covers and marks.
pub fn trial_key(key: u64, trial: usize) -> u64 {
    splitmix64(key ^ splitmix64(trial as u64))
}

/// Runs one embed/extract trial and scores it.
pub fn run_trial(cover: &GrayImage, mark: &BitMatrix, plan: &WatermarkPlan) -> Result<usize> {
    let marked = watermark::embed(cover, mark, plan)?;
    let result = watermark::extract(&marked, plan)?;
    watermark::noise_pixels(&result.recovered, mark)
}

/// Runs the full factorial sweep. Rows come back in canonical order
/// (code, mode, gain, trial as listed in the config) regardless of scheduling.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    let cover_dims = config.cover.dims();
    let mark_dims = config.mark.dims();
    let mut cells = Vec::new();
    for &code in &config.codes {
        for &mode in &config.modes {
            for &gain in &config.gains {
                for trial in 0..config.trials {
                    cells.push((code, mode, gain, trial));
                }
            }
        }
    }
    cells
        .into_par_iter()
        .map(|(code, mode, gain, trial)| {
            let tk = trial_key(config.key, trial);
            let cover = config.cover.for_trial(tk)?;
            let mark = config.mark.for_trial(tk)?;
            let plan = watermark::make_plan(code, gain, cover_dims, mark_dims, mode, tk)?;
            let report = CorrelationReport::from_chips(plan.chips())?;
            let mean_abs_autocorr = plan
                .shifts()
                .iter()
                .map(|&s| report.values[s].abs())
                .sum::<f64>()
                / plan.shifts().len() as f64;
            Ok(SweepRow {
                code,
                period: plan.period(),
                shift_mode: mode,
                gain_k: gain,
                trial,
                noise_pixels: run_trial(&cover, &mark, &plan)?,
                mean_abs_autocorr,
            })
        })
        .collect()
}

pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv_line());
        out.push('\n');
    }
    out
}
