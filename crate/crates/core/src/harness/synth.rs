use std::f64::consts::TAU;
use std::io::Write;

use chrono::{Datelike, Days, NaiveDate};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::ingest::{epoch, MeterReading, SLOTS_PER_DAY};
use crate::rng::keyed_rng;

use super::{HarnessError, Result};

/// Shape of the synthetic household load, in kWh per half hour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthProfile {
    pub base_load: f64,
    pub morning_amplitude: f64,
    pub morning_hour: f64,
    pub morning_width: f64,
    pub evening_amplitude: f64,
    pub evening_hour: f64,
    pub evening_width: f64,
    /// Hours the morning peak moves later on weekends.
    pub weekend_shift: f64,
    /// Relative amplitude of the yearly cycle, peaking mid January.
    pub seasonal_amplitude: f64,
    pub noise_sd: f64,
    /// Per-meter scale spread: scales drawn from [1 - h, 1 + h].
    pub heterogeneity: f64,
    /// Day code of the first generated day.
    pub start_day: u16,
}

impl Default for SynthProfile {
    fn default() -> Self {
        SynthProfile {
            base_load: 0.2,
            morning_amplitude: 0.35,
            morning_hour: 7.5,
            morning_width: 1.0,
            evening_amplitude: 0.6,
            evening_hour: 19.5,
            evening_width: 1.5,
            weekend_shift: 1.5,
            seasonal_amplitude: 0.1,
            noise_sd: 0.02,
            heterogeneity: 0.3,
            // 2009-07-13, a Monday
            start_day: 194,
        }
    }
}

impl SynthProfile {
    fn validate(&self) -> Result<()> {
        let amplitudes = [
            self.base_load,
            self.morning_amplitude,
            self.evening_amplitude,
            self.morning_width,
            self.evening_width,
        ];
        if amplitudes.iter().any(|a| !(*a > 0.0)) {
            return Err(HarnessError::Config("profile loads and peak widths must be positive".into()));
        }
        if !(self.noise_sd >= 0.0) || !(0.0..1.0).contains(&self.heterogeneity) || !(self.seasonal_amplitude >= 0.0) {
            return Err(HarnessError::Config("noise_sd, heterogeneity or seasonal_amplitude out of range".into()));
        }
        if self.start_day == 0 {
            return Err(HarnessError::Config("start_day must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-meter variation drawn once per meter.
#[derive(Debug, Clone, Copy)]
struct MeterTraits {
    scale: f64,
    jitter: f64,
}

fn traits(profile: &SynthProfile, seed: u64, meter: u32) -> MeterTraits {
    let mut rng = keyed_rng(&[seed, 0x5157, u64::from(meter)]);
    let h = profile.heterogeneity;
    MeterTraits {
        scale: if h > 0.0 { rng.random_range(1.0 - h..1.0 + h) } else { 1.0 },
        jitter: rng.random_range(-0.5..0.5),
    }
}

fn bump(t: f64, centre: f64, width: f64) -> f64 {
    (-(t - centre).powi(2) / (2.0 * width * width)).exp()
}

/// Noise-free half-hourly load of one meter.
fn shape(profile: &SynthProfile, tr: MeterTraits, date: NaiveDate, slot: u8) -> f64 {
    let t = (f64::from(slot) - 0.5) / 2.0;
    let weekend = date.weekday().number_from_monday() >= 6;
    let morning = profile.morning_hour + tr.jitter + if weekend { profile.weekend_shift } else { 0.0 };
    let evening = profile.evening_hour + tr.jitter;
    let daily = profile.base_load
        + profile.morning_amplitude * bump(t, morning, profile.morning_width)
        + profile.evening_amplitude * bump(t, evening, profile.evening_width);
    let doy = f64::from(date.ordinal());
    let season = 1.0 + profile.seasonal_amplitude * (TAU * (doy - 15.0) / 365.25).cos();
    tr.scale * daily * season
}

pub fn meter_ids(nb_sh: usize) -> impl Iterator<Item = u32> {
    (1..=nb_sh as u32).map(|i| 1000 + i)
}

/// Synthetic half-hourly readings for `nb_sh` meters over `weeks` weeks,
/// rounded to watt-hours like the trial files.
pub fn synth_generate(profile: &SynthProfile, nb_sh: usize, weeks: usize, seed: u64) -> Result<Vec<MeterReading>> {
    profile.validate()?;
    if nb_sh == 0 {
        return Err(HarnessError::Config("nb_sh must be at least 1".into()));
    }
    let days = weeks * 7;
    if usize::from(profile.start_day) + days > 1000 {
        return Err(HarnessError::Config("generated span runs past day code 999".into()));
    }
    let first = epoch() + Days::new(u64::from(profile.start_day) - 1);
    let noise = Normal::new(0.0, profile.noise_sd.max(f64::MIN_POSITIVE)).expect("finite sd");
    let mut out = Vec::with_capacity(nb_sh * days * usize::from(SLOTS_PER_DAY));
    for meter in meter_ids(nb_sh) {
        let tr = traits(profile, seed, meter);
        for d in 0..days {
            let date = first + Days::new(d as u64);
            let day_code = profile.start_day + d as u16;
            for slot in 1..=SLOTS_PER_DAY {
                let mut v = shape(profile, tr, date, slot);
                if profile.noise_sd > 0.0 {
                    let mut rng = keyed_rng(&[seed, 0x4015E, u64::from(meter), u64::from(day_code), u64::from(slot)]);
                    v += noise.sample(&mut rng);
                }
                let kwh = (v.max(0.0) * 1000.0).round() / 1000.0;
                out.push(MeterReading { meter_id: meter, day_code, slot, kwh });
            }
        }
    }
    Ok(out)
}

/// Writes readings in the raw `meter code kwh` line format.
pub fn write_raw<W: Write>(mut w: W, readings: &[MeterReading]) -> Result<()> {
    for r in readings {
        writeln!(w, "{} {} {}", r.meter_id, r.encoded_timestamp(), r.kwh)?;
    }
    w.flush()?;
    Ok(())
}
