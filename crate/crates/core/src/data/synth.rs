//! Seeded generator for graduate-admission shaped tables.
//!
//! Rows carry GRE, TOEFL, SOP, LOR, CGPA, Research, gender, parental
//! education and a continuous admit probability. The probability is a
//! logistic function of the academic scores, so GRE, TOEFL and CGPA
//! dominate. A latent ability term shifted by group membership controls
//! the difference in admission base rates between groups, and a number
//! of rows can be overwritten with profiles that contradict their label.

use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::table::{Cell, Column, DataTable};
use crate::data::clean::CleaningRule;
use crate::error::{Error, Result};
use crate::rng;

pub const PROBABILITY_COLUMN: &str = "Chance_of_Admit";

/// Parental-education levels, in the order they are sampled.
pub const PARENTAL_LEVELS: [&str; 6] = [
    "some high school",
    "high school",
    "some college",
    "associate's degree",
    "bachelor's degree",
    "master's degree",
];
const PARENTAL_WEIGHTS: [f64; 6] = [0.15, 0.18, 0.20, 0.12, 0.22, 0.13];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub rows: usize,
    /// Rows overwritten with a profile that contradicts their label.
    pub anomalies: usize,
    /// Standard deviation of the logit noise.
    pub noise: f64,
    /// Latent-ability shift between female and male rows (female higher).
    pub gender_offset: f64,
    /// Latent-ability shift between high and low parental education.
    pub parental_offset: f64,
    pub intercept: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            rows: 400,
            anomalies: 39,
            noise: 0.8,
            gender_offset: 0.3,
            parental_offset: 0.35,
            intercept: 0.7,
        }
    }
}

impl SyntheticConfig {
    /// Same generator with group offsets switched off.
    pub fn unbiased(mut self) -> Self {
        self.gender_offset = 0.0;
        self.parental_offset = 0.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 {
            return Err(Error::Config("synthetic rows must be > 0".into()));
        }
        if self.anomalies > self.rows {
            return Err(Error::Config(format!(
                "cannot inject {} anomalies into {} rows",
                self.anomalies, self.rows
            )));
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return Err(Error::Config("noise must be finite and >= 0".into()));
        }
        for (name, v) in [
            ("gender_offset", self.gender_offset),
            ("parental_offset", self.parental_offset),
            ("intercept", self.intercept),
        ] {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    /// Reads a key-value (TOML) file; absent keys keep their defaults.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: SyntheticConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn round_to(v: f64, step: f64) -> f64 {
    (v / step).round() * step
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

struct Profile {
    gre: f64,
    toefl: f64,
    sop: f64,
    lor: f64,
    cgpa: f64,
    research: f64,
}

fn admit_logit(p: &Profile, cfg: &SyntheticConfig) -> f64 {
    1.3 * (p.gre - 316.0) / 11.3
        + 1.1 * (p.toefl - 107.0) / 6.0
        + 1.6 * (p.cgpa - 8.6) / 0.6
        + 0.15 * (p.sop - 3.4)
        + 0.15 * (p.lor - 3.4)
        + 0.2 * p.research
        + cfg.intercept
}

/// Generates a deterministic table for `seed`.
pub fn generate_synthetic(config: &SyntheticConfig, seed: u64) -> Result<DataTable> {
    config.validate()?;
    let mut rng = rng::stream(seed, "synthetic", 0);
    let normal = |rng: &mut rng::Rng| -> f64 { StandardNormal.sample(rng) };
    let total: f64 = PARENTAL_WEIGHTS.iter().sum();
    let rule = CleaningRule::default();

    let mut records = Vec::with_capacity(config.rows);
    for _ in 0..config.rows {
        let female = rng.random_bool(0.5);
        let mut u = rng.random::<f64>() * total;
        let mut level = PARENTAL_LEVELS.len() - 1;
        for (k, w) in PARENTAL_WEIGHTS.iter().enumerate() {
            if u < *w {
                level = k;
                break;
            }
            u -= w;
        }
        let high_parental = level >= 4;

        let ability = normal(&mut rng)
            + config.gender_offset * if female { 0.5 } else { -0.5 }
            + config.parental_offset * if high_parental { 0.5 } else { -0.5 };
        let mix = |rng: &mut rng::Rng, load: f64| load * ability + (1.0 - load * load).sqrt() * normal(rng);

        let profile = Profile {
            gre: (316.0 + 11.3 * mix(&mut rng, 0.8)).round().clamp(260.0, 340.0),
            toefl: (107.0 + 6.0 * mix(&mut rng, 0.8)).round().clamp(0.0, 120.0),
            sop: round_to(3.4 + 0.9 * mix(&mut rng, 0.5), 0.5).clamp(1.0, 5.0),
            lor: round_to(3.4 + 0.9 * mix(&mut rng, 0.5), 0.5).clamp(1.0, 5.0),
            cgpa: round2(8.6 + 0.6 * mix(&mut rng, 0.8)).clamp(0.0, 10.0),
            research: if rng.random_bool(sigmoid(0.3 + 0.8 * ability)) { 1.0 } else { 0.0 },
        };
        let noise = config.noise * normal(&mut rng);
        let mut chance = round2(sigmoid(admit_logit(&profile, config) + noise));

        // Only injected anomalies may contradict the profile rule.
        let admitted = chance >= 0.5;
        if profile.gre >= rule.gre_min && profile.cgpa >= rule.cgpa_min && !admitted {
            chance = round2(1.0 - chance);
        } else if profile.gre <= rule.gre_max && profile.cgpa <= rule.cgpa_max && admitted {
            chance = round2(1.0 - chance).min(0.49);
        }
        records.push((profile, female, level, chance));
    }

    let anomaly_rows = sample(&mut rng, config.rows, config.anomalies).into_vec();
    for (k, &i) in anomaly_rows.iter().enumerate() {
        let (profile, _, _, chance) = &mut records[i];
        if k % 2 == 0 {
            profile.gre = f64::from(rng.random_range(320u32..=340));
            profile.cgpa = round2(rng.random_range(9.5..=10.0));
            *chance = round2(rng.random_range(0.20..0.45));
        } else {
            profile.gre = f64::from(rng.random_range(290u32..=300));
            profile.cgpa = round2(rng.random_range(6.8..=8.0));
            *chance = round2(rng.random_range(0.55..0.85));
        }
    }

    let mut table = DataTable::new(vec![
        Column::numeric("GRE"),
        Column::numeric("TOEFL"),
        Column::numeric("SOP"),
        Column::numeric("LOR"),
        Column::numeric("CGPA"),
        Column::numeric("Research"),
        Column::categorical("gender"),
        Column::categorical("parental_education"),
        Column::numeric(PROBABILITY_COLUMN),
    ])?;
    for (i, (p, female, level, chance)) in records.into_iter().enumerate() {
        table.push_row(
            i as u64,
            vec![
                Cell::Number(p.gre),
                Cell::Number(p.toefl),
                Cell::Number(p.sop),
                Cell::Number(p.lor),
                Cell::Number(p.cgpa),
                Cell::Number(p.research),
                Cell::Category(if female { "female" } else { "male" }.into()),
                Cell::Category(PARENTAL_LEVELS[level].into()),
                Cell::Number(chance),
            ],
        )?;
    }
    Ok(table)
}
