//! `key = value` experiment configuration.

use crate::error::{Error, Result};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Setting {
    Realizable,
    Rcn,
    Agnostic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pipeline {
    /// A single weak-learner call matched to the noise setting.
    Weak,
    /// Quantum boosting over the agnostic parity learner.
    Boost,
    /// Classical boosting over the exact parity learner.
    Classical,
    /// One prefix search against the biased oracle of the channel.
    Qgl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flips {
    Adversarial,
    Random,
}

macro_rules! named_enum {
    ($ty:ident { $($variant:ident => $name:literal),+ $(,)? }) => {
        impl $ty {
            pub fn name(self) -> &'static str {
                match self { $($ty::$variant => $name),+ }
            }
        }

        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($ty::$variant),)+
                    other => Err(Error::Config(format!(
                        "unknown {} `{other}` (expected one of: {})",
                        stringify!($ty).to_lowercase(),
                        [$($name),+].join(", ")
                    ))),
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }
    };
}

named_enum!(Setting { Realizable => "realizable", Rcn => "rcn", Agnostic => "agnostic" });
named_enum!(Pipeline { Weak => "weak", Boost => "boost", Classical => "classical", Qgl => "qgl" });
named_enum!(Flips { Adversarial => "adversarial", Random => "random" });

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub setting: Setting,
    pub pipeline: Pipeline,
    pub n: usize,
    pub t: usize,
    pub eps: f64,
    pub delta: f64,
    pub kappa: f64,
    pub eta: f64,
    /// RCN flip rate, or fraction of flipped inputs in the agnostic setting.
    pub noise: f64,
    pub flips: Flips,
    /// Prefix-search threshold for the `qgl` pipeline.
    pub tau: f64,
    pub rounds: usize,
    /// Examples per margin estimate; `None` uses `⌈200 ln(1/δ)/(η²ε²)⌉`.
    pub m: Option<u64>,
    pub trials: usize,
    pub seed: u64,
    pub adversarial_failures: bool,
    pub wall_time: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            setting: Setting::Realizable,
            pipeline: Pipeline::Weak,
            n: 8,
            t: 4,
            eps: 0.2,
            delta: 0.1,
            kappa: 0.1,
            eta: 0.25,
            noise: 0.1,
            flips: Flips::Adversarial,
            tau: 0.5,
            rounds: 400,
            m: None,
            trials: 10,
            seed: 0,
            adversarial_failures: false,
            wall_time: false,
        }
    }
}

pub const KEYS: [&str; 17] = [
    "setting",
    "pipeline",
    "n",
    "t",
    "eps",
    "delta",
    "kappa",
    "eta",
    "noise",
    "flips",
    "tau",
    "rounds",
    "m",
    "trials",
    "seed",
    "adversarial_failures",
    "wall_time",
];

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

fn flag(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "on" | "yes" => Ok(true),
        "false" | "0" | "off" | "no" => Ok(false),
        _ => Err(Error::Config(format!("`{key}`: expected a boolean, got `{value}`"))),
    }
}

impl ExperimentConfig {
    /// Sets one field from its textual form. Does not validate ranges.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "setting" => self.setting = value.parse()?,
            "pipeline" => self.pipeline = value.parse()?,
            "n" => self.n = num(key, value)?,
            "t" => self.t = num(key, value)?,
            "eps" => self.eps = num(key, value)?,
            "delta" => self.delta = num(key, value)?,
            "kappa" => self.kappa = num(key, value)?,
            "eta" => self.eta = num(key, value)?,
            "noise" => self.noise = num(key, value)?,
            "flips" => self.flips = value.parse()?,
            "tau" => self.tau = num(key, value)?,
            "rounds" => self.rounds = num(key, value)?,
            "m" => {
                self.m = match value {
                    "auto" => None,
                    v => Some(num(key, v)?),
                }
            }
            "trials" => self.trials = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "adversarial_failures" => self.adversarial_failures = flag(key, value)?,
            "wall_time" => self.wall_time = flag(key, value)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            self.set(k, v)
                .map_err(|e| Error::Config(format!("line {}: {}", i + 1, strip_prefix(&e))))?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(msg.to_string()))
            }
        };
        check((1..=16).contains(&self.n), "n must be in 1..=16")?;
        check(self.t >= 1 && self.t <= 1 << self.n, "t must be in 1..=2^n")?;
        check(self.eps > 0.0 && self.eps < 1.0, "eps must be in (0, 1)")?;
        check(self.delta > 0.0 && self.delta < 0.5, "delta must be in (0, 1/2)")?;
        check(self.kappa > 0.0 && self.kappa < 0.5, "kappa must be in (0, 1/2)")?;
        check(self.eta > 0.0 && self.eta <= 1.0, "eta must be in (0, 1]")?;
        check((0.0..0.5).contains(&self.noise), "noise must be in [0, 1/2)")?;
        check(self.rounds >= 1, "rounds must be at least 1")?;
        check(self.m.is_none_or(|m| m >= 1), "m must be at least 1")?;
        check(self.trials >= 1, "trials must be at least 1")?;
        if self.pipeline == Pipeline::Qgl {
            check(self.eps < self.tau && self.tau <= 1.0, "qgl needs 0 < eps < tau <= 1")?;
        }
        Ok(())
    }

    /// Canonical `key = value` form covering every field that affects results.
    pub fn to_text(&self) -> String {
        let m = self.m.map_or("auto".to_string(), |m| m.to_string());
        format!(
            "setting = {}\npipeline = {}\nn = {}\nt = {}\neps = {}\ndelta = {}\nkappa = {}\neta = {}\n\
             noise = {}\nflips = {}\ntau = {}\nrounds = {}\nm = {}\ntrials = {}\nseed = {}\n\
             adversarial_failures = {}\n",
            self.setting,
            self.pipeline,
            self.n,
            self.t,
            self.eps,
            self.delta,
            self.kappa,
            self.eta,
            self.noise,
            self.flips,
            self.tau,
            self.rounds,
            m,
            self.trials,
            self.seed,
            self.adversarial_failures
        )
    }

    /// FNV-1a of [`Self::to_text`].
    pub fn hash(&self) -> u64 {
        self.to_text().bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
            (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
        })
    }

    pub fn hash_hex(&self) -> String {
        format!("{:016x}", self.hash())
    }
}

fn strip_prefix(e: &Error) -> String {
    let s = e.to_string();
    s.strip_prefix("invalid config: ").map(str::to_string).unwrap_or(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let c = ExperimentConfig::parse(
            "# agnostic sweep\nsetting = agnostic\npipeline=boost\nn = 6\neps=0.3 # trailing\nm = 5000\nseed = 42\n",
        )
        .unwrap();
        assert_eq!(c.setting, Setting::Agnostic);
        assert_eq!(c.pipeline, Pipeline::Boost);
        assert_eq!((c.n, c.m, c.seed), (6, Some(5000), 42));
        let back = ExperimentConfig::parse(&c.to_text()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn hash_ignores_wall_time_only() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.wall_time = true;
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "n = 0",
            "n = 17",
            "eps = 1.5",
            "delta = 0.5",
            "kappa = 0",
            "noise = 0.5",
            "trials = 0",
            "setting = quantum",
            "colour = blue",
            "n = eight",
            "no equals sign",
            "pipeline = qgl\ntau = 0.1\neps = 0.2",
            "adversarial_failures = maybe",
        ] {
            assert!(ExperimentConfig::parse(text).is_err(), "{text}");
        }
    }

    #[test]
    fn keys_are_settable() {
        let mut c = ExperimentConfig::default();
        for k in KEYS {
            let v = match k {
                "setting" => "rcn",
                "pipeline" => "qgl",
                "flips" => "random",
                "adversarial_failures" | "wall_time" => "true",
                "m" => "auto",
                _ => "3",
            };
            c.set(k, v).unwrap();
        }
    }
}
