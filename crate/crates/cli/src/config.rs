//! Run configuration: flat `key = value` text files over documented
//! defaults. Unknown keys are rejected; command-line flags override file
//! values; the effective configuration is hashed into every manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use cogload_core::data::{ChannelMap, ClassProfiles, SynthSpec};
use cogload_core::evalharness::{GroupBy, HarnessConfig};
use cogload_core::features::{BandSet, DeSource, FeatureConfig, PsdMode};
use cogload_core::model::{EncoderConfig, HeadConfig, MaskMode, TrainRunConfig};
use cogload_core::pipeline::PreprocConfig;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Every key with its default, in documentation order.
pub const KEYS: &[(&str, &str)] = &[
    ("data.manifest", ""),
    ("data.pretrain_manifest", ""),
    ("preproc.bandpass_enabled", "true"),
    ("preproc.bandpass_low_hz", "1"),
    ("preproc.bandpass_high_hz", "75"),
    ("preproc.bandpass_order", "2"),
    ("preproc.notch_enabled", "true"),
    ("preproc.notch_hz", "60"),
    ("preproc.notch_q", "30"),
    ("preproc.zero_phase", "false"),
    ("preproc.discard_first_s", "0"),
    ("preproc.channels", "auto"),
    ("features.welch_seconds", "2"),
    ("features.welch_overlap", "0.5"),
    ("features.psd_mode", "integrated"),
    ("features.norm_stats", ""),
    ("features.de_source", "filtered"),
    ("model.blocks", "4"),
    ("model.d_model", "64"),
    ("model.heads", "4"),
    ("model.dropout", "0.1"),
    ("model.positional_encoding", "false"),
    ("model.ffn_mult", "4"),
    ("model.mask_mode", "zeros"),
    ("head.downstream_preset", "default"),
    ("train.batch_size", "64"),
    ("train.epochs", "1000"),
    ("train.lr", "0.0001"),
    ("train.scheduler_step", "0"),
    ("train.scheduler_gamma", "1.0"),
    ("train.seed", "0"),
    ("train.freeze_encoder", "true"),
    ("train.redraw_masks", "true"),
    ("transfer.checkpoint", ""),
    ("transfer.supervised", "false"),
    ("eval.k", "10"),
    ("eval.group_by", "participant"),
    ("synth.participants", "4"),
    ("synth.recordings_per_participant", "1"),
    ("synth.fs", "256"),
    ("synth.duration_s", "180"),
    ("synth.profile_factor", "2.0"),
    ("synth.high_fraction", "0.38"),
    ("synth.gain_jitter", "0.5"),
    ("synth.band_gain_jitter", "0.0"),
    ("synth.noise_floor", "0.3"),
    ("synth.label_noise", "0.0"),
    ("synth.labeled", "true"),
    ("ablate.axis", "blocks"),
    ("ablate.pretrain_epochs", "100"),
    ("io.out_dir", "runs/out"),
    ("io.jobs", "1"),
];

#[derive(Debug, Clone)]
pub struct RunConfig {
    map: BTreeMap<String, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { map: KEYS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect() }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Malformed {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    msg: format!("expected 'key = value', got '{line}'"),
                });
            };
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    /// Set a known key; unknown keys are configuration errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(CliError::Config(format!("unknown configuration key '{key}'")));
        }
        self.map.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> &str {
        self.map.get(key).map(String::as_str).unwrap_or_default()
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)
            .parse()
            .map_err(|_| CliError::Config(format!("key '{key}' has invalid value '{}'", self.get(key))))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        self.parse(key)
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        self.parse(key)
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        self.parse(key)
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        match self.get(key) {
            "true" | "1" | "yes" | "on" => Ok(true),
            "false" | "0" | "no" | "off" => Ok(false),
            other => Err(CliError::Config(format!("key '{key}' has non-boolean value '{other}'"))),
        }
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        let v = self.get(key);
        if v.is_empty() {
            None
        } else {
            Some(PathBuf::from(v))
        }
    }

    /// Canonical `key = value` rendering (sorted), hashed into manifests.
    pub fn effective_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.map {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.effective_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn preproc_config(&self) -> Result<PreprocConfig> {
        let channels = match self.get("preproc.channels") {
            "auto" => None,
            list => {
                let names: Vec<String> = list.split(',').map(|s| s.trim().to_string()).collect();
                Some(ChannelMap::new(names)?)
            }
        };
        Ok(PreprocConfig {
            bandpass: if self.bool("preproc.bandpass_enabled")? {
                Some((self.f64("preproc.bandpass_low_hz")?, self.f64("preproc.bandpass_high_hz")?))
            } else {
                None
            },
            bandpass_order: self.usize("preproc.bandpass_order")?,
            notch: if self.bool("preproc.notch_enabled")? {
                Some((self.f64("preproc.notch_hz")?, self.f64("preproc.notch_q")?))
            } else {
                None
            },
            zero_phase: self.bool("preproc.zero_phase")?,
            discard_first_s: self.f64("preproc.discard_first_s")?,
            channel_map: channels,
        })
    }

    pub fn feature_config(&self) -> Result<FeatureConfig> {
        Ok(FeatureConfig {
            bands: BandSet::default_eeg(),
            welch_seconds: self.f64("features.welch_seconds")?,
            welch_overlap: self.f64("features.welch_overlap")?,
            psd_mode: match self.get("features.psd_mode") {
                "integrated" => PsdMode::Integrated,
                "mean_density" => PsdMode::MeanDensity,
                other => {
                    return Err(CliError::Config(format!("features.psd_mode '{other}'")))
                }
            },
            de_source: match self.get("features.de_source") {
                "filtered" => DeSource::FilteredVariance,
                "welch" => DeSource::WelchPower,
                other => {
                    return Err(CliError::Config(format!("features.de_source '{other}'")))
                }
            },
        })
    }

    pub fn encoder_config(&self) -> Result<EncoderConfig> {
        Ok(EncoderConfig {
            n_blocks: self.usize("model.blocks")?,
            d_model: self.usize("model.d_model")?,
            n_heads: self.usize("model.heads")?,
            dropout_p: self.f64("model.dropout")?,
            positional_encoding: self.bool("model.positional_encoding")?,
            ffn_mult: self.usize("model.ffn_mult")?,
            mask_mode: match self.get("model.mask_mode") {
                "zeros" => MaskMode::Zeros,
                "learnable" => MaskMode::Learnable,
                other => return Err(CliError::Config(format!("model.mask_mode '{other}'"))),
            },
            token_dim: 40,
        })
    }

    pub fn downstream_head(&self) -> Result<HeadConfig> {
        match self.get("head.downstream_preset") {
            "default" => Ok(HeadConfig::downstream()),
            preset => HeadConfig::downstream_preset(preset).ok_or_else(|| {
                CliError::Config(format!("head.downstream_preset '{preset}'"))
            }),
        }
    }

    pub fn train_config(&self) -> Result<TrainRunConfig> {
        let step = self.usize("train.scheduler_step")?;
        Ok(TrainRunConfig {
            batch_size: self.usize("train.batch_size")?,
            epochs: self.usize("train.epochs")?,
            lr: self.f64("train.lr")?,
            scheduler: if step > 0 {
                Some((step, self.f64("train.scheduler_gamma")?))
            } else {
                None
            },
            seed: self.u64("train.seed")?,
            freeze_encoder: self.bool("train.freeze_encoder")?,
            redraw_masks: self.bool("train.redraw_masks")?,
        })
    }

    pub fn harness_config(&self) -> Result<HarnessConfig> {
        Ok(HarnessConfig {
            k: self.usize("eval.k")?,
            group_by: match self.get("eval.group_by") {
                "participant" => GroupBy::Participant,
                "recording" => GroupBy::Recording,
                "sequence" => GroupBy::Sequence,
                other => return Err(CliError::Config(format!("eval.group_by '{other}'"))),
            },
            enc: self.encoder_config()?,
            head: self.downstream_head()?,
            train: self.train_config()?,
        })
    }

    pub fn synth_spec(&self) -> Result<SynthSpec> {
        Ok(SynthSpec {
            n_participants: self.usize("synth.participants")?,
            recordings_per_participant: self.usize("synth.recordings_per_participant")?,
            fs: self.f64("synth.fs")?,
            duration_s: self.f64("synth.duration_s")?,
            bands: BandSet::default_eeg(),
            profiles: ClassProfiles::beta_gamma_boost(5, self.f64("synth.profile_factor")?),
            high_fraction: self.f64("synth.high_fraction")?,
            recording_gain_jitter: self.f64("synth.gain_jitter")?,
            band_gain_jitter: self.f64("synth.band_gain_jitter")?,
            noise_floor: self.f64("synth.noise_floor")?,
            label_noise: self.f64("synth.label_noise")?,
            seed: self.u64("train.seed")?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn defaults_cover_every_key() {
        let cfg = RunConfig::default();
        for (k, v) in KEYS {
            assert_eq!(cfg.get(k), *v);
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut cfg = RunConfig::default();
        assert!(cfg.set("nonsense.key", "1").is_err());
        assert!(cfg.set("train.epochs", "5").is_ok());
    }

    #[test]
    fn file_parsing_with_comments() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "# comment").unwrap();
        writeln!(f).unwrap();
        writeln!(f, "train.epochs = 7").unwrap();
        writeln!(f, "model.d_model = 32").unwrap();
        drop(f);
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!(cfg.usize("train.epochs").unwrap(), 7);
        assert_eq!(cfg.encoder_config().unwrap().d_model, 32);
    }

    #[test]
    fn malformed_line_reports_position() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "train.epochs 7\n").unwrap();
        match RunConfig::load(&path) {
            Err(CliError::Malformed { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected malformed error, got {other:?}"),
        }
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        assert_eq!(a.hash(), b.hash());
        b.set("train.seed", "9").unwrap();
        assert_ne!(a.hash(), b.hash());
    }
}
