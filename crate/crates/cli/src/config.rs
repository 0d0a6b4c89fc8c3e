//! Flat key/value experiment configs: parse, emit, override.
//!
//! The format is one `key = value` pair per line with `#` comments, so an
//! experiment record diffs cleanly. `parse` and `emit` round-trip exactly.

use stbc_core::harness::{CodeChoice, ExperimentConfig, Receiver};
use stbc_core::ptrbf::fmt_f64;
use stbc_core::{Error, Result};

/// All recognized keys, kept in emit order.
const KEYS: &[&str] = &[
    "label",
    "ntx",
    "nrx",
    "modulation",
    "code",
    "precoding",
    "receiver",
    "ebn0_grid",
    "min_frames",
    "min_bit_errors",
    "frame_cap",
    "repetitions",
    "seed",
    "pilot_blocks",
    "tx_normalization",
    "nn_hidden_neurons",
    "nn_train_frames",
    "nn_epochs",
    "nn_payload_frames_per_channel",
    "nn_sample_init",
    "nn_val_fraction",
    "nn_dump_points",
    "nn_rate_weights",
    "nn_rate_bias",
    "nn_rate_centers",
    "nn_rate_variances",
];

const REQUIRED: &[&str] = &["ntx", "nrx", "modulation", "code", "receiver", "ebn0_grid"];

/// Apply one `key = value` override to a config.
pub fn apply_override(cfg: &mut ExperimentConfig, key: &str, value: &str) -> Result<()> {
    let bad = |what: &str| Error::Config(format!("field `{key}`: {what} (got `{value}`)"));
    match key {
        "label" => cfg.label = value.to_string(),
        "ntx" => cfg.ntx = parse_num(key, value)?,
        "nrx" => cfg.nrx = parse_num(key, value)?,
        "modulation" => cfg.modulation = parse_num(key, value)?,
        "code" => {
            cfg.code = match value {
                "qostbc" => CodeChoice::Qostbc,
                "ostbc_r12" => CodeChoice::OstbcRateHalf,
                "alamouti" => CodeChoice::Alamouti,
                _ => return Err(bad("expected qostbc, ostbc_r12 or alamouti")),
            }
        }
        "precoding" => cfg.precoding = parse_bool(key, value)?,
        "receiver" => {
            cfg.receiver = match value {
                "ml_perfect" => Receiver::MlPerfect,
                "ml_mmse" => Receiver::MlMmse,
                "ptrbf" => Receiver::Ptrbf,
                _ => return Err(bad("expected ml_perfect, ml_mmse or ptrbf")),
            }
        }
        "ebn0_grid" => {
            let grid: std::result::Result<Vec<f64>, _> =
                value.split(',').map(|t| t.trim().parse::<f64>()).collect();
            cfg.ebn0_grid = grid.map_err(|_| bad("expected comma-separated numbers"))?;
        }
        "min_frames" => cfg.min_frames = parse_num(key, value)?,
        "min_bit_errors" => cfg.min_bit_errors = parse_num(key, value)?,
        "frame_cap" => cfg.frame_cap = parse_num(key, value)?,
        "repetitions" => cfg.repetitions = parse_num(key, value)?,
        "seed" => cfg.seed = parse_num(key, value)?,
        "pilot_blocks" => cfg.pilot_blocks = parse_num(key, value)?,
        "tx_normalization" => cfg.tx_normalization = parse_bool(key, value)?,
        "nn_hidden_neurons" => cfg.nn.hidden_neurons = parse_num(key, value)?,
        "nn_train_frames" => cfg.nn.train_frames = parse_num(key, value)?,
        "nn_epochs" => cfg.nn.epochs = parse_num(key, value)?,
        "nn_payload_frames_per_channel" => {
            cfg.nn.payload_frames_per_channel = parse_num(key, value)?
        }
        "nn_sample_init" => cfg.nn.sample_init = parse_bool(key, value)?,
        "nn_val_fraction" => cfg.nn.val_fraction = parse_float(key, value)?,
        "nn_dump_points" => cfg.nn.dump_points = parse_num(key, value)?,
        "nn_rate_weights" => cfg.nn.rates.weights = parse_float(key, value)?,
        "nn_rate_bias" => cfg.nn.rates.bias = parse_float(key, value)?,
        "nn_rate_centers" => cfg.nn.rates.centers = parse_float(key, value)?,
        "nn_rate_variances" => cfg.nn.rates.variances = parse_float(key, value)?,
        _ => {
            return Err(Error::Config(format!(
                "unknown config key `{key}` (known keys: {})",
                KEYS.join(", ")
            )))
        }
    }
    Ok(())
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("field `{key}`: not a valid integer (got `{value}`)")))
}

fn parse_float(key: &str, value: &str) -> Result<f64> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("field `{key}`: not a valid number (got `{value}`)")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "on" | "1" => Ok(true),
        "false" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!(
            "field `{key}`: expected true/false (got `{value}`)"
        ))),
    }
}

/// Parse a full config from flat key/value text. Unknown keys are
/// rejected; missing required fields are named.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::new("run", CodeChoice::Qostbc, 4, 1, Receiver::MlPerfect);
    let mut seen = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected `key = value`", lineno + 1))
        })?;
        let key = key.trim();
        let value = value.trim();
        apply_override(&mut cfg, key, value)?;
        seen.push(key.to_string());
    }
    for req in REQUIRED {
        if !seen.iter().any(|k| k == req) {
            return Err(Error::Config(format!("missing required field `{req}`")));
        }
    }
    // Refresh width-dependent neural defaults unless explicitly set.
    if !seen.iter().any(|k| k == "nn_hidden_neurons") {
        cfg.nn.hidden_neurons = if cfg.ntx >= 32 { 100 } else { 50 };
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config_file(path: &std::path::Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_str(&text)
}

fn grid_to_string(grid: &[f64]) -> String {
    grid.iter()
        .map(|&x| fmt_f64(x))
        .collect::<Vec<_>>()
        .join(",")
}

/// Emit a config as flat key/value text; `parse_config_str` inverts this.
pub fn emit_config(cfg: &ExperimentConfig) -> String {
    let mut out = String::new();
    for key in KEYS {
        let value = match *key {
            "label" => cfg.label.clone(),
            "ntx" => cfg.ntx.to_string(),
            "nrx" => cfg.nrx.to_string(),
            "modulation" => cfg.modulation.to_string(),
            "code" => cfg.code.name().to_string(),
            "precoding" => cfg.precoding.to_string(),
            "receiver" => cfg.receiver.name().to_string(),
            "ebn0_grid" => grid_to_string(&cfg.ebn0_grid),
            "min_frames" => cfg.min_frames.to_string(),
            "min_bit_errors" => cfg.min_bit_errors.to_string(),
            "frame_cap" => cfg.frame_cap.to_string(),
            "repetitions" => cfg.repetitions.to_string(),
            "seed" => cfg.seed.to_string(),
            "pilot_blocks" => cfg.pilot_blocks.to_string(),
            "tx_normalization" => cfg.tx_normalization.to_string(),
            "nn_hidden_neurons" => cfg.nn.hidden_neurons.to_string(),
            "nn_train_frames" => cfg.nn.train_frames.to_string(),
            "nn_epochs" => cfg.nn.epochs.to_string(),
            "nn_payload_frames_per_channel" => cfg.nn.payload_frames_per_channel.to_string(),
            "nn_sample_init" => cfg.nn.sample_init.to_string(),
            "nn_val_fraction" => fmt_f64(cfg.nn.val_fraction),
            "nn_dump_points" => cfg.nn.dump_points.to_string(),
            "nn_rate_weights" => fmt_f64(cfg.nn.rates.weights),
            "nn_rate_bias" => fmt_f64(cfg.nn.rates.bias),
            "nn_rate_centers" => fmt_f64(cfg.nn.rates.centers),
            "nn_rate_variances" => fmt_f64(cfg.nn.rates.variances),
            _ => unreachable!(),
        };
        out.push_str(&format!("{key} = {value}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_roundtrip() {
        let mut cfg = ExperimentConfig::new("fig", CodeChoice::OstbcRateHalf, 4, 2, Receiver::MlMmse);
        cfg.precoding = true;
        cfg.ebn0_grid = vec![0.0, 2.5, 7.125];
        cfg.seed = 99;
        cfg.nn.val_fraction = 0.2;
        let text = emit_config(&cfg);
        let back = parse_config_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn test_unknown_key_rejected() {
        let err = parse_config_str("bogus = 1\nntx = 4\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bogus"), "{msg}");
    }

    #[test]
    fn test_missing_required_field_named() {
        let err = parse_config_str("ntx = 4\nnrx = 1\nmodulation = 4\ncode = qostbc\nreceiver = ml_perfect\n")
            .unwrap_err();
        assert!(err.to_string().contains("ebn0_grid"), "{err}");
    }

    #[test]
    fn test_non_increasing_grid_rejected() {
        let text = "ntx = 4\nnrx = 1\nmodulation = 4\ncode = qostbc\nreceiver = ml_perfect\nebn0_grid = 0,4,4\n";
        let err = parse_config_str(text).unwrap_err();
        assert!(err.to_string().contains("increasing"), "{err}");
    }

    #[test]
    fn test_out_of_range_value_named() {
        let err = apply_override(
            &mut ExperimentConfig::new("x", CodeChoice::Qostbc, 4, 1, Receiver::MlPerfect),
            "ntx",
            "-3",
        )
        .unwrap_err();
        assert!(err.to_string().contains("ntx"), "{err}");
    }

    #[test]
    fn test_comments_and_blanks() {
        let text = "\n# comment\nntx = 4  # trailing\nnrx = 1\nmodulation = 4\ncode = qostbc\nreceiver = ml_perfect\nebn0_grid = 0,4\n";
        let cfg = parse_config_str(text).unwrap();
        assert_eq!(cfg.ntx, 4);
        assert_eq!(cfg.ebn0_grid, vec![0.0, 4.0]);
    }

    #[test]
    fn test_neuron_default_tracks_ntx() {
        let text = "ntx = 32\nnrx = 1\nmodulation = 4\ncode = qostbc\nreceiver = ptrbf\nebn0_grid = 0,4\n";
        let cfg = parse_config_str(text).unwrap();
        assert_eq!(cfg.nn.hidden_neurons, 100);
    }
}
