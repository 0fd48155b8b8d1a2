//! Flat key-value experiment configuration: parsing, validation, and
//! lossless serialization.
//!
//! The format is one `key = value` per line; blank lines and lines starting
//! with `#` are skipped. Lists are comma-separated. Real numbers accept
//! either decimal notation (including scientific) or a fraction `a/b`.
//! Every key is optional and defaults to the full-scale figure preset;
//! unknown and duplicated keys are rejected. Relative paths (`xi`, `output`)
//! resolve against the directory containing the config file.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::drift::PolynomialDrift;
use crate::error::{Error, Result};
use crate::harness::{ExperimentConfig, XiSpec};
use crate::report::fmt_float;
use crate::scheme::SchemeKind;

/// A parsed configuration document: the experiment plus the output path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigFile {
    pub experiment: ExperimentConfig,
    /// Destination of the error-table CSV; CLI flags may override it.
    pub output: PathBuf,
}

/// Recognized keys, in serialization order.
const KEYS: [&str; 17] = [
    "T",
    "nu",
    "degree",
    "coeffs",
    "chi",
    "K",
    "N_ref",
    "N_list",
    "mc_runs",
    "seed",
    "schemes",
    "indicator_variant",
    "noise_scale",
    "xi",
    "output",
    "reference_scheme",
    "sup_error",
];

/// Parses a real number: decimal (`0.25`, `1e-3`) or fraction (`1/6`).
pub fn parse_real(s: &str) -> Result<f64> {
    let t = s.trim();
    let value = if let Some((num, den)) = t.split_once('/') {
        let n: f64 = num
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("`{t}` is not a number")))?;
        let d: f64 = den
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("`{t}` is not a number")))?;
        if d == 0.0 {
            return Err(Error::InvalidConfig(format!("`{t}` divides by zero")));
        }
        n / d
    } else {
        t.parse().map_err(|_| Error::InvalidConfig(format!("`{t}` is not a number")))?
    };
    if !value.is_finite() {
        return Err(Error::InvalidConfig(format!("`{t}` is not finite")));
    }
    Ok(value)
}

fn parse_u64(key: &str, s: &str) -> Result<u64> {
    s.trim()
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("{key}: `{}` is not a nonnegative integer", s.trim())))
}

fn parse_list<T>(s: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    s.split(',').map(|p| item(p.trim())).collect()
}

/// Parses a configuration document. `base_dir` anchors relative paths.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<ConfigFile> {
    let mut seen: HashSet<&str> = HashSet::new();
    let mut cfg = ExperimentConfig::default();
    let mut degree: Option<usize> = None;
    let mut coeffs: Option<Vec<f64>> = None;
    let mut output = base_dir.join("errors.csv");

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::InvalidConfig(format!("line {}: expected `key = value`, got `{line}`", lineno + 1))
        })?;
        let key = key.trim();
        let value = value.trim();
        let known = KEYS.iter().find(|k| **k == key).ok_or_else(|| {
            Error::InvalidConfig(format!(
                "line {}: unknown key `{key}` (known keys: {})",
                lineno + 1,
                KEYS.join(", ")
            ))
        })?;
        if !seen.insert(known) {
            return Err(Error::InvalidConfig(format!("line {}: duplicate key `{key}`", lineno + 1)));
        }
        if value.is_empty() {
            return Err(Error::InvalidConfig(format!("line {}: key `{key}` has no value", lineno + 1)));
        }
        match key {
            "T" => cfg.t_horizon = parse_real(value)?,
            "nu" => cfg.nu = parse_real(value)?,
            "degree" => {
                degree = Some(
                    value.parse().map_err(|_| {
                        Error::InvalidConfig(format!("degree: `{value}` is not an integer"))
                    })?,
                )
            }
            "coeffs" => coeffs = Some(parse_list(value, parse_real)?),
            "chi" => cfg.chi = parse_real(value)?,
            "K" => {
                cfg.k_modes = value.parse().map_err(|_| {
                    Error::InvalidConfig(format!("K: `{value}` is not an integer"))
                })?
            }
            "N_ref" => cfg.n_ref = parse_u64("N_ref", value)?,
            "N_list" => cfg.n_list = parse_list(value, |p| parse_u64("N_list", p))?,
            "mc_runs" => cfg.mc_runs = parse_u64("mc_runs", value)?,
            "seed" => cfg.seed = parse_u64("seed", value)?,
            "schemes" => cfg.schemes = parse_list(value, SchemeKind::from_str)?,
            "indicator_variant" => cfg.indicator_variant = value.parse()?,
            "noise_scale" => cfg.noise_scale = parse_real(value)?,
            "xi" => {
                cfg.xi = if value == "zero" {
                    XiSpec::Zero
                } else {
                    XiSpec::File(base_dir.join(value))
                }
            }
            "output" => output = base_dir.join(value),
            "reference_scheme" => cfg.reference_scheme = value.parse()?,
            "sup_error" => {
                cfg.sup_error = match value {
                    "true" => true,
                    "false" => false,
                    other => {
                        return Err(Error::InvalidConfig(format!(
                            "sup_error: expected true or false, got `{other}`"
                        )))
                    }
                }
            }
            _ => unreachable!("key membership checked above"),
        }
    }

    match (degree, coeffs) {
        (None, None) => {}
        (Some(_), None) => {
            return Err(Error::InvalidConfig(
                "degree given without coeffs; provide coeffs = a_0,...,a_n".into(),
            ))
        }
        (d, Some(c)) => {
            if let Some(d) = d {
                if d + 1 != c.len() {
                    return Err(Error::InvalidConfig(format!(
                        "degree = {d} inconsistent with {} coefficients (need degree + 1)",
                        c.len()
                    )));
                }
            }
            cfg.drift = PolynomialDrift::new(c)?;
        }
    }

    cfg.validate()?;
    Ok(ConfigFile { experiment: cfg, output })
}

/// Reads and parses a config file; relative paths inside resolve against its
/// directory.
pub fn load_config(path: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path)?;
    let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    parse_config(&text, base)
}

/// Serializes a configuration with every key explicit, in fixed order.
/// Parsing the result reproduces the configuration exactly: floats carry 17
/// significant digits. In-memory initial conditions ([`XiSpec::Coeffs`])
/// have no file representation and are rejected.
pub fn serialize_config(file: &ConfigFile) -> Result<String> {
    let cfg = &file.experiment;
    let xi = match &cfg.xi {
        XiSpec::Zero => "zero".to_string(),
        XiSpec::File(p) => p.display().to_string(),
        XiSpec::Coeffs(_) => {
            return Err(Error::InvalidConfig(
                "in-memory xi coefficients have no config representation; point xi at a file"
                    .into(),
            ))
        }
    };
    let schemes: Vec<&str> = cfg.schemes.iter().map(|s| s.name()).collect();
    let coeffs: Vec<String> = cfg.drift.coeffs().iter().map(|&a| fmt_float(a)).collect();
    let n_list: Vec<String> = cfg.n_list.iter().map(|n| n.to_string()).collect();
    Ok(format!(
        "T = {}\n\
         nu = {}\n\
         degree = {}\n\
         coeffs = {}\n\
         chi = {}\n\
         K = {}\n\
         N_ref = {}\n\
         N_list = {}\n\
         mc_runs = {}\n\
         seed = {}\n\
         schemes = {}\n\
         indicator_variant = {}\n\
         noise_scale = {}\n\
         xi = {}\n\
         output = {}\n\
         reference_scheme = {}\n\
         sup_error = {}\n",
        fmt_float(cfg.t_horizon),
        fmt_float(cfg.nu),
        cfg.drift.degree(),
        coeffs.join(","),
        fmt_float(cfg.chi),
        cfg.k_modes,
        cfg.n_ref,
        n_list.join(","),
        cfg.mc_runs,
        cfg.seed,
        schemes.join(","),
        cfg.indicator_variant.name(),
        fmt_float(cfg.noise_scale),
        xi,
        file.output.display(),
        cfg.reference_scheme.name(),
        cfg.sup_error,
    ))
}

/// Parses a figure-scale factor: `1` or `1/D` with D a power of two up to
/// 64. Returns the exponent f with scale = 2^-f.
pub fn parse_scale(s: &str) -> Result<u32> {
    let t = s.trim();
    if t == "1" {
        return Ok(0);
    }
    let denom = t
        .strip_prefix("1/")
        .and_then(|d| d.trim().parse::<u64>().ok())
        .ok_or_else(|| Error::InvalidConfig(format!("scale: expected 1 or 1/D, got `{t}`")))?;
    if !denom.is_power_of_two() || denom > 64 {
        return Err(Error::InvalidConfig(format!(
            "scale denominator must be a power of two up to 64, got {denom}"
        )));
    }
    Ok(denom.trailing_zeros())
}

/// The figure preset shrunk by 2^-f: reference resolution 2^(20-f), modes
/// 2^(10-floor(f/2)), coarse ladder 2^6..2^(18-2f), Monte Carlo runs
/// max(10, round(25·2^-f)). f = 0 is the full-scale preset itself.
pub fn scaled_figure_preset(f: u32) -> ExperimentConfig {
    assert!(f <= 6, "scale exponent out of range: {f}");
    let mc = (25.0 * 0.5f64.powi(f as i32)).round() as u64;
    ExperimentConfig {
        n_ref: 1 << (20 - f),
        k_modes: 1 << (10 - f / 2),
        n_list: (6..=18 - 2 * f as u64).map(|e| 1u64 << e).collect(),
        mc_runs: mc.max(10),
        ..ExperimentConfig::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::IndicatorVariant;

    const DESK: &str = "\
# desk-scale experiment
T = 1
nu = 1
degree = 3
coeffs = 0,1,0,-1
chi = 1/6
K = 256
N_ref = 65536
N_list = 64,128,256,512,1024,2048,4096
mc_runs = 10
seed = 42
schemes = exp_euler,lin_implicit
indicator_variant = drift_norm
noise_scale = 1
xi = zero
output = desk.csv
";

    #[test]
    fn empty_document_yields_defaults() {
        let parsed = parse_config("", Path::new("/work")).unwrap();
        assert_eq!(parsed.experiment, ExperimentConfig::default());
        assert_eq!(parsed.output, Path::new("/work/errors.csv"));
    }

    #[test]
    fn desk_document_parses() {
        let parsed = parse_config(DESK, Path::new("/work")).unwrap();
        let cfg = &parsed.experiment;
        assert_eq!(cfg.t_horizon, 1.0);
        assert_eq!(cfg.drift.coeffs(), &[0.0, 1.0, 0.0, -1.0]);
        assert_eq!(cfg.chi, 1.0 / 6.0);
        assert_eq!(cfg.k_modes, 256);
        assert_eq!(cfg.n_ref, 65536);
        assert_eq!(cfg.n_list, vec![64, 128, 256, 512, 1024, 2048, 4096]);
        assert_eq!(cfg.mc_runs, 10);
        assert_eq!(cfg.seed, 42);
        assert_eq!(
            cfg.schemes,
            vec![SchemeKind::TruncExpEuler, SchemeKind::TruncLinImplicitEuler]
        );
        assert_eq!(cfg.indicator_variant, IndicatorVariant::DriftNorm);
        assert_eq!(cfg.noise_scale, 1.0);
        assert_eq!(cfg.xi, XiSpec::Zero);
        assert_eq!(parsed.output, Path::new("/work/desk.csv"));
        assert_eq!(cfg.reference_scheme, SchemeKind::TruncCrankNicolson);
        assert!(!cfg.sup_error);
    }

    #[test]
    fn round_trip_is_identity() {
        let parsed = parse_config(DESK, Path::new("/work")).unwrap();
        let text = serialize_config(&parsed).unwrap();
        let again = parse_config(&text, Path::new("/elsewhere")).unwrap();
        assert_eq!(parsed, again, "serialized form must reload identically");

        let mut with_xi = parsed.clone();
        with_xi.experiment.xi = XiSpec::File(PathBuf::from("/data/ic.txt"));
        with_xi.experiment.sup_error = true;
        with_xi.experiment.reference_scheme = SchemeKind::TruncExpEuler;
        let text = serialize_config(&with_xi).unwrap();
        assert_eq!(parse_config(&text, Path::new("/x")).unwrap(), with_xi);
    }

    #[test]
    fn xi_and_output_resolve_against_config_dir() {
        let parsed =
            parse_config("xi = ic.txt\noutput = out/errors.csv\n", Path::new("/cfgdir")).unwrap();
        assert_eq!(parsed.experiment.xi, XiSpec::File(PathBuf::from("/cfgdir/ic.txt")));
        assert_eq!(parsed.output, Path::new("/cfgdir/out/errors.csv"));
        // Absolute paths pass through untouched.
        let parsed = parse_config("xi = /abs/ic.txt\n", Path::new("/cfgdir")).unwrap();
        assert_eq!(parsed.experiment.xi, XiSpec::File(PathBuf::from("/abs/ic.txt")));
    }

    #[test]
    fn malformed_documents_are_rejected() {
        let base = Path::new(".");
        assert!(parse_config("wibble = 3\n", base).is_err(), "unknown key");
        assert!(parse_config("T = 1\nT = 2\n", base).is_err(), "duplicate key");
        assert!(parse_config("just some words\n", base).is_err(), "no equals sign");
        assert!(parse_config("T =\n", base).is_err(), "empty value");
        assert!(parse_config("T = banana\n", base).is_err(), "non-numeric");
        assert!(parse_config("degree = 3\n", base).is_err(), "degree without coeffs");
        assert!(
            parse_config("degree = 5\ncoeffs = 0,1,0,-1\n", base).is_err(),
            "degree/coeffs mismatch"
        );
        assert!(parse_config("coeffs = 0,1\n", base).is_err(), "even degree drift");
        assert!(parse_config("chi = 0.9\n", base).is_err(), "chi beyond 1/(2n)");
        assert!(parse_config("N_list = 60\n", base).is_err(), "non-divisor of N_ref");
        assert!(parse_config("noise_scale = 0.5\n", base).is_err(), "fractional noise scale");
        assert!(parse_config("schemes = euler\n", base).is_err(), "unknown scheme");
        assert!(parse_config("sup_error = yes\n", base).is_err(), "non-boolean");
    }

    #[test]
    fn reals_parse_decimals_and_fractions() {
        assert_eq!(parse_real("0.25").unwrap(), 0.25);
        assert_eq!(parse_real("1e-3").unwrap(), 1e-3);
        assert_eq!(parse_real("1/6").unwrap().to_bits(), (1.0f64 / 6.0).to_bits());
        assert_eq!(parse_real(" 3 / 4 ").unwrap(), 0.75);
        assert!(parse_real("1/0").is_err());
        assert!(parse_real("abc").is_err());
        assert!(parse_real("inf").is_err());
        assert!(parse_real("nan").is_err());
    }

    #[test]
    fn scale_strings_map_to_exponents() {
        assert_eq!(parse_scale("1").unwrap(), 0);
        assert_eq!(parse_scale("1/2").unwrap(), 1);
        assert_eq!(parse_scale("1/16").unwrap(), 4);
        assert_eq!(parse_scale("1/64").unwrap(), 6);
        assert!(parse_scale("1/3").is_err());
        assert!(parse_scale("1/128").is_err());
        assert!(parse_scale("2").is_err());
        assert!(parse_scale("0.5").is_err());
    }

    #[test]
    fn scaled_presets_shrink_proportionally() {
        let full = scaled_figure_preset(0);
        assert_eq!(full, ExperimentConfig::default());

        let sixteenth = scaled_figure_preset(4);
        assert_eq!(sixteenth.n_ref, 65536);
        assert_eq!(sixteenth.k_modes, 256);
        assert_eq!(sixteenth.n_list, vec![64, 128, 256, 512, 1024]);
        assert_eq!(sixteenth.mc_runs, 10);

        let smallest = scaled_figure_preset(6);
        assert_eq!(smallest.n_ref, 16384);
        assert_eq!(smallest.k_modes, 128);
        assert_eq!(smallest.n_list, vec![64]);
        assert_eq!(smallest.mc_runs, 10);
        smallest.validate().unwrap();
    }

    #[test]
    fn serialized_floats_carry_17_digits() {
        let parsed = parse_config("chi = 1/6\n", Path::new(".")).unwrap();
        let text = serialize_config(&parsed).unwrap();
        assert!(
            text.contains("chi = 1.6666666666666666e-1"),
            "17 significant digits expected, got:\n{text}"
        );
    }
}
