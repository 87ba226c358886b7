//! Parameter resolution: config file merging, barrier/packet construction
//! rules, and the default policy (every default is recorded for the meta
//! sidecar).

use std::collections::BTreeMap;
use std::fs;

use qtunnel::barrier::Barrier;
use qtunnel::packet::GaussianPacket;
use qtunnel::transmit::NormalizationMode;

use crate::CommonArgs;

pub type CliResult<T> = Result<T, String>;

/// Fully resolved inputs plus a record of which values were defaulted.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub barrier: Barrier,
    pub sigma: f64,
    pub p0: f64,
    pub t: Option<f64>,
    pub times: Vec<f64>,
    pub pmax: Option<f64>,
    pub n: Option<usize>,
    pub mode: NormalizationMode,
    pub out: String,
    /// (key, value, defaulted) for the sidecar.
    pub log: Vec<(String, String, bool)>,
}

impl Resolved {
    pub fn packet(&self) -> CliResult<GaussianPacket> {
        GaussianPacket::new(self.sigma, self.p0).map_err(|e| e.to_string())
    }
}

/// Per-scenario default rules.
#[derive(Debug, Clone, Copy)]
pub struct Defaults {
    /// p0 as a fraction of sqrt(2 W).
    pub p0_over_s2w: f64,
    /// sigma as a multiple of d (used when neither sigma nor gamma given).
    pub sigma_over_d: f64,
}

pub const DEFAULT_BETA: f64 = 20.0;
pub const DEFAULT_WIDTH: f64 = 1.0;

fn parse_config_file(path: &str) -> CliResult<BTreeMap<String, String>> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!(
                "config {path}:{}: expected 'key = value', got '{raw}'",
                lineno + 1
            ));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn parse_num(key: &str, value: &str) -> CliResult<f64> {
    value
        .parse::<f64>()
        .map_err(|_| format!("config key {key}: '{value}' is not a number"))
}

/// Fills unset flags from the config file.
fn merge_config(args: &mut CommonArgs) -> CliResult<()> {
    let Some(path) = &args.config else {
        return Ok(());
    };
    let map = parse_config_file(path)?;
    for (key, value) in &map {
        match key.as_str() {
            "beta" => drop(args.beta.get_or_insert(parse_num(key, value)?)),
            "W" => drop(args.w.get_or_insert(parse_num(key, value)?)),
            "d" => drop(args.d.get_or_insert(parse_num(key, value)?)),
            "sigma" => drop(args.sigma.get_or_insert(parse_num(key, value)?)),
            "gamma" => drop(args.gamma.get_or_insert(parse_num(key, value)?)),
            "p0" => drop(args.p0.get_or_insert(parse_num(key, value)?)),
            "t" => drop(args.t.get_or_insert(parse_num(key, value)?)),
            "pmax" => drop(args.pmax.get_or_insert(parse_num(key, value)?)),
            "n" => drop(args.n.get_or_insert(
                value
                    .parse::<usize>()
                    .map_err(|_| format!("config key n: '{value}' is not a count"))?,
            )),
            "times" => drop(args.times.get_or_insert(value.clone())),
            "mode" => drop(args.mode.get_or_insert(value.clone())),
            "out" => drop(args.out.get_or_insert(value.clone())),
            other => return Err(format!("config key '{other}' is not recognized")),
        }
    }
    Ok(())
}

pub fn parse_list(text: &str, what: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| format!("{what}: '{s}' is not a number"))
        })
        .collect()
}

/// Resolves all inputs, enforcing the barrier-triple consistency rule:
/// either (W, d) or beta with at most one of W, d.
pub fn resolve(mut args: CommonArgs, defaults: Defaults) -> CliResult<Resolved> {
    merge_config(&mut args)?;
    let mut log: Vec<(String, String, bool)> = Vec::new();

    let (height, width, barrier_defaulted) = match (args.beta, args.w, args.d) {
        (Some(_), Some(_), Some(_)) => {
            return Err(
                "inconsistent barrier: give either (W, d) or beta plus at most one of W, d"
                    .into(),
            )
        }
        (Some(beta), Some(w), None) => {
            if beta.is_nan() || w.is_nan() || beta <= 0.0 || w <= 0.0 {
                return Err("beta and W must be positive".into());
            }
            (w, beta / (2.0 * w).sqrt(), false)
        }
        (Some(beta), None, Some(d)) => {
            if beta.is_nan() || d.is_nan() || beta <= 0.0 || d <= 0.0 {
                return Err("beta and d must be positive".into());
            }
            (0.5 * (beta / d) * (beta / d), d, false)
        }
        (Some(beta), None, None) => {
            if beta.is_nan() || beta <= 0.0 {
                return Err("beta must be positive".into());
            }
            let d = DEFAULT_WIDTH;
            log.push(("d".into(), format!("{d}"), true));
            (0.5 * (beta / d) * (beta / d), d, false)
        }
        (None, Some(w), Some(d)) => (w, d, false),
        (None, Some(_), None) | (None, None, Some(_)) => {
            return Err("barrier underdetermined: give (W, d) or beta".into())
        }
        (None, None, None) => {
            let d = DEFAULT_WIDTH;
            (0.5 * (DEFAULT_BETA / d) * (DEFAULT_BETA / d), d, true)
        }
    };
    let barrier = Barrier::new(height, width, 0.0).map_err(|e| e.to_string())?;
    if barrier_defaulted {
        log.push(("beta".into(), format!("{DEFAULT_BETA}"), true));
        log.push(("d".into(), format!("{DEFAULT_WIDTH}"), true));
    }
    let s2w = (2.0 * barrier.height()).sqrt();

    let (sigma, sigma_defaulted) = match (args.sigma, args.gamma) {
        (Some(_), Some(_)) => {
            return Err("inconsistent packet width: give sigma or gamma, not both".into())
        }
        (Some(s), None) => (s, false),
        (None, Some(g)) => (g * barrier.width(), false),
        (None, None) => (defaults.sigma_over_d * barrier.width(), true),
    };
    if sigma_defaulted {
        log.push(("sigma".into(), format!("{sigma}"), true));
    }

    let (p0, p0_defaulted) = match args.p0 {
        Some(p) => (p, false),
        None => (defaults.p0_over_s2w * s2w, true),
    };
    if p0_defaulted {
        log.push(("p0".into(), format!("{p0}"), true));
    }

    let times = match &args.times {
        Some(text) => parse_list(text, "--times")?,
        None => Vec::new(),
    };

    let mode = match args.mode.as_deref() {
        None | Some("ratio") => NormalizationMode::RatioToTransmission,
        Some("absolute") => NormalizationMode::Absolute,
        Some(other) => return Err(format!("mode must be 'ratio' or 'absolute', got '{other}'")),
    };

    let out = args
        .out
        .clone()
        .ok_or_else(|| "missing required --out".to_string())?;

    Ok(Resolved {
        barrier,
        sigma,
        p0,
        t: args.t,
        times,
        pmax: args.pmax,
        n: args.n,
        mode,
        out,
        log,
    })
}

/// Resolution for scenarios that hold the barrier height fixed and sweep
/// the width: only `--W` (default 0.5) describes the barrier.
pub fn resolve_fixed_height(mut args: CommonArgs, defaults: Defaults) -> CliResult<Resolved> {
    merge_config(&mut args)?;
    if args.beta.is_some() || args.d.is_some() {
        return Err(
            "this scenario sweeps the barrier width itself; give --W (and --beta-list), not --beta/--d"
                .into(),
        );
    }
    let mut log: Vec<(String, String, bool)> = Vec::new();
    let height = match args.w {
        Some(w) if w > 0.0 => w,
        Some(w) => return Err(format!("W must be positive, got {w}")),
        None => {
            log.push(("W".into(), "0.5".into(), true));
            0.5
        }
    };
    // placeholder width; the scenario builds one barrier per opacity
    let barrier = Barrier::new(height, 1.0, 0.0).map_err(|e| e.to_string())?;
    let s2w = (2.0 * height).sqrt();
    let (p0, p0_defaulted) = match args.p0 {
        Some(p) => (p, false),
        None => (defaults.p0_over_s2w * s2w, true),
    };
    if p0_defaulted {
        log.push(("p0".into(), format!("{p0}"), true));
    }
    let (sigma, sigma_defaulted) = match (args.sigma, args.gamma) {
        (Some(_), Some(_)) => {
            return Err("inconsistent packet width: give sigma or gamma, not both".into())
        }
        (Some(s), None) => (s, false),
        (None, Some(g)) => (g, false),
        (None, None) => (defaults.sigma_over_d, true),
    };
    if sigma_defaulted {
        log.push(("sigma".into(), format!("{sigma}"), true));
    }
    let mode = match args.mode.as_deref() {
        None | Some("ratio") => NormalizationMode::RatioToTransmission,
        Some("absolute") => NormalizationMode::Absolute,
        Some(other) => return Err(format!("mode must be 'ratio' or 'absolute', got '{other}'")),
    };
    let out = args
        .out
        .clone()
        .ok_or_else(|| "missing required --out".to_string())?;
    let times = match &args.times {
        Some(text) => parse_list(text, "--times")?,
        None => Vec::new(),
    };
    Ok(Resolved {
        barrier,
        sigma,
        p0,
        t: args.t,
        times,
        pmax: args.pmax,
        n: args.n,
        mode,
        out,
        log,
    })
}

/// Default evaluation time: the free peak sits ten packet widths past the
/// barrier.
pub fn default_time(r: &Resolved) -> CliResult<f64> {
    if let Some(t) = r.t {
        return Ok(t);
    }
    if r.p0 <= 0.0 {
        return Err("cannot choose a default time for p0 <= 0; give --t".into());
    }
    Ok((10.0 * r.sigma + r.barrier.width()) / r.p0)
}
