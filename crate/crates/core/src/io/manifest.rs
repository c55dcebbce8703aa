//! Study manifests: input channels plus every pipeline parameter.
//!
//! Two syntaxes are accepted. Key/value text, one `key = value` per line with
//! `#` comments:
//!
//! ```text
//! channel.cbf = study.mpv#cbf
//! channel.adc = study.mpv#adc
//! channel.t2  = study.mpv#t2
//! mask = study.mpv#mask
//! method = isomap
//! k = 40
//! ```
//!
//! or a flat JSON object with the same keys. Channel sources are
//! `path[#channel]`, relative to the manifest's directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::consensus::ConsensusParams;
use crate::error::{Error, Result};
use crate::manifold::Method;
use crate::pipeline::{EmbedConfig, PerfusionPolarity, PipelineConfig, StudyInput, TissueRule};
use crate::volume::{Mask, ParametricVolume};

use super::read_mpv_file;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelSource {
    pub path: PathBuf,
    pub channel: Option<String>,
}

impl ChannelSource {
    pub fn parse(s: &str) -> Self {
        match s.rsplit_once('#') {
            Some((p, c)) => Self {
                path: PathBuf::from(p),
                channel: Some(c.to_string()),
            },
            None => Self {
                path: PathBuf::from(s),
                channel: None,
            },
        }
    }
}

impl std::fmt::Display for ChannelSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.path.display())?;
        if let Some(c) = &self.channel {
            write!(f, "#{c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyManifest {
    /// Feature channels in stacking order.
    pub channels: Vec<(String, ChannelSource)>,
    pub mask: Option<ChannelSource>,
    pub perfusion: PerfusionPolarity,
    /// Overrides the spacing stored in the volume files.
    pub spacing: Option<(f64, f64)>,
    pub config: PipelineConfig,
}

/// Documented parameter ranges; values outside them need `--force`.
pub const K_RANGE: (usize, usize) = (20, 80);
pub const SIGMA_RANGE: (f64, f64) = (60.0, 100.0);
pub const CLUSTER_RANGE: (usize, usize) = (3, 13);
pub const H_RANGE: (usize, usize) = (3, 13);
pub const DIM_RANGE: (usize, usize) = (1, 3);

const KEYS: [&str; 21] = [
    "mask",
    "perfusion",
    "spacing",
    "method",
    "k",
    "sigma",
    "d",
    "t",
    "k1",
    "k2",
    "h",
    "threshold",
    "landmarks",
    "normalization",
    "seed",
    "disconnected",
    "extension_k",
    "rule.adc_infarct",
    "rule.perfusion_infarct",
    "rule.adc_at_risk",
    "rule.perfusion_at_risk",
];

fn out_of_range(name: &str, value: impl ToString, range: impl ToString) -> Error {
    Error::OutOfRangeParam {
        name: name.into(),
        value: value.to_string(),
        range: range.to_string(),
    }
}

/// Raw `key → (value, line)` pairs, channels kept in document order.
struct Entries {
    values: BTreeMap<String, (String, usize)>,
    channels: Vec<(String, String, usize)>,
}

fn insert(e: &mut Entries, key: &str, value: String, line: usize) -> Result<()> {
    if let Some(name) = key.strip_prefix("channel.") {
        if name.is_empty() {
            return Err(Error::SyntaxError {
                line,
                message: "empty channel name".into(),
            });
        }
        if e.channels.iter().any(|c| c.0 == name) {
            return Err(Error::SyntaxError {
                line,
                message: format!("channel `{name}` given twice"),
            });
        }
        e.channels.push((name.to_string(), value, line));
        return Ok(());
    }
    if !KEYS.contains(&key) {
        return Err(Error::SyntaxError {
            line,
            message: format!("unknown key `{key}`"),
        });
    }
    if e.values.insert(key.to_string(), (value, line)).is_some() {
        return Err(Error::SyntaxError {
            line,
            message: format!("key `{key}` given twice"),
        });
    }
    Ok(())
}

/// `#` opens a comment at line start or after whitespace; elsewhere it
/// belongs to a `path#channel` source.
fn strip_comment(line: &str) -> &str {
    let mut prev_space = true;
    for (i, ch) in line.char_indices() {
        if ch == '#' && prev_space {
            return &line[..i];
        }
        prev_space = ch.is_whitespace();
    }
    line
}

fn parse_key_value(text: &str) -> Result<Entries> {
    let mut e = Entries {
        values: BTreeMap::new(),
        channels: Vec::new(),
    };
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let trimmed = strip_comment(raw).trim();
        if trimmed.is_empty() {
            continue;
        }
        let (k, v) = trimmed.split_once('=').ok_or_else(|| Error::SyntaxError {
            line,
            message: format!("expected `key = value`, found `{trimmed}`"),
        })?;
        insert(
            &mut e,
            &k.trim().to_ascii_lowercase(),
            v.trim().to_string(),
            line,
        )?;
    }
    Ok(e)
}

fn line_of(text: &str, needle: &str) -> usize {
    text.lines()
        .position(|l| l.contains(needle))
        .map_or(1, |i| i + 1)
}

fn parse_json(text: &str) -> Result<Entries> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::SyntaxError {
        line: e.line(),
        message: e.to_string(),
    })?;
    let obj = value.as_object().ok_or_else(|| Error::SyntaxError {
        line: 1,
        message: "manifest JSON must be an object".into(),
    })?;
    let mut e = Entries {
        values: BTreeMap::new(),
        channels: Vec::new(),
    };
    for (k, v) in obj {
        let line = line_of(text, &format!("\"{k}\""));
        let s = match v {
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Number(n) => n.to_string(),
            serde_json::Value::Array(items) => items
                .iter()
                .map(|i| match i {
                    serde_json::Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect::<Vec<_>>()
                .join(","),
            other => {
                return Err(Error::SyntaxError {
                    line,
                    message: format!("unsupported value {other} for `{k}`"),
                })
            }
        };
        insert(&mut e, &k.to_ascii_lowercase(), s, line)?;
    }
    Ok(e)
}

fn value<T: std::str::FromStr>(e: &Entries, key: &str, default: T) -> Result<T> {
    match e.values.get(key) {
        None => Ok(default),
        Some((v, line)) => v.parse().map_err(|_| Error::SyntaxError {
            line: *line,
            message: format!("cannot parse `{v}` as the value of `{key}`"),
        }),
    }
}

fn parsed<T: std::str::FromStr<Err = Error>>(e: &Entries, key: &str, default: T) -> Result<T> {
    match e.values.get(key) {
        None => Ok(default),
        Some((v, line)) => v.parse().map_err(|err: Error| Error::SyntaxError {
            line: *line,
            message: err.to_string(),
        }),
    }
}

/// Parse a key/value or JSON manifest, fill defaults, and check parameter
/// ranges (skipped when `force` is set).
pub fn parse_manifest(text: &str, force: bool) -> Result<StudyManifest> {
    let e = if text.trim_start().starts_with('{') {
        parse_json(text)?
    } else {
        parse_key_value(text)?
    };
    let d = PipelineConfig::default();
    let perfusion: PerfusionPolarity = parsed(&e, "perfusion", PerfusionPolarity::Cbf)?;
    let spacing = match e.values.get("spacing") {
        None => None,
        Some((v, line)) => {
            let parts: Vec<&str> = v.split(',').map(str::trim).collect();
            let err = || Error::SyntaxError {
                line: *line,
                message: format!("spacing must be `dx,dy` in mm, got `{v}`"),
            };
            if parts.len() != 2 {
                return Err(err());
            }
            let (dx, dy) = (
                parts[0].parse::<f64>().map_err(|_| err())?,
                parts[1].parse::<f64>().map_err(|_| err())?,
            );
            if !(dx > 0.0 && dy > 0.0) {
                return Err(err());
            }
            Some((dx, dy))
        }
    };
    let embed = EmbedConfig {
        method: parsed(&e, "method", d.embed.method)?,
        k: value(&e, "k", d.embed.k)?,
        sigma: value(&e, "sigma", d.embed.sigma)?,
        dim: value(&e, "d", d.embed.dim)?,
        t: value(&e, "t", d.embed.t)?,
        landmarks: value(&e, "landmarks", d.embed.landmarks)?,
        extension_k: value(&e, "extension_k", d.embed.extension_k)?,
        seed: value(&e, "seed", d.embed.seed)?,
        graph_policy: parsed(&e, "disconnected", d.embed.graph_policy)?,
    };
    let consensus = ConsensusParams {
        k1: value(&e, "k1", d.consensus.k1)?,
        k2: value(&e, "k2", d.consensus.k2)?,
        repetitions: value(&e, "h", d.consensus.repetitions)?,
        threshold: value(&e, "threshold", d.consensus.threshold)?,
        seed: embed.seed,
    };
    let rule = TissueRule {
        adc_infarct: value(&e, "rule.adc_infarct", d.rule.adc_infarct)?,
        perfusion_infarct: value(&e, "rule.perfusion_infarct", d.rule.perfusion_infarct)?,
        adc_at_risk: value(&e, "rule.adc_at_risk", d.rule.adc_at_risk)?,
        perfusion_at_risk: value(&e, "rule.perfusion_at_risk", d.rule.perfusion_at_risk)?,
    };
    let manifest = StudyManifest {
        channels: e
            .channels
            .iter()
            .map(|(name, src, _)| (name.clone(), ChannelSource::parse(src)))
            .collect(),
        mask: e.values.get("mask").map(|(v, _)| ChannelSource::parse(v)),
        perfusion,
        spacing,
        config: PipelineConfig {
            normalization: parsed(&e, "normalization", d.normalization)?,
            embed,
            consensus,
            rule,
        },
    };
    for required in [
        perfusion.channel(),
        crate::pipeline::ADC_CHANNEL,
        crate::pipeline::T2_CHANNEL,
    ] {
        if !manifest.channels.iter().any(|(n, _)| n == required) {
            return Err(Error::MissingChannel(required.into()));
        }
    }
    manifest.check_ranges(force)?;
    Ok(manifest)
}

/// Hard limits always apply; documented ranges only without `force`.
pub fn check_config_ranges(config: &PipelineConfig, force: bool) -> Result<()> {
    let e = &config.embed;
    let c = &config.consensus;
    if !(DIM_RANGE.0..=DIM_RANGE.1).contains(&e.dim) {
        return Err(out_of_range("d", e.dim, "[1, 3]"));
    }
    if !(c.threshold > 0.0 && c.threshold < 1.0) {
        return Err(out_of_range("threshold", c.threshold, "(0, 1)"));
    }
    if c.k1 == 0 || c.k1 > c.k2 {
        return Err(out_of_range("k1", c.k1, format!("[1, k2 = {}]", c.k2)));
    }
    if c.repetitions == 0 {
        return Err(out_of_range("h", 0, ">= 1"));
    }
    if e.t == 0 {
        return Err(out_of_range("t", 0, ">= 1"));
    }
    if e.landmarks < 2 {
        return Err(out_of_range("landmarks", e.landmarks, ">= 2"));
    }
    if e.extension_k == 0 {
        return Err(out_of_range("extension_k", 0, ">= 1"));
    }
    if !(e.sigma > 0.0) {
        return Err(out_of_range("sigma", e.sigma, "> 0"));
    }
    if force {
        return Ok(());
    }
    if e.method != Method::DiffusionMap && !(K_RANGE.0..=K_RANGE.1).contains(&e.k) {
        return Err(out_of_range("k", e.k, "[20, 80]"));
    }
    if e.method == Method::DiffusionMap && !(SIGMA_RANGE.0..=SIGMA_RANGE.1).contains(&e.sigma) {
        return Err(out_of_range("sigma", e.sigma, "[60, 100]"));
    }
    for (name, v) in [("k1", c.k1), ("k2", c.k2)] {
        if !(CLUSTER_RANGE.0..=CLUSTER_RANGE.1).contains(&v) {
            return Err(out_of_range(name, v, "[3, 13]"));
        }
    }
    if !(H_RANGE.0..=H_RANGE.1).contains(&c.repetitions) {
        return Err(out_of_range("h", c.repetitions, "[3, 13]"));
    }
    Ok(())
}

impl StudyManifest {
    pub fn check_ranges(&self, force: bool) -> Result<()> {
        check_config_ranges(&self.config, force)
    }

    /// Key/value text with every key spelled out, in a fixed order.
    pub fn to_canonical(&self) -> String {
        let c = &self.config;
        let mut s = String::new();
        for (name, src) in &self.channels {
            writeln!(s, "channel.{name} = {src}").unwrap();
        }
        if let Some(m) = &self.mask {
            writeln!(s, "mask = {m}").unwrap();
        }
        writeln!(s, "perfusion = {}", self.perfusion).unwrap();
        if let Some((dx, dy)) = self.spacing {
            writeln!(s, "spacing = {dx},{dy}").unwrap();
        }
        writeln!(s, "method = {}", c.embed.method).unwrap();
        writeln!(s, "k = {}", c.embed.k).unwrap();
        writeln!(s, "sigma = {}", c.embed.sigma).unwrap();
        writeln!(s, "d = {}", c.embed.dim).unwrap();
        writeln!(s, "t = {}", c.embed.t).unwrap();
        writeln!(s, "k1 = {}", c.consensus.k1).unwrap();
        writeln!(s, "k2 = {}", c.consensus.k2).unwrap();
        writeln!(s, "h = {}", c.consensus.repetitions).unwrap();
        writeln!(s, "threshold = {}", c.consensus.threshold).unwrap();
        writeln!(s, "landmarks = {}", c.embed.landmarks).unwrap();
        writeln!(s, "extension_k = {}", c.embed.extension_k).unwrap();
        writeln!(s, "normalization = {}", c.normalization).unwrap();
        writeln!(s, "seed = {}", c.embed.seed).unwrap();
        writeln!(s, "disconnected = {}", c.embed.graph_policy).unwrap();
        writeln!(s, "rule.adc_infarct = {}", c.rule.adc_infarct).unwrap();
        writeln!(s, "rule.perfusion_infarct = {}", c.rule.perfusion_infarct).unwrap();
        writeln!(s, "rule.adc_at_risk = {}", c.rule.adc_at_risk).unwrap();
        writeln!(s, "rule.perfusion_at_risk = {}", c.rule.perfusion_at_risk).unwrap();
        s
    }

    /// Read every referenced volume; relative paths resolve against `base`.
    pub fn load_study(&self, base: &Path) -> Result<StudyInput> {
        let mut cache: BTreeMap<PathBuf, Vec<ParametricVolume>> = BTreeMap::new();
        let mut fetch = |name: &str, src: &ChannelSource| -> Result<ParametricVolume> {
            let path = if src.path.is_absolute() {
                src.path.clone()
            } else {
                base.join(&src.path)
            };
            if !cache.contains_key(&path) {
                let vols = read_mpv_file(&path)?;
                cache.insert(path.clone(), vols);
            }
            let vols = &cache[&path];
            let wanted = src.channel.as_deref().unwrap_or(name);
            let found = vols
                .iter()
                .find(|v| v.name == wanted)
                .or(if src.channel.is_none() && vols.len() == 1 {
                    vols.first()
                } else {
                    None
                })
                .ok_or_else(|| {
                    Error::MissingChannel(format!("{wanted} (in {})", path.display()))
                })?;
            let mut v = found.clone();
            v.name = name.to_string();
            if let Some(s) = self.spacing {
                v.spacing = s;
            }
            Ok(v)
        };
        let mut volumes = Vec::with_capacity(self.channels.len());
        for (name, src) in &self.channels {
            volumes.push(fetch(name, src)?);
        }
        let mask = match &self.mask {
            Some(src) => Some(Mask::from_volume(&fetch("mask", src)?)),
            None => None,
        };
        StudyInput::new(volumes, mask, self.perfusion)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::Normalization;

    const MINIMAL: &str =
        "channel.cbf = s.mpv#cbf\nchannel.adc = s.mpv#adc\nchannel.t2 = s.mpv#t2\n";

    #[test]
    fn defaults_applied() {
        let m = parse_manifest(MINIMAL, false).unwrap();
        let c = &m.config;
        assert_eq!(c.embed.k, 40);
        assert_eq!(c.embed.sigma, 80.0);
        assert_eq!(c.embed.dim, 3);
        assert_eq!(c.embed.t, 1);
        assert_eq!(
            (c.consensus.k1, c.consensus.k2, c.consensus.repetitions),
            (3, 13, 10)
        );
        assert_eq!(c.consensus.threshold, 0.75);
        assert_eq!(c.embed.landmarks, 2000);
        assert_eq!(c.normalization, Normalization::ZScore);
        assert_eq!((c.embed.seed, c.consensus.seed), (1, 1));
        assert_eq!(m.perfusion, PerfusionPolarity::Cbf);
        assert_eq!(
            m.channels[1].1,
            ChannelSource {
                path: "s.mpv".into(),
                channel: Some("adc".into())
            }
        );
    }

    #[test]
    fn k_out_of_range() {
        let text = format!("{MINIMAL}k = 200\n");
        match parse_manifest(&text, false) {
            Err(Error::OutOfRangeParam { name, range, .. }) => {
                assert_eq!(name, "k");
                assert_eq!(range, "[20, 80]");
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(parse_manifest(&text, true).unwrap().config.embed.k, 200);
    }

    #[test]
    fn missing_channel_and_unknown_key() {
        assert_eq!(
            parse_manifest("channel.cbf = a\nchannel.adc = b\n", false),
            Err(Error::MissingChannel("t2".into()))
        );
        assert_eq!(
            parse_manifest(&format!("{MINIMAL}# comment\n\ncolour = red\n"), false),
            Err(Error::SyntaxError {
                line: 6,
                message: "unknown key `colour`".into()
            })
        );
        assert!(matches!(
            parse_manifest(&format!("{MINIMAL}k = many\n"), false),
            Err(Error::SyntaxError { line: 4, .. })
        ));
        assert!(matches!(
            parse_manifest("channel.adc\n", false),
            Err(Error::SyntaxError { line: 1, .. })
        ));
    }

    #[test]
    fn canonical_round_trip() {
        let text = format!("{MINIMAL}mask = s.mpv#mask\nmethod = lle\n k = 30 # smaller\nspacing = 0.25, 0.25\nthreshold=0.8\n");
        let m = parse_manifest(&text, false).unwrap();
        let canon = m.to_canonical();
        let again = parse_manifest(&canon, false).unwrap();
        assert_eq!(again, m);
        assert_eq!(again.to_canonical(), canon);
        assert!(canon.contains("method = lle\nk = 30\n"));
    }

    #[test]
    fn json_form() {
        let json = r#"{
  "channel.cbf": "s.mpv#cbf",
  "channel.adc": "s.mpv#adc",
  "channel.t2": "s.mpv#t2",
  "method": "dfm",
  "sigma": 70,
  "spacing": [0.25, 0.5]
}"#;
        let m = parse_manifest(json, false).unwrap();
        assert_eq!(m.config.embed.method, Method::DiffusionMap);
        assert_eq!(m.config.embed.sigma, 70.0);
        assert_eq!(m.spacing, Some((0.25, 0.5)));
        assert_eq!(parse_manifest(&m.to_canonical(), false).unwrap(), m);
        let bad = "{\n  \"channel.cbf\": \"a\",\n  \"bogus\": 1\n}";
        assert!(matches!(
            parse_manifest(bad, false),
            Err(Error::SyntaxError { line: 3, .. })
        ));
        assert!(matches!(
            parse_manifest("{\n \"k\": \n}", false),
            Err(Error::SyntaxError { line: 3, .. })
        ));
    }
}
