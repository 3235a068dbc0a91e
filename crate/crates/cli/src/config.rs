//! INI-style configuration: `[section]` headers and `key = value` lines,
//! with `#`/`;` comments. Unknown sections or keys are rejected so typos
//! fail loudly instead of silently using defaults.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

/// Section → key → (value, line number).
#[derive(Debug, Default, Clone)]
pub struct Config {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

/// Every key the runner understands, by section. Keys outside this table are
/// configuration errors.
const KNOWN_KEYS: &[(&str, &[&str])] = &[
    ("scenario", &["kind"]),
    ("model", &["variant", "mu", "bulk_k", "k_interp", "g_c", "eps", "eta"]),
    ("grid", &["nx", "ny", "lx", "ly"]),
    ("load", &["t"]),
    (
        "solver",
        &["tol_grad", "tol_energy", "dv_tol", "max_outer", "max_newton", "cg_tol", "cg_max_iter"],
    ),
    ("output", &["dir", "vtk", "csv"]),
    ("precrack", &["fraction"]),
    ("recovery", &["eps_list", "opening", "mollifier_factor"]),
    ("calibration", &["eps_list"]),
    ("lemma", &["trials", "seed", "samples"]),
];

impl Config {
    pub fn parse(text: &str) -> Result<Config, String> {
        let mut config = Config::default();
        let mut section = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| format!("line {line_no}: unterminated section header"))?
                    .trim();
                if name.is_empty() {
                    return Err(format!("line {line_no}: empty section name"));
                }
                section = name.to_string();
                config.sections.entry(section.clone()).or_default();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {line_no}: expected `key = value`, got `{line}`"))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(format!("line {line_no}: empty key"));
            }
            if section.is_empty() {
                return Err(format!("line {line_no}: `{key}` appears before any [section]"));
            }
            let previous = config
                .sections
                .get_mut(&section)
                .unwrap()
                .insert(key.to_string(), value.trim().to_string());
            if previous.is_some() {
                return Err(format!("line {line_no}: duplicate key `{section}.{key}`"));
            }
        }
        config.check_known()?;
        Ok(config)
    }

    /// Applies a `section.key=value` command-line override.
    pub fn apply_override(&mut self, spec: &str) -> Result<(), String> {
        let (path, value) = spec
            .split_once('=')
            .ok_or_else(|| format!("override `{spec}` is not of the form section.key=value"))?;
        let (section, key) = path
            .split_once('.')
            .ok_or_else(|| format!("override `{spec}` is not of the form section.key=value"))?;
        let (section, key) = (section.trim(), key.trim());
        if section.is_empty() || key.is_empty() {
            return Err(format!("override `{spec}` is not of the form section.key=value"));
        }
        self.sections
            .entry(section.to_string())
            .or_default()
            .insert(key.to_string(), value.trim().to_string());
        self.check_known()
    }

    fn check_known(&self) -> Result<(), String> {
        for (section, keys) in &self.sections {
            let known = KNOWN_KEYS
                .iter()
                .find(|(name, _)| name == section)
                .map(|(_, keys)| *keys)
                .ok_or_else(|| format!("unknown section `[{section}]`"))?;
            for key in keys.keys() {
                if !known.contains(&key.as_str()) {
                    return Err(format!("unknown key `{section}.{key}`"));
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(String::as_str)
    }

    /// Typed lookup falling back to `default` when the key is absent.
    pub fn parse_or<T>(&self, section: &str, key: &str, default: T) -> Result<T, String>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.get(section, key) {
            None => Ok(default),
            Some(raw) => raw
                .parse()
                .map_err(|e| format!("`{section}.{key}`: cannot parse `{raw}`: {e}")),
        }
    }

    pub fn require(&self, section: &str, key: &str) -> Result<&str, String> {
        self.get(section, key)
            .ok_or_else(|| format!("missing required key `{section}.{key}`"))
    }

    /// Comma-separated list of floats.
    pub fn parse_list_or(
        &self,
        section: &str,
        key: &str,
        default: &[f64],
    ) -> Result<Vec<f64>, String> {
        match self.get(section, key) {
            None => Ok(default.to_vec()),
            Some(raw) => raw
                .split(',')
                .map(|item| {
                    let item = item.trim();
                    item.parse()
                        .map_err(|e| format!("`{section}.{key}`: cannot parse `{item}`: {e}"))
                })
                .collect(),
        }
    }

    pub fn parse_bool_or(&self, section: &str, key: &str, default: bool) -> Result<bool, String> {
        match self.get(section, key) {
            None => Ok(default),
            Some("true") | Some("yes") | Some("on") | Some("1") => Ok(true),
            Some("false") | Some("no") | Some("off") | Some("0") => Ok(false),
            Some(raw) => Err(format!("`{section}.{key}`: cannot parse `{raw}` as a boolean")),
        }
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find(['#', ';']) {
        Some(pos) => &line[..pos],
        None => line,
    }
}
