use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::Family;
use crate::selection::SelectorSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Fit,
    Contrast,
    Simulate,
}

/// Settings for one command. Every field is optional in the file so that
/// command-line flags can fill or override it.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    /// Data file for `fit` / `contrast`, scenario file for `simulate`.
    pub input: Option<PathBuf>,
    pub response: Option<String>,
    /// Field delimiter; `"tab"` or a single character.
    pub delimiter: Option<String>,
    pub no_center: Option<bool>,
    pub family: Option<Family>,
    pub selector: Option<SelectorSpec>,
    pub q: Option<f64>,
    #[serde(rename = "B", alias = "b")]
    pub b: Option<usize>,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    /// Column labels or 1-based numbers, comma separated.
    pub subset: Option<String>,
    pub contrast_q: Option<String>,
    pub contrast_r: Option<String>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    /// Split proportions for the `simulate` q sweep.
    pub q_grid: Option<Vec<f64>>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        c.validate()?;
        Ok(c)
    }

    /// Fields set in `over` replace those in `self`.
    pub fn merged(self, over: RunConfig) -> RunConfig {
        macro_rules! pick {
            ($($f:ident),*) => { RunConfig { $($f: over.$f.or(self.$f)),* } };
        }
        pick!(
            command, input, response, delimiter, no_center, family, selector, q, b, seed, alpha, subset,
            contrast_q, contrast_r, out, threads, q_grid
        )
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if let Some(q) = self.q {
            if !(q > 0.0 && q < 1.0) {
                return bad(format!("q = {q} outside (0, 1)"));
            }
        }
        if let Some(g) = &self.q_grid {
            if g.iter().any(|&q| !(q > 0.0 && q < 1.0)) {
                return bad("q_grid entries must lie in (0, 1)".into());
            }
        }
        if let Some(b) = self.b {
            if b < 2 {
                return bad(format!("B = {b}; at least 2 splits are needed"));
            }
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a < 1.0) {
                return bad(format!("alpha = {a} outside (0, 1)"));
            }
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        if let Some(d) = &self.delimiter {
            self::delimiter_byte(d)?;
        }
        Ok(())
    }

    pub fn delimiter_byte(&self) -> Result<u8> {
        match &self.delimiter {
            None => Ok(b','),
            Some(d) => delimiter_byte(d),
        }
    }
}

fn delimiter_byte(d: &str) -> Result<u8> {
    match d {
        "tab" | "\\t" | "\t" => Ok(b'\t'),
        "comma" => Ok(b','),
        s if s.len() == 1 && s.is_ascii() && s != "\n" && s != "\"" => Ok(s.as_bytes()[0]),
        s => Err(Error::Config(format!("unsupported delimiter `{s}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_merges() {
        let c = RunConfig::from_toml(
            "command = \"fit\"\ninput = \"d.csv\"\nfamily = \"binomial\"\nB = 50\nselector = { kind = \"sis\", cap = 5 }\n",
        )
        .unwrap();
        assert_eq!(c.command, Some(Command::Fit));
        assert_eq!(c.family, Some(Family::BinomialLogit));
        assert_eq!(c.b, Some(50));
        let over = RunConfig {
            b: Some(20),
            ..RunConfig::default()
        };
        let m = c.clone().merged(over);
        assert_eq!(m.b, Some(20));
        assert_eq!(m.family, c.family);
    }

    #[test]
    fn rejects_unknown_keys_and_ranges() {
        assert!(matches!(RunConfig::from_toml("bogus = 1"), Err(Error::Config(_))));
        assert!(RunConfig::from_toml("q = 1.0").is_err());
        assert!(RunConfig::from_toml("B = 1").is_err());
        assert!(RunConfig::from_toml("alpha = 0").is_err());
        assert!(RunConfig::from_toml("threads = 0").is_err());
        assert!(RunConfig::from_toml("delimiter = \"ab\"").is_err());
        assert_eq!(RunConfig::from_toml("delimiter = \"tab\"").unwrap().delimiter_byte().unwrap(), b'\t');
    }
}
