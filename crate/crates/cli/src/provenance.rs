//! Config hash, seed and command line stamped into every artifact.

use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use chronovec::corpus::HEADER_PREFIX;
use chronovec::embedding::{read_embeddings, EmbeddingSet};
use chronovec::eval::EvalReport;
use chronovec::Scalar;
use serde::Serialize;

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Provenance {
    /// Arguments after the program name.
    pub argv: Vec<String>,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
}

const KEYS: [&str; 4] = ["command", "config_hash", "seed", "version"];

impl Provenance {
    pub fn new(argv: Vec<String>, config_hash: String, seed: u64) -> Self {
        Provenance {
            argv,
            config_hash,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    fn entries(&self) -> [(&'static str, String); 4] {
        [
            (KEYS[0], serde_json::to_string(&self.argv).expect("strings serialize")),
            (KEYS[1], self.config_hash.clone()),
            (KEYS[2], self.seed.to_string()),
            (KEYS[3], self.version.clone()),
        ]
    }

    pub fn stamp_set<T: Scalar>(&self, set: &mut EmbeddingSet<T>) {
        for (k, v) in self.entries() {
            set.set_meta(k, v);
        }
    }

    pub fn stamp_report(&self, report: &mut EvalReport) {
        for (k, v) in self.entries() {
            report.provenance.insert(k.to_string(), v);
        }
    }

    /// `#!key value` lines for text artifacts.
    pub fn header(&self) -> String {
        self.entries()
            .iter()
            .map(|(k, v)| format!("{HEADER_PREFIX}{k} {v}\n"))
            .collect()
    }

    /// The shell command that reproduces the artifact.
    pub fn command_line(&self) -> String {
        std::iter::once("chronovec".to_string())
            .chain(self.argv.iter().map(|a| shell_quote(a)))
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn from_pairs<'a>(pairs: impl Iterator<Item = (&'a str, &'a str)>, path: &Path) -> Result<Self, CliError> {
        let mut found: [Option<String>; 4] = Default::default();
        for (k, v) in pairs {
            if let Some(i) = KEYS.iter().position(|&key| key == k) {
                found[i] = Some(v.to_string());
            }
        }
        let missing = || CliError::Data(format!("{} carries no provenance", path.display()));
        let [Some(cmd), Some(hash), Some(seed), version] = found else {
            return Err(missing());
        };
        let argv: Vec<String> = serde_json::from_str(&cmd).map_err(|_| missing())?;
        Ok(Provenance {
            argv,
            config_hash: hash,
            seed: seed.parse().map_err(|_| missing())?,
            version: version.unwrap_or_default(),
        })
    }

    /// Reads the provenance of an embedding file, JSON report or text
    /// artifact with `#!` header lines.
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let mut head = [0u8; 16];
        let n = std::fs::File::open(path)
            .and_then(|mut f| f.read(&mut head))
            .map_err(|e| CliError::io(path, e))?;
        let head = &head[..n];
        let is_gz = head.starts_with(&[0x1f, 0x8b]);
        if is_gz || head.starts_with(b"chronovec-emb") {
            let set: EmbeddingSet<f64> = read_embeddings(path)?;
            return Self::from_pairs(set.meta().iter().map(|(k, v)| (k.as_str(), v.as_str())), path);
        }
        if head.trim_ascii_start().starts_with(b"{") {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let report = EvalReport::from_json(&text)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            return Self::from_pairs(report.provenance.iter().map(|(k, v)| (k.as_str(), v.as_str())), path);
        }
        let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
        let mut pairs = Vec::new();
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| CliError::io(path, e))?;
            let Some(rest) = line.strip_prefix(HEADER_PREFIX) else {
                break;
            };
            if let Some((k, v)) = rest.split_once(' ') {
                pairs.push((k.to_string(), v.to_string()));
            }
        }
        Self::from_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())), path)
    }
}

/// POSIX shell quoting; plain words are left alone.
pub fn shell_quote(arg: &str) -> String {
    let plain = !arg.is_empty()
        && arg
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "_-./=:,@%+".contains(c));
    if plain {
        arg.to_string()
    } else {
        format!("'{}'", arg.replace('\'', "'\\''"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoting() {
        assert_eq!(shell_quote("--out"), "--out");
        assert_eq!(shell_quote("a b"), "'a b'");
        assert_eq!(shell_quote("it's"), "'it'\\''s'");
        assert_eq!(shell_quote(""), "''");
    }

    #[test]
    fn header_round_trip() {
        let p = Provenance::new(vec!["train".into(), "tsgns".into(), "--out".into(), "x y.emb".into()], "ab".into(), 7);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.tsv");
        std::fs::write(&path, format!("{}a\t3\n", p.header())).unwrap();
        let back = Provenance::read(&path).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.command_line(), "chronovec train tsgns --out 'x y.emb'");
    }
}
