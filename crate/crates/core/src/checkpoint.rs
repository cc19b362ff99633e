//! Resumable skip-gram checkpoints.
//!
//! A checkpoint is an ordinary embedding file holding the input rows plus
//! a sidecar next to it (`<path>.sidecar`) with the output rows at full
//! precision, the method config and the number of finished epochs.
//! Input rows come back at the embedding file's 9 significant digits, so a
//! resumed run matches an uninterrupted one to that precision.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::embedding::{read_embeddings, write_embeddings, EmbeddingSet, Method, Rows, Space};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::methods::MethodConfig;
use crate::sgns::{Mode, SgnsModel};

const SIDECAR_TAG: &str = "chronovec-ckpt v1";

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint<T> {
    pub model: SgnsModel<T>,
    pub words: Vec<String>,
    pub labels: Vec<String>,
    pub config: MethodConfig,
    pub epochs_done: u32,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".sidecar");
    PathBuf::from(s)
}

impl<T: Scalar> Checkpoint<T> {
    /// The model's input rows as an embedding set.
    pub fn input_set(&self) -> Result<EmbeddingSet<T>> {
        let (method, space) = match self.model.mode() {
            Mode::Tagged => (Method::Tsgns, Space::Shared),
            Mode::Plain => (Method::Sgns, Space::Independent),
        };
        EmbeddingSet::new(
            method,
            space,
            self.words.clone(),
            self.labels.clone(),
            self.model.dim(),
            Rows::Dense(self.model.input_weights().to_vec()),
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut set = self.input_set()?;
        set.set_meta("epochs_done", self.epochs_done.to_string());
        write_embeddings(&set, path)?;
        let side = sidecar_path(path);
        let file = File::create(&side).map_err(|e| Error::io(&side, e))?;
        let mut out = BufWriter::new(file);
        let config = serde_json::to_string(&self.config).expect("config serializes");
        let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
            writeln!(out, "{SIDECAR_TAG}")?;
            writeln!(out, "mode {}", mode_name(self.model.mode()))?;
            writeln!(out, "tagged_contexts {}", self.model.tagged_contexts())?;
            writeln!(out, "epochs_done {}", self.epochs_done)?;
            writeln!(out, "config {config}")?;
            writeln!(out, "rows {}", self.model.output_rows())?;
            writeln!(out, "dim {}", self.model.dim())?;
            for r in 0..self.model.output_rows() {
                let vals: Vec<String> = self.model.output_row(r).iter().map(|x| format!("{x:e}")).collect();
                writeln!(out, "{}", vals.join(" "))?;
            }
            writeln!(out, "end")?;
            out.flush()
        };
        write(&mut out).map_err(|e| Error::io(&side, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let set: EmbeddingSet<T> = read_embeddings(path)?;
        let side = sidecar_path(path);
        let file = File::open(&side).map_err(|e| Error::io(&side, e))?;
        let mut lines = BufReader::new(file).lines().enumerate();
        let mut next = || -> Result<(usize, String)> {
            match lines.next() {
                Some((n, Ok(l))) => Ok((n + 1, l)),
                Some((_, Err(e))) => Err(Error::io(&side, e)),
                None => Err(Error::Validation(format!("{}: unexpected end of sidecar", side.display()))),
            }
        };
        let (_, tag) = next()?;
        if tag != SIDECAR_TAG {
            return Err(Error::VersionMismatch {
                expected: SIDECAR_TAG.into(),
                found: tag,
            });
        }
        let mut field = |key: &str| -> Result<String> {
            let (n, line) = next()?;
            line.strip_prefix(key)
                .and_then(|r| r.strip_prefix(' '))
                .map(str::to_string)
                .ok_or_else(|| Error::Parse {
                    line: n,
                    reason: format!("expected {key:?}"),
                })
        };
        let parse_err = |what: &str| Error::Validation(format!("bad {what} in sidecar"));
        let mode = match field("mode")?.as_str() {
            "plain" => Mode::Plain,
            "tagged" => Mode::Tagged,
            _ => return Err(parse_err("mode")),
        };
        let tagged_contexts: bool = field("tagged_contexts")?.parse().map_err(|_| parse_err("tagged_contexts"))?;
        let epochs_done: u32 = field("epochs_done")?.parse().map_err(|_| parse_err("epochs_done"))?;
        let config: MethodConfig = serde_json::from_str(&field("config")?).map_err(|_| parse_err("config"))?;
        let rows: usize = field("rows")?.parse().map_err(|_| parse_err("rows"))?;
        let dim: usize = field("dim")?.parse().map_err(|_| parse_err("dim"))?;
        if dim != set.dim() {
            return Err(Error::DimensionMismatch(format!(
                "sidecar dim {dim}, embedding file dim {}",
                set.dim()
            )));
        }
        let mut output = Vec::with_capacity(rows * dim);
        for found in 0..rows {
            let (n, line) = next().map_err(|_| Error::Truncated { expected: rows, found })?;
            let before = output.len();
            for tok in line.split_whitespace() {
                output.push(tok.parse::<T>().map_err(|_| Error::Parse {
                    line: n,
                    reason: format!("bad value {tok:?}"),
                })?);
            }
            if output.len() - before != dim {
                return Err(Error::DimensionMismatch(format!("sidecar line {n} has {} values", output.len() - before)));
            }
        }
        let Rows::Dense(input) = set.rows().clone() else {
            return Err(Error::Validation("checkpoint input rows must be dense".into()));
        };
        let model = SgnsModel::from_parts(
            mode,
            set.num_words(),
            set.num_periods(),
            dim,
            tagged_contexts,
            input,
            output,
        )?;
        Ok(Checkpoint {
            model,
            words: set.words().to_vec(),
            labels: set.periods().to_vec(),
            config,
            epochs_done,
        })
    }

    /// The epochs still to run of the stored schedule.
    pub fn remaining_epochs(&self) -> Result<std::ops::Range<u32>> {
        let total = self.config.train.epochs;
        if self.epochs_done >= total {
            return Err(Error::InvalidArgument(format!(
                "checkpoint already has {} of {total} epochs",
                self.epochs_done
            )));
        }
        Ok(self.epochs_done..total)
    }
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Plain => "plain",
        Mode::Tagged => "tagged",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sgns::init_model;

    #[test]
    fn round_trip_keeps_output_rows_exactly() {
        let mut model = init_model::<f64>(3, 2, 4, Mode::Tagged, false, 5).unwrap();
        for (i, x) in model.output_weights_mut().iter_mut().enumerate() {
            *x = (i as f64).sin() / 3.0;
        }
        let ck = Checkpoint {
            model,
            words: vec!["a".into(), "b".into(), "c".into()],
            labels: vec!["1900".into(), "1910".into()],
            config: MethodConfig::default(),
            epochs_done: 2,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.emb");
        ck.save(&path).unwrap();
        let back = Checkpoint::<f64>::load(&path).unwrap();
        assert_eq!(back.model.output_weights(), ck.model.output_weights());
        assert_eq!(back.epochs_done, 2);
        assert_eq!(back.config, ck.config);
        for (a, b) in back.model.input_weights().iter().zip(ck.model.input_weights()) {
            assert!((a - b).abs() <= 1e-8 * b.abs().max(1e-300));
        }
    }

    #[test]
    fn remaining_epochs_follow_the_schedule() {
        let model = init_model::<f32>(2, 1, 2, Mode::Plain, false, 1).unwrap();
        let mut ck = Checkpoint {
            model,
            words: vec!["a".into(), "b".into()],
            labels: vec!["all".into()],
            config: MethodConfig::default(),
            epochs_done: 3,
        };
        assert_eq!(ck.remaining_epochs().unwrap(), 3..5);
        ck.epochs_done = 5;
        assert!(ck.remaining_epochs().is_err());
    }
}
