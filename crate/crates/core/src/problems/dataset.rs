use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::{Deserialize, Serialize};

use super::{Family, Instance, Split};
use crate::error::{Error, Result};

pub const SCHEMA_TAG: &str = "dll-dataset/v1";

/// Reference optimum cached next to an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRecord {
    pub value: f64,
    /// Optimal multipliers of the hard constraints.
    pub y_star: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub index: usize,
    pub seed: u64,
    pub split: Split,
    #[serde(flatten)]
    pub instance: Instance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleRecord>,
}

#[derive(Serialize)]
struct LineOut<'a> {
    schema: &'a str,
    #[serde(flatten)]
    record: &'a Record,
}

#[derive(Deserialize)]
struct LineIn {
    schema: String,
    #[serde(flatten)]
    record: Record,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub family: Family,
    pub records: Vec<Record>,
}

impl Dataset {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &Record> {
        self.records.iter().filter(move |r| r.split == split)
    }

    pub fn split_len(&self, split: Split) -> usize {
        self.split(split).count()
    }

    /// Fails with a message naming the split when it is empty.
    pub fn require_split(&self, split: Split) -> Result<Vec<&Record>> {
        let recs: Vec<&Record> = self.split(split).collect();
        if recs.is_empty() {
            Err(Error::validation(format!("dataset has no '{split}' split")))
        } else {
            Ok(recs)
        }
    }

    /// `(m, n)` of the first instance.
    pub fn dims(&self) -> (usize, usize) {
        self.records.first().map_or((0, 0), |r| r.instance.dims())
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for rec in &self.records {
            serde_json::to_writer(
                &mut out,
                &LineOut {
                    schema: SCHEMA_TAG,
                    record: rec,
                },
            )?;
            out.write_all(b"\n").map_err(|e| Error::io("<writer>", e))?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)
            .expect("serializing to memory cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self> {
        let mut records = Vec::new();
        let mut family = None;
        for (i, line) in input.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| Error::Parse {
                line: line_no,
                reason: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: LineIn = serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: line_no,
                reason: e.to_string(),
            })?;
            if parsed.schema != SCHEMA_TAG {
                return Err(Error::Parse {
                    line: line_no,
                    reason: format!("unsupported schema '{}', expected '{SCHEMA_TAG}'", parsed.schema),
                });
            }
            let rec = parsed.record;
            rec.instance.validate().map_err(|e| Error::Parse {
                line: line_no,
                reason: e.to_string(),
            })?;
            let fam = rec.instance.family();
            match family {
                None => family = Some(fam),
                Some(f) if f != fam => {
                    return Err(Error::Parse {
                        line: line_no,
                        reason: format!("mixed families: {f} and {fam}"),
                    })
                }
                _ => {}
            }
            records.push(rec);
        }
        let family = family.ok_or(Error::Parse {
            line: 0,
            reason: "dataset is empty".into(),
        })?;
        Ok(Self { family, records })
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        Self::read_jsonl(text.as_bytes())
    }

    /// Writes JSONL, gzip-compressed when the path ends in `.gz`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        if is_gz(path) {
            let mut enc = GzEncoder::new(BufWriter::new(file), Compression::default());
            self.write_jsonl(&mut enc)?;
            enc.finish()
                .and_then(|mut w| w.flush())
                .map_err(|e| Error::io(path, e))?;
        } else {
            let mut w = BufWriter::new(file);
            self.write_jsonl(&mut w)?;
            w.flush().map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let reader: Box<dyn Read> = if is_gz(path) {
            Box::new(GzDecoder::new(file))
        } else {
            Box::new(file)
        };
        Self::read_jsonl(BufReader::new(reader))
    }
}

fn is_gz(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}
