//! Noisy pairwise oracles: a seeded simulator and a replay of a recorded trace.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, Pair};

/// Anything that answers "are `i` and `j` together?" with a noisy bit.
pub trait Oracle {
    fn items(&self) -> usize;
    fn query(&mut self, pair: Pair) -> Result<bool>;
}

/// One answered query. `t` counts from 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QueryRecord {
    pub t: u64,
    pub pair: Pair,
    pub y: bool,
}

#[derive(Serialize, Deserialize)]
struct TraceRow {
    t: u64,
    i: usize,
    j: usize,
    y: u8,
}

fn check_pair(pair: Pair, m: usize) -> Result<()> {
    if pair.i >= pair.j || pair.j >= m {
        return Err(Error::PairOutOfRange {
            i: pair.i + 1,
            j: pair.j + 1,
            m,
        });
    }
    Ok(())
}

/// Draws `Ber(p)` for same-cluster pairs and `Ber(q)` otherwise from a single
/// ChaCha stream, so a seed and a query sequence fix every answer.
#[derive(Clone, Debug)]
pub struct SimulatedOracle {
    instance: Instance,
    rng: ChaCha8Rng,
}

impl SimulatedOracle {
    pub fn new(instance: Instance, seed: u64) -> Self {
        SimulatedOracle {
            instance,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }
}

impl Oracle for SimulatedOracle {
    fn items(&self) -> usize {
        self.instance.items()
    }

    fn query(&mut self, pair: Pair) -> Result<bool> {
        check_pair(pair, self.items())?;
        let same = self.instance.partition().same_cluster(pair.i, pair.j);
        let prob = if same { self.instance.p() } else { self.instance.q() };
        Ok(self.rng.gen::<f64>() < prob)
    }
}

/// Replays a trace. Any deviation from the recorded query order is an error.
#[derive(Clone, Debug)]
pub struct RecordedOracle {
    m: usize,
    records: Vec<QueryRecord>,
    pos: usize,
}

impl RecordedOracle {
    pub fn new(m: usize, records: Vec<QueryRecord>) -> Self {
        RecordedOracle { m, records, pos: 0 }
    }

    pub fn from_file(m: usize, path: &Path) -> Result<Self> {
        Ok(RecordedOracle::new(m, read_trace(path)?))
    }

    pub fn remaining(&self) -> usize {
        self.records.len() - self.pos
    }
}

impl Oracle for RecordedOracle {
    fn items(&self) -> usize {
        self.m
    }

    fn query(&mut self, pair: Pair) -> Result<bool> {
        check_pair(pair, self.m)?;
        let rec = self
            .records
            .get(self.pos)
            .ok_or(Error::TraceExhausted(self.pos as u64))?;
        if rec.pair != pair {
            return Err(Error::TraceMismatch {
                t: rec.t,
                ei: rec.pair.i + 1,
                ej: rec.pair.j + 1,
                gi: pair.i + 1,
                gj: pair.j + 1,
            });
        }
        self.pos += 1;
        Ok(rec.y)
    }
}

/// Wraps another oracle and keeps every answer.
#[derive(Clone, Debug)]
pub struct Recording<O> {
    inner: O,
    records: Vec<QueryRecord>,
}

impl<O: Oracle> Recording<O> {
    pub fn new(inner: O) -> Self {
        Recording {
            inner,
            records: Vec::new(),
        }
    }

    pub fn records(&self) -> &[QueryRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<QueryRecord> {
        self.records
    }
}

impl<O: Oracle> Oracle for Recording<O> {
    fn items(&self) -> usize {
        self.inner.items()
    }

    fn query(&mut self, pair: Pair) -> Result<bool> {
        let y = self.inner.query(pair)?;
        self.records.push(QueryRecord {
            t: self.records.len() as u64 + 1,
            pair,
            y,
        });
        Ok(y)
    }
}

/// Writes a `t,i,j,y` trace with 1-indexed items.
pub fn write_trace(path: &Path, records: &[QueryRecord]) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    if records.is_empty() {
        w.write_record(["t", "i", "j", "y"]).map_err(csv_err)?;
    }
    for r in records {
        let (i, j) = r.pair.labels();
        w.serialize(TraceRow {
            t: r.t,
            i,
            j,
            y: r.y as u8,
        })
        .map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_trace(path: &Path) -> Result<Vec<QueryRecord>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let mut out = Vec::new();
    for row in r.deserialize::<TraceRow>() {
        let row = row.map_err(csv_err)?;
        if row.i == 0 || row.j == 0 || row.i == row.j || row.y > 1 {
            return Err(Error::Config(format!(
                "{}: malformed trace row at t = {}",
                path.display(),
                row.t
            )));
        }
        out.push(QueryRecord {
            t: row.t,
            pair: Pair::new(row.i - 1, row.j - 1),
            y: row.y == 1,
        });
    }
    Ok(out)
}
