//! Incremental, order-preserving partial-result writer.
//!
//! Realizations complete in arbitrary thread order but the file must list
//! them in k-order to stay byte-reproducible. Completed entries are parked
//! until every smaller k has been written, then flushed.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;

use splitscore_core::report::fmt_f64;
use splitscore_core::{Error, Result};

pub struct OrderedSink {
    inner: Mutex<SinkState>,
}

struct SinkState {
    writer: BufWriter<File>,
    next: usize,
    pending: BTreeMap<usize, f64>,
}

impl OrderedSink {
    /// Open (or append to) a partials file. `completed` is how many leading
    /// realizations are already on disk from a previous run.
    pub fn open(path: impl AsRef<Path>, completed: usize) -> Result<Self> {
        let fresh = completed == 0;
        let file = File::options()
            .create(true)
            .append(!fresh)
            .write(true)
            .truncate(fresh)
            .open(path)?;
        let mut writer = BufWriter::new(file);
        if fresh {
            writer.write_all(b"k,partial\n")?;
            writer.flush()?;
        }
        Ok(OrderedSink {
            inner: Mutex::new(SinkState {
                writer,
                next: completed,
                pending: BTreeMap::new(),
            }),
        })
    }

    /// Record realization `k`; flushes every consecutive entry now available.
    pub fn push(&self, k: usize, value: f64) -> Result<()> {
        let mut state = self.inner.lock().expect("sink mutex poisoned");
        state.pending.insert(k, value);
        loop {
            let next = state.next;
            let Some(v) = state.pending.remove(&next) else {
                break;
            };
            let line = format!("{next},{}\n", fmt_f64(v));
            state.writer.write_all(line.as_bytes())?;
            state.writer.flush()?;
            state.next += 1;
        }
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        let state = self.inner.into_inner().expect("sink mutex poisoned");
        if !state.pending.is_empty() {
            return Err(Error::Numerical(format!(
                "{} partials never flushed (missing earlier realizations)",
                state.pending.len()
            )));
        }
        Ok(())
    }
}

/// Read back `k,partial` rows written by [`OrderedSink`]; returns the
/// leading run of consecutive partials starting at k=0 (a torn tail from an
/// interrupted run is ignored).
pub fn read_partials(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 || line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once(',') else {
            break;
        };
        let (Ok(k), Ok(v)) = (k.parse::<usize>(), v.parse::<f64>()) else {
            break;
        };
        if k != out.len() {
            break;
        }
        out.push(v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn out_of_order_pushes_flush_in_order() {
        let dir = std::env::temp_dir().join("splitscore-sink-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("partials.csv");
        let sink = OrderedSink::open(&path, 0).unwrap();
        sink.push(2, 2.5).unwrap();
        sink.push(0, 0.5).unwrap();
        sink.push(1, 1.5).unwrap();
        sink.finish().unwrap();
        assert_eq!(read_partials(&path).unwrap(), vec![0.5, 1.5, 2.5]);
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "k,partial\n0,0.5\n1,1.5\n2,2.5\n");
    }

    #[test]
    fn resume_appends_after_completed_prefix() {
        let dir = std::env::temp_dir().join("splitscore-sink-test2");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("partials.csv");
        {
            let sink = OrderedSink::open(&path, 0).unwrap();
            sink.push(0, 0.5).unwrap();
            sink.push(1, 1.5).unwrap();
            sink.finish().unwrap();
        }
        let done = read_partials(&path).unwrap();
        assert_eq!(done.len(), 2);
        let sink = OrderedSink::open(&path, done.len()).unwrap();
        sink.push(2, 2.5).unwrap();
        sink.finish().unwrap();
        assert_eq!(read_partials(&path).unwrap(), vec![0.5, 1.5, 2.5]);
    }
}
