use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::runner::RunRecord;
use crate::Result;

pub const CSV_HEADER: [&str; 9] = [
    "seed",
    "iteration",
    "agent",
    "policy_0",
    "action_mean",
    "reward",
    "dist_local",
    "dist_global",
    "wall_ms",
];

pub fn run_file(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("run_{seed}.csv"))
}

pub fn summary_file(dir: &Path) -> PathBuf {
    dir.join("summary.json")
}

/// CSV bytes for one run: header row, LF line endings, empty cells for absent values.
pub fn to_csv(records: &[RunRecord]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in records {
        w.write_record([
            r.seed.to_string(),
            r.iteration.to_string(),
            r.agent.to_string(),
            opt(r.policy_0),
            opt(r.action_mean),
            r.reward.to_string(),
            opt(r.dist_local),
            opt(r.dist_global),
            r.wall_ms.map(|m| m.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

pub fn read_csv(path: &Path) -> Result<Vec<RunRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    if headers.iter().ne(CSV_HEADER) {
        return Err(crate::Error::Config(format!(
            "{}: unexpected header {:?}",
            path.display(),
            headers
        )));
    }
    r.deserialize().map(|row| Ok(row?)).collect()
}

/// Writes to a sibling temporary file, then renames over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(policy: Option<f64>, action: Option<f64>) -> RunRecord {
        RunRecord {
            seed: 7,
            iteration: 2,
            agent: 1,
            policy_0: policy,
            action_mean: action,
            reward: -0.25,
            dist_local: None,
            dist_global: Some(0.1),
            wall_ms: None,
        }
    }

    #[test]
    fn csv_layout() {
        let bytes = to_csv(&[row(Some(0.5), None)]).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert_eq!(
            text,
            "seed,iteration,agent,policy_0,action_mean,reward,dist_local,dist_global,wall_ms\n\
             7,2,1,0.5,,-0.25,,0.1,\n"
        );
    }

    #[test]
    fn csv_round_trip_and_atomic_write() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![row(Some(0.1 + 0.2), None), row(None, Some(-9.999999999999))];
        let path = run_file(dir.path(), 7);
        write_atomic(&path, &to_csv(&rows).unwrap()).unwrap();
        assert_eq!(read_csv(&path).unwrap(), rows);
        let leftovers: Vec<_> = fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(leftovers.len(), 1);
    }
}
