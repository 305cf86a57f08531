use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::sweep::{SweepResult, SweepRow};
use crate::error::{Error, Result};

pub const PLOT_HEADER: &str = "# n channels gamma epsilon alpha mean_rounds max_rounds std_rounds";
pub const SUMMARY_FILE: &str = "summary.json";

/// Whitespace-separated series for one mode. Each `(n, channels, gamma, epsilon)`
/// series is a block, blocks separated by a blank line; x is `alpha`.
pub fn series_text(rows: &[&SweepRow]) -> String {
    let mut out = String::from(PLOT_HEADER);
    out.push('\n');
    let mut last = None;
    for r in rows {
        let p = &r.point;
        let key = (
            p.n,
            p.channels,
            p.gamma.map(f64::to_bits),
            p.epsilon.to_bits(),
        );
        if last.is_some_and(|k| k != key) {
            out.push('\n');
        }
        last = Some(key);
        let gamma = p.gamma.map_or_else(|| "-".to_string(), |g| g.to_string());
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {} {}",
            p.n, p.channels, gamma, p.epsilon, p.alpha, r.mean_rounds, r.max_rounds, r.std_rounds
        );
    }
    out
}

pub fn summary_json(result: &SweepResult) -> Result<String> {
    serde_json::to_string_pretty(result).map_err(|e| Error::Config(e.to_string()))
}

pub fn read_summary(path: &Path) -> Result<SweepResult> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `<mode>.dat` for every mode of the spec, plus the JSON summary.
/// Rows are grouped so that each series is contiguous and sorted by `alpha`.
pub fn emit_plotdata(result: &SweepResult, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for &mode in &result.spec.mode {
        let mut rows: Vec<&SweepRow> = result
            .rows
            .iter()
            .filter(|r| r.point.mode == mode)
            .collect();
        rows.sort_by(|a, b| {
            let (p, q) = (&a.point, &b.point);
            (p.n, p.channels)
                .cmp(&(q.n, q.channels))
                .then(p.gamma.partial_cmp(&q.gamma).unwrap())
                .then(q.epsilon.total_cmp(&p.epsilon))
                .then(p.alpha.total_cmp(&q.alpha))
        });
        let path = dir.join(format!("{}.dat", mode.name()));
        write_file(&path, &series_text(&rows))?;
        written.push(path);
    }
    let path = dir.join(SUMMARY_FILE);
    write_file(&path, &summary_json(result)?)?;
    written.push(path);
    Ok(written)
}
