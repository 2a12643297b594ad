//! Result files: `<prefix>.jsonl` (config record, one record per point, summary record)
//! and `<prefix>.csv`. Both are pure functions of the config.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::config::{ExperimentConfig, SCHEMA_VERSION};
use crate::run::RunOutput;

fn record(kind: &str, cfg: &ExperimentConfig, body: Value) -> Value {
    let mut m = Map::new();
    m.insert("record".into(), json!(kind));
    m.insert("schema_version".into(), json!(SCHEMA_VERSION));
    m.insert("experiment".into(), json!(cfg.experiment));
    m.insert("base_seed".into(), json!(cfg.base_seed));
    match body {
        Value::Object(fields) => {
            for (k, v) in fields {
                m.insert(k, v);
            }
        }
        other => {
            m.insert("data".into(), other);
        }
    }
    Value::Object(m)
}

pub fn render_jsonl(cfg: &ExperimentConfig, out: &RunOutput) -> String {
    let mut lines = vec![record("config", cfg, json!({"config": cfg.to_json()}))];
    for (k, p) in out.points.iter().enumerate() {
        let mut r = record("point", cfg, p.clone());
        r["index"] = json!(k);
        lines.push(r);
    }
    lines.push(record("summary", cfg, json!({"summary": out.summary, "n_points": out.points.len()})));
    let mut text = String::new();
    for l in lines {
        text.push_str(&serde_json::to_string(&l).expect("json renders"));
        text.push('\n');
    }
    text
}

pub fn render_csv(out: &RunOutput) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&out.table.header).expect("in-memory write");
    for row in &out.table.rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn write(path: &Path, text: &str) -> io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

/// Writes `<prefix>.jsonl` and `<prefix>.csv`; returns both paths.
pub fn write_results(cfg: &ExperimentConfig, out: &RunOutput, prefix: &Path) -> io::Result<(PathBuf, PathBuf)> {
    let (j, c) = (with_ext(prefix, "jsonl"), with_ext(prefix, "csv"));
    write(&j, &render_jsonl(cfg, out))?;
    write(&c, &render_csv(out))?;
    Ok((j, c))
}

/// Wall-clock diagnostics go to a sidecar so the result files stay reproducible.
pub fn write_timing(prefix: &Path, seconds: f64, workers: usize) -> io::Result<PathBuf> {
    let p = with_ext(prefix, "timing.json");
    write(&p, &format!("{}\n", json!({"wall_seconds": seconds, "workers": workers})))?;
    Ok(p)
}
