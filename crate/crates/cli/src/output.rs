//! Reports and all-or-nothing file output.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use svmpi::metrics::ExperimentReport;
use tempfile::{NamedTempFile, TempDir, TempPath};

/// Ordered `key=value` report with a one-row CSV twin.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    fields: Vec<(String, String)>,
    /// When false, wall-clock fields are written as `omitted` so that
    /// repeated runs produce identical bytes.
    timing: bool,
}

impl Report {
    pub fn new(command: &str, timing: bool) -> Self {
        let mut r = Report {
            fields: Vec::new(),
            timing,
        };
        r.push("command", command);
        r.push("version", env!("CARGO_PKG_VERSION"));
        r
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.fields.push((key.into(), value.to_string()));
    }

    pub fn push_f64(&mut self, key: impl Into<String>, value: f64) {
        self.push(key, svmpi::data::format_float(value));
    }

    pub fn push_seconds(&mut self, key: impl Into<String>, seconds: f64) {
        if self.timing {
            self.push_f64(key, seconds);
        } else {
            self.push(key, "omitted");
        }
    }

    pub fn push_config(&mut self, resolved: &[(String, String)]) {
        for (k, v) in resolved {
            self.push(format!("config.{k}"), v);
        }
    }

    pub fn push_experiment(&mut self, prefix: &str, rep: &ExperimentReport) {
        for (k, v) in rep.fields() {
            if k == "train_seconds" {
                self.push_seconds(format!("{prefix}.{k}"), rep.train_seconds);
            } else {
                self.push(format!("{prefix}.{k}"), v);
            }
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.fields {
            s.push_str(k);
            s.push('=');
            s.push_str(v);
            s.push('\n');
        }
        s
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.fields.iter().map(|(k, _)| k))?;
        w.write_record(self.fields.iter().map(|(_, v)| v))?;
        Ok(w.into_inner()?)
    }
}

/// Files staged next to their destinations and renamed into place only when
/// every output is ready. Dropping an uncommitted set deletes the staging
/// files; a failed commit removes the outputs already moved.
#[derive(Debug, Default)]
pub struct Outputs {
    staged: Vec<(TempPath, PathBuf)>,
    // Declared after `staged` so staged files go before their directories.
    dirs: Vec<TempDir>,
}

impl Outputs {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_with<F>(&mut self, path: impl AsRef<Path>, write: F) -> Result<()>
    where
        F: FnOnce(&mut dyn Write) -> Result<()>,
    {
        let path = path.as_ref();
        let dir = parent_dir(path);
        let mut tmp = NamedTempFile::new_in(dir).with_context(|| format!("cannot create output in {}", dir.display()))?;
        write(tmp.as_file_mut()).with_context(|| format!("writing {}", path.display()))?;
        tmp.as_file_mut().flush()?;
        self.staged.push((tmp.into_temp_path(), path.to_owned()));
        Ok(())
    }

    /// Lets `save` write any number of files into a scratch directory next
    /// to `dest_dir`; every path it returns is staged under the same file
    /// name in `dest_dir`.
    pub fn add_saved<F>(&mut self, dest_dir: &Path, save: F) -> Result<()>
    where
        F: FnOnce(&Path) -> Result<Vec<PathBuf>>,
    {
        let scratch = tempfile::Builder::new()
            .prefix(".staging")
            .tempdir_in(dest_dir)
            .with_context(|| format!("cannot create output in {}", dest_dir.display()))?;
        for p in save(scratch.path())? {
            let name = p.file_name().context("saved path has no file name")?.to_owned();
            self.staged.push((TempPath::try_from_path(p)?, dest_dir.join(name)));
        }
        self.dirs.push(scratch);
        Ok(())
    }

    pub fn add_bytes(&mut self, path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
        self.add_with(path, |w| Ok(w.write_all(bytes)?))
    }

    pub fn add_report(&mut self, prefix: &Path, report: &Report) -> Result<()> {
        self.add_bytes(with_suffix(prefix, ".report.txt"), report.to_text().as_bytes())?;
        self.add_bytes(with_suffix(prefix, ".report.csv"), &report.to_csv()?)
    }

    pub fn commit(mut self) -> Result<Vec<PathBuf>> {
        let mut done: Vec<PathBuf> = Vec::with_capacity(self.staged.len());
        for (tmp, path) in std::mem::take(&mut self.staged) {
            if let Err(e) = tmp.persist(&path) {
                for p in &done {
                    let _ = std::fs::remove_file(p);
                }
                return Err(e.error).with_context(|| format!("moving output into {}", path.display()));
            }
            done.push(path);
        }
        Ok(done)
    }
}

pub fn parent_dir(path: &Path) -> &Path {
    match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    }
}

/// `prefix` with `suffix` appended to its final component.
pub fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Per-point bounds as `index,y,lower,upper`.
pub fn bounds_csv(w: &mut dyn Write, y: &[f64], lower: &[f64], upper: &[f64]) -> Result<()> {
    let f = svmpi::data::format_float;
    let mut c = csv::Writer::from_writer(w);
    c.write_record(["index", "y", "lower", "upper"])?;
    for (i, ((y, l), u)) in y.iter().zip(lower).zip(upper).enumerate() {
        c.write_record([i.to_string(), f(*y), f(*l), f(*u)])?;
    }
    c.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_formats() {
        let mut r = Report::new("demo", false);
        r.push_f64("x", 0.5);
        r.push_seconds("t", 1.25);
        r.push("name", "a,b");
        let text = r.to_text();
        assert!(text.ends_with("x=0.5\nt=omitted\nname=a,b\n"));
        let csv = String::from_utf8(r.to_csv().unwrap()).unwrap();
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.lines().next().unwrap().starts_with("command,version,x,t,name"));
        assert!(csv.contains("\"a,b\""));
    }

    #[test]
    fn outputs_are_all_or_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.txt");
        let mut out = Outputs::new();
        out.add_bytes(&a, b"one").unwrap();
        let err = out.add_with(dir.path().join("b.txt"), |_| anyhow::bail!("boom"));
        assert!(err.is_err());
        drop(out);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);

        let mut out = Outputs::new();
        out.add_bytes(&a, b"one").unwrap();
        out.add_bytes(dir.path().join("b.txt"), b"two").unwrap();
        let paths = out.commit().unwrap();
        assert_eq!(paths.len(), 2);
        assert_eq!(std::fs::read(&a).unwrap(), b"one");
    }

    #[test]
    fn failed_commit_rolls_back() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("sub");
        std::fs::create_dir(&blocker).unwrap();
        std::fs::write(blocker.join("x"), b"").unwrap();
        let mut out = Outputs::new();
        out.add_bytes(dir.path().join("first.txt"), b"1").unwrap();
        // Renaming a file over a nonempty directory fails.
        out.add_bytes(&blocker, b"2").unwrap();
        assert!(out.commit().is_err());
        assert!(!dir.path().join("first.txt").exists());
    }

    #[test]
    fn saved_files_are_staged() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = Outputs::new();
        out.add_saved(dir.path(), |scratch| {
            let a = scratch.join("m.json");
            let b = scratch.join("m.lower.json");
            std::fs::write(&a, b"a")?;
            std::fs::write(&b, b"b")?;
            Ok(vec![a, b])
        })
        .unwrap();
        out.commit().unwrap();
        let mut names: Vec<String> = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .collect();
        names.sort();
        assert_eq!(names, vec!["m.json", "m.lower.json"]);
    }

    #[test]
    fn suffixes() {
        assert_eq!(with_suffix(Path::new("out/run"), ".report.txt"), PathBuf::from("out/run.report.txt"));
    }
}
