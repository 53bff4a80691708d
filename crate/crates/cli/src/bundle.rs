use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::CliError;

/// Output directory of one run: data files plus `manifest.txt`.
///
/// Timestamps go to the manifest only so data files stay byte-identical
/// across reruns.
pub struct Bundle {
    dir: PathBuf,
    command: String,
    started: u64,
    inputs: Vec<(String, String)>,
    outputs: Vec<String>,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

pub type CsvOut = csv::Writer<BufWriter<File>>;

impl Bundle {
    pub fn create(dir: &Path, command: &str) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        // a stale manifest or error record would describe an earlier run
        for stale in ["manifest.txt", "error.json"] {
            let p = dir.join(stale);
            if p.exists() {
                fs::remove_file(&p).map_err(|e| CliError::io(&p, e))?;
            }
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            command: command.to_string(),
            started: unix_now(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn input(&mut self, key: &str, value: impl ToString) {
        self.inputs.push((key.to_string(), value.to_string()));
    }

    pub fn input_list(&mut self, key: &str, values: &[f64]) {
        let s: Vec<String> = values.iter().map(|&v| num(v)).collect();
        self.input(key, s.join(","));
    }

    pub fn csv(&mut self, name: &str, header: &[&str]) -> Result<CsvOut, CliError> {
        let path = self.path_for(name)?;
        let f = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(f));
        w.write_record(header).map_err(|e| CliError::csv(&path, e))?;
        Ok(w)
    }

    pub fn file(&mut self, name: &str) -> Result<BufWriter<File>, CliError> {
        let path = self.path_for(name)?;
        let f = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        Ok(BufWriter::new(f))
    }

    fn path_for(&mut self, name: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        self.outputs.push(name.to_string());
        Ok(path)
    }

    pub fn finish(self) -> Result<PathBuf, CliError> {
        let path = self.dir.join("manifest.txt");
        let mut s = String::new();
        s.push_str(&format!("tool = slipflow {}\n", env!("CARGO_PKG_VERSION")));
        s.push_str(&format!("command = {}\n", self.command));
        s.push_str(&format!("started_unix = {}\n", self.started));
        s.push_str(&format!("finished_unix = {}\n", unix_now()));
        s.push_str("\n[inputs]\n");
        for (k, v) in &self.inputs {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s.push_str("\n[outputs]\n");
        for o in &self.outputs {
            s.push_str(o);
            s.push('\n');
        }
        fs::write(&path, s).map_err(|e| CliError::io(&path, e))?;
        Ok(self.dir)
    }
}

/// Shortest round-trip text, in exponent form outside [1e-4, 1e15).
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

/// CSV cell for a float, empty when absent.
pub fn cell(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn write_row(w: &mut CsvOut, row: &[String]) -> Result<(), CliError> {
    w.write_record(row).map_err(|e| CliError::Io(e.to_string()))
}

pub fn flush(mut w: CsvOut) -> Result<(), CliError> {
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

pub fn flush_file(mut w: BufWriter<File>) -> Result<(), CliError> {
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}
