use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use reflax::dsl::ToSource;
use reflax::machine::OracleAssignment;
use reflax::rational::format_rational;

use crate::input::CliError;

/// What was run, on which inputs, with which settings.
pub struct Manifest {
    command: String,
    inputs: Vec<String>,
    config: Vec<(String, Value)>,
}

impl Manifest {
    pub fn new(command: &str, paths: &[PathBuf], config: Vec<(&str, Value)>) -> Self {
        Self {
            command: command.to_string(),
            inputs: paths.iter().map(|p| p.display().to_string()).collect(),
            config: config.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }

    fn text(&self) -> String {
        let config: Vec<String> = self
            .config
            .iter()
            .map(|(k, v)| match v {
                Value::String(s) => format!("{k}={s}"),
                v => format!("{k}={v}"),
            })
            .collect();
        format!(
            "# reflax {}\n# command: {}\n# inputs: {}\n# config: {}\n",
            env!("CARGO_PKG_VERSION"),
            self.command,
            self.inputs.join(" "),
            config.join(" ")
        )
    }

    fn json(&self) -> Value {
        let config: Map<String, Value> = self.config.iter().cloned().collect();
        json!({
            "command": self.command,
            "inputs": self.inputs,
            "config": config,
            "version": env!("CARGO_PKG_VERSION"),
        })
    }
}

/// A command's report, rendered as text or JSON at the end.
pub struct Output {
    manifest: Manifest,
    findings: Vec<String>,
    assignment: Option<Value>,
    body: String,
    pub report: Value,
}

impl Output {
    pub fn new(manifest: Manifest) -> Self {
        Self {
            manifest,
            findings: Vec::new(),
            assignment: None,
            body: String::new(),
            report: Value::Null,
        }
    }

    pub fn line(&mut self, s: &str) {
        self.body.push_str(s);
        self.body.push('\n');
    }

    pub fn comment(&mut self, s: &str) {
        self.line(&format!("# {s}"));
    }

    pub fn comment_block(&mut self, s: &str) {
        for l in s.lines() {
            self.comment(l);
        }
    }

    pub fn finding(&mut self, s: String) {
        self.line(&format!("finding: {s}"));
        self.findings.push(s);
    }

    pub fn machines(&mut self, source: &str) {
        self.body.push_str(source);
    }

    pub fn set_assignment(&mut self, x: &OracleAssignment) {
        self.body.push_str(&x.to_source());
        let entries: Vec<Value> = x
            .queries()
            .iter()
            .zip(x.probs())
            .map(|(q, p)| {
                json!({
                    "machine": q.machine,
                    "threshold": format_rational(&q.threshold),
                    "x": p.to_f64(),
                    "source": p.to_source(),
                })
            })
            .collect();
        match &mut self.assignment {
            Some(Value::Array(a)) => a.extend(entries),
            _ => self.assignment = Some(Value::Array(entries)),
        }
    }

    fn render(&self, as_json: bool) -> String {
        if as_json {
            let v = json!({
                "manifest": self.manifest.json(),
                "findings": self.findings,
                "assignment": self.assignment,
                "report": self.report,
            });
            let mut s = serde_json::to_string_pretty(&v).expect("JSON values serialize");
            s.push('\n');
            s
        } else {
            format!("{}{}", self.manifest.text(), self.body)
        }
    }

    /// Prints to standard output, or writes `out` through a temporary file
    /// renamed into place.
    pub fn emit(&self, as_json: bool, out: Option<&Path>) -> Result<(), CliError> {
        let text = self.render(as_json);
        let Some(path) = out else {
            print!("{text}");
            return Ok(());
        };
        let io = |e| CliError::Io(path.to_path_buf(), e);
        let dir = path
            .parent()
            .filter(|d| !d.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        let file_name = path
            .file_name()
            .ok_or_else(|| CliError::Precondition(format!("{} is not a file path", path.display())))?;
        let tmp = dir.join(format!(
            ".{}.{}.tmp",
            file_name.to_string_lossy(),
            std::process::id()
        ));
        let result = std::fs::File::create(&tmp)
            .and_then(|mut f| {
                f.write_all(text.as_bytes())?;
                f.sync_all()
            })
            .and_then(|_| std::fs::rename(&tmp, path));
        if let Err(e) = result {
            let _ = std::fs::remove_file(&tmp);
            return Err(io(e));
        }
        Ok(())
    }
}
