//! External SMT-LIB v2 solver driven over standard input/output.

use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use super::smtlib::{emit_smtlib, parse_model};
use super::{ConstraintSystem, Model, Solver, SolverError, Verdict};

#[derive(Debug, Clone)]
pub struct ProcessSolver {
    pub path: PathBuf,
    pub args: Vec<String>,
    pub timeout: Duration,
}

impl ProcessSolver {
    /// A solver at `path`; z3 binaries get `-in` so they read the script
    /// from standard input.
    pub fn new(path: impl Into<PathBuf>) -> Self {
        let path = path.into();
        let is_z3 = path
            .file_name()
            .map(|n| n.to_string_lossy().starts_with("z3"))
            .unwrap_or(false);
        ProcessSolver {
            args: if is_z3 { vec!["-in".into()] } else { vec![] },
            path,
            timeout: Duration::from_secs(10),
        }
    }

    /// Run the solver on a raw script and return its standard output, or
    /// `None` on timeout.
    pub fn run_script(&self, script: &str) -> Result<Option<String>, SolverError> {
        let mut child = Command::new(&self.path)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| SolverError::Unavailable(format!("{}: {e}", self.path.display())))?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let mut stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        let reader = thread::spawn(move || {
            let mut out = String::new();
            let _ = stdout.read_to_string(&mut out);
            let _ = tx.send(out);
        });
        // A solver that exits early closes its end; the write error is then
        // irrelevant because the output tells the story.
        let _ = stdin.write_all(script.as_bytes());
        let _ = stdin.write_all(b"(exit)\n");
        drop(stdin);
        match rx.recv_timeout(self.timeout) {
            Ok(out) => {
                let _ = child.wait();
                let _ = reader.join();
                Ok(Some(out))
            }
            Err(_) => {
                // Grandchildren may still hold the pipe open, so the reader
                // thread is left to finish on its own.
                let _ = child.kill();
                let _ = child.wait();
                drop(reader);
                Ok(None)
            }
        }
    }
}

impl Solver for ProcessSolver {
    fn check_sat(&self, system: &ConstraintSystem) -> Result<Verdict, SolverError> {
        let script = emit_smtlib(system);
        let Some(out) = self.run_script(&script)? else {
            return Ok(Verdict::Unknown(format!(
                "solver timeout after {} ms",
                self.timeout.as_millis()
            )));
        };
        let mut lines = out.lines().map(str::trim).filter(|l| !l.is_empty());
        let status = lines.next().unwrap_or("");
        match status {
            "unsat" => Ok(Verdict::Unsat),
            "unknown" => Ok(Verdict::Unknown("solver answered unknown".into())),
            "sat" => {
                let rest: Vec<&str> = lines.collect();
                let parsed = match parse_model(&rest.join("\n")) {
                    Ok(m) => m,
                    Err(e) => return Ok(Verdict::Unknown(format!("unreadable model: {e}"))),
                };
                let mut model = Model::new();
                for v in &system.decls {
                    model.insert(v.clone(), parsed.get(v).cloned().unwrap_or_default());
                }
                if system.satisfied_by(&model) {
                    Ok(Verdict::Sat(model))
                } else {
                    Ok(Verdict::Unknown("solver model fails evaluation".into()))
                }
            }
            other => Ok(Verdict::Unknown(format!("unexpected solver output `{other}`"))),
        }
    }
}
