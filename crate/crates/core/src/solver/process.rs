//! Running an external SMT-LIB solver process.

use super::encode::{encode_formula, EncodeError, Formula};
use super::model::Model;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc;
use std::time::{Duration, Instant};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolverConfig {
    /// Program and arguments; the script is written to its standard input.
    pub cmd: Vec<String>,
    pub timeout_ms: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            cmd: vec!["z3".into(), "-in".into()],
            timeout_ms: 10_000,
        }
    }
}

impl SolverConfig {
    /// Parse a whitespace-separated command line such as `z3 -in`.
    pub fn with_command(cmd: &str, timeout_ms: u64) -> Self {
        SolverConfig {
            cmd: cmd.split_whitespace().map(str::to_string).collect(),
            timeout_ms,
        }
    }
}

#[derive(Clone, Debug)]
pub enum SolverVerdict {
    Sat(Model),
    Unsat,
    Unknown(String),
}

impl SolverVerdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolverVerdict::Sat(_))
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, SolverVerdict::Unsat)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("solver process unavailable: {0}")]
    Unavailable(String),
    #[error("malformed solver output: {0}")]
    Malformed(String),
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

struct Session {
    child: Child,
    lines: mpsc::Receiver<String>,
    deadline: Instant,
}

impl Session {
    fn start(cfg: &SolverConfig, deadline: Instant) -> Result<Session, SolverError> {
        let (prog, args) = cfg
            .cmd
            .split_first()
            .ok_or_else(|| SolverError::Unavailable("empty solver command".into()))?;
        let mut child = Command::new(prog)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| SolverError::Unavailable(format!("{prog}: {e}")))?;
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                match line {
                    Ok(l) => {
                        if tx.send(l).is_err() {
                            break;
                        }
                    }
                    Err(_) => break,
                }
            }
        });
        Ok(Session {
            child,
            lines: rx,
            deadline,
        })
    }

    fn send(&mut self, text: &str) -> Result<(), SolverError> {
        let stdin = self.child.stdin.as_mut().expect("piped stdin");
        stdin
            .write_all(text.as_bytes())
            .and_then(|_| stdin.flush())
            .map_err(|e| SolverError::Unavailable(format!("writing to solver: {e}")))
    }

    /// Next line, `Ok(None)` on timeout.
    fn line(&mut self) -> Result<Option<String>, SolverError> {
        let now = Instant::now();
        if now >= self.deadline {
            return Ok(None);
        }
        match self.lines.recv_timeout(self.deadline - now) {
            Ok(l) => Ok(Some(l)),
            Err(mpsc::RecvTimeoutError::Timeout) => Ok(None),
            Err(mpsc::RecvTimeoutError::Disconnected) => {
                Err(SolverError::Malformed("solver exited before answering".into()))
            }
        }
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn paren_balance(s: &str) -> i64 {
    let mut depth = 0i64;
    let mut in_quote = false;
    let mut in_string = false;
    for c in s.chars() {
        match c {
            '|' if !in_string => in_quote = !in_quote,
            '"' if !in_quote => in_string = !in_string,
            '(' if !in_quote && !in_string => depth += 1,
            ')' if !in_quote && !in_string => depth -= 1,
            _ => {}
        }
    }
    depth
}

/// Decide satisfiability of `f`, fetching a model when satisfiable.
pub fn check_sat_with(f: &Formula, cfg: &SolverConfig) -> Result<SolverVerdict, SolverError> {
    let deadline = Instant::now() + Duration::from_millis(cfg.timeout_ms.max(1));
    let script = encode_formula(f)?;
    let mut s = Session::start(cfg, deadline)?;
    s.send("(set-option :print-success false)\n")?;
    s.send(&script)?;
    let answer = loop {
        match s.line()? {
            None => return Ok(SolverVerdict::Unknown("timeout".into())),
            Some(l) if l.trim().is_empty() => continue,
            Some(l) => break l.trim().to_string(),
        }
    };
    match answer.as_str() {
        "unsat" => {
            let _ = s.send("(exit)\n");
            Ok(SolverVerdict::Unsat)
        }
        "unknown" => {
            let _ = s.send("(exit)\n");
            Ok(SolverVerdict::Unknown("solver returned unknown".into()))
        }
        "sat" => {
            s.send("(get-model)\n(exit)\n")?;
            let mut text = String::new();
            let mut depth = 0;
            loop {
                match s.line()? {
                    None => return Ok(SolverVerdict::Unknown("timeout".into())),
                    Some(l) => {
                        depth += paren_balance(&l);
                        text.push_str(&l);
                        text.push('\n');
                        if depth <= 0 && !text.trim().is_empty() {
                            break;
                        }
                    }
                }
            }
            if text.trim_start().starts_with("(error") {
                return Err(SolverError::Malformed(text.trim().to_string()));
            }
            let model = Model::parse(&text).map_err(SolverError::Malformed)?;
            Ok(SolverVerdict::Sat(model))
        }
        other => Err(SolverError::Malformed(other.to_string())),
    }
}

/// [`check_sat_with`] using the default solver command.
pub fn check_sat(f: &Formula, timeout_ms: u64) -> Result<SolverVerdict, SolverError> {
    check_sat_with(
        f,
        &SolverConfig {
            timeout_ms,
            ..SolverConfig::default()
        },
    )
}
