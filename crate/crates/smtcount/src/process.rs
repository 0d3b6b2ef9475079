//! Bounded enumeration through an external SMT-LIB2 solver.
//!
//! Each bounded call starts a fresh solver process, sends the query formula,
//! and then alternates `(check-sat)` / `(get-value ...)`, asserting the
//! negation of every model found, until the solver answers `unsat` or
//! `pivot + 1` models have been collected.

use smtcount_core::bvformula::{binary_literal, parse_constant, print_smt2, quote_symbol, Formula};
use smtcount_core::oracle::{BoundedOracle, BoundedResult, OracleError, Query};
use smtcount_core::sexpr::{self, SExpr};
use smtcount_core::Assignment;
use std::io::{BufRead, BufReader, Read, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

/// Program and arguments of an SMT-LIB2 solver reading from standard input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolverCommand {
    pub program: String,
    pub args: Vec<String>,
}

impl SolverCommand {
    /// Splits a command line on whitespace: `"z3 -in -smt2"`.
    pub fn parse(line: &str) -> Option<Self> {
        let mut parts = line.split_whitespace().map(str::to_owned);
        let program = parts.next()?;
        Some(SolverCommand {
            program,
            args: parts.collect(),
        })
    }

    pub fn z3() -> Self {
        SolverCommand {
            program: "z3".into(),
            args: vec!["-in".into(), "-smt2".into()],
        }
    }
}

impl std::fmt::Display for SolverCommand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.program)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        Ok(())
    }
}

/// Oracle backed by an external solver, one process per bounded call.
#[derive(Clone, Debug)]
pub struct ProcessOracle {
    command: SolverCommand,
    budget: Duration,
}

impl ProcessOracle {
    pub fn new(command: SolverCommand, budget: Duration) -> Self {
        ProcessOracle { command, budget }
    }

    pub fn command(&self) -> &SolverCommand {
        &self.command
    }
}

impl BoundedOracle for ProcessOracle {
    fn bounded(&mut self, query: &Query<'_>, pivot: usize) -> Result<BoundedResult, OracleError> {
        let f = query.to_formula()?;
        process_backend(&f, pivot, &self.command, self.budget)
    }
}

/// Enumerates up to `pivot + 1` models of `f` with the given solver.
pub fn process_backend(
    f: &Formula,
    pivot: usize,
    command: &SolverCommand,
    budget: Duration,
) -> Result<BoundedResult, OracleError> {
    let deadline = Instant::now() + budget;
    let mut session = Session::start(command, deadline)?;
    let result = session.enumerate(f, pivot);
    session.finish(result.is_ok());
    result
}

struct Session {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<String>,
    stderr: Option<thread::JoinHandle<String>>,
    deadline: Instant,
}

impl Session {
    fn start(command: &SolverCommand, deadline: Instant) -> Result<Self, OracleError> {
        let mut child = Command::new(&command.program)
            .args(&command.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| OracleError::Misconfigured(format!("cannot start `{command}`: {e}")))?;
        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("stdout is piped");
        let mut stderr = child.stderr.take().expect("stderr is piped");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let stderr = thread::spawn(move || {
            let mut s = String::new();
            let _ = stderr.read_to_string(&mut s);
            s
        });
        Ok(Session {
            child,
            stdin,
            lines: rx,
            stderr: Some(stderr),
            deadline,
        })
    }

    fn send(&mut self, text: &str) -> Result<(), OracleError> {
        let stdin = self.stdin.as_mut().expect("stdin open during a session");
        stdin
            .write_all(text.as_bytes())
            .and_then(|_| stdin.flush())
            .map_err(|e| self.crashed(&format!("write failed: {e}")))
    }

    fn crashed(&mut self, what: &str) -> OracleError {
        // closing stdin lets the solver exit so its stderr can be collected
        self.stdin.take();
        let _ = self.child.kill();
        let _ = self.child.wait();
        let stderr = self
            .stderr
            .take()
            .and_then(|h| h.join().ok())
            .unwrap_or_default();
        let stderr = stderr.trim();
        if stderr.is_empty() {
            OracleError::Crash(what.to_owned())
        } else {
            OracleError::Crash(format!("{what}; stderr: {stderr}"))
        }
    }

    fn next_line(&mut self) -> Result<String, OracleError> {
        loop {
            let now = Instant::now();
            if now >= self.deadline {
                return Err(OracleError::Timeout);
            }
            match self.lines.recv_timeout(self.deadline - now) {
                Ok(line) if line.trim().is_empty() => continue,
                Ok(line) => return Ok(line),
                Err(RecvTimeoutError::Timeout) => return Err(OracleError::Timeout),
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(self.crashed("solver closed its output"))
                }
            }
        }
    }

    /// Reads one complete S-expression, possibly spanning several lines.
    fn read_sexpr(&mut self) -> Result<SExpr, OracleError> {
        let mut text = String::new();
        loop {
            text.push_str(&self.next_line()?);
            text.push('\n');
            if balanced(&text) {
                let mut items = sexpr::read_all(&text)
                    .map_err(|e| OracleError::Protocol(format!("{e} in `{}`", text.trim())))?;
                if items.len() != 1 {
                    return Err(OracleError::Protocol(format!(
                        "expected one response, got `{}`",
                        text.trim()
                    )));
                }
                return Ok(items.remove(0));
            }
        }
    }

    fn check_sat(&mut self) -> Result<bool, OracleError> {
        self.send("(check-sat)\n")?;
        let line = self.next_line()?;
        match line.trim() {
            "sat" => Ok(true),
            "unsat" => Ok(false),
            other => Err(OracleError::Protocol(format!(
                "unexpected check-sat answer `{other}`"
            ))),
        }
    }

    fn enumerate(&mut self, f: &Formula, pivot: usize) -> Result<BoundedResult, OracleError> {
        let mut script = print_smt2(f);
        script.insert_str(0, "(set-option :print-success false)\n");
        self.send(&script)?;
        let names: Vec<String> = f.support().iter().map(|v| quote_symbol(&v.name)).collect();
        let get_value = format!("(get-value ({}))\n", names.join(" "));
        let mut models = Vec::new();
        while models.len() <= pivot {
            if !self.check_sat()? {
                break;
            }
            let values = if names.is_empty() {
                Vec::new()
            } else {
                self.send(&get_value)?;
                let response = self.read_sexpr()?;
                model_from_response(f, &response)?
            };
            self.send(&format!(
                "(assert {})\n",
                blocking_clause(&names, &values, f)
            ))?;
            models.push(Assignment::new(values));
        }
        let saturated = models.len() > pivot;
        Ok(BoundedResult { models, saturated })
    }

    fn finish(mut self, graceful: bool) {
        if graceful {
            let _ = self.send("(exit)\n");
        }
        self.stdin.take();
        let grace = Instant::now() + Duration::from_millis(200);
        loop {
            match self.child.try_wait() {
                Ok(Some(_)) => break,
                Ok(None) if graceful && Instant::now() < grace => {
                    thread::sleep(Duration::from_millis(2))
                }
                _ => {
                    let _ = self.child.kill();
                    let _ = self.child.wait();
                    break;
                }
            }
        }
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        if let Ok(None) = self.child.try_wait() {
            let _ = self.child.kill();
            let _ = self.child.wait();
        }
    }
}

fn balanced(text: &str) -> bool {
    let mut depth = 0i64;
    let mut in_quote = false;
    let mut seen = false;
    for c in text.chars() {
        match c {
            '|' => in_quote = !in_quote,
            '(' if !in_quote => {
                depth += 1;
                seen = true;
            }
            ')' if !in_quote => depth -= 1,
            _ => {}
        }
    }
    seen && depth <= 0
}

/// `(not (and (= x v) ...))` for the given model.
fn blocking_clause(names: &[String], values: &[u64], f: &Formula) -> String {
    if names.is_empty() {
        return "false".into();
    }
    let eqs: Vec<String> = names
        .iter()
        .zip(values)
        .zip(f.support())
        .map(|((n, &v), var)| format!("(= {n} {})", binary_literal(v as u128, var.width.bits())))
        .collect();
    if eqs.len() == 1 {
        format!("(not {})", eqs[0])
    } else {
        format!("(not (and {}))", eqs.join(" "))
    }
}

/// Decodes a `get-value` response `((x #b..) (y #x..))` into support order.
pub fn model_from_response(f: &Formula, response: &SExpr) -> Result<Vec<u64>, OracleError> {
    let protocol = |msg: String| OracleError::Protocol(msg);
    let pairs = response
        .as_list()
        .ok_or_else(|| protocol(format!("expected a value list, got {response:?}")))?;
    let mut values: Vec<Option<u64>> = vec![None; f.support().len()];
    for pair in pairs {
        let [name, value] = pair
            .as_list()
            .ok_or_else(|| protocol("malformed value pair".into()))?
        else {
            return Err(protocol("malformed value pair".into()));
        };
        let name = name
            .as_atom()
            .ok_or_else(|| protocol("expected a variable name".into()))?;
        let index = f
            .var_index(name)
            .ok_or_else(|| protocol(format!("value for unknown variable `{name}`")))?;
        let (v, w) = parse_constant(value).map_err(|e| protocol(e.to_string()))?;
        if w != f.support()[index].width {
            return Err(protocol(format!(
                "value for `{name}` has width {}",
                w.bits()
            )));
        }
        values[index] = Some(v as u64);
    }
    values
        .into_iter()
        .zip(f.support())
        .map(|(v, var)| v.ok_or_else(|| protocol(format!("no value for `{}`", var.name))))
        .collect()
}
