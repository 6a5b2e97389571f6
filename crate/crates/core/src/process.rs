//! Running a helper program with piped input and a time limit.

use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum RunError {
    Transport(String),
    Timeout,
}

/// Feeds `input` to the program's stdin and returns its stdout.
pub(crate) fn run(program: &str, args: &[String], input: &str, timeout_ms: u64) -> Result<String, RunError> {
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| RunError::Transport(format!("{program}: {e}")))?;
    let mut stdin = child.stdin.take().expect("piped stdin");
    let mut stdout = child.stdout.take().expect("piped stdout");
    let input = input.to_string();
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        let wrote = stdin.write_all(input.as_bytes());
        drop(stdin);
        let mut out = String::new();
        let read = stdout.read_to_string(&mut out);
        let _ = tx.send(wrote.and(read).map(|_| out));
    });
    match rx.recv_timeout(Duration::from_millis(timeout_ms)) {
        Ok(Ok(out)) => {
            let status = child.wait().map_err(|e| RunError::Transport(e.to_string()))?;
            if status.success() {
                Ok(out)
            } else {
                Err(RunError::Transport(format!("{program} exited with {status}")))
            }
        }
        Ok(Err(e)) => {
            let _ = child.kill();
            let _ = child.wait();
            Err(RunError::Transport(e.to_string()))
        }
        Err(_) => {
            let _ = child.kill();
            let _ = child.wait();
            Err(RunError::Timeout)
        }
    }
}
