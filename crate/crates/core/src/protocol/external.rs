//! External agents: child processes driven over stdin/stdout.
//!
//! A reader thread forwards stdout lines into a channel so every wait is
//! bounded by the binding's `timeout_ms`. After a timeout or a protocol
//! violation the process is killed and the agent refuses further calls.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use super::wire::{Handshake, Payload, ProtocolMessage};
use super::{
    AgentError, Evaluator, Evolution, EvolveRequest, MetaEvolution, MetaEvolveRequest, Proposal,
    Role, Worker, PROTOCOL_VERSION,
};
use crate::model::{Blueprint, EvaluationReport, ExternalCommand, Harness, Score, Task, Trace};

pub struct ExternalAgent {
    role: Role,
    command: String,
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    timeout_ms: u64,
    next_seq: u64,
    failed: Option<String>,
}

impl ExternalAgent {
    /// Spawns the process and performs the version handshake.
    pub fn spawn(cmd: &ExternalCommand, role: Role) -> Result<Self, AgentError> {
        let mut child = Command::new(&cmd.command)
            .args(&cmd.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|source| AgentError::Spawn {
                command: cmd.command.clone(),
                source,
            })?;
        let stdout = child.stdout.take().expect("stdout was piped");
        let stdin = child.stdin.take();
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        let mut agent = ExternalAgent {
            role,
            command: cmd.command.clone(),
            child,
            stdin,
            lines: rx,
            timeout_ms: cmd.timeout_ms,
            next_seq: 1,
            failed: None,
        };
        agent.handshake()?;
        Ok(agent)
    }

    pub fn role(&self) -> Role {
        self.role
    }

    fn handshake(&mut self) -> Result<(), AgentError> {
        let hello = Handshake::Hello {
            role: self.role,
            protocol_version: PROTOCOL_VERSION,
        };
        self.send_line(&hello.encode())?;
        let line = self.recv_line()?;
        match Handshake::decode(&line) {
            Ok(Handshake::HelloAck { protocol_version })
                if protocol_version == PROTOCOL_VERSION =>
            {
                Ok(())
            }
            Ok(Handshake::HelloAck { protocol_version }) => Err(self.fail(format!(
                "agent speaks protocol_version {protocol_version}, engine speaks {PROTOCOL_VERSION}"
            ))),
            Ok(other) => Err(self.fail(format!("expected hello_ack, got {other:?}"))),
            Err(e) => Err(self.fail(format!("bad handshake reply: {e}"))),
        }
    }

    fn fail(&mut self, message: String) -> AgentError {
        log::warn!("external {} agent {:?}: {message}", self.role, self.command);
        self.failed = Some(message.clone());
        self.kill();
        AgentError::Protocol(message)
    }

    fn kill(&mut self) {
        self.stdin = None;
        let _ = self.child.kill();
        let _ = self.child.wait();
    }

    fn send_line(&mut self, line: &str) -> Result<(), AgentError> {
        let res = match self.stdin.as_mut() {
            Some(stdin) => stdin
                .write_all(line.as_bytes())
                .and_then(|_| stdin.write_all(b"\n"))
                .and_then(|_| stdin.flush()),
            None => return Err(AgentError::Protocol("agent input is closed".into())),
        };
        res.map_err(|e| self.fail(format!("write failed: {e}")))
    }

    fn recv_line(&mut self) -> Result<String, AgentError> {
        match self
            .lines
            .recv_timeout(Duration::from_millis(self.timeout_ms))
        {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(self.fail(format!("read failed: {e}"))),
            Err(RecvTimeoutError::Disconnected) => Err(self.fail("agent closed its output".into())),
            Err(RecvTimeoutError::Timeout) => {
                self.failed = Some("timed out".into());
                self.kill();
                Err(AgentError::Timeout {
                    role: self.role,
                    timeout_ms: self.timeout_ms,
                })
            }
        }
    }

    /// Sends one request and waits for its response.
    pub fn request(&mut self, payload: Payload) -> Result<Payload, AgentError> {
        if let Some(reason) = &self.failed {
            return Err(AgentError::Protocol(format!(
                "agent unusable after earlier failure: {reason}"
            )));
        }
        let expected = payload
            .response_type()
            .expect("only requests are sent to agents");
        let seq = self.next_seq;
        self.next_seq += 1;
        self.send_line(&ProtocolMessage::new(seq, payload).encode())?;
        let line = self.recv_line()?;
        let msg = match ProtocolMessage::decode(&line) {
            Ok(m) => m,
            Err(e) => return Err(self.fail(format!("response to seq {seq}: {e}"))),
        };
        if msg.seq != seq {
            return Err(self.fail(format!("response echoes seq {}, expected {seq}", msg.seq)));
        }
        if let Payload::Error { message } = &msg.payload {
            return Err(AgentError::Protocol(format!(
                "agent reported error: {message}"
            )));
        }
        if msg.payload.type_name() != expected {
            return Err(self.fail(format!(
                "expected {expected}, got {}",
                msg.payload.type_name()
            )));
        }
        Ok(msg.payload)
    }
}

impl Drop for ExternalAgent {
    fn drop(&mut self) {
        // Closing stdin lets well-behaved agents exit; kill the rest.
        self.stdin = None;
        match self.child.try_wait() {
            Ok(Some(_)) => {}
            _ => {
                thread::sleep(Duration::from_millis(10));
                if !matches!(self.child.try_wait(), Ok(Some(_))) {
                    self.kill();
                }
            }
        }
    }
}

fn unexpected(p: Payload) -> AgentError {
    AgentError::Protocol(format!("unexpected {}", p.type_name()))
}

impl Worker for ExternalAgent {
    fn execute(&mut self, harness: &Harness, task: &Task) -> Result<Trace, AgentError> {
        match self.request(Payload::ExecuteReq {
            task: task.clone(),
            harness: harness.clone(),
        })? {
            Payload::ExecuteResp { trace } => Ok(trace),
            other => Err(unexpected(other)),
        }
    }
}

impl Evaluator for ExternalAgent {
    fn evaluate(
        &mut self,
        trace: &Trace,
        task: &Task,
    ) -> Result<(EvaluationReport, Score), AgentError> {
        match self.request(Payload::EvaluateReq {
            trace: trace.clone(),
            task: task.clone(),
        })? {
            Payload::EvaluateResp { report, score } => Ok((report, score)),
            other => Err(unexpected(other)),
        }
    }
}

impl Evolution for ExternalAgent {
    fn evolve(&mut self, request: &EvolveRequest<'_>) -> Result<Proposal<Harness>, AgentError> {
        match self.request(Payload::EvolveReq {
            task_id: request.task_id.to_string(),
            history: request.history.to_vec(),
            best: request.best.clone(),
            seed: request.seed,
        })? {
            Payload::EvolveResp(resp) => resp.into_proposal().map_err(AgentError::Protocol),
            other => Err(unexpected(other)),
        }
    }
}

impl MetaEvolution for ExternalAgent {
    fn meta_evolve(
        &mut self,
        request: &MetaEvolveRequest<'_>,
    ) -> Result<Proposal<Blueprint>, AgentError> {
        match self.request(Payload::MetaEvolveReq {
            meta_history: request.meta_history.to_vec(),
            best: request.best.clone(),
            seed: request.seed,
        })? {
            Payload::MetaEvolveResp(resp) => resp.into_proposal().map_err(AgentError::Protocol),
            other => Err(unexpected(other)),
        }
    }
}
