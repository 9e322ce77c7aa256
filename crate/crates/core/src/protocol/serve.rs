//! Agent side of the line protocol, used to expose builtin agents as
//! external processes.

use std::io::{self, BufRead, Write};

use super::wire::{EvolveResp, Handshake, MetaEvolveResp, Payload, ProtocolMessage};
use super::{
    Evaluator, Evolution, EvolveRequest, MetaEvolution, MetaEvolveRequest, Role, Worker,
    PROTOCOL_VERSION,
};

pub enum ServedAgent {
    Worker(Box<dyn Worker>),
    Evaluator(Box<dyn Evaluator>),
    Evolution(Box<dyn Evolution>),
    MetaEvolution(Box<dyn MetaEvolution>),
}

impl ServedAgent {
    pub fn role(&self) -> Role {
        match self {
            ServedAgent::Worker(_) => Role::Worker,
            ServedAgent::Evaluator(_) => Role::Evaluator,
            ServedAgent::Evolution(_) => Role::Evolution,
            ServedAgent::MetaEvolution(_) => Role::MetaEvolution,
        }
    }

    /// Answers one request payload; requests for another role get an error.
    pub fn handle(&mut self, payload: Payload) -> Payload {
        let err = |e: super::AgentError| Payload::Error {
            message: e.to_string(),
        };
        match (self, payload) {
            (ServedAgent::Worker(w), Payload::ExecuteReq { task, harness }) => {
                match w.execute(&harness, &task) {
                    Ok(trace) => Payload::ExecuteResp { trace },
                    Err(e) => err(e),
                }
            }
            (ServedAgent::Evaluator(v), Payload::EvaluateReq { trace, task }) => {
                match v.evaluate(&trace, &task) {
                    Ok((report, score)) => Payload::EvaluateResp { report, score },
                    Err(e) => err(e),
                }
            }
            (
                ServedAgent::Evolution(e),
                Payload::EvolveReq {
                    task_id,
                    history,
                    best,
                    seed,
                },
            ) => {
                let req = EvolveRequest {
                    task_id: &task_id,
                    history: &history,
                    best: &best,
                    seed,
                };
                match e.evolve(&req) {
                    Ok(p) => Payload::EvolveResp(EvolveResp::from(p)),
                    Err(e) => err(e),
                }
            }
            (
                ServedAgent::MetaEvolution(m),
                Payload::MetaEvolveReq {
                    meta_history,
                    best,
                    seed,
                },
            ) => {
                let req = MetaEvolveRequest {
                    meta_history: &meta_history,
                    best: &best,
                    seed,
                };
                match m.meta_evolve(&req) {
                    Ok(p) => Payload::MetaEvolveResp(MetaEvolveResp::from(p)),
                    Err(e) => err(e),
                }
            }
            (agent, other) => Payload::Error {
                message: format!(
                    "{} agent does not serve {}",
                    agent.role(),
                    other.type_name()
                ),
            },
        }
    }
}

/// Serves requests until `input` closes. Malformed requests get an error
/// reply carrying whatever `seq` could be recovered, and serving continues.
pub fn serve<R: BufRead, W: Write>(
    mut agent: ServedAgent,
    input: R,
    mut output: W,
) -> io::Result<()> {
    let mut lines = input.lines();
    let Some(first) = lines.next() else {
        return Ok(());
    };
    match Handshake::decode(&first?) {
        Ok(Handshake::Hello {
            role,
            protocol_version,
        }) if role == agent.role() => {
            writeln!(
                output,
                "{}",
                Handshake::HelloAck {
                    protocol_version: PROTOCOL_VERSION
                }
                .encode()
            )?;
            output.flush()?;
            if protocol_version != PROTOCOL_VERSION {
                return Ok(());
            }
        }
        other => {
            let message = format!("bad hello for {} agent: {other:?}", agent.role());
            writeln!(
                output,
                "{}",
                ProtocolMessage::new(1, Payload::Error { message }).encode()
            )?;
            output.flush()?;
            return Ok(());
        }
    }
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = match ProtocolMessage::decode(&line) {
            Ok(msg) => ProtocolMessage::new(msg.seq, agent.handle(msg.payload)),
            Err(e) => ProtocolMessage::new(
                ProtocolMessage::salvage_seq(&line).unwrap_or(0),
                Payload::Error {
                    message: e.to_string(),
                },
            ),
        };
        writeln!(output, "{}", reply.encode())?;
        output.flush()?;
    }
    Ok(())
}
