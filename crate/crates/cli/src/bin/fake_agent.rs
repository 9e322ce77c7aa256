//! Misbehaving protocol agent for tests. The first argument picks the
//! behavior; all modes answer with the builtin agent for the role named
//! in the hello, then distort the reply.
//!
//! Modes: ok, drop-seq, wrong-seq, garbage, sleep:<ms>, bad-version,
//! bad-tool, silent-exit.

use std::io::{self, BufRead, Write};
use std::process;
use std::thread;
use std::time::Duration;

use harness_evo::args::ServeArgs;
use harness_evo::commands::build_served_agent;
use harness_evo_core::protocol::wire::{Handshake, Payload, ProtocolMessage};
use harness_evo_core::protocol::PROTOCOL_VERSION;
use harness_evo_core::Action;

fn emit(out: &mut impl Write, line: &str) {
    if writeln!(out, "{line}").and_then(|_| out.flush()).is_err() {
        process::exit(0);
    }
}

fn main() {
    let mode = std::env::args().nth(1).unwrap_or_else(|| "ok".into());
    let delay = mode.strip_prefix("sleep:").map(|ms| {
        Duration::from_millis(ms.parse().unwrap_or_else(|_| {
            eprintln!("fake-agent: bad sleep value {ms:?}");
            process::exit(2)
        }))
    });
    let stdin = io::stdin();
    let mut out = io::stdout().lock();
    let mut lines = stdin.lock().lines();

    let Some(Ok(first)) = lines.next() else {
        return;
    };
    let role = match Handshake::decode(&first) {
        Ok(Handshake::Hello { role, .. }) => role,
        _ => process::exit(1),
    };
    let version = if mode == "bad-version" {
        PROTOCOL_VERSION + 1
    } else {
        PROTOCOL_VERSION
    };
    emit(
        &mut out,
        &Handshake::HelloAck {
            protocol_version: version,
        }
        .encode(),
    );
    if mode == "silent-exit" {
        return;
    }
    let mut agent = build_served_agent(&ServeArgs {
        role: role.to_string(),
        strategy: None,
        space: None,
    })
    .unwrap_or_else(|e| {
        eprintln!("fake-agent: {e}");
        process::exit(2)
    });

    for line in lines {
        let Ok(line) = line else { return };
        let Ok(msg) = ProtocolMessage::decode(&line) else {
            continue;
        };
        let mut payload = agent.handle(msg.payload);
        if let Some(d) = delay {
            thread::sleep(d);
        }
        if mode == "bad-tool" {
            if let Payload::ExecuteResp { trace } = &mut payload {
                if let Some(step) = trace.steps.first_mut() {
                    step.action = Action::tool("teleport");
                }
            }
        }
        let reply = match mode.as_str() {
            "garbage" => "this is not json {".to_string(),
            "wrong-seq" => ProtocolMessage::new(msg.seq + 1, payload).encode(),
            "drop-seq" => {
                let mut v: serde_json::Value =
                    serde_json::from_str(&ProtocolMessage::new(msg.seq, payload).encode())
                        .expect("encoded messages are JSON");
                v.as_object_mut().expect("object").remove("seq");
                v.to_string()
            }
            _ => ProtocolMessage::new(msg.seq, payload).encode(),
        };
        emit(&mut out, &reply);
    }
}
