use std::collections::BTreeMap;
use std::net::{SocketAddr, TcpStream};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use super::{read_message, write_message, ProtocolError, WireMessage, WireValue, PROTOCOL_VERSION};
use crate::sims::InProcess;

/// Simulator side of the protocol.
pub struct SimClient {
    stream: TcpStream,
}

/// What a simulator returns for one configuration.
pub type Episode = Result<(Vec<f64>, BTreeMap<String, Vec<f64>>), String>;

impl SimClient {
    /// Connects and performs the handshake.
    pub fn connect(addr: SocketAddr, space_signature: &str) -> Result<Self, ProtocolError> {
        let stream = TcpStream::connect(addr).map_err(|e| ProtocolError::ConnectionLost(e.to_string()))?;
        stream.set_nodelay(true).ok();
        let mut client = SimClient { stream };
        write_message(
            &mut client.stream,
            &WireMessage::Hello {
                version: PROTOCOL_VERSION.to_string(),
                space_signature: space_signature.to_string(),
            },
        )?;
        match read_message(&mut client.stream)? {
            WireMessage::HelloAck { accepted: true, .. } => Ok(client),
            WireMessage::HelloAck { reason, .. } => Err(ProtocolError::HandshakeRefused(reason)),
            other => Err(ProtocolError::ProtocolViolation(format!(
                "expected hello_ack, got {}",
                other.kind()
            ))),
        }
    }

    /// Like [`SimClient::connect`], retrying refused connections until
    /// `patience` runs out.
    pub fn connect_retrying(
        addr: SocketAddr,
        space_signature: &str,
        patience: Duration,
    ) -> Result<Self, ProtocolError> {
        let deadline = Instant::now() + patience;
        loop {
            match Self::connect(addr, space_signature) {
                Err(ProtocolError::ConnectionLost(_)) if Instant::now() < deadline => {
                    thread::sleep(Duration::from_millis(20));
                }
                other => return other,
            }
        }
    }

    /// Answers configurations until the server says `bye`. Returns the
    /// number of configurations handled. Callback errors are sent back as
    /// `sim_error` and the loop continues.
    pub fn serve<F>(&mut self, mut callback: F) -> Result<usize, ProtocolError>
    where
        F: FnMut(&BTreeMap<String, WireValue>) -> Episode,
    {
        let mut served = 0;
        loop {
            match read_message(&mut self.stream)? {
                WireMessage::Config { run_id, assignments } => {
                    let reply = match callback(&assignments) {
                        Ok((times, signals)) => WireMessage::Trajectory { run_id, times, signals },
                        Err(message) => WireMessage::SimError { run_id, message },
                    };
                    let reply = match write_message(&mut self.stream, &reply) {
                        Err(ProtocolError::NonFinite) => WireMessage::SimError {
                            run_id,
                            message: "trajectory contains non-finite values".into(),
                        },
                        Err(e) => return Err(e),
                        Ok(()) => {
                            served += 1;
                            continue;
                        }
                    };
                    write_message(&mut self.stream, &reply)?;
                    served += 1;
                }
                WireMessage::Bye => return Ok(served),
                other => {
                    return Err(ProtocolError::ProtocolViolation(format!(
                        "unexpected {} from server",
                        other.kind()
                    )))
                }
            }
        }
    }
}

/// Serves a reference simulator over the protocol: the bundled loopback
/// adapter.
pub fn serve_in_process(
    addr: SocketAddr,
    space_signature: &str,
    sim: &InProcess,
    patience: Duration,
) -> Result<usize, ProtocolError> {
    let mut client = SimClient::connect_retrying(addr, space_signature, patience)?;
    client.serve(|assignments| {
        let mut values = BTreeMap::new();
        for (path, v) in assignments {
            match v {
                WireValue::Number(x) => {
                    values.insert(path.clone(), *x);
                }
                WireValue::Text(s) => return Err(format!("`{path}` = `{s}` is not numeric")),
            }
        }
        sim.simulate_assignments(&values)
            .map(|trace| trace.into_parts())
            .map_err(|e| e.to_string())
    })
}

/// Runs [`serve_in_process`] on a background thread.
pub fn spawn_loopback(
    addr: SocketAddr,
    space_signature: String,
    sim: InProcess,
) -> JoinHandle<Result<usize, ProtocolError>> {
    thread::spawn(move || serve_in_process(addr, &space_signature, &sim, Duration::from_secs(10)))
}
