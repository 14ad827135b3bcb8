use std::io;
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::thread;
use std::time::{Duration, Instant};

use log::{debug, warn};

use super::{read_message, write_message, ProtocolError, WireMessage, PROTOCOL_VERSION};
use crate::feature_space::Point;
use crate::mtl::Trace;
use crate::sims::{Simulator, SimulatorError};

/// Listening side of the protocol. One accepted simulator per campaign.
pub struct SimServer {
    listener: TcpListener,
}

impl SimServer {
    pub fn bind<A: ToSocketAddrs + std::fmt::Display>(addr: A) -> Result<Self, ProtocolError> {
        let listener = TcpListener::bind(&addr).map_err(|e| ProtocolError::Bind {
            addr: addr.to_string(),
            message: e.to_string(),
        })?;
        Ok(SimServer { listener })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.listener.local_addr().expect("bound listener has an address")
    }

    /// Waits up to `timeout` for a simulator to connect, then runs the
    /// handshake. A version or signature mismatch is answered with a
    /// refusing `hello_ack` and reported as `HandshakeRefused`.
    pub fn accept(&self, space_signature: &str, timeout: Duration) -> Result<SimConnection, ProtocolError> {
        let stream = self.accept_stream(timeout)?;
        stream.set_nodelay(true).ok();
        stream
            .set_read_timeout(Some(timeout))
            .map_err(|e| ProtocolError::Io(e.to_string()))?;
        let mut conn = SimConnection {
            stream,
            closed: false,
        };
        match read_message(&mut conn.stream)? {
            WireMessage::Hello {
                version,
                space_signature: theirs,
            } => {
                let refusal = if version != PROTOCOL_VERSION {
                    Some(format!("protocol version `{version}`, expected `{PROTOCOL_VERSION}`"))
                } else if theirs != space_signature {
                    Some("space signature mismatch".to_string())
                } else {
                    None
                };
                let ack = WireMessage::HelloAck {
                    accepted: refusal.is_none(),
                    reason: refusal.clone().unwrap_or_default(),
                };
                write_message(&mut conn.stream, &ack)?;
                if let Some(reason) = refusal {
                    warn!("refused simulator: {reason}");
                    conn.closed = true;
                    return Err(ProtocolError::HandshakeRefused(reason));
                }
                debug!("simulator connected from {:?}", conn.stream.peer_addr());
                Ok(conn)
            }
            other => Err(ProtocolError::ProtocolViolation(format!(
                "expected hello, got {}",
                other.kind()
            ))),
        }
    }

    fn accept_stream(&self, timeout: Duration) -> Result<TcpStream, ProtocolError> {
        self.listener
            .set_nonblocking(true)
            .map_err(|e| ProtocolError::Io(e.to_string()))?;
        let deadline = Instant::now() + timeout;
        let result = loop {
            match self.listener.accept() {
                Ok((stream, _)) => break Ok(stream),
                Err(e) if e.kind() == io::ErrorKind::WouldBlock => {
                    if Instant::now() >= deadline {
                        break Err(ProtocolError::Timeout);
                    }
                    thread::sleep(Duration::from_millis(5));
                }
                Err(e) => break Err(ProtocolError::Io(e.to_string())),
            }
        };
        self.listener.set_nonblocking(false).ok();
        let stream = result?;
        stream
            .set_nonblocking(false)
            .map_err(|e| ProtocolError::Io(e.to_string()))?;
        Ok(stream)
    }
}

/// Handshaken connection to one simulator. Exactly one configuration is
/// outstanding at any time.
pub struct SimConnection {
    stream: TcpStream,
    closed: bool,
}

impl SimConnection {
    /// Sends the configuration and blocks for its trajectory.
    pub fn serve_episode(&mut self, run_id: u64, point: &Point) -> Result<Trace, SimulatorError> {
        let transport = |source| SimulatorError::Transport { run_id, source };
        write_message(&mut self.stream, &WireMessage::config(run_id, point)).map_err(transport)?;
        match read_message(&mut self.stream).map_err(transport)? {
            WireMessage::Trajectory {
                run_id: got,
                times,
                signals,
            } if got == run_id => Trace::new(times, signals).map_err(|e| {
                transport(ProtocolError::ProtocolViolation(format!("invalid trajectory: {e}")))
            }),
            WireMessage::SimError { run_id: got, message } if got == run_id => {
                Err(SimulatorError::Reported { run_id, message })
            }
            WireMessage::Trajectory { run_id: got, .. } | WireMessage::SimError { run_id: got, .. } => {
                Err(transport(ProtocolError::ProtocolViolation(format!(
                    "reply for run {got} while run {run_id} is outstanding"
                ))))
            }
            other => Err(transport(ProtocolError::ProtocolViolation(format!(
                "unexpected {} while run {run_id} is outstanding",
                other.kind()
            )))),
        }
    }

    /// Tells the simulator the campaign is over.
    pub fn close(mut self) -> Result<(), ProtocolError> {
        self.closed = true;
        write_message(&mut self.stream, &WireMessage::Bye)
    }
}

impl Drop for SimConnection {
    fn drop(&mut self) {
        if !self.closed {
            let _ = write_message(&mut self.stream, &WireMessage::Bye);
        }
    }
}

impl Simulator for SimConnection {
    fn simulate(&mut self, run_id: u64, point: &Point) -> Result<Trace, SimulatorError> {
        self.serve_episode(run_id, point)
    }
}
