//! Simulator wire protocol.
//!
//! Each frame is a 4-byte big-endian body length followed by a UTF-8 JSON
//! object whose `type` field names the message. Reals are written with 17
//! significant digits, so every finite `f64` survives the trip bit for bit.
//! The toolkit listens; a simulator connects, says `hello` with the
//! signature of the space it expects, and then answers each `config` with a
//! `trajectory` or a `sim_error`.

mod client;
mod server;

use std::collections::BTreeMap;
use std::io::{self, Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feature_space::{Atom, FeatureSpace, Point, Value};

pub use client::{serve_in_process, spawn_loopback, Episode, SimClient};
pub use server::{SimConnection, SimServer};

pub const PROTOCOL_VERSION: &str = "falsify-kit/1";
pub const DEFAULT_LISTEN: &str = "127.0.0.1:8200";
pub const MAX_FRAME: usize = 64 * 1024 * 1024;
pub const DEFAULT_TIMEOUT_SECS: u64 = 300;

const KNOWN_TYPES: &[&str] = &["hello", "hello_ack", "config", "trajectory", "sim_error", "bye"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("frame of {0} bytes exceeds the 64 MiB limit")]
    FrameTooLarge(usize),
    #[error("malformed message body: {0}")]
    MalformedJson(String),
    #[error("unknown message type `{0}`")]
    UnknownType(String),
    #[error("frame declares {declared} body bytes but {received} arrived")]
    LengthMismatch { declared: usize, received: usize },
    #[error("non-finite real in message")]
    NonFinite,
    #[error("handshake refused: {0}")]
    HandshakeRefused(String),
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("timed out waiting for peer")]
    Timeout,
    #[error("connection lost: {0}")]
    ConnectionLost(String),
    #[error("cannot bind {addr}: {message}")]
    Bind { addr: String, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl ProtocolError {
    fn from_io(e: io::Error) -> Self {
        match e.kind() {
            io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut => ProtocolError::Timeout,
            io::ErrorKind::UnexpectedEof
            | io::ErrorKind::ConnectionReset
            | io::ErrorKind::ConnectionAborted
            | io::ErrorKind::BrokenPipe => ProtocolError::ConnectionLost(e.to_string()),
            _ => ProtocolError::Io(e.to_string()),
        }
    }
}

/// Assignment value: box dimensions and numeric atoms travel as numbers,
/// string atoms as strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WireValue {
    Number(f64),
    Text(String),
}

impl From<&Value> for WireValue {
    fn from(v: &Value) -> Self {
        match v {
            Value::Real(x) | Value::Atom(Atom::Num(x)) => WireValue::Number(*x),
            Value::Atom(Atom::Str(s)) => WireValue::Text(s.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum WireMessage {
    Hello {
        version: String,
        space_signature: String,
    },
    HelloAck {
        accepted: bool,
        reason: String,
    },
    Config {
        run_id: u64,
        assignments: BTreeMap<String, WireValue>,
    },
    Trajectory {
        run_id: u64,
        times: Vec<f64>,
        signals: BTreeMap<String, Vec<f64>>,
    },
    SimError {
        run_id: u64,
        message: String,
    },
    Bye,
}

impl WireMessage {
    pub fn config(run_id: u64, point: &Point) -> Self {
        WireMessage::Config {
            run_id,
            assignments: point.iter().map(|(k, v)| (k.clone(), v.into())).collect(),
        }
    }

    fn all_finite(&self) -> bool {
        match self {
            WireMessage::Config { assignments, .. } => assignments
                .values()
                .all(|v| !matches!(v, WireValue::Number(x) if !x.is_finite())),
            WireMessage::Trajectory { times, signals, .. } => {
                times.iter().chain(signals.values().flatten()).all(|x| x.is_finite())
            }
            _ => true,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            WireMessage::Hello { .. } => "hello",
            WireMessage::HelloAck { .. } => "hello_ack",
            WireMessage::Config { .. } => "config",
            WireMessage::Trajectory { .. } => "trajectory",
            WireMessage::SimError { .. } => "sim_error",
            WireMessage::Bye => "bye",
        }
    }
}

/// Canonical form of the space's domain tree; both ends must agree on it.
pub fn space_signature(space: &FeatureSpace) -> String {
    space.root().canonical_form()
}

/// Writes every real as `d.dddddddddddddddde±x` (17 significant digits).
struct SeventeenDigits;

impl serde_json::ser::Formatter for SeventeenDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

/// Serializes `msg` into a complete frame.
pub fn encode(msg: &WireMessage) -> Result<Vec<u8>, ProtocolError> {
    if !msg.all_finite() {
        return Err(ProtocolError::NonFinite);
    }
    let mut frame = vec![0u8; 4];
    let mut ser = serde_json::Serializer::with_formatter(&mut frame, SeventeenDigits);
    msg.serialize(&mut ser)
        .map_err(|e| ProtocolError::MalformedJson(e.to_string()))?;
    let body = frame.len() - 4;
    if body > MAX_FRAME {
        return Err(ProtocolError::FrameTooLarge(body));
    }
    frame[..4].copy_from_slice(&(body as u32).to_be_bytes());
    Ok(frame)
}

/// Parses one complete frame.
pub fn decode(frame: &[u8]) -> Result<WireMessage, ProtocolError> {
    if frame.len() < 4 {
        return Err(ProtocolError::LengthMismatch {
            declared: 0,
            received: frame.len(),
        });
    }
    let declared = u32::from_be_bytes([frame[0], frame[1], frame[2], frame[3]]) as usize;
    if declared > MAX_FRAME {
        return Err(ProtocolError::FrameTooLarge(declared));
    }
    if frame.len() - 4 != declared {
        return Err(ProtocolError::LengthMismatch {
            declared,
            received: frame.len() - 4,
        });
    }
    decode_body(&frame[4..])
}

fn decode_body(body: &[u8]) -> Result<WireMessage, ProtocolError> {
    let value: serde_json::Value =
        serde_json::from_slice(body).map_err(|e| ProtocolError::MalformedJson(e.to_string()))?;
    let kind = value
        .get("type")
        .and_then(|t| t.as_str())
        .ok_or_else(|| ProtocolError::MalformedJson("missing string field `type`".into()))?;
    if !KNOWN_TYPES.contains(&kind) {
        return Err(ProtocolError::UnknownType(kind.to_string()));
    }
    serde_json::from_value(value).map_err(|e| ProtocolError::MalformedJson(e.to_string()))
}

pub fn write_message<W: Write>(writer: &mut W, msg: &WireMessage) -> Result<(), ProtocolError> {
    let frame = encode(msg)?;
    writer.write_all(&frame).map_err(ProtocolError::from_io)?;
    writer.flush().map_err(ProtocolError::from_io)
}

/// Reads one frame. A body cut short (peer closed or read timed out) is a
/// length mismatch; no bytes at all is a lost connection or a timeout.
pub fn read_message<R: Read>(reader: &mut R) -> Result<WireMessage, ProtocolError> {
    let mut header = [0u8; 4];
    let got = read_up_to(reader, &mut header)?;
    if got == 0 {
        return Err(ProtocolError::ConnectionLost("peer closed the connection".into()));
    }
    if got < 4 {
        return Err(ProtocolError::LengthMismatch {
            declared: 0,
            received: got,
        });
    }
    let declared = u32::from_be_bytes(header) as usize;
    if declared > MAX_FRAME {
        return Err(ProtocolError::FrameTooLarge(declared));
    }
    let mut body = vec![0u8; declared];
    let received = match read_up_to(reader, &mut body) {
        Ok(n) => n,
        Err(ProtocolError::Timeout | ProtocolError::ConnectionLost(_)) => 0,
        Err(e) => return Err(e),
    };
    if received < declared {
        return Err(ProtocolError::LengthMismatch { declared, received });
    }
    decode_body(&body)
}

/// Fills `buf` until full, EOF, or an error after at least one byte.
/// Errors only when nothing at all was read.
fn read_up_to<R: Read>(reader: &mut R, buf: &mut [u8]) -> Result<usize, ProtocolError> {
    let mut filled = 0;
    while filled < buf.len() {
        match reader.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(_) if filled > 0 => break,
            Err(e) => return Err(ProtocolError::from_io(e)),
        }
    }
    Ok(filled)
}
