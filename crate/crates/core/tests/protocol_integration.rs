use std::collections::BTreeMap;
use std::net::TcpStream;
use std::thread;
use std::time::Duration;

use falsify_kit::feature_space::{Domain, FeatureSpace};
use falsify_kit::protocol::{
    decode, encode, read_message, space_signature, spawn_loopback, write_message, ProtocolError, SimClient,
    SimServer, WireMessage, WireValue, PROTOCOL_VERSION,
};
use falsify_kit::rng::{stream, streams};
use falsify_kit::sims::{InProcess, Model, Simulator, SimulatorError};
use proptest::prelude::*;

const WAIT: Duration = Duration::from_secs(10);

fn line_space() -> FeatureSpace {
    FeatureSpace::uniform(Domain::structure([("v", Domain::boxed(vec![-5.0], vec![5.0]))])).unwrap()
}

fn assignment(a: &BTreeMap<String, WireValue>) -> f64 {
    match a.get("v.0") {
        Some(WireValue::Number(x)) => *x,
        other => panic!("unexpected assignment {other:?}"),
    }
}

fn finite() -> impl Strategy<Value = f64> {
    any::<f64>().prop_filter("finite", |v| v.is_finite())
}

proptest! {
    #[test]
    fn trajectory_frames_round_trip_bit_exactly(
        run_id in any::<u64>(),
        samples in prop::collection::vec((finite(), finite()), 0..30),
    ) {
        let mut signals = BTreeMap::new();
        signals.insert("a".to_string(), samples.iter().map(|s| s.0).collect::<Vec<_>>());
        signals.insert("b c".to_string(), samples.iter().map(|s| s.1).collect::<Vec<_>>());
        let times: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let msg = WireMessage::Trajectory { run_id, times, signals };
        let frame = encode(&msg).unwrap();
        let back = decode(&frame).unwrap();
        let (WireMessage::Trajectory { times: t1, signals: s1, .. }, WireMessage::Trajectory { times: t2, signals: s2, .. }) = (&msg, &back) else {
            unreachable!()
        };
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(t1), bits(t2));
        for (k, v) in s1 {
            prop_assert_eq!(bits(v), bits(&s2[k]));
        }
        prop_assert_eq!(encode(&back).unwrap(), frame);
    }

    #[test]
    fn config_frames_round_trip(
        run_id in any::<u64>(),
        values in prop::collection::btree_map("[a-z.0-9\"\\\\]{1,8}", prop_oneof![
            finite().prop_map(WireValue::Number),
            "[ -~]{0,6}".prop_map(WireValue::Text),
        ], 0..8),
    ) {
        let msg = WireMessage::Config { run_id, assignments: values };
        prop_assert_eq!(decode(&encode(&msg).unwrap()).unwrap(), msg);
    }
}

#[test]
fn handshake_golden_bytes() {
    let hello = WireMessage::Hello {
        version: PROTOCOL_VERSION.into(),
        space_signature: "box([0],[1])".into(),
    };
    let body = br#"{"type":"hello","version":"falsify-kit/1","space_signature":"box([0],[1])"}"#;
    let frame = encode(&hello).unwrap();
    assert_eq!(&frame[..4], &(body.len() as u32).to_be_bytes());
    assert_eq!(&frame[4..], body.as_slice());

    let ack = encode(&WireMessage::HelloAck {
        accepted: false,
        reason: "no".into(),
    })
    .unwrap();
    assert_eq!(&ack[4..], br#"{"type":"hello_ack","accepted":false,"reason":"no"}"#.as_slice());
    let err = encode(&WireMessage::SimError {
        run_id: 9,
        message: "diverged".into(),
    })
    .unwrap();
    assert_eq!(&err[4..], br#"{"type":"sim_error","run_id":9,"message":"diverged"}"#.as_slice());
}

#[test]
fn loopback_echo_and_sim_error() {
    let space = line_space();
    let sig = space_signature(&space);
    let server = SimServer::bind("127.0.0.1:0").unwrap();
    let addr = server.local_addr();
    let client_sig = sig.clone();
    let client = thread::spawn(move || {
        let mut c = SimClient::connect_retrying(addr, &client_sig, WAIT).unwrap();
        c.serve(|a| {
            let v = assignment(a);
            if v < 0.0 {
                return Err(format!("negative input {v}"));
            }
            let mut signals = BTreeMap::new();
            signals.insert("y".to_string(), vec![v, 2.0 * v, 3.0 * v]);
            Ok((vec![0.0, 0.5, 1.0], signals))
        })
    });
    let mut conn = server.accept(&sig, WAIT).unwrap();

    let p = space.unflatten(&[1.25], &[]).unwrap();
    let trace = conn.serve_episode(1, &p).unwrap();
    assert_eq!(trace.times(), &[0.0, 0.5, 1.0]);
    assert_eq!(trace.signal("y").unwrap(), &[1.25, 2.5, 3.75]);

    let q = space.unflatten(&[-1.0], &[]).unwrap();
    match conn.serve_episode(2, &q) {
        Err(SimulatorError::Reported { run_id, message }) => {
            assert_eq!(run_id, 2);
            assert!(message.contains("negative"), "{message}");
        }
        other => panic!("{other:?}"),
    }
    // The connection survives a reported error.
    assert!(conn.serve_episode(3, &p).is_ok());
    conn.close().unwrap();
    assert_eq!(client.join().unwrap().unwrap(), 3);
}

/// Client speaking raw frames, answering the first config with `reply`.
fn raw_client(addr: std::net::SocketAddr, sig: String, reply: impl FnOnce(u64) -> WireMessage + Send + 'static) -> thread::JoinHandle<()> {
    thread::spawn(move || {
        let mut s = TcpStream::connect(addr).unwrap();
        write_message(&mut s, &WireMessage::Hello { version: PROTOCOL_VERSION.into(), space_signature: sig }).unwrap();
        assert!(matches!(read_message(&mut s).unwrap(), WireMessage::HelloAck { accepted: true, .. }));
        let WireMessage::Config { run_id, .. } = read_message(&mut s).unwrap() else {
            panic!("expected config");
        };
        write_message(&mut s, &reply(run_id)).unwrap();
        // Drain until the server hangs up.
        while read_message(&mut s).is_ok() {}
    })
}

#[test]
fn mismatched_run_id_is_a_protocol_violation() {
    let space = line_space();
    let sig = space_signature(&space);
    let server = SimServer::bind("127.0.0.1:0").unwrap();
    let client = raw_client(server.local_addr(), sig.clone(), |run_id| WireMessage::Trajectory {
        run_id: run_id + 1,
        times: vec![0.0],
        signals: BTreeMap::from([("y".to_string(), vec![1.0])]),
    });
    let mut conn = server.accept(&sig, WAIT).unwrap();
    let p = space.unflatten(&[0.0], &[]).unwrap();
    match conn.serve_episode(5, &p) {
        Err(SimulatorError::Transport { run_id: 5, source: ProtocolError::ProtocolViolation(_) }) => {}
        other => panic!("{other:?}"),
    }
    drop(conn);
    client.join().unwrap();
}

#[test]
fn malformed_trace_is_a_protocol_violation() {
    let space = line_space();
    let sig = space_signature(&space);
    let server = SimServer::bind("127.0.0.1:0").unwrap();
    let client = raw_client(server.local_addr(), sig.clone(), |run_id| WireMessage::Trajectory {
        run_id,
        times: vec![1.0, 0.0],
        signals: BTreeMap::from([("y".to_string(), vec![1.0, 2.0])]),
    });
    let mut conn = server.accept(&sig, WAIT).unwrap();
    let p = space.unflatten(&[0.0], &[]).unwrap();
    assert!(matches!(
        conn.serve_episode(1, &p),
        Err(SimulatorError::Transport { source: ProtocolError::ProtocolViolation(_), .. })
    ));
    drop(conn);
    client.join().unwrap();
}

#[test]
fn wrong_signature_is_refused_on_both_ends() {
    let server = SimServer::bind("127.0.0.1:0").unwrap();
    let addr = server.local_addr();
    let client = thread::spawn(move || SimClient::connect_retrying(addr, "box([0],[2])", WAIT).map(|_| ()));
    let refused = server.accept("box([0],[1])", WAIT).map(|_| ());
    assert!(matches!(refused, Err(ProtocolError::HandshakeRefused(_))), "{refused:?}");
    let theirs = client.join().unwrap();
    assert!(matches!(theirs, Err(ProtocolError::HandshakeRefused(ref r)) if r.contains("signature")), "{theirs:?}");
}

#[test]
fn accept_times_out_and_ports_conflict() {
    let server = SimServer::bind("127.0.0.1:0").unwrap();
    assert!(matches!(
        server.accept("x", Duration::from_millis(50)).map(|_| ()),
        Err(ProtocolError::Timeout)
    ));
    let taken = server.local_addr().to_string();
    assert!(matches!(SimServer::bind(taken.as_str()).map(|_| ()), Err(ProtocolError::Bind { .. })));
}

#[test]
fn loopback_traces_equal_in_process_traces() {
    let space = FeatureSpace::uniform(Domain::structure([
        ("pole_mass", Domain::boxed(vec![0.05], vec![0.5])),
        ("theta0", Domain::boxed(vec![-0.1], vec![0.1])),
    ]))
    .unwrap();
    let sim = InProcess::new(Model::CartPole);
    let sig = space_signature(&space);
    let server = SimServer::bind("127.0.0.1:0").unwrap();
    let handle = spawn_loopback(server.local_addr(), sig.clone(), sim.clone());
    let mut conn = server.accept(&sig, WAIT).unwrap();
    let mut rng = stream(4, streams::SAMPLER);
    let mut local = sim;
    for run_id in 1..=10 {
        let p = space.sample_prior(&mut rng).unwrap();
        let remote = conn.serve_episode(run_id, &p).unwrap();
        let here = local.simulate(run_id, &p).unwrap();
        assert_eq!(remote, here);
    }
    conn.close().unwrap();
    assert_eq!(handle.join().unwrap().unwrap(), 10);
}
