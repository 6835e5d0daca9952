use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use mynd_core::datastore::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn random_dataset(seed: u64) -> RecordingDataset {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let channels = rng.gen_range(1..=4usize);
    let frames = rng.gen_range(0..300usize);
    let samples: Vec<f32> = (0..channels * frames).map(|_| rng.gen_range(-500.0f32..500.0)).collect();
    let mut markers: Vec<Marker> = (0..rng.gen_range(0..6))
        .map(|i| Marker { sample_index: rng.gen_range(0..=frames as u64), code: rng.gen_range(-3..20), label: format!("m{i}:+1") })
        .collect();
    markers.sort_by_key(|m| m.sample_index);
    let mut extra = BTreeMap::new();
    if rng.gen() {
        extra.insert("note".to_string(), "Grüße \"quoted\"".to_string());
    }
    RecordingDataset {
        subject_id: SubjectId::from_bytes(rng.gen()),
        scenario_id: format!("d{}-x{}", rng.gen_range(1..=7), seed),
        day: rng.gen_range(1..=7),
        sample_rate: 256,
        channel_labels: ["AF7", "AF8", "TP9", "TP10"][..channels].iter().map(|s| s.to_string()).collect(),
        samples,
        markers,
        metadata: RecordingMetadata {
            started_at: "2026-01-01T10:00:00Z".into(),
            ended_at: "2026-01-01T10:03:00Z".into(),
            locale: if rng.gen() { "en".into() } else { "de".into() },
            fitting_time_seconds: rng.gen::<bool>().then(|| rng.gen_range(0.0..300.0)),
            strategy: Some("positive_memory".into()),
            block: Some(rng.gen_range(0..4)),
            quality_trace: (0..rng.gen_range(0..4))
                .map(|i| QualityPoint { sample_index: i * 128, per_channel: vec![rng.gen(); channels] })
                .collect(),
            extra,
            ..Default::default()
        },
    }
}

#[test]
fn container_round_trip_over_500_datasets() {
    for seed in 0..500 {
        let ds = random_dataset(seed);
        let bytes = ds.to_bytes().unwrap();
        let back = RecordingDataset::from_bytes(&bytes).unwrap();
        assert_eq!(back, ds, "seed {seed}");
        assert_eq!(back.to_bytes().unwrap(), bytes, "seed {seed}");
    }
}

#[test]
fn envelope_round_trip_and_single_byte_tamper() {
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let secret = RecipientSecretKey::generate(&mut rng);
    let public = secret.public_key();
    for seed in 0..20 {
        let plain = random_dataset(seed).to_bytes().unwrap();
        let sealed = encrypt_envelope(&plain, &public, &mut rng).unwrap().to_bytes();
        assert_eq!(open_envelope_bytes(&sealed, &secret).unwrap(), plain);
        for i in 0..sealed.len() {
            let mut bad = sealed.clone();
            bad[i] ^= 1 << (i % 8);
            assert!(open_envelope_bytes(&bad, &secret).is_err(), "seed {seed} byte {i}");
        }
    }
    let other = RecipientSecretKey::generate(&mut rng);
    let sealed = encrypt_envelope(b"x", &public, &mut rng).unwrap().to_bytes();
    assert!(matches!(open_envelope_bytes(&sealed, &other), Err(EnvelopeError::Authentication)));
}

#[derive(Debug, Clone)]
struct Request {
    method: String,
    target: String,
    headers: BTreeMap<String, String>,
    body: Vec<u8>,
}

/// Minimal HTTP/1.1 receiver: records every request, answers uploads with
/// the entry id and message requests with a fixed list.
fn stub_server(fail_first: usize) -> (String, Arc<Mutex<Vec<Request>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = format!("http://{}", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = seen.clone();
    thread::spawn(move || {
        let mut served = 0;
        for stream in listener.incoming() {
            let mut stream = stream.unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            let mut parts = line.split_whitespace();
            let method = parts.next().unwrap_or_default().to_string();
            let target = parts.next().unwrap_or_default().to_string();
            let mut headers = BTreeMap::new();
            loop {
                let mut h = String::new();
                reader.read_line(&mut h).unwrap();
                let h = h.trim_end();
                if h.is_empty() {
                    break;
                }
                if let Some((k, v)) = h.split_once(':') {
                    headers.insert(k.trim().to_ascii_lowercase(), v.trim().to_string());
                }
            }
            let len: usize = headers.get("content-length").map_or(0, |v| v.parse().unwrap());
            let mut body = vec![0; len];
            reader.read_exact(&mut body).unwrap();
            let req = Request { method, target, headers, body };
            served += 1;
            let (status, reply) = if served <= fail_first {
                ("503 Service Unavailable", String::new())
            } else if req.target.starts_with("/recordings") {
                ("200 OK", format!("{{\"id\":\"{}\"}}", req.headers.get("x-entry-id").cloned().unwrap_or_default()))
            } else {
                ("200 OK", r#"[{"id":"m1","locale":"de","text":"Hallo"}]"#.to_string())
            };
            log.lock().unwrap().push(req);
            write!(stream, "HTTP/1.1 {status}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}", reply.len()).unwrap();
        }
    });
    (addr, seen)
}

#[test]
fn http_flush_posts_envelopes_in_order() {
    let (base, seen) = stub_server(1);
    let transport = HttpTransport::new(&base, Duration::from_secs(5));
    let dir = tempfile::tempdir().unwrap();
    let queue = UploadQueue::open(dir.path().join("queue.json")).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let secret = RecipientSecretKey::generate(&mut rng);
    let a = random_dataset(1);
    let b = random_dataset(2);
    let (id_a, path_a) = store_recording(&a, &secret.public_key(), dir.path(), &queue, 1, &mut rng).unwrap();
    let (id_b, _) = store_recording(&b, &secret.public_key(), dir.path(), &queue, 2, &mut rng).unwrap();

    // The first request is refused; the flush carries on with the next entry.
    let first = flush_uploads(&queue, &transport).unwrap();
    assert_eq!(first.iter().map(|o| o.result.is_ok()).collect::<Vec<_>>(), vec![false, true]);
    assert_eq!(queue.pending().iter().map(|e| e.id.clone()).collect::<Vec<_>>(), vec![id_a.clone()]);

    let outcomes = flush_uploads(&queue, &transport).unwrap();
    assert_eq!(outcomes.len(), 1);
    assert_eq!(outcomes[0].id, id_a);
    assert!(outcomes[0].result.is_ok());
    assert!(queue.pending().is_empty());

    let reqs = seen.lock().unwrap().clone();
    let posts: Vec<_> = reqs.iter().filter(|r| r.method == "POST").collect();
    assert_eq!(posts.len(), 3);
    assert!(posts.iter().all(|p| p.target == "/recordings"));
    assert_eq!(posts[0].headers["x-entry-id"], id_a);
    assert_eq!(posts[1].headers["x-entry-id"], id_b);
    assert_eq!(posts[2].headers["x-entry-id"], id_a);
    assert_eq!(posts[2].headers["x-subject-token"], a.subject_id.as_str());
    assert_eq!(posts[2].body, std::fs::read(&path_a).unwrap());
    assert_eq!(RecordingDataset::from_bytes(&open_envelope_bytes(&posts[1].body, &secret).unwrap()).unwrap(), b);

    // Reopening the persisted queue sees everything as sent.
    let reopened = UploadQueue::open(dir.path().join("queue.json")).unwrap();
    assert!(reopened.pending().is_empty());
    assert!(flush_uploads(&reopened, &transport).unwrap().is_empty());

    let mut inbox = MessageInbox::new();
    let msgs = fetch_messages(&transport, "de", &mut inbox);
    assert_eq!(msgs.len(), 1);
    assert_eq!(msgs[0].text, "Hallo");
    assert!(fetch_messages(&transport, "de", &mut inbox).is_empty());
    assert!(seen.lock().unwrap().iter().any(|r| r.target == "/messages?locale=de"));
}

#[test]
fn dir_transport_flush_and_offline_retry() {
    let dir = tempfile::tempdir().unwrap();
    let outbox = dir.path().join("outbox");
    let server = dir.path().join("server");
    let queue = UploadQueue::open(dir.path().join("queue.json")).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    let secret = RecipientSecretKey::generate(&mut rng);
    let ds = random_dataset(3);
    let (id, _) = store_recording(&ds, &secret.public_key(), &outbox, &queue, 5, &mut rng).unwrap();

    let transport = DirTransport::new(&server);
    assert!(flush_uploads(&queue, &transport).is_err());
    assert_eq!(queue.pending()[0].attempts, 1);

    std::fs::create_dir_all(&server).unwrap();
    flush_uploads(&queue, &transport).unwrap();
    let delivered = std::fs::read(transport.recording_path(&ds.subject_id, &id)).unwrap();
    assert_eq!(RecordingDataset::from_bytes(&open_envelope_bytes(&delivered, &secret).unwrap()).unwrap(), ds);
    assert!(fetch_messages(&transport, "en", &mut MessageInbox::new()).is_empty());
}
