//! Optional Unix-socket transport for the pronouncer.
//!
//! Carries the same newline-delimited JSON messages as [`super::wire`]
//! over a local stream socket, keeping the pronouncer architecturally
//! external to the agents that query it. One thread per connection; each
//! request line is answered with exactly one response line.

use std::io::{self, BufRead, BufReader, Write};
use std::os::unix::net::{UnixListener, UnixStream};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use super::{wire, Pronouncer};

/// Handle for a running socket server. Dropping it shuts the server down
/// and removes the socket file.
pub struct PronouncerServer {
    path: PathBuf,
    stop: Arc<AtomicBool>,
    accept_thread: Option<JoinHandle<()>>,
}

/// Bind `path` and serve queries against `pronouncer` until shut down.
pub fn serve_unix(path: &Path, pronouncer: Arc<Pronouncer>) -> io::Result<PronouncerServer> {
    let listener = UnixListener::bind(path)?;
    let stop = Arc::new(AtomicBool::new(false));
    let accept_stop = Arc::clone(&stop);
    let accept_thread = std::thread::spawn(move || {
        for conn in listener.incoming() {
            if accept_stop.load(Ordering::SeqCst) {
                break;
            }
            let Ok(stream) = conn else { continue };
            let pronouncer = Arc::clone(&pronouncer);
            std::thread::spawn(move || serve_connection(stream, &pronouncer));
        }
    });
    Ok(PronouncerServer {
        path: path.to_path_buf(),
        stop,
        accept_thread: Some(accept_thread),
    })
}

fn serve_connection(stream: UnixStream, pronouncer: &Pronouncer) {
    let Ok(write_half) = stream.try_clone() else {
        return;
    };
    let mut writer = io::BufWriter::new(write_half);
    let reader = BufReader::new(stream);
    for line in reader.lines() {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        let response = wire::handle_line(pronouncer, &line);
        if writer
            .write_all(response.as_bytes())
            .and_then(|_| writer.write_all(b"\n"))
            .and_then(|_| writer.flush())
            .is_err()
        {
            break;
        }
    }
}

impl PronouncerServer {
    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Stop accepting connections and remove the socket file. In-flight
    /// connections finish on their own threads.
    pub fn shutdown(mut self) {
        self.shutdown_inner();
    }

    fn shutdown_inner(&mut self) {
        if self.stop.swap(true, Ordering::SeqCst) {
            return;
        }
        // Wake the blocking accept with a throwaway connection.
        let _ = UnixStream::connect(&self.path);
        if let Some(handle) = self.accept_thread.take() {
            let _ = handle.join();
        }
        let _ = std::fs::remove_file(&self.path);
    }
}

impl Drop for PronouncerServer {
    fn drop(&mut self) {
        self.shutdown_inner();
    }
}
