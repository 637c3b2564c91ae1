//! Byte transports: an in-process duplex pipe, TCP, and a recording tap.

use std::io::{self, Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::mpsc::{self, Receiver, SyncSender};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use super::transcript::TranscriptWriter;
use super::wire::{read_frame, write_frame};
use crate::error::{Error, Result};
use crate::frame::{Role, TranscriptFrame};
use crate::protocol::FrameLink;

/// Chunks a writer may queue before blocking.
pub const CHANNEL_DEPTH: usize = 64;

/// One end of an in-process duplex byte stream.
pub struct ChannelEnd {
    tx: SyncSender<Vec<u8>>,
    rx: Receiver<Vec<u8>>,
    pending: Vec<u8>,
    offset: usize,
}

/// Two connected ends. Dropping one makes the other read end-of-stream
/// and fail on write.
pub fn channel_pair() -> (ChannelEnd, ChannelEnd) {
    let (tx_a, rx_b) = mpsc::sync_channel(CHANNEL_DEPTH);
    let (tx_b, rx_a) = mpsc::sync_channel(CHANNEL_DEPTH);
    let end = |tx, rx| ChannelEnd {
        tx,
        rx,
        pending: Vec::new(),
        offset: 0,
    };
    (end(tx_a, rx_a), end(tx_b, rx_b))
}

impl Read for ChannelEnd {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        if buf.is_empty() {
            return Ok(0);
        }
        while self.offset == self.pending.len() {
            match self.rx.recv() {
                Ok(chunk) => {
                    self.pending = chunk;
                    self.offset = 0;
                }
                Err(_) => return Ok(0),
            }
        }
        let n = buf.len().min(self.pending.len() - self.offset);
        buf[..n].copy_from_slice(&self.pending[self.offset..self.offset + n]);
        self.offset += n;
        Ok(n)
    }
}

impl Write for ChannelEnd {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        if buf.is_empty() {
            return Ok(0);
        }
        self.tx
            .send(buf.to_vec())
            .map_err(|_| io::Error::new(io::ErrorKind::BrokenPipe, "peer end dropped"))?;
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

/// A [`FrameLink`] over any byte stream.
pub struct StreamLink<S> {
    stream: S,
    role: Role,
    n_ct: usize,
}

impl<S: Read + Write> StreamLink<S> {
    pub fn new(stream: S, role: Role, n_ct: usize) -> Self {
        StreamLink { stream, role, n_ct }
    }

    pub fn into_inner(self) -> S {
        self.stream
    }
}

impl<S: Read + Write> FrameLink for StreamLink<S> {
    fn send_frame(&mut self, frame: &TranscriptFrame) -> Result<()> {
        write_frame(&mut self.stream, frame)
    }

    fn recv_frame(&mut self) -> Result<TranscriptFrame> {
        let wire = read_frame(&mut self.stream)?
            .ok_or_else(|| Error::ProtocolDesync("peer closed the connection".into()))?;
        if wire.direction != self.role.peer() {
            return Err(Error::ProtocolDesync(format!(
                "{:?} received its own direction byte",
                self.role
            )));
        }
        wire.into_transcript(self.n_ct)
    }
}

fn resolve(addr: &str) -> Result<SocketAddr> {
    addr.to_socket_addrs()
        .map_err(|e| Error::io(format!("resolving {addr}"), e))?
        .next()
        .ok_or_else(|| Error::Parse(format!("{addr} resolves to nothing")))
}

/// A listener that accepts exactly one peer, then stops listening.
pub struct Server {
    listener: TcpListener,
}

impl Server {
    pub fn bind(addr: &str) -> Result<Self> {
        let listener =
            TcpListener::bind(addr).map_err(|e| Error::io(format!("binding {addr}"), e))?;
        Ok(Server { listener })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        self.listener
            .local_addr()
            .map_err(|e| Error::io("local address", e))
    }

    /// Waits for one connection. The listening socket is closed on return,
    /// so later connection attempts are refused.
    pub fn accept_one(self) -> Result<TcpStream> {
        let addr = self.local_addr()?;
        let (stream, peer) = self
            .listener
            .accept()
            .map_err(|e| Error::io(format!("accepting on {addr}"), e))?;
        log::info!("accepted {peer} on {addr}");
        stream
            .set_nodelay(true)
            .map_err(|e| Error::io("setting TCP_NODELAY", e))?;
        Ok(stream)
    }
}

pub fn tcp_serve(addr: &str) -> Result<TcpStream> {
    Server::bind(addr)?.accept_one()
}

/// Connects to `addr`, retrying refused connections until `patience` runs out.
pub fn tcp_connect(addr: &str, patience: Duration) -> Result<TcpStream> {
    let target = resolve(addr)?;
    let deadline = Instant::now() + patience;
    loop {
        match TcpStream::connect(target) {
            Ok(s) => {
                s.set_nodelay(true)
                    .map_err(|e| Error::io("setting TCP_NODELAY", e))?;
                return Ok(s);
            }
            Err(e) if e.kind() == io::ErrorKind::ConnectionRefused && Instant::now() < deadline => {
                thread::sleep(Duration::from_millis(20));
            }
            Err(e) => return Err(Error::io(format!("connecting to {addr}"), e)),
        }
    }
}

/// Forwards frames one way, recording each before passing it on.
fn pump(
    mut from: TcpStream,
    mut to: TcpStream,
    n_ct: usize,
    log: Arc<Mutex<TranscriptWriter>>,
) -> Result<u64> {
    let mut count = 0;
    while let Some(wire) = read_frame(&mut from)? {
        let frame = wire.into_transcript(n_ct)?;
        log.lock().expect("tap log lock").append(&frame)?;
        write_frame(&mut to, &frame)?;
        count += 1;
    }
    let _ = to.shutdown(Shutdown::Write);
    Ok(count)
}

/// A passive man-in-the-middle: accepts the connecting party on `listen`,
/// dials the serving party at `upstream`, relays frames both ways and
/// appends every frame, in arrival order, to `log`. Returns the number of
/// frames seen once both sides close.
pub fn tap(listen: Server, upstream: &str, n_ct: usize, log: TranscriptWriter) -> Result<u64> {
    let client = listen.accept_one()?;
    let server = tcp_connect(upstream, Duration::from_secs(10))?;
    let log = Arc::new(Mutex::new(log));
    let (c2, s2) = (
        client
            .try_clone()
            .map_err(|e| Error::io("cloning socket", e))?,
        server
            .try_clone()
            .map_err(|e| Error::io("cloning socket", e))?,
    );
    let up_log = Arc::clone(&log);
    let upward = thread::spawn(move || pump(c2, s2, n_ct, up_log));
    let down = pump(server, client, n_ct, Arc::clone(&log));
    let up = upward
        .join()
        .map_err(|_| Error::ProtocolDesync("tap thread panicked".into()))?;
    let total = down? + up?;
    log.lock().expect("tap log lock").flush()?;
    Ok(total)
}
