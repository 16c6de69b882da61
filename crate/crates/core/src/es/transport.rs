//! Point-to-point delivery between workers.
//!
//! Both implementations keep one ordered, reliable link per peer, so a
//! worker can wait on a specific peer without reordering.

use std::io::{ErrorKind, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::mpsc::{channel, Receiver, RecvTimeoutError, Sender};
use std::thread;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};

pub trait Transport: Send {
    fn rank(&self) -> usize;

    fn world(&self) -> usize;

    fn send(&mut self, peer: usize, frame: &[u8]) -> Result<()>;

    /// Next frame from `peer`. `generation` only labels a timeout error.
    fn recv(&mut self, peer: usize, generation: u64) -> Result<Vec<u8>>;

    /// Bytes handed to the wire so far, framing included.
    fn bytes_sent(&self) -> u64;
}

impl<T: Transport + ?Sized> Transport for &mut T {
    fn rank(&self) -> usize {
        (**self).rank()
    }

    fn world(&self) -> usize {
        (**self).world()
    }

    fn send(&mut self, peer: usize, frame: &[u8]) -> Result<()> {
        (**self).send(peer, frame)
    }

    fn recv(&mut self, peer: usize, generation: u64) -> Result<Vec<u8>> {
        (**self).recv(peer, generation)
    }

    fn bytes_sent(&self) -> u64 {
        (**self).bytes_sent()
    }
}

impl<T: Transport + ?Sized> Transport for Box<T> {
    fn rank(&self) -> usize {
        (**self).rank()
    }

    fn world(&self) -> usize {
        (**self).world()
    }

    fn send(&mut self, peer: usize, frame: &[u8]) -> Result<()> {
        (**self).send(peer, frame)
    }

    fn recv(&mut self, peer: usize, generation: u64) -> Result<Vec<u8>> {
        (**self).recv(peer, generation)
    }

    fn bytes_sent(&self) -> u64 {
        (**self).bytes_sent()
    }
}

/// A world of one: nothing to send or receive.
#[derive(Debug, Default)]
pub struct Solo;

impl Transport for Solo {
    fn rank(&self) -> usize {
        0
    }

    fn world(&self) -> usize {
        1
    }

    fn send(&mut self, peer: usize, _: &[u8]) -> Result<()> {
        Err(Error::Protocol(format!("no peer {peer} in a world of one")))
    }

    fn recv(&mut self, peer: usize, _: u64) -> Result<Vec<u8>> {
        Err(Error::Protocol(format!("no peer {peer} in a world of one")))
    }

    fn bytes_sent(&self) -> u64 {
        0
    }
}

/// Channel mesh between threads of one process.
pub struct InProcess {
    rank: usize,
    outbox: Vec<Option<Sender<Vec<u8>>>>,
    inbox: Vec<Option<Receiver<Vec<u8>>>>,
    timeout: Duration,
    sent: u64,
}

impl InProcess {
    /// One endpoint per rank, fully connected.
    pub fn mesh(world: usize, timeout: Duration) -> Vec<InProcess> {
        let mut outboxes: Vec<Vec<Option<Sender<Vec<u8>>>>> = (0..world).map(|_| (0..world).map(|_| None).collect()).collect();
        let mut inboxes: Vec<Vec<Option<Receiver<Vec<u8>>>>> = (0..world).map(|_| (0..world).map(|_| None).collect()).collect();
        for src in 0..world {
            for dst in 0..world {
                if src != dst {
                    let (tx, rx) = channel();
                    outboxes[src][dst] = Some(tx);
                    inboxes[dst][src] = Some(rx);
                }
            }
        }
        outboxes
            .into_iter()
            .zip(inboxes)
            .enumerate()
            .map(|(rank, (outbox, inbox))| InProcess {
                rank,
                outbox,
                inbox,
                timeout,
                sent: 0,
            })
            .collect()
    }
}

impl Transport for InProcess {
    fn rank(&self) -> usize {
        self.rank
    }

    fn world(&self) -> usize {
        self.outbox.len()
    }

    fn send(&mut self, peer: usize, frame: &[u8]) -> Result<()> {
        let tx = self
            .outbox
            .get(peer)
            .and_then(Option::as_ref)
            .ok_or_else(|| Error::Protocol(format!("no link to peer {peer}")))?;
        tx.send(frame.to_vec())
            .map_err(|_| Error::Protocol(format!("peer {peer} hung up")))?;
        self.sent += frame.len() as u64;
        Ok(())
    }

    fn recv(&mut self, peer: usize, generation: u64) -> Result<Vec<u8>> {
        let rx = self
            .inbox
            .get(peer)
            .and_then(Option::as_ref)
            .ok_or_else(|| Error::Protocol(format!("no link from peer {peer}")))?;
        match rx.recv_timeout(self.timeout) {
            Ok(frame) => Ok(frame),
            Err(RecvTimeoutError::Timeout) => Err(Error::PeerTimeout { peer, generation }),
            Err(RecvTimeoutError::Disconnected) => Err(Error::Protocol(format!("peer {peer} hung up"))),
        }
    }

    fn bytes_sent(&self) -> u64 {
        self.sent
    }
}

/// Full TCP mesh. Frames are a `u32` little-endian length followed by the
/// message bytes. Rank `i` dials every lower rank and accepts every
/// higher one; the dialer announces itself with its rank as a `u32`.
pub struct Tcp {
    rank: usize,
    links: Vec<Option<TcpStream>>,
    sent: u64,
}

impl Tcp {
    /// Binds `peers[rank]` and connects the mesh.
    pub fn connect(rank: usize, peers: &[SocketAddr], timeout: Duration) -> Result<Tcp> {
        let listener = TcpListener::bind(peers[rank])?;
        Tcp::with_listener(rank, listener, peers, timeout)
    }

    /// Like [`Tcp::connect`] with an already bound listener, which lets
    /// callers bind port 0 first and share the resolved addresses.
    pub fn with_listener(rank: usize, listener: TcpListener, peers: &[SocketAddr], timeout: Duration) -> Result<Tcp> {
        let world = peers.len();
        if rank >= world {
            return Err(Error::config(format!("rank {rank} outside a world of {world}")));
        }
        let mut links: Vec<Option<TcpStream>> = (0..world).map(|_| None).collect();
        let deadline = Instant::now() + timeout;

        for (peer, addr) in peers.iter().enumerate().take(rank) {
            let mut stream = loop {
                match TcpStream::connect_timeout(addr, Duration::from_millis(500)) {
                    Ok(s) => break s,
                    Err(_) if Instant::now() < deadline => thread::sleep(Duration::from_millis(20)),
                    Err(_) => return Err(Error::PeerTimeout { peer, generation: 0 }),
                }
            };
            stream.write_all(&(rank as u32).to_le_bytes())?;
            links[peer] = Some(stream);
        }

        listener.set_nonblocking(true)?;
        let mut pending = world - 1 - rank;
        while pending > 0 {
            match listener.accept() {
                Ok((mut stream, _)) => {
                    stream.set_nonblocking(false)?;
                    stream.set_read_timeout(Some(timeout))?;
                    let mut id = [0u8; 4];
                    stream.read_exact(&mut id)?;
                    let peer = u32::from_le_bytes(id) as usize;
                    if peer <= rank || peer >= world || links[peer].is_some() {
                        return Err(Error::Protocol(format!("unexpected handshake from rank {peer}")));
                    }
                    links[peer] = Some(stream);
                    pending -= 1;
                }
                Err(e) if e.kind() == ErrorKind::WouldBlock => {
                    if Instant::now() >= deadline {
                        let peer = (rank + 1..world).find(|&p| links[p].is_none()).unwrap_or(rank);
                        return Err(Error::PeerTimeout { peer, generation: 0 });
                    }
                    thread::sleep(Duration::from_millis(5));
                }
                Err(e) => return Err(e.into()),
            }
        }
        for s in links.iter().flatten() {
            s.set_nodelay(true)?;
            s.set_read_timeout(Some(timeout))?;
        }
        Ok(Tcp { rank, links, sent: 0 })
    }

    fn link(&mut self, peer: usize) -> Result<&mut TcpStream> {
        self.links
            .get_mut(peer)
            .and_then(Option::as_mut)
            .ok_or_else(|| Error::Protocol(format!("no link to peer {peer}")))
    }
}

impl Transport for Tcp {
    fn rank(&self) -> usize {
        self.rank
    }

    fn world(&self) -> usize {
        self.links.len()
    }

    fn send(&mut self, peer: usize, frame: &[u8]) -> Result<()> {
        let len = u32::try_from(frame.len()).map_err(|_| Error::Protocol("frame too large".into()))?;
        let mut buf = Vec::with_capacity(4 + frame.len());
        buf.extend_from_slice(&len.to_le_bytes());
        buf.extend_from_slice(frame);
        self.link(peer)?.write_all(&buf)?;
        self.sent += buf.len() as u64;
        Ok(())
    }

    fn recv(&mut self, peer: usize, generation: u64) -> Result<Vec<u8>> {
        let stream = self.link(peer)?;
        let timed_out = |e: std::io::Error| {
            if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) {
                Error::PeerTimeout { peer, generation }
            } else {
                e.into()
            }
        };
        let mut len = [0u8; 4];
        stream.read_exact(&mut len).map_err(timed_out)?;
        let mut frame = vec![0u8; u32::from_le_bytes(len) as usize];
        stream.read_exact(&mut frame).map_err(timed_out)?;
        Ok(frame)
    }

    fn bytes_sent(&self) -> u64 {
        self.sent
    }
}

/// Binds `world` loopback listeners on ephemeral ports.
pub fn loopback_listeners(world: usize) -> Result<(Vec<TcpListener>, Vec<SocketAddr>)> {
    let listeners: Vec<TcpListener> = (0..world)
        .map(|_| TcpListener::bind("127.0.0.1:0"))
        .collect::<std::io::Result<_>>()?;
    let addrs = listeners.iter().map(|l| l.local_addr()).collect::<std::io::Result<_>>()?;
    Ok((listeners, addrs))
}
