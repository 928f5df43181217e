//! Ordered byte-line channels between nodes.
//!
//! A real serial or radio link plugs in by implementing [`Transport`]; the
//! node loops never look past this trait.

use std::io::{self, BufRead, BufReader, ErrorKind, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::sync::mpsc::{self, Receiver, Sender, TryRecvError};
use std::time::Duration;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("TransportClosed")]
    Closed,
    #[error("transport I/O: {0}")]
    Io(#[from] io::Error),
}

pub trait Transport {
    /// Queue one line. A trailing newline is added when missing.
    fn send(&mut self, line: &str) -> Result<(), TransportError>;

    /// Next complete line without its newline, or `None` when nothing is
    /// pending. Never blocks for long.
    fn try_recv(&mut self) -> Result<Option<String>, TransportError>;

    fn close(&mut self);
}

fn terminated(line: &str) -> String {
    if line.ends_with('\n') {
        line.to_string()
    } else {
        format!("{line}\n")
    }
}

/// In-process channel end; lines arrive unmodified and in order.
#[derive(Debug)]
pub struct LoopbackTransport {
    tx: Option<Sender<String>>,
    rx: Receiver<String>,
}

/// Two connected ends.
pub fn loopback_pair() -> (LoopbackTransport, LoopbackTransport) {
    let (tx_a, rx_b) = mpsc::channel();
    let (tx_b, rx_a) = mpsc::channel();
    (
        LoopbackTransport {
            tx: Some(tx_a),
            rx: rx_a,
        },
        LoopbackTransport {
            tx: Some(tx_b),
            rx: rx_b,
        },
    )
}

impl Transport for LoopbackTransport {
    fn send(&mut self, line: &str) -> Result<(), TransportError> {
        let tx = self.tx.as_ref().ok_or(TransportError::Closed)?;
        tx.send(terminated(line)).map_err(|_| TransportError::Closed)
    }

    fn try_recv(&mut self) -> Result<Option<String>, TransportError> {
        match self.rx.try_recv() {
            Ok(mut line) => {
                if line.ends_with('\n') {
                    line.pop();
                }
                Ok(Some(line))
            }
            Err(TryRecvError::Empty) => Ok(None),
            Err(TryRecvError::Disconnected) => Err(TransportError::Closed),
        }
    }

    fn close(&mut self) {
        self.tx = None;
    }
}

const TCP_POLL: Duration = Duration::from_millis(1);

/// Newline-delimited lines over a TCP stream.
#[derive(Debug)]
pub struct TcpLineTransport {
    writer: Option<TcpStream>,
    reader: BufReader<TcpStream>,
    partial: Vec<u8>,
    eof: bool,
}

impl TcpLineTransport {
    pub fn connect(addr: impl ToSocketAddrs) -> io::Result<Self> {
        Self::from_stream(TcpStream::connect(addr)?)
    }

    pub fn from_stream(stream: TcpStream) -> io::Result<Self> {
        stream.set_nodelay(true)?;
        stream.set_read_timeout(Some(TCP_POLL))?;
        Ok(TcpLineTransport {
            writer: Some(stream.try_clone()?),
            reader: BufReader::new(stream),
            partial: Vec::new(),
            eof: false,
        })
    }

    /// Block up to `timeout` for the next line.
    pub fn recv_timeout(&mut self, timeout: Duration) -> Result<Option<String>, TransportError> {
        let deadline = std::time::Instant::now() + timeout;
        loop {
            if let Some(line) = self.try_recv()? {
                return Ok(Some(line));
            }
            if std::time::Instant::now() >= deadline {
                return Ok(None);
            }
        }
    }
}

impl Transport for TcpLineTransport {
    fn send(&mut self, line: &str) -> Result<(), TransportError> {
        let w = self.writer.as_mut().ok_or(TransportError::Closed)?;
        w.write_all(terminated(line).as_bytes()).map_err(|e| match e.kind() {
            ErrorKind::BrokenPipe | ErrorKind::ConnectionReset | ErrorKind::ConnectionAborted => {
                TransportError::Closed
            }
            _ => TransportError::Io(e),
        })
    }

    fn try_recv(&mut self) -> Result<Option<String>, TransportError> {
        if self.eof {
            return Err(TransportError::Closed);
        }
        match self.reader.read_until(b'\n', &mut self.partial) {
            Ok(0) => {
                self.eof = true;
                Err(TransportError::Closed)
            }
            Ok(_) if self.partial.ends_with(b"\n") => {
                self.partial.pop();
                if self.partial.ends_with(b"\r") {
                    self.partial.pop();
                }
                let line = String::from_utf8_lossy(&self.partial).into_owned();
                self.partial.clear();
                Ok(Some(line))
            }
            // Partial line: keep the bytes, wait for the rest.
            Ok(_) => Ok(None),
            Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => Ok(None),
            Err(e) if matches!(e.kind(), ErrorKind::ConnectionReset | ErrorKind::ConnectionAborted) => {
                self.eof = true;
                Err(TransportError::Closed)
            }
            Err(e) => Err(e.into()),
        }
    }

    fn close(&mut self) {
        if let Some(w) = self.writer.take() {
            let _ = w.shutdown(std::net::Shutdown::Both);
        }
    }
}

/// Read a whole line from any reader, for line-oriented stdin loops.
pub fn read_line_from(reader: &mut impl BufRead) -> io::Result<Option<String>> {
    let mut line = String::new();
    if reader.read_line(&mut line)? == 0 {
        return Ok(None);
    }
    while line.ends_with('\n') || line.ends_with('\r') {
        line.pop();
    }
    Ok(Some(line))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::net::TcpListener;

    #[test]
    fn loopback_preserves_order_and_content() {
        let (mut a, mut b) = loopback_pair();
        for i in 0..100 {
            a.send(&format!("line {i}")).unwrap();
        }
        for i in 0..100 {
            assert_eq!(b.try_recv().unwrap(), Some(format!("line {i}")));
        }
        assert_eq!(b.try_recv().unwrap(), None);
        b.send("back\n").unwrap();
        assert_eq!(a.try_recv().unwrap().as_deref(), Some("back"));
    }

    #[test]
    fn loopback_close() {
        let (mut a, mut b) = loopback_pair();
        a.close();
        assert!(matches!(a.send("x"), Err(TransportError::Closed)));
        assert!(matches!(b.try_recv(), Err(TransportError::Closed)));
    }

    #[test]
    fn tcp_lines_round_trip() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let mut client = TcpLineTransport::connect(addr).unwrap();
        let mut server = TcpLineTransport::from_stream(listener.accept().unwrap().0).unwrap();
        client.send("J,1,2").unwrap();
        client.send("second\r\n").unwrap();
        let t = Duration::from_secs(2);
        assert_eq!(server.recv_timeout(t).unwrap().as_deref(), Some("J,1,2"));
        assert_eq!(server.recv_timeout(t).unwrap().as_deref(), Some("second"));
        assert_eq!(server.try_recv().unwrap(), None);
        client.close();
        let closed = (0..1000).any(|_| matches!(server.try_recv(), Err(TransportError::Closed)));
        assert!(closed);
    }
}
