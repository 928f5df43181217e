//! WebSocket front for browser clients.
//!
//! Clients send `A`/`C` command lines as text messages; the bridge runs them
//! through its own master pipeline and forwards frames to the slave's command
//! port, replying to the sender with the operator message. Every telemetry
//! line from the slave is relayed verbatim to all connected clients.

use std::io::{self, ErrorKind};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use armtwin_core::config::Config;
use armtwin_core::protocol::MasterInput;
use thiserror::Error;
use tungstenite::{Message, WebSocket};

use crate::master::{master_tick, MasterState};
use crate::transport::{TcpLineTransport, Transport, TransportError};

const POLL: Duration = Duration::from_millis(10);

#[derive(Debug, Error)]
pub enum BridgeError {
    #[error("cannot reach slave {what} port at {addr}: {source}")]
    Connect {
        what: &'static str,
        addr: String,
        source: io::Error,
    },
    #[error("bridge I/O: {0}")]
    Io(#[from] io::Error),
}

type Subscribers = Arc<Mutex<Vec<Sender<String>>>>;

struct Uplink {
    master: MasterState,
    link: TcpLineTransport,
}

pub struct Bridge {
    listener: TcpListener,
    uplink: Arc<Mutex<Uplink>>,
    telemetry: TcpLineTransport,
    subscribers: Subscribers,
}

impl Bridge {
    /// Connects to both slave ports first, then listens for WebSocket clients
    /// on `listen`.
    pub fn connect(
        config: &Config,
        command_addr: &str,
        telemetry_addr: &str,
        listen: &str,
    ) -> Result<Self, BridgeError> {
        let link = TcpLineTransport::connect(command_addr).map_err(|source| BridgeError::Connect {
            what: "command",
            addr: command_addr.to_string(),
            source,
        })?;
        let telemetry =
            TcpLineTransport::connect(telemetry_addr).map_err(|source| BridgeError::Connect {
                what: "telemetry",
                addr: telemetry_addr.to_string(),
                source,
            })?;
        let listener = TcpListener::bind(listen)?;
        listener.set_nonblocking(true)?;
        Ok(Bridge {
            listener,
            uplink: Arc::new(Mutex::new(Uplink {
                master: MasterState::new(config),
                link,
            })),
            telemetry,
            subscribers: Arc::default(),
        })
    }

    pub fn from_config(config: &Config) -> Result<Self, BridgeError> {
        Self::connect(
            config,
            &config.command_addr(),
            &config.telemetry_addr(),
            &config.bridge_addr(),
        )
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Serve until `stop` is raised or the slave hangs up.
    pub fn run(mut self, stop: &AtomicBool) -> Result<(), BridgeError> {
        let stop_clients = Arc::new(AtomicBool::new(false));
        let mut workers = Vec::new();
        let result = loop {
            if stop.load(Ordering::Relaxed) {
                break Ok(());
            }
            match self.listener.accept() {
                Ok((stream, peer)) => {
                    log::info!("websocket client {peer}");
                    let (tx, rx) = mpsc::channel();
                    self.subscribers.lock().unwrap().push(tx);
                    let uplink = Arc::clone(&self.uplink);
                    let stop_clients = Arc::clone(&stop_clients);
                    workers.push(thread::spawn(move || {
                        if let Err(e) = serve_client(stream, rx, uplink, &stop_clients) {
                            log::info!("client {peer} gone: {e}");
                        }
                    }));
                }
                Err(e) if e.kind() == ErrorKind::WouldBlock => {}
                Err(e) => break Err(e.into()),
            }

            let mut relayed = 0;
            let relay = loop {
                match self.telemetry.try_recv() {
                    Ok(Some(line)) => {
                        relayed += 1;
                        self.subscribers
                            .lock()
                            .unwrap()
                            .retain(|s| s.send(line.clone()).is_ok());
                    }
                    Ok(None) => break Ok(()),
                    Err(TransportError::Closed) => {
                        log::warn!("slave closed the telemetry stream");
                        break Err(BridgeError::Io(io::Error::new(
                            ErrorKind::ConnectionAborted,
                            "slave closed the telemetry stream",
                        )));
                    }
                    Err(TransportError::Io(e)) => break Err(e.into()),
                }
            };
            if relay.is_err() {
                break relay;
            }
            if relayed == 0 {
                thread::sleep(POLL);
            }
        };
        stop_clients.store(true, Ordering::Relaxed);
        for w in workers {
            let _ = w.join();
        }
        result
    }
}

#[allow(clippy::result_large_err)]
fn serve_client(
    stream: TcpStream,
    telemetry: Receiver<String>,
    uplink: Arc<Mutex<Uplink>>,
    stop: &AtomicBool,
) -> Result<(), tungstenite::Error> {
    stream.set_nonblocking(false)?;
    let mut ws: WebSocket<TcpStream> = tungstenite::accept(stream).map_err(|e| match e {
        tungstenite::HandshakeError::Failure(f) => f,
        tungstenite::HandshakeError::Interrupted(_) => {
            tungstenite::Error::Io(io::Error::new(ErrorKind::WouldBlock, "handshake interrupted"))
        }
    })?;
    ws.get_mut().set_read_timeout(Some(POLL))?;

    while !stop.load(Ordering::Relaxed) {
        match ws.read() {
            Ok(Message::Text(text)) => {
                let reply = handle_command(text.as_str(), &uplink);
                ws.send(Message::Text(reply))?;
            }
            Ok(Message::Close(_)) => return Ok(()),
            Ok(_) => {}
            Err(tungstenite::Error::Io(e))
                if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {}
            Err(tungstenite::Error::ConnectionClosed) => return Ok(()),
            Err(e) => return Err(e),
        }
        while let Ok(line) = telemetry.try_recv() {
            ws.send(Message::Text(line))?;
        }
    }
    let _ = ws.close(None);
    Ok(())
}

fn handle_command(text: &str, uplink: &Mutex<Uplink>) -> String {
    let input = match MasterInput::parse_serial(text.trim()) {
        Ok(i) => i,
        Err(e) => return e.to_string(),
    };
    let mut guard = uplink.lock().unwrap();
    let Uplink { master, link } = &mut *guard;
    match master_tick(master, link, &input) {
        Ok(step) => step.message,
        Err(e) => e.to_string(),
    }
}
