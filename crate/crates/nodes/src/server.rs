//! Networked node runners: the slave listening on TCP, and a master loop that
//! reads operator lines from any reader.

use std::io::{self, BufRead, ErrorKind, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::thread;
use std::time::{Duration, Instant};

use armtwin_core::config::Config;
use armtwin_core::protocol::{InputError, MasterInput};

use crate::master::{master_tick, MasterState};
use crate::slave::SlaveState;
use crate::telemetry::TelemetryRecord;
use crate::transport::{read_line_from, TcpLineTransport, Transport, TransportError};

/// Slave node bound to a command port and a telemetry port.
pub struct SlaveServer {
    commands: TcpListener,
    telemetry: TcpListener,
    state: SlaveState,
    dt: f64,
}

impl SlaveServer {
    /// Port 0 in the config picks an ephemeral port; see [`local_addrs`](Self::local_addrs).
    pub fn bind(config: &Config) -> io::Result<Self> {
        let commands = TcpListener::bind(config.command_addr())?;
        let telemetry = TcpListener::bind(config.telemetry_addr())?;
        commands.set_nonblocking(true)?;
        telemetry.set_nonblocking(true)?;
        Ok(SlaveServer {
            commands,
            telemetry,
            state: SlaveState::new(config),
            dt: config.dt,
        })
    }

    /// `(command, telemetry)` listening addresses.
    pub fn local_addrs(&self) -> io::Result<(SocketAddr, SocketAddr)> {
        Ok((self.commands.local_addr()?, self.telemetry.local_addr()?))
    }

    pub fn state(&self) -> &SlaveState {
        &self.state
    }

    /// Serve until `stop` is raised. One event loop: accept, drain command
    /// lines, advance the plant by `dt`, fan telemetry out.
    pub fn run(&mut self, stop: &AtomicBool) -> io::Result<()> {
        let started = Instant::now();
        let tick = Duration::from_secs_f64(self.dt);
        let mut masters: Vec<TcpLineTransport> = Vec::new();
        let mut observers: Vec<TcpStream> = Vec::new();

        while !stop.load(Ordering::Relaxed) {
            let loop_start = Instant::now();
            let now = started.elapsed().as_secs_f64();
            let mut outgoing: Vec<TelemetryRecord> = Vec::new();

            while let Some(stream) = accept(&self.commands)? {
                log::info!("master connected from {:?}", stream.peer_addr().ok());
                masters.push(TcpLineTransport::from_stream(stream)?);
            }
            while let Some(mut stream) = accept(&self.telemetry)? {
                stream.set_nodelay(true)?;
                if stream.write_all(self.state.telemetry(now).to_line().as_bytes()).is_ok() {
                    observers.push(stream);
                }
            }

            masters.retain_mut(|m| loop {
                match m.try_recv() {
                    Ok(Some(line)) => outgoing.push(self.state.tick(&line, now)),
                    Ok(None) => break true,
                    Err(TransportError::Closed) => break false,
                    Err(e) => {
                        log::warn!("dropping master: {e}");
                        break false;
                    }
                }
            });

            if !self.state.servo().at_setpoint() {
                outgoing.push(self.state.step(self.dt, now));
            }

            for rec in &outgoing {
                let line = rec.to_line();
                observers.retain_mut(|o| o.write_all(line.as_bytes()).is_ok());
            }

            if let Some(rest) = tick.checked_sub(loop_start.elapsed()) {
                thread::sleep(rest);
            }
        }
        Ok(())
    }
}

fn accept(listener: &TcpListener) -> io::Result<Option<TcpStream>> {
    match listener.accept() {
        Ok((stream, _)) => {
            stream.set_nonblocking(false)?;
            Ok(Some(stream))
        }
        Err(e) if e.kind() == ErrorKind::WouldBlock => Ok(None),
        Err(e) => Err(e),
    }
}

/// How the master interprets operator lines.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputMode {
    /// `A ...` / `C ...` lines.
    Serial,
    /// Five raw potentiometer readings per line.
    Analog,
}

impl InputMode {
    pub fn parse(&self, line: &str) -> Result<MasterInput, InputError> {
        match self {
            InputMode::Serial => MasterInput::parse_serial(line),
            InputMode::Analog => MasterInput::parse_analog(line),
        }
    }
}

/// Read operator lines until EOF, transmitting through `transport` and writing
/// one status line per input to `out`. Blank lines and `#` comments are skipped.
pub fn run_master_lines<T: Transport + ?Sized>(
    mode: InputMode,
    input: &mut impl BufRead,
    state: &mut MasterState,
    transport: &mut T,
    out: &mut impl Write,
) -> Result<(), TransportError> {
    while let Some(line) = read_line_from(input)? {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let message = match mode.parse(trimmed) {
            Ok(inp) => master_tick(state, transport, &inp)?.message,
            Err(e) => e.to_string(),
        };
        writeln!(out, "{message}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::loopback_pair;
    use std::io::Cursor;

    #[test]
    fn master_lines_report_each_input() {
        let mut state = MasterState::new(&Config::default());
        let (mut tx, mut rx) = loopback_pair();
        let mut out = Vec::new();
        let script = "# warmup\nA 0 0 0 0 0\n\nA 0 0 0 0 0\nC 500 0 208 0\nnonsense\n";
        run_master_lines(InputMode::Serial, &mut Cursor::new(script), &mut state, &mut tx, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[..3], ["sent seq=0", "unchanged", "Unreachable"]);
        assert!(lines[3].starts_with("malformed input line"));
        assert!(rx.try_recv().unwrap().is_some());
        assert!(rx.try_recv().unwrap().is_none());
    }

    #[test]
    fn analog_mode() {
        let mut state = MasterState::new(&Config::default());
        let (mut tx, _rx) = loopback_pair();
        let mut out = Vec::new();
        run_master_lines(InputMode::Analog, &mut Cursor::new("512 512 512 512 0\n2000 0 0 0 0\n"), &mut state, &mut tx, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("sent seq=0\nAnalogOutOfRange"));
    }
}
