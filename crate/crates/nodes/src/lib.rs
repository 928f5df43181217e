//! Runtime nodes of the arm twin: the operator-side master, the actuator-side
//! slave with its servo plant, the links between them, and a WebSocket bridge
//! for browser clients.

pub mod bridge;
pub mod master;
pub mod server;
pub mod servo;
pub mod sim;
pub mod slave;
pub mod telemetry;
pub mod transport;

pub use bridge::{Bridge, BridgeError};
pub use master::{master_tick, MasterState, MasterStep};
pub use server::{run_master_lines, InputMode, SlaveServer};
pub use servo::ServoModel;
pub use sim::{run_loopback, LoopbackSim};
pub use slave::SlaveState;
pub use telemetry::{RejectReason, TelemetryRecord, Verdict};
pub use transport::{loopback_pair, LoopbackTransport, TcpLineTransport, Transport, TransportError};
