use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::AtomicBool;

use armtwin_core::batch::{random_in_limit_angles, roundtrip_sweep};
use armtwin_core::config::{Config, ConfigError};
use armtwin_core::workspace::sample_workspace;
use armtwin_core::kinematics::DEFAULT_ROUNDTRIP_TOL;
use armtwin_core::{fk_position, ik_solve, Angle, JointAngles, ToolPosition};
use armtwin_nodes::{
    run_master_lines, Bridge, BridgeError, InputMode, LoopbackSim, MasterState, SlaveServer,
    TcpLineTransport, TransportError,
};
use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

#[derive(Parser, Debug)]
#[command(name = "armtwin", version, about = "Desk-scale five-joint arm twin")]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tool position (mm) for five joint angles in degrees.
    Fk {
        #[arg(num_args = 5, value_names = ["T1", "T2", "T3", "T4", "T5"], allow_negative_numbers = true)]
        angles: Vec<f64>,
    },
    /// Joint angles (degrees) reaching a tool position, with optional grip angle.
    Ik {
        #[arg(num_args = 3..=4, value_names = ["X", "Y", "Z", "GRIP"], allow_negative_numbers = true)]
        target: Vec<f64>,
    },
    /// FK -> IK -> FK over random in-limit poses.
    Roundtrip {
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sampled workspace records as CSV.
    Atlas {
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the slave node on the configured command and telemetry ports.
    Slave,
    /// Run the master node.
    Master {
        #[arg(long, value_enum, default_value_t = Mode::Serial)]
        mode: Mode,
        /// Scenario file for `--mode script`.
        #[arg(long, required_if_eq("mode", "script"))]
        script: Option<PathBuf>,
        /// Drive an in-process slave instead of connecting over TCP, then
        /// print its final telemetry line.
        #[arg(long)]
        loopback: bool,
    },
    /// Serve the slave's channels to WebSocket clients.
    Bridge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Serial,
    Analog,
    Script,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Domain(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io(_) => CliError::Io(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<TransportError> for CliError {
    fn from(e: TransportError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<BridgeError> for CliError {
    fn from(e: BridgeError) -> Self {
        CliError::Io(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Fk { angles } => {
            let deg: [f64; 5] = angles.try_into().expect("clap enforces five values");
            let p = fk_position(&JointAngles::from_degrees(deg), &config.links);
            writeln!(out, "{} {} {}", fixed3(p.x), fixed3(p.y), fixed3(p.z))?;
        }
        Command::Ik { target } => {
            let grip = target.get(3).copied().unwrap_or(0.0);
            let p = ToolPosition::new(target[0], target[1], target[2]);
            let sol = ik_solve(&p, Angle::from_degrees(grip), &config.links)
                .map_err(|e| CliError::Domain(e.name().to_string()))?;
            let deg = sol.angles.degrees().map(fixed3);
            writeln!(out, "{}", deg.join(" "))?;
        }
        Command::Roundtrip { n, seed } => {
            if n == 0 {
                return Err(CliError::Usage("roundtrip needs n > 0".into()));
            }
            let angles = random_in_limit_angles(n, seed, &config.limits);
            let s = roundtrip_sweep(&angles, &config.links, DEFAULT_ROUNDTRIP_TOL);
            let maxerr = if s.max_error == 0.0 {
                "0".to_string()
            } else {
                format!("{:.3e}", s.max_error)
            };
            writeln!(
                out,
                "pass={} skip={} fail={} maxerr={maxerr} skip_fraction={:.4}",
                s.pass,
                s.skip,
                s.fail,
                s.skip_fraction()
            )?;
            if s.fail > 0 {
                return Err(CliError::Domain(format!("{} round trips failed", s.fail)));
            }
        }
        Command::Atlas { n, seed, out: path } => {
            if n == 0 {
                return Err(CliError::Usage("atlas needs n > 0".into()));
            }
            let samples = sample_workspace(&config.links, &config.limits, &config.scene, n, seed);
            let sink: Box<dyn Write> = match &path {
                Some(p) => Box::new(File::create(p)?),
                None => Box::new(out),
            };
            let mut w = BufWriter::new(sink);
            writeln!(w, "theta1_deg,theta2_deg,theta3_deg,theta4_deg,theta5_deg,x_mm,y_mm,z_mm,valid")?;
            for s in &samples {
                let d = s.angles.degrees();
                writeln!(
                    w,
                    "{:.9},{:.9},{:.9},{:.9},{:.9},{:.6},{:.6},{:.6},{}",
                    d[0], d[1], d[2], d[3], d[4], s.position.x, s.position.y, s.position.z, s.valid
                )?;
            }
            w.flush()?;
        }
        Command::Slave => {
            let mut server = SlaveServer::bind(&config)?;
            let (cmd, tel) = server.local_addrs()?;
            eprintln!("slave listening: commands on {cmd}, telemetry on {tel}");
            server.run(&AtomicBool::new(false))?;
        }
        Command::Master { mode, script, loopback } => {
            let (input_mode, reader): (InputMode, Box<dyn BufRead>) = match mode {
                Mode::Serial => (InputMode::Serial, Box::new(io::stdin().lock())),
                Mode::Analog => (InputMode::Analog, Box::new(io::stdin().lock())),
                Mode::Script => {
                    let path = script.expect("clap requires --script in script mode");
                    (InputMode::Serial, Box::new(BufReader::new(File::open(path)?)))
                }
            };
            if loopback {
                run_master_loopback(input_mode, reader, &config, &mut out)?;
            } else {
                let mut reader = reader;
                let addr = config.command_addr();
                let mut link = TcpLineTransport::connect(&addr)
                    .map_err(|e| CliError::Io(format!("cannot reach slave at {addr}: {e}")))?;
                let mut state = MasterState::new(&config);
                run_master_lines(input_mode, &mut reader, &mut state, &mut link, &mut out)?;
            }
        }
        Command::Bridge => {
            let bridge = Bridge::from_config(&config)?;
            eprintln!("bridge listening on {}", bridge.local_addr()?);
            bridge.run(&AtomicBool::new(false))?;
        }
    }
    Ok(())
}

/// Three decimals, never `-0.000`.
fn fixed3(v: f64) -> String {
    let text = format!("{v:.3}");
    match text.strip_prefix('-') {
        Some(rest) if rest.bytes().all(|b| b == b'0' || b == b'.') => rest.to_string(),
        _ => text,
    }
}

fn run_master_loopback(
    mode: InputMode,
    reader: Box<dyn BufRead>,
    config: &Config,
    out: &mut impl Write,
) -> Result<(), CliError> {
    let mut sim = LoopbackSim::new(config);
    for line in reader.lines() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let message = match mode.parse(trimmed) {
            Ok(input) => sim.apply(&input).message,
            Err(e) => e.to_string(),
        };
        writeln!(out, "{message}")?;
    }
    let last = sim.trace().last().expect("trace starts with the initial record");
    write!(out, "{}", last.to_line())?;
    Ok(())
}
