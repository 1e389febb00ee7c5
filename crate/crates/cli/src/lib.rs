//! The `pathkernel` command line.
//!
//! Exit codes: 0 on success, 1 on numeric failure (a JSON error record is
//! written to the output), 2 on usage errors (diagnostic on stderr).

mod args;
mod commands;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::Path;

use clap::{ArgMatches, Command as ClapCommand, CommandFactory, FromArgMatches};

pub use args::Cli;

/// Environment variable that overrides `--workers`.
pub const WORKERS_ENV: &str = "PATHKERNEL_WORKERS";

const GLOBAL_VALUE_FLAGS: [&str; 4] = ["--config", "--workers", "--seed", "--output"];
const NESTED: [&str; 2] = ["verify", "fk"];
const HEADER_EXCLUDED: [&str; 5] = ["help", "version", "workers", "output", "config"];

/// Outcome of a failed run.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numeric(pathkernel::Error),
}

impl From<pathkernel::Error> for Failure {
    fn from(e: pathkernel::Error) -> Self {
        use pathkernel::Error as E;
        match e {
            E::InvalidParameter { name, reason } => Failure::Usage(format!("invalid value for --{name}: {reason}")),
            E::DimensionMismatch { .. } | E::UnsupportedModel(_) => Failure::Usage(e.to_string()),
            other => Failure::Numeric(other),
        }
    }
}

fn configure(cmd: ClapCommand) -> ClapCommand {
    cmd.args_override_self(true)
        .allow_negative_numbers(true)
        .mut_subcommands(configure)
}

fn command() -> ClapCommand {
    configure(Cli::command())
}

/// Runs the CLI on `argv` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match merge_config(argv) {
        Ok(a) => a,
        Err(msg) => return usage(&msg),
    };
    let matches = match command().try_get_matches_from(&argv) {
        Ok(m) => m,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let mut cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return 2;
        }
    };
    if let Some(w) = std::env::var_os(WORKERS_ENV) {
        match w.to_str().map(args::positive_count) {
            Some(Ok(n)) => cli.workers = n,
            _ => return usage(&format!("invalid value for {WORKERS_ENV}: {w:?}")),
        }
    }

    let header = header_line(&matches);
    let output = cli.output.clone();
    let seed = cli.seed;
    let body = match commands::execute(&cli) {
        Ok(body) => body,
        Err(Failure::Usage(msg)) => return usage(&msg),
        Err(Failure::Numeric(e)) => {
            let record = pathkernel::io::JsonObject::new()
                .str("error", e.kind())
                .str("message", &e.to_string())
                .int("seed", seed)
                .render();
            eprintln!("error: {e}");
            return match emit(output.as_deref(), &header, &format!("{record}\n")) {
                Ok(()) => 1,
                Err(msg) => usage(&msg),
            };
        }
    };
    match emit(output.as_deref(), &header, &body) {
        Ok(()) => 0,
        Err(msg) => usage(&msg),
    }
}

fn usage(msg: &str) -> i32 {
    eprintln!("error: {msg}");
    2
}

fn emit(output: Option<&Path>, header: &str, body: &str) -> Result<(), String> {
    let text = format!("{header}\n{body}");
    match output {
        Some(p) => fs::write(p, text).map_err(|e| format!("cannot write --output {}: {e}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| format!("cannot write to stdout: {e}"))
        }
    }
}

/// `# pathkernel <version> <subcommand...> key=value ...` over every
/// effective option except the ones that cannot change the result.
fn header_line(matches: &ArgMatches) -> String {
    let mut cmd = command();
    cmd.build();
    let mut words = vec![format!("# pathkernel {}", env!("CARGO_PKG_VERSION"))];
    let (mut m, mut c) = (matches, &cmd);
    let mut settings = Vec::new();
    loop {
        for arg in c.get_arguments() {
            let id = arg.get_id().as_str();
            if HEADER_EXCLUDED.contains(&id) || settings.iter().any(|(k, _): &(String, String)| k == id) {
                continue;
            }
            if let Ok(Some(raw)) = m.try_get_raw(id) {
                let vals: Vec<String> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
                settings.push((id.to_string(), vals.join(",")));
            }
        }
        match m.subcommand() {
            Some((name, sub)) => {
                words.push(name.to_string());
                c = c.find_subcommand(name).expect("matched subcommand exists");
                m = sub;
            }
            None => break,
        }
    }
    settings.sort_by(|a, b| a.0.cmp(&b.0));
    words.extend(settings.into_iter().map(|(k, v)| format!("{}={v}", k.replace('_', "-"))));
    words.join(" ")
}

/// Inserts `--key=value` pairs from `--config FILE` right after the
/// subcommand, ahead of every flag given on the command line, so that with
/// later-occurrence-wins parsing the command line takes precedence.
fn merge_config(argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let strs: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut config_path = None;
    for (i, a) in strs.iter().enumerate() {
        if a == "--config" {
            config_path = strs.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            config_path = Some(p.to_string());
        }
    }
    let Some(path) = config_path else {
        return Ok(argv);
    };
    let text = fs::read_to_string(&path).map_err(|e| format!("cannot read --config {path}: {e}"))?;
    let mut injected = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("--config {path}: line {} is not `key = value`", n + 1))?;
        let key = k.trim().replace('_', "-");
        if key == "config" {
            return Err(format!("--config {path}: nested config files are not supported"));
        }
        injected.push(OsString::from(format!("--{key}={}", v.trim())));
    }

    // leading global flags move behind the injected ones
    let mut leading = Vec::new();
    let mut i = 1;
    let mut subcommands = Vec::new();
    while i < argv.len() {
        let s = &strs[i];
        if s.starts_with("--") {
            let takes_value = GLOBAL_VALUE_FLAGS.contains(&s.as_str());
            leading.push(argv[i].clone());
            if takes_value {
                if let Some(v) = argv.get(i + 1) {
                    leading.push(v.clone());
                }
                i += 1;
            }
            i += 1;
        } else {
            subcommands.push(argv[i].clone());
            i += 1;
            if subcommands.len() == 1 && NESTED.contains(&s.as_str()) {
                continue;
            }
            break;
        }
    }
    let mut out = vec![argv[0].clone()];
    out.extend(subcommands);
    out.extend(injected);
    out.extend(leading);
    out.extend(argv[i..].iter().cloned());
    Ok(out)
}
