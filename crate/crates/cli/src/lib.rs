//! The `learnmate` command line. Every command opens the data directory,
//! runs one workflow step and prints its outcome as text or canonical JSON.

mod render;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Duration, Utc};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use learnmate_core::adaptmate::{Decision, PlanChange};
use learnmate_core::canonical;
use learnmate_core::clock::{Clock, ManualClock, SystemClock};
use learnmate_core::domain::LearnerProfile;
use learnmate_core::persistence::session_key;
use learnmate_core::provider::{
    scripted_load, LiveProvider, PromptEnvelope, Provider, ProviderError, RawCompletion,
};
use learnmate_core::workflow::{ErrorClass, SessionScript, WorkflowError, WorkflowResult, Workspace, WorkspaceConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "learnmate", version, about = "Plan, study, quiz and adapt from the command line")]
pub struct Cli {
    /// Directory holding the event log.
    #[arg(long, global = true, env = "LEARNMATE_DATA_DIR", default_value = "learnmate-data")]
    pub data_dir: PathBuf,
    /// Replay agent replies from this script instead of calling a live model.
    #[arg(long, global = true, env = "LEARNMATE_SCRIPT")]
    pub script: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "text")]
    pub format: Format,
    /// Pin the clock to this instant (RFC 3339) for reproducible runs.
    #[arg(long, global = true)]
    pub now: Option<DateTime<Utc>>,
    /// Seconds the pinned clock advances on every reading.
    #[arg(long, global = true, default_value_t = 30)]
    pub tick_seconds: i64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load a course manifest and its transcripts.
    Ingest { manifest: PathBuf },
    /// Store a profile, ingest a course and generate a new plan.
    Plan { profile: PathBuf, manifest: PathBuf },
    /// Print a plan version.
    Show {
        plan_id: String,
        #[arg(long)]
        version: Option<u32>,
    },
    /// Write a plan version as iCalendar.
    ExportIcs {
        plan_id: String,
        #[arg(long)]
        version: Option<u32>,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay a whole session: start, questions, end, quiz, digest.
    Simulate {
        plan_id: String,
        session_id: String,
        /// JSON with `questions` (each with optional `expand` tiers) and `quiz_answers`.
        questions: PathBuf,
    },
    /// Print the version lineage of a plan with its decisions.
    History { plan_id: String },
    /// Print the quiz report and digest of a completed session.
    Report { plan_id: String, session_id: String },
    /// Generate an adaptation proposal for a plan.
    Adapt { plan_id: String },
    /// Accept, modify or reject a proposal.
    Decide {
        proposal_id: String,
        #[arg(value_enum)]
        decision: DecisionArg,
        /// For modify: 1-based indices of the proposed changes to keep.
        #[arg(long, value_delimiter = ',')]
        keep: Vec<usize>,
        /// For modify: a JSON file with the full list of changes.
        #[arg(long, conflicts_with = "keep")]
        changes: Option<PathBuf>,
    },
    /// Restore the sessions of the head's parent as a new version.
    Undo { plan_id: String },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, env = "LISTEN_ADDR", default_value = learnmate_api::DEFAULT_LISTEN_ADDR)]
        listen: std::net::SocketAddr,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DecisionArg {
    Accept,
    Modify,
    Reject,
}

/// Stands in when neither a script nor live credentials are configured, so
/// commands that never call an agent still work.
struct Unconfigured(String);

impl Provider for Unconfigured {
    fn name(&self) -> &str {
        "unconfigured"
    }

    fn send(&self, _: &PromptEnvelope) -> Result<RawCompletion, ProviderError> {
        Err(ProviderError::Unavailable(self.0.clone()))
    }
}

fn provider(script: Option<&Path>) -> WorkflowResult<Arc<dyn Provider>> {
    match script {
        Some(path) if !path.is_file() => Err(WorkflowError::bad_input(format!(
            "script file `{}` does not exist",
            path.display()
        ))),
        Some(path) => Ok(Arc::new(scripted_load(path)?)),
        None => Ok(match LiveProvider::from_env() {
            Ok(live) => Arc::new(live),
            Err(e) => Arc::new(Unconfigured(format!("no --script given and {e}"))),
        }),
    }
}

fn clock(cli: &Cli) -> Arc<dyn Clock> {
    match cli.now {
        Some(now) => Arc::new(ManualClock::with_tick(now, Duration::seconds(cli.tick_seconds))),
        None => Arc::new(SystemClock),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> WorkflowResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| WorkflowError::bad_input(format!("cannot read `{}`: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| WorkflowError::new(ErrorClass::BadInput, "ParseError", format!("`{}`: {e}", path.display())))
}

/// Where command output goes. Text and JSON renderings of one value.
struct Out<'a> {
    format: Format,
    stdout: &'a mut dyn Write,
}

impl Out<'_> {
    fn emit<T: Serialize>(&mut self, value: &T, text: impl FnOnce() -> String) -> std::io::Result<()> {
        match self.format {
            Format::Json => writeln!(self.stdout, "{}", canonical::to_string(value)),
            Format::Text => write!(self.stdout, "{}", text()),
        }
    }
}

/// Parses `args` and runs the command. Returns the process exit code.
pub fn run(args: Vec<OsString>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if e.use_stderr() {
                write!(stderr, "{}", e.render())
            } else {
                write!(stdout, "{}", e.render())
            };
            return code;
        }
    };
    let format = cli.format;
    match execute(cli, &mut Out { format, stdout }, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = match format {
                Format::Json => writeln!(
                    stderr,
                    "{}",
                    canonical::to_string(&json!({
                        "code": e.code,
                        "message": e.message,
                        "detail": e.detail,
                        "exit_code": e.exit_code(),
                    }))
                ),
                Format::Text => write!(stderr, "{}", render::error(&e)),
            };
            e.exit_code()
        }
    }
}

fn io_error(e: std::io::Error) -> WorkflowError {
    WorkflowError::new(ErrorClass::Storage, "Io", e.to_string())
}

fn execute(cli: Cli, out: &mut Out<'_>, stderr: &mut dyn Write) -> WorkflowResult<()> {
    let provider = provider(cli.script.as_deref())?;
    let clock = clock(&cli);
    let (ws, recovery) = Workspace::open(&cli.data_dir, provider, clock, WorkspaceConfig::default())?;
    if recovery.truncated_bytes > 0 {
        writeln!(stderr, "warning: dropped {} bytes of an incomplete record", recovery.truncated_bytes).map_err(io_error)?;
    }
    match cli.command {
        Command::Ingest { manifest } => {
            let summary = ws.ingest_path(&manifest)?;
            out.emit(&summary, || render::course(&summary))
        }
        Command::Plan { profile, manifest } => {
            let profile: LearnerProfile = read_json(&profile)?;
            let course = ws.ingest_path(&manifest)?;
            ws.put_profile(&profile)?;
            let plan = ws.create_plan(&profile.learner_id, &course.course_id)?;
            out.emit(&plan, || render::plan(&plan))
        }
        Command::Show { plan_id, version } => {
            let plan = ws.plan(&plan_id, version)?;
            out.emit(&plan, || render::plan(&plan))
        }
        Command::ExportIcs { plan_id, version, out: path } => {
            let bytes = ws.ics(&plan_id, version)?;
            match path {
                Some(path) => std::fs::write(&path, &bytes).map_err(io_error)?,
                None => out.stdout.write_all(&bytes).map_err(io_error)?,
            }
            Ok(())
        }
        Command::Simulate {
            plan_id,
            session_id,
            questions,
        } => {
            let script: SessionScript = read_json(&questions)?;
            let key = session_key(&plan_id, &session_id);
            let outcome = ws.simulate(&key, &script)?;
            let digest = ws.digest(&key)?;
            out.emit(&json!({ "simulation": outcome, "digest": digest }), || {
                render::simulation(&outcome, &digest)
            })
        }
        Command::History { plan_id } => {
            let history = ws.history(&plan_id)?;
            let decisions = ws.decisions(&plan_id)?;
            out.emit(&json!({ "history": history, "decisions": decisions }), || {
                render::history(&history, &decisions)
            })
        }
        Command::Report { plan_id, session_id } => {
            let key = session_key(&plan_id, &session_id);
            let report = ws.quiz_report(&key)?;
            let digest = ws.digest(&key)?;
            out.emit(&json!({ "report": report, "digest": digest }), || render::report(&report, &digest))
        }
        Command::Adapt { plan_id } => {
            let proposal = ws.propose(&plan_id)?;
            out.emit(&proposal, || render::proposal(&proposal))
        }
        Command::Decide {
            proposal_id,
            decision,
            keep,
            changes,
        } => {
            let decision = match decision {
                DecisionArg::Accept => Decision::Accept,
                DecisionArg::Reject => Decision::Reject,
                DecisionArg::Modify => Decision::Modify {
                    changes: modified_changes(&ws, &proposal_id, &keep, changes.as_deref())?,
                },
            };
            let outcome = ws.decide(&proposal_id, decision)?;
            out.emit(&outcome, || render::decision(&outcome))
        }
        Command::Undo { plan_id } => {
            let plan = ws.undo(&plan_id)?;
            out.emit(&plan, || render::plan(&plan))
        }
        Command::Serve { listen } => {
            let _ = tracing_subscriber::fmt().with_writer(std::io::stderr).try_init();
            let runtime = tokio::runtime::Runtime::new().map_err(io_error)?;
            runtime.block_on(learnmate_api::serve(listen, Arc::new(ws)))
        }
    }
    .map_err(io_error)
}

fn modified_changes(
    ws: &Workspace,
    proposal_id: &str,
    keep: &[usize],
    file: Option<&Path>,
) -> WorkflowResult<Vec<PlanChange>> {
    if let Some(path) = file {
        return read_json(path);
    }
    if keep.is_empty() {
        return Err(WorkflowError::bad_input("modify needs --keep or --changes"));
    }
    let proposal = ws.proposal(proposal_id)?;
    keep.iter()
        .map(|&i| {
            i.checked_sub(1)
                .and_then(|i| proposal.changes.get(i).cloned())
                .ok_or_else(|| WorkflowError::bad_input(format!("no change #{i} in proposal `{proposal_id}`")))
        })
        .collect()
}
