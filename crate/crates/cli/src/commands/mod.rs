//! Subcommand implementations.

pub mod evaluate;
pub mod inspect;
pub mod mine;
pub mod pipeline;
pub mod sweep;
pub mod synth;

use carmine_core::MineError;

/// CLI-level errors carrying their process exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(MineError),
}

impl CliError {
    pub const INTERNAL_EXIT: i32 = 3;

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(MineError::Internal(_)) => Self::INTERNAL_EXIT,
            CliError::Core(_) => 2,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Core(err) => write!(f, "{err}"),
        }
    }
}

impl From<MineError> for CliError {
    fn from(err: MineError) -> Self {
        CliError::Core(err)
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Core(MineError::Io(err))
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Timestamp for output files.
///
/// Outputs are byte-reproducible by default, so this is None unless the
/// caller passed `--stamp` or set SOURCE_DATE_EPOCH (which wins, following
/// the reproducible-builds convention).
pub fn resolve_timestamp(stamp: bool) -> Option<String> {
    if let Ok(raw) = std::env::var("SOURCE_DATE_EPOCH") {
        match raw.trim().parse::<i64>() {
            Ok(secs) => {
                if let Some(dt) = chrono::DateTime::from_timestamp(secs, 0) {
                    return Some(dt.to_rfc3339());
                }
                log::warn!("SOURCE_DATE_EPOCH {raw:?} out of range, ignoring");
            }
            Err(_) => log::warn!("SOURCE_DATE_EPOCH {raw:?} is not an integer, ignoring"),
        }
    }
    stamp.then(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true))
}

/// Sizes the global rayon pool; 0 keeps the default.
pub fn configure_jobs(jobs: usize) {
    if jobs > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            log::debug!("rayon pool already initialized: {e}");
        }
    }
}
