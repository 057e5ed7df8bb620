//! Tactic environments: the bundled kernel in-process, or any child process
//! speaking the wire protocol in [`protocol`].

pub mod external;
pub mod protocol;

use thiserror::Error;

use crate::kernel::{ApplyResult, KernelSession, ProofState};

pub use external::{ExternalEnvironment, ExternalFactory};

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("environment transport failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("environment closed the connection")]
    Closed,
    #[error("malformed peer message: {0}")]
    Malformed(String),
}

/// One proof session. Implementations track their own state ids.
pub trait Environment: Send {
    fn init(&mut self, statement: &str) -> Result<ApplyResult, EnvError>;

    fn apply(&mut self, state: &ProofState, tactic: &str) -> Result<ApplyResult, EnvError>;
}

/// Opens fresh sessions; each search pass gets its own.
pub trait EnvironmentFactory: Sync {
    fn open(&self) -> Result<Box<dyn Environment>, EnvError>;
}

#[derive(Debug, Default)]
pub struct KernelEnvironment {
    session: KernelSession,
}

impl KernelEnvironment {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Environment for KernelEnvironment {
    fn init(&mut self, statement: &str) -> Result<ApplyResult, EnvError> {
        Ok(self.session.init_text(statement))
    }

    fn apply(&mut self, state: &ProofState, tactic: &str) -> Result<ApplyResult, EnvError> {
        Ok(self.session.apply_tactic(state.id, tactic))
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct KernelFactory;

impl EnvironmentFactory for KernelFactory {
    fn open(&self) -> Result<Box<dyn Environment>, EnvError> {
        Ok(Box::new(KernelEnvironment::new()))
    }
}
