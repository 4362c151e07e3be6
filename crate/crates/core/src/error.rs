use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown symbol `{symbol}` at byte {pos}")]
    UnknownSymbol { pos: usize, symbol: String },
    #[error("symbol `{symbol}` expects {expected} argument(s), found {found}")]
    Arity {
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error("duplicate symbol `{0}` in signature")]
    DuplicateSymbol(String),
    #[error("duplicate rule name `{0}`")]
    DuplicateRule(String),
    #[error("unknown rule `{0}`")]
    UnknownRule(String),
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("carrier size {size} exceeds the enumeration guard of {limit}")]
    Guard { size: usize, limit: usize },
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    #[error("symbol `{0}` is not a commutative-ring symbol")]
    ForeignSymbol(String),
    #[error("terms are not equal in every commutative ring: {0} vs {1}")]
    NotCrEqual(String, String),
    #[error("term `{0}` is not closed")]
    OpenTerm(String),
    #[error("not a solution: substituting gives the nonzero polynomial {0}")]
    NotASolution(String),
    #[error("polynomial has a root modulo {modulus}: {root:?}")]
    HasRoot { modulus: u64, root: Vec<u64> },
    #[error("chain step {step}: {msg}")]
    BadChainStep { step: usize, msg: String },
    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// Usage-class errors map to CLI exit status 2.
    pub fn is_guard(&self) -> bool {
        matches!(self, Error::Guard { .. } | Error::ResourceLimit(_))
    }
}
