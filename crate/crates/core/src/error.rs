use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("symbol `{symbol}` expects {expected} argument(s), found {found}")]
    ArityMismatch {
        symbol: String,
        expected: usize,
        found: usize,
    },

    #[error("symbol `{0}` is declared more than once")]
    DuplicateSymbol(String),

    #[error("free variable `{0}` in a sentence")]
    FreeVariable(String),

    #[error("unbound variable `{0}`")]
    UnboundVariable(String),

    #[error("symbol `{0}` is not part of the signature")]
    UnknownSymbol(String),

    #[error("`{0}` is reserved for injected domain constants")]
    ReservedName(String),

    #[error("`{0}` is not a valid identifier")]
    InvalidIdentifier(String),

    #[error("invalid signature morphism: {0}")]
    Morphism(String),

    #[error("invalid structure: {0}")]
    Structure(String),

    #[error("enumeration would produce {count} structures, limit is {limit}")]
    EnumerationLimit { count: String, limit: u64 },

    #[error("propositional variable {0} is outside the signature")]
    VariableOutOfScope(String),

    #[error("no propositional variable for atom `{0}`")]
    MissingVariable(String),

    #[error("formula is not normalized: {0}")]
    Unnormalized(String),

    #[error("formula is not ground and quantifier-free: {0}")]
    NotGround(String),

    #[error("translation too large: {0}")]
    TranslationTooLarge(String),

    #[error("valuation violates background axiom ({kind}) at {label}")]
    BackgroundViolation { kind: String, label: String },

    #[error("rule {rule} does not apply: {reason}")]
    RuleMismatch { rule: String, reason: String },

    #[error("tableau precondition violated: {0}")]
    TableauPrecondition(String),

    #[error("tableau is incomplete (resource limits were hit)")]
    IncompleteTableau,

    #[error("leaf is inconsistent: {0}")]
    InconsistentLeaf(String),

    #[error("{vars} variables exceed the cap of {cap}")]
    VariableCap { vars: usize, cap: usize },

    #[error("invalid limit: {0}")]
    InvalidLimit(String),

    #[error("model file: {0}")]
    ModelFormat(String),
}
