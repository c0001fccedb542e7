use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("bit-width {0} outside 1..={max}", max = crate::boolean::MAX_BITS)]
    BitWidth(usize),

    #[error("table has {got} entries, expected {expected}")]
    TableLength { got: usize, expected: usize },

    #[error("entry {value} at index {index} is not a ±1 label")]
    NotBoolean { index: usize, value: i64 },

    #[error("{name} = {value} out of range ({expected})")]
    Param {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("invalid tree: {0}")]
    Tree(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Returns `Err(Error::Param)` unless `ok` holds.
pub(crate) fn ensure(ok: bool, name: &'static str, value: f64, expected: &'static str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Param {
            name,
            value,
            expected,
        })
    }
}
