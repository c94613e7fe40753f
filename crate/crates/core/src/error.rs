use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A group element lies too close to the cut locus of the principal logarithm.
    #[error("logarithm branch error: rotation angle {angle:.6} exceeds the principal chart")]
    Branch { angle: f64 },

    #[error("curvature too rough at site {site}, plaquette ({mu},{nu}): angle {angle:.6}")]
    CurvatureTooRough {
        site: usize,
        mu: usize,
        nu: usize,
        angle: f64,
    },

    #[error("lattice too small: derivative order {order} needs every extent >= {needed}, smallest is {smallest}")]
    LatticeTooSmall {
        order: usize,
        needed: usize,
        smallest: usize,
    },

    #[error("state is flat: no singularity to extract")]
    NoSingularity,

    #[error("step stalled: no energy decrease after {halvings} halvings")]
    Stalled { halvings: u32 },

    #[error("blow-up: {0}")]
    BlowUp(String),

    #[error("snapshot format error at byte {offset}: {msg}")]
    Format { offset: usize, msg: String },

    #[error("corrupt snapshot: {0}")]
    CorruptSnapshot(String),

    #[error("config error in `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
