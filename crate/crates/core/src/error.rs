use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("operator is not unitary (defect {defect:.3e})")]
    NonUnitary { defect: f64 },
    #[error("map is not a bijection: state {0} is hit more than once")]
    NotBijective(usize),
    #[error("unsupported shape: {0}")]
    UnsupportedShape(String),
    #[error("theta function vanishes at kappa={kappa}, xi={xi}")]
    SingularPoint { kappa: f64, xi: f64 },
    #[error("spinor frame is singular at the south pole")]
    PoleAtSouth,
    #[error("zero momentum has no beable direction")]
    ZeroMomentum,
    #[error("wave function does not vanish at zero radial momentum")]
    EdgeState,
    #[error("contour at energy {energy} leaves the search window")]
    WindowTooSmall { energy: i64 },
    #[error("recursion magnitudes left the representable range")]
    RecursionUnderflow,
    #[error("energy difference {delta} is too close to 2*pi")]
    ResonanceSingularity { delta: f64 },
    #[error("integer overflow during exact evolution")]
    Overflow,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
