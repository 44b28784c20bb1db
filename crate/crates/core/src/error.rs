use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty denominator region")]
    EmptyDenominatorRegion,
    #[error("singular integrand at origin")]
    SingularAtOrigin,
    #[error("invalid dilatation: K = {value} < 1 at {re}+{im}i")]
    InvalidDilatation { value: f64, re: f64, im: f64 },
    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("degenerate lattice: generators {0} and {1} are linearly dependent")]
    DegenerateLattice(String, String),
    #[error("invalid truncation order {0} (must be at least 8)")]
    InvalidTruncation(usize),
    #[error("invalid pole threshold {0} (must be positive)")]
    InvalidPoleThreshold(f64),

    #[error("invalid model parameter: {0}")]
    InvalidModel(String),
    #[error("outside interpolation strip: Im z = {im} not in [0, {height}]")]
    OutsideInterpolationStrip { im: f64, height: f64 },
    #[error("orientation violation: Jacobian {0} <= 0")]
    OrientationViolation(f64),
    #[error("degenerate pole at {re}+{im}i: inner derivative vanishes")]
    DegeneratePole { re: f64, im: f64 },
    #[error("inner argument at {re}+{im}i exceeds the double-precision reduction range")]
    PrecisionLoss { re: f64, im: f64 },

    #[error("window too small: {0} usable radii (need at least 5)")]
    WindowTooSmall(usize),
    #[error("invalid radius grid: {0}")]
    InvalidRadii(String),

    #[error("lambda must lie in (0,1), got {0}")]
    InvalidLambda(f64),
    #[error("chain leaves B(R): |a| = {modulus} < R = {radius}")]
    ChainLeavesEscapeRegion { modulus: f64, radius: f64 },
    #[error("empty branch chain")]
    EmptyChain,

    #[error("diameters not contracting: d_{level} = {value}")]
    DiametersNotContracting { level: usize, value: f64 },
    #[error("invalid cover spec: {0}")]
    InvalidCoverSpec(String),
    #[error("contraction violated: ratio {ratio} must be < 1")]
    ContractionViolated { ratio: f64 },
    #[error("dimension {0} outside [0,2)")]
    InvalidDimension(f64),
    #[error("order must be positive, got {0}")]
    InvalidOrder(f64),
    #[error("insufficient scale span: {0}")]
    InsufficientScales(String),
    #[error("too few points for box counting: {0} (need at least 1000)")]
    TooFewPoints(usize),

    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
