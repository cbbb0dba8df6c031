use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("points {0} and {1} are not nearest neighbours")]
    NotAdjacent(String, String),
    #[error("lattice dimension must be at least 2")]
    Dimension,
    #[error("box side lengths and height must be positive")]
    EmptyBox,
    #[error("hyper-rectangle must have a_i < b_i on every axis")]
    EmptyRect,
    #[error("offset has {got} coordinates, expected {expected}")]
    OffsetLength { expected: usize, got: usize },
    #[error("edge {0} is not contained in the enclosing box")]
    NotContained(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CapacityError {
    #[error("resolution must be a positive power of two, got {0}")]
    Resolution(u64),
    #[error("discretization level {level} must be a power of two dividing the resolution {resolution}")]
    Level { level: u64, resolution: u64 },
    #[error("invalid distribution: {0}")]
    Distribution(String),
    #[error("field has {got} capacities but the box has {expected} edges")]
    Shape { expected: usize, got: usize },
    #[error("sampled capacity {0} does not fit the integer unit range")]
    Overflow(f64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("sum of capacities overflows the flow accumulator")]
    Overflow,
    #[error("no finite cut exists: an unbounded path joins the terminals")]
    Unbounded,
    #[error("capacity field does not match the box: {0}")]
    Shape(String),
    #[error("field is not 0/1 valued: edge {edge} has {units} units")]
    NotZeroOne { edge: usize, units: u64 },
    #[error("stream is not a valid stream: {0}")]
    InvalidStream(String),
    #[error("edge {edge} carries {units} units, not a multiple of {step}")]
    NotDiscrete { edge: usize, units: u64, step: u64 },
    #[error(transparent)]
    Capacity(#[from] CapacityError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CutError {
    #[error("pinned cut is infeasible")]
    Infeasible,
    #[error("bases are not disjoint rectangles sharing a full side")]
    Incompatible,
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Capacity(#[from] CapacityError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JunctionError {
    #[error("stream {which} carries {flow} units, below the required {required}")]
    FlowShortfall { which: u8, flow: i64, required: u64 },
    #[error("truncated projections differ at base point {point:?}: {lower} vs {upper}")]
    ProjectionMismatch { point: Vec<i64>, lower: u64, upper: u64 },
    #[error("boxes are not stacked cylinders over a common base")]
    Geometry,
    #[error("streams use different levels or resolutions")]
    LevelMismatch,
    #[error("layer {0} is outside the stream's box")]
    Layer(i64),
    #[error("discrete stream normalization violated: {0}")]
    NotNormalized(String),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error("enumeration needs {needed} assignments, over the budget of {budget}")]
    Budget { needed: String, budget: u64 },
    #[error("exact enumeration requires a finite-support law")]
    NotFinite,
    #[error("estimates do not share parameters: {0}")]
    Mismatch(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Cut(#[from] CutError),
    #[error(transparent)]
    Junction(#[from] JunctionError),
    #[error(transparent)]
    Capacity(#[from] CapacityError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}
