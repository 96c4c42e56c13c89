use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("jump-rate parameter v must be positive and finite, got {0}")]
    Rate(f64),
    #[error("v must lie in (0, 1) for the geometric environment, got {0}")]
    GeometricRate(f64),
    #[error("array size n must be at least 1")]
    Size,
    #[error("half-window L must be positive and finite, got {0}")]
    Window(f64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("{inc} points of increase but {dec} points of decrease")]
    Unbalanced { inc: usize, dec: usize },
    #[error("{0} positions are not strictly increasing")]
    Unsorted(&'static str),
    #[error("ballot property fails at pair {0}")]
    Ballot(usize),
    #[error("non-finite position")]
    NonFinite,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("nucleation at {position} lies outside the window [-{half_width}, {half_width}]")]
    OutsideWindow { position: f64, half_width: f64 },
    #[error("nucleations of step {0} are not sorted")]
    Unsorted(usize),
    #[error("noise stream has {available} steps, step {requested} requested")]
    MissingStep { requested: usize, available: usize },
    #[error("explicit variate supply has no entry for clock index {0}")]
    Exhausted(i64),
    #[error("variates must be positive, got {0}")]
    NonPositive(f64),
}
