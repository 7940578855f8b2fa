use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid tree: {0}")]
    Tree(String),

    #[error("invalid exchange rates: {0}")]
    Rates(String),

    #[error("invalid stopping time: {0}")]
    Stopping(String),

    #[error("invalid payoffs: {0}")]
    Payoff(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("not a cone: {0}")]
    NotACone(String),

    #[error("pricing set empty at node {node}; the model likely admits arbitrage (run the no-arbitrage check)")]
    EmptyPricingSet { node: String },

    #[error("price unbounded along axis {axis}; the model likely admits arbitrage")]
    UnboundedPrice { axis: usize },

    #[error("initial endowment outside the superhedging set: violates halfspace {halfspace}")]
    InitialOutsideZ0 { halfspace: String },

    #[error("portfolio not deferred-solvent at node {node}: violates halfspace {halfspace}")]
    NotDeferredSolvent { node: String, halfspace: String },

    #[error("liquidation LP infeasible at node {node}")]
    LiquidationInfeasible { node: String },

    #[error("internal inconsistency: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
