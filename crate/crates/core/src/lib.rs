pub mod baseline;
pub mod corpus;
pub mod decoder;
pub mod metrics;
pub mod oracle;
pub mod scorer;
pub mod transition;
pub mod tree;
