pub mod relation;
pub mod guess;
pub mod sugar;
pub mod translate;
pub mod twosat;
pub mod polyfrag;
pub mod consql;
pub mod search;
pub mod text;
pub mod io;
pub mod corpus;
pub mod cli;
