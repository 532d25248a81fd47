pub mod ast;
pub mod lexer;
pub mod parser;
pub mod pretty;

pub use parser::{parse_expression, parse_file, parse_type};
