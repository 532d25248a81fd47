pub mod backend_verilog;
pub mod bits;
pub mod diagnostics;
pub mod driver;
pub mod frontend;
pub mod interp;
pub mod linear;
pub mod mir;
pub mod pipeline;
pub mod resolver;
pub mod state;
pub mod typecheck;
