pub mod cat;
pub mod check;
pub mod encode;
pub mod events;
pub mod gen;
pub mod oracle;
pub mod prog;
pub mod rel;
pub mod solve;
pub mod witness;
