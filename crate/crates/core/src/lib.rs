//! Static checks for decidable approximations of undecidable MISRA C:2012
//! guidelines, over the MiniC subset of C99.

pub mod coverage;
pub mod dialect;
pub mod driver;
pub mod effectless;
pub mod flow;
pub mod frontend;
pub mod guidelines;
pub mod oracle;
pub mod sema;
