pub mod numkern;
pub mod qseries;
pub mod specfun;
pub mod quadrature;
pub mod closedform;
pub mod registry;
pub mod cli;
