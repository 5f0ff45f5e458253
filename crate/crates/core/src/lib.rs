pub mod exactnum;
pub mod qseries;
pub mod plumbing;
pub mod spinc;
pub mod zhat;
pub mod knotinv;
pub mod ajrec;
