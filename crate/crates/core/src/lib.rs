pub mod amalgam;
pub mod bttree;
pub mod cheese;
pub mod cli;
pub mod cocycle;
pub mod fingroup;
pub mod matrix;
pub mod measures;
pub mod padic;
pub mod quatchar;
pub mod snf;
pub mod unitcalc;
