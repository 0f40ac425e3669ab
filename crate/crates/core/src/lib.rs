//! Heat transfer simulation and convective-parameter calibration for
//! fused-filament-fabrication printed parts.

pub mod calibration;
pub mod io;
pub mod mesostructure;
pub mod thermal;
