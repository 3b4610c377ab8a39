//! LTI kernels: polynomials, transfer functions, realizations, spectra and
//! shifted-axis frequency responses.

pub mod freq;
pub mod linalg;
pub mod poly;
pub mod ss;
pub mod tf;

pub use freq::{
    count_poles_right_of, freq_response, log_space, shifted_min_real, shifted_sup_mag, Extremum,
    FreqGrid, FrequencyResponse,
};
pub use linalg::{
    controllability_rank, eig_general, eig_symmetric, inertia, max_eig_sym, spectral_abscissa,
    Inertia, INERTIA_ZERO_TOL,
};
pub use poly::Polynomial;
pub use ss::{characteristic_polynomial, StateSpace};
pub use tf::TransferFunction;

pub type C64 = nalgebra::Complex<f64>;
