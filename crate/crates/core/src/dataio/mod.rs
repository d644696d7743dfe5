//! External data: FTIR nitrogen content, height/PL profile correlation and
//! peak-thickness extraction.

pub mod ftir;
pub mod profiles;
pub mod table;

pub use ftir::{
    nitrogen_concentration, normalize_two_phonon, read_ftir_csv, FtirSpectrum, FtirWindows,
    NitrogenContent, NITROGEN_PER_MU, TWO_PHONON_TARGET,
};
pub use profiles::{
    correlate_profiles, extract_peak_thickness, read_profile_csv, CorrelatedProfile, CorrelatedRow,
    PeakEstimate, ProfilePoint, Sign,
};
pub use table::{read_table, Table};
