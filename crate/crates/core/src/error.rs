use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or inconsistent input configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Energy (or other argument) outside the domain an operation supports.
    #[error("domain error: {0}")]
    Domain(String),

    /// A two-body propagator was evaluated on top of its pole.
    #[error("two-body propagator evaluated {distance_mev:e} MeV from its pole at {pole_mev} MeV")]
    PoleProximity { pole_mev: f64, distance_mev: f64 },

    /// The scattering length is infinite; no finite number represents it.
    #[error("unitary limit: scattering length diverges for a pole at threshold")]
    UnitaryLimit,

    #[error("no Efimov regime: transcendental equation has no positive root for mass ratio {mass_ratio}")]
    NoEfimovRegime { mass_ratio: f64 },

    #[error("flat data: cross section is constant, no resonance to fit")]
    FlatData,

    #[error("fits not converged: {0:?}")]
    NotConverged(Vec<usize>),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("at E = {energy_kev} keV: {source}")]
    AtEnergy {
        energy_kev: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by user input rather than by the numerics.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_) | Error::Domain(_) | Error::Json(_) | Error::Csv(_) | Error::FlatData => {
                true
            }
            Error::AtEnergy { source, .. } => source.is_config(),
            _ => false,
        }
    }
}
