use thiserror::Error;

/// Exit status for configuration and parameter errors.
pub const EXIT_VALIDATION: u8 = 2;
/// Exit status for dynamical breakdown: divergence or a singular `U(t)`.
pub const EXIT_INSTABILITY: u8 = 3;
/// Exit status for failed internal accuracy checks.
pub const EXIT_NUMERICAL_QUALITY: u8 = 4;
/// Exit status for everything else (I/O, internal inconsistencies).
pub const EXIT_OTHER: u8 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] gqbm_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_VALIDATION,
            CliError::Core(e) if e.is_validation() => EXIT_VALIDATION,
            CliError::Core(e) if e.is_instability() => EXIT_INSTABILITY,
            CliError::Core(gqbm_core::Error::NumericalQuality(_)) => EXIT_NUMERICAL_QUALITY,
            _ => EXIT_OTHER,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_distinct_per_class() {
        assert_eq!(CliError::Config("x".into()).exit_code(), EXIT_VALIDATION);
        assert_eq!(
            CliError::Core(gqbm_core::Error::InvalidParameter { name: "gamma0", reason: "negative".into() })
                .exit_code(),
            EXIT_VALIDATION
        );
        assert_eq!(CliError::Core(gqbm_core::Error::Instability("x".into())).exit_code(), EXIT_INSTABILITY);
        assert_eq!(
            CliError::Core(gqbm_core::Error::Singular { time: 1.0, condition: 1e13 }).exit_code(),
            EXIT_INSTABILITY
        );
        assert_eq!(CliError::Core(gqbm_core::Error::NumericalQuality("x".into())).exit_code(), EXIT_NUMERICAL_QUALITY);
        let io = std::io::Error::new(std::io::ErrorKind::PermissionDenied, "x");
        assert_eq!(CliError::Io(io).exit_code(), EXIT_OTHER);
    }
}
