use bifcurrents::algebra::AlgebraError;
use bifcurrents::bifurcation::BifurcationError;
use bifcurrents::families::FamilyError;
use bifcurrents::greenfn::GreenError;
use bifcurrents::lyapunov::LyapunovError;
use bifcurrents::maps::MapError;
use bifcurrents::sampling::SamplingError;

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or input files: exit 2.
    Validation { key: String, message: String },
    /// A computation that could not be completed: exit 3.
    Numeric { stage: String, message: String },
    /// Output could not be written: exit 1.
    Io { path: String, message: String },
}

impl CliError {
    pub fn validation(key: &str, message: impl Into<String>) -> CliError {
        CliError::Validation { key: key.to_string(), message: message.into() }
    }

    pub fn numeric(stage: &str, message: impl Into<String>) -> CliError {
        CliError::Numeric { stage: stage.to_string(), message: message.into() }
    }

    pub fn io(path: impl std::fmt::Display, e: impl std::fmt::Display) -> CliError {
        CliError::Io { path: path.to_string(), message: e.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation { .. } => 2,
            CliError::Numeric { .. } => 3,
            CliError::Io { .. } => 1,
        }
    }

    /// `ERROR kind=… key=… message="…"`.
    pub fn line(&self) -> String {
        match self {
            CliError::Validation { key, message } => format!("ERROR kind=validation key={key} message={message:?}"),
            CliError::Numeric { stage, message } => format!("ERROR kind=numeric stage={stage} message={message:?}"),
            CliError::Io { path, message } => format!("ERROR kind=io path={path:?} message={message:?}"),
        }
    }

    /// Classifies a library error raised while handling `key`.
    pub fn from_map(key: &str, e: MapError) -> CliError {
        match e {
            MapError::Parse { .. }
            | MapError::DegreeMismatch(..)
            | MapError::DegreeTooLow(_)
            | MapError::NotHomogeneous(_)
            | MapError::Degenerate { .. }
            | MapError::SingularMatrix
            | MapError::DegreeOverflow { .. }
            | MapError::Algebra(AlgebraError::ZeroForm | AlgebraError::ZeroPolynomial) => {
                CliError::validation(key, e.to_string())
            }
            _ => CliError::numeric(key, e.to_string()),
        }
    }

    pub fn from_family(key: &str, e: FamilyError) -> CliError {
        match e {
            FamilyError::Map(m) => CliError::from_map(key, m),
            FamilyError::DegenerateParameter { .. } => CliError::numeric(key, e.to_string()),
            _ => CliError::validation(key, e.to_string()),
        }
    }

    pub fn from_green(key: &str, e: GreenError) -> CliError {
        match e {
            GreenError::DegenerateNearZero { .. } => CliError::numeric(key, e.to_string()),
            _ => CliError::validation(key, e.to_string()),
        }
    }

    pub fn from_lyapunov(key: &str, e: LyapunovError) -> CliError {
        match e {
            LyapunovError::Green(g) => CliError::from_green(key, g),
            LyapunovError::Map(m) => CliError::from_map(key, m),
            LyapunovError::Sampling(SamplingError::Map(m)) => CliError::from_map(key, m),
            _ => CliError::numeric(key, e.to_string()),
        }
    }

    pub fn from_bifurcation(key: &str, e: BifurcationError) -> CliError {
        CliError::validation(key, e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_and_exit_codes() {
        let e = CliError::from_green("point", GreenError::DegenerateNearZero { norm: 1e-310 });
        assert_eq!(e.exit_code(), 3);
        assert!(e.line().starts_with("ERROR kind=numeric stage=point message="));
        let e = CliError::from_lyapunov("map", LyapunovError::Sampling(SamplingError::ExceptionalOrbit(5)));
        assert_eq!(e.exit_code(), 3);
        let e = CliError::from_green("lift", GreenError::ZeroVector);
        assert_eq!(e.exit_code(), 2);
        assert_eq!(e.line(), "ERROR kind=validation key=lift message=\"G_F is undefined at the origin\"");
        let e = CliError::from_map("map", MapError::DegreeTooLow(1));
        assert_eq!(e.exit_code(), 2);
        assert_eq!(CliError::io("out.csv", "denied").exit_code(), 1);
    }
}
