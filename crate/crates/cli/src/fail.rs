use std::fmt;

use zerogauss::Error;

/// Exit status: hypothesis failures are reported through normal output, so
/// only usage and evaluation errors travel through here.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

pub const HYPOTHESIS: u8 = 1;
pub const USAGE: u8 = 2;
pub const EVALUATION: u8 = 3;

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: USAGE,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Syntax { .. }
            | Error::UnknownIdentifier { .. }
            | Error::VariableOutOfRange { .. }
            | Error::ZeroDimension
            | Error::DimensionMismatch { .. }
            | Error::DegreeTooHigh(_)
            | Error::ZeroDirection
            | Error::InsufficientSamples { .. }
            | Error::NonUniformSpacing { .. }
            | Error::MalformedGrid(_)
            | Error::NotAnalytic
            | Error::SphereOutsideDomain { .. }
            | Error::InvalidArgument(_) => USAGE,
            Error::NotKernelDirection { .. } | Error::NotOnRuling(_) => HYPOTHESIS,
            _ => EVALUATION,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}
