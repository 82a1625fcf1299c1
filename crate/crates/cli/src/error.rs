use serde_json::{json, Value};
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum AppError {
    #[error("schema violation: {}", .0.iter().map(|e| format!("{}: {}", if e.field.is_empty() { "." } else { &e.field }, e.message)).collect::<Vec<_>>().join("; "))]
    Schema(Vec<FieldError>),

    #[error(transparent)]
    Core(#[from] crossfield::Error),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("internal error: {0}")]
    Internal(String),
}

impl AppError {
    pub fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        AppError::Schema(vec![FieldError { field: field.into(), message: message.into() }])
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Core(crossfield::Error::Solver(_)) => EXIT_NOT_CONVERGED,
            _ => EXIT_VALIDATION,
        }
    }

    pub fn http_status(&self) -> u16 {
        use crossfield::Error as E;
        match self {
            AppError::Core(E::Infeasible { .. }) => 409,
            AppError::Core(E::Incompatible { .. }) => 422,
            AppError::Core(E::Solver(_)) | AppError::Io { .. } | AppError::Internal(_) => 500,
            AppError::Schema(_) | AppError::Core(_) => 400,
        }
    }

    fn kind(&self) -> &'static str {
        use crossfield::Error as E;
        match self {
            AppError::Schema(_) => "schema",
            AppError::Core(E::Infeasible { .. }) => "infeasible",
            AppError::Core(E::Incompatible { .. }) => "incompatible",
            AppError::Core(E::Solver(_)) => "solver",
            AppError::Core(_) => "invalid",
            AppError::Io { .. } | AppError::Internal(_) => "internal",
        }
    }

    /// `{error, message, errors?}` document sent with non-2xx responses.
    pub fn to_json(&self) -> Value {
        let mut v = json!({"error": self.kind(), "message": self.to_string()});
        match self {
            AppError::Schema(errs) => {
                v["errors"] = errs.iter().map(|e| json!({"field": e.field, "message": e.message})).collect();
            }
            AppError::Core(crossfield::Error::Infeasible { target, placed }) => {
                v["u_target"] = json!(target);
                v["placed"] = json!(placed);
            }
            _ => {}
        }
        v
    }
}

pub type Result<T> = std::result::Result<T, AppError>;

#[cfg(test)]
mod tests {
    use super::*;
    use crossfield::Error as E;

    #[test]
    fn status_and_exit_codes() {
        let cases = [
            (AppError::field("holes[0]", "bad"), 400, EXIT_VALIDATION),
            (AppError::Core(E::Infeasible { target: 4, placed: 3 }), 409, EXIT_VALIDATION),
            (AppError::Core(E::Incompatible { sources: 1.0, flux: 2.0 }), 422, EXIT_VALIDATION),
            (AppError::Core(E::Invalid("x".into())), 400, EXIT_VALIDATION),
            (AppError::Core(E::Solver("x".into())), 500, EXIT_NOT_CONVERGED),
        ];
        for (e, status, code) in cases {
            assert_eq!((e.http_status(), e.exit_code()), (status, code), "{e}");
        }
        let v = AppError::field("holes[0].radius", "expected f64").to_json();
        assert_eq!(v["errors"][0]["field"], "holes[0].radius");
    }
}
