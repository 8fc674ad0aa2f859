//! Diagnostics shared by the checker, the event layer and the simulator.

use std::fmt;

/// ERROR sorts before WARNING.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Error,
    Warning,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Error => "ERROR",
            Severity::Warning => "WARNING",
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

macro_rules! codes {
    ($($variant:ident => $name:literal,)*) => {
        /// Closed set of diagnostic codes.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum Code {
            $($variant,)*
        }

        impl Code {
            pub const ALL: &'static [Code] = &[$(Code::$variant,)*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(Code::$variant => $name,)*
                }
            }
        }
    };
}

codes! {
    IllegalIntraFlow => "ILLEGAL_INTRA_FLOW",
    IllegalInterFlow => "ILLEGAL_INTER_FLOW",
    SameMachineTrigger => "SAME_MACHINE_TRIGGER",
    BoundaryBypass => "BOUNDARY_BYPASS",
    UnknownAction => "UNKNOWN_ACTION",
    EmptyEvent => "EMPTY_EVENT",
    DisconnectedEvent => "DISCONNECTED_EVENT",
    DepViolation => "DEP_VIOLATION",
    CyclicBehavior => "CYCLIC_BEHAVIOR",
    UnknownEvent => "UNKNOWN_EVENT",
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: Code,
    /// Id of the action, flow, trigger, thimac, event or behavior concerned.
    pub subject: String,
    pub message: String,
}

impl Diagnostic {
    pub fn error(code: Code, subject: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            code,
            subject: subject.into(),
            message: message.into(),
        }
    }

    pub fn warning(code: Code, subject: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            code,
            subject: subject.into(),
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// Same diagnostic with ERROR lowered to WARNING.
    pub fn downgraded(mut self) -> Self {
        self.severity = Severity::Warning;
        self
    }
}

/// `SEVERITY CODE subject: message`
impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {}: {}",
            self.severity, self.code, self.subject, self.message
        )
    }
}

/// Sort by (severity, subject, code), then message for a total order.
pub fn sort(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| {
        (a.severity, &a.subject, a.code, &a.message).cmp(&(b.severity, &b.subject, b.code, &b.message))
    });
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}
