// Copyright 2026 The qsw Authors
// SPDX-License-Identifier: Apache-2.0

use qsw_core::QswError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] QswError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    /// 2 for configuration and parameter errors, 3 for numerical failures,
    /// 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(QswError::Io(_)) | CliError::Io { .. } => 1,
            CliError::Core(_) => 2,
        }
    }
}
