use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use crate::run::CliError;

/// Every flag is optional so a config file can fill the gaps.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Flags {
    /// Family name, e.g. type34, par4n, rtw, scherk0 (or an id like PAR_4N(3)).
    #[arg(long)]
    pub family: Option<String>,
    /// Family index.
    #[arg(long)]
    pub n: Option<usize>,
    /// Second index for type-mn.
    #[arg(long)]
    pub m: Option<usize>,
    /// Working precision in decimal digits.
    #[arg(long)]
    pub precision: Option<u32>,
    /// Pinned variable, NAME=VALUE (sweep accepts a bare NAME).
    #[arg(long, value_name = "NAME=VALUE")]
    pub pin: Option<String>,
    /// Pin values for sweep, one decimal per line.
    #[arg(long, value_name = "FILE")]
    pub schedule: Option<PathBuf>,
    /// default, published (the bundled table), or file:PATH (a solution record).
    #[arg(long)]
    pub seed: Option<String>,
    /// Output file (directory for sweep).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Record to read: a path or bundled:NAME.
    #[arg(long, value_name = "PATH|bundled:NAME")]
    pub record: Option<String>,
    /// Mesh samples along each ray.
    #[arg(long)]
    pub radial: Option<usize>,
    /// Mesh samples along each half circle.
    #[arg(long)]
    pub angular: Option<usize>,
    /// Ends are cut at 1/R and R.
    #[arg(long, value_name = "R")]
    pub truncation: Option<f64>,
    /// Flat structure form: gdh or invgdh.
    #[arg(long)]
    pub form: Option<String>,
}

impl Flags {
    /// `self` with gaps filled from `file`.
    pub fn over(self, file: Flags) -> Flags {
        Flags {
            family: self.family.or(file.family),
            n: self.n.or(file.n),
            m: self.m.or(file.m),
            precision: self.precision.or(file.precision),
            pin: self.pin.or(file.pin),
            schedule: self.schedule.or(file.schedule),
            seed: self.seed.or(file.seed),
            out: self.out.or(file.out),
            record: self.record.or(file.record),
            radial: self.radial.or(file.radial),
            angular: self.angular.or(file.angular),
            truncation: self.truncation.or(file.truncation),
            form: self.form.or(file.form),
        }
    }
}

pub fn load(path: &Path) -> Result<Flags, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_line_wins() {
        let file: Flags = toml::from_str("family = \"par4n\"\nn = 3\nprecision = 40\n").unwrap();
        let cli = Flags {
            precision: Some(60),
            ..Flags::default()
        };
        let f = cli.over(file);
        assert_eq!(f.family.as_deref(), Some("par4n"));
        assert_eq!(f.n, Some(3));
        assert_eq!(f.precision, Some(60));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<Flags>("famliy = \"rtw\"").is_err());
    }
}
