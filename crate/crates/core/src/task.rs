use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

/// The nine benchmark tasks. The kind decides which anchor losses are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TaskKind {
    #[serde(rename = "MCIT")]
    Mcit,
    #[serde(rename = "ICIT")]
    Icit,
    #[serde(rename = "MVIT")]
    Mvit,
    #[serde(rename = "MAIT")]
    Mait,
    #[serde(rename = "COT-Stitch")]
    CotStitch,
    #[serde(rename = "COT-Swap")]
    CotSwap,
    #[serde(rename = "CAT")]
    Cat,
    #[serde(rename = "MVT")]
    Mvt,
    #[serde(rename = "MAT")]
    Mat,
}

impl TaskKind {
    pub const ALL: [TaskKind; 9] = [
        TaskKind::Mcit,
        TaskKind::Icit,
        TaskKind::Mvit,
        TaskKind::Mait,
        TaskKind::CotStitch,
        TaskKind::CotSwap,
        TaskKind::Cat,
        TaskKind::Mvt,
        TaskKind::Mat,
    ];

    /// Visual anchor switch: on when the video side of the input is corrupted or missing.
    pub fn switch_eta(self) -> bool {
        matches!(self, TaskKind::Mvit | TaskKind::Mvt | TaskKind::CotSwap)
    }

    /// Audio anchor switch: on when the audio side of the input is corrupted or missing.
    pub fn switch_gamma(self) -> bool {
        matches!(self, TaskKind::Mait | TaskKind::Mat)
    }

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Mcit => "MCIT",
            TaskKind::Icit => "ICIT",
            TaskKind::Mvit => "MVIT",
            TaskKind::Mait => "MAIT",
            TaskKind::CotStitch => "COT-Stitch",
            TaskKind::CotSwap => "COT-Swap",
            TaskKind::Cat => "CAT",
            TaskKind::Mvt => "MVT",
            TaskKind::Mat => "MAT",
        }
    }

    /// File-name friendly form, e.g. `cot_stitch`.
    pub fn slug(self) -> &'static str {
        match self {
            TaskKind::Mcit => "mcit",
            TaskKind::Icit => "icit",
            TaskKind::Mvit => "mvit",
            TaskKind::Mait => "mait",
            TaskKind::CotStitch => "cot_stitch",
            TaskKind::CotSwap => "cot_swap",
            TaskKind::Cat => "cat",
            TaskKind::Mvt => "mvt",
            TaskKind::Mat => "mat",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown task kind `{0}`")]
pub struct UnknownTask(pub alloc::string::String);

impl FromStr for TaskKind {
    type Err = UnknownTask;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: alloc::string::String = s
            .chars()
            .filter(|c| !matches!(c, '-' | '_' | ' '))
            .map(|c| c.to_ascii_uppercase())
            .collect();
        TaskKind::ALL
            .iter()
            .copied()
            .find(|k| {
                let n: alloc::string::String = k.name().chars().filter(|c| *c != '-').collect();
                n.eq_ignore_ascii_case(&norm)
            })
            .ok_or_else(|| UnknownTask(s.into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn switches_match_task_table() {
        let eta: alloc::vec::Vec<_> = TaskKind::ALL.iter().filter(|k| k.switch_eta()).collect();
        let gamma: alloc::vec::Vec<_> = TaskKind::ALL.iter().filter(|k| k.switch_gamma()).collect();
        assert_eq!(eta, [&TaskKind::Mvit, &TaskKind::CotSwap, &TaskKind::Mvt]);
        assert_eq!(gamma, [&TaskKind::Mait, &TaskKind::Mat]);
        assert!(TaskKind::ALL.iter().all(|k| !(k.switch_eta() && k.switch_gamma())));
    }

    #[test]
    fn parses_names_and_slugs() {
        for k in TaskKind::ALL {
            assert_eq!(k.name().parse::<TaskKind>().unwrap(), k);
            assert_eq!(k.slug().parse::<TaskKind>().unwrap(), k);
        }
        assert!("XYZ".parse::<TaskKind>().is_err());
    }
}
