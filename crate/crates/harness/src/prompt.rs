//! Prompt templates, loaded from versioned data files at compile time.

use std::fmt;
use std::str::FromStr;

use divbench_core::writing::{TaskKind, WritingTaskSpec};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::HarnessError;

/// Bumped whenever any template file changes.
pub const PROMPT_VERSION: &str = include_str!("../data/prompts/VERSION");

const DAT: &str = include_str!("../data/prompts/dat.txt");
const DAT_CONTROL: &str = include_str!("../data/prompts/dat_control.txt");
const DAT_STRATEGY: &str = include_str!("../data/prompts/dat_strategy.txt");
const HAIKU: &str = include_str!("../data/prompts/haiku.txt");
const SYNOPSIS: &str = include_str!("../data/prompts/synopsis.txt");
const FLASH_FICTION: &str = include_str!("../data/prompts/flash_fiction.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    Etymology,
    Thesaurus,
    Opposition,
}

impl Strategy {
    pub fn phrase(self) -> &'static str {
        match self {
            Strategy::Etymology => "varying etymology",
            Strategy::Thesaurus => "using a thesaurus",
            Strategy::Opposition => "meaning opposition",
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Strategy::Etymology => "etymology",
            Strategy::Thesaurus => "thesaurus",
            Strategy::Opposition => "opposition",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CampaignTask {
    Dat,
    DatControl,
    DatStrategy(Strategy),
    Haiku,
    Synopsis,
    FlashFiction,
}

impl CampaignTask {
    pub fn is_dat_family(self) -> bool {
        matches!(self, CampaignTask::Dat | CampaignTask::DatControl | CampaignTask::DatStrategy(_))
    }

    pub fn writing_kind(self) -> Option<TaskKind> {
        match self {
            CampaignTask::Haiku => Some(TaskKind::Haiku),
            CampaignTask::Synopsis => Some(TaskKind::Synopsis),
            CampaignTask::FlashFiction => Some(TaskKind::FlashFiction),
            _ => None,
        }
    }

    pub fn default_samples(self) -> usize {
        if self.is_dat_family() {
            500
        } else {
            100
        }
    }

    /// Raw template bytes, before placeholder substitution.
    pub fn template(self) -> &'static str {
        match self {
            CampaignTask::Dat => DAT,
            CampaignTask::DatControl => DAT_CONTROL,
            CampaignTask::DatStrategy(_) => DAT_STRATEGY,
            CampaignTask::Haiku => HAIKU,
            CampaignTask::Synopsis => SYNOPSIS,
            CampaignTask::FlashFiction => FLASH_FICTION,
        }
    }
}

impl fmt::Display for CampaignTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CampaignTask::Dat => f.write_str("dat"),
            CampaignTask::DatControl => f.write_str("dat_control"),
            CampaignTask::DatStrategy(s) => write!(f, "dat_strategy:{}", s.as_str()),
            CampaignTask::Haiku => f.write_str("haiku"),
            CampaignTask::Synopsis => f.write_str("synopsis"),
            CampaignTask::FlashFiction => f.write_str("flash_fiction"),
        }
    }
}

impl FromStr for CampaignTask {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "dat" => CampaignTask::Dat,
            "dat_control" => CampaignTask::DatControl,
            "dat_strategy:etymology" => CampaignTask::DatStrategy(Strategy::Etymology),
            "dat_strategy:thesaurus" => CampaignTask::DatStrategy(Strategy::Thesaurus),
            "dat_strategy:opposition" => CampaignTask::DatStrategy(Strategy::Opposition),
            "haiku" => CampaignTask::Haiku,
            "synopsis" => CampaignTask::Synopsis,
            "flash_fiction" => CampaignTask::FlashFiction,
            other => return Err(HarnessError::UnknownTask(other.to_string())),
        })
    }
}

impl Serialize for CampaignTask {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CampaignTask {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The exact user message sent for `task`.
pub fn build_prompt(task: CampaignTask) -> String {
    let template = task.template();
    match task {
        CampaignTask::DatStrategy(s) => template.replace("{strategy}", s.phrase()),
        _ => match task.writing_kind() {
            Some(kind) => match WritingTaskSpec::for_kind(kind).word_limit {
                Some(limit) => template.replace("{word_limit}", &limit.to_string()),
                None => template.to_string(),
            },
            None => template.to_string(),
        },
    }
}
