//! Two-tier group hierarchy: categories (tier 1) and subcategories (tier 2).

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("unknown subcategory code {0}")]
    UnknownSubcategory(u32),
    #[error("unknown category code {0}")]
    UnknownCategory(u32),
    #[error("invalid group code `{0}`")]
    Parse(String),
}

/// Level of the hierarchy an analysis runs at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tier {
    #[serde(rename = "1")]
    Category,
    #[serde(rename = "2")]
    Subcategory,
}

impl Tier {
    pub fn from_number(n: u8) -> Option<Tier> {
        match n {
            1 => Some(Tier::Category),
            2 => Some(Tier::Subcategory),
            _ => None,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Tier::Category => 1,
            Tier::Subcategory => 2,
        }
    }
}

/// A subcategory in the USPTO technology classification together with its
/// enclosing category, its name and its patent count.
#[derive(Debug, Clone, Copy)]
pub struct SubcategoryInfo {
    pub code: u8,
    pub name: &'static str,
    pub patents: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct CategoryInfo {
    pub code: u8,
    pub name: &'static str,
    pub patents: u64,
    pub subcategories: &'static [SubcategoryInfo],
}

const fn sub(code: u8, name: &'static str, patents: u64) -> SubcategoryInfo {
    SubcategoryInfo {
        code,
        name,
        patents,
    }
}

/// The six categories and 36 subcategories of the NBER patent classification.
pub const HIERARCHY: [CategoryInfo; 6] = [
    CategoryInfo {
        code: 1,
        name: "Chemical",
        patents: 457_353,
        subcategories: &[
            sub(11, "Agriculture, Food, Textiles", 18_571),
            sub(12, "Coating", 34_443),
            sub(13, "Gas", 12_101),
            sub(14, "Organic Compounds", 79_947),
            sub(15, "Resins", 77_051),
            sub(19, "Miscellaneous-chemical", 235_240),
        ],
    },
    CategoryInfo {
        code: 2,
        name: "Computers & Communications",
        patents: 218_942,
        subcategories: &[
            sub(21, "Communications", 96_119),
            sub(22, "Computer Hardware & Software", 67_186),
            sub(23, "Computer Peripherals", 17_419),
            sub(24, "Information Storage", 38_218),
        ],
    },
    CategoryInfo {
        code: 3,
        name: "Drugs & Medical",
        patents: 139_524,
        subcategories: &[
            sub(31, "Drugs", 52_586),
            sub(32, "Surgery & Medical Instruments", 56_503),
            sub(33, "Biotechnology", 17_392),
            sub(39, "Miscellaneous-Drugs & Medical", 13_043),
        ],
    },
    CategoryInfo {
        code: 4,
        name: "Electrical & Electronic",
        patents: 387_996,
        subcategories: &[
            sub(41, "Electrical Devices", 75_841),
            sub(42, "Electrical Lighting", 36_243),
            sub(43, "Measuring & Testing", 66_093),
            sub(44, "Nuclear & X-rays", 34_132),
            sub(45, "Power Systems", 81_754),
            sub(46, "Semiconductor Devices", 39_439),
            sub(49, "Miscellaneous-Electrical", 54_494),
        ],
    },
    CategoryInfo {
        code: 5,
        name: "Mechanical",
        patents: 530_675,
        subcategories: &[
            sub(51, "Materials Processing & Handling", 131_787),
            sub(52, "Metal Working", 70_511),
            sub(53, "Motors & Engines + Parts", 87_574),
            sub(54, "Optics", 50_088),
            sub(55, "Transportation", 69_593),
            sub(59, "Miscellaneous-Mechanical", 121_122),
        ],
    },
    CategoryInfo {
        code: 6,
        name: "Others",
        patents: 505_859,
        subcategories: &[
            sub(61, "Agriculture, Husbandry, Food", 50_350),
            sub(62, "Amusement Devices", 23_237),
            sub(63, "Apparel & Textile", 41_523),
            sub(64, "Earth Working & Wells", 35_976),
            sub(65, "Furniture, House Fixtures", 48_658),
            sub(66, "Heating", 31_959),
            sub(67, "Pipes & Joints", 22_216),
            sub(68, "Receptacles", 51_905),
            sub(69, "Miscellaneous-Others", 200_035),
        ],
    },
];

pub fn is_known_subcategory(code: u32) -> bool {
    subcategory_info(code).is_some()
}

pub fn subcategory_info(code: u32) -> Option<&'static SubcategoryInfo> {
    let cat = HIERARCHY.get((code / 10).checked_sub(1)? as usize)?;
    cat.subcategories.iter().find(|s| u32::from(s.code) == code)
}

pub fn category_info(code: u32) -> Option<&'static CategoryInfo> {
    HIERARCHY.get(code.checked_sub(1)? as usize)
}

/// Label of a single vertex: its category and subcategory.
///
/// Only constructible from a known subcategory, so `tier2 / 10 == tier1`
/// always holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawLabel", into = "RawLabel")]
pub struct GroupLabel {
    tier1: u8,
    tier2: u8,
}

#[derive(Serialize, Deserialize)]
struct RawLabel {
    category: u8,
    subcategory: u8,
}

impl TryFrom<RawLabel> for GroupLabel {
    type Error = GroupError;

    fn try_from(raw: RawLabel) -> Result<Self, Self::Error> {
        let label = GroupLabel::from_subcategory(u32::from(raw.subcategory))?;
        if label.tier1 != raw.category {
            return Err(GroupError::UnknownCategory(u32::from(raw.category)));
        }
        Ok(label)
    }
}

impl From<GroupLabel> for RawLabel {
    fn from(l: GroupLabel) -> Self {
        RawLabel {
            category: l.tier1,
            subcategory: l.tier2,
        }
    }
}

impl GroupLabel {
    pub fn from_subcategory(code: u32) -> Result<GroupLabel, GroupError> {
        if !is_known_subcategory(code) {
            return Err(GroupError::UnknownSubcategory(code));
        }
        Ok(GroupLabel {
            tier1: (code / 10) as u8,
            tier2: code as u8,
        })
    }

    pub fn category(self) -> u8 {
        self.tier1
    }

    pub fn subcategory(self) -> u8 {
        self.tier2
    }

    /// The group code of this label at `tier`.
    pub fn code(self, tier: Tier) -> u8 {
        match tier {
            Tier::Category => self.tier1,
            Tier::Subcategory => self.tier2,
        }
    }
}

impl fmt::Display for GroupLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.tier1, self.tier2)
    }
}

/// A group at either tier. One-digit codes are categories, two-digit codes
/// are subcategories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Group {
    Category(u8),
    Subcategory(u8),
}

impl Group {
    pub fn new(tier: Tier, code: u8) -> Result<Group, GroupError> {
        match tier {
            Tier::Category => {
                category_info(u32::from(code)).ok_or(GroupError::UnknownCategory(u32::from(code)))?;
                Ok(Group::Category(code))
            }
            Tier::Subcategory => {
                if !is_known_subcategory(u32::from(code)) {
                    return Err(GroupError::UnknownSubcategory(u32::from(code)));
                }
                Ok(Group::Subcategory(code))
            }
        }
    }

    pub fn tier(self) -> Tier {
        match self {
            Group::Category(_) => Tier::Category,
            Group::Subcategory(_) => Tier::Subcategory,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Group::Category(c) | Group::Subcategory(c) => c,
        }
    }

    pub fn contains(self, label: GroupLabel) -> bool {
        label.code(self.tier()) == self.code()
    }

    /// Enclosing category code.
    pub fn category(self) -> u8 {
        match self {
            Group::Category(c) => c,
            Group::Subcategory(c) => c / 10,
        }
    }
}

impl std::str::FromStr for Group {
    type Err = GroupError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let code: u8 = s
            .trim()
            .parse()
            .map_err(|_| GroupError::Parse(s.to_string()))?;
        if code < 10 {
            Group::new(Tier::Category, code)
        } else {
            Group::new(Tier::Subcategory, code)
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

impl Serialize for Group {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(self.code())
    }
}

impl<'de> Deserialize<'de> for Group {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let code = u8::deserialize(d)?;
        code.to_string().parse().map_err(serde::de::Error::custom)
    }
}
