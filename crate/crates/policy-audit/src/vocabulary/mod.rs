//! The collection vocabulary: closed taxonomies for interaction data types,
//! collection techniques and collection contexts, plus the configurable
//! [`Lexicon`] consumed by every other module.

mod lexicon;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use lexicon::{
    load_lexicon, ApiSignature, ClaimPattern, ContextCriterion, Lexicon, BUILTIN_LEXICON_PATH,
    REQUIRED_UI_ELEMENTS,
};
pub(crate) use lexicon::{glob_match, simple_class_name};

/// The seven interaction data types.
///
/// `DeviceData` is carried in the taxonomy because policies routinely claim
/// it alongside interaction data, but it is not itself interaction data and
/// is excluded from consistency-rate denominators unless explicitly included.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum InteractionDataType {
    AppPresentation,
    Binary,
    Categorical,
    UserInput,
    Gesture,
    CompositeGesture,
    DeviceData,
}

impl InteractionDataType {
    pub const ALL: [InteractionDataType; 7] = [
        InteractionDataType::AppPresentation,
        InteractionDataType::Binary,
        InteractionDataType::Categorical,
        InteractionDataType::UserInput,
        InteractionDataType::Gesture,
        InteractionDataType::CompositeGesture,
        InteractionDataType::DeviceData,
    ];

    /// True for `DeviceData`, which rides along with interaction data but is
    /// not part of it.
    pub fn is_non_interaction(self) -> bool {
        matches!(self, InteractionDataType::DeviceData)
    }

    pub fn name(self) -> &'static str {
        match self {
            InteractionDataType::AppPresentation => "AppPresentation",
            InteractionDataType::Binary => "Binary",
            InteractionDataType::Categorical => "Categorical",
            InteractionDataType::UserInput => "UserInput",
            InteractionDataType::Gesture => "Gesture",
            InteractionDataType::CompositeGesture => "CompositeGesture",
            InteractionDataType::DeviceData => "DeviceData",
        }
    }

    /// Human-readable label used in markdown reports.
    pub fn label(self) -> &'static str {
        match self {
            InteractionDataType::AppPresentation => "app presentation",
            InteractionDataType::Binary => "binary",
            InteractionDataType::Categorical => "categorical",
            InteractionDataType::UserInput => "user input",
            InteractionDataType::Gesture => "gesture",
            InteractionDataType::CompositeGesture => "composite gesture",
            InteractionDataType::DeviceData => "device data",
        }
    }
}

impl fmt::Display for InteractionDataType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for InteractionDataType {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|t| t.name() == s)
            .ok_or_else(|| crate::Error::LexiconValidation {
                detail: format!("unknown interaction data type {s:?}"),
            })
    }
}

/// The three collection techniques.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum CollectionTechnique {
    Frequency,
    Duration,
    Motion,
}

impl CollectionTechnique {
    pub const ALL: [CollectionTechnique; 3] = [
        CollectionTechnique::Frequency,
        CollectionTechnique::Duration,
        CollectionTechnique::Motion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CollectionTechnique::Frequency => "Frequency",
            CollectionTechnique::Duration => "Duration",
            CollectionTechnique::Motion => "Motion",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CollectionTechnique::Frequency => "frequency",
            CollectionTechnique::Duration => "duration",
            CollectionTechnique::Motion => "motion",
        }
    }
}

impl fmt::Display for CollectionTechnique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for CollectionTechnique {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|t| t.name() == s)
            .ok_or_else(|| crate::Error::LexiconValidation {
                detail: format!("unknown collection technique {s:?}"),
            })
    }
}

/// The eleven collection contexts of the context catalog.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum CollectionContext {
    ViewingContent,
    MakingPurchase,
    LocationBasedServices,
    InteractingWithMedia,
    Search,
    Notifications,
    AccessingUserProfile,
    SensorBasedFeatures,
    CommunicationFeatures,
    GameplayInteractions,
    CustomizationFeatures,
}

impl CollectionContext {
    pub const ALL: [CollectionContext; 11] = [
        CollectionContext::ViewingContent,
        CollectionContext::MakingPurchase,
        CollectionContext::LocationBasedServices,
        CollectionContext::InteractingWithMedia,
        CollectionContext::Search,
        CollectionContext::Notifications,
        CollectionContext::AccessingUserProfile,
        CollectionContext::SensorBasedFeatures,
        CollectionContext::CommunicationFeatures,
        CollectionContext::GameplayInteractions,
        CollectionContext::CustomizationFeatures,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CollectionContext::ViewingContent => "ViewingContent",
            CollectionContext::MakingPurchase => "MakingPurchase",
            CollectionContext::LocationBasedServices => "LocationBasedServices",
            CollectionContext::InteractingWithMedia => "InteractingWithMedia",
            CollectionContext::Search => "Search",
            CollectionContext::Notifications => "Notifications",
            CollectionContext::AccessingUserProfile => "AccessingUserProfile",
            CollectionContext::SensorBasedFeatures => "SensorBasedFeatures",
            CollectionContext::CommunicationFeatures => "CommunicationFeatures",
            CollectionContext::GameplayInteractions => "GameplayInteractions",
            CollectionContext::CustomizationFeatures => "CustomizationFeatures",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CollectionContext::ViewingContent => "viewing content",
            CollectionContext::MakingPurchase => "making purchase",
            CollectionContext::LocationBasedServices => "location-based services",
            CollectionContext::InteractingWithMedia => "interacting with media",
            CollectionContext::Search => "search",
            CollectionContext::Notifications => "notifications",
            CollectionContext::AccessingUserProfile => "accessing user profile",
            CollectionContext::SensorBasedFeatures => "sensor-based features",
            CollectionContext::CommunicationFeatures => "communication features",
            CollectionContext::GameplayInteractions => "gameplay interactions",
            CollectionContext::CustomizationFeatures => "customization features",
        }
    }
}

impl fmt::Display for CollectionContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for CollectionContext {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| crate::Error::LexiconValidation {
                detail: format!("unknown collection context {s:?}"),
            })
    }
}

/// Any value of the three taxonomies. Lexicon entries label matches with
/// sets of these; variant names are unique across the taxonomies, so the
/// untagged representation is unambiguous.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(untagged)]
pub enum TaxonomyLabel {
    Data(InteractionDataType),
    Technique(CollectionTechnique),
    Context(CollectionContext),
}

impl fmt::Display for TaxonomyLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaxonomyLabel::Data(v) => v.fmt(f),
            TaxonomyLabel::Technique(v) => v.fmt(f),
            TaxonomyLabel::Context(v) => v.fmt(f),
        }
    }
}

impl From<InteractionDataType> for TaxonomyLabel {
    fn from(v: InteractionDataType) -> Self {
        TaxonomyLabel::Data(v)
    }
}

impl From<CollectionTechnique> for TaxonomyLabel {
    fn from(v: CollectionTechnique) -> Self {
        TaxonomyLabel::Technique(v)
    }
}

impl From<CollectionContext> for TaxonomyLabel {
    fn from(v: CollectionContext) -> Self {
        TaxonomyLabel::Context(v)
    }
}
