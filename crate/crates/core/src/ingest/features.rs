use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

/// The time unit a row covers. Hours are 1..=24 (hour k spans slots 2k-1 and
/// 2k), slots are 1..=48.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Interval {
    Hour(u8),
    Slot(u8),
}

impl Interval {
    pub fn index(self) -> u8 {
        match self {
            Interval::Hour(h) | Interval::Slot(h) => h,
        }
    }

    /// Clock hour (0..=23) in which the interval starts.
    pub fn clock_hour(self) -> u8 {
        match self {
            Interval::Hour(h) => h.saturating_sub(1),
            Interval::Slot(s) => s.saturating_sub(1) / 2,
        }
    }

    /// Minutes after midnight at which the interval starts.
    pub fn start_minute(self) -> u32 {
        match self {
            Interval::Hour(h) => u32::from(h.saturating_sub(1)) * 60,
            Interval::Slot(s) => u32::from(s.saturating_sub(1)) * 30,
        }
    }

    pub fn length_minutes(self) -> u32 {
        match self {
            Interval::Hour(_) => 60,
            Interval::Slot(_) => 30,
        }
    }

    pub fn is_valid(self) -> bool {
        match self {
            Interval::Hour(h) => (1..=24).contains(&h),
            Interval::Slot(s) => (1..=48).contains(&s),
        }
    }

    /// `HH:MM-HH:MM` label, inclusive of the last minute.
    pub fn label(self) -> String {
        let start = self.start_minute();
        let end = start + self.length_minutes() - 1;
        format!(
            "{:02}:{:02}-{:02}:{:02}",
            start / 60,
            start % 60,
            end / 60,
            end % 60
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DayPeriod {
    Night = 0,
    Day = 1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DayType {
    Weekday = 0,
    Weekend = 1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Season {
    Winter = 0,
    Spring = 1,
    Summer = 2,
    Autumn = 3,
}

impl Season {
    pub const ALL: [Season; 4] = [Season::Winter, Season::Spring, Season::Summer, Season::Autumn];

    /// Meteorological seasons: Dec-Feb winter, Mar-May spring, Jun-Aug summer,
    /// Sep-Nov autumn.
    pub fn of_month(month: u8) -> Season {
        match month {
            12 | 1 | 2 => Season::Winter,
            3..=5 => Season::Spring,
            6..=8 => Season::Summer,
            _ => Season::Autumn,
        }
    }

    pub fn from_code(code: u8) -> Option<Season> {
        Season::ALL.get(usize::from(code)).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Season::Winter => "winter",
            Season::Spring => "spring",
            Season::Summer => "summer",
            Season::Autumn => "autumn",
        }
    }
}

impl DayPeriod {
    pub fn as_str(self) -> &'static str {
        match self {
            DayPeriod::Day => "day",
            DayPeriod::Night => "night",
        }
    }
}

impl DayType {
    pub fn of_date(date: NaiveDate) -> DayType {
        match date.weekday() {
            Weekday::Sat | Weekday::Sun => DayType::Weekend,
            _ => DayType::Weekday,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DayType::Weekday => "weekday",
            DayType::Weekend => "weekend",
        }
    }
}

/// Clock hours (inclusive) counted as daytime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayPeriodBounds {
    pub first_day_hour: u8,
    pub last_day_hour: u8,
}

impl Default for DayPeriodBounds {
    fn default() -> Self {
        DayPeriodBounds {
            first_day_hour: 7,
            last_day_hour: 22,
        }
    }
}

impl DayPeriodBounds {
    pub fn classify(&self, clock_hour: u8) -> DayPeriod {
        if (self.first_day_hour..=self.last_day_hour).contains(&clock_hour) {
            DayPeriod::Day
        } else {
            DayPeriod::Night
        }
    }
}

/// Calendar attributes of one interval, without the consumption target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeAttributes {
    pub day_period: DayPeriod,
    pub day_type: DayType,
    pub month: u8,
    pub season: Season,
}

pub fn derive_features(date: NaiveDate, interval: Interval, bounds: &DayPeriodBounds) -> TimeAttributes {
    let month = date.month() as u8;
    TimeAttributes {
        day_period: bounds.classify(interval.clock_hour()),
        day_type: DayType::of_date(date),
        month,
        season: Season::of_month(month),
    }
}

/// Attributes a tree may split on, in declared (tie-breaking) order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribute {
    Interval = 0,
    DayPeriod = 1,
    DayType = 2,
    Month = 3,
    Season = 4,
}

impl Attribute {
    pub const ALL: [Attribute; 5] = [
        Attribute::Interval,
        Attribute::DayPeriod,
        Attribute::DayType,
        Attribute::Month,
        Attribute::Season,
    ];

    pub fn from_code(code: u8) -> Option<Attribute> {
        Attribute::ALL.get(usize::from(code)).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Attribute::Interval => "interval",
            Attribute::DayPeriod => "day_period",
            Attribute::DayType => "day_type",
            Attribute::Month => "month",
            Attribute::Season => "season",
        }
    }

    /// Season is the only attribute split by category subsets; the others are
    /// ordinal or binary and split by threshold.
    pub fn is_categorical(self) -> bool {
        matches!(self, Attribute::Season)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AttributeSet(u8);

impl AttributeSet {
    pub const fn empty() -> Self {
        AttributeSet(0)
    }

    pub fn all() -> Self {
        Attribute::ALL.iter().fold(Self::empty(), |s, &a| s.with(a))
    }

    /// Hour, day type, month and season.
    pub fn sh_default() -> Self {
        Self::all().without(Attribute::DayPeriod)
    }

    pub fn with(self, a: Attribute) -> Self {
        AttributeSet(self.0 | (1 << a as u8))
    }

    pub fn without(self, a: Attribute) -> Self {
        AttributeSet(self.0 & !(1 << a as u8))
    }

    pub fn contains(self, a: Attribute) -> bool {
        self.0 & (1 << a as u8) != 0
    }

    pub fn iter(self) -> impl Iterator<Item = Attribute> {
        Attribute::ALL.into_iter().filter(move |&a| self.contains(a))
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn from_bits(bits: u8) -> Option<Self> {
        (bits < 1 << Attribute::ALL.len()).then_some(AttributeSet(bits))
    }
}
