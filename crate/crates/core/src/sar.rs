//! Subject-access-request metrics: deadlines, workload scores and outcomes.

use std::collections::BTreeMap;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Length of the legal response period.
pub const RESPONSE_PERIOD_DAYS: u64 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Email,
    WebForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseType {
    Automatic,
    Mixed,
    Human,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    GotAccess,
    NoDataStored,
    AccessDenied,
    InProcess,
    NoResponse,
}

impl Outcome {
    pub const ALL: [Outcome; 5] = [
        Outcome::GotAccess,
        Outcome::NoDataStored,
        Outcome::AccessDenied,
        Outcome::InProcess,
        Outcome::NoResponse,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::GotAccess => "got_access",
            Outcome::NoDataStored => "no_data_stored",
            Outcome::AccessDenied => "access_denied",
            Outcome::InProcess => "in_process",
            Outcome::NoResponse => "no_response",
        }
    }

    /// Rank among statuses reported on the same day; higher wins.
    fn precedence(self) -> u8 {
        match self {
            Outcome::AccessDenied => 4,
            Outcome::GotAccess => 3,
            Outcome::NoDataStored => 2,
            Outcome::InProcess => 1,
            Outcome::NoResponse => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseEvent {
    pub date: NaiveDate,
    pub response_type: ResponseType,
    /// The case status this response establishes, if any (an automatic
    /// acknowledgement carries none).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<Outcome>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct WorkloadInputs {
    /// Emails sent before access was granted.
    pub m_pre: u32,
    /// Emails sent after access was granted.
    pub m_post: u32,
    pub a_online: u32,
    pub a_offline: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InquiryCase {
    pub company: String,
    pub channel: Channel,
    pub sent_date: NaiveDate,
    #[serde(default)]
    pub events: Vec<ResponseEvent>,
    #[serde(default)]
    pub workload: WorkloadInputs,
    /// Final recorded outcome, if known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Outcome>,
}

impl InquiryCase {
    pub fn validate(&self) -> Result<()> {
        if let Some(e) = self.events.iter().find(|e| e.date < self.sent_date) {
            return Err(Error::Invalid(format!(
                "{}: response dated {} precedes the inquiry ({})",
                self.company, e.date, self.sent_date
            )));
        }
        if self.events.iter().any(|e| e.status == Some(Outcome::NoResponse)) {
            return Err(Error::Invalid(format!(
                "{}: no_response is not an event status",
                self.company
            )));
        }
        match self.outcome {
            Some(Outcome::NoResponse) if !self.events.is_empty() => Err(Error::Invalid(format!(
                "{}: outcome no_response but the case has responses",
                self.company
            ))),
            Some(o) if o != Outcome::NoResponse && self.events.is_empty() => Err(Error::Invalid(format!(
                "{}: outcome {} without any response",
                self.company,
                o.as_str()
            ))),
            _ => Ok(()),
        }
    }
}

/// C = 5·m_pre + 2·m_post + 10·a_online + 30·a_offline.
pub fn workload_score(w: &WorkloadInputs) -> u64 {
    5 * u64::from(w.m_pre) + 2 * u64::from(w.m_post) + 10 * u64::from(w.a_online) + 30 * u64::from(w.a_offline)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeadlineMode {
    /// 30 calendar days, moved forward off weekends and holidays.
    Calendar,
    /// 30 working days.
    Business,
}

/// Non-working days besides weekends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HolidayCalendar {
    None,
    /// Public holidays observed in every German state.
    #[default]
    GermanyNational,
}

/// Easter Sunday (Gregorian), anonymous computus.
pub fn easter_sunday(year: i32) -> NaiveDate {
    let a = year % 19;
    let b = year / 100;
    let c = year % 100;
    let d = b / 4;
    let e = b % 4;
    let f = (b + 8) / 25;
    let g = (b - f + 1) / 3;
    let h = (19 * a + b - d - g + 15) % 30;
    let i = c / 4;
    let k = c % 4;
    let l = (32 + 2 * e + 2 * i - h - k) % 7;
    let m = (a + 11 * h + 22 * l) / 451;
    let month = (h + l - 7 * m + 114) / 31;
    let day = (h + l - 7 * m + 114) % 31 + 1;
    NaiveDate::from_ymd_opt(year, month as u32, day as u32).expect("computus yields a valid date")
}

impl HolidayCalendar {
    pub fn is_holiday(self, date: NaiveDate) -> bool {
        match self {
            HolidayCalendar::None => false,
            HolidayCalendar::GermanyNational => {
                let fixed = [(1, 1), (5, 1), (10, 3), (12, 25), (12, 26)];
                if fixed.contains(&(date.month(), date.day())) {
                    return true;
                }
                let offset = (date - easter_sunday(date.year())).num_days();
                // Good Friday, Easter Monday, Ascension, Whit Monday
                [-2, 1, 39, 50].contains(&offset)
            }
        }
    }

    pub fn is_working_day(self, date: NaiveDate) -> bool {
        !matches!(date.weekday(), Weekday::Sat | Weekday::Sun) && !self.is_holiday(date)
    }
}

/// Deadline for an inquiry sent on `sent`, with German public holidays as
/// non-working days.
pub fn legal_deadline(sent: NaiveDate, mode: DeadlineMode) -> NaiveDate {
    legal_deadline_with(sent, mode, HolidayCalendar::default())
}

pub fn legal_deadline_with(sent: NaiveDate, mode: DeadlineMode, holidays: HolidayCalendar) -> NaiveDate {
    let next = |d: NaiveDate| d.checked_add_days(Days::new(1)).expect("date in range");
    match mode {
        DeadlineMode::Calendar => {
            let mut d = sent
                .checked_add_days(Days::new(RESPONSE_PERIOD_DAYS))
                .expect("date in range");
            while !holidays.is_working_day(d) {
                d = next(d);
            }
            d
        }
        DeadlineMode::Business => {
            let mut d = sent;
            let mut counted = 0;
            while counted < RESPONSE_PERIOD_DAYS {
                d = next(d);
                if holidays.is_working_day(d) {
                    counted += 1;
                }
            }
            d
        }
    }
}

/// Status of a case as of `deadline` (inclusive).
///
/// A case without any response is `no_response`. Otherwise the latest
/// status-bearing response on or before the deadline decides, with
/// same-day ties resolved as access_denied > got_access > no_data_stored >
/// in_process; if there is none yet the case is `in_process`.
pub fn classify_outcome(case: &InquiryCase, deadline: NaiveDate) -> Outcome {
    if case.events.is_empty() {
        return Outcome::NoResponse;
    }
    case.events
        .iter()
        .filter(|e| e.date <= deadline)
        .filter_map(|e| e.status.map(|s| (e.date, s.precedence(), s)))
        .max()
        .map_or(Outcome::InProcess, |(_, _, s)| s)
}

/// Number of cases per outcome at each case's deadline; every outcome is
/// present in the map.
pub fn outcome_counts(
    cases: &[InquiryCase],
    mode: DeadlineMode,
    holidays: HolidayCalendar,
) -> BTreeMap<Outcome, usize> {
    let mut counts: BTreeMap<Outcome, usize> = Outcome::ALL.iter().map(|&o| (o, 0)).collect();
    for c in cases {
        let deadline = legal_deadline_with(c.sent_date, mode, holidays);
        *counts.entry(classify_outcome(c, deadline)).or_insert(0) += 1;
    }
    counts
}

/// One row of the per-case summary (response timing, workload, outcomes).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseSummary {
    pub company: String,
    pub channel: Channel,
    pub sent_date: NaiveDate,
    pub calendar_deadline: NaiveDate,
    pub business_deadline: NaiveDate,
    pub first_response_date: Option<NaiveDate>,
    pub days_to_first_response: Option<i64>,
    pub workload_score: u64,
    pub outcome_calendar: Outcome,
    pub outcome_business: Outcome,
}

pub fn summarize(case: &InquiryCase, holidays: HolidayCalendar) -> CaseSummary {
    let calendar_deadline = legal_deadline_with(case.sent_date, DeadlineMode::Calendar, holidays);
    let business_deadline = legal_deadline_with(case.sent_date, DeadlineMode::Business, holidays);
    let first = case.events.iter().map(|e| e.date).min();
    CaseSummary {
        company: case.company.clone(),
        channel: case.channel,
        sent_date: case.sent_date,
        calendar_deadline,
        business_deadline,
        first_response_date: first,
        days_to_first_response: first.map(|d| (d - case.sent_date).num_days()),
        workload_score: workload_score(&case.workload),
        outcome_calendar: classify_outcome(case, calendar_deadline),
        outcome_business: classify_outcome(case, business_deadline),
    }
}
