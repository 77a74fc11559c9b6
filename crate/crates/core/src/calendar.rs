//! Date helpers shared by the metrics, evaluation and backtest modules.

use chrono::{Datelike, Duration, Months, NaiveDate};

use crate::error::{Error, Result};

/// Last calendar day of the month containing `date`.
pub fn month_end(date: NaiveDate) -> NaiveDate {
    let first = date.with_day(1).expect("day 1 exists");
    let next = first + Months::new(1);
    next - Duration::days(1)
}

/// Month-end of the month following `date`.
pub fn next_month_end(date: NaiveDate) -> NaiveDate {
    month_end(date.with_day(1).expect("day 1 exists") + Months::new(1))
}

pub fn months_before(date: NaiveDate, months: u32) -> NaiveDate {
    date.checked_sub_months(Months::new(months))
        .expect("date arithmetic stays within chrono's range")
}

/// Parses `YYYY-MM-DD`, or `YYYY-MM` as the last day of that month.
pub fn parse_as_of(text: &str) -> Result<NaiveDate> {
    let text = text.trim();
    if let Ok(date) = NaiveDate::parse_from_str(text, "%Y-%m-%d") {
        return Ok(date);
    }
    NaiveDate::parse_from_str(&format!("{text}-01"), "%Y-%m-%d")
        .map(month_end)
        .map_err(|_| Error::InvalidArgument(format!("'{text}' is not a YYYY-MM-DD or YYYY-MM date")))
}

/// Month-end dates from the month of `start` through the month of `end`, inclusive.
pub fn month_ends(start: NaiveDate, end: NaiveDate) -> Vec<NaiveDate> {
    let mut out = Vec::new();
    let mut current = month_end(start);
    let last = month_end(end);
    while current <= last {
        out.push(current);
        current = next_month_end(current);
    }
    out
}

/// Run dates every 14 days from `start` up to and including `end`.
pub fn biweekly(start: NaiveDate, end: NaiveDate) -> Vec<NaiveDate> {
    let mut out = Vec::new();
    let mut current = start;
    while current <= end {
        out.push(current);
        current += Duration::days(14);
    }
    out
}

/// Index of the last calendar entry on or before `date`.
pub fn on_or_before(calendar: &[NaiveDate], date: NaiveDate) -> Option<usize> {
    match calendar.binary_search(&date) {
        Ok(i) => Some(i),
        Err(0) => None,
        Err(i) => Some(i - 1),
    }
}

/// Index of the calendar entry closest to `date`; ties go to the earlier day.
pub fn nearest(calendar: &[NaiveDate], date: NaiveDate) -> Option<usize> {
    match calendar.binary_search(&date) {
        Ok(i) => Some(i),
        Err(_) if calendar.is_empty() => None,
        Err(0) => Some(0),
        Err(i) if i == calendar.len() => Some(i - 1),
        Err(i) => {
            let before = date - calendar[i - 1];
            let after = calendar[i] - date;
            Some(if after < before { i } else { i - 1 })
        }
    }
}
