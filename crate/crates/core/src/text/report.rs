use serde::Serialize;

use crate::measure::InconsistencyReport;
use crate::model::Tid;

#[derive(Serialize)]
struct Fraction {
    num: u64,
    den: u64,
}

#[derive(Serialize)]
struct NormalizerJson<'a> {
    kind: &'a str,
    size: usize,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    semantics: &'a str,
    measure: Fraction,
    decimal: String,
    irreparable: bool,
    normalizer: NormalizerJson<'a>,
    min_deletions: Option<usize>,
    witnesses: Vec<Vec<Tid>>,
    repair_count_found: usize,
    truncated: bool,
}

/// Pretty JSON with a fixed key order. Witnesses are deleted-tid lists in
/// lexicographic order.
pub fn serialize_report(report: &InconsistencyReport) -> String {
    let mut witnesses: Vec<Vec<Tid>> = report.witnesses.iter().map(|r| r.deleted.clone()).collect();
    witnesses.sort();
    let json = ReportJson {
        semantics: report.semantics.as_str(),
        measure: Fraction {
            num: report.numerator,
            den: report.denominator,
        },
        decimal: report.decimal(),
        irreparable: report.irreparable,
        normalizer: NormalizerJson {
            kind: report.normalizer.as_str(),
            size: report.normalizer_size,
        },
        min_deletions: report.min_deletions,
        witnesses,
        repair_count_found: report.repair_count_found,
        truncated: report.truncated,
    };
    serde_json::to_string_pretty(&json).expect("plain data serializes")
}

/// `num/den` to at most ten significant digits, rounded half up, without
/// trailing zeros. Computed by exact long division.
pub fn decimal_string(num: u64, den: u64) -> String {
    assert!(den > 0, "zero denominator");
    const SIGNIFICANT: usize = 10;
    let (num, den) = (num as u128, den as u128);
    let mut int_digits: Vec<u8> = (num / den).to_string().bytes().map(|b| b - b'0').collect();
    let mut rem = num % den;
    let mut frac: Vec<u8> = Vec::new();
    let mut significant = if int_digits == [0] { 0 } else { int_digits.len() };
    while significant < SIGNIFICANT && rem != 0 {
        rem *= 10;
        let d = (rem / den) as u8;
        rem %= den;
        if significant > 0 || d != 0 {
            significant += 1;
        }
        frac.push(d);
    }
    if rem != 0 && rem * 2 >= den {
        // round the last produced digit up, carrying leftwards
        let mut carry = true;
        for d in frac.iter_mut().rev().chain(int_digits.iter_mut().rev()) {
            if *d == 9 {
                *d = 0;
            } else {
                *d += 1;
                carry = false;
                break;
            }
        }
        if carry {
            int_digits.insert(0, 1);
        }
    }
    while frac.last() == Some(&0) {
        frac.pop();
    }
    let mut out: String = int_digits.iter().map(|d| char::from(b'0' + d)).collect();
    if !frac.is_empty() {
        out.push('.');
        out.extend(frac.iter().map(|d| char::from(b'0' + d)));
    }
    out
}
