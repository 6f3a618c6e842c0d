//! Counting pass over one party's transcript, plus the text rendering
//! behind the `report` subcommand.

use std::fmt;

use passport_core::protocol::{Direction, Ledger, LedgerRecord};
use serde::Serialize;

/// Record counts and the link graph, extracted from a single ledger.
#[derive(Debug, Default, Clone, PartialEq, Eq, Serialize)]
pub struct TranscriptReport {
    pub records: u64,
    /// Own updates committed and sent.
    pub commits_sent: u64,
    /// Peer commitments received (each carries a verification verdict).
    pub commitments_received: u64,
    pub verified_ok: u64,
    pub verified_failed: u64,
    pub challenges: u64,
    pub responses_sent: u64,
    pub responses_received: u64,
    pub invalid_responses: u64,
    /// Chain edges discovered from opened previous-hash cells: (from, to).
    pub links: Vec<(u64, u64)>,
    pub exceptions: u64,
    pub invalid_exceptions: u64,
    pub decisions: u64,
}

impl TranscriptReport {
    pub fn scan(ledger: &Ledger) -> TranscriptReport {
        let mut report = TranscriptReport::default();
        for record in ledger.records() {
            report.records += 1;
            match record {
                LedgerRecord::Commit { .. } => report.commits_sent += 1,
                LedgerRecord::Verify { result, .. } => {
                    report.commitments_received += 1;
                    if *result {
                        report.verified_ok += 1;
                    } else {
                        report.verified_failed += 1;
                    }
                }
                LedgerRecord::Challenge { .. } => report.challenges += 1,
                LedgerRecord::Response {
                    direction, valid, ..
                } => match direction {
                    Direction::Sent => report.responses_sent += 1,
                    Direction::Received => {
                        report.responses_received += 1;
                        if !valid {
                            report.invalid_responses += 1;
                        }
                    }
                },
                LedgerRecord::Link { from, to } => report.links.push((*from, *to)),
                LedgerRecord::Exception { valid, .. } => {
                    report.exceptions += 1;
                    if !valid {
                        report.invalid_exceptions += 1;
                    }
                }
                LedgerRecord::Decision { .. } => report.decisions += 1,
            }
        }
        report
    }

    /// All commitments the transcript knows about, own and received.
    pub fn commitments(&self) -> u64 {
        self.commits_sent + self.commitments_received
    }

    /// True when nothing in the transcript failed a check: no failed
    /// verifications, no invalid responses, no malformed exceptions.
    pub fn clean(&self) -> bool {
        self.verified_failed == 0 && self.invalid_responses == 0 && self.invalid_exceptions == 0
    }
}

impl fmt::Display for TranscriptReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "records:             {}", self.records)?;
        writeln!(
            f,
            "commitments:         {} ({} sent, {} received)",
            self.commitments(),
            self.commits_sent,
            self.commitments_received
        )?;
        writeln!(
            f,
            "verifications:       {} ok, {} failed",
            self.verified_ok, self.verified_failed
        )?;
        writeln!(f, "challenges issued:   {}", self.challenges)?;
        writeln!(
            f,
            "responses:           {} sent, {} received ({} invalid)",
            self.responses_sent, self.responses_received, self.invalid_responses
        )?;
        writeln!(f, "links discovered:    {}", self.links.len())?;
        writeln!(
            f,
            "exceptions:          {} ({} invalid)",
            self.exceptions, self.invalid_exceptions
        )?;
        writeln!(f, "decisions:           {}", self.decisions)?;
        writeln!(f, "link graph:")?;
        if self.links.is_empty() {
            write!(f, "  (none)")?;
        } else {
            for (i, (from, to)) in self.links.iter().enumerate() {
                if i > 0 {
                    writeln!(f)?;
                }
                write!(f, "  C{from} -> C{to}")?;
            }
        }
        Ok(())
    }
}
