//! Correctness checking and benchmarking of the application's pages.

pub mod bench;
pub mod stats;
pub mod summary;
pub mod verify;

pub use bench::{bench, load_test, BenchConfig, BenchReport, BenchRow, Sample};
pub use stats::Stats;
pub use summary::{compare, expected_summary, summarize_page, PageSummary, SummaryDiff, SummaryError};
pub use verify::{check_page, pages_to_check, verify, Failure, VerifyReport, DEFAULT_SAMPLE};
