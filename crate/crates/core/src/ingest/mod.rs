//! Getting traces and prices into memory.

pub mod price;
pub mod rpc;
pub mod sample;
pub mod trace_file;

pub use price::{parse_price_csv, PriceBar};
pub use rpc::{fetch_blocks, RpcClient, RpcConfig, RpcError, RPC_URL_ENV};
pub use sample::{day_ranges_from_blocks, parse_day_ranges_csv, plan_samples, DayRanges, SamplePlan};
pub use trace_file::{emit_trace_file, parse_trace_file, read_trace_file, write_block, TraceReader};
