//! Trace retrieval from an archive node over JSON-RPC.
//!
//! Three requests are made per block: the header (timestamp, gas), the
//! receipts (per-transaction gas and endpoints) and the flat call traces,
//! which are reassembled into one call tree per transaction using each
//! trace's `traceAddress`.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde_json::{json, Value};
use thiserror::Error;

use crate::trace::{Address, BlockTrace, CallFrame, CallKind, Calldata, Transaction, TxHash};

/// Environment variable holding the default endpoint.
pub const RPC_URL_ENV: &str = "TXPARALLAX_RPC_URL";

#[derive(Debug, Error)]
pub enum RpcError {
    #[error("network failure after {attempts} attempts: {message}")]
    Network { attempts: u32, message: String },

    #[error("block {0} not found")]
    NotFound(u64),

    #[error("node does not support `{method}`: {message}")]
    Unsupported { method: String, message: String },

    #[error("node error {code}: {message}")]
    Node { code: i64, message: String },

    #[error("unexpected response: {0}")]
    Protocol(String),
}

#[derive(Debug, Clone)]
pub struct RpcConfig {
    pub block_method: String,
    pub receipts_method: String,
    pub trace_method: String,
    pub max_attempts: u32,
    pub initial_backoff: Duration,
    pub max_backoff: Duration,
    pub timeout: Duration,
}

impl Default for RpcConfig {
    fn default() -> Self {
        RpcConfig {
            block_method: "eth_getBlockByNumber".into(),
            receipts_method: "eth_getBlockReceipts".into(),
            trace_method: "trace_block".into(),
            max_attempts: 5,
            initial_backoff: Duration::from_millis(250),
            max_backoff: Duration::from_secs(8),
            timeout: Duration::from_secs(60),
        }
    }
}

pub struct RpcClient {
    endpoint: String,
    agent: ureq::Agent,
    config: RpcConfig,
    next_id: AtomicUsize,
}

enum Attempt {
    Retry(String),
    Fail(RpcError),
}

fn quantity(v: &Value, what: &str) -> Result<u64, RpcError> {
    let s = v
        .as_str()
        .ok_or_else(|| RpcError::Protocol(format!("{what}: expected hex quantity, got {v}")))?;
    let digits = s.strip_prefix("0x").unwrap_or(s);
    u64::from_str_radix(digits, 16).map_err(|e| RpcError::Protocol(format!("{what}: {e}")))
}

fn address(v: &Value, what: &str) -> Result<Address, RpcError> {
    v.as_str()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| RpcError::Protocol(format!("{what}: expected address, got {v}")))
}

fn bytes(v: &Value) -> Vec<u8> {
    v.as_str()
        .and_then(|s| hex::decode(s.trim_start_matches("0x")).ok())
        .unwrap_or_default()
}

fn is_nonzero(v: &Value) -> bool {
    v.as_str()
        .map(|s| s.trim_start_matches("0x").chars().any(|c| c != '0'))
        .unwrap_or(false)
}

impl RpcClient {
    pub fn new(endpoint: impl Into<String>, config: RpcConfig) -> RpcClient {
        let agent = ureq::AgentBuilder::new().timeout(config.timeout).build();
        RpcClient {
            endpoint: endpoint.into(),
            agent,
            config,
            next_id: AtomicUsize::new(1),
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn attempt(&self, body: &Value, method: &str) -> Result<Value, Attempt> {
        let response = match self.agent.post(&self.endpoint).send_json(body) {
            Ok(r) => r,
            Err(ureq::Error::Status(code, _)) if code == 429 || code >= 500 => {
                return Err(Attempt::Retry(format!("HTTP {code}")));
            }
            Err(ureq::Error::Status(code, r)) => {
                let text = r.into_string().unwrap_or_default();
                return Err(Attempt::Fail(RpcError::Protocol(format!("HTTP {code}: {text}"))));
            }
            Err(ureq::Error::Transport(t)) => return Err(Attempt::Retry(t.to_string())),
        };
        let reply: Value = response
            .into_json()
            .map_err(|e| Attempt::Retry(format!("reading response: {e}")))?;
        if let Some(err) = reply.get("error") {
            let code = err.get("code").and_then(Value::as_i64).unwrap_or(0);
            let message = err.get("message").and_then(Value::as_str).unwrap_or("").to_string();
            let lower = message.to_lowercase();
            if code == -32601 || lower.contains("method not found") || lower.contains("does not exist/is not available")
            {
                return Err(Attempt::Fail(RpcError::Unsupported {
                    method: method.to_string(),
                    message,
                }));
            }
            return Err(Attempt::Fail(RpcError::Node { code, message }));
        }
        reply
            .get("result")
            .cloned()
            .ok_or_else(|| Attempt::Fail(RpcError::Protocol("reply has neither result nor error".into())))
    }

    /// One JSON-RPC call with bounded exponential backoff on transient failures.
    pub fn call(&self, method: &str, params: Value) -> Result<Value, RpcError> {
        let body = json!({
            "jsonrpc": "2.0",
            "id": self.next_id.fetch_add(1, Ordering::Relaxed),
            "method": method,
            "params": params,
        });
        let mut backoff = self.config.initial_backoff;
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(&body, method) {
                Ok(v) => return Ok(v),
                Err(Attempt::Fail(e)) => return Err(e),
                Err(Attempt::Retry(message)) if attempts >= self.config.max_attempts => {
                    return Err(RpcError::Network { attempts, message });
                }
                Err(Attempt::Retry(_)) => {
                    thread::sleep(backoff);
                    backoff = (backoff * 2).min(self.config.max_backoff);
                }
            }
        }
    }

    pub fn fetch_block_trace(&self, number: u64) -> Result<BlockTrace, RpcError> {
        let tag = format!("{number:#x}");
        let header = self.call(&self.config.block_method, json!([tag, false]))?;
        if header.is_null() {
            return Err(RpcError::NotFound(number));
        }
        let timestamp = quantity(&header["timestamp"], "block timestamp")?;
        let gas_used = quantity(&header["gasUsed"], "block gasUsed")?;
        let receipts = self.call(&self.config.receipts_method, json!([tag]))?;
        let traces = self.call(&self.config.trace_method, json!([tag]))?;
        let block = assemble_block(number, timestamp, gas_used, &receipts, &traces)?;
        block.validate().map_err(|e| RpcError::Protocol(e.to_string()))?;
        Ok(block)
    }
}

/// Maps one flat trace to a frame; `None` for entries without a call
/// (block rewards, failed creations).
fn trace_frame(trace: &Value, top_level: bool) -> Result<Option<CallFrame>, RpcError> {
    let action = &trace["action"];
    let gas_used = match trace["result"].get("gasUsed") {
        Some(v) => quantity(v, "trace gasUsed")?,
        None => 0,
    };
    let frame = match trace["type"].as_str().unwrap_or_default() {
        "call" => {
            let from = address(&action["from"], "call from")?;
            let to = address(&action["to"], "call to")?;
            let input = bytes(&action["input"]);
            let kind = match action["callType"].as_str().unwrap_or("call") {
                "delegatecall" => CallKind::DelegateCall,
                "staticcall" => CallKind::StaticCall,
                "callcode" => CallKind::CallCode,
                _ if input.is_empty() && (top_level || is_nonzero(&action["value"])) => CallKind::Transfer,
                _ => CallKind::Call,
            };
            CallFrame {
                kind,
                from,
                to,
                gas_used,
                input: Calldata::truncated(&input),
                children: Vec::new(),
            }
        }
        "create" | "create2" => {
            let Some(created) = trace["result"].get("address") else {
                return Ok(None);
            };
            CallFrame::new(
                CallKind::Call,
                address(&action["from"], "create from")?,
                address(created, "created address")?,
                gas_used,
            )
        }
        "suicide" | "selfdestruct" => CallFrame::new(
            CallKind::Transfer,
            address(&action["address"], "selfdestruct address")?,
            address(&action["refundAddress"], "refund address")?,
            0,
        ),
        _ => return Ok(None),
    };
    Ok(Some(frame))
}

/// Rebuilds the call tree of one transaction from its `(traceAddress, frame)`
/// pairs.
fn build_tree(mut frames: Vec<(Vec<usize>, CallFrame)>, hash: TxHash) -> Result<CallFrame, RpcError> {
    frames.sort_by(|a, b| a.0.cmp(&b.0));
    let mut stack: Vec<CallFrame> = Vec::new();
    for (path, frame) in frames {
        while stack.len() > path.len() {
            let child = stack.pop().unwrap();
            stack.last_mut().unwrap().children.push(child);
        }
        if stack.len() != path.len() {
            return Err(RpcError::Protocol(format!("{hash}: trace {path:?} has no parent")));
        }
        stack.push(frame);
    }
    while stack.len() > 1 {
        let child = stack.pop().unwrap();
        stack.last_mut().unwrap().children.push(child);
    }
    stack
        .pop()
        .ok_or_else(|| RpcError::Protocol(format!("{hash}: no root trace")))
}

pub(crate) fn assemble_block(
    number: u64,
    timestamp: u64,
    gas_used: u64,
    receipts: &Value,
    traces: &Value,
) -> Result<BlockTrace, RpcError> {
    let receipts = receipts
        .as_array()
        .ok_or_else(|| RpcError::Protocol("receipts: expected an array".into()))?;
    let traces = traces
        .as_array()
        .ok_or_else(|| RpcError::Protocol("traces: expected an array".into()))?;

    let mut per_tx: Vec<Vec<(Vec<usize>, CallFrame)>> = vec![Vec::new(); receipts.len()];
    for trace in traces {
        let Some(position) = trace.get("transactionPosition").and_then(Value::as_u64) else {
            continue;
        };
        let path: Vec<usize> = trace["traceAddress"]
            .as_array()
            .map(|a| a.iter().filter_map(Value::as_u64).map(|i| i as usize).collect())
            .unwrap_or_default();
        let slot = per_tx
            .get_mut(position as usize)
            .ok_or_else(|| RpcError::Protocol(format!("trace for unknown transaction {position}")))?;
        if let Some(frame) = trace_frame(trace, path.is_empty())? {
            slot.push((path, frame));
        }
    }

    let mut transactions = Vec::with_capacity(receipts.len());
    for (receipt, frames) in receipts.iter().zip(per_tx) {
        let hash: TxHash = receipt["transactionHash"]
            .as_str()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| RpcError::Protocol("receipt without transactionHash".into()))?;
        let sender = address(&receipt["from"], "receipt from")?;
        let recipient = match &receipt["to"] {
            Value::Null => None,
            v => Some(address(v, "receipt to")?),
        };
        let tx_gas = quantity(&receipt["gasUsed"], "receipt gasUsed")?;
        let root_call = if frames.is_empty() {
            // Untraced transaction: fall back to its envelope.
            let to = match (recipient, &receipt["contractAddress"]) {
                (Some(to), _) => to,
                (None, v) => address(v, "receipt contractAddress")?,
            };
            CallFrame::new(CallKind::Transfer, sender, to, 0)
        } else {
            build_tree(frames, hash)?
        };
        transactions.push(Transaction {
            hash,
            sender,
            recipient,
            gas_used: tx_gas,
            root_call,
        });
    }
    Ok(BlockTrace {
        number,
        timestamp,
        gas_used,
        transactions,
    })
}

/// Fetches blocks with at most `concurrency` requests in flight; results
/// come back in input order.
pub fn fetch_blocks(client: &RpcClient, numbers: &[u64], concurrency: usize) -> Vec<Result<BlockTrace, RpcError>> {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<BlockTrace, RpcError>>>> =
        Mutex::new((0..numbers.len()).map(|_| None).collect());
    thread::scope(|scope| {
        for _ in 0..concurrency.clamp(1, numbers.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&number) = numbers.get(i) else { break };
                let result = client.fetch_block_trace(number);
                results.lock().unwrap()[i] = Some(result);
            });
        }
    });
    results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every index fetched"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(n: u8) -> String {
        format!("0x{}", hex::encode([n; 20]))
    }

    fn h(n: u8) -> String {
        format!("0x{}", hex::encode([n; 32]))
    }

    #[test]
    fn flat_traces_become_trees() {
        let receipts = json!([
            {"transactionHash": h(1), "from": a(1), "to": a(2), "gasUsed": "0x7530", "contractAddress": null},
            {"transactionHash": h(2), "from": a(3), "to": null, "gasUsed": "0x5208", "contractAddress": a(9)},
        ]);
        let traces = json!([
            {"type": "call", "action": {"callType": "call", "from": a(1), "to": a(2), "input": "0xa9059cbb", "value": "0x0"},
             "result": {"gasUsed": "0x100"}, "traceAddress": [], "transactionPosition": 0},
            {"type": "call", "action": {"callType": "staticcall", "from": a(2), "to": a(4), "input": "0x", "value": "0x0"},
             "result": {"gasUsed": "0x10"}, "traceAddress": [0], "transactionPosition": 0},
            {"type": "call", "action": {"callType": "delegatecall", "from": a(2), "to": a(5), "input": "0x12", "value": "0x0"},
             "result": {"gasUsed": "0x20"}, "traceAddress": [1], "transactionPosition": 0},
            {"type": "call", "action": {"callType": "call", "from": a(2), "to": a(6), "input": "0x", "value": "0x1"},
             "result": {"gasUsed": "0x0"}, "traceAddress": [1, 0], "transactionPosition": 0},
            {"type": "create", "action": {"from": a(3), "value": "0x0", "init": "0x6080"},
             "result": {"gasUsed": "0x50", "address": a(9)}, "traceAddress": [], "transactionPosition": 1},
            {"type": "reward", "action": {"author": a(7), "value": "0x1"}, "traceAddress": []},
        ]);
        let block = assemble_block(10, 99, 0x7530 + 0x5208, &receipts, &traces).unwrap();
        block.validate().unwrap();
        let root = &block.transactions[0].root_call;
        assert_eq!(root.kind, CallKind::Call);
        assert_eq!(root.gas_used, 0x100);
        assert_eq!(root.children.len(), 2);
        assert_eq!(root.children[0].kind, CallKind::StaticCall);
        assert_eq!(root.children[1].kind, CallKind::DelegateCall);
        assert_eq!(root.children[1].children[0].kind, CallKind::Transfer);
        let create = &block.transactions[1];
        assert_eq!(create.recipient, None);
        assert_eq!(create.root_call.to.to_string(), a(9));
    }

    #[test]
    fn orphan_trace_is_rejected() {
        let receipts = json!([{"transactionHash": h(1), "from": a(1), "to": a(2), "gasUsed": "0x1"}]);
        let traces = json!([
            {"type": "call", "action": {"callType": "call", "from": a(1), "to": a(2), "input": "0x", "value": "0x0"},
             "result": {"gasUsed": "0x1"}, "traceAddress": [0, 0], "transactionPosition": 0},
        ]);
        assert!(matches!(
            assemble_block(1, 1, 1, &receipts, &traces),
            Err(RpcError::Protocol(_))
        ));
    }
}
