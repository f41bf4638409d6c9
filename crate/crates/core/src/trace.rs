//! Call-trace domain model.
//!
//! A [`BlockTrace`] holds the executed transactions of one block in on-chain
//! order. Each [`Transaction`] carries the call tree recorded by a tracing
//! node, reduced to what conflict analysis needs: call kind, endpoints, gas
//! and a calldata prefix long enough to decode ERC-20 arguments.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::disentangle::VirtualCell;
use crate::error::{Error, Result};

/// Calldata bytes kept per call: a 4-byte selector and three 32-byte words.
pub const CALLDATA_PREFIX_LEN: usize = 100;

fn parse_hex_fixed<const N: usize>(s: &str) -> Option<[u8; N]> {
    let digits = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X"))?;
    let mut out = [0u8; N];
    hex::decode_to_slice(digits, &mut out).ok()?;
    Some(out)
}

/// 20-byte account or contract address.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Address(pub [u8; 20]);

impl Address {
    pub const ZERO: Address = Address([0; 20]);

    pub fn as_bytes(&self) -> &[u8; 20] {
        &self.0
    }

    /// Address stored in the low 20 bytes of an ABI-encoded 32-byte word.
    pub fn from_word(word: &[u8]) -> Option<Address> {
        if word.len() != 32 {
            return None;
        }
        let mut out = [0u8; 20];
        out.copy_from_slice(&word[12..]);
        Some(Address(out))
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", hex::encode(self.0))
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Address {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_hex_fixed(s)
            .map(Address)
            .ok_or_else(|| Error::InvalidArgument(format!("not a 20-byte hex address: {s:?}")))
    }
}

/// 32-byte transaction hash.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TxHash(pub [u8; 32]);

impl fmt::Display for TxHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", hex::encode(self.0))
    }
}

impl fmt::Debug for TxHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for TxHash {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_hex_fixed(s)
            .map(TxHash)
            .ok_or_else(|| Error::InvalidArgument(format!("not a 32-byte hex hash: {s:?}")))
    }
}

macro_rules! hex_string_serde {
    ($ty:ty) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
                serializer.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
                let s = <std::borrow::Cow<'de, str>>::deserialize(deserializer)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

hex_string_serde!(Address);
hex_string_serde!(TxHash);

/// Leading bytes of a call's input data.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Calldata(Vec<u8>);

impl Calldata {
    /// Keeps at most [`CALLDATA_PREFIX_LEN`] bytes.
    pub fn truncated(bytes: &[u8]) -> Calldata {
        Calldata(bytes[..bytes.len().min(CALLDATA_PREFIX_LEN)].to_vec())
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn selector(&self) -> Option<[u8; 4]> {
        self.0.get(..4).map(|s| [s[0], s[1], s[2], s[3]])
    }

    /// The `index`-th 32-byte argument word, if present in the prefix.
    pub fn word(&self, index: usize) -> Option<&[u8]> {
        let start = 4 + 32 * index;
        self.0.get(start..start + 32)
    }
}

impl fmt::Debug for Calldata {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", hex::encode(&self.0))
    }
}

impl Serialize for Calldata {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(&format_args!("0x{}", hex::encode(&self.0)))
    }
}

impl<'de> Deserialize<'de> for Calldata {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = <std::borrow::Cow<'de, str>>::deserialize(deserializer)?;
        let digits = s
            .strip_prefix("0x")
            .ok_or_else(|| serde::de::Error::custom("calldata must start with 0x"))?;
        let bytes = hex::decode(digits).map_err(serde::de::Error::custom)?;
        Ok(Calldata::truncated(&bytes))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CallKind {
    Call,
    #[serde(rename = "delegatecall")]
    DelegateCall,
    #[serde(rename = "staticcall")]
    StaticCall,
    #[serde(rename = "callcode")]
    CallCode,
    /// Plain value transfer: no calldata, balances of both endpoints change.
    Transfer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallFrame {
    pub kind: CallKind,
    pub from: Address,
    pub to: Address,
    #[serde(rename = "gasUsed")]
    pub gas_used: u64,
    pub input: Calldata,
    #[serde(rename = "calls", default)]
    pub children: Vec<CallFrame>,
}

impl CallFrame {
    pub fn new(kind: CallKind, from: Address, to: Address, gas_used: u64) -> CallFrame {
        CallFrame {
            kind,
            from,
            to,
            gas_used,
            input: Calldata::default(),
            children: Vec::new(),
        }
    }

    pub fn with_input(mut self, input: &[u8]) -> CallFrame {
        self.input = Calldata::truncated(input);
        self
    }

    pub fn with_children(mut self, children: Vec<CallFrame>) -> CallFrame {
        self.children = children;
        self
    }

    /// Access scopes of this frame alone, ignoring children.
    pub fn scopes(&self) -> Vec<AccessScope> {
        derive_scopes(self)
    }

    /// Pre-order walk over this frame and all descendants.
    pub fn walk(&self) -> FrameWalk<'_> {
        FrameWalk { stack: vec![self] }
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(CallFrame::depth).max().unwrap_or(0)
    }
}

pub struct FrameWalk<'a> {
    stack: Vec<&'a CallFrame>,
}

impl<'a> Iterator for FrameWalk<'a> {
    type Item = &'a CallFrame;

    fn next(&mut self) -> Option<&'a CallFrame> {
        let frame = self.stack.pop()?;
        self.stack.extend(frame.children.iter().rev());
        Some(frame)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub hash: TxHash,
    #[serde(rename = "from")]
    pub sender: Address,
    /// `None` for contract creation.
    #[serde(rename = "to")]
    pub recipient: Option<Address>,
    #[serde(rename = "gasUsed")]
    pub gas_used: u64,
    #[serde(rename = "calls", with = "single_call")]
    pub root_call: CallFrame,
}

mod single_call {
    use super::CallFrame;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(frame: &CallFrame, s: S) -> Result<S::Ok, S::Error> {
        std::slice::from_ref(frame).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CallFrame, D::Error> {
        let mut calls = Vec::<CallFrame>::deserialize(d)?;
        if calls.len() != 1 {
            return Err(serde::de::Error::custom(format!(
                "transaction must have exactly one root call, found {}",
                calls.len()
            )));
        }
        Ok(calls.pop().unwrap())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockTrace {
    pub number: u64,
    pub timestamp: u64,
    #[serde(rename = "gasUsed")]
    pub gas_used: u64,
    #[serde(rename = "txs")]
    pub transactions: Vec<Transaction>,
}

impl BlockTrace {
    /// Checks the block-level and per-transaction invariants.
    pub fn validate(&self) -> Result<()> {
        let invalid = |field, message: String| Error::InvalidBlock {
            block: self.number,
            field,
            message,
        };
        let mut sum: u64 = 0;
        for (position, tx) in self.transactions.iter().enumerate() {
            if tx.gas_used == 0 {
                return Err(invalid("gasUsed", format!("transaction {} used no gas", tx.hash)));
            }
            if tx.root_call.from != tx.sender {
                return Err(invalid(
                    "from",
                    format!(
                        "transaction {} at position {position}: root call from {} differs from sender {}",
                        tx.hash, tx.root_call.from, tx.sender
                    ),
                ));
            }
            sum = sum
                .checked_add(tx.gas_used)
                .ok_or_else(|| invalid("gasUsed", "transaction gas overflows u64".into()))?;
        }
        if sum != self.gas_used {
            return Err(invalid(
                "gasUsed",
                format!("block declares {} but transactions sum to {sum}", self.gas_used),
            ));
        }
        Ok(())
    }

    pub fn heaviest_tx_gas(&self) -> u64 {
        self.transactions.iter().map(|tx| tx.gas_used).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccessMode {
    Read,
    Write,
}

/// What a scope refers to: a whole contract/account or a single token cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ScopeTarget {
    Address(Address),
    Cell(VirtualCell),
}

impl From<Address> for ScopeTarget {
    fn from(address: Address) -> Self {
        ScopeTarget::Address(address)
    }
}

impl From<VirtualCell> for ScopeTarget {
    fn from(cell: VirtualCell) -> Self {
        ScopeTarget::Cell(cell)
    }
}

impl fmt::Display for ScopeTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScopeTarget::Address(a) => a.fmt(f),
            ScopeTarget::Cell(c) => c.fmt(f),
        }
    }
}

impl Serialize for ScopeTarget {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AccessScope {
    pub target: ScopeTarget,
    pub mode: AccessMode,
}

impl AccessScope {
    pub fn read(target: impl Into<ScopeTarget>) -> AccessScope {
        AccessScope {
            target: target.into(),
            mode: AccessMode::Read,
        }
    }

    pub fn write(target: impl Into<ScopeTarget>) -> AccessScope {
        AccessScope {
            target: target.into(),
            mode: AccessMode::Write,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConflictMode {
    /// Shared target with at least one write.
    #[default]
    WriteAware,
    /// Any shared touched address.
    AnyTouch,
}

impl FromStr for ConflictMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "write-aware" => Ok(ConflictMode::WriteAware),
            "any-touch" => Ok(ConflictMode::AnyTouch),
            other => Err(Error::InvalidArgument(format!("unknown conflict mode {other:?}"))),
        }
    }
}

/// Scopes of a single frame. Children are not included.
pub fn derive_scopes(frame: &CallFrame) -> Vec<AccessScope> {
    match frame.kind {
        CallKind::Call => vec![AccessScope::write(frame.to)],
        CallKind::DelegateCall | CallKind::CallCode => vec![AccessScope::write(frame.from)],
        CallKind::StaticCall => vec![AccessScope::read(frame.to)],
        CallKind::Transfer => vec![AccessScope::write(frame.from), AccessScope::write(frame.to)],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn addr(n: u8) -> Address {
        Address([n; 20])
    }

    #[test]
    fn address_renders_lowercase_and_parses_back() {
        let a: Address = "0xC02aaA39b223FE8D0A0e5C4F27eAD9083C756Cc2".parse().unwrap();
        assert_eq!(a.to_string(), "0xc02aaa39b223fe8d0a0e5c4f27ead9083c756cc2");
        assert_eq!(a.to_string().parse::<Address>().unwrap(), a);
        assert!("0x1234".parse::<Address>().is_err());
        assert!("c02aaa39b223fe8d0a0e5c4f27ead9083c756cc2".parse::<Address>().is_err());
    }

    #[test]
    fn static_call_reads_callee() {
        let f = CallFrame::new(CallKind::StaticCall, addr(1), addr(2), 10);
        assert_eq!(derive_scopes(&f), vec![AccessScope::read(addr(2))]);
    }

    #[test]
    fn delegate_call_writes_caller() {
        let f = CallFrame::new(CallKind::DelegateCall, addr(1), addr(2), 10);
        assert_eq!(derive_scopes(&f), vec![AccessScope::write(addr(1))]);
        let f = CallFrame::new(CallKind::CallCode, addr(1), addr(2), 10);
        assert_eq!(derive_scopes(&f), vec![AccessScope::write(addr(1))]);
    }

    #[test]
    fn value_transfer_writes_both_endpoints() {
        let f = CallFrame::new(CallKind::Transfer, addr(1), addr(2), 0);
        assert_eq!(
            derive_scopes(&f),
            vec![AccessScope::write(addr(1)), AccessScope::write(addr(2))]
        );
    }

    #[test]
    fn calldata_is_truncated_and_words_decode() {
        let mut input = vec![0xa9, 0x05, 0x9c, 0xbb];
        input.extend([0u8; 12]);
        input.extend([7u8; 20]);
        input.extend([0u8; 200]);
        let data = Calldata::truncated(&input);
        assert_eq!(data.as_bytes().len(), CALLDATA_PREFIX_LEN);
        assert_eq!(data.selector(), Some([0xa9, 0x05, 0x9c, 0xbb]));
        assert_eq!(Address::from_word(data.word(0).unwrap()), Some(addr(7)));
        assert!(data.word(3).is_none());
    }

    #[test]
    fn walk_is_preorder() {
        let tree = CallFrame::new(CallKind::Call, addr(1), addr(2), 5).with_children(vec![
            CallFrame::new(CallKind::Call, addr(2), addr(3), 2).with_children(vec![CallFrame::new(
                CallKind::StaticCall,
                addr(3),
                addr(4),
                1,
            )]),
            CallFrame::new(CallKind::Call, addr(2), addr(5), 1),
        ]);
        let order: Vec<u8> = tree.walk().map(|f| f.to.0[0]).collect();
        assert_eq!(order, vec![2, 3, 4, 5]);
        assert_eq!(tree.depth(), 3);
    }

    #[test]
    fn validate_rejects_gas_mismatch_and_foreign_root() {
        let tx = Transaction {
            hash: TxHash([1; 32]),
            sender: addr(1),
            recipient: Some(addr(2)),
            gas_used: 21_000,
            root_call: CallFrame::new(CallKind::Transfer, addr(1), addr(2), 0),
        };
        let mut block = BlockTrace {
            number: 9,
            timestamp: 0,
            gas_used: 21_000,
            transactions: vec![tx],
        };
        block.validate().unwrap();
        block.gas_used = 1;
        let err = block.validate().unwrap_err().to_string();
        assert!(err.contains("block 9") && err.contains("gasUsed"), "{err}");
        block.gas_used = 21_000;
        block.transactions[0].root_call.from = addr(3);
        assert!(matches!(
            block.validate(),
            Err(Error::InvalidBlock { field: "from", .. })
        ));
    }
}
