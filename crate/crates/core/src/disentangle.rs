//! Removal of non-essential dependencies.
//!
//! Two rewrites are applied before conflicts are computed:
//!
//! * Router removal: stateless DEX routers are cut out of the call tree and
//!   every call they take part in is re-attached to the transaction sender.
//! * ERC-20 rewriting: calls into a configured token are scoped to the
//!   individual balance and allowance entries they touch instead of the whole
//!   token contract, so transfers between unrelated accounts stop conflicting.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::{AccessMode, AccessScope, Address, CallFrame, CallKind};

/// `transfer(address,uint256)`
pub const SELECTOR_TRANSFER: [u8; 4] = [0xa9, 0x05, 0x9c, 0xbb];
/// `transferFrom(address,address,uint256)`
pub const SELECTOR_TRANSFER_FROM: [u8; 4] = [0x23, 0xb8, 0x72, 0xdd];
/// `approve(address,uint256)`
pub const SELECTOR_APPROVE: [u8; 4] = [0x09, 0x5e, 0xa7, 0xb3];
/// `balanceOf(address)`
pub const SELECTOR_BALANCE_OF: [u8; 4] = [0x70, 0xa0, 0x82, 0x31];
/// `allowance(address,address)`
pub const SELECTOR_ALLOWANCE: [u8; 4] = [0xdd, 0x62, 0xed, 0x3e];

const DEFAULT_CONFIG_JSON: &str = include_str!("../config/default.json");

/// One storage entry of a token contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Cell {
    Balance { owner: Address },
    Allowance { owner: Address, spender: Address },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VirtualCell {
    pub token: Address,
    pub cell: Cell,
}

impl VirtualCell {
    pub fn balance(token: Address, owner: Address) -> VirtualCell {
        VirtualCell {
            token,
            cell: Cell::Balance { owner },
        }
    }

    pub fn allowance(token: Address, owner: Address, spender: Address) -> VirtualCell {
        VirtualCell {
            token,
            cell: Cell::Allowance { owner, spender },
        }
    }
}

impl fmt::Display for VirtualCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.cell {
            Cell::Balance { owner } => write!(f, "{}:balance:{}", self.token, owner),
            Cell::Allowance { owner, spender } => {
                write!(f, "{}:allowance:{}:{}", self.token, owner, spender)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisentangleConfig {
    pub tokens: BTreeSet<Address>,
    pub routers: BTreeSet<Address>,
    pub enable_tokens: bool,
    pub enable_routers: bool,
}

impl Default for DisentangleConfig {
    /// WETH, USDC, USDT, DAI and LINK; Uniswap V2/V3, SushiSwap and 1inch routers.
    fn default() -> Self {
        DisentangleConfig::from_json(DEFAULT_CONFIG_JSON).expect("bundled config is valid")
    }
}

impl DisentangleConfig {
    pub fn disabled() -> DisentangleConfig {
        DisentangleConfig {
            enable_tokens: false,
            enable_routers: false,
            ..DisentangleConfig::default()
        }
    }

    pub fn from_json(text: &str) -> Result<DisentangleConfig> {
        let cfg: DisentangleConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<DisentangleConfig> {
        let text = std::fs::read_to_string(path)?;
        DisentangleConfig::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(shared) = self.tokens.intersection(&self.routers).next() {
            return Err(Error::Config(format!("{shared} is listed as both token and router")));
        }
        Ok(())
    }

    pub fn is_token(&self, address: &Address) -> bool {
        self.enable_tokens && self.tokens.contains(address)
    }

    pub fn is_router(&self, address: &Address) -> bool {
        self.enable_routers && self.routers.contains(address)
    }

    pub fn is_identity(&self) -> bool {
        !self.enable_tokens && !self.enable_routers
    }
}

/// Outcome of rewriting one call into a configured token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Erc20Rewrite {
    /// Per-cell scopes; the first one is the cell the call is attributed to.
    Cells(Vec<AccessScope>),
    /// Selector not among the five rewritten functions.
    UnknownSelector(Vec<AccessScope>),
    /// Calldata too short for the declared selector.
    Malformed(Vec<AccessScope>),
}

impl Erc20Rewrite {
    pub fn scopes(&self) -> &[AccessScope] {
        match self {
            Erc20Rewrite::Cells(s) | Erc20Rewrite::UnknownSelector(s) | Erc20Rewrite::Malformed(s) => s,
        }
    }

    pub fn into_scopes(self) -> Vec<AccessScope> {
        match self {
            Erc20Rewrite::Cells(s) | Erc20Rewrite::UnknownSelector(s) | Erc20Rewrite::Malformed(s) => s,
        }
    }
}

/// Returns whether `frame` is a call the ERC-20 rewrite applies to.
pub fn is_token_call(frame: &CallFrame, cfg: &DisentangleConfig) -> bool {
    matches!(frame.kind, CallKind::Call | CallKind::StaticCall) && cfg.is_token(&frame.to)
}

/// Rewrites a call into a configured token to virtual-cell scopes.
///
/// A static call never yields a write, whatever the selector says. Calls the
/// rewrite does not understand keep their plain scope.
pub fn rewrite_erc20(frame: &CallFrame, caller: Address, cfg: &DisentangleConfig) -> Erc20Rewrite {
    debug_assert!(is_token_call(frame, cfg));
    let token = frame.to;
    let input = &frame.input;
    let arg = |i: usize| input.word(i).and_then(Address::from_word);
    let cap = |mode: AccessMode| match frame.kind {
        CallKind::StaticCall => AccessMode::Read,
        _ => mode,
    };
    let scope = |cell: VirtualCell, mode: AccessMode| AccessScope {
        target: cell.into(),
        mode: cap(mode),
    };
    let plain = || frame.scopes();

    let Some(selector) = input.selector() else {
        return Erc20Rewrite::UnknownSelector(plain());
    };
    let cells = match selector {
        SELECTOR_TRANSFER => match arg(0) {
            Some(to) => vec![
                scope(VirtualCell::balance(token, to), AccessMode::Write),
                scope(VirtualCell::balance(token, caller), AccessMode::Write),
            ],
            None => return Erc20Rewrite::Malformed(plain()),
        },
        SELECTOR_TRANSFER_FROM => match (arg(0), arg(1)) {
            (Some(from), Some(to)) => vec![
                scope(VirtualCell::balance(token, to), AccessMode::Write),
                scope(VirtualCell::balance(token, from), AccessMode::Write),
                scope(VirtualCell::allowance(token, from, caller), AccessMode::Write),
            ],
            _ => return Erc20Rewrite::Malformed(plain()),
        },
        SELECTOR_APPROVE => match arg(0) {
            Some(spender) => vec![scope(VirtualCell::allowance(token, caller, spender), AccessMode::Write)],
            None => return Erc20Rewrite::Malformed(plain()),
        },
        SELECTOR_BALANCE_OF => match arg(0) {
            Some(owner) => vec![scope(VirtualCell::balance(token, owner), AccessMode::Read)],
            None => return Erc20Rewrite::Malformed(plain()),
        },
        SELECTOR_ALLOWANCE => match (arg(0), arg(1)) {
            (Some(owner), Some(spender)) => {
                vec![scope(VirtualCell::allowance(token, owner, spender), AccessMode::Read)]
            }
            _ => return Erc20Rewrite::Malformed(plain()),
        },
        _ => return Erc20Rewrite::UnknownSelector(plain()),
    };
    Erc20Rewrite::Cells(cells)
}

/// Re-attaches every router endpoint to `sender` and drops the router frames
/// that collapse into sender self-calls.
///
/// A collapsed frame with children is replaced by its children; the root is
/// kept so the transaction still has a call tree.
pub fn remove_router(root: &CallFrame, sender: Address, cfg: &DisentangleConfig) -> CallFrame {
    let mut out = reroute(root, sender, cfg);
    out.children = splice_children(&root.children, sender, cfg);
    out
}

fn reroute(frame: &CallFrame, sender: Address, cfg: &DisentangleConfig) -> CallFrame {
    let swap = |a: Address| if cfg.is_router(&a) { sender } else { a };
    CallFrame {
        kind: frame.kind,
        from: swap(frame.from),
        to: swap(frame.to),
        gas_used: frame.gas_used,
        input: frame.input.clone(),
        children: Vec::new(),
    }
}

fn splice_children(children: &[CallFrame], sender: Address, cfg: &DisentangleConfig) -> Vec<CallFrame> {
    let mut out = Vec::with_capacity(children.len());
    for child in children {
        let mut frame = reroute(child, sender, cfg);
        let grandchildren = splice_children(&child.children, sender, cfg);
        let collapsed =
            frame.from == sender && frame.to == sender && (cfg.is_router(&child.from) || cfg.is_router(&child.to));
        if collapsed {
            out.extend(grandchildren);
        } else {
            frame.children = grandchildren;
            out.push(frame);
        }
    }
    out
}
