//! Per-transaction access footprints and the conflict relation.

use std::collections::{BTreeMap, BTreeSet};

use crate::disentangle::{is_token_call, remove_router, rewrite_erc20, DisentangleConfig, Erc20Rewrite};
use crate::trace::{AccessMode, AccessScope, BlockTrace, CallFrame, ConflictMode, ScopeTarget, Transaction};

/// One call as an address-graph edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AccessEdge {
    pub from: ScopeTarget,
    pub to: ScopeTarget,
    pub gas: u64,
    pub mode: AccessMode,
}

/// Counters for ERC-20 rewrites that fell back to the whole-token scope.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RewriteStats {
    pub rewritten: u64,
    pub unknown_selector: u64,
    pub malformed: u64,
}

impl RewriteStats {
    pub fn merge(&mut self, other: RewriteStats) {
        self.rewritten += other.rewritten;
        self.unknown_selector += other.unknown_selector;
        self.malformed += other.malformed;
    }
}

/// Everything a transaction touches.
///
/// `scopes` holds the strongest mode seen per target. `touched` holds every
/// endpoint of every call (including delegate-call targets, which carry no
/// scope of their own); it drives [`ConflictMode::AnyTouch`] and is exactly
/// the vertex set the transaction contributes to the address graph.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TxAccess {
    pub scopes: BTreeMap<ScopeTarget, AccessMode>,
    pub touched: BTreeSet<ScopeTarget>,
    pub edges: Vec<AccessEdge>,
    pub stats: RewriteStats,
}

impl TxAccess {
    /// Footprint of `tx`, optionally after disentanglement.
    ///
    /// The sender is always written: it pays for gas and bumps its nonce.
    pub fn of(tx: &Transaction, cfg: Option<&DisentangleConfig>) -> TxAccess {
        let mut access = TxAccess::default();
        access.add_scope(AccessScope::write(tx.sender));
        access.touched.insert(tx.sender.into());

        let rerouted;
        let root = match cfg {
            Some(cfg) if cfg.enable_routers => {
                rerouted = remove_router(&tx.root_call, tx.sender, cfg);
                &rerouted
            }
            _ => &tx.root_call,
        };
        for frame in root.walk() {
            access.add_frame(frame, cfg);
        }
        access
    }

    fn add_scope(&mut self, scope: AccessScope) {
        self.scopes
            .entry(scope.target)
            .and_modify(|m| *m = (*m).max(scope.mode))
            .or_insert(scope.mode);
    }

    fn add_frame(&mut self, frame: &CallFrame, cfg: Option<&DisentangleConfig>) {
        let from: ScopeTarget = frame.from.into();
        let scopes = match cfg {
            Some(cfg) if is_token_call(frame, cfg) => {
                let rewrite = rewrite_erc20(frame, frame.from, cfg);
                match &rewrite {
                    Erc20Rewrite::Cells(_) => self.stats.rewritten += 1,
                    Erc20Rewrite::UnknownSelector(_) => self.stats.unknown_selector += 1,
                    Erc20Rewrite::Malformed(_) => self.stats.malformed += 1,
                }
                if let Erc20Rewrite::Cells(cells) = rewrite {
                    // Call gas goes to the primary cell; the other cells hang
                    // off the caller with zero weight.
                    for (i, cell) in cells.iter().enumerate() {
                        self.edges.push(AccessEdge {
                            from,
                            to: cell.target,
                            gas: if i == 0 { frame.gas_used } else { 0 },
                            mode: cell.mode,
                        });
                        self.touched.insert(cell.target);
                        self.add_scope(*cell);
                    }
                    self.touched.insert(from);
                    return;
                }
                rewrite.into_scopes()
            }
            _ => frame.scopes(),
        };
        let mode = scopes.iter().map(|s| s.mode).max().unwrap_or(AccessMode::Read);
        self.edges.push(AccessEdge {
            from,
            to: frame.to.into(),
            gas: frame.gas_used,
            mode,
        });
        self.touched.insert(from);
        self.touched.insert(frame.to.into());
        for scope in scopes {
            self.add_scope(scope);
        }
    }

    pub fn scope_set(&self) -> BTreeSet<AccessScope> {
        self.scopes
            .iter()
            .map(|(&target, &mode)| AccessScope { target, mode })
            .collect()
    }

    pub fn conflicts_with(&self, other: &TxAccess, mode: ConflictMode) -> bool {
        match mode {
            ConflictMode::WriteAware => {
                let (small, large) = if self.scopes.len() <= other.scopes.len() {
                    (&self.scopes, &other.scopes)
                } else {
                    (&other.scopes, &self.scopes)
                };
                small.iter().any(|(target, &m)| {
                    large
                        .get(target)
                        .is_some_and(|&n| m == AccessMode::Write || n == AccessMode::Write)
                })
            }
            ConflictMode::AnyTouch => {
                let (small, large) = if self.touched.len() <= other.touched.len() {
                    (&self.touched, &other.touched)
                } else {
                    (&other.touched, &self.touched)
                };
                small.iter().any(|t| large.contains(t))
            }
        }
    }
}

/// Scope set of a transaction: its sender plus every call in its tree.
pub fn tx_scope_set(tx: &Transaction) -> BTreeSet<AccessScope> {
    TxAccess::of(tx, None).scope_set()
}

pub fn conflicting(a: &Transaction, b: &Transaction, mode: ConflictMode) -> bool {
    TxAccess::of(a, None).conflicts_with(&TxAccess::of(b, None), mode)
}

/// Rewritten footprints of every transaction in `block`, in block order.
///
/// Router removal runs first, then the ERC-20 rewrite.
pub fn disentangle(block: &BlockTrace, cfg: &DisentangleConfig) -> Vec<TxAccess> {
    block
        .transactions
        .iter()
        .map(|tx| TxAccess::of(tx, Some(cfg)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disentangle::{VirtualCell, SELECTOR_BALANCE_OF, SELECTOR_TRANSFER};
    use crate::trace::{Address, CallKind, TxHash};

    fn addr(n: u8) -> Address {
        Address([n; 20])
    }

    fn tx(n: u8, root: CallFrame) -> Transaction {
        Transaction {
            hash: TxHash([n; 32]),
            sender: root.from,
            recipient: Some(root.to),
            gas_used: 21_000 + root.gas_used,
            root_call: root,
        }
    }

    fn encode(selector: [u8; 4], args: &[Address]) -> Vec<u8> {
        let mut out = selector.to_vec();
        for a in args {
            out.extend([0u8; 12]);
            out.extend(a.0);
        }
        out.extend([0u8; 32]);
        out
    }

    #[test]
    fn plain_transfer_scope_set() {
        let t = tx(1, CallFrame::new(CallKind::Transfer, addr(0xa), addr(0xb), 0));
        let expect: BTreeSet<_> = [AccessScope::write(addr(0xa)), AccessScope::write(addr(0xb))].into();
        assert_eq!(tx_scope_set(&t), expect);
    }

    #[test]
    fn nested_static_call_scope_set() {
        let (a, c, d) = (addr(0xa), addr(0xc), addr(0xd));
        let t = tx(
            1,
            CallFrame::new(CallKind::Call, a, c, 50_000).with_children(vec![CallFrame::new(
                CallKind::StaticCall,
                c,
                d,
                2_000,
            )]),
        );
        let expect: BTreeSet<_> = [AccessScope::write(a), AccessScope::write(c), AccessScope::read(d)].into();
        assert_eq!(tx_scope_set(&t), expect);
    }

    #[test]
    fn write_dominates_read_on_same_target() {
        let (a, c, d) = (addr(0xa), addr(0xc), addr(0xd));
        let t = tx(
            1,
            CallFrame::new(CallKind::Call, a, c, 50_000).with_children(vec![
                CallFrame::new(CallKind::StaticCall, c, d, 2_000),
                CallFrame::new(CallKind::Call, c, d, 2_000),
            ]),
        );
        assert!(tx_scope_set(&t).contains(&AccessScope::write(d)));
        assert!(!tx_scope_set(&t).contains(&AccessScope::read(d)));
    }

    #[test]
    fn contract_creation_writes_new_address_and_sender() {
        let created = addr(0xcc);
        let mut t = tx(1, CallFrame::new(CallKind::Call, addr(0xa), created, 90_000));
        t.recipient = None;
        let expect: BTreeSet<_> = [AccessScope::write(addr(0xa)), AccessScope::write(created)].into();
        assert_eq!(tx_scope_set(&t), expect);
    }

    #[test]
    fn conflict_examples() {
        let t1 = tx(1, CallFrame::new(CallKind::Transfer, addr(1), addr(2), 0));
        let t2 = tx(2, CallFrame::new(CallKind::Transfer, addr(3), addr(4), 0));
        for mode in [ConflictMode::WriteAware, ConflictMode::AnyTouch] {
            assert!(!conflicting(&t1, &t2, mode));
        }

        let token = addr(0x70);
        let w1 = tx(3, CallFrame::new(CallKind::Call, addr(5), token, 10));
        let w2 = tx(4, CallFrame::new(CallKind::Call, addr(6), token, 10));
        for mode in [ConflictMode::WriteAware, ConflictMode::AnyTouch] {
            assert!(conflicting(&w1, &w2, mode));
        }

        let x = addr(0x80);
        let r1 = tx(5, CallFrame::new(CallKind::StaticCall, addr(7), x, 10));
        let r2 = tx(6, CallFrame::new(CallKind::StaticCall, addr(8), x, 10));
        assert!(!conflicting(&r1, &r2, ConflictMode::WriteAware));
        assert!(conflicting(&r1, &r2, ConflictMode::AnyTouch));
    }

    #[test]
    fn delegate_target_is_touched_but_not_scoped() {
        let lib = addr(0x99);
        let t1 = tx(
            1,
            CallFrame::new(CallKind::Call, addr(1), addr(0x10), 10).with_children(vec![CallFrame::new(
                CallKind::DelegateCall,
                addr(0x10),
                lib,
                5,
            )]),
        );
        let t2 = tx(
            2,
            CallFrame::new(CallKind::Call, addr(2), addr(0x20), 10).with_children(vec![CallFrame::new(
                CallKind::DelegateCall,
                addr(0x20),
                lib,
                5,
            )]),
        );
        assert!(!conflicting(&t1, &t2, ConflictMode::WriteAware));
        assert!(conflicting(&t1, &t2, ConflictMode::AnyTouch));
    }

    #[test]
    fn balance_of_vs_transfer_conflict_on_shared_cell() {
        let token = addr(0xd0);
        let cfg = DisentangleConfig {
            tokens: [token].into(),
            routers: BTreeSet::new(),
            enable_tokens: true,
            enable_routers: false,
        };
        let x = addr(0x42);
        let reader = tx(
            1,
            CallFrame::new(CallKind::Call, addr(1), addr(0x30), 10).with_children(vec![CallFrame::new(
                CallKind::StaticCall,
                addr(0x30),
                token,
                3,
            )
            .with_input(&encode(SELECTOR_BALANCE_OF, &[x]))]),
        );
        let writer = tx(
            2,
            CallFrame::new(CallKind::Call, addr(2), token, 10).with_input(&encode(SELECTOR_TRANSFER, &[x])),
        );
        let a = TxAccess::of(&reader, Some(&cfg));
        let b = TxAccess::of(&writer, Some(&cfg));
        assert_eq!(
            a.scopes.get(&VirtualCell::balance(token, x).into()),
            Some(&AccessMode::Read)
        );
        assert!(a.conflicts_with(&b, ConflictMode::WriteAware));
        assert!(!a.touched.contains(&token.into()));
        assert_eq!(a.stats.rewritten, 1);
    }

    #[test]
    fn touched_matches_edge_endpoints() {
        let cfg = DisentangleConfig::default();
        let t = tx(
            1,
            CallFrame::new(CallKind::Call, addr(1), addr(2), 10).with_children(vec![CallFrame::new(
                CallKind::DelegateCall,
                addr(2),
                addr(3),
                5,
            )]),
        );
        for access in [TxAccess::of(&t, None), TxAccess::of(&t, Some(&cfg))] {
            let mut ends: BTreeSet<ScopeTarget> = access.edges.iter().flat_map(|e| [e.from, e.to]).collect();
            ends.insert(addr(1).into());
            assert_eq!(ends, access.touched);
        }
    }
}
