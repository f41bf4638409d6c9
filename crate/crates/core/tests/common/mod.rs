#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use txparallax::trace::TxHash;
use txparallax::{Address, BlockTrace, CallFrame, CallKind, Transaction};

pub fn addr(n: u64) -> Address {
    let mut bytes = [0u8; 20];
    bytes[12..].copy_from_slice(&n.to_be_bytes());
    Address(bytes)
}

pub fn hash(n: u64) -> TxHash {
    let mut bytes = [0u8; 32];
    bytes[24..].copy_from_slice(&n.to_be_bytes());
    TxHash(bytes)
}

pub fn tx(n: u64, gas: u64, root: CallFrame) -> Transaction {
    Transaction {
        hash: hash(n),
        sender: root.from,
        recipient: Some(root.to),
        gas_used: gas,
        root_call: root,
    }
}

pub fn block(number: u64, transactions: Vec<Transaction>) -> BlockTrace {
    BlockTrace {
        number,
        timestamp: 1_660_000_000 + number * 12,
        gas_used: transactions.iter().map(|t| t.gas_used).sum(),
        transactions,
    }
}

pub fn call(kind: CallKind, from: u64, to: u64, gas: u64) -> CallFrame {
    CallFrame::new(kind, addr(from), addr(to), gas)
}

const KINDS: [CallKind; 5] = [
    CallKind::Call,
    CallKind::DelegateCall,
    CallKind::StaticCall,
    CallKind::CallCode,
    CallKind::Transfer,
];

/// Random call tree over addresses `1..=universe`; children are called by
/// their parent's callee.
pub fn random_frame(rng: &mut ChaCha8Rng, from: u64, universe: u64, depth: usize) -> CallFrame {
    let kind = KINDS[rng.gen_range(0..KINDS.len())];
    let to = rng.gen_range(1..=universe);
    let mut frame = call(kind, from, to, rng.gen_range(1..50_000));
    if depth > 0 && kind != CallKind::Transfer {
        let caller = match kind {
            CallKind::DelegateCall | CallKind::CallCode => from,
            _ => to,
        };
        let n = rng.gen_range(0..3);
        frame.children = (0..n).map(|_| random_frame(rng, caller, universe, depth - 1)).collect();
    }
    frame
}

pub fn random_block(rng: &mut ChaCha8Rng, number: u64, txs: usize, universe: u64) -> BlockTrace {
    let transactions = (0..txs as u64)
        .map(|i| {
            let sender = rng.gen_range(1..=universe);
            let mut root = random_frame(rng, sender, universe, 3);
            if root.kind == CallKind::DelegateCall || root.kind == CallKind::CallCode {
                root.kind = CallKind::Call;
            }
            tx(number * 1000 + i, rng.gen_range(21_000..500_000), root)
        })
        .collect();
    block(number, transactions)
}

/// Random block whose universe includes the default config's tokens and
/// routers; token calls carry ERC-20 calldata, sometimes truncated or with an
/// unknown selector.
pub fn random_defi_block(rng: &mut ChaCha8Rng, number: u64, txs: usize) -> BlockTrace {
    use txparallax::disentangle::{
        SELECTOR_ALLOWANCE, SELECTOR_APPROVE, SELECTOR_BALANCE_OF, SELECTOR_TRANSFER, SELECTOR_TRANSFER_FROM,
    };
    let cfg = txparallax::DisentangleConfig::default();
    let tokens: Vec<Address> = cfg.tokens.iter().copied().collect();
    let routers: Vec<Address> = cfg.routers.iter().copied().collect();
    let selectors = [
        SELECTOR_TRANSFER,
        SELECTOR_TRANSFER_FROM,
        SELECTOR_APPROVE,
        SELECTOR_BALANCE_OF,
        SELECTOR_ALLOWANCE,
        [0xde, 0xad, 0xbe, 0xef],
    ];
    let mut b = random_block(rng, number, txs, 30);
    let remap = |rng: &mut ChaCha8Rng, a: Address| -> Address {
        let n = u64::from_be_bytes(a.0[12..].try_into().unwrap());
        match n {
            1..=5 => tokens[(n - 1) as usize % tokens.len()],
            6..=7 if rng.gen_bool(0.8) => routers[(n - 6) as usize % routers.len()],
            _ => a,
        }
    };
    fn visit(f: &mut CallFrame, g: &mut dyn FnMut(&mut CallFrame)) {
        g(f);
        for c in &mut f.children {
            visit(c, g);
        }
    }
    for t in &mut b.transactions {
        visit(&mut t.root_call, &mut |f| {
            f.to = remap(rng, f.to);
            if f.from != t.sender {
                f.from = remap(rng, f.from);
            }
            if tokens.contains(&f.to) {
                let mut input = selectors[rng.gen_range(0..selectors.len())].to_vec();
                for _ in 0..3 {
                    input.extend([0u8; 12]);
                    input.extend(addr(rng.gen_range(8..=30)).0);
                }
                let keep = if rng.gen_bool(0.1) {
                    rng.gen_range(0..input.len())
                } else {
                    input.len()
                };
                *f = f.clone().with_input(&input[..keep]);
            }
        });
        t.recipient = Some(t.root_call.to);
    }
    b
}
