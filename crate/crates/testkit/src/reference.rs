//! Independent recomputations of both commitment roots.
//!
//! These exist to catch bugs in the production tree builders, so they avoid
//! sharing code or algorithmic shape with them. The binary tree is folded
//! level by level over plain vectors; the Patricia trie is grown one key at
//! a time through the textbook insert-with-splitting procedure, in whatever
//! order the caller supplies, and only hashed at the end. Both match the
//! serialized node formats byte for byte — that much *is* the contract
//! under test.

use omnirelay_core::types::{keccak256, keccak256_concat, Hash32};

/// Binary tree root by repeated pairwise folding.
///
/// Leaves are `keccak(0x00 ‖ digest)`; each round pairs neighbours into
/// `keccak(0x01 ‖ left ‖ right)`, duplicating the last node of an odd row.
/// The empty tree is `keccak("")`.
pub fn merkle_root(digests: &[Hash32]) -> Hash32 {
    if digests.is_empty() {
        return keccak256(b"");
    }
    let mut row: Vec<Hash32> = digests
        .iter()
        .map(|d| keccak256_concat(&[&[0x00], d.as_bytes()]))
        .collect();
    while row.len() > 1 {
        if row.len() % 2 == 1 {
            row.push(*row.last().expect("row is non-empty"));
        }
        row = row
            .chunks(2)
            .map(|pair| keccak256_concat(&[&[0x01], pair[0].as_bytes(), pair[1].as_bytes()]))
            .collect();
    }
    row[0]
}

/// Patricia trie root for explicit key/value pairs, built by inserting the
/// pairs in the given order. Keys must be distinct.
pub fn mpt_root(items: &[(Vec<u8>, Vec<u8>)]) -> Hash32 {
    if items.is_empty() {
        return keccak256(b"");
    }
    let mut root: Option<Box<Node>> = None;
    for (key, value) in items {
        let nibbles: Vec<u8> = key.iter().flat_map(|&b| [b >> 4, b & 0x0F]).collect();
        root = Some(insert(root, &nibbles, value.clone()));
    }
    hash(&root.expect("at least one insertion"))
}

/// Patricia trie root for a block's digest list: key `i` is the minimal
/// big-endian encoding of the index, value is the digest. `order` gives the
/// insertion sequence, letting callers verify the root is order-independent.
pub fn mpt_root_for_digests(digests: &[Hash32], order: &[usize]) -> Hash32 {
    assert_eq!(order.len(), digests.len(), "order must be a permutation");
    let items: Vec<(Vec<u8>, Vec<u8>)> = order
        .iter()
        .map(|&i| {
            let bytes = (i as u64).to_be_bytes();
            let first = bytes.iter().position(|&b| b != 0).unwrap_or(7);
            (bytes[first..].to_vec(), digests[i].as_bytes().to_vec())
        })
        .collect();
    mpt_root(&items)
}

enum Node {
    Leaf { path: Vec<u8>, value: Vec<u8> },
    Extension { path: Vec<u8>, child: Box<Node> },
    Branch { children: Box<[Option<Box<Node>>; 16]>, value: Option<Vec<u8>> },
}

fn empty_branch() -> Node {
    Node::Branch { children: Box::new(std::array::from_fn(|_| None)), value: None }
}

fn common_prefix(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

fn insert(slot: Option<Box<Node>>, path: &[u8], value: Vec<u8>) -> Box<Node> {
    let Some(node) = slot else {
        return Box::new(Node::Leaf { path: path.to_vec(), value });
    };
    match *node {
        Node::Leaf { path: leaf_path, value: leaf_value } => {
            assert_ne!(leaf_path, path, "duplicate key");
            let split = common_prefix(&leaf_path, path);
            let mut branch = empty_branch();
            attach(&mut branch, &leaf_path[split..], leaf_value);
            attach(&mut branch, &path[split..], value);
            wrap(&path[..split], branch)
        }
        Node::Extension { path: ext_path, child } => {
            let split = common_prefix(&ext_path, path);
            if split == ext_path.len() {
                let child = insert(Some(child), &path[split..], value);
                return Box::new(Node::Extension { path: ext_path, child });
            }
            // Diverged inside the extension: break it at the split point.
            let mut branch = empty_branch();
            let (fork, remainder) = (ext_path[split], &ext_path[split + 1..]);
            let stub = if remainder.is_empty() {
                child
            } else {
                Box::new(Node::Extension { path: remainder.to_vec(), child })
            };
            let Node::Branch { children, .. } = &mut branch else { unreachable!() };
            children[fork as usize] = Some(stub);
            attach(&mut branch, &path[split..], value);
            wrap(&path[..split], branch)
        }
        Node::Branch { mut children, value: branch_value } => {
            let mut branch_value = branch_value;
            if path.is_empty() {
                assert!(branch_value.is_none(), "duplicate key");
                branch_value = Some(value);
            } else {
                let slot = children[path[0] as usize].take();
                children[path[0] as usize] = Some(insert(slot, &path[1..], value));
            }
            Box::new(Node::Branch { children, value: branch_value })
        }
    }
}

/// Hang a remainder path off a branch: an empty remainder is the branch's
/// own value, anything longer becomes a leaf under its first nibble.
fn attach(branch: &mut Node, remainder: &[u8], value: Vec<u8>) {
    let Node::Branch { children, value: branch_value } = branch else {
        unreachable!("attach target is always a branch")
    };
    if remainder.is_empty() {
        assert!(branch_value.is_none(), "duplicate key");
        *branch_value = Some(value);
    } else {
        let leaf = Node::Leaf { path: remainder[1..].to_vec(), value };
        assert!(children[remainder[0] as usize].is_none(), "attach slot is fresh");
        children[remainder[0] as usize] = Some(Box::new(leaf));
    }
}

/// Put a (possibly empty) shared prefix back above a freshly built branch.
fn wrap(prefix: &[u8], branch: Node) -> Box<Node> {
    if prefix.is_empty() {
        Box::new(branch)
    } else {
        Box::new(Node::Extension { path: prefix.to_vec(), child: Box::new(branch) })
    }
}

fn pack(nibbles: &[u8]) -> Vec<u8> {
    let mut out = vec![0u8; nibbles.len().div_ceil(2)];
    for (i, &n) in nibbles.iter().enumerate() {
        out[i / 2] |= if i % 2 == 0 { n << 4 } else { n };
    }
    out
}

fn hash(node: &Node) -> Hash32 {
    let mut ser = Vec::new();
    match node {
        Node::Leaf { path, value } => {
            ser.push(0x00);
            ser.extend_from_slice(&(path.len() as u16).to_be_bytes());
            ser.extend_from_slice(&pack(path));
            ser.extend_from_slice(&(value.len() as u32).to_be_bytes());
            ser.extend_from_slice(value);
        }
        Node::Extension { path, child } => {
            ser.push(0x01);
            ser.extend_from_slice(&(path.len() as u16).to_be_bytes());
            ser.extend_from_slice(&pack(path));
            ser.extend_from_slice(hash(child).as_bytes());
        }
        Node::Branch { children, value } => {
            ser.push(0x02);
            let mut bitmap = 0u16;
            let mut hashes = Vec::new();
            for (i, child) in children.iter().enumerate() {
                if let Some(c) = child {
                    bitmap |= 1 << i;
                    hashes.push(hash(c));
                }
            }
            ser.extend_from_slice(&bitmap.to_be_bytes());
            for h in hashes {
                ser.extend_from_slice(h.as_bytes());
            }
            match value {
                Some(v) => {
                    ser.push(1);
                    ser.extend_from_slice(&(v.len() as u32).to_be_bytes());
                    ser.extend_from_slice(v);
                }
                None => ser.push(0),
            }
        }
    }
    keccak256(&ser)
}
