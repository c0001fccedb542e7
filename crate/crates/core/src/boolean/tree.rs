use super::{bit_of, check_bits, BooleanFunction};
use crate::error::{Error, Result};
use rand::seq::IndexedRandom;
use rand::Rng;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Leaf(i8),
    /// Queries `var`; `zero` is followed when the bit is 0.
    Split {
        var: usize,
        zero: Box<Node>,
        one: Box<Node>,
    },
}

impl Node {
    fn leaves(&self) -> usize {
        match self {
            Node::Leaf(_) => 1,
            Node::Split { zero, one, .. } => zero.leaves() + one.leaves(),
        }
    }

    fn max_var(&self) -> Option<usize> {
        match self {
            Node::Leaf(_) => None,
            Node::Split { var, zero, one } => {
                Some((*var).max(zero.max_var().unwrap_or(0)).max(one.max_var().unwrap_or(0)))
            }
        }
    }

    fn write_sexpr(&self, out: &mut String) {
        match self {
            Node::Leaf(v) => out.push_str(if *v > 0 { "(leaf +1)" } else { "(leaf -1)" }),
            Node::Split { var, zero, one } => {
                out.push_str(&format!("(var {var} "));
                zero.write_sexpr(out);
                out.push(' ');
                one.write_sexpr(out);
                out.push(')');
            }
        }
    }
}

/// A decision tree over `n` input bits with ±1 leaves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionTree {
    n: usize,
    root: Node,
}

impl DecisionTree {
    pub fn new(n: usize, root: Node) -> Result<Self> {
        check_bits(n)?;
        if let Some(v) = root.max_var() {
            if v >= n {
                return Err(Error::Tree(format!("variable {v} out of range for n = {n}")));
            }
        }
        fn labels_ok(node: &Node) -> bool {
            match node {
                Node::Leaf(v) => *v == 1 || *v == -1,
                Node::Split { zero, one, .. } => labels_ok(zero) && labels_ok(one),
            }
        }
        if !labels_ok(&root) {
            return Err(Error::Tree("leaf label must be +1 or -1".into()));
        }
        Ok(Self { n, root })
    }

    pub fn leaf(n: usize, label: i8) -> Result<Self> {
        Self::new(n, Node::Leaf(label))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Number of leaves.
    pub fn size(&self) -> usize {
        self.root.leaves()
    }

    pub fn eval(&self, x: usize) -> i8 {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf(v) => return *v,
                Node::Split { var, zero, one } => {
                    node = if bit_of(self.n, x, *var) { one } else { zero };
                }
            }
        }
    }

    pub fn to_function(&self) -> BooleanFunction {
        BooleanFunction::from_fn(self.n, |x| self.eval(x)).expect("tree validated at construction")
    }

    /// Parses the S-expression form written by `Display`.
    pub fn parse(n: usize, text: &str) -> Result<Self> {
        let tokens: Vec<String> = text
            .replace('(', " ( ")
            .replace(')', " ) ")
            .split_whitespace()
            .map(str::to_owned)
            .collect();
        let mut pos = 0;
        let root = parse_node(&tokens, &mut pos)?;
        if pos != tokens.len() {
            return Err(Error::Tree(format!("trailing input at token {pos}")));
        }
        Self::new(n, root)
    }
}

fn parse_node(tokens: &[String], pos: &mut usize) -> Result<Node> {
    let mut next = |what: &str| -> Result<String> {
        let t = tokens
            .get(*pos)
            .cloned()
            .ok_or_else(|| Error::Tree(format!("unexpected end of input, expected {what}")))?;
        *pos += 1;
        Ok(t)
    };
    let open = next("'('")?;
    if open != "(" {
        return Err(Error::Tree(format!("expected '(' but found {open:?}")));
    }
    let head = next("'var' or 'leaf'")?;
    let node = match head.as_str() {
        "leaf" => {
            let v = next("label")?;
            let label: i8 = v
                .parse()
                .map_err(|_| Error::Tree(format!("bad leaf label {v:?}")))?;
            Node::Leaf(label)
        }
        "var" => {
            let v = next("variable index")?;
            let var: usize = v
                .parse()
                .map_err(|_| Error::Tree(format!("bad variable index {v:?}")))?;
            let zero = parse_node(tokens, pos)?;
            let one = parse_node(tokens, pos)?;
            Node::Split {
                var,
                zero: Box::new(zero),
                one: Box::new(one),
            }
        }
        other => return Err(Error::Tree(format!("unknown node kind {other:?}"))),
    };
    let close = tokens.get(*pos).map(String::as_str);
    if close != Some(")") {
        return Err(Error::Tree("missing ')'".into()));
    }
    *pos += 1;
    Ok(node)
}

impl fmt::Display for DecisionTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.root.write_sexpr(&mut s);
        f.write_str(&s)
    }
}

impl FromStr for Node {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        DecisionTree::parse(crate::boolean::MAX_BITS, s).map(|t| t.root)
    }
}

/// Grows a tree with exactly `t` leaves by repeatedly splitting a uniformly
/// chosen leaf on a variable not yet used along its path.
pub fn random_tree<R: Rng + ?Sized>(n: usize, t: usize, rng: &mut R) -> Result<DecisionTree> {
    check_bits(n)?;
    if t == 0 || t > 1 << n {
        return Err(Error::Param {
            name: "t",
            value: t as f64,
            expected: "1 <= t <= 2^n",
        });
    }

    enum Slot {
        Leaf { path: Vec<usize> },
        Split { var: usize, zero: usize, one: usize },
    }
    let mut arena = vec![Slot::Leaf { path: Vec::new() }];
    let mut leaves = vec![0usize];
    while leaves.len() < t {
        // With t <= 2^n some leaf always has depth < n.
        let open: Vec<usize> = (0..leaves.len())
            .filter(|&i| matches!(&arena[leaves[i]], Slot::Leaf { path } if path.len() < n))
            .collect();
        let pick = *open.choose(rng).expect("a splittable leaf exists");
        let id = leaves[pick];
        let path = match &arena[id] {
            Slot::Leaf { path } => path.clone(),
            Slot::Split { .. } => unreachable!(),
        };
        let free: Vec<usize> = (0..n).filter(|v| !path.contains(v)).collect();
        let var = *free.choose(rng).expect("depth < n");
        let mut child_path = path;
        child_path.push(var);
        let zero = arena.len();
        arena.push(Slot::Leaf {
            path: child_path.clone(),
        });
        let one = arena.len();
        arena.push(Slot::Leaf { path: child_path });
        arena[id] = Slot::Split { var, zero, one };
        leaves.swap_remove(pick);
        leaves.push(zero);
        leaves.push(one);
    }

    let mut labels = vec![0i8; arena.len()];
    for (id, slot) in arena.iter().enumerate() {
        if matches!(slot, Slot::Leaf { .. }) {
            labels[id] = if rng.random::<bool>() { 1 } else { -1 };
        }
    }
    fn build(arena: &[Slot], labels: &[i8], id: usize) -> Node {
        match &arena[id] {
            Slot::Leaf { .. } => Node::Leaf(labels[id]),
            Slot::Split { var, zero, one } => Node::Split {
                var: *var,
                zero: Box::new(build(arena, labels, *zero)),
                one: Box::new(build(arena, labels, *one)),
            },
        }
    }
    DecisionTree::new(n, build(&arena, &labels, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const AND: &str = "(var 0 (leaf -1) (var 1 (leaf -1) (leaf +1)))";

    #[test]
    fn constant_and_dictator() {
        let c = DecisionTree::leaf(3, 1).unwrap();
        assert!((0..8).all(|x| c.eval(x) == 1));
        assert_eq!(c.to_function().values(), &[1; 8]);

        // x_0 = 1 selects the `one` branch.
        let d = DecisionTree::parse(1, "(var 0 (leaf +1) (leaf -1))").unwrap();
        assert_eq!(d.to_function().values(), &[1, -1]);
        let d2 = DecisionTree::parse(3, "(var 0 (leaf -1) (leaf +1))").unwrap();
        assert_eq!(d2.eval(0b100), 1);
    }

    #[test]
    fn and_tree() {
        let t = DecisionTree::parse(2, AND).unwrap();
        assert_eq!(t.size(), 3);
        assert_eq!(t.eval(0b10), -1);
        // Oracle: x_0 AND x_1 with x_0 the high bit.
        for x in 0..4 {
            let want = if x & 0b10 != 0 && x & 0b01 != 0 { 1 } else { -1 };
            assert_eq!(t.eval(x), want);
        }
        assert_eq!(t.to_function().values(), &[-1, -1, -1, 1]);
    }

    #[test]
    fn sexpr_round_trip() {
        let t = DecisionTree::parse(2, AND).unwrap();
        assert_eq!(t.to_string(), AND);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = random_tree(7, 12, &mut rng).unwrap();
        assert_eq!(DecisionTree::parse(7, &r.to_string()).unwrap(), r);
    }

    #[test]
    fn parse_errors() {
        assert!(DecisionTree::parse(2, "(var 2 (leaf 1) (leaf 1))").is_err());
        assert!(DecisionTree::parse(2, "(leaf 0)").is_err());
        assert!(DecisionTree::parse(2, "(var 0 (leaf 1))").is_err());
        assert!(DecisionTree::parse(2, "(leaf 1) extra").is_err());
        assert!(DecisionTree::parse(2, "(node 1)").is_err());
    }

    #[test]
    fn small_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let one = random_tree(4, 1, &mut rng).unwrap();
        assert!(matches!(one.root(), Node::Leaf(_)));
        let two = random_tree(4, 2, &mut rng).unwrap();
        match two.root() {
            Node::Split { zero, one, .. } => {
                assert!(matches!(**zero, Node::Leaf(_)));
                assert!(matches!(**one, Node::Leaf(_)));
            }
            Node::Leaf(_) => panic!("expected a split"),
        }
        assert!(random_tree(4, 0, &mut rng).is_err());
        assert!(random_tree(4, 17, &mut rng).is_err());
        assert_eq!(random_tree(4, 16, &mut rng).unwrap().size(), 16);
    }

    #[test]
    fn deterministic_under_seed() {
        let a = random_tree(8, 8, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        let b = random_tree(8, 8, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        assert_eq!(a, b);
    }

    fn paths_distinct(node: &Node, seen: &mut Vec<usize>) -> bool {
        match node {
            Node::Leaf(_) => true,
            Node::Split { var, zero, one } => {
                if seen.contains(var) {
                    return false;
                }
                seen.push(*var);
                let ok = paths_distinct(zero, seen) && paths_distinct(one, seen);
                seen.pop();
                ok
            }
        }
    }

    proptest! {
        #[test]
        fn random_trees_are_valid(n in 1usize..=10, t_raw in 1usize..=40, seed in any::<u64>()) {
            let t = t_raw.min(1 << n);
            let tree = random_tree(n, t, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            prop_assert_eq!(tree.size(), t);
            prop_assert!(paths_distinct(tree.root(), &mut Vec::new()));
            let f = tree.to_function();
            for x in 0..f.len() {
                prop_assert_eq!(f.value(x), tree.eval(x));
            }
        }
    }
}
