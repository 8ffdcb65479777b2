//! Seeded synthetic corpora: random trees for round-trip checks and a
//! small compositional grammar for end-to-end benchmarks.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::lf::{NodeLabel, SemanticTree, SlotType, Template, Tree};

const PRED_POOL: &[&str] = &[
    "answer", "lambda", "exists", "and", "or", "count", "argmax", "argmin", "loc", "next_to",
    "size", "area", "flight", "fare", "job", "salary",
];
const TERM_POOL: &[&str] = &["e", "i", "all", "true"];
const ENTITY_POOL: &[&str] = &[
    "atlanta:ci", "boston:ci", "texas:st", "mn:st", "dallas:ci", "10:do", "4000:do",
];

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_leaf_label(rng: &mut impl Rng, concrete: bool) -> NodeLabel {
    match rng.gen_range(0..4u8) {
        0 => NodeLabel::Pred(TERM_POOL.choose(rng).unwrap().to_string()),
        1 => {
            if concrete {
                NodeLabel::Atom(ENTITY_POOL.choose(rng).unwrap().to_string())
            } else {
                NodeLabel::Slot(SlotType::Entity)
            }
        }
        _ => {
            if concrete {
                NodeLabel::Atom(format!("${}", rng.gen_range(0..3)))
            } else {
                NodeLabel::Slot(SlotType::Variable)
            }
        }
    }
}

fn random_tree(rng: &mut impl Rng, depth: usize, max_depth: usize, max_branch: usize, concrete: bool) -> Tree {
    let make_leaf = depth >= max_depth || (depth > 0 && rng.gen_bool(0.35));
    if make_leaf {
        return Tree::leaf(random_leaf_label(rng, concrete));
    }
    let head = PRED_POOL.choose(rng).unwrap().to_string();
    let branch = rng.gen_range(1..=max_branch.max(1));
    let children = (0..branch)
        .map(|_| random_tree(rng, depth + 1, max_depth, max_branch, concrete))
        .collect();
    Tree {
        label: NodeLabel::Pred(head),
        children,
    }
}

/// A random abstract tree with slot placeholders.
pub fn random_template(rng: &mut impl Rng, max_depth: usize, max_branch: usize) -> Template {
    Template::new(random_tree(rng, 0, max_depth.max(1), max_branch, false))
        .expect("generator emits no atoms")
}

/// A random concrete logical form over the built-in atom pools.
pub fn random_lf(rng: &mut impl Rng, max_depth: usize, max_branch: usize) -> SemanticTree {
    SemanticTree::new(random_tree(rng, 0, max_depth.max(1), max_branch, true))
}

/// Templates built around a few fixed deep blocks, so that mining finds
/// collapsible idioms: each block always occurs as a whole subtree.
pub fn idiom_corpus(rng: &mut impl Rng, n: usize) -> Vec<Template> {
    let block_a = Tree::pred(
        "rank",
        vec![
            Tree::pred("score", vec![Tree::leaf(NodeLabel::Slot(SlotType::Variable))]),
            Tree::leaf(NodeLabel::Pred("top".into())),
        ],
    );
    let block_b = Tree::pred(
        "filter",
        vec![
            Tree::pred("flag", vec![Tree::leaf(NodeLabel::Slot(SlotType::Variable))]),
            Tree::leaf(NodeLabel::Pred("on".into())),
        ],
    );
    let block_c = Tree::pred(
        "wrap",
        vec![block_a.clone(), Tree::leaf(NodeLabel::Pred("zz".into()))],
    );
    let blocks = [block_a, block_b, block_c];
    let varying: Vec<&str> = vec![
        "river", "city", "state", "lake", "peak", "road", "park", "bay",
    ];
    (0..n)
        .map(|_| {
            let p = *varying.choose(rng).unwrap();
            let block = blocks.choose(rng).unwrap().clone();
            let root = if rng.gen_bool(0.5) { "query" } else { "fetch" };
            let head = Tree::pred(
                p,
                vec![
                    Tree::leaf(NodeLabel::Slot(SlotType::Variable)),
                    Tree::leaf(NodeLabel::Slot(SlotType::Entity)),
                ],
            );
            Template::new(Tree::pred(root, vec![head, block]))
                .expect("generator emits no atoms")
        })
        .collect()
}

/// Target predicates of the compositional grammar. Utterance tokens use
/// the same strings, which gives the attention prior real signal.
pub const GRAMMAR_PREDICATES: &[&str] = &[
    "river", "city", "state", "lake", "peak", "road", "park", "bay", "town", "port", "mine",
    "farm",
];

const GRAMMAR_ENTITIES: &[(&str, &str)] = &[
    ("ohio", "ohio:s"),
    ("utah", "utah:s"),
    ("iowa", "iowa:s"),
    ("texas", "texas:s"),
];

/// One utterance/logical-form pair of the synthetic grammar.
fn grammar_pair(shape: usize, pred: &str, entity: (&str, &str)) -> (String, String) {
    let (etok, eatom) = entity;
    match shape {
        0 => (
            format!("list {pred} in {etok}"),
            format!("( answer ( exists $0 ( and ( {pred} $0 ) ( in $0 {eatom} ) ) ) )"),
        ),
        1 => (
            format!("how many {pred}"),
            format!("( answer ( count $0 ( {pred} $0 ) ) )"),
        ),
        _ => (
            format!("largest {pred} in {etok}"),
            format!("( answer ( largest $0 ( and ( {pred} $0 ) ( in $0 {eatom} ) ) ) )"),
        ),
    }
}

/// Generates the compositional benchmark corpus: every predicate appears
/// in all three shapes, each shape instantiated with several entities so
/// no template is unique. Returns (utterance, lf) text pairs.
pub fn grammar_corpus(seed: u64) -> Vec<(String, String)> {
    let mut rng = seeded_rng(seed);
    let mut pairs = Vec::new();
    for pred in GRAMMAR_PREDICATES {
        for shape in 0..3 {
            // Two entity variants per (predicate, shape) keep every
            // template non-unique; shape 1 has no entity, so vary it by
            // duplication.
            let mut entities: Vec<(&str, &str)> = GRAMMAR_ENTITIES.to_vec();
            entities.shuffle(&mut rng);
            for entity in entities.iter().take(2) {
                pairs.push(grammar_pair(shape, pred, *entity));
            }
        }
    }
    pairs.shuffle(&mut rng);
    pairs
}

/// Renders pairs as dataset TSV.
pub fn to_tsv(pairs: &[(String, String)]) -> String {
    let mut out = String::new();
    for (utterance, lf) in pairs {
        out.push_str(utterance);
        out.push('\t');
        out.push_str(lf);
        out.push('\n');
    }
    out
}
