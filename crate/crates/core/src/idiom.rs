//! Frequent-subtree mining and reversible template normalization.
//!
//! An idiom is a frequent complete subtree shared across templates. The
//! normalizer collapses each one into a single tree node so the
//! transition system can generate it with one action; the inventory
//! keeps the collapse reversible.
//!
//! Occurrence semantics: a pattern occurs in a template when its nodes
//! map to a connected, order-preserving node subset with equal labels —
//! a pattern child may match any later sibling, and matched nodes may
//! have extra unmatched children. Collapsing, by contrast, only rewrites
//! occurrences that cover an entire subtree, which is what keeps
//! `expand(normalize(c)) == c` exact.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lf::{IdiomRef, NodeLabel, Template, Tree};

#[derive(Debug, Error, PartialEq)]
pub enum IdiomError {
    #[error("minimal support must be at least 2, got {0}")]
    InvalidMinSupport(usize),
    #[error("unknown idiom symbol `{0}`")]
    UnknownIdiomSymbol(String),
    #[error("fixed-sibling test requires equal root labels, got `{0}` and `{1}`")]
    IncompatibleRoots(String, String),
    #[error("bad inventory json: {0}")]
    BadInventory(String),
}

/// A subtree pattern, identified up to structure by its canonical key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubtreePattern {
    tree: Tree,
}

impl SubtreePattern {
    pub fn new(tree: Tree) -> Self {
        SubtreePattern { tree }
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn canonical_key(&self) -> String {
        self.tree.canonical()
    }

    pub fn size(&self) -> usize {
        self.tree.size()
    }
}

/// Does `pattern` match at `node`? Children embed as an order-preserving
/// subsequence; matched nodes may carry extra children.
fn occurs_at(pattern: &Tree, node: &Tree) -> bool {
    if pattern.label != node.label {
        return false;
    }
    // Greedy leftmost embedding of pattern children into node children.
    let mut next = 0;
    'outer: for pc in &pattern.children {
        while next < node.children.len() {
            let candidate = &node.children[next];
            next += 1;
            if occurs_at(pc, candidate) {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

/// Does `pattern` occur anywhere inside `tree`?
pub fn occurs_in(pattern: &Tree, tree: &Tree) -> bool {
    tree.preorder().any(|node| occurs_at(pattern, node))
}

/// Number of templates the pattern occurs in, counted once per template.
pub fn subtree_support(pattern: &SubtreePattern, corpus: &[Template]) -> usize {
    corpus
        .iter()
        .filter(|t| occurs_in(&pattern.tree, t.root()))
        .count()
}

/// Enumerates every connected subtree pattern of `tree` with at most
/// `max_size` nodes, keyed canonically.
fn enumerate_patterns(tree: &Tree, max_size: usize, out: &mut BTreeMap<String, Tree>) {
    for node in tree.preorder() {
        for pattern in patterns_rooted_at(node, max_size) {
            out.entry(pattern.canonical()).or_insert(pattern);
        }
    }
}

fn patterns_rooted_at(node: &Tree, budget: usize) -> Vec<Tree> {
    if budget == 0 {
        return Vec::new();
    }
    let mut results = vec![Tree::leaf(node.label.clone())];
    if node.children.is_empty() {
        return results;
    }
    // Options per child, including "skip" encoded by the combiner.
    let child_options: Vec<Vec<Tree>> = node
        .children
        .iter()
        .map(|c| patterns_rooted_at(c, budget - 1))
        .collect();
    let mut chosen: Vec<Tree> = Vec::new();
    combine(
        &child_options,
        0,
        budget - 1,
        &mut chosen,
        &mut |children: &[Tree]| {
            if !children.is_empty() {
                results.push(Tree {
                    label: node.label.clone(),
                    children: children.to_vec(),
                });
            }
        },
    );
    results
}

fn combine(
    options: &[Vec<Tree>],
    index: usize,
    budget: usize,
    chosen: &mut Vec<Tree>,
    emit: &mut impl FnMut(&[Tree]),
) {
    if index == options.len() {
        emit(chosen);
        return;
    }
    // Skip this child.
    combine(options, index + 1, budget, chosen, emit);
    for option in &options[index] {
        let size = option.size();
        if size <= budget {
            chosen.push(option.clone());
            combine(options, index + 1, budget - size, chosen, emit);
            chosen.pop();
        }
    }
}

/// Pattern supports over a corpus, by canonical key.
fn mine_supports(
    corpus: &[Template],
    max_size: usize,
) -> (BTreeMap<String, Tree>, BTreeMap<String, usize>) {
    let mut patterns: BTreeMap<String, Tree> = BTreeMap::new();
    let mut supports: BTreeMap<String, usize> = BTreeMap::new();
    for template in corpus {
        let mut local = BTreeMap::new();
        enumerate_patterns(template.root(), max_size, &mut local);
        for (key, tree) in local {
            *supports.entry(key.clone()).or_insert(0) += 1;
            patterns.entry(key).or_insert(tree);
        }
    }
    (patterns, supports)
}

/// A pattern is complete when no strict supertree occurs essentially as
/// often: every one-node extension realized in the corpus has support
/// strictly below `ratio * support(pattern)`. With the default ratio of
/// 1.0 this is exact support equality, matching subtrees that are always
/// embedded in one fixed larger structure.
pub fn is_complete(pattern: &SubtreePattern, corpus: &[Template]) -> bool {
    is_complete_with(pattern, corpus, pattern.size() + 1, 1.0)
}

fn is_complete_with(
    pattern: &SubtreePattern,
    corpus: &[Template],
    max_size: usize,
    ratio: f64,
) -> bool {
    let support = subtree_support(pattern, corpus);
    if support == 0 {
        return true;
    }
    let (patterns, supports) = mine_supports(corpus, max_size);
    let threshold = ratio * support as f64;
    for (key, candidate) in &patterns {
        if candidate.size() == pattern.size() + 1
            && supports[key] as f64 >= threshold
            && occurs_in(&pattern.tree, candidate)
        {
            return false;
        }
    }
    true
}

/// Joins two patterns under their shared root: the merged pattern keeps
/// `a`'s children followed by `b`'s.
pub fn merge_siblings(
    a: &SubtreePattern,
    b: &SubtreePattern,
) -> Result<SubtreePattern, IdiomError> {
    if a.tree.label != b.tree.label {
        return Err(IdiomError::IncompatibleRoots(
            a.tree.label.token().to_string(),
            b.tree.label.token().to_string(),
        ));
    }
    let mut children = a.tree.children.clone();
    children.extend(b.tree.children.iter().cloned());
    Ok(SubtreePattern::new(Tree {
        label: a.tree.label.clone(),
        children,
    }))
}

/// Two sibling patterns are fixed siblings when merging them loses no
/// occurrences: `support(merge(a,b)) == support(a) == support(b)`.
pub fn fixed_sibling_test(
    a: &SubtreePattern,
    b: &SubtreePattern,
    corpus: &[Template],
) -> Result<bool, IdiomError> {
    let merged = merge_siblings(a, b)?;
    let sa = subtree_support(a, corpus);
    let sb = subtree_support(b, corpus);
    let sm = subtree_support(&merged, corpus);
    Ok(sm == sa && sm == sb)
}

/// One mined idiom: its pattern, mined support, and collapsed symbol.
#[derive(Clone, Debug)]
pub struct IdiomEntry {
    pub idiom: IdiomRef,
    pub support: usize,
}

/// Ordered inventory of mined idioms. Later entries may reference
/// earlier collapsed symbols inside their patterns.
#[derive(Clone, Debug, Default)]
pub struct IdiomInventory {
    idioms: Vec<IdiomEntry>,
    by_symbol: BTreeMap<String, IdiomRef>,
    min_support: usize,
}

impl IdiomInventory {
    pub fn empty(min_support: usize) -> Self {
        IdiomInventory {
            idioms: Vec::new(),
            by_symbol: BTreeMap::new(),
            min_support,
        }
    }

    fn push(&mut self, idiom: IdiomRef, support: usize) {
        self.by_symbol
            .insert(idiom.symbol().to_string(), idiom.clone());
        self.idioms.push(IdiomEntry { idiom, support });
    }

    pub fn get(&self, symbol: &str) -> Option<&IdiomRef> {
        self.by_symbol.get(symbol)
    }

    pub fn entries(&self) -> &[IdiomEntry] {
        &self.idioms
    }

    pub fn len(&self) -> usize {
        self.idioms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idioms.is_empty()
    }

    pub fn min_support(&self) -> usize {
        self.min_support
    }

    pub fn to_json(&self) -> String {
        let doc = InventoryJson {
            min_support: self.min_support,
            idioms: self
                .idioms
                .iter()
                .map(|e| IdiomJson {
                    pattern: e.idiom.pattern().canonical(),
                    support: e.support,
                    symbol: e.idiom.symbol().to_string(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("inventory serialization cannot fail")
    }

    /// Parses an inventory; patterns may reference earlier symbols.
    pub fn from_json(text: &str) -> Result<Self, IdiomError> {
        let doc: InventoryJson =
            serde_json::from_str(text).map_err(|e| IdiomError::BadInventory(e.to_string()))?;
        let mut inventory = IdiomInventory::empty(doc.min_support);
        for entry in doc.idioms {
            let template = crate::lf::parse_template(&entry.pattern, Some(&inventory))
                .map_err(|e| IdiomError::BadInventory(e.to_string()))?;
            let idiom = IdiomRef::new(entry.symbol, template.root().clone());
            inventory.push(idiom, entry.support);
        }
        Ok(inventory)
    }
}

#[derive(Serialize, Deserialize)]
struct InventoryJson {
    min_support: usize,
    idioms: Vec<IdiomJson>,
}

#[derive(Serialize, Deserialize)]
struct IdiomJson {
    pattern: String,
    support: usize,
    symbol: String,
}

/// Tuning knobs for the normalizer.
#[derive(Clone, Debug)]
pub struct NormalizeOptions {
    pub min_support: usize,
    /// Enumeration bound on pattern size, in nodes.
    pub max_pattern_size: usize,
    /// Completeness threshold: a supertree with support >= ratio *
    /// support(pattern) blocks the pattern. 1.0 means exact equality.
    pub completeness_ratio: f64,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        NormalizeOptions {
            min_support: 2,
            max_pattern_size: 8,
            completeness_ratio: 1.0,
        }
    }
}

/// Would collapsing this pattern save parse actions? Units (subtrees
/// whose children are all plain leaves) already cost a single GEN, so
/// only patterns with at least one non-terminal child qualify.
fn saves_actions(pattern: &Tree) -> bool {
    pattern
        .children
        .iter()
        .any(|c| !c.children.is_empty() || matches!(c.label, NodeLabel::Idiom(_)))
}

fn fresh_symbol(taken: &BTreeSet<String>, index: usize) -> String {
    let mut symbol = format!("idiom_{index}");
    while taken.contains(&symbol) {
        symbol.push('_');
    }
    symbol
}

fn collapse_full(tree: &Tree, pattern: &Tree, idiom: &IdiomRef) -> Tree {
    if tree == pattern {
        return Tree::leaf(NodeLabel::Idiom(idiom.clone()));
    }
    Tree {
        label: tree.label.clone(),
        children: tree
            .children
            .iter()
            .map(|c| collapse_full(c, pattern, idiom))
            .collect(),
    }
}

/// Mines frequent complete subtrees and collapses them greedily until no
/// candidate changes the corpus. Returns the normalized templates and
/// the inventory that reverses the collapse.
pub fn normalize_templates(
    corpus: &[Template],
    min_support: usize,
) -> Result<(Vec<Template>, IdiomInventory), IdiomError> {
    normalize_templates_with(
        corpus,
        &NormalizeOptions {
            min_support,
            ..NormalizeOptions::default()
        },
    )
}

pub fn normalize_templates_with(
    corpus: &[Template],
    options: &NormalizeOptions,
) -> Result<(Vec<Template>, IdiomInventory), IdiomError> {
    if options.min_support < 2 {
        return Err(IdiomError::InvalidMinSupport(options.min_support));
    }
    let mut taken: BTreeSet<String> = corpus
        .iter()
        .flat_map(|t| t.predicate_symbols())
        .collect();
    let mut current: Vec<Tree> = corpus.iter().map(|t| t.root().clone()).collect();
    let mut inventory = IdiomInventory::empty(options.min_support);

    loop {
        let templates: Vec<Template> = current
            .iter()
            .map(|t| Template::new(t.clone()).expect("normalization preserves templates"))
            .collect();
        let (patterns, supports) = mine_supports(&templates, options.max_pattern_size);
        let mut by_size: BTreeMap<usize, Vec<&String>> = BTreeMap::new();
        for (key, pattern) in &patterns {
            by_size.entry(pattern.size()).or_default().push(key);
        }

        // Candidates: frequent, action-saving, complete, with at least
        // one full-subtree occurrence to rewrite.
        let mut candidates: Vec<(usize, usize, &String)> = Vec::new();
        for (key, pattern) in &patterns {
            let support = supports[key];
            if support < options.min_support || pattern.size() < 2 || !saves_actions(pattern) {
                continue;
            }
            let threshold = options.completeness_ratio * support as f64;
            let blocked = by_size
                .get(&(pattern.size() + 1))
                .map(|bigger| {
                    bigger.iter().any(|k2| {
                        supports[*k2] as f64 >= threshold && occurs_in(pattern, &patterns[*k2])
                    })
                })
                .unwrap_or(false);
            if blocked {
                continue;
            }
            if !current
                .iter()
                .any(|t| t.preorder().any(|node| node == pattern))
            {
                continue;
            }
            candidates.push((support, pattern.size(), key));
        }
        // Greedy order: support desc, size desc, canonical key asc.
        candidates.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.cmp(&a.1)).then(a.2.cmp(b.2)));
        let Some(&(support, _, key)) = candidates.first() else {
            break;
        };
        let pattern = patterns[key].clone();
        let symbol = fresh_symbol(&taken, inventory.len());
        taken.insert(symbol.clone());
        let idiom = IdiomRef::new(symbol, pattern.clone());
        for tree in &mut current {
            *tree = collapse_full(tree, &pattern, &idiom);
        }
        inventory.push(idiom, support);
    }

    let normalized = current
        .into_iter()
        .map(|t| Template::new(t).expect("normalization preserves templates"))
        .collect();
    Ok((normalized, inventory))
}

/// Replaces every collapsed idiom node by its original subtree. Errors
/// on symbols the inventory does not know.
pub fn expand_idioms(
    templates: &[Template],
    inventory: &IdiomInventory,
) -> Result<Vec<Template>, IdiomError> {
    for template in templates {
        for node in template.root().preorder() {
            if let NodeLabel::Idiom(idiom) = &node.label {
                if inventory.get(idiom.symbol()).is_none() {
                    return Err(IdiomError::UnknownIdiomSymbol(idiom.symbol().to_string()));
                }
            }
        }
    }
    Ok(templates.iter().map(Template::expanded).collect())
}

/// Rewrites a corpus of templates with a previously mined inventory,
/// collapsing idioms in inventory order.
pub fn apply_inventory(templates: &[Template], inventory: &IdiomInventory) -> Vec<Template> {
    let mut current: Vec<Tree> = templates.iter().map(|t| t.root().clone()).collect();
    for entry in inventory.entries() {
        for tree in &mut current {
            *tree = collapse_full(tree, entry.idiom.pattern(), &entry.idiom);
        }
    }
    current
        .into_iter()
        .map(|t| Template::new(t).expect("collapse preserves templates"))
        .collect()
}
