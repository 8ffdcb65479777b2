//! Logical forms, templates, and slot assignments.
//!
//! A logical form is an ordered tree rendered as a parenthesized
//! s-expression. Templates are logical forms with concrete atoms replaced
//! by typed slot variables: every entity atom becomes the entity slot
//! `v_e` and every variable name becomes the shared variable slot `v_a`.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

mod parse;
mod template;

pub use parse::{parse_lf, parse_lf_with, parse_template, parse_tree};
pub use template::{extract_template, fill_template};

/// Reserved token for the shared variable slot.
pub const VAR_SLOT_TOKEN: &str = "v_a";
/// Reserved token for the typed entity slot.
pub const ENTITY_SLOT_TOKEN: &str = "v_e";

#[derive(Debug, Error, PartialEq)]
pub enum LfError {
    #[error("unbalanced parentheses")]
    UnbalancedParens,
    #[error("empty expression")]
    EmptyExpression,
    #[error("illegal token character {0:?}")]
    IllegalToken(char),
    #[error("trailing tokens after complete expression")]
    TrailingTokens,
    #[error("expected a symbol in head position")]
    ExpectedSymbol,
    #[error("leaf `{0}` matches neither atom category and is not a predicate term")]
    UnknownAtomCategory(String),
    #[error("concrete atom `{0}` is not allowed inside a template")]
    AtomInTemplate(String),
    #[error("slot arity mismatch: template has {want_entity} entity / {want_var} variable slots, assignment carries {got_entity} / {got_var}")]
    SlotArityMismatch {
        want_entity: usize,
        want_var: usize,
        got_entity: usize,
        got_var: usize,
    },
    #[error("lexicon entry `{0}` collides with the variable pattern")]
    LexiconConflict(String),
    #[error("utterance must contain at least one token")]
    EmptyUtterance,
}

/// The two slot-variable types: `v_e` for entity atoms, `v_a` for the
/// shared variable name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SlotType {
    Entity,
    Variable,
}

impl SlotType {
    pub fn token(self) -> &'static str {
        match self {
            SlotType::Entity => ENTITY_SLOT_TOKEN,
            SlotType::Variable => VAR_SLOT_TOKEN,
        }
    }
}

/// A collapsed idiom: a mined subtree pattern addressed by a unique
/// symbol. Nodes carrying an `IdiomRef` behave as single leaves; the
/// pattern is retained so actions and expansion can see through them.
#[derive(Clone)]
pub struct IdiomRef(Arc<IdiomDef>);

#[derive(Clone, Debug)]
pub struct IdiomDef {
    pub symbol: String,
    pub pattern: Tree,
}

impl IdiomRef {
    pub fn new(symbol: impl Into<String>, pattern: Tree) -> Self {
        IdiomRef(Arc::new(IdiomDef {
            symbol: symbol.into(),
            pattern,
        }))
    }

    pub fn symbol(&self) -> &str {
        &self.0.symbol
    }

    pub fn pattern(&self) -> &Tree {
        &self.0.pattern
    }
}

impl fmt::Debug for IdiomRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IdiomRef({})", self.0.symbol)
    }
}

// Idiom identity is the collapsed symbol; the normalizer guarantees the
// symbol-to-pattern mapping is injective.
impl PartialEq for IdiomRef {
    fn eq(&self, other: &Self) -> bool {
        self.0.symbol == other.0.symbol
    }
}
impl Eq for IdiomRef {}
impl std::hash::Hash for IdiomRef {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.symbol.hash(state);
    }
}

/// Node label in a semantic tree or template.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum NodeLabel {
    /// Predicate symbol or term (internal node or bare term leaf).
    Pred(String),
    /// Concrete atom mentioned in an utterance: an entity or a variable name.
    Atom(String),
    /// Typed slot placeholder inside a template.
    Slot(SlotType),
    /// Collapsed idiom node introduced by template normalization.
    Idiom(IdiomRef),
}

impl NodeLabel {
    /// Canonical token used by the s-expression rendering.
    pub fn token(&self) -> &str {
        match self {
            NodeLabel::Pred(s) | NodeLabel::Atom(s) => s,
            NodeLabel::Slot(t) => t.token(),
            NodeLabel::Idiom(i) => i.symbol(),
        }
    }

    pub fn is_predicate(&self) -> bool {
        matches!(self, NodeLabel::Pred(_))
    }

    pub fn is_slot(&self) -> bool {
        matches!(self, NodeLabel::Slot(_))
    }
}

/// An ordered tree of labeled nodes. Child order is significant.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Tree {
    pub label: NodeLabel,
    pub children: Vec<Tree>,
}

impl Tree {
    pub fn leaf(label: NodeLabel) -> Self {
        Tree {
            label,
            children: Vec::new(),
        }
    }

    pub fn pred(symbol: impl Into<String>, children: Vec<Tree>) -> Self {
        Tree {
            label: NodeLabel::Pred(symbol.into()),
            children,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Number of nodes, counting collapsed idiom nodes as one.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Tree::size).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(Tree::depth).max().unwrap_or(0)
    }

    /// Pre-order node iteration.
    pub fn preorder(&self) -> impl Iterator<Item = &Tree> {
        let mut stack = vec![self];
        std::iter::from_fn(move || {
            let node = stack.pop()?;
            for child in node.children.iter().rev() {
                stack.push(child);
            }
            Some(node)
        })
    }

    /// Canonical s-expression: a bare token for leaves, otherwise
    /// `( head child ... )` with single spaces. Idiom nodes render as
    /// their collapsed symbol.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        self.write_canonical(&mut out);
        out
    }

    fn write_canonical(&self, out: &mut String) {
        if self.is_leaf() {
            out.push_str(self.label.token());
        } else {
            out.push('(');
            out.push(' ');
            out.push_str(self.label.token());
            for child in &self.children {
                out.push(' ');
                child.write_canonical(out);
            }
            out.push(' ');
            out.push(')');
        }
    }

    /// Replaces every idiom node by its stored pattern, recursively.
    pub fn expand_idioms(&self) -> Tree {
        match &self.label {
            NodeLabel::Idiom(idiom) => idiom.pattern().expand_idioms(),
            _ => Tree {
                label: self.label.clone(),
                children: self.children.iter().map(Tree::expand_idioms).collect(),
            },
        }
    }

    /// Distinct predicate symbols, looking through idiom nodes.
    pub fn predicate_symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_predicates(&mut out);
        out
    }

    fn collect_predicates(&self, out: &mut BTreeSet<String>) {
        match &self.label {
            NodeLabel::Pred(s) => {
                out.insert(s.clone());
            }
            NodeLabel::Idiom(i) => i.pattern().collect_predicates(out),
            _ => {}
        }
        for child in &self.children {
            child.collect_predicates(out);
        }
    }

    /// Slot counts `(entity, variable)`, looking through idiom nodes.
    pub fn slot_counts(&self) -> (usize, usize) {
        let mut entity = 0;
        let mut var = 0;
        self.count_slots(&mut entity, &mut var);
        (entity, var)
    }

    fn count_slots(&self, entity: &mut usize, var: &mut usize) {
        match &self.label {
            NodeLabel::Slot(SlotType::Entity) => *entity += 1,
            NodeLabel::Slot(SlotType::Variable) => *var += 1,
            NodeLabel::Idiom(i) => i.pattern().count_slots(entity, var),
            _ => {}
        }
        for child in &self.children {
            child.count_slots(entity, var);
        }
    }

    pub fn contains_atoms(&self) -> bool {
        self.preorder()
            .any(|n| matches!(n.label, NodeLabel::Atom(_)))
    }

    pub fn contains_idioms(&self) -> bool {
        self.preorder()
            .any(|n| matches!(n.label, NodeLabel::Idiom(_)))
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

/// A concrete logical form: predicates plus atom leaves. Slot
/// placeholders are tolerated (templates embed into this type); idiom
/// nodes are not.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SemanticTree {
    root: Tree,
}

impl SemanticTree {
    pub fn new(root: Tree) -> Self {
        debug_assert!(!root.contains_idioms());
        SemanticTree { root }
    }

    pub fn root(&self) -> &Tree {
        &self.root
    }

    pub fn into_root(self) -> Tree {
        self.root
    }

    pub fn canonical(&self) -> String {
        self.root.canonical()
    }
}

impl fmt::Display for SemanticTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

/// Canonical rendering of a semantic tree; the inverse of [`parse_lf`]
/// on canonical strings.
pub fn serialize_lf(tree: &SemanticTree) -> String {
    tree.canonical()
}

/// An abstract tree: a logical form whose atoms were replaced by typed
/// slot variables. May contain collapsed idiom nodes after normalization.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Template {
    root: Tree,
}

impl Template {
    pub fn new(root: Tree) -> Result<Self, LfError> {
        if let Some(atom) = root
            .preorder()
            .find(|n| matches!(n.label, NodeLabel::Atom(_)))
        {
            return Err(LfError::AtomInTemplate(atom.label.token().to_string()));
        }
        Ok(Template { root })
    }

    pub fn root(&self) -> &Tree {
        &self.root
    }

    pub fn canonical(&self) -> String {
        self.root.canonical()
    }

    /// (entity, variable) slot counts of the fully expanded tree.
    pub fn slot_counts(&self) -> (usize, usize) {
        self.root.slot_counts()
    }

    pub fn entity_slot_count(&self) -> usize {
        self.slot_counts().0
    }

    pub fn variable_slot_count(&self) -> usize {
        self.slot_counts().1
    }

    /// Template with all idiom nodes replaced by their patterns.
    pub fn expanded(&self) -> Template {
        Template {
            root: self.root.expand_idioms(),
        }
    }

    pub fn predicate_symbols(&self) -> BTreeSet<String> {
        self.root.predicate_symbols()
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

/// Slot values stripped from a logical form, listed in pre-order over
/// the expanded template.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SlotAssignment {
    pub entity_values: Vec<String>,
    pub variable_values: Vec<String>,
}

impl SlotAssignment {
    pub fn is_empty(&self) -> bool {
        self.entity_values.is_empty() && self.variable_values.is_empty()
    }
}

/// One token of an utterance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub index: usize,
}

/// A tokenized natural-language utterance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Utterance {
    tokens: Vec<Token>,
}

impl Utterance {
    pub fn new(tokens: Vec<Token>) -> Result<Self, LfError> {
        if tokens.is_empty() {
            return Err(LfError::EmptyUtterance);
        }
        debug_assert!(tokens.iter().enumerate().all(|(i, t)| t.index == i));
        Ok(Utterance { tokens })
    }

    /// Whitespace tokenization with 0-based indices.
    pub fn from_text(text: &str) -> Result<Self, LfError> {
        let tokens: Vec<Token> = text
            .split_whitespace()
            .enumerate()
            .map(|(index, text)| Token {
                text: text.to_string(),
                index,
            })
            .collect();
        Utterance::new(tokens)
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn text(&self) -> String {
        self.tokens
            .iter()
            .map(|t| t.text.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Atom recognition rules: entities are leaves containing `:` or listed
/// explicitly; variables are leaves starting with `$`. The explicit list
/// overrides nothing for variables — the two categories stay disjoint.
#[derive(Clone, Debug, Default)]
pub struct AtomLexicon {
    entity_atoms: BTreeSet<String>,
}

impl AtomLexicon {
    pub fn new(entity_atoms: impl IntoIterator<Item = String>) -> Result<Self, LfError> {
        let mut set = BTreeSet::new();
        for atom in entity_atoms {
            if atom.starts_with('$') {
                return Err(LfError::LexiconConflict(atom));
            }
            set.insert(atom);
        }
        Ok(AtomLexicon { entity_atoms: set })
    }

    /// Loads a lexicon file: one atom per line, UTF-8, blank lines ignored.
    pub fn load(path: &Path) -> std::io::Result<Result<Self, LfError>> {
        let text = std::fs::read_to_string(path)?;
        Ok(Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_string),
        ))
    }

    pub fn is_variable(&self, symbol: &str) -> bool {
        symbol.starts_with('$')
    }

    pub fn is_entity(&self, symbol: &str) -> bool {
        !self.is_variable(symbol) && (symbol.contains(':') || self.entity_atoms.contains(symbol))
    }

    /// Slot type this leaf symbol would fill, if any.
    pub fn classify(&self, symbol: &str) -> Option<SlotType> {
        if self.is_variable(symbol) {
            Some(SlotType::Variable)
        } else if self.is_entity(symbol) {
            Some(SlotType::Entity)
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests;
