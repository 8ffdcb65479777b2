//! Deterministic stack machine over abstract trees.
//!
//! Templates are generated by two transition actions: `GEN` pushes a
//! terminal unit (a leaf, a subtree whose children are all leaves, or a
//! collapsed idiom) and `REDUCE` applies an implication rule
//! `head :- body`, popping the body's non-terminal positions off the
//! stack and attaching the head as their parent with literal body items
//! interleaved as leaf children. The oracle derives the unique
//! left-to-right post-order action sequence of a template; the executor
//! inverts it.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lf::{
    IdiomRef, LfError, NodeLabel, SlotAssignment, SlotType, Template, Tree, ENTITY_SLOT_TOKEN,
    VAR_SLOT_TOKEN,
};

#[derive(Debug, Error, PartialEq)]
pub enum TransitionError {
    #[error("inapplicable action: {0}")]
    InapplicableAction(String),
    #[error("incomplete parse: stack holds {stack_len} trees at end")]
    IncompleteParse { stack_len: usize },
    #[error("invalid rule: {0}")]
    InvalidRule(String),
    #[error("invalid generated unit: {0}")]
    InvalidUnit(String),
}

/// One item of a rule body: a non-terminal to be popped from the stack,
/// or a literal leaf emitted by the reduce itself.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BodyItem {
    NonTerminal,
    Literal(NodeLabel),
}

impl BodyItem {
    pub fn token(&self) -> String {
        match self {
            BodyItem::NonTerminal => "NT".to_string(),
            BodyItem::Literal(label) => label.token().to_string(),
        }
    }
}

/// An implication rule `head :- body` with at least one non-terminal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rule {
    head: String,
    body: Vec<BodyItem>,
}

impl Rule {
    pub fn new(head: impl Into<String>, body: Vec<BodyItem>) -> Result<Self, TransitionError> {
        let head = head.into();
        if head.is_empty() {
            return Err(TransitionError::InvalidRule("empty head".into()));
        }
        if !body.iter().any(|b| matches!(b, BodyItem::NonTerminal)) {
            return Err(TransitionError::InvalidRule(format!(
                "rule {head} has no non-terminal in its body"
            )));
        }
        Ok(Rule { head, body })
    }

    pub fn head(&self) -> &str {
        &self.head
    }

    pub fn body(&self) -> &[BodyItem] {
        &self.body
    }

    /// Number of non-terminal body items (stack items consumed).
    pub fn arity(&self) -> usize {
        self.body
            .iter()
            .filter(|b| matches!(b, BodyItem::NonTerminal))
            .count()
    }

    pub fn key(&self) -> String {
        let items: Vec<String> = self.body.iter().map(BodyItem::token).collect();
        format!("{} :- {}", self.head, items.join(" "))
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

/// A transition action.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Action {
    /// Push a terminal unit: a leaf, an all-leaf-children subtree, or a
    /// collapsed idiom node.
    Gen(Tree),
    /// Pop the rule's non-terminals and attach the head as parent.
    Reduce(Rule),
}

impl Action {
    /// Canonical identity string; two actions are the same action iff
    /// their keys are equal.
    pub fn key(&self) -> String {
        match self {
            Action::Gen(unit) => format!("gen {}", unit.canonical()),
            Action::Reduce(rule) => format!("reduce {}", rule.key()),
        }
    }

    /// Predicate symbols this action produces, looking through idioms.
    pub fn predicates(&self) -> BTreeSet<String> {
        match self {
            Action::Gen(unit) => unit.predicate_symbols(),
            Action::Reduce(rule) => {
                let mut set = BTreeSet::new();
                set.insert(rule.head.clone());
                for item in &rule.body {
                    if let BodyItem::Literal(NodeLabel::Pred(s)) = item {
                        set.insert(s.clone());
                    }
                }
                set
            }
        }
    }

    /// Slot variables this action emits, in the order its slot decoders
    /// must fill them: pre-order of the expanded unit for GEN, body
    /// order for REDUCE.
    pub fn slot_types(&self) -> Vec<SlotType> {
        match self {
            Action::Gen(unit) => {
                let expanded = unit.expand_idioms();
                expanded
                    .preorder()
                    .filter_map(|n| match n.label {
                        NodeLabel::Slot(t) => Some(t),
                        _ => None,
                    })
                    .collect()
            }
            Action::Reduce(rule) => rule
                .body
                .iter()
                .filter_map(|b| match b {
                    BodyItem::Literal(NodeLabel::Slot(t)) => Some(*t),
                    _ => None,
                })
                .collect(),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

/// Immutable parser state: a stack of partial subtrees, bottom first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParserState {
    stack: Vec<Tree>,
    steps: usize,
    done: bool,
}

impl Default for ParserState {
    fn default() -> Self {
        Self::new()
    }
}

impl ParserState {
    pub fn new() -> Self {
        ParserState {
            stack: Vec::new(),
            steps: 0,
            done: false,
        }
    }

    pub fn stack(&self) -> &[Tree] {
        &self.stack
    }

    pub fn stack_len(&self) -> usize {
        self.stack.len()
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// True when the stack holds exactly one tree, i.e. stopping here
    /// yields a complete parse.
    pub fn can_finish(&self) -> bool {
        self.stack.len() == 1 && self.steps > 0
    }

    /// Marks the state finished. Only valid when the stack holds one
    /// complete tree.
    pub fn finish(&self) -> Result<ParserState, TransitionError> {
        if !self.can_finish() {
            return Err(TransitionError::IncompleteParse {
                stack_len: self.stack.len(),
            });
        }
        let mut next = self.clone();
        next.done = true;
        Ok(next)
    }
}

/// Applies one transition, returning the successor state.
pub fn apply_action(state: &ParserState, action: &Action) -> Result<ParserState, TransitionError> {
    if state.done {
        return Err(TransitionError::InapplicableAction(
            "parse is already complete".into(),
        ));
    }
    let mut next = state.clone();
    match action {
        Action::Gen(unit) => {
            if unit.contains_atoms() {
                return Err(TransitionError::InvalidUnit(unit.canonical()));
            }
            next.stack.push(unit.clone());
        }
        Action::Reduce(rule) => {
            let arity = rule.arity();
            if arity == 0 {
                return Err(TransitionError::InvalidRule(rule.key()));
            }
            if next.stack.len() < arity {
                return Err(TransitionError::InapplicableAction(format!(
                    "rule {} needs {} stack items, have {}",
                    rule.key(),
                    arity,
                    next.stack.len()
                )));
            }
            let mut popped = next.stack.split_off(next.stack.len() - arity).into_iter();
            let children: Vec<Tree> = rule
                .body
                .iter()
                .map(|item| match item {
                    BodyItem::NonTerminal => popped.next().expect("arity checked"),
                    BodyItem::Literal(label) => Tree::leaf(label.clone()),
                })
                .collect();
            next.stack.push(Tree {
                label: NodeLabel::Pred(rule.head.clone()),
                children,
            });
        }
    }
    next.steps += 1;
    Ok(next)
}

/// Runs an action sequence to completion; the stack must hold exactly
/// one tree at the end.
pub fn execute(actions: &[Action]) -> Result<Template, TransitionError> {
    let mut state = ParserState::new();
    for action in actions {
        state = apply_action(&state, action)?;
    }
    if state.stack.len() != 1 {
        return Err(TransitionError::IncompleteParse {
            stack_len: state.stack.len(),
        });
    }
    let root = state.stack.pop().expect("checked");
    Template::new(root).map_err(|e| TransitionError::InvalidUnit(e.to_string()))
}

fn is_nt_child(node: &Tree) -> bool {
    !node.children.is_empty() || matches!(node.label, NodeLabel::Idiom(_))
}

fn is_unit(node: &Tree) -> bool {
    match node.label {
        NodeLabel::Idiom(_) => true,
        _ => node.children.iter().all(|c| !is_nt_child(c)),
    }
}

fn rule_of(node: &Tree) -> Rule {
    debug_assert!(matches!(node.label, NodeLabel::Pred(_)));
    let body = node
        .children
        .iter()
        .map(|c| {
            if is_nt_child(c) {
                BodyItem::NonTerminal
            } else {
                BodyItem::Literal(c.label.clone())
            }
        })
        .collect();
    Rule::new(node.label.token(), body).expect("internal node has an NT child")
}

/// Derivation oracle: children's GENs before the parent's REDUCE,
/// children left to right. `execute(oracle_actions(t)) == t`.
pub fn oracle_actions(template: &Template) -> Vec<Action> {
    let mut actions = Vec::new();
    oracle_walk(template.root(), &mut actions);
    actions
}

fn oracle_walk(node: &Tree, out: &mut Vec<Action>) {
    if is_unit(node) {
        out.push(Action::Gen(node.clone()));
        return;
    }
    for child in node.children.iter().filter(|c| is_nt_child(c)) {
        oracle_walk(child, out);
    }
    out.push(Action::Reduce(rule_of(node)));
}

/// One rule per distinct internal non-unit node shape in the corpus,
/// deterministically ordered by key.
pub fn extract_rules(corpus: &[Template]) -> Vec<Rule> {
    let mut seen = BTreeMap::new();
    for template in corpus {
        for action in oracle_actions(template) {
            if let Action::Reduce(rule) = action {
                seen.entry(rule.key()).or_insert(rule);
            }
        }
    }
    seen.into_values().collect()
}

/// Dense, deterministically ordered vocabulary of transition actions.
#[derive(Clone, Debug, Default)]
pub struct ActionInventory {
    actions: Vec<Action>,
    index: HashMap<String, usize>,
    predicate_of: Vec<BTreeSet<String>>,
    is_new: Vec<bool>,
    gen_ids: Vec<usize>,
}

impl ActionInventory {
    pub fn from_actions(actions: impl IntoIterator<Item = Action>) -> Self {
        let mut by_key: BTreeMap<String, Action> = BTreeMap::new();
        for action in actions {
            by_key.entry(action.key()).or_insert(action);
        }
        let actions: Vec<Action> = by_key.into_values().collect();
        let index = actions
            .iter()
            .enumerate()
            .map(|(i, a)| (a.key(), i))
            .collect();
        let predicate_of = actions.iter().map(Action::predicates).collect();
        let is_new = vec![false; actions.len()];
        let gen_ids = actions
            .iter()
            .enumerate()
            .filter(|(_, a)| matches!(a, Action::Gen(_)))
            .map(|(i, _)| i)
            .collect();
        ActionInventory {
            actions,
            index,
            predicate_of,
            is_new,
            gen_ids,
        }
    }

    /// Inventory of every oracle action over the corpus.
    pub fn from_templates<'a>(templates: impl IntoIterator<Item = &'a Template>) -> Self {
        Self::from_actions(templates.into_iter().flat_map(oracle_actions))
    }

    /// Marks actions producing any of `new_predicates` as new.
    pub fn mark_new(&mut self, new_predicates: &BTreeSet<String>) {
        for (i, preds) in self.predicate_of.iter().enumerate() {
            self.is_new[i] = !preds.is_disjoint(new_predicates);
        }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn get(&self, id: usize) -> &Action {
        &self.actions[id]
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn lookup(&self, action: &Action) -> Option<usize> {
        self.index.get(&action.key()).copied()
    }

    pub fn predicates(&self, id: usize) -> &BTreeSet<String> {
        &self.predicate_of[id]
    }

    pub fn is_new(&self, id: usize) -> bool {
        self.is_new[id]
    }

    pub fn new_action_ids(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_new[i]).collect()
    }

    pub fn gen_ids(&self) -> &[usize] {
        &self.gen_ids
    }
}

/// Action ids applicable in `state`: at step 0 only GEN actions; a
/// REDUCE is applicable when the stack holds at least its arity.
pub fn applicable_actions(state: &ParserState, inventory: &ActionInventory) -> Vec<usize> {
    if state.done {
        return Vec::new();
    }
    if state.stack.is_empty() {
        return inventory.gen_ids.clone();
    }
    (0..inventory.len())
        .filter(|&id| match inventory.get(id) {
            Action::Gen(_) => true,
            Action::Reduce(rule) => rule.arity() <= state.stack.len(),
        })
        .collect()
}

/// Where one slot variable of a derivation lives: the action step that
/// emitted it and its ordinal among that step's slots.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SlotSite {
    pub step: usize,
    pub ordinal: usize,
    pub slot_type: SlotType,
}

/// Mapping between per-step slot values and the pre-order slot
/// assignment of the expanded template a derivation produces.
#[derive(Clone, Debug, Default)]
pub struct SlotLayout {
    /// Sites in pre-order over the expanded template.
    pub sites: Vec<SlotSite>,
}

impl SlotLayout {
    /// Distributes a pre-order assignment onto action steps. Returns,
    /// per step, the (type, value) pairs in within-step slot order.
    pub fn per_step(&self, slots: &SlotAssignment) -> BTreeMap<usize, Vec<(SlotType, String)>> {
        let mut entities = slots.entity_values.iter();
        let mut vars = slots.variable_values.iter();
        let mut tagged: Vec<(SlotSite, String)> = Vec::with_capacity(self.sites.len());
        for site in &self.sites {
            let value = match site.slot_type {
                SlotType::Entity => entities.next(),
                SlotType::Variable => vars.next(),
            };
            if let Some(v) = value {
                tagged.push((*site, v.clone()));
            }
        }
        let mut out: BTreeMap<usize, Vec<(usize, SlotType, String)>> = BTreeMap::new();
        for (site, value) in tagged {
            out.entry(site.step)
                .or_default()
                .push((site.ordinal, site.slot_type, value));
        }
        out.into_iter()
            .map(|(step, mut items)| {
                items.sort_by_key(|(ord, _, _)| *ord);
                (
                    step,
                    items.into_iter().map(|(_, t, v)| (t, v)).collect::<Vec<_>>(),
                )
            })
            .collect()
    }

    /// Assembles a pre-order assignment from per-step predicted values.
    /// `values[step]` holds, per slot type, the predicted sequence.
    pub fn to_assignment(
        &self,
        values: &BTreeMap<usize, BTreeMap<SlotType, Vec<String>>>,
    ) -> SlotAssignment {
        let mut consumed: BTreeMap<(usize, SlotType), usize> = BTreeMap::new();
        let mut out = SlotAssignment::default();
        for site in &self.sites {
            let k = consumed.entry((site.step, site.slot_type)).or_insert(0);
            let value = values
                .get(&site.step)
                .and_then(|per_type| per_type.get(&site.slot_type))
                .and_then(|seq| seq.get(*k))
                .cloned()
                .unwrap_or_default();
            *k += 1;
            match site.slot_type {
                SlotType::Entity => out.entity_values.push(value),
                SlotType::Variable => out.variable_values.push(value),
            }
        }
        out
    }
}

struct TaggedTree {
    label: NodeLabel,
    site: Option<SlotSite>,
    children: Vec<TaggedTree>,
}

fn tag_unit(node: &Tree, step: usize, ordinal: &mut usize) -> TaggedTree {
    match &node.label {
        NodeLabel::Idiom(idiom) => tag_unit(idiom.pattern(), step, ordinal),
        NodeLabel::Slot(t) => {
            let site = SlotSite {
                step,
                ordinal: *ordinal,
                slot_type: *t,
            };
            *ordinal += 1;
            TaggedTree {
                label: node.label.clone(),
                site: Some(site),
                children: Vec::new(),
            }
        }
        _ => TaggedTree {
            label: node.label.clone(),
            site: None,
            children: node
                .children
                .iter()
                .map(|c| tag_unit(c, step, ordinal))
                .collect(),
        },
    }
}

/// Executes a derivation while tracking which step emitted each slot of
/// the expanded template. Also returns the expanded template itself.
pub fn slot_layout(actions: &[Action]) -> Result<(Template, SlotLayout), TransitionError> {
    let mut stack: Vec<TaggedTree> = Vec::new();
    for (step, action) in actions.iter().enumerate() {
        match action {
            Action::Gen(unit) => {
                let mut ordinal = 0;
                stack.push(tag_unit(unit, step, &mut ordinal));
            }
            Action::Reduce(rule) => {
                let arity = rule.arity();
                if stack.len() < arity {
                    return Err(TransitionError::InapplicableAction(format!(
                        "rule {} needs {} stack items, have {}",
                        rule.key(),
                        arity,
                        stack.len()
                    )));
                }
                let mut popped = stack.split_off(stack.len() - arity).into_iter();
                let mut ordinal = 0;
                let children: Vec<TaggedTree> = rule
                    .body
                    .iter()
                    .map(|item| match item {
                        BodyItem::NonTerminal => popped.next().expect("arity checked"),
                        BodyItem::Literal(label) => {
                            let site = match label {
                                NodeLabel::Slot(t) => {
                                    let s = SlotSite {
                                        step,
                                        ordinal,
                                        slot_type: *t,
                                    };
                                    ordinal += 1;
                                    Some(s)
                                }
                                _ => None,
                            };
                            TaggedTree {
                                label: label.clone(),
                                site,
                                children: Vec::new(),
                            }
                        }
                    })
                    .collect();
                stack.push(TaggedTree {
                    label: NodeLabel::Pred(rule.head.clone()),
                    site: None,
                    children,
                });
            }
        }
    }
    if stack.len() != 1 {
        return Err(TransitionError::IncompleteParse {
            stack_len: stack.len(),
        });
    }
    let root = stack.pop().expect("checked");
    let mut sites = Vec::new();
    let tree = untag(&root, &mut sites);
    let template =
        Template::new(tree).map_err(|e| TransitionError::InvalidUnit(e.to_string()))?;
    Ok((template, SlotLayout { sites }))
}

fn untag(node: &TaggedTree, sites: &mut Vec<SlotSite>) -> Tree {
    if let Some(site) = node.site {
        sites.push(site);
    }
    Tree {
        label: node.label.clone(),
        children: node.children.iter().map(|c| untag(c, sites)).collect(),
    }
}

/// Serialized form of an action, one JSON object per line in action
/// sequence files.
#[derive(Serialize, Deserialize)]
struct ActionJson {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    payload: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    idiom: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    head: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    body: Option<Vec<String>>,
}

/// Renders an action as its JSON line representation.
pub fn action_to_json(action: &Action) -> String {
    let json = match action {
        Action::Gen(unit) => {
            let idiom = match &unit.label {
                NodeLabel::Idiom(i) => Some(i.symbol().to_string()),
                _ => None,
            };
            ActionJson {
                kind: "gen".into(),
                payload: Some(unit.expand_idioms().canonical()),
                idiom,
                head: None,
                body: None,
            }
        }
        Action::Reduce(rule) => ActionJson {
            kind: "reduce".into(),
            payload: None,
            idiom: None,
            head: Some(rule.head.clone()),
            body: Some(rule.body.iter().map(BodyItem::token).collect()),
        },
    };
    serde_json::to_string(&json).expect("action serialization cannot fail")
}

/// Parses an action from its JSON line representation.
pub fn action_from_json(line: &str) -> Result<Action, TransitionError> {
    let json: ActionJson = serde_json::from_str(line)
        .map_err(|e| TransitionError::InvalidUnit(format!("bad action json: {e}")))?;
    match json.kind.as_str() {
        "gen" => {
            let payload = json
                .payload
                .ok_or_else(|| TransitionError::InvalidUnit("gen without payload".into()))?;
            let tree = parse_unit(&payload)?;
            let unit = match json.idiom {
                Some(symbol) => Tree::leaf(NodeLabel::Idiom(IdiomRef::new(symbol, tree))),
                None => tree,
            };
            Ok(Action::Gen(unit))
        }
        "reduce" => {
            let head = json
                .head
                .ok_or_else(|| TransitionError::InvalidRule("reduce without head".into()))?;
            let body = json
                .body
                .unwrap_or_default()
                .iter()
                .map(|tok| match tok.as_str() {
                    "NT" => BodyItem::NonTerminal,
                    VAR_SLOT_TOKEN => BodyItem::Literal(NodeLabel::Slot(SlotType::Variable)),
                    ENTITY_SLOT_TOKEN => BodyItem::Literal(NodeLabel::Slot(SlotType::Entity)),
                    other => BodyItem::Literal(NodeLabel::Pred(other.to_string())),
                })
                .collect();
            Rule::new(head, body).map(Action::Reduce)
        }
        other => Err(TransitionError::InvalidUnit(format!(
            "unknown action kind `{other}`"
        ))),
    }
}

fn parse_unit(text: &str) -> Result<Tree, TransitionError> {
    crate::lf::parse_tree(text, &crate::lf::AtomLexicon::default(), None)
        .map_err(|e: LfError| TransitionError::InvalidUnit(e.to_string()))
}

#[cfg(test)]
mod tests;
