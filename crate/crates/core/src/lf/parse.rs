//! Whitespace-insensitive s-expression parsing.

use super::{
    AtomLexicon, IdiomRef, LfError, NodeLabel, SemanticTree, SlotType, Template, Tree,
    ENTITY_SLOT_TOKEN, VAR_SLOT_TOKEN,
};
use crate::idiom::IdiomInventory;

#[derive(Debug, PartialEq)]
enum Tok<'a> {
    Open,
    Close,
    Symbol(&'a str),
}

fn tokenize(text: &str) -> Result<Vec<Tok<'_>>, LfError> {
    let mut toks = Vec::new();
    let mut start = None::<usize>;
    for (i, c) in text.char_indices() {
        if c.is_control() && !c.is_whitespace() {
            return Err(LfError::IllegalToken(c));
        }
        let boundary = c == '(' || c == ')' || c.is_whitespace();
        if boundary {
            if let Some(s) = start.take() {
                toks.push(Tok::Symbol(&text[s..i]));
            }
            match c {
                '(' => toks.push(Tok::Open),
                ')' => toks.push(Tok::Close),
                _ => {}
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        toks.push(Tok::Symbol(&text[s..]));
    }
    Ok(toks)
}

fn leaf_label(symbol: &str, lexicon: &AtomLexicon, inventory: Option<&IdiomInventory>) -> NodeLabel {
    if let Some(inv) = inventory {
        if let Some(idiom) = inv.get(symbol) {
            return NodeLabel::Idiom(IdiomRef::clone(idiom));
        }
    }
    match symbol {
        VAR_SLOT_TOKEN => NodeLabel::Slot(SlotType::Variable),
        ENTITY_SLOT_TOKEN => NodeLabel::Slot(SlotType::Entity),
        _ => match lexicon.classify(symbol) {
            Some(_) => NodeLabel::Atom(symbol.to_string()),
            None => NodeLabel::Pred(symbol.to_string()),
        },
    }
}

fn parse_node<'a>(
    toks: &mut std::iter::Peekable<std::slice::Iter<'a, Tok<'a>>>,
    lexicon: &AtomLexicon,
    inventory: Option<&IdiomInventory>,
) -> Result<Tree, LfError> {
    match toks.next() {
        None => Err(LfError::UnbalancedParens),
        Some(Tok::Close) => Err(LfError::UnbalancedParens),
        Some(Tok::Symbol(s)) => Ok(Tree::leaf(leaf_label(s, lexicon, inventory))),
        Some(Tok::Open) => {
            let head = match toks.next() {
                Some(Tok::Symbol(s)) => *s,
                Some(Tok::Close) => return Err(LfError::EmptyExpression),
                Some(Tok::Open) => return Err(LfError::ExpectedSymbol),
                None => return Err(LfError::UnbalancedParens),
            };
            let mut children = Vec::new();
            loop {
                match toks.peek() {
                    Some(Tok::Close) => {
                        toks.next();
                        break;
                    }
                    Some(_) => children.push(parse_node(toks, lexicon, inventory)?),
                    None => return Err(LfError::UnbalancedParens),
                }
            }
            if children.is_empty() {
                // `( x )` is the same node as bare `x`.
                Ok(Tree::leaf(leaf_label(head, lexicon, inventory)))
            } else {
                Ok(Tree {
                    label: NodeLabel::Pred(head.to_string()),
                    children,
                })
            }
        }
    }
}

/// Parses a tree with explicit lexicon and optional idiom inventory.
pub fn parse_tree(
    text: &str,
    lexicon: &AtomLexicon,
    inventory: Option<&IdiomInventory>,
) -> Result<Tree, LfError> {
    let toks = tokenize(text)?;
    if toks.is_empty() {
        return Err(LfError::EmptyExpression);
    }
    let mut iter = toks.iter().peekable();
    let tree = parse_node(&mut iter, lexicon, inventory)?;
    if iter.next().is_some() {
        return Err(LfError::TrailingTokens);
    }
    Ok(tree)
}

/// Parses a logical form using the built-in atom heuristics.
pub fn parse_lf(text: &str) -> Result<SemanticTree, LfError> {
    parse_lf_with(text, &AtomLexicon::default())
}

/// Parses a logical form, classifying atom leaves with `lexicon`.
pub fn parse_lf_with(text: &str, lexicon: &AtomLexicon) -> Result<SemanticTree, LfError> {
    parse_tree(text, lexicon, None).map(SemanticTree::new)
}

/// Parses a template, resolving collapsed idiom symbols against
/// `inventory` when given.
pub fn parse_template(text: &str, inventory: Option<&IdiomInventory>) -> Result<Template, LfError> {
    let tree = parse_tree(text, &AtomLexicon::default(), inventory)?;
    Template::new(tree)
}
