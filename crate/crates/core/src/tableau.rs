//! Semantic tableaux over sets of first-order sentences.
//!
//! Nodes are labelled with formula sets; each edge is one rule instance. The
//! `FALSE` rule's conclusion (every sentence) is represented by a
//! [`NodeLabel::Closed`] marker.
//!
//! Expansion strategy: the leftmost unfinished leaf is expanded first. On a
//! leaf, rules are tried in priority order `FALSE > NEG1 > DM1 > DM2 > AND >
//! OR > EXISTS > FORALL`, and for a rule the least principal formula (in the
//! derived `Ord` of [`FoFormula`]) with a productive instance is chosen. An
//! instance is productive when every child differs from its parent. `NEG2`
//! is never chosen by the strategy.
//!
//! Universal rules also fire on `~exists x . A` (read as `forall x . ~A`),
//! and existential rules on `~forall x . A`, since normalized input only
//! carries `exists`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::semantics::FiniteStructure;
use crate::syntax::{FoFormula, FoSignature, SignatureMorphism, Term};

pub type FormulaSet = BTreeSet<FoFormula>;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleId {
    And,
    Or,
    Neg1,
    Neg2,
    False,
    Dm1,
    Dm2,
    /// Instantiates a universal with a ground term.
    Forall(Term),
    /// Instantiates an existential with a fresh constant.
    Exists(String),
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleId::And => f.write_str("AND"),
            RuleId::Or => f.write_str("OR"),
            RuleId::Neg1 => f.write_str("NEG1"),
            RuleId::Neg2 => f.write_str("NEG2"),
            RuleId::False => f.write_str("FALSE"),
            RuleId::Dm1 => f.write_str("DM1"),
            RuleId::Dm2 => f.write_str("DM2"),
            RuleId::Forall(t) => write!(f, "FORALL({t})"),
            RuleId::Exists(c) => write!(f, "EXISTS({c})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeLabel {
    Formulas(FormulaSet),
    /// Conclusion of the `FALSE` rule.
    Closed,
}

impl NodeLabel {
    pub fn formulas(&self) -> Option<&FormulaSet> {
        match self {
            NodeLabel::Formulas(s) => Some(s),
            NodeLabel::Closed => None,
        }
    }
}

/// The body of a universal: `forall x . A` gives `(x, A, false)` and
/// `~exists x . A` gives `(x, A, true)` meaning the instance is negated.
fn universal_parts(f: &FoFormula) -> Option<(&str, &FoFormula, bool)> {
    match f {
        FoFormula::Forall(x, a) => Some((x, a, false)),
        FoFormula::Not(inner) => match inner.as_ref() {
            FoFormula::Exists(x, a) => Some((x, a, true)),
            _ => None,
        },
        _ => None,
    }
}

fn existential_parts(f: &FoFormula) -> Option<(&str, &FoFormula, bool)> {
    match f {
        FoFormula::Exists(x, a) => Some((x, a, false)),
        FoFormula::Not(inner) => match inner.as_ref() {
            FoFormula::Forall(x, a) => Some((x, a, true)),
            _ => None,
        },
        _ => None,
    }
}

fn instance(var: &str, body: &FoFormula, negated: bool, t: &Term) -> FoFormula {
    let i = body.substitute(var, t);
    if negated {
        FoFormula::not(i)
    } else {
        i
    }
}

fn mentions_constant(set: &FormulaSet, name: &str) -> bool {
    let mut found = false;
    for f in set {
        f.for_each_term(&mut |t| {
            if matches!(t, Term::App(c, _) if c == name) {
                found = true;
            }
        });
    }
    found
}

fn mismatch(rule: &RuleId, reason: impl Into<String>) -> Error {
    Error::RuleMismatch { rule: rule.to_string(), reason: reason.into() }
}

fn extend(node: &FormulaSet, items: impl IntoIterator<Item = FoFormula>) -> NodeLabel {
    let mut s = node.clone();
    s.extend(items);
    NodeLabel::Formulas(s)
}

/// Children of `node` under one instance of `rule` with the given principal
/// formula. For `FALSE` the principal is `A` and `~A` must also be present.
pub fn apply_rule(node: &FormulaSet, rule: &RuleId, principal: &FoFormula) -> Result<Vec<NodeLabel>> {
    use FoFormula as F;
    if !node.contains(principal) {
        return Err(mismatch(rule, format!("`{principal}` is not in the node")));
    }
    let shape = |what: &str| mismatch(rule, format!("`{principal}` is not {what}"));
    Ok(match rule {
        RuleId::And => match principal {
            F::And(a, b) => vec![extend(node, [(**a).clone(), (**b).clone()])],
            _ => return Err(shape("a conjunction")),
        },
        RuleId::Or => match principal {
            F::Or(a, b) => vec![extend(node, [(**a).clone()]), extend(node, [(**b).clone()])],
            _ => return Err(shape("a disjunction")),
        },
        RuleId::Neg1 => match principal {
            F::Not(inner) => match inner.as_ref() {
                F::Not(a) => vec![extend(node, [(**a).clone()])],
                _ => return Err(shape("a double negation")),
            },
            _ => return Err(shape("a double negation")),
        },
        RuleId::Neg2 => vec![extend(node, [F::not(F::not(principal.clone()))])],
        RuleId::False => {
            if node.contains(&F::not(principal.clone())) {
                vec![NodeLabel::Closed]
            } else {
                return Err(mismatch(rule, format!("`~{principal}` is not in the node")));
            }
        }
        RuleId::Dm1 => match principal {
            F::Not(inner) => match inner.as_ref() {
                F::And(a, b) => vec![extend(node, [F::or(F::not((**a).clone()), F::not((**b).clone()))])],
                _ => return Err(shape("a negated conjunction")),
            },
            _ => return Err(shape("a negated conjunction")),
        },
        RuleId::Dm2 => match principal {
            F::Not(inner) => match inner.as_ref() {
                F::Or(a, b) => vec![extend(node, [F::and(F::not((**a).clone()), F::not((**b).clone()))])],
                _ => return Err(shape("a negated disjunction")),
            },
            _ => return Err(shape("a negated disjunction")),
        },
        RuleId::Forall(t) => {
            if !t.is_ground() {
                return Err(mismatch(rule, format!("term `{t}` is not ground")));
            }
            let (x, body, negated) = universal_parts(principal).ok_or_else(|| shape("a universal"))?;
            vec![extend(node, [instance(x, body, negated, t)])]
        }
        RuleId::Exists(c) => {
            if mentions_constant(node, c) {
                return Err(mismatch(rule, format!("constant `{c}` is not fresh")));
            }
            let (x, body, negated) = existential_parts(principal).ok_or_else(|| shape("an existential"))?;
            vec![extend(node, [instance(x, body, negated, &Term::constant(c.clone()))])]
        }
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub id: usize,
    pub label: NodeLabel,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Rule instance that produced this node from its parent.
    pub via: Option<(RuleId, FoFormula)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BranchStatus {
    Closed,
    /// Open and no productive rule instance remains.
    Saturated,
    /// Open but expansion stopped at a resource limit.
    Exhausted,
}

impl BranchStatus {
    pub fn tag(self) -> &'static str {
        match self {
            BranchStatus::Closed => "closed",
            BranchStatus::Saturated => "open-saturated",
            BranchStatus::Exhausted => "exhausted",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TableauStatus {
    AllClosed,
    OpenSaturated,
    ResourceExhausted,
}

impl TableauStatus {
    pub fn tag(self) -> &'static str {
        match self {
            TableauStatus::AllClosed => "all-closed",
            TableauStatus::OpenSaturated => "open-saturated",
            TableauStatus::ResourceExhausted => "resource-exhausted",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_nodes: usize,
    pub max_instantiations_per_universal: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_nodes: 1000, max_instantiations_per_universal: 8 }
    }
}

/// One step of a recorded run: `rule` applied to `principal` at `node`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub node: usize,
    pub rule: RuleId,
    pub principal: FoFormula,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tableau {
    nodes: Vec<Node>,
    leaf_status: BTreeMap<usize, BranchStatus>,
}

/// Per-branch bookkeeping for quantifier rules, inherited by children.
#[derive(Clone, Debug, Default)]
struct BranchMemo {
    instantiated: BTreeMap<FoFormula, BTreeSet<Term>>,
    witnessed: BTreeSet<FoFormula>,
}

enum Choice {
    Apply(RuleId, FoFormula),
    Saturated,
    /// A universal could still be instantiated but its cap is spent.
    Blocked,
}

struct Expander {
    bounded: Option<Limits>,
    fresh_counter: usize,
    taken: BTreeSet<String>,
}

impl Expander {
    fn fresh_constant(&mut self) -> String {
        loop {
            self.fresh_counter += 1;
            let name = format!("sk{}", self.fresh_counter);
            if self.taken.insert(name.clone()) {
                return name;
            }
        }
    }

    fn choose(&mut self, set: &FormulaSet, memo: &BranchMemo) -> Choice {
        use FoFormula as F;
        // FALSE: least A with ~A present.
        if let Some(a) = set.iter().find(|a| set.contains(&F::not((*a).clone()))) {
            return Choice::Apply(RuleId::False, a.clone());
        }
        let grows = |f: &FoFormula| !set.contains(f);
        for f in set {
            if let F::Not(inner) = f {
                if let F::Not(a) = inner.as_ref() {
                    if grows(a) {
                        return Choice::Apply(RuleId::Neg1, f.clone());
                    }
                }
            }
        }
        for f in set {
            if let F::Not(inner) = f {
                if let F::And(a, b) = inner.as_ref() {
                    if grows(&F::or(F::not((**a).clone()), F::not((**b).clone()))) {
                        return Choice::Apply(RuleId::Dm1, f.clone());
                    }
                }
            }
        }
        for f in set {
            if let F::Not(inner) = f {
                if let F::Or(a, b) = inner.as_ref() {
                    if grows(&F::and(F::not((**a).clone()), F::not((**b).clone()))) {
                        return Choice::Apply(RuleId::Dm2, f.clone());
                    }
                }
            }
        }
        for f in set {
            if let F::And(a, b) = f {
                if grows(a) || grows(b) {
                    return Choice::Apply(RuleId::And, f.clone());
                }
            }
        }
        for f in set {
            if let F::Or(a, b) = f {
                if grows(a) && grows(b) {
                    return Choice::Apply(RuleId::Or, f.clone());
                }
            }
        }
        let Some(limits) = self.bounded else {
            return Choice::Saturated;
        };
        for f in set {
            if existential_parts(f).is_some() && !memo.witnessed.contains(f) {
                let c = self.fresh_constant();
                return Choice::Apply(RuleId::Exists(c), f.clone());
            }
        }
        let terms = branch_ground_terms(set);
        let mut blocked = false;
        for f in set {
            let Some((x, body, negated)) = universal_parts(f) else { continue };
            let used = memo.instantiated.get(f);
            let used_count = used.map_or(0, BTreeSet::len);
            let candidate = if terms.is_empty() {
                if used_count == 0 {
                    Some(Term::constant(self.fresh_constant()))
                } else {
                    None
                }
            } else {
                terms
                    .iter()
                    .find(|t| !used.is_some_and(|u| u.contains(*t)) && grows(&instance(x, body, negated, t)))
                    .cloned()
            };
            if let Some(t) = candidate {
                if used_count < limits.max_instantiations_per_universal {
                    return Choice::Apply(RuleId::Forall(t), f.clone());
                }
                blocked = true;
            }
        }
        if blocked {
            Choice::Blocked
        } else {
            Choice::Saturated
        }
    }
}

/// Ground subterms occurring on the branch, smallest first.
fn branch_ground_terms(set: &FormulaSet) -> Vec<Term> {
    let mut terms = BTreeSet::new();
    for f in set {
        f.for_each_term(&mut |t| {
            if t.is_ground() {
                terms.insert((t.depth(), t.clone()));
            }
        });
    }
    terms.into_iter().map(|(_, t)| t).collect()
}

fn check_connectives(root: &FormulaSet) -> Result<()> {
    for f in root {
        let mut bad = None;
        f.visit(&mut |g| {
            if matches!(g, FoFormula::Implies(..) | FoFormula::Iff(..)) {
                bad = Some(g.to_string());
            }
        });
        if let Some(g) = bad {
            return Err(Error::TableauPrecondition(format!("no tableau rule for `{g}`; normalize first")));
        }
    }
    Ok(())
}

/// Expands a ground quantifier-free root set until every branch is closed or
/// saturated. Terminates because every productive step adds a formula from
/// the finite closure of the root under the propositional rules.
pub fn saturate_ground(root: FormulaSet) -> Result<Tableau> {
    if let Some(f) = root.iter().find(|f| !f.is_quantifier_free() || !f.is_ground()) {
        return Err(Error::TableauPrecondition(format!("`{f}` is not ground and quantifier-free")));
    }
    check_connectives(&root)?;
    Ok(run(root, None))
}

/// Expands a root set with all rules under resource limits.
pub fn saturate_bounded(root: FormulaSet, limits: Limits) -> Result<(Tableau, TableauStatus)> {
    if limits.max_nodes == 0 || limits.max_instantiations_per_universal == 0 {
        return Err(Error::InvalidLimit("tableau limits must be positive".into()));
    }
    if let Some(f) = root.iter().find(|f| !f.is_sentence()) {
        return Err(Error::TableauPrecondition(format!("`{f}` has free variables")));
    }
    check_connectives(&root)?;
    let t = run(root, Some(limits));
    let status = t.status();
    Ok((t, status))
}

fn run(root: FormulaSet, bounded: Option<Limits>) -> Tableau {
    let mut taken = BTreeSet::new();
    for f in &root {
        f.for_each_term(&mut |t| {
            if let Term::App(name, _) = t {
                taken.insert(name.clone());
            }
        });
    }
    let mut expander = Expander { bounded, fresh_counter: 0, taken };
    let mut tableau = Tableau {
        nodes: vec![Node { id: 0, label: NodeLabel::Formulas(root), parent: None, children: vec![], via: None }],
        leaf_status: BTreeMap::new(),
    };
    let mut memos: BTreeMap<usize, BranchMemo> = [(0, BranchMemo::default())].into();
    let mut stack = vec![0usize];
    let max_nodes = bounded.map_or(usize::MAX, |l| l.max_nodes);
    while let Some(id) = stack.pop() {
        let NodeLabel::Formulas(set) = tableau.nodes[id].label.clone() else {
            tableau.leaf_status.insert(id, BranchStatus::Closed);
            continue;
        };
        let memo = memos.remove(&id).unwrap_or_default();
        let (rule, principal) = match expander.choose(&set, &memo) {
            Choice::Apply(rule, principal) => (rule, principal),
            Choice::Saturated => {
                tableau.leaf_status.insert(id, BranchStatus::Saturated);
                continue;
            }
            Choice::Blocked => {
                tableau.leaf_status.insert(id, BranchStatus::Exhausted);
                continue;
            }
        };
        let children = apply_rule(&set, &rule, &principal).expect("strategy only picks applicable instances");
        if tableau.nodes.len() + children.len() > max_nodes {
            tableau.leaf_status.insert(id, BranchStatus::Exhausted);
            for rest in stack.drain(..) {
                let status = match tableau.nodes[rest].label {
                    NodeLabel::Closed => BranchStatus::Closed,
                    NodeLabel::Formulas(_) => BranchStatus::Exhausted,
                };
                tableau.leaf_status.insert(rest, status);
            }
            break;
        }
        let mut child_memo = memo;
        match &rule {
            RuleId::Forall(t) => {
                child_memo.instantiated.entry(principal.clone()).or_default().insert(t.clone());
            }
            RuleId::Exists(_) => {
                child_memo.witnessed.insert(principal.clone());
            }
            _ => {}
        }
        let ids = tableau.push_children(id, &rule, &principal, children);
        for &c in ids.iter().rev() {
            memos.insert(c, child_memo.clone());
            stack.push(c);
        }
    }
    tableau
}

impl Tableau {
    fn push_children(&mut self, parent: usize, rule: &RuleId, principal: &FoFormula, children: Vec<NodeLabel>) -> Vec<usize> {
        let mut ids = Vec::with_capacity(children.len());
        for label in children {
            let id = self.nodes.len();
            self.nodes.push(Node { id, label, parent: Some(parent), children: vec![], via: Some((rule.clone(), principal.clone())) });
            self.nodes[parent].children.push(id);
            ids.push(id);
        }
        ids
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> &FormulaSet {
        self.nodes[0].label.formulas().expect("root is a formula set")
    }

    /// Leaves in left-to-right tree order.
    pub fn leaves(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![0];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if node.children.is_empty() {
                out.push(id);
            } else {
                stack.extend(node.children.iter().rev());
            }
        }
        out
    }

    pub fn branch_status(&self, leaf: usize) -> Option<BranchStatus> {
        match self.nodes.get(leaf)?.label {
            NodeLabel::Closed => Some(BranchStatus::Closed),
            _ => self.leaf_status.get(&leaf).copied(),
        }
    }

    pub fn status(&self) -> TableauStatus {
        let statuses: Vec<_> = self.leaves().into_iter().map(|l| self.branch_status(l)).collect();
        if statuses.iter().all(|s| *s == Some(BranchStatus::Closed)) {
            TableauStatus::AllClosed
        } else if statuses.iter().all(|s| matches!(s, Some(BranchStatus::Closed | BranchStatus::Saturated))) {
            TableauStatus::OpenSaturated
        } else {
            TableauStatus::ResourceExhausted
        }
    }

    pub fn has_open_branch(&self) -> bool {
        self.leaves().into_iter().any(|l| self.branch_status(l) == Some(BranchStatus::Saturated))
    }

    /// Node ids from the root to `leaf`.
    pub fn path_to(&self, leaf: usize) -> Vec<usize> {
        let mut path = vec![leaf];
        let mut at = leaf;
        while let Some(p) = self.nodes[at].parent {
            path.push(p);
            at = p;
        }
        path.reverse();
        path
    }

    /// The branch ending at `leaf`.
    pub fn branch(&self, leaf: usize) -> Branch {
        let path = self.path_to(leaf);
        Branch {
            nodes: path.iter().map(|&i| self.nodes[i].label.clone()).collect(),
            steps: path[1..].iter().map(|&i| self.nodes[i].via.clone().expect("non-root nodes have a rule")).collect(),
        }
    }

    /// The rule applications in the order they were made.
    pub fn script(&self) -> Vec<Step> {
        let mut steps: Vec<Step> = Vec::new();
        for node in &self.nodes[1..] {
            let parent = node.parent.expect("non-root");
            if steps.last().is_some_and(|s| s.node == parent && self.nodes[parent].children[0] != node.id) {
                continue;
            }
            let (rule, principal) = node.via.clone().expect("non-root");
            steps.push(Step { node: parent, rule, principal });
        }
        steps
    }

    /// Rebuilds a tableau by applying `script` to `root`. Leaves are marked
    /// saturated when no productive propositional rule remains and closed
    /// when they are closed markers.
    pub fn replay(root: FormulaSet, script: &[Step]) -> Result<Tableau> {
        let mut t = Tableau {
            nodes: vec![Node { id: 0, label: NodeLabel::Formulas(root), parent: None, children: vec![], via: None }],
            leaf_status: BTreeMap::new(),
        };
        for step in script {
            let node = t.nodes.get(step.node).ok_or_else(|| Error::TableauPrecondition(format!("no node {}", step.node)))?;
            if !node.children.is_empty() {
                return Err(Error::TableauPrecondition(format!("node {} is already expanded", step.node)));
            }
            let set = node.label.formulas().ok_or_else(|| Error::TableauPrecondition("cannot expand a closed node".into()))?;
            let children = apply_rule(set, &step.rule, &step.principal)?;
            t.push_children(step.node, &step.rule, &step.principal, children);
        }
        let mut expander = Expander { bounded: None, fresh_counter: 0, taken: BTreeSet::new() };
        for leaf in t.leaves() {
            let status = match &t.nodes[leaf].label {
                NodeLabel::Closed => BranchStatus::Closed,
                NodeLabel::Formulas(set) => match expander.choose(set, &BranchMemo::default()) {
                    Choice::Saturated => BranchStatus::Saturated,
                    _ => BranchStatus::Exhausted,
                },
            };
            t.leaf_status.insert(leaf, status);
        }
        Ok(t)
    }

    /// Node-wise image under a signature morphism.
    pub fn rename(&self, sigma: &SignatureMorphism) -> Result<Tableau> {
        let set = |s: &FormulaSet| s.iter().map(|f| sigma.translate(f)).collect::<Result<FormulaSet>>();
        let nodes = self
            .nodes
            .iter()
            .map(|n| {
                Ok(Node {
                    id: n.id,
                    label: match &n.label {
                        NodeLabel::Formulas(s) => NodeLabel::Formulas(set(s)?),
                        NodeLabel::Closed => NodeLabel::Closed,
                    },
                    parent: n.parent,
                    children: n.children.clone(),
                    via: match &n.via {
                        Some((rule, p)) => Some((rename_rule(rule, sigma)?, sigma.translate(p)?)),
                        None => None,
                    },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Tableau { nodes, leaf_status: self.leaf_status.clone() })
    }

    /// Machine-readable dump with printed formulas.
    pub fn to_json(&self) -> Value {
        let nodes: Vec<Value> = self
            .nodes
            .iter()
            .map(|n| match &n.label {
                NodeLabel::Formulas(s) => json!({
                    "id": n.id,
                    "closed": false,
                    "formulas": s.iter().map(|f| f.to_string()).collect::<Vec<_>>(),
                }),
                NodeLabel::Closed => json!({ "id": n.id, "closed": true, "formulas": [] }),
            })
            .collect();
        let edges: Vec<Value> = self
            .nodes
            .iter()
            .filter_map(|n| {
                let (rule, principal) = n.via.as_ref()?;
                Some(json!({
                    "parent": n.parent,
                    "child": n.id,
                    "rule": rule.to_string(),
                    "principal": principal.to_string(),
                }))
            })
            .collect();
        let branches: Vec<Value> = self
            .leaves()
            .into_iter()
            .map(|l| {
                json!({
                    "leaf": l,
                    "status": self.branch_status(l).map_or("unexpanded", BranchStatus::tag),
                })
            })
            .collect();
        let mut root = Map::new();
        root.insert("status".into(), Value::from(self.status().tag()));
        root.insert("nodes".into(), Value::Array(nodes));
        root.insert("edges".into(), Value::Array(edges));
        root.insert("branches".into(), Value::Array(branches));
        Value::Object(root)
    }
}

fn rename_rule(rule: &RuleId, sigma: &SignatureMorphism) -> Result<RuleId> {
    Ok(match rule {
        RuleId::Forall(t) => RuleId::Forall(sigma.translate_term(t)?),
        RuleId::Exists(c) => RuleId::Exists(sigma.map_function(c).map_or_else(|| c.clone(), str::to_string)),
        other => other.clone(),
    })
}

/// Leaf sets of the open saturated branches, left to right. With
/// `require_complete`, a tableau that stopped at a resource limit is an error.
pub fn open_branch_leaves(t: &Tableau, require_complete: bool) -> Result<Vec<&FormulaSet>> {
    if require_complete && t.status() == TableauStatus::ResourceExhausted {
        return Err(Error::IncompleteTableau);
    }
    Ok(t.leaves()
        .into_iter()
        .filter(|&l| t.branch_status(l) == Some(BranchStatus::Saturated))
        .filter_map(|l| t.nodes[l].label.formulas())
        .collect())
}

/// A root-to-node path: `nodes.len() == steps.len() + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Branch {
    pub nodes: Vec<NodeLabel>,
    pub steps: Vec<(RuleId, FoFormula)>,
}

impl Branch {
    /// The zero-step branch at `label`.
    pub fn identity(label: NodeLabel) -> Branch {
        Branch { nodes: vec![label], steps: vec![] }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn first(&self) -> &NodeLabel {
        &self.nodes[0]
    }

    pub fn last(&self) -> &NodeLabel {
        self.nodes.last().expect("branches are nonempty")
    }

    /// Nodes `from..=to` with the steps between them.
    pub fn segment(&self, from: usize, to: usize) -> Branch {
        Branch { nodes: self.nodes[from..=to].to_vec(), steps: self.steps[from..to].to_vec() }
    }

    /// Concatenation; the last node of `self` must be the first of `next`.
    pub fn then(&self, next: &Branch) -> Result<Branch> {
        if self.last() != next.first() {
            return Err(Error::TableauPrecondition("branch segments do not meet".into()));
        }
        let mut nodes = self.nodes.clone();
        nodes.extend(next.nodes[1..].iter().cloned());
        let mut steps = self.steps.clone();
        steps.extend(next.steps.iter().cloned());
        Ok(Branch { nodes, steps })
    }
}

/// A structure built from an open ground leaf.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateModel {
    pub structure: FiniteStructure,
    /// The leaf terms denoting each domain element, element order.
    pub classes: Vec<Vec<Term>>,
    /// Signature of the structure: the base signature plus leaf symbols.
    pub signature: FoSignature,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let p = self.0[x];
        if p == x {
            return x;
        }
        let r = self.find(p);
        self.0[x] = r;
        r
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.0[hi] = lo;
        true
    }
}

fn literal_parts(f: &FoFormula) -> Option<(bool, &FoFormula)> {
    match f {
        FoFormula::Atom(..) | FoFormula::Eq(..) => Some((true, f)),
        FoFormula::Not(a) if matches!(a.as_ref(), FoFormula::Atom(..) | FoFormula::Eq(..)) => Some((false, a)),
        _ => None,
    }
}

/// Minimal model of the literals of a ground open leaf: the domain is the
/// set of ground terms of the leaf modulo the congruence generated by its
/// positive equalities; positive atoms are true and every other tuple false;
/// unconstrained function entries map to the first element.
pub fn extract_candidate_structure(leaf: &FormulaSet, base: &FoSignature) -> Result<CandidateModel> {
    if let Some(f) = leaf.iter().find(|f| !f.is_ground() || !f.is_quantifier_free()) {
        return Err(Error::TableauPrecondition(format!("`{f}` is not ground and quantifier-free")));
    }
    let mut sig = base.clone();
    let mut terms: BTreeSet<(usize, Term)> = BTreeSet::new();
    for f in leaf {
        f.for_each_term(&mut |t| {
            terms.insert((t.depth(), t.clone()));
        });
        let mut err = Ok(());
        f.visit(&mut |g| {
            if let FoFormula::Atom(p, args) = g {
                if sig.predicate_arity(p).is_none() && err.is_ok() {
                    err = sig.add_predicate(p.clone(), args.len());
                }
            }
        });
        err?;
        f.for_each_term(&mut |t| {
            if let Term::App(name, args) = t {
                if sig.function_arity(name).is_none() && !sig.contains(name) {
                    if args.is_empty() {
                        sig.insert_constant_unchecked(name);
                    } else {
                        let _ = sig.add_function(name.clone(), args.len());
                    }
                }
            }
        });
        sig.check_formula(f)?;
    }
    let terms: Vec<Term> = terms.into_iter().map(|(_, t)| t).collect();
    let index: BTreeMap<&Term, usize> = terms.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let mut uf = UnionFind((0..terms.len()).collect());
    for f in leaf {
        if let Some((true, FoFormula::Eq(l, r))) = literal_parts(f) {
            uf.union(index[l], index[r]);
        }
    }
    // Congruence closure.
    loop {
        let mut changed = false;
        for i in 0..terms.len() {
            for j in i + 1..terms.len() {
                if let (Term::App(f, xs), Term::App(g, ys)) = (&terms[i], &terms[j]) {
                    if f == g
                        && xs.len() == ys.len()
                        && !xs.is_empty()
                        && xs.iter().zip(ys).all(|(x, y)| uf.find(index[x]) == uf.find(index[y]))
                    {
                        changed |= uf.union(i, j);
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    // Elements ordered by their least (shallowest, then smallest) term.
    let mut element_of_root: BTreeMap<usize, usize> = BTreeMap::new();
    let mut classes: Vec<Vec<Term>> = Vec::new();
    for (i, term) in terms.iter().enumerate() {
        let r = uf.find(i);
        let e = *element_of_root.entry(r).or_insert_with(|| {
            classes.push(Vec::new());
            classes.len() - 1
        });
        classes[e].push(term.clone());
    }
    let size = classes.len().max(1);
    let mut element = |t: &Term| element_of_root[&uf.find(index[t])];

    let mut functions: BTreeMap<String, BTreeMap<Vec<usize>, usize>> = BTreeMap::new();
    for (name, &arity) in sig.functions() {
        let table = crate::semantics::tuples(size, arity).map(|args| (args, 0)).collect();
        functions.insert(name.clone(), table);
    }
    for t in &terms {
        if let Term::App(name, args) = t {
            let key: Vec<usize> = args.iter().map(&mut element).collect();
            let value = element(t);
            functions.get_mut(name).expect("symbol collected").insert(key, value);
        }
    }
    let mut relations: BTreeMap<String, BTreeSet<Vec<usize>>> =
        sig.predicates().keys().map(|p| (p.clone(), BTreeSet::new())).collect();
    for f in leaf {
        if let Some((true, FoFormula::Atom(p, args))) = literal_parts(f) {
            let tuple = args.iter().map(&mut element).collect();
            relations.get_mut(p).expect("symbol collected").insert(tuple);
        }
    }
    for f in leaf {
        match literal_parts(f) {
            Some((false, FoFormula::Eq(l, r))) if element(l) == element(r) => {
                return Err(Error::InconsistentLeaf(format!("`{f}` contradicts the leaf's equalities")));
            }
            Some((false, FoFormula::Atom(p, args))) => {
                let tuple: Vec<usize> = args.iter().map(&mut element).collect();
                if relations[p].contains(&tuple) {
                    return Err(Error::InconsistentLeaf(format!("`{f}` contradicts the leaf's equalities")));
                }
            }
            _ => {}
        }
    }
    let structure = FiniteStructure::from_tables(&sig, size, functions, relations)?;
    Ok(CandidateModel { structure, classes, signature: sig })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_formula;
    use crate::semantics::eval_sentence;

    fn sig() -> FoSignature {
        FoSignature::from_symbols([("a", 0), ("b", 0), ("sk1", 0)], [("P", 1), ("Q", 1), ("A", 1), ("B", 1)]).unwrap()
    }

    fn f(text: &str) -> FoFormula {
        parse_formula(text, &sig()).unwrap()
    }

    fn set(items: &[&str]) -> FormulaSet {
        items.iter().map(|t| f(t)).collect()
    }

    fn show(label: &NodeLabel) -> Vec<String> {
        match label {
            NodeLabel::Formulas(s) => s.iter().map(|f| f.to_string()).collect(),
            NodeLabel::Closed => vec!["<closed>".into()],
        }
    }

    #[test]
    fn and_rule_adds_both_conjuncts() {
        let children = apply_rule(&set(&["A(a) & B(a)"]), &RuleId::And, &f("A(a) & B(a)")).unwrap();
        assert_eq!(children, vec![NodeLabel::Formulas(set(&["A(a) & B(a)", "A(a)", "B(a)"]))]);
    }

    #[test]
    fn or_rule_splits() {
        let children = apply_rule(&set(&["A(a) | B(a)"]), &RuleId::Or, &f("A(a) | B(a)")).unwrap();
        assert_eq!(
            children,
            vec![
                NodeLabel::Formulas(set(&["A(a) | B(a)", "A(a)"])),
                NodeLabel::Formulas(set(&["A(a) | B(a)", "B(a)"])),
            ]
        );
    }

    #[test]
    fn false_rule_closes() {
        let children = apply_rule(&set(&["P(a)", "~P(a)"]), &RuleId::False, &f("P(a)")).unwrap();
        assert_eq!(children, vec![NodeLabel::Closed]);
        assert!(apply_rule(&set(&["P(a)"]), &RuleId::False, &f("P(a)")).is_err());
    }

    #[test]
    fn remaining_rules() {
        let n = apply_rule(&set(&["~~P(a)"]), &RuleId::Neg1, &f("~~P(a)")).unwrap();
        assert_eq!(n, vec![NodeLabel::Formulas(set(&["~~P(a)", "P(a)"]))]);
        let n2 = apply_rule(&set(&["P(a)"]), &RuleId::Neg2, &f("P(a)")).unwrap();
        assert_eq!(n2, vec![NodeLabel::Formulas(set(&["P(a)", "~~P(a)"]))]);
        let d1 = apply_rule(&set(&["~(A(a) & B(a))"]), &RuleId::Dm1, &f("~(A(a) & B(a))")).unwrap();
        assert_eq!(d1, vec![NodeLabel::Formulas(set(&["~(A(a) & B(a))", "~A(a) | ~B(a)"]))]);
        let d2 = apply_rule(&set(&["~(A(a) | B(a))"]), &RuleId::Dm2, &f("~(A(a) | B(a))")).unwrap();
        assert_eq!(d2, vec![NodeLabel::Formulas(set(&["~(A(a) | B(a))", "~A(a) & ~B(a)"]))]);
        let u = apply_rule(&set(&["forall x . P(x)"]), &RuleId::Forall(Term::constant("a")), &f("forall x . P(x)")).unwrap();
        assert_eq!(u, vec![NodeLabel::Formulas(set(&["forall x . P(x)", "P(a)"]))]);
        let e = apply_rule(&set(&["exists x . P(x)"]), &RuleId::Exists("k".into()), &f("exists x . P(x)")).unwrap();
        assert_eq!(show(&e[0]), ["P(k)", "exists x . P(x)"]);
    }

    #[test]
    fn rule_errors() {
        assert!(matches!(apply_rule(&set(&["P(a)"]), &RuleId::And, &f("P(a)")), Err(Error::RuleMismatch { .. })));
        assert!(apply_rule(&set(&["P(a)"]), &RuleId::And, &f("Q(a)")).is_err());
        let e = apply_rule(&set(&["exists x . P(x)", "P(a)"]), &RuleId::Exists("a".into()), &f("exists x . P(x)"));
        assert!(matches!(e, Err(Error::RuleMismatch { ref reason, .. }) if reason.contains("fresh")));
        let u = apply_rule(&set(&["forall x . P(x)"]), &RuleId::Forall(Term::var("y")), &f("forall x . P(x)"));
        assert!(matches!(u, Err(Error::RuleMismatch { ref reason, .. }) if reason.contains("ground")));
    }

    #[test]
    fn ground_clash_closes() {
        let t = saturate_ground(set(&["P(a)", "~P(a)"])).unwrap();
        assert_eq!(t.status(), TableauStatus::AllClosed);
        assert_eq!(t.leaves().len(), 1);
        assert!(open_branch_leaves(&t, true).unwrap().is_empty());
    }

    #[test]
    fn ground_disjunction_opens_two_branches() {
        let t = saturate_ground(set(&["P(a) | Q(a)"])).unwrap();
        assert_eq!(t.status(), TableauStatus::OpenSaturated);
        let leaves: Vec<Vec<String>> = open_branch_leaves(&t, true)
            .unwrap()
            .into_iter()
            .map(|s| s.iter().map(|f| f.to_string()).collect())
            .collect();
        assert_eq!(leaves, vec![vec!["P(a)", "P(a) | Q(a)"], vec!["Q(a)", "P(a) | Q(a)"]]);
    }

    #[test]
    fn ground_negated_conjunction_closes() {
        let t = saturate_ground(set(&["~(P(a) & Q(a))", "P(a)", "Q(a)"])).unwrap();
        assert_eq!(t.status(), TableauStatus::AllClosed);
    }

    #[test]
    fn ground_rejects_quantifiers() {
        assert!(matches!(saturate_ground(set(&["exists x . P(x)"])), Err(Error::TableauPrecondition(_))));
        assert!(matches!(saturate_ground(set(&["P(a) -> P(b)"])), Err(Error::TableauPrecondition(_))));
    }

    #[test]
    fn fresh_witness_skips_names_in_use() {
        // sk1 already occurs, so the witness is sk2 and the branch stays open.
        let (t, status) = saturate_bounded(set(&["exists x . P(x)", "~P(sk1)"]), Limits::default()).unwrap();
        assert_eq!(status, TableauStatus::OpenSaturated);
        assert!(t.nodes().iter().any(|n| matches!(&n.via, Some((RuleId::Exists(c), _)) if c == "sk2")));
    }

    #[test]
    fn existential_against_universal_closes() {
        let (_, status) = saturate_bounded(set(&["exists x . P(x)", "~(exists x . P(x))"]), Limits::default()).unwrap();
        assert_eq!(status, TableauStatus::AllClosed);
    }

    #[test]
    fn bounded_atom_is_open() {
        let (t, status) = saturate_bounded(set(&["P(a)"]), Limits::default()).unwrap();
        assert_eq!(status, TableauStatus::OpenSaturated);
        assert_eq!(t.leaves().len(), 1);
    }

    #[test]
    fn universal_instantiates_with_branch_terms() {
        let (t, status) = saturate_bounded(set(&["~(exists x . ~P(x))", "~P(a)"]), Limits::default()).unwrap();
        assert_eq!(status, TableauStatus::AllClosed);
        assert!(t.nodes().iter().any(|n| matches!(&n.via, Some((RuleId::Forall(Term::App(c, _)), _)) if c == "a")));
    }

    #[test]
    fn universal_without_terms_uses_fresh_constant() {
        let (t, status) = saturate_bounded(set(&["forall x . P(x)"]), Limits::default()).unwrap();
        assert_eq!(status, TableauStatus::OpenSaturated);
        let leaf = open_branch_leaves(&t, true).unwrap()[0].clone();
        assert!(leaf.contains(&FoFormula::atom("P", vec![Term::constant("sk1")])));
    }

    #[test]
    fn limits_are_enforced() {
        let s = FoSignature::from_symbols(Vec::<(String, usize)>::new(), [("R", 2)]).unwrap();
        let root: FormulaSet = [parse_formula("forall x . exists y . R(x,y)", &s).unwrap()].into();
        let (t, status) = saturate_bounded(root.clone(), Limits { max_nodes: 10, max_instantiations_per_universal: 100 }).unwrap();
        assert_eq!(status, TableauStatus::ResourceExhausted);
        assert!(t.nodes().len() <= 10);
        assert_eq!(open_branch_leaves(&t, true), Err(Error::IncompleteTableau));
        let (_, status) = saturate_bounded(root.clone(), Limits { max_nodes: 10_000, max_instantiations_per_universal: 3 }).unwrap();
        assert_eq!(status, TableauStatus::ResourceExhausted);
        assert!(saturate_bounded(root, Limits { max_nodes: 0, max_instantiations_per_universal: 1 }).is_err());
    }

    #[test]
    fn candidate_structures() {
        let m = extract_candidate_structure(&set(&["P(a)"]), &FoSignature::new()).unwrap();
        assert_eq!(m.structure.size(), 1);
        assert_eq!(m.structure.relation("P").unwrap().tuples(1), vec![vec![0]]);

        let leaf = set(&["a = b", "P(a)"]);
        let m = extract_candidate_structure(&leaf, &FoSignature::new()).unwrap();
        assert_eq!(m.structure.size(), 1);
        assert!(leaf.iter().all(|f| eval_sentence(&m.structure, f).unwrap()));

        let m = extract_candidate_structure(&set(&["P(a)", "~Q(a)"]), &FoSignature::new()).unwrap();
        assert_eq!(m.structure.relation("P").unwrap().tuples(1), vec![vec![0]]);
        assert!(m.structure.relation("Q").unwrap().tuples(1).is_empty());

        let bad = extract_candidate_structure(&set(&["a = b", "P(a)", "~P(b)"]), &FoSignature::new());
        assert!(matches!(bad, Err(Error::InconsistentLeaf(_))));
    }

    #[test]
    fn congruence_merges_function_images() {
        let s = FoSignature::from_symbols([("a", 0), ("b", 0), ("f", 1)], [("P", 1)]).unwrap();
        let leaf: FormulaSet = ["a = b", "P(f(a))"].iter().map(|t| parse_formula(t, &s).unwrap()).collect();
        let m = extract_candidate_structure(&leaf, &s).unwrap();
        assert_eq!(m.structure.size(), 2);
        let fb = parse_formula("P(f(b))", &s).unwrap();
        assert!(eval_sentence(&m.structure, &fb).unwrap());
    }

    #[test]
    fn script_replays_to_same_tableau() {
        let t = saturate_ground(set(&["(A(a) | B(a)) & ~A(a)", "~(P(a) & ~B(a))"])).unwrap();
        let again = Tableau::replay(t.root().clone(), &t.script()).unwrap();
        assert_eq!(again, t);
    }

    #[test]
    fn json_dump_shape() {
        let t = saturate_ground(set(&["P(a) | Q(a)"])).unwrap();
        let v = t.to_json();
        assert_eq!(v["status"], "open-saturated");
        assert_eq!(v["edges"][0]["rule"], "OR");
        assert_eq!(v["edges"][0]["principal"], "P(a) | Q(a)");
        assert_eq!(v["branches"].as_array().unwrap().len(), 2);
    }
}
