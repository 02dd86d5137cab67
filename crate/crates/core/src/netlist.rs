// SPDX-License-Identifier: Apache-2.0

//! Gate-level netlists in BENCH format.
//!
//! A [`Circuit`] is built once, levelized, and never mutated afterwards. Net
//! ids are dense indices assigned in order of first appearance in the source,
//! so every per-net table in this crate is a plain `Vec` indexed by
//! [`NetId::index`].
//!
//! Flip-flops are removed at construction time under a full-scan view: the
//! data input of each `DFF` becomes a pseudo-primary output and its output
//! becomes a pseudo-primary input.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

/// Dense net index.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NetId(pub u32);

impl NetId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Dense gate index.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GateId(pub u32);

impl GateId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Gate (and net-source) types. The discriminant order is the one-hot
/// position used by the feature vectors.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateType {
    Pi,
    Po,
    Ppi,
    Ppo,
    Not,
    And,
    Nand,
    Or,
    Nor,
    Xor,
    Xnor,
    Dff,
    Buf,
    Bad,
}

impl GateType {
    pub const COUNT: usize = 14;

    pub const ALL: [GateType; Self::COUNT] = [
        GateType::Pi,
        GateType::Po,
        GateType::Ppi,
        GateType::Ppo,
        GateType::Not,
        GateType::And,
        GateType::Nand,
        GateType::Or,
        GateType::Nor,
        GateType::Xor,
        GateType::Xnor,
        GateType::Dff,
        GateType::Buf,
        GateType::Bad,
    ];

    /// Position in the one-hot encoding.
    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    /// Maps a BENCH keyword (case-insensitive) to a gate type. Anything
    /// unrecognised is `Bad`.
    pub fn from_keyword(keyword: &str) -> GateType {
        match keyword.to_ascii_uppercase().as_str() {
            "PI" => GateType::Pi,
            "PO" => GateType::Po,
            "PPI" => GateType::Ppi,
            "PPO" => GateType::Ppo,
            "NOT" | "INV" => GateType::Not,
            "AND" => GateType::And,
            "NAND" => GateType::Nand,
            "OR" => GateType::Or,
            "NOR" => GateType::Nor,
            "XOR" => GateType::Xor,
            "XNOR" => GateType::Xnor,
            "DFF" => GateType::Dff,
            "BUF" | "BUFF" => GateType::Buf,
            _ => GateType::Bad,
        }
    }

    /// Canonical uppercase keyword.
    pub fn keyword(self) -> &'static str {
        match self {
            GateType::Pi => "PI",
            GateType::Po => "PO",
            GateType::Ppi => "PPI",
            GateType::Ppo => "PPO",
            GateType::Not => "NOT",
            GateType::And => "AND",
            GateType::Nand => "NAND",
            GateType::Or => "OR",
            GateType::Nor => "NOR",
            GateType::Xor => "XOR",
            GateType::Xnor => "XNOR",
            GateType::Dff => "DFF",
            GateType::Buf => "BUF",
            GateType::Bad => "BAD",
        }
    }

    /// True for gates with a combinational truth table.
    pub fn is_logic(self) -> bool {
        !matches!(
            self,
            GateType::Pi | GateType::Ppi | GateType::Dff | GateType::Bad
        )
    }

    /// Output is inverted relative to the underlying AND/OR/XOR/identity.
    pub fn is_inverting(self) -> bool {
        matches!(
            self,
            GateType::Not | GateType::Nand | GateType::Nor | GateType::Xnor
        )
    }

    /// Input value that alone fixes the output, if the gate has one.
    pub fn controlling_value(self) -> Option<bool> {
        match self {
            GateType::And | GateType::Nand => Some(false),
            GateType::Or | GateType::Nor => Some(true),
            _ => None,
        }
    }
}

impl fmt::Display for GateType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// How a net gets its value.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum NetSource {
    PrimaryInput,
    PseudoInput,
    Gate(GateId),
}

/// Why a net is observed, if it is.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum OutputKind {
    Primary,
    Pseudo,
}

/// One gate input pin.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Pin {
    pub gate: GateId,
    pub input: usize,
}

#[derive(Clone, Debug)]
pub struct Net {
    pub id: NetId,
    pub name: String,
    pub source: NetSource,
    pub output: Option<OutputKind>,
    pub fanout: Vec<Pin>,
    pub level: u32,
}

impl Net {
    pub fn driver(&self) -> Option<GateId> {
        match self.source {
            NetSource::Gate(g) => Some(g),
            _ => None,
        }
    }

    pub fn is_input(&self) -> bool {
        !matches!(self.source, NetSource::Gate(_))
    }

    pub fn is_output(&self) -> bool {
        self.output.is_some()
    }

    /// Number of gate input pins driven by this net.
    pub fn fanout_count(&self) -> usize {
        self.fanout.len()
    }
}

#[derive(Clone, Debug)]
pub struct Gate {
    pub id: GateId,
    pub kind: GateType,
    pub inputs: Vec<NetId>,
    pub output: NetId,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NetlistError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: net `{name}` is used but never defined")]
    UndefinedNet { name: String, line: usize },
    #[error("line {line}: net `{name}` is defined more than once")]
    DuplicateDefinition { name: String, line: usize },
    #[error("combinational cycle through net `{name}`")]
    Cycle { name: String },
}

/// An immutable, levelized gate-level circuit.
#[derive(Clone, Debug)]
pub struct Circuit {
    name: String,
    nets: Vec<Net>,
    gates: Vec<Gate>,
    inputs: Vec<NetId>,
    outputs: Vec<NetId>,
    flip_flops: Vec<(NetId, NetId)>,
    order: Vec<GateId>,
    max_level: u32,
    by_name: HashMap<String, NetId>,
}

impl Circuit {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Circuit {
        self.name = name.into();
        self
    }

    pub fn nets(&self) -> &[Net] {
        &self.nets
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    #[inline]
    pub fn net(&self, id: NetId) -> &Net {
        &self.nets[id.index()]
    }

    #[inline]
    pub fn gate(&self, id: GateId) -> &Gate {
        &self.gates[id.index()]
    }

    pub fn num_nets(&self) -> usize {
        self.nets.len()
    }

    pub fn num_gates(&self) -> usize {
        self.gates.len()
    }

    /// Primary and pseudo-primary inputs, in declaration order.
    pub fn inputs(&self) -> &[NetId] {
        &self.inputs
    }

    /// Primary and pseudo-primary outputs, in declaration order.
    pub fn outputs(&self) -> &[NetId] {
        &self.outputs
    }

    /// `(data input, output)` of every flip-flop removed by scan conversion.
    pub fn flip_flops(&self) -> &[(NetId, NetId)] {
        &self.flip_flops
    }

    /// Gates sorted by (level, id); a single pass in this order is a valid
    /// forward sweep, and the reverse is a valid backward sweep.
    pub fn topo_order(&self) -> &[GateId] {
        &self.order
    }

    pub fn max_level(&self) -> u32 {
        self.max_level
    }

    pub fn find_net(&self, name: &str) -> Option<NetId> {
        self.by_name.get(name).copied()
    }

    pub fn net_ids(&self) -> impl Iterator<Item = NetId> + '_ {
        (0..self.nets.len() as u32).map(NetId)
    }

    /// Gate type used as a net's feature: the driver's type, or the input
    /// kind for source nets.
    pub fn net_type(&self, id: NetId) -> GateType {
        match self.net(id).source {
            NetSource::PrimaryInput => GateType::Pi,
            NetSource::PseudoInput => GateType::Ppi,
            NetSource::Gate(g) => self.gate(g).kind,
        }
    }

    /// First gate without combinational semantics, if any.
    pub fn find_bad_gate(&self) -> Option<&Gate> {
        self.gates.iter().find(|g| !g.kind.is_logic())
    }
}

/// Assigns level 0 to input nets and `1 + max(input levels)` to every gate
/// output, rebuilding the topological gate order.
pub fn levelize(circuit: Circuit) -> Result<Circuit, NetlistError> {
    let mut circuit = circuit;
    let n = circuit.nets.len();
    let mut pending: Vec<usize> = circuit.gates.iter().map(|g| g.inputs.len()).collect();
    let mut level = vec![0u32; n];
    let mut queue: VecDeque<NetId> = circuit
        .nets
        .iter()
        .filter(|net| net.is_input())
        .map(|net| net.id)
        .collect();
    let mut order = Vec::with_capacity(circuit.gates.len());
    let mut seen = 0usize;
    while let Some(net) = queue.pop_front() {
        seen += 1;
        for pin in &circuit.nets[net.index()].fanout {
            let g = pin.gate.index();
            pending[g] -= 1;
            if pending[g] == 0 {
                let gate = &circuit.gates[g];
                let lvl = 1 + gate
                    .inputs
                    .iter()
                    .map(|i| level[i.index()])
                    .max()
                    .unwrap_or(0);
                level[gate.output.index()] = lvl;
                order.push(gate.id);
                queue.push_back(gate.output);
            }
        }
    }
    if seen < n {
        let stuck = circuit
            .gates
            .iter()
            .find(|g| pending[g.id.index()] > 0)
            .map(|g| circuit.nets[g.output.index()].name.clone())
            .unwrap_or_default();
        return Err(NetlistError::Cycle { name: stuck });
    }
    for (net, lvl) in circuit.nets.iter_mut().zip(&level) {
        net.level = *lvl;
    }
    order.sort_by_key(|g| (level[circuit.gates[g.index()].output.index()], *g));
    circuit.max_level = level.iter().copied().max().unwrap_or(0);
    circuit.order = order;
    Ok(circuit)
}

/// Breadth-first distance, in gate hops, from the nearest input net.
pub fn shortest_pi_distance(circuit: &Circuit) -> Vec<u32> {
    let mut dist = vec![u32::MAX; circuit.num_nets()];
    for &i in circuit.inputs() {
        dist[i.index()] = 0;
    }
    for &g in circuit.topo_order() {
        let gate = circuit.gate(g);
        let nearest = gate
            .inputs
            .iter()
            .map(|i| dist[i.index()])
            .min()
            .unwrap_or(0);
        dist[gate.output.index()] = nearest.saturating_add(1);
    }
    dist
}

#[derive(Clone, Debug)]
struct DraftNet {
    name: String,
    source: Option<NetSource>,
    output: Option<OutputKind>,
    first_use: usize,
    defined_at: usize,
}

/// Incremental circuit construction; used by the BENCH reader and by the
/// random circuit generators.
#[derive(Clone, Debug, Default)]
pub struct CircuitBuilder {
    name: String,
    nets: Vec<DraftNet>,
    by_name: HashMap<String, NetId>,
    gates: Vec<(GateType, Vec<NetId>, NetId)>,
    inputs: Vec<NetId>,
    outputs: Vec<NetId>,
    flip_flops: Vec<(NetId, NetId)>,
    line: usize,
}

impl CircuitBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        CircuitBuilder {
            name: name.into(),
            ..Default::default()
        }
    }

    /// Source line attached to subsequent diagnostics.
    pub fn set_line(&mut self, line: usize) {
        self.line = line;
    }

    /// Interns a net name, creating the net on first mention.
    pub fn net(&mut self, name: &str) -> NetId {
        if let Some(&id) = self.by_name.get(name) {
            return id;
        }
        let id = NetId(self.nets.len() as u32);
        self.nets.push(DraftNet {
            name: name.to_string(),
            source: None,
            output: None,
            first_use: self.line,
            defined_at: 0,
        });
        self.by_name.insert(name.to_string(), id);
        id
    }

    fn define(&mut self, id: NetId, source: NetSource) -> Result<(), NetlistError> {
        let draft = &mut self.nets[id.index()];
        if draft.source.is_some() {
            return Err(NetlistError::DuplicateDefinition {
                name: draft.name.clone(),
                line: self.line,
            });
        }
        draft.source = Some(source);
        draft.defined_at = self.line;
        Ok(())
    }

    pub fn add_input(&mut self, name: &str) -> Result<NetId, NetlistError> {
        let id = self.net(name);
        self.define(id, NetSource::PrimaryInput)?;
        self.inputs.push(id);
        Ok(id)
    }

    pub fn add_output(&mut self, name: &str) -> NetId {
        let id = self.net(name);
        if self.nets[id.index()].output.is_none() {
            self.nets[id.index()].output = Some(OutputKind::Primary);
            self.outputs.push(id);
        }
        id
    }

    /// Splits `q = DFF(d)` into a pseudo-primary output `d` and a
    /// pseudo-primary input `q`.
    pub fn add_flip_flop(&mut self, d: &str, q: &str) -> Result<(), NetlistError> {
        let d = self.net(d);
        let q = self.net(q);
        self.define(q, NetSource::PseudoInput)?;
        self.inputs.push(q);
        if self.nets[d.index()].output.is_none() {
            self.nets[d.index()].output = Some(OutputKind::Pseudo);
            self.outputs.push(d);
        }
        self.flip_flops.push((d, q));
        Ok(())
    }

    fn fresh_name(&self, base: &str, k: usize) -> String {
        let mut name = format!("{base}~{k}");
        while self.by_name.contains_key(&name) {
            name.push('_');
        }
        name
    }

    /// Adds `output = kind(inputs...)`. XOR/XNOR with more than two inputs are
    /// decomposed left-associatively into two-input gates.
    pub fn add_gate(
        &mut self,
        kind: GateType,
        inputs: &[&str],
        output: &str,
    ) -> Result<NetId, NetlistError> {
        let ids: Vec<NetId> = inputs.iter().map(|n| self.net(n)).collect();
        self.add_gate_ids(kind, &ids, output)
    }

    pub fn add_gate_ids(
        &mut self,
        kind: GateType,
        inputs: &[NetId],
        output: &str,
    ) -> Result<NetId, NetlistError> {
        let out = self.net(output);
        if matches!(kind, GateType::Xor | GateType::Xnor) && inputs.len() > 2 {
            let mut acc = inputs[0];
            for (k, &next) in inputs[1..inputs.len() - 1].iter().enumerate() {
                let name = self.fresh_name(output, k + 1);
                let tmp = self.net(&name);
                self.push_gate(GateType::Xor, vec![acc, next], tmp)?;
                acc = tmp;
            }
            self.push_gate(kind, vec![acc, inputs[inputs.len() - 1]], out)?;
        } else {
            self.push_gate(kind, inputs.to_vec(), out)?;
        }
        Ok(out)
    }

    fn push_gate(
        &mut self,
        kind: GateType,
        inputs: Vec<NetId>,
        out: NetId,
    ) -> Result<(), NetlistError> {
        let g = GateId(self.gates.len() as u32);
        self.define(out, NetSource::Gate(g))?;
        self.gates.push((kind, inputs, out));
        Ok(())
    }

    pub fn build(self) -> Result<Circuit, NetlistError> {
        let CircuitBuilder {
            name,
            nets: drafts,
            by_name,
            gates: raw_gates,
            inputs,
            outputs,
            flip_flops,
            ..
        } = self;
        let mut nets = Vec::with_capacity(drafts.len());
        for (i, d) in drafts.into_iter().enumerate() {
            let source = d.source.ok_or_else(|| NetlistError::UndefinedNet {
                name: d.name.clone(),
                line: d.first_use,
            })?;
            nets.push(Net {
                id: NetId(i as u32),
                name: d.name,
                source,
                output: d.output,
                fanout: Vec::new(),
                level: 0,
            });
        }
        let mut gates = Vec::with_capacity(raw_gates.len());
        for (i, (kind, ins, out)) in raw_gates.into_iter().enumerate() {
            let id = GateId(i as u32);
            for (pin, net) in ins.iter().enumerate() {
                nets[net.index()].fanout.push(Pin {
                    gate: id,
                    input: pin,
                });
            }
            gates.push(Gate {
                id,
                kind,
                inputs: ins,
                output: out,
            });
        }
        levelize(Circuit {
            name,
            nets,
            gates,
            inputs,
            outputs,
            flip_flops,
            order: Vec::new(),
            max_level: 0,
            by_name,
        })
    }
}

fn is_name_char(c: char) -> bool {
    !c.is_whitespace() && !matches!(c, '(' | ')' | ',' | '=' | '#')
}

struct LineCursor<'a> {
    text: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> LineCursor<'a> {
    fn column(&self) -> usize {
        self.text[..self.pos].chars().count() + 1
    }

    fn error(&self, message: impl Into<String>) -> NetlistError {
        NetlistError::Syntax {
            line: self.line,
            column: self.column(),
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        let rest = &self.text[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.text.len()
    }

    fn name(&mut self) -> Result<&'a str, NetlistError> {
        self.skip_ws();
        let rest = &self.text[self.pos..];
        let len = rest
            .char_indices()
            .find(|&(_, c)| !is_name_char(c))
            .map(|(i, _)| i)
            .unwrap_or(rest.len());
        if len == 0 {
            return Err(self.error("expected a name"));
        }
        self.pos += len;
        Ok(&rest[..len])
    }

    fn expect(&mut self, c: char) -> Result<(), NetlistError> {
        self.skip_ws();
        if self.text[self.pos..].starts_with(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(self.error(format!("expected `{c}`")))
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.text[self.pos..].chars().next()
    }

    /// `( name, name, ... )`, possibly empty.
    fn arguments(&mut self) -> Result<Vec<&'a str>, NetlistError> {
        self.expect('(')?;
        let mut args = Vec::new();
        if self.peek() == Some(')') {
            self.pos += 1;
            return Ok(args);
        }
        loop {
            args.push(self.name()?);
            match self.peek() {
                Some(',') => self.pos += 1,
                Some(')') => {
                    self.pos += 1;
                    return Ok(args);
                }
                _ => return Err(self.error("expected `,` or `)`")),
            }
        }
    }
}

/// Parses a BENCH netlist.
pub fn parse_bench(text: &str) -> Result<Circuit, NetlistError> {
    parse_bench_named(text, "circuit")
}

pub fn parse_bench_named(text: &str, name: &str) -> Result<Circuit, NetlistError> {
    let mut builder = CircuitBuilder::new(name);
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let body = raw.split('#').next().unwrap_or("");
        let mut cur = LineCursor {
            text: body,
            pos: 0,
            line: line_no,
        };
        if cur.at_end() {
            continue;
        }
        builder.set_line(line_no);
        let head = cur.name()?;
        if cur.peek() == Some('(') {
            let args = cur.arguments()?;
            let decl = head.to_ascii_uppercase();
            if args.len() != 1 || !matches!(decl.as_str(), "INPUT" | "OUTPUT") {
                return Err(NetlistError::Syntax {
                    line: line_no,
                    column: 1,
                    message: format!("expected INPUT(name) or OUTPUT(name), found `{head}`"),
                });
            }
            if decl == "INPUT" {
                builder.add_input(args[0])?;
            } else {
                builder.add_output(args[0]);
            }
        } else {
            cur.expect('=')?;
            let kw_col = {
                cur.skip_ws();
                cur.column()
            };
            let keyword = cur.name()?;
            let args = cur.arguments()?;
            let arity_error = |msg: &str| NetlistError::Syntax {
                line: line_no,
                column: kw_col,
                message: format!("{keyword}: {msg}"),
            };
            match GateType::from_keyword(keyword) {
                GateType::Dff => {
                    if args.len() != 1 {
                        return Err(arity_error("expects exactly one input"));
                    }
                    builder.add_flip_flop(args[0], head)?;
                }
                GateType::Pi | GateType::Ppi => {
                    if !args.is_empty() {
                        return Err(arity_error("takes no inputs"));
                    }
                    if GateType::from_keyword(keyword) == GateType::Pi {
                        builder.add_input(head)?;
                    } else {
                        let id = builder.net(head);
                        builder.define(id, NetSource::PseudoInput)?;
                        builder.inputs.push(id);
                    }
                }
                kind @ (GateType::Not | GateType::Buf | GateType::Po | GateType::Ppo) => {
                    if args.len() != 1 {
                        return Err(arity_error("expects exactly one input"));
                    }
                    builder.add_gate(kind, &args, head)?;
                }
                kind => {
                    if args.is_empty() {
                        return Err(arity_error("expects at least one input"));
                    }
                    builder.add_gate(kind, &args, head)?;
                }
            }
        }
        if !cur.at_end() {
            return Err(cur.error("unexpected trailing text"));
        }
    }
    builder.build()
}

/// Writes canonical BENCH text: inputs, outputs, gates in level order, then
/// flip-flops.
pub fn write_bench(circuit: &Circuit) -> String {
    let mut out = String::new();
    let pseudo: std::collections::HashSet<NetId> = circuit
        .flip_flops()
        .iter()
        .flat_map(|&(d, q)| [d, q])
        .collect();
    for &i in circuit.inputs() {
        if circuit.net(i).source == NetSource::PrimaryInput {
            out.push_str(&format!("INPUT({})\n", circuit.net(i).name));
        }
    }
    for &o in circuit.outputs() {
        if circuit.net(o).output == Some(OutputKind::Primary) {
            out.push_str(&format!("OUTPUT({})\n", circuit.net(o).name));
        }
    }
    for &g in circuit.topo_order() {
        let gate = circuit.gate(g);
        let ins: Vec<&str> = gate
            .inputs
            .iter()
            .map(|i| circuit.net(*i).name.as_str())
            .collect();
        out.push_str(&format!(
            "{} = {}({})\n",
            circuit.net(gate.output).name,
            gate.kind.keyword(),
            ins.join(", ")
        ));
    }
    for &(d, q) in circuit.flip_flops() {
        debug_assert!(pseudo.contains(&d));
        out.push_str(&format!(
            "{} = DFF({})\n",
            circuit.net(q).name,
            circuit.net(d).name
        ));
    }
    out
}

/// The ISCAS-85 c17 benchmark.
pub const C17_BENCH: &str = "# c17
INPUT(1)
INPUT(2)
INPUT(3)
INPUT(6)
INPUT(7)
OUTPUT(22)
OUTPUT(23)
10 = NAND(1, 3)
11 = NAND(3, 6)
16 = NAND(2, 11)
19 = NAND(11, 7)
22 = NAND(10, 16)
23 = NAND(16, 19)
";

#[cfg(test)]
mod tests {
    use super::*;

    fn level_of(c: &Circuit, name: &str) -> u32 {
        c.net(c.find_net(name).unwrap()).level
    }

    #[test]
    fn minimal_and() {
        let c = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = AND(a, b)").unwrap();
        assert_eq!(c.num_nets(), 3);
        assert_eq!(c.num_gates(), 1);
        assert_eq!(c.gates()[0].kind, GateType::And);
        assert_eq!(level_of(&c, "a"), 0);
        assert_eq!(level_of(&c, "b"), 0);
        assert_eq!(level_of(&c, "y"), 1);
    }

    #[test]
    fn c17_shape() {
        let c = parse_bench(C17_BENCH).unwrap();
        assert_eq!(c.num_nets(), 11);
        assert_eq!(c.num_gates(), 6);
        assert_eq!(c.inputs().len(), 5);
        assert_eq!(c.outputs().len(), 2);
        assert_eq!(c.max_level(), 3);
        assert!(c.gates().iter().all(|g| g.kind == GateType::Nand));
    }

    #[test]
    fn undefined_net() {
        let err = parse_bench("y = AND(a, b)").unwrap_err();
        assert!(matches!(err, NetlistError::UndefinedNet { .. }), "{err}");
    }

    #[test]
    fn duplicate_definition() {
        let err = parse_bench("INPUT(a)\nINPUT(a)").unwrap_err();
        assert_eq!(
            err,
            NetlistError::DuplicateDefinition {
                name: "a".into(),
                line: 2
            }
        );
        let err = parse_bench("INPUT(a)\ny = NOT(a)\ny = BUF(a)").unwrap_err();
        assert!(matches!(
            err,
            NetlistError::DuplicateDefinition { line: 3, .. }
        ));
    }

    #[test]
    fn cycle_detected() {
        let err = parse_bench("INPUT(a)\nx = AND(a, y)\ny = NOT(x)\nOUTPUT(y)").unwrap_err();
        assert!(matches!(err, NetlistError::Cycle { .. }), "{err}");
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = parse_bench("INPUT(a)\ny = AND(a b)").unwrap_err();
        assert_eq!(
            err,
            NetlistError::Syntax {
                line: 2,
                column: 11,
                message: "expected `,` or `)`".into()
            }
        );
        assert!(matches!(
            parse_bench("INPUT(a)\ny AND(a)").unwrap_err(),
            NetlistError::Syntax { line: 2, .. }
        ));
    }

    #[test]
    fn comments_case_and_whitespace() {
        let text = "  # header\n\ninput( a )  # trailing\nINPUT(b)\noutput(y)\n y=nand( a ,b )\n";
        let c = parse_bench(text).unwrap();
        assert_eq!(c.num_gates(), 1);
        assert_eq!(c.gates()[0].kind, GateType::Nand);
    }

    #[test]
    fn unknown_keyword_is_bad() {
        let c = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = MUX2(a, b)").unwrap();
        assert_eq!(c.gates()[0].kind, GateType::Bad);
        assert!(c.find_bad_gate().is_some());
    }

    #[test]
    fn not_chain_levels() {
        let c = parse_bench("INPUT(a)\nOUTPUT(d)\nb = NOT(a)\nc = NOT(b)\nd = NOT(c)").unwrap();
        assert_eq!(["b", "c", "d"].map(|n| level_of(&c, n)), [1, 2, 3]);
    }

    #[test]
    fn dff_becomes_scan_ports() {
        let text = "INPUT(a)\nOUTPUT(y)\nq = DFF(d)\nd = AND(a, q)\ny = NOT(q)";
        let c = parse_bench(text).unwrap();
        let q = c.find_net("q").unwrap();
        let d = c.find_net("d").unwrap();
        assert_eq!(c.net(q).source, NetSource::PseudoInput);
        assert_eq!(c.net(d).output, Some(OutputKind::Pseudo));
        assert_eq!(c.net_type(q), GateType::Ppi);
        assert_eq!(c.inputs().len(), 2);
        assert_eq!(c.outputs().len(), 2);
        assert_eq!(c.num_gates(), 2);
    }

    #[test]
    fn wide_xor_is_decomposed() {
        let c =
            parse_bench("INPUT(a)\nINPUT(b)\nINPUT(c)\nINPUT(d)\nOUTPUT(y)\ny = XNOR(a, b, c, d)")
                .unwrap();
        assert_eq!(c.num_gates(), 3);
        assert!(c.gates().iter().all(|g| g.inputs.len() == 2));
        let kinds: Vec<GateType> = c.topo_order().iter().map(|&g| c.gate(g).kind).collect();
        assert_eq!(kinds, [GateType::Xor, GateType::Xor, GateType::Xnor]);
        assert_eq!(level_of(&c, "y"), 3);
    }

    #[test]
    fn distances() {
        let text = "INPUT(a)\nINPUT(b)\nOUTPUT(y)\nn1 = NOT(a)\nn2 = NOT(n1)\nn3 = NOT(n2)\nn4 = NOT(n3)\nm = AND(a, b)\ny = AND(m, n4)";
        let c = parse_bench(text).unwrap();
        let d = shortest_pi_distance(&c);
        let at = |n: &str| d[c.find_net(n).unwrap().index()];
        assert_eq!(at("a"), 0);
        assert_eq!(at("m"), 1);
        assert_eq!(at("n4"), 4);
        assert_eq!(at("y"), 2);
        assert_eq!(level_of(&c, "y"), 5);
    }

    #[test]
    fn write_is_canonical() {
        let c = parse_bench("input(a)\ninput(b)\noutput(y)\ny = nand(a,b)").unwrap();
        assert_eq!(
            write_bench(&c),
            "INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = NAND(a, b)\n"
        );
    }
}
