use num_bigint::BigInt;
use num_traits::Zero;

use super::lexer::{lex, Tok, Token};
use super::{Diagnostic, Document, ParseError};
use crate::cdt::{MultiAgentSpec, OutcomeModel, UtilityTable, WorldModel};
use crate::game::{MixedProfile, NormalFormGame, PlayerPayoff};
use crate::machine::{MachineExpr, OracleAssignment, Output, Prob, Query, QuerySet};
use crate::rational::{self, Rational};

/// Deeper machine bodies are rejected instead of risking stack exhaustion.
const MAX_NESTING: usize = 512;
/// Largest dependency list of a game payoff table.
const MAX_TABLE_DEPS: usize = 20;
/// Largest agent count of an `agentgame` block.
const MAX_AGENTS: usize = 16;

type PResult<T> = Result<T, Diagnostic>;

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    depth: usize,
    /// Non-fatal diagnostics; parsing continues past them.
    diags: Vec<Diagnostic>,
}

struct GameBuilder {
    line: usize,
    column: usize,
    m: usize,
    players: Vec<Option<PlayerPayoff>>,
}

impl Parser {
    fn new(toks: Vec<Token>) -> Self {
        Self {
            toks,
            pos: 0,
            depth: 0,
            diags: Vec::new(),
        }
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err_at(t: &Token, msg: impl Into<String>) -> Diagnostic {
        Diagnostic::error(t.line, t.column, msg)
    }

    fn note(&mut self, t: &Token, msg: impl Into<String>) {
        self.diags.push(Self::err_at(t, msg));
    }

    fn expect_punct(&mut self, c: char) -> PResult<Token> {
        let t = self.next();
        if t.tok == Tok::Punct(c) {
            Ok(t)
        } else {
            Err(Self::err_at(
                &t,
                format!("expected `{c}`, found {}", t.tok.describe()),
            ))
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> PResult<Token> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(s) if s == kw => Ok(t),
            other => Err(Self::err_at(
                &t,
                format!("expected `{kw}`, found {}", other.describe()),
            )),
        }
    }

    fn name(&mut self) -> PResult<(String, Token)> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(s) => Ok((s.clone(), t.clone())),
            other => Err(Self::err_at(
                &t,
                format!("expected a name, found {}", other.describe()),
            )),
        }
    }

    fn integer(&mut self) -> PResult<(BigInt, Token)> {
        let t = self.next();
        match &t.tok {
            Tok::Number { text, float: false } => {
                let v: BigInt = text
                    .parse()
                    .map_err(|_| Self::err_at(&t, format!("bad integer `{text}`")))?;
                Ok((v, t))
            }
            other => Err(Self::err_at(
                &t,
                format!("expected an integer, found {}", other.describe()),
            )),
        }
    }

    fn small_integer(&mut self, what: &str) -> PResult<(usize, Token)> {
        let (v, t) = self.integer()?;
        let v = usize::try_from(v)
            .ok()
            .filter(|&v| v <= 1 << 20)
            .ok_or_else(|| Self::err_at(&t, format!("{what} is too large")))?;
        Ok((v, t))
    }

    /// `INT "/" INT | INT`.
    fn rational(&mut self) -> PResult<(Rational, Token)> {
        let (n, t) = self.integer()?;
        if self.peek().tok == Tok::Punct('/') {
            self.next();
            let (d, dt) = self.integer()?;
            if d.is_zero() {
                return Err(Self::err_at(&dt, "zero denominator"));
            }
            return Ok((Rational::new(n, d), t));
        }
        Ok((Rational::from_integer(n), t))
    }

    /// A rational in `[0, 1]`. Out-of-range values are reported and parsing
    /// continues.
    fn probability(&mut self) -> PResult<(Rational, Token)> {
        let (r, t) = self.rational()?;
        if !rational::in_unit(&r) {
            self.note(
                &t,
                format!(
                    "probability {} is outside [0, 1]",
                    rational::format_rational(&r)
                ),
            );
        }
        Ok((r, t))
    }

    /// A rational or a decimal, in `[0, 1]`.
    fn prob_value(&mut self) -> PResult<Prob> {
        if let Tok::Number { text, float: true } = &self.peek().tok {
            let text = text.clone();
            let t = self.next();
            let x: f64 = text
                .parse()
                .map_err(|_| Self::err_at(&t, format!("bad number `{text}`")))?;
            if !(0.0..=1.0).contains(&x) {
                self.note(&t, format!("probability {text} is outside [0, 1]"));
            }
            return Ok(Prob::Float(x));
        }
        Ok(Prob::Exact(self.probability()?.0))
    }

    /// `STRING`, `0` or `1`.
    fn label(&mut self) -> PResult<String> {
        let t = self.next();
        match &t.tok {
            Tok::Str(s) => Ok(s.clone()),
            Tok::Number { text, float: false } if text == "0" || text == "1" => Ok(text.clone()),
            other => Err(Self::err_at(
                &t,
                format!("expected an outcome label, found {}", other.describe()),
            )),
        }
    }

    fn expr(&mut self) -> PResult<MachineExpr> {
        let t = self.next();
        if self.depth >= MAX_NESTING {
            return Err(Self::err_at(&t, "machine body is nested too deeply"));
        }
        self.depth += 1;
        let e = self.expr_inner(t);
        self.depth -= 1;
        e
    }

    fn expr_inner(&mut self, t: Token) -> PResult<MachineExpr> {
        let kw = match &t.tok {
            Tok::Ident(s) => s.as_str(),
            other => {
                return Err(Self::err_at(
                    &t,
                    format!("expected an expression, found {}", other.describe()),
                ))
            }
        };
        match kw {
            "ret" => {
                let v = self.next();
                match &v.tok {
                    Tok::Number { text, float: false } if text == "0" => Ok(MachineExpr::ret0()),
                    Tok::Number { text, float: false } if text == "1" => Ok(MachineExpr::ret1()),
                    Tok::Str(s) => Ok(MachineExpr::Ret(Output::Other(s.clone()))),
                    other => Err(Self::err_at(
                        &v,
                        format!(
                            "`ret` takes 0, 1 or a string, found {}",
                            other.describe()
                        ),
                    )),
                }
            }
            "flip" => {
                self.expect_punct('(')?;
                let (p, _) = self.probability()?;
                self.expect_punct(',')?;
                let heads = self.expr()?;
                self.expect_punct(',')?;
                let tails = self.expr()?;
                self.expect_punct(')')?;
                Ok(MachineExpr::flip(p, heads, tails))
            }
            "oracle" => {
                self.expect_punct('(')?;
                let (target, _) = self.name()?;
                self.expect_punct(',')?;
                let (p, _) = self.probability()?;
                self.expect_punct(',')?;
                let on_zero = self.expr()?;
                self.expect_punct(',')?;
                let on_one = self.expr()?;
                self.expect_punct(')')?;
                Ok(MachineExpr::oracle(target, p, on_zero, on_one))
            }
            "call" => {
                self.expect_punct('(')?;
                let (target, _) = self.name()?;
                self.expect_punct(',')?;
                let on_zero = self.expr()?;
                self.expect_punct(',')?;
                let on_one = self.expr()?;
                self.expect_punct(',')?;
                let on_other = self.expr()?;
                self.expect_punct(')')?;
                Ok(MachineExpr::call(target, on_zero, on_one, on_other))
            }
            other => Err(Self::err_at(
                &t,
                format!("unknown expression `{other}`; expected ret, flip, oracle or call"),
            )),
        }
    }

    fn rational_list(&mut self) -> PResult<Vec<(Rational, Token)>> {
        let mut out = Vec::new();
        while matches!(self.peek().tok, Tok::Number { float: false, .. }) {
            out.push(self.probability()?);
        }
        Ok(out)
    }

    fn agentgame(&mut self, start: &Token) -> PResult<MultiAgentSpec> {
        let (name, _) = self.name()?;
        self.expect_punct('{')?;
        let mut agents: Option<usize> = None;
        let mut payoffs: Vec<(usize, Vec<Rational>, Token)> = Vec::new();
        let mut outcome: Option<String> = None;
        let mut utils: Vec<(usize, String, Rational, Token)> = Vec::new();
        loop {
            let t = self.next();
            let kw = match &t.tok {
                Tok::Punct('}') => break,
                Tok::Ident(s) => s.clone(),
                other => {
                    return Err(Self::err_at(
                        &t,
                        format!("expected an agentgame item or `}}`, found {}", other.describe()),
                    ))
                }
            };
            match kw.as_str() {
                "agents" => {
                    let (n, nt) = self.small_integer("agent count")?;
                    if n == 0 || n > MAX_AGENTS {
                        return Err(Self::err_at(
                            &nt,
                            format!("agent count must be between 1 and {MAX_AGENTS}"),
                        ));
                    }
                    if agents.replace(n).is_some() {
                        self.note(&t, "agent count given twice");
                    }
                }
                "actions" => {
                    let (k, kt) = self.small_integer("action count")?;
                    if k != 2 {
                        self.note(&kt, "agentgame agents have exactly 2 actions");
                    }
                }
                "payoff" => {
                    let (i, _) = self.small_integer("agent index")?;
                    self.expect_punct('=')?;
                    let vals = self.rational_list()?;
                    payoffs.push((i, vals.into_iter().map(|v| v.0).collect(), t.clone()));
                }
                "outcome" => {
                    let (f, _) = self.name()?;
                    if outcome.replace(f).is_some() {
                        self.note(&t, "outcome machine given twice");
                    }
                }
                "utility" => {
                    let (i, _) = self.small_integer("agent index")?;
                    let label = self.label()?;
                    self.expect_punct('=')?;
                    let (r, _) = self.probability()?;
                    utils.push((i, label, r, t.clone()));
                }
                other => {
                    return Err(Self::err_at(
                        &t,
                        format!("unknown agentgame item `{other}`"),
                    ))
                }
            }
            self.expect_punct(';')?;
        }
        let n = agents.ok_or_else(|| Self::err_at(start, "agentgame needs `agents n;`"))?;
        let mut tables = vec![UtilityTable::new(); n];
        for (i, vals, t) in payoffs {
            if i == 0 || i > n {
                self.note(&t, format!("agent {i} out of range 1..{n}"));
                continue;
            }
            if vals.len() != 1 << n {
                self.note(
                    &t,
                    format!("payoff needs {} entries, found {}", 1usize << n, vals.len()),
                );
                continue;
            }
            for (idx, v) in vals.into_iter().enumerate() {
                if let Err(e) = tables[i - 1].insert(MultiAgentSpec::profile_label(n, idx), v) {
                    self.note(&t, e.to_string());
                }
            }
        }
        for (i, label, r, t) in utils {
            if i == 0 || i > n {
                self.note(&t, format!("agent {i} out of range 1..{n}"));
                continue;
            }
            if let Err(e) = tables[i - 1].insert(label, r) {
                self.note(&t, e.to_string());
            }
        }
        let outcome = match outcome {
            Some(f) => OutcomeModel::Machines(f),
            None => OutcomeModel::Identity,
        };
        MultiAgentSpec::new(name, n, outcome, tables).map_err(|e| Self::err_at(start, e.to_string()))
    }

    fn game_payoff(&mut self, game: &mut GameBuilder, start: &Token) -> PResult<()> {
        let (k, kt) = self.small_integer("player index")?;
        self.expect_punct(':')?;
        let table: Vec<Rational> = self.rational_list()?.into_iter().map(|v| v.0).collect();
        self.expect_keyword("deps")?;
        self.expect_punct(':')?;
        let mut deps = Vec::new();
        while matches!(self.peek().tok, Tok::Number { float: false, .. }) {
            let (d, dt) = self.small_integer("dependency index")?;
            if d == 0 || d > game.m {
                return Err(Self::err_at(
                    &dt,
                    format!("dependency {d} out of range 1..{}", game.m),
                ));
            }
            deps.push(d - 1);
        }
        if deps.len() > MAX_TABLE_DEPS {
            return Err(Self::err_at(start, "payoff table has too many dependencies"));
        }
        if k == 0 || k > game.m {
            return Err(Self::err_at(
                &kt,
                format!("player {k} out of range 1..{}", game.m),
            ));
        }
        if game.players[k - 1].is_some() {
            self.note(&kt, format!("payoff of player {k} given twice"));
        }
        game.players[k - 1] = Some(PlayerPayoff { deps, table });
        Ok(())
    }

    fn finish_game(&mut self, game: GameBuilder, doc: &mut Document) {
        let at = Diagnostic::error(game.line, game.column, "");
        let mut players = Vec::with_capacity(game.m);
        for (k, p) in game.players.into_iter().enumerate() {
            match p {
                Some(p) => players.push(p),
                None => {
                    self.diags.push(Diagnostic {
                        message: format!("game has no payoff for player {}", k + 1),
                        ..at.clone()
                    });
                    return;
                }
            }
        }
        match NormalFormGame::new(players) {
            Ok(g) => doc.games.push(g),
            Err(e) => self.diags.push(Diagnostic {
                message: e.to_string(),
                ..at
            }),
        }
    }

    fn document(&mut self) -> PResult<Document> {
        let mut doc = Document::default();
        let mut assign_queries = QuerySet::new();
        let mut assign_probs = Vec::new();
        let mut game: Option<GameBuilder> = None;
        loop {
            let t = self.next();
            let kw = match &t.tok {
                Tok::Eof => break,
                Tok::Ident(s) => s.clone(),
                other => {
                    return Err(Self::err_at(
                        &t,
                        format!("expected a statement, found {}", other.describe()),
                    ))
                }
            };
            match kw.as_str() {
                "machine" => {
                    let (name, nt) = self.name()?;
                    self.expect_punct('=')?;
                    let body = self.expr()?;
                    if doc.registry.insert(name.clone(), body).is_err() {
                        self.note(&nt, format!("machine `{name}` is already defined"));
                    }
                }
                "query" => {
                    let (name, _) = self.name()?;
                    self.expect_keyword("at")?;
                    let (p, _) = self.probability()?;
                    if rational::in_unit(&p) {
                        if let Err(e) = doc.queries.push(Query::new(name, p)) {
                            self.note(&t, e.to_string());
                        }
                    }
                }
                "assign" => {
                    let (name, _) = self.name()?;
                    self.expect_keyword("at")?;
                    let (p, _) = self.probability()?;
                    self.expect_punct('=')?;
                    let x = self.prob_value()?;
                    if rational::in_unit(&p) && x.is_valid() {
                        match assign_queries.push(Query::new(name, p)) {
                            Ok(_) => assign_probs.push(x),
                            Err(e) => self.note(&t, e.to_string()),
                        }
                    }
                }
                "world" => {
                    let mut names = vec![self.name()?.0];
                    while self.peek().tok == Tok::Punct(',') {
                        self.next();
                        names.push(self.name()?.0);
                    }
                    match WorldModel::new(names) {
                        Ok(w) => {
                            if doc.world.replace(w).is_some() {
                                self.note(&t, "world declared twice");
                            }
                        }
                        Err(e) => self.note(&t, e.to_string()),
                    }
                }
                "utility" => {
                    let label = self.label()?;
                    self.expect_punct('=')?;
                    let (r, _) = self.probability()?;
                    if let Err(e) = doc.utilities.insert(label, r) {
                        self.note(&t, e.to_string());
                    }
                }
                "agentgame" => {
                    let spec = self.agentgame(&t)?;
                    doc.agent_games.push(spec);
                    continue;
                }
                "game" => {
                    self.expect_keyword("m")?;
                    self.expect_punct('=')?;
                    let (m, mt) = self.small_integer("player count")?;
                    if m == 0 || m > 1024 {
                        return Err(Self::err_at(&mt, "player count must be between 1 and 1024"));
                    }
                    if let Some(g) = game.take() {
                        self.finish_game(g, &mut doc);
                    }
                    game = Some(GameBuilder {
                        line: t.line,
                        column: t.column,
                        m,
                        players: vec![None; m],
                    });
                }
                "payoff" => {
                    let mut g = game
                        .take()
                        .ok_or_else(|| Self::err_at(&t, "`payoff` outside a game"))?;
                    let r = self.game_payoff(&mut g, &t);
                    game = Some(g);
                    r?;
                }
                other => {
                    return Err(Self::err_at(&t, format!("unknown statement `{other}`")));
                }
            }
            self.expect_punct(';')?;
        }
        if let Some(g) = game.take() {
            self.finish_game(g, &mut doc);
        }
        doc.assignment = OracleAssignment::new(assign_queries, assign_probs)
            .expect("assign statements are validated while parsing");
        Ok(doc)
    }
}

pub(super) fn parse(src: &str) -> Result<Document, ParseError> {
    let toks = lex(src).map_err(ParseError::single)?;
    let mut p = Parser::new(toks);
    let doc = p.document();
    match doc {
        Err(d) => {
            p.diags.push(d);
            p.diags.sort_by_key(|d| (d.line, d.column));
            Err(ParseError {
                diagnostics: p.diags,
            })
        }
        Ok(_) if !p.diags.is_empty() => Err(ParseError {
            diagnostics: p.diags,
        }),
        Ok(doc) => Ok(doc),
    }
}

pub(super) fn parse_profile(src: &str) -> Result<MixedProfile, ParseError> {
    let toks = lex(src).map_err(ParseError::single)?;
    let mut p = Parser::new(toks);
    let mut out = Vec::new();
    while p.peek().tok != Tok::Eof {
        let x = p.prob_value().map_err(ParseError::single)?;
        out.push(x.to_f64());
    }
    if !p.diags.is_empty() {
        return Err(ParseError {
            diagnostics: p.diags,
        });
    }
    Ok(MixedProfile(out))
}
