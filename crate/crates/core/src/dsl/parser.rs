use crate::model::{
    Attribute, BuildError, BuildErrorClass, ClockBound, ClockOp, Domain, Endpoint, Guard, Model, ModelBuilder,
    StageKind, TriggerEnd, Value,
};

use super::diagnostic::{ParseCode, ParseDiagnostic, SourceSpan};
use super::lexer::{span_at, tokenize, Keyword, Pos, Tok, Token};

/// Default file name used in spans when none is given.
pub const ANONYMOUS: &str = "<input>";

/// Parses FM source text into a model.
///
/// On failure every returned diagnostic is an error with a span and no
/// partial model is produced.
pub fn parse(text: &str) -> Result<Model, Vec<ParseDiagnostic>> {
    parse_named(ANONYMOUS, text)
}

/// Like [`parse`] for raw bytes; invalid UTF-8 is a lexical error.
pub fn parse_bytes(file: &str, bytes: &[u8]) -> Result<Model, Vec<ParseDiagnostic>> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse_named(file, text),
        Err(e) => {
            let valid = std::str::from_utf8(&bytes[..e.valid_up_to()]).unwrap_or_default();
            let line = valid.matches('\n').count() as u32 + 1;
            let column = valid.rsplit('\n').next().map_or(0, |l| l.chars().count()) as u32 + 1;
            let span = SourceSpan { file: file.to_string(), line, column, length: 1 };
            Err(vec![ParseDiagnostic::error(ParseCode::Lexical, "invalid UTF-8", span)])
        }
    }
}

pub fn parse_named(file: &str, text: &str) -> Result<Model, Vec<ParseDiagnostic>> {
    let (tokens, lex_errors) = tokenize(file, text);
    if !lex_errors.is_empty() {
        return Err(lex_errors);
    }
    let mut parser = Parser { file, tokens, at: 0, errors: Vec::new() };
    let decls = parser.model();
    if !parser.errors.is_empty() {
        return Err(parser.errors);
    }
    let mut lowering = Lowering {
        file,
        builder: ModelBuilder::new(),
        errors: Vec::new(),
        broken: Vec::new(),
        broken_junctions: Vec::new(),
    };
    for decl in &decls {
        lowering.decl(decl);
    }
    if lowering.errors.is_empty() {
        Ok(lowering.builder.build())
    } else {
        lowering.errors.sort_by(|a, b| a.span.cmp(&b.span));
        Err(lowering.errors)
    }
}

/// Parses a standalone guard expression such as `response = accept and tick <= 5`.
pub fn parse_guard(text: &str) -> Result<Guard, ParseDiagnostic> {
    let (tokens, mut lex_errors) = tokenize(ANONYMOUS, text);
    if !lex_errors.is_empty() {
        return Err(lex_errors.remove(0));
    }
    let mut parser = Parser { file: ANONYMOUS, tokens, at: 0, errors: Vec::new() };
    let guard = parser.guard_or()?;
    if *parser.peek() != Tok::Eof {
        return Err(parser.unexpected("end of guard"));
    }
    Ok(guard)
}

#[derive(Debug, Clone, Copy)]
struct Span {
    start: Pos,
    end: Pos,
}

impl Span {
    fn to(self, other: Span) -> Span {
        Span { start: self.start, end: other.end }
    }
}

#[derive(Debug)]
struct Named {
    text: String,
    span: Span,
}

#[derive(Debug)]
struct PathAst {
    endpoint: Endpoint,
    span: Span,
}

#[derive(Debug)]
enum TargetAst {
    Stage(PathAst),
    Junction(Named),
}

#[derive(Debug)]
struct MachineAst {
    name: Named,
    kind: Named,
    stages: Vec<(StageKind, Span)>,
}

#[derive(Debug)]
enum ItemAst {
    Sphere(SphereAst),
    Machine(MachineAst),
}

#[derive(Debug)]
struct SphereAst {
    name: Named,
    items: Vec<ItemAst>,
}

#[derive(Debug)]
enum Decl {
    Thing { name: Named, attributes: Vec<(Named, Domain)> },
    Sphere(SphereAst),
    Flow { source: PathAst, target: PathAst, span: Span },
    Trigger { source: PathAst, target: TargetAst, guard: Option<(Guard, Span)>, span: Span },
    Junction { name: Named, output: PathAst },
}

type PResult<T> = Result<T, ParseDiagnostic>;

struct Parser<'a> {
    file: &'a str,
    tokens: Vec<Token>,
    at: usize,
    errors: Vec<ParseDiagnostic>,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.at].tok
    }

    fn token(&self) -> &Token {
        &self.tokens[self.at]
    }

    fn span_of(tok: &Token) -> Span {
        let end = Pos { line: tok.start.line, column: tok.start.column + tok.len.max(1) };
        Span { start: tok.start, end }
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.at].clone();
        if !matches!(t.tok, Tok::Eof) {
            self.at += 1;
        }
        t
    }

    /// A syntax error at the current token. When the token starts a new
    /// line, the error is placed just after the previous token instead, so an
    /// unfinished line is blamed rather than the one after it.
    fn unexpected(&self, expected: &str) -> ParseDiagnostic {
        let t = self.token();
        let span = match self.at.checked_sub(1).map(|i| &self.tokens[i]) {
            Some(prev) if t.line_start || matches!(t.tok, Tok::Eof) => {
                let end = Pos { line: prev.start.line, column: prev.start.column + prev.len };
                span_at(self.file, end, 1)
            }
            _ => span_at(self.file, t.start, t.len),
        };
        ParseDiagnostic::error(ParseCode::Syntax, format!("expected {expected}, found {}", t.tok.describe()), span)
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> PResult<Span> {
        if *self.peek() == tok {
            Ok(Self::span_of(&self.bump()))
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<Named> {
        match self.peek().clone() {
            Tok::Ident(text) => {
                let span = Self::span_of(&self.bump());
                Ok(Named { text, span })
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn model(&mut self) -> Vec<Decl> {
        let mut decls = Vec::new();
        while *self.peek() != Tok::Eof {
            match self.decl() {
                Ok(d) => decls.push(d),
                Err(e) => {
                    self.errors.push(e);
                    self.recover();
                }
            }
        }
        decls
    }

    /// Skips to the next line that starts with a top-level keyword.
    fn recover(&mut self) {
        self.bump();
        loop {
            let t = self.token();
            let top = matches!(
                t.tok,
                Tok::Kw(Keyword::Thing | Keyword::Sphere | Keyword::Flow | Keyword::Trigger | Keyword::Junction)
            );
            if matches!(t.tok, Tok::Eof) || (top && t.line_start) {
                return;
            }
            self.bump();
        }
    }

    fn decl(&mut self) -> PResult<Decl> {
        match self.peek() {
            Tok::Kw(Keyword::Thing) => self.thing(),
            Tok::Kw(Keyword::Sphere) => Ok(Decl::Sphere(self.sphere()?)),
            Tok::Kw(Keyword::Flow) => self.flow(),
            Tok::Kw(Keyword::Trigger) => self.trigger(),
            Tok::Kw(Keyword::Junction) => self.junction(),
            _ => Err(self.unexpected("a declaration (thing, sphere, flow, trigger or junction)")),
        }
    }

    fn thing(&mut self) -> PResult<Decl> {
        self.bump();
        let name = self.ident("a thing name")?;
        let mut attributes = Vec::new();
        if *self.peek() == Tok::LBrace {
            self.bump();
            while *self.peek() != Tok::RBrace {
                let attr = self.ident("an attribute name or `}`")?;
                self.expect(Tok::Colon, "`:`")?;
                let domain = if *self.peek() == Tok::Kw(Keyword::Int) {
                    self.bump();
                    Domain::Integer
                } else {
                    let mut symbols = vec![self.ident("`int` or a symbol")?.text];
                    while *self.peek() == Tok::Pipe {
                        self.bump();
                        symbols.push(self.ident("a symbol")?.text);
                    }
                    Domain::Symbols(symbols)
                };
                attributes.push((attr, domain));
                if *self.peek() == Tok::Comma {
                    self.bump();
                }
            }
            self.bump();
        }
        Ok(Decl::Thing { name, attributes })
    }

    fn sphere(&mut self) -> PResult<SphereAst> {
        self.bump();
        let name = self.ident("a sphere name")?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut items = Vec::new();
        loop {
            match self.peek() {
                Tok::RBrace => {
                    self.bump();
                    break;
                }
                Tok::Kw(Keyword::Sphere) => items.push(ItemAst::Sphere(self.sphere()?)),
                Tok::Kw(Keyword::Machine) => items.push(ItemAst::Machine(self.machine()?)),
                _ => return Err(self.unexpected("`sphere`, `machine` or `}`")),
            }
        }
        Ok(SphereAst { name, items })
    }

    fn machine(&mut self) -> PResult<MachineAst> {
        self.bump();
        let name = self.ident("a machine name")?;
        self.expect(Tok::Kw(Keyword::Of), "`of`")?;
        let kind = self.ident("a thing name")?;
        self.expect(Tok::LBrace, "`{`")?;
        self.expect(Tok::Kw(Keyword::Stages), "`stages`")?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut stages = Vec::new();
        while *self.peek() != Tok::RBrace {
            let word = self.ident("a stage name or `}`")?;
            let stage = word.text.parse::<StageKind>().map_err(|_| {
                ParseDiagnostic::error(
                    ParseCode::Syntax,
                    format!(
                        "`{}` is not a stage (Create, Arrive, Accept, Receive, Process, Release, Transfer, Storage)",
                        word.text
                    ),
                    self.span(word.span),
                )
            })?;
            stages.push((stage, word.span));
            if *self.peek() == Tok::Comma {
                self.bump();
            }
        }
        self.bump();
        self.expect(Tok::RBrace, "`}`")?;
        Ok(MachineAst { name, kind, stages })
    }

    fn path(&mut self) -> PResult<PathAst> {
        let first = self.ident("a stage path")?;
        let mut segments = vec![first.text];
        let mut span = first.span;
        while *self.peek() == Tok::Dot {
            self.bump();
            let seg = self.ident("a path segment")?;
            span = span.to(seg.span);
            segments.push(seg.text);
        }
        let last = segments.pop().unwrap_or_default();
        let err = |msg: String| ParseDiagnostic::error(ParseCode::Syntax, msg, self.span(span));
        let stage = last
            .parse::<StageKind>()
            .map_err(|_| err(format!("stage path must end in a stage name, found `{last}`")))?;
        let machine = segments.pop().ok_or_else(|| err("stage path needs a machine".to_string()))?;
        Ok(PathAst { endpoint: Endpoint::new(&segments, &machine, stage), span })
    }

    fn flow(&mut self) -> PResult<Decl> {
        let kw = Self::span_of(&self.bump());
        let source = self.path()?;
        self.expect(Tok::Arrow, "`->`")?;
        let target = self.path()?;
        let span = kw.to(target.span);
        Ok(Decl::Flow { source, target, span })
    }

    fn trigger(&mut self) -> PResult<Decl> {
        let kw = Self::span_of(&self.bump());
        let source = self.path()?;
        self.expect(Tok::FatArrow, "`=>`")?;
        let target = if *self.peek() == Tok::Kw(Keyword::Junction) {
            self.bump();
            TargetAst::Junction(self.ident("a junction name")?)
        } else {
            TargetAst::Stage(self.path()?)
        };
        let mut span = match &target {
            TargetAst::Stage(p) => kw.to(p.span),
            TargetAst::Junction(n) => kw.to(n.span),
        };
        let guard = if *self.peek() == Tok::Kw(Keyword::When) {
            self.bump();
            let start = self.token().start;
            let g = self.guard_or()?;
            let end = self.tokens[self.at - 1].clone();
            let gspan = Span { start, end: Self::span_of(&end).end };
            span = span.to(gspan);
            Some((g, gspan))
        } else {
            None
        };
        Ok(Decl::Trigger { source, target, guard, span })
    }

    fn junction(&mut self) -> PResult<Decl> {
        self.bump();
        let name = self.ident("a junction name")?;
        self.expect(Tok::FatArrow, "`=>`")?;
        let output = self.path()?;
        Ok(Decl::Junction { name, output })
    }

    fn guard_or(&mut self) -> PResult<Guard> {
        let mut g = self.guard_and()?;
        while *self.peek() == Tok::Kw(Keyword::Or) {
            self.bump();
            g = g.or(self.guard_and()?);
        }
        Ok(g)
    }

    fn guard_and(&mut self) -> PResult<Guard> {
        let mut g = self.guard_unary()?;
        while *self.peek() == Tok::Kw(Keyword::And) {
            self.bump();
            g = g.and(self.guard_unary()?);
        }
        Ok(g)
    }

    fn guard_unary(&mut self) -> PResult<Guard> {
        match self.peek().clone() {
            Tok::Kw(Keyword::Not) => {
                self.bump();
                Ok(self.guard_unary()?.negate())
            }
            Tok::LParen => {
                self.bump();
                let g = self.guard_or()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(g)
            }
            Tok::Kw(Keyword::Tick) => {
                self.bump();
                let op = match self.peek() {
                    Tok::Lt => ClockOp::Lt,
                    Tok::Le => ClockOp::Le,
                    Tok::Gt => ClockOp::Gt,
                    Tok::Ge => ClockOp::Ge,
                    _ => return Err(self.unexpected("a clock comparison (<, <=, >, >=)")),
                };
                self.bump();
                let bound = match self.peek().clone() {
                    Tok::Int(n) => ClockBound::Literal(n),
                    Tok::Ident(name) => ClockBound::Named(name),
                    _ => return Err(self.unexpected("an integer or a deadline name")),
                };
                self.bump();
                Ok(Guard::clock(op, bound))
            }
            Tok::Ident(attribute) => {
                self.bump();
                self.expect(Tok::Eq, "`=`")?;
                let value = match self.peek().clone() {
                    Tok::Int(n) => Value::Int(n),
                    Tok::Ident(s) => Value::Symbol(s),
                    _ => return Err(self.unexpected("a symbol or integer")),
                };
                self.bump();
                Ok(Guard::Equals { attribute, value })
            }
            _ => Err(self.unexpected("a guard condition")),
        }
    }

    fn span(&self, span: Span) -> SourceSpan {
        to_source_span(self.file, span)
    }
}

fn to_source_span(file: &str, span: Span) -> SourceSpan {
    let length = if span.end.line == span.start.line { span.end.column.saturating_sub(span.start.column) } else { 1 };
    span_at(file, span.start, length)
}

struct Lowering<'a> {
    file: &'a str,
    builder: ModelBuilder,
    errors: Vec<ParseDiagnostic>,
    /// Paths of spheres and machines whose declaration failed; references
    /// to them are not reported again.
    broken: Vec<Vec<String>>,
    broken_junctions: Vec<String>,
}

impl Lowering<'_> {
    fn is_follow_on(&self, err: &BuildError) -> bool {
        match err {
            BuildError::DanglingEndpoint(e) => {
                let mut path = e.sphere_path.clone();
                path.push(e.machine.clone());
                self.broken.iter().any(|b| path.starts_with(b))
            }
            BuildError::UnknownJunction(name) => self.broken_junctions.contains(name),
            _ => false,
        }
    }

    fn report(&mut self, err: BuildError, span: Span) {
        if self.is_follow_on(&err) {
            return;
        }
        let code = match err.class() {
            BuildErrorClass::Unresolved => ParseCode::Unresolved,
            BuildErrorClass::Illegal => ParseCode::Illegal,
            BuildErrorClass::Duplicate => ParseCode::Duplicate,
        };
        self.errors.push(ParseDiagnostic::error(code, err.to_string(), to_source_span(self.file, span)));
    }

    /// Span of the endpoint named in a dangling-endpoint error.
    fn endpoint_span(err: &BuildError, candidates: &[&PathAst], fallback: Span) -> Span {
        match err {
            BuildError::DanglingEndpoint(e) | BuildError::IllegalTriggerTarget(e) => {
                candidates.iter().find(|p| &p.endpoint == e).map_or(fallback, |p| p.span)
            }
            _ => fallback,
        }
    }

    fn decl(&mut self, decl: &Decl) {
        match decl {
            Decl::Thing { name, attributes } => {
                let attrs =
                    attributes.iter().map(|(n, d)| Attribute { name: n.text.clone(), domain: d.clone() }).collect();
                if let Err(e) = self.builder.add_thing(&name.text, attrs) {
                    let span = match &e {
                        BuildError::DuplicateAttribute { attribute, .. } | BuildError::BadDomain { attribute, .. } => {
                            attributes
                                .iter()
                                .rev()
                                .find(|(n, _)| &n.text == attribute)
                                .map_or(name.span, |(n, _)| n.span)
                        }
                        _ => name.span,
                    };
                    self.report(e, span);
                }
            }
            Decl::Sphere(s) => self.sphere(&[], s),
            Decl::Flow { source, target, span } => {
                if let Err(e) = self.builder.add_flow_arc(&source.endpoint, &target.endpoint) {
                    let at = Self::endpoint_span(&e, &[source, target], *span);
                    self.report(e, at);
                }
            }
            Decl::Trigger { source, target, guard, span } => {
                let end = match target {
                    TargetAst::Stage(p) => TriggerEnd::Stage(p.endpoint.clone()),
                    TargetAst::Junction(n) => TriggerEnd::Junction(n.text.clone()),
                };
                let g = guard.as_ref().map(|(g, _)| g.clone());
                if let Err(e) = self.builder.add_trigger_arc(&source.endpoint, &end, g) {
                    let at = match (&e, target, guard) {
                        (BuildError::Guard { .. }, _, Some((_, gspan))) => *gspan,
                        (BuildError::UnknownJunction(_), TargetAst::Junction(n), _) => n.span,
                        (_, TargetAst::Stage(p), _) => Self::endpoint_span(&e, &[source, p], *span),
                        _ => Self::endpoint_span(&e, &[source], *span),
                    };
                    self.report(e, at);
                }
            }
            Decl::Junction { name, output } => {
                if let Err(e) = self.builder.add_junction(&name.text, &output.endpoint) {
                    if !matches!(e, BuildError::DuplicateJunction(_)) {
                        self.broken_junctions.push(name.text.clone());
                    }
                    let at = match e {
                        BuildError::DuplicateJunction(_) | BuildError::InvalidIdentifier(_) => name.span,
                        _ => output.span,
                    };
                    self.report(e, at);
                }
            }
        }
    }

    fn sphere(&mut self, parent: &[String], sphere: &SphereAst) {
        let mut path = parent.to_vec();
        path.push(sphere.name.text.clone());
        if let Err(e) = self.builder.add_sphere(parent, &sphere.name.text) {
            if !matches!(e, BuildError::DuplicateName { .. }) {
                self.broken.push(path);
            }
            self.report(e, sphere.name.span);
            return;
        }
        for item in &sphere.items {
            match item {
                ItemAst::Sphere(child) => self.sphere(&path, child),
                ItemAst::Machine(m) => {
                    let stages: Vec<StageKind> = m.stages.iter().map(|(s, _)| *s).collect();
                    if let Err(e) = self.builder.add_machine(&path, &m.name.text, &m.kind.text, &stages) {
                        if !matches!(e, BuildError::DuplicateName { .. }) {
                            let mut machine = path.clone();
                            machine.push(m.name.text.clone());
                            self.broken.push(machine);
                        }
                        let span = match &e {
                            BuildError::UnknownThing(_) => m.kind.span,
                            BuildError::DuplicateStage { stage, .. } => {
                                m.stages.iter().rev().find(|(s, _)| s == stage).map_or(m.name.span, |(_, sp)| *sp)
                            }
                            BuildError::ReceiveMerge(_) => m
                                .stages
                                .iter()
                                .find(|(s, _)| *s == StageKind::Receive)
                                .map_or(m.name.span, |(_, sp)| *sp),
                            _ => m.name.span,
                        };
                        self.report(e, span);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn errors(src: &str) -> Vec<ParseDiagnostic> {
        parse(src).expect_err("expected diagnostics")
    }

    #[test]
    fn empty_file_is_an_empty_model() {
        let m = parse("").unwrap();
        assert!(m.is_empty());
        assert_eq!(m.machines().len(), 0);
        assert!(parse("  # only a comment\n").unwrap().is_empty());
    }

    #[test]
    fn exclusivity_forbidden_pair_is_p004_at_arc() {
        let src =
            "thing t\nsphere S {\n  machine A of t { stages { Create Process } }\n}\nflow S.A.Process -> S.A.Create\n";
        let e = errors(src);
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].code, ParseCode::Illegal);
        assert_eq!((e[0].span.line, e[0].span.column), (5, 1));
        assert_eq!(e[0].span.length as usize, "flow S.A.Process -> S.A.Create".len());
    }

    #[test]
    fn unresolved_and_duplicate_codes() {
        let e = errors("thing t\nthing t\n");
        assert_eq!(e[0].code, ParseCode::Duplicate);
        assert_eq!(e[0].span.line, 2);

        let e = errors("sphere S {\n  machine A of missing { stages { Create } }\n}\n");
        assert_eq!(e[0].code, ParseCode::Unresolved);
        assert_eq!((e[0].span.line, e[0].span.column), (2, 16));

        let e = errors(
            "thing t\nsphere S {\n  machine A of t { stages { Create Process } }\n}\nflow S.B.Create -> S.A.Process\n",
        );
        assert_eq!(e[0].code, ParseCode::Unresolved);
        assert_eq!((e[0].span.line, e[0].span.column, e[0].span.length), (5, 6, 10));

        let e = errors("thing t\nsphere S {\n  machine A of t { stages { Create Process Create } }\n}\n");
        assert_eq!(e[0].code, ParseCode::Duplicate);
    }

    #[test]
    fn receive_merge_is_rejected() {
        let e = errors("thing t\nsphere S {\n  machine A of t { stages { Arrive Receive } }\n}\n");
        assert_eq!(e[0].code, ParseCode::Illegal);
        assert_eq!(e[0].span.column, 36);
    }

    #[test]
    fn syntax_errors_recover_at_next_declaration() {
        let e = errors("thing\nthing b\nflow x -> \nthing c\n");
        assert_eq!(e.len(), 2, "{e:?}");
        assert!(e.iter().all(|d| d.code == ParseCode::Syntax));
        // The unfinished first line is blamed, not the declaration after it.
        assert_eq!((e[0].span.line, e[0].span.column), (1, 6));
        assert_eq!(e[1].span.line, 3);
    }

    #[test]
    fn guards_parse_with_precedence() {
        let src = "thing r { response: accept | decline  due: int }\nsphere S {\n  machine A of r { stages { Create Process } }\n  machine B of r { stages { Create } }\n}\n\
                   trigger S.A.Process => S.B.Create when not response = decline and (tick <= due or tick < 4)\n";
        let m = parse(src).unwrap();
        let (_, t) = m.trigger_arcs().next().unwrap();
        assert_eq!(t.guard.as_ref().unwrap().to_string(), "not response = decline and (tick <= due or tick < 4)");
    }

    #[test]
    fn guard_with_unknown_attribute_points_at_guard() {
        let src = "thing r\nsphere S {\n  machine A of r { stages { Create Process } }\n}\ntrigger S.A.Process => S.A.Create when color = red\n";
        let e = errors(src);
        assert_eq!(e[0].code, ParseCode::Unresolved);
        assert_eq!(e[0].span.column, 40);
    }

    #[test]
    fn standalone_guards() {
        assert_eq!(parse_guard("x = a or not y = 2").unwrap().to_string(), "x = a or not y = 2");
        assert_eq!(parse_guard("x = a )").unwrap_err().code, ParseCode::Syntax);
        assert!(parse_guard("").is_err());
    }

    #[test]
    fn invalid_utf8_is_lexical() {
        let e = parse_bytes("f.fm", b"thing a\nthing \xff\n").unwrap_err();
        assert_eq!(e[0].code, ParseCode::Lexical);
        assert_eq!((e[0].span.line, e[0].span.column), (2, 7));
    }
}
