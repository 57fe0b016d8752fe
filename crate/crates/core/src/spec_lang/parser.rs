use super::{ConjunctiveClause, Interval, PredicateRegistry, SpecError, SpecNode};

/// Parses specification text against a predicate registry.
///
/// ```text
/// spec   := term ('&' term)*
/// term   := 'G' interval '(' clause ')'
///         | 'F' interval '(' clause ')'
///         | '(' clause ')' 'U' interval '(' clause ')'
/// clause := atom ('&' atom)*
/// atom   := ident | '!' ident | 'true'
/// interval := '[' number ',' number ']'
/// ```
///
/// Whitespace is insignificant. Top-level conjunction associates to the left.
pub fn parse_spec(text: &str, registry: &PredicateRegistry) -> Result<SpecNode, SpecError> {
    let mut p = Parser {
        src: text,
        pos: 0,
        registry,
    };
    let spec = p.spec()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(spec)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    registry: &'a PredicateRegistry,
}

impl Parser<'_> {
    fn error(&self, msg: impl Into<String>) -> SpecError {
        SpecError::Syntax {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), SpecError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{c}`")))
        }
    }

    fn spec(&mut self) -> Result<SpecNode, SpecError> {
        let mut node = self.term()?;
        while self.eat('&') {
            let rhs = self.term()?;
            node = SpecNode::and(node, rhs);
        }
        Ok(node)
    }

    fn term(&mut self) -> Result<SpecNode, SpecError> {
        match self.peek() {
            Some('G') => {
                self.pos += 1;
                let iv = self.interval()?;
                let c = self.parenthesized_clause()?;
                Ok(SpecNode::Always(iv, c))
            }
            Some('F') => {
                self.pos += 1;
                let iv = self.interval()?;
                let c = self.parenthesized_clause()?;
                Ok(SpecNode::Eventually(iv, c))
            }
            Some('(') => {
                let lhs = self.parenthesized_clause()?;
                self.expect('U')?;
                let iv = self.interval()?;
                let rhs = self.parenthesized_clause()?;
                Ok(SpecNode::Until(iv, lhs, rhs))
            }
            Some(_) => Err(self.error("expected `G[`, `F[` or `(`")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn interval(&mut self) -> Result<Interval, SpecError> {
        self.expect('[')?;
        let a = self.number()?;
        self.expect(',')?;
        let b = self.number()?;
        self.expect(']')?;
        Interval::new(a, b)
    }

    fn number(&mut self) -> Result<f64, SpecError> {
        self.skip_ws();
        let start = self.pos;
        let len = self
            .rest()
            .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-')))
            .unwrap_or(self.rest().len());
        let lexeme = &self.src[start..start + len];
        let value = lexeme
            .parse::<f64>()
            .map_err(|_| self.error(format!("invalid number `{lexeme}`")))?;
        self.pos += len;
        Ok(value)
    }

    fn parenthesized_clause(&mut self) -> Result<ConjunctiveClause, SpecError> {
        self.expect('(')?;
        let c = self.clause()?;
        self.expect(')')?;
        Ok(c)
    }

    fn clause(&mut self) -> Result<ConjunctiveClause, SpecError> {
        let mut preds = Vec::new();
        loop {
            let negated = self.eat('!');
            self.skip_ws();
            let start = self.pos;
            let ident = self.ident()?.to_string();
            if ident == "true" {
                if negated {
                    return Err(SpecError::Syntax {
                        pos: start,
                        msg: "`!true` is outside the fragment".into(),
                    });
                }
            } else {
                let pred =
                    self.registry
                        .get(&ident)
                        .ok_or_else(|| SpecError::UnknownPredicate {
                            name: ident.clone(),
                            pos: start,
                        })?;
                preds.push(if negated { pred.negate() } else { pred.clone() });
            }
            if !self.eat('&') {
                break;
            }
        }
        Ok(ConjunctiveClause::new(preds))
    }

    fn ident(&mut self) -> Result<&str, SpecError> {
        let rest = self.rest();
        let mut chars = rest.char_indices();
        match chars.next() {
            Some((_, c)) if c.is_ascii_alphabetic() || c == '_' => {}
            _ => return Err(self.error("expected predicate name")),
        }
        let len = chars
            .find(|&(_, c)| !(c.is_ascii_alphanumeric() || c == '_'))
            .map(|(i, _)| i)
            .unwrap_or(rest.len());
        let start = self.pos;
        self.pos += len;
        Ok(&self.src[start..start + len])
    }
}
