//! A small recognizer for the DOT digraph grammar, used to validate
//! exported text independently of the writer:
//!
//! ```text
//! graph     : 'digraph' [ id ] '{' stmt* '}'
//! stmt      : (node_stmt | edge_stmt | attr_stmt) [ ';' ]
//! node_stmt : id [ attr_list ]
//! edge_stmt : id ('->' id)+ [ attr_list ]
//! attr_stmt : ('graph' | 'node' | 'edge') attr_list
//! attr_list : '[' [ id '=' id ((';' | ',') id '=' id)* ] ']'
//! id        : identifier | number | double-quoted string
//! ```

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Id(String),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Equals,
    Arrow,
}

fn tokenize(text: &str) -> Result<Vec<Token>, String> {
    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                chars.next();
            }
            '{' => {
                chars.next();
                tokens.push(Token::LBrace);
            }
            '}' => {
                chars.next();
                tokens.push(Token::RBrace);
            }
            '[' => {
                chars.next();
                tokens.push(Token::LBracket);
            }
            ']' => {
                chars.next();
                tokens.push(Token::RBracket);
            }
            ';' => {
                chars.next();
                tokens.push(Token::Semi);
            }
            ',' => {
                chars.next();
                tokens.push(Token::Comma);
            }
            '=' => {
                chars.next();
                tokens.push(Token::Equals);
            }
            '-' => {
                chars.next();
                match chars.next() {
                    Some('>') => tokens.push(Token::Arrow),
                    other => return Err(format!("expected '->', found '-{other:?}'")),
                }
            }
            '"' => {
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        None => return Err("unterminated string".into()),
                        Some('\\') => match chars.next() {
                            Some(esc) => {
                                s.push('\\');
                                s.push(esc);
                            }
                            None => return Err("unterminated escape".into()),
                        },
                        Some('"') => break,
                        Some(ch) => s.push(ch),
                    }
                }
                tokens.push(Token::Id(s));
            }
            c if c.is_alphanumeric() || c == '_' || c == '.' => {
                let mut s = String::new();
                while let Some(&ch) = chars.peek() {
                    if ch.is_alphanumeric() || ch == '_' || ch == '.' {
                        s.push(ch);
                        chars.next();
                    } else {
                        break;
                    }
                }
                tokens.push(Token::Id(s));
            }
            other => return Err(format!("unexpected character '{other}'")),
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: &Token) -> Result<(), String> {
        match self.next() {
            Some(ref t) if t == want => Ok(()),
            other => Err(format!("expected {want:?}, found {other:?}")),
        }
    }

    fn expect_id(&mut self) -> Result<String, String> {
        match self.next() {
            Some(Token::Id(s)) => Ok(s),
            other => Err(format!("expected identifier, found {other:?}")),
        }
    }

    fn attr_list(&mut self) -> Result<(), String> {
        self.expect(&Token::LBracket)?;
        if self.peek() == Some(&Token::RBracket) {
            self.next();
            return Ok(());
        }
        loop {
            self.expect_id()?;
            self.expect(&Token::Equals)?;
            self.expect_id()?;
            match self.peek() {
                Some(Token::Comma) | Some(Token::Semi) => {
                    self.next();
                }
                _ => {}
            }
            if self.peek() == Some(&Token::RBracket) {
                self.next();
                return Ok(());
            }
        }
    }

    fn stmt(&mut self) -> Result<(), String> {
        let first = self.expect_id()?;
        // attr_stmt for the reserved targets: graph/node/edge [..]
        if matches!(first.as_str(), "graph" | "node" | "edge")
            && self.peek() == Some(&Token::LBracket)
        {
            self.attr_list()?;
        } else {
            let mut is_edge = false;
            while self.peek() == Some(&Token::Arrow) {
                self.next();
                self.expect_id()?;
                is_edge = true;
            }
            let _ = is_edge;
            if self.peek() == Some(&Token::LBracket) {
                self.attr_list()?;
            }
        }
        if self.peek() == Some(&Token::Semi) {
            self.next();
        }
        Ok(())
    }
}

/// Check `text` against the digraph subset of the DOT grammar.
pub fn check_digraph(text: &str) -> Result<(), String> {
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens, pos: 0 };
    match p.next() {
        Some(Token::Id(kw)) if kw == "digraph" => {}
        other => return Err(format!("expected 'digraph', found {other:?}")),
    }
    if matches!(p.peek(), Some(Token::Id(_))) {
        p.next();
    }
    p.expect(&Token::LBrace)?;
    while p.peek() != Some(&Token::RBrace) {
        if p.peek().is_none() {
            return Err("unterminated graph body".into());
        }
        p.stmt()?;
    }
    p.next();
    match p.peek() {
        None => Ok(()),
        Some(t) => Err(format!("trailing tokens after graph body: {t:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_a_plain_digraph() {
        check_digraph("digraph g { a; b; a -> b [label=\"0.9\"]; }").unwrap();
    }

    #[test]
    fn rejects_undirected_and_unbalanced() {
        assert!(check_digraph("graph g { a -- b; }").is_err());
        assert!(check_digraph("digraph g { a -> ; }").is_err());
        assert!(check_digraph("digraph g { a ").is_err());
    }
}
