//! Recursive-descent parser for the expression language.
//!
//! Tokens remember their byte offset so every error can point at the exact
//! spot in the source text.

use super::{fold_constant, Ast, BinOp, Chart, ExprError, OpFoldError, UnaryOp};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eof,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while matches!(self.src.get(self.pos), Some(b' ' | b'\t' | b'\r' | b'\n')) {
            self.pos += 1;
        }
    }

    fn next_token(&mut self) -> Result<(Tok, usize), ExprError> {
        self.skip_ws();
        let start = self.pos;
        let Some(&c) = self.src.get(self.pos) else {
            return Ok((Tok::Eof, start));
        };
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' => return self.lex_number(start),
            c if c.is_ascii_alphabetic() || c == b'_' => return Ok(self.lex_ident(start)),
            other => {
                return Err(ExprError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{}`", other as char),
                })
            }
        };
        self.pos += 1;
        Ok((tok, start))
    }

    fn lex_number(&mut self, start: usize) -> Result<(Tok, usize), ExprError> {
        let mut end = self.pos;
        while matches!(self.src.get(end), Some(b'0'..=b'9')) {
            end += 1;
        }
        if matches!(self.src.get(end), Some(b'.')) {
            end += 1;
            if !matches!(self.src.get(end), Some(b'0'..=b'9')) {
                return Err(ExprError::Syntax {
                    offset: end,
                    message: "expected digits after decimal point".to_string(),
                });
            }
            while matches!(self.src.get(end), Some(b'0'..=b'9')) {
                end += 1;
            }
        }
        if matches!(self.src.get(end), Some(b'e' | b'E')) {
            let mut probe = end + 1;
            if matches!(self.src.get(probe), Some(b'+' | b'-')) {
                probe += 1;
            }
            if matches!(self.src.get(probe), Some(b'0'..=b'9')) {
                end = probe;
                while matches!(self.src.get(end), Some(b'0'..=b'9')) {
                    end += 1;
                }
            }
        }
        let text = std::str::from_utf8(&self.src[start..end]).expect("ascii digits");
        let value: f64 = text.parse().map_err(|_| ExprError::Syntax {
            offset: start,
            message: format!("invalid number literal `{text}`"),
        })?;
        self.pos = end;
        Ok((Tok::Num(value), start))
    }

    fn lex_ident(&mut self, start: usize) -> (Tok, usize) {
        let mut end = self.pos;
        while matches!(self.src.get(end), Some(c) if c.is_ascii_alphanumeric() || *c == b'_') {
            end += 1;
        }
        let text = std::str::from_utf8(&self.src[start..end])
            .expect("ascii identifier")
            .to_string();
        self.pos = end;
        (Tok::Ident(text), start)
    }
}

struct Parser<'a> {
    tokens: Vec<(Tok, usize)>,
    cursor: usize,
    chart: &'a Chart,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.cursor].0
    }

    fn offset(&self) -> usize {
        self.tokens[self.cursor].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.tokens[self.cursor].clone();
        if self.cursor + 1 < self.tokens.len() {
            self.cursor += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<Ast, ExprError> {
        let mut node = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.term()?;
            node = Ast::Binary(op, Box::new(node), Box::new(rhs));
        }
        Ok(node)
    }

    fn term(&mut self) -> Result<Ast, ExprError> {
        let mut node = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.factor()?;
            node = Ast::Binary(op, Box::new(node), Box::new(rhs));
        }
        Ok(node)
    }

    fn factor(&mut self) -> Result<Ast, ExprError> {
        if matches!(self.peek(), Tok::Minus) {
            self.bump();
            let inner = self.factor()?;
            return Ok(Ast::Unary(UnaryOp::Neg, Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Ast, ExprError> {
        let base = self.atom()?;
        if matches!(self.peek(), Tok::Caret) {
            let caret_offset = self.offset();
            self.bump();
            let exponent = self.factor()?;
            let q = match fold_constant(&exponent) {
                Ok(q) => q,
                Err(OpFoldError::Variable(name)) => {
                    return Err(ExprError::Syntax {
                        offset: caret_offset,
                        message: format!(
                            "exponent must be a constant expression, found variable `{name}`"
                        ),
                    })
                }
                Err(OpFoldError::Eval(subexpr, message)) => {
                    return Err(ExprError::Domain { subexpr, message })
                }
            };
            if !q.is_finite() {
                return Err(ExprError::Syntax {
                    offset: caret_offset,
                    message: "exponent must fold to a finite constant".to_string(),
                });
            }
            return Ok(Ast::Pow(Box::new(base), q));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Ast, ExprError> {
        let (tok, offset) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Ast::Const(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if matches!(self.peek(), Tok::LParen) {
                    let func = match name.as_str() {
                        "sin" => UnaryOp::Sin,
                        "cos" => UnaryOp::Cos,
                        "exp" => UnaryOp::Exp,
                        "log" => UnaryOp::Log,
                        "sqrt" => UnaryOp::Sqrt,
                        "cbrt" => UnaryOp::Cbrt,
                        _ => {
                            return Err(ExprError::Syntax {
                                offset,
                                message: format!("unknown function `{name}`"),
                            })
                        }
                    };
                    self.bump(); // (
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    Ok(Ast::Unary(func, Box::new(arg)))
                } else {
                    match self.chart.index_of(&name) {
                        Some(index) => Ok(Ast::Var { index, name }),
                        None => Err(ExprError::UnknownVariable { name, offset }),
                    }
                }
            }
            Tok::Eof => Err(ExprError::Syntax {
                offset,
                message: "expected expression, found end of input".to_string(),
            }),
            other => Err(ExprError::Syntax {
                offset,
                message: format!("expected expression, found `{other:?}`"),
            }),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ExprError> {
        let (tok, offset) = self.bump();
        if tok == Tok::RParen {
            Ok(())
        } else {
            Err(ExprError::Syntax {
                offset,
                message: "expected `)`".to_string(),
            })
        }
    }
}

pub(crate) fn parse(source: &str, chart: &Chart) -> Result<Ast, ExprError> {
    let mut lexer = Lexer::new(source);
    let mut tokens = Vec::new();
    loop {
        let (tok, offset) = lexer.next_token()?;
        let done = tok == Tok::Eof;
        tokens.push((tok, offset));
        if done {
            break;
        }
    }
    let mut parser = Parser {
        tokens,
        cursor: 0,
        chart,
    };
    let ast = parser.expr()?;
    let (tok, offset) = parser.bump();
    if tok != Tok::Eof {
        return Err(ExprError::Syntax {
            offset,
            message: format!("unexpected trailing input `{tok:?}`"),
        });
    }
    Ok(ast)
}
