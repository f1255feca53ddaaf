//! S-expression reader with source positions. Symbols are lowercased; `;`
//! starts a comment running to the end of the line.

use super::PddlError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Sexpr {
    Symbol { text: String, line: usize, column: usize },
    List { items: Vec<Sexpr>, line: usize, column: usize },
}

impl Sexpr {
    pub fn pos(&self) -> (usize, usize) {
        match self {
            Sexpr::Symbol { line, column, .. } | Sexpr::List { line, column, .. } => {
                (*line, *column)
            }
        }
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match self {
            Sexpr::Symbol { text, .. } => Some(text),
            Sexpr::List { .. } => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexpr]> {
        match self {
            Sexpr::List { items, .. } => Some(items),
            Sexpr::Symbol { .. } => None,
        }
    }

    /// Head symbol of a list, if any.
    pub fn head(&self) -> Option<&str> {
        self.as_list()?.first()?.as_symbol()
    }

    pub fn error(&self, message: impl Into<String>) -> PddlError {
        let (line, column) = self.pos();
        PddlError::Parse {
            line,
            column,
            message: message.into(),
        }
    }

    pub fn unsupported(&self, feature: impl Into<String>) -> PddlError {
        let (line, column) = self.pos();
        PddlError::Unsupported {
            feature: feature.into(),
            line,
            column,
        }
    }
}

/// Reads exactly one top-level expression.
pub(crate) fn read(text: &str) -> Result<Sexpr, PddlError> {
    let mut reader = Reader {
        chars: text.chars().peekable(),
        line: 1,
        column: 1,
    };
    reader.skip_trivia();
    let expr = match reader.next_expr()? {
        Some(e) => e,
        None => {
            return Err(PddlError::Parse {
                line: reader.line,
                column: reader.column,
                message: "empty input".into(),
            })
        }
    };
    reader.skip_trivia();
    if reader.chars.peek().is_some() {
        return Err(PddlError::Parse {
            line: reader.line,
            column: reader.column,
            message: "unexpected text after the closing parenthesis".into(),
        });
    }
    Ok(expr)
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl Reader<'_> {
    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
                while let Some(&c) = self.chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn next_expr(&mut self) -> Result<Option<Sexpr>, PddlError> {
        let (line, column) = (self.line, self.column);
        match self.chars.peek() {
            None => Ok(None),
            Some(')') => Err(PddlError::Parse {
                line,
                column,
                message: "unbalanced `)`".into(),
            }),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.chars.peek() {
                        None => {
                            return Err(PddlError::Parse {
                                line,
                                column,
                                message: "unclosed `(`".into(),
                            })
                        }
                        Some(')') => {
                            self.bump();
                            return Ok(Some(Sexpr::List { items, line, column }));
                        }
                        Some(_) => {
                            let item = self.next_expr()?.expect("input is not exhausted");
                            items.push(item);
                        }
                    }
                }
            }
            Some(_) => {
                let mut text = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    text.extend(c.to_lowercase());
                    self.bump();
                }
                Ok(Some(Sexpr::Symbol { text, line, column }))
            }
        }
    }
}
