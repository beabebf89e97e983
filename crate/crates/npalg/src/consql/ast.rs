use crate::relation::CmpOp;

/// A source file: specifications plus post-solve queries.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Script {
    pub specs: Vec<Specification>,
    pub queries: Vec<Query>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Specification {
    pub name: String,
    pub guesses: Vec<GuessTable>,
    pub objective: Option<Objective>,
    pub checks: Vec<Expr>,
    pub returns: Vec<ReturnTable>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GuessTable {
    pub name: String,
    pub aliases: Option<Vec<String>>,
    pub body: Select,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Minimize,
    Maximize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Objective {
    pub direction: Direction,
    pub query: Query,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReturnTable {
    pub name: String,
    pub query: Query,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Query {
    Select(Box<Select>),
    Union {
        left: Box<Query>,
        right: Box<Query>,
        all: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Select {
    pub items: Vec<SelectItem>,
    pub from: Vec<FromItem>,
    pub filter: Option<Expr>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SelectItem {
    Wildcard,
    Expr { expr: Expr, alias: Option<String> },
}

/// `name` or `problem.name`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableName {
    pub schema: Option<String>,
    pub name: String,
}

impl TableName {
    pub fn plain(name: &str) -> Self {
        TableName {
            schema: None,
            name: name.to_string(),
        }
    }

    /// Catalog key: upper-cased, dot-joined.
    pub fn key(&self) -> String {
        match &self.schema {
            Some(s) => format!("{}.{}", s, self.name).to_uppercase(),
            None => self.name.to_uppercase(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FromItem {
    Table {
        name: TableName,
        alias: Option<String>,
    },
    Derived {
        query: Query,
        alias: String,
    },
    /// Only allowed in the FROM clause of a guessed table.
    Shaped {
        shape: Shape,
        alias: Option<String>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Totality {
    Total,
    Partial,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Range {
    Table(String),
    Interval(Expr, Expr),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Shape {
    Subset {
        of: Vec<FromItem>,
    },
    Function {
        totality: Totality,
        range: Range,
        fields: Vec<String>,
        of: Vec<FromItem>,
    },
    Partition {
        blocks: u32,
        field: String,
        of: Vec<FromItem>,
    },
    Permutation {
        field: String,
        of: Vec<FromItem>,
    },
}

impl Shape {
    pub fn of(&self) -> &[FromItem] {
        match self {
            Shape::Subset { of }
            | Shape::Function { of, .. }
            | Shape::Partition { of, .. }
            | Shape::Permutation { of, .. } => of,
        }
    }

    pub fn fields(&self) -> Vec<String> {
        match self {
            Shape::Subset { .. } => vec![],
            Shape::Function { fields, .. } => fields.clone(),
            Shape::Partition { field, .. } | Shape::Permutation { field, .. } => {
                vec![field.clone()]
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColumnRef {
    pub qualifier: Option<String>,
    pub name: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Column(ColumnRef),
    Int(i64),
    Str(String),
    Arith(ArithOp, Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    Exists(Box<Query>),
    In {
        expr: Box<Expr>,
        query: Box<Query>,
        negated: bool,
    },
    Subquery(Box<Query>),
    /// `COUNT(*)`
    Count,
    Sum(Box<Expr>),
}

impl Expr {
    pub fn column(qualifier: Option<&str>, name: &str) -> Self {
        Expr::Column(ColumnRef {
            qualifier: qualifier.map(str::to_string),
            name: name.to_string(),
        })
    }

    pub fn cmp(op: CmpOp, a: Expr, b: Expr) -> Self {
        Expr::Cmp(op, Box::new(a), Box::new(b))
    }

    pub fn and(a: Expr, b: Expr) -> Self {
        Expr::And(Box::new(a), Box::new(b))
    }

    pub fn not_exists(q: Query) -> Self {
        Expr::Not(Box::new(Expr::Exists(Box::new(q))))
    }

    pub(crate) fn is_aggregate(&self) -> bool {
        matches!(self, Expr::Count | Expr::Sum(_))
    }
}
