use std::fmt;

use super::PolyError;

/// Role a variable plays in an obstacle or trajectory polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarClass {
    State,
    Uncertain,
    Time,
}

impl fmt::Display for VarClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarClass::State => f.write_str("state"),
            VarClass::Uncertain => f.write_str("uncertain"),
            VarClass::Time => f.write_str("time"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Variable {
    pub name: String,
    pub class: VarClass,
}

/// Ordered set of named variables. Every [`MultiPoly`](super::MultiPoly)
/// carries exponent vectors with exactly `len()` entries, in this order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VarSpace {
    vars: Vec<Variable>,
    time: Option<usize>,
}

impl VarSpace {
    pub fn new<I, S>(vars: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (S, VarClass)>,
        S: Into<String>,
    {
        let mut out: Vec<Variable> = Vec::new();
        let mut time: Option<usize> = None;
        for (name, class) in vars {
            let name = name.into();
            if out.iter().any(|v| v.name == name) {
                return Err(PolyError::DuplicateVariable(name));
            }
            if class == VarClass::Time {
                if let Some(prev) = time {
                    return Err(PolyError::MultipleTimeVariables(out[prev].name.clone(), name));
                }
                time = Some(out.len());
            }
            out.push(Variable { name, class });
        }
        Ok(Self { vars: out, time })
    }

    /// Convenience constructor: states, then uncertain parameters, then an
    /// optional time variable.
    pub fn with_roles(states: &[&str], uncertain: &[&str], time: Option<&str>) -> Result<Self, PolyError> {
        let iter = states
            .iter()
            .map(|s| (s.to_string(), VarClass::State))
            .chain(uncertain.iter().map(|s| (s.to_string(), VarClass::Uncertain)))
            .chain(time.map(|s| (s.to_string(), VarClass::Time)));
        Self::new(iter)
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn require(&self, name: &str) -> Result<usize, PolyError> {
        self.index_of(name).ok_or_else(|| PolyError::UnknownVariable(name.to_string()))
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.vars[idx].name
    }

    pub fn class(&self, idx: usize) -> VarClass {
        self.vars[idx].class
    }

    pub fn time_index(&self) -> Option<usize> {
        self.time
    }

    pub fn indices_of(&self, class: VarClass) -> Vec<usize> {
        (0..self.vars.len()).filter(|&i| self.vars[i].class == class).collect()
    }

    pub fn state_indices(&self) -> Vec<usize> {
        self.indices_of(VarClass::State)
    }

    pub fn uncertain_indices(&self) -> Vec<usize> {
        self.indices_of(VarClass::Uncertain)
    }

    pub fn state_dim(&self) -> usize {
        self.vars.iter().filter(|v| v.class == VarClass::State).count()
    }
}
