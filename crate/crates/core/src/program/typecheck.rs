//! Static checking of program DAGs against the signature table.

use thiserror::Error;

use super::{Program, Ty};

/// The first violation found in topological order.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("program has no nodes")]
    Empty,
    #[error("node {node}: expected {expected}, found {found}")]
    Mismatch {
        node: usize,
        expected: Ty,
        found: Ty,
    },
    #[error("node {node}: {function} takes {expected} node inputs, found {found}")]
    InputArity {
        node: usize,
        function: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("node {node}: {function} takes {expected} value inputs, found {found}")]
    ValueArity {
        node: usize,
        function: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("node {node}: input {input} does not precede the node")]
    ForwardInput { node: usize, input: usize },
}

/// Checks signatures and DAG shape; `Ok(())` guarantees execution cannot hit
/// a type failure.
pub fn typecheck(program: &Program) -> Result<(), TypeError> {
    if program.nodes.is_empty() {
        return Err(TypeError::Empty);
    }
    for (i, node) in program.nodes.iter().enumerate() {
        let sig = node.kind.signature();
        if node.inputs.len() != sig.inputs.len() {
            return Err(TypeError::InputArity {
                node: i,
                function: node.kind.name(),
                expected: sig.inputs.len(),
                found: node.inputs.len(),
            });
        }
        if node.value_inputs.len() != sig.value_inputs.len() {
            return Err(TypeError::ValueArity {
                node: i,
                function: node.kind.name(),
                expected: sig.value_inputs.len(),
                found: node.value_inputs.len(),
            });
        }
        for (&input, &expected) in node.inputs.iter().zip(sig.inputs) {
            if input >= i {
                return Err(TypeError::ForwardInput { node: i, input });
            }
            let found = program.nodes[input].kind.signature().output;
            if found != expected {
                return Err(TypeError::Mismatch {
                    node: i,
                    expected,
                    found,
                });
            }
        }
        for (value, &expected) in node.value_inputs.iter().zip(sig.value_inputs) {
            let found = value.ty();
            if found != expected {
                return Err(TypeError::Mismatch {
                    node: i,
                    expected,
                    found,
                });
            }
        }
    }
    Ok(())
}
