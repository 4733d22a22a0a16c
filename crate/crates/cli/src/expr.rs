//! Arithmetic expressions for inline case data.
//!
//! Integer literals are read as floats, so `1/2` is `0.5`. Besides the
//! evaluator's built-ins the functions `sin cos tan sinh cosh tanh exp ln
//! log10 sqrt abs gamma` are available, as are the constants `pi` and `e`.

use std::sync::Arc;

use evalexpr::error::EvalexprResultValue;
use evalexpr::{build_operator_tree, Context, DefaultNumericTypes, EvalexprError, EvalexprResult, Node, Value};

type Val = Value<DefaultNumericTypes>;

/// Variable names an expression may read, in argument order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Signature {
    /// `beta`
    Order,
    /// `x, y`
    Space,
    /// `x, y, t`
    SpaceTime,
    /// `x, y, t, u`
    Source,
    /// no variables
    Constant,
}

impl Signature {
    fn variables(self) -> &'static [&'static str] {
        match self {
            Signature::Order => &["beta"],
            Signature::Space => &["x", "y"],
            Signature::SpaceTime => &["x", "y", "t"],
            Signature::Source => &["x", "y", "t", "u"],
            Signature::Constant => &[],
        }
    }
}

#[derive(Clone, Debug)]
pub struct Expr {
    source: String,
    signature: Signature,
    node: Arc<Node<DefaultNumericTypes>>,
}

struct Bindings<'a> {
    names: &'static [&'static str],
    values: [Val; 4],
    constants: &'a [Val; 2],
}

impl Context for Bindings<'_> {
    type NumericTypes = DefaultNumericTypes;

    fn get_value(&self, identifier: &str) -> Option<&Val> {
        match identifier {
            "pi" => Some(&self.constants[0]),
            "e" => Some(&self.constants[1]),
            _ => self.names.iter().position(|n| *n == identifier).map(|k| &self.values[k]),
        }
    }

    fn call_function(&self, identifier: &str, argument: &Val) -> EvalexprResultValue<DefaultNumericTypes> {
        let f: fn(f64) -> f64 = match identifier {
            "sin" => f64::sin,
            "cos" => f64::cos,
            "tan" => f64::tan,
            "sinh" => f64::sinh,
            "cosh" => f64::cosh,
            "tanh" => f64::tanh,
            "exp" => f64::exp,
            "ln" => f64::ln,
            "log10" => f64::log10,
            "sqrt" => f64::sqrt,
            "abs" => f64::abs,
            "gamma" => dowave::coefficients::gamma,
            _ => return Err(EvalexprError::FunctionIdentifierNotFound(identifier.to_string())),
        };
        Ok(Value::Float(f(argument.as_number()?)))
    }

    fn are_builtin_functions_disabled(&self) -> bool {
        false
    }

    fn set_builtin_functions_disabled(&mut self, disabled: bool) -> EvalexprResult<(), DefaultNumericTypes> {
        if disabled {
            Err(EvalexprError::CustomMessage("built-in functions cannot be disabled".into()))
        } else {
            Ok(())
        }
    }
}

const CONSTANTS: [Val; 2] = [Value::Float(std::f64::consts::PI), Value::Float(std::f64::consts::E)];

impl Expr {
    /// Parses `source` and checks that it only reads the variables of
    /// `signature` and evaluates to a number at a sample point.
    pub fn parse(source: &str, signature: Signature) -> Result<Self, String> {
        let node = build_operator_tree::<DefaultNumericTypes>(&promote_integers(source))
            .map_err(|e| format!("cannot parse `{source}`: {e}"))?;
        let allowed = signature.variables();
        if let Some(bad) =
            node.iter_read_variable_identifiers().find(|v| !allowed.contains(v) && *v != "pi" && *v != "e")
        {
            return Err(format!(
                "unknown variable `{bad}` in `{source}` (allowed: {})",
                if allowed.is_empty() { "none".to_string() } else { allowed.join(", ") }
            ));
        }
        if node.iter_variable_identifiers().count() != node.iter_read_variable_identifiers().count() {
            return Err(format!("assignments are not allowed in `{source}`"));
        }
        let expr = Self { source: source.to_string(), signature, node: Arc::new(node) };
        let probe = [0.3, 0.2, 0.1, 0.4];
        expr.try_eval(&probe[..allowed.len()]).map_err(|e| format!("cannot evaluate `{source}`: {e}"))?;
        Ok(expr)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }

    fn try_eval(&self, args: &[f64]) -> EvalexprResult<f64, DefaultNumericTypes> {
        let mut values = [Value::Float(0.0), Value::Float(0.0), Value::Float(0.0), Value::Float(0.0)];
        for (slot, a) in values.iter_mut().zip(args) {
            *slot = Value::Float(*a);
        }
        let ctx = Bindings { names: self.signature.variables(), values, constants: &CONSTANTS };
        self.node.eval_number_with_context(&ctx)
    }

    /// Evaluates with `args` bound in signature order. Evaluation errors give NaN.
    pub fn eval(&self, args: &[f64]) -> f64 {
        debug_assert_eq!(args.len(), self.signature.variables().len());
        self.try_eval(args).unwrap_or(f64::NAN)
    }
}

/// Appends `.0` to bare integer literals so the evaluator stays in floating
/// point. Digits inside identifiers, decimals and exponents are left alone.
pub fn promote_integers(src: &str) -> String {
    let chars: Vec<char> = src.chars().collect();
    let mut out = String::with_capacity(src.len() + 8);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let prev_word = i > 0 && (chars[i - 1].is_alphanumeric() || chars[i - 1] == '_' || chars[i - 1] == '.');
        if c.is_ascii_digit() && !prev_word {
            let start = i;
            let digits = |mut k: usize| {
                while k < chars.len() && chars[k].is_ascii_digit() {
                    k += 1;
                }
                k
            };
            i = digits(i);
            let mut integral = true;
            if chars.get(i) == Some(&'.') {
                integral = false;
                i = digits(i + 1);
            }
            if matches!(chars.get(i), Some('e') | Some('E')) {
                let mut k = i + 1;
                if matches!(chars.get(k), Some('+') | Some('-')) {
                    k += 1;
                }
                if chars.get(k).is_some_and(|d| d.is_ascii_digit()) {
                    integral = false;
                    i = digits(k);
                }
            }
            out.extend(&chars[start..i]);
            if integral {
                out.push_str(".0");
            }
            continue;
        }
        out.push(c);
        i += 1;
    }
    out
}
