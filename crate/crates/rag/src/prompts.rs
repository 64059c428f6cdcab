//! Prompt templates. `{name}` is a placeholder when `name` is one of the
//! template's bindings; every other brace is literal text, including the
//! doubled braces of the output-format sections.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum PromptKind {
    RuleGen,
    ConditionGen,
    CommonRevise,
    SpecialRevise,
    SummarizeCode,
    SummarizeProperty,
}

pub const RULE_GEN: &str = "\
Based on the rule code ([rule code]) and the code example ([code example]), generate corresponding rule code for [contract code to be tested].
1. Using the syntax style demonstrated in the provided code example, generate rule code. Focus on structural and syntactic aspects rather than replicating specific variable or function names from the example.
2. $ is for a symbolic variable, such as $varA for symbolic varA.
3. MUST NOT replicate specific variable or function names from the [code example].
4. MUST focus on the structural and syntactic aspects from the [code example].
5. When writing the rule code, closely follow the syntax and style from the provided example, focusing on its structural and syntactic essence rather than copying specific names.
6. The output MUST NOT contain any elements not predefined in the contract or function.

[function code to be tested]: {func_code}
[contract code to be tested]: {contract_code}
[rule code]: {rule_property}
[code example]: {spec_grammar}

The Output MUST be in the form of:
rule [name of rule]() {{logic of rule}}
REMEMBER, ASSERT should not include an error message; just use the comparison operator directly.
REMEMBER, the rule must aim to test the function, not for another function.
";

pub const CONDITION_GEN: &str = "\
Based on the following code ([condition code]), generate the corresponding precondition and postcondition code for [function code to be tested].

1. The basic syntax of preconditions and postconditions is in Solidity code format.
2. You can use the `__old__(xxx)` keyword if you need to reference the initial value of a variable.
3. You can directly use `xxxx==/!=/>/<` without `assert` or `require` to compare the value of the variable.
4. MUST NOT use `require` or `assert` for assertions; just use operator comparison directly.
5. MUST NOT use the ternary operator in the precondition and postcondition, but USE `if/else` expressions.
6. Exclude the event and implementation of the function itself, only output the precondition and postcondition of the function.
7. MUST NOT use any variables that I or the function have not defined, such as __result__, __return__, only follow the syntax I provide.
8. MUST NOT use `if/else` expressions in the precondition and postcondition, but USE the ternary operator.
9. MUST NOT INVOKE other functions or other undefined variables or non-state variables in the contract, only use the state variables in the {func_name} itself.
10. Ignore and delete all conditions related to the return value.

[function code to be tested]: {func_code}
[condition code]: {condition_property}

The Output MUST be in the form of:
function {func_name}{{
    precondition{{
        Insert generated code here, ensuring it follows the syntax style of the example.
    }}
    postcondition{{
        Insert generated code here, ensuring it follows the syntax style of the example.
    }}
}}
";

pub const COMMON_REVISE: &str = "\
Here is the rule I provided: {spec_res}.
When this code is compiled with a solc-like program, an error occurs: {error_info}.

Your task is to understand the rule I provided, fix the rule code, and correct the error within the rule. Refer to the contract code provided above.
Note, only modify the rule code; do not add other code. If the error is due to a non-existent variable, find feasible methods to reimplement it, or if it is not implementable, delete this line.
Here is the function code to be tested: {func_code}
Here is the contract code to be tested: {contract_code}
Provide me with the repaired rule code. The revised rule code must not be the same as the old rule code.
1. Using the syntax style demonstrated in the provided code example, generate a rule code. Focus on the structural and syntactic aspects rather than replicating specific variable or function names from the example.
2. $ is for a symbolic variable, such as $varA which symbolizes varA.

Rule Code Output MUST be in the form of:
rule [name of rule](){{logic of rule}}
REMEMBER, ASSERT does not include an error message, just use the operator comparison directly.
REMEMBER, the rule must aim to test the function [{function_name}], not for other functions.
";

pub const SPECIAL_REVISE: &str = "\
Here is the knowledge rule you should learn from: {knowledge_rule}.
Here is the rule I provided: {spec_res}.
This rule lacks core function execution for: {function_name}.
The contract code is: {contract_code}.

Your task is to understand the rule I provided, absorb the knowledge provided, and fix the rule code by adding the core function execution for: {function_name}.
Here is the function code that needs to be tested: {func_code}.
Provide me with the revised rule code; the new rule code must not be the same as the old rule code.
1. Using the syntax style demonstrated in the provided code example, generate a rule code. Focus on the structural and syntactic aspects rather than replicating specific variable or function names from the example.
2. $ is for a symbolic variable, such as $varA for symbolic varA.

Rule Code Output MUST be in the form of:
rule [name of rule](){{logic of rule}}
REMEMBER, ASSERT does not include an error message, just use the operator comparison directly.
REMEMBER, the rule must aim to test the function [{function_name}], not for other functions.
";

pub const SUMMARIZE_CODE: &str = "\
Summarize what the following smart contract code does in one or two sentences. Reply with the summary only.

{text}
";

pub const SUMMARIZE_PROPERTY: &str = "\
Summarize what the following property checks in one or two sentences. Reply with the summary only.

{text}
";

/// Rule written in the property language, bound to `{spec_grammar}`.
pub const SPEC_GRAMMAR_EXAMPLE: &str = "\
rule depositIncreasesBalance(uint256 amount) {
    assume(amount > 0);
    uint256 $balanceBefore = balances[msg.sender];
    deposit(amount);
    uint256 $balanceAfter = balances[msg.sender];
    assert($balanceAfter == $balanceBefore + amount);
}";

impl PromptKind {
    pub fn template(self) -> &'static str {
        match self {
            PromptKind::RuleGen => RULE_GEN,
            PromptKind::ConditionGen => CONDITION_GEN,
            PromptKind::CommonRevise => COMMON_REVISE,
            PromptKind::SpecialRevise => SPECIAL_REVISE,
            PromptKind::SummarizeCode => SUMMARIZE_CODE,
            PromptKind::SummarizeProperty => SUMMARIZE_PROPERTY,
        }
    }

    pub fn placeholders(self) -> &'static [&'static str] {
        match self {
            PromptKind::RuleGen => &["func_code", "contract_code", "rule_property", "spec_grammar"],
            PromptKind::ConditionGen => &["func_code", "condition_property", "func_name"],
            PromptKind::CommonRevise => &["spec_res", "error_info", "func_code", "contract_code", "function_name"],
            PromptKind::SpecialRevise => &[
                "knowledge_rule",
                "spec_res",
                "function_name",
                "contract_code",
                "func_code",
            ],
            PromptKind::SummarizeCode | PromptKind::SummarizeProperty => &["text"],
        }
    }
}

pub type Bindings = BTreeMap<&'static str, String>;

/// Render `kind` with every placeholder substituted from `bindings`.
pub fn build_prompt(kind: PromptKind, bindings: &Bindings) -> Result<String> {
    let names = kind.placeholders();
    for n in names {
        if !bindings.contains_key(n) {
            return Err(Error::MissingPlaceholder((*n).to_string()));
        }
    }
    let t = kind.template();
    let mut out = String::with_capacity(t.len() + bindings.values().map(String::len).sum::<usize>());
    let mut rest = t;
    while let Some(i) = rest.find('{') {
        out.push_str(&rest[..i]);
        let after = &rest[i + 1..];
        let end = after
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(after.len());
        let name = &after[..end];
        if end > 0 && after[end..].starts_with('}') && names.contains(&name) {
            out.push_str(&bindings[name]);
            rest = &after[end + 1..];
        } else {
            out.push('{');
            rest = after;
        }
    }
    out.push_str(rest);
    Ok(out)
}
