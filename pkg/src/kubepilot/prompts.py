"""Prompt builders for every LLM call the system issues.

Each prompt starts with a stable ``## <task>`` header line so scripted
scenarios can target calls by substring, and each asks for a directive
block (see kubepilot.directives) carrying the machine-readable decision.
"""

from __future__ import annotations

from typing import Any

from .directives import BLOCK_CLOSE, BLOCK_OPEN

_BLOCK_HINT = (
    f"Reply with exactly one directive block: a line `{BLOCK_OPEN}`, one JSON "
    f"object, then a line `{BLOCK_CLOSE}`. Prose outside the block is ignored."
)

CLASSIFY_HEADER = "## classify-query"
ROUTE_HEADER = "## supervisor-route"
SELECT_TOOL_HEADER = "## select-tool"
EXTRACT_ARGS_HEADER = "## extract-args"
GENERATE_TOOL_HEADER = "## generate-tool"
EXTRACT_METADATA_HEADER = "## extract-metadata"
SEMANTIC_CHECK_HEADER = "## semantic-check"
SUMMARIZE_HEADER = "## summarize"


def classify_query(raw_text: str, role_name: str, allowed: list[str]) -> str:
    return "\n".join(
        [
            CLASSIFY_HEADER,
            f"role: {role_name} (allowed categories: {', '.join(allowed) or 'none'})",
            f"query: {raw_text}",
            "",
            "Classify this cluster-management query. JSON fields:",
            '  supported: bool — false for greetings, gibberish, or off-domain text',
            '  category: one of read|write_modify|delete|execute_proxy|'
            "permission_auth|scale_lifecycle|custom_advanced (dominant category)",
            "  composite: bool — true when several steps/agents will be needed",
            "  ambiguous: bool — true when the query is in-domain but under-specified",
            "  clarification: string — the question to ask when ambiguous",
            '  namespaces: "ALL" or a list of namespace names',
            "  resource_kinds: list of resource kinds involved",
            "  name_selectors: list of concrete resource names mentioned",
            "  hints: object of free-form key/value context",
            _BLOCK_HINT,
        ]
    )


def supervisor_route(
    query_text: str,
    agents: list[tuple[str, str]],
    turn_log: list[str],
    retry_feedback: str | None = None,
) -> str:
    lines = [
        ROUTE_HEADER,
        f"query: {query_text}",
        "agents:",
    ]
    lines += [f"  - {name}: {description}" for name, description in agents]
    lines.append("turn so far:")
    lines += [f"  {entry}" for entry in turn_log] or ["  (nothing yet)"]
    if retry_feedback:
        lines.append(f"previous directive invalid: {retry_feedback}")
    lines += [
        "",
        "Decide the next step. JSON fields: action (route_agent|respond|clarify|"
        "reject_result|retry_task|invoke_codegen|finish), target_agent (for "
        "route_agent), message (task text, clarification question, or reply).",
        _BLOCK_HINT,
    ]
    return "\n".join(lines)


def select_tool(
    agent_name: str,
    task_text: str,
    tools: list[tuple[str, str]],
    retry_feedback: str | None = None,
) -> str:
    lines = [
        f"{SELECT_TOOL_HEADER} agent={agent_name}",
        f"task: {task_text}",
        "tools:",
    ]
    lines += [f"  - {name}: {description}" for name, description in tools]
    if retry_feedback:
        lines.append(f"previous selection invalid: {retry_feedback}")
    lines += [
        "",
        'Pick the single best tool, or declare no match. JSON fields: tool '
        '(tool name or null when nothing fits).',
        _BLOCK_HINT,
    ]
    return "\n".join(lines)


def extract_args(
    tool_name: str, task_text: str, schema: list[dict[str, Any]]
) -> str:
    lines = [
        f"{EXTRACT_ARGS_HEADER} tool={tool_name}",
        f"task: {task_text}",
        "schema:",
    ]
    for field in schema:
        requirement = "required" if field["required"] else "optional"
        lines.append(f"  - {field['name']} ({field['type']}, {requirement})")
    lines += [
        "",
        "Extract the argument values from the task. JSON fields: arguments "
        "(object mapping field name to value; omit optional fields you cannot fill).",
        _BLOCK_HINT,
    ]
    return "\n".join(lines)


def generate_tool(
    task_text: str,
    context_summary: str,
    entry_markers: tuple[str, str],
    attempt: int = 1,
    prior_failures: list[str] | None = None,
) -> str:
    begin, end = entry_markers
    lines = [
        f"{GENERATE_TOOL_HEADER} attempt={attempt}",
        f"task: {task_text}",
        f"context: {context_summary}",
    ]
    if prior_failures:
        lines.append("previous attempt failed: " + "; ".join(prior_failures))
    lines += [
        "",
        "Write a complete, standalone Python tool script that:",
        "  - defines exactly one entrypoint function implementing the task,",
        f"    delimited by marker comment lines `{begin}` and `{end}`",
        "  - keeps all imports inside the function body (scoped imports)",
        "  - wraps the work in try/except and never lets an exception escape",
        "  - reads its arguments as one JSON object from stdin",
        '  - prints exactly one JSON envelope to stdout: {"status": "success"|"error", "data": ...}',
        "Put the script in a ```python fenced block. After it, emit a directive",
        'block with JSON fields: test_args (object of arguments for a trial run;',
        "may be empty).",
        _BLOCK_HINT,
    ]
    return "\n".join(lines)


def extract_metadata(script_text: str) -> str:
    return "\n".join(
        [
            EXTRACT_METADATA_HEADER,
            "script:",
            script_text,
            "",
            "Describe this tool. JSON fields: function_name, description "
            "(one sentence, user-facing), tool_variable_name, input_schema "
            '(list of {name, type: text|integer|boolean|list-of-text, required}).',
            _BLOCK_HINT,
        ]
    )


def semantic_check(task_text: str, data_preview: str) -> str:
    return "\n".join(
        [
            SEMANTIC_CHECK_HEADER,
            f"task: {task_text}",
            f"output data: {data_preview}",
            "",
            "Does the output semantically answer the task? JSON fields: aligned "
            "(bool), notes (short justification).",
            _BLOCK_HINT,
        ]
    )


def summarize(query_text: str, turn_log: list[str]) -> str:
    lines = [
        SUMMARIZE_HEADER,
        f"query: {query_text}",
        "workflow transcript:",
    ]
    lines += [f"  {entry}" for entry in turn_log]
    lines += [
        "",
        "Write the final reply to the user: plain text, grounded strictly in the "
        "transcript above. No directive block needed.",
    ]
    return "\n".join(lines)
