"""Small parsers for registry strings such as 'rot_x(pi/3)' or 'prod(p, q)'."""

from __future__ import annotations

import ast
import math
import operator

from .errors import InputError

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}


def parse_number(text: str) -> float:
    """Evaluate arithmetic over numbers and the constant pi, e.g. '-3*pi/4'."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            left, right = ev(node.left), ev(node.right)
            if isinstance(node.op, ast.Pow) and abs(right) > 64:
                raise InputError(f"exponent too large in {text!r}")
            try:
                return _BINOPS[type(node.op)](left, right)
            except (ZeroDivisionError, OverflowError) as exc:
                raise InputError(f"cannot evaluate {text!r}: {exc}") from None
        raise InputError(f"unsupported expression in {text!r}")

    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise InputError(f"cannot parse number {text!r}") from exc
    return ev(tree)


def split_args(text: str) -> list[str]:
    """Split at top-level commas."""
    out, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise InputError(f"unbalanced parentheses in {text!r}")
        if ch == "," and depth == 0:
            out.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    if depth != 0:
        raise InputError(f"unbalanced parentheses in {text!r}")
    tail = "".join(cur).strip()
    if tail or out:
        out.append(tail)
    return out


def parse_call(text: str) -> tuple[str, list[str]]:
    """'name(a, b)' -> ('name', ['a', 'b']); 'name' -> ('name', [])."""
    text = text.strip()
    if "(" not in text:
        if ")" in text:
            raise InputError(f"unbalanced parentheses in {text!r}")
        return text, []
    if not text.endswith(")"):
        raise InputError(f"malformed call {text!r}")
    head, _, rest = text.partition("(")
    return head.strip(), split_args(rest[:-1])
